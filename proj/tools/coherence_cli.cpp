// Configuration-driven runner for coherence projections and the theorem
// verification suites.
//
// Subcommands:
//   coherence run    --config cfg.json [--out DIR] [--seed N] [--jobs N]
//   coherence verify --suite NAME [--out DIR] [--seed N] [--jobs N]
//
// Exit codes: 0 clean, 1 verification failures, 2 solver errors,
// 3 config/schema errors.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "coherence/empirical.hpp"
#include "coherence/relaxed.hpp"
#include "coherence/serialization.hpp"
#include "coherence/suites.hpp"

namespace {

using coherence::Matrix;
using coherence::Vector;
using nlohmann::json;

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

LogLevel log_level() {
  const char* env = std::getenv("COHERENCE_PROJ_LOG");
  if (!env) return LogLevel::kWarn;
  const std::string v(env);
  if (v == "error") return LogLevel::kError;
  if (v == "info") return LogLevel::kInfo;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kWarn;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) std::cerr << "[info] " << msg << "\n";
}

Matrix parse_matrix(const json& rows) {
  if (!rows.is_array() || rows.empty())
    throw coherence::ConfigError("expected a nonempty 2-D array");
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t x = 0; x < rows.size(); ++x) {
    if (!rows[x].is_array() || rows[x].size() != rows[0].size())
      throw coherence::ConfigError("ragged 2-D array");
    for (std::size_t j = 0; j < rows[x].size(); ++j)
      m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(j)) =
          rows[x][j].get<double>();
  }
  return m;
}

Vector parse_vector(const json& arr) {
  if (!arr.is_array())
    throw coherence::ConfigError("expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

coherence::GeneratorSpec parse_generator(const json& g) {
  if (!g.contains("kind"))
    throw coherence::ConfigError("generator: missing 'kind'");
  const std::string kind = g["kind"].get<std::string>();
  coherence::GeneratorSpec spec;
  if (kind == "squared_euclidean") {
    spec = coherence::squared_euclidean();
  } else if (kind == "negative_entropy") {
    spec = coherence::negative_entropy();
  } else if (kind == "negative_log") {
    spec = coherence::negative_log();
  } else if (kind == "mahalanobis") {
    spec = coherence::mahalanobis(parse_matrix(g.at("matrix")));
  } else if (kind == "diagonal_quadratic") {
    spec = coherence::diagonal_quadratic(parse_vector(
        g.contains("diag") ? g.at("diag") : g.at("matrix")));
  } else if (kind == "quadratic_coupled") {
    const Matrix a = parse_matrix(g.at("matrix"));
    const Vector b = g.contains("linear") ? parse_vector(g.at("linear"))
                                          : Vector::Zero(a.rows());
    spec = coherence::quadratic_coupled(a, b);
  } else {
    throw coherence::ConfigError("generator: unknown kind '" + kind + "'");
  }
  if (g.contains("mu")) spec.mu = g["mu"].get<double>();
  if (g.contains("smoothness")) spec.smoothness = g["smoothness"].get<double>();
  if (g.contains("norm"))
    spec.norm_tag = g["norm"].get<std::string>() == "l1"
                        ? coherence::NormTag::L1
                        : coherence::NormTag::L2;
  return spec;
}

coherence::ConvexModelSet parse_set(const json& s, Eigen::Index n,
                                    Eigen::Index d) {
  coherence::ConvexModelSet set =
      (s.value("base", std::string("simplex")) == "cube")
          ? coherence::ConvexModelSet::cube_product(n, d)
          : coherence::ConvexModelSet::simplex_product(n, d);
  if (s.contains("caps"))
    for (const auto& cap : s["caps"])
      set.with_cap(cap.at(0).get<Eigen::Index>(), cap.at(1).get<Eigen::Index>(),
                   cap.at(2).get<double>());
  if (s.contains("affine"))
    for (const auto& row : s["affine"])
      set.with_affine(parse_matrix(row.at("coeffs")), row.at("rhs").get<double>());
  if (s.contains("blocks")) {
    std::vector<std::vector<Eigen::Index>> blocks;
    for (const auto& b : s["blocks"])
      blocks.push_back(b.get<std::vector<Eigen::Index>>());
    set.with_blocks(coherence::BlockPartition(std::move(blocks)));
  }
  if (s.value("sphere", false)) set.sphere = true;
  return set;
}

coherence::InvarianceMap parse_phi(const json& cfg, Eigen::Index n) {
  if (!cfg.contains("phi")) return coherence::InvarianceMap::identity(n);
  return coherence::InvarianceMap(
      cfg["phi"].get<std::vector<Eigen::Index>>());
}

coherence::PromptDistribution parse_dist(const json& cfg, Eigen::Index n) {
  if (!cfg.contains("dist")) return coherence::PromptDistribution::uniform(n);
  return coherence::PromptDistribution(parse_vector(cfg["dist"]));
}

coherence::SolverOptions parse_solver_options(const json& cfg) {
  coherence::SolverOptions opts;
  if (!cfg.contains("options")) return opts;
  const json& o = cfg["options"];
  opts.max_iter = o.value("max_iter", opts.max_iter);
  opts.tol_obj = o.value("tol_obj", opts.tol_obj);
  opts.tol_kkt = o.value("tol_kkt", opts.tol_kkt);
  const std::string alg = o.value("algorithm", std::string("reduced_newton"));
  if (alg == "mirror_descent")
    opts.algorithm = coherence::Algorithm::MirrorDescent;
  else if (alg == "frank_wolfe")
    opts.algorithm = coherence::Algorithm::FrankWolfe;
  else if (alg != "reduced_newton")
    throw coherence::ConfigError("options: unknown algorithm '" + alg + "'");
  return opts;
}

json table_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index x = 0; x < m.rows(); ++x) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(x, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json report_json(const coherence::SolveReport& r, bool with_timing) {
  json j;
  j["status"] = r.status;
  j["iterations"] = r.iterations;
  j["objective"] = r.objective;
  j["kkt_residual"] = r.kkt_residual;
  j["algorithm"] = r.algorithm;
  if (with_timing) j["wall_ns"] = r.wall_ns;
  return j;
}

json suite_json(const coherence::SuiteReport& rep) {
  json j;
  j["suite"] = rep.suite;
  j["seed"] = rep.seed;
  j["passed"] = rep.passed();
  j["violations"] = rep.violations();
  json checks = json::array();
  for (const auto& c : rep.checks) {
    json cj;
    cj["name"] = c.name;
    cj["passed"] = c.passed;
    cj["value"] = c.value;
    cj["tolerance"] = c.tolerance;
    if (c.negative_control) cj["negative_control"] = true;
    if (!c.detail.empty()) cj["detail"] = c.detail;
    checks.push_back(std::move(cj));
  }
  j["checks"] = std::move(checks);
  return j;
}

void write_outputs(const std::string& out_dir, const json& report,
                   const std::optional<Matrix>& solution) {
  if (out_dir.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream f(out_dir + "/report.json");
    f << report.dump(2) << "\n";
  }
  if (solution) {
    std::ofstream f(out_dir + "/solution.csv");
    f << coherence::table_to_csv(*solution);
  }
  log_info("wrote " + out_dir + "/report.json");
}

void print_suite_summary(const coherence::SuiteReport& rep) {
  std::cout << (rep.passed() ? "[PASS] " : "[FAIL] ") << rep.suite << "  ("
            << rep.checks.size() << " checks, " << rep.violations()
            << " violations, " << rep.wall_ns / 1000000 << " ms)\n";
  for (const auto& c : rep.checks)
    if (!c.passed)
      std::cout << "    failed: " << c.name << "  value="
                << coherence::format_g17(c.value)
                << " tol=" << coherence::format_g17(c.tolerance)
                << (c.detail.empty() ? "" : "  " + c.detail) << "\n";
}

int run_verify(const std::string& suite, const coherence::SuiteOptions& sopts,
               const std::string& out_dir) {
  std::vector<coherence::SuiteReport> reports;
  if (suite == "all") {
    reports = coherence::run_all_suites(sopts);
  } else {
    reports.push_back(coherence::run_suite(suite, sopts));
  }
  json body;
  body["version"] = 1;
  body["task"] = "verify";
  json suites = json::array();
  bool all_passed = true;
  std::int64_t wall = 0;
  for (const auto& rep : reports) {
    print_suite_summary(rep);
    suites.push_back(suite_json(rep));
    all_passed = all_passed && rep.passed();
    wall += rep.wall_ns;
  }
  body["suites"] = std::move(suites);
  body["metadata"] = {{"wall_ns", wall},
                      {"timestamp", std::chrono::duration_cast<std::chrono::seconds>(
                                        std::chrono::system_clock::now()
                                            .time_since_epoch())
                                        .count()}};
  write_outputs(out_dir, body, std::nullopt);
  return all_passed ? 0 : 1;
}

int run_config(const std::string& config_path, const std::string& out_dir,
               std::uint64_t seed, int jobs,
               std::optional<double> tol_override,
               std::optional<double> lambda_cap_flag,
               std::optional<double> penalty_flag) {
  std::ifstream in(config_path);
  if (!in) throw coherence::ConfigError("cannot open config: " + config_path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw coherence::ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.value("version", 0) != 1)
    throw coherence::ConfigError("config: 'version' must be 1");
  const std::string task = cfg.value("task", std::string());

  if (task == "verify") {
    coherence::SuiteOptions sopts;
    sopts.seed = cfg.value("seed", seed);
    sopts.jobs = jobs;
    sopts.tol_override = tol_override;
    return run_verify(cfg.value("suite", std::string("all")), sopts, out_dir);
  }

  if (!cfg.contains("model"))
    throw coherence::ConfigError("config: missing 'model'");
  Matrix model;
  if (cfg["model"].contains("csv")) {
    std::ifstream mf(cfg["model"]["csv"].get<std::string>());
    if (!mf) throw coherence::ConfigError("config: cannot open model csv");
    std::stringstream buf;
    buf << mf.rdbuf();
    model = coherence::table_from_csv(buf.str());
  } else {
    model = parse_matrix(cfg["model"].at("table"));
  }
  const Eigen::Index n = model.rows(), d = model.cols();
  const coherence::GeneratorSpec gen = parse_generator(cfg.at("generator"));
  const coherence::PromptDistribution dist = parse_dist(cfg, n);
  const coherence::InvarianceMap phi = parse_phi(cfg, n);
  coherence::ConvexModelSet set =
      cfg.contains("set") ? parse_set(cfg["set"], n, d)
                          : coherence::ConvexModelSet::simplex_product(n, d);
  const coherence::SolverOptions opts = parse_solver_options(cfg);

  json body;
  body["version"] = 1;
  body["task"] = task;
  std::optional<Matrix> solution;
  std::int64_t wall = 0;

  if (task == "project") {
    const coherence::SolveResult res =
        coherence::direct_projection(gen, dist, phi, set, model, opts);
    body["solution"] = table_json(res.table);
    body["report"] = report_json(res.report, false);
    body["objective"] = res.report.objective;
    solution = res.table;
    wall = res.report.wall_ns;
  } else if (task == "two-step") {
    const coherence::TwoStepResult res =
        coherence::two_step_projection(gen, dist, phi, set, model, opts);
    body["solution"] = table_json(res.final);
    body["intermediate"] = table_json(res.intermediate);
    body["report"] = report_json(res.report, false);
    solution = res.final;
    wall = res.report.wall_ns;
  } else if (task == "relaxed") {
    coherence::SoftDivergenceSpec soft;
    const std::string soft_kind =
        cfg.value("soft_divergence", std::string("jensen_shannon"));
    if (soft_kind == "jensen_shannon")
      soft = coherence::SoftDivergenceSpec::jensen_shannon();
    else if (soft_kind == "squared_hellinger")
      soft = coherence::SoftDivergenceSpec::squared_hellinger();
    else if (soft_kind == "kl_symmetrized")
      soft = coherence::SoftDivergenceSpec::kl_symmetrized();
    else if (soft_kind == "squared_euclidean")
      soft = coherence::SoftDivergenceSpec::squared_euclidean();
    else if (soft_kind == "tv_squared")
      soft = coherence::SoftDivergenceSpec::tv_squared_surrogate();
    else
      throw coherence::ConfigError("unknown soft divergence: " + soft_kind);

    std::optional<double> cap = lambda_cap_flag;
    if (cfg.contains("lambda_cap")) cap = cfg["lambda_cap"].get<double>();
    std::optional<double> penalty = penalty_flag;
    if (cfg.contains("penalty")) penalty = cfg["penalty"].get<double>();
    coherence::RelaxedResult res;
    if (cap) {
      res = coherence::relaxed_project(gen, soft, *cap, dist, phi, model, opts);
    } else if (penalty) {
      res = coherence::penalized_project(gen, soft, *penalty, dist, phi, model,
                                         opts);
    } else {
      throw coherence::ConfigError(
          "relaxed task needs --lambda-cap or --penalty");
    }
    body["solution"] = table_json(res.table);
    body["multiplier"] = res.multiplier;
    body["constraint_value"] = res.constraint_value;
    body["report"] = report_json(res.report, false);
    solution = res.table;
    wall = res.report.wall_ns;
  } else if (task == "empirical") {
    if (!cfg.contains("sample"))
      throw coherence::ConfigError("empirical task needs 'sample'");
    const Eigen::Index m = cfg["sample"].value("m", 100);
    const std::uint64_t sample_seed = cfg["sample"].value("seed", seed);
    const coherence::PromptSample sample =
        coherence::sample_prompts(dist, m, sample_seed);
    const coherence::SolveResult res =
        coherence::empirical_projection(gen, sample, phi, set, model, opts);
    body["solution"] = table_json(res.table);
    body["report"] = report_json(res.report, false);
    if (cfg.contains("pi_star")) {
      const Matrix star = parse_matrix(cfg["pi_star"].at("table"));
      const coherence::BoundReport bounds = coherence::empirical_bound_report(
          gen, dist, sample, set, phi, model, star);
      json bj;
      bj["epsilon_lower"] = bounds.epsilon_lower;
      bj["epsilon_provenance"] = bounds.epsilon_provenance;
      auto ineq = [](const coherence::InequalityRecord& r) {
        return json{{"name", r.name},
                    {"lhs", r.lhs},
                    {"rhs", r.rhs},
                    {"slack", r.slack},
                    {"holds", r.holds}};
      };
      bj["main_theorem"] = ineq(bounds.main_theorem);
      bj["improvement_corollary"] = ineq(bounds.improvement_corollary);
      bj["two_sided_left"] = ineq(bounds.two_sided_left);
      bj["two_sided_right"] = ineq(bounds.two_sided_right);
      bj["smallest_main_constant"] = bounds.smallest_main_constant;
      bj["untouched_orbits"] = bounds.untouched_orbits;
      body["bounds"] = std::move(bj);
    }
    solution = res.table;
    wall = res.report.wall_ns;
  } else {
    throw coherence::ConfigError("config: unknown task '" + task + "'");
  }

  body["metadata"] = {{"wall_ns", wall},
                      {"timestamp", std::chrono::duration_cast<std::chrono::seconds>(
                                        std::chrono::system_clock::now()
                                            .time_since_epoch())
                                        .count()}};
  write_outputs(out_dir, body, solution);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coherence projection library and verification harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir, suite = "all";
  std::uint64_t seed = 20250808ULL;
  int jobs = 0;
  double tol_override = -1.0;
  double lambda_cap = -1.0, penalty = -1.0;

  CLI::App* run = app.add_subcommand("run", "execute a config-described task");
  run->add_option("--config", config_path, "JSON config path")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "base seed");
  run->add_option("--jobs", jobs, "worker threads (0 = logical cores)");
  run->add_option("--tol-override", tol_override,
                  "verdict tolerance override (report only)");
  run->add_option("--lambda-cap", lambda_cap, "relaxed constraint bound");
  run->add_option("--penalty", penalty, "relaxed penalty multiplier");

  CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("--suite", suite, "suite name or 'all'");
  verify->add_option("--out", out_dir, "output directory");
  verify->add_option("--seed", seed, "base seed");
  verify->add_option("--jobs", jobs, "worker threads (0 = logical cores)");
  verify->add_option("--tol-override", tol_override,
                     "verdict tolerance override (report only)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return run_config(config_path, out_dir, seed, jobs,
                        tol_override > 0 ? std::optional<double>(tol_override)
                                         : std::nullopt,
                        lambda_cap > 0 ? std::optional<double>(lambda_cap)
                                       : std::nullopt,
                        penalty > 0 ? std::optional<double>(penalty)
                                    : std::nullopt);
    }
    coherence::SuiteOptions sopts;
    sopts.seed = seed;
    sopts.jobs = jobs;
    if (tol_override > 0) sopts.tol_override = tol_override;
    return run_verify(suite, sopts, out_dir);
  } catch (const coherence::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const coherence::UnknownSuite& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const coherence::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

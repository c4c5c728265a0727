#ifndef COHERENCE_SERIALIZATION_HPP_
#define COHERENCE_SERIALIZATION_HPP_

#include <string>

#include "coherence/types.hpp"

namespace coherence {

/// Shortest 17-significant-digit decimal; round-trips double exactly.
std::string format_g17(double v);

/// RFC-4180 CSV with a header row of outcome ids and one row per prompt.
std::string table_to_csv(const Matrix& table);
Matrix table_from_csv(const std::string& csv);

/// {"table": [[...], ...]} with round-trip-exact numbers.
std::string table_to_json(const Matrix& table);
Matrix table_from_json(const std::string& json_text);

}  // namespace coherence

#endif  // COHERENCE_SERIALIZATION_HPP_

#pragma once

#include "conlab/algorithms.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

namespace conlab {

/// Round-trip exact decimal: 17 significant digits, '.' separator. NaN is
/// written as an empty field.
std::string format_csv(double value);

/// Value rounded to 12 significant digits for JSON reports.
double round12(double value);

/// `round,agent_1,...,agent_N,error`
void write_trajectory_csv(std::ostream& out, const Trajectory& t);
nlohmann::json trajectory_to_json(const Trajectory& t);

nlohmann::json spec_to_json(const AlgorithmSpec& spec);

/// FNV-1a over the raw bytes of the values, as 16 hex digits.
std::string hash_values(std::span<const double> values);

/// Writes through a temporary file and a rename; throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace conlab

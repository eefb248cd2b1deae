#include "conlab/io.hpp"

#include "conlab/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace conlab {

std::string format_csv(double value) {
  if (std::isnan(value)) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

double round12(double value) {
  if (!std::isfinite(value)) return value;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return std::strtod(buf, nullptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  out << "round";
  for (Eigen::Index i = 0; i < t.states.cols(); ++i) out << ",agent_" << i + 1;
  out << ",error\n";
  for (Eigen::Index k = 0; k < t.states.rows(); ++k) {
    out << k;
    for (Eigen::Index i = 0; i < t.states.cols(); ++i) out << ',' << format_csv(t.states(k, i));
    out << ',' << format_csv(t.disagreement[static_cast<std::size_t>(k)]) << '\n';
  }
}

nlohmann::json spec_to_json(const AlgorithmSpec& spec) {
  nlohmann::json j{{"name", spec.name()}, {"kind", std::string(to_string(spec.kind))}};
  switch (spec.kind) {
    case Algorithm::Laplacian:
    case Algorithm::NagC:
      j["step"] = round12(spec.step);
      break;
    case Algorithm::BufferedLaplacian:
      j["step"] = round12(spec.step);
      j["buffer"] = spec.buffer;
      break;
    case Algorithm::TripleMomentum:
      j["alpha"] = round12(spec.momentum.alpha);
      j["beta"] = round12(spec.momentum.beta);
      j["gamma"] = round12(spec.momentum.gamma);
      j["delta_tm"] = round12(spec.momentum.delta_tm);
      break;
    case Algorithm::NagSc:
      j["alpha"] = round12(spec.momentum.alpha);
      j["beta"] = round12(spec.momentum.beta);
      break;
  }
  return j;
}

nlohmann::json trajectory_to_json(const Trajectory& t) {
  nlohmann::json rounds = nlohmann::json::array();
  for (Eigen::Index k = 0; k < t.states.rows(); ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index i = 0; i < t.states.cols(); ++i) row.push_back(round12(t.states(k, i)));
    rounds.push_back(std::move(row));
  }
  nlohmann::json err = nlohmann::json::array();
  for (const double e : t.disagreement) err.push_back(round12(e));
  return {{"algorithm", spec_to_json(t.spec)},
          {"graph", t.graph_name},
          {"rounds", t.rounds()},
          {"average", round12(t.average)},
          {"states", std::move(rounds)},
          {"error", std::move(err)}};
}

std::string hash_values(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (const unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move output into place at " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace conlab

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "leqg/conditions.hpp"
#include "leqg/duality.hpp"
#include "leqg/model.hpp"
#include "leqg/solver.hpp"

namespace leqg::io {

// Shortest round-tripping decimal form (emitted into machine artifacts).
std::string format_full(double v);
// Fixed-point form used by the human-facing table exports.
std::string format_fixed(double v, int decimals = 4);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const;
};

// Column names for one logical field: `base` when 1x1, `base_i` for vectors,
// `base_i_j` (row-major) for matrices.
std::vector<std::string> flat_names(const std::string& base, int rows,
                                    int cols);
// Matching cell values; `fixed` selects format_fixed(4) over format_full.
std::vector<std::string> flat_values(const Mat& m, bool fixed = false);
std::vector<std::string> flat_values(const Vec& v, bool fixed = false);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// FNV-1a over the byte content; rendered as 16 hex digits.
std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

// Artifact renderers. CSV columns follow the module contracts:
//   solution:   t, P, p, r, Du, du, Dg, dg, B1, B2, B3, C, det_negH
//   conditions: t, b1_pass, negH_pass, det_negH, violations
// Row t = T of the solution table carries only (t, P, p, r).
std::string solution_csv(const solver::Solution& sol);
std::string solution_json(const solver::Solution& sol);
std::string conditions_csv(const conditions::SaddleReport& report);
std::string conditions_json(const conditions::SaddleReport& report);
std::string mc_json(const duality::McResult& res);

struct ManifestEntry {
  std::string path;
  std::string hash;
};
std::string manifest_json(const std::string& command,
                          const std::string& config_path, std::uint64_t seed,
                          std::uint64_t samples,
                          const std::vector<ManifestEntry>& outputs,
                          double wall_clock_seconds);

}  // namespace leqg::io

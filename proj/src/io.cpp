#include "leqg/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "leqg/errors.hpp"

namespace leqg::io {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_fixed(double v, int decimals) {
  if (v == 0.0) v = 0.0;  // normalize -0
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string Table::csv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::string> flat_names(const std::string& base, int rows,
                                    int cols) {
  std::vector<std::string> names;
  if (rows == 1 && cols == 1) {
    names.push_back(base);
    return names;
  }
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      if (cols == 1)
        names.push_back(base + "_" + std::to_string(i));
      else
        names.push_back(base + "_" + std::to_string(i) + "_" +
                        std::to_string(j));
    }
  return names;
}

std::vector<std::string> flat_values(const Mat& m, bool fixed) {
  std::vector<std::string> cells;
  cells.reserve(std::size_t(m.size()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      cells.push_back(fixed ? format_fixed(m(i, j)) : format_full(m(i, j)));
  return cells;
}

std::vector<std::string> flat_values(const Vec& v, bool fixed) {
  std::vector<std::string> cells;
  cells.reserve(std::size_t(v.size()));
  for (int i = 0; i < v.size(); ++i)
    cells.push_back(fixed ? format_fixed(v(i)) : format_full(v(i)));
  return cells;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("ParseError", "cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw ConfigError("ParseError", "cannot write file: " + path);
  out << content;
  if (!out)
    throw ConfigError("ParseError", "short write: " + path);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

namespace {

using nlohmann::json;

void append(std::vector<std::string>& row, std::vector<std::string> cells) {
  for (auto& c : cells) row.push_back(std::move(c));
}

void append_blank(std::vector<std::string>& row, std::size_t count) {
  row.insert(row.end(), count, std::string());
}

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

json vector_json(const Vec& v) {
  json r = json::array();
  for (int i = 0; i < v.size(); ++i) r.push_back(v(i));
  return r;
}

}  // namespace

std::string solution_csv(const solver::Solution& sol) {
  const int T = sol.model.T();
  const int dx = sol.model.dx();
  const int du = sol.model.du();

  Table tab;
  tab.header.push_back("t");
  append(tab.header, flat_names("P", dx, dx));
  append(tab.header, flat_names("p", dx, 1));
  tab.header.push_back("r");
  append(tab.header, flat_names("Du", du, dx));
  append(tab.header, flat_names("du", du, 1));
  append(tab.header, flat_names("Dg", dx, dx));
  append(tab.header, flat_names("dg", dx, 1));
  append(tab.header, flat_names("B1", du, du));
  append(tab.header, flat_names("B2", dx, dx));
  append(tab.header, flat_names("B3", du, du));
  append(tab.header, flat_names("C", du, dx));
  tab.header.push_back("det_negH");

  const std::size_t step_cells = tab.header.size() - std::size_t(
      1 + dx * dx + dx + 1);
  for (int t = 0; t <= T; ++t) {
    std::vector<std::string> row;
    row.push_back(std::to_string(t));
    append(row, flat_values(sol.value[t].P));
    append(row, flat_values(sol.value[t].p));
    row.push_back(format_full(sol.value[t].r));
    if (t < T) {
      append(row, flat_values(sol.gains[t].Du));
      append(row, flat_values(sol.gains[t].du));
      append(row, flat_values(sol.gains[t].Dg));
      append(row, flat_values(sol.gains[t].dg));
      append(row, flat_values(sol.fraktur[t].B1));
      append(row, flat_values(sol.fraktur[t].B2));
      append(row, flat_values(sol.fraktur[t].B3));
      append(row, flat_values(sol.fraktur[t].C));
      row.push_back(
          format_full(conditions::check_assumption1(sol.fraktur[t]).det_negH));
    } else {
      append_blank(row, step_cells);
    }
    tab.rows.push_back(std::move(row));
  }
  return tab.csv();
}

std::string solution_json(const solver::Solution& sol) {
  using nlohmann::json;
  const int T = sol.model.T();
  json doc;
  doc["T"] = T;
  doc["convention"] = sol.convention == solver::TerminalConvention::Theorem1
                          ? "theorem1"
                          : "dpp_scaled";
  doc["saddle_verified"] = sol.saddle_verified;
  json rows = json::array();
  for (int t = 0; t <= T; ++t) {
    json row;
    row["t"] = t;
    row["P"] = matrix_json(sol.value[t].P);
    row["p"] = vector_json(sol.value[t].p);
    row["r"] = sol.value[t].r;
    if (t < T) {
      row["Du"] = matrix_json(sol.gains[t].Du);
      row["du"] = vector_json(sol.gains[t].du);
      row["Dg"] = matrix_json(sol.gains[t].Dg);
      row["dg"] = vector_json(sol.gains[t].dg);
      row["B1"] = matrix_json(sol.fraktur[t].B1);
      row["B2"] = matrix_json(sol.fraktur[t].B2);
      row["B3"] = matrix_json(sol.fraktur[t].B3);
      row["C"] = matrix_json(sol.fraktur[t].C);
      row["det_negH"] = conditions::check_assumption1(sol.fraktur[t]).det_negH;
    }
    rows.push_back(std::move(row));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

std::string conditions_csv(const conditions::SaddleReport& report) {
  Table tab;
  tab.header = {"t", "b1_pass", "negH_pass", "det_negH", "violations"};
  for (const auto& e : report.entries) {
    std::string tags;
    for (std::size_t i = 0; i < e.violations.size(); ++i) {
      if (i) tags += "; ";
      tags += e.violations[i];
    }
    tab.rows.push_back({std::to_string(e.t), e.b1_pass ? "1" : "0",
                        e.negH_pass ? "1" : "0", format_full(e.det_negH),
                        "\"" + tags + "\""});
  }
  return tab.csv();
}

std::string conditions_json(const conditions::SaddleReport& report) {
  using nlohmann::json;
  json doc;
  doc["all_pass"] = report.all_pass();
  json rows = json::array();
  for (const auto& e : report.entries) {
    json row;
    row["t"] = e.t;
    row["b1_pass"] = e.b1_pass;
    row["b1_min_eig"] = e.b1_min_eig;
    row["negH_pass"] = e.negH_pass;
    row["negH_leading_minors_ok"] = e.negH_leading_minors_ok;
    row["det_negH"] = e.det_negH;
    row["det_H"] = e.det_H;
    row["violations"] = e.violations;
    if (e.prop4_available) {
      json p4;
      p4["N_lower"] = e.N_lower;
      p4["Lambda_inv_lower"] = e.Lambda_inv_lower;
      p4["Xi_inv_lower"] = e.Xi_inv_lower;
      p4["caveat"] = e.prop4_caveat;
      row["prop4"] = std::move(p4);
    }
    rows.push_back(std::move(row));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

std::string mc_json(const duality::McResult& res) {
  using nlohmann::json;
  json doc;
  doc["estimate"] = res.estimate;
  doc["std_error"] = res.std_error;
  doc["samples"] = res.samples;
  doc["seed"] = res.seed;
  return doc.dump(2) + "\n";
}

std::string manifest_json(const std::string& command,
                          const std::string& config_path, std::uint64_t seed,
                          std::uint64_t samples,
                          const std::vector<ManifestEntry>& outputs,
                          double wall_clock_seconds) {
  using nlohmann::json;
  json doc;
  doc["command"] = command;
  doc["config"] = config_path;
  doc["seed"] = seed;
  doc["samples"] = samples;
  json outs = json::array();
  for (const auto& o : outputs) {
    json e;
    e["path"] = o.path;
    e["fnv1a64"] = o.hash;
    outs.push_back(std::move(e));
  }
  doc["outputs"] = std::move(outs);
  doc["wall_clock_seconds"] = wall_clock_seconds;
  return doc.dump(2) + "\n";
}

}  // namespace leqg::io

#include "leqg/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "leqg/errors.hpp"

namespace leqg::model {
namespace {

using nlohmann::json;

Mat sym(const Mat& X) { return 0.5 * (X + X.transpose()); }

constexpr double kPsdTol = 1e-10;

// Scale-aware definiteness thresholds: tol * max(1, spectral radius).
double eig_scale(const Eigen::SelfAdjointEigenSolver<Mat>& es) {
  const double r = es.eigenvalues().cwiseAbs().maxCoeff();
  return std::max(1.0, r);
}

bool psd_check(const Mat& X, double* min_eig) {
  Eigen::SelfAdjointEigenSolver<Mat> es(X, Eigen::EigenvaluesOnly);
  *min_eig = es.eigenvalues().minCoeff();
  return *min_eig >= -kPsdTol * eig_scale(es);
}

bool pd_check(const Mat& X, double* min_eig) {
  if ((X - X.transpose()).cwiseAbs().maxCoeff() >
      kPsdTol * std::max(1.0, X.cwiseAbs().maxCoeff())) {
    Eigen::SelfAdjointEigenSolver<Mat> es(sym(X), Eigen::EigenvaluesOnly);
    *min_eig = es.eigenvalues().minCoeff();
    return false;
  }
  Eigen::LLT<Mat> llt(sym(X));
  if (llt.info() == Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Mat> es(sym(X), Eigen::EigenvaluesOnly);
    *min_eig = es.eigenvalues().minCoeff();
    return *min_eig > kPsdTol * eig_scale(es);
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(X), Eigen::EigenvaluesOnly);
  *min_eig = es.eigenvalues().minCoeff();
  return false;
}

// Inverse and symmetric square root through the eigen-decomposition, with
// zero modes mapped to zero so degenerate test harnesses stay well-defined.
Mat safe_inverse(const Mat& X) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(X));
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  Vec inv = es.eigenvalues();
  for (int i = 0; i < inv.size(); ++i)
    inv(i) = std::abs(inv(i)) > kPsdTol * scale ? 1.0 / inv(i) : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Mat safe_sqrt(const Mat& X) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(X));
  Vec rt = es.eigenvalues();
  for (int i = 0; i < rt.size(); ++i) rt(i) = rt(i) > 0.0 ? std::sqrt(rt(i)) : 0.0;
  return es.eigenvectors() * rt.asDiagonal() * es.eigenvectors().transpose();
}

std::string dims(const Mat& X) {
  std::ostringstream os;
  os << X.rows() << "x" << X.cols();
  return os.str();
}

// ---- config parsing -------------------------------------------------------

int depth_of(const json& v) {
  if (!v.is_array()) return 0;
  if (v.empty()) return 1;
  return 1 + depth_of(v.front());
}

double as_number(const json& v, const std::string& key) {
  if (!v.is_number())
    throw ConfigError("ParseError", "key '" + key + "': expected a number");
  return v.get<double>();
}

Mat parse_matrix(const json& v, const std::string& key) {
  if (v.is_number()) {
    Mat X(1, 1);
    X(0, 0) = v.get<double>();
    return X;
  }
  if (depth_of(v) != 2)
    throw ConfigError("ParseError", "key '" + key +
                                        "': expected a number or a nested "
                                        "row-major array of rows");
  const auto rows = static_cast<int>(v.size());
  if (rows == 0) throw ConfigError("ParseError", "key '" + key + "': empty matrix");
  const auto cols = static_cast<int>(v.front().size());
  Mat X(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(v[i].size()) != cols)
      throw ConfigError("ParseError", "key '" + key + "': ragged rows");
    for (int j = 0; j < cols; ++j) X(i, j) = as_number(v[i][j], key);
  }
  return X;
}

Vec parse_vector(const json& v, const std::string& key) {
  if (v.is_number()) {
    Vec x(1);
    x(0) = v.get<double>();
    return x;
  }
  if (depth_of(v) != 1)
    throw ConfigError("ParseError",
                      "key '" + key + "': expected a number or a flat array");
  Vec x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    x(static_cast<Eigen::Index>(i)) = as_number(v[i], key);
  return x;
}

// Schedule grammar: number or single matrix broadcast over t; a depth-1 list
// of T numbers or a depth-3 list of T matrices gives per-step entries.
std::vector<Mat> parse_schedule(const json& v, const std::string& key, int T) {
  std::vector<Mat> out;
  const int d = depth_of(v);
  if (d == 0 || d == 2) {
    out.assign(static_cast<std::size_t>(T), parse_matrix(v, key));
    return out;
  }
  if (static_cast<int>(v.size()) != T)
    throw ConfigError("ParseError", "key '" + key + "': per-step schedule must "
                                        "have exactly T=" + std::to_string(T) +
                                        " entries, got " +
                                        std::to_string(v.size()));
  out.reserve(static_cast<std::size_t>(T));
  for (const auto& entry : v) out.push_back(parse_matrix(entry, key));
  return out;
}

json matrix_json(const Mat& X) {
  if (X.rows() == 1 && X.cols() == 1) return X(0, 0);
  json rows = json::array();
  for (int i = 0; i < X.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < X.cols(); ++j) row.push_back(X(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vec& x) {
  if (x.size() == 1) return x(0);
  json arr = json::array();
  for (int i = 0; i < x.size(); ++i) arr.push_back(x(i));
  return arr;
}

json schedule_json(const std::vector<Mat>& sched) {
  const bool constant = std::all_of(
      sched.begin(), sched.end(), [&](const Mat& X) { return X == sched.front(); });
  if (constant) return matrix_json(sched.front());
  json arr = json::array();
  for (const auto& X : sched) {
    if (X.rows() == 1 && X.cols() == 1)
      arr.push_back(X(0, 0));
    else
      arr.push_back(matrix_json(X));
  }
  return arr;
}

}  // namespace

ValidatedModel::ValidatedModel(ModelSpec spec) : spec_(std::move(spec)) {
  const auto T = static_cast<std::size_t>(spec_.T);
  Lambda_inv_.reserve(T);
  Xi_inv_.reserve(T);
  Lambda_sqrt_.reserve(T);
  Xi_sqrt_.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    Lambda_inv_.push_back(safe_inverse(spec_.Lambda[t]));
    Xi_inv_.push_back(safe_inverse(spec_.Xi[t]));
    Lambda_sqrt_.push_back(safe_sqrt(spec_.Lambda[t]));
    Xi_sqrt_.push_back(safe_sqrt(spec_.Xi[t]));
  }
}

ValidatedModel ValidatedModel::assume_valid(ModelSpec spec) {
  spec.M = sym(spec.M);
  spec.M_T = sym(spec.M_T);
  for (auto& Nt : spec.N) Nt = sym(Nt);
  return ValidatedModel(std::move(spec));
}

ValidatedModel validate(const ModelSpec& spec_in) {
  ModelSpec spec = spec_in;

  std::vector<std::string> dim_issues;
  const int dx = spec.dx();
  const int du = spec.du();
  auto want = [&](bool ok, const std::string& msg) {
    if (!ok) dim_issues.push_back(msg);
  };
  want(spec.T >= 1, "T must be a positive integer");
  want(dx >= 1 && spec.A.rows() == spec.A.cols(),
       "A must be square, got " + dims(spec.A));
  want(du >= 1 && spec.B.rows() == dx,
       "B must be d_x x d_u = " + std::to_string(dx) + " rows, got " + dims(spec.B));
  want(spec.a.size() == dx, "a must have d_x entries");
  want(spec.M.rows() == dx && spec.M.cols() == dx, "M must be d_x x d_x");
  want(spec.Q.rows() == du && spec.Q.cols() == dx, "Q must be d_u x d_x");
  want(spec.m.size() == dx, "m must have d_x entries");
  want(spec.n.size() == du, "n must have d_u entries");
  want(spec.M_T.rows() == dx && spec.M_T.cols() == dx, "M_T must be d_x x d_x");
  want(spec.m_T.size() == dx, "m_T must have d_x entries");
  want(spec.x0.size() == dx, "x0 must have d_x entries");
  const auto Tn = static_cast<std::size_t>(std::max(spec.T, 0));
  want(spec.Lambda.size() == Tn, "Lambda schedule must have T entries");
  want(spec.Xi.size() == Tn, "Xi schedule must have T entries");
  want(spec.N.size() == Tn, "N schedule must have T entries");
  if (dim_issues.empty()) {
    for (std::size_t t = 0; t < Tn; ++t) {
      want(spec.Lambda[t].rows() == dx && spec.Lambda[t].cols() == dx,
           "Lambda[" + std::to_string(t) + "] must be d_x x d_x");
      want(spec.Xi[t].rows() == du && spec.Xi[t].cols() == du,
           "Xi[" + std::to_string(t) + "] must be d_u x d_u");
      want(spec.N[t].rows() == du && spec.N[t].cols() == du,
           "N[" + std::to_string(t) + "] must be d_u x d_u");
    }
  }
  if (!dim_issues.empty()) {
    std::string msg;
    for (const auto& s : dim_issues) msg += (msg.empty() ? "" : "; ") + s;
    throw ConfigError("DimensionMismatch", msg);
  }

  spec.M = sym(spec.M);
  spec.M_T = sym(spec.M_T);
  for (auto& Nt : spec.N) Nt = sym(Nt);

  std::vector<std::string> issues;
  bool theta_bad = false;
  const bool theta_ok =
      (spec.theta > -1.0 && spec.theta < 0.0) || spec.theta > 0.0;
  if (!theta_ok) {
    theta_bad = true;
    std::ostringstream os;
    os << "theta=" << spec.theta << " outside (-1,0) union (0,inf)";
    issues.push_back(os.str());
  }
  auto psd_field = [&](const Mat& X, const std::string& name) {
    double me = 0.0;
    if (!psd_check(X, &me)) {
      std::ostringstream os;
      os << name << " not positive semidefinite (min eigenvalue " << me << ")";
      issues.push_back(os.str());
    }
  };
  auto pd_field = [&](const Mat& X, const std::string& name) {
    double me = 0.0;
    if (!pd_check(X, &me)) {
      std::ostringstream os;
      os << name << " not symmetric positive definite (min eigenvalue " << me
         << ")";
      issues.push_back(os.str());
    }
  };
  psd_field(spec.M, "M");
  psd_field(spec.M_T, "M_T");
  for (std::size_t t = 0; t < Tn; ++t) {
    psd_field(spec.N[t], "N[" + std::to_string(t) + "]");
    pd_field(spec.Lambda[t], "Lambda[" + std::to_string(t) + "]");
    pd_field(spec.Xi[t], "Xi[" + std::to_string(t) + "]");
  }
  if (!issues.empty()) {
    std::string msg;
    for (const auto& s : issues) msg += (msg.empty() ? "" : "; ") + s;
    throw ConfigError(theta_bad ? "ThetaOutOfRange" : "NotPSD", msg);
  }

  return ValidatedModel(std::move(spec));
}

ModelSpec load_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("ParseError", e.what());
  }
  if (!j.is_object()) throw ConfigError("ParseError", "top level must be a map");

  static const char* kKeys[] = {"a", "A",   "B",   "Lambda", "Xi",
                                "M", "N",   "Q",   "m",      "n",
                                "M_T", "m_T", "theta", "T",  "x0"};
  std::vector<std::string> missing;
  for (const char* k : kKeys)
    if (!j.contains(k)) missing.emplace_back(k);
  if (!missing.empty()) {
    std::string msg;
    for (const auto& s : missing) msg += (msg.empty() ? "" : ", ") + s;
    throw ConfigError("MissingKey", msg);
  }
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(std::begin(kKeys), std::end(kKeys),
                     [&](const char* k) { return key == k; }))
      throw ConfigError("ParseError", "unknown key '" + key + "'");
  }

  ModelSpec spec;
  const json& jT = j.at("T");
  if (jT.is_number_integer()) {
    spec.T = jT.get<int>();
  } else if (jT.is_number() &&
             jT.get<double>() == std::floor(jT.get<double>())) {
    spec.T = static_cast<int>(jT.get<double>());
  } else {
    throw ConfigError("ParseError", "key 'T': expected an integer");
  }
  if (spec.T < 1) throw ConfigError("ParseError", "key 'T': must be >= 1");

  spec.theta = as_number(j.at("theta"), "theta");
  spec.A = parse_matrix(j.at("A"), "A");
  spec.B = parse_matrix(j.at("B"), "B");
  spec.M = parse_matrix(j.at("M"), "M");
  spec.Q = parse_matrix(j.at("Q"), "Q");
  spec.M_T = parse_matrix(j.at("M_T"), "M_T");
  spec.a = parse_vector(j.at("a"), "a");
  spec.m = parse_vector(j.at("m"), "m");
  spec.n = parse_vector(j.at("n"), "n");
  spec.m_T = parse_vector(j.at("m_T"), "m_T");
  spec.x0 = parse_vector(j.at("x0"), "x0");
  spec.Lambda = parse_schedule(j.at("Lambda"), "Lambda", spec.T);
  spec.Xi = parse_schedule(j.at("Xi"), "Xi", spec.T);
  spec.N = parse_schedule(j.at("N"), "N", spec.T);
  return spec;
}

std::string serialize(const ModelSpec& spec) {
  json j;
  j["a"] = vector_json(spec.a);
  j["A"] = matrix_json(spec.A);
  j["B"] = matrix_json(spec.B);
  j["Lambda"] = schedule_json(spec.Lambda);
  j["Xi"] = schedule_json(spec.Xi);
  j["M"] = matrix_json(spec.M);
  j["N"] = schedule_json(spec.N);
  j["Q"] = matrix_json(spec.Q);
  j["m"] = vector_json(spec.m);
  j["n"] = vector_json(spec.n);
  j["M_T"] = matrix_json(spec.M_T);
  j["m_T"] = vector_json(spec.m_T);
  j["theta"] = spec.theta;
  j["T"] = spec.T;
  j["x0"] = vector_json(spec.x0);
  return j.dump(2) + "\n";
}

ModelSpec table2() {
  ModelSpec s;
  auto one = [](double v) {
    Mat X(1, 1);
    X(0, 0) = v;
    return X;
  };
  auto vec1 = [](double v) {
    Vec x(1);
    x(0) = v;
    return x;
  };
  s.T = 25;
  s.theta = 1.0;
  s.a = vec1(0.0);
  s.A = one(-0.2);
  s.B = one(0.4);
  s.Lambda.assign(25, one(0.15));
  s.Xi.assign(25, one(0.15));
  s.M = one(2.0);
  s.N.assign(25, one(2.0));
  s.Q = one(1.0);
  s.m = vec1(0.0);
  s.n = vec1(0.0);
  s.M_T = one(4.0);
  s.m_T = vec1(0.0);
  s.x0 = vec1(1.0);
  return s;
}

}  // namespace leqg::model

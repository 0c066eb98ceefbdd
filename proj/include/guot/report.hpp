#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "guot/asymptotics.hpp"
#include "guot/certificate.hpp"
#include "guot/closed_form.hpp"
#include "guot/gaussian.hpp"
#include "guot/grid_benchmark.hpp"
#include "guot/linalg.hpp"
#include "guot/version.hpp"

namespace guot {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic JSON emission. Numbers are printed with 12 significant digits
// via std::to_chars, which is locale-independent, so identical values always
// produce identical bytes. Object keys keep insertion order.
// ---------------------------------------------------------------------------

class JsonValue {
 public:
  static JsonValue object() { return JsonValue(Kind::Object); }
  static JsonValue array() { return JsonValue(Kind::Array); }

  JsonValue(double v) : kind_(Kind::Double), number_(v) {}  // NOLINT(google-explicit-constructor)
  JsonValue(std::int64_t v) : kind_(Kind::Int), integer_(v) {}
  JsonValue(int v) : kind_(Kind::Int), integer_(v) {}
  JsonValue(bool v) : kind_(Kind::Bool), boolean_(v) {}
  JsonValue(std::string v) : kind_(Kind::String), string_(std::move(v)) {}
  JsonValue(const char* v) : kind_(Kind::String), string_(v) {}

  JsonValue& add(const std::string& key, JsonValue v) {
    members_.emplace_back(key, std::move(v));
    return *this;
  }

  JsonValue& push_back(JsonValue v) {
    elements_.push_back(std::move(v));
    return *this;
  }

  std::string to_string() const {
    std::string out;
    write(out, 0);
    out.push_back('\n');
    return out;
  }

 private:
  enum class Kind { Object, Array, Double, Int, Bool, String };

  explicit JsonValue(Kind k) : kind_(k) {}

  static std::string format_double(double v) {
    if (std::isnan(v)) return "\"nan\"";
    if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
  }

  static void write_escaped(std::string& out, const std::string& s) {
    out.push_back('"');
    for (char ch : s) {
      switch (ch) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
          if (static_cast<unsigned char>(ch) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
            out += buf;
          } else {
            out.push_back(ch);
          }
      }
    }
    out.push_back('"');
  }

  bool scalar() const {
    return kind_ != Kind::Object && kind_ != Kind::Array;
  }

  bool inline_array() const {
    if (kind_ != Kind::Array) return false;
    for (const JsonValue& e : elements_) {
      if (!e.scalar()) return false;
    }
    return true;
  }

  void write(std::string& out, int depth) const {
    const std::string pad(2 * static_cast<std::size_t>(depth), ' ');
    const std::string pad_in(2 * static_cast<std::size_t>(depth + 1), ' ');
    switch (kind_) {
      case Kind::Double: out += format_double(number_); break;
      case Kind::Int: out += std::to_string(integer_); break;
      case Kind::Bool: out += boolean_ ? "true" : "false"; break;
      case Kind::String: write_escaped(out, string_); break;
      case Kind::Object: {
        if (members_.empty()) {
          out += "{}";
          break;
        }
        out += "{\n";
        for (std::size_t i = 0; i < members_.size(); ++i) {
          out += pad_in;
          write_escaped(out, members_[i].first);
          out += ": ";
          members_[i].second.write(out, depth + 1);
          if (i + 1 < members_.size()) out.push_back(',');
          out.push_back('\n');
        }
        out += pad + "}";
        break;
      }
      case Kind::Array: {
        if (elements_.empty()) {
          out += "[]";
          break;
        }
        if (inline_array()) {
          out.push_back('[');
          for (std::size_t i = 0; i < elements_.size(); ++i) {
            elements_[i].write(out, depth);
            if (i + 1 < elements_.size()) out += ", ";
          }
          out.push_back(']');
          break;
        }
        out += "[\n";
        for (std::size_t i = 0; i < elements_.size(); ++i) {
          out += pad_in;
          elements_[i].write(out, depth + 1);
          if (i + 1 < elements_.size()) out.push_back(',');
          out.push_back('\n');
        }
        out += pad + "]";
        break;
      }
    }
  }

  Kind kind_;
  double number_ = 0.0;
  std::int64_t integer_ = 0;
  bool boolean_ = false;
  std::string string_;
  std::vector<std::pair<std::string, JsonValue>> members_;
  std::vector<JsonValue> elements_;
};

inline JsonValue vector_fragment(const Vector& v) {
  JsonValue arr = JsonValue::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline JsonValue matrix_fragment(const Matrix& m) {
  JsonValue rows = JsonValue::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    JsonValue row = JsonValue::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Problem-file parsing.
// ---------------------------------------------------------------------------

struct CertifyOptions {
  std::int64_t samples = 100000;
  std::int64_t seed = 42;
};

struct GridOptions {
  std::vector<int> sizes = {21, 31, 41, 51};
};

struct SweepOptions {
  // Negative bar taus mean "default to the problem's tau0/tau1".
  double bar_tau0 = -1.0;
  double bar_tau1 = -1.0;
  std::vector<double> lambdas = {1.0, 10.0, 100.0, 1000.0};
};

struct ProblemFile {
  UotProblem problem;
  CertifyOptions certify;
  GridOptions grid;
  SweepOptions sweep;
};

namespace detail {

using nlohmann::json;

inline const json& require_field(const json& obj, const std::string& path,
                                 const std::string& key) {
  if (!obj.is_object()) {
    throw ParseError(path + ": expected an object");
  }
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError("missing required field '" + (path.empty() ? key : path + "." + key) +
                     "'");
  }
  return *it;
}

inline double finite_number(const json& v, const std::string& path) {
  if (!v.is_number()) {
    throw ParseError(path + ": expected a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    throw ParseError(path + ": value must be finite");
  }
  return x;
}

inline void reject_unknown_keys(const json& obj, const std::string& path,
                                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ParseError("unrecognized field '" + (path.empty() ? it.key() : path + "." + it.key()) +
                       "'");
    }
  }
}

inline GaussianMeasure parse_measure(const json& obj, const std::string& path) {
  reject_unknown_keys(obj, path, {"mass", "mean", "cov"});
  const double mass = finite_number(require_field(obj, path, "mass"), path + ".mass");

  const json& mean_json = require_field(obj, path, "mean");
  if (!mean_json.is_array() || mean_json.empty()) {
    throw ParseError(path + ".mean: expected a nonempty array of numbers");
  }
  Vector mean(mean_json.size());
  for (std::size_t i = 0; i < mean_json.size(); ++i) {
    mean(static_cast<Eigen::Index>(i)) =
        finite_number(mean_json[i], path + ".mean[" + std::to_string(i) + "]");
  }

  const json& cov_json = require_field(obj, path, "cov");
  const auto d = mean_json.size();
  if (!cov_json.is_array() || cov_json.size() != d) {
    throw ParseError(path + ".cov: expected a " + std::to_string(d) + "x" +
                     std::to_string(d) + " array of arrays");
  }
  Matrix cov(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    if (!cov_json[i].is_array() || cov_json[i].size() != d) {
      throw ParseError(path + ".cov[" + std::to_string(i) + "]: expected a row of length " +
                       std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) {
      cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = finite_number(
          cov_json[i][j], path + ".cov[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
  }
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * (1.0 + cov.cwiseAbs().maxCoeff())) {
    throw ParseError(path + ".cov: not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }

  try {
    return GaussianMeasure(mass, std::move(mean), SymMatrix(cov));
  } catch (const DefinitenessError& e) {
    throw ParseError(path + ".cov: not positive definite (min eigenvalue " +
                     std::to_string(e.check().min_eigenvalue) + ", max " +
                     std::to_string(e.check().max_eigenvalue) + ")");
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace detail

inline ProblemFile parse_problem_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("input is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ParseError("top level: expected an object");
  }
  detail::reject_unknown_keys(doc, "",
                              {"alpha", "beta", "tau0", "tau1", "certify", "grid", "sweep"});

  GaussianMeasure alpha = detail::parse_measure(detail::require_field(doc, "", "alpha"), "alpha");
  GaussianMeasure beta = detail::parse_measure(detail::require_field(doc, "", "beta"), "beta");
  const double tau0 = detail::finite_number(detail::require_field(doc, "", "tau0"), "tau0");
  const double tau1 = detail::finite_number(detail::require_field(doc, "", "tau1"), "tau1");

  std::optional<UotProblem> problem;
  try {
    problem.emplace(std::move(alpha), std::move(beta), tau0, tau1);
  } catch (const std::exception& e) {
    throw ParseError(std::string("problem: ") + e.what());
  }

  ProblemFile pf{std::move(*problem), CertifyOptions{}, GridOptions{}, SweepOptions{}};

  if (doc.contains("certify")) {
    const auto& c = doc["certify"];
    detail::reject_unknown_keys(c, "certify", {"samples", "seed"});
    if (c.contains("samples")) {
      if (!c["samples"].is_number_integer() || c["samples"].get<std::int64_t>() <= 0) {
        throw ParseError("certify.samples: expected a positive integer");
      }
      pf.certify.samples = c["samples"].get<std::int64_t>();
    }
    if (c.contains("seed")) {
      if (!c["seed"].is_number_integer()) {
        throw ParseError("certify.seed: expected an integer");
      }
      pf.certify.seed = c["seed"].get<std::int64_t>();
    }
  }

  if (doc.contains("grid")) {
    const auto& g = doc["grid"];
    detail::reject_unknown_keys(g, "grid", {"sizes"});
    if (g.contains("sizes")) {
      if (!g["sizes"].is_array() || g["sizes"].empty()) {
        throw ParseError("grid.sizes: expected a nonempty array of integers");
      }
      pf.grid.sizes.clear();
      for (std::size_t i = 0; i < g["sizes"].size(); ++i) {
        const auto& v = g["sizes"][i];
        if (!v.is_number_integer() || v.get<std::int64_t>() < 2) {
          throw ParseError("grid.sizes[" + std::to_string(i) +
                           "]: expected an integer >= 2");
        }
        pf.grid.sizes.push_back(static_cast<int>(v.get<std::int64_t>()));
      }
    }
  }

  if (doc.contains("sweep")) {
    const auto& s = doc["sweep"];
    detail::reject_unknown_keys(s, "sweep", {"bar_tau0", "bar_tau1", "lambdas"});
    if (s.contains("bar_tau0")) {
      pf.sweep.bar_tau0 = detail::finite_number(s["bar_tau0"], "sweep.bar_tau0");
      if (!(pf.sweep.bar_tau0 > 0.0)) {
        throw ParseError("sweep.bar_tau0: must be positive");
      }
    }
    if (s.contains("bar_tau1")) {
      pf.sweep.bar_tau1 = detail::finite_number(s["bar_tau1"], "sweep.bar_tau1");
      if (!(pf.sweep.bar_tau1 > 0.0)) {
        throw ParseError("sweep.bar_tau1: must be positive");
      }
    }
    if (s.contains("lambdas")) {
      if (!s["lambdas"].is_array() || s["lambdas"].empty()) {
        throw ParseError("sweep.lambdas: expected a nonempty array of numbers");
      }
      pf.sweep.lambdas.clear();
      for (std::size_t i = 0; i < s["lambdas"].size(); ++i) {
        const double v =
            detail::finite_number(s["lambdas"][i], "sweep.lambdas[" + std::to_string(i) + "]");
        if (!(v > 0.0)) {
          throw ParseError("sweep.lambdas[" + std::to_string(i) + "]: must be positive");
        }
        if (!pf.sweep.lambdas.empty() && v <= pf.sweep.lambdas.back()) {
          throw ParseError("sweep.lambdas: must be strictly increasing");
        }
        pf.sweep.lambdas.push_back(v);
      }
    }
  }

  return pf;
}

inline ProblemFile parse_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open input file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem_text(buf.str());
}

// ---------------------------------------------------------------------------
// Report assembly. Every fragment echoes enough input to reproduce the run,
// and identical inputs produce byte-identical documents.
// ---------------------------------------------------------------------------

inline JsonValue problem_fragment(const UotProblem& prob) {
  JsonValue alpha = JsonValue::object();
  alpha.add("mass", prob.alpha().mass());
  alpha.add("mean", vector_fragment(prob.alpha().mean()));
  alpha.add("cov", matrix_fragment(prob.alpha().cov().mat()));
  JsonValue beta = JsonValue::object();
  beta.add("mass", prob.beta().mass());
  beta.add("mean", vector_fragment(prob.beta().mean()));
  beta.add("cov", matrix_fragment(prob.beta().cov().mat()));

  JsonValue out = JsonValue::object();
  out.add("dim", static_cast<std::int64_t>(prob.dim()));
  out.add("alpha", std::move(alpha));
  out.add("beta", std::move(beta));
  out.add("tau0", prob.tau0());
  out.add("tau1", prob.tau1());
  return out;
}

inline JsonValue solution_fragment(const ClosedFormSolution& sol) {
  JsonValue out = JsonValue::object();
  out.add("value", sol.value);
  out.add("M_star", sol.M_star);
  out.add("A_star", sol.A_star);
  out.add("u_star", vector_fragment(sol.u_star));
  out.add("v_star", vector_fragment(sol.v_star));
  out.add("h_star", vector_fragment(sol.h_star));
  out.add("P_star", matrix_fragment(sol.P_star.mat()));
  out.add("Q_star", matrix_fragment(sol.Q_star.mat()));
  out.add("map_linear", matrix_fragment(sol.map_linear.mat()));
  out.add("map_offset", vector_fragment(sol.map_offset));
  return out;
}

/// Bounds that a certificate must satisfy for the CLI to exit 0; exceeding
/// any of them is "certificate failed" (exit code 4). The gap bound is
/// relative to the value scale; the rest are absolute, matching the
/// magnitudes reported for the reference instances.
struct CertificateBounds {
  double max_riccati_residual = 1e-12;
  double max_graph_equality_error = 1e-12;
  double max_constant_sum_residual = 1e-10;
  double min_sampled_slack = -1e-10;
  double max_marginal_density_residual = 1e-10;
  double max_relative_gap = 1e-10;
};

inline std::vector<std::string> certificate_violations(const CertificateReport& report,
                                                       double value,
                                                       const CertificateBounds& bounds = {}) {
  auto sci = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return std::string(buf);
  };
  std::vector<std::string> out;
  auto check = [&out](bool ok, const std::string& message) {
    if (!ok) out.push_back(message);
  };
  check(report.riccati_residual <= bounds.max_riccati_residual,
        "riccati_residual " + sci(report.riccati_residual) + " exceeds " +
            sci(bounds.max_riccati_residual));
  check(report.max_graph_equality_error <= bounds.max_graph_equality_error,
        "max_graph_equality_error " + sci(report.max_graph_equality_error) + " exceeds " +
            sci(bounds.max_graph_equality_error));
  check(report.constant_sum_residual <= bounds.max_constant_sum_residual,
        "constant_sum_residual " + sci(report.constant_sum_residual) + " exceeds " +
            sci(bounds.max_constant_sum_residual));
  check(report.min_sampled_slack >= bounds.min_sampled_slack,
        "min_sampled_slack " + sci(report.min_sampled_slack) + " below " +
            sci(bounds.min_sampled_slack));
  check(report.marginal_density_residual <= bounds.max_marginal_density_residual,
        "marginal_density_residual " + sci(report.marginal_density_residual) + " exceeds " +
            sci(bounds.max_marginal_density_residual));
  check(report.primal_dual_gap <= bounds.max_relative_gap * (1.0 + std::abs(value)),
        "primal_dual_gap " + sci(report.primal_dual_gap) + " exceeds " +
            sci(bounds.max_relative_gap) + " relative");
  return out;
}

inline JsonValue certificate_fragment(const CertificateReport& report, double value,
                                      const CertificateBounds& bounds = {}) {
  JsonValue out = JsonValue::object();
  out.add("riccati_residual", report.riccati_residual);
  out.add("min_sampled_slack", report.min_sampled_slack);
  out.add("max_graph_equality_error", report.max_graph_equality_error);
  out.add("constant_sum_residual", report.constant_sum_residual);
  out.add("marginal_density_residual", report.marginal_density_residual);
  out.add("dual_value", report.dual_value);
  out.add("primal_dual_gap", report.primal_dual_gap);
  out.add("min_eig_P_inv", report.min_eig_P_inv);
  out.add("sample_count", report.sample_count);
  out.add("seed", report.seed);
  out.add("within_bounds", certificate_violations(report, value, bounds).empty());
  return out;
}

inline JsonValue run_solve(const ClosedFormSolution& sol) { return solution_fragment(sol); }

inline JsonValue run_certify(const ClosedFormSolution& sol, const UotProblem& prob,
                             const CertifyOptions& opts, CertificateReport* out_report = nullptr) {
  CertificateReport report = certify(sol, prob, opts.samples, opts.seed);
  if (out_report != nullptr) *out_report = report;
  return certificate_fragment(report, sol.value);
}

inline JsonValue run_grid_bench(const ClosedFormSolution& sol, const UotProblem& prob,
                                const GridOptions& opts) {
  JsonValue rows = JsonValue::array();
  for (int n : opts.sizes) {
    Grid1D grid = build_grid(prob, n);
    DiscreteDualResult res = solve_discrete_dual(grid, prob);
    JsonValue row = JsonValue::object();
    row.add("n", n);
    row.add("dual_value", res.dual_value);
    row.add("absolute_gap", std::abs(res.dual_value - sol.value));
    row.add("max_violation", res.max_violation);
    row.add("iterations", res.iterations);
    row.add("epsilon_final", res.epsilon_final);
    rows.push_back(std::move(row));
  }
  JsonValue out = JsonValue::object();
  out.add("closed_form_value", sol.value);
  out.add("rows", std::move(rows));
  return out;
}

inline JsonValue run_limit_sweep(const UotProblem& prob, const SweepOptions& opts) {
  const double bt0 = opts.bar_tau0 > 0.0 ? opts.bar_tau0 : prob.tau0();
  const double bt1 = opts.bar_tau1 > 0.0 ? opts.bar_tau1 : prob.tau1();
  LimitExpansion expansion = limit_expansion(prob, bt0, bt1);
  std::vector<SweepRow> rows = sweep(prob, bt0, bt1, opts.lambdas);

  JsonValue rows_json = JsonValue::array();
  for (const SweepRow& row : rows) {
    JsonValue r = JsonValue::object();
    r.add("lambda", row.lambda);
    r.add("value", row.value);
    r.add("M_star", row.m_star);
    r.add("residual", row.residual);
    r.add("mean0_gap", row.mean0_gap);
    r.add("mean1_gap", row.mean1_gap);
    r.add("cov0_gap", row.cov0_gap);
    r.add("cov1_gap", row.cov1_gap);
    rows_json.push_back(std::move(r));
  }

  JsonValue out = JsonValue::object();
  out.add("bar_tau0", bt0);
  out.add("bar_tau1", bt1);
  out.add("theta0", expansion.theta0);
  out.add("theta1", expansion.theta1);
  out.add("geometric_mass", expansion.geometric_mass);
  out.add("leading_coeff", expansion.leading_coeff);
  out.add("constant_term", expansion.constant_term);
  out.add("rows", std::move(rows_json));
  return out;
}

/// Full report document for one subcommand. The solution section is always
/// present; certificate, grid_benchmark, and limit_sweep appear only for
/// their subcommands.
inline JsonValue build_report(const ProblemFile& pf, const std::string& command,
                              CertificateReport* out_certificate = nullptr,
                              double* out_value = nullptr) {
  ClosedFormSolution sol = solve(pf.problem);
  if (out_value != nullptr) *out_value = sol.value;

  JsonValue doc = JsonValue::object();
  doc.add("schema_version", kReportSchemaVersion);
  doc.add("library", kLibraryName);
  doc.add("library_version", kLibraryVersion);
  doc.add("command", command);
  doc.add("problem", problem_fragment(pf.problem));
  doc.add("solution", solution_fragment(sol));

  if (command == "certify") {
    doc.add("certificate", run_certify(sol, pf.problem, pf.certify, out_certificate));
  } else if (command == "grid-bench") {
    doc.add("grid_benchmark", run_grid_bench(sol, pf.problem, pf.grid));
  } else if (command == "limit-sweep") {
    doc.add("limit_sweep", run_limit_sweep(pf.problem, pf.sweep));
  } else if (command != "solve") {
    throw std::invalid_argument("build_report: unknown command '" + command + "'");
  }
  return doc;
}

}  // namespace guot

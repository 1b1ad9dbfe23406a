#pragma once

// Post-estimation econometrics: Hessian over the beta block, classical
// and robust (sandwich) standard errors, AIC, prediction accuracy,
// point/arc elasticities and the dummy-variable sensitivity table.
//
// Everything here is pure post-processing over immutable inputs.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "reslogit/grad.hpp"

namespace reslogit {

/// Two-sided 5% critical value of the standard normal.
inline constexpr double kZCritical5Pct = 1.959963984540054;

/// 2k - 2 ll.
inline double aic(Eigen::Index k, double ll) {
  return 2.0 * static_cast<double>(k) - 2.0 * ll;
}

/// Hessian of the log-likelihood over the beta coordinates, with the
/// residual/weight matrices held fixed. Central finite differences of
/// the analytic gradient, symmetrized as (H + H^T) / 2.
inline Eigen::MatrixXd hessian(const Parameters& params, const Dataset& data,
                               const DesignIndex& design, const ModelKind& kind,
                               double step = 1e-5) {
  const Eigen::Index k = design.beta_length();
  const auto rows = all_rows(data);
  Eigen::MatrixXd h(k, k);
  Parameters work = params;
  for (Eigen::Index c = 0; c < k; ++c) {
    const double saved = work.beta(c);
    work.beta(c) = saved + step;
    const Eigen::VectorXd up =
        grad_loglik(work, data, rows, design, kind).grad.beta;
    work.beta(c) = saved - step;
    const Eigen::VectorXd down =
        grad_loglik(work, data, rows, design, kind).grad.beta;
    work.beta(c) = saved;
    h.col(c) = (up - down) / (2.0 * step);
  }
  h = 0.5 * (h + h.transpose()).eval();
  if (!h.allFinite()) throw Error("hessian: non-finite entry");
  return h;
}

/// Standard errors with a per-coordinate validity flag: a coordinate is
/// flagged (NaN, ok=false) whenever -H is not positive definite enough
/// to give it a positive variance. Nothing is reported silently.
struct StdErrors {
  Eigen::VectorXd values;
  std::vector<bool> ok;
  bool positive_definite = true;
};

namespace detail {

inline StdErrors errors_from_covariance(const Eigen::MatrixXd& cov,
                                        bool solver_ok) {
  const Eigen::Index k = cov.rows();
  StdErrors out;
  out.values = Eigen::VectorXd::Constant(
      k, std::numeric_limits<double>::quiet_NaN());
  out.ok.assign(static_cast<std::size_t>(k), false);
  out.positive_definite = solver_ok;
  for (Eigen::Index c = 0; c < k; ++c) {
    const double var = cov(c, c);
    if (solver_ok && std::isfinite(var) && var > 0.0) {
      out.values(c) = std::sqrt(var);
      out.ok[static_cast<std::size_t>(c)] = true;
    } else {
      out.positive_definite = false;
    }
  }
  return out;
}

/// (-H)^{-1} plus a success flag.
inline std::pair<Eigen::MatrixXd, bool> negative_inverse(
    const Eigen::MatrixXd& h) {
  const Eigen::MatrixXd info = -h;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  const bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
  const Eigen::MatrixXd cov =
      ldlt.solve(Eigen::MatrixXd::Identity(h.rows(), h.cols()));
  return {cov, ok && cov.allFinite()};
}

}  // namespace detail

/// sqrt diag (-H)^{-1}: the Cramer-Rao route.
inline StdErrors std_errors(const Eigen::MatrixXd& h) {
  auto [cov, ok] = detail::negative_inverse(h);
  return detail::errors_from_covariance(cov, ok);
}

/// Sandwich route: sqrt diag of (-H)^{-1} B (-H)^{-1} with
/// B = sum_n score_n score_n^T. Scores must be evaluated at the same
/// parameters as the Hessian.
inline StdErrors robust_std_errors(const Eigen::MatrixXd& h,
                                   const Eigen::MatrixXd& per_obs_scores) {
  if (per_obs_scores.cols() != h.rows()) {
    throw Error("robust_std_errors: score width does not match Hessian");
  }
  auto [cov, ok] = detail::negative_inverse(h);
  const Eigen::MatrixXd b = per_obs_scores.transpose() * per_obs_scores;
  const Eigen::MatrixXd sandwich = cov * b * cov;
  return detail::errors_from_covariance(sandwich, ok);
}

/// Predicted alternative: argmax probability, ties broken by the lowest
/// alternative index.
inline int predicted_choice(const Eigen::VectorXd& probs) {
  int best = 0;
  for (Eigen::Index j = 1; j < probs.size(); ++j) {
    if (probs(j) > probs(best)) best = static_cast<int>(j);
  }
  return best;
}

/// Fraction of observations whose predicted alternative matches the
/// chosen one. Error rate is 1 - accuracy.
inline double accuracy(const Parameters& params, const Dataset& data,
                       const DesignIndex& design, const ModelKind& kind) {
  auto per_chunk = [&](Eigen::Index begin, Eigen::Index end, double& acc) {
    for (Eigen::Index n = begin; n < end; ++n) {
      const Eigen::VectorXd probs =
          predict_probs(params, data.attributes.row(n), design, kind);
      if (predicted_choice(probs) == data.choices[static_cast<std::size_t>(n)]) {
        acc += 1.0;
      }
    }
  };
  const double hits = chunked_reduce<double>(
      data.n_obs, per_chunk, [](double& acc, double part) { acc += part; },
      [] { return 0.0; });
  return hits / static_cast<double>(data.n_obs);
}

namespace detail {

/// d P(alt) / d V for one observation, propagated analytically through
/// the full forward graph of the given family. Also returns P(alt).
inline std::pair<Eigen::VectorXd, double> dprob_dutilities(
    const Parameters& params, const Eigen::VectorXd& row,
    const DesignIndex& design, const ModelKind& kind, int alt) {
  const Eigen::VectorXd v = linear_utility(params, row, design);
  const int j = design.n_alts;

  if (kind.family == ModelFamily::mlp) {
    std::vector<Eigen::VectorXd> hidden;
    hidden.reserve(params.thetas.size() + 1);
    hidden.push_back(v);
    for (const auto& w : params.thetas) {
      const Eigen::VectorXd z = w * hidden.back();
      Eigen::VectorXd h(j);
      for (int a = 0; a < j; ++a) h(a) = sigmoid(z(a));
      hidden.push_back(std::move(h));
    }
    const Eigen::VectorXd probs = softmax(hidden.back());
    Eigen::VectorXd u = -probs(alt) * probs;
    u(alt) += probs(alt);
    for (int m = static_cast<int>(params.thetas.size()) - 1; m >= 0; --m) {
      const Eigen::VectorXd& h = hidden[static_cast<std::size_t>(m) + 1];
      const Eigen::VectorXd t = u.array() * h.array() * (1.0 - h.array());
      u = params.thetas[static_cast<std::size_t>(m)].transpose() * t;
    }
    return {u, probs(alt)};
  }

  const ForwardTrace trace = residual_forward(params.thetas, v);
  Eigen::VectorXd u = -trace.probs(alt) * trace.probs;
  u(alt) += trace.probs(alt);
  for (int m = static_cast<int>(params.thetas.size()) - 1; m >= 0; --m) {
    const Eigen::VectorXd& h_prev = trace.hidden[static_cast<std::size_t>(m)];
    const Eigen::VectorXd z =
        params.thetas[static_cast<std::size_t>(m)] * h_prev;
    Eigen::VectorXd sig_u(j);
    for (int a = 0; a < j; ++a) sig_u(a) = sigmoid(z(a)) * u(a);
    u -= params.thetas[static_cast<std::size_t>(m)].transpose() * sig_u;
  }
  return {u, trace.probs(alt)};
}

inline bool is_binary_column(const Dataset& data, int col) {
  for (Eigen::Index n = 0; n < data.n_obs; ++n) {
    const double x = data.attributes(n, col);
    if (x != 0.0 && x != 1.0) return false;
  }
  return true;
}

}  // namespace detail

enum class Aggregation { mean, probability_weighted };

/// Per-observation derivative of P(alt) with respect to one variable,
/// through the full forward graph (residual layers included).
inline double dprob_dvariable(const Parameters& params,
                              const Eigen::VectorXd& row,
                              const DesignIndex& design, const ModelKind& kind,
                              Eigen::Index var, int alt) {
  const auto [du, prob] = detail::dprob_dutilities(params, row, design, kind, alt);
  (void)prob;
  double d = 0.0;
  for (int j = 0; j < design.n_alts; ++j) {
    if (j == design.reference_alt) continue;
    d += du(j) * params.beta(design.beta_index(var, j));
  }
  return d;
}

/// Aggregate point elasticity E = dP(alt)/dx * x / P(alt), averaged over
/// observations (or probability-weighted when requested). Refuses 0/1
/// dummy variables, whose derivative is undefined; use
/// sensitivity_ratios for those.
inline double point_elasticity(const Parameters& params, const Dataset& data,
                               const DesignIndex& design, const ModelKind& kind,
                               const std::string& variable, int alt,
                               Aggregation agg = Aggregation::mean) {
  const int col = data.column_of(variable);
  Eigen::Index var = -1;
  for (Eigen::Index k = 0; k < design.n_vars(); ++k) {
    if (design.variables[static_cast<std::size_t>(k)] == variable) var = k;
  }
  if (var < 0) throw Error("point_elasticity: '" + variable +
                           "' is not in the utility specification");
  if (detail::is_binary_column(data, col)) {
    throw Error("point_elasticity: '" + variable +
                "' is a 0/1 dummy; derivative elasticity is undefined");
  }
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index n = 0; n < data.n_obs; ++n) {
    const Eigen::VectorXd row = data.attributes.row(n);
    const auto [du, prob] =
        detail::dprob_dutilities(params, row, design, kind, alt);
    if (prob <= 0.0) {
      throw Error("point_elasticity: probability underflow at row " +
                  std::to_string(n));
    }
    double d = 0.0;
    for (int j = 0; j < design.n_alts; ++j) {
      if (j == design.reference_alt) continue;
      d += du(j) * params.beta(design.beta_index(var, j));
    }
    const double e = d * row(col) / prob;
    if (agg == Aggregation::mean) {
      num += e;
      den += 1.0;
    } else {
      num += prob * e;
      den += prob;
    }
  }
  return num / den;
}

/// Arc elasticity over a finite perturbation x -> x (1 + delta):
/// (P(x hat) - P(x)) / (delta * P(x)) per observation, aggregated the
/// same way as the point version.
inline double arc_elasticity(const Parameters& params, const Dataset& data,
                             const DesignIndex& design, const ModelKind& kind,
                             const std::string& variable, int alt,
                             double delta_pct,
                             Aggregation agg = Aggregation::mean) {
  if (delta_pct == 0.0) throw Error("arc_elasticity: delta must be nonzero");
  const int col = data.column_of(variable);
  if (detail::is_binary_column(data, col)) {
    throw Error("arc_elasticity: '" + variable +
                "' is a 0/1 dummy; elasticity is undefined");
  }
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index n = 0; n < data.n_obs; ++n) {
    Eigen::VectorXd row = data.attributes.row(n);
    const double base =
        predict_probs(params, row, design, kind)(alt);
    if (base <= 0.0) {
      throw Error("arc_elasticity: probability underflow at row " +
                  std::to_string(n));
    }
    row(col) *= 1.0 + delta_pct;
    const double shifted = predict_probs(params, row, design, kind)(alt);
    const double e = (shifted - base) / (delta_pct * base);
    if (agg == Aggregation::mean) {
      num += e;
      den += 1.0;
    } else {
      num += base * e;
      den += base;
    }
  }
  return num / den;
}

/// Point elasticity per alternative plus arc elasticities over a grid of
/// percentage changes; the grid must be symmetric around zero.
struct ElasticityReport {
  std::string variable;
  std::vector<std::string> alt_names;
  Eigen::VectorXd point;            // J
  std::vector<double> arc_grid;     // percentages as fractions, no zero
  Eigen::MatrixXd arc;              // grid x J
};

inline ElasticityReport elasticity_report(
    const Parameters& params, const Dataset& data, const DesignIndex& design,
    const ModelKind& kind, const std::string& variable,
    const std::vector<double>& arc_grid, Aggregation agg = Aggregation::mean) {
  for (double d : arc_grid) {
    bool mirrored = false;
    for (double e : arc_grid) {
      if (std::abs(d + e) < 1e-12) mirrored = true;
    }
    if (!mirrored) {
      throw Error("elasticity_report: arc grid must be symmetric around 0");
    }
  }
  ElasticityReport rep;
  rep.variable = variable;
  rep.alt_names = data.alt_names;
  rep.arc_grid = arc_grid;
  rep.point.resize(data.n_alts);
  rep.arc.resize(static_cast<Eigen::Index>(arc_grid.size()), data.n_alts);
  for (int j = 0; j < data.n_alts; ++j) {
    rep.point(j) = point_elasticity(params, data, design, kind, variable, j, agg);
    for (std::size_t gi = 0; gi < arc_grid.size(); ++gi) {
      rep.arc(static_cast<Eigen::Index>(gi), j) = arc_elasticity(
          params, data, design, kind, variable, j, arc_grid[gi], agg);
    }
  }
  return rep;
}

/// Ratio table (beta_a mean_a) / (beta_d mean_d) per (dummy, alternative),
/// with the per-alternative population standard deviation across dummies
/// appended. Cells without a finite ratio (reference alternative, zero
/// denominator) are flagged instead of reported.
struct SensitivityTable {
  std::string variable;
  std::vector<std::string> dummy_names;
  std::vector<std::string> alt_names;
  Eigen::MatrixXd ratios;            // dummies x J
  std::vector<std::vector<bool>> ok; // same shape
  Eigen::VectorXd stddev;            // J
  std::vector<bool> stddev_ok;
};

inline SensitivityTable sensitivity_ratios(
    const Parameters& params, const Dataset& data, const DesignIndex& design,
    const std::string& variable_a, const std::vector<std::string>& dummies) {
  const int col_a = data.column_of(variable_a);
  Eigen::Index var_a = -1;
  std::vector<Eigen::Index> var_d;
  for (const auto& d : dummies) {
    const int col_d = data.column_of(d);
    if (!detail::is_binary_column(data, col_d)) {
      throw Error("sensitivity_ratios: '" + d + "' is not a 0/1 dummy");
    }
    bool found = false;
    for (Eigen::Index k = 0; k < design.n_vars(); ++k) {
      if (design.variables[static_cast<std::size_t>(k)] == d) {
        var_d.push_back(k);
        found = true;
      }
    }
    if (!found) {
      throw Error("sensitivity_ratios: '" + d +
                  "' is not in the utility specification");
    }
  }
  for (Eigen::Index k = 0; k < design.n_vars(); ++k) {
    if (design.variables[static_cast<std::size_t>(k)] == variable_a) var_a = k;
  }
  if (var_a < 0) {
    throw Error("sensitivity_ratios: '" + variable_a +
                "' is not in the utility specification");
  }

  const double mean_a = data.attributes.col(col_a).mean();
  const Eigen::Index nd = static_cast<Eigen::Index>(dummies.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();

  SensitivityTable table;
  table.variable = variable_a;
  table.dummy_names = dummies;
  table.alt_names = data.alt_names;
  table.ratios = Eigen::MatrixXd::Constant(nd, data.n_alts, nan);
  table.ok.assign(static_cast<std::size_t>(nd),
                  std::vector<bool>(static_cast<std::size_t>(data.n_alts), false));
  table.stddev = Eigen::VectorXd::Constant(data.n_alts, nan);
  table.stddev_ok.assign(static_cast<std::size_t>(data.n_alts), false);

  for (Eigen::Index d = 0; d < nd; ++d) {
    const double mean_d =
        data.attributes.col(data.column_of(dummies[static_cast<std::size_t>(d)]))
            .mean();
    for (int j = 0; j < design.n_alts; ++j) {
      if (j == design.reference_alt) continue;
      const double numer = params.beta(design.beta_index(var_a, j)) * mean_a;
      const double denom =
          params.beta(design.beta_index(var_d[static_cast<std::size_t>(d)], j)) *
          mean_d;
      if (denom == 0.0) continue;  // flagged cell
      table.ratios(d, j) = numer / denom;
      table.ok[static_cast<std::size_t>(d)][static_cast<std::size_t>(j)] = true;
    }
  }
  for (int j = 0; j < design.n_alts; ++j) {
    std::vector<double> vals;
    for (Eigen::Index d = 0; d < nd; ++d) {
      if (table.ok[static_cast<std::size_t>(d)][static_cast<std::size_t>(j)]) {
        vals.push_back(table.ratios(d, j));
      }
    }
    if (vals.size() < 2) continue;
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    table.stddev(j) = std::sqrt(ss / static_cast<double>(vals.size()));
    table.stddev_ok[static_cast<std::size_t>(j)] = true;
  }
  return table;
}

/// Linear map taking standardized-scale beta to raw-scale beta. Slope
/// coefficients divide by the variable's scale; ASCs absorb the centers.
/// Exact, so raw-scale covariances are A cov A^T.
inline Eigen::MatrixXd raw_scale_transform(const DesignIndex& design,
                                           const Scaler& scaler) {
  const Eigen::Index k = design.beta_length();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index v = 0; v < design.n_vars(); ++v) {
    const int col = design.var_columns[static_cast<std::size_t>(v)];
    for (int j = 0; j < design.n_alts; ++j) {
      if (j == design.reference_alt) continue;
      const Eigen::Index idx = design.beta_index(v, j);
      a(idx, idx) = 1.0 / scaler.scale(col);
      if (design.include_asc) {
        a(design.asc_index(j), idx) = -scaler.center(col) / scaler.scale(col);
      }
    }
  }
  if (design.include_asc) {
    for (int j = 0; j < design.n_alts; ++j) {
      if (j == design.reference_alt) continue;
      a(design.asc_index(j), design.asc_index(j)) = 1.0;
    }
  }
  return a;
}

inline Parameters destandardize_parameters(const Parameters& params,
                                           const DesignIndex& design,
                                           const Scaler& scaler) {
  Parameters out = params;
  out.beta = raw_scale_transform(design, scaler) * params.beta;
  return out;
}

/// Converged fit plus all post-estimation output, on raw-data scale.
struct FitResult {
  ModelKind kind;
  Parameters params;   // raw-data scale
  Scaler scaler;       // standardization recorded at training time
  double final_ll = 0.0;   // training-set log-likelihood at params
  double valid_ll = 0.0;   // best validation log-likelihood
  double aic = 0.0;
  Eigen::Index k_parameters = 0;
  Eigen::VectorXd std_err;
  Eigen::VectorXd robust_std_err;
  std::vector<bool> se_ok;
  std::vector<bool> robust_se_ok;
  std::vector<bool> significant;  // nominal p < 0.05, two-sided normal
  double validation_accuracy = 0.0;
  int epochs_run = 0;
  bool early_stopped = false;
  bool diverged = false;
};

}  // namespace reslogit

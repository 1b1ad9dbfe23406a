#pragma once

// Reverse-mode gradients of the log-likelihood, derived by hand from the
// per-layer recursion. The Jacobian of hidden(m) w.r.t. hidden(m-1) is
//   I - diag(sigmoid(theta(m) h(m-1))) * theta(m)
// whose identity part is the skip path: the beta gradient keeps a direct
// contribution through every layer even when the layer's own derivative
// vanishes. The MLP path below is a plain chain rule and deliberately
// exhibits the opposite behaviour under saturation.
//
// finite_diff_grad is the independent oracle; it only ever calls the
// forward log-likelihood.

#include <span>
#include <vector>

#include "reslogit/model.hpp"

namespace reslogit {

/// Mirrors Parameters coordinate-for-coordinate.
struct Gradient {
  Eigen::VectorXd beta;
  std::vector<Eigen::MatrixXd> thetas;

  static Gradient zeros_like(const Parameters& params) {
    Gradient g;
    g.beta = Eigen::VectorXd::Zero(params.beta.size());
    g.thetas.reserve(params.thetas.size());
    for (const auto& t : params.thetas) {
      g.thetas.emplace_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
    }
    return g;
  }

  void add(const Gradient& other) {
    beta += other.beta;
    for (std::size_t m = 0; m < thetas.size(); ++m) thetas[m] += other.thetas[m];
  }

  void scale(double factor) {
    beta *= factor;
    for (auto& t : thetas) t *= factor;
  }

  bool all_finite() const {
    if (!beta.allFinite()) return false;
    for (const auto& t : thetas) {
      if (!t.allFinite()) return false;
    }
    return true;
  }
};

struct GradResult {
  double ll = 0.0;
  Gradient grad;
};

namespace detail {

/// Scatters a d(ll)/dV vector into the beta block.
inline void accumulate_beta(const Eigen::VectorXd& d_utilities,
                            const Eigen::VectorXd& row,
                            const DesignIndex& design, Eigen::VectorXd& d_beta) {
  for (int j = 0; j < design.n_alts; ++j) {
    if (j == design.reference_alt) continue;
    const double dv = d_utilities(j);
    if (design.include_asc) d_beta(design.asc_index(j)) += dv;
    for (Eigen::Index k = 0; k < design.n_vars(); ++k) {
      d_beta(design.beta_index(k, j)) +=
          dv * row(design.var_columns[static_cast<std::size_t>(k)]);
    }
  }
}

/// One observation's log-likelihood and gradient contribution, added
/// into `out`. When `want_theta` is false only the beta block is filled
/// (used by the per-observation score matrix).
inline double obs_grad(const Parameters& params, const Eigen::VectorXd& row,
                       int choice, const DesignIndex& design,
                       const ModelKind& kind, Gradient& out, bool want_theta) {
  const Eigen::VectorXd v = linear_utility(params, row, design);
  const int j = design.n_alts;

  if (kind.family == ModelFamily::mlp) {
    // Forward, keeping each sigmoid output.
    std::vector<Eigen::VectorXd> hidden;
    hidden.reserve(params.thetas.size() + 1);
    hidden.push_back(v);
    for (const auto& w : params.thetas) {
      const Eigen::VectorXd z = w * hidden.back();
      Eigen::VectorXd h(j);
      for (int a = 0; a < j; ++a) h(a) = sigmoid(z(a));
      hidden.push_back(std::move(h));
    }
    const double ll = log_softmax_at(hidden.back(), choice);
    const Eigen::VectorXd probs = softmax(hidden.back());
    Eigen::VectorXd u = -probs;
    u(choice) += 1.0;
    for (int m = static_cast<int>(params.thetas.size()) - 1; m >= 0; --m) {
      const Eigen::VectorXd& h = hidden[static_cast<std::size_t>(m) + 1];
      const Eigen::VectorXd t =
          u.array() * h.array() * (1.0 - h.array());
      if (want_theta) {
        out.thetas[static_cast<std::size_t>(m)] +=
            t * hidden[static_cast<std::size_t>(m)].transpose();
      }
      u = params.thetas[static_cast<std::size_t>(m)].transpose() * t;
    }
    accumulate_beta(u, row, design, out.beta);
    if (!std::isfinite(ll)) {
      throw Error("mlp_grad: non-finite log-likelihood term");
    }
    return ll;
  }

  // MNL and ResLogit share the residual path; MNL is depth 0.
  const ForwardTrace trace = residual_forward(params.thetas, v);
  const double ll = log_softmax_at(trace.hidden.back(), choice);
  Eigen::VectorXd u = -trace.probs;
  u(choice) += 1.0;
  for (int m = static_cast<int>(params.thetas.size()) - 1; m >= 0; --m) {
    const Eigen::VectorXd& h_prev = trace.hidden[static_cast<std::size_t>(m)];
    const Eigen::VectorXd z =
        params.thetas[static_cast<std::size_t>(m)] * h_prev;
    Eigen::VectorXd sig_u(j);
    for (int a = 0; a < j; ++a) sig_u(a) = sigmoid(z(a)) * u(a);
    if (want_theta) {
      out.thetas[static_cast<std::size_t>(m)] -= sig_u * h_prev.transpose();
    }
    u -= params.thetas[static_cast<std::size_t>(m)].transpose() * sig_u;
    if (!u.allFinite()) {
      throw Error("grad_loglik: non-finite gradient at layer " +
                  std::to_string(m + 1));
    }
  }
  accumulate_beta(u, row, design, out.beta);
  return ll;
}

}  // namespace detail

/// Batch log-likelihood and its exact analytic gradient, accumulated
/// over fixed-size chunks in a deterministic order.
inline GradResult grad_loglik(const Parameters& params, const Dataset& data,
                              std::span<const Eigen::Index> rows,
                              const DesignIndex& design,
                              const ModelKind& kind) {
  if (rows.empty()) throw Error("grad_loglik: empty batch");
  kind.validate();
  params.validate(design.beta_length(), design.n_alts);

  auto make_zero = [&] {
    GradResult r;
    r.grad = Gradient::zeros_like(params);
    return r;
  };
  auto per_chunk = [&](Eigen::Index begin, Eigen::Index end, GradResult& acc) {
    for (Eigen::Index r = begin; r < end; ++r) {
      const Eigen::Index n = rows[static_cast<std::size_t>(r)];
      acc.ll += detail::obs_grad(params, data.attributes.row(n),
                                 data.choices[static_cast<std::size_t>(n)],
                                 design, kind, acc.grad, /*want_theta=*/true);
    }
  };
  GradResult result = chunked_reduce<GradResult>(
      static_cast<Eigen::Index>(rows.size()), per_chunk,
      [](GradResult& acc, const GradResult& part) {
        acc.ll += part.ll;
        acc.grad.add(part.grad);
      },
      make_zero);
  if (!result.grad.all_finite()) {
    throw Error("grad_loglik: non-finite gradient entry");
  }
  return result;
}

inline GradResult grad_loglik(const Parameters& params, const Dataset& data,
                              const DesignIndex& design,
                              const ModelKind& kind) {
  const auto rows = all_rows(data);
  return grad_loglik(params, data, rows, design, kind);
}

/// Chain-rule backprop through the sigmoid layers of the MLP baseline.
inline GradResult mlp_grad(const Parameters& params, const Dataset& data,
                           std::span<const Eigen::Index> rows,
                           const DesignIndex& design) {
  return grad_loglik(params, data, rows, design,
                     ModelKind::mlp(params.depth()));
}

/// Central finite differences over every coordinate; O(#params) forward
/// passes. Test oracle only -- it never touches the analytic path.
inline Gradient finite_diff_grad(const Parameters& params, const Dataset& data,
                                 std::span<const Eigen::Index> rows,
                                 const DesignIndex& design,
                                 const ModelKind& kind, double step) {
  if (step <= 0.0) throw Error("finite_diff_grad: step must be positive");
  Gradient g = Gradient::zeros_like(params);
  Parameters work = params;
  auto central = [&](double& coord, double& slot) {
    const double saved = coord;
    coord = saved + step;
    const double up = log_likelihood(work, data, rows, design, kind);
    coord = saved - step;
    const double down = log_likelihood(work, data, rows, design, kind);
    coord = saved;
    slot = (up - down) / (2.0 * step);
  };
  for (Eigen::Index c = 0; c < work.beta.size(); ++c) {
    central(work.beta(c), g.beta(c));
  }
  for (std::size_t m = 0; m < work.thetas.size(); ++m) {
    for (Eigen::Index r = 0; r < work.thetas[m].rows(); ++r) {
      for (Eigen::Index c = 0; c < work.thetas[m].cols(); ++c) {
        central(work.thetas[m](r, c), g.thetas[m](r, c));
      }
    }
  }
  return g;
}

/// N x k matrix of per-observation beta scores at fixed parameters;
/// rows feed the robust sandwich estimator.
inline Eigen::MatrixXd score_matrix(const Parameters& params,
                                    const Dataset& data,
                                    const DesignIndex& design,
                                    const ModelKind& kind) {
  Eigen::MatrixXd scores(data.n_obs, design.beta_length());
  Gradient scratch = Gradient::zeros_like(params);
  for (Eigen::Index n = 0; n < data.n_obs; ++n) {
    scratch.beta.setZero();
    detail::obs_grad(params, data.attributes.row(n),
                     data.choices[static_cast<std::size_t>(n)], design, kind,
                     scratch, /*want_theta=*/false);
    scores.row(n) = scratch.beta;
  }
  return scores;
}

}  // namespace reslogit

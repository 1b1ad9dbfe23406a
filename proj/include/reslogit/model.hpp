#pragma once

// Forward computation: linear utilities, the residual-layer recursion,
// choice probabilities and log-likelihood, plus the plain MLP baseline.
//
// The residual recursion per layer m = 1..M is
//     hidden(m) = hidden(m-1) - softplus(theta(m) * hidden(m-1))
// with hidden(0) equal to the linear utilities. The residual correction
// applied to the utilities is the accumulated negative softplus sum,
// i.e. residual = hidden(M) - utilities, and choice probabilities are
// the softmax of hidden(M).
//
// All functions here are pure; concurrent invocation is safe.

#include <span>
#include <vector>

#include "reslogit/design.hpp"
#include "reslogit/math.hpp"
#include "reslogit/parallel.hpp"
#include "reslogit/types.hpp"

namespace reslogit {

/// Everything produced by one observation's forward pass.
struct ForwardTrace {
  Eigen::VectorXd utilities;            // V, length J
  std::vector<Eigen::VectorXd> hidden;  // h(0..M); hidden[0] == utilities
  Eigen::VectorXd residual;             // g = hidden(M) - utilities, <= 0
  Eigen::VectorXd probs;                // softmax(hidden(M)), sums to 1
};

/// MLP baseline weights: square J x J layers with logistic activations.
struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;
};

/// V_j = ASC_j + sum_k beta_kj * x_k; the reference alternative gets 0.
/// `row` is a full attribute row of the dataset; the design picks the
/// columns that enter the model.
inline Eigen::VectorXd linear_utility(const Parameters& params,
                                      const Eigen::VectorXd& row,
                                      const DesignIndex& design) {
  if (params.beta.size() != design.beta_length()) {
    throw Error("linear_utility: beta length " +
                std::to_string(params.beta.size()) + ", design expects " +
                std::to_string(design.beta_length()));
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(design.n_alts);
  for (int j = 0; j < design.n_alts; ++j) {
    if (j == design.reference_alt) continue;
    double u = design.include_asc ? params.beta(design.asc_index(j)) : 0.0;
    for (Eigen::Index k = 0; k < design.n_vars(); ++k) {
      const int col = design.var_columns[static_cast<std::size_t>(k)];
      if (col >= row.size()) {
        throw Error("linear_utility: attribute row too short");
      }
      u += params.beta(design.beta_index(k, j)) * row(col);
    }
    v(j) = u;
  }
  return v;
}

/// Runs the residual recursion and fills the complete trace.
inline ForwardTrace residual_forward(std::span<const Eigen::MatrixXd> thetas,
                                     const Eigen::VectorXd& utilities) {
  const Eigen::Index j = utilities.size();
  if (!utilities.allFinite()) {
    throw Error("residual_forward: non-finite utilities");
  }
  ForwardTrace trace;
  trace.utilities = utilities;
  trace.hidden.reserve(thetas.size() + 1);
  trace.hidden.push_back(utilities);
  for (std::size_t m = 0; m < thetas.size(); ++m) {
    const auto& theta = thetas[m];
    if (theta.rows() != j || theta.cols() != j) {
      throw Error("residual_forward: layer " + std::to_string(m + 1) +
                  " matrix is " + std::to_string(theta.rows()) + "x" +
                  std::to_string(theta.cols()) + ", utilities have length " +
                  std::to_string(j));
    }
    const Eigen::VectorXd z = theta * trace.hidden.back();
    Eigen::VectorXd next(j);
    for (Eigen::Index a = 0; a < j; ++a) {
      next(a) = trace.hidden.back()(a) - softplus(z(a));
    }
    if (!next.allFinite()) {
      throw Error("residual_forward: non-finite hidden state after layer " +
                  std::to_string(m + 1));
    }
    trace.hidden.push_back(std::move(next));
  }
  trace.residual = trace.hidden.back() - utilities;
  trace.probs = softmax(trace.hidden.back());
  return trace;
}

/// P = softmax(V + g). Shift-invariant in both arguments.
inline Eigen::VectorXd choice_probabilities(const Eigen::VectorXd& utilities,
                                            const Eigen::VectorXd& residual) {
  if (utilities.size() != residual.size()) {
    throw Error("choice_probabilities: length mismatch");
  }
  return softmax(utilities + residual);
}

/// Product-of-Q route to the same probabilities:
///   P(i) ~ exp(V_i) * prod_m Q_i(m),  Q(m) = 1 / (1 + exp(theta(m) h(m-1))).
/// Deliberately computed through the naive 1/(1+exp(z)) kernel (with the
/// asymptote ln Q -> -z taking over once exp would overflow) so it stays
/// an independent cross-check of the softplus route.
inline Eigen::VectorXd q_form_probabilities(
    const Eigen::VectorXd& utilities, std::span<const Eigen::MatrixXd> thetas,
    const ForwardTrace& trace) {
  const Eigen::Index j = utilities.size();
  if (trace.hidden.size() != thetas.size() + 1) {
    throw Error("q_form_probabilities: trace depth mismatch");
  }
  Eigen::VectorXd log_q_sum = Eigen::VectorXd::Zero(j);
  for (std::size_t m = 0; m < thetas.size(); ++m) {
    const Eigen::VectorXd z = thetas[m] * trace.hidden[m];
    for (Eigen::Index a = 0; a < j; ++a) {
      log_q_sum(a) +=
          z(a) > 700.0 ? -z(a) : std::log(1.0 / (1.0 + std::exp(z(a))));
    }
  }
  return softmax(utilities + log_q_sum);
}

/// MLP forward pass: h(m) = sigmoid(W(m) h(m-1)), probabilities are the
/// softmax of the last hidden state. No skip connections.
inline Eigen::VectorXd mlp_forward(const MlpParams& params,
                                   const Eigen::VectorXd& utilities) {
  Eigen::VectorXd h = utilities;
  for (std::size_t m = 0; m < params.weights.size(); ++m) {
    const auto& w = params.weights[m];
    if (w.rows() != h.size() || w.cols() != h.size()) {
      throw Error("mlp_forward: layer " + std::to_string(m + 1) +
                  " weight matrix has wrong shape");
    }
    const Eigen::VectorXd z = w * h;
    for (Eigen::Index a = 0; a < h.size(); ++a) h(a) = sigmoid(z(a));
  }
  return softmax(h);
}

namespace detail {

/// Pre-softmax scores for one observation under any model family.
inline Eigen::VectorXd forward_scores(const Parameters& params,
                                      const Eigen::VectorXd& row,
                                      const DesignIndex& design,
                                      const ModelKind& kind) {
  Eigen::VectorXd v = linear_utility(params, row, design);
  switch (kind.family) {
    case ModelFamily::mnl:
      return v;
    case ModelFamily::reslogit: {
      ForwardTrace trace = residual_forward(params.thetas, v);
      return trace.hidden.back();
    }
    case ModelFamily::mlp: {
      for (const auto& w : params.thetas) {
        const Eigen::VectorXd z = w * v;
        for (Eigen::Index a = 0; a < v.size(); ++a) v(a) = sigmoid(z(a));
      }
      return v;
    }
  }
  throw Error("forward_scores: unknown model family");
}

}  // namespace detail

/// Choice probabilities for one observation row.
inline Eigen::VectorXd predict_probs(const Parameters& params,
                                     const Eigen::VectorXd& row,
                                     const DesignIndex& design,
                                     const ModelKind& kind) {
  return softmax(detail::forward_scores(params, row, design, kind));
}

/// Log-likelihood over a subset of rows; log probabilities come from a
/// log-softmax, never from the log of a materialized probability.
inline double log_likelihood(const Parameters& params, const Dataset& data,
                             std::span<const Eigen::Index> rows,
                             const DesignIndex& design, const ModelKind& kind) {
  auto per_chunk = [&](Eigen::Index begin, Eigen::Index end, double& acc) {
    for (Eigen::Index r = begin; r < end; ++r) {
      const Eigen::Index n = rows[static_cast<std::size_t>(r)];
      const Eigen::VectorXd scores =
          detail::forward_scores(params, data.attributes.row(n), design, kind);
      acc += log_softmax_at(scores, data.choices[static_cast<std::size_t>(n)]);
    }
  };
  const double ll = chunked_reduce<double>(
      static_cast<Eigen::Index>(rows.size()), per_chunk,
      [](double& acc, double part) { acc += part; }, [] { return 0.0; });
  if (!std::isfinite(ll)) {
    throw Error("log_likelihood: non-finite value (probability underflow)");
  }
  return ll;
}

inline std::vector<Eigen::Index> all_rows(const Dataset& data) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.n_obs));
  for (Eigen::Index n = 0; n < data.n_obs; ++n) {
    rows[static_cast<std::size_t>(n)] = n;
  }
  return rows;
}

/// Log-likelihood over the whole dataset.
inline double log_likelihood(const Parameters& params, const Dataset& data,
                             const DesignIndex& design, const ModelKind& kind) {
  const auto rows = all_rows(data);
  return log_likelihood(params, data, rows, design, kind);
}

}  // namespace reslogit

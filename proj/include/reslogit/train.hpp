#pragma once

// Mini-batch SGD with RMSprop preconditioning, deterministic
// train/validation splitting, per-epoch validation checkpoints and early
// stopping on the validation log-likelihood.
//
// Identical (dataset, spec, kind, config) input yields a bitwise
// identical result: shuffling, splitting and weight init all run on the
// self-contained generator in rng.hpp, and batch gradients reduce in a
// fixed chunk order.

#include <optional>
#include <vector>

#include "reslogit/grad.hpp"
#include "reslogit/rng.hpp"
#include "reslogit/stats.hpp"

namespace reslogit {

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 1e-3;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  int max_iterations = 200;  // epochs
  int patience = 10;         // checkpoints without improvement
  std::uint64_t seed = 0;
  double split_fraction = 0.7;

  void validate() const {
    if (batch_size < 1) throw Error("config: batch_size must be >= 1");
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
      throw Error("config: split_fraction must be in (0, 1)");
    }
    if (!(rmsprop_decay > 0.0 && rmsprop_decay < 1.0)) {
      throw Error("config: rmsprop_decay must be in (0, 1)");
    }
    if (rmsprop_epsilon <= 0.0) throw Error("config: rmsprop_epsilon must be > 0");
    if (learning_rate <= 0.0) throw Error("config: learning_rate must be > 0");
    if (max_iterations < 1) throw Error("config: max_iterations must be >= 1");
    if (patience < 1) throw Error("config: patience must be >= 1");
  }
};

struct Checkpoint {
  int iteration = 0;  // epoch number
  double train_ll = 0.0;
  double valid_ll = 0.0;
  double valid_error = 0.0;  // 1 - accuracy
};

struct TrainingCurve {
  std::vector<Checkpoint> checkpoints;
};

/// Seeded shuffle split into floor(fraction * N) training rows and the
/// remainder. Same seed, same partition.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& data,
                                                 double fraction,
                                                 std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error("split_dataset: fraction must be in (0, 1)");
  }
  const Eigen::Index n_train = static_cast<Eigen::Index>(
      std::floor(fraction * static_cast<double>(data.n_obs)));
  if (n_train < 1 || n_train >= data.n_obs) {
    throw Error("split_dataset: split leaves an empty side");
  }
  std::vector<Eigen::Index> order = all_rows(data);
  SplitMix64 rng(seed);
  shuffle(order, rng);
  const std::vector<Eigen::Index> train_rows(order.begin(),
                                             order.begin() + n_train);
  const std::vector<Eigen::Index> valid_rows(order.begin() + n_train,
                                             order.end());
  return {data.subset(train_rows), data.subset(valid_rows)};
}

/// beta = 0 for every family; residual matrices start at the identity,
/// MLP weights at seeded uniform(-1/sqrt(J), 1/sqrt(J)).
inline Parameters init_parameters(const UtilitySpec& spec,
                                  const ModelKind& kind, int n_alts,
                                  std::uint64_t seed) {
  kind.validate();
  Parameters params;
  params.beta = Eigen::VectorXd::Zero(
      (static_cast<Eigen::Index>(spec.variables.size()) +
       (spec.include_asc ? 1 : 0)) *
      (n_alts - 1));
  params.thetas.reserve(static_cast<std::size_t>(kind.depth));
  if (kind.family == ModelFamily::mlp) {
    SplitMix64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(n_alts));
    for (int m = 0; m < kind.depth; ++m) {
      Eigen::MatrixXd w(n_alts, n_alts);
      for (Eigen::Index r = 0; r < n_alts; ++r) {
        for (Eigen::Index c = 0; c < n_alts; ++c) {
          w(r, c) = rng.next_double(-bound, bound);
        }
      }
      params.thetas.push_back(std::move(w));
    }
  } else {
    for (int m = 0; m < kind.depth; ++m) {
      params.thetas.emplace_back(
          Eigen::MatrixXd::Identity(n_alts, n_alts));
    }
  }
  return params;
}

/// RMSprop accumulators, shaped like the parameters.
struct RmspropState {
  Eigen::VectorXd r_beta;
  std::vector<Eigen::MatrixXd> r_thetas;

  static RmspropState zeros_like(const Parameters& params) {
    RmspropState s;
    s.r_beta = Eigen::VectorXd::Zero(params.beta.size());
    s.r_thetas.reserve(params.thetas.size());
    for (const auto& t : params.thetas) {
      s.r_thetas.emplace_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
    }
    return s;
  }
};

/// One preconditioned ascent step on the log-likelihood:
///   r <- decay r + (1 - decay) grad^2
///   param <- param + lr * grad / (sqrt(r) + eps)
/// (ascent on LL is descent on -LL). Rejects non-finite updates.
inline void rmsprop_step(Parameters& params, const Gradient& grad,
                         RmspropState& state, const TrainConfig& cfg) {
  if (!grad.all_finite()) throw Error("rmsprop_step: non-finite gradient");
  const double rho = cfg.rmsprop_decay;
  auto update = [&](double& param, double g, double& r) {
    r = rho * r + (1.0 - rho) * g * g;
    param += cfg.learning_rate * g / (std::sqrt(r) + cfg.rmsprop_epsilon);
  };
  for (Eigen::Index c = 0; c < params.beta.size(); ++c) {
    update(params.beta(c), grad.beta(c), state.r_beta(c));
  }
  for (std::size_t m = 0; m < params.thetas.size(); ++m) {
    for (Eigen::Index r = 0; r < params.thetas[m].rows(); ++r) {
      for (Eigen::Index c = 0; c < params.thetas[m].cols(); ++c) {
        update(params.thetas[m](r, c), grad.thetas[m](r, c),
               state.r_thetas[m](r, c));
      }
    }
  }
  if (!params.all_finite()) {
    throw Error("rmsprop_step: update produced non-finite parameters");
  }
}

/// Full estimation loop. Attributes are standardized internally
/// (centered only when ASCs are present, always scaled) and the returned
/// fit is mapped back to raw-data units, standard errors included.
/// `initial` overrides init_parameters when supplied (standardized
/// scale); used by the degradation experiments.
inline std::pair<FitResult, TrainingCurve> train(
    const Dataset& data, const UtilitySpec& spec, const ModelKind& kind,
    const TrainConfig& cfg,
    const std::optional<Parameters>& initial = std::nullopt) {
  cfg.validate();
  kind.validate();
  data.validate();
  spec.validate(data);

  auto [train_raw, valid_raw] = split_dataset(data, cfg.split_fraction, cfg.seed);
  if (cfg.batch_size > train_raw.n_obs) {
    throw Error("config: batch_size exceeds the training-set size");
  }

  const Scaler scaler = Scaler::fit(train_raw, spec.include_asc);
  const Dataset train_set = scaler.transform(train_raw);
  const Dataset valid_set = scaler.transform(valid_raw);
  const DesignIndex design = build_design(train_set, spec);

  Parameters params =
      initial ? *initial
              : init_parameters(spec, kind, design.n_alts, cfg.seed);
  params.validate(design.beta_length(), design.n_alts);
  if (params.depth() != kind.depth) {
    throw Error("train: parameter depth does not match model kind");
  }
  RmspropState state = RmspropState::zeros_like(params);

  const auto train_rows = all_rows(train_set);
  const auto valid_rows = all_rows(valid_set);

  TrainingCurve curve;
  auto checkpoint = [&](int epoch) {
    Checkpoint c;
    c.iteration = epoch;
    c.train_ll = log_likelihood(params, train_set, design, kind);
    c.valid_ll = log_likelihood(params, valid_set, design, kind);
    c.valid_error = 1.0 - accuracy(params, valid_set, design, kind);
    curve.checkpoints.push_back(c);
    return c;
  };

  Parameters best_params = params;
  Checkpoint best = checkpoint(0);
  int stale = 0;
  int epochs_run = 0;
  bool early_stopped = false;
  bool diverged = false;

  std::vector<Eigen::Index> order = train_rows;
  SplitMix64 shuffle_rng(cfg.seed ^ 0xA5A5A5A5A5A5A5A5ULL);

  for (int epoch = 1; epoch <= cfg.max_iterations && !diverged; ++epoch) {
    shuffle(order, shuffle_rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::span<const Eigen::Index> batch(order.data() + start, end - start);
      try {
        GradResult res = grad_loglik(params, train_set, batch, design, kind);
        res.grad.scale(1.0 / static_cast<double>(batch.size()));
        rmsprop_step(params, res.grad, state, cfg);
      } catch (const Error&) {
        diverged = true;
        break;
      }
    }
    if (diverged) break;
    epochs_run = epoch;

    Checkpoint c;
    try {
      c = checkpoint(epoch);
    } catch (const Error&) {
      diverged = true;
      break;
    }
    if (!std::isfinite(c.valid_ll) || !std::isfinite(c.train_ll)) {
      diverged = true;
      break;
    }
    if (c.valid_ll > best.valid_ll) {
      best = c;
      best_params = params;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      early_stopped = true;
      break;
    }
  }

  // Post-estimation at the best validation snapshot, still standardized.
  FitResult fit;
  fit.kind = kind;
  fit.scaler = scaler;
  fit.valid_ll = best.valid_ll;
  fit.epochs_run = epochs_run;
  fit.early_stopped = early_stopped;
  fit.diverged = diverged;
  fit.final_ll = log_likelihood(best_params, train_set, design, kind);
  fit.k_parameters = count_parameters(spec, kind, design.n_alts);
  fit.aic = aic(fit.k_parameters, fit.final_ll);
  fit.validation_accuracy = accuracy(best_params, valid_set, design, kind);

  // Covariances are computed on the standardized scale where the
  // finite-difference step is well conditioned, then mapped back to raw
  // units through the exact linear reparametrization.
  const Eigen::MatrixXd h = hessian(best_params, train_set, design, kind);
  const Eigen::MatrixXd scores = score_matrix(best_params, train_set, design, kind);
  auto [cov, cov_ok] = detail::negative_inverse(h);
  const Eigen::MatrixXd b = scores.transpose() * scores;
  const Eigen::MatrixXd sandwich = cov * b * cov;
  const Eigen::MatrixXd a = raw_scale_transform(design, scaler);

  fit.params = destandardize_parameters(best_params, design, scaler);
  const StdErrors raw_classical =
      detail::errors_from_covariance(a * cov * a.transpose(), cov_ok);
  const StdErrors raw_robust =
      detail::errors_from_covariance(a * sandwich * a.transpose(), cov_ok);
  fit.std_err = raw_classical.values;
  fit.se_ok = raw_classical.ok;
  fit.robust_std_err = raw_robust.values;
  fit.robust_se_ok = raw_robust.ok;

  fit.significant.assign(static_cast<std::size_t>(fit.params.beta.size()), false);
  for (Eigen::Index c = 0; c < fit.params.beta.size(); ++c) {
    if (raw_classical.ok[static_cast<std::size_t>(c)] &&
        std::abs(fit.params.beta(c)) > kZCritical5Pct * fit.std_err(c)) {
      fit.significant[static_cast<std::size_t>(c)] = true;
    }
  }
  return {fit, curve};
}

}  // namespace reslogit

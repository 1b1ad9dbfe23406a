#pragma once

// Core domain types shared by every model family. All types are
// immutable after construction/validation and safe to share across
// concurrent readers.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reslogit/math.hpp"

namespace reslogit {

/// One observation per row: attribute matrix, chosen alternative index
/// and the labels of the J alternatives.
struct Dataset {
  Eigen::Index n_obs = 0;
  Eigen::Index n_alts = 0;
  std::vector<std::string> attribute_names;
  Eigen::MatrixXd attributes;  // n_obs x K
  std::vector<int> choices;    // values in [0, n_alts)
  std::vector<std::string> alt_names;

  Eigen::Index n_vars() const {
    return static_cast<Eigen::Index>(attribute_names.size());
  }

  /// Checks every structural invariant; throws Error naming the first
  /// violation.
  void validate() const {
    if (n_alts < 2) {
      throw Error("dataset: need at least 2 alternatives, got " +
                  std::to_string(n_alts));
    }
    if (n_obs <= 0) {
      throw Error("dataset: empty dataset");
    }
    if (attributes.rows() != n_obs || attributes.cols() != n_vars()) {
      throw Error("dataset: attribute matrix is " +
                  std::to_string(attributes.rows()) + "x" +
                  std::to_string(attributes.cols()) + ", expected " +
                  std::to_string(n_obs) + "x" + std::to_string(n_vars()));
    }
    if (!attributes.allFinite()) {
      throw Error("dataset: attribute matrix contains non-finite values");
    }
    if (static_cast<Eigen::Index>(choices.size()) != n_obs) {
      throw Error("dataset: choice vector length mismatch");
    }
    if (static_cast<Eigen::Index>(alt_names.size()) != n_alts) {
      throw Error("dataset: alternative label count mismatch");
    }
    for (Eigen::Index n = 0; n < n_obs; ++n) {
      const int c = choices[static_cast<std::size_t>(n)];
      if (c < 0 || c >= n_alts) {
        throw Error("dataset: row " + std::to_string(n) +
                    " has choice index " + std::to_string(c) +
                    " outside [0, " + std::to_string(n_alts) + ")");
      }
    }
  }

  int column_of(const std::string& name) const {
    for (std::size_t k = 0; k < attribute_names.size(); ++k) {
      if (attribute_names[k] == name) return static_cast<int>(k);
    }
    throw Error("dataset: unknown variable '" + name + "'");
  }

  /// Selects a subset of rows (in the given order) into a new dataset.
  Dataset subset(const std::vector<Eigen::Index>& rows) const {
    Dataset out;
    out.n_obs = static_cast<Eigen::Index>(rows.size());
    out.n_alts = n_alts;
    out.attribute_names = attribute_names;
    out.alt_names = alt_names;
    out.attributes.resize(out.n_obs, n_vars());
    out.choices.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.attributes.row(static_cast<Eigen::Index>(r)) = attributes.row(rows[r]);
      out.choices[r] = choices[static_cast<std::size_t>(rows[r])];
    }
    return out;
  }
};

/// Which variables enter the utilities, which alternative is pinned to
/// zero for identifiability, and whether alternative-specific constants
/// are included.
struct UtilitySpec {
  std::vector<std::string> variables;
  int reference_alt = 0;
  bool include_asc = true;

  void validate(const Dataset& data) const {
    if (reference_alt < 0 || reference_alt >= data.n_alts) {
      throw Error("utility spec: reference alternative " +
                  std::to_string(reference_alt) + " out of range [0, " +
                  std::to_string(data.n_alts) + ")");
    }
    for (const auto& v : variables) {
      data.column_of(v);  // throws on unknown name
    }
  }
};

enum class ModelFamily { mnl, reslogit, mlp };

inline std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::mnl: return "mnl";
    case ModelFamily::reslogit: return "reslogit";
    case ModelFamily::mlp: return "mlp";
  }
  return "?";
}

struct ModelKind {
  ModelFamily family = ModelFamily::mnl;
  int depth = 0;  // number of residual / hidden layers M

  static ModelKind mnl() { return {ModelFamily::mnl, 0}; }
  static ModelKind reslogit(int m) { return {ModelFamily::reslogit, m}; }
  static ModelKind mlp(int m) { return {ModelFamily::mlp, m}; }

  void validate() const {
    if (depth < 0) throw Error("model kind: negative depth");
    if (family == ModelFamily::mnl && depth != 0) {
      throw Error("model kind: mnl implies depth 0");
    }
  }
};

/// Full parameter set: the beta block shared by all families plus M
/// square J x J matrices -- residual matrices for ResLogit, layer
/// weights for the MLP baseline, empty for MNL.
struct Parameters {
  Eigen::VectorXd beta;
  std::vector<Eigen::MatrixXd> thetas;

  int depth() const { return static_cast<int>(thetas.size()); }

  void validate(Eigen::Index beta_length, Eigen::Index n_alts) const {
    if (beta.size() != beta_length) {
      throw Error("parameters: beta length " + std::to_string(beta.size()) +
                  ", expected " + std::to_string(beta_length));
    }
    if (!beta.allFinite()) throw Error("parameters: non-finite beta entry");
    for (std::size_t m = 0; m < thetas.size(); ++m) {
      const auto& t = thetas[m];
      if (t.rows() != n_alts || t.cols() != n_alts) {
        throw Error("parameters: layer " + std::to_string(m + 1) +
                    " matrix is " + std::to_string(t.rows()) + "x" +
                    std::to_string(t.cols()) + ", expected " +
                    std::to_string(n_alts) + "x" + std::to_string(n_alts));
      }
      if (!t.allFinite()) {
        throw Error("parameters: non-finite entry in layer " +
                    std::to_string(m + 1));
      }
    }
  }

  bool all_finite() const {
    if (!beta.allFinite()) return false;
    for (const auto& t : thetas) {
      if (!t.allFinite()) return false;
    }
    return true;
  }
};

/// Per-variable affine transform recorded at training time so reports
/// can map coefficients back to raw data units. Centering is only used
/// when the model has ASCs; otherwise the shift could not be folded
/// back into any coefficient.
struct Scaler {
  Eigen::VectorXd center;  // K
  Eigen::VectorXd scale;   // K, strictly positive

  static Scaler identity(Eigen::Index k) {
    Scaler s;
    s.center = Eigen::VectorXd::Zero(k);
    s.scale = Eigen::VectorXd::Ones(k);
    return s;
  }

  static Scaler fit(const Dataset& data, bool with_center) {
    Scaler s;
    const Eigen::Index k = data.n_vars();
    s.center = Eigen::VectorXd::Zero(k);
    s.scale = Eigen::VectorXd::Ones(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto col = data.attributes.col(j);
      const double mean = col.mean();
      const double var =
          (col.array() - mean).square().sum() / static_cast<double>(data.n_obs);
      const double sd = std::sqrt(var);
      if (with_center) s.center(j) = mean;
      if (sd > 1e-12) s.scale(j) = sd;  // constant columns are left unscaled
    }
    return s;
  }

  Dataset transform(const Dataset& data) const {
    Dataset out = data;
    for (Eigen::Index j = 0; j < data.n_vars(); ++j) {
      out.attributes.col(j) =
          (data.attributes.col(j).array() - center(j)) / scale(j);
    }
    return out;
  }

  bool is_identity() const {
    return center.isZero(0.0) && (scale.array() == 1.0).all();
  }
};

}  // namespace reslogit

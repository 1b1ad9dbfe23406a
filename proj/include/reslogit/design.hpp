#pragma once

// Design-matrix bookkeeping: the bijection between (variable,
// non-reference alternative) pairs plus ASC slots and flat beta indices.
//
// Layout, variable-major then alternative:
//   [var0 x alt, var1 x alt, ..., ASC x alt]
// where "x alt" runs over the non-reference alternatives in increasing
// index order. The reference alternative has no coefficients; its
// contributions are implicitly zero.

#include <string>
#include <vector>

#include "reslogit/types.hpp"

namespace reslogit {

struct DesignIndex {
  std::vector<std::string> variables;
  std::vector<int> var_columns;  // dataset column per variable
  int n_alts = 0;
  int reference_alt = 0;
  bool include_asc = true;

  Eigen::Index n_vars() const {
    return static_cast<Eigen::Index>(variables.size());
  }

  Eigen::Index beta_length() const {
    return (n_vars() + (include_asc ? 1 : 0)) * (n_alts - 1);
  }

  /// Slot of a non-reference alternative within a coefficient block.
  Eigen::Index alt_slot(int alt) const {
    if (alt == reference_alt || alt < 0 || alt >= n_alts) {
      throw Error("design: alternative " + std::to_string(alt) +
                  " carries no coefficient");
    }
    return alt < reference_alt ? alt : alt - 1;
  }

  Eigen::Index beta_index(Eigen::Index var, int alt) const {
    if (var < 0 || var >= n_vars()) {
      throw Error("design: variable position " + std::to_string(var) +
                  " out of range");
    }
    return var * (n_alts - 1) + alt_slot(alt);
  }

  Eigen::Index asc_index(int alt) const {
    if (!include_asc) throw Error("design: model has no ASCs");
    return n_vars() * (n_alts - 1) + alt_slot(alt);
  }

  struct Slot {
    bool is_asc;
    Eigen::Index var;  // variable position; unused when is_asc
    int alt;
  };

  /// Inverse of beta_index/asc_index.
  Slot describe(Eigen::Index index) const {
    if (index < 0 || index >= beta_length()) {
      throw Error("design: beta index " + std::to_string(index) +
                  " out of range");
    }
    const Eigen::Index block = index / (n_alts - 1);
    const Eigen::Index slot = index % (n_alts - 1);
    const int alt = slot < reference_alt ? static_cast<int>(slot)
                                         : static_cast<int>(slot) + 1;
    if (block < n_vars()) return {false, block, alt};
    return {true, -1, alt};
  }

  std::string slot_name(Eigen::Index index) const {
    const Slot s = describe(index);
    return s.is_asc ? "asc" : variables[static_cast<std::size_t>(s.var)];
  }
};

/// Precomputes column offsets for a validated spec.
inline DesignIndex build_design(const Dataset& data, const UtilitySpec& spec) {
  spec.validate(data);
  DesignIndex d;
  d.variables = spec.variables;
  d.var_columns.reserve(spec.variables.size());
  for (const auto& v : spec.variables) d.var_columns.push_back(data.column_of(v));
  d.n_alts = static_cast<int>(data.n_alts);
  d.reference_alt = spec.reference_alt;
  d.include_asc = spec.include_asc;
  return d;
}

/// Total estimated parameter count: the beta block for MNL, plus
/// depth * J^2 matrix entries for ResLogit and MLP.
inline Eigen::Index count_parameters(const UtilitySpec& spec,
                                     const ModelKind& kind, int n_alts) {
  kind.validate();
  const Eigen::Index beta_len =
      (static_cast<Eigen::Index>(spec.variables.size()) +
       (spec.include_asc ? 1 : 0)) *
      (n_alts - 1);
  if (kind.family == ModelFamily::mnl) return beta_len;
  return beta_len + static_cast<Eigen::Index>(kind.depth) * n_alts * n_alts;
}

}  // namespace reslogit

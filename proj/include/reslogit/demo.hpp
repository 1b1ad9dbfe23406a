#pragma once

// Built-in red/blue bus demonstration. Four scenario blocks are computed
// from hard-coded residual matrices and checked against their published
// reference values; any deviation is a regression in the math core.
//
// Reference entries are printed to 2 or 3 decimals, so each value is
// checked to half a unit of its printed precision, never looser than
// 5e-3 and at 1e-3 for every 3-decimal entry.

#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include "reslogit/model.hpp"

namespace reslogit {

struct DemoBlock {
  std::string title;
  std::vector<std::string> alts;
  Eigen::VectorXd utilities;
  std::optional<Eigen::MatrixXd> theta;  // one residual layer when present

  Eigen::VectorXd expected_exp_weight;
  Eigen::VectorXd expected_probs;
  std::optional<Eigen::VectorXd> expected_residual;
  double prob_tol = 1e-3;
};

inline std::vector<DemoBlock> redblue_blocks() {
  std::vector<DemoBlock> blocks;

  DemoBlock s1;
  s1.title = "Scenario 1";
  s1.alts = {"car", "bus"};
  s1.utilities = Eigen::VectorXd::Constant(2, 1.0);
  s1.expected_exp_weight = Eigen::VectorXd::Constant(2, 2.718);
  s1.expected_probs = Eigen::VectorXd::Constant(2, 0.5);
  blocks.push_back(s1);

  DemoBlock s2;
  s2.title = "Scenario 2";
  s2.alts = {"car", "red bus", "blue bus"};
  s2.utilities = Eigen::VectorXd::Constant(3, 1.0);
  s2.expected_exp_weight = Eigen::VectorXd::Constant(3, 2.718);
  s2.expected_probs = Eigen::VectorXd::Constant(3, 0.33);
  s2.prob_tol = 5e-3;  // table prints 2 decimals here
  blocks.push_back(s2);

  DemoBlock s3a;
  s3a.title = "Scenario 3 (competing car/bus)";
  s3a.alts = {"car", "red bus", "blue bus"};
  s3a.utilities = Eigen::VectorXd::Constant(3, 1.0);
  Eigen::MatrixXd competing(3, 3);
  competing << 0, -1, -1,
              -1,  0,  1,
              -1,  1,  0;
  s3a.theta = competing;
  s3a.expected_residual = Eigen::Vector3d(-0.127, -0.693, -0.693);
  s3a.expected_exp_weight = Eigen::Vector3d(2.394, 1.359, 1.359);
  s3a.expected_probs = Eigen::Vector3d(0.468, 0.265, 0.265);
  blocks.push_back(s3a);

  DemoBlock s3b;
  s3b.title = "Scenario 3 (non-competing car/bus)";
  s3b.alts = {"car", "red bus", "blue bus"};
  s3b.utilities = Eigen::VectorXd::Constant(3, 1.0);
  Eigen::MatrixXd noncompeting(3, 3);
  noncompeting << 0, 0, 0,
                  0, 0, 1,
                  0, 1, 0;
  s3b.theta = noncompeting;
  s3b.expected_residual = Eigen::Vector3d(-0.693, -1.313, -1.313);
  s3b.expected_exp_weight = Eigen::Vector3d(1.359, 0.731, 0.731);
  s3b.expected_probs = Eigen::Vector3d(0.482, 0.259, 0.259);
  blocks.push_back(s3b);

  return blocks;
}

struct DemoResult {
  Eigen::VectorXd residual;    // zero when the block has no layer
  Eigen::VectorXd exp_weight;  // exp(V + g)
  Eigen::VectorXd probs;
  bool has_residual = false;
};

inline DemoResult compute_demo_block(const DemoBlock& block) {
  DemoResult out;
  if (block.theta) {
    std::vector<Eigen::MatrixXd> layers{*block.theta};
    const ForwardTrace trace = residual_forward(layers, block.utilities);
    out.residual = trace.residual;
    out.probs = trace.probs;
    out.has_residual = true;
  } else {
    out.residual = Eigen::VectorXd::Zero(block.utilities.size());
    out.probs = softmax(block.utilities);
  }
  out.exp_weight = (block.utilities + out.residual).array().exp();
  return out;
}

inline bool check_demo_block(const DemoBlock& block, const DemoResult& result,
                             std::ostream& err) {
  bool ok = true;
  auto check = [&](const char* what, double got, double want, double tol) {
    if (std::abs(got - want) > tol) {
      err << block.title << ": " << what << " = " << got << ", expected "
          << want << " within " << tol << "\n";
      ok = false;
    }
  };
  for (Eigen::Index j = 0; j < block.utilities.size(); ++j) {
    if (block.expected_residual) {
      check("residual", result.residual(j), (*block.expected_residual)(j), 1e-3);
    }
    check("exp(V+g)", result.exp_weight(j), block.expected_exp_weight(j), 1e-3);
    check("probability", result.probs(j), block.expected_probs(j),
          block.prob_tol);
  }
  return ok;
}

/// Prints all four scenario blocks and verifies every value. Returns
/// false (after reporting the offending entries) on any deviation.
inline bool run_redblue_demo(std::ostream& out, std::ostream& err) {
  bool all_ok = true;
  out << "Red/blue bus choice scenarios, 1-layer residual correction\n";
  for (const auto& block : redblue_blocks()) {
    const DemoResult result = compute_demo_block(block);
    out << "\n" << block.title << "\n";
    out << std::left << std::setw(10) << "choice" << std::right
        << std::setw(8) << "V" << std::setw(10) << "g" << std::setw(12)
        << "exp(V+g)" << std::setw(8) << "P" << "\n";
    for (Eigen::Index j = 0; j < block.utilities.size(); ++j) {
      out << std::left << std::setw(10) << block.alts[static_cast<std::size_t>(j)]
          << std::right << std::fixed << std::setprecision(3) << std::setw(8)
          << block.utilities(j);
      if (result.has_residual) {
        out << std::setw(10) << result.residual(j);
      } else {
        out << std::setw(10) << "-";
      }
      out << std::setw(12) << result.exp_weight(j) << std::setw(8)
          << result.probs(j) << "\n";
      out.unsetf(std::ios::fixed);
    }
    all_ok = check_demo_block(block, result, err) && all_ok;
  }
  out << "\n" << (all_ok ? "self-check: all values match the reference table"
                         : "self-check: FAILED")
      << "\n";
  return all_ok;
}

}  // namespace reslogit

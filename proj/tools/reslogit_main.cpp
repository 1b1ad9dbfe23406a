// Command-line front end: train / evaluate / elasticity / demo-redbus.
//
// Every failure path exits nonzero with a single machine-parseable
// `error: ...` line as the last line on stderr.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "reslogit/reslogit.hpp"

namespace {

using namespace reslogit;

std::string sanitize(std::string msg) {
  for (auto& ch : msg) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return msg;
}

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
};

RunConfig load_run_config(const CommonArgs& args) {
  RunConfig cfg = parse_config(args.config_path);
  if (args.seed_override) cfg.train.seed = *args.seed_override;
  if (args.out_override) cfg.out_dir = *args.out_override;
  return cfg;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

int cmd_train(const CommonArgs& args) {
  RunConfig cfg = load_run_config(args);
  require(!cfg.dataset.empty(), "config: 'dataset' is required for train");
  require(!cfg.choice_column.empty(), "config: 'choice' is required for train");

  const LoadedDataset loaded =
      load_csv(cfg.dataset, cfg.choice_column, cfg.variables);
  UtilitySpec spec;
  spec.variables = loaded.data.attribute_names;  // expanded columns
  spec.reference_alt = cfg.resolve_reference(loaded.data.alt_names);
  spec.include_asc = cfg.include_asc;

  auto [fit, curve] = train(loaded.data, spec, cfg.kind, cfg.train);

  std::filesystem::create_directories(cfg.out_dir);
  const DesignIndex design = build_design(loaded.data, spec);
  const Eigen::Index n_train = static_cast<Eigen::Index>(
      std::floor(cfg.train.split_fraction *
                 static_cast<double>(loaded.data.n_obs)));
  atomic_write(cfg.out_dir + "/report.txt",
               render_report(fit, cfg, loaded.data, n_train,
                             loaded.data.n_obs - n_train));
  atomic_write(cfg.out_dir + "/coefficients.csv",
               render_coefficients(fit, design, loaded.data.alt_names));
  atomic_write(cfg.out_dir + "/curve.csv", render_curve(curve));

  ModelFile model;
  model.kind = fit.kind;
  model.choice_column = cfg.choice_column;
  model.variables = loaded.variables;
  model.attribute_names = loaded.data.attribute_names;
  model.categorical_levels = loaded.categorical_levels;
  model.alt_names = loaded.data.alt_names;
  model.reference_alt = spec.reference_alt;
  model.include_asc = spec.include_asc;
  model.params = fit.params;
  model.scaler = fit.scaler;
  atomic_write(cfg.resolved_model_file(), render_model(model));

  std::cout << "model: " << to_string(fit.kind.family)
            << " depth " << fit.kind.depth << "\n"
            << "train_ll: " << fmt_double(fit.final_ll) << "\n"
            << "valid_ll: " << fmt_double(fit.valid_ll) << "\n"
            << "aic: " << fmt_double(fit.aic) << "\n"
            << "validation_accuracy: " << fmt_double(fit.validation_accuracy)
            << "\n"
            << "artifacts: " << cfg.out_dir << "/{report.txt, coefficients.csv, "
            << "curve.csv}, " << cfg.resolved_model_file() << "\n";
  if (fit.diverged) {
    std::cout << "warning: training diverged; reported parameters are the "
                 "last finite snapshot\n";
  }
  return 0;
}

/// Loads a CSV and aligns its columns/labels to a fitted model.
Dataset load_aligned(const RunConfig& cfg, const ModelFile& model) {
  require(!cfg.dataset.empty(), "config: 'dataset' is required");
  const std::string choice =
      cfg.choice_column.empty() ? model.choice_column : cfg.choice_column;
  const LoadedDataset loaded =
      load_csv(cfg.dataset, choice, model.variables, model.alt_names);
  return align_attributes(loaded, model.attribute_names,
                          model.categorical_levels);
}

int cmd_evaluate(const CommonArgs& args) {
  RunConfig cfg = load_run_config(args);
  const ModelFile model = load_model(cfg.resolved_model_file());
  const Dataset data = load_aligned(cfg, model);
  const DesignIndex design = model.design();

  const double ll = log_likelihood(model.params, data, design, model.kind);
  const double acc = accuracy(model.params, data, design, model.kind);

  std::ostringstream report;
  report << "model: " << to_string(model.kind.family) << "\n"
         << "depth: " << model.kind.depth << "\n"
         << "n_obs: " << data.n_obs << "\n"
         << "ll: " << fmt_double(ll) << "\n"
         << "mean_ll: " << fmt_double(ll / static_cast<double>(data.n_obs))
         << "\n"
         << "accuracy: " << fmt_double(acc) << "\n"
         << "error: " << fmt_double(1.0 - acc) << "\n";
  std::filesystem::create_directories(cfg.out_dir);
  atomic_write(cfg.out_dir + "/evaluation.txt", report.str());
  std::cout << report.str();
  return 0;
}

int cmd_elasticity(const CommonArgs& args) {
  RunConfig cfg = load_run_config(args);
  require(!cfg.elasticity_variable.empty(),
          "config: 'elasticity_variable' is required for elasticity");
  const ModelFile model = load_model(cfg.resolved_model_file());
  const Dataset data = load_aligned(cfg, model);
  const DesignIndex design = model.design();

  std::vector<double> grid;
  for (double pct : cfg.arc_grid_pct) grid.push_back(pct / 100.0);
  const ElasticityReport rep =
      elasticity_report(model.params, data, design, model.kind,
                        cfg.elasticity_variable, grid, cfg.aggregation);

  std::ostringstream point;
  point << "alternative,elasticity\n";
  for (Eigen::Index j = 0; j < rep.point.size(); ++j) {
    point << rep.alt_names[static_cast<std::size_t>(j)] << ","
          << fmt_double(rep.point(j)) << "\n";
  }
  std::ostringstream arc;
  arc << "delta_pct";
  for (const auto& name : rep.alt_names) arc << "," << name;
  arc << "\n";
  std::vector<std::size_t> order(rep.arc_grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rep.arc_grid[a] < rep.arc_grid[b];
  });
  for (std::size_t i : order) {
    arc << fmt_double(rep.arc_grid[i] * 100.0);
    for (Eigen::Index j = 0; j < rep.arc.cols(); ++j) {
      arc << "," << fmt_double(rep.arc(static_cast<Eigen::Index>(i), j));
    }
    arc << "\n";
  }
  std::filesystem::create_directories(cfg.out_dir);
  atomic_write(cfg.out_dir + "/elasticity_point.csv", point.str());
  atomic_write(cfg.out_dir + "/elasticity_arc.csv", arc.str());

  std::cout << "variable: " << rep.variable << "\n" << point.str()
            << "artifacts: " << cfg.out_dir
            << "/{elasticity_point.csv, elasticity_arc.csv}\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ResLogit discrete-choice estimation toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", args.config_path,
                                "run configuration file");
    if (needs_config) opt->required();
    sub->add_option("--seed", args.seed_override,
                    "override the configured seed");
    sub->add_option("--out", args.out_override,
                    "override the configured output directory");
  };

  auto* train_cmd = app.add_subcommand("train", "estimate a model on a CSV");
  add_common(train_cmd, true);
  auto* eval_cmd =
      app.add_subcommand("evaluate", "score a held-out CSV with a fitted model");
  add_common(eval_cmd, true);
  auto* elas_cmd = app.add_subcommand(
      "elasticity", "point and arc elasticities for one variable");
  add_common(elas_cmd, true);
  auto* demo_cmd = app.add_subcommand(
      "demo-redbus", "red/blue bus scenario table with self-check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(args);
    if (eval_cmd->parsed()) return cmd_evaluate(args);
    if (elas_cmd->parsed()) return cmd_elasticity(args);
    if (demo_cmd->parsed()) {
      return reslogit::run_redblue_demo(std::cout, std::cerr) ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << sanitize(e.what()) << std::endl;
    return 1;
  }
  return 0;
}

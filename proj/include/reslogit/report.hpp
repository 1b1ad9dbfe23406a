#pragma once

// Run artifacts: the line-oriented fit report, coefficient and training
// curve CSVs, and the JSON model file used by evaluate/elasticity. All
// files are written atomically (temp + rename) and contain nothing
// non-deterministic, so identical runs produce identical bytes.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "reslogit/config.hpp"
#include "reslogit/stats.hpp"
#include "reslogit/train.hpp"

namespace reslogit {

inline void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string fmt_double(double v) { return detail::fmt_double(v); }

/// `iteration,train_ll,valid_ll,valid_error` rows.
inline std::string render_curve(const TrainingCurve& curve) {
  std::ostringstream out;
  out << "iteration,train_ll,valid_ll,valid_error\n";
  for (const auto& c : curve.checkpoints) {
    out << c.iteration << "," << fmt_double(c.train_ll) << ","
        << fmt_double(c.valid_ll) << "," << fmt_double(c.valid_error) << "\n";
  }
  return out.str();
}

/// `variable,alternative,beta,std_err,robust_std_err,significant` rows in
/// design order (variable-major, ASC block last).
inline std::string render_coefficients(const FitResult& fit,
                                       const DesignIndex& design,
                                       const std::vector<std::string>& alt_names) {
  std::ostringstream out;
  out << "variable,alternative,beta,std_err,robust_std_err,significant\n";
  for (Eigen::Index c = 0; c < fit.params.beta.size(); ++c) {
    const auto slot = design.describe(c);
    out << design.slot_name(c) << ","
        << alt_names[static_cast<std::size_t>(slot.alt)] << ","
        << fmt_double(fit.params.beta(c)) << ","
        << (fit.se_ok[static_cast<std::size_t>(c)] ? fmt_double(fit.std_err(c))
                                                   : "invalid")
        << ","
        << (fit.robust_se_ok[static_cast<std::size_t>(c)]
                ? fmt_double(fit.robust_std_err(c))
                : "invalid")
        << "," << (fit.significant[static_cast<std::size_t>(c)] ? 1 : 0) << "\n";
  }
  return out.str();
}

inline std::string render_report(const FitResult& fit, const RunConfig& cfg,
                                 const Dataset& data, Eigen::Index n_train,
                                 Eigen::Index n_valid) {
  std::ostringstream out;
  out << "# reslogit fit report\n";
  out << "# std_err convention: sqrt diag (-H)^-1 of the training-sample "
         "log-likelihood Hessian over the beta block at fixed residual "
         "matrices, mapped to raw-data units; robust_std_err uses the "
         "sandwich (-H)^-1 B (-H)^-1 with B the outer product of "
         "per-observation scores.\n";
  out << "model: " << to_string(fit.kind.family) << "\n";
  out << "depth: " << fit.kind.depth << "\n";
  out << "n_obs: " << data.n_obs << "\n";
  out << "n_train: " << n_train << "\n";
  out << "n_valid: " << n_valid << "\n";
  out << "n_alternatives: " << data.n_alts << "\n";
  out << "alternatives: " << detail::join(data.alt_names) << "\n";
  out << "n_attributes: " << data.n_vars() << "\n";
  out << "n_parameters: " << fit.k_parameters << "\n";
  out << "train_ll: " << fmt_double(fit.final_ll) << "\n";
  out << "valid_ll: " << fmt_double(fit.valid_ll) << "\n";
  out << "aic: " << fmt_double(fit.aic) << "\n";
  out << "validation_accuracy: " << fmt_double(fit.validation_accuracy) << "\n";
  out << "validation_error: " << fmt_double(1.0 - fit.validation_accuracy)
      << "\n";
  out << "epochs_run: " << fit.epochs_run << "\n";
  out << "early_stopped: " << (fit.early_stopped ? "true" : "false") << "\n";
  out << "diverged: " << (fit.diverged ? "true" : "false") << "\n";
  out << "seed: " << cfg.train.seed << "\n";
  for (const auto& [key, value] : cfg.effective()) {
    out << "config." << key << ": " << value << "\n";
  }
  return out.str();
}

/// Everything evaluate/elasticity need to rebuild the fitted model on
/// another file: parameters on raw-data scale plus the column expansion
/// and alternative labels recorded at training time.
struct ModelFile {
  ModelKind kind;
  std::string choice_column;
  std::vector<std::string> variables;           // pre-expansion
  std::vector<std::string> attribute_names;     // expanded, design order
  std::map<std::string, std::vector<std::string>> categorical_levels;
  std::vector<std::string> alt_names;
  int reference_alt = 0;
  bool include_asc = true;
  Parameters params;  // raw-data scale
  Scaler scaler;      // recorded for provenance

  DesignIndex design() const {
    DesignIndex d;
    d.variables = attribute_names;
    for (std::size_t k = 0; k < attribute_names.size(); ++k) {
      d.var_columns.push_back(static_cast<int>(k));
    }
    d.n_alts = static_cast<int>(alt_names.size());
    d.reference_alt = reference_alt;
    d.include_asc = include_asc;
    return d;
  }
};

inline std::string render_model(const ModelFile& model) {
  nlohmann::json j;
  j["format"] = "reslogit-model-v1";
  j["model"] = to_string(model.kind.family);
  j["depth"] = model.kind.depth;
  j["choice_column"] = model.choice_column;
  j["variables"] = model.variables;
  j["attribute_names"] = model.attribute_names;
  j["categorical_levels"] = model.categorical_levels;
  j["alt_names"] = model.alt_names;
  j["reference_alt"] = model.reference_alt;
  j["include_asc"] = model.include_asc;
  j["beta"] = std::vector<double>(model.params.beta.data(),
                                  model.params.beta.data() +
                                      model.params.beta.size());
  {
    std::vector<std::vector<std::vector<double>>> layers;
    for (const auto& t : model.params.thetas) {
      std::vector<std::vector<double>> rows;
      for (Eigen::Index r = 0; r < t.rows(); ++r) {
        std::vector<double> row;
        for (Eigen::Index c = 0; c < t.cols(); ++c) row.push_back(t(r, c));
        rows.push_back(std::move(row));
      }
      layers.push_back(std::move(rows));
    }
    j["thetas"] = layers;
  }
  j["scaler_center"] = std::vector<double>(
      model.scaler.center.data(),
      model.scaler.center.data() + model.scaler.center.size());
  j["scaler_scale"] = std::vector<double>(
      model.scaler.scale.data(),
      model.scaler.scale.data() + model.scaler.scale.size());
  return j.dump(2) + "\n";
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("model: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("model: '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    if (j.at("format") != "reslogit-model-v1") {
      throw Error("model: unsupported format tag");
    }
    ModelFile model;
    const std::string family = j.at("model");
    if (family == "mnl") model.kind.family = ModelFamily::mnl;
    else if (family == "reslogit") model.kind.family = ModelFamily::reslogit;
    else if (family == "mlp") model.kind.family = ModelFamily::mlp;
    else throw Error("model: unknown family '" + family + "'");
    model.kind.depth = j.at("depth");
    model.choice_column = j.at("choice_column");
    model.variables = j.at("variables").get<std::vector<std::string>>();
    model.attribute_names =
        j.at("attribute_names").get<std::vector<std::string>>();
    model.categorical_levels =
        j.at("categorical_levels")
            .get<std::map<std::string, std::vector<std::string>>>();
    model.alt_names = j.at("alt_names").get<std::vector<std::string>>();
    model.reference_alt = j.at("reference_alt");
    model.include_asc = j.at("include_asc");
    const auto beta = j.at("beta").get<std::vector<double>>();
    model.params.beta =
        Eigen::Map<const Eigen::VectorXd>(beta.data(),
                                          static_cast<Eigen::Index>(beta.size()));
    for (const auto& layer : j.at("thetas")) {
      const auto rows = layer.get<std::vector<std::vector<double>>>();
      Eigen::MatrixXd t(rows.size(), rows.empty() ? 0 : rows[0].size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
          t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
              rows[r][c];
        }
      }
      model.params.thetas.push_back(std::move(t));
    }
    const auto center = j.at("scaler_center").get<std::vector<double>>();
    const auto scale = j.at("scaler_scale").get<std::vector<double>>();
    model.scaler.center = Eigen::Map<const Eigen::VectorXd>(
        center.data(), static_cast<Eigen::Index>(center.size()));
    model.scaler.scale = Eigen::Map<const Eigen::VectorXd>(
        scale.data(), static_cast<Eigen::Index>(scale.size()));
    model.params.validate(model.design().beta_length(),
                          static_cast<Eigen::Index>(model.alt_names.size()));
    if (model.params.depth() != model.kind.depth) {
      throw Error("model: depth does not match stored layers");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error("model: '" + path + "' is missing fields: " + e.what());
  }
}

}  // namespace reslogit

#pragma once

// Flat `key = value` run configuration with `#` comments. Unknown keys
// are rejected; anything absent falls back to the documented default and
// the effective configuration is echoed into the report for provenance.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "reslogit/csv.hpp"
#include "reslogit/train.hpp"

namespace reslogit {

struct RunConfig {
  std::string dataset;
  std::string choice_column;
  std::vector<std::string> variables;  // empty: every non-choice column
  std::string reference_alt = "0";     // label or index, resolved at load
  bool include_asc = true;
  ModelKind kind = ModelKind::mnl();
  TrainConfig train;
  std::string out_dir = ".";
  std::string model_file;  // default: <out_dir>/model.json
  std::string elasticity_variable;
  std::vector<double> arc_grid_pct = {-50, -40, -30, -20, -10,
                                      10,  20,  30,  40,  50};
  Aggregation aggregation = Aggregation::mean;

  std::string resolved_model_file() const {
    return model_file.empty() ? out_dir + "/model.json" : model_file;
  }

  /// Maps the configured reference alternative (label or index) onto an
  /// index into alt_names.
  int resolve_reference(const std::vector<std::string>& alt_names) const {
    for (std::size_t j = 0; j < alt_names.size(); ++j) {
      if (alt_names[j] == reference_alt) return static_cast<int>(j);
    }
    const auto idx = detail::parse_int(reference_alt);
    if (idx && *idx >= 0 && *idx < static_cast<long>(alt_names.size())) {
      return static_cast<int>(*idx);
    }
    throw Error("config: reference_alt '" + reference_alt +
                "' is neither an alternative label nor a valid index");
  }

  /// Every effective key/value pair, defaults included, in sorted order.
  std::map<std::string, std::string> effective() const;
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error("config: key '" + key + "' expects a boolean, got '" + value + "'");
}

inline double parse_double_or_throw(const std::string& key,
                                    const std::string& value) {
  const auto v = parse_double(value);
  if (!v) {
    throw Error("config: key '" + key + "' expects a number, got '" + value + "'");
  }
  return *v;
}

inline long parse_int_or_throw(const std::string& key,
                               const std::string& value) {
  const auto v = parse_int(value);
  if (!v) {
    throw Error("config: key '" + key + "' expects an integer, got '" + value +
                "'");
  }
  return *v;
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(value);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Shortest decimal representation that round-trips exactly.
inline std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += items[i];
  }
  return out;
}

}  // namespace detail

inline std::map<std::string, std::string> RunConfig::effective() const {
  std::map<std::string, std::string> kv;
  kv["dataset"] = dataset;
  kv["choice"] = choice_column;
  kv["variables"] = detail::join(variables);
  kv["reference_alt"] = reference_alt;
  kv["include_asc"] = include_asc ? "true" : "false";
  kv["model"] = to_string(kind.family);
  kv["depth"] = std::to_string(kind.depth);
  kv["batch_size"] = std::to_string(train.batch_size);
  kv["learning_rate"] = detail::fmt_double(train.learning_rate);
  kv["rmsprop_decay"] = detail::fmt_double(train.rmsprop_decay);
  kv["rmsprop_epsilon"] = detail::fmt_double(train.rmsprop_epsilon);
  kv["max_iterations"] = std::to_string(train.max_iterations);
  kv["patience"] = std::to_string(train.patience);
  kv["seed"] = std::to_string(train.seed);
  kv["split_fraction"] = detail::fmt_double(train.split_fraction);
  kv["out_dir"] = out_dir;
  kv["model_file"] = resolved_model_file();
  kv["elasticity_variable"] = elasticity_variable;
  {
    std::vector<std::string> g;
    for (double d : arc_grid_pct) g.push_back(detail::fmt_double(d));
    kv["arc_grid"] = detail::join(g);
  }
  kv["aggregation"] =
      aggregation == Aggregation::mean ? "mean" : "probability_weighted";
  return kv;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open '" + path + "'");
  RunConfig cfg;
  bool depth_given = false;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config: line " + std::to_string(line_no) +
                  " is not 'key = value'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));

    if (key == "dataset") {
      cfg.dataset = value;
    } else if (key == "choice") {
      cfg.choice_column = value;
    } else if (key == "variables") {
      cfg.variables = detail::split_list(value);
    } else if (key == "reference_alt") {
      cfg.reference_alt = value;
    } else if (key == "include_asc") {
      cfg.include_asc = detail::parse_bool(key, value);
    } else if (key == "model") {
      if (value == "mnl") cfg.kind.family = ModelFamily::mnl;
      else if (value == "reslogit") cfg.kind.family = ModelFamily::reslogit;
      else if (value == "mlp") cfg.kind.family = ModelFamily::mlp;
      else throw Error("config: model must be mnl, reslogit or mlp, got '" +
                       value + "'");
    } else if (key == "depth") {
      cfg.kind.depth = static_cast<int>(detail::parse_int_or_throw(key, value));
      depth_given = true;
    } else if (key == "batch_size") {
      cfg.train.batch_size =
          static_cast<int>(detail::parse_int_or_throw(key, value));
    } else if (key == "learning_rate") {
      cfg.train.learning_rate = detail::parse_double_or_throw(key, value);
    } else if (key == "rmsprop_decay") {
      cfg.train.rmsprop_decay = detail::parse_double_or_throw(key, value);
    } else if (key == "rmsprop_epsilon") {
      cfg.train.rmsprop_epsilon = detail::parse_double_or_throw(key, value);
    } else if (key == "max_iterations") {
      cfg.train.max_iterations =
          static_cast<int>(detail::parse_int_or_throw(key, value));
    } else if (key == "patience") {
      cfg.train.patience =
          static_cast<int>(detail::parse_int_or_throw(key, value));
    } else if (key == "seed") {
      cfg.train.seed =
          static_cast<std::uint64_t>(detail::parse_int_or_throw(key, value));
    } else if (key == "split_fraction") {
      cfg.train.split_fraction = detail::parse_double_or_throw(key, value);
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "model_file") {
      cfg.model_file = value;
    } else if (key == "elasticity_variable") {
      cfg.elasticity_variable = value;
    } else if (key == "arc_grid") {
      cfg.arc_grid_pct.clear();
      for (const auto& item : detail::split_list(value)) {
        cfg.arc_grid_pct.push_back(detail::parse_double_or_throw(key, item));
      }
    } else if (key == "aggregation") {
      if (value == "mean") cfg.aggregation = Aggregation::mean;
      else if (value == "probability_weighted")
        cfg.aggregation = Aggregation::probability_weighted;
      else throw Error(
          "config: aggregation must be mean or probability_weighted");
    } else {
      throw Error("config: unknown key '" + key + "' on line " +
                  std::to_string(line_no));
    }
  }

  if (!depth_given && cfg.kind.family != ModelFamily::mnl) {
    cfg.kind.depth = 2;
  }
  if (cfg.kind.family == ModelFamily::mnl && cfg.kind.depth != 0) {
    throw Error("config: model mnl cannot have depth " +
                std::to_string(cfg.kind.depth));
  }
  if (cfg.kind.family != ModelFamily::mnl && cfg.kind.depth < 1) {
    throw Error("config: model " + to_string(cfg.kind.family) +
                " needs depth >= 1");
  }
  cfg.train.validate();
  return cfg;
}

}  // namespace reslogit

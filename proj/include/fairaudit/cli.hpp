#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fairaudit/csv.hpp"
#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/harness.hpp"
#include "fairaudit/metrics.hpp"
#include "fairaudit/recipe.hpp"
#include "fairaudit/report.hpp"
#include "fairaudit/split.hpp"
#include "fairaudit/stats.hpp"
#include "fairaudit/trainer.hpp"
#include "fairaudit/version.hpp"

namespace fairaudit {

// Raised when a command needs artifacts that are absent or unreadable
// (mapped to exit code 4).
class ArtifactError : public FairauditError {
 public:
  using FairauditError::FairauditError;
};

// Everything needed to reproduce a command invocation exactly.
struct RunManifest {
  std::string command;
  std::string recipe_path;
  std::string dataset_path;
  std::string protected_name;
  std::string explanatory_name;
  std::vector<double> taus;
  std::size_t repeats = 0;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::string tool_version = kToolVersion;
};

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  return {{"command", m.command},
          {"recipe_path", m.recipe_path},
          {"dataset_path", m.dataset_path},
          {"protected", m.protected_name},
          {"explanatory", m.explanatory_name},
          {"taus", m.taus},
          {"repeats", m.repeats},
          {"seed", m.seed},
          {"output_dir", m.output_dir},
          {"tool_version", m.tool_version}};
}

// Parses "0,0.5,1" or "a:b:step" (inclusive of b) into a tau list.
inline std::vector<double> parse_taus(const std::string& spec) {
  std::vector<double> taus;
  auto parse_one = [](const std::string& s) {
    const auto v = detail::parse_double(detail::trim_copy(s));
    if (!v) throw SchemaError("invalid tau value '" + s + "'");
    return *v;
  };
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : spec) {
      if (c == ':') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    parts.push_back(cur);
    if (parts.size() != 3) throw SchemaError("tau range must look like a:b:step");
    const double a = parse_one(parts[0]), b = parse_one(parts[1]), step = parse_one(parts[2]);
    if (step <= 0.0) throw SchemaError("tau range step must be positive");
    for (std::size_t k = 0;; ++k) {
      const double v = a + static_cast<double>(k) * step;
      if (v > b + 1e-9) break;
      taus.push_back(std::min(v, b));
    }
  } else {
    std::string cur;
    for (char c : spec + ",") {
      if (c == ',') {
        if (!detail::trim_copy(cur).empty()) taus.push_back(parse_one(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
  }
  if (taus.empty()) throw SchemaError("no tau values given");
  for (double t : taus)
    if (!(t >= 0.0 && t <= 1.0))
      throw SchemaError("tau " + std::to_string(t) + " outside [0,1]");
  return taus;
}

namespace cli_detail {

struct CommonArgs {
  std::string data_path;
  std::string recipe_path;
  std::string protected_name;
  std::string explanatory_name;
  std::string taus_spec;
  std::size_t repeats = 10;
  std::uint64_t seed = 42;
  std::string out_dir = ".";
  std::string best_tau_spec;
  bool best_effort = false;
};

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IOError("failed writing: " + path);
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

// Validates --protected/--explanatory assertions against the loaded recipe.
inline void check_column_assertions(const CommonArgs& a, const Recipe& r) {
  if (!a.protected_name.empty() && a.protected_name != r.protected_column)
    throw SchemaError("--protected '" + a.protected_name + "' does not match the recipe's '" +
                      r.protected_column + "'");
  if (!a.explanatory_name.empty() && a.explanatory_name != r.explanatory_column)
    throw SchemaError("--explanatory '" + a.explanatory_name +
                      "' does not match the recipe's '" + r.explanatory_column + "'");
}

inline nlohmann::json chi_square_or_note(const std::vector<std::string>& a,
                                         const std::vector<std::string>& b) {
  try {
    return chi_square_to_json(chi_square(contingency_table(a, b)));
  } catch (const FairauditError& e) {
    return {{"error", e.what()}};
  }
}

inline std::string artifact_stem(const Recipe& r) {
  return r.dataset_id + "_" + r.protected_column;
}

inline int cmd_audit(const CommonArgs& args) {
  const Recipe recipe = load_recipe(args.recipe_path);
  check_column_assertions(args, recipe);
  const RawTable raw = load_csv(args.data_path, /*has_header=*/true);
  const RawTable filtered = filter_rows(raw, recipe);
  const Dataset ds = apply_recipe(raw, recipe);
  if (ds.n_instances() == 0) throw DegenerateError("audit: no rows survive the recipe");

  RunManifest man;
  man.command = "audit";
  man.recipe_path = args.recipe_path;
  man.dataset_path = args.data_path;
  man.protected_name = recipe.protected_column;
  man.explanatory_name = recipe.explanatory_column;
  man.seed = args.seed;
  man.output_dir = args.out_dir;

  OutcomeVector labels{ds.labels, OutcomeKind::GroundTruth};
  const FairnessReport full = full_report(labels, ds.protected_attr, ds.explanatory);

  const auto [train, test] = stratified_split(ds, 0.7, args.seed);
  OutcomeVector test_labels{test.labels, OutcomeKind::GroundTruth};
  const FairnessReport heldout =
      full_report(test_labels, test.protected_attr, test.explanatory);

  // chi-square diagnostics on raw and on recipe-encoded columns
  const long label_idx = filtered.column_index(recipe.label_column);
  const long expl_idx = filtered.column_index(recipe.explanatory_column);
  const long prot_idx = filtered.column_index(recipe.protected_column);
  std::vector<std::string> raw_label, raw_expl, raw_prot;
  for (const auto& row : filtered.rows) {
    raw_label.push_back(row[label_idx]);
    raw_expl.push_back(row[expl_idx]);
    raw_prot.push_back(row[prot_idx]);
  }
  std::vector<std::string> enc_label, enc_prot;
  for (Outcome y : ds.labels) enc_label.emplace_back(to_string(y));
  for (Group g : ds.protected_attr) enc_prot.emplace_back(to_string(g));

  nlohmann::json chi{
      {"label_vs_explanatory_raw", chi_square_or_note(raw_label, raw_expl)},
      {"label_vs_explanatory_encoded", chi_square_or_note(enc_label, ds.explanatory)},
      {"label_vs_protected_raw", chi_square_or_note(raw_label, raw_prot)},
      {"label_vs_protected_encoded", chi_square_or_note(enc_label, enc_prot)},
  };

  nlohmann::json out{
      {"manifest", manifest_to_json(man)},
      {"dataset_id", recipe.dataset_id},
      {"protected_attribute", recipe.protected_column},
      {"explanatory_attribute", recipe.explanatory_column},
      {"n_instances", ds.n_instances()},
      {"baseline_rate", baseline_rate(ds)},
      {"full_dataset", report_to_json(full)},
      {"heldout_test",
       {{"seed", args.seed}, {"train_fraction", 0.7}, {"report", report_to_json(heldout)}}},
      {"chi_square", chi},
  };

  std::filesystem::create_directories(args.out_dir);
  const std::string path =
      (std::filesystem::path(args.out_dir) / ("audit_" + artifact_stem(recipe) + ".json"))
          .string();
  write_json(path, out);

  std::cout << "dataset=" << recipe.dataset_id << " protected=" << recipe.protected_column
            << " n=" << ds.n_instances() << " baseline=" << baseline_rate(ds) << "\n";
  std::cout << "full-data      dp=" << full.dp << " cdd_weighted=" << full.cdd_weighted
            << "\n";
  std::cout << "heldout(seed=" << args.seed << ") dp=" << heldout.dp
            << " cdd_weighted=" << heldout.cdd_weighted << "\n";
  for (const char* key :
       {"label_vs_explanatory_encoded", "label_vs_explanatory_raw",
        "label_vs_protected_encoded", "label_vs_protected_raw"}) {
    if (chi[key].contains("x2")) {
      ChiSquareResult r;
      r.x2 = chi[key]["x2"].get<double>();
      r.dof = chi[key]["dof"].get<std::size_t>();
      r.p = chi[key]["p"].get<double>();
      r.cramers_v = chi[key]["cramers_v"].get<double>();
      r.n = chi[key]["n"].get<std::size_t>();
      std::cout << key << ": " << format_chi_square(r) << "\n";
    }
  }
  std::cout << "wrote " << path << "\n";
  return 0;
}

inline int cmd_sweep(const CommonArgs& args) {
  const Recipe recipe = load_recipe(args.recipe_path);
  check_column_assertions(args, recipe);
  const RawTable raw = load_csv(args.data_path, /*has_header=*/true);
  const Dataset ds = apply_recipe(raw, recipe);

  std::vector<double> taus;
  if (args.taus_spec.empty())
    for (int k = 0; k <= 10; ++k) taus.push_back(0.1 * k);
  else
    taus = parse_taus(args.taus_spec);

  TrainConfig cfg;
  cfg.seed = args.seed;

  RunManifest man;
  man.command = "sweep";
  man.recipe_path = args.recipe_path;
  man.dataset_path = args.data_path;
  man.protected_name = recipe.protected_column;
  man.explanatory_name = recipe.explanatory_column;
  man.taus = taus;
  man.repeats = args.repeats;
  man.seed = args.seed;
  man.output_dir = args.out_dir;

  SweepResult res = tau_sweep(ds, taus, cfg, args.repeats, args.seed, args.best_effort);
  res.protected_attribute = recipe.protected_column;
  res.explanatory_attribute = recipe.explanatory_column;
  res.dataset_id = recipe.dataset_id;

  std::filesystem::create_directories(args.out_dir);
  const std::string stem = artifact_stem(recipe);
  const std::filesystem::path dir(args.out_dir);

  nlohmann::json sweep_json = sweep_result_to_json(res);
  sweep_json["manifest"] = manifest_to_json(man);
  write_json((dir / ("sweep_" + stem + ".json")).string(), sweep_json);
  write_text((dir / ("sweep_" + stem + ".csv")).string(), sweep_result_to_csv(res));
  emit_plot(res, (dir / (stem + ".svg")).string());

  for (const TauAggregate& a : res.per_tau)
    std::cout << "tau=" << a.tau << " dp=" << a.dp.mean << " cdd_weighted="
              << a.cdd_weighted.mean << " accuracy=" << a.accuracy.mean
              << " converged=" << a.n_converged << "/" << res.n_repeats << "\n";
  std::cout << "wrote " << (dir / ("sweep_" + stem + ".json")).string() << "\n";
  return 0;
}

struct BestTauSpec {
  std::optional<double> global;
  std::map<std::string, double> per_pair;  // "<dataset>_<protected>" -> tau
};

inline BestTauSpec parse_best_tau(const std::string& spec) {
  BestTauSpec out;
  if (spec.find('=') == std::string::npos) {
    const auto v = detail::parse_double(detail::trim_copy(spec));
    if (!v || !(*v >= 0.0 && *v <= 1.0))
      throw SchemaError("--best-tau must be a tau in [0,1] or a name=tau list");
    out.global = *v;
    return out;
  }
  std::string cur;
  for (char c : spec + ",") {
    if (c != ',') {
      cur.push_back(c);
      continue;
    }
    const std::string entry = detail::trim_copy(cur);
    cur.clear();
    if (entry.empty()) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw SchemaError("--best-tau entry '" + entry + "' is not name=tau");
    const std::string key = detail::trim_copy(entry.substr(0, eq));
    const auto v = detail::parse_double(detail::trim_copy(entry.substr(eq + 1)));
    if (key.empty() || !v || !(*v >= 0.0 && *v <= 1.0))
      throw SchemaError("--best-tau entry '" + entry + "' is not name=tau with tau in [0,1]");
    out.per_pair[key] = *v;
  }
  if (out.per_pair.empty()) throw SchemaError("--best-tau list is empty");
  return out;
}

inline double mean_or_throw(const nlohmann::json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("mean") || !j.at("mean").is_number())
    throw ArtifactError("sweep artifact lacks a numeric " + what);
  return j.at("mean").get<double>();
}

inline int cmd_table(const CommonArgs& args) {
  const BestTauSpec best = parse_best_tau(args.best_tau_spec);

  std::vector<std::filesystem::path> artifacts;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(args.out_dir, ec)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("sweep_", 0) == 0 && entry.path().extension() == ".json")
      artifacts.push_back(entry.path());
  }
  if (ec) throw ArtifactError("cannot read output directory '" + args.out_dir + "'");
  if (artifacts.empty())
    throw ArtifactError("no sweep artifacts (sweep_*.json) in '" + args.out_dir + "'");
  std::sort(artifacts.begin(), artifacts.end());

  std::vector<CellTriple> cells;
  for (const auto& path : artifacts) {
    nlohmann::json j;
    {
      std::ifstream in(path);
      if (!in) throw ArtifactError("cannot open sweep artifact " + path.string());
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw ArtifactError("malformed sweep artifact " + path.string() + ": " + e.what());
      }
    }
    std::string dataset, protected_name;
    nlohmann::json per_tau, gt;
    try {
      dataset = j.at("dataset_id").get<std::string>();
      protected_name = j.at("protected_attribute").get<std::string>();
      per_tau = j.at("per_tau");
      gt = j.at("ground_truth_test");
    } catch (const nlohmann::json::exception& e) {
      throw ArtifactError("malformed sweep artifact " + path.string() + ": " + e.what());
    }

    double best_tau;
    const std::string key = dataset + "_" + protected_name;
    if (best.global) {
      best_tau = *best.global;
    } else {
      const auto it = best.per_pair.find(key);
      if (it == best.per_pair.end())
        throw ArtifactError("--best-tau has no entry for '" + key + "'");
      best_tau = it->second;
    }

    const nlohmann::json* at_zero = nullptr;
    const nlohmann::json* at_best = nullptr;
    if (!per_tau.is_array())
      throw ArtifactError("malformed sweep artifact " + path.string() + ": per_tau");
    for (const auto& e : per_tau) {
      if (!e.contains("tau") || !e.at("tau").is_number()) continue;
      const double t = e.at("tau").get<double>();
      if (std::fabs(t) < 1e-9) at_zero = &e;
      if (std::fabs(t - best_tau) < 1e-9) at_best = &e;
    }
    if (!at_zero)
      throw ArtifactError("sweep artifact " + path.string() + " has no tau=0 entry");
    if (!at_best)
      throw ArtifactError("sweep artifact " + path.string() + " has no tau=" +
                          std::to_string(best_tau) + " entry");

    try {
      CellTriple dp_cell;
      dp_cell.dataset = dataset;
      dp_cell.protected_attr = protected_name;
      dp_cell.metric = CellMetric::DP;
      dp_cell.test_value = mean_or_throw(gt.at("dp"), "ground-truth dp");
      dp_cell.tau0_value = mean_or_throw(at_zero->at("dp"), "dp at tau=0");
      dp_cell.taubest_value = mean_or_throw(at_best->at("dp"), "dp at best tau");
      cells.push_back(std::move(dp_cell));

      CellTriple cdd_cell;
      cdd_cell.dataset = dataset;
      cdd_cell.protected_attr = protected_name;
      cdd_cell.metric = CellMetric::CDD;
      cdd_cell.test_value = mean_or_throw(gt.at("cdd_weighted"), "ground-truth cdd");
      cdd_cell.tau0_value = mean_or_throw(at_zero->at("cdd_weighted"), "cdd at tau=0");
      cdd_cell.taubest_value = mean_or_throw(at_best->at("cdd_weighted"), "cdd at best tau");
      cells.push_back(std::move(cdd_cell));
    } catch (const nlohmann::json::exception& e) {
      throw ArtifactError("malformed sweep artifact " + path.string() + ": " + e.what());
    }
  }

  const TableDocument doc = emit_table(cells);

  RunManifest man;
  man.command = "table";
  man.output_dir = args.out_dir;
  nlohmann::json out{{"manifest", manifest_to_json(man)},
                     {"best_tau", args.best_tau_spec},
                     {"cells", doc.json}};
  const std::filesystem::path dir(args.out_dir);
  write_json((dir / "table.json").string(), out);
  write_text((dir / "table.csv").string(), doc.csv);
  std::cout << doc.csv;
  std::cout << "wrote " << (dir / "table.csv").string() << "\n";
  return 0;
}

}  // namespace cli_detail

// Entry point shared by the binary and in-process tests; returns the exit
// code (0 success, 2 input error, 3 infeasible training, 4 missing artifacts).
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"fairness audit and bias-mitigation toolkit"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  cli_detail::CommonArgs a;

  CLI::App* audit = app.add_subcommand("audit", "fairness metrics and association diagnostics");
  audit->add_option("--data", a.data_path, "input CSV (with header row)")->required();
  audit->add_option("--recipe", a.recipe_path, "recipe JSON")->required();
  audit->add_option("--protected", a.protected_name,
                    "assert the recipe's protected column name");
  audit->add_option("--explanatory", a.explanatory_name,
                    "assert the recipe's explanatory column name");
  audit->add_option("--seed", a.seed, "seed for the held-out split");
  audit->add_option("--out", a.out_dir, "output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "repeated-split tau sweep with charts");
  sweep->add_option("--data", a.data_path, "input CSV (with header row)")->required();
  sweep->add_option("--recipe", a.recipe_path, "recipe JSON")->required();
  sweep->add_option("--protected", a.protected_name,
                    "assert the recipe's protected column name");
  sweep->add_option("--explanatory", a.explanatory_name,
                    "assert the recipe's explanatory column name");
  sweep->add_option("--taus", a.taus_spec, "comma list or a:b:step (default 0:1:0.1)");
  sweep->add_option("--repeats", a.repeats, "repetitions per tau (default 10)");
  sweep->add_option("--seed", a.seed, "base split seed (default 42)");
  sweep->add_flag("--best-effort", a.best_effort,
                  "keep the closest model when the constraint is infeasible");
  sweep->add_option("--out", a.out_dir, "output directory")->required();

  CLI::App* table = app.add_subcommand("table", "assemble the summary table from sweeps");
  table->add_option("--out", a.out_dir, "directory holding sweep artifacts")->required();
  table->add_option("--best-tau", a.best_tau_spec,
                    "tau in [0,1], or per-pair list dataset_protected=tau,...")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (audit->parsed()) return cli_detail::cmd_audit(a);
    if (sweep->parsed()) return cli_detail::cmd_sweep(a);
    if (table->parsed()) return cli_detail::cmd_table(a);
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const ArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what()
              << " (re-run with --best-effort to keep the closest model)\n";
    return 3;
  } catch (const FairauditError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

// Convenience overload for in-process invocation.
inline int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.push_back("fairaudit");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const std::string& s : full) argv.push_back(s.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace fairaudit

#include "assoc/cli/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

#include "assoc/cli/config.hpp"
#include "assoc/cli/results.hpp"
#include "assoc/cli/svg.hpp"
#include "assoc/errors.hpp"
#include "assoc/gradcheck_suite.hpp"
#include "assoc/related_base.hpp"
#include "assoc/synthetic.hpp"
#include "assoc/training.hpp"

namespace assoc::cli {
namespace {

using nlohmann::json;

struct Dataset {
  DatasetSplits splits;
  // Present for synthetic data only.
  std::optional<SyntheticData> synthetic;
};

Dataset load_dataset(const RunConfig& config) {
  Dataset d;
  try {
    if (config.synthetic) {
      d.synthetic = generate_synthetic(*config.synthetic);
      d.splits = d.synthetic->splits;
    } else {
      d.splits = load_csv(config.csv);
    }
  } catch (const SpecError& e) {
    throw ConfigError(e.what());
  }
  return d;
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& path,
                         const std::optional<std::filesystem::path>& output, std::uint64_t seed) {
  RunConfig c = path ? load_run_config(*path) : default_run_config();
  c.train.seed = seed;
  if (output) c.output_dir = *output;
  c.validate();
  return c;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

// Fraction of an episode's selected ids that belong to the planted lists of
// the episode's classes.
double episode_precision(const RelatedBaseMap& map, const Episode& ep, const SyntheticData& syn) {
  std::vector<std::vector<int>> planted;
  for (int cls : ep.classes) {
    const auto it = std::find(syn.novel_ids.begin(), syn.novel_ids.end(), cls);
    planted.push_back(syn.planted[static_cast<std::size_t>(it - syn.novel_ids.begin())]);
  }
  return selection_precision(map, planted);
}

EmbeddingSet embed(const MlpParams& encoder, const Episode& ep, const LabeledDataset& related) {
  return {encoder_forward(ep.support_x, encoder), ep.support_y,
          encoder_forward(related.features, encoder), related.labels};
}

struct PointResult {
  AccuracySummary summary;
  std::map<std::string, std::vector<double>> curves;
  std::vector<json> episodes;
  std::vector<double> precisions;
  std::optional<std::string> svg;
};

// Every adaptation of one (config, variant) point over the evaluation
// episodes. Shared by run and sweep so a one-value sweep equals a run.
PointResult evaluate_point(const ModelState& pretrained, const Dataset& data,
                           const RunConfig& config, Variant variant, bool plot) {
  PointResult out;
  LossCurves curves;
  const EpisodeRunner runner = [&](const Episode& ep,
                                   std::uint64_t index) -> std::optional<double> {
    json line{{"index", index}, {"classes", ep.classes}};
    try {
      const EpisodeReport rep = run_episode(pretrained, data.splits.base, ep, index, variant,
                                            config.model, config.train, &curves);
      line["accuracy"] = rep.accuracy;
      if (rep.related) {
        line["related"] = rep.related->related;
        if (data.synthetic) {
          const double p = episode_precision(*rep.related, ep, *data.synthetic);
          line["precision"] = p;
          out.precisions.push_back(p);
        }
        if (plot && !out.svg) {
          const LabeledDataset rel = gather_related(data.splits.base, *rep.related);
          out.svg = render_alignment_svg(embed(pretrained.encoder, ep, rel),
                                         embed(rep.adapted.encoder, ep, rel));
        }
      }
      out.episodes.push_back(std::move(line));
      return rep.accuracy;
    } catch (const DivergenceError& e) {
      line["diverged"] = e.stage();
      line["step"] = e.step();
      out.episodes.push_back(std::move(line));
      return std::nullopt;
    }
  };
  out.summary = evaluate(data.splits.novel, config.eval, config.episodes, config.train.seed, runner);
  out.curves = curves.means();
  return out;
}

json trace_json(const EarlyStopTrace& t) {
  return {{"window", t.window},           {"patience", t.patience},
          {"stop_epoch", t.stop_epoch},   {"best_epoch", t.best_epoch},
          {"stopped", t.stopped},         {"accuracies", t.accuracies},
          {"window_means", t.window_means}};
}

ResultRow row_for(const RunConfig& c, Variant v, const AccuracySummary& s) {
  return {std::string(to_string(v)), c.eval.way, c.eval.shot, s.mean, s.ci95, c.train.seed};
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("empty value in list '" + text + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) throw ConfigError("--values needs at least one value");
  return out;
}

std::size_t parse_count(const std::string& s, const std::string& param) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || v < 0) throw ConfigError("invalid value '" + s + "' for " + param);
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& s, const std::string& param) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || !std::isfinite(v))
    throw ConfigError("invalid value '" + s + "' for " + param);
  return v;
}

struct SweepPoint {
  std::string value;
  RunConfig config;
  Variant variant;
};

SweepPoint make_point(const RunConfig& base, Variant variant, const std::string& param,
                      const std::string& value) {
  SweepPoint p{value, base, variant};
  if (param == "B") {
    p.config.train.related_per_class = parse_count(value, param);
  } else if (param == "m") {
    // Margin of the few-shot fine-tuning classifier; pre-training is shared.
    p.config.train.finetune_arcmax.margin = parse_real(value, param);
  } else if (param == "wrong_related_count") {
    p.config.train.wrong_related = parse_count(value, param);
  } else if (param == "variant") {
    p.variant = parse_variant(value);
  } else {
    throw ConfigError("unknown sweep parameter '" + param +
                      "' (expected B, m, wrong_related_count or variant)");
  }
  try {
    p.config.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("invalid value '" + value + "' for " + param + ": " + e.what());
  }
  return p;
}

}  // namespace

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = resolve_config(options.config, options.output, options.seed);
    const Variant variant = parse_variant(options.variant);
    const Dataset data = load_dataset(config);
    ensure_dir(config.output_dir);

    const PretrainResult pre = pretrain(data.splits.base, data.splits.validation, config.model,
                                        config.train, config.eval);
    const PointResult point = evaluate_point(pre.model, data, config, variant, options.plot);

    std::string episodes;
    for (const json& line : point.episodes) episodes += line.dump() + "\n";
    write_text(config.output_dir / "episodes.jsonl", episodes);
    if (point.svg) write_text(config.output_dir / "embeddings.svg", *point.svg);

    json metrics{{"config_hash", config_hash(config)},
                 {"config", to_yaml(config)},
                 {"variant", to_string(variant)},
                 {"seed", config.train.seed},
                 {"way", config.eval.way},
                 {"shot", config.eval.shot},
                 {"episodes", point.summary.episodes},
                 {"failed_episodes", point.summary.failed},
                 {"mean", point.summary.mean},
                 {"ci95", point.summary.ci95},
                 {"accuracies", point.summary.accuracies},
                 {"early_stopping", trace_json(pre.trace)},
                 {"pretrain_losses", pre.epoch_losses},
                 {"loss_curves", point.curves},
                 {"embeddings_svg", point.svg ? json("embeddings.svg") : json(nullptr)}};
    if (!point.precisions.empty()) {
      double sum = 0.0;
      for (double p : point.precisions) sum += p;
      metrics["related_precision"] = sum / static_cast<double>(point.precisions.size());
    }
    write_text(config.output_dir / "metrics.json", metrics.dump(2) + "\n");

    const ResultRow row = row_for(config, variant, point.summary);
    append_result(config.output_dir / "results.csv", row);
    out << kResultsHeader << "\n" << format_row(row) << "\n";
    return kExitOk;
  });
}

int cmd_sweep(const SweepOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig base = resolve_config(options.config, options.output, options.seed);
    if (options.jobs == 0) throw ConfigError("--jobs must be positive");
    const Variant variant = options.param == "variant" ? Variant::kBaseline
                                                       : parse_variant(options.variant);
    // Reject every bad value before spending time on training.
    std::vector<SweepPoint> points;
    for (const std::string& v : split_values(options.values))
      points.push_back(make_point(base, variant, options.param, v));

    const Dataset data = load_dataset(base);
    ensure_dir(base.output_dir);
    // None of the swept parameters touches pre-training.
    const PretrainResult pre =
        pretrain(data.splits.base, data.splits.validation, base.model, base.train, base.eval);

    std::vector<AccuracySummary> summaries(points.size());
    for (std::size_t first = 0; first < points.size(); first += options.jobs) {
      const std::size_t last = std::min(points.size(), first + options.jobs);
      std::vector<std::future<AccuracySummary>> running;
      for (std::size_t i = first; i < last; ++i) {
        running.push_back(std::async(options.jobs > 1 ? std::launch::async : std::launch::deferred,
                                     [&, i] {
                                       return evaluate_point(pre.model, data, points[i].config,
                                                             points[i].variant, false)
                                           .summary;
                                     }));
      }
      for (std::size_t i = first; i < last; ++i) summaries[i] = running[i - first].get();
    }

    std::string table = "param,value," + std::string(kResultsHeader) + "\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
      const ResultRow row = row_for(points[i].config, points[i].variant, summaries[i]);
      append_result(base.output_dir / "results.csv", row);
      table += options.param + "," + points[i].value + "," + format_row(row) + "\n";
    }
    write_text(base.output_dir / ("sweep_" + options.param + ".csv"), table);
    out << table;
    return kExitOk;
  });
}

int cmd_gradcheck(const GradcheckCliOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    GradcheckOptions opt;
    opt.seed = options.seed;
    opt.points = options.points;
    opt.corrupt = options.corrupt;
    const auto report = run_gradcheck_suite(opt);
    bool ok = true;
    char buf[128];
    for (const LossCheck& c : report) {
      std::snprintf(buf, sizeof buf, "%-20s points=%zu max_rel_err=%.3e %s\n", c.name.c_str(),
                    c.points, c.max_relative_error, c.passed() ? "ok" : "FAIL");
      out << buf;
      if (!c.passed()) {
        ok = false;
        err << "gradient check failed for " << c.name << "\n";
      }
    }
    return ok ? kExitOk : kExitVerificationFailed;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot associative alignment experiments"};
  app.require_subcommand(1);

  RunOptions run;
  std::string run_config, run_output;
  auto* run_cmd = app.add_subcommand("run", "pre-train, adapt and evaluate one variant");
  run_cmd->add_option("--config", run_config, "YAML run config (default: synthetic preset)");
  run_cmd->add_option("--variant", run.variant, "baseline|no_alignment|centroid|adversarial");
  run_cmd->add_option("--seed", run.seed, "seed for every random draw");
  run_cmd->add_option("--output", run_output, "output directory");
  run_cmd->add_flag("--no-plot", [&](std::int64_t) { run.plot = false; }, "skip embeddings.svg");

  SweepOptions sweep;
  std::string sweep_config, sweep_output;
  auto* sweep_cmd = app.add_subcommand("sweep", "evaluate one parameter over a list of values");
  sweep_cmd->add_option("--config", sweep_config, "YAML run config (default: synthetic preset)");
  sweep_cmd->add_option("--param", sweep.param, "B|m|wrong_related_count|variant")->required();
  sweep_cmd->add_option("--values", sweep.values, "comma-separated values")->required();
  sweep_cmd->add_option("--variant", sweep.variant, "variant for non-variant sweeps");
  sweep_cmd->add_option("--seed", sweep.seed, "seed for every random draw");
  sweep_cmd->add_option("--output", sweep_output, "output directory");
  sweep_cmd->add_option("--jobs", sweep.jobs, "sweep points evaluated concurrently");

  GradcheckCliOptions grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every loss");
  grad_cmd->add_option("--seed", grad.seed, "seed for the sampled points");
  grad_cmd->add_option("--points", grad.points, "points per loss");
  grad_cmd->add_option("--corrupt", grad.corrupt)->group("");  // test hook

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  if (run_cmd->parsed()) {
    if (!run_config.empty()) run.config = run_config;
    if (!run_output.empty()) run.output = run_output;
    return cmd_run(run, out, err);
  }
  if (sweep_cmd->parsed()) {
    if (!sweep_config.empty()) sweep.config = sweep_config;
    if (!sweep_output.empty()) sweep.output = sweep_output;
    return cmd_sweep(sweep, out, err);
  }
  return cmd_gradcheck(grad, out, err);
}

}  // namespace assoc::cli

// Command-line front end: generate-data, pretrain, probe, sweep,
// inspect-checkpoint. Exit codes: 0 success, 2 invalid configuration or
// usage, 1 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "synthcl/checkpoint.hpp"
#include "synthcl/config.hpp"
#include "synthcl/data.hpp"
#include "synthcl/probe.hpp"
#include "synthcl/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace synthcl;

namespace {

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_config_args(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--set", args.overrides, "Override a config key, e.g. --set synthesis.n_synthetic=64");
  cmd->add_option("--seed", args.seed, "Seed (overrides the config)");
}

TrainConfig resolve_config(const ConfigArgs& args) {
  json doc = json::object();
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw Error(Errc::IoError, "cannot open config " + args.config_path);
    doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config " + args.config_path + " is not valid JSON");
  }
  for (const auto& o : args.overrides) apply_override(doc, o);
  if (args.seed) doc["seed"] = *args.seed;
  return config_from_json(doc);
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse sweep value '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--values must list at least one number");
  return out;
}

json probe_json(const ProbeResult& r, const std::string& hash) {
  return json{{"top1", r.top1},
              {"top5", r.top5},
              {"n_eval", r.n_eval},
              {"train_loss_final", r.train_loss_final},
              {"config_hash", hash}};
}

std::pair<Dataset, Dataset> load_probe_sets(const TrainConfig& cfg, const std::string& train_arg,
                                            const std::string& eval_arg) {
  std::string train = !train_arg.empty() ? train_arg : !cfg.probe_train_path.empty() ? cfg.probe_train_path : cfg.real_path;
  if (train.empty()) throw ConfigError("no probe training set: pass --train or set probe_train_path");
  std::string eval = !eval_arg.empty() ? eval_arg : !cfg.probe_eval_path.empty() ? cfg.probe_eval_path : train;
  return {dataset_read(train), dataset_read(eval)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive pretraining with mined and synthesized hard negatives"};
  app.require_subcommand(1);

  // generate-data
  auto* gen = app.add_subcommand("generate-data", "Write toy real/eval/synthetic datasets");
  ToyGeneratorConfig gen_cfg;
  std::string gen_out;
  std::uint64_t gen_seed = 0;
  gen->add_option("--out-dir", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--classes", gen_cfg.n_classes, "Number of classes");
  gen->add_option("--per-class", gen_cfg.per_class, "Real training samples per class");
  gen->add_option("--eval-per-class", gen_cfg.eval_per_class, "Held-out real samples per class");
  gen->add_option("--synthetic-per-class", gen_cfg.synthetic_per_class, "Synthetic samples per class");
  gen->add_option("--dim", gen_cfg.dim, "Feature dimension");
  gen->add_option("--class-sep", gen_cfg.class_sep, "Norm of the class means");
  gen->add_option("--within-scale", gen_cfg.within_scale, "Per-coordinate within-class std");
  gen->add_option("--shift", gen_cfg.distribution_shift, "Offset norm of synthetic class means");

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "Run contrastive pretraining");
  ConfigArgs pre_args;
  std::string pre_out;
  std::string pre_resume;
  add_config_args(pre, pre_args);
  pre->add_option("--out-dir", pre_out, "Output directory")->required();
  pre->add_option("--resume", pre_resume, "Checkpoint to resume from");

  // probe
  auto* prb = app.add_subcommand("probe", "Linear-probe a checkpoint's online encoder");
  ConfigArgs prb_args;
  std::string prb_ckpt, prb_train, prb_eval, prb_out;
  add_config_args(prb, prb_args);
  prb->add_option("--checkpoint", prb_ckpt, "Checkpoint file")->required();
  prb->add_option("--train", prb_train, "Labeled dataset to fit the probe on");
  prb->add_option("--eval", prb_eval, "Labeled dataset to score");
  prb->add_option("--out", prb_out, "Write the result JSON here instead of stdout");
  prb->add_option("--out-dir", prb_out, "Write probe.json into this directory")->each([&](const std::string& d) {
    prb_out = (fs::path(d) / "probe.json").string();
  });

  // sweep
  auto* swp = app.add_subcommand("sweep", "Pretrain + probe across one axis");
  ConfigArgs swp_args;
  std::string swp_axis, swp_values, swp_out;
  add_config_args(swp, swp_args);
  swp->add_option("--axis", swp_axis, "hardness | synthetic_ratio | real_fraction")->required();
  swp->add_option("--values", swp_values, "Comma-separated axis values")->required();
  swp->add_option("--out-dir", swp_out, "Output directory")->required();

  // inspect-checkpoint
  auto* ins = app.add_subcommand("inspect-checkpoint", "Print a checkpoint summary as JSON");
  std::string ins_path;
  ins->add_option("checkpoint", ins_path, "Checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      gen_cfg.validate();
      Rng rng(gen_seed);
      const ToySuite suite = toy_generate_suite(gen_cfg, rng);
      const fs::path dir(gen_out);
      dataset_write(dir / "real.s2co", suite.real);
      dataset_write(dir / "eval.s2co", suite.eval);
      dataset_write(dir / "synthetic.s2co", suite.synthetic);
      std::cout << json{{"real", (dir / "real.s2co").string()},
                        {"eval", (dir / "eval.s2co").string()},
                        {"synthetic", (dir / "synthetic.s2co").string()},
                        {"n_real", suite.real.size()},
                        {"n_eval", suite.eval.size()},
                        {"n_synthetic", suite.synthetic.size()}}
                       .dump()
                << "\n";
    } else if (*pre) {
      const TrainConfig cfg = resolve_config(pre_args);
      PretrainOptions opts;
      opts.out_dir = pre_out;
      opts.quiet = false;
      if (!pre_resume.empty()) opts.resume_from = fs::path(pre_resume);
      const PretrainResult run = pretrain(cfg, opts);
      std::cout << json{{"steps", run.state.step},
                        {"final_loss", tail_mean_loss(run.metrics)},
                        {"checkpoint", (fs::path(pre_out) / "checkpoint_final.s2ck").string()},
                        {"config_hash", config_hash(cfg)}}
                       .dump()
                << "\n";
    } else if (*prb) {
      const TrainConfig cfg = resolve_config(prb_args);
      const RunState state = checkpoint_load(prb_ckpt);
      const auto [train, eval] = load_probe_sets(cfg, prb_train, prb_eval);
      const ProbeResult res = run_probe(state.pair.online, train, eval, cfg.probe);
      const std::string doc = probe_json(res, config_hash(cfg)).dump(2);
      if (prb_out.empty()) {
        std::cout << doc << "\n";
      } else {
        if (fs::path(prb_out).has_parent_path()) fs::create_directories(fs::path(prb_out).parent_path());
        std::ofstream(prb_out) << doc << "\n";
      }
    } else if (*swp) {
      const TrainConfig cfg = resolve_config(swp_args);
      const auto axis = parse_sweep_axis(swp_axis);
      if (!axis) throw ConfigError("unknown sweep axis '" + swp_axis + "'");
      const std::vector<double> values = parse_values(swp_values);
      std::optional<Dataset> real, synthetic;
      const bool needs_real = std::any_of(values.begin(), values.end(), [&](double v) {
        return ceil_fraction(*axis == SweepAxis::RealFraction ? v : cfg.mix.real_fraction, cfg.batch_size) > 0;
      });
      const bool needs_synth = std::any_of(values.begin(), values.end(), [&](double v) {
        return ceil_fraction(*axis == SweepAxis::RealFraction ? v : cfg.mix.real_fraction, cfg.batch_size) <
               cfg.batch_size;
      });
      if (needs_real) {
        if (cfg.real_path.empty()) throw ConfigError("real_path is required for this sweep");
        real = dataset_read(cfg.real_path);
      }
      if (needs_synth) {
        if (cfg.synthetic_path.empty()) throw ConfigError("synthetic_path is required for this sweep");
        synthetic = dataset_read(cfg.synthetic_path);
      }
      const auto [ptrain, peval] = load_probe_sets(cfg, "", "");
      const auto rows = sweep(cfg, *axis, values, {real ? &*real : nullptr, synthetic ? &*synthetic : nullptr},
                              {&ptrain, &peval}, swp_out);
      std::cout << sweep_csv(rows);
    } else if (*ins) {
      const RunState s = checkpoint_load(ins_path);
      json layers = json::array();
      for (const auto& l : s.pair.online.layers) layers.push_back({l.weights.rows(), l.weights.cols()});
      std::cout << json{{"step", s.step},
                        {"encoder_dims", s.pair.online.dims()},
                        {"layers", layers},
                        {"parameter_count", s.pair.online.parameter_count()},
                        {"online_checksum", params_checksum(s.pair.online)},
                        {"target_checksum", params_checksum(s.pair.target)},
                        {"queue", {{"capacity", s.queue.capacity()},
                                   {"dim", s.queue.dim()},
                                   {"fill", s.queue.fill()},
                                   {"head", s.queue.head()}}},
                        {"rng_state_bytes", s.rng.state().size()}}
                       .dump(2)
                << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include "synthcl/trainer.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>

namespace synthcl {

using nlohmann::json;

json to_json(const MetricsRecord& m) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"step", m.step},
              {"loss", m.loss},
              {"queue_fill", m.queue_fill},
              {"mean_real_hardness", opt(m.mean_real_hardness)},
              {"mean_synth_hardness", opt(m.mean_synth_hardness)},
              {"lr", m.lr},
              {"real_fraction", m.real_fraction},
              {"n_hardest", m.n_hardest},
              {"n_synthetic", m.n_synthetic},
              {"positive_logit_mean", m.positive_logit_mean},
              {"negative_logit_mean", m.negative_logit_mean},
              {"updated", m.updated}};
}

MetricsRecord metrics_from_json(const json& j) {
  auto opt = [&](const char* key) -> std::optional<double> {
    const auto& v = j.at(key);
    return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
  };
  MetricsRecord m;
  try {
    m.step = j.at("step").get<std::uint64_t>();
    m.loss = j.at("loss").is_null() ? std::nan("") : j.at("loss").get<double>();
    m.queue_fill = j.at("queue_fill").get<std::size_t>();
    m.mean_real_hardness = opt("mean_real_hardness");
    m.mean_synth_hardness = opt("mean_synth_hardness");
    m.lr = j.at("lr").get<double>();
    m.real_fraction = j.at("real_fraction").get<double>();
    m.n_hardest = j.at("n_hardest").get<std::size_t>();
    m.n_synthetic = j.at("n_synthetic").get<std::size_t>();
    m.positive_logit_mean = j.at("positive_logit_mean").get<double>();
    m.negative_logit_mean = j.at("negative_logit_mean").get<double>();
    m.updated = j.at("updated").get<bool>();
  } catch (const json::exception& e) {
    throw Error(Errc::BadShape, std::string("malformed metrics record: ") + e.what());
  }
  return m;
}

RunState init_state(const TrainConfig& cfg) {
  cfg.validate();
  RunState s;
  s.rng = Rng(cfg.seed);
  s.pair.online = encoder_init(cfg.encoder_dims, s.rng);
  s.pair.target = s.pair.online;
  s.pair.momentum = cfg.momentum;
  s.queue = NegativeQueue(cfg.queue_capacity, cfg.encoder_dims.back());
  return s;
}

double lr_at(const TrainConfig& cfg, std::uint64_t step, std::uint64_t total_steps) {
  if (!cfg.cosine_lr || total_steps == 0) return cfg.lr;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return std::max(cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t)), cfg.lr * 1e-6);
}

MetricsRecord train_step(RunState& state, const Mat& batch, const TrainConfig& cfg, double lr) {
  const std::size_t b = batch.rows();
  if (b == 0) throw Error(Errc::EmptyInput, "empty training batch");
  EncoderPair& pair = state.pair;

  auto [view1, view2] = augment_batch(batch, cfg.augmentation, state.rng);
  const Mat views = vstack(view1, view2);
  const ForwardTrace trace = encoder_forward(pair.online, views);
  const Mat keys = encoder_embed(pair.target, views);
  const Mat& queries = trace.embeddings;
  const std::size_t d = queries.cols();

  const std::size_t fill = state.queue.fill();
  const Mat snapshot = fill > 0 ? state.queue.snapshot() : Mat(0, d);
  const std::size_t n_hard = cfg.synthesis.n_hardest;
  const std::size_t n_synth = cfg.synthesis.n_synthetic;

  MetricsRecord rec;
  rec.lr = lr;
  rec.real_fraction = cfg.mix.real_fraction;
  rec.n_hardest = n_hard;
  rec.n_synthetic = n_synth;

  // Mining and synthesis run only once the queue holds N keys.
  std::vector<Mat> extras;
  if (n_hard > 0 && fill >= n_hard) {
    const Mat sims = matmul_bt(queries, snapshot);
    double real_sum = 0.0;
    double synth_sum = 0.0;
    if (n_synth > 0) extras.resize(queries.rows());
    for (std::size_t r = 0; r < queries.rows(); ++r) {
      const HardNegativeSet hard = mine_hardest_from_sims(sims.row(r), snapshot, n_hard, r);
      if (n_synth > 0) {
        SyntheticNegativeBatch synth = synthesize(queries.row(r), hard, cfg.synthesis, state.rng);
        const HardnessStats hs = hardness_stats(queries.row(r), hard.members, synth.rows);
        real_sum += hs.mean_real_sim;
        synth_sum += hs.mean_synth_sim;
        extras[r] = std::move(synth.rows);
      } else {
        double s = 0.0;
        for (double v : hard.member_sims) s += v;
        real_sum += s / static_cast<double>(n_hard);
      }
    }
    const double inv = 1.0 / static_cast<double>(queries.rows());
    rec.mean_real_hardness = real_sum * inv;
    if (n_synth > 0) rec.mean_synth_hardness = synth_sum * inv;
  }

  const Mat q1 = slice_rows(queries, 0, b);
  const Mat q2 = slice_rows(queries, b, 2 * b);
  const Mat k1 = slice_rows(keys, 0, b);
  const Mat k2 = slice_rows(keys, b, 2 * b);
  const std::span<const Mat> all_extras(extras);
  const std::span<const Mat> extras1 = extras.empty() ? all_extras : all_extras.first(b);
  const std::span<const Mat> extras2 = extras.empty() ? all_extras : all_extras.subspan(b);
  const LossConfig lcfg = cfg.loss_config();

  Mat grad;
  if (cfg.symmetric) {
    SymmetricLossOutput out = info_nce_symmetric(q1, k1, q2, k2, snapshot, extras1, extras2, lcfg);
    rec.loss = out.loss;
    rec.positive_logit_mean = out.diagnostics.positive_logit_mean;
    rec.negative_logit_mean = out.diagnostics.negative_logit_mean;
    grad = vstack(out.grad_q1, out.grad_q2);
  } else {
    LossOutput out = info_nce(q1, k2, snapshot, extras1, lcfg);
    rec.loss = out.loss;
    rec.positive_logit_mean = out.diagnostics.positive_logit_mean;
    rec.negative_logit_mean = out.diagnostics.negative_logit_mean;
    grad = vstack(out.grad_q, Mat(b, d));
  }

  rec.updated = !(cfg.skip_until_fill && fill < n_hard);
  if (rec.updated) {
    const Gradients grads = encoder_backward(pair.online, trace, grad);
    sgd_step(pair.online, grads, lr, cfg.weight_decay);
  }
  ema_update(pair);
  if (cfg.enqueue) state.queue.enqueue(k2);

  ++state.step;
  rec.step = state.step;
  rec.queue_fill = state.queue.fill();
  return rec;
}

namespace {

void check_state_matches(const RunState& s, const TrainConfig& cfg) {
  if (s.pair.online.dims() != cfg.encoder_dims) {
    throw ConfigError("checkpoint encoder dims do not match config.encoder_dims");
  }
  if (s.queue.capacity() != cfg.queue_capacity || s.queue.dim() != cfg.encoder_dims.back()) {
    throw ConfigError("checkpoint queue shape does not match config");
  }
}

std::vector<MetricsRecord> read_metrics_upto(const std::filesystem::path& path, std::uint64_t max_step) {
  std::vector<MetricsRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::BadShape, "malformed metrics line in " + path.string());
    MetricsRecord m = metrics_from_json(j);
    if (m.step <= max_step) out.push_back(m);
  }
  return out;
}

}  // namespace

PretrainResult pretrain(const TrainConfig& cfg, const DataSources& data, const PretrainOptions& opts) {
  cfg.validate();
  const std::uint64_t sampler_seed = splitmix64(cfg.seed ^ 0x6d69786564ULL);
  MixedBatchSampler sampler(data.real, data.synthetic, cfg.mix, cfg.batch_size, sampler_seed);
  const Dataset* any = sampler.real_per_batch() > 0 ? data.real : data.synthetic;
  if (any->dim() != cfg.encoder_dims.front()) {
    throw ConfigError("dataset dim " + std::to_string(any->dim()) + " != encoder input dim " +
                      std::to_string(cfg.encoder_dims.front()));
  }
  if (!opts.quiet) {
    for (Origin o : {Origin::Real, Origin::Synthetic}) {
      if (sampler.wraps(o)) {
        std::cerr << "warning: " << (o == Origin::Real ? "real" : "synthetic")
                  << " dataset is smaller than its per-epoch demand; wrapping with reshuffle\n";
      }
    }
  }

  PretrainResult result;
  result.steps_per_epoch = sampler.steps_per_epoch();
  result.total_steps = cfg.max_steps > 0 ? cfg.max_steps : cfg.epochs * result.steps_per_epoch;

  const bool to_disk = !opts.out_dir.empty();
  const auto metrics_path = opts.out_dir / "metrics.jsonl";
  const auto last_path = opts.out_dir / "checkpoint_last.s2ck";
  const auto final_path = opts.out_dir / "checkpoint_final.s2ck";

  if (opts.resume_from) {
    result.state = checkpoint_load(*opts.resume_from);
    check_state_matches(result.state, cfg);
    if (to_disk) result.metrics = read_metrics_upto(metrics_path, result.state.step);
  } else {
    result.state = init_state(cfg);
  }
  result.state.pair.momentum = cfg.momentum;
  RunState& state = result.state;

  std::ofstream metrics_out;
  if (to_disk) {
    std::filesystem::create_directories(opts.out_dir);
    std::ofstream(opts.out_dir / "config.json") << to_json(cfg).dump(2) << "\n";
    metrics_out.open(metrics_path, std::ios::trunc);
    if (!metrics_out) throw Error(Errc::IoError, "cannot open " + metrics_path.string());
    for (const auto& m : result.metrics) metrics_out << to_json(m).dump() << "\n";
    metrics_out.flush();
  }

  while (state.step < result.total_steps) {
    if (opts.stop_at_step && state.step >= *opts.stop_at_step) {
      if (to_disk) {
        metrics_out.flush();
        checkpoint_save(state, last_path);
      }
      return result;
    }
    const Mat batch = sampler.gather(sampler.batch(state.step));
    MetricsRecord rec = train_step(state, batch, cfg, lr_at(cfg, state.step, result.total_steps));
    if (!std::isfinite(rec.loss)) throw Error(Errc::BadRange, "training diverged at step " + std::to_string(rec.step));
    if (to_disk) {
      metrics_out << to_json(rec).dump() << "\n";
      if (rec.step % 50 == 0) metrics_out.flush();
      if (rec.step % result.steps_per_epoch == 0) checkpoint_save(state, last_path);
    }
    if (!opts.quiet && rec.step % 100 == 0) {
      std::cerr << "step " << rec.step << "/" << result.total_steps << " loss " << rec.loss << "\n";
    }
    result.metrics.push_back(rec);
  }
  if (to_disk) {
    metrics_out.flush();
    if (!metrics_out) throw Error(Errc::IoError, "failed writing " + metrics_path.string());
    checkpoint_save(state, final_path);
  }
  return result;
}

namespace {

struct LoadedSources {
  std::optional<Dataset> real;
  std::optional<Dataset> synthetic;
};

LoadedSources load_sources(const TrainConfig& cfg) {
  LoadedSources out;
  const std::size_t real_per_batch = ceil_fraction(cfg.mix.real_fraction, cfg.batch_size);
  if (real_per_batch > 0) {
    if (cfg.real_path.empty()) throw ConfigError("real_path is required when real_fraction > 0");
    out.real = dataset_read(cfg.real_path);
  }
  if (real_per_batch < cfg.batch_size) {
    if (cfg.synthetic_path.empty()) throw ConfigError("synthetic_path is required when real_fraction < 1");
    out.synthetic = dataset_read(cfg.synthetic_path);
  }
  return out;
}

}  // namespace

PretrainResult pretrain(const TrainConfig& cfg, const PretrainOptions& opts) {
  cfg.validate();
  const LoadedSources src = load_sources(cfg);
  DataSources data{src.real ? &*src.real : nullptr, src.synthetic ? &*src.synthetic : nullptr};
  return pretrain(cfg, data, opts);
}

double tail_mean_loss(const std::vector<MetricsRecord>& metrics, std::size_t window) {
  if (metrics.empty()) return 0.0;
  const std::size_t n = std::min(window, metrics.size());
  double s = 0.0;
  for (std::size_t i = metrics.size() - n; i < metrics.size(); ++i) s += metrics[i].loss;
  return s / static_cast<double>(n);
}

double head_mean_loss(const std::vector<MetricsRecord>& metrics, std::size_t window) {
  if (metrics.empty()) return 0.0;
  const std::size_t n = std::min(window, metrics.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += metrics[i].loss;
  return s / static_cast<double>(n);
}

std::optional<SweepAxis> parse_sweep_axis(std::string_view name) noexcept {
  if (name == "hardness") return SweepAxis::Hardness;
  if (name == "synthetic_ratio") return SweepAxis::SyntheticRatio;
  if (name == "real_fraction") return SweepAxis::RealFraction;
  return std::nullopt;
}

std::string_view sweep_axis_name(SweepAxis axis) noexcept {
  switch (axis) {
    case SweepAxis::Hardness: return "hardness";
    case SweepAxis::SyntheticRatio: return "synthetic_ratio";
    case SweepAxis::RealFraction: return "real_fraction";
  }
  return "unknown";
}

TrainConfig apply_sweep_value(const TrainConfig& base, SweepAxis axis, double value) {
  TrainConfig cfg = base;
  switch (axis) {
    case SweepAxis::Hardness:
      if (!(value >= 1.0) || value != std::floor(value)) throw ConfigError("hardness values must be positive integers");
      cfg.synthesis.n_hardest = static_cast<std::size_t>(value);
      break;
    case SweepAxis::SyntheticRatio:
      cfg.synthesis.n_synthetic = synthetic_count_for_ratio(value, cfg.queue_capacity);
      break;
    case SweepAxis::RealFraction:
      cfg.mix.real_fraction = value;
      break;
  }
  cfg.validate();
  return cfg;
}

std::vector<SweepRow> sweep(const TrainConfig& base, SweepAxis axis, const std::vector<double>& values,
                            const DataSources& data, const ProbeSources& probe,
                            const std::filesystem::path& out_dir) {
  if (!probe.train || !probe.eval) throw ConfigError("sweep needs probe train and eval datasets");
  std::vector<TrainConfig> configs;
  configs.reserve(values.size());
  for (double v : values) configs.push_back(apply_sweep_value(base, axis, v));

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    PretrainOptions opts;
    if (!out_dir.empty()) opts.out_dir = out_dir / ("point_" + std::to_string(i));
    const PretrainResult run = pretrain(configs[i], data, opts);
    SweepRow row;
    row.axis_value = values[i];
    row.probe = run_probe(run.state.pair.online, *probe.train, *probe.eval, configs[i].probe);
    row.final_loss = tail_mean_loss(run.metrics);
    rows.push_back(row);
  }
  if (!out_dir.empty()) {
    std::ofstream(out_dir / "sweep.csv") << sweep_csv(rows);
  }
  return rows;
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "axis_value,top1,top5,final_loss\n";
  for (const auto& r : rows) {
    out += format_double(r.axis_value) + "," + format_double(r.probe.top1) + "," +
           format_double(r.probe.top5) + "," + format_double(r.final_loss) + "\n";
  }
  return out;
}

}  // namespace synthcl

#include "synthcl/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace synthcl {

using nlohmann::json;

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw ConfigError("momentum must lie in [0, 1]");
  if (queue_capacity == 0) throw ConfigError("queue_capacity must be positive");
  if (batch_size > queue_capacity) throw ConfigError("batch_size must not exceed queue_capacity");
  loss_config().validate();
  if (encoder_dims.size() < 2) throw ConfigError("encoder_dims needs at least two entries");
  for (auto d : encoder_dims) {
    if (d == 0) throw ConfigError("encoder_dims must be positive");
  }
  synthesis.validate();
  if (synthesis.n_hardest > queue_capacity) throw ConfigError("synthesis.n_hardest must not exceed queue_capacity");
  mix.validate();
  augmentation.validate();
  probe.validate();
}

namespace {

json pair_json(const std::pair<double, double>& p) { return json::array({p.first, p.second}); }

}  // namespace

json to_json(const TrainConfig& c) {
  json strategies = json::array();
  for (Strategy s : c.synthesis.strategies) strategies.push_back(std::string(strategy_name(s)));
  return json{
      {"seed", c.seed},
      {"epochs", c.epochs},
      {"max_steps", c.max_steps},
      {"batch_size", c.batch_size},
      {"lr", c.lr},
      {"weight_decay", c.weight_decay},
      {"cosine_lr", c.cosine_lr},
      {"momentum", c.momentum},
      {"queue_capacity", c.queue_capacity},
      {"temperature", c.temperature},
      {"symmetric", c.symmetric},
      {"enqueue", c.enqueue},
      {"skip_until_fill", c.skip_until_fill},
      {"encoder_dims", c.encoder_dims},
      {"synthesis",
       {{"strategies", strategies},
        {"n_hardest", c.synthesis.n_hardest},
        {"n_synthetic", c.synthesis.n_synthetic},
        {"alpha_range", pair_json(c.synthesis.alpha_range)},
        {"beta_range", pair_json(c.synthesis.beta_range)},
        {"sigma", c.synthesis.sigma},
        {"mask_fraction", c.synthesis.mask_fraction},
        {"eta", c.synthesis.eta}}},
      {"mix", {{"real_fraction", c.mix.real_fraction}}},
      {"augmentation",
       {{"noise_sigma", c.augmentation.noise_sigma},
        {"scale_range", pair_json(c.augmentation.scale_range)},
        {"mask_fraction", c.augmentation.mask_fraction}}},
      {"probe", {{"lr", c.probe.lr}, {"steps", c.probe.steps}}},
      {"real_path", c.real_path},
      {"synthetic_path", c.synthetic_path},
      {"probe_train_path", c.probe_train_path},
      {"probe_eval_path", c.probe_eval_path},
  };
}

namespace {

// Reads object members into typed fields and rejects anything unrecognized.
class Reader {
 public:
  Reader(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError(where("") + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<long long>() >= 0)) {
          throw ConfigError(where(key) + " must be a non-negative integer");
        }
      }
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw ConfigError(where(key) + " must be a number");
      }
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  void read_pair(const char* key, std::pair<double, double>& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
      throw ConfigError(where(key) + " must be a [lo, hi] pair of numbers");
    }
    out = {(*it)[0].get<double>(), (*it)[1].get<double>()};
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key " + where(it.key()));
    }
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

}  // namespace

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  Reader r(j, "");
  r.read("seed", c.seed);
  r.read("epochs", c.epochs);
  r.read("max_steps", c.max_steps);
  r.read("batch_size", c.batch_size);
  r.read("lr", c.lr);
  r.read("weight_decay", c.weight_decay);
  r.read("cosine_lr", c.cosine_lr);
  r.read("momentum", c.momentum);
  r.read("queue_capacity", c.queue_capacity);
  r.read("temperature", c.temperature);
  r.read("symmetric", c.symmetric);
  r.read("enqueue", c.enqueue);
  r.read("skip_until_fill", c.skip_until_fill);
  if (const json* dims = r.child("encoder_dims")) {
    if (!dims->is_array()) throw ConfigError("encoder_dims must be an array");
    c.encoder_dims.clear();
    for (const auto& d : *dims) {
      if (!d.is_number_integer() || d.get<long long>() <= 0) throw ConfigError("encoder_dims must be positive integers");
      c.encoder_dims.push_back(d.get<std::size_t>());
    }
  }
  if (const json* s = r.child("synthesis")) {
    Reader sr(*s, "synthesis");
    if (const json* names = sr.child("strategies")) {
      if (!names->is_array()) throw ConfigError("synthesis.strategies must be an array");
      c.synthesis.strategies.clear();
      for (const auto& n : *names) {
        if (!n.is_string()) throw ConfigError("synthesis.strategies entries must be strings");
        auto parsed = parse_strategy(n.get<std::string>());
        if (!parsed) throw ConfigError("unknown synthesis strategy '" + n.get<std::string>() + "'");
        c.synthesis.strategies.push_back(*parsed);
      }
    }
    sr.read("n_hardest", c.synthesis.n_hardest);
    sr.read("n_synthetic", c.synthesis.n_synthetic);
    sr.read_pair("alpha_range", c.synthesis.alpha_range);
    sr.read_pair("beta_range", c.synthesis.beta_range);
    sr.read("sigma", c.synthesis.sigma);
    sr.read("mask_fraction", c.synthesis.mask_fraction);
    sr.read("eta", c.synthesis.eta);
    sr.finish();
  }
  if (const json* m = r.child("mix")) {
    Reader mr(*m, "mix");
    mr.read("real_fraction", c.mix.real_fraction);
    mr.finish();
  }
  if (const json* a = r.child("augmentation")) {
    Reader ar(*a, "augmentation");
    ar.read("noise_sigma", c.augmentation.noise_sigma);
    ar.read_pair("scale_range", c.augmentation.scale_range);
    ar.read("mask_fraction", c.augmentation.mask_fraction);
    ar.finish();
  }
  if (const json* p = r.child("probe")) {
    Reader pr(*p, "probe");
    pr.read("lr", c.probe.lr);
    pr.read("steps", c.probe.steps);
    pr.finish();
  }
  r.read("real_path", c.real_path);
  r.read("synthetic_path", c.synthetic_path);
  r.read("probe_train_path", c.probe_train_path);
  r.read("probe_eval_path", c.probe_eval_path);
  r.finish();
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot_pos = key.find('.', start);
    const std::string part = key.substr(start, dot_pos == std::string::npos ? std::string::npos : dot_pos - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    if (dot_pos == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot_pos + 1;
  }
}

std::string config_hash(const TrainConfig& cfg) {
  const std::string canonical = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return out;
}

std::size_t synthetic_count_for_ratio(double ratio, std::size_t queue_capacity) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("synthetic ratio must lie in [0, 1)");
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(queue_capacity) / (1.0 - ratio)));
}

}  // namespace synthcl

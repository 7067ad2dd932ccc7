#include "synthcl/data.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "synthcl/bytes.hpp"

namespace synthcl {

Sample Dataset::sample(std::size_t i) const {
  auto row = features.row(i);
  return Sample{Vec(row.begin(), row.end()), labels.at(i)};
}

bool Dataset::fully_labeled() const {
  for (const auto& l : labels) {
    if (!l) return false;
  }
  return true;
}

void Dataset::validate() const {
  if (size() == 0 || dim() == 0) throw Error(Errc::EmptyInput, "dataset is empty");
  if (labels.size() != size()) throw Error(Errc::BadShape, "one label slot per sample required");
  if (!all_finite(features.values())) throw Error(Errc::BadShape, "dataset features must be finite");
  for (const auto& l : labels) {
    if (l && *l >= n_classes) {
      throw Error(Errc::BadLabels, "label " + std::to_string(*l) + " >= n_classes " + std::to_string(n_classes));
    }
  }
}

void MixConfig::validate() const {
  if (!(real_fraction >= 0.0 && real_fraction <= 1.0)) throw ConfigError("mix.real_fraction must lie in [0, 1]");
}

void AugmentationParams::validate() const {
  if (!(noise_sigma >= 0.0)) throw ConfigError("augmentation.noise_sigma must be >= 0");
  if (!(scale_range.first > 0.0 && scale_range.first <= scale_range.second)) {
    throw ConfigError("augmentation.scale_range must satisfy 0 < lo <= hi");
  }
  if (!(mask_fraction >= 0.0 && mask_fraction < 1.0)) {
    throw ConfigError("augmentation.mask_fraction must lie in [0, 1)");
  }
}

void ToyGeneratorConfig::validate() const {
  if (n_classes == 0 || per_class == 0 || dim == 0) throw ConfigError("generator counts must be positive");
  if (!(class_sep > 0.0)) throw ConfigError("class_sep must be > 0");
  if (!(within_scale >= 0.0)) throw ConfigError("within_scale must be >= 0");
  if (!(distribution_shift >= 0.0)) throw ConfigError("distribution_shift must be >= 0");
}

Mat draw_class_means(std::uint32_t n_classes, std::size_t dim, double class_sep, Rng& rng) {
  if (n_classes == 0 || dim == 0) throw ConfigError("generator counts must be positive");
  if (!(class_sep > 0.0)) throw ConfigError("class_sep must be > 0");
  Mat means(n_classes, dim);
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto row = means.row(c);
    for (double& x : row) x = rng.gauss(0.0, 1.0);
    l2_normalize_inplace(row);
    for (double& x : row) x *= class_sep;
  }
  return means;
}

Mat shift_class_means(const Mat& means, double shift, Rng& rng) {
  if (!(shift >= 0.0)) throw ConfigError("distribution_shift must be >= 0");
  Mat out = means;
  if (shift == 0.0) return out;
  Vec offset(means.cols());
  for (std::size_t c = 0; c < means.rows(); ++c) {
    for (double& x : offset) x = rng.gauss(0.0, 1.0);
    l2_normalize_inplace(offset);
    auto row = out.row(c);
    for (std::size_t i = 0; i < row.size(); ++i) row[i] += shift * offset[i];
  }
  return out;
}

Dataset sample_around_means(const Mat& means, std::size_t per_class, double within_scale,
                            Origin origin, Rng& rng) {
  if (per_class == 0) throw ConfigError("per_class must be positive");
  if (!(within_scale >= 0.0)) throw ConfigError("within_scale must be >= 0");
  Dataset ds;
  ds.origin = origin;
  ds.n_classes = static_cast<std::uint32_t>(means.rows());
  ds.features = Mat(means.rows() * per_class, means.cols());
  ds.labels.reserve(ds.features.rows());
  std::size_t r = 0;
  for (std::size_t c = 0; c < means.rows(); ++c) {
    auto mean = means.row(c);
    for (std::size_t s = 0; s < per_class; ++s, ++r) {
      auto row = ds.features.row(r);
      for (std::size_t i = 0; i < row.size(); ++i) row[i] = mean[i] + rng.gauss(0.0, within_scale);
      ds.labels.emplace_back(static_cast<std::uint32_t>(c));
    }
  }
  return ds;
}

Dataset toy_generate(std::uint32_t n_classes, std::size_t per_class, std::size_t dim,
                     double class_sep, double within_scale, Rng& rng, Origin origin) {
  const Mat means = draw_class_means(n_classes, dim, class_sep, rng);
  return sample_around_means(means, per_class, within_scale, origin, rng);
}

ToySuite toy_generate_suite(const ToyGeneratorConfig& cfg, Rng& rng) {
  cfg.validate();
  ToySuite suite;
  suite.real_means = draw_class_means(cfg.n_classes, cfg.dim, cfg.class_sep, rng);
  suite.real = sample_around_means(suite.real_means, cfg.per_class, cfg.within_scale, Origin::Real, rng);
  suite.eval = sample_around_means(suite.real_means, std::max<std::size_t>(cfg.eval_per_class, 1),
                                   cfg.within_scale, Origin::Real, rng);
  suite.synthetic_means = shift_class_means(suite.real_means, cfg.distribution_shift, rng);
  suite.synthetic = sample_around_means(suite.synthetic_means, std::max<std::size_t>(cfg.synthetic_per_class, 1),
                                        cfg.within_scale, Origin::Synthetic, rng);
  return suite;
}

namespace {

Vec augment_view(std::span<const double> x, const AugmentationParams& p, Rng& rng) {
  const double scale =
      p.scale_range.first < p.scale_range.second ? rng.uniform(p.scale_range.first, p.scale_range.second)
                                                 : p.scale_range.first;
  Vec v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] * scale;
  if (p.noise_sigma > 0.0) {
    for (double& e : v) e += rng.gauss(0.0, p.noise_sigma);
  }
  const std::size_t n_masked = ceil_fraction(p.mask_fraction, v.size());
  if (n_masked > 0) {
    for (std::size_t i : sample_without_replacement(v.size(), n_masked, rng)) v[i] = 0.0;
  }
  return v;
}

}  // namespace

std::pair<Vec, Vec> two_views(std::span<const double> features, const AugmentationParams& params, Rng& rng) {
  params.validate();
  Vec vq = augment_view(features, params, rng);
  Vec vk = augment_view(features, params, rng);
  return {std::move(vq), std::move(vk)};
}

std::pair<Mat, Mat> augment_batch(const Mat& batch, const AugmentationParams& params, Rng& rng) {
  params.validate();
  Mat q(batch.rows(), batch.cols());
  Mat k(batch.rows(), batch.cols());
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    Vec vq = augment_view(batch.row(r), params, rng);
    Vec vk = augment_view(batch.row(r), params, rng);
    std::copy(vq.begin(), vq.end(), q.row(r).begin());
    std::copy(vk.begin(), vk.end(), k.row(r).begin());
  }
  return {std::move(q), std::move(k)};
}

MixedBatchSampler::MixedBatchSampler(const Dataset* real, const Dataset* synthetic, MixConfig mix,
                                     std::size_t batch_size, std::uint64_t seed)
    : real_(real), synthetic_(synthetic), mix_(mix), batch_size_(batch_size), seed_(seed) {
  mix_.validate();
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  real_per_batch_ = ceil_fraction(mix_.real_fraction, batch_size);
  if (real_per_batch_ > 0 && (!real_ || real_->size() == 0)) {
    throw ConfigError("real fraction > 0 requires a non-empty real dataset");
  }
  if (synthetic_per_batch() > 0 && (!synthetic_ || synthetic_->size() == 0)) {
    throw ConfigError("real fraction < 1 requires a non-empty synthetic dataset");
  }
  if (real_per_batch_ > 0 && synthetic_per_batch() > 0 && real_->dim() != synthetic_->dim()) {
    throw ConfigError("real and synthetic datasets differ in feature dim");
  }
  const std::size_t base = real_per_batch_ > 0 ? real_->size() : synthetic_->size();
  steps_per_epoch_ = std::max<std::size_t>(1, base / batch_size);
}

std::size_t MixedBatchSampler::source_size(Origin source) const {
  const Dataset* ds = source == Origin::Real ? real_ : synthetic_;
  return ds ? ds->size() : 0;
}

bool MixedBatchSampler::wraps(Origin source) const {
  const std::size_t per_batch = source == Origin::Real ? real_per_batch_ : synthetic_per_batch();
  return per_batch > 0 && per_batch * steps_per_epoch_ > source_size(source);
}

std::vector<std::size_t> MixedBatchSampler::permutation(Origin source, std::uint64_t epoch,
                                                        std::uint64_t pass) const {
  std::uint64_t h = splitmix64(seed_);
  h = splitmix64(h ^ static_cast<std::uint64_t>(source));
  h = splitmix64(h ^ epoch);
  h = splitmix64(h ^ pass);
  Rng rng(h);
  return random_permutation(source_size(source), rng);
}

MixedBatch MixedBatchSampler::batch(std::uint64_t step) const {
  const std::uint64_t epoch = step / steps_per_epoch_;
  const std::uint64_t in_epoch = step % steps_per_epoch_;
  MixedBatch out;
  out.reserve(batch_size_);
  auto take = [&](Origin source, std::size_t per_batch) {
    if (per_batch == 0) return;
    const std::size_t n = source_size(source);
    std::uint64_t cached_pass = std::numeric_limits<std::uint64_t>::max();
    std::vector<std::size_t> perm;
    for (std::size_t i = 0; i < per_batch; ++i) {
      const std::uint64_t pos = in_epoch * per_batch + i;
      const std::uint64_t pass = pos / n;
      if (pass != cached_pass) {
        perm = permutation(source, epoch, pass);
        cached_pass = pass;
      }
      out.push_back({source, perm[pos % n]});
    }
  };
  take(Origin::Real, real_per_batch_);
  take(Origin::Synthetic, synthetic_per_batch());
  return out;
}

Mat MixedBatchSampler::gather(const MixedBatch& batch) const {
  const std::size_t dim = real_per_batch_ > 0 ? real_->dim() : synthetic_->dim();
  Mat out(batch.size(), dim);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const Dataset& ds = batch[r].source == Origin::Real ? *real_ : *synthetic_;
    auto src = ds.features.row(batch[r].index);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

std::vector<MixedBatch> mixed_batches(const Dataset* real, const Dataset* synthetic, MixConfig mix,
                                      std::size_t batch_size, std::size_t epochs, Rng& rng) {
  MixedBatchSampler sampler(real, synthetic, mix, batch_size, rng.next_u64());
  std::vector<MixedBatch> out;
  const std::size_t steps = epochs * sampler.steps_per_epoch();
  out.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) out.push_back(sampler.batch(s));
  return out;
}

std::vector<std::uint8_t> dataset_encode(const Dataset& dataset) {
  dataset.validate();
  if (dataset.size() > std::numeric_limits<std::uint32_t>::max() ||
      dataset.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::BadShape, "dataset too large for the file format");
  }
  ByteWriter w;
  w.put_bytes("S2CO");
  w.put_u32(kDatasetVersion);
  w.put_u8(static_cast<std::uint8_t>(dataset.origin));
  w.put_u32(dataset.n_classes);
  w.put_u32(static_cast<std::uint32_t>(dataset.size()));
  w.put_u32(static_cast<std::uint32_t>(dataset.dim()));
  for (double x : dataset.features.values()) w.put_f32(static_cast<float>(x));
  for (const auto& l : dataset.labels) w.put_u32(l ? *l : kUnlabeled);
  return w.take();
}

Dataset dataset_decode(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.get_bytes(4) != "S2CO") throw Error(Errc::BadMagic, "not an S2CO dataset");
  const std::uint32_t version = r.get_u32();
  if (version != kDatasetVersion) {
    throw Error(Errc::VersionUnsupported, "dataset version " + std::to_string(version));
  }
  Dataset ds;
  const std::uint8_t origin = r.get_u8();
  if (origin > 1) throw Error(Errc::BadShape, "unknown origin tag " + std::to_string(origin));
  ds.origin = static_cast<Origin>(origin);
  ds.n_classes = r.get_u32();
  const std::uint64_t n = r.get_u32();
  const std::uint64_t dim = r.get_u32();
  r.need(n * dim * 4 + n * 4);
  ds.features = Mat(n, dim);
  for (double& x : ds.features.values()) x = static_cast<double>(r.get_f32());
  ds.labels.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint32_t l = r.get_u32();
    ds.labels.push_back(l == kUnlabeled ? std::nullopt : std::optional<std::uint32_t>(l));
  }
  if (r.remaining() != 0) throw Error(Errc::BadShape, "trailing bytes after dataset payload");
  ds.validate();
  return ds;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::IoError, "read failed: " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot open " + tmp + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoError, "write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::IoError, "cannot rename " + tmp + ": " + ec.message());
}

void dataset_write(const std::filesystem::path& path, const Dataset& dataset) {
  write_file_bytes(path, dataset_encode(dataset));
}

Dataset dataset_read(const std::filesystem::path& path) { return dataset_decode(read_file_bytes(path)); }

}  // namespace synthcl

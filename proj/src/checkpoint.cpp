#include "synthcl/checkpoint.hpp"

#include <limits>
#include <string>

#include <zlib.h>

#include "synthcl/bytes.hpp"
#include "synthcl/data.hpp"

namespace synthcl {

namespace {

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - pos, std::numeric_limits<uInt>::max());
    crc = crc32(crc, bytes.data() + pos, static_cast<uInt>(chunk));
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void put_encoder(ByteWriter& w, const EncoderParams& p) {
  w.put_u32(static_cast<std::uint32_t>(p.layers.size()));
  w.put_u8(static_cast<std::uint8_t>(p.activation));
  for (const auto& l : p.layers) {
    w.put_u32(static_cast<std::uint32_t>(l.weights.rows()));
    w.put_u32(static_cast<std::uint32_t>(l.weights.cols()));
    for (double x : l.weights.values()) w.put_f64(x);
    for (double x : l.bias) w.put_f64(x);
  }
}

EncoderParams get_encoder(ByteReader& r) {
  EncoderParams p;
  const std::uint32_t n_layers = r.get_u32();
  const std::uint8_t act = r.get_u8();
  if (act > 1) throw Error(Errc::BadShape, "unknown activation tag");
  p.activation = static_cast<Activation>(act);
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const std::uint64_t out = r.get_u32();
    const std::uint64_t in = r.get_u32();
    r.need((out * in + out) * 8);
    DenseLayer layer{Mat(out, in), Vec(out)};
    for (double& x : layer.weights.values()) x = r.get_f64();
    for (double& x : layer.bias) x = r.get_f64();
    if (!p.layers.empty() && p.layers.back().weights.rows() != in) {
      throw Error(Errc::BadShape, "checkpoint layer shapes do not chain");
    }
    p.layers.push_back(std::move(layer));
  }
  if (p.layers.empty()) throw Error(Errc::BadShape, "checkpoint encoder has no layers");
  return p;
}

}  // namespace

std::vector<std::uint8_t> checkpoint_encode(const RunState& s) {
  ByteWriter w;
  w.put_bytes("S2CK");
  w.put_u32(kCheckpointVersion);
  w.put_u64(s.step);
  const std::string blob = s.rng.state();
  w.put_u64(blob.size());
  w.put_bytes(blob);
  put_encoder(w, s.pair.online);
  put_encoder(w, s.pair.target);
  w.put_u64(s.queue.capacity());
  w.put_u64(s.queue.dim());
  w.put_u64(s.queue.fill());
  w.put_u64(s.queue.head());
  for (double x : s.queue.storage().values()) w.put_f64(x);
  const std::uint32_t crc = crc32_of(w.bytes());
  w.put_u32(crc);
  return w.take();
}

RunState checkpoint_decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && std::string(bytes.begin(), bytes.begin() + 4) != "S2CK") {
    throw Error(Errc::BadMagic, "not an S2CK checkpoint");
  }
  if (bytes.size() < 12) throw Error(Errc::TruncatedFile, "checkpoint too short");
  {
    ByteReader head(bytes.subspan(4, 4));
    const std::uint32_t version = head.get_u32();
    if (version != kCheckpointVersion) {
      throw Error(Errc::VersionUnsupported, "checkpoint version " + std::to_string(version));
    }
  }
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.last(4));
  if (crc32_of(body) != tail.get_u32()) throw Error(Errc::ChecksumMismatch, "checkpoint CRC32 mismatch");

  ByteReader r(body);
  r.get_bytes(8);
  RunState s;
  s.step = r.get_u64();
  const std::uint64_t blob_len = r.get_u64();
  r.need(blob_len);
  s.rng.set_state(r.get_bytes(blob_len));
  s.pair.online = get_encoder(r);
  s.pair.target = get_encoder(r);
  check_congruent(s.pair.online, s.pair.target);
  const std::uint64_t capacity = r.get_u64();
  const std::uint64_t dim = r.get_u64();
  const std::uint64_t fill = r.get_u64();
  const std::uint64_t head = r.get_u64();
  r.need(capacity * dim * 8);
  Mat storage(capacity, dim);
  for (double& x : storage.values()) x = r.get_f64();
  s.queue = NegativeQueue(capacity, dim, fill, head, std::move(storage));
  if (r.remaining() != 0) throw Error(Errc::BadShape, "trailing bytes in checkpoint");
  return s;
}

void checkpoint_save(const RunState& state, const std::filesystem::path& path) {
  write_file_bytes(path, checkpoint_encode(state));
}

RunState checkpoint_load(const std::filesystem::path& path) { return checkpoint_decode(read_file_bytes(path)); }

std::uint32_t params_checksum(const EncoderParams& params) {
  ByteWriter w;
  for (const auto& l : params.layers) {
    for (double x : l.weights.values()) w.put_f64(x);
    for (double x : l.bias) w.put_f64(x);
  }
  return crc32_of(w.bytes());
}

}  // namespace synthcl

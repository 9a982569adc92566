#include "mejem/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mejem/errors.hpp"

namespace mejem {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'E', 'J', 'E', 'M', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void pod(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void u64(std::uint64_t v) { pod(v); }
  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void doubles(std::span<const double> v) {
    u64(v.size());
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in_) throw DataError("checkpoint: truncated file");
    return v;
  }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  std::uint64_t length(std::uint64_t limit = 1ULL << 32) {
    const auto n = u64();
    if (n > limit) throw DataError("checkpoint: implausible length field");
    return n;
  }
  std::string str() {
    std::string s(length(), '\0');
    in_.read(s.data(), static_cast<std::streamsize>(s.size()));
    if (!in_) throw DataError("checkpoint: truncated string");
    return s;
  }
  std::vector<double> doubles() {
    std::vector<double> v(length());
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in_) throw DataError("checkpoint: truncated float payload");
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void restore_rng(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (!is) throw DataError("checkpoint: corrupt generator state");
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  Writer w(out);
  out.write(kMagic, sizeof kMagic);
  w.pod(kVersion);
  w.str(ckpt.config_json);
  w.str(ckpt.config_hash);

  const auto& p = ckpt.params;
  w.u64(p.layer_sizes.size());
  for (auto s : p.layer_sizes) w.u64(s);
  w.u64(p.seed);
  for (const auto& t : p.parameters()) w.doubles(t.data());

  w.doubles(ckpt.normalizer.mean);
  w.doubles(ckpt.normalizer.std);

  w.pod<std::int64_t>(ckpt.optimizer.step);
  w.pod<std::int32_t>(ckpt.optimizer.epoch);
  w.u64(ckpt.optimizer.momentum.size());
  for (const auto& m : ckpt.optimizer.momentum) w.doubles(m);

  if (ckpt.buffer) {
    w.u64(ckpt.buffer->capacity());
    w.u64(ckpt.buffer->dim());
    w.doubles(ckpt.buffer->raw());
  } else {
    w.u64(0);
    w.u64(0);
    w.doubles({});
  }

  w.u64(ckpt.rng_states.size());
  for (const auto& s : ckpt.rng_states) w.str(s);
  if (!out) throw DataError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw DataError("checkpoint: bad magic");
  Reader r(in);
  if (r.pod<std::uint32_t>() != kVersion) throw DataError("checkpoint: unsupported version");

  Checkpoint ckpt;
  ckpt.config_json = r.str();
  ckpt.config_hash = r.str();

  auto& p = ckpt.params;
  const auto n_sizes = r.length(1024);
  if (n_sizes < 2) throw DataError("checkpoint: fewer than two layer sizes");
  for (std::uint64_t i = 0; i < n_sizes; ++i) p.layer_sizes.push_back(r.u64());
  p.seed = r.u64();
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    const Shape ws{p.layer_sizes[l], p.layer_sizes[l + 1]};
    const Shape bs{p.layer_sizes[l + 1]};
    auto w = r.doubles();
    auto b = r.doubles();
    if (w.size() != shape_numel(ws) || b.size() != shape_numel(bs)) {
      throw DataError("checkpoint: layer " + std::to_string(l) + " payload does not match layer sizes");
    }
    p.weights.push_back(Tensor::from(ws, std::move(w), true));
    p.biases.push_back(Tensor::from(bs, std::move(b), true));
  }

  ckpt.normalizer.mean = r.doubles();
  ckpt.normalizer.std = r.doubles();
  if (ckpt.normalizer.mean.size() != ckpt.normalizer.std.size()) throw DataError("checkpoint: normalizer mismatch");

  ckpt.optimizer.step = r.pod<std::int64_t>();
  ckpt.optimizer.epoch = r.pod<std::int32_t>();
  const auto n_mom = r.length(4096);
  for (std::uint64_t i = 0; i < n_mom; ++i) ckpt.optimizer.momentum.push_back(r.doubles());

  const auto capacity = r.u64();
  const auto dim = r.u64();
  auto entries = r.doubles();
  if (capacity > 0) {
    ckpt.buffer.emplace(capacity, dim);
    ckpt.buffer->restore(std::move(entries));
  }

  const auto n_rng = r.length(64);
  for (std::uint64_t i = 0; i < n_rng; ++i) ckpt.rng_states.push_back(r.str());
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace mejem

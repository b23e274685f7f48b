#include "trajrest/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "trajrest/config.hpp"

namespace trajrest {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  void floats(const std::vector<float>& v) {
    for (float f : v) u32(std::bit_cast<std::uint32_t>(f));
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  void need(std::size_t n, const std::string& what) {
    if (pos_ + n > b_.size()) throw CheckpointError("truncated payload in " + what);
  }
  std::uint8_t u8(const std::string& what) {
    need(1, what);
    return b_[pos_++];
  }
  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{b_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64(const std::string& what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b_[pos_++]} << (8 * i);
    return v;
  }
  std::string str(const std::string& what) {
    const std::uint32_t n = u32(what);
    need(n, what);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::vector<float> floats(std::size_t n, const std::string& what) {
    if (n > (b_.size() - pos_) / 4) throw CheckpointError("truncated payload in " + what);
    std::vector<float> v(n);
    for (auto& f : v) f = std::bit_cast<float>(u32(what));
    return v;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.out = {'V', 'B', 'C', 'K'};
  w.u32(kCheckpointVersion);
  w.str(model_config_text(c.config));
  w.u64(c.seed);
  w.u64(static_cast<std::uint64_t>(c.step));
  w.u32(static_cast<std::uint32_t>(c.names.size()));
  for (std::size_t i = 0; i < c.names.size(); ++i) {
    w.str(c.names[i]);
    w.u32(static_cast<std::uint32_t>(c.shapes[i].size()));
    for (auto d : c.shapes[i]) w.u64(d);
    w.floats(c.values[i]);
  }
  w.u8(c.has_optimizer ? 1 : 0);
  if (c.has_optimizer) {
    w.u64(static_cast<std::uint64_t>(c.optimizer_steps));
    for (std::size_t i = 0; i < c.names.size(); ++i) {
      w.floats(c.first_moments[i]);
      w.floats(c.second_moments[i]);
    }
  }
  return std::move(w.out);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "VBCK", 4) != 0) throw CheckpointError("bad magic");
  std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
  Reader r(body);
  const std::uint32_t version = r.u32("header");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  try {
    c.config = parse_model_config_text(r.str("model config"));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("invalid embedded model config: ") + e.what());
  }
  c.seed = r.u64("header");
  c.step = static_cast<std::int64_t>(r.u64("header"));
  const std::uint32_t count = r.u32("header");
  const ModelParams<float> expected = init_model<float>(c.config, 0);
  if (count != expected.tensors.size()) {
    throw CheckpointError("shape mismatch: " + std::to_string(count) + " tensors, config implies " +
                          std::to_string(expected.tensors.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str("tensor name");
    const std::string what = "tensor '" + name + "'";
    const std::uint32_t ndim = r.u32(what);
    Shape shape(ndim);
    for (auto& d : shape) d = r.u64(what);
    if (name != expected.names[i] || shape != expected.tensors[i].shape()) {
      throw CheckpointError("shape mismatch: " + what + " " + shape_to_string(shape) + " does not match config (" +
                            expected.names[i] + " " + shape_to_string(expected.tensors[i].shape()) + ")");
    }
    c.values.push_back(r.floats(shape_numel(shape), what));
    c.names.push_back(name);
    c.shapes.push_back(std::move(shape));
  }
  c.has_optimizer = r.u8("optimizer flag") != 0;
  if (c.has_optimizer) {
    c.optimizer_steps = static_cast<std::int64_t>(r.u64("optimizer state"));
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::string what = "optimizer state of '" + c.names[i] + "'";
      c.first_moments.push_back(r.floats(c.values[i].size(), what));
      c.second_moments.push_back(r.floats(c.values[i].size(), what));
    }
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint payload");
  return c;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

template <typename T>
Checkpoint make_checkpoint(const ModelParams<T>& params, std::uint64_t seed, std::int64_t step) {
  Checkpoint c;
  c.config = params.config;
  c.seed = seed;
  c.step = step;
  c.names = params.names;
  for (const auto& t : params.tensors) {
    c.shapes.push_back(t.shape());
    c.values.emplace_back(t.values().begin(), t.values().end());
  }
  return c;
}

template <typename T>
ModelParams<T> params_from_checkpoint(const Checkpoint& ckpt) {
  ModelParams<T> p;
  p.config = ckpt.config;
  p.names = ckpt.names;
  for (std::size_t i = 0; i < ckpt.names.size(); ++i) {
    p.tensors.push_back(
        Tensor<T>::from_values(ckpt.shapes[i], std::vector<T>(ckpt.values[i].begin(), ckpt.values[i].end()), true));
  }
  return p;
}

template Checkpoint make_checkpoint<float>(const ModelParams<float>&, std::uint64_t, std::int64_t);
template Checkpoint make_checkpoint<double>(const ModelParams<double>&, std::uint64_t, std::int64_t);
template ModelParams<float> params_from_checkpoint<float>(const Checkpoint&);
template ModelParams<double> params_from_checkpoint<double>(const Checkpoint&);

}  // namespace trajrest

#include "trajrest/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trajrest/ops.hpp"

namespace trajrest {

std::string to_string(ModelMode mode) { return mode == ModelMode::kRegress ? "regress" : "flow"; }

ModelMode parse_model_mode(const std::string& text) {
  if (text == "regress") return ModelMode::kRegress;
  if (text == "flow") return ModelMode::kFlow;
  throw std::invalid_argument("unknown model mode '" + text + "' (expected regress or flow)");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("model config: " + what); };
  if (patch_size < 1) fail("patch_size must be >= 1");
  if (embed_dim < 2 || embed_dim % 2 != 0) fail("embed_dim must be even and >= 2");
  if (heads < 1 || embed_dim % heads != 0) fail("embed_dim must be divisible by heads");
  if (layers < 0) fail("layers must be >= 0");
  if (frame_count < 2) fail("frame_count must be >= 2");
  if (image_size < patch_size || image_size % patch_size != 0) fail("image_size must be divisible by patch_size");
  if (channels != 1 && channels != 3) fail("channels must be 1 or 3");
  if (!(condition_dropout_prob >= 0.0 && condition_dropout_prob <= 1.0)) fail("condition_dropout_prob outside [0, 1]");
}

namespace {

enum class Init { kNormal, kZero, kOne };

struct Slot {
  std::string name;
  Shape shape;
  Init init;
};

std::vector<Slot> layout(const ModelConfig& c) {
  const std::size_t d = c.embed_dim;
  const std::size_t hidden = 4 * d;
  const std::size_t tokens = static_cast<std::size_t>(c.grid()) * c.grid();
  const std::size_t in_dim = static_cast<std::size_t>(c.patch_dim()) * (c.mode == ModelMode::kFlow ? 2 : 1);
  std::vector<Slot> s;
  s.push_back({"patch_embed.weight", {in_dim, d}, Init::kNormal});
  s.push_back({"patch_embed.bias", {d}, Init::kZero});
  s.push_back({"pos_spatial", {tokens, d}, Init::kNormal});
  s.push_back({"pos_temporal", {static_cast<std::size_t>(c.frame_count), 1, d}, Init::kNormal});
  if (c.mode == ModelMode::kFlow) {
    s.push_back({"time.fc1.weight", {d, d}, Init::kNormal});
    s.push_back({"time.fc1.bias", {d}, Init::kZero});
    s.push_back({"time.fc2.weight", {d, d}, Init::kNormal});
    s.push_back({"time.fc2.bias", {d}, Init::kZero});
  }
  for (int i = 0; i < c.layers; ++i) {
    const std::string p = "blocks." + std::to_string(i) + ".";
    s.push_back({p + "norm1.gain", {d}, Init::kOne});
    s.push_back({p + "norm1.bias", {d}, Init::kZero});
    s.push_back({p + "attn.q.weight", {d, d}, Init::kNormal});
    s.push_back({p + "attn.q.bias", {d}, Init::kZero});
    // Keys carry no bias: softmax is invariant to it.
    s.push_back({p + "attn.k.weight", {d, d}, Init::kNormal});
    s.push_back({p + "attn.v.weight", {d, d}, Init::kNormal});
    s.push_back({p + "attn.v.bias", {d}, Init::kZero});
    s.push_back({p + "attn.o.weight", {d, d}, Init::kNormal});
    s.push_back({p + "attn.o.bias", {d}, Init::kZero});
    s.push_back({p + "norm2.gain", {d}, Init::kOne});
    s.push_back({p + "norm2.bias", {d}, Init::kZero});
    s.push_back({p + "mlp.fc1.weight", {d, hidden}, Init::kNormal});
    s.push_back({p + "mlp.fc1.bias", {hidden}, Init::kZero});
    s.push_back({p + "mlp.fc2.weight", {hidden, d}, Init::kNormal});
    s.push_back({p + "mlp.fc2.bias", {d}, Init::kZero});
  }
  s.push_back({"norm_out.gain", {d}, Init::kOne});
  s.push_back({"norm_out.bias", {d}, Init::kZero});
  s.push_back({"head.weight", {d, static_cast<std::size_t>(c.patch_dim())}, Init::kZero});
  s.push_back({"head.bias", {static_cast<std::size_t>(c.patch_dim())}, Init::kZero});
  if (c.mode == ModelMode::kRegress) {
    s.push_back({"head_delta.weight", {d, static_cast<std::size_t>(c.patch_dim())}, Init::kZero});
    s.push_back({"head_delta.bias", {static_cast<std::size_t>(c.patch_dim())}, Init::kZero});
  }
  return s;
}

template <typename T>
class Cursor {
 public:
  explicit Cursor(const ModelParams<T>& p) : p_(p) {}
  const Tensor<T>& next(const std::string& name) {
    if (i_ >= p_.tensors.size() || p_.names[i_] != name) {
      throw ShapeError("model parameters out of order: expected '" + name + "'");
    }
    return p_.tensors[i_++];
  }

 private:
  const ModelParams<T>& p_;
  std::size_t i_ = 0;
};

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b) {
  Tensor<T> y = ops::matmul(x, w);
  return b ? ops::add(y, *b) : y;
}

template <typename T>
Tensor<T> norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias) {
  return ops::add(ops::mul(ops::layer_norm(x), gain), bias);
}

// x: [N, D]
template <typename T>
Tensor<T> encoder_block(const Tensor<T>& x, Cursor<T>& cur, const std::string& prefix, int heads) {
  const std::size_t n = x.shape()[0];
  const std::size_t d = x.shape()[1];
  const std::size_t dh = d / heads;
  const std::size_t h = heads;

  const Tensor<T>& g1 = cur.next(prefix + "norm1.gain");
  const Tensor<T>& n1 = cur.next(prefix + "norm1.bias");
  const Tensor<T> y = norm(x, g1, n1);
  const Tensor<T>& wq = cur.next(prefix + "attn.q.weight");
  const Tensor<T>& bq = cur.next(prefix + "attn.q.bias");
  const Tensor<T>& wk = cur.next(prefix + "attn.k.weight");
  const Tensor<T>& wv = cur.next(prefix + "attn.v.weight");
  const Tensor<T>& bv = cur.next(prefix + "attn.v.bias");
  const Tensor<T>& wo = cur.next(prefix + "attn.o.weight");
  const Tensor<T>& bo = cur.next(prefix + "attn.o.bias");

  const Tensor<T> q = ops::permute(ops::reshape(linear(y, wq, &bq), {n, h, dh}), {1, 0, 2});
  const Tensor<T> kt = ops::permute(ops::reshape(linear<T>(y, wk, nullptr), {n, h, dh}), {1, 2, 0});
  const Tensor<T> v = ops::permute(ops::reshape(linear(y, wv, &bv), {n, h, dh}), {1, 0, 2});
  const Tensor<T> scores = ops::scale(ops::matmul(q, kt), static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh))));
  const Tensor<T> ctx = ops::matmul(ops::softmax(scores), v);
  const Tensor<T> merged = ops::reshape(ops::permute(ctx, {1, 0, 2}), {n, d});
  const Tensor<T> x1 = ops::add(x, linear(merged, wo, &bo));

  const Tensor<T>& g2 = cur.next(prefix + "norm2.gain");
  const Tensor<T>& n2 = cur.next(prefix + "norm2.bias");
  const Tensor<T> z = norm(x1, g2, n2);
  const Tensor<T>& w1 = cur.next(prefix + "mlp.fc1.weight");
  const Tensor<T>& b1 = cur.next(prefix + "mlp.fc1.bias");
  const Tensor<T>& w2 = cur.next(prefix + "mlp.fc2.weight");
  const Tensor<T>& b2 = cur.next(prefix + "mlp.fc2.bias");
  return ops::add(x1, linear(ops::gelu(linear(z, w1, &b1)), w2, &b2));
}

template <typename T>
Tensor<T> encoder(Tensor<T> x, Cursor<T>& cur, const ModelConfig& c) {
  for (int i = 0; i < c.layers; ++i) x = encoder_block(x, cur, "blocks." + std::to_string(i) + ".", c.heads);
  return x;
}

struct Taps {
  std::size_t lo;
  std::size_t hi;
  double w_hi;
};

std::vector<Taps> grid_taps(int in, int out) {
  std::vector<Taps> taps(out);
  const double ratio = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    const double src = std::clamp((i + 0.5) * ratio - 0.5, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(src));
    taps[i] = {lo, std::min<std::size_t>(lo + 1, in - 1), src - static_cast<double>(lo)};
  }
  return taps;
}

// Spatial embeddings for a gh x gw token grid, [gh*gw, D].
template <typename T>
Tensor<T> spatial_embedding(const Tensor<T>& pos, int base, int gh, int gw) {
  if (gh == base && gw == base) return pos;
  const auto ty = grid_taps(base, gh);
  const auto tx = grid_taps(base, gw);
  const std::size_t bb = static_cast<std::size_t>(base) * base;
  std::vector<T> m(static_cast<std::size_t>(gh) * gw * bb, T(0));
  for (int i = 0; i < gh; ++i) {
    for (int j = 0; j < gw; ++j) {
      T* row = &m[(static_cast<std::size_t>(i) * gw + j) * bb];
      const Taps& y = ty[i];
      const Taps& x = tx[j];
      row[y.lo * base + x.lo] += static_cast<T>((1 - y.w_hi) * (1 - x.w_hi));
      row[y.lo * base + x.hi] += static_cast<T>((1 - y.w_hi) * x.w_hi);
      row[y.hi * base + x.lo] += static_cast<T>(y.w_hi * (1 - x.w_hi));
      row[y.hi * base + x.hi] += static_cast<T>(y.w_hi * x.w_hi);
    }
  }
  const auto resample = Tensor<T>::from_values({static_cast<std::size_t>(gh) * gw, bb}, std::move(m));
  return ops::matmul(resample, pos);
}

struct Geometry {
  std::size_t h, w, gh, gw, p, c;
};

Geometry geometry(const ModelConfig& cfg, const Shape& image_shape) {
  if (image_shape.size() != 3 || image_shape[2] != static_cast<std::size_t>(cfg.channels)) {
    throw ShapeError("model: expected anchor [H, W, " + std::to_string(cfg.channels) + "], got " +
                     shape_to_string(image_shape));
  }
  const std::size_t p = cfg.patch_size;
  if (image_shape[0] % p != 0 || image_shape[1] % p != 0 || image_shape[0] == 0 || image_shape[1] == 0) {
    throw ShapeError("model: image " + shape_to_string(image_shape) + " not divisible into " + std::to_string(p) +
                     "-pixel patches");
  }
  return {image_shape[0], image_shape[1], image_shape[0] / p, image_shape[1] / p, p, image_shape[2]};
}

// Appends the patches of frame [H, W, C] (starting at `src`) to `out`, token
// major, each patch ordered (row, col, channel), optionally interleaved with a
// second image along channels.
template <typename T>
void patchify_into(const Geometry& g, const T* a, const T* b, std::vector<T>& out) {
  for (std::size_t ty = 0; ty < g.gh; ++ty) {
    for (std::size_t tx = 0; tx < g.gw; ++tx) {
      for (std::size_t py = 0; py < g.p; ++py) {
        for (std::size_t px = 0; px < g.p; ++px) {
          const std::size_t base = ((ty * g.p + py) * g.w + tx * g.p + px) * g.c;
          for (std::size_t ch = 0; ch < g.c; ++ch) out.push_back(a[base + ch]);
          if (b) {
            for (std::size_t ch = 0; ch < g.c; ++ch) out.push_back(b[base + ch]);
          }
        }
      }
    }
  }
}

// [F, tokens, p*p*C] -> [F, H, W, C]
template <typename T>
Tensor<T> unpatchify(const Tensor<T>& x, const Geometry& g, std::size_t frames) {
  const Tensor<T> six = ops::reshape(x, {frames, g.gh, g.gw, g.p, g.p, g.c});
  return ops::reshape(ops::permute(six, {0, 1, 3, 2, 4, 5}), {frames, g.h, g.w, g.c});
}

template <typename T>
Tensor<T> readout(const Tensor<T>& x, Cursor<T>& cur) {
  const Tensor<T>& gain = cur.next("norm_out.gain");
  const Tensor<T>& bias = cur.next("norm_out.bias");
  const Tensor<T> y = norm(x, gain, bias);
  const Tensor<T>& w = cur.next("head.weight");
  const Tensor<T>& b = cur.next("head.bias");
  return linear(y, w, &b);
}

template <typename T>
Tensor<T> time_features(double tau, std::size_t d) {
  const std::size_t half = d / 2;
  std::vector<T> v(d);
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    const double arg = 1000.0 * tau * freq;
    v[i] = static_cast<T>(std::sin(arg));
    v[half + i] = static_cast<T>(std::cos(arg));
  }
  return Tensor<T>::from_values({d}, std::move(v));
}

}  // namespace

std::size_t parameter_count(const ModelConfig& config) {
  config.validate();
  std::size_t n = 0;
  for (const auto& s : layout(config)) n += shape_numel(s.shape);
  return n;
}

template <typename T>
const Tensor<T>& ModelParams<T>::get(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return tensors[i];
  }
  throw std::out_of_range("no parameter named '" + name + "'");
}

template <typename T>
std::size_t ModelParams<T>::count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.numel();
  return n;
}

template <typename T>
ModelParams<T> ModelParams<T>::aliased() const {
  ModelParams out{config, names, {}};
  out.tensors.reserve(tensors.size());
  for (const auto& t : tensors) out.tensors.push_back(t.alias_with_own_grad());
  return out;
}

template <typename T>
ModelParams<T> ModelParams<T>::clone() const {
  ModelParams out{config, names, {}};
  out.tensors.reserve(tensors.size());
  for (const auto& t : tensors) {
    out.tensors.push_back(Tensor<T>::from_values(t.shape(), {t.values().begin(), t.values().end()}, true));
  }
  return out;
}

template <typename T>
ModelParams<T> init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelParams<T> params;
  params.config = config;
  for (auto& slot : layout(config)) {
    std::vector<T> v(shape_numel(slot.shape));
    switch (slot.init) {
      case Init::kNormal:
        for (T& x : v) x = static_cast<T>(0.02 * rng.normal());
        break;
      case Init::kZero:
        break;
      case Init::kOne:
        std::fill(v.begin(), v.end(), T(1));
        break;
    }
    params.names.push_back(std::move(slot.name));
    params.tensors.push_back(Tensor<T>::from_values(std::move(slot.shape), std::move(v), true));
  }
  return params;
}

template <typename T>
Tensor<T> image_to_tensor(const Image& img) {
  std::vector<T> v(img.pixels.begin(), img.pixels.end());
  return Tensor<T>::from_values(
      {static_cast<std::size_t>(img.height), static_cast<std::size_t>(img.width), static_cast<std::size_t>(img.channels)},
      std::move(v));
}

template <typename T>
Tensor<T> clip_to_tensor(const PseudoClip& clip) {
  if (clip.frames.empty()) throw ShapeError("empty clip");
  const Image& f0 = clip.frames.front();
  std::vector<T> v;
  v.reserve(f0.pixels.size() * clip.frames.size());
  for (const auto& f : clip.frames) {
    if (!f.same_dims(f0)) throw ShapeError("clip frames differ in dimensions");
    v.insert(v.end(), f.pixels.begin(), f.pixels.end());
  }
  return Tensor<T>::from_values({clip.frames.size(), static_cast<std::size_t>(f0.height),
                                 static_cast<std::size_t>(f0.width), static_cast<std::size_t>(f0.channels)},
                                std::move(v));
}

template <typename T>
Image tensor_to_image(const Tensor<T>& t, std::size_t index) {
  const Shape& s = t.shape();
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t c = 0;
  std::size_t offset = 0;
  if (s.size() == 3) {
    h = s[0], w = s[1], c = s[2];
    if (index != 0) throw ShapeError("tensor_to_image: index out of range");
  } else if (s.size() == 4) {
    if (index >= s[0]) throw ShapeError("tensor_to_image: frame index out of range");
    h = s[1], w = s[2], c = s[3];
    offset = index * h * w * c;
  } else {
    throw ShapeError("tensor_to_image: expected rank 3 or 4, got " + shape_to_string(s));
  }
  Image img(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  const auto vals = t.values();
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<float>(vals[offset + i]);
  img.clamp();
  return img;
}

template <typename T>
Tensor<T> forward_regress(const ModelParams<T>& params, const Tensor<T>& anchor) {
  const ModelConfig& c = params.config;
  if (c.mode != ModelMode::kRegress) throw ShapeError("forward_regress called on a flow-mode model");
  const Geometry g = geometry(c, anchor.shape());
  const std::size_t tokens = g.gh * g.gw;
  const std::size_t d = c.embed_dim;
  const std::size_t frames = c.frame_count;

  std::vector<T> patches;
  patches.reserve(anchor.numel());
  patchify_into<T>(g, anchor.values().data(), nullptr, patches);
  const auto x = Tensor<T>::from_values({tokens, static_cast<std::size_t>(c.patch_dim())}, std::move(patches));

  Cursor<T> cur(params);
  const Tensor<T>& we = cur.next("patch_embed.weight");
  const Tensor<T>& be = cur.next("patch_embed.bias");
  const Tensor<T>& pos = cur.next("pos_spatial");
  const Tensor<T>& temporal = cur.next("pos_temporal");
  Tensor<T> h = ops::add(linear(x, we, &be), spatial_embedding(pos, c.grid(), static_cast<int>(g.gh), static_cast<int>(g.gw)));
  h = encoder(h, cur, c);
  const Tensor<T>& gain = cur.next("norm_out.gain");
  const Tensor<T>& bias = cur.next("norm_out.bias");
  const Tensor<T> y = ops::reshape(norm(h, gain, bias), {1, tokens, d});
  const Tensor<T>& w = cur.next("head.weight");
  const Tensor<T>& b = cur.next("head.bias");
  const Tensor<T>& wd = cur.next("head_delta.weight");
  const Tensor<T>& bd = cur.next("head_delta.bias");
  // Frame f = anchor + head(y + pos_temporal[f]) + alpha_f * head_delta(y),
  // with alpha_f the frame's position on the clip's 0..1 schedule. The heads
  // start at zero, so a fresh model returns the anchor for every frame.
  const std::vector<double> alphas = alpha_schedule(c.frame_count - 1);
  const auto alpha = Tensor<T>::from_values({frames, 1, 1}, std::vector<T>(alphas.begin(), alphas.end()));
  const Tensor<T> residual = ops::add(linear(ops::add(y, temporal), w, &b), ops::mul(alpha, linear(y, wd, &bd)));
  const Tensor<T> out = ops::add(residual, ops::reshape(x, {1, tokens, static_cast<std::size_t>(c.patch_dim())}));
  return unpatchify(out, g, frames);
}

template <typename T>
Tensor<T> forward_flow(const ModelParams<T>& params, const Tensor<T>& anchor, const Tensor<T>& noisy, double tau) {
  const ModelConfig& c = params.config;
  if (c.mode != ModelMode::kFlow) throw ShapeError("forward_flow called on a regress-mode model");
  const Geometry g = geometry(c, anchor.shape());
  const std::size_t frames = c.frame_count;
  const Shape clip_shape{frames, g.h, g.w, g.c};
  if (noisy.shape() != clip_shape) {
    throw ShapeError("forward_flow: noisy clip " + shape_to_string(noisy.shape()) + ", expected " +
                     shape_to_string(clip_shape));
  }
  const std::size_t tokens = g.gh * g.gw;
  const std::size_t d = c.embed_dim;
  const std::size_t frame_size = g.h * g.w * g.c;

  std::vector<T> patches;
  patches.reserve(2 * noisy.numel());
  for (std::size_t f = 0; f < frames; ++f) {
    patchify_into<T>(g, anchor.values().data(), noisy.values().data() + f * frame_size, patches);
  }
  const auto x =
      Tensor<T>::from_values({frames, tokens, 2 * static_cast<std::size_t>(c.patch_dim())}, std::move(patches));

  Cursor<T> cur(params);
  const Tensor<T>& we = cur.next("patch_embed.weight");
  const Tensor<T>& be = cur.next("patch_embed.bias");
  const Tensor<T>& pos = cur.next("pos_spatial");
  const Tensor<T>& temporal = cur.next("pos_temporal");
  const Tensor<T>& t1w = cur.next("time.fc1.weight");
  const Tensor<T>& t1b = cur.next("time.fc1.bias");
  const Tensor<T>& t2w = cur.next("time.fc2.weight");
  const Tensor<T>& t2b = cur.next("time.fc2.bias");

  const Tensor<T> feat = ops::reshape(time_features<T>(tau, d), {1, d});
  const Tensor<T> temb = linear(ops::gelu(linear(feat, t1w, &t1b)), t2w, &t2b);  // [1, D]

  const Tensor<T> spatial =
      ops::reshape(spatial_embedding(pos, c.grid(), static_cast<int>(g.gh), static_cast<int>(g.gw)), {1, tokens, d});
  Tensor<T> h = ops::add(linear(x, we, &be), spatial);
  h = ops::add(ops::add(h, temporal), temb);
  h = ops::reshape(h, {frames * tokens, d});
  h = encoder(h, cur, c);
  h = ops::reshape(h, {frames, tokens, d});
  return unpatchify(readout(h, cur), g, frames);
}

template <typename T>
LossResult<T> training_loss(const ModelParams<T>& params, const PseudoClip& clip, Rng& rng) {
  const ModelConfig& c = params.config;
  if (clip.frames.size() != static_cast<std::size_t>(c.frame_count)) {
    throw ShapeError("clip has " + std::to_string(clip.frames.size()) + " frames, model expects " +
                     std::to_string(c.frame_count));
  }
  const Tensor<T> target = clip_to_tensor<T>(clip);
  LossResult<T> out;
  if (c.mode == ModelMode::kRegress) {
    out.loss = ops::mse(forward_regress(params, image_to_tensor<T>(clip.anchor())), target);
    return out;
  }
  out.anchor_dropped = rng.bernoulli(c.condition_dropout_prob);
  out.tau = rng.uniform();
  const auto clean = target.values();
  std::vector<T> xt(clean.size());
  std::vector<T> vel(clean.size());
  const T tau = static_cast<T>(out.tau);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const T eps = static_cast<T>(rng.normal());
    xt[i] = (T(1) - tau) * eps + tau * clean[i];
    vel[i] = clean[i] - eps;
  }
  Tensor<T> anchor = image_to_tensor<T>(clip.anchor());
  if (out.anchor_dropped) anchor = Tensor<T>::zeros(anchor.shape());
  const auto noisy = Tensor<T>::from_values(target.shape(), std::move(xt));
  const auto velocity = Tensor<T>::from_values(target.shape(), std::move(vel));
  out.loss = ops::mse(forward_flow(params, anchor, noisy, out.tau), velocity);
  return out;
}

#define TRAJREST_INSTANTIATE_MODEL(T)                                                                   \
  template struct ModelParams<T>;                                                                       \
  template ModelParams<T> init_model<T>(const ModelConfig&, std::uint64_t);                             \
  template Tensor<T> image_to_tensor<T>(const Image&);                                                  \
  template Tensor<T> clip_to_tensor<T>(const PseudoClip&);                                              \
  template Image tensor_to_image<T>(const Tensor<T>&, std::size_t);                                     \
  template Tensor<T> forward_regress<T>(const ModelParams<T>&, const Tensor<T>&);                       \
  template Tensor<T> forward_flow<T>(const ModelParams<T>&, const Tensor<T>&, const Tensor<T>&, double); \
  template LossResult<T> training_loss<T>(const ModelParams<T>&, const PseudoClip&, Rng&);

TRAJREST_INSTANTIATE_MODEL(float)
TRAJREST_INSTANTIATE_MODEL(double)

}  // namespace trajrest

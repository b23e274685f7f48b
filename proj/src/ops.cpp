#include "trajrest/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <utility>

#include "trajrest/kernels.hpp"

namespace trajrest::ops {
namespace {

template <typename T>
using NodePtr = std::shared_ptr<TensorNode<T>>;

// Wraps freshly computed values into a tensor and, if needed, records the
// backward closure produced by make_backward(output_node).
template <typename T, typename MakeBackward>
Tensor<T> emit(const char* name, Shape shape, std::vector<T> values,
               std::initializer_list<const Tensor<T>*> inputs, MakeBackward make_backward) {
  check_finite<T>(values, name);
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->values = std::make_shared<std::vector<T>>(std::move(values));
  Tape<T>* tape = Tape<T>::active();
  bool needs_grad = false;
  for (const Tensor<T>* in : inputs) needs_grad = needs_grad || in->requires_grad();
  if (tape != nullptr && needs_grad) {
    node->requires_grad = true;
    tape->record(node, make_backward(node.get()));
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> emit_list(const char* name, Shape shape, std::vector<T> values,
                    const std::vector<Tensor<T>>& inputs,
                    std::function<std::function<void()>(TensorNode<T>*)> make_backward) {
  check_finite<T>(values, name);
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->values = std::make_shared<std::vector<T>>(std::move(values));
  Tape<T>* tape = Tape<T>::active();
  const bool needs_grad =
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>& t) { return t.requires_grad(); });
  if (tape != nullptr && needs_grad) {
    node->requires_grad = true;
    tape->record(node, make_backward(node.get()));
  }
  return Tensor<T>(std::move(node));
}

// ---------------------------------------------------------------------------
// Broadcasting

struct BroadcastPlan {
  Shape out;
  std::vector<std::size_t> stride_a;  // per output dim, 0 where a is broadcast
  std::vector<std::size_t> stride_b;
};

std::vector<std::size_t> contiguous_strides(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b, const char* name) {
  const std::size_t rank = std::max(a.size(), b.size());
  BroadcastPlan p;
  p.out.resize(rank);
  p.stride_a.assign(rank, 0);
  p.stride_b.assign(rank, 0);
  const auto sa = contiguous_strides(a);
  const auto sb = contiguous_strides(b);
  for (std::size_t d = 0; d < rank; ++d) {
    const std::size_t off_a = rank - a.size();
    const std::size_t off_b = rank - b.size();
    const std::size_t da = d >= off_a ? a[d - off_a] : 1;
    const std::size_t db = d >= off_b ? b[d - off_b] : 1;
    if (da != db && da != 1 && db != 1) {
      throw ShapeError(std::string(name) + ": cannot broadcast " + shape_to_string(a) + " with " +
                       shape_to_string(b));
    }
    p.out[d] = std::max(da, db);
    if (d >= off_a && da != 1) p.stride_a[d] = sa[d - off_a];
    if (d >= off_b && db != 1) p.stride_b[d] = sb[d - off_b];
  }
  return p;
}

// Calls f(out_index, a_offset, b_offset) for every output element in order.
template <typename F>
void for_each_broadcast(const BroadcastPlan& p, F&& f) {
  const std::size_t rank = p.out.size();
  const std::size_t n = shape_numel(p.out);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (std::size_t i = 0; i < n; ++i) {
    f(i, ia, ib);
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      ia += p.stride_a[d];
      ib += p.stride_b[d];
      if (idx[d] < p.out[d]) break;
      ia -= p.stride_a[d] * p.out[d];
      ib -= p.stride_b[d] * p.out[d];
      idx[d] = 0;
    }
  }
}

// True when `small` (ignoring leading unit dims) equals the trailing dims of
// `big` and has no more dims than `big`, i.e. the output shape is `big`.
bool is_suffix(const Shape& big, const Shape& small) {
  if (small.size() > big.size()) return false;
  std::size_t lead = 0;
  while (lead < small.size() && small[lead] == 1) ++lead;
  const std::size_t len = small.size() - lead;
  return std::equal(small.begin() + static_cast<std::ptrdiff_t>(lead), small.end(),
                    big.end() - static_cast<std::ptrdiff_t>(len));
}

enum class Binary { kAdd, kMul };

template <typename T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, Binary kind) {
  const char* name = kind == Binary::kAdd ? "add" : "mul";
  const auto& k = kernels::active<T>();
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<T> out;
  Shape out_shape;

  // 0: same shape, 1: b repeats along a's leading dims, 2: a repeats along b's, 3: general
  int path = 3;
  if (a.shape() == b.shape()) {
    path = 0;
  } else if (is_suffix(a.shape(), b.shape())) {
    path = 1;
  } else if (is_suffix(b.shape(), a.shape())) {
    path = 2;
  }

  BroadcastPlan plan;
  if (path == 0) {
    out_shape = a.shape();
    out.resize(a.numel());
    (kind == Binary::kAdd ? k.add : k.mul)(out.size(), av.data(), bv.data(), out.data());
  } else if (path == 1 || path == 2) {
    const auto& big = path == 1 ? av : bv;
    const auto& small = path == 1 ? bv : av;
    out_shape = path == 1 ? a.shape() : b.shape();
    out.resize(big.size());
    const std::size_t m = small.size();
    for (std::size_t off = 0; off < big.size(); off += m) {
      (kind == Binary::kAdd ? k.add : k.mul)(m, big.data() + off, small.data(), out.data() + off);
    }
  } else {
    plan = plan_broadcast(a.shape(), b.shape(), name);
    out_shape = plan.out;
    out.resize(shape_numel(plan.out));
    for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      out[i] = kind == Binary::kAdd ? av[ia] + bv[ib] : av[ia] * bv[ib];
    });
  }

  return emit<T>(name, out_shape, std::move(out), {&a, &b}, [a, b, kind, path, plan](TensorNode<T>* o) {
    return [a, b, kind, path, plan, o]() {
      const auto& g = o->grad;
      const auto av = a.values();
      const auto bv = b.values();
      const bool need_a = a.requires_grad();
      const bool need_b = b.requires_grad();
      std::vector<T> ga(need_a ? a.numel() : 0, T(0));
      std::vector<T> gb(need_b ? b.numel() : 0, T(0));
      if (path == 0) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (need_a) ga[i] = kind == Binary::kAdd ? g[i] : g[i] * bv[i];
          if (need_b) gb[i] = kind == Binary::kAdd ? g[i] : g[i] * av[i];
        }
      } else if (path == 1 || path == 2) {
        // "big" operand matches the output; "small" repeats every m elements.
        const bool a_big = path == 1;
        const auto& bigv = a_big ? av : bv;
        const auto& smallv = a_big ? bv : av;
        std::vector<T>& gbig = a_big ? ga : gb;
        std::vector<T>& gsmall = a_big ? gb : ga;
        const bool need_big = a_big ? need_a : need_b;
        const bool need_small = a_big ? need_b : need_a;
        const std::size_t m = smallv.size();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const std::size_t s = i % m;
          if (need_big) gbig[i] = kind == Binary::kAdd ? g[i] : g[i] * smallv[s];
          if (need_small) gsmall[s] += kind == Binary::kAdd ? g[i] : g[i] * bigv[i];
        }
      } else {
        for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
          if (need_a) ga[ia] += kind == Binary::kAdd ? g[i] : g[i] * bv[ib];
          if (need_b) gb[ib] += kind == Binary::kAdd ? g[i] : g[i] * av[ia];
        });
      }
      if (need_a) accumulate_grad<T>(*a.node(), ga);
      if (need_b) accumulate_grad<T>(*b.node(), gb);
    };
  });
}

}  // namespace

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2) throw ShapeError("matmul: operands must have rank >= 2");
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t k = sa[sa.size() - 1];
  const std::size_t kb = sb[sb.size() - 2];
  const std::size_t n = sb[sb.size() - 1];
  if (k != kb) {
    throw ShapeError("matmul: inner dimensions differ: " + shape_to_string(sa) + " x " + shape_to_string(sb));
  }
  const Shape batch_a(sa.begin(), sa.end() - 2);
  const Shape batch_b(sb.begin(), sb.end() - 2);
  const bool shared_b = batch_b.empty();
  if (!shared_b && batch_a != batch_b) {
    throw ShapeError("matmul: batch dimensions differ: " + shape_to_string(sa) + " x " + shape_to_string(sb));
  }
  const std::size_t batch = shape_numel(batch_a);
  Shape out_shape = batch_a;
  out_shape.push_back(m);
  out_shape.push_back(n);

  const auto& kt = kernels::active<T>();
  std::vector<T> out(batch * m * n, T(0));
  const T* ap = a.values().data();
  const T* bp = b.values().data();
  for (std::size_t i = 0; i < batch; ++i) {
    kt.gemm_nn(m, n, k, ap + i * m * k, bp + (shared_b ? 0 : i * k * n), out.data() + i * m * n);
  }

  return emit<T>("matmul", out_shape, std::move(out), {&a, &b}, [a, b, batch, m, n, k, shared_b](TensorNode<T>* o) {
    return [a, b, batch, m, n, k, shared_b, o]() {
      const auto& kt = kernels::active<T>();
      const T* g = o->grad.data();
      const T* ap = a.values().data();
      const T* bp = b.values().data();
      if (a.requires_grad()) {
        std::vector<T> ga(a.numel(), T(0));
        for (std::size_t i = 0; i < batch; ++i) {
          kt.gemm_nt(m, k, n, g + i * m * n, bp + (shared_b ? 0 : i * k * n), ga.data() + i * m * k);
        }
        accumulate_grad<T>(*a.node(), ga);
      }
      if (b.requires_grad()) {
        std::vector<T> gb(b.numel(), T(0));
        for (std::size_t i = 0; i < batch; ++i) {
          kt.gemm_tn(k, n, m, ap + i * m * k, g + i * m * n, gb.data() + (shared_b ? 0 : i * k * n));
        }
        accumulate_grad<T>(*b.node(), gb);
      }
    };
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, Binary::kAdd);
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, Binary::kMul);
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  std::vector<T> out(x.values().begin(), x.values().end());
  for (T& v : out) v *= factor;
  return emit<T>("scale", x.shape(), std::move(out), {&x}, [x, factor](TensorNode<T>* o) {
    return [x, factor, o]() {
      std::vector<T> g(o->grad);
      for (T& v : g) v *= factor;
      accumulate_grad<T>(*x.node(), g);
    };
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel() || shape.empty()) {
    throw ShapeError("reshape: " + shape_to_string(x.shape()) + " -> " + shape_to_string(shape));
  }
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("reshape: zero extent in " + shape_to_string(shape));
  }
  std::vector<T> out(x.values().begin(), x.values().end());
  return emit<T>("reshape", std::move(shape), std::move(out), {&x}, [x](TensorNode<T>* o) {
    return [x, o]() { accumulate_grad<T>(*x.node(), o->grad); };
  });
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& perm) {
  const Shape& in = x.shape();
  const std::size_t rank = in.size();
  if (perm.size() != rank) throw ShapeError("permute: permutation rank mismatch");
  std::vector<bool> seen(rank, false);
  for (std::size_t p : perm) {
    if (p >= rank || seen[p]) throw ShapeError("permute: invalid permutation");
    seen[p] = true;
  }
  const auto in_strides = contiguous_strides(in);
  Shape out_shape(rank);
  std::vector<std::size_t> src_stride(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = in[perm[i]];
    src_stride[i] = in_strides[perm[i]];
  }
  // src_index[i] maps output position i to the input offset.
  const std::size_t n = x.numel();
  auto src_index = std::make_shared<std::vector<std::size_t>>(n);
  {
    std::vector<std::size_t> idx(rank, 0);
    std::size_t off = 0;
    for (std::size_t i = 0; i < n; ++i) {
      (*src_index)[i] = off;
      for (std::size_t d = rank; d-- > 0;) {
        ++idx[d];
        off += src_stride[d];
        if (idx[d] < out_shape[d]) break;
        off -= src_stride[d] * out_shape[d];
        idx[d] = 0;
      }
    }
  }
  const auto xv = x.values();
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = xv[(*src_index)[i]];
  return emit<T>("permute", out_shape, std::move(out), {&x}, [x, src_index](TensorNode<T>* o) {
    return [x, src_index, o]() {
      std::vector<T> g(x.numel());
      for (std::size_t i = 0; i < g.size(); ++i) g[(*src_index)[i]] = o->grad[i];
      accumulate_grad<T>(*x.node(), g);
    };
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x, std::size_t dim0, std::size_t dim1) {
  if (dim0 >= x.rank() || dim1 >= x.rank()) throw ShapeError("transpose: axis out of range");
  std::vector<std::size_t> perm(x.rank());
  std::iota(perm.begin(), perm.end(), 0);
  std::swap(perm[dim0], perm[dim1]);
  return permute(x, perm);
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& xs, std::size_t axis) {
  if (xs.empty()) throw ShapeError("concat: empty input list");
  const Shape& first = xs.front().shape();
  if (axis >= first.size()) throw ShapeError("concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& x : xs) {
    const Shape& s = x.shape();
    if (s.size() != first.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) {
        throw ShapeError("concat: shape mismatch " + shape_to_string(first) + " vs " + shape_to_string(s));
      }
    }
    out_shape[axis] += s[axis];
  }
  std::size_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  const std::size_t out_row = out_shape[axis] * inner;

  std::vector<T> out(shape_numel(out_shape));
  std::size_t col = 0;
  for (const auto& x : xs) {
    const std::size_t row = x.shape()[axis] * inner;
    const auto xv = x.values();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(o * row), row,
                  out.begin() + static_cast<std::ptrdiff_t>(o * out_row + col));
    }
    col += row;
  }
  return emit_list<T>("concat", out_shape, std::move(out), xs, [xs, outer, inner, out_row, axis](TensorNode<T>* o) {
    return std::function<void()>([xs, outer, inner, out_row, axis, o]() {
      std::size_t col = 0;
      for (const auto& x : xs) {
        const std::size_t row = x.shape()[axis] * inner;
        if (x.requires_grad()) {
          std::vector<T> g(x.numel());
          for (std::size_t r = 0; r < outer; ++r) {
            std::copy_n(o->grad.begin() + static_cast<std::ptrdiff_t>(r * out_row + col), row,
                        g.begin() + static_cast<std::ptrdiff_t>(r * row));
          }
          accumulate_grad<T>(*x.node(), g);
        }
        col += row;
      }
    });
  });
}

namespace {

template <typename T>
Tensor<T> reduce(const Tensor<T>& x, const std::vector<std::size_t>& axes, bool average, const char* name) {
  const Shape& in = x.shape();
  const std::size_t rank = in.size();
  std::vector<bool> reduced(rank, axes.empty());
  for (std::size_t a : axes) {
    if (a >= rank) throw ShapeError(std::string(name) + ": axis out of range");
    reduced[a] = true;
  }
  Shape out_shape;
  for (std::size_t d = 0; d < rank; ++d) {
    if (!reduced[d]) out_shape.push_back(in[d]);
  }
  if (out_shape.empty()) out_shape.push_back(1);

  // Output stride per input dim (0 for reduced dims).
  std::vector<std::size_t> ostride(rank, 0);
  {
    std::size_t s = 1;
    for (std::size_t d = rank; d-- > 0;) {
      if (!reduced[d]) {
        ostride[d] = s;
        s *= in[d];
      }
    }
  }
  const std::size_t n = x.numel();
  auto target = std::make_shared<std::vector<std::size_t>>(n);
  {
    std::vector<std::size_t> idx(rank, 0);
    std::size_t off = 0;
    for (std::size_t i = 0; i < n; ++i) {
      (*target)[i] = off;
      for (std::size_t d = rank; d-- > 0;) {
        ++idx[d];
        off += ostride[d];
        if (idx[d] < in[d]) break;
        off -= ostride[d] * in[d];
        idx[d] = 0;
      }
    }
  }
  const std::size_t count = n / shape_numel(out_shape);
  const T factor = average ? T(1) / static_cast<T>(count) : T(1);
  const auto xv = x.values();
  std::vector<T> out(shape_numel(out_shape), T(0));
  for (std::size_t i = 0; i < n; ++i) out[(*target)[i]] += xv[i];
  if (average) {
    for (T& v : out) v *= factor;
  }
  return emit<T>(name, out_shape, std::move(out), {&x}, [x, target, factor](TensorNode<T>* o) {
    return [x, target, factor, o]() {
      std::vector<T> g(x.numel());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = o->grad[(*target)[i]] * factor;
      accumulate_grad<T>(*x.node(), g);
    };
  });
}

}  // namespace

template <typename T>
Tensor<T> sum(const Tensor<T>& x, const std::vector<std::size_t>& axes) {
  return reduce(x, axes, false, "sum");
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x, const std::vector<std::size_t>& axes) {
  return reduce(x, axes, true, "mean");
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  const std::size_t cols = x.shape().back();
  const std::size_t rows = x.numel() / cols;
  const auto xv = x.values();
  std::vector<T> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.data() + r * cols;
    T* y = out.data() + r * cols;
    const T mx = *std::max_element(in, in + cols);
    T total = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(in[c] - mx);
      total += y[c];
    }
    const T inv = T(1) / total;
    for (std::size_t c = 0; c < cols; ++c) y[c] *= inv;
  }
  return emit<T>("softmax", x.shape(), std::move(out), {&x}, [x, rows, cols](TensorNode<T>* o) {
    return [x, rows, cols, o]() {
      const auto& y = *o->values;
      const auto& g = o->grad;
      std::vector<T> gx(x.numel());
      for (std::size_t r = 0; r < rows; ++r) {
        T dotp = 0;
        for (std::size_t c = 0; c < cols; ++c) dotp += g[r * cols + c] * y[r * cols + c];
        for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] = y[r * cols + c] * (g[r * cols + c] - dotp);
      }
      accumulate_grad<T>(*x.node(), gx);
    };
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, T eps) {
  const std::size_t cols = x.shape().back();
  const std::size_t rows = x.numel() / cols;
  const auto xv = x.values();
  std::vector<T> out(x.numel());
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.data() + r * cols;
    T mu = 0;
    for (std::size_t c = 0; c < cols; ++c) mu += in[c];
    mu /= static_cast<T>(cols);
    T var = 0;
    for (std::size_t c = 0; c < cols; ++c) var += (in[c] - mu) * (in[c] - mu);
    var /= static_cast<T>(cols);
    const T is = T(1) / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = (in[c] - mu) * is;
  }
  return emit<T>("layer_norm", x.shape(), std::move(out), {&x}, [x, rows, cols, inv_std](TensorNode<T>* o) {
    return [x, rows, cols, inv_std, o]() {
      const auto& y = *o->values;
      const auto& g = o->grad;
      std::vector<T> gx(x.numel());
      const T inv_n = T(1) / static_cast<T>(cols);
      for (std::size_t r = 0; r < rows; ++r) {
        T g_mean = 0;
        T gy_mean = 0;
        for (std::size_t c = 0; c < cols; ++c) {
          g_mean += g[r * cols + c];
          gy_mean += g[r * cols + c] * y[r * cols + c];
        }
        g_mean *= inv_n;
        gy_mean *= inv_n;
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t i = r * cols + c;
          gx[i] = (*inv_std)[r] * (g[i] - g_mean - y[i] * gy_mean);
        }
      }
      accumulate_grad<T>(*x.node(), gx);
    };
  });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  const auto xv = x.values();
  std::vector<T> out(x.numel());
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = T(0.5) * xv[i] * (T(1) + std::erf(xv[i] * inv_sqrt2));
  }
  return emit<T>("gelu", x.shape(), std::move(out), {&x}, [x](TensorNode<T>* o) {
    return [x, o]() {
      const auto xv = x.values();
      const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
      const T inv_sqrt2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
      std::vector<T> gx(x.numel());
      for (std::size_t i = 0; i < gx.size(); ++i) {
        const T v = xv[i];
        const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
        const T pdf = inv_sqrt2pi * std::exp(T(-0.5) * v * v);
        gx[i] = o->grad[i] * (cdf + v * pdf);
      }
      accumulate_grad<T>(*x.node(), gx);
    };
  });
}

template <typename T>
Tensor<T> mse(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mse: shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
  const auto av = a.values();
  const auto bv = b.values();
  T acc = 0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += (av[i] - bv[i]) * (av[i] - bv[i]);
  const T n = static_cast<T>(av.size());
  return emit<T>("mse", {1}, {acc / n}, {&a, &b}, [a, b, n](TensorNode<T>* o) {
    return [a, b, n, o]() {
      const T g0 = o->grad[0] * T(2) / n;
      const auto av = a.values();
      const auto bv = b.values();
      std::vector<T> g(av.size());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = g0 * (av[i] - bv[i]);
      if (a.requires_grad()) accumulate_grad<T>(*a.node(), g);
      if (b.requires_grad()) {
        for (T& v : g) v = -v;
        accumulate_grad<T>(*b.node(), g);
      }
    };
  });
}

#define TRAJREST_INSTANTIATE_OPS(T)                                                      \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                      \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                \
  template Tensor<T> permute<T>(const Tensor<T>&, const std::vector<std::size_t>&);      \
  template Tensor<T> transpose<T>(const Tensor<T>&, std::size_t, std::size_t);           \
  template Tensor<T> concat<T>(const std::vector<Tensor<T>>&, std::size_t);              \
  template Tensor<T> sum<T>(const Tensor<T>&, const std::vector<std::size_t>&);          \
  template Tensor<T> mean<T>(const Tensor<T>&, const std::vector<std::size_t>&);         \
  template Tensor<T> softmax<T>(const Tensor<T>&);                                       \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, T);                                 \
  template Tensor<T> gelu<T>(const Tensor<T>&);                                          \
  template Tensor<T> mse<T>(const Tensor<T>&, const Tensor<T>&);

TRAJREST_INSTANTIATE_OPS(float)
TRAJREST_INSTANTIATE_OPS(double)

}  // namespace trajrest::ops

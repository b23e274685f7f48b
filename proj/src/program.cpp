#include "trajrest/program.hpp"

#include <cmath>

#include "trajrest/ops.hpp"

namespace trajrest {

template <typename T>
Tensor<T> eval_graph(const std::vector<Tensor<T>>& inputs, const Program& program) {
  std::vector<Tensor<T>> regs(inputs);
  auto arg = [&regs](const Instr& in, std::size_t i) -> const Tensor<T>& {
    if (i >= in.args.size() || in.args[i] >= regs.size()) {
      throw std::invalid_argument("eval_graph: instruction reads an undefined register");
    }
    return regs[in.args[i]];
  };
  for (const Instr& in : program.instrs) {
    switch (in.prim) {
      case Prim::kMatmul:
        regs.push_back(ops::matmul(arg(in, 0), arg(in, 1)));
        break;
      case Prim::kAdd:
        regs.push_back(ops::add(arg(in, 0), arg(in, 1)));
        break;
      case Prim::kMul:
        regs.push_back(ops::mul(arg(in, 0), arg(in, 1)));
        break;
      case Prim::kScale:
        regs.push_back(ops::scale(arg(in, 0), static_cast<T>(in.factor)));
        break;
      case Prim::kReshape:
        regs.push_back(ops::reshape(arg(in, 0), in.shape));
        break;
      case Prim::kTranspose:
        if (in.axes.size() != 2) throw std::invalid_argument("eval_graph: transpose needs two axes");
        regs.push_back(ops::transpose(arg(in, 0), in.axes[0], in.axes[1]));
        break;
      case Prim::kConcat: {
        if (in.axes.size() != 1) throw std::invalid_argument("eval_graph: concat needs one axis");
        std::vector<Tensor<T>> parts;
        for (std::size_t i = 0; i < in.args.size(); ++i) parts.push_back(arg(in, i));
        regs.push_back(ops::concat(parts, in.axes[0]));
        break;
      }
      case Prim::kSum:
        regs.push_back(ops::sum(arg(in, 0), in.axes));
        break;
      case Prim::kMean:
        regs.push_back(ops::mean(arg(in, 0), in.axes));
        break;
      case Prim::kSoftmax:
        regs.push_back(ops::softmax(arg(in, 0)));
        break;
      case Prim::kLayerNorm:
        regs.push_back(ops::layer_norm(arg(in, 0)));
        break;
      case Prim::kGelu:
        regs.push_back(ops::gelu(arg(in, 0)));
        break;
      case Prim::kMse:
        regs.push_back(ops::mse(arg(in, 0), arg(in, 1)));
        break;
    }
  }
  if (regs.empty()) throw std::invalid_argument("eval_graph: empty program with no inputs");
  return regs.back();
}

template <typename T>
double finite_diff_check(const std::function<Tensor<T>()>& loss, std::vector<Tensor<T>> params, T h) {
  for (auto& p : params) p.zero_grad();
  {
    Tape<T> tape;
    Tensor<T> value = loss();
    if (value.numel() != 1) throw ShapeError("finite_diff_check: function is not scalar-valued");
    tape.backward(value);
  }
  double worst = 0.0;
  for (auto& p : params) {
    std::vector<T> analytic(p.numel(), T(0));
    if (p.has_grad()) analytic.assign(p.grad().begin(), p.grad().end());
    auto values = p.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const T saved = values[i];
      values[i] = saved + h;
      const double up = static_cast<double>(loss().item());
      values[i] = saved - h;
      const double down = static_cast<double>(loss().item());
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * static_cast<double>(h));
      const double a = static_cast<double>(analytic[i]);
      worst = std::max(worst, std::abs(a - numeric) / (std::abs(a) + 1e-12));
    }
  }
  return worst;
}

template <typename T>
double finite_diff_check(const std::function<Tensor<T>(const Tensor<T>&)>& f, const Tensor<T>& point, T h) {
  Tensor<T> x = Tensor<T>::from_values(point.shape(), {point.values().begin(), point.values().end()}, true);
  return finite_diff_check<T>(std::function<Tensor<T>()>([&f, &x]() { return f(x); }), {x}, h);
}

template Tensor<float> eval_graph<float>(const std::vector<Tensor<float>>&, const Program&);
template Tensor<double> eval_graph<double>(const std::vector<Tensor<double>>&, const Program&);
template double finite_diff_check<float>(const std::function<Tensor<float>()>&, std::vector<Tensor<float>>, float);
template double finite_diff_check<double>(const std::function<Tensor<double>()>&, std::vector<Tensor<double>>,
                                          double);
template double finite_diff_check<float>(const std::function<Tensor<float>(const Tensor<float>&)>&,
                                         const Tensor<float>&, float);
template double finite_diff_check<double>(const std::function<Tensor<double>(const Tensor<double>&)>&,
                                          const Tensor<double>&, double);

}  // namespace trajrest

#include "ndps/ops.hpp"

#include <cmath>
#include <utility>

namespace ndps {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

std::size_t count(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

// Allocates the result node. Parents and the backprop closure are recorded
// only when some parent requires gradients; otherwise the result is a plain
// value and upstream intermediates can be freed as soon as they go out of
// scope.
NodePtr result(const char* op, std::vector<int> dims,
               std::vector<NodePtr> parents,
               std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->dims = std::move(dims);
  n->val.assign(count(n->dims), 0.0);
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  if (rg) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return n;
}

double* grad_of(Node& p) {
  p.ensure_grad();
  return p.grad.data();
}

void check_signal(const Tensor& x, const char* who) {
  if (x.ndim() != 2)
    throw ShapeError(std::string(who) + ": expected a [channels x time] tensor");
}

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Tensor param_leaf(ParamStore& store, const std::string& name, bool with_grad) {
  Parameter& p = store.at(name);
  auto n = std::make_shared<Node>();
  n->op = "param";
  n->dims = p.dims;
  n->val = p.value;
  n->requires_grad = with_grad;
  n->param = with_grad ? &p : nullptr;
  return Tensor(std::move(n));
}

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              int dilation, int padding) {
  check_signal(x, "conv1d");
  if (weight.ndim() != 3)
    throw ShapeError("conv1d: weight must be [out_ch x in_ch x k]");
  if (dilation < 1) throw ArgumentError("conv1d: dilation must be >= 1");
  if (padding < 0) throw ArgumentError("conv1d: padding must be >= 0");
  const int out_ch = weight.dims()[0];
  const int in_ch = weight.dims()[1];
  const int k = weight.dims()[2];
  if (x.channels() != in_ch)
    throw ShapeError("conv1d: input has " + std::to_string(x.channels()) +
                     " channels, weight expects " + std::to_string(in_ch));
  const bool has_bias = bias.defined();
  if (has_bias && (bias.ndim() != 1 || bias.dims()[0] != out_ch))
    throw ShapeError("conv1d: bias must be [out_ch]");
  const int T = x.length();
  const int L = T + 2 * padding - dilation * (k - 1);
  if (L < 1) throw ShapeError("conv1d: receptive field exceeds padded input");

  std::vector<NodePtr> parents = {x.node(), weight.node()};
  if (has_bias) parents.push_back(bias.node());
  const int d = dilation, p = padding;
  auto out = result(
      "conv1d", {out_ch, L}, std::move(parents),
      [out_ch, in_ch, k, d, p, T, L, has_bias](Node& n) {
        const double* gy = n.grad.data();
        Node& xn = *n.parents[0];
        Node& wn = *n.parents[1];
        const double* xv = xn.val.data();
        const double* wv = wn.val.data();
        if (xn.requires_grad) {
          double* gx = grad_of(xn);
          for (int oc = 0; oc < out_ch; ++oc)
            for (int ic = 0; ic < in_ch; ++ic) {
              double* gxs = gx + static_cast<std::size_t>(ic) * T;
              const double* gys = gy + static_cast<std::size_t>(oc) * L;
              for (int j = 0; j < k; ++j) {
                const double wj = wv[(static_cast<std::size_t>(oc) * in_ch + ic) * k + j];
                if (wj == 0.0) continue;
                const int off = j * d - p;  // x index = t + off
                const int t0 = std::max(0, -off);
                const int t1 = std::min(L, T - off);
                for (int t = t0; t < t1; ++t) gxs[t + off] += wj * gys[t];
              }
            }
        }
        if (wn.requires_grad) {
          double* gw = grad_of(wn);
          for (int oc = 0; oc < out_ch; ++oc)
            for (int ic = 0; ic < in_ch; ++ic) {
              const double* xs = xv + static_cast<std::size_t>(ic) * T;
              const double* gys = gy + static_cast<std::size_t>(oc) * L;
              for (int j = 0; j < k; ++j) {
                const int off = j * d - p;
                const int t0 = std::max(0, -off);
                const int t1 = std::min(L, T - off);
                double acc = 0.0;
                for (int t = t0; t < t1; ++t) acc += xs[t + off] * gys[t];
                gw[(static_cast<std::size_t>(oc) * in_ch + ic) * k + j] += acc;
              }
            }
        }
        if (has_bias && n.parents[2]->requires_grad) {
          double* gb = grad_of(*n.parents[2]);
          for (int oc = 0; oc < out_ch; ++oc) {
            const double* gys = gy + static_cast<std::size_t>(oc) * L;
            double acc = 0.0;
            for (int t = 0; t < L; ++t) acc += gys[t];
            gb[oc] += acc;
          }
        }
      });

  const double* xv = x.node()->val.data();
  const double* wv = weight.node()->val.data();
  double* y = out->val.data();
  for (int oc = 0; oc < out_ch; ++oc) {
    double* ys = y + static_cast<std::size_t>(oc) * L;
    if (has_bias) {
      const double b = bias.node()->val[oc];
      for (int t = 0; t < L; ++t) ys[t] = b;
    }
    for (int ic = 0; ic < in_ch; ++ic) {
      const double* xs = xv + static_cast<std::size_t>(ic) * T;
      for (int j = 0; j < k; ++j) {
        const double wj = wv[(static_cast<std::size_t>(oc) * in_ch + ic) * k + j];
        if (wj == 0.0) continue;
        const int off = j * d - p;
        const int t0 = std::max(0, -off);
        const int t1 = std::min(L, T - off);
        for (int t = t0; t < t1; ++t) ys[t] += wj * xs[t + off];
      }
    }
  }
  return Tensor(std::move(out));
}

Tensor transposed_conv1d(const Tensor& x, const Tensor& weight,
                         const Tensor& bias, int stride) {
  check_signal(x, "transposed_conv1d");
  if (weight.ndim() != 3)
    throw ShapeError("transposed_conv1d: weight must be [in_ch x out_ch x k]");
  if (stride < 1) throw ArgumentError("transposed_conv1d: stride must be >= 1");
  const int in_ch = weight.dims()[0];
  const int out_ch = weight.dims()[1];
  const int k = weight.dims()[2];
  if (x.channels() != in_ch)
    throw ShapeError("transposed_conv1d: channel mismatch");
  const bool has_bias = bias.defined();
  if (has_bias && (bias.ndim() != 1 || bias.dims()[0] != out_ch))
    throw ShapeError("transposed_conv1d: bias must be [out_ch]");
  const int B = x.length();
  const int L = B * stride;
  // The full transposed convolution spans (B-1)*stride + k samples; keep the
  // centered L of them. trim may be negative when k < stride, in which case
  // the result is zero-padded symmetrically instead.
  const int trim = floor_div(k - stride, 2);

  std::vector<NodePtr> parents = {x.node(), weight.node()};
  if (has_bias) parents.push_back(bias.node());
  const int s = stride;
  auto out = result(
      "tconv1d", {out_ch, L}, std::move(parents),
      [in_ch, out_ch, k, s, B, L, trim, has_bias](Node& n) {
        const double* gy = n.grad.data();
        Node& xn = *n.parents[0];
        Node& wn = *n.parents[1];
        const double* xv = xn.val.data();
        const double* wv = wn.val.data();
        if (xn.requires_grad) {
          double* gx = grad_of(xn);
          for (int ic = 0; ic < in_ch; ++ic)
            for (int oc = 0; oc < out_ch; ++oc) {
              const double* wrow = wv + (static_cast<std::size_t>(ic) * out_ch + oc) * k;
              const double* gys = gy + static_cast<std::size_t>(oc) * L;
              double* gxs = gx + static_cast<std::size_t>(ic) * B;
              for (int b = 0; b < B; ++b) {
                const int base = b * s - trim;  // output index for j = 0
                const int j0 = std::max(0, -base);
                const int j1 = std::min(k, L - base);
                double acc = 0.0;
                for (int j = j0; j < j1; ++j) acc += wrow[j] * gys[base + j];
                gxs[b] += acc;
              }
            }
        }
        if (wn.requires_grad) {
          double* gw = grad_of(wn);
          for (int ic = 0; ic < in_ch; ++ic)
            for (int oc = 0; oc < out_ch; ++oc) {
              double* gwrow = gw + (static_cast<std::size_t>(ic) * out_ch + oc) * k;
              const double* gys = gy + static_cast<std::size_t>(oc) * L;
              const double* xs = xv + static_cast<std::size_t>(ic) * B;
              for (int b = 0; b < B; ++b) {
                const double xb = xs[b];
                if (xb == 0.0) continue;
                const int base = b * s - trim;
                const int j0 = std::max(0, -base);
                const int j1 = std::min(k, L - base);
                for (int j = j0; j < j1; ++j) gwrow[j] += xb * gys[base + j];
              }
            }
        }
        if (has_bias && n.parents[2]->requires_grad) {
          double* gb = grad_of(*n.parents[2]);
          for (int oc = 0; oc < out_ch; ++oc) {
            const double* gys = gy + static_cast<std::size_t>(oc) * L;
            double acc = 0.0;
            for (int t = 0; t < L; ++t) acc += gys[t];
            gb[oc] += acc;
          }
        }
      });

  const double* xv = x.node()->val.data();
  const double* wv = weight.node()->val.data();
  double* y = out->val.data();
  for (int ic = 0; ic < in_ch; ++ic) {
    const double* xs = xv + static_cast<std::size_t>(ic) * B;
    for (int oc = 0; oc < out_ch; ++oc) {
      const double* wrow = wv + (static_cast<std::size_t>(ic) * out_ch + oc) * k;
      double* ys = y + static_cast<std::size_t>(oc) * L;
      for (int b = 0; b < B; ++b) {
        const double xb = xs[b];
        if (xb == 0.0) continue;
        const int base = b * stride - trim;
        const int j0 = std::max(0, -base);
        const int j1 = std::min(k, L - base);
        for (int j = j0; j < j1; ++j) ys[base + j] += xb * wrow[j];
      }
    }
  }
  if (has_bias) {
    for (int oc = 0; oc < out_ch; ++oc) {
      const double b = bias.node()->val[oc];
      double* ys = y + static_cast<std::size_t>(oc) * L;
      for (int t = 0; t < L; ++t) ys[t] += b;
    }
  }
  return Tensor(std::move(out));
}

Tensor fir_bank(const Tensor& x, const std::vector<std::vector<double>>& taps,
                int delay) {
  check_signal(x, "fir_bank");
  if (x.channels() != 1)
    throw ShapeError("fir_bank: input must be single-channel");
  if (taps.empty()) throw ArgumentError("fir_bank: no filters given");
  if (delay < 0) throw ArgumentError("fir_bank: negative delay");
  const int C = static_cast<int>(taps.size());
  const int T = x.length();

  auto out = result(
      "fir_bank", {C, T}, {x.node()},
      [taps, delay, C, T](Node& n) {
        Node& xn = *n.parents[0];
        if (!xn.requires_grad) return;
        double* gx = grad_of(xn);
        const double* gy = n.grad.data();
        for (int c = 0; c < C; ++c) {
          const auto& h = taps[c];
          const double* gys = gy + static_cast<std::size_t>(c) * T;
          for (std::size_t j = 0; j < h.size(); ++j) {
            const double hj = h[j];
            if (hj == 0.0) continue;
            const int off = delay - static_cast<int>(j);  // x index = t + off
            const int t0 = std::max(0, -off);
            const int t1 = std::min(T, T - off);
            for (int t = t0; t < t1; ++t) gx[t + off] += hj * gys[t];
          }
        }
      });

  const double* xv = x.node()->val.data();
  double* y = out->val.data();
  for (int c = 0; c < C; ++c) {
    const auto& h = taps[c];
    double* ys = y + static_cast<std::size_t>(c) * T;
    for (std::size_t j = 0; j < h.size(); ++j) {
      const double hj = h[j];
      if (hj == 0.0) continue;
      const int off = delay - static_cast<int>(j);
      const int t0 = std::max(0, -off);
      const int t1 = std::min(T, T - off);
      for (int t = t0; t < t1; ++t) ys[t] += hj * xv[t + off];
    }
  }
  return Tensor(std::move(out));
}

Tensor gated_activation(const Tensor& x, const Tensor& cond) {
  check_signal(x, "gated_activation");
  if (x.channels() % 2 != 0)
    throw ShapeError("gated_activation: channel count must be even");
  if (!cond.defined() || cond.dims() != x.dims())
    throw ShapeError("gated_activation: condition must match input shape");
  const int H = x.channels() / 2;
  const int T = x.length();
  const std::size_t half = static_cast<std::size_t>(H) * T;

  // Forward first: the backprop closure reuses the saved activations.
  auto ta = std::make_shared<std::vector<double>>(half);
  auto sg = std::make_shared<std::vector<double>>(half);
  {
    const double* xv = x.node()->val.data();
    const double* cv = cond.node()->val.data();
    for (std::size_t i = 0; i < half; ++i) {
      (*ta)[i] = std::tanh(xv[i] + cv[i]);
      (*sg)[i] = 1.0 / (1.0 + std::exp(-(xv[half + i] + cv[half + i])));
    }
  }

  auto out = result(
      "gated", {H, T}, {x.node(), cond.node()},
      [ta, sg, half](Node& n) {
        const double* gy = n.grad.data();
        for (int pi = 0; pi < 2; ++pi) {
          Node& p = *n.parents[pi];
          if (!p.requires_grad) continue;
          double* gp = grad_of(p);
          for (std::size_t i = 0; i < half; ++i) {
            const double t = (*ta)[i];
            const double s = (*sg)[i];
            gp[i] += gy[i] * (1.0 - t * t) * s;
            gp[half + i] += gy[i] * t * s * (1.0 - s);
          }
        }
      });
  for (std::size_t i = 0; i < half; ++i) out->val[i] = (*ta)[i] * (*sg)[i];
  return Tensor(std::move(out));
}

Tensor tanh(const Tensor& x) {
  auto out = result(
      "tanh", x.dims(), {x.node()},
      [](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        double* gp = grad_of(p);
        for (std::size_t i = 0; i < n.size(); ++i)
          gp[i] += n.grad[i] * (1.0 - n.val[i] * n.val[i]);
      });
  const auto& xv = x.node()->val;
  for (std::size_t i = 0; i < xv.size(); ++i) out->val[i] = std::tanh(xv[i]);
  return Tensor(std::move(out));
}

Tensor sigmoid(const Tensor& x) {
  auto out = result(
      "sigmoid", x.dims(), {x.node()},
      [](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        double* gp = grad_of(p);
        for (std::size_t i = 0; i < n.size(); ++i)
          gp[i] += n.grad[i] * n.val[i] * (1.0 - n.val[i]);
      });
  const auto& xv = x.node()->val;
  for (std::size_t i = 0; i < xv.size(); ++i)
    out->val[i] = 1.0 / (1.0 + std::exp(-xv[i]));
  return Tensor(std::move(out));
}

Tensor leaky_relu(const Tensor& x, double slope) {
  auto out = result(
      "leaky_relu", x.dims(), {x.node()},
      [slope](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        double* gp = grad_of(p);
        for (std::size_t i = 0; i < n.size(); ++i)
          gp[i] += n.grad[i] * (p.val[i] > 0.0 ? 1.0 : slope);
      });
  const auto& xv = x.node()->val;
  for (std::size_t i = 0; i < xv.size(); ++i)
    out->val[i] = xv[i] > 0.0 ? xv[i] : slope * xv[i];
  return Tensor(std::move(out));
}

namespace {

void check_same_dims(const Tensor& a, const Tensor& b, const char* who) {
  if (a.dims() != b.dims())
    throw ShapeError(std::string(who) + ": operand shapes differ");
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_dims(a, b, "add");
  auto out = result(
      "add", a.dims(), {a.node(), b.node()},
      [](Node& n) {
        for (int pi = 0; pi < 2; ++pi) {
          Node& p = *n.parents[pi];
          if (!p.requires_grad) continue;
          double* gp = grad_of(p);
          for (std::size_t i = 0; i < n.size(); ++i) gp[i] += n.grad[i];
        }
      });
  const auto& av = a.node()->val;
  const auto& bv = b.node()->val;
  for (std::size_t i = 0; i < av.size(); ++i) out->val[i] = av[i] + bv[i];
  return Tensor(std::move(out));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_dims(a, b, "sub");
  auto out = result(
      "sub", a.dims(), {a.node(), b.node()},
      [](Node& n) {
        for (int pi = 0; pi < 2; ++pi) {
          Node& p = *n.parents[pi];
          if (!p.requires_grad) continue;
          double* gp = grad_of(p);
          const double sign = pi == 0 ? 1.0 : -1.0;
          for (std::size_t i = 0; i < n.size(); ++i) gp[i] += sign * n.grad[i];
        }
      });
  const auto& av = a.node()->val;
  const auto& bv = b.node()->val;
  for (std::size_t i = 0; i < av.size(); ++i) out->val[i] = av[i] - bv[i];
  return Tensor(std::move(out));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_dims(a, b, "mul");
  auto out = result(
      "mul", a.dims(), {a.node(), b.node()},
      [](Node& n) {
        Node& pa = *n.parents[0];
        Node& pb = *n.parents[1];
        if (pa.requires_grad) {
          double* gp = grad_of(pa);
          for (std::size_t i = 0; i < n.size(); ++i)
            gp[i] += n.grad[i] * pb.val[i];
        }
        if (pb.requires_grad) {
          double* gp = grad_of(pb);
          for (std::size_t i = 0; i < n.size(); ++i)
            gp[i] += n.grad[i] * pa.val[i];
        }
      });
  const auto& av = a.node()->val;
  const auto& bv = b.node()->val;
  for (std::size_t i = 0; i < av.size(); ++i) out->val[i] = av[i] * bv[i];
  return Tensor(std::move(out));
}

Tensor scale(const Tensor& x, double c) {
  auto out = result(
      "scale", x.dims(), {x.node()},
      [c](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        double* gp = grad_of(p);
        for (std::size_t i = 0; i < n.size(); ++i) gp[i] += c * n.grad[i];
      });
  const auto& xv = x.node()->val;
  for (std::size_t i = 0; i < xv.size(); ++i) out->val[i] = c * xv[i];
  return Tensor(std::move(out));
}

Tensor add_scalar(const Tensor& x, double c) {
  auto out = result(
      "add_scalar", x.dims(), {x.node()},
      [](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        double* gp = grad_of(p);
        for (std::size_t i = 0; i < n.size(); ++i) gp[i] += n.grad[i];
      });
  const auto& xv = x.node()->val;
  for (std::size_t i = 0; i < xv.size(); ++i) out->val[i] = xv[i] + c;
  return Tensor(std::move(out));
}

Tensor square(const Tensor& x) {
  auto out = result(
      "square", x.dims(), {x.node()},
      [](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        double* gp = grad_of(p);
        for (std::size_t i = 0; i < n.size(); ++i)
          gp[i] += 2.0 * p.val[i] * n.grad[i];
      });
  const auto& xv = x.node()->val;
  for (std::size_t i = 0; i < xv.size(); ++i) out->val[i] = xv[i] * xv[i];
  return Tensor(std::move(out));
}

Tensor abs(const Tensor& x) {
  auto out = result(
      "abs", x.dims(), {x.node()},
      [](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        double* gp = grad_of(p);
        for (std::size_t i = 0; i < n.size(); ++i) {
          const double v = p.val[i];
          gp[i] += n.grad[i] * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
        }
      });
  const auto& xv = x.node()->val;
  for (std::size_t i = 0; i < xv.size(); ++i) out->val[i] = std::fabs(xv[i]);
  return Tensor(std::move(out));
}

Tensor log_floor(const Tensor& x, double floor) {
  if (!(floor > 0.0)) throw ArgumentError("log_floor: floor must be positive");
  auto out = result(
      "log_floor", x.dims(), {x.node()},
      [floor](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        double* gp = grad_of(p);
        for (std::size_t i = 0; i < n.size(); ++i)
          if (p.val[i] > floor) gp[i] += n.grad[i] / p.val[i];
      });
  const auto& xv = x.node()->val;
  for (std::size_t i = 0; i < xv.size(); ++i)
    out->val[i] = std::log(std::max(xv[i], floor));
  return Tensor(std::move(out));
}

Tensor sqrt(const Tensor& x) {
  const auto& xv = x.node()->val;
  for (double v : xv)
    if (v < 0.0) throw NumericError("sqrt: negative input");
  auto out = result(
      "sqrt", x.dims(), {x.node()},
      [](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        double* gp = grad_of(p);
        // At exactly zero the derivative is unbounded; contribute nothing
        // rather than poisoning the sweep with infinities.
        for (std::size_t i = 0; i < n.size(); ++i)
          if (n.val[i] > 0.0) gp[i] += n.grad[i] / (2.0 * n.val[i]);
      });
  for (std::size_t i = 0; i < xv.size(); ++i) out->val[i] = std::sqrt(xv[i]);
  return Tensor(std::move(out));
}

Tensor offset_clip01(const Tensor& x, double offset) {
  auto out = result(
      "offset_clip01", x.dims(), {x.node()},
      [offset](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        double* gp = grad_of(p);
        for (std::size_t i = 0; i < n.size(); ++i) {
          const double v = p.val[i] + offset;
          if (v > 0.0 && v < 1.0) gp[i] += n.grad[i];
        }
      });
  const auto& xv = x.node()->val;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double v = xv[i] + offset;
    out->val[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
  return Tensor(std::move(out));
}

Tensor sum(const Tensor& x) {
  auto out = result(
      "sum", {1}, {x.node()},
      [](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        double* gp = grad_of(p);
        const double g = n.grad[0];
        for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g;
      });
  double acc = 0.0;
  for (double v : x.node()->val) acc += v;
  out->val[0] = acc;
  return Tensor(std::move(out));
}

Tensor mean(const Tensor& x) {
  const double inv = 1.0 / static_cast<double>(x.size());
  auto out = result(
      "mean", {1}, {x.node()},
      [inv](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        double* gp = grad_of(p);
        const double g = n.grad[0] * inv;
        for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g;
      });
  double acc = 0.0;
  for (double v : x.node()->val) acc += v;
  out->val[0] = acc * inv;
  return Tensor(std::move(out));
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ArgumentError("concat_channels: no inputs");
  int T = -1, C = 0;
  std::vector<NodePtr> parents;
  parents.reserve(parts.size());
  for (const auto& p : parts) {
    check_signal(p, "concat_channels");
    if (T < 0) T = p.length();
    if (p.length() != T)
      throw ShapeError("concat_channels: time lengths differ");
    C += p.channels();
    parents.push_back(p.node());
  }
  auto out = result(
      "concat", {C, T}, std::move(parents),
      [T](Node& n) {
        std::size_t row = 0;
        for (const auto& pp : n.parents) {
          Node& p = *pp;
          const std::size_t sz = p.size();
          if (p.requires_grad) {
            double* gp = grad_of(p);
            const double* gy = n.grad.data() + row * T;
            for (std::size_t i = 0; i < sz; ++i) gp[i] += gy[i];
          }
          row += static_cast<std::size_t>(p.dims[0]);
        }
      });
  std::size_t row = 0;
  for (const auto& p : parts) {
    const auto& pv = p.node()->val;
    std::copy(pv.begin(), pv.end(),
              out->val.begin() + row * static_cast<std::size_t>(T));
    row += static_cast<std::size_t>(p.channels());
  }
  return Tensor(std::move(out));
}

Tensor repeat_upsample(const Tensor& x, int factor) {
  check_signal(x, "repeat_upsample");
  if (factor < 1) throw ArgumentError("repeat_upsample: factor must be >= 1");
  const int C = x.channels();
  const int B = x.length();
  const int L = B * factor;
  auto out = result(
      "repeat_upsample", {C, L}, {x.node()},
      [C, B, L, factor](Node& n) {
        Node& p = *n.parents[0];
        if (!p.requires_grad) return;
        double* gp = grad_of(p);
        const double* gy = n.grad.data();
        for (int c = 0; c < C; ++c)
          for (int b = 0; b < B; ++b) {
            const double* gys =
                gy + static_cast<std::size_t>(c) * L + static_cast<std::size_t>(b) * factor;
            double acc = 0.0;
            for (int r = 0; r < factor; ++r) acc += gys[r];
            gp[static_cast<std::size_t>(c) * B + b] += acc;
          }
      });
  const double* xv = x.node()->val.data();
  double* y = out->val.data();
  for (int c = 0; c < C; ++c)
    for (int b = 0; b < B; ++b) {
      const double v = xv[static_cast<std::size_t>(c) * B + b];
      double* ys = y + static_cast<std::size_t>(c) * L + static_cast<std::size_t>(b) * factor;
      for (int r = 0; r < factor; ++r) ys[r] = v;
    }
  return Tensor(std::move(out));
}

Tensor detach(const Tensor& x) {
  auto n = std::make_shared<Node>();
  n->dims = x.dims();
  n->val = x.node()->val;
  return Tensor(std::move(n));
}

}  // namespace ndps

#include "panolayout/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "panolayout/errors.hpp"

namespace panolayout::ad {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {
thread_local bool g_no_grad = false;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }
bool NoGradGuard::active() { return g_no_grad; }

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, std::vector<NodePtr<T>> parents,
                      std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  const bool needs = !g_no_grad && std::any_of(parents.begin(), parents.end(), [](const auto& p) { return p->requires_grad; });
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
void require_shape(const Tensor<T>& t, std::size_t rank, const char* op) {
  if (!t.defined() || t.shape().size() != rank) {
    throw DimensionError(std::string(op) + ": expected a rank-" + std::to_string(rank) + " tensor, got " +
                         (t.defined() ? shape_string(t.shape()) : std::string("undefined")));
  }
}

// Gradient buffer of a parent, or nullptr when it does not need one.
template <typename T>
T* grad_of(Node<T>& parent) {
  if (!parent.requires_grad) return nullptr;
  parent.ensure_grad();
  return parent.grad.data();
}

template <typename T>
void im2col(const T* x, int channels, int height, int width, int k, int stride, int pad, int out_h, int out_w,
            T* cols) {
  const int plane = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    const T* xc = x + static_cast<std::size_t>(c) * height * width;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        T* row = cols + static_cast<std::size_t>((c * k + ki) * k + kj) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride + ki - pad;
          T* dst = row + oy * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(dst, dst + out_w, T{0});
            continue;
          }
          const T* src = xc + static_cast<std::size_t>(iy) * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride + kj - pad;
            dst[ox] = (ix >= 0 && ix < width) ? src[ix] : T{0};
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, int channels, int height, int width, int k, int stride, int pad, int out_h, int out_w,
            T* dx) {
  const int plane = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    T* xc = dx + static_cast<std::size_t>(c) * height * width;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const T* row = cols + static_cast<std::size_t>((c * k + ki) * k + kj) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride + ki - pad;
          if (iy < 0 || iy >= height) continue;
          const T* src = row + oy * out_w;
          T* dst = xc + static_cast<std::size_t>(iy) * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride + kj - pad;
            if (ix >= 0 && ix < width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T, typename F, typename G>
Tensor<T> unary(const Tensor<T>& a, F forward, G derivative) {
  std::vector<T> out(a.size());
  const auto in = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(in[i]);
  return make_result<T>(a.shape(), std::move(out), {a.node()}, [derivative](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (T* g = grad_of(p)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * derivative(p.value[i], self.value[i]);
    }
  });
}

}  // namespace

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  auto node = std::make_shared<Node<T>>();
  node->value.assign(element_count(shape), T{0});
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  if (values.size() != element_count(shape)) {
    throw DimensionError("tensor value count does not match shape " + shape_string(shape));
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw DimensionError("item() needs a single-element tensor, got " + shape_string(shape()));
  return node_->value[0];
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), T{0});
}

template <typename T>
void Tensor<T>::backward() {
  if (size() != 1) throw DimensionError("backward() needs a scalar loss");
  if (!node_->requires_grad) return;
  // Iterative post-order DFS gives a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node<T>* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->ensure_grad();
  node_->grad[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from(shape(), node_->value, false);
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("add: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_result<T>(a.shape(), std::move(out), {a.node(), b.node()}, [](Node<T>& self) {
    for (auto& parent : self.parents) {
      if (T* g = grad_of(*parent)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw DimensionError("mul: shape mismatch");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_result<T>(a.shape(), std::move(out), {a.node(), b.node()}, [](Node<T>& self) {
    Node<T>& pa = *self.parents[0];
    Node<T>& pb = *self.parents[1];
    if (T* g = grad_of(pa)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (T* g = grad_of(pb)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  return unary<T>(a, [s](T v) { return s * v; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  return unary<T>(a, [s](T v) { return v + s; }, [](T, T) { return T{1}; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return unary<T>(a, [](T v) { return v > 0 ? v : T{0}; }, [](T in, T) { return in > 0 ? T{1} : T{0}; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return unary<T>(
      a,
      [](T v) {
        if (v >= 0) return T{1} / (T{1} + std::exp(-v));
        const T e = std::exp(v);
        return e / (T{1} + e);
      },
      [](T, T out) { return out * (T{1} - out); });
}

template <typename T>
Tensor<T> softplus(const Tensor<T>& a) {
  return unary<T>(
      a, [](T v) { return std::max(v, T{0}) + std::log1p(std::exp(-std::abs(v))); },
      [](T in, T) {
        if (in >= 0) return T{1} / (T{1} + std::exp(-in));
        const T e = std::exp(in);
        return e / (T{1} + e);
      });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = 0;
  for (T v : a.value()) acc += v;
  return make_result<T>({1}, {acc}, {a.node()}, [](Node<T>& self) {
    if (T* g = grad_of(*self.parents[0])) {
      const std::size_t n = self.parents[0]->value.size();
      for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[0];
    }
  });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride) {
  require_shape(x, 4, "conv2d input");
  require_shape(weight, 4, "conv2d weight");
  require_shape(bias, 1, "conv2d bias");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int o = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != c || weight.dim(3) != k || bias.dim(0) != o || stride < 1) {
    throw DimensionError("conv2d: weight " + shape_string(weight.shape()) + " incompatible with input " +
                         shape_string(x.shape()));
  }
  const int pad = k / 2;
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (w + 2 * pad - k) / stride + 1;
  const int ckk = c * k * k;
  const int plane = oh * ow;
  std::vector<T> out(static_cast<std::size_t>(n) * o * plane);
  std::vector<T> cols(static_cast<std::size_t>(ckk) * plane);
  ConstMapMat<T> wm(weight.value().data(), o, ckk);
  for (int b = 0; b < n; ++b) {
    im2col(x.value().data() + static_cast<std::size_t>(b) * c * h * w, c, h, w, k, stride, pad, oh, ow, cols.data());
    MapMat<T> om(out.data() + static_cast<std::size_t>(b) * o * plane, o, plane);
    om.noalias() = wm * ConstMapMat<T>(cols.data(), ckk, plane);
    for (int oc = 0; oc < o; ++oc) om.row(oc).array() += bias.value()[oc];
  }
  return make_result<T>({n, o, oh, ow}, std::move(out), {x.node(), weight.node(), bias.node()},
                        [=](Node<T>& self) {
                          Node<T>& px = *self.parents[0];
                          Node<T>& pw = *self.parents[1];
                          Node<T>& pb = *self.parents[2];
                          T* gx = grad_of(px);
                          T* gw = grad_of(pw);
                          T* gb = grad_of(pb);
                          std::vector<T> cols_b(static_cast<std::size_t>(ckk) * plane);
                          ConstMapMat<T> wmat(pw.value.data(), o, ckk);
                          for (int b = 0; b < n; ++b) {
                            ConstMapMat<T> go(self.grad.data() + static_cast<std::size_t>(b) * o * plane, o, plane);
                            if (gb) {
                              // Plain loops: Eigen's vectorized sum depends on buffer alignment.
                              for (int oc = 0; oc < o; ++oc) {
                                const T* row = self.grad.data() + (static_cast<std::size_t>(b) * o + oc) * plane;
                                T acc = 0;
                                for (int q = 0; q < plane; ++q) acc += row[q];
                                gb[oc] += acc;
                              }
                            }
                            if (gw) {
                              im2col(px.value.data() + static_cast<std::size_t>(b) * c * h * w, c, h, w, k, stride, pad,
                                     oh, ow, cols_b.data());
                              MapMat<T>(gw, o, ckk).noalias() += go * ConstMapMat<T>(cols_b.data(), ckk, plane).transpose();
                            }
                            if (gx) {
                              MapMat<T>(cols_b.data(), ckk, plane).noalias() = wmat.transpose() * go;
                              col2im(cols_b.data(), c, h, w, k, stride, pad, oh, ow,
                                     gx + static_cast<std::size_t>(b) * c * h * w);
                            }
                          }
                        });
}

template <typename T>
Tensor<T> upsample2x(const Tensor<T>& x) {
  require_shape(x, 4, "upsample2x");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int oh = 2 * h, ow = 2 * w;
  std::vector<T> out(static_cast<std::size_t>(n) * c * oh * ow);
  const auto in = x.value();
  for (std::size_t plane = 0; plane < static_cast<std::size_t>(n) * c; ++plane) {
    const T* src = in.data() + plane * h * w;
    T* dst = out.data() + plane * oh * ow;
    for (int y = 0; y < oh; ++y) {
      for (int xx = 0; xx < ow; ++xx) dst[y * ow + xx] = src[(y / 2) * w + xx / 2];
    }
  }
  return make_result<T>({n, c, oh, ow}, std::move(out), {x.node()}, [=](Node<T>& self) {
    if (T* g = grad_of(*self.parents[0])) {
      for (std::size_t plane = 0; plane < static_cast<std::size_t>(n) * c; ++plane) {
        const T* go = self.grad.data() + plane * oh * ow;
        T* gi = g + plane * h * w;
        for (int y = 0; y < oh; ++y) {
          for (int xx = 0; xx < ow; ++xx) gi[(y / 2) * w + xx / 2] += go[y * ow + xx];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> avg_pool2(const Tensor<T>& x) {
  require_shape(x, 4, "avg_pool2");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 || w % 2) throw DimensionError("avg_pool2 needs even spatial dimensions");
  const int oh = h / 2, ow = w / 2;
  std::vector<T> out(static_cast<std::size_t>(n) * c * oh * ow, T{0});
  const auto in = x.value();
  for (std::size_t plane = 0; plane < static_cast<std::size_t>(n) * c; ++plane) {
    const T* src = in.data() + plane * h * w;
    T* dst = out.data() + plane * oh * ow;
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) dst[(y / 2) * ow + xx / 2] += T(0.25) * src[y * w + xx];
    }
  }
  return make_result<T>({n, c, oh, ow}, std::move(out), {x.node()}, [=](Node<T>& self) {
    if (T* g = grad_of(*self.parents[0])) {
      for (std::size_t plane = 0; plane < static_cast<std::size_t>(n) * c; ++plane) {
        const T* go = self.grad.data() + plane * oh * ow;
        T* gi = g + plane * h * w;
        for (int y = 0; y < h; ++y) {
          for (int xx = 0; xx < w; ++xx) gi[y * w + xx] += T(0.25) * go[(y / 2) * ow + xx / 2];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  require_shape(x, 4, "global_avg_pool");
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  std::vector<T> out(static_cast<std::size_t>(n) * c);
  const auto in = x.value();
  for (std::size_t plane = 0; plane < out.size(); ++plane) {
    T acc = 0;
    for (std::size_t i = 0; i < hw; ++i) acc += in[plane * hw + i];
    out[plane] = acc / static_cast<T>(hw);
  }
  return make_result<T>({n, c}, std::move(out), {x.node()}, [=](Node<T>& self) {
    if (T* g = grad_of(*self.parents[0])) {
      for (std::size_t plane = 0; plane < self.grad.size(); ++plane) {
        const T share = self.grad[plane] / static_cast<T>(hw);
        for (std::size_t i = 0; i < hw; ++i) g[plane * hw + i] += share;
      }
    }
  });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_shape(x, 2, "linear input");
  require_shape(weight, 2, "linear weight");
  require_shape(bias, 1, "linear bias");
  const int n = x.dim(0), in = x.dim(1), o = weight.dim(0);
  if (weight.dim(1) != in || bias.dim(0) != o) throw DimensionError("linear: weight/input mismatch");
  std::vector<T> out(static_cast<std::size_t>(n) * o);
  MapMat<T> om(out.data(), n, o);
  om.noalias() = ConstMapMat<T>(x.value().data(), n, in) * ConstMapMat<T>(weight.value().data(), o, in).transpose();
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < o; ++j) om(r, j) += bias.value()[j];
  }
  return make_result<T>({n, o}, std::move(out), {x.node(), weight.node(), bias.node()}, [=](Node<T>& self) {
    Node<T>& px = *self.parents[0];
    Node<T>& pw = *self.parents[1];
    Node<T>& pb = *self.parents[2];
    ConstMapMat<T> go(self.grad.data(), n, o);
    if (T* g = grad_of(px)) MapMat<T>(g, n, in).noalias() += go * ConstMapMat<T>(pw.value.data(), o, in);
    if (T* g = grad_of(pw)) MapMat<T>(g, o, in).noalias() += go.transpose() * ConstMapMat<T>(px.value.data(), n, in);
    if (T* g = grad_of(pb)) {
      for (int r = 0; r < n; ++r) {
        for (int j = 0; j < o; ++j) g[j] += self.grad[static_cast<std::size_t>(r) * o + j];
      }
    }
  });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, std::mt19937_64& rng) {
  if (!training || rate <= 0.0) return x;
  if (rate >= 1.0) throw DomainError("dropout rate must be below 1");
  std::bernoulli_distribution keep(1.0 - rate);
  const T kept_scale = static_cast<T>(1.0 / (1.0 - rate));
  auto mask = std::make_shared<std::vector<T>>(x.size());
  for (T& m : *mask) m = keep(rng) ? kept_scale : T{0};
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * (*mask)[i];
  return make_result<T>(x.shape(), std::move(out), {x.node()}, [mask](Node<T>& self) {
    if (T* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * (*mask)[i];
    }
  });
}

template <typename T>
Tensor<T> e2p_warp(const Tensor<T>& x, std::shared_ptr<const SamplingGrid> grid) {
  require_shape(x, 4, "e2p_warp");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h != grid->pano_h || w != grid->pano_w) {
    throw DimensionError("e2p_warp: feature map " + shape_string(x.shape()) + " does not match sampling grid");
  }
  const int vw = grid->cfg.w;
  const std::size_t in_stride = static_cast<std::size_t>(c) * h * w;
  const std::size_t out_stride = static_cast<std::size_t>(c) * vw * vw;
  std::vector<T> out(static_cast<std::size_t>(n) * out_stride);
  for (int b = 0; b < n; ++b) {
    warp_forward<T>(*grid, x.value().subspan(b * in_stride, in_stride),
                    std::span<T>(out).subspan(b * out_stride, out_stride), c, ChannelLayout::Planar);
  }
  return make_result<T>({n, c, vw, vw}, std::move(out), {x.node()}, [=](Node<T>& self) {
    if (T* g = grad_of(*self.parents[0])) {
      for (int b = 0; b < n; ++b) {
        warp_backward<T>(*grid, std::span<const T>(self.grad).subspan(b * out_stride, out_stride),
                         std::span<T>(g + b * in_stride, in_stride), c, ChannelLayout::Planar);
      }
    }
  });
}

template <typename T>
Tensor<T> bce_sum(const Tensor<T>& pred, std::span<const T> target, T eps) {
  if (target.size() != pred.size()) throw DimensionError("bce: target/prediction size mismatch");
  T acc = 0;
  const auto p = pred.value();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const T pc = std::clamp(p[i], eps, T{1} - eps);
    acc -= target[i] * std::log(pc) + (T{1} - target[i]) * std::log(T{1} - pc);
  }
  std::vector<T> tgt(target.begin(), target.end());
  return make_result<T>({1}, {acc}, {pred.node()}, [tgt = std::move(tgt), eps](Node<T>& self) {
    Node<T>& pp = *self.parents[0];
    if (T* g = grad_of(pp)) {
      for (std::size_t i = 0; i < tgt.size(); ++i) {
        const T v = pp.value[i];
        if (v <= eps || v >= T{1} - eps) continue;
        g[i] += self.grad[0] * (v - tgt[i]) / (v * (T{1} - v));
      }
    }
  });
}

template <typename T>
Tensor<T> l1_sum(const Tensor<T>& pred, std::span<const T> target) {
  if (target.size() != pred.size()) throw DimensionError("l1: target/prediction size mismatch");
  T acc = 0;
  for (std::size_t i = 0; i < target.size(); ++i) acc += std::abs(pred.value()[i] - target[i]);
  std::vector<T> tgt(target.begin(), target.end());
  return make_result<T>({1}, {acc}, {pred.node()}, [tgt = std::move(tgt)](Node<T>& self) {
    Node<T>& pp = *self.parents[0];
    if (T* g = grad_of(pp)) {
      for (std::size_t i = 0; i < tgt.size(); ++i) {
        const T d = pp.value[i] - tgt[i];
        g[i] += self.grad[0] * (d > 0 ? T{1} : (d < 0 ? T{-1} : T{0}));
      }
    }
  });
}

#define PANOLAYOUT_INSTANTIATE(T)                                                                     \
  template class Tensor<T>;                                                                          \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> scale(const Tensor<T>&, T);                                                     \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                                \
  template Tensor<T> relu(const Tensor<T>&);                                                         \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                      \
  template Tensor<T> softplus(const Tensor<T>&);                                                     \
  template Tensor<T> sum(const Tensor<T>&);                                                          \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int);              \
  template Tensor<T> upsample2x(const Tensor<T>&);                                                   \
  template Tensor<T> avg_pool2(const Tensor<T>&);                                                    \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                              \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> dropout(const Tensor<T>&, double, bool, std::mt19937_64&);                      \
  template Tensor<T> e2p_warp(const Tensor<T>&, std::shared_ptr<const SamplingGrid>);                \
  template Tensor<T> bce_sum(const Tensor<T>&, std::span<const T>, T);                               \
  template Tensor<T> l1_sum(const Tensor<T>&, std::span<const T>);

PANOLAYOUT_INSTANTIATE(float)
PANOLAYOUT_INSTANTIATE(double)

#undef PANOLAYOUT_INSTANTIATE

}  // namespace panolayout::ad

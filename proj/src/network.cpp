#include "panolayout/network.hpp"

#include <cmath>

#include "panolayout/errors.hpp"
#include "panolayout/layout.hpp"

namespace panolayout {

namespace {

constexpr int kEncoderChannels[] = {16, 32, 64, 128};
constexpr int kDecoderChannels[] = {64, 32, 16, 8};
constexpr int kHeightHidden[] = {64, 16};
// softplus(0.84) ~= 1.2, so an untrained head predicts H ~= 2.8 m.
constexpr double kHeightBiasInit = 0.84;

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoFusion: return "no-fusion";
    case Variant::PanoOnly: return "pano-only";
    case Variant::CeilingOnly: return "ceiling-only";
  }
  return "full";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::Full, Variant::NoFusion, Variant::PanoOnly, Variant::CeilingOnly}) {
    if (variant_name(v) == name) return v;
  }
  throw DomainError("unknown network variant '" + name + "'");
}

double fusion_coefficient(int i, double alpha, double beta) { return alpha / std::pow(beta, i); }

template <typename T>
ad::Tensor<T> fuse_features(const ad::Tensor<T>& f_bc, const ad::Tensor<T>& f_bp, int i, double alpha, double beta) {
  if (f_bc.shape() != f_bp.shape()) {
    throw DimensionError("fusion: ceiling features " + ad::shape_string(f_bc.shape()) + " vs warped pano features " +
                         ad::shape_string(f_bp.shape()));
  }
  return ad::add(f_bc, ad::scale(f_bp, static_cast<T>(fusion_coefficient(i, alpha, beta))));
}

template <typename T>
ToyDulaNet<T>::ToyDulaNet(const NetworkConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.alpha < 0.0 || cfg.beta <= 0.0 || cfg.dropout < 0.0 || cfg.dropout >= 1.0) {
    throw DomainError("network config: alpha >= 0, beta > 0 and dropout in [0, 1) required");
  }
  std::mt19937_64 rng(seed);
  auto add_branch = [&](const std::string& branch, bool with_decoder) {
    int in = 3;
    for (int l = 0; l < kLevels; ++l) {
      const int out = kEncoderChannels[l];
      add_param(branch + ".enc" + std::to_string(l) + ".w", {out, in, 3, 3}, in * 9, rng);
      add_param(branch + ".enc" + std::to_string(l) + ".b", {out}, 0, rng);
      in = out;
    }
    if (!with_decoder) return;
    for (int l = 0; l < kLevels; ++l) {
      const int out = kDecoderChannels[l];
      add_param(branch + ".dec" + std::to_string(l) + ".w", {out, in, 3, 3}, in * 9, rng);
      add_param(branch + ".dec" + std::to_string(l) + ".b", {out}, 0, rng);
      in = out;
    }
    add_param(branch + ".head.w", {1, in, 3, 3}, in * 9, rng);
    add_param(branch + ".head.b", {1}, 0, rng);
  };
  // The panorama encoder always feeds the height head; its decoder is needed
  // for the FC head and as the fusion source.
  const bool pano_decoder = cfg.variant != Variant::CeilingOnly;
  add_branch("pano", pano_decoder);
  if (uses_ceiling_maps()) add_branch("ceil", true);
  int in = kEncoderChannels[kLevels - 1];
  for (int l = 0; l < 2; ++l) {
    add_param("height.fc" + std::to_string(l) + ".w", {kHeightHidden[l], in}, in, rng);
    add_param("height.fc" + std::to_string(l) + ".b", {kHeightHidden[l]}, 0, rng);
    in = kHeightHidden[l];
  }
  add_param("height.fc2.w", {1, in}, in, rng);
  add_param("height.fc2.b", {1}, 0, rng).mutable_value()[0] = static_cast<T>(kHeightBiasInit);

  input_grid_ = shared_grid(E2PConfig{kFovDeg, kViewW, ViewDirection::Up}, kPanoW, kPanoH);
  if (cfg.variant == Variant::Full) {
    const int base = kPanoH >> kLevels;
    for (int l = 0; l < kLevels; ++l) {
      const int h = base << l;
      fusion_grids_.push_back(shared_grid(E2PConfig{kFovDeg, h, ViewDirection::Up}, 2 * h, h));
    }
  }
}

template <typename T>
ad::Tensor<T>& ToyDulaNet<T>::add_param(const std::string& name, ad::Shape shape, int fan_in, std::mt19937_64& rng) {
  auto t = ad::Tensor<T>::zeros(std::move(shape), true);
  if (fan_in > 0) {
    // He-uniform: keeps activation variance roughly constant through ReLUs.
    const double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (T& v : t.mutable_value()) v = static_cast<T>(dist(rng));
  }
  params_.emplace_back(name, std::move(t));
  return params_.back().second;
}

template <typename T>
ad::Tensor<T> ToyDulaNet<T>::parameter(const std::string& name) const {
  for (const auto& [n, t] : params_) {
    if (n == name) return t;
  }
  throw DomainError("no parameter named '" + name + "'");
}

template <typename T>
std::size_t ToyDulaNet<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.second.size();
  return n;
}

template <typename T>
ad::Tensor<T> ToyDulaNet<T>::conv(const std::string& prefix, const ad::Tensor<T>& x, int stride) const {
  return ad::conv2d(x, parameter(prefix + ".w"), parameter(prefix + ".b"), stride);
}

template <typename T>
ad::Tensor<T> ToyDulaNet<T>::ceiling_input(const ad::Tensor<T>& pano) const {
  return ad::e2p_warp(pano.detach(), input_grid_);
}

template <typename T>
NetworkOutput<T> ToyDulaNet<T>::forward(const ad::Tensor<T>& pano, bool training, std::mt19937_64& rng) const {
  if (pano.shape().size() != 4 || pano.dim(1) != 3 || pano.dim(2) != kPanoH || pano.dim(3) != kPanoW) {
    throw DimensionError("network input must be [N, 3, 64, 128], got " + ad::shape_string(pano.shape()));
  }
  auto encode = [&](const std::string& branch, ad::Tensor<T> x) {
    for (int l = 0; l < kLevels; ++l) x = ad::relu(conv(branch + ".enc" + std::to_string(l), x, 2));
    return x;
  };
  auto decode_block = [&](const std::string& branch, int l, const ad::Tensor<T>& x) {
    return ad::relu(conv(branch + ".dec" + std::to_string(l), ad::upsample2x(x), 1));
  };

  NetworkOutput<T> out;
  const ad::Tensor<T> pano_code = encode("pano", pano);

  std::vector<ad::Tensor<T>> taps;
  if (cfg_.variant != Variant::CeilingOnly) {
    ad::Tensor<T> d = pano_code;
    for (int l = 0; l < kLevels; ++l) {
      taps.push_back(d);
      d = decode_block("pano", l, d);
    }
    out.fc = ad::sigmoid(conv("pano.head", d, 1));
  }

  if (uses_ceiling_maps()) {
    ad::Tensor<T> d = encode("ceil", ceiling_input(pano));
    for (int l = 0; l < kLevels; ++l) {
      if (cfg_.variant == Variant::Full) {
        d = fuse_features(d, ad::e2p_warp(taps[l], fusion_grids_[l]), l, cfg_.alpha, cfg_.beta);
      }
      d = decode_block("ceil", l, d);
    }
    out.fp = ad::sigmoid(conv("ceil.head", d, 1));
  }

  ad::Tensor<T> h = ad::global_avg_pool(pano_code);
  for (int l = 0; l < 2; ++l) {
    const std::string p = "height.fc" + std::to_string(l);
    h = ad::dropout(ad::relu(ad::linear(h, parameter(p + ".w"), parameter(p + ".b"))), cfg_.dropout, training, rng);
  }
  h = ad::linear(h, parameter("height.fc2.w"), parameter("height.fc2.b"));
  out.height = ad::add_scalar(ad::softplus(h), static_cast<T>(kCameraToCeiling));
  return out;
}

template <typename T>
template <typename U>
ToyDulaNet<U> ToyDulaNet<T>::converted() const {
  ToyDulaNet<U> other(cfg_, 0);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto src = params_[i].second.value();
    auto dst = other.params_[i].second.mutable_value();
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] = static_cast<U>(src[k]);
  }
  return other;
}

template class ToyDulaNet<float>;
template class ToyDulaNet<double>;
template ToyDulaNet<double> ToyDulaNet<float>::converted<double>() const;
template ToyDulaNet<float> ToyDulaNet<double>::converted<float>() const;
template ToyDulaNet<float> ToyDulaNet<float>::converted<float>() const;
template ad::Tensor<float> fuse_features(const ad::Tensor<float>&, const ad::Tensor<float>&, int, double, double);
template ad::Tensor<double> fuse_features(const ad::Tensor<double>&, const ad::Tensor<double>&, int, double, double);

}  // namespace panolayout

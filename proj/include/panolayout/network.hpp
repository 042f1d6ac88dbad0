#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "panolayout/autodiff.hpp"
#include "panolayout/projection.hpp"

namespace panolayout {

/// Ablation switch. NoFusion keeps both branches with the fusion taps off;
/// the single-branch variants train and use only one map head.
enum class Variant { Full, NoFusion, PanoOnly, CeilingOnly };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);  // throws DomainError

/// Feature fusion: f_BC + (alpha / beta^i) * f_BP, with f_BP
/// already warped into the ceiling view.
template <typename T>
ad::Tensor<T> fuse_features(const ad::Tensor<T>& f_bc, const ad::Tensor<T>& f_bp, int i, double alpha, double beta);
double fusion_coefficient(int i, double alpha, double beta);

struct NetworkConfig {
  Variant variant = Variant::Full;
  double alpha = 0.6;
  double beta = 3.0;
  double dropout = 0.5;
};

template <typename T>
struct NetworkOutput {
  ad::Tensor<T> fc;      // [N, 1, 64, 128]
  ad::Tensor<T> fp;      // [N, 1, 64, 64]
  ad::Tensor<T> height;  // [N, 1], always > 1.6
};

/// Desk-scale dual-projection network: a panorama branch and a ceiling-view
/// branch (fed by e2p of the panorama), each a 4-level strided encoder and
/// a resize-convolution decoder, plus a height head on the panorama code.
template <typename T>
class ToyDulaNet {
 public:
  static constexpr int kPanoH = 64;
  static constexpr int kPanoW = 128;
  static constexpr int kViewW = 64;
  static constexpr int kLevels = 4;
  static constexpr double kFovDeg = 160.0;

  ToyDulaNet(const NetworkConfig& cfg, std::uint64_t seed);

  const NetworkConfig& config() const { return cfg_; }

  /// pano: [N, 3, 64, 128] in [0, 1]. Heads that the variant does not use
  /// are left undefined.
  NetworkOutput<T> forward(const ad::Tensor<T>& pano, bool training, std::mt19937_64& rng) const;

  /// Ceiling-view input derived from the panorama.
  ad::Tensor<T> ceiling_input(const ad::Tensor<T>& pano) const;

  std::vector<std::pair<std::string, ad::Tensor<T>>>& parameters() { return params_; }
  const std::vector<std::pair<std::string, ad::Tensor<T>>>& parameters() const { return params_; }
  ad::Tensor<T> parameter(const std::string& name) const;
  std::size_t parameter_count() const;

  bool uses_pano_maps() const { return cfg_.variant != Variant::CeilingOnly; }
  bool uses_ceiling_maps() const { return cfg_.variant != Variant::PanoOnly; }

  /// Copy with the same architecture and values converted to another precision.
  template <typename U>
  ToyDulaNet<U> converted() const;

 private:
  template <typename U>
  friend class ToyDulaNet;

  ad::Tensor<T>& add_param(const std::string& name, ad::Shape shape, int fan_in, std::mt19937_64& rng);
  ad::Tensor<T> conv(const std::string& prefix, const ad::Tensor<T>& x, int stride) const;

  NetworkConfig cfg_;
  std::vector<std::pair<std::string, ad::Tensor<T>>> params_;
  std::shared_ptr<const SamplingGrid> input_grid_;
  std::vector<std::shared_ptr<const SamplingGrid>> fusion_grids_;  // per decoder block
};

}  // namespace panolayout

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <random>
#include <vector>

#include "panolayout/autodiff.hpp"
#include "panolayout/layout.hpp"
#include "panolayout/network.hpp"
#include "panolayout/synth.hpp"

namespace panolayout {

struct TrainConfig {
  double lr = 3e-4;
  int batch = 4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double alpha = 0.6;
  double beta = 3.0;
  double gamma = 0.5;
  double dropout = 0.5;
  int epochs = 40;
  std::uint64_t seed = 1;
  Variant variant = Variant::Full;
  bool augment = true;
  int max_steps = 0;           // 0: no limit
  double time_budget_s = 0.0;  // 0: no limit; checked after every step
  bool eval_iou = true;        // fit the validation predictions every epoch

  NetworkConfig network() const { return {variant, alpha, beta, dropout}; }
};

void validate_train_config(const TrainConfig& cfg);  // throws DomainError

/// Horizontal rotation by quarter_turns * 90 degrees, then an optional
/// column mirror.
struct AugmentChoice {
  int quarter_turns = 0;
  bool flip = false;
};

/// Applies the choice to the panorama, both GT maps and the layout.
Sample augment(const Sample& sample, AugmentChoice choice);
/// Layout seen after the same transformation.
ManhattanLayout augment_layout(const ManhattanLayout& layout, AugmentChoice choice);

template <typename T>
struct Batch {
  ad::Tensor<T> pano;  // [N, 3, 64, 128]
  std::vector<T> fc;   // N * 64 * 128
  std::vector<T> fp;   // N * 64 * 64
  std::vector<T> height;
  int size = 0;
};

/// Samples must be at network resolution (64x128 panorama and FC, 64x64 FP).
template <typename T>
Batch<T> make_batch(const std::vector<const Sample*>& samples);

template <typename T>
struct LossTerms {
  ad::Tensor<T> total;
  double fc_bce = 0.0;  // batch means
  double fp_bce = 0.0;
  double height_l1 = 0.0;
};

/// Pixel-summed BCE on each used map plus gamma * |H - H*|, averaged over
/// the batch. Heads the variant does not produce are skipped.
template <typename T>
LossTerms<T> compute_loss(const NetworkOutput<T>& out, const Batch<T>& batch, double gamma);

template <typename T>
class Adam {
 public:
  Adam(std::vector<ad::Tensor<T>> params, double lr, double beta1, double beta2, double eps = 1e-8);
  void step();
  void zero_grad();
  long steps() const { return t_; }

 private:
  std::vector<ad::Tensor<T>> params_;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

struct CurvePoint {
  int epoch = 0;
  long step = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_iou2d = 0.0;
};

struct TrainResult {
  ToyDulaNet<float> model;
  std::vector<CurvePoint> curve;
  long steps = 0;
  double seconds = 0.0;
};

using EpochCallback = std::function<void(const ToyDulaNet<float>&, const CurvePoint&)>;

/// Deterministic in cfg.seed when no time budget interrupts it. Throws
/// TrainingError on a non-finite loss.
TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

struct Prediction {
  EquirectMap fc;      // absent for ceiling-only models
  PerspectiveMap fp;   // absent for pano-only models
  double height_m = 0.0;
};

/// Any 2:1 panorama; it is area-resized to the network input first.
Prediction predict(const ToyDulaNet<float>& model, const EquirectMap& pano);
/// Fused floor plan map the variant feeds into fitting.
PerspectiveMap variant_fused_map(const Prediction& p, Variant variant);
ManhattanLayout predict_layout(const ToyDulaNet<float>& model, const EquirectMap& pano);

struct ValidationScore {
  double loss = 0.0;
  double iou2d = 0.0;
  int failures = 0;
};
ValidationScore validate(const ToyDulaNet<float>& model, const std::vector<Sample>& val_set, double gamma,
                         bool with_iou = true);

/// "PLCK" checkpoints: u32 version, then named float32 blobs.
void save_checkpoint(const std::filesystem::path& path, const ToyDulaNet<float>& model);
ToyDulaNet<float> load_checkpoint(const std::filesystem::path& path);  // throws CheckpointError

}  // namespace panolayout

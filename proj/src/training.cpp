#include "panolayout/training.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <sstream>

#include "panolayout/errors.hpp"
#include "panolayout/fitting.hpp"
#include "panolayout/image_io.hpp"
#include "panolayout/metrics.hpp"
#include "panolayout/projection.hpp"

namespace panolayout {

namespace {

using Net = ToyDulaNet<float>;
constexpr int kPanoH = Net::kPanoH;
constexpr int kPanoW = Net::kPanoW;
constexpr int kViewW = Net::kViewW;
constexpr int kValBatch = 8;
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[4] = {'P', 'L', 'C', 'K'};

CeilingViewFrame network_frame() { return CeilingViewFrame::for_fov(kViewW, Net::kFovDeg); }

template <typename T>
ad::Tensor<T> pano_tensor(const std::vector<const EquirectMap*>& panos) {
  const std::size_t plane = static_cast<std::size_t>(kPanoH) * kPanoW;
  std::vector<T> values(panos.size() * 3 * plane);
  for (std::size_t n = 0; n < panos.size(); ++n) {
    const EquirectMap& p = *panos[n];
    if (p.width() != kPanoW || p.height() != kPanoH || p.channels() != 3) {
      throw DimensionError("network panoramas must be 128x64 RGB");
    }
    for (int c = 0; c < 3; ++c) {
      T* dst = values.data() + (n * 3 + c) * plane;
      for (int y = 0; y < kPanoH; ++y) {
        for (int x = 0; x < kPanoW; ++x) dst[y * kPanoW + x] = static_cast<T>(p.at(x, y, c));
      }
    }
  }
  return ad::Tensor<T>::from({static_cast<int>(panos.size()), 3, kPanoH, kPanoW}, std::move(values));
}

template <typename Tag>
Raster<float, Tag> plane_to_raster(const ad::Tensor<float>& t, int n) {
  const int h = t.dim(2), w = t.dim(3);
  const auto v = t.value().subspan(static_cast<std::size_t>(n) * h * w, static_cast<std::size_t>(h) * w);
  return Raster<float, Tag>(w, h, 1, std::vector<float>(v.begin(), v.end()));
}

Prediction extract(const NetworkOutput<float>& out, int n) {
  Prediction p;
  if (out.fc.defined()) p.fc = plane_to_raster<EquirectTag>(out.fc, n);
  if (out.fp.defined()) p.fp = plane_to_raster<PerspectiveTag>(out.fp, n);
  p.height_m = out.height.value()[n];
  return p;
}

ManhattanLayout fit_prediction(const Prediction& p, Variant variant) {
  return fit_fused(variant_fused_map(p, variant), p.height_m, network_frame());
}

// Little-endian serialization helpers for checkpoints.
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_blob(std::vector<std::uint8_t>& out, const std::string& name, const ad::Shape& shape,
              std::span<const float> values) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (int d : shape) put_u32(out, static_cast<std::uint32_t>(d));
  for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

struct Blob {
  ad::Shape shape;
  std::vector<float> values;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint is truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void validate_train_config(const TrainConfig& cfg) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(cfg.lr) || cfg.batch <= 0 || cfg.epochs <= 0) throw DomainError("lr, batch and epochs must be positive");
  if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0 && cfg.beta2 > 0.0 && cfg.beta2 < 1.0)) {
    throw DomainError("Adam betas must lie in (0, 1)");
  }
  if (!(cfg.alpha >= 0.0) || !positive(cfg.beta) || !positive(cfg.gamma)) {
    throw DomainError("fusion alpha must be non-negative; beta and gamma positive");
  }
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw DomainError("dropout must lie in [0, 1)");
  if (cfg.max_steps < 0 || cfg.time_budget_s < 0.0) throw DomainError("limits must be non-negative");
}

ManhattanLayout augment_layout(const ManhattanLayout& layout, AugmentChoice choice) {
  ManhattanLayout out = layout;
  const int k = ((choice.quarter_turns % 4) + 4) % 4;
  for (Point2& p : out.corners) {
    for (int s = 0; s < k; ++s) p = {p.z, -p.x};
  }
  if (choice.flip) {
    for (Point2& p : out.corners) p.x = -p.x;
    std::reverse(out.corners.begin(), out.corners.end());
  }
  return out;
}

Sample augment(const Sample& sample, AugmentChoice choice) {
  const int w = sample.pano.width();
  if (w % 4 != 0) throw DimensionError("panorama width must be divisible by 4 for quarter rotations");
  const int k = ((choice.quarter_turns % 4) + 4) % 4;
  Sample out;
  out.id = sample.id;
  out.height_m = sample.height_m;
  out.pano = shift_columns(sample.pano, k * w / 4);
  out.fc = shift_columns(sample.fc, k * sample.fc.width() / 4);
  out.fp = rotate_quarter(sample.fp, k);
  if (choice.flip) {
    out.pano = mirror_columns(out.pano);
    out.fc = mirror_columns(out.fc);
    out.fp = mirror_columns(out.fp);
  }
  out.layout = augment_layout(sample.layout, choice);
  return out;
}

template <typename T>
Batch<T> make_batch(const std::vector<const Sample*>& samples) {
  Batch<T> b;
  b.size = static_cast<int>(samples.size());
  std::vector<const EquirectMap*> panos;
  for (const Sample* s : samples) {
    if (s->fc.width() != kPanoW || s->fc.height() != kPanoH || s->fp.width() != kViewW || s->fp.height() != kViewW) {
      throw DimensionError("training sample '" + s->id + "' is not at network resolution");
    }
    panos.push_back(&s->pano);
    b.fc.insert(b.fc.end(), s->fc.data().begin(), s->fc.data().end());
    b.fp.insert(b.fp.end(), s->fp.data().begin(), s->fp.data().end());
    b.height.push_back(static_cast<T>(s->height_m));
  }
  b.pano = pano_tensor<T>(panos);
  return b;
}

template <typename T>
LossTerms<T> compute_loss(const NetworkOutput<T>& out, const Batch<T>& batch, double gamma) {
  LossTerms<T> terms;
  const double n = batch.size;
  ad::Tensor<T> acc = ad::scale(ad::l1_sum(out.height, std::span<const T>(batch.height)), static_cast<T>(gamma));
  terms.height_l1 = acc.item() / (gamma * n);
  if (out.fc.defined()) {
    const auto e = ad::bce_sum(out.fc, std::span<const T>(batch.fc));
    terms.fc_bce = e.item() / n;
    acc = ad::add(acc, e);
  }
  if (out.fp.defined()) {
    const auto e = ad::bce_sum(out.fp, std::span<const T>(batch.fp));
    terms.fp_bce = e.item() / n;
    acc = ad::add(acc, e);
  }
  terms.total = ad::scale(acc, static_cast<T>(1.0 / n));
  return terms;
}

template <typename T>
Adam<T>::Adam(std::vector<ad::Tensor<T>> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), T{0});
    v_.emplace_back(p.size(), T{0});
  }
}

template <typename T>
void Adam<T>::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto g = params_[i].grad();
    if (g.empty()) continue;
    auto w = params_[i].mutable_value();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = b1 * m[k] + (T{1} - b1) * g[k];
      v[k] = b2 * v[k] + (T{1} - b2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      w[k] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

PerspectiveMap variant_fused_map(const Prediction& p, Variant variant) {
  const CeilingViewFrame frame = network_frame();
  if (variant == Variant::CeilingOnly) return p.fp;
  const SplitMaps split = split_fc(p.fc, p.height_m, frame);
  if (variant == Variant::PanoOnly) {
    PerspectiveMap out(frame.w, frame.w, 1);
    for (std::size_t i = 0; i < out.storage().size(); ++i) {
      out.storage()[i] = 0.5f * (split.ceiling.storage()[i] + split.floor.storage()[i]);
    }
    return out;
  }
  return fuse(p.fp, split.ceiling, split.floor);
}

Prediction predict(const Net& model, const EquirectMap& pano) {
  if (pano.width() != 2 * pano.height() || pano.height() == 0) throw DimensionError("panorama must be 2:1");
  if (pano.channels() != 3) throw DimensionError("panorama must be RGB");
  const EquirectMap small =
      pano.width() == kPanoW ? pano : resize_area(pano, kPanoW, kPanoH);
  ad::NoGradGuard no_grad;
  std::mt19937_64 rng(0);
  const auto out = model.forward(pano_tensor<float>({&small}), false, rng);
  return extract(out, 0);
}

ManhattanLayout predict_layout(const Net& model, const EquirectMap& pano) {
  return fit_prediction(predict(model, pano), model.config().variant);
}

ValidationScore validate(const Net& model, const std::vector<Sample>& val_set, double gamma, bool with_iou) {
  ValidationScore score;
  if (val_set.empty()) return score;
  ad::NoGradGuard no_grad;
  std::mt19937_64 rng(0);
  double loss = 0.0, iou = 0.0;
  for (std::size_t start = 0; start < val_set.size(); start += kValBatch) {
    std::vector<const Sample*> chunk;
    for (std::size_t i = start; i < std::min(val_set.size(), start + kValBatch); ++i) chunk.push_back(&val_set[i]);
    const Batch<float> batch = make_batch<float>(chunk);
    const auto out = model.forward(batch.pano, false, rng);
    loss += compute_loss(out, batch, gamma).total.item() * batch.size;
    if (!with_iou) continue;
    for (int n = 0; n < batch.size; ++n) {
      try {
        iou += iou2d(fit_prediction(extract(out, n), model.config().variant), chunk[n]->layout);
      } catch (const Error&) {
        ++score.failures;
      }
    }
  }
  score.loss = loss / val_set.size();
  score.iou2d = iou / val_set.size();
  return score;
}

TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  validate_train_config(cfg);
  if (train_set.empty()) throw DomainError("training set is empty");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  TrainResult result{Net(cfg.network(), cfg.seed), {}, 0, 0.0};
  std::vector<ad::Tensor<float>> params;
  for (auto& p : result.model.parameters()) params.push_back(p.second);
  Adam<float> opt(params, cfg.lr, cfg.beta1, cfg.beta2);
  std::mt19937_64 rng(cfg.seed ^ 0xA5A5A5A5ULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  bool stop = false;
  for (int epoch = 1; epoch <= cfg.epochs && !stop; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size() && !stop; start += cfg.batch) {
      std::vector<Sample> augmented;
      std::vector<const Sample*> chunk;
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      augmented.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const Sample& s = train_set[order[i]];
        if (cfg.augment) {
          AugmentChoice choice{static_cast<int>(rng() % 4), (rng() & 1) != 0};
          augmented.push_back(augment(s, choice));
          chunk.push_back(&augmented.back());
        } else {
          chunk.push_back(&s);
        }
      }
      const Batch<float> batch = make_batch<float>(chunk);
      const auto out = result.model.forward(batch.pano, true, rng);
      const auto terms = compute_loss(out, batch, cfg.gamma);
      const double loss = terms.total.item();
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch << " step " << opt.steps() + 1 << " (fc_bce " << terms.fc_bce
           << ", fp_bce " << terms.fp_bce << ", height_l1 " << terms.height_l1 << ")";
        throw TrainingError(os.str());
      }
      opt.zero_grad();
      auto total = terms.total;
      total.backward();
      opt.step();
      epoch_loss += loss * batch.size;
      seen += batch.size;
      if ((cfg.max_steps > 0 && opt.steps() >= cfg.max_steps) ||
          (cfg.time_budget_s > 0.0 && elapsed() >= cfg.time_budget_s)) {
        stop = true;
      }
    }
    CurvePoint point;
    point.epoch = epoch;
    point.step = opt.steps();
    point.train_loss = epoch_loss / static_cast<double>(seen);
    const ValidationScore val = validate(result.model, val_set, cfg.gamma, cfg.eval_iou);
    point.val_loss = val_set.empty() ? std::nan("") : val.loss;
    point.val_iou2d = val_set.empty() || !cfg.eval_iou ? std::nan("") : val.iou2d;
    result.curve.push_back(point);
    if (on_epoch) on_epoch(result.model, point);
  }
  result.steps = opt.steps();
  result.seconds = elapsed();
  return result;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "step,train_loss,val_loss,val_iou2d\n";
  for (const auto& p : curve) out << p.step << ',' << p.train_loss << ',' << p.val_loss << ',' << p.val_iou2d << '\n';
}

void save_checkpoint(const std::filesystem::path& path, const Net& model) {
  std::vector<std::uint8_t> bytes(kCheckpointMagic, kCheckpointMagic + 4);
  put_u32(bytes, kCheckpointVersion);
  const NetworkConfig& c = model.config();
  const float variant = static_cast<float>(static_cast<int>(c.variant));
  const float alpha = static_cast<float>(c.alpha), beta = static_cast<float>(c.beta);
  const float dropout = static_cast<float>(c.dropout);
  put_blob(bytes, "meta.variant", {1}, std::span<const float>(&variant, 1));
  put_blob(bytes, "meta.alpha", {1}, std::span<const float>(&alpha, 1));
  put_blob(bytes, "meta.beta", {1}, std::span<const float>(&beta, 1));
  put_blob(bytes, "meta.dropout", {1}, std::span<const float>(&dropout, 1));
  for (const auto& [name, t] : model.parameters()) put_blob(bytes, name, t.shape(), t.value());
  write_file_atomic(path, bytes);
}

Net load_checkpoint(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const Error& e) {
    throw CheckpointError(e.what());
  }
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw CheckpointError("not a PLCK checkpoint: " + path.string());
  }
  Reader r(std::span<const std::uint8_t>(bytes).subspan(4));
  if (const auto v = r.u32(); v != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(v));
  }
  std::map<std::string, Blob> blobs;
  while (!r.done()) {
    const std::uint32_t name_len = r.u32();
    if (name_len > 4096) throw CheckpointError("checkpoint blob name too long");
    std::string name = r.str(name_len);
    Blob b;
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw CheckpointError("checkpoint blob '" + name + "' has rank " + std::to_string(rank));
    std::size_t count = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      b.shape.push_back(static_cast<int>(r.u32()));
      count *= static_cast<std::size_t>(b.shape.back());
      if (count > (std::size_t{1} << 28)) throw CheckpointError("checkpoint blob '" + name + "' is too large");
    }
    b.values.resize(count);
    for (float& v : b.values) v = std::bit_cast<float>(r.u32());
    blobs[std::move(name)] = std::move(b);
  }
  auto scalar = [&](const std::string& name) {
    const auto it = blobs.find(name);
    if (it == blobs.end() || it->second.values.size() != 1) throw CheckpointError("checkpoint lacks " + name);
    return static_cast<double>(it->second.values[0]);
  };
  NetworkConfig cfg;
  const int variant = static_cast<int>(scalar("meta.variant"));
  if (variant < 0 || variant > 3) throw CheckpointError("checkpoint has an unknown variant");
  cfg.variant = static_cast<Variant>(variant);
  cfg.alpha = scalar("meta.alpha");
  cfg.beta = scalar("meta.beta");
  cfg.dropout = blobs.contains("meta.dropout") ? scalar("meta.dropout") : 0.5;
  try {
    Net model(cfg, 0);
    std::size_t used = std::count_if(blobs.begin(), blobs.end(), [](const auto& b) { return b.first.starts_with("meta."); });
    for (auto& [name, t] : model.parameters()) {
      const auto it = blobs.find(name);
      if (it == blobs.end()) throw CheckpointError("checkpoint lacks parameter " + name);
      if (it->second.shape != t.shape()) {
        throw CheckpointError("parameter " + name + " has shape " + ad::shape_string(it->second.shape) +
                              ", expected " + ad::shape_string(t.shape()));
      }
      std::copy(it->second.values.begin(), it->second.values.end(), t.mutable_value().begin());
      ++used;
    }
    if (used != blobs.size()) throw CheckpointError("checkpoint holds unexpected parameters");
    return model;
  } catch (const DomainError& e) {
    throw CheckpointError(std::string("checkpoint metadata invalid: ") + e.what());
  }
}

template Batch<float> make_batch(const std::vector<const Sample*>&);
template Batch<double> make_batch(const std::vector<const Sample*>&);
template LossTerms<float> compute_loss(const NetworkOutput<float>&, const Batch<float>&, double);
template LossTerms<double> compute_loss(const NetworkOutput<double>&, const Batch<double>&, double);
template class Adam<float>;
template class Adam<double>;

}  // namespace panolayout

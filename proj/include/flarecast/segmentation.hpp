#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "flarecast/ingest.hpp"

namespace flarecast::segmentation {

enum class Variant { kUnet, kAttentionUnet };

Variant parse_variant(std::string_view text);  // unet | attention | attention_unet
std::string_view to_string(Variant variant);

struct SegmentationModelSpec {
  Variant variant = Variant::kUnet;
  std::vector<int> filters{64, 128, 256, 512, 1024};  // one entry per depth level
  int in_channels = 3;
  int num_classes = 4;

  int depth() const { return static_cast<int>(filters.size()); }
  /// Input height and width must be multiples of this.
  int stride() const { return 1 << (depth() - 1); }
  void validate() const;
};

struct SegTrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-5;
  int batch_size = 4;
  int max_epochs = 5000;
  int patience = 50;
  double class_weight_c = 1.02;
  std::uint64_t seed = 0;
  long max_steps = 0;   // 0 = no step cap
  long eval_every = 0;  // evaluate every N steps; 0 = once per epoch

  void validate() const;
};

inline const std::vector<std::string>& default_class_names() {
  static const std::vector<std::string> names{"background", "low_radiation", "medium_radiation",
                                              "high_radiation"};
  return names;
}

/// ENet weighting w_k = 1 / ln(c + p_k). Frequencies are normalised first,
/// so raw pixel counts work too. A zero entry throws kZeroFrequencyClass.
std::vector<double> compute_class_weights(std::span<const double> frequencies, double c = 1.02);

/// Per-class pixel counts over class-id masks.
std::vector<double> class_pixel_counts(std::span<const cv::Mat> masks, int num_classes);

/// Stops once `patience` consecutive evaluations fail to improve the best
/// loss, or when max_epochs is reached.
class EarlyStopping {
 public:
  EarlyStopping(int patience, int max_epochs);

  /// Records one evaluation; returns true when training should stop.
  bool update(double loss);

  bool improved() const { return improved_; }
  double best() const { return best_; }
  int evaluations() const { return evaluations_; }

 private:
  int patience_;
  int max_epochs_;
  int evaluations_ = 0;
  int stale_ = 0;
  bool improved_ = false;
  double best_;
};

/// Mean intersection-over-union across classes present in either mask.
double mean_iou(const cv::Mat& predicted, const cv::Mat& truth, int num_classes);

/// Single-channel class-id PNG plus `<stem>.json` naming the classes.
void write_mask(const std::filesystem::path& path, const cv::Mat& mask,
                const std::vector<std::string>& class_names = default_class_names());
cv::Mat read_mask(const std::filesystem::path& path);

struct SegEpochRecord {
  int epoch = 0;
  long step = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_miou = 0.0;
};

struct SegTrainResult {
  std::filesystem::path checkpoint;
  std::vector<SegEpochRecord> history;
  std::vector<double> class_weights;
  bool early_stopped = false;
};

class Segmenter {
 public:
  explicit Segmenter(const SegmentationModelSpec& spec);
  ~Segmenter();
  Segmenter(Segmenter&&) noexcept;
  Segmenter& operator=(Segmenter&&) noexcept;

  /// Throws kCheckpointNotFound when the file is missing.
  static Segmenter load(const std::filesystem::path& checkpoint);
  void save(const std::filesystem::path& checkpoint) const;

  const SegmentationModelSpec& spec() const;
  std::int64_t parameter_count() const;

  /// Class-id mask (CV_8U) with the input's size. Grey input is replicated to
  /// three channels. Height and width must be multiples of spec().stride().
  cv::Mat segment(const cv::Mat& ir) const;

  /// Attention coefficients per skip connection, finest first, each a CV_32F
  /// map at that level's resolution. Empty for the plain UNet.
  std::vector<cv::Mat> attention_maps(const cv::Mat& ir) const;

  struct Impl;
  Impl& impl() const { return *impl_; }

 private:
  Segmenter();
  std::unique_ptr<Impl> impl_;
};

/// Trains on manifest entries with `ir` and `mask` set. The best checkpoint by
/// validation loss is written to `checkpoint`, the history to `history_csv`
/// (skipped when empty).
SegTrainResult train_segmenter(const ingest::DatasetManifest& train,
                               const ingest::DatasetManifest& val,
                               const SegmentationModelSpec& spec, const SegTrainConfig& config,
                               const std::filesystem::path& checkpoint,
                               const std::filesystem::path& history_csv = {});

}  // namespace flarecast::segmentation

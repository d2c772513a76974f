#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "flarecast/brightness.hpp"
#include "flarecast/ingest.hpp"

namespace flarecast::translation {

/// U-Net generator. Encoder stage i halves the resolution with a 4x4 stride-2
/// convolution; decoder stage j doubles it again, so both lists have the same
/// length and the last decoder entry is the output channel count. Decoder
/// stage j (j < depth-1) is concatenated with encoder stage depth-2-j when
/// skips[j] is set.
struct GeneratorSpec {
  std::vector<int> encoder_filters{64, 128, 256, 512, 512, 512, 512, 512};
  std::vector<int> decoder_filters{512, 512, 512, 512, 256, 128, 64, 3};
  std::vector<bool> skips;  // depth-1 entries; empty means all true
  int in_channels = 3;
  int dropout_stages = 3;  // leading decoder stages with dropout 0.5
  int width = 1024;
  int height = 512;

  int depth() const { return static_cast<int>(encoder_filters.size()); }
  int out_channels() const { return decoder_filters.empty() ? 0 : decoder_filters.back(); }
  bool skip(int stage) const { return skips.empty() || skips.at(stage); }
  void validate() const;
};

/// PatchGAN discriminator over the channel-concatenated (visible, candidate)
/// pair. Each stage is a 4x4 convolution; the last `stride_one_stages` use
/// stride 1, the others stride 2. A final 4x4 stride-1 convolution emits one
/// score per patch.
struct DiscriminatorSpec {
  std::vector<int> filters{64, 128, 256, 512};
  int stride_one_stages = 1;
  int in_channels = 6;

  void validate() const;
  /// Side of the input patch that influences one output score.
  int receptive_field() const;
  /// Score grid size for an input of the given size.
  cv::Size output_grid(cv::Size input) const;
  /// Grid size after the strided stages, before the final convolution.
  cv::Size feature_grid(cv::Size input) const;
};

struct TranslationTrainConfig {
  int epochs = 100;
  int batch_size = 4;
  double lr_generator = 1e-5;
  double lr_discriminator = 1e-4;
  double l1_weight = 100.0;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  long max_steps = 0;   // 0 = no step cap
  long eval_every = 0;  // validate every N steps; 0 = once per epoch

  void validate() const;
};

struct TranslationRecord {
  int epoch = 0;
  long step = 0;
  double gen_loss = 0.0;
  double disc_loss = 0.0;
  double val_l1 = 0.0;
};

struct TranslationTrainResult {
  std::filesystem::path checkpoint;
  std::vector<TranslationRecord> history;  // first entry is the step-1 validation
  double best_val_l1 = 0.0;
  double corpus_mean_ir_rms = 0.0;
};

class Translator {
 public:
  Translator(const GeneratorSpec& generator, const DiscriminatorSpec& discriminator);
  ~Translator();
  Translator(Translator&&) noexcept;
  Translator& operator=(Translator&&) noexcept;

  /// Throws kCheckpointNotFound when the file is missing.
  static Translator load(const std::filesystem::path& checkpoint);
  void save(const std::filesystem::path& checkpoint) const;

  const GeneratorSpec& generator_spec() const;
  const DiscriminatorSpec& discriminator_spec() const;
  std::int64_t generator_parameters() const;
  std::int64_t discriminator_parameters() const;

  /// Mean RMS brightness of the training IR frames; the corpus_mean reference.
  double corpus_mean_ir_rms() const;
  /// SHA-256 of the training manifest the weights were fitted to.
  const std::string& manifest_sha256() const;

  /// 8-bit BGR artificial IR frame with the canvas size of the generator.
  /// Throws kDimensionMismatch for any other input size.
  cv::Mat translate(const cv::Mat& visible) const;

  /// Patch score grid (CV_32F) for a visible/candidate pair.
  cv::Mat discriminate(const cv::Mat& visible, const cv::Mat& candidate) const;

  struct Impl;
  Impl& impl() const { return *impl_; }

 private:
  Translator();
  std::unique_ptr<Impl> impl_;
};

/// Trains on manifest entries with `visible` and `ir` set; all frames must
/// share the generator canvas size. Keeps the checkpoint with the lowest
/// validation L1 and writes `epoch,step,gen_loss,disc_loss,val_l1` rows to
/// `history_csv` unless it is empty. Throws kNonFiniteLoss on divergence.
TranslationTrainResult train_translator(const ingest::DatasetManifest& train,
                                        const ingest::DatasetManifest& val,
                                        const GeneratorSpec& generator,
                                        const DiscriminatorSpec& discriminator,
                                        const TranslationTrainConfig& config,
                                        const std::filesystem::path& checkpoint,
                                        const std::filesystem::path& history_csv = {});

}  // namespace flarecast::translation

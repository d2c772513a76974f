#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "flarecast/error.hpp"
#include "flarecast/image.hpp"
#include "flarecast/segmentation.hpp"
#include "flarecast/translation.hpp"

namespace fs = std::filesystem;

namespace flarecast {

namespace {

void require_positive(const std::vector<int>& values, const std::string& what) {
  require(!values.empty(), what + " must not be empty");
  for (int v : values) require(v > 0, what + " must be positive");
}

}  // namespace

namespace translation {

void GeneratorSpec::validate() const {
  require_positive(encoder_filters, "generator encoder filters");
  require_positive(decoder_filters, "generator decoder filters");
  require(decoder_filters.size() == encoder_filters.size(),
          "generator encoder depth " + std::to_string(encoder_filters.size()) +
              " does not match decoder depth " + std::to_string(decoder_filters.size()));
  require(skips.empty() || skips.size() + 1 == encoder_filters.size(),
          "generator skips need one flag per inner decoder stage");
  require(in_channels > 0, "generator input channels must be positive");
  require(dropout_stages >= 0 && dropout_stages < depth(),
          "generator dropout stages out of range");
  const int stride = 1 << depth();
  require(width > 0 && height > 0 && width % stride == 0 && height % stride == 0,
          "generator canvas " + std::to_string(width) + "x" + std::to_string(height) +
              " must be a multiple of " + std::to_string(stride));
}

void DiscriminatorSpec::validate() const {
  require_positive(filters, "discriminator filters");
  require(stride_one_stages >= 0 && stride_one_stages <= static_cast<int>(filters.size()),
          "discriminator stride-one stage count out of range");
  require(in_channels > 0, "discriminator input channels must be positive");
}

namespace {

std::vector<int> discriminator_strides(const DiscriminatorSpec& spec) {
  const int n = static_cast<int>(spec.filters.size());
  std::vector<int> strides;
  for (int i = 0; i < n; ++i) strides.push_back(i >= n - spec.stride_one_stages ? 1 : 2);
  return strides;
}

int conv_out(int in, int stride) { return (in + 2 - 4) / stride + 1; }

}  // namespace

int DiscriminatorSpec::receptive_field() const {
  validate();
  auto strides = discriminator_strides(*this);
  strides.push_back(1);
  int r = 1;
  for (auto it = strides.rbegin(); it != strides.rend(); ++it) r = r * *it + (4 - *it);
  return r;
}

cv::Size DiscriminatorSpec::feature_grid(cv::Size input) const {
  validate();
  cv::Size s = input;
  for (int stride : discriminator_strides(*this)) {
    s = {conv_out(s.width, stride), conv_out(s.height, stride)};
    require(s.width > 0 && s.height > 0, "discriminator input too small");
  }
  return s;
}

cv::Size DiscriminatorSpec::output_grid(cv::Size input) const {
  const cv::Size f = feature_grid(input);
  const cv::Size s{conv_out(f.width, 1), conv_out(f.height, 1)};
  require(s.width > 0 && s.height > 0, "discriminator input too small");
  return s;
}

void TranslationTrainConfig::validate() const {
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch size must be >= 1");
  require(lr_generator > 0.0 && lr_discriminator > 0.0, "learning rates must be positive");
  require(l1_weight >= 0.0, "L1 weight must be non-negative");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam betas must be in [0, 1)");
  require(max_steps >= 0 && eval_every >= 0, "step counts must be non-negative");
}

}  // namespace translation

namespace segmentation {

Variant parse_variant(std::string_view text) {
  if (text == "unet") return Variant::kUnet;
  if (text == "attention" || text == "attention_unet") return Variant::kAttentionUnet;
  fail(ErrorKind::kValidation,
       "unknown segmentation variant '" + std::string(text) + "' (expected unet|attention)");
}

std::string_view to_string(Variant variant) {
  return variant == Variant::kUnet ? "unet" : "attention_unet";
}

void SegmentationModelSpec::validate() const {
  require_positive(filters, "segmentation filters");
  require(in_channels > 0, "segmentation input channels must be positive");
  require(num_classes >= 2, "segmentation needs at least 2 classes");
}

void SegTrainConfig::validate() const {
  require(lr > 0.0, "learning rate must be positive");
  require(weight_decay > 0.0, "weight decay must be positive");
  require(batch_size >= 1, "batch size must be >= 1");
  require(max_epochs >= 1, "max epochs must be >= 1");
  require(patience >= 1, "early stopping patience must be >= 1");
  require(max_steps >= 0 && eval_every >= 0, "step counts must be non-negative");
}

std::vector<double> compute_class_weights(std::span<const double> frequencies, double c) {
  require(!frequencies.empty(), "class weights: no classes");
  double total = 0.0;
  for (std::size_t k = 0; k < frequencies.size(); ++k) {
    require(std::isfinite(frequencies[k]) && frequencies[k] >= 0.0,
            "class weights: frequencies must be finite and non-negative");
    if (frequencies[k] == 0.0) {
      fail(ErrorKind::kZeroFrequencyClass,
           "class " + std::to_string(k) +
               " never occurs; drop it from the class list or smooth its frequency");
    }
    total += frequencies[k];
  }
  std::vector<double> weights;
  for (double f : frequencies) {
    const double arg = c + f / total;
    require(arg > 1.0, "class weights: c + p must exceed 1");
    weights.push_back(1.0 / std::log(arg));
  }
  return weights;
}

std::vector<double> class_pixel_counts(std::span<const cv::Mat> masks, int num_classes) {
  std::vector<double> counts(num_classes, 0.0);
  for (const auto& m : masks) {
    require(m.type() == CV_8UC1, "class counts: masks must be 8-bit single channel");
    for (int y = 0; y < m.rows; ++y) {
      const auto* row = m.ptr<std::uint8_t>(y);
      for (int x = 0; x < m.cols; ++x) {
        require(row[x] < num_classes, "mask class id " + std::to_string(row[x]) + " out of range");
        counts[row[x]] += 1.0;
      }
    }
  }
  return counts;
}

EarlyStopping::EarlyStopping(int patience, int max_epochs)
    : patience_(patience), max_epochs_(max_epochs), best_(std::numeric_limits<double>::infinity()) {
  require(patience >= 1, "early stopping patience must be >= 1");
  require(max_epochs >= 1, "max epochs must be >= 1");
}

bool EarlyStopping::update(double loss) {
  ++evaluations_;
  improved_ = loss < best_;
  if (improved_) {
    best_ = loss;
    stale_ = 0;
  } else {
    ++stale_;
  }
  return stale_ >= patience_ || evaluations_ >= max_epochs_;
}

double mean_iou(const cv::Mat& predicted, const cv::Mat& truth, int num_classes) {
  require(predicted.size() == truth.size() && predicted.type() == CV_8UC1 &&
              truth.type() == CV_8UC1,
          "mean_iou: masks must be same-size 8-bit single channel");
  double sum = 0.0;
  int present = 0;
  for (int k = 0; k < num_classes; ++k) {
    const cv::Mat p = predicted == k;
    const cv::Mat t = truth == k;
    const int uni = cv::countNonZero(p | t);
    if (uni == 0) continue;
    sum += static_cast<double>(cv::countNonZero(p & t)) / uni;
    ++present;
  }
  require(present > 0, "mean_iou: empty masks");
  return sum / present;
}

void write_mask(const fs::path& path, const cv::Mat& mask,
                const std::vector<std::string>& class_names) {
  require(mask.type() == CV_8UC1, "write_mask: expected an 8-bit class-id mask");
  write_image(path, mask);
  nlohmann::json sidecar = {{"classes", class_names},
                            {"num_classes", class_names.size()},
                            {"encoding", "pixel value = class id"}};
  fs::path json_path = path;
  json_path.replace_extension(".json");
  std::ofstream(json_path) << sidecar.dump(2) << '\n';
}

cv::Mat read_mask(const fs::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) fail(ErrorKind::kIo, "cannot read mask " + path.string());
  require(m.type() == CV_8UC1, "mask " + path.string() + " is not an 8-bit single-channel PNG");
  return m;
}

}  // namespace segmentation

}  // namespace flarecast

#pragma once

// Torch-level building blocks behind Translator and Segmenter. Including this
// header pulls in libtorch.

#include <utility>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

#include "flarecast/segmentation.hpp"
#include "flarecast/translation.hpp"

namespace flarecast::nn {

// ---------------------------------------------------------------------------
// Pix2Pix

class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const translation::GeneratorSpec& spec);
  /// Input in [-1, 1], N x C x H x W; output in (-1, 1).
  torch::Tensor forward(torch::Tensor x);

 private:
  translation::GeneratorSpec spec_;
  std::vector<torch::nn::Sequential> encoder_;
  std::vector<torch::nn::Sequential> decoder_;
};
TORCH_MODULE(Generator);

class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(const translation::DiscriminatorSpec& spec);
  /// Raw patch logits, N x 1 x h x w.
  torch::Tensor forward(torch::Tensor visible, torch::Tensor candidate);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(Discriminator);

struct GanLosses {
  torch::Tensor generator;
  torch::Tensor discriminator;
};

/// Binary cross-entropy on logits against a constant label.
torch::Tensor adversarial_loss(const torch::Tensor& logits, bool real);

/// generator = adv(fake -> real) + lambda * mean|generated - target|;
/// discriminator = 0.5 * [adv(real -> real) + adv(fake -> fake)].
GanLosses gan_loss(const torch::Tensor& scores_real, const torch::Tensor& scores_fake,
                   const torch::Tensor& generated, const torch::Tensor& target, double lambda);

// ---------------------------------------------------------------------------
// UNet / Attention UNet

/// Additive gate: alpha = sigmoid(BN(psi(relu(Wg g + Wx x)))), output x * alpha.
class AttentionGateImpl : public torch::nn::Module {
 public:
  AttentionGateImpl(int channels, int inter_channels);
  std::pair<torch::Tensor, torch::Tensor> forward(torch::Tensor gate, torch::Tensor skip);

 private:
  torch::nn::Conv2d w_g_{nullptr};
  torch::nn::Conv2d w_x_{nullptr};
  torch::nn::Conv2d psi_{nullptr};
  torch::nn::BatchNorm2d psi_norm_{nullptr};
};
TORCH_MODULE(AttentionGate);

class UNetImpl : public torch::nn::Module {
 public:
  explicit UNetImpl(const segmentation::SegmentationModelSpec& spec);
  /// Class scores, N x num_classes x H x W.
  torch::Tensor forward(torch::Tensor x);
  /// Scores plus the attention coefficients of every gate, finest level first.
  std::pair<torch::Tensor, std::vector<torch::Tensor>> forward_with_attention(torch::Tensor x);

 private:
  segmentation::SegmentationModelSpec spec_;
  std::vector<torch::nn::Sequential> down_;
  std::vector<torch::nn::ConvTranspose2d> up_;
  std::vector<AttentionGate> gates_;
  std::vector<torch::nn::Sequential> merge_;
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(UNet);

/// Mean over pixels of w[y] * -log softmax(scores)[y]. Scores N x K x H x W,
/// target N x H x W (int64), weights K.
torch::Tensor weighted_cross_entropy(const torch::Tensor& scores, const torch::Tensor& target,
                                     const torch::Tensor& weights);

// ---------------------------------------------------------------------------
// Conversion

/// 8-bit image (1 or 3 channels) to 1 x C x H x W float in [lo, hi].
torch::Tensor image_to_tensor(const cv::Mat& image, float lo, float hi);
/// 1 x C x H x W float in [lo, hi] to an 8-bit image, rounded and clamped.
cv::Mat tensor_to_image(const torch::Tensor& tensor, float lo, float hi);
/// Class-id mask to H x W int64.
torch::Tensor mask_to_tensor(const cv::Mat& mask);

std::int64_t parameter_count(const torch::nn::Module& module);

/// Device from FLARECAST_DEVICE (cpu by default, "cuda" when available).
torch::Device default_device();

}  // namespace flarecast::nn

#include "flarecast/nn/models.hpp"

#include <cstdlib>
#include <string>

#include "flarecast/error.hpp"
#include "flarecast/log.hpp"

namespace flarecast::nn {

namespace F = torch::nn::functional;
using torch::nn::BatchNorm2d;
using torch::nn::Conv2d;
using torch::nn::Conv2dOptions;
using torch::nn::ConvTranspose2d;
using torch::nn::ConvTranspose2dOptions;
using torch::nn::Sequential;

namespace {

torch::nn::LeakyReLU leaky() {
  return torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2));
}

Sequential double_conv(int in, int out) {
  return Sequential(Conv2d(Conv2dOptions(in, out, 3).padding(1).bias(false)), BatchNorm2d(out),
                    torch::nn::ReLU(),
                    Conv2d(Conv2dOptions(out, out, 3).padding(1).bias(false)), BatchNorm2d(out),
                    torch::nn::ReLU());
}

}  // namespace

// ---------------------------------------------------------------------------

GeneratorImpl::GeneratorImpl(const translation::GeneratorSpec& spec) : spec_(spec) {
  spec_.validate();
  const int n = spec_.depth();
  const auto& enc = spec_.encoder_filters;
  const auto& dec = spec_.decoder_filters;

  int in = spec_.in_channels;
  for (int i = 0; i < n; ++i) {
    const bool norm = i != 0 && i != n - 1;
    Sequential stage(Conv2d(Conv2dOptions(in, enc[i], 4).stride(2).padding(1).bias(!norm)));
    if (norm) stage->push_back(BatchNorm2d(enc[i]));
    stage->push_back(leaky());
    encoder_.push_back(register_module("enc" + std::to_string(i), stage));
    in = enc[i];
  }
  for (int j = 0; j < n; ++j) {
    if (j > 0) in = dec[j - 1] + (spec_.skip(j - 1) ? enc[n - 1 - j] : 0);
    const bool last = j == n - 1;
    Sequential stage(ConvTranspose2d(
        ConvTranspose2dOptions(in, dec[j], 4).stride(2).padding(1).bias(last)));
    if (last) {
      stage->push_back(torch::nn::Tanh());
    } else {
      stage->push_back(BatchNorm2d(dec[j]));
      if (j < spec_.dropout_stages) stage->push_back(torch::nn::Dropout(0.5));
      stage->push_back(torch::nn::ReLU());
    }
    decoder_.push_back(register_module("dec" + std::to_string(j), stage));
  }
}

torch::Tensor GeneratorImpl::forward(torch::Tensor x) {
  const int n = spec_.depth();
  std::vector<torch::Tensor> skips;
  for (auto& stage : encoder_) {
    x = stage->forward(x);
    skips.push_back(x);
  }
  for (int j = 0; j < n; ++j) {
    x = decoder_[j]->forward(x);
    if (j < n - 1 && spec_.skip(j)) x = torch::cat({x, skips[n - 2 - j]}, 1);
  }
  return x;
}

DiscriminatorImpl::DiscriminatorImpl(const translation::DiscriminatorSpec& spec) {
  spec.validate();
  body_ = Sequential();
  const int n = static_cast<int>(spec.filters.size());
  int in = spec.in_channels;
  for (int i = 0; i < n; ++i) {
    const int stride = i >= n - spec.stride_one_stages ? 1 : 2;
    const bool norm = i != 0;
    body_->push_back(
        Conv2d(Conv2dOptions(in, spec.filters[i], 4).stride(stride).padding(1).bias(!norm)));
    if (norm) body_->push_back(BatchNorm2d(spec.filters[i]));
    body_->push_back(leaky());
    in = spec.filters[i];
  }
  body_->push_back(Conv2d(Conv2dOptions(in, 1, 4).stride(1).padding(1)));
  register_module("body", body_);
}

torch::Tensor DiscriminatorImpl::forward(torch::Tensor visible, torch::Tensor candidate) {
  return body_->forward(torch::cat({visible, candidate}, 1));
}

torch::Tensor adversarial_loss(const torch::Tensor& logits, bool real) {
  const auto label = real ? torch::ones_like(logits) : torch::zeros_like(logits);
  return F::binary_cross_entropy_with_logits(logits, label);
}

GanLosses gan_loss(const torch::Tensor& scores_real, const torch::Tensor& scores_fake,
                   const torch::Tensor& generated, const torch::Tensor& target, double lambda) {
  require(generated.sizes() == target.sizes(), "gan_loss: generated and target shapes differ");
  require(scores_real.sizes() == scores_fake.sizes(), "gan_loss: score grid shapes differ");
  require(lambda >= 0.0, "gan_loss: lambda must be non-negative");
  GanLosses out;
  out.generator =
      adversarial_loss(scores_fake, true) + lambda * (generated - target).abs().mean();
  out.discriminator =
      0.5 * (adversarial_loss(scores_real, true) + adversarial_loss(scores_fake, false));
  return out;
}

// ---------------------------------------------------------------------------

AttentionGateImpl::AttentionGateImpl(int channels, int inter_channels) {
  w_g_ = register_module("w_g", Conv2d(Conv2dOptions(channels, inter_channels, 1)));
  w_x_ = register_module("w_x", Conv2d(Conv2dOptions(channels, inter_channels, 1)));
  psi_ = register_module("psi", Conv2d(Conv2dOptions(inter_channels, 1, 1)));
  psi_norm_ = register_module("psi_norm", BatchNorm2d(1));
}

std::pair<torch::Tensor, torch::Tensor> AttentionGateImpl::forward(torch::Tensor gate,
                                                                   torch::Tensor skip) {
  auto a = torch::relu(w_g_->forward(gate) + w_x_->forward(skip));
  auto alpha = torch::sigmoid(psi_norm_->forward(psi_->forward(a)));
  return {skip * alpha, alpha};
}

UNetImpl::UNetImpl(const segmentation::SegmentationModelSpec& spec) : spec_(spec) {
  spec_.validate();
  const int n = spec_.depth();
  const auto& f = spec_.filters;
  int in = spec_.in_channels;
  for (int i = 0; i < n; ++i) {
    down_.push_back(register_module("down" + std::to_string(i), double_conv(in, f[i])));
    in = f[i];
  }
  up_.resize(n - 1, nullptr);
  merge_.resize(n - 1, nullptr);
  if (spec_.variant == segmentation::Variant::kAttentionUnet) gates_.resize(n - 1, nullptr);
  for (int i = n - 2; i >= 0; --i) {
    const std::string id = std::to_string(i);
    up_[i] = register_module(
        "up" + id, ConvTranspose2d(ConvTranspose2dOptions(f[i + 1], f[i], 2).stride(2)));
    if (!gates_.empty()) {
      gates_[i] = register_module("gate" + id, AttentionGate(f[i], std::max(f[i] / 2, 1)));
    }
    merge_[i] = register_module("merge" + id, double_conv(2 * f[i], f[i]));
  }
  head_ = register_module("head", Conv2d(Conv2dOptions(f[0], spec_.num_classes, 1)));
}

std::pair<torch::Tensor, std::vector<torch::Tensor>> UNetImpl::forward_with_attention(
    torch::Tensor x) {
  const int n = spec_.depth();
  std::vector<torch::Tensor> skips;
  for (int i = 0; i < n; ++i) {
    if (i > 0) x = F::max_pool2d(x, F::MaxPool2dFuncOptions(2));
    x = down_[i]->forward(x);
    skips.push_back(x);
  }
  std::vector<torch::Tensor> maps(gates_.size());
  for (int i = n - 2; i >= 0; --i) {
    x = up_[i]->forward(x);
    torch::Tensor skip = skips[i];
    if (!gates_.empty()) {
      auto [gated, alpha] = gates_[i]->forward(x, skip);
      skip = gated;
      maps[i] = alpha;
    }
    x = merge_[i]->forward(torch::cat({x, skip}, 1));
  }
  return {head_->forward(x), maps};
}

torch::Tensor UNetImpl::forward(torch::Tensor x) { return forward_with_attention(x).first; }

torch::Tensor weighted_cross_entropy(const torch::Tensor& scores, const torch::Tensor& target,
                                     const torch::Tensor& weights) {
  require(scores.dim() == 4 && target.dim() == 3, "weighted_cross_entropy: expected NxKxHxW scores and NxHxW target");
  require(scores.size(0) == target.size(0) && scores.size(2) == target.size(1) &&
              scores.size(3) == target.size(2),
          "weighted_cross_entropy: scores and mask shapes differ");
  require(weights.dim() == 1 && weights.size(0) == scores.size(1),
          "weighted_cross_entropy: one weight per class required");
  const auto logp = torch::log_softmax(scores, 1);
  const auto nll = -logp.gather(1, target.unsqueeze(1)).squeeze(1);
  const auto w = weights.to(scores.dtype()).index_select(0, target.flatten()).view_as(nll);
  return (w * nll).mean();
}

// ---------------------------------------------------------------------------

torch::Tensor image_to_tensor(const cv::Mat& image, float lo, float hi) {
  require(image.depth() == CV_8U && (image.channels() == 1 || image.channels() == 3),
          "expected an 8-bit image with 1 or 3 channels");
  cv::Mat values;
  image.convertTo(values, CV_32F, (hi - lo) / 255.0, lo);
  auto t = torch::from_blob(values.data, {values.rows, values.cols, values.channels()},
                            torch::kFloat32);
  return t.permute({2, 0, 1}).unsqueeze(0).clone();
}

cv::Mat tensor_to_image(const torch::Tensor& tensor, float lo, float hi) {
  require(tensor.dim() == 4 && tensor.size(0) == 1, "tensor_to_image: expected 1xCxHxW");
  auto t = tensor.detach().to(torch::kCPU, torch::kFloat32);
  t = ((t - lo) * (255.0f / (hi - lo))).round().clamp(0, 255).to(torch::kUInt8);
  t = t.squeeze(0).permute({1, 2, 0}).contiguous();
  const int channels = static_cast<int>(t.size(2));
  cv::Mat out(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), CV_8UC(channels),
              t.data_ptr<std::uint8_t>());
  return out.clone();
}

torch::Tensor mask_to_tensor(const cv::Mat& mask) {
  require(mask.type() == CV_8UC1, "mask_to_tensor: expected an 8-bit single-channel mask");
  cv::Mat m = mask.isContinuous() ? mask : mask.clone();
  return torch::from_blob(m.data, {m.rows, m.cols}, torch::kUInt8).to(torch::kInt64);
}

std::int64_t parameter_count(const torch::nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

torch::Device default_device() {
  const char* env = std::getenv("FLARECAST_DEVICE");
  const std::string want = env ? env : "cpu";
  if (want == "cpu" || want.empty()) return torch::kCPU;
  if (want.rfind("cuda", 0) == 0) {
    if (torch::cuda::is_available()) return torch::Device(want);
    log::warn("FLARECAST_DEVICE=" + want + " requested but CUDA is unavailable, using cpu");
    return torch::kCPU;
  }
  fail(ErrorKind::kValidation, "unknown FLARECAST_DEVICE '" + want + "' (expected cpu|cuda)");
}

}  // namespace flarecast::nn

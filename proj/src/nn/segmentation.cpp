#include "flarecast/segmentation.hpp"

#include <fstream>
#include <limits>
#include <numeric>

#include "common.hpp"
#include "flarecast/csv.hpp"
#include "flarecast/error.hpp"
#include "flarecast/image.hpp"
#include "flarecast/log.hpp"
#include "flarecast/nn/models.hpp"
#include "flarecast/random.hpp"

namespace fs = std::filesystem;

namespace flarecast::segmentation {

using nn::detail::json;

struct Segmenter::Impl {
  SegmentationModelSpec spec;
  nn::UNet net{nullptr};
  torch::Device device = torch::kCPU;
  std::vector<double> class_weights;
  std::vector<std::string> class_names;
  json train_config = json::object();

  void build() {
    net = nn::UNet(spec);
    device = nn::default_device();
    net->to(device);
  }

  torch::Tensor input(const cv::Mat& image) const {
    const int stride = spec.stride();
    if (image.cols % stride != 0 || image.rows % stride != 0) {
      fail(ErrorKind::kDimensionMismatch,
           "image " + std::to_string(image.cols) + "x" + std::to_string(image.rows) +
               " is not a multiple of the segmenter stride " + std::to_string(stride));
    }
    const cv::Mat in = spec.in_channels == 3 ? to_three_channel(image) : image;
    require(in.channels() == spec.in_channels, "segmenter input channel count mismatch");
    return nn::image_to_tensor(in, 0.0f, 1.0f).to(device);
  }
};

Segmenter::Segmenter() : impl_(std::make_unique<Impl>()) {}

Segmenter::Segmenter(const SegmentationModelSpec& spec) : Segmenter() {
  impl_->spec = spec;
  impl_->build();
  const auto& names = default_class_names();
  if (spec.num_classes == static_cast<int>(names.size())) {
    impl_->class_names = names;
  } else {
    impl_->class_names.push_back("background");
    for (int k = 1; k < spec.num_classes; ++k) impl_->class_names.push_back("zone" + std::to_string(k));
  }
}

Segmenter::~Segmenter() = default;
Segmenter::Segmenter(Segmenter&&) noexcept = default;
Segmenter& Segmenter::operator=(Segmenter&&) noexcept = default;

Segmenter Segmenter::load(const fs::path& checkpoint) {
  const json meta = nn::detail::read_metadata(checkpoint, "segmentation");
  Segmenter s;
  s.impl_->spec = nn::detail::segmenter_from_json(meta.at("spec"));
  s.impl_->build();
  s.impl_->class_weights = meta.at("class_weights").get<std::vector<double>>();
  s.impl_->class_names = meta.at("class_names").get<std::vector<std::string>>();
  s.impl_->train_config = meta.value("train_config", json::object());
  nn::detail::load_modules(checkpoint, {{"net", s.impl_->net.ptr().get()}});
  s.impl_->net->eval();
  return s;
}

void Segmenter::save(const fs::path& checkpoint) const {
  const json meta = {{"kind", "segmentation"},
                     {"spec", nn::detail::to_json(impl_->spec)},
                     {"class_weights", impl_->class_weights},
                     {"class_names", impl_->class_names},
                     {"train_config", impl_->train_config}};
  nn::detail::save_archive(checkpoint, meta, {{"net", impl_->net.ptr().get()}});
}

const SegmentationModelSpec& Segmenter::spec() const { return impl_->spec; }

std::int64_t Segmenter::parameter_count() const { return nn::parameter_count(*impl_->net); }

cv::Mat Segmenter::segment(const cv::Mat& ir) const {
  torch::NoGradGuard guard;
  impl_->net->eval();
  const auto scores = impl_->net->forward(impl_->input(ir));
  auto labels = scores.argmax(1).squeeze(0).to(torch::kCPU, torch::kUInt8).contiguous();
  cv::Mat mask(ir.rows, ir.cols, CV_8UC1, labels.data_ptr<std::uint8_t>());
  return mask.clone();
}

std::vector<cv::Mat> Segmenter::attention_maps(const cv::Mat& ir) const {
  torch::NoGradGuard guard;
  impl_->net->eval();
  const auto maps = impl_->net->forward_with_attention(impl_->input(ir)).second;
  std::vector<cv::Mat> out;
  for (const auto& m : maps) {
    auto t = m.squeeze(0).squeeze(0).to(torch::kCPU, torch::kFloat32).contiguous();
    out.push_back(cv::Mat(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), CV_32F,
                          t.data_ptr<float>())
                      .clone());
  }
  return out;
}

namespace {

struct MaskTensors {
  std::vector<torch::Tensor> images;
  std::vector<torch::Tensor> masks;
  std::vector<cv::Mat> raw_masks;
};

MaskTensors load_masks(const ingest::DatasetManifest& manifest, const Segmenter& model,
                       const char* role) {
  require(!manifest.entries.empty(), std::string(role) + " manifest is empty");
  auto& impl = model.impl();
  MaskTensors out;
  for (const auto& e : manifest.entries) {
    require(!e.ir.empty() && !e.mask.empty(),
            std::string(role) + " entry " + e.id + " needs an IR frame and a mask");
    const cv::Mat ir = read_image(e.ir, 3);
    const cv::Mat mask = read_mask(e.mask);
    if (ir.size() != mask.size()) {
      fail(ErrorKind::kDimensionMismatch, "entry " + e.id + ": IR frame and mask sizes differ");
    }
    out.images.push_back(impl.input(ir));
    out.masks.push_back(nn::mask_to_tensor(mask).unsqueeze(0).to(impl.device));
    out.raw_masks.push_back(mask);
  }
  return out;
}

struct Evaluation {
  double loss = 0.0;
  double miou = 0.0;
};

Evaluation evaluate(nn::UNet& net, const MaskTensors& val, const torch::Tensor& weights,
                    int num_classes) {
  torch::NoGradGuard guard;
  net->eval();
  Evaluation ev;
  for (std::size_t i = 0; i < val.images.size(); ++i) {
    const auto scores = net->forward(val.images[i]);
    ev.loss += nn::weighted_cross_entropy(scores, val.masks[i], weights).item<double>();
    auto labels = scores.argmax(1).squeeze(0).to(torch::kCPU, torch::kUInt8).contiguous();
    const cv::Mat pred(val.raw_masks[i].rows, val.raw_masks[i].cols, CV_8UC1,
                       labels.data_ptr<std::uint8_t>());
    ev.miou += mean_iou(pred, val.raw_masks[i], num_classes);
  }
  ev.loss /= static_cast<double>(val.images.size());
  ev.miou /= static_cast<double>(val.images.size());
  net->train();
  return ev;
}

void write_history(const fs::path& path, const std::vector<SegEpochRecord>& history) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << "epoch,step,train_loss,val_loss,val_miou\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.step << ',' << csv::format(r.train_loss) << ','
        << csv::format(r.val_loss) << ',' << csv::format(r.val_miou) << '\n';
  }
}

}  // namespace

SegTrainResult train_segmenter(const ingest::DatasetManifest& train,
                               const ingest::DatasetManifest& val,
                               const SegmentationModelSpec& spec, const SegTrainConfig& config,
                               const fs::path& checkpoint, const fs::path& history_csv) {
  config.validate();
  spec.validate();
  require(!checkpoint.empty(), "train_segmenter: checkpoint path required");

  torch::manual_seed(config.seed);
  Segmenter model(spec);
  auto& impl = model.impl();
  impl.train_config = nn::detail::to_json(config);

  const MaskTensors data = load_masks(train, model, "training");
  const MaskTensors val_data = load_masks(val, model, "validation");
  const auto counts = class_pixel_counts(data.raw_masks, spec.num_classes);
  impl.class_weights = compute_class_weights(counts, config.class_weight_c);
  const auto weights =
      torch::tensor(impl.class_weights, torch::kFloat64).to(torch::kFloat32).to(impl.device);

  auto& net = impl.net;
  net->train();
  torch::optim::Adam opt(net->parameters(),
                         torch::optim::AdamOptions(config.lr).weight_decay(config.weight_decay));

  const std::size_t n = data.images.size();
  const long steps_per_epoch = static_cast<long>((n + config.batch_size - 1) / config.batch_size);
  const long eval_every = config.eval_every > 0 ? config.eval_every : steps_per_epoch;

  SegTrainResult result;
  result.checkpoint = checkpoint;
  result.class_weights = impl.class_weights;
  EarlyStopping stopper(config.patience, config.eval_every == 0 ? config.max_epochs
                                                               : std::numeric_limits<int>::max());

  Rng rng(mix_seed(config.seed, 0x7365676dULL));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  long step = 0;
  double loss_sum = 0.0;
  long window = 0;
  bool done = false;
  for (int epoch = 1; epoch <= config.max_epochs && !done; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t b = 0; b < n && !done; b += config.batch_size) {
      ++step;
      const std::size_t e = std::min(n, b + config.batch_size);
      const auto x = nn::detail::gather(data.images, order, b, e);
      const auto y = nn::detail::gather(data.masks, order, b, e);
      opt.zero_grad();
      const auto loss = nn::weighted_cross_entropy(net->forward(x), y, weights);
      nn::detail::require_finite(loss, "segmentation", step);
      loss.backward();
      opt.step();
      loss_sum += loss.item<double>();
      ++window;

      const bool capped = config.max_steps > 0 && step >= config.max_steps;
      const bool epoch_end = e == n;
      if (step % eval_every == 0 || capped || (config.eval_every == 0 && epoch_end)) {
        const Evaluation ev = evaluate(net, val_data, weights, spec.num_classes);
        result.history.push_back({epoch, step, loss_sum / window, ev.loss, ev.miou});
        loss_sum = 0.0;
        window = 0;
        log::info("segment: epoch " + std::to_string(epoch) + " step " + std::to_string(step) +
                  " val_loss " + csv::format(ev.loss, 4) + " val_miou " + csv::format(ev.miou, 4));
        const bool stop = stopper.update(ev.loss);
        if (stopper.improved()) model.save(checkpoint);
        if (stop) {
          result.early_stopped = epoch < config.max_epochs || !epoch_end;
          done = true;
        }
      }
      if (capped) done = true;
    }
  }
  if (!history_csv.empty()) write_history(history_csv, result.history);
  return result;
}

}  // namespace flarecast::segmentation

#include "flarecast/translation.hpp"

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

namespace flarecast::translation {

using nn::detail::json;

struct Translator::Impl {
  GeneratorSpec generator_spec;
  DiscriminatorSpec discriminator_spec;
  nn::Generator generator{nullptr};
  nn::Discriminator discriminator{nullptr};
  torch::Device device = torch::kCPU;
  double corpus_mean_ir_rms = 0.0;
  std::string manifest_sha256;
  json train_config = json::object();

  void build() {
    generator = nn::Generator(generator_spec);
    discriminator = nn::Discriminator(discriminator_spec);
    device = nn::default_device();
    generator->to(device);
    discriminator->to(device);
  }

  torch::Tensor input(const cv::Mat& image) const {
    if (image.cols != generator_spec.width || image.rows != generator_spec.height) {
      fail(ErrorKind::kDimensionMismatch,
           "image is " + std::to_string(image.cols) + "x" + std::to_string(image.rows) +
               " but the translator canvas is " + std::to_string(generator_spec.width) + "x" +
               std::to_string(generator_spec.height));
    }
    return nn::image_to_tensor(to_three_channel(image), -1.0f, 1.0f).to(device);
  }
};

Translator::Translator() : impl_(std::make_unique<Impl>()) {}

Translator::Translator(const GeneratorSpec& generator, const DiscriminatorSpec& discriminator)
    : Translator() {
  impl_->generator_spec = generator;
  impl_->discriminator_spec = discriminator;
  impl_->build();
}

Translator::~Translator() = default;
Translator::Translator(Translator&&) noexcept = default;
Translator& Translator::operator=(Translator&&) noexcept = default;

Translator Translator::load(const fs::path& checkpoint) {
  const json meta = nn::detail::read_metadata(checkpoint, "translation");
  Translator t;
  t.impl_->generator_spec = nn::detail::generator_from_json(meta.at("generator"));
  t.impl_->discriminator_spec = nn::detail::discriminator_from_json(meta.at("discriminator"));
  t.impl_->build();
  t.impl_->corpus_mean_ir_rms = meta.at("corpus_mean_ir_rms").get<double>();
  t.impl_->manifest_sha256 = meta.at("manifest_sha256").get<std::string>();
  t.impl_->train_config = meta.value("train_config", json::object());
  nn::detail::load_modules(checkpoint, {{"generator", t.impl_->generator.ptr().get()},
                                        {"discriminator", t.impl_->discriminator.ptr().get()}});
  t.impl_->generator->eval();
  t.impl_->discriminator->eval();
  return t;
}

void Translator::save(const fs::path& checkpoint) const {
  const json meta = {{"kind", "translation"},
                     {"generator", nn::detail::to_json(impl_->generator_spec)},
                     {"discriminator", nn::detail::to_json(impl_->discriminator_spec)},
                     {"train_config", impl_->train_config},
                     {"manifest_sha256", impl_->manifest_sha256},
                     {"corpus_mean_ir_rms", impl_->corpus_mean_ir_rms}};
  nn::detail::save_archive(checkpoint, meta,
                           {{"generator", impl_->generator.ptr().get()},
                            {"discriminator", impl_->discriminator.ptr().get()}});
}

const GeneratorSpec& Translator::generator_spec() const { return impl_->generator_spec; }
const DiscriminatorSpec& Translator::discriminator_spec() const {
  return impl_->discriminator_spec;
}
std::int64_t Translator::generator_parameters() const {
  return nn::parameter_count(*impl_->generator);
}
std::int64_t Translator::discriminator_parameters() const {
  return nn::parameter_count(*impl_->discriminator);
}
double Translator::corpus_mean_ir_rms() const { return impl_->corpus_mean_ir_rms; }
const std::string& Translator::manifest_sha256() const { return impl_->manifest_sha256; }

cv::Mat Translator::translate(const cv::Mat& visible) const {
  torch::NoGradGuard guard;
  impl_->generator->eval();
  const auto out = impl_->generator->forward(impl_->input(visible));
  return nn::tensor_to_image(out, -1.0f, 1.0f);
}

cv::Mat Translator::discriminate(const cv::Mat& visible, const cv::Mat& candidate) const {
  torch::NoGradGuard guard;
  impl_->discriminator->eval();
  auto scores = impl_->discriminator->forward(impl_->input(visible), impl_->input(candidate));
  scores = scores.squeeze(0).squeeze(0).to(torch::kCPU).contiguous();
  cv::Mat grid(static_cast<int>(scores.size(0)), static_cast<int>(scores.size(1)), CV_32F,
               scores.data_ptr<float>());
  return grid.clone();
}

namespace {

struct PairTensors {
  std::vector<torch::Tensor> visible;
  std::vector<torch::Tensor> ir;
  double mean_ir_rms = 0.0;
};

PairTensors load_pairs(const ingest::DatasetManifest& manifest, const GeneratorSpec& spec,
                       torch::Device device, const char* role) {
  require(!manifest.entries.empty(), std::string(role) + " manifest is empty");
  PairTensors out;
  for (const auto& e : manifest.entries) {
    require(!e.visible.empty() && !e.ir.empty(),
            std::string(role) + " entry " + e.id + " needs visible and IR frames");
    const cv::Mat vis = read_image(e.visible, 3);
    const cv::Mat ir = read_image(e.ir, 3);
    for (const cv::Mat* m : {&vis, &ir}) {
      if (m->cols != spec.width || m->rows != spec.height) {
        fail(ErrorKind::kDimensionMismatch,
             "entry " + e.id + " is " + std::to_string(m->cols) + "x" + std::to_string(m->rows) +
                 ", expected canvas " + std::to_string(spec.width) + "x" +
                 std::to_string(spec.height));
      }
    }
    out.mean_ir_rms += rms_brightness(ir);
    out.visible.push_back(nn::image_to_tensor(vis, -1.0f, 1.0f).to(device));
    out.ir.push_back(nn::image_to_tensor(ir, -1.0f, 1.0f).to(device));
  }
  out.mean_ir_rms /= static_cast<double>(manifest.entries.size());
  return out;
}

double validation_l1(nn::Generator& generator, const PairTensors& val, int batch_size) {
  torch::NoGradGuard guard;
  generator->eval();
  std::vector<std::size_t> order(val.visible.size());
  std::iota(order.begin(), order.end(), 0);
  double sum = 0.0;
  double count = 0.0;
  for (std::size_t b = 0; b < order.size(); b += batch_size) {
    const std::size_t e = std::min(order.size(), b + batch_size);
    const auto x = nn::detail::gather(val.visible, order, b, e);
    const auto y = nn::detail::gather(val.ir, order, b, e);
    sum += (generator->forward(x) - y).abs().sum().item<double>();
    count += static_cast<double>(y.numel());
  }
  generator->train();
  return sum / count;
}

void write_history(const fs::path& path, const std::vector<TranslationRecord>& history) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << "epoch,step,gen_loss,disc_loss,val_l1\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.step << ',' << csv::format(r.gen_loss) << ','
        << csv::format(r.disc_loss) << ',' << csv::format(r.val_l1) << '\n';
  }
}

}  // namespace

TranslationTrainResult train_translator(const ingest::DatasetManifest& train,
                                        const ingest::DatasetManifest& val,
                                        const GeneratorSpec& generator_spec,
                                        const DiscriminatorSpec& discriminator_spec,
                                        const TranslationTrainConfig& config,
                                        const fs::path& checkpoint, const fs::path& history_csv) {
  config.validate();
  generator_spec.validate();
  discriminator_spec.validate();
  require(!checkpoint.empty(), "train_translator: checkpoint path required");

  torch::manual_seed(config.seed);
  Translator model(generator_spec, discriminator_spec);
  auto& impl = model.impl();
  impl.train_config = nn::detail::to_json(config);
  impl.manifest_sha256 = sha256_hex(ingest::manifest_json(train));

  const PairTensors data = load_pairs(train, generator_spec, impl.device, "training");
  const PairTensors val_data = load_pairs(val, generator_spec, impl.device, "validation");
  impl.corpus_mean_ir_rms = data.mean_ir_rms;

  auto& G = impl.generator;
  auto& D = impl.discriminator;
  G->train();
  D->train();
  torch::optim::Adam opt_g(G->parameters(), torch::optim::AdamOptions(config.lr_generator)
                                                .betas({config.beta1, config.beta2}));
  torch::optim::Adam opt_d(D->parameters(), torch::optim::AdamOptions(config.lr_discriminator)
                                                .betas({config.beta1, config.beta2}));

  const std::size_t n = data.visible.size();
  const long steps_per_epoch = static_cast<long>((n + config.batch_size - 1) / config.batch_size);
  long total_steps = steps_per_epoch * config.epochs;
  if (config.max_steps > 0) total_steps = std::min(total_steps, config.max_steps);
  const long eval_every = config.eval_every > 0 ? config.eval_every : steps_per_epoch;

  TranslationTrainResult result;
  result.checkpoint = checkpoint;
  result.best_val_l1 = std::numeric_limits<double>::infinity();
  result.corpus_mean_ir_rms = data.mean_ir_rms;

  Rng rng(mix_seed(config.seed, 0x7472616e73ULL));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  long step = 0;
  double gen_sum = 0.0;
  double disc_sum = 0.0;
  long window = 0;
  for (int epoch = 1; epoch <= config.epochs && step < total_steps; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t b = 0; b < n && step < total_steps; b += config.batch_size) {
      ++step;
      const auto x = nn::detail::gather(data.visible, order, b, std::min(n, b + config.batch_size));
      const auto y = nn::detail::gather(data.ir, order, b, std::min(n, b + config.batch_size));
      const auto fake = G->forward(x);

      opt_d.zero_grad();
      const auto real_scores = D->forward(x, y);
      const auto fake_scores = D->forward(x, fake.detach());
      const auto d_loss = nn::gan_loss(real_scores, fake_scores, fake.detach(), y,
                                       config.l1_weight).discriminator;
      nn::detail::require_finite(d_loss, "discriminator", step);
      d_loss.backward();
      opt_d.step();

      opt_g.zero_grad();
      const auto g_scores = D->forward(x, fake);
      const auto g_loss =
          nn::gan_loss(real_scores.detach(), g_scores, fake, y, config.l1_weight).generator;
      nn::detail::require_finite(g_loss, "generator", step);
      g_loss.backward();
      opt_g.step();

      gen_sum += g_loss.item<double>();
      disc_sum += d_loss.item<double>();
      ++window;
      if (step == 1 || step % eval_every == 0 || step == total_steps) {
        TranslationRecord r;
        r.epoch = epoch;
        r.step = step;
        r.gen_loss = gen_sum / window;
        r.disc_loss = disc_sum / window;
        r.val_l1 = validation_l1(G, val_data, config.batch_size);
        gen_sum = disc_sum = 0.0;
        window = 0;
        log::info("translate: epoch " + std::to_string(epoch) + " step " + std::to_string(step) +
                  " gen " + csv::format(r.gen_loss, 4) + " disc " + csv::format(r.disc_loss, 4) +
                  " val_l1 " + csv::format(r.val_l1, 4));
        if (r.val_l1 < result.best_val_l1) {
          result.best_val_l1 = r.val_l1;
          model.save(checkpoint);
        }
        result.history.push_back(r);
      }
    }
  }
  if (!history_csv.empty()) write_history(history_csv, result.history);
  return result;
}

}  // namespace flarecast::translation

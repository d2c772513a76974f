#include "common.hpp"

#include <cmath>

#include "flarecast/error.hpp"

namespace fs = std::filesystem;

namespace flarecast::nn::detail {

json to_json(const translation::GeneratorSpec& s) {
  return {{"encoder_filters", s.encoder_filters},
          {"decoder_filters", s.decoder_filters},
          {"skips", s.skips},
          {"in_channels", s.in_channels},
          {"dropout_stages", s.dropout_stages},
          {"width", s.width},
          {"height", s.height}};
}

json to_json(const translation::DiscriminatorSpec& s) {
  return {{"filters", s.filters},
          {"stride_one_stages", s.stride_one_stages},
          {"in_channels", s.in_channels},
          {"receptive_field", s.receptive_field()}};
}

json to_json(const translation::TranslationTrainConfig& c) {
  return {{"epochs", c.epochs},         {"batch_size", c.batch_size},
          {"lr_generator", c.lr_generator}, {"lr_discriminator", c.lr_discriminator},
          {"l1_weight", c.l1_weight},   {"beta1", c.beta1},
          {"beta2", c.beta2},           {"seed", c.seed},
          {"max_steps", c.max_steps},   {"eval_every", c.eval_every}};
}

json to_json(const segmentation::SegmentationModelSpec& s) {
  return {{"variant", segmentation::to_string(s.variant)},
          {"filters", s.filters},
          {"in_channels", s.in_channels},
          {"num_classes", s.num_classes}};
}

json to_json(const segmentation::SegTrainConfig& c) {
  return {{"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"class_weight_c", c.class_weight_c},
          {"seed", c.seed},
          {"max_steps", c.max_steps},
          {"eval_every", c.eval_every}};
}

translation::GeneratorSpec generator_from_json(const json& j) {
  translation::GeneratorSpec s;
  s.encoder_filters = j.at("encoder_filters").get<std::vector<int>>();
  s.decoder_filters = j.at("decoder_filters").get<std::vector<int>>();
  s.skips = j.at("skips").get<std::vector<bool>>();
  s.in_channels = j.at("in_channels").get<int>();
  s.dropout_stages = j.at("dropout_stages").get<int>();
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  return s;
}

translation::DiscriminatorSpec discriminator_from_json(const json& j) {
  translation::DiscriminatorSpec s;
  s.filters = j.at("filters").get<std::vector<int>>();
  s.stride_one_stages = j.at("stride_one_stages").get<int>();
  s.in_channels = j.at("in_channels").get<int>();
  return s;
}

segmentation::SegmentationModelSpec segmenter_from_json(const json& j) {
  segmentation::SegmentationModelSpec s;
  s.variant = segmentation::parse_variant(j.at("variant").get<std::string>());
  s.filters = j.at("filters").get<std::vector<int>>();
  s.in_channels = j.at("in_channels").get<int>();
  s.num_classes = j.at("num_classes").get<int>();
  return s;
}

void save_archive(const fs::path& path, const json& metadata,
                  const std::vector<std::pair<std::string, const torch::nn::Module*>>& modules) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  torch::serialize::OutputArchive archive;
  for (const auto& [name, module] : modules) {
    torch::serialize::OutputArchive sub;
    module->save(sub);
    archive.write(name, sub);
  }
  archive.write("metadata", c10::IValue(metadata.dump()));
  archive.save_to(path.string());
}

json read_metadata(const fs::path& path, const std::string& kind) {
  if (!fs::is_regular_file(path)) {
    fail(ErrorKind::kCheckpointNotFound, "checkpoint not found: " + path.string());
  }
  torch::serialize::InputArchive archive;
  archive.load_from(path.string());
  c10::IValue value;
  require(archive.try_read("metadata", value) && value.isString(),
          path.string() + " is not a flarecast checkpoint");
  json meta = json::parse(value.toStringRef());
  require(meta.value("kind", "") == kind,
          path.string() + " holds a " + meta.value("kind", "unknown") + " model, expected " + kind);
  return meta;
}

void load_modules(const fs::path& path,
                  const std::vector<std::pair<std::string, torch::nn::Module*>>& modules) {
  torch::serialize::InputArchive archive;
  archive.load_from(path.string());
  for (const auto& [name, module] : modules) {
    torch::serialize::InputArchive sub;
    archive.read(name, sub);
    module->load(sub);
  }
}

torch::Tensor gather(const std::vector<torch::Tensor>& items, const std::vector<std::size_t>& order,
                     std::size_t begin, std::size_t end) {
  std::vector<torch::Tensor> parts;
  for (std::size_t i = begin; i < end; ++i) parts.push_back(items[order[i]]);
  return torch::cat(parts, 0);
}

void require_finite(const torch::Tensor& loss, const std::string& what, long step) {
  const double v = loss.item<double>();
  if (!std::isfinite(v)) {
    fail(ErrorKind::kNonFiniteLoss,
         what + " loss became non-finite (" + std::to_string(v) + ") at step " + std::to_string(step));
  }
}

}  // namespace flarecast::nn::detail

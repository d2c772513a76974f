#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "flarecast/segmentation.hpp"
#include "flarecast/translation.hpp"

namespace flarecast::nn::detail {

using nlohmann::json;

json to_json(const translation::GeneratorSpec& spec);
json to_json(const translation::DiscriminatorSpec& spec);
json to_json(const translation::TranslationTrainConfig& config);
json to_json(const segmentation::SegmentationModelSpec& spec);
json to_json(const segmentation::SegTrainConfig& config);
translation::GeneratorSpec generator_from_json(const json& j);
translation::DiscriminatorSpec discriminator_from_json(const json& j);
segmentation::SegmentationModelSpec segmenter_from_json(const json& j);

/// Writes modules plus a JSON metadata string into one archive file.
void save_archive(const std::filesystem::path& path, const json& metadata,
                  const std::vector<std::pair<std::string, const torch::nn::Module*>>& modules);

/// Reads the metadata of an archive; throws kCheckpointNotFound when missing
/// and kValidation when the archive holds a different kind of model.
json read_metadata(const std::filesystem::path& path, const std::string& kind);

void load_modules(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, torch::nn::Module*>>& modules);

/// Stacks rows of `items` selected by `order[begin, end)` along dim 0.
torch::Tensor gather(const std::vector<torch::Tensor>& items, const std::vector<std::size_t>& order,
                     std::size_t begin, std::size_t end);

void require_finite(const torch::Tensor& loss, const std::string& what, long step);

}  // namespace flarecast::nn::detail

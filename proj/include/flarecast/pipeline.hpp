#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "flarecast/brightness.hpp"
#include "flarecast/characterization.hpp"
#include "flarecast/evaluation.hpp"
#include "flarecast/segmentation.hpp"
#include "flarecast/translation.hpp"

namespace flarecast::pipeline {

// ---------------------------------------------------------------------------
// Synthetic scenes

/// Elliptical flames standing on a fixed nozzle. The ellipse has horizontal
/// semi-axis a and vertical semi-axis b, its lowest point sits on the nozzle,
/// so the true length is 2b / ppm and the true area pi a b / ppm^2. Radiation
/// zones are concentric ellipses at the normalised radii in `zone_radii`.
struct SyntheticSceneSpec {
  int content_width = 64;
  int content_height = 48;
  int canvas_width = 64;
  int canvas_height = 64;
  cv::Point2d nozzle{32.0, 44.0};  // content pixel coordinates
  double a_min = 6.0;
  double a_max = 12.0;
  double b_min = 10.0;
  double b_max = 20.0;
  double pixels_per_metric = 10.0;
  double background = 20.0;               // IR grey level outside the flame
  std::vector<double> zone_radii{1.0, 0.7, 0.4};  // outer edge of classes 1, 2, 3
  std::string colormap = "inferno";       // pseudo-IR palette
  double visible_noise = 4.0;             // std-dev of visible sensor noise

  int num_classes() const { return static_cast<int>(zone_radii.size()) + 1; }
  void validate() const;
};

struct SyntheticScene {
  cv::Mat visible;  // BGR, content size
  cv::Mat ir;       // BGR pseudo-IR, content size
  cv::Mat mask;     // class ids, content size
  double a = 0.0;
  double b = 0.0;
  double true_length_m = 0.0;
  double true_area_m2 = 0.0;
};

/// Renders one scene. Pixel centres decide zone membership; `noise_seed`
/// only drives the visible sensor noise.
SyntheticScene render_scene(const SyntheticSceneSpec& spec, double a, double b,
                            std::uint64_t noise_seed);

struct SyntheticDataset {
  std::filesystem::path directory;
  std::filesystem::path manifest;
  std::filesystem::path ground_truth;
  std::filesystem::path config;  // ready-to-edit pipeline config
  std::vector<evaluation::GroundTruthRecord> truth;
};

/// Writes n canvas-padded visible/IR pairs with masks under `out_dir`:
/// visible/, ir/, masks/, manifest.json, ground_truth.csv, flarecast.toml.
/// Output is a pure function of (spec, n, seed).
SyntheticDataset generate_synthetic_dataset(const SyntheticSceneSpec& spec, int n,
                                            std::uint64_t seed,
                                            const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// Configuration

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "flarecast_out";

  std::filesystem::path manifest;

  std::filesystem::path translation_checkpoint;
  translation::BrightnessPolicy brightness;
  translation::GeneratorSpec generator;
  translation::DiscriminatorSpec discriminator;
  translation::TranslationTrainConfig translation_train;

  std::filesystem::path segmentation_checkpoint;
  segmentation::SegmentationModelSpec segmentation;
  segmentation::SegTrainConfig segmentation_train;

  double pixels_per_metric = 0.0;
  double reference_distance_px = 0.0;
  double reference_distance_m = 0.0;
  cv::Point2d nozzle{0.0, 0.0};  // content pixel coordinates

  std::filesystem::path ground_truth;
  std::string experiment = "default";
  std::string model;  // defaults to the segmentation variant

  SyntheticSceneSpec synth;
  int synth_count = 200;

  characterization::CalibrationInfo calibration() const;
};

/// Small models and step budgets that train in minutes on one CPU core.
/// Learning rates keep the generator at a tenth of the discriminator rate.
translation::GeneratorSpec desk_generator(int width, int height);
translation::DiscriminatorSpec desk_discriminator();
translation::TranslationTrainConfig desk_translation_train();
segmentation::SegmentationModelSpec desk_segmenter(int num_classes);
segmentation::SegTrainConfig desk_segmentation_train();

/// Reads a TOML config with optional top-level `seed`/`out` and tables
/// [ingest], [translation], [segmentation], [characterization], [evaluation]
/// and [synth]. Relative paths resolve against the config file's directory.
/// Unknown keys are rejected.
PipelineConfig load_config(const std::filesystem::path& path);

/// Writes every setting back out; paths beneath the file's directory are
/// stored relative to it.
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Stages

/// Splits a manifest into train/val (0.8/0.2) under `seed` unless a separate
/// validation manifest is given.
std::pair<ingest::DatasetManifest, ingest::DatasetManifest> train_val(
    const std::filesystem::path& manifest, const std::filesystem::path& val_manifest,
    std::uint64_t seed);

/// Translates every PNG in `in_dir` and applies the brightness policy. In
/// paired mode the reference is the same-named frame in `reference_dir`.
void translate_directory(const translation::Translator& translator,
                         const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                         const translation::BrightnessPolicy& policy,
                         const std::filesystem::path& reference_dir = {});

void segment_directory(const segmentation::Segmenter& segmenter,
                       const std::filesystem::path& in_dir, const std::filesystem::path& out_dir);

struct RunSummary {
  std::filesystem::path out_dir;
  std::vector<characterization::GeometryRow> generated_geometry;
  std::vector<characterization::GeometryRow> original_geometry;
  evaluation::Report report;
};

/// translate -> adjust_brightness -> remove_padding -> segment -> characterize
/// -> evaluate over every manifest entry. When an entry carries a real IR
/// frame it is segmented too, feeding image metrics, Hausdorff distances and
/// the original_ir error columns. Every stage writes its artifacts under
/// out_dir. Failures are rethrown tagged with stage and frame id.
RunSummary run_pipeline(const PipelineConfig& config);

}  // namespace flarecast::pipeline

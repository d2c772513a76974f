#include <algorithm>
#include <fstream>
#include <map>

#include <spdlog/spdlog.h>

#include "flarecast/csv.hpp"
#include "flarecast/error.hpp"
#include "flarecast/image.hpp"
#include "flarecast/ingest.hpp"
#include "flarecast/metrics.hpp"
#include "flarecast/pipeline.hpp"

namespace fs = std::filesystem;

namespace flarecast::pipeline {

std::pair<ingest::DatasetManifest, ingest::DatasetManifest> train_val(
    const fs::path& manifest, const fs::path& val_manifest, std::uint64_t seed) {
  const auto all = ingest::load_manifest(manifest);
  if (!val_manifest.empty()) return {all, ingest::load_manifest(val_manifest)};
  require(all.entries.size() >= 2, "need at least two entries to split off a validation set");
  const std::vector<double> ratios{0.8, 0.2};
  auto parts = ingest::split_dataset(all, ratios, seed);
  return {parts[0], parts[1]};
}

namespace {

std::vector<fs::path> png_files(const fs::path& dir) {
  require(fs::is_directory(dir), "input directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  require(!files.empty(), "no PNG frames in " + dir.string());
  return files;
}

/// Runs `fn`, re-raising library errors tagged with the stage and frame.
template <typename Fn>
auto stage(const char* name, const std::string& frame, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("[") + name + "] frame " + frame + ": " + e.what());
  } catch (const cv::Exception& e) {
    throw Error(ErrorKind::kIo, std::string("[") + name + "] frame " + frame + ": " + e.what());
  }
}

struct BrightnessRow {
  std::string id;
  translation::BrightnessAdjustment adjustment;
  double reference = 0.0;
};

void write_brightness_csv(const fs::path& path, const std::vector<BrightnessRow>& rows) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << "frame_id,rms_before,reference_rms,applied,scale,rms_target\n";
  for (const auto& r : rows) {
    out << r.id << ',' << csv::format(r.adjustment.rms_before) << ',' << csv::format(r.reference)
        << ',' << (r.adjustment.applied ? 1 : 0) << ',' << csv::format(r.adjustment.scale) << ','
        << csv::format(r.adjustment.rms_target) << '\n';
  }
}

}  // namespace

void translate_directory(const translation::Translator& translator, const fs::path& in_dir,
                         const fs::path& out_dir, const translation::BrightnessPolicy& policy,
                         const fs::path& reference_dir) {
  const bool paired = policy.reference_mode == translation::ReferenceMode::kPairedReal;
  require(!paired || !reference_dir.empty(),
          "paired brightness reference needs a directory of real IR frames");
  fs::create_directories(out_dir);
  std::vector<BrightnessRow> rows;
  for (const auto& file : png_files(in_dir)) {
    const std::string id = file.stem().string();
    const cv::Mat generated =
        stage("translate", id, [&] { return translator.translate(read_image(file, 3)); });
    const double reference = stage("brightness", id, [&] {
      return paired ? translation::rms_brightness(read_image(reference_dir / file.filename(), 3))
                    : translator.corpus_mean_ir_rms();
    });
    auto adjusted = stage("brightness", id, [&] {
      return translation::adjust_brightness(generated, reference, policy);
    });
    write_image(out_dir / file.filename(), adjusted.image);
    rows.push_back({id, std::move(adjusted), reference});
  }
  write_brightness_csv(out_dir / "brightness.csv", rows);
}

void segment_directory(const segmentation::Segmenter& segmenter, const fs::path& in_dir,
                       const fs::path& out_dir) {
  fs::create_directories(out_dir);
  for (const auto& file : png_files(in_dir)) {
    const std::string id = file.stem().string();
    const cv::Mat mask = stage("segment", id, [&] { return segmenter.segment(read_image(file, 3)); });
    segmentation::write_mask(out_dir / file.filename(), mask);
  }
}

RunSummary run_pipeline(const PipelineConfig& config) {
  require(!config.manifest.empty(), "[ingest] no manifest configured");
  require(!config.out_dir.empty(), "no output directory configured");
  const auto manifest = stage("ingest", "-", [&] { return ingest::load_manifest(config.manifest); });
  require(!manifest.entries.empty(), "[ingest] manifest " + config.manifest.string() + " is empty");

  if (!fs::is_regular_file(config.translation_checkpoint)) {
    fail(ErrorKind::kCheckpointNotFound,
         "checkpoint not found: translation (" + config.translation_checkpoint.string() + ")");
  }
  if (!fs::is_regular_file(config.segmentation_checkpoint)) {
    fail(ErrorKind::kCheckpointNotFound,
         "checkpoint not found: segmentation (" + config.segmentation_checkpoint.string() + ")");
  }
  const auto translator = translation::Translator::load(config.translation_checkpoint);
  const auto segmenter = segmentation::Segmenter::load(config.segmentation_checkpoint);
  const auto calibration = config.calibration();
  const characterization::NozzleReference nozzle{config.nozzle};
  const std::string model = config.model.empty()
                                ? std::string(segmentation::to_string(segmenter.spec().variant))
                                : config.model;

  const fs::path out = config.out_dir;
  for (const char* sub : {"translated", "adjusted", "cropped", "cropped_real", "masks/generated",
                          "masks/original"}) {
    fs::create_directories(out / sub);
  }

  auto entries = manifest.entries;
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });

  RunSummary summary;
  summary.out_dir = out;
  std::vector<BrightnessRow> brightness;
  std::vector<evaluation::GeometryResult> geometry;
  std::vector<evaluation::ImageMetricRow> image_metrics;
  std::vector<evaluation::FrameHausdorff> hausdorff;

  for (const auto& e : entries) {
    const std::string& id = e.id;
    const std::string file = id + ".png";
    const std::string experiment = e.experiment.empty() ? config.experiment : e.experiment;
    const bool has_real = !e.ir.empty();

    const cv::Mat visible = stage("ingest", id, [&] { return read_image(e.visible, 3); });
    const ingest::CanvasSpec canvas = manifest.canvas.value_or(
        ingest::CanvasSpec{visible.cols, visible.rows, 0, 0, 0, 0});
    const cv::Mat real = has_real ? stage("ingest", id, [&] { return read_image(e.ir, 3); })
                                  : cv::Mat();

    const cv::Mat generated = stage("translate", id, [&] { return translator.translate(visible); });
    write_image(out / "translated" / file, generated);

    const auto adjusted = stage("brightness", id, [&] {
      double reference = translator.corpus_mean_ir_rms();
      if (config.brightness.reference_mode == translation::ReferenceMode::kPairedReal) {
        require(has_real, "paired brightness reference needs a real IR frame");
        reference = translation::rms_brightness(real);
      }
      brightness.push_back({id, {}, reference});
      return translation::adjust_brightness(generated, reference, config.brightness);
    });
    brightness.back().adjustment = adjusted;
    write_image(out / "adjusted" / file, adjusted.image);

    const cv::Mat cropped =
        stage("remove_padding", id, [&] { return ingest::remove_padding(adjusted.image, canvas); });
    write_image(out / "cropped" / file, cropped);
    cv::Mat real_cropped;
    if (has_real) {
      real_cropped = stage("remove_padding", id, [&] { return ingest::remove_padding(real, canvas); });
      write_image(out / "cropped_real" / file, real_cropped);
    }

    const cv::Mat mask = stage("segment", id, [&] { return segmenter.segment(cropped); });
    segmentation::write_mask(out / "masks" / "generated" / file, mask);
    cv::Mat real_mask;
    if (has_real) {
      real_mask = stage("segment", id, [&] { return segmenter.segment(real_cropped); });
      segmentation::write_mask(out / "masks" / "original" / file, real_mask);
    }

    auto characterize = [&](const cv::Mat& m, const char* source,
                            std::vector<characterization::GeometryRow>& rows) {
      try {
        const auto g = stage("characterize", id,
                             [&] { return characterization::characterize(m, nozzle, calibration); });
        rows.push_back({id, g.total_length_m, g.area_m2, g.topmost_point.x, g.topmost_point.y});
        geometry.push_back({experiment, model, source, id, g.total_length_m, g.area_m2});
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::kNoFlame) throw;
        spdlog::warn("{} skipped", err.what());
      }
    };
    characterize(mask, evaluation::kGeneratedIr, summary.generated_geometry);
    if (has_real) {
      characterize(real_mask, evaluation::kOriginalIr, summary.original_geometry);
      image_metrics.push_back(
          {id, stage("evaluate", id, [&] { return metrics::evaluate_pair(cropped, real_cropped); })});
      try {
        hausdorff.push_back({experiment, model, id,
                             stage("evaluate", id, [&] { return metrics::hausdorff(real_mask, mask); })});
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::kEmptyMask) throw;
        spdlog::warn("{}; Hausdorff skipped", err.what());
      }
    }
  }

  write_brightness_csv(out / "adjusted" / "brightness.csv", brightness);
  characterization::write_geometry_csv(out / "geometry_generated.csv", summary.generated_geometry);
  if (!summary.original_geometry.empty()) {
    characterization::write_geometry_csv(out / "geometry_original.csv", summary.original_geometry);
  }

  if (config.ground_truth.empty()) {
    spdlog::warn("no ground truth configured; geometry errors not reported");
    evaluation::write_image_metrics_csv(out / "report" / "image_metrics.csv", image_metrics);
    return summary;
  }
  const auto truth = stage("evaluate", "-", [&] { return evaluation::load_ground_truth(config.ground_truth); });
  require(!geometry.empty(), "[evaluate] no frame produced a flame mask");
  std::vector<evaluation::HausdorffGroup> groups;
  if (!hausdorff.empty()) groups = evaluation::aggregate_hausdorff(std::span<const evaluation::FrameHausdorff>(hausdorff));
  summary.report = evaluation::build_report(geometry, truth, image_metrics, groups);
  evaluation::write_report(summary.report, out / "report");
  return summary;
}

}  // namespace flarecast::pipeline

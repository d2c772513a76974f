#include <cmath>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include "flarecast/error.hpp"
#include "flarecast/image.hpp"
#include "flarecast/ingest.hpp"
#include "flarecast/pipeline.hpp"
#include "flarecast/random.hpp"

namespace fs = std::filesystem;

namespace flarecast::pipeline {

void SyntheticSceneSpec::validate() const {
  require(content_width > 0 && content_height > 0, "synthetic content size must be positive");
  require(canvas_width >= content_width && canvas_height >= content_height,
          "synthetic canvas must contain the content frame");
  require(a_min > 0.0 && a_min <= a_max && b_min > 0.0 && b_min <= b_max,
          "synthetic semi-axis ranges must be positive and ordered");
  require(pixels_per_metric > 0.0, "synthetic pixels_per_metric must be positive");
  require(nozzle.x - a_max >= 0.0 && nozzle.x + a_max <= content_width,
          "synthetic flames would cross the left or right frame edge");
  require(nozzle.y <= content_height && nozzle.y - 2.0 * b_max >= 0.0,
          "synthetic flames would cross the top or bottom frame edge");
  require(background >= 0.0 && background < 255.0, "synthetic background must lie in [0, 255)");
  require(!zone_radii.empty() && zone_radii.front() == 1.0,
          "synthetic zone radii must start at 1.0 (the flame edge)");
  for (std::size_t i = 1; i < zone_radii.size(); ++i) {
    require(zone_radii[i] > 0.0 && zone_radii[i] < zone_radii[i - 1],
            "synthetic zone radii must be strictly decreasing and positive");
  }
  require(zone_radii.size() < 255, "too many synthetic zones");
  require(visible_noise >= 0.0, "synthetic visible noise must be non-negative");
  require(colormap == "inferno" || colormap == "jet" || colormap == "hot" || colormap == "gray",
          "unknown synthetic colormap '" + colormap + "' (inferno|jet|hot|gray)");
}

namespace {

cv::Mat colorize(const cv::Mat& grey, const std::string& name) {
  if (name == "gray") return to_three_channel(grey);
  const int map = name == "jet" ? cv::COLORMAP_JET
                  : name == "hot" ? cv::COLORMAP_HOT
                                  : cv::COLORMAP_INFERNO;
  cv::Mat out;
  cv::applyColorMap(grey, out, map);
  return out;
}

std::uint8_t saturate(double v) { return cv::saturate_cast<std::uint8_t>(std::lround(v)); }

}  // namespace

SyntheticScene render_scene(const SyntheticSceneSpec& spec, double a, double b,
                            std::uint64_t noise_seed) {
  spec.validate();
  require(a > 0.0 && b > 0.0, "render_scene: semi-axes must be positive");
  const double cx = spec.nozzle.x;
  const double cy = spec.nozzle.y - b;
  require(cx - a >= 0.0 && cx + a <= spec.content_width && cy - b >= 0.0,
          "render_scene: flame does not fit in the frame");

  SyntheticScene s;
  s.a = a;
  s.b = b;
  s.true_length_m = 2.0 * b / spec.pixels_per_metric;
  s.true_area_m2 =
      std::numbers::pi * a * b / (spec.pixels_per_metric * spec.pixels_per_metric);

  const int w = spec.content_width;
  const int h = spec.content_height;
  cv::Mat grey(h, w, CV_8UC1);
  s.mask = cv::Mat(h, w, CV_8UC1);
  s.visible = cv::Mat(h, w, CV_8UC3);
  Rng rng(noise_seed);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = (x + 0.5 - cx) / a;
      const double dy = (y + 0.5 - cy) / b;
      const double r = std::sqrt(dx * dx + dy * dy);
      std::uint8_t label = 0;
      for (std::size_t k = 0; k < spec.zone_radii.size(); ++k) {
        if (r <= spec.zone_radii[k]) label = static_cast<std::uint8_t>(k + 1);
      }
      s.mask.at<std::uint8_t>(y, x) = label;
      double bgr[3];
      if (label > 0) {
        const double t = 1.0 - r;
        grey.at<std::uint8_t>(y, x) =
            saturate(spec.background + (255.0 - spec.background) * (1.0 - 0.75 * r));
        bgr[0] = 30.0 + 200.0 * t * t;
        bgr[1] = 90.0 + 150.0 * t;
        bgr[2] = 200.0 + 55.0 * t;
      } else {
        grey.at<std::uint8_t>(y, x) = saturate(spec.background);
        bgr[0] = 28.0;
        bgr[1] = 24.0;
        bgr[2] = 22.0;
      }
      auto& px = s.visible.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) px[c] = saturate(bgr[c] + spec.visible_noise * rng.normal());
    }
  }
  s.ir = colorize(grey, spec.colormap);
  return s;
}

SyntheticDataset generate_synthetic_dataset(const SyntheticSceneSpec& spec, int n,
                                            std::uint64_t seed, const fs::path& out_dir) {
  spec.validate();
  require(n >= 1, "synthetic dataset size must be >= 1");
  fs::create_directories(out_dir);

  SyntheticDataset ds;
  ds.directory = out_dir;
  ds.manifest = out_dir / "manifest.json";
  ds.ground_truth = out_dir / "ground_truth.csv";
  ds.config = out_dir / "flarecast.toml";

  ingest::DatasetManifest manifest;
  manifest.seed = seed;
  for (int k = 0; k < n; ++k) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
    const double a = rng.uniform(spec.a_min, spec.a_max);
    const double b = rng.uniform(spec.b_min, spec.b_max);
    const SyntheticScene scene = render_scene(spec, a, b, rng.next());

    char id[32];
    std::snprintf(id, sizeof(id), "frame_%04d", k);
    const auto vis = ingest::pad_to_canvas(scene.visible, spec.canvas_width, spec.canvas_height);
    const auto ir = ingest::pad_to_canvas(scene.ir, spec.canvas_width, spec.canvas_height);
    const auto mask = ingest::pad_to_canvas(scene.mask, spec.canvas_width, spec.canvas_height);
    manifest.canvas = vis.canvas;

    ingest::ManifestEntry e;
    e.id = id;
    e.visible = out_dir / "visible" / (e.id + ".png");
    e.ir = out_dir / "ir" / (e.id + ".png");
    e.mask = out_dir / "masks" / (e.id + ".png");
    e.experiment = "synthetic";
    e.visible_index = e.ir_index = k;
    e.visible_timestamp = e.ir_timestamp = static_cast<double>(k);
    write_image(e.visible, vis.image);
    write_image(e.ir, ir.image);
    segmentation::write_mask(e.mask, mask.image);
    manifest.entries.push_back(std::move(e));
    ds.truth.push_back({id, scene.true_length_m, scene.true_area_m2});
  }
  ingest::save_manifest(manifest, ds.manifest);
  evaluation::write_ground_truth(ds.ground_truth, ds.truth);

  PipelineConfig config;
  config.seed = seed;
  config.out_dir = out_dir / "run";
  config.manifest = ds.manifest;
  config.ground_truth = ds.ground_truth;
  config.translation_checkpoint = out_dir / "checkpoints" / "translation.pt";
  config.segmentation_checkpoint = out_dir / "checkpoints" / "segmentation.pt";
  config.pixels_per_metric = spec.pixels_per_metric;
  config.nozzle = spec.nozzle;
  config.experiment = "synthetic";
  config.synth = spec;
  config.synth_count = n;
  config.generator = desk_generator(spec.canvas_width, spec.canvas_height);
  config.discriminator = desk_discriminator();
  config.translation_train = desk_translation_train();
  config.segmentation_train = desk_segmentation_train();
  config.segmentation = desk_segmenter(spec.num_classes());
  config.translation_train.seed = config.segmentation_train.seed = seed;
  save_config(config, ds.config);
  return ds;
}

}  // namespace flarecast::pipeline

// flarecast command-line entry point.

#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "flarecast/characterization.hpp"
#include "flarecast/csv.hpp"
#include "flarecast/error.hpp"
#include "flarecast/evaluation.hpp"
#include "flarecast/image.hpp"
#include "flarecast/ingest.hpp"
#include "flarecast/metrics.hpp"
#include "flarecast/pipeline.hpp"

namespace fs = std::filesystem;
using namespace flarecast;

namespace {

struct Globals {
  fs::path config;
  std::optional<std::uint64_t> seed;
  fs::path out;
  bool quiet = false;
};

pipeline::PipelineConfig resolve(const Globals& g) {
  pipeline::PipelineConfig c = g.config.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (!g.out.empty()) c.out_dir = g.out;
  c.translation_train.seed = c.seed;
  c.segmentation_train.seed = c.seed;
  return c;
}

fs::path out_or(const Globals& g, const fs::path& fallback) {
  return g.out.empty() ? fallback : g.out;
}

void print_metrics(const std::vector<metrics::MetricValue>& values) {
  for (const auto& v : values) {
    std::cout << v.label() << ' ' << csv::format(v.value) << (v.units().empty() ? "" : " ")
              << v.units() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visible-to-infrared jet flame characterisation pipeline", "flarecast"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "TOML configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "seed for every stochastic stage");
  app.add_option("--out", g.out, "output directory (or file for single-file outputs)");
  app.add_flag("-q,--quiet", g.quiet, "only log warnings and errors");

  std::string current = "flarecast";
  std::function<void()> action;
  auto bind = [&](CLI::App* cmd, std::string tag, std::function<void()> fn) {
    cmd->callback([&, tag, fn] {
      current = tag;
      action = fn;
    });
  };

  // -- synth ---------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic flame dataset");
  int synth_n = 0;
  synth->add_option("-n,--count", synth_n, "number of scenes (default from config)");
  bind(synth, "synth", [&] {
    auto c = resolve(g);
    const int n = synth_n > 0 ? synth_n : c.synth_count;
    const auto ds = pipeline::generate_synthetic_dataset(c.synth, n, c.seed, out_or(g, "synthetic"));
    std::cout << "wrote " << n << " scenes to " << ds.directory.string() << "\nconfig "
              << ds.config.string() << '\n';
  });

  // -- ingest --------------------------------------------------------------
  auto* ingest_cmd = app.add_subcommand("ingest", "pair, pad, augment and split frames");
  ingest_cmd->require_subcommand(1);

  auto* pair = ingest_cmd->add_subcommand("pair", "pair visible and IR streams by timestamp");
  fs::path vis_dir, ir_dir;
  double tolerance = -1.0, offset = 0.0;
  pair->add_option("--visible", vis_dir, "visible stream directory or index.csv")->required();
  pair->add_option("--ir", ir_dir, "IR stream directory or index.csv")->required();
  pair->add_option("--tolerance", tolerance, "max time gap in seconds (default: half IR period)");
  pair->add_option("--offset", offset, "seconds added to visible timestamps");
  bind(pair, "ingest", [&] {
    const auto c = resolve(g);
    const auto visible = ingest::load_stream_index(vis_dir, "visible");
    const auto ir = ingest::load_stream_index(ir_dir, "ir");
    const double tol = tolerance >= 0.0 ? tolerance : ingest::default_pairing_tolerance(ir);
    const auto pairs = ingest::pair_by_timestamp(ir, visible, tol, offset);
    const fs::path path = out_or(g, "manifest.json");
    ingest::save_manifest(ingest::manifest_from_pairs(pairs, c.seed), path);
    std::cout << pairs.size() << " pairs from " << ir.size() << " IR frames -> " << path.string()
              << '\n';
  });

  auto* pad = ingest_cmd->add_subcommand("pad", "zero-pad every PNG onto a canvas");
  fs::path pad_in;
  int pad_w = 0, pad_h = 0;
  pad->add_option("--in", pad_in, "input directory")->required()->check(CLI::ExistingDirectory);
  pad->add_option("--width", pad_w, "canvas width")->required();
  pad->add_option("--height", pad_h, "canvas height")->required();
  bind(pad, "ingest", [&] {
    const fs::path out = out_or(g, "padded");
    int count = 0;
    for (const auto& e : fs::directory_iterator(pad_in)) {
      if (e.path().extension() != ".png") continue;
      write_image(out / e.path().filename(),
                  ingest::pad_to_canvas(read_image(e.path(), 3), pad_w, pad_h).image);
      ++count;
    }
    std::cout << "padded " << count << " frames -> " << out.string() << '\n';
  });

  auto* augment = ingest_cmd->add_subcommand("augment", "write 16 augmented variants per entry");
  fs::path aug_manifest;
  augment->add_option("--manifest", aug_manifest, "input manifest")->required()->check(CLI::ExistingFile);
  bind(augment, "ingest", [&] {
    const auto c = resolve(g);
    const fs::path out = out_or(g, "augmented");
    const auto m = ingest::augment_manifest(ingest::load_manifest(aug_manifest), c.seed, out);
    ingest::save_manifest(m, out / "manifest.json");
    std::cout << m.entries.size() << " samples -> " << (out / "manifest.json").string() << '\n';
  });

  auto* split = ingest_cmd->add_subcommand("split", "split a manifest into train/val[/test]");
  fs::path split_manifest;
  std::vector<double> ratios{0.8, 0.2};
  split->add_option("--manifest", split_manifest, "input manifest")->required()->check(CLI::ExistingFile);
  split->add_option("--ratios", ratios, "two or three ratios summing to 1")->delimiter(',');
  bind(split, "ingest", [&] {
    const auto c = resolve(g);
    const fs::path out = out_or(g, "splits");
    const auto parts = ingest::split_dataset(ingest::load_manifest(split_manifest), ratios, c.seed);
    for (const auto& p : parts) {
      ingest::save_manifest(p, out / (p.split_label + ".json"));
      std::cout << p.split_label << ' ' << p.entries.size() << '\n';
    }
  });

  // -- translate -----------------------------------------------------------
  auto* translate = app.add_subcommand("translate", "train or apply the visible-to-IR model");
  translate->require_subcommand(1);

  auto* tr_train = translate->add_subcommand("train", "train the Pix2Pix translator");
  fs::path tr_manifest, tr_val, tr_ckpt;
  tr_train->add_option("--manifest", tr_manifest, "training manifest (default from config)");
  tr_train->add_option("--val", tr_val, "validation manifest (default: 20% split)");
  tr_train->add_option("--checkpoint", tr_ckpt, "checkpoint to write (default from config)");
  bind(tr_train, "translate", [&] {
    auto c = resolve(g);
    const fs::path manifest = tr_manifest.empty() ? c.manifest : tr_manifest;
    require(!manifest.empty(), "no training manifest given");
    auto [train, val] = pipeline::train_val(manifest, tr_val, c.seed);
    if (train.canvas && g.config.empty()) {
      c.generator.width = train.canvas->width;
      c.generator.height = train.canvas->height;
      const int stride = 1 << c.generator.depth();
      if (c.generator.width % stride != 0 || c.generator.height % stride != 0) {
        spdlog::warn("canvas {}x{} too small for the default generator, using desk-scale models",
                     c.generator.width, c.generator.height);
        c.generator = pipeline::desk_generator(train.canvas->width, train.canvas->height);
        c.discriminator = pipeline::desk_discriminator();
      }
    }
    const fs::path ckpt = !tr_ckpt.empty() ? tr_ckpt
                          : !c.translation_checkpoint.empty() ? c.translation_checkpoint
                                                              : c.out_dir / "translation.pt";
    const auto result = translation::train_translator(train, val, c.generator, c.discriminator,
                                                      c.translation_train, ckpt,
                                                      ckpt.parent_path() / "translation_history.csv");
    std::cout << "best val L1 " << csv::format(result.best_val_l1) << " -> " << ckpt.string() << '\n';
  });

  auto* tr_run = translate->add_subcommand("run", "translate a directory of visible frames");
  fs::path tr_in, tr_ref;
  std::string brightness_ref;
  tr_run->add_option("--checkpoint", tr_ckpt, "translator checkpoint");
  tr_run->add_option("--in", tr_in, "visible frame directory")->required();
  tr_run->add_option("--brightness-ref", brightness_ref, "corpus_mean | paired")
      ->check(CLI::IsMember({"corpus_mean", "paired"}));
  tr_run->add_option("--reference", tr_ref, "real IR directory for --brightness-ref paired");
  bind(tr_run, "translate", [&] {
    auto c = resolve(g);
    if (!brightness_ref.empty()) {
      c.brightness.reference_mode = translation::parse_reference_mode(brightness_ref);
    } else if (tr_ref.empty()) {
      c.brightness.reference_mode = translation::ReferenceMode::kCorpusMean;
    }
    const fs::path ckpt = tr_ckpt.empty() ? c.translation_checkpoint : tr_ckpt;
    if (!fs::is_regular_file(ckpt)) {
      fail(ErrorKind::kCheckpointNotFound, "checkpoint not found: translation (" + ckpt.string() + ")");
    }
    const auto translator = translation::Translator::load(ckpt);
    const fs::path out = out_or(g, "translated");
    pipeline::translate_directory(translator, tr_in, out, c.brightness, tr_ref);
    std::cout << "translated frames -> " << out.string() << '\n';
  });

  // -- segment -------------------------------------------------------------
  auto* segment = app.add_subcommand("segment", "train or apply a radiation-zone segmenter");
  segment->require_subcommand(1);

  auto* sg_train = segment->add_subcommand("train", "train a UNet or Attention UNet");
  fs::path sg_manifest, sg_val, sg_ckpt;
  std::string variant;
  sg_train->add_option("--variant", variant, "unet | attention")
      ->check(CLI::IsMember({"unet", "attention", "attention_unet"}));
  sg_train->add_option("--manifest", sg_manifest, "training manifest (default from config)");
  sg_train->add_option("--val", sg_val, "validation manifest (default: 20% split)");
  sg_train->add_option("--checkpoint", sg_ckpt, "checkpoint to write (default from config)");
  bind(sg_train, "segment", [&] {
    auto c = resolve(g);
    if (!variant.empty()) c.segmentation.variant = segmentation::parse_variant(variant);
    const fs::path manifest = sg_manifest.empty() ? c.manifest : sg_manifest;
    require(!manifest.empty(), "no training manifest given");
    auto [train, val] = pipeline::train_val(manifest, sg_val, c.seed);
    const fs::path ckpt = !sg_ckpt.empty() ? sg_ckpt
                          : !c.segmentation_checkpoint.empty() ? c.segmentation_checkpoint
                                                               : c.out_dir / "segmentation.pt";
    const auto result = segmentation::train_segmenter(train, val, c.segmentation,
                                                      c.segmentation_train, ckpt,
                                                      ckpt.parent_path() / "segmentation_history.csv");
    const auto& last = result.history.back();
    std::cout << "val mIoU " << csv::format(last.val_miou, 4) << " -> " << ckpt.string() << '\n';
  });

  auto* sg_run = segment->add_subcommand("run", "segment a directory of IR frames");
  fs::path sg_in;
  sg_run->add_option("--checkpoint", sg_ckpt, "segmenter checkpoint");
  sg_run->add_option("--in", sg_in, "IR frame directory")->required();
  bind(sg_run, "segment", [&] {
    const auto c = resolve(g);
    const fs::path ckpt = sg_ckpt.empty() ? c.segmentation_checkpoint : sg_ckpt;
    if (!fs::is_regular_file(ckpt)) {
      fail(ErrorKind::kCheckpointNotFound, "checkpoint not found: segmentation (" + ckpt.string() + ")");
    }
    const fs::path out = out_or(g, "masks");
    pipeline::segment_directory(segmentation::Segmenter::load(ckpt), sg_in, out);
    std::cout << "masks -> " << out.string() << '\n';
  });

  // -- characterize --------------------------------------------------------
  auto* characterize = app.add_subcommand("characterize", "flame length and area from masks");
  fs::path masks_dir;
  double ppm = 0.0, ref_px = 0.0, ref_m = 0.0;
  std::optional<double> nozzle_x, nozzle_y;
  characterize->add_option("--masks", masks_dir, "mask directory")->required()->check(CLI::ExistingDirectory);
  characterize->add_option("--ppm", ppm, "pixels per metre");
  characterize->add_option("--ref-px", ref_px, "reference distance in pixels");
  characterize->add_option("--ref-m", ref_m, "reference distance in metres");
  characterize->add_option("--nozzle-x", nozzle_x, "nozzle x in mask pixels");
  characterize->add_option("--nozzle-y", nozzle_y, "nozzle y in mask pixels");
  bind(characterize, "characterize", [&] {
    auto c = resolve(g);
    if (ppm > 0.0) c.pixels_per_metric = ppm;
    if (ref_px > 0.0 || ref_m > 0.0) {
      c.pixels_per_metric = 0.0;
      c.reference_distance_px = ref_px;
      c.reference_distance_m = ref_m;
    }
    if (nozzle_x) c.nozzle.x = *nozzle_x;
    if (nozzle_y) c.nozzle.y = *nozzle_y;
    const auto rows = characterization::characterize_directory(masks_dir, {c.nozzle}, c.calibration());
    const fs::path out = out_or(g, "geometry.csv");
    characterization::write_geometry_csv(out, rows);
    std::cout << rows.size() << " frames -> " << out.string() << '\n';
  });

  // -- evaluate ------------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "MAPE/RMSPE report against ground truth");
  std::vector<fs::path> geometry_files;
  fs::path truth_file;
  std::string source = evaluation::kGeneratedIr, model = "default", experiment;
  evaluate->add_option("--geometry", geometry_files, "geometry CSV (repeatable)")->required();
  evaluate->add_option("--truth", truth_file, "ground truth CSV (default from config)");
  evaluate->add_option("--source", source, "source label for rows without one");
  evaluate->add_option("--model", model, "model label for rows without one");
  evaluate->add_option("--experiment", experiment, "experiment label for rows without one");
  bind(evaluate, "evaluate", [&] {
    const auto c = resolve(g);
    const fs::path truth_path = truth_file.empty() ? c.ground_truth : truth_file;
    require(!truth_path.empty(), "no ground truth given");
    evaluation::GeometryResult defaults;
    defaults.source = source;
    defaults.model = model;
    defaults.experiment = experiment.empty() ? c.experiment : experiment;
    std::vector<evaluation::GeometryResult> rows;
    for (const auto& f : geometry_files) {
      const auto part = evaluation::load_geometry(f, defaults);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    const auto report = evaluation::build_report(rows, evaluation::load_ground_truth(truth_path));
    const fs::path out = out_or(g, "report");
    evaluation::write_report(report, out);
    for (const auto& cell : report.length) {
      std::cout << "length " << cell.experiment << '/' << cell.model << '/' << cell.source
                << " MAPE " << csv::format(cell.mape, 3) << " RMSPE " << csv::format(cell.rmspe, 3)
                << '\n';
    }
    for (const auto& cell : report.area) {
      std::cout << "area " << cell.experiment << '/' << cell.model << '/' << cell.source
                << " MAPE " << csv::format(cell.mape, 3) << " RMSPE " << csv::format(cell.rmspe, 3)
                << '\n';
    }
  });

  // -- metrics -------------------------------------------------------------
  auto* metrics_cmd = app.add_subcommand("metrics", "image-quality metrics for one image pair");
  fs::path candidate, reference, mask_a, mask_b;
  metrics_cmd->add_option("--candidate", candidate, "candidate image")->check(CLI::ExistingFile);
  metrics_cmd->add_option("--reference", reference, "reference image")->check(CLI::ExistingFile);
  metrics_cmd->add_option("--mask-a", mask_a, "first mask for Hausdorff")->check(CLI::ExistingFile);
  metrics_cmd->add_option("--mask-b", mask_b, "second mask for Hausdorff")->check(CLI::ExistingFile);
  bind(metrics_cmd, "metrics", [&] {
    require(!candidate.empty() || !mask_a.empty(), "give --candidate/--reference or --mask-a/--mask-b");
    if (!candidate.empty()) {
      require(!reference.empty(), "--reference is required with --candidate");
      print_metrics(metrics::evaluate_pair(read_image(candidate, 3), read_image(reference, 3)));
    }
    if (!mask_a.empty()) {
      require(!mask_b.empty(), "--mask-b is required with --mask-a");
      std::cout << "HD " << csv::format(metrics::hausdorff(read_image(mask_a, 1), read_image(mask_b, 1)))
                << " px\n";
    }
  });

  // -- run -----------------------------------------------------------------
  auto* run = app.add_subcommand("run", "full pipeline: translate, adjust, crop, segment, measure, report");
  fs::path run_manifest, run_tr, run_sg;
  run->add_option("--manifest", run_manifest, "manifest to process (default from config)");
  run->add_option("--translation-checkpoint", run_tr, "translator checkpoint");
  run->add_option("--segmentation-checkpoint", run_sg, "segmenter checkpoint");
  bind(run, "run", [&] {
    auto c = resolve(g);
    if (!run_manifest.empty()) c.manifest = run_manifest;
    if (!run_tr.empty()) c.translation_checkpoint = run_tr;
    if (!run_sg.empty()) c.segmentation_checkpoint = run_sg;
    const auto summary = pipeline::run_pipeline(c);
    std::cout << summary.generated_geometry.size() << " frames characterised -> "
              << summary.out_dir.string() << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  spdlog::set_default_logger(spdlog::stderr_color_st("flarecast"));
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(g.quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    action();
  } catch (const Error& e) {
    std::cerr << "flarecast " << current << ": error (" << to_string(e.kind()) << "): " << e.what()
              << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "flarecast " << current << ": error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

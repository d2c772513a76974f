#include <filesystem>
#include <optional>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "flarecast/brightness.hpp"
#include "flarecast/characterization.hpp"
#include "flarecast/error.hpp"
#include "flarecast/evaluation.hpp"
#include "flarecast/image.hpp"
#include "flarecast/ingest.hpp"
#include "flarecast/metrics.hpp"
#include "flarecast/pipeline.hpp"
#include "flarecast/segmentation.hpp"
#include "flarecast/translation.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace flarecast;

namespace {

// numpy (H, W) or (H, W, C) -> cv::Mat copy.
cv::Mat to_mat(const py::array& input) {
  const py::buffer_info info = input.request();
  if (info.ndim != 2 && info.ndim != 3) throw py::value_error("expected a 2-D or 3-D array");
  const int rows = static_cast<int>(info.shape[0]);
  const int cols = static_cast<int>(info.shape[1]);
  const int channels = info.ndim == 3 ? static_cast<int>(info.shape[2]) : 1;
  int depth;
  if (info.format == py::format_descriptor<std::uint8_t>::format()) {
    depth = CV_8U;
  } else if (info.format == py::format_descriptor<std::uint16_t>::format()) {
    depth = CV_16U;
  } else if (info.format == py::format_descriptor<double>::format()) {
    depth = CV_64F;
  } else if (info.format == py::format_descriptor<float>::format()) {
    depth = CV_32F;
  } else {
    throw py::value_error("unsupported dtype; use uint8, uint16, float32 or float64");
  }
  py::array contiguous = py::array::ensure(input, py::array::c_style);
  cv::Mat view(rows, cols, CV_MAKETYPE(depth, channels), const_cast<void*>(contiguous.data()));
  return view.clone();
}

py::array to_array(const cv::Mat& m) {
  std::vector<py::ssize_t> shape{m.rows, m.cols};
  if (m.channels() > 1) shape.push_back(m.channels());
  const cv::Mat c = m.isContinuous() ? m : m.clone();
  switch (c.depth()) {
    case CV_8U:
      return py::array_t<std::uint8_t>(shape, c.ptr<std::uint8_t>());
    case CV_16U:
      return py::array_t<std::uint16_t>(shape, c.ptr<std::uint16_t>());
    case CV_32F:
      return py::array_t<float>(shape, c.ptr<float>());
    case CV_64F:
      return py::array_t<double>(shape, c.ptr<double>());
    default:
      throw py::value_error("unsupported image depth");
  }
}

py::dict canvas_dict(const ingest::CanvasSpec& c) {
  py::dict d;
  d["width"] = c.width;
  d["height"] = c.height;
  d["pad_left"] = c.pad_left;
  d["pad_right"] = c.pad_right;
  d["pad_top"] = c.pad_top;
  d["pad_bottom"] = c.pad_bottom;
  return d;
}

ingest::CanvasSpec canvas_from(const py::dict& d) {
  ingest::CanvasSpec c;
  c.width = d["width"].cast<int>();
  c.height = d["height"].cast<int>();
  c.pad_left = d["pad_left"].cast<int>();
  c.pad_right = d["pad_right"].cast<int>();
  c.pad_top = d["pad_top"].cast<int>();
  c.pad_bottom = d["pad_bottom"].cast<int>();
  return c;
}

py::dict metric_dict(const std::vector<metrics::MetricValue>& values) {
  py::dict d;
  for (const auto& v : values) d[py::str(std::string(v.label()))] = v.value;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Visible-to-IR flame translation, segmentation and geometry";

  static auto* error_type = new py::exception<Error>(m, "FlarecastError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error_type->ptr())(py::str(e.what()));
      exc.attr("kind") = py::str(std::string(to_string(e.kind())));
      PyErr_SetObject(error_type->ptr(), exc.ptr());
    }
  });

  // metrics
  m.def("entropy", [](const py::array& a) { return metrics::entropy(to_mat(a)); }, py::arg("image"));
  m.def("correlation", [](const py::array& x, const py::array& y) {
    return metrics::correlation(to_mat(x), to_mat(y));
  }, py::arg("x"), py::arg("y"));
  m.def("psnr", [](const py::array& x, const py::array& y) { return metrics::psnr(to_mat(x), to_mat(y)); },
        py::arg("x"), py::arg("y"));
  m.def("ssim", [](const py::array& x, const py::array& y) { return metrics::ssim(to_mat(x), to_mat(y)); },
        py::arg("x"), py::arg("y"));
  m.def("hausdorff", [](const py::array& a, const py::array& b) {
    return metrics::hausdorff(to_mat(a), to_mat(b));
  }, py::arg("mask_a"), py::arg("mask_b"));
  m.def("evaluate_pair", [](const py::array& candidate, const py::array& reference) {
    return metric_dict(metrics::evaluate_pair(to_mat(candidate), to_mat(reference)));
  }, py::arg("candidate"), py::arg("reference"));
  m.attr("PSNR_BENCHMARK_DB") = metrics::kPsnrBenchmarkDb;

  // brightness
  m.def("rms_brightness", [](const py::array& a) { return translation::rms_brightness(to_mat(a)); },
        py::arg("image"));
  m.def("adjust_brightness", [](const py::array& image, double reference_rms, double threshold,
                                double factor) {
    translation::BrightnessPolicy policy;
    policy.threshold = threshold;
    policy.factor = factor;
    const auto r = translation::adjust_brightness(to_mat(image), reference_rms, policy);
    py::dict d;
    d["image"] = to_array(r.image);
    d["applied"] = r.applied;
    d["scale"] = r.scale;
    d["rms_before"] = r.rms_before;
    d["rms_target"] = r.rms_target;
    return d;
  }, py::arg("image"), py::arg("reference_rms"), py::arg("threshold") = 20.0, py::arg("factor") = 1.5);

  // ingest
  m.def("pad_to_canvas", [](const py::array& image, int width, int height) {
    const auto p = ingest::pad_to_canvas(to_mat(image), width, height);
    return py::make_tuple(to_array(p.image), canvas_dict(p.canvas));
  }, py::arg("image"), py::arg("width"), py::arg("height"));
  m.def("remove_padding", [](const py::array& image, const py::dict& canvas) {
    return to_array(ingest::remove_padding(to_mat(image), canvas_from(canvas)));
  }, py::arg("image"), py::arg("canvas"));
  m.def("augment_manifest", [](const fs::path& manifest, std::uint64_t seed, const fs::path& out_dir) {
    const auto out = ingest::augment_manifest(ingest::load_manifest(manifest), seed, out_dir);
    ingest::save_manifest(out, out_dir / "manifest.json");
    return out.entries.size();
  }, py::arg("manifest"), py::arg("seed"), py::arg("out_dir"),
     "Augments every entry, writes out_dir/manifest.json and returns the sample count.");

  // segmentation helpers
  m.def("compute_class_weights", [](const std::vector<double>& freqs, double c) {
    return segmentation::compute_class_weights(freqs, c);
  }, py::arg("frequencies"), py::arg("c") = 1.02);
  m.def("mean_iou", [](const py::array& predicted, const py::array& truth, int num_classes) {
    return segmentation::mean_iou(to_mat(predicted), to_mat(truth), num_classes);
  }, py::arg("predicted"), py::arg("truth"), py::arg("num_classes"));

  // characterization
  m.def("characterize", [](const py::array& mask, double nozzle_x, double nozzle_y,
                           double pixels_per_metric) {
    characterization::CalibrationInfo cal;
    cal.pixels_per_metric = pixels_per_metric;
    const auto g = characterization::characterize(to_mat(mask), {{nozzle_x, nozzle_y}}, cal);
    py::dict d;
    d["length_m"] = g.total_length_m;
    d["area_m2"] = g.area_m2;
    d["topmost"] = py::make_tuple(g.topmost_point.x, g.topmost_point.y);
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : g.contour) pts.emplace_back(p.x, p.y);
    d["contour"] = pts;
    return d;
  }, py::arg("mask"), py::arg("nozzle_x"), py::arg("nozzle_y"), py::arg("pixels_per_metric"));

  // evaluation
  m.def("mape", [](const std::vector<double>& t, const std::vector<double>& p) {
    return evaluation::mape(t, p);
  }, py::arg("truth"), py::arg("predicted"));
  m.def("rmspe", [](const std::vector<double>& t, const std::vector<double>& p) {
    return evaluation::rmspe(t, p);
  }, py::arg("truth"), py::arg("predicted"));
  m.def("error_spread", &evaluation::error_spread, py::arg("mape"), py::arg("rmspe"));

  // models
  py::class_<translation::Translator>(m, "Translator")
      .def_static("load", &translation::Translator::load, py::arg("checkpoint"))
      .def("save", &translation::Translator::save, py::arg("checkpoint"))
      .def("translate", [](const translation::Translator& t, const py::array& visible) {
        return to_array(t.translate(to_mat(visible)));
      }, py::arg("visible"))
      .def_property_readonly("corpus_mean_ir_rms", &translation::Translator::corpus_mean_ir_rms)
      .def_property_readonly("manifest_sha256", &translation::Translator::manifest_sha256);

  py::class_<segmentation::Segmenter>(m, "Segmenter")
      .def_static("load", &segmentation::Segmenter::load, py::arg("checkpoint"))
      .def("save", &segmentation::Segmenter::save, py::arg("checkpoint"))
      .def("segment", [](const segmentation::Segmenter& s, const py::array& ir) {
        return to_array(s.segment(to_mat(ir)));
      }, py::arg("ir"))
      .def("attention_maps", [](const segmentation::Segmenter& s, const py::array& ir) {
        std::vector<py::array> out;
        for (const auto& a : s.attention_maps(to_mat(ir))) out.push_back(to_array(a));
        return out;
      }, py::arg("ir"))
      .def_property_readonly("variant", [](const segmentation::Segmenter& s) {
        return std::string(segmentation::to_string(s.spec().variant));
      })
      .def_property_readonly("parameter_count", &segmentation::Segmenter::parameter_count);

  // pipeline
  m.def("generate_synthetic_dataset", [](const fs::path& out_dir, int n, std::uint64_t seed) {
    const auto ds = pipeline::generate_synthetic_dataset(pipeline::SyntheticSceneSpec{}, n, seed, out_dir);
    py::dict d;
    d["directory"] = ds.directory;
    d["manifest"] = ds.manifest;
    d["ground_truth"] = ds.ground_truth;
    d["config"] = ds.config;
    return d;
  }, py::arg("out_dir"), py::arg("n") = 200, py::arg("seed") = 0);

  m.def("train_translation", [](const fs::path& config_path) {
    const auto c = pipeline::load_config(config_path);
    const auto [train, val] = pipeline::train_val(c.manifest, {}, c.seed);
    translation::TranslationTrainResult r;
    {
      py::gil_scoped_release release;
      r = translation::train_translator(train, val, c.generator, c.discriminator,
                                        c.translation_train, c.translation_checkpoint);
    }
    py::dict d;
    d["checkpoint"] = r.checkpoint;
    d["best_val_l1"] = r.best_val_l1;
    std::vector<double> history;
    for (const auto& h : r.history) history.push_back(h.val_l1);
    d["val_l1"] = history;
    return d;
  }, py::arg("config"), "Trains the translator described by a pipeline config.");

  m.def("train_segmentation", [](const fs::path& config_path, std::optional<std::string> variant) {
    auto c = pipeline::load_config(config_path);
    if (variant) c.segmentation.variant = segmentation::parse_variant(*variant);
    const auto [train, val] = pipeline::train_val(c.manifest, {}, c.seed);
    segmentation::SegTrainResult r;
    {
      py::gil_scoped_release release;
      r = segmentation::train_segmenter(train, val, c.segmentation, c.segmentation_train,
                                        c.segmentation_checkpoint);
    }
    py::dict d;
    d["checkpoint"] = r.checkpoint;
    d["class_weights"] = r.class_weights;
    std::vector<double> miou;
    for (const auto& h : r.history) miou.push_back(h.val_miou);
    d["val_miou"] = miou;
    return d;
  }, py::arg("config"), py::arg("variant") = py::none(),
     "Trains the segmenter described by a pipeline config.");

  m.def("run_pipeline", [](const fs::path& config_path, std::optional<fs::path> out_dir) {
    auto c = pipeline::load_config(config_path);
    if (out_dir) c.out_dir = *out_dir;
    const auto s = pipeline::run_pipeline(c);
    py::dict d;
    d["out_dir"] = s.out_dir;
    d["frames"] = s.generated_geometry.size();
    py::list length;
    for (const auto& cell : s.report.length) {
      py::dict row;
      row["experiment"] = cell.experiment;
      row["model"] = cell.model;
      row["source"] = cell.source;
      row["mape"] = cell.mape;
      row["rmspe"] = cell.rmspe;
      length.append(row);
    }
    d["length_errors"] = length;
    return d;
  }, py::arg("config"), py::arg("out_dir") = py::none());
}

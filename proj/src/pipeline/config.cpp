#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "flarecast/error.hpp"
#include "flarecast/pipeline.hpp"

namespace fs = std::filesystem;

namespace flarecast::pipeline {

translation::GeneratorSpec desk_generator(int width, int height) {
  int depth = 0;
  while (depth < 6 && width % (2 << depth) == 0 && height % (2 << depth) == 0) ++depth;
  require(depth >= 2, "desk generator needs a canvas divisible by 4");
  const std::vector<int> ladder{16, 32, 64, 64, 64, 64};
  translation::GeneratorSpec g;
  g.encoder_filters.assign(ladder.begin(), ladder.begin() + depth);
  g.decoder_filters.clear();
  for (int j = 0; j < depth - 1; ++j) g.decoder_filters.push_back(ladder[depth - 2 - j]);
  g.decoder_filters.push_back(3);
  g.dropout_stages = 0;
  g.width = width;
  g.height = height;
  return g;
}

translation::DiscriminatorSpec desk_discriminator() {
  translation::DiscriminatorSpec d;
  d.filters = {16, 32, 64};
  d.stride_one_stages = 1;
  return d;
}

translation::TranslationTrainConfig desk_translation_train() {
  translation::TranslationTrainConfig c;
  c.epochs = 100;
  c.batch_size = 4;
  c.lr_discriminator = 2e-3;
  c.lr_generator = 2e-4;
  c.max_steps = 200;
  c.eval_every = 20;
  return c;
}

segmentation::SegmentationModelSpec desk_segmenter(int num_classes) {
  segmentation::SegmentationModelSpec s;
  s.filters = {16, 32, 64};
  s.num_classes = num_classes;
  return s;
}

segmentation::SegTrainConfig desk_segmentation_train() {
  segmentation::SegTrainConfig c;
  c.lr = 3e-3;
  c.max_steps = 200;
  c.eval_every = 20;
  return c;
}

characterization::CalibrationInfo PipelineConfig::calibration() const {
  if (pixels_per_metric > 0.0) {
    characterization::CalibrationInfo info;
    info.pixels_per_metric = pixels_per_metric;
    info.source = "configured pixels_per_metric";
    return info;
  }
  require(reference_distance_px > 0.0 && reference_distance_m > 0.0,
          "characterization needs pixels_per_metric or reference_distance_px/_m");
  return characterization::calibrate(reference_distance_px, reference_distance_m,
                                     "thermocouple reference");
}

namespace {

class Section {
 public:
  Section(const toml::table* table, std::string name, fs::path base)
      : table_(table), name_(std::move(name)), base_(std::move(base)) {}

  template <typename T>
  void get(const char* key, T& out) {
    const toml::node* node = find(key);
    if (!node) return;
    if constexpr (std::is_same_v<T, std::string>) {
      out = expect(node->value<std::string>(), key);
    } else if constexpr (std::is_same_v<T, fs::path>) {
      const fs::path p = expect(node->value<std::string>(), key);
      out = p.is_absolute() ? p : base_ / p;
    } else if constexpr (std::is_same_v<T, bool>) {
      out = expect(node->value<bool>(), key);
    } else if constexpr (std::is_floating_point_v<T>) {
      out = expect(node->value<double>(), key);
    } else if constexpr (std::is_integral_v<T>) {
      const auto v = expect(node->value<std::int64_t>(), key);
      if constexpr (std::is_unsigned_v<T>) require(v >= 0, where(key) + " must be non-negative");
      out = static_cast<T>(v);
    } else if constexpr (std::is_same_v<T, cv::Point2d>) {
      const auto values = numbers(node, key);
      require(values.size() == 2, where(key) + " must be [x, y]");
      out = {values[0], values[1]};
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      out = numbers(node, key);
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      out.clear();
      for (double v : numbers(node, key)) out.push_back(static_cast<int>(v));
    } else if constexpr (std::is_same_v<T, std::vector<bool>>) {
      const auto* arr = node->as_array();
      require(arr != nullptr, where(key) + " must be an array");
      out.clear();
      for (const auto& item : *arr) out.push_back(expect(item.value<bool>(), key));
    }
  }

  /// Rejects keys no getter asked for.
  void finish() const {
    if (!table_) return;
    for (const auto& [key, node] : *table_) {
      if (!used_.count(std::string(key.str())) && !node.is_table()) {
        fail(ErrorKind::kValidation, "unknown config key " + where(std::string(key.str()).c_str()));
      }
    }
  }

 private:
  const toml::node* find(const char* key) {
    if (!table_) return nullptr;
    used_.insert(key);
    return table_->get(key);
  }

  std::string where(const char* key) const {
    return name_.empty() ? std::string(key) : name_ + "." + key;
  }

  template <typename T>
  T expect(std::optional<T> v, const char* key) const {
    if (!v) fail(ErrorKind::kValidation, "config key " + where(key) + " has the wrong type");
    return *v;
  }

  std::vector<double> numbers(const toml::node* node, const char* key) const {
    const auto* arr = node->as_array();
    require(arr != nullptr, where(key) + " must be an array");
    std::vector<double> out;
    for (const auto& item : *arr) out.push_back(expect(item.value<double>(), key));
    return out;
  }

  const toml::table* table_;
  std::string name_;
  fs::path base_;
  std::set<std::string> used_;
};

}  // namespace

PipelineConfig load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) fail(ErrorKind::kIo, "config file not found: " + path.string());
  toml::table root;
  try {
    root = toml::parse_file(path.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << path.string() << ":" << e.source().begin.line << ": " << e.description();
    fail(ErrorKind::kValidation, msg.str());
  }
  const fs::path base = fs::absolute(path).parent_path();
  PipelineConfig c;

  static const std::set<std::string> tables{"ingest",           "translation", "segmentation",
                                            "characterization", "evaluation",  "synth"};
  for (const auto& [key, node] : root) {
    if (node.is_table() && !tables.count(std::string(key.str()))) {
      fail(ErrorKind::kValidation, "unknown config table [" + std::string(key.str()) + "]");
    }
  }

  Section top(&root, "", base);
  top.get("seed", c.seed);
  top.get("out", c.out_dir);
  top.finish();

  Section ingest(root["ingest"].as_table(), "ingest", base);
  ingest.get("manifest", c.manifest);
  ingest.finish();

  Section tr(root["translation"].as_table(), "translation", base);
  std::string reference = std::string(translation::to_string(c.brightness.reference_mode));
  tr.get("checkpoint", c.translation_checkpoint);
  tr.get("brightness_reference", reference);
  c.brightness.reference_mode = translation::parse_reference_mode(reference);
  tr.get("brightness_threshold", c.brightness.threshold);
  tr.get("brightness_factor", c.brightness.factor);
  tr.get("width", c.generator.width);
  tr.get("height", c.generator.height);
  tr.get("encoder_filters", c.generator.encoder_filters);
  tr.get("decoder_filters", c.generator.decoder_filters);
  tr.get("skips", c.generator.skips);
  tr.get("dropout_stages", c.generator.dropout_stages);
  tr.get("discriminator_filters", c.discriminator.filters);
  tr.get("discriminator_stride_one_stages", c.discriminator.stride_one_stages);
  tr.get("epochs", c.translation_train.epochs);
  tr.get("batch_size", c.translation_train.batch_size);
  tr.get("lr_generator", c.translation_train.lr_generator);
  tr.get("lr_discriminator", c.translation_train.lr_discriminator);
  tr.get("l1_weight", c.translation_train.l1_weight);
  tr.get("beta1", c.translation_train.beta1);
  tr.get("beta2", c.translation_train.beta2);
  tr.get("max_steps", c.translation_train.max_steps);
  tr.get("eval_every", c.translation_train.eval_every);
  tr.finish();

  Section seg(root["segmentation"].as_table(), "segmentation", base);
  std::string variant = std::string(segmentation::to_string(c.segmentation.variant));
  seg.get("checkpoint", c.segmentation_checkpoint);
  seg.get("variant", variant);
  c.segmentation.variant = segmentation::parse_variant(variant);
  seg.get("filters", c.segmentation.filters);
  seg.get("num_classes", c.segmentation.num_classes);
  seg.get("lr", c.segmentation_train.lr);
  seg.get("weight_decay", c.segmentation_train.weight_decay);
  seg.get("batch_size", c.segmentation_train.batch_size);
  seg.get("max_epochs", c.segmentation_train.max_epochs);
  seg.get("patience", c.segmentation_train.patience);
  seg.get("class_weight_c", c.segmentation_train.class_weight_c);
  seg.get("max_steps", c.segmentation_train.max_steps);
  seg.get("eval_every", c.segmentation_train.eval_every);
  seg.finish();

  Section ch(root["characterization"].as_table(), "characterization", base);
  ch.get("pixels_per_metric", c.pixels_per_metric);
  ch.get("reference_distance_px", c.reference_distance_px);
  ch.get("reference_distance_m", c.reference_distance_m);
  ch.get("nozzle", c.nozzle);
  ch.finish();

  Section ev(root["evaluation"].as_table(), "evaluation", base);
  ev.get("ground_truth", c.ground_truth);
  ev.get("experiment", c.experiment);
  ev.get("model", c.model);
  ev.finish();

  Section sy(root["synth"].as_table(), "synth", base);
  sy.get("count", c.synth_count);
  sy.get("content_width", c.synth.content_width);
  sy.get("content_height", c.synth.content_height);
  sy.get("canvas_width", c.synth.canvas_width);
  sy.get("canvas_height", c.synth.canvas_height);
  sy.get("nozzle", c.synth.nozzle);
  sy.get("a_min", c.synth.a_min);
  sy.get("a_max", c.synth.a_max);
  sy.get("b_min", c.synth.b_min);
  sy.get("b_max", c.synth.b_max);
  sy.get("pixels_per_metric", c.synth.pixels_per_metric);
  sy.get("background", c.synth.background);
  sy.get("zone_radii", c.synth.zone_radii);
  sy.get("colormap", c.synth.colormap);
  sy.get("visible_noise", c.synth.visible_noise);
  sy.finish();

  c.translation_train.seed = c.seed;
  c.segmentation_train.seed = c.seed;
  return c;
}

namespace {

template <typename T>
toml::array to_array(const std::vector<T>& values) {
  toml::array arr;
  for (const auto& v : values) {
    if constexpr (std::is_same_v<T, bool>) {
      arr.push_back(static_cast<bool>(v));
    } else if constexpr (std::is_integral_v<T>) {
      arr.push_back(static_cast<std::int64_t>(v));
    } else {
      arr.push_back(static_cast<double>(v));
    }
  }
  return arr;
}

toml::array point(cv::Point2d p) { return toml::array{p.x, p.y}; }

}  // namespace

void save_config(const PipelineConfig& c, const fs::path& path) {
  const fs::path base = fs::absolute(path).parent_path();
  auto rel = [&](const fs::path& p) -> std::string {
    if (p.empty()) return "";
    const fs::path abs = fs::absolute(p).lexically_normal();
    const fs::path r = abs.lexically_relative(base);
    if (!r.empty() && *r.begin() != "..") return r.generic_string();
    return abs.generic_string();
  };

  toml::table root;
  root.insert("seed", static_cast<std::int64_t>(c.seed));
  root.insert("out", rel(c.out_dir));

  root.insert("ingest", toml::table{{"manifest", rel(c.manifest)}});

  const auto& t = c.translation_train;
  root.insert("translation",
              toml::table{{"checkpoint", rel(c.translation_checkpoint)},
                          {"brightness_reference",
                           std::string(translation::to_string(c.brightness.reference_mode))},
                          {"brightness_threshold", c.brightness.threshold},
                          {"brightness_factor", c.brightness.factor},
                          {"width", c.generator.width},
                          {"height", c.generator.height},
                          {"encoder_filters", to_array(c.generator.encoder_filters)},
                          {"decoder_filters", to_array(c.generator.decoder_filters)},
                          {"skips", to_array(c.generator.skips)},
                          {"dropout_stages", c.generator.dropout_stages},
                          {"discriminator_filters", to_array(c.discriminator.filters)},
                          {"discriminator_stride_one_stages", c.discriminator.stride_one_stages},
                          {"epochs", t.epochs},
                          {"batch_size", t.batch_size},
                          {"lr_generator", t.lr_generator},
                          {"lr_discriminator", t.lr_discriminator},
                          {"l1_weight", t.l1_weight},
                          {"beta1", t.beta1},
                          {"beta2", t.beta2},
                          {"max_steps", static_cast<std::int64_t>(t.max_steps)},
                          {"eval_every", static_cast<std::int64_t>(t.eval_every)}});

  const auto& s = c.segmentation_train;
  root.insert("segmentation",
              toml::table{{"checkpoint", rel(c.segmentation_checkpoint)},
                          {"variant", std::string(segmentation::to_string(c.segmentation.variant))},
                          {"filters", to_array(c.segmentation.filters)},
                          {"num_classes", c.segmentation.num_classes},
                          {"lr", s.lr},
                          {"weight_decay", s.weight_decay},
                          {"batch_size", s.batch_size},
                          {"max_epochs", s.max_epochs},
                          {"patience", s.patience},
                          {"class_weight_c", s.class_weight_c},
                          {"max_steps", static_cast<std::int64_t>(s.max_steps)},
                          {"eval_every", static_cast<std::int64_t>(s.eval_every)}});

  toml::table ch{{"nozzle", point(c.nozzle)}};
  if (c.pixels_per_metric > 0.0) ch.insert("pixels_per_metric", c.pixels_per_metric);
  if (c.reference_distance_px > 0.0) {
    ch.insert("reference_distance_px", c.reference_distance_px);
    ch.insert("reference_distance_m", c.reference_distance_m);
  }
  root.insert("characterization", std::move(ch));

  toml::table ev{{"ground_truth", rel(c.ground_truth)}, {"experiment", c.experiment}};
  if (!c.model.empty()) ev.insert("model", c.model);
  root.insert("evaluation", std::move(ev));

  const auto& y = c.synth;
  root.insert("synth", toml::table{{"count", c.synth_count},
                                   {"content_width", y.content_width},
                                   {"content_height", y.content_height},
                                   {"canvas_width", y.canvas_width},
                                   {"canvas_height", y.canvas_height},
                                   {"nozzle", point(y.nozzle)},
                                   {"a_min", y.a_min},
                                   {"a_max", y.a_max},
                                   {"b_min", y.b_min},
                                   {"b_max", y.b_max},
                                   {"pixels_per_metric", y.pixels_per_metric},
                                   {"background", y.background},
                                   {"zone_radii", to_array(y.zone_radii)},
                                   {"colormap", y.colormap},
                                   {"visible_noise", y.visible_noise}});

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << toml::toml_formatter(root, toml::toml_formatter::default_flags |
                                         toml::format_flags::relaxed_float_precision)
      << '\n';
}

}  // namespace flarecast::pipeline

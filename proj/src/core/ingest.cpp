#include "flarecast/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>
#include <opencv2/imgproc.hpp>

#include "flarecast/csv.hpp"
#include "flarecast/error.hpp"
#include "flarecast/image.hpp"
#include "flarecast/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace flarecast::ingest {

namespace {

std::vector<FrameRecord> ordered_by_index(std::span<const FrameRecord> stream, const char* role) {
  if (stream.empty()) fail(ErrorKind::kEmptyStream, std::string("empty stream: ") + role);
  std::vector<FrameRecord> frames(stream.begin(), stream.end());
  std::stable_sort(frames.begin(), frames.end(),
                   [](const FrameRecord& a, const FrameRecord& b) { return a.index < b.index; });
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].index == frames[i - 1].index) {
      fail(ErrorKind::kValidation, std::string("duplicate frame index ") +
                                       std::to_string(frames[i].index) + " in " + role + " stream");
    }
    if (!(frames[i].timestamp > frames[i - 1].timestamp)) {
      fail(ErrorKind::kValidation, std::string("non-monotonic timestamps in ") + role +
                                       " stream at index " + std::to_string(frames[i].index));
    }
  }
  return frames;
}

}  // namespace

std::vector<FrameRecord> load_stream_index(const fs::path& location, const std::string& source_id) {
  const fs::path csv_path = fs::is_directory(location) ? location / "index.csv" : location;
  const auto table = csv::read(csv_path);
  const std::string ctx = csv_path.string();
  const int c_index = table.require_column("index", ctx);
  const int c_time = table.require_column("timestamp_seconds", ctx);
  const int c_file = table.require_column("filename", ctx);
  std::vector<FrameRecord> frames;
  frames.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    FrameRecord frame;
    frame.source_id = source_id;
    frame.index = csv::to_int(row[c_index], ctx);
    require(frame.index >= 0, ctx + ": negative frame index");
    frame.timestamp = csv::to_double(row[c_time], ctx);
    frame.path = fs::absolute(csv_path.parent_path() / row[c_file]).lexically_normal();
    frames.push_back(std::move(frame));
  }
  return frames;
}

double default_pairing_tolerance(std::span<const FrameRecord> stream) {
  const auto frames = ordered_by_index(stream, "reference");
  if (frames.size() < 2) return 0.0;
  std::vector<double> periods;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    periods.push_back(frames[i].timestamp - frames[i - 1].timestamp);
  }
  std::nth_element(periods.begin(), periods.begin() + periods.size() / 2, periods.end());
  return 0.5 * periods[periods.size() / 2];
}

std::vector<PairedSample> pair_by_timestamp(std::span<const FrameRecord> reference,
                                            std::span<const FrameRecord> candidates,
                                            double tolerance, double candidate_offset) {
  require(tolerance >= 0.0 && std::isfinite(tolerance), "pairing tolerance must be >= 0");
  const auto refs = ordered_by_index(reference, "reference");
  const auto cands = ordered_by_index(candidates, "candidate");

  std::vector<double> times(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) times[i] = cands[i].timestamp + candidate_offset;

  std::vector<PairedSample> pairs;
  for (const auto& ref : refs) {
    const auto upper = std::lower_bound(times.begin(), times.end(), ref.timestamp);
    auto best = static_cast<std::size_t>(upper - times.begin());
    if (best == times.size()) {
      best = times.size() - 1;
    } else if (best > 0 && ref.timestamp - times[best - 1] <= times[best] - ref.timestamp) {
      --best;
    }
    const double dt = std::abs(times[best] - ref.timestamp);
    if (dt > tolerance) continue;
    PairedSample pair;
    pair.visible = cands[best];
    pair.ir = ref;
    pair.time_offset = dt;
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

Affine SimilarityTransform::affine() const {
  const double a = scale * std::cos(rotation);
  const double b = scale * std::sin(rotation);
  return Affine(a, -b, tx, b, a, ty);
}

cv::Point2d SimilarityTransform::apply(cv::Point2d p) const {
  const double a = scale * std::cos(rotation);
  const double b = scale * std::sin(rotation);
  return {a * p.x - b * p.y + tx, b * p.x + a * p.y + ty};
}

SimilarityTransform solve_similarity(std::span<const cv::Point2d> from,
                                     std::span<const cv::Point2d> to) {
  require(from.size() == to.size(), "reference point counts differ: " +
                                        std::to_string(from.size()) + " vs " +
                                        std::to_string(to.size()));
  if (from.size() < 2) {
    fail(ErrorKind::kInsufficientReferences,
         "insufficient references: need at least 2 point pairs, got " + std::to_string(from.size()));
  }
  const auto n = static_cast<double>(from.size());
  cv::Point2d mf(0, 0);
  cv::Point2d mt(0, 0);
  for (std::size_t i = 0; i < from.size(); ++i) {
    mf += from[i];
    mt += to[i];
  }
  mf *= 1.0 / n;
  mt *= 1.0 / n;

  double spread = 0.0;
  double dot = 0.0;
  double cross = 0.0;
  double target_spread = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    const cv::Point2d p = from[i] - mf;
    const cv::Point2d q = to[i] - mt;
    spread += p.dot(p);
    target_spread += q.dot(q);
    dot += p.x * q.x + p.y * q.y;
    cross += p.x * q.y - p.y * q.x;
  }
  if (spread <= 1e-12 * n || target_spread <= 1e-12 * n) {
    fail(ErrorKind::kDegenerateGeometry, "degenerate reference geometry: coincident points");
  }
  const double a = dot / spread;
  const double b = cross / spread;
  SimilarityTransform t;
  t.scale = std::hypot(a, b);
  if (t.scale <= 1e-12) {
    fail(ErrorKind::kDegenerateGeometry, "degenerate reference geometry: zero scale");
  }
  t.rotation = std::atan2(b, a);
  t.tx = mt.x - (a * mf.x - b * mf.y);
  t.ty = mt.y - (b * mf.x + a * mf.y);
  return t;
}

AlignmentResult align_frames(const PairedSample& sample, std::span<const cv::Point2d> visible_points,
                             std::span<const cv::Point2d> ir_points) {
  AlignmentResult result;
  result.transform = solve_similarity(visible_points, ir_points);
  result.sample = sample;
  result.sample.alignment = result.transform.affine();
  result.residuals.reserve(visible_points.size());
  for (std::size_t i = 0; i < visible_points.size(); ++i) {
    const cv::Point2d d = result.transform.apply(visible_points[i]) - ir_points[i];
    result.residuals.push_back(std::hypot(d.x, d.y));
  }
  return result;
}

cv::Mat warp_visible_to_ir(const PairedSample& sample) {
  require(!sample.visible.image.empty() && !sample.ir.image.empty(),
          "warp_visible_to_ir: both images must be loaded");
  const Affine& m = sample.alignment;
  require(std::abs(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) > 1e-12,
          "alignment transform is not invertible");
  cv::Mat out;
  cv::warpAffine(sample.visible.image, out, cv::Mat(m), sample.ir.image.size(), cv::INTER_LINEAR,
                 cv::BORDER_CONSTANT, cv::Scalar::all(0));
  return out;
}

PaddedImage pad_to_canvas(const cv::Mat& image, int width, int height) {
  require(!image.empty(), "pad_to_canvas: empty image");
  require(width > 0 && height > 0, "pad_to_canvas: canvas dimensions must be positive");
  if (image.cols > width || image.rows > height) {
    fail(ErrorKind::kCanvasTooSmall,
         "canvas too small: image " + std::to_string(image.cols) + "x" + std::to_string(image.rows) +
             " does not fit canvas " + std::to_string(width) + "x" + std::to_string(height));
  }
  CanvasSpec canvas;
  canvas.width = width;
  canvas.height = height;
  canvas.pad_left = (width - image.cols) / 2;
  canvas.pad_right = width - image.cols - canvas.pad_left;
  canvas.pad_top = (height - image.rows) / 2;
  canvas.pad_bottom = height - image.rows - canvas.pad_top;
  PaddedImage out;
  out.canvas = canvas;
  cv::copyMakeBorder(image, out.image, canvas.pad_top, canvas.pad_bottom, canvas.pad_left,
                     canvas.pad_right, cv::BORDER_CONSTANT, cv::Scalar::all(0));
  return out;
}

cv::Mat remove_padding(const cv::Mat& image, const CanvasSpec& canvas) {
  if (image.cols != canvas.width || image.rows != canvas.height) {
    fail(ErrorKind::kDimensionMismatch,
         "remove_padding: image is " + std::to_string(image.cols) + "x" +
             std::to_string(image.rows) + ", canvas is " + std::to_string(canvas.width) + "x" +
             std::to_string(canvas.height));
  }
  require(canvas.pad_left >= 0 && canvas.pad_right >= 0 && canvas.pad_top >= 0 &&
              canvas.pad_bottom >= 0 && canvas.content_width() > 0 && canvas.content_height() > 0,
          "remove_padding: invalid pad amounts");
  return image(cv::Rect(canvas.pad_left, canvas.pad_top, canvas.content_width(),
                        canvas.content_height()))
      .clone();
}

namespace {

cv::Mat mirrored(const cv::Mat& image) {
  cv::Mat out;
  cv::flip(image, out, 1);
  return out;
}

cv::Mat rotated(const cv::Mat& image, double degrees) {
  const cv::Point2f centre(static_cast<float>(image.cols - 1) * 0.5f,
                           static_cast<float>(image.rows - 1) * 0.5f);
  const cv::Mat m = cv::getRotationMatrix2D(centre, degrees, 1.0);
  cv::Mat out;
  cv::warpAffine(image, out, m, image.size(), cv::INTER_LINEAR, cv::BORDER_CONSTANT,
                 cv::Scalar::all(0));
  return out;
}

PairedSample variant(const PairedSample& src, cv::Mat visible, cv::Mat ir) {
  PairedSample out = src;
  out.visible.image = std::move(visible);
  out.ir.image = std::move(ir);
  out.visible.path.clear();
  out.ir.path.clear();
  return out;
}

}  // namespace

std::vector<PairedSample> augment(const PairedSample& sample, std::uint64_t seed,
                                  const AugmentConfig& config) {
  const cv::Mat& vis = sample.visible.image;
  const cv::Mat& ir = sample.ir.image;
  require(!vis.empty() && !ir.empty(), "augment: both images must be loaded");
  require(vis.size() == ir.size(), "augment: visible and IR images must share dimensions");
  require(config.random_crops >= 0, "augment: random_crops must be >= 0");
  require(config.crop_min_fraction > 0.0 && config.crop_min_fraction <= config.crop_max_fraction &&
              config.crop_max_fraction <= 1.0,
          "augment: crop fractions must satisfy 0 < min <= max <= 1");

  std::vector<PairedSample> out;
  out.reserve(config.variants());
  out.push_back(variant(sample, vis.clone(), ir.clone()));
  const cv::Mat vis_m = mirrored(vis);
  const cv::Mat ir_m = mirrored(ir);
  out.push_back(variant(sample, vis_m, ir_m));
  for (double angle : config.rotations_deg) {
    out.push_back(variant(sample, rotated(vis, angle), rotated(ir, angle)));
  }
  for (double angle : config.rotations_deg) {
    out.push_back(variant(sample, rotated(vis_m, angle), rotated(ir_m, angle)));
  }

  Rng rng(seed);
  const int w = vis.cols;
  const int h = vis.rows;
  for (int k = 0; k < config.random_crops; ++k) {
    const double fw = rng.uniform(config.crop_min_fraction, config.crop_max_fraction);
    const double fh = rng.uniform(config.crop_min_fraction, config.crop_max_fraction);
    const int cw = std::clamp(static_cast<int>(std::lround(w * fw)), 1, w);
    const int ch = std::clamp(static_cast<int>(std::lround(h * fh)), 1, h);
    const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(w - cw + 1)));
    const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(h - ch + 1)));
    const cv::Rect roi(x0, y0, cw, ch);
    out.push_back(variant(sample, pad_to_canvas(vis(roi), w, h).image,
                          pad_to_canvas(ir(roi), w, h).image));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest serialisation

namespace {

json canvas_to_json(const CanvasSpec& c) {
  return {{"width", c.width},         {"height", c.height},   {"pad_left", c.pad_left},
          {"pad_right", c.pad_right}, {"pad_top", c.pad_top}, {"pad_bottom", c.pad_bottom}};
}

CanvasSpec canvas_from_json(const json& j) {
  CanvasSpec c;
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.pad_left = j.value("pad_left", 0);
  c.pad_right = j.value("pad_right", 0);
  c.pad_top = j.value("pad_top", 0);
  c.pad_bottom = j.value("pad_bottom", 0);
  return c;
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  if (p.empty()) return {};
  if (base.empty()) return p.generic_string();
  const fs::path abs = fs::absolute(p).lexically_normal();
  const fs::path rel = abs.lexically_relative(base);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return abs.generic_string();
}

fs::path resolve(const std::string& p, const fs::path& base) {
  if (p.empty()) return {};
  fs::path path(p);
  if (path.is_absolute() || base.empty()) return path.lexically_normal();
  return (base / path).lexically_normal();
}

json to_json(const DatasetManifest& m, const fs::path& base) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    json j = {{"id", e.id},
              {"visible", relative_to(e.visible, base)},
              {"ir", relative_to(e.ir, base)},
              {"visible_index", e.visible_index},
              {"ir_index", e.ir_index},
              {"visible_timestamp", e.visible_timestamp},
              {"ir_timestamp", e.ir_timestamp},
              {"time_offset", e.time_offset},
              {"alignment",
               {e.alignment(0, 0), e.alignment(0, 1), e.alignment(0, 2), e.alignment(1, 0),
                e.alignment(1, 1), e.alignment(1, 2)}}};
    if (!e.mask.empty()) j["mask"] = relative_to(e.mask, base);
    if (!e.generated.empty()) j["generated"] = relative_to(e.generated, base);
    if (!e.experiment.empty()) j["experiment"] = e.experiment;
    entries.push_back(std::move(j));
  }
  return {{"entries", std::move(entries)},
          {"split_label", m.split_label},
          {"seed", m.seed},
          {"canvas", m.canvas ? canvas_to_json(*m.canvas) : json(nullptr)}};
}

}  // namespace

std::string manifest_json(const DatasetManifest& manifest) {
  return to_json(manifest, {}).dump(2);
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = fs::absolute(path).parent_path().lexically_normal();
  fs::create_directories(base);
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write manifest " + path.string());
  out << to_json(manifest, base).dump(2) << '\n';
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kValidation, path.string() + ": " + e.what());
  }
  const fs::path base = fs::absolute(path).parent_path().lexically_normal();
  DatasetManifest m;
  try {
    m.split_label = j.value("split_label", "all");
    m.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("canvas") && !j["canvas"].is_null()) m.canvas = canvas_from_json(j["canvas"]);
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.id = je.at("id").get<std::string>();
      e.visible = resolve(je.value("visible", ""), base);
      e.ir = resolve(je.value("ir", ""), base);
      e.mask = resolve(je.value("mask", ""), base);
      e.generated = resolve(je.value("generated", ""), base);
      e.experiment = je.value("experiment", "");
      e.visible_index = je.value("visible_index", std::int64_t{-1});
      e.ir_index = je.value("ir_index", std::int64_t{-1});
      e.visible_timestamp = je.value("visible_timestamp", 0.0);
      e.ir_timestamp = je.value("ir_timestamp", 0.0);
      e.time_offset = je.value("time_offset", 0.0);
      if (je.contains("alignment")) {
        const auto& a = je["alignment"];
        require(a.is_array() && a.size() == 6, path.string() + ": alignment must have 6 values");
        e.alignment = Affine(a[0].get<double>(), a[1].get<double>(), a[2].get<double>(),
                             a[3].get<double>(), a[4].get<double>(), a[5].get<double>());
      }
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::kValidation, path.string() + ": " + e.what());
  }
  return m;
}

DatasetManifest manifest_from_pairs(std::span<const PairedSample> pairs, std::uint64_t seed) {
  DatasetManifest m;
  m.seed = seed;
  for (const auto& p : pairs) {
    ManifestEntry e;
    e.id = "ir" + std::to_string(p.ir.index) + "_vis" + std::to_string(p.visible.index);
    e.visible = p.visible.path;
    e.ir = p.ir.path;
    e.visible_index = p.visible.index;
    e.ir_index = p.ir.index;
    e.visible_timestamp = p.visible.timestamp;
    e.ir_timestamp = p.ir.timestamp;
    e.time_offset = p.time_offset;
    e.alignment = p.alignment;
    m.entries.push_back(std::move(e));
  }
  return m;
}

DatasetManifest augment_manifest(const DatasetManifest& manifest, std::uint64_t seed,
                                 const fs::path& out_dir, const AugmentConfig& config) {
  DatasetManifest out;
  out.split_label = manifest.split_label;
  out.seed = seed;
  out.canvas = manifest.canvas;
  out.entries.reserve(manifest.entries.size() * config.variants());
  for (std::size_t k = 0; k < manifest.entries.size(); ++k) {
    const auto& entry = manifest.entries[k];
    PairedSample sample;
    sample.visible.image = read_image(entry.visible, 3);
    sample.ir.image = read_image(entry.ir, 3);
    sample.alignment = entry.alignment;
    const auto variants = augment(sample, mix_seed(seed, k), config);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      ManifestEntry e = entry;
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "_aug%02zu", v);
      e.id = entry.id + suffix;
      e.mask.clear();
      e.generated.clear();
      e.visible = fs::absolute(out_dir / (e.id + "_visible.png"));
      e.ir = fs::absolute(out_dir / (e.id + "_ir.png"));
      write_image(e.visible, variants[v].visible.image);
      write_image(e.ir, variants[v].ir.image);
      out.entries.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<DatasetManifest> split_dataset(const DatasetManifest& manifest,
                                           std::span<const double> ratios, std::uint64_t seed) {
  require(ratios.size() == 2 || ratios.size() == 3, "split ratios: expected 2 or 3 values");
  double sum = 0.0;
  for (double r : ratios) {
    require(r >= 0.0 && std::isfinite(r), "split ratios must be non-negative");
    sum += r;
  }
  require(std::abs(sum - 1.0) <= 1e-9, "split ratios must sum to 1 (got " + csv::format(sum, 12) + ")");

  const std::size_t n = manifest.entries.size();
  std::vector<std::size_t> counts(ratios.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double exact = static_cast<double>(n) * ratios[i];
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[remainders[i].second];

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span(order));

  static constexpr const char* kLabels[] = {"train", "val", "test"};
  std::vector<DatasetManifest> splits(ratios.size());
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < ratios.size(); ++s) {
    std::vector<std::size_t> members(order.begin() + cursor, order.begin() + cursor + counts[s]);
    cursor += counts[s];
    std::sort(members.begin(), members.end());
    splits[s].split_label = kLabels[s];
    splits[s].seed = seed;
    splits[s].canvas = manifest.canvas;
    for (std::size_t idx : members) splits[s].entries.push_back(manifest.entries[idx]);
  }
  return splits;
}

}  // namespace flarecast::ingest

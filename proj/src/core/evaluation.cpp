#include "flarecast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "flarecast/csv.hpp"
#include "flarecast/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace flarecast::evaluation {

namespace {

void require_paired(std::span<const double> t, std::span<const double> p, const char* what) {
  require(!t.empty(), std::string(what) + ": need at least one value");
  require(t.size() == p.size(), std::string(what) + ": truth and prediction lengths differ");
}

}  // namespace

double mape(std::span<const double> truth, std::span<const double> predicted) {
  require_paired(truth, predicted, "mape");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0.0) {
      fail(ErrorKind::kDivisionByZero, "mape: true value is zero at index " + std::to_string(i));
    }
    sum += std::abs(truth[i] - predicted[i]) / truth[i];
  }
  return sum / static_cast<double>(truth.size()) * 100.0;
}

double rmspe(std::span<const double> truth, std::span<const double> predicted) {
  require_paired(truth, predicted, "rmspe");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == 0.0) {
      fail(ErrorKind::kDivisionByZero,
           "rmspe: predicted value is zero at index " + std::to_string(i));
    }
    const double r = (truth[i] - predicted[i]) / predicted[i];
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(truth.size())) * 100.0;
}

double error_spread(double mape_value, double rmspe_value) {
  require(mape_value >= 0.0 && rmspe_value >= 0.0, "error_spread: values must be non-negative");
  return rmspe_value - mape_value;
}

std::vector<GroundTruthRecord> load_ground_truth(const fs::path& path) {
  const auto table = csv::read(path);
  const std::string ctx = path.string();
  const int c_id = table.require_column("frame_id", ctx);
  const int c_len = table.require_column("true_length_m", ctx);
  const int c_area = table.require_column("true_area_m2", ctx);
  std::vector<GroundTruthRecord> rows;
  for (const auto& row : table.rows) {
    GroundTruthRecord r{row[c_id], csv::to_double(row[c_len], ctx), csv::to_double(row[c_area], ctx)};
    require(r.true_length_m > 0.0 && r.true_area_m2 > 0.0,
            ctx + ": ground truth for " + r.frame_id + " must be positive");
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_ground_truth(const fs::path& path, std::span<const GroundTruthRecord> rows) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << "frame_id,true_length_m,true_area_m2\n";
  for (const auto& r : rows) {
    out << r.frame_id << ',' << csv::format(r.true_length_m) << ',' << csv::format(r.true_area_m2)
        << '\n';
  }
}

std::vector<GeometryResult> load_geometry(const fs::path& path, const GeometryResult& defaults) {
  const auto table = csv::read(path);
  const std::string ctx = path.string();
  const int c_id = table.require_column("frame_id", ctx);
  const int c_len = table.require_column("length_m", ctx);
  const int c_area = table.require_column("area_m2", ctx);
  const int c_exp = table.column("experiment");
  const int c_model = table.column("model");
  const int c_source = table.column("source");
  std::vector<GeometryResult> rows;
  for (const auto& row : table.rows) {
    GeometryResult g = defaults;
    g.frame_id = row[c_id];
    g.length_m = csv::to_double(row[c_len], ctx);
    g.area_m2 = csv::to_double(row[c_area], ctx);
    if (c_exp >= 0) g.experiment = row[c_exp];
    if (c_model >= 0) g.model = row[c_model];
    if (c_source >= 0) g.source = row[c_source];
    rows.push_back(std::move(g));
  }
  return rows;
}

std::vector<FrameHausdorff> frame_hausdorff(std::span<const MaskPair> pairs) {
  std::vector<FrameHausdorff> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({p.experiment, p.model, p.frame_id, metrics::hausdorff(p.original, p.generated)});
  }
  return out;
}

std::vector<HausdorffGroup> aggregate_hausdorff(std::span<const FrameHausdorff> frames) {
  require(!frames.empty(), "aggregate_hausdorff: empty group");
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& f : frames) groups[{f.experiment, f.model}].push_back(f.distance);
  std::vector<HausdorffGroup> out;
  for (const auto& [key, values] : groups) {
    HausdorffGroup g;
    g.experiment = key.first;
    g.model = key.second;
    g.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    g.mean = sum / static_cast<double>(values.size());
    g.min = *std::min_element(values.begin(), values.end());
    g.max = *std::max_element(values.begin(), values.end());
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<HausdorffGroup> aggregate_hausdorff(std::span<const MaskPair> pairs) {
  const auto frames = frame_hausdorff(pairs);
  return aggregate_hausdorff(std::span<const FrameHausdorff>(frames));
}

// ---------------------------------------------------------------------------
// Report assembly

namespace {

using GroupKey = std::tuple<std::string, std::string, std::string>;  // experiment, model, source

int source_rank(const std::string& source) {
  if (source == kOriginalIr) return 0;
  if (source == kGeneratedIr) return 1;
  return 2;
}

bool column_less(const std::pair<std::string, std::string>& a,
                 const std::pair<std::string, std::string>& b) {
  if (a.first != b.first) return a.first < b.first;
  if (source_rank(a.second) != source_rank(b.second)) {
    return source_rank(a.second) < source_rank(b.second);
  }
  return a.second < b.second;
}

void write_error_table(const fs::path& path, std::span<const ErrorCell> cells) {
  std::vector<std::pair<std::string, std::string>> columns;
  std::set<std::string> models;
  for (const auto& c : cells) {
    std::pair<std::string, std::string> col{c.experiment, c.source};
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    models.insert(c.model);
  }
  std::sort(columns.begin(), columns.end(), column_less);

  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << "model,metric";
  for (const auto& [exp, src] : columns) out << ',' << exp << '/' << src;
  out << '\n';
  auto find = [&](const std::string& model, const std::pair<std::string, std::string>& col)
      -> const ErrorCell* {
    for (const auto& c : cells) {
      if (c.model == model && c.experiment == col.first && c.source == col.second) return &c;
    }
    return nullptr;
  };
  for (const auto& model : models) {
    for (const char* metric : {"MAPE", "RMSPE", "spread"}) {
      out << model << ',' << metric;
      for (const auto& col : columns) {
        out << ',';
        if (const ErrorCell* c = find(model, col)) {
          const std::string m = metric;
          const double v = m == "MAPE" ? c->mape : m == "RMSPE" ? c->rmspe : c->spread();
          out << csv::format(v, 3);
        }
      }
      out << '\n';
    }
  }
  out << "# MAPE divides by true values; RMSPE divides by predicted values. "
         "A negative spread is advisory, not an error.\n";
}

json cells_json(std::span<const ErrorCell> cells) {
  json arr = json::array();
  for (const auto& c : cells) {
    arr.push_back({{"experiment", c.experiment},
                   {"model", c.model},
                   {"source", c.source},
                   {"n", c.n},
                   {"MAPE", c.mape},
                   {"RMSPE", c.rmspe},
                   {"spread", c.spread()},
                   {"advisory_rmspe_below_mape", c.advisory()}});
  }
  return arr;
}

json metric_value_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  const double lo = values[n / 2 - 1];
  const double hi = values[n / 2];
  if (std::isinf(lo) && std::isinf(hi) && lo == hi) return lo;
  return 0.5 * (lo + hi);
}

}  // namespace

Report build_report(std::span<const GeometryResult> geometry,
                    std::span<const GroundTruthRecord> truth,
                    std::span<const ImageMetricRow> image_metrics,
                    std::span<const HausdorffGroup> hausdorff) {
  require(!geometry.empty(), "build_report: no geometry results");
  std::map<std::string, const GroundTruthRecord*> by_id;
  for (const auto& t : truth) by_id[t.frame_id] = &t;

  Report report;
  struct Series {
    std::vector<double> t_len, p_len, t_area, p_area;
  };
  std::map<GroupKey, Series> groups;
  for (const auto& g : geometry) {
    const auto it = by_id.find(g.frame_id);
    if (it == by_id.end()) {
      spdlog::warn("report: no ground truth for frame {}, row skipped", g.frame_id);
      report.skipped_frames.push_back(g.frame_id);
      continue;
    }
    const GroundTruthRecord& t = *it->second;
    auto& s = groups[{g.experiment, g.model, g.source}];
    s.t_len.push_back(t.true_length_m);
    s.p_len.push_back(g.length_m);
    s.t_area.push_back(t.true_area_m2);
    s.p_area.push_back(g.area_m2);
    report.changes.push_back({g.experiment, g.model, g.source, g.frame_id, "length",
                              t.true_length_m, g.length_m,
                              (g.length_m - t.true_length_m) / t.true_length_m * 100.0});
    report.changes.push_back({g.experiment, g.model, g.source, g.frame_id, "area", t.true_area_m2,
                              g.area_m2, (g.area_m2 - t.true_area_m2) / t.true_area_m2 * 100.0});
  }
  for (const auto& [key, s] : groups) {
    const auto& [experiment, model, source] = key;
    report.length.push_back({experiment, model, source, mape(s.t_len, s.p_len),
                             rmspe(s.t_len, s.p_len), s.t_len.size()});
    report.area.push_back({experiment, model, source, mape(s.t_area, s.p_area),
                           rmspe(s.t_area, s.p_area), s.t_area.size()});
  }
  report.hausdorff.assign(hausdorff.begin(), hausdorff.end());
  report.image_metrics.assign(image_metrics.begin(), image_metrics.end());
  for (const auto& row : image_metrics) {
    for (const auto& v : row.values) {
      if (v.name == metrics::MetricName::kPsnr && metrics::psnr_deteriorated(v.value)) {
        report.psnr_flags.push_back(row.id);
      }
    }
  }
  return report;
}

void write_image_metrics_csv(const fs::path& path, std::span<const ImageMetricRow> rows) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  std::vector<std::string> labels;
  if (!rows.empty()) {
    for (const auto& v : rows.front().values) labels.emplace_back(v.label());
  }
  out << "id";
  for (const auto& l : labels) out << ',' << l;
  out << ",psnr_flag\n";

  auto psnr_of = [](const ImageMetricRow& row) -> const metrics::MetricValue* {
    for (const auto& v : row.values) {
      if (v.name == metrics::MetricName::kPsnr) return &v;
    }
    return nullptr;
  };
  for (const auto& row : rows) {
    out << row.id;
    for (const auto& v : row.values) out << ',' << csv::format(v.value);
    const auto* p = psnr_of(row);
    out << ',' << (p && metrics::psnr_deteriorated(p->value) ? "significant_deterioration" : "ok")
        << '\n';
  }
  if (rows.empty()) return;
  for (const char* stat : {"median", "mean"}) {
    out << stat;
    double psnr_stat = metrics::kPsnrIdentical;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      std::vector<double> column;
      for (const auto& row : rows) column.push_back(row.values.at(k).value);
      double value = 0.0;
      if (std::string(stat) == "median") {
        value = median(column);
      } else {
        for (double v : column) value += v;
        value /= static_cast<double>(column.size());
      }
      if (labels[k] == "PSNR") psnr_stat = value;
      out << ',' << csv::format(value);
    }
    out << ',' << (metrics::psnr_deteriorated(psnr_stat) ? "significant_deterioration" : "ok")
        << '\n';
  }
}

void write_report(const Report& report, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_error_table(out_dir / "length_errors.csv", report.length);
  write_error_table(out_dir / "area_errors.csv", report.area);

  {
    std::ofstream out(out_dir / "hausdorff.csv");
    out << "experiment,model,mean_hd,min_hd,max_hd,n\n";
    for (const auto& h : report.hausdorff) {
      out << h.experiment << ',' << h.model << ',' << csv::format(h.mean, 3) << ','
          << csv::format(h.min, 3) << ',' << csv::format(h.max, 3) << ',' << h.n << '\n';
    }
  }
  {
    std::ofstream out(out_dir / "percentage_change.csv");
    out << "experiment,model,source,frame_id,quantity,truth,predicted,percent_change\n";
    for (const auto& c : report.changes) {
      out << c.experiment << ',' << c.model << ',' << c.source << ',' << c.frame_id << ','
          << c.quantity << ',' << csv::format(c.truth) << ',' << csv::format(c.predicted) << ','
          << csv::format(c.percent, 3) << '\n';
    }
  }
  write_image_metrics_csv(out_dir / "image_metrics.csv", report.image_metrics);

  json hd = json::array();
  for (const auto& h : report.hausdorff) {
    hd.push_back({{"experiment", h.experiment}, {"model", h.model}, {"mean", h.mean},
                  {"min", h.min}, {"max", h.max}, {"n", h.n}});
  }
  json images = json::array();
  for (const auto& row : report.image_metrics) {
    json values = json::object();
    for (const auto& v : row.values) values[std::string(v.label())] = metric_value_json(v.value);
    images.push_back({{"id", row.id}, {"values", values}});
  }
  const json doc = {
      {"length_errors", cells_json(report.length)},
      {"area_errors", cells_json(report.area)},
      {"hausdorff", hd},
      {"image_metrics", images},
      {"psnr_flags", report.psnr_flags},
      {"skipped_frames", report.skipped_frames},
      {"notes",
       {"MAPE divides by true values; RMSPE divides by predicted values.",
        "PSNR below 30 dB indicates significant deterioration."}}};
  std::ofstream out(out_dir / "report.json");
  out << doc.dump(2) << '\n';
}

}  // namespace flarecast::evaluation

#include "mprkit/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mprkit::eval {

namespace {

constexpr const char* kRowsHeader =
    "target,tta,split_rep,split_fold,auc,accuracy,f1,sensitivity,specificity,mcc";
constexpr const char* kSummaryHeader = "target,tta,metric,mean,std";
constexpr const char* kPredictionsHeader =
    "target,tta,split_rep,split_fold,patient_id,lesion_id,label,score";
constexpr const char* kMetricNames[6] = {"auc",         "accuracy",    "f1",
                                         "sensitivity", "specificity", "mcc"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

[[noreturn]] void malformed(const std::filesystem::path& path, size_t line_no,
                            const std::string& why) {
  throw std::runtime_error("malformed report csv " + path.string() + " (line " +
                           std::to_string(line_no) + "): " + why);
}

double parse_double(const std::string& field, const std::filesystem::path& path, size_t line_no) {
  try {
    size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) malformed(path, line_no, "trailing characters in number");
    return v;
  } catch (const std::logic_error&) {
    malformed(path, line_no, "bad number '" + field + "'");
  }
}

int parse_int(const std::string& field, const std::filesystem::path& path, size_t line_no) {
  try {
    size_t used = 0;
    const int v = std::stoi(field, &used);
    if (used != field.size()) malformed(path, line_no, "trailing characters in integer");
    return v;
  } catch (const std::logic_error&) {
    malformed(path, line_no, "bad integer '" + field + "'");
  }
}

bool parse_tta(const std::string& field, const std::filesystem::path& path, size_t line_no) {
  if (field == "1") return true;
  if (field == "0") return false;
  malformed(path, line_no, "tta must be 0 or 1");
}

std::vector<std::string> read_lines(const std::filesystem::path& path, const char* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open report csv: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lines.empty() && line != header) malformed(path, 1, "unexpected header");
    lines.push_back(line);
  }
  if (lines.empty()) malformed(path, 1, "empty file");
  lines.erase(lines.begin());
  return lines;
}

double metric_value(const MetricSet& m, int metric_index) {
  switch (metric_index) {
    case 0: return m.auc;
    case 1: return m.accuracy;
    case 2: return m.f1;
    case 3: return m.sensitivity;
    case 4: return m.specificity;
    default: return m.mcc;
  }
}

}  // namespace

void write_rows_csv(const std::vector<SplitRow>& rows, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << kRowsHeader << '\n';
  for (const SplitRow& row : rows) {
    out << row.target << ',' << (row.tta ? 1 : 0) << ',' << row.split_rep << ','
        << row.split_fold << ',' << (row.metrics.auc_defined ? fmt(row.metrics.auc) : "") << ','
        << fmt(row.metrics.accuracy) << ',' << fmt(row.metrics.f1) << ','
        << fmt(row.metrics.sensitivity) << ',' << fmt(row.metrics.specificity) << ','
        << fmt(row.metrics.mcc) << '\n';
  }
  if (!out) throw std::runtime_error("cannot write report csv: " + path.string());
}

std::vector<SplitRow> load_rows_csv(const std::filesystem::path& path) {
  std::vector<SplitRow> rows;
  const std::vector<std::string> lines = read_lines(path, kRowsHeader);
  for (size_t i = 0; i < lines.size(); ++i) {
    const size_t line_no = i + 2;
    const std::vector<std::string> f = split_fields(lines[i]);
    if (f.size() != 10) malformed(path, line_no, "expected 10 fields");
    SplitRow row;
    row.target = f[0];
    row.tta = parse_tta(f[1], path, line_no);
    row.split_rep = parse_int(f[2], path, line_no);
    row.split_fold = parse_int(f[3], path, line_no);
    if (f[4].empty()) {
      row.metrics.auc = std::numeric_limits<double>::quiet_NaN();
      row.metrics.auc_defined = false;
    } else {
      row.metrics.auc = parse_double(f[4], path, line_no);
      row.metrics.auc_defined = true;
    }
    row.metrics.accuracy = parse_double(f[5], path, line_no);
    row.metrics.f1 = parse_double(f[6], path, line_no);
    row.metrics.sensitivity = parse_double(f[7], path, line_no);
    row.metrics.specificity = parse_double(f[8], path, line_no);
    row.metrics.mcc = parse_double(f[9], path, line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<SplitRow>& rows) {
  std::vector<std::pair<std::string, bool>> groups;
  for (const SplitRow& row : rows) {
    const std::pair<std::string, bool> key{row.target, row.tta};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }

  std::vector<SummaryRow> summary;
  for (const auto& [target, tta] : groups) {
    for (int metric = 0; metric < 6; ++metric) {
      std::vector<double> values;
      for (const SplitRow& row : rows) {
        if (row.target != target || row.tta != tta) continue;
        if (metric == 0 && !row.metrics.auc_defined) continue;  // excluded, not imputed
        values.push_back(metric_value(row.metrics, metric));
      }
      SummaryRow line;
      line.target = target;
      line.tta = tta;
      line.metric = kMetricNames[metric];
      line.count = static_cast<int>(values.size());
      if (values.empty()) {
        line.mean = std::numeric_limits<double>::quiet_NaN();
        line.std_dev = std::numeric_limits<double>::quiet_NaN();
      } else {
        double sum = 0.0;
        for (double v : values) sum += v;
        line.mean = sum / static_cast<double>(values.size());
        double sq = 0.0;
        for (double v : values) sq += (v - line.mean) * (v - line.mean);
        line.std_dev = values.size() > 1
                           ? std::sqrt(sq / static_cast<double>(values.size() - 1))
                           : 0.0;
      }
      summary.push_back(std::move(line));
    }
  }
  return summary;
}

void write_summary_csv(const std::vector<SummaryRow>& summary,
                       const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << kSummaryHeader << '\n';
  for (const SummaryRow& row : summary) {
    out << row.target << ',' << (row.tta ? 1 : 0) << ',' << row.metric << ','
        << (std::isnan(row.mean) ? "" : fmt(row.mean)) << ','
        << (std::isnan(row.std_dev) ? "" : fmt(row.std_dev)) << '\n';
  }
  if (!out) throw std::runtime_error("cannot write report csv: " + path.string());
}

void write_predictions_csv(const std::vector<PredictionRow>& predictions,
                           const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << kPredictionsHeader << '\n';
  for (const PredictionRow& row : predictions) {
    out << row.target << ',' << (row.tta ? 1 : 0) << ',' << row.split_rep << ','
        << row.split_fold << ',' << row.patient_id << ',' << row.lesion_id << ',' << row.label
        << ',' << fmt(row.score) << '\n';
  }
  if (!out) throw std::runtime_error("cannot write report csv: " + path.string());
}

std::vector<PredictionRow> load_predictions_csv(const std::filesystem::path& path) {
  std::vector<PredictionRow> predictions;
  const std::vector<std::string> lines = read_lines(path, kPredictionsHeader);
  for (size_t i = 0; i < lines.size(); ++i) {
    const size_t line_no = i + 2;
    const std::vector<std::string> f = split_fields(lines[i]);
    if (f.size() != 8) malformed(path, line_no, "expected 8 fields");
    PredictionRow row;
    row.target = f[0];
    row.tta = parse_tta(f[1], path, line_no);
    row.split_rep = parse_int(f[2], path, line_no);
    row.split_fold = parse_int(f[3], path, line_no);
    row.patient_id = f[4];
    row.lesion_id = f[5];
    row.label = parse_int(f[6], path, line_no);
    if (row.label != 0 && row.label != 1) malformed(path, line_no, "label must be 0 or 1");
    row.score = parse_double(f[7], path, line_no);
    predictions.push_back(std::move(row));
  }
  return predictions;
}

std::string render_summary_table(const std::vector<SummaryRow>& summary) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-15s %-7s", "target", "mode");
  out << buf;
  for (const char* name : kMetricNames) {
    std::snprintf(buf, sizeof(buf), " %-17s", name);
    out << buf;
  }
  out << '\n';

  std::vector<std::pair<std::string, bool>> groups;
  for (const SummaryRow& row : summary) {
    const std::pair<std::string, bool> key{row.target, row.tta};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  for (const auto& [target, tta] : groups) {
    std::snprintf(buf, sizeof(buf), "%-15s %-7s", target.c_str(), tta ? "tta" : "single");
    out << buf;
    for (const char* name : kMetricNames) {
      std::string cell = "-";
      for (const SummaryRow& row : summary) {
        if (row.target == target && row.tta == tta && row.metric == name && !std::isnan(row.mean)) {
          char value[48];
          std::snprintf(value, sizeof(value), "%.3f +- %.3f", row.mean, row.std_dev);
          cell = value;
          break;
        }
      }
      std::snprintf(buf, sizeof(buf), " %-17s", cell.c_str());
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

std::string render_roc_svg(const std::vector<PredictionRow>& predictions) {
  constexpr double kLeft = 60.0;
  constexpr double kTop = 20.0;
  constexpr double kPlot = 300.0;
  constexpr const char* kColors[4] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd"};

  std::vector<std::pair<std::string, bool>> groups;
  for (const PredictionRow& row : predictions) {
    const std::pair<std::string, bool> key{row.target, row.tta};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }

  auto x_of = [&](double fpr) { return kLeft + fpr * kPlot; };
  auto y_of = [&](double tpr) { return kTop + (1.0 - tpr) * kPlot; };
  char buf[160];

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"560\" height=\"370\" "
         "viewBox=\"0 0 560 370\">\n";
  out << "<rect width=\"560\" height=\"370\" fill=\"white\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double t = 0.25 * i;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#dddddd\"/>\n",
                  x_of(t), y_of(0.0), x_of(t), y_of(1.0));
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#dddddd\"/>\n",
                  x_of(0.0), y_of(t), x_of(1.0), y_of(t));
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"middle\">%.2f</text>\n",
                  x_of(t), y_of(0.0) + 16.0, t);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">%.2f</text>\n",
                  x_of(0.0) - 6.0, y_of(t) + 4.0, t);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#999999\" "
                "stroke-dasharray=\"5,4\"/>\n",
                x_of(0.0), y_of(0.0), x_of(1.0), y_of(1.0));
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
                "stroke=\"black\"/>\n",
                kLeft, kTop, kPlot, kPlot);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\">false positive "
                "rate</text>\n",
                kLeft + kPlot / 2.0, kTop + kPlot + 38.0);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"16\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\" "
                "transform=\"rotate(-90 16 %.1f)\">true positive rate</text>\n",
                kTop + kPlot / 2.0, kTop + kPlot / 2.0);
  out << buf;

  int color_index = 0;
  double legend_y = kTop + 14.0;
  for (const auto& [target, tta] : groups) {
    std::vector<std::pair<double, int>> scored;  // (score, label)
    for (const PredictionRow& row : predictions) {
      if (row.target == target && row.tta == tta) scored.emplace_back(row.score, row.label);
    }
    long npos = 0;
    long nneg = 0;
    for (const auto& [score, label] : scored) label == 1 ? ++npos : ++nneg;
    const char* color = kColors[color_index % 4];
    ++color_index;
    const std::string label_text = target + (tta ? " (tta)" : " (single)");
    if (npos > 0 && nneg > 0) {
      std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first > b.first;
      });
      std::ostringstream points;
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f", x_of(0.0), y_of(0.0));
      points << buf;
      long tp = 0;
      long fp = 0;
      for (size_t i = 0; i < scored.size();) {
        size_t j = i;
        while (j + 1 < scored.size() && scored[j + 1].first == scored[i].first) ++j;
        for (size_t t = i; t <= j; ++t) scored[t].second == 1 ? ++tp : ++fp;
        std::snprintf(buf, sizeof(buf), " %.2f,%.2f",
                      x_of(static_cast<double>(fp) / static_cast<double>(nneg)),
                      y_of(static_cast<double>(tp) / static_cast<double>(npos)));
        points << buf;
        i = j + 1;
      }
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
          << points.str() << "\"/>\n";
    }
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" "
                  "stroke-width=\"1.5\"/>\n",
                  kLeft + kPlot + 16.0, legend_y - 4.0, kLeft + kPlot + 44.0, legend_y - 4.0, color);
    out << buf;
    std::snprintf(buf, sizeof(buf), "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\">%s%s</text>\n",
                  kLeft + kPlot + 50.0, legend_y, label_text.c_str(),
                  (npos > 0 && nneg > 0) ? "" : " [single-class]");
    out << buf;
    legend_y += 18.0;
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace mprkit::eval

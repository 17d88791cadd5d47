#include "mdpagg/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "mdpagg/io.hpp"

namespace mdpagg {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

int parse_int(const std::string& s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError("summary csv: bad integer '" + s + "'");
  return v;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError("summary csv: bad number '" + s + "'");
  return v;
}

}  // namespace

SummaryTables read_summary_csv(const std::string& path) {
  const std::string text = read_file(path);
  SummaryTables out;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (first) {
      if (line != "M,K,threshold_assumed,table,key,value")
        throw IoError("summary csv: unexpected header '" + line + "'");
      first = false;
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != 6) throw IoError("summary csv: bad row '" + line + "'");
    SummaryRow row;
    row.M = parse_int(fields[0]);
    row.K = parse_int(fields[1]);
    row.threshold_assumed = parse_int(fields[2]) != 0;
    row.table = fields[3];
    row.key = fields[4];
    row.value = parse_double(fields[5]);
    out.rows.push_back(std::move(row));
  }
  if (first) throw IoError("summary csv: empty file " + path);
  return out;
}

namespace {

// Minimal SVG canvas with a fixed margin box and linear axes.
class Canvas {
 public:
  Canvas(double xmin, double xmax, double ymin, double ymax)
      : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax) {}

  double px(double x) const {
    return kLeft + (x - xmin_) / (xmax_ - xmin_) * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    return kHeight - kBottom -
           (y - ymin_) / (ymax_ - ymin_) * (kHeight - kTop - kBottom);
  }

  void line(double x1, double y1, double x2, double y2, const std::string& color,
            double width) {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
             "\" y2=\"" + num(y2) + "\" stroke=\"" + color + "\" stroke-width=\"" +
             num(width) + "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& color) {
    body_ += "<polyline fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts) body_ += num(px(x)) + "," + num(py(y)) + " ";
    body_ += "\"/>\n";
  }

  void polygon(const std::vector<std::pair<double, double>>& pts,
               const std::string& fill, double opacity) {
    body_ += "<polygon fill=\"" + fill + "\" fill-opacity=\"" + num(opacity) +
             "\" stroke=\"none\" points=\"";
    for (const auto& [x, y] : pts) body_ += num(px(x)) + "," + num(py(y)) + " ";
    body_ += "\"/>\n";
  }

  void rect(double x1, double y1, double x2, double y2, const std::string& fill,
            const std::string& stroke) {
    const double rx = std::min(px(x1), px(x2));
    const double ry = std::min(py(y1), py(y2));
    const double rw = std::abs(px(x2) - px(x1));
    const double rh = std::abs(py(y2) - py(y1));
    body_ += "<rect x=\"" + num(rx) + "\" y=\"" + num(ry) + "\" width=\"" + num(rw) +
             "\" height=\"" + num(rh) + "\" fill=\"" + fill + "\" stroke=\"" + stroke +
             "\" stroke-width=\"1\"/>\n";
  }

  void circle(double x, double y, double radius, const std::string& fill) {
    body_ += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"" +
             num(radius) + "\" fill=\"" + fill + "\"/>\n";
  }

  void text(double sx, double sy, const std::string& s, const std::string& anchor,
            double size) {
    body_ += "<text x=\"" + num(sx) + "\" y=\"" + num(sy) + "\" text-anchor=\"" +
             anchor + "\" font-family=\"sans-serif\" font-size=\"" + num(size) +
             "\">" + escape(s) + "</text>\n";
  }

  void x_axis(const std::string& label, const std::vector<double>& ticks) {
    const double y = kHeight - kBottom;
    line(kLeft, y, kWidth - kRight, y, "#333", 1.0);
    for (double t : ticks) {
      const double x = px(t);
      line(x, y, x, y + 4, "#333", 1.0);
      text(x, y + 16, tick_label(t), "middle", 11);
    }
    text((kLeft + kWidth - kRight) / 2.0, kHeight - 8, label, "middle", 12);
  }

  void y_axis(const std::string& label, const std::vector<double>& ticks) {
    line(kLeft, kTop, kLeft, kHeight - kBottom, "#333", 1.0);
    for (double t : ticks) {
      const double y = py(t);
      line(kLeft - 4, y, kLeft, y, "#333", 1.0);
      text(kLeft - 7, y + 4, tick_label(t), "end", 11);
    }
    body_ += "<text x=\"14\" y=\"" + num((kTop + kHeight - kBottom) / 2.0) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
             "transform=\"rotate(-90 14 " +
             num((kTop + kHeight - kBottom) / 2.0) + ")\">" + escape(label) +
             "</text>\n";
  }

  std::vector<double> ticks(double lo, double hi, int target = 6) const {
    const double span = hi - lo;
    if (span <= 0.0) return {lo};
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
      if (mag * m >= raw) {
        step = mag * m;
        break;
      }
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step)
      out.push_back(t);
    return out;
  }

  std::string finish(const std::string& title) const {
    std::string svg =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
        "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
        num(kHeight) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(kWidth / 2.0) +
           "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\" font-weight=\"bold\">" +
           escape(title) + "</text>\n";
    svg += body_;
    svg += "</svg>\n";
    return svg;
  }

  static constexpr double kWidth = 640;
  static constexpr double kHeight = 420;
  static constexpr double kLeft = 62;
  static constexpr double kRight = 18;
  static constexpr double kTop = 30;
  static constexpr double kBottom = 46;

 private:
  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
  }
  static std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
  }
  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '&')
        out += "&amp;";
      else if (c == '<')
        out += "&lt;";
      else if (c == '>')
        out += "&gt;";
      else
        out += c;
    }
    return out;
  }

  double xmin_, xmax_, ymin_, ymax_;
  std::string body_;
};

using PanelKey = std::tuple<int, int, bool>;  // (M, K, threshold_assumed)

std::string arm_name(bool assumed) { return assumed ? "constrained" : "free"; }
std::string arm_title(bool assumed) {
  return assumed ? "threshold-constrained" : "unconstrained";
}

std::map<PanelKey, std::vector<const SummaryRow*>> group_panels(
    const SummaryTables& summary, const std::set<std::string>& tables) {
  std::map<PanelKey, std::vector<const SummaryRow*>> out;
  for (const auto& row : summary.rows) {
    if (tables.count(row.table) == 0) continue;
    out[{row.M, row.K, row.threshold_assumed}].push_back(&row);
  }
  return out;
}

void write_panel_csv(const std::vector<const SummaryRow*>& rows,
                     const std::string& path) {
  SummaryTables subset;
  for (const SummaryRow* r : rows) subset.rows.push_back(*r);
  atomic_write_file(path, summary_csv_string(subset));
}

std::string panel_stem(const std::string& figure, int M, int K, bool assumed) {
  return figure + "_M" + std::to_string(M) + "_K" + std::to_string(K) + "_" +
         arm_name(assumed);
}

void render_frequency(const SummaryTables& summary, const std::string& out_dir,
                      std::vector<std::string>& written) {
  const auto panels = group_panels(summary, {"intervene_freq"});
  for (const auto& [key, rows] : panels) {
    const auto& [M, K, assumed] = key;
    std::vector<std::pair<double, double>> pts;
    for (const SummaryRow* r : rows)
      pts.emplace_back(static_cast<double>(parse_int(r->key)), r->value);
    std::sort(pts.begin(), pts.end());

    Canvas c(pts.front().first, pts.back().first, 0.0, 1.0);
    c.x_axis("state", c.ticks(pts.front().first, pts.back().first));
    c.y_axis("intervention frequency", c.ticks(0.0, 1.0, 5));
    c.polyline(pts, "#1f77b4");
    const std::string title = "intervention frequency, M=" + std::to_string(M) +
                              ", K=" + std::to_string(K) + ", " + arm_title(assumed);

    const std::string stem = out_dir + "/" + panel_stem("frequency", M, K, assumed);
    atomic_write_file(stem + ".svg", c.finish(title));
    write_panel_csv(rows, stem + ".csv");
    written.push_back(stem + ".svg");
    written.push_back(stem + ".csv");
  }
}

void render_thresholds(const SummaryTables& summary, const std::string& out_dir,
                       std::vector<std::string>& written) {
  const auto panels = group_panels(summary, {"lambda1_hist", "lambda0_hist"});
  for (const auto& [key, rows] : panels) {
    const auto& [M, K, assumed] = key;
    std::map<int, double> h1;
    std::map<int, double> h0;
    for (const SummaryRow* r : rows)
      (r->table == "lambda1_hist" ? h1 : h0)[parse_int(r->key)] = r->value;

    int xlo = std::numeric_limits<int>::max();
    int xhi = std::numeric_limits<int>::min();
    double ymax = 0.0;
    for (const auto& hist : {h1, h0})
      for (const auto& [state, count] : hist) {
        xlo = std::min(xlo, state);
        xhi = std::max(xhi, state);
        ymax = std::max(ymax, count);
      }

    Canvas c(xlo - 1.0, xhi + 1.0, 0.0, ymax * 1.05);
    c.x_axis("state", c.ticks(xlo - 1.0, xhi + 1.0));
    c.y_axis("replications", c.ticks(0.0, ymax * 1.05, 5));
    for (const auto& [state, count] : h1)
      c.rect(state - 0.42, 0.0, state, count, "#1f77b4", "#1a5f91");
    for (const auto& [state, count] : h0)
      c.rect(state, 0.0, state + 0.42, count, "#ff7f0e", "#c8650b");
    c.line(Canvas::kWidth - 170, 36, Canvas::kWidth - 156, 36, "#1f77b4", 8);
    c.text(Canvas::kWidth - 150, 40, "lower boundary", "start", 11);
    c.line(Canvas::kWidth - 170, 52, Canvas::kWidth - 156, 52, "#ff7f0e", 8);
    c.text(Canvas::kWidth - 150, 56, "upper boundary", "start", 11);

    const std::string title = "gray-area boundaries, M=" + std::to_string(M) +
                              ", K=" + std::to_string(K) + ", " + arm_title(assumed);
    const std::string stem = out_dir + "/" + panel_stem("thresholds", M, K, assumed);
    atomic_write_file(stem + ".svg", c.finish(title));
    write_panel_csv(rows, stem + ".csv");
    written.push_back(stem + ".svg");
    written.push_back(stem + ".csv");
  }
}

void render_regret(const SummaryTables& summary, const std::string& out_dir,
                   std::vector<std::string>& written) {
  // One panel per M; categories are K values, one box per arm.
  std::map<int, std::vector<const SummaryRow*>> by_m;
  for (const auto& row : summary.rows)
    if (row.table == "regret") by_m[row.M].push_back(&row);

  for (const auto& [M, rows] : by_m) {
    std::map<std::pair<int, bool>, std::map<std::string, double>> stats;
    std::set<int> ks;
    bool both_arms = false;
    for (const SummaryRow* r : rows) {
      stats[{r->K, r->threshold_assumed}][r->key] = r->value;
      ks.insert(r->K);
      if (r->threshold_assumed) both_arms = true;
    }
    std::vector<int> k_order(ks.begin(), ks.end());

    double ymax = 0.0;
    for (const auto& [key, s] : stats)
      if (auto it = s.find("q100"); it != s.end()) ymax = std::max(ymax, it->second);
    if (ymax <= 0.0) ymax = 1.0;

    Canvas c(-0.6, static_cast<double>(k_order.size()) - 0.4, 0.0, ymax * 1.05);
    std::vector<double> xticks;
    for (std::size_t i = 0; i < k_order.size(); ++i)
      xticks.push_back(static_cast<double>(i));
    const double axis_y = Canvas::kHeight - Canvas::kBottom;
    c.line(Canvas::kLeft, axis_y, Canvas::kWidth - Canvas::kRight, axis_y, "#333",
           1.0);
    for (std::size_t i = 0; i < k_order.size(); ++i) {
      const double x = c.px(static_cast<double>(i));
      c.line(x, axis_y, x, axis_y + 4, "#333", 1.0);
      c.text(x, axis_y + 16, "K=" + std::to_string(k_order[i]), "middle", 11);
    }
    c.text((Canvas::kLeft + Canvas::kWidth - Canvas::kRight) / 2.0,
           Canvas::kHeight - 8, "aggregation size", "middle", 12);
    c.y_axis("regret per thousand trajectories", c.ticks(0.0, ymax * 1.05, 6));

    for (std::size_t i = 0; i < k_order.size(); ++i) {
      for (int arm = 0; arm < 2; ++arm) {
        const bool assumed = (arm == 1);
        auto it = stats.find({k_order[i], assumed});
        if (it == stats.end()) continue;
        const auto& s = it->second;
        const double xc = static_cast<double>(i) + (both_arms ? (assumed ? 0.18 : -0.18) : 0.0);
        const double half = both_arms ? 0.14 : 0.22;
        const std::string fill = assumed ? "#2ca02c" : "#1f77b4";
        // q00..q100 whisker, q25..q75 box, q50 tick, mean dot.
        c.line(c.px(xc), c.py(s.at("q00")), c.px(xc), c.py(s.at("q100")), "#555", 1.0);
        c.rect(xc - half, s.at("q25"), xc + half, s.at("q75"), fill, "#333");
        c.line(c.px(xc - half), c.py(s.at("q50")), c.px(xc + half), c.py(s.at("q50")),
               "#111", 1.5);
        c.circle(xc, s.at("mean"), 3.0, "#d62728");
      }
    }
    if (both_arms) {
      c.line(Canvas::kWidth - 190, 36, Canvas::kWidth - 176, 36, "#1f77b4", 8);
      c.text(Canvas::kWidth - 170, 40, "unconstrained", "start", 11);
      c.line(Canvas::kWidth - 190, 52, Canvas::kWidth - 176, 52, "#2ca02c", 8);
      c.text(Canvas::kWidth - 170, 56, "threshold-constrained", "start", 11);
    }

    const std::string title = "regret distribution, M=" + std::to_string(M) +
                              " trajectories (dot = mean)";
    const std::string stem = out_dir + "/regret_M" + std::to_string(M);
    atomic_write_file(stem + ".svg", c.finish(title));
    write_panel_csv(rows, stem + ".csv");
    written.push_back(stem + ".svg");
    written.push_back(stem + ".csv");
  }
}

void render_lifetime(const SummaryTables& summary, const std::string& out_dir,
                     std::vector<std::string>& written) {
  const auto panels = group_panels(
      summary, {"lifetime_pihat_mean", "lifetime_pihat_lo", "lifetime_pihat_hi",
                "lifetime_never_mean", "lifetime_never_lo", "lifetime_never_hi"});
  for (const auto& [key, rows] : panels) {
    const auto& [M, K, assumed] = key;
    std::map<std::string, std::map<int, double>> series;
    for (const SummaryRow* r : rows) series[r->table][parse_int(r->key)] = r->value;

    const auto& mean_hat = series["lifetime_pihat_mean"];
    double xlo = static_cast<double>(mean_hat.begin()->first);
    double xhi = static_cast<double>(mean_hat.rbegin()->first);
    double ylo = std::numeric_limits<double>::infinity();
    double yhi = -std::numeric_limits<double>::infinity();
    for (const auto& name : {"lifetime_pihat_lo", "lifetime_pihat_hi",
                             "lifetime_never_lo", "lifetime_never_hi"})
      for (const auto& [h, v] : series[name]) {
        ylo = std::min(ylo, v);
        yhi = std::max(yhi, v);
      }
    const double pad = (yhi - ylo) * 0.05 + 1e-9;

    Canvas c(xlo, xhi, ylo - pad, yhi + pad);
    c.x_axis("state", c.ticks(xlo, xhi));
    c.y_axis("expected life-months", c.ticks(ylo - pad, yhi + pad, 6));

    auto band = [&](const std::string& lo_name, const std::string& hi_name,
                    const std::string& color) {
      std::vector<std::pair<double, double>> poly;
      for (const auto& [h, v] : series[lo_name])
        poly.emplace_back(static_cast<double>(h), v);
      for (auto it = series[hi_name].rbegin(); it != series[hi_name].rend(); ++it)
        poly.emplace_back(static_cast<double>(it->first), it->second);
      c.polygon(poly, color, 0.25);
    };
    auto mid = [&](const std::string& name, const std::string& color) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& [h, v] : series[name]) pts.emplace_back(static_cast<double>(h), v);
      c.polyline(pts, color);
    };
    band("lifetime_pihat_lo", "lifetime_pihat_hi", "#1f77b4");
    mid("lifetime_pihat_mean", "#1f77b4");
    band("lifetime_never_lo", "lifetime_never_hi", "#d62728");
    mid("lifetime_never_mean", "#d62728");

    c.line(Canvas::kWidth - 230, 36, Canvas::kWidth - 216, 36, "#1f77b4", 8);
    c.text(Canvas::kWidth - 210, 40, "estimated optimal policy", "start", 11);
    c.line(Canvas::kWidth - 230, 52, Canvas::kWidth - 216, 52, "#d62728", 8);
    c.text(Canvas::kWidth - 210, 56, "never intervene", "start", 11);

    const std::string title = "remaining lifetime (95% CI), M=" + std::to_string(M) +
                              ", K=" + std::to_string(K) + ", " + arm_title(assumed);
    const std::string stem = out_dir + "/" + panel_stem("lifetime", M, K, assumed);
    atomic_write_file(stem + ".svg", c.finish(title));
    write_panel_csv(rows, stem + ".csv");
    written.push_back(stem + ".svg");
    written.push_back(stem + ".csv");
  }
}

}  // namespace

const std::vector<std::string>& available_figures() {
  static const std::vector<std::string> kFigures{"frequency", "thresholds", "regret",
                                                 "lifetime"};
  return kFigures;
}

std::vector<std::string> render_figure(const SummaryTables& summary,
                                       const std::string& figure,
                                       const std::string& out_dir) {
  std::vector<std::string> written;
  if (figure == "frequency") {
    render_frequency(summary, out_dir, written);
  } else if (figure == "thresholds") {
    render_thresholds(summary, out_dir, written);
  } else if (figure == "regret") {
    render_regret(summary, out_dir, written);
  } else if (figure == "lifetime") {
    render_lifetime(summary, out_dir, written);
  } else {
    std::string names;
    for (const auto& n : available_figures()) {
      if (!names.empty()) names += ", ";
      names += n;
    }
    throw std::invalid_argument("unknown figure '" + figure + "' (valid: " + names +
                                ")");
  }
  return written;
}

}  // namespace mdpagg

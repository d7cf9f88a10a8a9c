#include "tangle/svg.hpp"

#include "tangle/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace tangle {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish(bool from_zero) {
    if (!std::isfinite(lo)) lo = hi = 0.0;
    if (from_zero) lo = std::min(lo, 0.0);
    if (hi - lo < 1e-12) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    hi += pad;
    if (!from_zero || lo < 0.0) lo -= pad;
  }
};

// 5 to 10 ticks on a 1/2/5 step.
std::vector<double> ticks(const Range& r) {
  const double raw = (r.hi - r.lo) / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(r.lo / step) * step; t <= r.hi + 1e-9 * step; t += step) out.push_back(t);
  return out;
}

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h) {
    os_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
        << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }
  double plot_w() const { return w_ - kLeft - kRight; }
  double plot_h() const { return h_ - kTop - kBottom; }

  void line(double x0, double y0, double x1, double y1, const std::string& stroke, double width = 1.0) {
    os_ << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x1) << "\" y2=\"" << num(y1)
        << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, const char* anchor = "middle", const std::string& extra = "") {
    os_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor << '"' << extra << '>'
        << xml_escape(s) << "</text>\n";
  }
  void raw(const std::string& s) { os_ << s; }

  void frame(const std::string& title, const std::string& x_label, const std::string& y_label, const Range& yr) {
    text(w_ / 2.0, 22, title, "middle", " font-size=\"15\"");
    line(kLeft, kTop, kLeft, kTop + plot_h(), "black");
    line(kLeft, kTop + plot_h(), kLeft + plot_w(), kTop + plot_h(), "black");
    for (double t : ticks(yr)) {
      const double y = kTop + plot_h() * (1.0 - (t - yr.lo) / (yr.hi - yr.lo));
      line(kLeft - 4, y, kLeft, y, "black");
      line(kLeft, y, kLeft + plot_w(), y, "#e0e0e0", 0.5);
      text(kLeft - 7, y + 4, tick_label(t), "end");
    }
    if (!x_label.empty()) text(kLeft + plot_w() / 2.0, h_ - 15, x_label);
    text(18, kTop + plot_h() / 2.0, y_label, "middle",
         " transform=\"rotate(-90 18 " + num(kTop + plot_h() / 2.0) + ")\"");
  }

  void legend(const std::vector<Series>& series) {
    for (std::size_t k = 0; k < series.size(); ++k) {
      const double y = kTop + 10 + 18.0 * static_cast<double>(k);
      os_ << "<rect x=\"" << num(w_ - kRight + 15) << "\" y=\"" << num(y - 9) << "\" width=\"10\" height=\"10\" fill=\""
          << kPalette[k % 6] << "\"/>\n";
      text(w_ - kRight + 30, y, series[k].label, "start");
    }
  }

  std::string finish() {
    os_ << "</svg>\n";
    return os_.str();
  }

 private:
  int w_, h_;
  std::ostringstream os_;
};

void check(const Series& s, bool scatter) {
  if (scatter && s.x.size() != s.y.size()) throw InvalidArgument("svg", "series '" + s.label + "': x and y differ in length");
  if (!s.err.empty() && s.err.size() != s.y.size())
    throw InvalidArgument("svg", "series '" + s.label + "': error bars and values differ in length");
}

}  // namespace

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render_svg(const BarChart& chart, int width, int height) {
  Range yr;
  for (const Series& s : chart.series) {
    check(s, false);
    if (s.y.size() != chart.categories.size())
      throw InvalidArgument("svg", "series '" + s.label + "' needs one value per category");
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double e = s.err.empty() ? 0.0 : s.err[i];
      yr.add(s.y[i] + e);
      yr.add(s.y[i] - e);
    }
  }
  yr.finish(true);
  Canvas cv(width, height);
  cv.frame(chart.title, "", chart.y_label, yr);
  const auto to_y = [&](double v) { return kTop + cv.plot_h() * (1.0 - (v - yr.lo) / (yr.hi - yr.lo)); };

  const double n = std::max<double>(1.0, static_cast<double>(chart.categories.size()));
  const double slot = cv.plot_w() / n;
  const double ns = std::max<double>(1.0, static_cast<double>(chart.series.size()));
  const double bar = 0.8 * slot / ns;
  for (std::size_t i = 0; i < chart.categories.size(); ++i) {
    const double x0 = kLeft + slot * static_cast<double>(i) + 0.1 * slot;
    for (std::size_t k = 0; k < chart.series.size(); ++k) {
      const Series& s = chart.series[k];
      const double bx = x0 + bar * static_cast<double>(k);
      const double top = to_y(std::max(s.y[i], 0.0)), base = to_y(std::min(s.y[i], 0.0));
      cv.raw("<rect x=\"" + num(bx) + "\" y=\"" + num(top) + "\" width=\"" + num(bar) + "\" height=\"" +
             num(base - top) + "\" fill=\"" + kPalette[k % 6] + "\"/>\n");
      if (!s.err.empty() && s.err[i] > 0.0) {
        const double cx = bx + bar / 2.0, y0 = to_y(s.y[i] - s.err[i]), y1 = to_y(s.y[i] + s.err[i]);
        cv.line(cx, y0, cx, y1, "black");
        cv.line(cx - bar / 4.0, y0, cx + bar / 4.0, y0, "black");
        cv.line(cx - bar / 4.0, y1, cx + bar / 4.0, y1, "black");
      }
    }
    const double lx = kLeft + slot * (static_cast<double>(i) + 0.5), ly = kTop + cv.plot_h() + 14;
    cv.text(lx, ly, chart.categories[i], "end", " font-size=\"10\" transform=\"rotate(-35 " + num(lx) + ' ' + num(ly) + ")\"");
  }
  cv.legend(chart.series);
  return cv.finish();
}

std::string render_svg(const ScatterChart& chart, int width, int height) {
  Range xr, yr;
  for (const Series& s : chart.series) {
    check(s, true);
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double e = s.err.empty() ? 0.0 : s.err[i];
      xr.add(s.x[i]);
      yr.add(s.y[i] + e);
      yr.add(s.y[i] - e);
    }
  }
  xr.finish(false);
  yr.finish(false);
  Canvas cv(width, height);
  cv.frame(chart.title, chart.x_label, chart.y_label, yr);
  const auto to_x = [&](double v) { return kLeft + cv.plot_w() * (v - xr.lo) / (xr.hi - xr.lo); };
  const auto to_y = [&](double v) { return kTop + cv.plot_h() * (1.0 - (v - yr.lo) / (yr.hi - yr.lo)); };
  for (double t : ticks(xr)) {
    const double x = to_x(t);
    cv.line(x, kTop + cv.plot_h(), x, kTop + cv.plot_h() + 4, "black");
    cv.text(x, kTop + cv.plot_h() + 17, tick_label(t));
  }
  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const Series& s = chart.series[k];
    const std::string colour = kPalette[k % 6];
    if (chart.lines && s.x.size() > 1) {
      std::vector<std::size_t> order(s.x.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
      std::string pts;
      for (std::size_t i : order) pts += num(to_x(s.x[i])) + ',' + num(to_y(s.y[i])) + ' ';
      cv.raw("<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n");
    }
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double x = to_x(s.x[i]);
      if (!s.err.empty() && s.err[i] > 0.0) {
        const double y0 = to_y(s.y[i] - s.err[i]), y1 = to_y(s.y[i] + s.err[i]);
        cv.line(x, y0, x, y1, colour);
        cv.line(x - 3, y0, x + 3, y0, colour);
        cv.line(x - 3, y1, x + 3, y1, colour);
      }
      cv.raw("<circle cx=\"" + num(x) + "\" cy=\"" + num(to_y(s.y[i])) + "\" r=\"3\" fill=\"" + colour + "\"/>\n");
    }
  }
  cv.legend(chart.series);
  return cv.finish();
}

}  // namespace tangle

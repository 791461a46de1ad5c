#include "lesionbench/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace lesionbench::svg {

namespace {

constexpr double kWidth = 680.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 190.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr double kPlotW = kWidth - kLeft - kRight;
constexpr double kPlotH = kHeight - kTop - kBottom;

struct Frame {
  const Axes& a;
  double px(double x) const {
    const double t = (std::clamp(x, a.x_min, a.x_max) - a.x_min) / (a.x_max - a.x_min);
    return kLeft + t * kPlotW;
  }
  double py(double y) const {
    const double t = (std::clamp(y, a.y_min, a.y_max) - a.y_min) / (a.y_max - a.y_min);
    return kTop + (1.0 - t) * kPlotH;
  }
};

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return std::string(buf) == "-0.00" ? "0.00" : buf;
}

void open(std::ostringstream& out, double w, double h) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
      << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << num(w) << "\" height=\"" << num(h) << "\" fill=\"white\"/>\n";
}

void text(std::ostringstream& out, double x, double y, const std::string& s, const char* anchor = "middle",
          const char* extra = "") {
  out << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor << "\"" << extra << ">"
      << escape(s) << "</text>\n";
}

void axes_frame(std::ostringstream& out, const Axes& a, bool x_ticks) {
  const Frame f{a};
  text(out, kWidth / 2.0 - (kRight - kLeft) / 2.0, 24.0, a.title, "middle", " font-size=\"14\"");
  out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(kPlotW) << "\" height=\""
      << num(kPlotH) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= a.ticks; ++i) {
    const double t = static_cast<double>(i) / a.ticks;
    const double yv = a.y_min + t * (a.y_max - a.y_min);
    const double y = f.py(yv);
    out << "<line x1=\"" << num(kLeft - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kLeft) << "\" y2=\""
        << num(y) << "\" stroke=\"black\"/>\n";
    text(out, kLeft - 8, y + 4, tick(yv), "end");
    if (x_ticks) {
      const double xv = a.x_min + t * (a.x_max - a.x_min);
      const double x = f.px(xv);
      out << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop + kPlotH) << "\" x2=\"" << num(x) << "\" y2=\""
          << num(kTop + kPlotH + 4) << "\" stroke=\"black\"/>\n";
      text(out, x, kTop + kPlotH + 18, tick(xv));
    }
  }
  text(out, kLeft + kPlotW / 2.0, kHeight - 18, a.x_label);
  const double cy = kTop + kPlotH / 2.0;
  out << "<text x=\"18\" y=\"" << num(cy) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << num(cy)
      << ")\">" << escape(a.y_label) << "</text>\n";
}

void legend_entry(std::ostringstream& out, int i, const std::string& label, const std::string& color, bool dashed,
                  bool box) {
  const double x = kLeft + kPlotW + 16;
  const double y = kTop + 10 + 20.0 * i;
  if (box) {
    out << "<rect x=\"" << num(x) << "\" y=\"" << num(y - 6) << "\" width=\"20\" height=\"10\" fill=\"" << color
        << "\"/>\n";
  } else {
    out << "<line x1=\"" << num(x) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x + 20) << "\" y2=\"" << num(y)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << (dashed ? " stroke-dasharray=\"5,3\"" : "")
        << "/>\n";
  }
  text(out, x + 26, y + 4, label, "start");
}

}  // namespace

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string num(double v) {
  if (!std::isfinite(v)) return "0.000";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string line_plot(const Axes& a, const std::vector<Series>& series) {
  const Frame f{a};
  std::ostringstream out;
  open(out, kWidth, kHeight);
  axes_frame(out, a, true);

  for (const auto& s : series) {
    if (s.band_lo.empty()) continue;
    // One polygon per run of finite band values.
    std::size_t i = 0;
    while (i < s.x.size()) {
      while (i < s.x.size() && !(std::isfinite(s.band_lo[i]) && std::isfinite(s.band_hi[i]))) ++i;
      std::size_t j = i;
      while (j < s.x.size() && std::isfinite(s.band_lo[j]) && std::isfinite(s.band_hi[j])) ++j;
      if (j > i) {
        out << "<polygon fill=\"" << s.color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (std::size_t k = i; k < j; ++k) out << num(f.px(s.x[k])) << ',' << num(f.py(s.band_hi[k])) << ' ';
        for (std::size_t k = j; k-- > i;) out << num(f.px(s.x[k])) << ',' << num(f.py(s.band_lo[k])) << ' ';
        out << "\"/>\n";
      }
      i = j;
    }
  }
  for (const auto& s : series) {
    std::string path;
    bool pen = false;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.y[k])) {
        pen = false;
        continue;
      }
      path += (pen ? " L" : (path.empty() ? "M" : " M")) + num(f.px(s.x[k])) + ',' + num(f.py(s.y[k]));
      pen = true;
    }
    if (!path.empty()) {
      out << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\""
          << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
    }
    if (s.markers) {
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (!std::isfinite(s.y[k])) continue;
        out << "<circle cx=\"" << num(f.px(s.x[k])) << "\" cy=\"" << num(f.py(s.y[k])) << "\" r=\"3\" fill=\""
            << s.color << "\"/>\n";
      }
    }
  }
  for (std::size_t i = 0; i < series.size(); ++i)
    legend_entry(out, static_cast<int>(i), series[i].label, series[i].color, series[i].dashed, false);
  out << "</svg>\n";
  return out.str();
}

std::string bar_chart(const Axes& a, const std::vector<BarGroup>& groups) {
  const Frame f{a};
  std::ostringstream out;
  open(out, kWidth, kHeight);
  axes_frame(out, a, false);
  if (!groups.empty()) {
    const std::size_t n_cat = groups.front().bars.size();
    const double slot = kPlotW / static_cast<double>(std::max<std::size_t>(n_cat, 1));
    const double bar_w = slot * 0.8 / static_cast<double>(groups.size());
    for (std::size_t c = 0; c < n_cat; ++c) {
      const double x0 = kLeft + slot * static_cast<double>(c) + slot * 0.1;
      text(out, kLeft + slot * (static_cast<double>(c) + 0.5), kTop + kPlotH + 18, groups.front().bars[c].label);
      for (std::size_t g = 0; g < groups.size(); ++g) {
        const Bar& b = groups[g].bars.at(c);
        const double x = x0 + bar_w * static_cast<double>(g);
        const double y = f.py(b.value);
        out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(bar_w * 0.92)
            << "\" height=\"" << num(kTop + kPlotH - y) << "\" fill=\"" << groups[g].color << "\"/>\n";
        if (!b.annotation.empty()) text(out, x + bar_w * 0.46, y - 4, b.annotation, "middle", " font-size=\"10\"");
      }
    }
    for (std::size_t g = 0; g < groups.size(); ++g)
      legend_entry(out, static_cast<int>(g), groups[g].name, groups[g].color, false, true);
  }
  out << "</svg>\n";
  return out.str();
}

std::string table(const std::string& title, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows) {
  constexpr double kRow = 22.0;
  constexpr double kFirstCol = 120.0;
  constexpr double kCol = 130.0;
  const double w = 20.0 + kFirstCol + kCol * static_cast<double>(header.size() > 0 ? header.size() - 1 : 0) + 20.0;
  const double h = 50.0 + kRow * static_cast<double>(rows.size() + 1) + 10.0;
  std::ostringstream out;
  open(out, w, h);
  text(out, w / 2.0, 24.0, title, "middle", " font-size=\"14\"");
  auto col_x = [&](std::size_t c) { return c == 0 ? 20.0 : 20.0 + kFirstCol + kCol * static_cast<double>(c - 1); };
  for (std::size_t c = 0; c < header.size(); ++c) text(out, col_x(c), 50.0, header[c], "start", " font-weight=\"bold\"");
  out << "<line x1=\"20\" y1=\"56\" x2=\"" << num(w - 20) << "\" y2=\"56\" stroke=\"black\"/>\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double y = 50.0 + kRow * static_cast<double>(r + 1);
    for (std::size_t c = 0; c < rows[r].size() && c < header.size(); ++c) text(out, col_x(c), y, rows[r][c], "start");
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace lesionbench::svg

#include "scdp/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace scdp {

namespace {

struct Range {
  double lo = 0.0, hi = 1.0;
  void expand(const std::vector<double>& v) {
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  void pad() {
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    } else {
      const double m = 0.05 * (hi - lo);
      lo -= m;
      hi += m;
    }
  }
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(4) << v;
  return ss.str();
}

void plot_into(std::ostringstream& svg, const std::string& title,
               const std::string& x_label, const std::string& y_label,
               const std::vector<Series>& series, int width, int height,
               int y_offset) {
  const int ml = 60, mr = 16, mt = 34, mb = 44;
  const double px0 = ml, px1 = width - mr;
  const double py0 = y_offset + mt, py1 = y_offset + height - mb;
  Range xr, yr;
  xr.lo = xr.hi = series.empty() || series[0].x.empty() ? 0.0 : series[0].x[0];
  yr.lo = yr.hi = series.empty() || series[0].y.empty() ? 0.0 : series[0].y[0];
  for (const auto& s : series) {
    xr.expand(s.x);
    yr.expand(s.y);
  }
  xr.pad();
  yr.pad();
  auto sx = [&](double x) {
    return px0 + (x - xr.lo) / (xr.hi - xr.lo) * (px1 - px0);
  };
  auto sy = [&](double y) {
    return py1 - (y - yr.lo) / (yr.hi - yr.lo) * (py1 - py0);
  };
  svg << "<rect x='" << px0 << "' y='" << py0 << "' width='" << (px1 - px0)
      << "' height='" << (py1 - py0)
      << "' fill='none' stroke='#444' stroke-width='1'/>\n";
  svg << "<text x='" << (px0 + px1) / 2 << "' y='" << (py0 - 12)
      << "' text-anchor='middle' font-size='14'>" << title << "</text>\n";
  svg << "<text x='" << (px0 + px1) / 2 << "' y='" << (py1 + 34)
      << "' text-anchor='middle' font-size='12'>" << x_label << "</text>\n";
  svg << "<text x='" << (px0 - 44) << "' y='" << (py0 + py1) / 2
      << "' text-anchor='middle' font-size='12' transform='rotate(-90 "
      << (px0 - 44) << " " << (py0 + py1) / 2 << ")'>" << y_label
      << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    svg << "<line x1='" << sx(xv) << "' y1='" << py1 << "' x2='" << sx(xv)
        << "' y2='" << (py1 + 4) << "' stroke='#444'/>\n";
    svg << "<text x='" << sx(xv) << "' y='" << (py1 + 18)
        << "' text-anchor='middle' font-size='10'>" << fmt(xv) << "</text>\n";
    svg << "<line x1='" << (px0 - 4) << "' y1='" << sy(yv) << "' x2='" << px0
        << "' y2='" << sy(yv) << "' stroke='#444'/>\n";
    svg << "<text x='" << (px0 - 8) << "' y='" << (sy(yv) + 3)
        << "' text-anchor='end' font-size='10'>" << fmt(yv) << "</text>\n";
  }
  double lx = px0 + 10;
  for (const auto& s : series) {
    svg << "<polyline fill='none' stroke='" << s.color
        << "' stroke-width='1.5' points='";
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      svg << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
    }
    svg << "'/>\n";
    svg << "<rect x='" << lx << "' y='" << (py0 + 6)
        << "' width='12' height='3' fill='" << s.color << "'/>\n";
    svg << "<text x='" << (lx + 16) << "' y='" << (py0 + 11)
        << "' font-size='10'>" << s.label << "</text>\n";
    lx += 16 + 8 + 7 * static_cast<double>(s.label.size()) + 12;
  }
}

}  // namespace

std::string render_line_plot_svg(const std::string& title,
                                 const std::string& x_label,
                                 const std::string& y_label,
                                 const std::vector<Series>& series, int width,
                                 int height) {
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "' font-family='sans-serif'>\n";
  plot_into(svg, title, x_label, y_label, series, width, height, 0);
  svg << "</svg>\n";
  return svg.str();
}

std::string render_tracking_svg(const std::vector<double>& t,
                                const std::vector<double>& v_cmd,
                                const std::vector<double>& v,
                                const std::vector<double>& w_cmd,
                                const std::vector<double>& w) {
  const int width = 720, height = 420;
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << 2 * height << "' font-family='sans-serif'>\n";
  plot_into(svg, "forward speed tracking", "time (s)", "v (m/s)",
            {{"commanded", "#888888", t, v_cmd}, {"realized", "#c0392b", t, v}},
            width, height, 0);
  plot_into(svg, "yaw rate tracking", "time (s)", "omega (rad/s)",
            {{"commanded", "#888888", t, w_cmd}, {"realized", "#2980b9", t, w}},
            width, height, height);
  svg << "</svg>\n";
  return svg.str();
}

std::string render_loss_svg(const std::vector<TrainLogRecord>& log) {
  Series total{"total", "#c0392b", {}, {}};
  Series ddpm{"denoising", "#2980b9", {}, {}};
  for (const auto& r : log) {
    const double s = static_cast<double>(r.step);
    total.x.push_back(s);
    total.y.push_back(r.loss);
    ddpm.x.push_back(s);
    ddpm.y.push_back(r.ddpm_res);
  }
  return render_line_plot_svg("training loss", "update", "loss",
                              {total, ddpm});
}

std::string render_ablation_markdown(
    const std::vector<AblationOutcome>& rows) {
  double lo = 1.0, hi = 0.0;
  for (const auto& r : rows) {
    if (!r.ok) continue;
    lo = std::min(lo, r.success_rate);
    hi = std::max(hi, r.success_rate);
  }
  auto swatch = [&](double v) {
    // green = best in sweep, red = worst
    if (hi - lo < 1e-12) return std::string("\xF0\x9F\x9F\xA9");  // green
    const double u = (v - lo) / (hi - lo);
    if (u >= 0.75) return std::string("\xF0\x9F\x9F\xA9");  // green
    if (u >= 0.5) return std::string("\xF0\x9F\x9F\xA8");   // yellow
    if (u >= 0.25) return std::string("\xF0\x9F\x9F\xA7");  // orange
    return std::string("\xF0\x9F\x9F\xA5");                 // red
  };
  std::ostringstream md;
  md << "| cell | success rate | |\n|---|---|---|\n";
  for (const auto& r : rows) {
    if (r.ok) {
      md << "| " << r.name << " | " << std::fixed << std::setprecision(3)
         << r.success_rate << " | " << swatch(r.success_rate) << " |\n";
    } else {
      md << "| " << r.name << " | failed: " << r.error << " | \xE2\x9D\x8C |\n";
    }
  }
  return md.str();
}

}  // namespace scdp

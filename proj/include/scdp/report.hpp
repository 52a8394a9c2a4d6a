#pragma once

// Report artifacts: hand-rolled SVG line plots (command tracking traces,
// training loss curves) and markdown heatmap tables for ablation sweeps.

#include <string>
#include <vector>

#include "scdp/eval.hpp"
#include "scdp/training.hpp"

namespace scdp {

struct Series {
  std::string label;
  std::string color;  // CSS color
  std::vector<double> x;
  std::vector<double> y;
};

// Multi-series line plot with axes, ticks, and a legend.
std::string render_line_plot_svg(const std::string& title,
                                 const std::string& x_label,
                                 const std::string& y_label,
                                 const std::vector<Series>& series,
                                 int width = 720, int height = 420);

// Commanded vs realized v and omega, stacked as two plots in one SVG.
std::string render_tracking_svg(const std::vector<double>& t,
                                const std::vector<double>& v_cmd,
                                const std::vector<double>& v,
                                const std::vector<double>& w_cmd,
                                const std::vector<double>& w);

std::string render_loss_svg(const std::vector<TrainLogRecord>& log);

// Markdown table of ablation outcomes with a green-high / red-low cell
// shading convention (emoji swatches, since markdown has no cell styling).
std::string render_ablation_markdown(const std::vector<AblationOutcome>& rows);

}  // namespace scdp

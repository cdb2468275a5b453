#pragma once

#include <array>
#include <string>
#include <vector>

#include "dscn/image.hpp"

namespace dscn {

// Minimal line-plot rasterizer for history/lr curves (no text, just axes,
// gridlines and polylines).
struct PlotSeries {
  std::vector<double> y;
  std::array<float, 3> color{0.0f, 0.0f, 0.0f};
};

ImageTensor render_line_plot(const std::vector<PlotSeries>& series, int width, int height);

// Stacked panels: losses (train/val) on top, optional lr trace below.
ImageTensor render_training_plot(const std::vector<double>& train_loss,
                                 const std::vector<double>& val_loss,
                                 const std::vector<double>& lr, int width);

}  // namespace dscn

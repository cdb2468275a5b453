#include "dscn/plot.hpp"

#include <algorithm>
#include <cmath>

namespace dscn {

namespace {

void draw_line(ImageTensor& img, double x0, double y0, double x1, double y1,
               const std::array<float, 3>& color) {
  double dx = x1 - x0, dy = y1 - y0;
  int steps = static_cast<int>(std::max(std::abs(dx), std::abs(dy))) + 1;
  for (int i = 0; i <= steps; ++i) {
    double t = static_cast<double>(i) / steps;
    int x = static_cast<int>(std::lround(x0 + t * dx));
    int y = static_cast<int>(std::lround(y0 + t * dy));
    if (x < 0 || x >= img.width || y < 0 || y >= img.height) continue;
    for (int c = 0; c < 3; ++c) img.at(y, x, c) = color[static_cast<size_t>(c)];
  }
}

}  // namespace

ImageTensor render_line_plot(const std::vector<PlotSeries>& series, int width, int height) {
  ImageTensor img = ImageTensor::zeros(height, width);
  std::fill(img.pixels.begin(), img.pixels.end(), 1.0f);  // white background

  const int ml = 8, mr = 4, mt = 4, mb = 8;  // margins
  const int pw = width - ml - mr, ph = height - mt - mb;

  double ymin = 0.0, ymax = 1.0;
  size_t nmax = 2;
  bool first = true;
  for (const PlotSeries& s : series)
    for (double v : s.y) {
      if (first) {
        ymin = ymax = v;
        first = false;
      }
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  for (const PlotSeries& s : series) nmax = std::max(nmax, s.y.size());
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;

  // frame + quarter gridlines
  std::array<float, 3> grey{0.8f, 0.8f, 0.8f};
  std::array<float, 3> black{0.2f, 0.2f, 0.2f};
  for (int g = 1; g < 4; ++g) {
    int gy = mt + ph * g / 4;
    draw_line(img, ml, gy, ml + pw, gy, grey);
  }
  draw_line(img, ml, mt, ml, mt + ph, black);
  draw_line(img, ml, mt + ph, ml + pw, mt + ph, black);

  for (const PlotSeries& s : series) {
    if (s.y.size() < 2) continue;
    for (size_t i = 0; i + 1 < s.y.size(); ++i) {
      auto px = [&](size_t k) {
        return ml + static_cast<double>(pw) * static_cast<double>(k) /
                        static_cast<double>(nmax - 1);
      };
      auto py = [&](double v) { return mt + ph - ph * (v - ymin) / (ymax - ymin); };
      draw_line(img, px(i), py(s.y[i]), px(i + 1), py(s.y[i + 1]), s.color);
    }
  }
  return img;
}

ImageTensor render_training_plot(const std::vector<double>& train_loss,
                                 const std::vector<double>& val_loss,
                                 const std::vector<double>& lr, int width) {
  std::vector<PlotSeries> loss_series;
  loss_series.push_back({train_loss, {0.1f, 0.3f, 0.9f}});
  loss_series.push_back({val_loss, {0.9f, 0.2f, 0.1f}});
  ImageTensor top = render_line_plot(loss_series, width, width / 2);
  if (lr.empty()) return top;

  std::vector<PlotSeries> lr_series;
  lr_series.push_back({lr, {0.1f, 0.6f, 0.2f}});
  ImageTensor bottom = render_line_plot(lr_series, width, width / 2);

  ImageTensor out = ImageTensor::zeros(top.height + bottom.height, width);
  std::copy(top.pixels.begin(), top.pixels.end(), out.pixels.begin());
  std::copy(bottom.pixels.begin(), bottom.pixels.end(),
            out.pixels.begin() + static_cast<long>(top.pixels.size()));
  return out;
}

}  // namespace dscn

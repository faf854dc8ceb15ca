#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace bladeenv::pipeline::svg {

enum class Style { kLine, kPoints };

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  Style style = Style::kPoints;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
  /// Dashed vertical reference lines.
  std::vector<double> x_marks;
};

/// Standalone SVG document of a 2D chart; non-finite (and, on log axes,
/// nonpositive) points are dropped.
std::string render(const Plot& plot);

/// Diverging-colour heatmap of a square matrix, symmetric about zero; large
/// matrices are block-averaged.
std::string heatmap(const Eigen::MatrixXd& m, const std::string& title);

}  // namespace bladeenv::pipeline::svg

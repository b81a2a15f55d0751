#pragma once

#include <string>
#include <vector>

// Minimal static-figure renderer: self-contained SVG strings for the three
// figure shapes the analyses emit (line chart, class scatter, heatmap).
namespace sbb {

struct Series {
    std::string                             name;
    std::vector<std::pair<double, double>>  points;  // (x, y)
};

struct PointClass {
    std::string                             name;
    std::vector<std::pair<double, double>>  points;
};

std::string svg_line_chart(const std::string & title, const std::string & x_label,
                           const std::string & y_label,
                           const std::vector<Series> & series, int width = 760,
                           int height = 440);

std::string svg_scatter(const std::string & title, const std::string & x_label,
                        const std::string & y_label,
                        const std::vector<PointClass> & classes, int width = 760,
                        int height = 520);

// Square heatmap with per-cell value text; values expected in [0, 1].
std::string svg_heatmap(const std::string & title,
                        const std::vector<std::string> & labels,
                        const std::vector<std::vector<double>> & values,
                        int cell = 56);

// Rectangular heatmap (rows × columns may differ); values expected in [0, 1].
std::string svg_matrix_heatmap(const std::string & title,
                               const std::vector<std::string> & row_labels,
                               const std::vector<std::string> & col_labels,
                               const std::vector<std::vector<double>> & values,
                               int cell = 56);

void save_svg(const std::string & path, const std::string & svg);

}  // namespace sbb

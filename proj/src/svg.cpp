#include "sbb/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sbb/util.hpp"

namespace sbb {

namespace {

const char * kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                           "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string esc(const std::string & s) {
    std::string out;
    for (char c : s) {
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

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void   add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (!std::isfinite(lo)) { lo = 0; hi = 1; }
        if (hi - lo < 1e-12) { lo -= 0.5; hi += 0.5; }
        const double m = 0.05 * (hi - lo);
        lo -= m;
        hi += m;
    }
};

struct Frame {
    int    width = 0, height = 0;
    int    left = 64, right = 16, top = 40, bottom = 48;
    Range  xr{}, yr{};
    double sx(double x) const {
        return left + (x - xr.lo) / (xr.hi - xr.lo) * (width - left - right);
    }
    double sy(double y) const {
        return height - bottom -
               (y - yr.lo) / (yr.hi - yr.lo) * (height - top - bottom);
    }
};

void open_svg(std::ostringstream & os, int w, int h, const std::string & title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
       << h << "\" viewBox=\"0 0 " << w << " " << h << "\" font-family=\"sans-serif\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\""
       << " font-weight=\"bold\">" << esc(title) << "</text>\n";
}

void draw_axes(std::ostringstream & os, const Frame & f, const std::string & x_label,
               const std::string & y_label) {
    os << "<rect x=\"" << f.left << "\" y=\"" << f.top << "\" width=\""
       << f.width - f.left - f.right << "\" height=\"" << f.height - f.top - f.bottom
       << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double tx = f.xr.lo + (f.xr.hi - f.xr.lo) * i / 4.0;
        const double ty = f.yr.lo + (f.yr.hi - f.yr.lo) * i / 4.0;
        os << "<text x=\"" << fmt(f.sx(tx)) << "\" y=\"" << f.height - f.bottom + 16
           << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt(tx) << "</text>\n";
        os << "<text x=\"" << f.left - 6 << "\" y=\"" << fmt(f.sy(ty) + 3)
           << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(ty) << "</text>\n";
    }
    os << "<text x=\"" << (f.left + f.width - f.right) / 2 << "\" y=\""
       << f.height - 10 << "\" text-anchor=\"middle\" font-size=\"12\">" << esc(x_label)
       << "</text>\n";
    os << "<text x=\"14\" y=\"" << (f.top + f.height - f.bottom) / 2
       << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
       << (f.top + f.height - f.bottom) / 2 << ")\">" << esc(y_label) << "</text>\n";
}

void draw_legend(std::ostringstream & os, const Frame & f,
                 const std::vector<std::string> & names) {
    int y = f.top + 14;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const char * color = kPalette[i % kPaletteSize];
        os << "<rect x=\"" << f.width - f.right - 150 << "\" y=\"" << y - 9
           << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n"
           << "<text x=\"" << f.width - f.right - 136 << "\" y=\"" << y
           << "\" font-size=\"11\">" << esc(names[i]) << "</text>\n";
        y += 16;
    }
}

} // namespace

std::string svg_line_chart(const std::string & title, const std::string & x_label,
                           const std::string & y_label,
                           const std::vector<Series> & series, int width, int height) {
    Frame f{width, height};
    for (const auto & s : series)
        for (const auto & [x, y] : s.points) {
            f.xr.add(x);
            f.yr.add(y);
        }
    f.xr.pad();
    f.yr.pad();

    std::ostringstream os;
    open_svg(os, width, height, title);
    draw_axes(os, f, x_label, y_label);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char * color = kPalette[i % kPaletteSize];
        names.push_back(series[i].name);
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto & [x, y] : series[i].points)
            os << fmt(f.sx(x)) << "," << fmt(f.sy(y)) << " ";
        os << "\"/>\n";
        for (const auto & [x, y] : series[i].points)
            os << "<circle cx=\"" << fmt(f.sx(x)) << "\" cy=\"" << fmt(f.sy(y))
               << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    draw_legend(os, f, names);
    os << "</svg>\n";
    return os.str();
}

std::string svg_scatter(const std::string & title, const std::string & x_label,
                        const std::string & y_label,
                        const std::vector<PointClass> & classes, int width, int height) {
    Frame f{width, height};
    for (const auto & c : classes)
        for (const auto & [x, y] : c.points) {
            f.xr.add(x);
            f.yr.add(y);
        }
    f.xr.pad();
    f.yr.pad();

    std::ostringstream os;
    open_svg(os, width, height, title);
    draw_axes(os, f, x_label, y_label);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const char * color = kPalette[i % kPaletteSize];
        names.push_back(classes[i].name);
        for (const auto & [x, y] : classes[i].points)
            os << "<circle cx=\"" << fmt(f.sx(x)) << "\" cy=\"" << fmt(f.sy(y))
               << "\" r=\"3.5\" fill=\"" << color << "\" fill-opacity=\"0.65\"/>\n";
    }
    draw_legend(os, f, names);
    os << "</svg>\n";
    return os.str();
}

std::string svg_heatmap(const std::string & title, const std::vector<std::string> & labels,
                        const std::vector<std::vector<double>> & values, int cell) {
    const int n      = static_cast<int>(values.size());
    const int left   = 110;
    const int top    = 60;
    const int width  = left + n * cell + 20;
    const int height = top + n * cell + 40;

    std::ostringstream os;
    open_svg(os, width, height, title);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(values[i].size()) != n)
            throw ValidationError("heatmap matrix must be square");
        os << "<text x=\"" << left - 6 << "\" y=\"" << top + i * cell + cell / 2 + 4
           << "\" text-anchor=\"end\" font-size=\"11\">"
           << esc(i < static_cast<int>(labels.size()) ? labels[i] : std::to_string(i))
           << "</text>\n";
        os << "<text x=\"" << left + i * cell + cell / 2 << "\" y=\"" << top - 8
           << "\" text-anchor=\"middle\" font-size=\"11\">"
           << esc(i < static_cast<int>(labels.size()) ? labels[i] : std::to_string(i))
           << "</text>\n";
        for (int j = 0; j < n; ++j) {
            const double v = std::clamp(values[i][j], 0.0, 1.0);
            // White (0) to deep blue (1).
            const int r = static_cast<int>(255 - 205 * v);
            const int g = static_cast<int>(255 - 155 * v);
            const int b = 255;
            os << "<rect x=\"" << left + j * cell << "\" y=\"" << top + i * cell
               << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << r
               << "," << g << "," << b << ")\" stroke=\"#ccc\"/>\n";
            std::ostringstream val;
            val.precision(2);
            val << std::fixed << values[i][j];
            os << "<text x=\"" << left + j * cell + cell / 2 << "\" y=\""
               << top + i * cell + cell / 2 + 4
               << "\" text-anchor=\"middle\" font-size=\"11\" fill=\""
               << (v > 0.6 ? "white" : "#222") << "\">" << val.str() << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

void save_svg(const std::string & path, const std::string & svg) {
    write_text_file_atomic(path, svg);
}

}  // namespace sbb

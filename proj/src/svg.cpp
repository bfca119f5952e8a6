#include "spm/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "spm/errors.hpp"

namespace spm::svg {

namespace {

constexpr double kPanelW = 260.0;
constexpr double kPanelH = 200.0;
constexpr double kMarginL = 52.0;
constexpr double kMarginR = 14.0;
constexpr double kMarginT = 30.0;
constexpr double kMarginB = 42.0;
constexpr double kLegendH = 26.0;
constexpr double kTitleH = 24.0;

const char* kPalette[] = {"#1b6ca8", "#d1495b", "#2e933c", "#edae49",
                          "#7768ae", "#5f6262", "#17a2b8", "#8c5e58"};
constexpr int kPaletteSize = 8;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Scale {
  double lo = 0.0, hi = 1.0, out_lo = 0.0, out_hi = 1.0;
  double operator()(double v) const {
    if (hi == lo) return 0.5 * (out_lo + out_hi);
    return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
  }
};

}  // namespace

void write_panel_grid(const std::filesystem::path& path,
                      const std::vector<std::vector<Panel>>& panel_rows,
                      const std::string& title) {
  std::size_t cols = 0;
  for (const auto& row : panel_rows) cols = std::max(cols, row.size());
  const std::size_t rows = panel_rows.size();
  if (rows == 0 || cols == 0) throw std::invalid_argument("empty panel grid");

  // Legend entries in first-seen order.
  std::vector<std::string> labels;
  for (const auto& row : panel_rows) {
    for (const auto& panel : row) {
      for (const auto& s : panel.series) {
        if (std::find(labels.begin(), labels.end(), s.label) == labels.end()) {
          labels.push_back(s.label);
        }
      }
    }
  }
  std::map<std::string, int> color_of;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    color_of[labels[i]] = static_cast<int>(i % kPaletteSize);
  }

  const double cell_w = kMarginL + kPanelW + kMarginR;
  const double cell_h = kMarginT + kPanelH + kMarginB;
  const double width = cell_w * static_cast<double>(cols);
  const double height =
      kTitleH + kLegendH + cell_h * static_cast<double>(rows) + 8.0;

  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
      << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width)
      << " " << num(height) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(width / 2) << "\" y=\"17\" font-family=\"sans-serif\""
      << " font-size=\"14\" text-anchor=\"middle\">" << title << "</text>\n";

  // Legend.
  {
    const double total = 120.0 * static_cast<double>(labels.size());
    double x = std::max(10.0, (width - total) / 2.0);
    const double y = kTitleH + 12.0;
    for (const auto& label : labels) {
      const char* color = kPalette[color_of[label]];
      out << "<line x1=\"" << num(x) << "\" y1=\"" << num(y) << "\" x2=\""
          << num(x + 22) << "\" y2=\"" << num(y) << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
      out << "<text x=\"" << num(x + 27) << "\" y=\"" << num(y + 4)
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << label
          << "</text>\n";
      x += 120.0;
    }
  }

  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < panel_rows[r].size(); ++c) {
      const Panel& panel = panel_rows[r][c];
      const double ox = cell_w * static_cast<double>(c) + kMarginL;
      const double oy = kTitleH + kLegendH + cell_h * static_cast<double>(r) +
                        kMarginT;

      double x_lo = 0.0, x_hi = 1.0;
      bool have_x = false;
      for (const auto& s : panel.series) {
        for (double v : s.x) {
          if (!have_x) {
            x_lo = x_hi = v;
            have_x = true;
          }
          x_lo = std::min(x_lo, v);
          x_hi = std::max(x_hi, v);
        }
      }
      if (x_hi == x_lo) x_hi = x_lo + 1.0;
      const Scale sx{x_lo, x_hi, ox, ox + kPanelW};
      const Scale sy{panel.y_min, panel.y_max, oy + kPanelH, oy};

      out << "<rect x=\"" << num(ox) << "\" y=\"" << num(oy) << "\" width=\""
          << num(kPanelW) << "\" height=\"" << num(kPanelH)
          << "\" fill=\"none\" stroke=\"#888\"/>\n";
      out << "<text x=\"" << num(ox + kPanelW / 2) << "\" y=\"" << num(oy - 8)
          << "\" font-family=\"sans-serif\" font-size=\"12\""
          << " text-anchor=\"middle\">" << panel.title << "</text>\n";

      // y ticks at quarters, x ticks at the data points of the first series.
      for (int k = 0; k <= 4; ++k) {
        const double v =
            panel.y_min + (panel.y_max - panel.y_min) * k / 4.0;
        const double y = sy(v);
        out << "<line x1=\"" << num(ox) << "\" y1=\"" << num(y) << "\" x2=\""
            << num(ox + kPanelW) << "\" y2=\"" << num(y)
            << "\" stroke=\"#eee\"/>\n";
        out << "<text x=\"" << num(ox - 6) << "\" y=\"" << num(y + 3.5)
            << "\" font-family=\"sans-serif\" font-size=\"10\""
            << " text-anchor=\"end\">" << num(v) << "</text>\n";
      }
      if (!panel.series.empty()) {
        for (double v : panel.series.front().x) {
          const double x = sx(v);
          out << "<line x1=\"" << num(x) << "\" y1=\"" << num(oy + kPanelH)
              << "\" x2=\"" << num(x) << "\" y2=\"" << num(oy + kPanelH + 4)
              << "\" stroke=\"#888\"/>\n";
          out << "<text x=\"" << num(x) << "\" y=\"" << num(oy + kPanelH + 15)
              << "\" font-family=\"sans-serif\" font-size=\"10\""
              << " text-anchor=\"middle\">" << num(v) << "</text>\n";
        }
      }
      out << "<text x=\"" << num(ox + kPanelW / 2) << "\" y=\""
          << num(oy + kPanelH + 32)
          << "\" font-family=\"sans-serif\" font-size=\"11\""
          << " text-anchor=\"middle\">" << panel.x_label << "</text>\n";
      out << "<text x=\"" << num(ox - 38) << "\" y=\"" << num(oy + kPanelH / 2)
          << "\" font-family=\"sans-serif\" font-size=\"11\""
          << " text-anchor=\"middle\" transform=\"rotate(-90 " << num(ox - 38)
          << " " << num(oy + kPanelH / 2) << ")\">" << panel.y_label
          << "</text>\n";

      for (const auto& s : panel.series) {
        const char* color = kPalette[color_of[s.label]];
        std::string points;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          points += num(sx(s.x[i])) + "," + num(sy(s.y[i])) + " ";
        }
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.6\" points=\"" << points << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          out << "<circle cx=\"" << num(sx(s.x[i])) << "\" cy=\""
              << num(sy(s.y[i])) << "\" r=\"2.2\" fill=\"" << color << "\"/>\n";
          if (i < s.err.size() && s.err[i] > 0.0) {
            const double y_lo = sy(s.y[i] - s.err[i]);
            const double y_hi = sy(s.y[i] + s.err[i]);
            const double x = sx(s.x[i]);
            out << "<line x1=\"" << num(x) << "\" y1=\"" << num(y_lo)
                << "\" x2=\"" << num(x) << "\" y2=\"" << num(y_hi)
                << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
          }
        }
      }
    }
  }
  out << "</svg>\n";
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace spm::svg

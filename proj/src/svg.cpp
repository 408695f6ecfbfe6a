#include "apulse/svg.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace apulse {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 56;
constexpr int kMarginRight = 16;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 44;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b"};

// Fixed 3-decimal formatting keeps the output byte-stable across platforms.
std::string fixed(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(3);
  s << v;
  return s.str();
}

}  // namespace

std::string render_f1_chart(const std::string& title,
                            const std::vector<SvgSeries>& series) {
  int n = 0;
  for (const auto& s : series) {
    if (s.mean.size() != s.stderr_band.size())
      throw std::invalid_argument("render_f1_chart: band length mismatch");
    n = std::max(n, static_cast<int>(s.mean.size()));
  }
  if (n < 1) throw std::invalid_argument("render_f1_chart: empty series");

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  const auto sx = [&](double it) {
    return kMarginLeft + (n > 1 ? (it - 1.0) / (n - 1.0) : 0.5) * plot_w;
  };
  const auto sy = [&](double f1) {
    const double c = std::clamp(f1, 0.0, 1.0);
    return kMarginTop + (1.0 - c) * plot_h;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";

  // axes and gridlines at F1 = 0, 0.2, ..., 1
  for (int g = 0; g <= 5; ++g) {
    const double f1 = g / 5.0;
    const double y = sy(f1);
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << fixed(y) << "\" x2=\""
        << (kWidth - kMarginRight) << "\" y2=\"" << fixed(y)
        << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << (kMarginLeft - 8) << "\" y=\"" << fixed(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fixed(f1) << "</text>\n";
  }
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\""
      << kMarginLeft << "\" y2=\"" << (kHeight - kMarginBottom)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << (kHeight - kMarginBottom)
      << "\" x2=\"" << (kWidth - kMarginRight) << "\" y2=\""
      << (kHeight - kMarginBottom) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int g = 0; g <= 4; ++g) {
    const double it = 1.0 + g * (n - 1) / 4.0;
    out << "<text x=\"" << fixed(sx(it)) << "\" y=\""
        << (kHeight - kMarginBottom + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << static_cast<int>(it + 0.5) << "</text>\n";
  }
  out << "<text x=\"" << (kMarginLeft + plot_w / 2) << "\" y=\""
      << (kHeight - 8)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">iteration</text>\n";
  out << "<text x=\"16\" y=\"" << (kMarginTop + plot_h / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 16 "
      << (kMarginTop + plot_h / 2) << ")\">mean F1</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* color = kColors[s % (sizeof(kColors) / sizeof(kColors[0]))];
    const int len = static_cast<int>(ser.mean.size());
    if (len < 1) continue;
    bool has_band = false;
    for (int i = 0; i < len; ++i)
      if (ser.stderr_band(i) > 0.0) has_band = true;
    if (has_band) {
      out << "<path d=\"";
      for (int i = 0; i < len; ++i)
        out << (i == 0 ? 'M' : 'L') << fixed(sx(i + 1)) << ' '
            << fixed(sy(ser.mean(i) + ser.stderr_band(i)));
      for (int i = len - 1; i >= 0; --i)
        out << 'L' << fixed(sx(i + 1)) << ' '
            << fixed(sy(ser.mean(i) - ser.stderr_band(i)));
      out << "Z\" fill=\"" << color << "\" fill-opacity=\"0.15\" "
             "stroke=\"none\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (int i = 0; i < len; ++i) {
      if (i) out << ' ';
      out << fixed(sx(i + 1)) << ',' << fixed(sy(ser.mean(i)));
    }
    out << "\"/>\n";
    const double ly = kMarginTop + 14.0 + 16.0 * static_cast<double>(s);
    out << "<line x1=\"" << (kWidth - kMarginRight - 140) << "\" y1=\""
        << fixed(ly - 4) << "\" x2=\"" << (kWidth - kMarginRight - 116)
        << "\" y2=\"" << fixed(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    out << "<text x=\"" << (kWidth - kMarginRight - 110) << "\" y=\""
        << fixed(ly) << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << ser.label << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace apulse

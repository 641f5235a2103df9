#include "qvpo/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "qvpo/errors.hpp"
#include "qvpo/metrics.hpp"

namespace qvpo {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Range {
  double lo, hi;
  double span() const { return hi - lo; }
};

Range padded(double lo, double hi) {
  double pad = 0.05 * (hi - lo);
  if (pad == 0.0) pad = 1.0;
  return {lo - pad, hi + pad};
}

}  // namespace

void write_learning_curve_svg(const std::filesystem::path& metrics_csv,
                              const std::filesystem::path& out_svg) {
  const std::vector<MetricsRow> rows = read_metrics(metrics_csv);
  if (rows.empty())
    throw IoError(metrics_csv.string() + ": no data rows to plot");

  double x_lo = rows.front().step, x_hi = rows.front().step;
  double y_lo = rows.front().eval_return_mean - rows.front().eval_return_std;
  double y_hi = rows.front().eval_return_mean + rows.front().eval_return_std;
  for (const MetricsRow& r : rows) {
    x_lo = std::min(x_lo, static_cast<double>(r.step));
    x_hi = std::max(x_hi, static_cast<double>(r.step));
    y_lo = std::min(y_lo, r.eval_return_mean - r.eval_return_std);
    y_hi = std::max(y_hi, r.eval_return_mean + r.eval_return_std);
  }
  const Range xr = padded(x_lo, x_hi);
  const Range yr = padded(y_lo, y_hi);

  const double width = 640, height = 420;
  const double ml = 70, mr = 20, mt = 20, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto sx = [&](double x) { return ml + (x - xr.lo) / xr.span() * pw; };
  auto sy = [&](double y) { return mt + (yr.hi - y) / yr.span() * ph; };

  std::ofstream out(out_svg);
  if (!out) throw IoError("cannot open plot file for writing: " + out_svg.string());

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<g id=\"plot\" data-x-min=\"" << num(xr.lo) << "\" data-x-max=\""
      << num(xr.hi) << "\" data-y-min=\"" << num(yr.lo) << "\" data-y-max=\""
      << num(yr.hi) << "\">\n";

  // +-std band
  out << "<polygon fill=\"#aec6e8\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
  for (const MetricsRow& r : rows)
    out << num(sx(r.step)) << ","
        << num(sy(r.eval_return_mean + r.eval_return_std)) << " ";
  for (auto it = rows.rbegin(); it != rows.rend(); ++it)
    out << num(sx(it->step)) << ","
        << num(sy(it->eval_return_mean - it->eval_return_std)) << " ";
  out << "\"/>\n";

  // mean curve
  out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.8\" points=\"";
  for (const MetricsRow& r : rows)
    out << num(sx(r.step)) << "," << num(sy(r.eval_return_mean)) << " ";
  out << "\"/>\n";

  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
  const int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    const double fx = xr.lo + xr.span() * i / ticks;
    const double fy = yr.lo + yr.span() * i / ticks;
    out << "<line x1=\"" << num(sx(fx)) << "\" y1=\"" << mt + ph << "\" x2=\""
        << num(sx(fx)) << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << num(sx(fx)) << "\" y=\"" << mt + ph + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">" << num(fx) << "</text>\n"
        << "<line x1=\"" << ml - 5 << "\" y1=\"" << num(sy(fy)) << "\" x2=\""
        << ml << "\" y2=\"" << num(sy(fy)) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << ml - 8 << "\" y=\"" << num(sy(fy) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << num(fy) << "</text>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
      << "\" font-size=\"13\" text-anchor=\"middle\">environment steps</text>\n"
      << "<text x=\"16\" y=\"" << mt + ph / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << mt + ph / 2 << ")\">evaluation return</text>\n"
      << "</g>\n</svg>\n";
  out.flush();
  if (!out) throw IoError("failed writing plot to " + out_svg.string());
}

}  // namespace qvpo

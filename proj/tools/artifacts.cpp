#include "artifacts.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lab {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

namespace {

constexpr double kWidth = 720, kHeight = 460;
constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

std::string escape(const std::string& s) {
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

std::string fixed(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Axis {
  bool log = false;
  double lo = 0, hi = 1;
  double pixel_lo = 0, pixel_hi = 1;

  double map(double v) const {
    double t = log ? std::log10(v) : v;
    return pixel_lo + (t - lo) / (hi - lo) * (pixel_hi - pixel_lo);
  }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0); }
};

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    double pad = lo == 0 ? 1.0 : 0.05 * std::abs(lo);
    lo -= pad;
    hi += pad;
  }
}

std::vector<double> ticks(const Axis& a) {
  std::vector<double> out;
  if (a.log && a.hi - a.lo >= 1.0) {
    for (double k = std::ceil(a.lo); k <= a.hi + 1e-12; k += 1.0) out.push_back(k);
    return out;
  }
  const double raw = (a.hi - a.lo) / 5;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  for (double v = std::ceil(a.lo / step) * step; v <= a.hi + 1e-9 * step; v += step) out.push_back(v);
  return out;
}

std::string tick_label(const Axis& a, double t) {
  if (a.log) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", std::pow(10.0, t));
    return buf;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(t) < 1e-12 ? 0.0 : t);
  return buf;
}

}  // namespace

std::string render_svg(const Plot& p) {
  Axis ax{p.log_x}, ay{p.log_y};
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!ax.usable(s.x[i]) || !ay.usable(s.y[i])) continue;
      double tx = ax.log ? std::log10(s.x[i]) : s.x[i];
      double ty = ay.log ? std::log10(s.y[i]) : s.y[i];
      xlo = std::min(xlo, tx), xhi = std::max(xhi, tx);
      ylo = std::min(ylo, ty), yhi = std::max(yhi, ty);
    }
  for (const auto& [label, v] : p.reference_lines)
    if (ay.usable(v)) {
      double ty = ay.log ? std::log10(v) : v;
      ylo = std::min(ylo, ty), yhi = std::max(yhi, ty);
    }
  if (!std::isfinite(xlo)) xlo = 0, xhi = 1;
  if (!std::isfinite(ylo)) ylo = 0, yhi = 1;
  widen(xlo, xhi);
  widen(ylo, yhi);
  const double padx = 0.04 * (xhi - xlo), pady = 0.06 * (yhi - ylo);
  ax.lo = xlo - padx, ax.hi = xhi + padx;
  ay.lo = ylo - pady, ay.hi = yhi + pady;
  ax.pixel_lo = kLeft, ax.pixel_hi = kWidth - kRight;
  ay.pixel_lo = kHeight - kBottom, ay.pixel_hi = kTop;
  if (p.equal_aspect) {
    const double sx = (ax.pixel_hi - ax.pixel_lo) / (ax.hi - ax.lo);
    const double sy = (ay.pixel_lo - ay.pixel_hi) / (ay.hi - ay.lo);
    const double s = std::min(sx, sy);
    const double cx = 0.5 * (ax.lo + ax.hi), cy = 0.5 * (ay.lo + ay.hi);
    const double hx = 0.5 * (ax.pixel_hi - ax.pixel_lo) / s, hy = 0.5 * (ay.pixel_lo - ay.pixel_hi) / s;
    ax.lo = cx - hx, ax.hi = cx + hx;
    ay.lo = cy - hy, ay.hi = cy + hy;
  }

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<title>" << escape(p.title) << "</title>\n<metadata><![CDATA[\nseries,x,y\n";
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) o << s.name << ',' << num(s.x[i]) << ',' << num(s.y[i]) << '\n';
  for (const auto& [label, v] : p.reference_lines) o << label << ",," << num(v) << '\n';
  o << "]]></metadata>\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(p.title)
    << "</text>\n";

  const double x0 = ax.pixel_lo, x1 = ax.pixel_hi, y0 = ay.pixel_lo, y1 = ay.pixel_hi;
  o << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ticks(ax)) {
    double px = x0 + (t - ax.lo) / (ax.hi - ax.lo) * (x1 - x0);
    if (px < x0 - 1e-9 || px > x1 + 1e-9) continue;
    o << "<line x1=\"" << fixed(px) << "\" y1=\"" << y0 << "\" x2=\"" << fixed(px) << "\" y2=\"" << y1
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << fixed(px) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">" << tick_label(ax, t)
      << "</text>\n";
  }
  for (double t : ticks(ay)) {
    double py = y0 + (t - ay.lo) / (ay.hi - ay.lo) * (y1 - y0);
    if (py > y0 + 1e-9 || py < y1 - 1e-9) continue;
    o << "<line x1=\"" << x0 << "\" y1=\"" << fixed(py) << "\" x2=\"" << x1 << "\" y2=\"" << fixed(py)
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << x0 - 6 << "\" y=\"" << fixed(py + 4) << "\" text-anchor=\"end\">" << tick_label(ay, t)
      << "</text>\n";
  }
  o << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\">"
    << escape(p.xlabel) << "</text>\n";
  o << "<text x=\"18\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << (y0 + y1) / 2 << ")\">" << escape(p.ylabel) << "</text>\n";

  o << "<clipPath id=\"frame\"><rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0
    << "\" height=\"" << y0 - y1 << "\"/></clipPath>\n<g clip-path=\"url(#frame)\">\n";
  for (const auto& [label, v] : p.reference_lines) {
    if (!ay.usable(v)) continue;
    double py = ay.map(v);
    o << "<line x1=\"" << x0 << "\" y1=\"" << fixed(py) << "\" x2=\"" << x1 << "\" y2=\"" << fixed(py)
      << "\" stroke=\"#555\" stroke-dasharray=\"6 4\"/>\n";
  }
  for (std::size_t k = 0; k < p.series.size(); ++k) {
    const auto& s = p.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    if (s.markers) {
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (ax.usable(s.x[i]) && ay.usable(s.y[i]))
          o << "<circle cx=\"" << fixed(ax.map(s.x[i])) << "\" cy=\"" << fixed(ay.map(s.y[i]))
            << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
      continue;
    }
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (ax.usable(s.x[i]) && ay.usable(s.y[i])) o << fixed(ax.map(s.x[i])) << ',' << fixed(ay.map(s.y[i])) << ' ';
    o << "\"/>\n";
  }
  o << "</g>\n";

  double ly = kTop + 10;
  for (std::size_t k = 0; k < p.series.size(); ++k) {
    const char* color = kPalette[k % std::size(kPalette)];
    o << "<rect x=\"" << x1 + 14 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"10\" fill=\"" << color
      << "\"/><text x=\"" << x1 + 32 << "\" y=\"" << ly << "\">" << escape(p.series[k].name) << "</text>\n";
    ly += 18;
  }
  for (const auto& [label, v] : p.reference_lines) {
    o << "<line x1=\"" << x1 + 14 << "\" y1=\"" << ly - 4 << "\" x2=\"" << x1 + 26 << "\" y2=\"" << ly - 4
      << "\" stroke=\"#555\" stroke-dasharray=\"3 2\"/><text x=\"" << x1 + 32 << "\" y=\"" << ly << "\">"
      << escape(label) << "</text>\n";
    ly += 18;
  }
  o << "</svg>\n";
  return o.str();
}

ArtifactWriter::ArtifactWriter(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_ / "data");
  std::filesystem::create_directories(root_ / "plots");
}

std::ofstream ArtifactWriter::open(const std::string& relative, bool binary) {
  const auto path = root_ / relative;
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  written_.push_back(relative);
  return out;
}

void ArtifactWriter::csv(const std::string& name, const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  auto out = open("data/" + name + ".csv");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

void ArtifactWriter::svg(const std::string& name, const Plot& p) { open("plots/" + name + ".svg") << render_svg(p); }

void ArtifactWriter::json(const std::string& relative, const nlohmann::json& j) { open(relative) << j.dump(2) << '\n'; }

}  // namespace lab

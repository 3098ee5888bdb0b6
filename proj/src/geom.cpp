#include "covkern/geom.hpp"

#include "covkern/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace covkern {

Window::Window(double xmin, double xmax, double ymin, double ymax)
  : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax)
{
  if (!(std::isfinite(xmin) && std::isfinite(xmax) && std::isfinite(ymin) && std::isfinite(ymax)))
    throw ParameterError("window bounds must be finite");
  if (!(xmax > xmin) || !(ymax > ymin))
    throw ParameterError("window must have xmax > xmin and ymax > ymin");
}

bool Window::contains(Point p) const noexcept
{
  return p.x >= xmin_ && p.x <= xmax_ && p.y >= ymin_ && p.y <= ymax_;
}

RasterCovariate::RasterCovariate(Window window, std::size_t ncols, std::size_t nrows,
                                 std::vector<double> values)
  : window_(window), ncols_(ncols), nrows_(nrows), values_(std::move(values))
{
  if (ncols == 0 || nrows == 0)
    throw ParameterError("raster dimensions must be positive");
  if (values_.size() != ncols * nrows)
    throw ParameterError("raster has " + std::to_string(values_.size()) + " values, expected " +
                         std::to_string(ncols * nrows));
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i]))
      throw ParameterError("raster cell " + std::to_string(i) + " is not finite");
}

Point RasterCovariate::cell_center(std::size_t row, std::size_t col) const noexcept
{
  return {window_.xmin() + (static_cast<double>(col) + 0.5) * cell_width(),
          window_.ymax() - (static_cast<double>(row) + 0.5) * cell_height()};
}

double RasterCovariate::min_value() const
{
  return *std::min_element(values_.begin(), values_.end());
}

double RasterCovariate::max_value() const
{
  return *std::max_element(values_.begin(), values_.end());
}

RasterCovariate RasterCovariate::with_values(std::vector<double> values) const
{
  return RasterCovariate(window_, ncols_, nrows_, std::move(values));
}

PointPattern::PointPattern(Window window, std::vector<Point> points)
  : window_(window), points_(std::move(points))
{
  std::ostringstream bad;
  std::size_t nbad = 0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Point p = points_[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !window_.contains(p)) {
      if (nbad < 10)
        bad << (nbad ? ", " : "") << "#" << i << " (" << p.x << "," << p.y << ")";
      ++nbad;
    }
  }
  if (nbad > 0)
    throw DomainError(std::to_string(nbad) + " point(s) outside window: " + bad.str() +
                      (nbad > 10 ? ", ..." : ""));
}

void PointPattern::set_z_values(std::vector<double> z)
{
  if (z.size() != points_.size())
    throw ParameterError("z_values length does not match number of points");
  z_values_ = std::move(z);
}

namespace {

// Fractional cell-centre coordinate clamped to [0, n-1], split into a base
// index and weight so that base+1 is always a valid index when n >= 2.
struct Axis {
  std::size_t i0;
  std::size_t i1;
  double t;
};

Axis locate(double frac, std::size_t n)
{
  if (n == 1)
    return {0, 0, 0.0};
  const double hi = static_cast<double>(n - 1);
  frac = std::clamp(frac, 0.0, hi);
  auto i0 = static_cast<std::size_t>(std::floor(frac));
  if (i0 >= n - 1)
    i0 = n - 2;
  return {i0, i0 + 1, frac - static_cast<double>(i0)};
}

} // namespace

double eval_covariate(const RasterCovariate& raster, Point p)
{
  const Window& w = raster.window();
  if (!w.contains(p))
    throw DomainError("point (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                      ") outside raster window");
  const Axis cx = locate((p.x - w.xmin()) / raster.cell_width() - 0.5, raster.ncols());
  const Axis cy = locate((w.ymax() - p.y) / raster.cell_height() - 0.5, raster.nrows());
  const double v00 = raster.at(cy.i0, cx.i0);
  const double v01 = raster.at(cy.i0, cx.i1);
  const double v10 = raster.at(cy.i1, cx.i0);
  const double v11 = raster.at(cy.i1, cx.i1);
  const double top = v00 + cx.t * (v01 - v00);
  const double bottom = v10 + cx.t * (v11 - v10);
  return top + cy.t * (bottom - top);
}

namespace {

std::string trim(std::string_view s)
{
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(std::string_view tok, double& out)
{
  // from_chars rejects a leading '+', accept it for robustness.
  if (!tok.empty() && tok.front() == '+')
    tok.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

} // namespace

RasterCovariate parse_raster(std::istream& in)
{
  static const char* keys[] = {"ncols", "nrows", "xmin", "ymin", "xmax", "ymax"};
  double header[6] = {};
  std::string line;
  long lineno = 0;
  for (int k = 0; k < 6; ++k) {
    if (!std::getline(in, line))
      throw ParseError(std::string("missing header line '") + keys[k] + "'", lineno + 1);
    ++lineno;
    std::istringstream ls(line);
    std::string key, value, extra;
    ls >> key >> value;
    if (key != keys[k])
      throw ParseError(std::string("expected header key '") + keys[k] + "', got '" + key + "'",
                       lineno);
    if (ls >> extra)
      throw ParseError("trailing content in header", lineno);
    if (!parse_double(value, header[k]) || !std::isfinite(header[k]))
      throw ParseError("malformed header value '" + value + "'", lineno);
  }
  auto as_dim = [&](double v, const char* key, long ln) {
    if (v < 1 || v != std::floor(v) || v > 1e8)
      throw ParseError(std::string(key) + " must be a positive integer", ln);
    return static_cast<std::size_t>(v);
  };
  const std::size_t ncols = as_dim(header[0], "ncols", 1);
  const std::size_t nrows = as_dim(header[1], "nrows", 2);
  if (!(header[4] > header[2]) || !(header[5] > header[3]))
    throw ParseError("header window is empty (need xmax > xmin, ymax > ymin)", 6);
  const Window w(header[2], header[4], header[3], header[5]);

  std::vector<double> values;
  values.reserve(ncols * nrows);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    if (row == nrows)
      throw ParseError("more than " + std::to_string(nrows) + " data rows", lineno);
    std::istringstream ls(line);
    std::string tok;
    std::size_t count = 0;
    while (ls >> tok) {
      double v;
      if (!parse_double(tok, v))
        throw ParseError("non-numeric cell '" + tok + "'", lineno);
      if (!std::isfinite(v))
        throw ParseError("non-finite cell '" + tok + "'", lineno);
      values.push_back(v);
      ++count;
    }
    if (count != ncols)
      throw ParseError("row has " + std::to_string(count) + " values, expected " +
                         std::to_string(ncols),
                       lineno);
    ++row;
  }
  if (row != nrows)
    throw ParseError("found " + std::to_string(row) + " data rows, expected " +
                       std::to_string(nrows),
                     lineno);
  return RasterCovariate(w, ncols, nrows, std::move(values));
}

RasterCovariate load_raster(const std::filesystem::path& path, RasterFormat format)
{
  if (format != RasterFormat::ascii_grid)
    throw ParameterError("unsupported raster format");
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open raster file " + path.string());
  return parse_raster(in);
}

void write_raster(const RasterCovariate& raster, std::ostream& out, int significant_digits)
{
  const Window& w = raster.window();
  out << std::setprecision(17);
  out << "ncols " << raster.ncols() << '\n'
      << "nrows " << raster.nrows() << '\n'
      << "xmin " << w.xmin() << '\n'
      << "ymin " << w.ymin() << '\n'
      << "xmax " << w.xmax() << '\n'
      << "ymax " << w.ymax() << '\n';
  out << std::setprecision(significant_digits);
  for (std::size_t r = 0; r < raster.nrows(); ++r) {
    for (std::size_t c = 0; c < raster.ncols(); ++c)
      out << (c ? " " : "") << raster.at(r, c);
    out << '\n';
  }
}

void save_raster(const RasterCovariate& raster, const std::filesystem::path& path,
                 int significant_digits)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write raster file " + path.string());
  write_raster(raster, out, significant_digits);
}

PointPattern parse_pattern(std::istream& in, const Window& window)
{
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line))
    throw ParseError("missing header 'x,y'", 1);
  ++lineno;
  if (trim(line) != "x,y")
    throw ParseError("expected header 'x,y', got '" + trim(line) + "'", lineno);

  std::vector<Point> pts;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty())
      continue;
    const auto comma = t.find(',');
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos)
      throw ParseError("expected two comma-separated fields", lineno);
    Point p;
    const std::string xs = trim(std::string_view(t).substr(0, comma));
    const std::string ys = trim(std::string_view(t).substr(comma + 1));
    if (!parse_double(xs, p.x) || !parse_double(ys, p.y))
      throw ParseError("non-numeric coordinate", lineno);
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw ParseError("non-finite coordinate", lineno);
    pts.push_back(p);
  }
  return PointPattern(window, std::move(pts));
}

PointPattern load_pattern(const std::filesystem::path& path, const Window& window)
{
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open pattern file " + path.string());
  return parse_pattern(in, window);
}

void write_pattern(const PointPattern& pattern, std::ostream& out)
{
  out << "x,y\n" << std::setprecision(17);
  for (const Point& p : pattern.points())
    out << p.x << ',' << p.y << '\n';
}

void save_pattern(const PointPattern& pattern, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write pattern file " + path.string());
  write_pattern(pattern, out);
}

} // namespace covkern

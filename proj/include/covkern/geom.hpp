#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace covkern {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

//! Axis-aligned rectangular observation window.
class Window {
public:
  Window(double xmin, double xmax, double ymin, double ymax);

  static Window unit_square() { return Window(0.0, 1.0, 0.0, 1.0); }

  double xmin() const noexcept { return xmin_; }
  double xmax() const noexcept { return xmax_; }
  double ymin() const noexcept { return ymin_; }
  double ymax() const noexcept { return ymax_; }
  double width() const noexcept { return xmax_ - xmin_; }
  double height() const noexcept { return ymax_ - ymin_; }
  double area() const noexcept { return width() * height(); }

  //! Closed-region membership (boundary points are inside).
  bool contains(Point p) const noexcept;

  bool operator==(const Window&) const = default;

private:
  double xmin_, xmax_, ymin_, ymax_;
};

//! Gridded covariate over a window. Row 0 is the top row (max y); values are
//! stored row-major and sampled at cell centres.
class RasterCovariate {
public:
  RasterCovariate(Window window, std::size_t ncols, std::size_t nrows,
                  std::vector<double> values);

  const Window& window() const noexcept { return window_; }
  std::size_t ncols() const noexcept { return ncols_; }
  std::size_t nrows() const noexcept { return nrows_; }
  std::size_t size() const noexcept { return values_.size(); }
  double cell_width() const noexcept { return window_.width() / ncols_; }
  double cell_height() const noexcept { return window_.height() / nrows_; }
  double cell_area() const noexcept { return cell_width() * cell_height(); }

  std::span<const double> values() const noexcept { return values_; }
  double at(std::size_t row, std::size_t col) const { return values_[row * ncols_ + col]; }

  Point cell_center(std::size_t row, std::size_t col) const noexcept;
  Point cell_center(std::size_t index) const noexcept
  {
    return cell_center(index / ncols_, index % ncols_);
  }

  double min_value() const;
  double max_value() const;

  //! Same geometry, new cell values.
  RasterCovariate with_values(std::vector<double> values) const;

  //! Samples a function of position at every cell centre.
  template <class F>
  static RasterCovariate sample(const Window& w, std::size_t ncols, std::size_t nrows, F&& f)
  {
    std::vector<double> v(ncols * nrows);
    const double cw = w.width() / ncols, ch = w.height() / nrows;
    for (std::size_t r = 0; r < nrows; ++r)
      for (std::size_t c = 0; c < ncols; ++c)
        v[r * ncols + c] = f(Point{w.xmin() + (c + 0.5) * cw, w.ymax() - (r + 0.5) * ch});
    return RasterCovariate(w, ncols, nrows, std::move(v));
  }

private:
  Window window_;
  std::size_t ncols_, nrows_;
  std::vector<double> values_;
};

//! Event locations inside a window, with optional cached covariate values.
class PointPattern {
public:
  PointPattern(Window window, std::vector<Point> points);

  const Window& window() const noexcept { return window_; }
  std::span<const Point> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  const std::optional<std::vector<double>>& z_values() const noexcept { return z_values_; }
  //! Caches Z_i = Z(X_i); length must match the number of points.
  void set_z_values(std::vector<double> z);

private:
  Window window_;
  std::vector<Point> points_;
  std::optional<std::vector<double>> z_values_;
};

//! Bilinear interpolation between the four surrounding cell centres. In the
//! half-cell margin along the boundary the nearest centre row/column is used.
//! Throws DomainError when p lies outside the raster window.
double eval_covariate(const RasterCovariate& raster, Point p);

enum class RasterFormat { ascii_grid };

RasterCovariate load_raster(const std::filesystem::path& path,
                            RasterFormat format = RasterFormat::ascii_grid);
RasterCovariate parse_raster(std::istream& in);
void save_raster(const RasterCovariate& raster, const std::filesystem::path& path,
                 int significant_digits = 17);
void write_raster(const RasterCovariate& raster, std::ostream& out, int significant_digits = 17);

//! Reads an `x,y` CSV. The window is not stored in the file, so the caller
//! declares it; points outside it are reported in one error.
PointPattern load_pattern(const std::filesystem::path& path, const Window& window);
PointPattern parse_pattern(std::istream& in, const Window& window);
void save_pattern(const PointPattern& pattern, const std::filesystem::path& path);
void write_pattern(const PointPattern& pattern, std::ostream& out);

} // namespace covkern

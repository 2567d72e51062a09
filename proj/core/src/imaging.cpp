#include "pixgbp/imaging.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pixgbp/error.hpp"

namespace pixgbp {
namespace {

struct Corner {
  int i0;
  double frac;
};

// Lower corner and fractional offset along one axis; nullopt outside [0, n-1].
std::optional<Corner> axis_corner(double c, int n) {
  if (!(c >= 0.0) || c > static_cast<double>(n - 1)) return std::nullopt;
  if (n == 1) return Corner{0, 0.0};
  int i0 = static_cast<int>(std::floor(c));
  if (i0 >= n - 1) i0 = n - 2;
  return Corner{i0, c - i0};
}

struct Bilinear {
  int x0, y0, x1, y1;
  double ax, ay;
};

std::optional<Bilinear> bilinear_weights(int h, int w, const Eigen::Vector2d& p) {
  const auto cx = axis_corner(p.x(), w);
  const auto cy = axis_corner(p.y(), h);
  if (!cx || !cy) return std::nullopt;
  return Bilinear{cx->i0, cy->i0, std::min(cx->i0 + 1, w - 1), std::min(cy->i0 + 1, h - 1), cx->frac, cy->frac};
}

double interpolate(const GrayImage& img, const Bilinear& b) {
  const double top = (1.0 - b.ax) * img.at(b.x0, b.y0) + b.ax * img.at(b.x1, b.y0);
  const double bottom = (1.0 - b.ax) * img.at(b.x0, b.y1) + b.ax * img.at(b.x1, b.y1);
  return (1.0 - b.ay) * top + b.ay * bottom;
}

}  // namespace

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Matrix3d CameraIntrinsics::inverse() const {
  Eigen::Matrix3d k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

CameraIntrinsics intrinsics_from_fov(double fov_degrees, int width, int height) {
  if (!(fov_degrees > 1.0 && fov_degrees < 179.0)) {
    throw ConfigError("field of view must lie in (1, 179) degrees, got " + std::to_string(fov_degrees));
  }
  if (width <= 0 || height <= 0) throw ConfigError("image dimensions must be positive");
  const double t = std::tan(0.5 * fov_degrees * std::numbers::pi / 180.0);
  CameraIntrinsics k;
  k.fx = 0.5 * width / t;
  k.fy = 0.5 * height / t;
  k.cx = 0.5 * width - 0.5;
  k.cy = 0.5 * height - 0.5;
  return k;
}

GrayImage::GrayImage(int height, int width, double fill)
    : height_(height), width_(width), data_(static_cast<size_t>(height) * width, fill) {
  if (height <= 0 || width <= 0) throw DimensionError("image dimensions must be positive");
}

GrayImage::GrayImage(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height <= 0 || width <= 0) throw DimensionError("image dimensions must be positive");
  if (data_.size() != static_cast<size_t>(height) * width) throw DimensionError("image buffer size mismatch");
}

bool GrayImage::contains(const Eigen::Vector2d& p) const {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= width_ - 1 && p.y() <= height_ - 1;
}

std::optional<Eigen::Vector2d> warp(const Eigen::Vector2d& p, const Rotation& r, const CameraIntrinsics& k) {
  if (r.matrix() == Eigen::Matrix3d::Identity()) return p;
  const Eigen::Vector3d q = r * k.unproject(p);
  if (q.z() <= 1e-9) return std::nullopt;
  return Eigen::Vector2d(k.fx * q.x() / q.z() + k.cx, k.fy * q.y() / q.z() + k.cy);
}

std::optional<double> sample_bilinear(const GrayImage& img, const Eigen::Vector2d& p) {
  const auto b = bilinear_weights(img.height(), img.width(), p);
  if (!b) return std::nullopt;
  return interpolate(img, *b);
}

ImageGradient gradient_field(const GrayImage& img) {
  const int h = img.height();
  const int w = img.width();
  ImageGradient g{GrayImage(h, w), GrayImage(h, w)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (w > 1) {
        const int xl = std::max(x - 1, 0);
        const int xr = std::min(x + 1, w - 1);
        g.dx.at(x, y) = (img.at(xr, y) - img.at(xl, y)) / (xr - xl);
      }
      if (h > 1) {
        const int yu = std::max(y - 1, 0);
        const int yd = std::min(y + 1, h - 1);
        g.dy.at(x, y) = (img.at(x, yd) - img.at(x, yu)) / (yd - yu);
      }
    }
  }
  return g;
}

std::optional<IntensitySample> sample_with_gradient(const GrayImage& img, const ImageGradient& grad,
                                                    const Eigen::Vector2d& p) {
  const auto b = bilinear_weights(img.height(), img.width(), p);
  if (!b) return std::nullopt;
  return IntensitySample{interpolate(img, *b), {interpolate(grad.dx, *b), interpolate(grad.dy, *b)}};
}

}  // namespace pixgbp

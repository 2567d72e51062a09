#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <vector>

#include "pixgbp/lie.hpp"

namespace pixgbp {

/// Pinhole intrinsics in pixels. Integer pixel coordinates are pixel centres,
/// x along the width and y along the height.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Eigen::Matrix3d matrix() const;
  Eigen::Matrix3d inverse() const;
  /// K⁻¹[p; 1].
  Eigen::Vector3d unproject(const Eigen::Vector2d& p) const {
    return {(p.x() - cx) / fx, (p.y() - cy) / fy, 1.0};
  }
};

/// Principal point at the image centre; fov must lie in (1°, 179°).
CameraIntrinsics intrinsics_from_fov(double fov_degrees, int width, int height);

/// Row-major scalar image. Intensities are normalised to [0, 1]; the same type
/// also carries derived fields such as gradients.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int height, int width, double fill = 0.0);
  GrayImage(int height, int width, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }

  std::span<const double> pixels() const { return data_; }
  std::span<double> pixels() { return data_; }

  bool contains(const Eigen::Vector2d& p) const;

  bool operator==(const GrayImage&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// W(p; R) = π(K R K⁻¹ [p; 1]); nullopt if the point lands behind the camera.
std::optional<Eigen::Vector2d> warp(const Eigen::Vector2d& p, const Rotation& r, const CameraIntrinsics& k);

/// Bilinear interpolation over the four enclosing pixel centres; nullopt when
/// any of them lies outside the image.
std::optional<double> sample_bilinear(const GrayImage& img, const Eigen::Vector2d& p);

struct ImageGradient {
  GrayImage dx;
  GrayImage dy;
};

/// Central differences in the interior, one-sided at the borders (intensity/pixel).
ImageGradient gradient_field(const GrayImage& img);

struct IntensitySample {
  double value;
  Eigen::Vector2d gradient;
};

/// Intensity and interpolated gradient at `p` sharing one set of bilinear weights.
std::optional<IntensitySample> sample_with_gradient(const GrayImage& img, const ImageGradient& grad,
                                                    const Eigen::Vector2d& p);

}  // namespace pixgbp

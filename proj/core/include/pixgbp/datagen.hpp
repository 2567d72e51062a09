#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pixgbp/imaging.hpp"
#include "pixgbp/lie.hpp"

namespace pixgbp {

/// SplitMix64-style seed derivation for independent, reproducible RNG streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Equirectangular 360°x180° grayscale image: column ↔ longitude in [-π, π),
/// row ↔ latitude in [-π/2, π/2].
struct PanoramaImage {
  GrayImage image;

  /// width == 2·height.
  bool has_standard_aspect() const { return image.width() == 2 * image.height(); }
  /// Bilinear lookup of the viewing direction `d` (need not be normalised),
  /// wrapping in longitude.
  double sample(const Eigen::Vector3d& d) const;
};

struct TextureOptions {
  int octaves = 3;
  double base_frequency = 3.0;
  double persistence = 0.6;
  /// Slope of the logistic curve applied around the median; 0 keeps the
  /// linear [0, 1] rescale.
  double contrast = 9.0;

  void validate() const;
};

/// Fractal gradient noise evaluated on the sphere, mapped to [0, 1].
PanoramaImage procedural_panorama(std::uint64_t seed, int width = 1024, int height = 512,
                                  const TextureOptions& texture = {});

/// Throws ConfigError for panoramas narrower than 2·height.
PanoramaImage load_panorama(const std::filesystem::path& path);

/// View of a camera with orientation `rotation` (camera-to-world): output pixel
/// p samples the direction rotation · K⁻¹[p; 1].
GrayImage render_view(const PanoramaImage& pano, const Rotation& rotation, const CameraIntrinsics& k, int height,
                      int width);

struct RotationPair {
  Rotation left;
  Rotation right;
  /// R_rightᵀ·R_left: the rotation for which W(p; ·) maps left pixels onto the
  /// right pixels observing the same direction.
  Rotation relative;
};

/// Uniform left orientation, relative rotation about a uniform axis with angle
/// uniform in (0, max_angle].
RotationPair sample_rotation_pair(std::uint64_t seed, double max_angle_degrees);

/// Additive i.i.d. N(0, σ²) noise, clamped to [0, 1].
GrayImage add_noise(const GrayImage& img, double sigma, std::uint64_t seed);

struct SceneSpec {
  int size = 64;
  double fov_degrees = 60.0;
  double max_rotation_degrees = 1.0;
  double noise_sigma = 0.0;
};

struct ScenePair {
  GrayImage left;
  GrayImage right;
  Rotation ground_truth;  // relative rotation, see RotationPair::relative
  Rotation left_pose;
  Rotation right_pose;
  CameraIntrinsics intrinsics;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
};

/// Poses come from derive_seed(seed, 0); noise streams 1 (left) and 2 (right),
/// so pairs differing only in noise_sigma share poses and noise realisations.
ScenePair make_scene_pair(const PanoramaImage& pano, const SceneSpec& spec, std::uint64_t seed);

/// Writes <stem>_left.png, <stem>_right.png (16-bit) and <stem>.json.
void save_scene_pair(const ScenePair& pair, const std::filesystem::path& dir, const std::string& stem);
ScenePair load_scene_pair(const std::filesystem::path& json_path);

}  // namespace pixgbp

#include "pixgbp/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "pixgbp/error.hpp"
#include "pixgbp/image_io.hpp"

namespace pixgbp {
namespace {

constexpr double kPi = std::numbers::pi;

// Improved gradient noise on a seeded permutation lattice.
class GradientNoise {
 public:
  explicit GradientNoise(std::uint64_t seed) {
    std::array<int, 256> p{};
    std::iota(p.begin(), p.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(p.begin(), p.end(), rng);
    for (int i = 0; i < 512; ++i) perm_[static_cast<size_t>(i)] = p[static_cast<size_t>(i & 255)];
  }

  double operator()(double x, double y, double z) const {
    const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
    const int xi = static_cast<int>(fx) & 255, yi = static_cast<int>(fy) & 255, zi = static_cast<int>(fz) & 255;
    x -= fx;
    y -= fy;
    z -= fz;
    const double u = fade(x), v = fade(y), w = fade(z);
    const int a = perm_[xi] + yi, aa = perm_[a] + zi, ab = perm_[a + 1] + zi;
    const int b = perm_[xi + 1] + yi, ba = perm_[b] + zi, bb = perm_[b + 1] + zi;
    return lerp(w,
                lerp(v, lerp(u, grad(perm_[aa], x, y, z), grad(perm_[ba], x - 1, y, z)),
                     lerp(u, grad(perm_[ab], x, y - 1, z), grad(perm_[bb], x - 1, y - 1, z))),
                lerp(v, lerp(u, grad(perm_[aa + 1], x, y, z - 1), grad(perm_[ba + 1], x - 1, y, z - 1)),
                     lerp(u, grad(perm_[ab + 1], x, y - 1, z - 1), grad(perm_[bb + 1], x - 1, y - 1, z - 1))));
  }

 private:
  static double fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }
  static double lerp(double t, double a, double b) { return a + t * (b - a); }
  static double grad(int hash, double x, double y, double z) {
    const int h = hash & 15;
    const double u = h < 8 ? x : y;
    const double v = h < 4 ? y : (h == 12 || h == 14 ? x : z);
    return ((h & 1) == 0 ? u : -u) + ((h & 2) == 0 ? v : -v);
  }

  std::array<int, 512> perm_{};
};

Eigen::Vector3d direction_of(double lon, double lat) {
  return {std::cos(lat) * std::sin(lon), std::sin(lat), std::cos(lat) * std::cos(lon)};
}

Rotation uniform_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector4d q;
  do {
    q = {normal(rng), normal(rng), normal(rng), normal(rng)};
  } while (q.norm() < 1e-12);
  q.normalize();
  return Rotation::from_quaternion(q(0), q(1), q(2), q(3));
}

Eigen::Vector3d uniform_axis(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector3d a;
  do {
    a = {normal(rng), normal(rng), normal(rng)};
  } while (a.norm() < 1e-12);
  return a.normalized();
}

nlohmann::json matrix_json(const Eigen::Matrix3d& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return rows;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double PanoramaImage::sample(const Eigen::Vector3d& d) const {
  const int w = image.width();
  const int h = image.height();
  const Eigen::Vector3d n = d.normalized();
  const double lon = std::atan2(n.x(), n.z());
  const double lat = std::asin(std::clamp(n.y(), -1.0, 1.0));
  const double u = (lon + kPi) / (2.0 * kPi) * w - 0.5;
  const double v = std::clamp((lat + 0.5 * kPi) / kPi * h - 0.5, 0.0, static_cast<double>(h - 1));
  const double fu = std::floor(u);
  const double au = u - fu;
  const int u0 = ((static_cast<int>(fu) % w) + w) % w;
  const int u1 = (u0 + 1) % w;
  const int v0 = std::min(static_cast<int>(v), h - 1);
  const int v1 = std::min(v0 + 1, h - 1);
  const double av = v - v0;
  const double top = (1.0 - au) * image.at(u0, v0) + au * image.at(u1, v0);
  const double bottom = (1.0 - au) * image.at(u0, v1) + au * image.at(u1, v1);
  return (1.0 - av) * top + av * bottom;
}

void TextureOptions::validate() const {
  if (octaves < 1) throw ConfigError("texture needs at least one octave");
  if (!(base_frequency > 0.0) || !(persistence > 0.0)) {
    throw ConfigError("texture frequency and persistence must be positive");
  }
  if (!(contrast >= 0.0)) throw ConfigError("texture contrast must be non-negative");
}

PanoramaImage procedural_panorama(std::uint64_t seed, int width, int height, const TextureOptions& texture) {
  if (width <= 0 || height <= 0) throw ConfigError("panorama dimensions must be positive");
  texture.validate();
  const GradientNoise noise(seed);
  std::mt19937_64 rng(derive_seed(seed, 7));
  std::uniform_real_distribution<double> offset(0.0, 256.0);
  std::vector<Eigen::Vector3d> shifts(static_cast<std::size_t>(texture.octaves));
  for (auto& s : shifts) s = {offset(rng), offset(rng), offset(rng)};

  GrayImage img(height, width);
  for (int y = 0; y < height; ++y) {
    const double lat = ((y + 0.5) / height - 0.5) * kPi;
    for (int x = 0; x < width; ++x) {
      const double lon = (x + 0.5) / width * 2.0 * kPi - kPi;
      const Eigen::Vector3d d = direction_of(lon, lat);
      double value = 0.0;
      double amplitude = 1.0;
      double frequency = texture.base_frequency;
      for (const Eigen::Vector3d& shift : shifts) {
        const Eigen::Vector3d p = frequency * d + shift;
        value += amplitude * noise(p.x(), p.y(), p.z());
        amplitude *= texture.persistence;
        frequency *= 2.0;
      }
      img.at(x, y) = value;
    }
  }
  const auto [lo, hi] = std::minmax_element(img.pixels().begin(), img.pixels().end());
  const double low = *lo;
  const double range = std::max(*hi - *lo, 1e-12);
  for (double& v : img.pixels()) v = (v - low) / range;
  if (texture.contrast > 0.0) {
    std::vector<double> sorted(img.pixels().begin(), img.pixels().end());
    const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    const double median = *mid;
    const auto logistic = [&](double v) { return 1.0 / (1.0 + std::exp(-texture.contrast * (v - median))); };
    const double at_low = logistic(0.0);
    const double span = std::max(logistic(1.0) - at_low, 1e-12);
    for (double& v : img.pixels()) v = (logistic(v) - at_low) / span;
  }
  return PanoramaImage{std::move(img)};
}

PanoramaImage load_panorama(const std::filesystem::path& path) {
  PanoramaImage pano{read_image(path)};
  if (pano.image.width() < 2 * pano.image.height()) {
    throw ConfigError("equirectangular panorama must be at least twice as wide as it is tall: " + path.string());
  }
  return pano;
}

GrayImage render_view(const PanoramaImage& pano, const Rotation& rotation, const CameraIntrinsics& k, int height,
                      int width) {
  GrayImage out(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out.at(x, y) = pano.sample(rotation * k.unproject(Eigen::Vector2d(x, y)));
    }
  }
  return out;
}

RotationPair sample_rotation_pair(std::uint64_t seed, double max_angle_degrees) {
  if (!(max_angle_degrees >= 0.0)) throw ConfigError("maximum rotation angle must be non-negative");
  std::mt19937_64 rng(seed);
  const Rotation left = uniform_rotation(rng);
  const Eigen::Vector3d axis = uniform_axis(rng);
  // (0, max]: 1 - U with U in [0, 1).
  const double unit = 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const double angle = unit * max_angle_degrees * kPi / 180.0;
  const Rotation right = left * exp_map(angle * axis);
  return {left, right, right.inverse() * left};
}

GrayImage add_noise(const GrayImage& img, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ConfigError("noise standard deviation must be non-negative");
  if (sigma == 0.0) return img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  GrayImage out = img;
  for (double& v : out.pixels()) v = std::clamp(v + sigma * normal(rng), 0.0, 1.0);
  return out;
}

ScenePair make_scene_pair(const PanoramaImage& pano, const SceneSpec& spec, std::uint64_t seed) {
  const RotationPair poses = sample_rotation_pair(derive_seed(seed, 0), spec.max_rotation_degrees);
  const CameraIntrinsics k = intrinsics_from_fov(spec.fov_degrees, spec.size, spec.size);
  ScenePair pair;
  pair.left = add_noise(render_view(pano, poses.left, k, spec.size, spec.size), spec.noise_sigma, derive_seed(seed, 1));
  pair.right =
      add_noise(render_view(pano, poses.right, k, spec.size, spec.size), spec.noise_sigma, derive_seed(seed, 2));
  pair.ground_truth = poses.relative;
  pair.left_pose = poses.left;
  pair.right_pose = poses.right;
  pair.intrinsics = k;
  pair.seed = seed;
  pair.noise_sigma = spec.noise_sigma;
  return pair;
}

void save_scene_pair(const ScenePair& pair, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  write_png(pair.left, dir / (stem + "_left.png"), 16);
  write_png(pair.right, dir / (stem + "_right.png"), 16);
  const Eigen::Vector4d q = pair.ground_truth.quaternion();
  nlohmann::json j;
  j["left_image"] = stem + "_left.png";
  j["right_image"] = stem + "_right.png";
  j["ground_truth_quaternion_wxyz"] = {q(0), q(1), q(2), q(3)};
  j["ground_truth_matrix"] = matrix_json(pair.ground_truth.matrix());
  j["left_pose_matrix"] = matrix_json(pair.left_pose.matrix());
  j["right_pose_matrix"] = matrix_json(pair.right_pose.matrix());
  j["rotation_degrees"] = log_map(pair.ground_truth).norm() * 180.0 / kPi;
  j["seed"] = pair.seed;
  j["noise_sigma"] = pair.noise_sigma;
  j["intrinsics"] = {{"fx", pair.intrinsics.fx}, {"fy", pair.intrinsics.fy}, {"cx", pair.intrinsics.cx},
                     {"cy", pair.intrinsics.cy}};
  std::ofstream out(dir / (stem + ".json"));
  if (!out) throw IoError("cannot write " + (dir / (stem + ".json")).string());
  out << j.dump(2) << '\n';
}

ScenePair load_scene_pair(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open " + json_path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed scene sidecar " + json_path.string() + ": " + e.what());
  }
  auto matrix = [&](const char* key) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = j.at(key).at(r).at(c).get<double>();
    return Rotation::from_matrix(m);
  };
  const auto dir = json_path.parent_path();
  ScenePair pair;
  try {
    pair.left = read_image(dir / j.at("left_image").get<std::string>());
    pair.right = read_image(dir / j.at("right_image").get<std::string>());
    pair.ground_truth = matrix("ground_truth_matrix");
    pair.left_pose = matrix("left_pose_matrix");
    pair.right_pose = matrix("right_pose_matrix");
    pair.seed = j.at("seed").get<std::uint64_t>();
    pair.noise_sigma = j.at("noise_sigma").get<double>();
    const auto& k = j.at("intrinsics");
    pair.intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(), k.at("cx").get<double>(),
                       k.at("cy").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed scene sidecar " + json_path.string() + ": " + e.what());
  }
  return pair;
}

}  // namespace pixgbp

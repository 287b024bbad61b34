#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "lagan/error.hpp"

namespace lagan {

constexpr int kGridSize = 25;
constexpr int kPixelCount = kGridSize * kGridSize;
constexpr double kWindowHalf = 1.25;
constexpr double kPixelWidth = 0.1;
constexpr double kPi = 3.14159265358979323846264338327950288;

enum class Label : uint8_t { background = 0, signal = 1 };
enum class Origin : uint8_t { real = 0, generated = 1 };

/// Wrap an azimuth into (-pi, pi].
inline double wrap_phi(double phi) {
  phi = std::remainder(phi, 2.0 * kPi);
  if (phi <= -kPi) phi += 2.0 * kPi;
  return phi;
}

/// One calorimeter cell / particle. The derived four-vector is massless.
struct Constituent {
  double pt = 0.0;   // transverse momentum, GeV
  double eta = 0.0;  // pseudorapidity
  double phi = 0.0;  // azimuth, wrapped to (-pi, pi]

  double px() const { return pt * std::cos(phi); }
  double py() const { return pt * std::sin(phi); }
  double pz() const { return pt * std::sinh(eta); }
  double energy() const { return pt * std::cosh(eta); }

  static Constituent from_momentum(double px, double py, double pz) {
    Constituent c;
    c.pt = std::hypot(px, py);
    c.eta = std::asinh(c.pt > 0.0 ? pz / c.pt : 0.0);
    c.phi = std::atan2(py, px);
    return c;
  }
};

struct SubjetDirection {
  double eta = 0.0;
  double phi = 0.0;
};

struct JetEvent {
  std::vector<Constituent> constituents;
  SubjetDirection subjet1;                  // leading subjet
  std::optional<SubjetDirection> subjet2;   // subleading subjet, may be absent
  Label label = Label::background;

  double total_pt() const {
    double s = 0.0;
    for (const auto& c : constituents) s += c.pt;
    return s;
  }
  double total_energy() const {
    double s = 0.0;
    for (const auto& c : constituents) s += c.energy();
    return s;
  }
};

/// Center coordinates (eta, phi) of pixel (i, j). The grid spans
/// [-1.25, 1.25]^2 with 0.1-wide bins, so centers run -1.2 .. 1.2 and the
/// central pixel (12, 12) sits at the origin.
inline std::pair<double, double> pixel_center(int i, int j) {
  require(i >= 0 && i < kGridSize && j >= 0 && j < kGridSize, ErrorCategory::dimension,
          "pixel index out of range");
  // single multiply from the central pixel: center (12, 12) is exactly (0, 0)
  return {(i - kGridSize / 2) * kPixelWidth, (j - kGridSize / 2) * kPixelWidth};
}

/// Bin index along one axis for a coordinate, or -1 when outside the window.
inline int pixel_bin(double x) {
  double b = std::floor((x + kWindowHalf) / kPixelWidth);
  if (b < 0.0 || b >= kGridSize) return -1;
  return static_cast<int>(b);
}

/// 25x25 non-negative intensity grid. Row i indexes eta, column j indexes phi.
struct JetImage {
  std::array<double, kPixelCount> pixels{};
  Label label = Label::background;
  Origin origin = Origin::real;

  double& at(int i, int j) { return pixels[static_cast<size_t>(i * kGridSize + j)]; }
  double at(int i, int j) const { return pixels[static_cast<size_t>(i * kGridSize + j)]; }

  double sum() const {
    double s = 0.0;
    for (double v : pixels) s += v;
    return s;
  }

  int nonzero_count() const {
    int n = 0;
    for (double v : pixels) n += (v != 0.0);
    return n;
  }
};

/// Fraction of pixels with intensity strictly above `threshold`.
inline double occupancy(const JetImage& image, double threshold) {
  require(threshold >= 0.0, ErrorCategory::config, "occupancy threshold must be >= 0");
  int n = 0;
  for (double v : image.pixels) n += (v > threshold);
  return static_cast<double>(n) / kPixelCount;
}

}  // namespace lagan

#pragma once

// Event-to-image preprocessing: translate the leading subjet to the origin,
// rotate the subleading subjet to azimuth -pi/2 (in constituent space via a
// proper rotation about the x-axis, or in image space via bicubic
// resampling), pixelize, mirror the light eta half onto the heavy side, and
// truncate interpolation dust.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "lagan/error.hpp"
#include "lagan/jet.hpp"

namespace lagan {

enum class RotationMode { constituent, image_cubic, none };

struct PreprocessConfig {
  RotationMode rotation_mode = RotationMode::constituent;
  bool renormalize_after_rotation = true;
  double truncation_threshold = 1e-3;  // GeV

  void validate() const {
    require(truncation_threshold >= 0.0, ErrorCategory::config,
            "truncation threshold must be >= 0");
  }
};

/// Shift all constituents so the leading subjet sits at the origin.
inline JetEvent translate(const JetEvent& event) {
  JetEvent out = event;
  const double deta = event.subjet1.eta;
  const double dphi = event.subjet1.phi;
  for (auto& c : out.constituents) {
    c.eta -= deta;
    c.phi = wrap_phi(c.phi - dphi);
  }
  out.subjet1 = {0.0, 0.0};
  if (out.subjet2)
    out.subjet2 = SubjetDirection{out.subjet2->eta - deta, wrap_phi(out.subjet2->phi - dphi)};
  return out;
}

/// Leading eigenvector of the pt-weighted covariance of (eta, phi) about the
/// origin, oriented toward the heavier half. Fallback rotation axis for
/// events without a recorded subleading subjet.
inline SubjetDirection principal_axis(const JetEvent& event) {
  double see = 0.0, sep = 0.0, spp = 0.0;
  for (const auto& c : event.constituents) {
    see += c.pt * c.eta * c.eta;
    sep += c.pt * c.eta * c.phi;
    spp += c.pt * c.phi * c.phi;
  }
  // closed-form leading eigenvector of [[see, sep], [sep, spp]]
  double tr = see + spp;
  double det = see * spp - sep * sep;
  double lambda = 0.5 * tr + std::sqrt(std::max(0.25 * tr * tr - det, 0.0));
  double vx, vy;
  if (std::abs(sep) > 1e-300) {
    vx = lambda - spp;
    vy = sep;
  } else {
    vx = see >= spp ? 1.0 : 0.0;
    vy = see >= spp ? 0.0 : 1.0;
  }
  double norm = std::hypot(vx, vy);
  require(norm > 0.0, ErrorCategory::degenerate_axis,
          "principal component direction is degenerate");
  vx /= norm;
  vy /= norm;
  double forward = 0.0, backward = 0.0;
  for (const auto& c : event.constituents) {
    double proj = c.eta * vx + c.phi * vy;
    (proj >= 0.0 ? forward : backward) += c.pt * std::abs(proj);
  }
  if (backward > forward) {
    vx = -vx;
    vy = -vy;
  }
  return {vx, vy};
}

namespace detail {

/// Rotation angle about the x-axis that carries the given direction to
/// azimuth -pi/2 in the translated eta-phi plane.
inline double rotation_angle_for(const SubjetDirection& axis) {
  // direction treated as a unit-pt massless particle: py = sin(phi), pz = sinh(eta)
  const double py = std::sin(axis.phi);
  const double pz = std::sinh(axis.eta);
  require(py != 0.0 || pz != 0.0, ErrorCategory::degenerate_axis,
          "rotation axis sits at the origin (zero py and pz)");
  return -std::atan2(py, pz) - 0.5 * kPi;
}

}  // namespace detail

/// Proper rotation about the x-axis placing the subleading subjet (or the
/// principal-component direction when absent) at azimuth -pi/2. Energies and
/// px are left untouched; each constituent's (pt, eta, phi) is recomputed
/// from its rotated momentum.
inline JetEvent rotate_constituents(const JetEvent& event) {
  SubjetDirection axis = event.subjet2 ? *event.subjet2 : principal_axis(event);
  const double beta = detail::rotation_angle_for(axis);
  const double cb = std::cos(beta), sb = std::sin(beta);

  JetEvent out = event;
  for (auto& c : out.constituents) {
    const double px = c.px(), py = c.py(), pz = c.pz();
    const double py2 = py * cb + pz * sb;
    const double pz2 = pz * cb - py * sb;
    c = Constituent::from_momentum(px, py2, pz2);
  }
  auto rotate_dir = [&](const SubjetDirection& d) {
    double px = std::cos(d.phi), py = std::sin(d.phi), pz = std::sinh(d.eta);
    double py2 = py * cb + pz * sb;
    double pz2 = pz * cb - py * sb;
    Constituent r = Constituent::from_momentum(px, py2, pz2);
    return SubjetDirection{r.eta, r.phi};
  };
  if (out.subjet2) out.subjet2 = rotate_dir(*out.subjet2);
  return out;
}

/// Sum constituent pt into the 25x25 grid; constituents outside the window
/// are dropped.
inline JetImage pixelize(const JetEvent& event) {
  JetImage image;
  image.label = event.label;
  image.origin = Origin::real;
  for (const auto& c : event.constituents) {
    int i = pixel_bin(c.eta);
    int j = pixel_bin(c.phi);
    if (i < 0 || j < 0) continue;
    image.at(i, j) += c.pt;
  }
  return image;
}

/// Mirror the eta axis if the eta < 0 half carries more energy than the
/// eta > 0 half. The central row belongs to neither half; applying the
/// transform twice equals applying it once.
inline JetImage parity_flip(const JetImage& image) {
  const int half = kGridSize / 2;
  double left = 0.0, right = 0.0;
  for (int i = 0; i < half; ++i)
    for (int j = 0; j < kGridSize; ++j) {
      left += image.at(i, j);
      right += image.at(kGridSize - 1 - i, j);
    }
  if (left <= right) return image;
  JetImage out = image;
  for (int i = 0; i < half; ++i)
    for (int j = 0; j < kGridSize; ++j)
      std::swap(out.at(i, j), out.at(kGridSize - 1 - i, j));
  return out;
}

/// Zero out pixels strictly below threshold.
inline JetImage truncate_low_intensity(const JetImage& image, double threshold) {
  require(threshold >= 0.0, ErrorCategory::config, "truncation threshold must be >= 0");
  JetImage out = image;
  for (auto& v : out.pixels)
    if (v < threshold) v = 0.0;
  return out;
}

namespace detail {

// Catmull-Rom cubic kernel (a = -0.5).
inline double cubic_weight(double t) {
  t = std::abs(t);
  if (t < 1.0) return 1.0 + t * t * (1.5 * t - 2.5);
  if (t < 2.0) return 2.0 - t * (4.0 - t * (2.5 - 0.5 * t));
  return 0.0;
}

inline double sample_bicubic(const JetImage& image, double y, double x) {
  const int iy = static_cast<int>(std::floor(y));
  const int ix = static_cast<int>(std::floor(x));
  double acc = 0.0;
  for (int m = -1; m <= 2; ++m) {
    const double wy = cubic_weight(y - (iy + m));
    if (wy == 0.0) continue;
    const int row = std::clamp(iy + m, 0, kGridSize - 1);
    for (int n = -1; n <= 2; ++n) {
      const double wx = cubic_weight(x - (ix + n));
      if (wx == 0.0) continue;
      const int col = std::clamp(ix + n, 0, kGridSize - 1);
      acc += wy * wx * image.at(row, col);
    }
  }
  return acc;
}

}  // namespace detail

/// Rotate the image content about its center by `angle` (a feature at
/// azimuth theta in the eta-phi plane moves to theta + angle), resampling
/// with Catmull-Rom bicubic interpolation on clamped edges. Negative
/// interpolation artifacts clamp to zero; with `renormalize`, the pixel sum
/// is rescaled to match the input exactly.
inline JetImage rotate_image_cubic(const JetImage& image, double angle, bool renormalize) {
  if (angle == 0.0) return image;
  const double center = (kGridSize - 1) / 2.0;
  const double ca = std::cos(angle), sa = std::sin(angle);
  JetImage out;
  out.label = image.label;
  out.origin = image.origin;
  for (int i = 0; i < kGridSize; ++i)
    for (int j = 0; j < kGridSize; ++j) {
      const double di = i - center, dj = j - center;
      // inverse rotation of the output coordinate
      const double src_i = ca * di + sa * dj + center;
      const double src_j = -sa * di + ca * dj + center;
      out.at(i, j) = std::max(detail::sample_bicubic(image, src_i, src_j), 0.0);
    }
  if (renormalize) {
    const double want = image.sum();
    const double got = out.sum();
    if (got > 0.0) {
      const double scale = want / got;
      for (auto& v : out.pixels) v *= scale;
    }
  }
  return out;
}

/// Full pipeline: translate, rotate (per config), pixelize, parity flip,
/// truncate.
inline JetImage preprocess_event(const JetEvent& event, const PreprocessConfig& config) {
  config.validate();
  require(!event.constituents.empty(), ErrorCategory::empty_input,
          "event has no constituents");
  JetEvent translated = translate(event);
  JetImage image;
  switch (config.rotation_mode) {
    case RotationMode::constituent:
      image = pixelize(rotate_constituents(translated));
      break;
    case RotationMode::image_cubic: {
      image = pixelize(translated);
      SubjetDirection axis =
          translated.subjet2 ? *translated.subjet2 : principal_axis(translated);
      require(axis.eta != 0.0 || axis.phi != 0.0, ErrorCategory::degenerate_axis,
              "rotation axis sits at the origin");
      const double current = std::atan2(axis.phi, axis.eta);
      image = rotate_image_cubic(image, -0.5 * kPi - current,
                                 config.renormalize_after_rotation);
      break;
    }
    case RotationMode::none:
      image = pixelize(translated);
      break;
  }
  image = parity_flip(image);
  image = truncate_low_intensity(image, config.truncation_threshold);
  return image;
}

// ---------------------------------------------------------------------------
// ROC-based information-loss analysis: treats two samples of one observable
// (before and after a preprocessing step) as two classes and sweeps a
// threshold over the pooled values.
// ---------------------------------------------------------------------------

struct RocCurve {
  // (efficiency of "before" sample, efficiency of "after" sample) per threshold
  std::vector<std::pair<double, double>> points;
  double auc = 0.5;  // P(before > after) + 1/2 P(before == after)
  bool degenerate = false;
};

inline RocCurve roc_info_loss(const std::vector<double>& before,
                              const std::vector<double>& after) {
  require(!before.empty() && !after.empty(), ErrorCategory::empty_input,
          "roc_info_loss needs two non-empty samples");
  RocCurve curve;

  std::vector<double> a = before, b = after;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.front() == a.back() && b.front() == b.back() && a.front() == b.front())
    curve.degenerate = true;

  // Mann-Whitney statistic by merge: count pairs with before > after.
  double greater = 0.0, equal = 0.0;
  {
    size_t j_less = 0, j_leq = 0;
    for (double x : a) {
      while (j_less < b.size() && b[j_less] < x) ++j_less;
      while (j_leq < b.size() && b[j_leq] <= x) ++j_leq;
      greater += static_cast<double>(j_less);
      equal += static_cast<double>(j_leq - j_less);
    }
  }
  curve.auc = (greater + 0.5 * equal) /
              (static_cast<double>(a.size()) * static_cast<double>(b.size()));

  // Efficiency pairs at every distinct pooled threshold (fraction > t).
  std::vector<double> pooled;
  pooled.reserve(a.size() + b.size());
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  curve.points.emplace_back(1.0, 1.0);
  for (double t : pooled) {
    double ea = static_cast<double>(a.end() - std::upper_bound(a.begin(), a.end(), t)) /
                static_cast<double>(a.size());
    double eb = static_cast<double>(b.end() - std::upper_bound(b.begin(), b.end(), t)) /
                static_cast<double>(b.size());
    curve.points.emplace_back(ea, eb);
  }
  return curve;
}

}  // namespace lagan

#pragma once

// Physics observables over 25x25 jet images: transverse momentum, mass, and
// n-subjettiness with exclusive-kt winner-take-all axes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lagan/error.hpp"
#include "lagan/jet.hpp"

namespace lagan {

/// pT(I) from the pixel sums of I_i cos(phi_i) and I_i sin(phi_i).
inline double image_pt(const JetImage& image) {
  double cx = 0.0, cy = 0.0;
  for (int i = 0; i < kGridSize; ++i)
    for (int j = 0; j < kGridSize; ++j) {
      const double v = image.at(i, j);
      if (v == 0.0) continue;
      auto [eta, phi] = pixel_center(i, j);
      cx += v * std::cos(phi);
      cy += v * std::sin(phi);
    }
  return std::hypot(cx, cy);
}

/// m(I) = sqrt((sum I)^2 - pT^2(I) - (sum I sinh eta)^2). The radicand can go
/// negative (the formula treats intensities as energies); it then clamps to
/// zero and bumps the optional diagnostic counter.
inline double image_mass(const JetImage& image, long* negative_m2_count = nullptr) {
  double total = 0.0, cx = 0.0, cy = 0.0, cz = 0.0;
  for (int i = 0; i < kGridSize; ++i)
    for (int j = 0; j < kGridSize; ++j) {
      const double v = image.at(i, j);
      if (v == 0.0) continue;
      auto [eta, phi] = pixel_center(i, j);
      total += v;
      cx += v * std::cos(phi);
      cy += v * std::sin(phi);
      cz += v * std::sinh(eta);
    }
  const double m2 = total * total - (cx * cx + cy * cy) - cz * cz;
  if (m2 < 0.0) {
    if (negative_m2_count) ++(*negative_m2_count);
    return 0.0;
  }
  return std::sqrt(m2);
}

struct AxisSet {
  std::vector<std::pair<double, double>> axes;  // (eta, phi) per requested order
};

namespace detail {

struct Cluster {
  double pt, eta, phi;
  bool alive;
  int nn;          // index of current nearest neighbor
  double nn_dist;  // kt distance to it
};

inline double kt_distance(const Cluster& a, const Cluster& b) {
  const double de = a.eta - b.eta;
  const double dp = a.phi - b.phi;
  const double minpt2 = std::min(a.pt * a.pt, b.pt * b.pt);
  return minpt2 * (de * de + dp * dp);  // R = 1
}

inline void refresh_nn(std::vector<Cluster>& cs, size_t i) {
  cs[i].nn = -1;
  cs[i].nn_dist = std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < cs.size(); ++j) {
    if (j == i || !cs[j].alive) continue;
    double d = kt_distance(cs[i], cs[j]);
    if (d < cs[i].nn_dist) {
      cs[i].nn_dist = d;
      cs[i].nn = static_cast<int>(j);
    }
  }
}

}  // namespace detail

/// Exclusive kt clustering of the nonzero pixels down to n clusters, with
/// winner-take-all recombination: each merge keeps the direction of the
/// higher-pt member and sums the pt. One pass, no iterative refinement.
inline AxisSet find_axes(const JetImage& image, int n) {
  require(n >= 1, ErrorCategory::config, "axis count must be >= 1");
  std::vector<detail::Cluster> cs;
  for (int i = 0; i < kGridSize; ++i)
    for (int j = 0; j < kGridSize; ++j) {
      const double v = image.at(i, j);
      if (v == 0.0) continue;
      auto [eta, phi] = pixel_center(i, j);
      cs.push_back({v, eta, phi, true, -1, 0.0});
    }
  require(static_cast<int>(cs.size()) >= n, ErrorCategory::insufficient_constituents,
          "fewer nonzero pixels than requested axes");

  int alive = static_cast<int>(cs.size());
  for (size_t i = 0; i < cs.size(); ++i) detail::refresh_nn(cs, i);

  while (alive > n) {
    // merge the globally closest pair
    size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < cs.size(); ++i) {
      if (!cs[i].alive) continue;
      if (cs[i].nn_dist < best_dist) {
        best_dist = cs[i].nn_dist;
        best = i;
      }
    }
    size_t a = best;
    size_t b = static_cast<size_t>(cs[a].nn);
    // winner takes the direction; ties resolve to the lower index
    const bool a_wins = cs[a].pt > cs[b].pt || (cs[a].pt == cs[b].pt && a < b);
    const size_t keep = a_wins ? a : b;
    const size_t drop = a_wins ? b : a;
    cs[keep].pt = cs[a].pt + cs[b].pt;
    cs[drop].alive = false;
    --alive;
    detail::refresh_nn(cs, keep);
    for (size_t i = 0; i < cs.size(); ++i) {
      if (!cs[i].alive || i == keep) continue;
      if (cs[i].nn == static_cast<int>(drop) || cs[i].nn == static_cast<int>(keep)) {
        detail::refresh_nn(cs, i);
      } else {
        double d = detail::kt_distance(cs[i], cs[keep]);
        if (d < cs[i].nn_dist) {
          cs[i].nn_dist = d;
          cs[i].nn = static_cast<int>(keep);
        }
      }
    }
  }

  AxisSet out;
  for (const auto& c : cs)
    if (c.alive) out.axes.emplace_back(c.eta, c.phi);
  return out;
}

/// tau_n(I): pt-weighted distance of each pixel to its nearest axis,
/// normalized by (sum I) * R with R = 1.
inline double tau_n(const JetImage& image, int n) {
  const double total = image.sum();
  require(total > 0.0, ErrorCategory::undefined_observable,
          "n-subjettiness is undefined for an all-zero image");
  AxisSet axes = find_axes(image, n);
  double acc = 0.0;
  for (int i = 0; i < kGridSize; ++i)
    for (int j = 0; j < kGridSize; ++j) {
      const double v = image.at(i, j);
      if (v == 0.0) continue;
      auto [eta, phi] = pixel_center(i, j);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [ea, pa] : axes.axes) {
        const double de = eta - ea, dp = phi - pa;
        best = std::min(best, de * de + dp * dp);
      }
      acc += v * std::sqrt(best);
    }
  return acc / total;
}

/// tau21 = tau2 / tau1; requires tau1 > 0.
inline double tau21(const JetImage& image) {
  const double t1 = tau_n(image, 1);
  require(t1 > 0.0, ErrorCategory::undefined_observable,
          "tau21 undefined when tau1 is zero (single-particle-like image)");
  return tau_n(image, 2) / t1;
}

struct ObservableSet {
  double pt = 0.0;
  double mass = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  double tau21 = 0.0;
  bool tau_defined = false;  // tau1 > 0 and at least two nonzero pixels
};

struct ObservableDiagnostics {
  long negative_m2 = 0;
  long tau_undefined = 0;
};

inline ObservableSet compute_observables(const JetImage& image,
                                         ObservableDiagnostics* diag = nullptr) {
  ObservableSet obs;
  obs.pt = image_pt(image);
  obs.mass = image_mass(image, diag ? &diag->negative_m2 : nullptr);
  const int nonzero = image.nonzero_count();
  if (nonzero >= 2) {
    obs.tau1 = tau_n(image, 1);
    if (obs.tau1 > 0.0) {
      obs.tau2 = tau_n(image, 2);
      obs.tau21 = obs.tau2 / obs.tau1;
      obs.tau_defined = true;
    }
  } else if (nonzero == 1) {
    obs.tau1 = 0.0;
  }
  if (!obs.tau_defined && diag) ++diag->tau_undefined;
  return obs;
}

// ---------------------------------------------------------------------------
// Aggregated pixel-intensity histogram on log-spaced bins.
// ---------------------------------------------------------------------------

struct IntensityHistogram {
  std::vector<double> edges;   // nbins + 1 log-spaced edges
  std::vector<long> counts;    // nbins
  long total_above_threshold = 0;
};

inline IntensityHistogram pixel_intensity_histogram(const std::vector<JetImage>& images,
                                                    double threshold, int nbins) {
  require(threshold > 0.0, ErrorCategory::config, "histogram threshold must be > 0");
  require(nbins >= 1, ErrorCategory::config, "histogram needs at least one bin");
  IntensityHistogram h;
  double vmax = threshold;
  for (const auto& img : images)
    for (double v : img.pixels)
      if (v > vmax) vmax = v;
  if (vmax <= threshold) vmax = threshold * 10.0;  // empty dataset: keep edges well-formed

  const double lo = std::log(threshold), hi = std::log(vmax);
  h.edges.resize(static_cast<size_t>(nbins) + 1);
  for (int b = 0; b <= nbins; ++b)
    h.edges[static_cast<size_t>(b)] = std::exp(lo + (hi - lo) * b / nbins);
  h.counts.assign(static_cast<size_t>(nbins), 0);

  for (const auto& img : images)
    for (double v : img.pixels) {
      if (v < threshold) continue;
      int b = static_cast<int>(std::floor((std::log(v) - lo) / (hi - lo) * nbins));
      b = std::clamp(b, 0, nbins - 1);
      ++h.counts[static_cast<size_t>(b)];
      ++h.total_above_threshold;
    }
  return h;
}

}  // namespace lagan

#pragma once

// Frame importance: global-statistics SSIM between consecutive grayscale
// frames, key-frame gating, a seeded synthetic frame stream, and the
// two-level weight mapping used by the learner.

#include <algorithm>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "ans/detail/random.hpp"

namespace ans {

struct Frame {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // row-major intensities in [0, 255]

  Frame() = default;
  Frame(int w, int h, double fill = 0.0) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("frame dimensions must be positive");
    pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
  }

  std::size_t size() const { return pixels.size(); }
};

namespace ssim_constants {
inline constexpr double kDynamicRange = 255.0;
inline constexpr double kC1 = (0.01 * kDynamicRange) * (0.01 * kDynamicRange);
inline constexpr double kC2 = (0.03 * kDynamicRange) * (0.03 * kDynamicRange);
}  // namespace ssim_constants

/// Structural similarity over whole-frame means, variances and covariance.
inline double ssim(const Frame& a, const Frame& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("ssim: frame dimensions differ");
  }
  if (a.size() == 0) throw std::invalid_argument("ssim: empty frame");
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a.pixels[i];
    mean_b += b.pixels[i];
  }
  mean_a /= n;
  mean_b /= n;
  double var_a = 0.0, var_b = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a.pixels[i] - mean_a;
    const double db = b.pixels[i] - mean_b;
    var_a += da * da;
    var_b += db * db;
    cov += da * db;
  }
  var_a /= n;
  var_b /= n;
  cov /= n;
  using namespace ssim_constants;
  return ((2.0 * mean_a * mean_b + kC1) * (2.0 * cov + kC2)) /
         ((mean_a * mean_a + mean_b * mean_b + kC1) * (var_a + var_b + kC2));
}

/// Frame 1 is always key; afterwards a frame is key iff it is less similar to
/// its predecessor than `threshold`.
inline bool detect_key(int t, const Frame* prev, const Frame& cur, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must lie in [0, 1]");
  if (t <= 1 || prev == nullptr) return true;
  return ssim(*prev, cur) < threshold;
}

/// Slowly drifting random frames: each frame perturbs every pixel of its
/// predecessor by an integer in [-2, 2]; at each listed change frame (and at
/// frame 1) the whole frame is redrawn uniformly.
inline std::vector<Frame> synth_stream(int count, int width, int height,
                                       const std::vector<int>& change_frames, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("frame count must be non-negative");
  std::vector<Frame> out;
  out.reserve(static_cast<std::size_t>(count));
  const std::set<int> changes(change_frames.begin(), change_frames.end());
  for (int t = 1; t <= count; ++t) {
    auto eng = detail::make_engine(seed, {0x6672616d65ULL, static_cast<std::uint64_t>(t)});
    if (t == 1 || changes.count(t) != 0) {
      Frame f(width, height);
      std::uniform_int_distribution<int> level(0, 255);
      for (auto& px : f.pixels) px = level(eng);
      out.push_back(std::move(f));
    } else {
      Frame f = out.back();
      std::uniform_int_distribution<int> jitter(-2, 2);
      for (auto& px : f.pixels) px = std::clamp(px + jitter(eng), 0.0, 255.0);
      out.push_back(std::move(f));
    }
  }
  return out;
}

struct FrameEvent {
  int t = 1;
  bool is_key = false;
  double weight = 0.0;
};

/// Key flags for a stream by SSIM gating.
inline std::vector<bool> detect_keys(const std::vector<Frame>& stream, double threshold) {
  std::vector<bool> keys(stream.size(), false);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    keys[i] = detect_key(static_cast<int>(i) + 1, i == 0 ? nullptr : &stream[i - 1], stream[i], threshold);
  }
  return keys;
}

/// Seeded Bernoulli key flags: frame t is key with probability `rate`.
inline std::vector<bool> bernoulli_keys(int count, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("key rate must lie in [0, 1]");
  std::vector<bool> keys(static_cast<std::size_t>(std::max(count, 0)), false);
  for (int t = 1; t <= count; ++t) {
    auto eng = detail::make_engine(seed, {0x6b6579ULL, static_cast<std::uint64_t>(t)});
    keys[static_cast<std::size_t>(t - 1)] = detail::uniform01(eng) < rate;
  }
  return keys;
}

/// Key flags from an explicit 1-based frame list.
inline std::vector<bool> listed_keys(int count, const std::vector<int>& frames) {
  std::vector<bool> keys(static_cast<std::size_t>(std::max(count, 0)), false);
  for (int t : frames) {
    if (t >= 1 && t <= count) keys[static_cast<std::size_t>(t - 1)] = true;
  }
  return keys;
}

}  // namespace ans

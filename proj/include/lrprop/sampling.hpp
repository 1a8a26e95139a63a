#pragma once

// Temporal random cropping and feature-space augmentation of training clips.

#include "lrprop/common.hpp"

#include <random>
#include <vector>

namespace lrprop::sampling {

using Rng = std::mt19937_64;

struct SampledClip {
  Matrix features;                   ///< T × d_in
  std::vector<Index> source_indices;  ///< strictly increasing frame indices in the source video

  [[nodiscard]] Index length() const { return features.rows(); }
};

/// Throws InvalidInput unless the clip has T rows, T strictly increasing
/// indices, and every index lies in [0, source_frames).
void validate_clip(const SampledClip& clip, Index source_frames);

/// Window of random length L ∈ [T, F] at a random start, then T sorted
/// distinct frames drawn uniformly from the window.
SampledClip sample_clip(const Matrix& video_features, Index clip_length, Rng& rng);

/// Per-clip scale vector 1 + strength·N(0,1) and offset strength·N(0,1),
/// shared by every frame, plus i.i.d. N(0, strength²) noise per entry.
SampledClip augment(const SampledClip& clip, double strength, Rng& rng);

/// Indices into Batch::clips. `a` plays the column role, `b` the row role.
struct ClipPair {
  std::size_t a = 0;
  std::size_t b = 0;
  bool same_video = false;
};

struct Batch {
  std::vector<SampledClip> clips;  ///< A1, A2, B1, B2
  std::vector<ClipPair> pairs;
};

/// Two clips per video, paired in a fixed order:
/// (A1,A2) same, (B1,B2) same, (A1,B1), (A1,B2), (A2,B1), (A2,B2) cross.
Batch build_batch(const Matrix& video_a, const Matrix& video_b, Index clip_length,
                  double augment_strength, Rng& rng);

}  // namespace lrprop::sampling

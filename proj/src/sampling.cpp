#include "lrprop/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace lrprop::sampling {

void validate_clip(const SampledClip& clip, Index source_frames) {
  const auto n = static_cast<Index>(clip.source_indices.size());
  require(n == clip.features.rows(), "clip: index count does not match frame count");
  for (Index k = 0; k < n; ++k) {
    const Index s = clip.source_indices[static_cast<std::size_t>(k)];
    require(s >= 0 && s < source_frames, "clip: index " + std::to_string(s) + " out of range");
    if (k > 0) {
      require(s > clip.source_indices[static_cast<std::size_t>(k - 1)],
              "clip: indices must be strictly increasing");
    }
  }
}

SampledClip sample_clip(const Matrix& video_features, Index clip_length, Rng& rng) {
  const Index frames = video_features.rows();
  require(clip_length > 0, "sample_clip: T must be positive");
  require(frames >= clip_length, "sample_clip: video has " + std::to_string(frames) +
                                     " frames, fewer than T=" + std::to_string(clip_length));
  std::uniform_int_distribution<Index> window_len(clip_length, frames);
  const Index len = window_len(rng);
  std::uniform_int_distribution<Index> window_start(0, frames - len);
  const Index start = window_start(rng);

  std::vector<Index> window(static_cast<std::size_t>(len));
  std::iota(window.begin(), window.end(), start);
  SampledClip clip;
  clip.source_indices.reserve(static_cast<std::size_t>(clip_length));
  // Selection sampling keeps the chosen indices in increasing order.
  std::sample(window.begin(), window.end(), std::back_inserter(clip.source_indices), clip_length,
              rng);
  clip.features.resize(clip_length, video_features.cols());
  for (Index t = 0; t < clip_length; ++t) {
    clip.features.row(t) = video_features.row(clip.source_indices[static_cast<std::size_t>(t)]);
  }
  return clip;
}

SampledClip augment(const SampledClip& clip, double strength, Rng& rng) {
  require(strength >= 0.0, "augment: strength must be nonnegative");
  if (strength == 0.0) {
    return clip;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index dim = clip.features.cols();
  RowVector scale(dim);
  RowVector offset(dim);
  for (Index c = 0; c < dim; ++c) {
    scale(c) = 1.0 + strength * normal(rng);
    offset(c) = strength * normal(rng);
  }
  SampledClip out = clip;
  for (Index t = 0; t < out.features.rows(); ++t) {
    for (Index c = 0; c < dim; ++c) {
      out.features(t, c) = out.features(t, c) * scale(c) + offset(c) + strength * normal(rng);
    }
  }
  return out;
}

Batch build_batch(const Matrix& video_a, const Matrix& video_b, Index clip_length,
                  double augment_strength, Rng& rng) {
  auto draw = [&](const Matrix& video) {
    return augment(sample_clip(video, clip_length, rng), augment_strength, rng);
  };
  Batch batch;
  batch.clips.push_back(draw(video_a));
  batch.clips.push_back(draw(video_a));
  batch.clips.push_back(draw(video_b));
  batch.clips.push_back(draw(video_b));
  batch.pairs = {
      {0, 1, true}, {2, 3, true}, {0, 2, false},
      {0, 3, false}, {1, 2, false}, {1, 3, false},
  };
  return batch;
}

}  // namespace lrprop::sampling

#pragma once

// Synthetic benchmark: every video traverses one shared latent trajectory at
// its own monotone speed, so cross-video correspondence is known exactly.

#include "lrprop/alignment.hpp"
#include "lrprop/common.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace lrprop::synthdata {

enum class Split { train, test };

struct SyntheticVideo {
  Matrix features;                 ///< F × d_in
  std::vector<int> phase_labels;   ///< floor(progress·P), clamped to P-1
  std::vector<double> progress;    ///< nondecreasing in [0,1]
  std::vector<double> canonical_time;
  Split split = Split::train;
  int class_id = 0;

  [[nodiscard]] Index frames() const { return features.rows(); }
};

struct SynthConfig {
  Index train_videos = 24;
  Index test_videos = 8;
  int phases = 4;
  Index input_dim = 12;
  Index latent_dim = 4;
  /// Latent channels carrying per-video nuisance instead of content.
  Index nuisance_dim = 4;
  Index min_frames = 40;
  Index max_frames = 120;
  /// Std of i.i.d. observation noise.
  double noise = 0.05;
  /// Amplitude of the per-video nuisance channels.
  double distractor = 1.0;
  /// Log-speed amplitude of the per-video time warp; 0 gives uniform speed.
  double warp_strength = 0.6;

  void validate() const;
};

struct Dataset {
  std::uint64_t seed = 0;
  SynthConfig config;
  std::vector<SyntheticVideo> videos;

  [[nodiscard]] std::vector<const SyntheticVideo*> split(Split which, int class_id = -1) const;
};

/// Shared smooth latent curve through phases+1 random waypoints.
class CanonicalTrajectory {
 public:
  CanonicalTrajectory(int phases, Index latent_dim, std::mt19937_64& rng);
  /// Latent point at canonical time u ∈ [0,1].
  [[nodiscard]] RowVector operator()(double u) const;

 private:
  Matrix waypoints_;
};

/// Monotone warp: normalized cumulative sum of positive smooth increments.
/// Result starts at 0, ends at 1, and is strictly increasing.
std::vector<double> random_time_warp(Index frames, double warp_strength, std::mt19937_64& rng);

int phase_of(double progress, int phases);

/// train_videos + test_videos videos, deterministic in the seed.
Dataset generate_dataset(const SynthConfig& config, std::uint64_t seed);

/// Lower-level generator: `count` videos observed from one trajectory.
std::vector<SyntheticVideo> generate_videos(Index count, const SynthConfig& config,
                                            std::mt19937_64& rng);

/// Monotone path matching frames by nearest canonical time
/// (exact DTW over |t1_i - t2_j|).
alignment::AlignmentPath ground_truth_alignment(const SyntheticVideo& v1,
                                                const SyntheticVideo& v2);

/// Line-delimited JSON: a header record, then one record per video.
void write_dataset(std::ostream& out, const Dataset& dataset);
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

inline constexpr int kDatasetFormatVersion = 1;

}  // namespace lrprop::synthdata

#pragma once

// Exact dynamic time warping over a pairwise distance matrix.
//
// Paths move through an n×m grid from (0,0) to (n-1,m-1) using the steps
// (0,1), (1,0) and (1,1). The accumulated cost table treats every cell outside
// the grid as +inf.

#include "lrprop/common.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace lrprop::alignment {

using DistanceMatrix = Matrix;

/// Binary n×m matrix; entry (i,j) is 1 when (i,j) lies on the path.
using AlignmentMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Cell {
  Index row = 0;
  Index col = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct AlignmentPath {
  std::vector<Cell> steps;

  [[nodiscard]] std::size_t size() const { return steps.size(); }
};

/// Scalar distance between two frames.
using FrameDistance =
    std::function<double(const Eigen::Ref<const RowVector>&, const Eigen::Ref<const RowVector>&)>;

double euclidean(const Eigen::Ref<const RowVector>& a, const Eigen::Ref<const RowVector>& b);

/// D(i,j) = distance(z1_i, z2_j). Defaults to the l2 norm.
DistanceMatrix distance_matrix(const EmbeddingSequence& z1, const EmbeddingSequence& z2,
                               const FrameDistance& distance = euclidean);

/// Throws InvalidInput for an empty matrix or a negative or non-finite entry.
void validate_distance_matrix(const DistanceMatrix& d);

/// Full accumulated-cost table r(i,j).
Matrix dtw_table(const DistanceMatrix& d);

double dtw_cost(const DistanceMatrix& d);

/// Minimum-cost path. Backtracking ties prefer the diagonal predecessor,
/// then the vertical one (i-1,j), then the horizontal one (i,j-1).
AlignmentPath dtw_path(const DistanceMatrix& d);

AlignmentMatrix alignment_matrix(const AlignmentPath& path, Index n, Index m);

/// Throws InvalidInput unless `path` is a monotone corner-to-corner path on n×m.
void validate_path(const AlignmentPath& path, Index n, Index m);

/// ⟨A, D⟩ for the path's alignment matrix.
double path_cost(const AlignmentPath& path, const DistanceMatrix& d);

/// Every monotone path on an n×m grid. Refuses n or m above kMaxEnumerate.
inline constexpr Index kMaxEnumerate = 7;
std::vector<AlignmentPath> enumerate_paths(Index n, Index m);
std::vector<AlignmentMatrix> enumerate_alignments(Index n, Index m);

/// Delannoy-style path count c(n-1, m-1).
std::uint64_t count_paths(Index n, Index m);

}  // namespace lrprop::alignment

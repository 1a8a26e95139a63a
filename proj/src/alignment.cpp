#include "lrprop/alignment.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace lrprop::alignment {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void extend_paths(Index n, Index m, std::vector<Cell>& prefix, std::vector<AlignmentPath>& out) {
  const Cell last = prefix.back();
  if (last.row == n - 1 && last.col == m - 1) {
    out.push_back(AlignmentPath{prefix});
    return;
  }
  const Cell moves[] = {{1, 1}, {1, 0}, {0, 1}};
  for (const Cell& mv : moves) {
    const Cell next{last.row + mv.row, last.col + mv.col};
    if (next.row < n && next.col < m) {
      prefix.push_back(next);
      extend_paths(n, m, prefix, out);
      prefix.pop_back();
    }
  }
}

}  // namespace

void validate_distance_matrix(const DistanceMatrix& d) {
  require(d.rows() > 0 && d.cols() > 0, "distance matrix must be nonempty");
  require(d.allFinite() && (d.array() >= 0.0).all(),
          "distance matrix entries must be finite and nonnegative");
}

double euclidean(const Eigen::Ref<const RowVector>& a, const Eigen::Ref<const RowVector>& b) {
  return (a - b).norm();
}

DistanceMatrix distance_matrix(const EmbeddingSequence& z1, const EmbeddingSequence& z2,
                               const FrameDistance& distance) {
  require(z1.rows() > 0 && z2.rows() > 0, "distance_matrix: sequences must be nonempty");
  require(z1.cols() == z2.cols(), "distance_matrix: embedding dimensions differ (" +
                                      std::to_string(z1.cols()) + " vs " +
                                      std::to_string(z2.cols()) + ")");
  DistanceMatrix d(z1.rows(), z2.rows());
  for (Index i = 0; i < z1.rows(); ++i) {
    for (Index j = 0; j < z2.rows(); ++j) {
      d(i, j) = distance(z1.row(i), z2.row(j));
    }
  }
  return d;
}

Matrix dtw_table(const DistanceMatrix& d) {
  validate_distance_matrix(d);
  const Index n = d.rows();
  const Index m = d.cols();
  Matrix r(n, m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      if (i == 0 && j == 0) {
        r(i, j) = d(i, j);
        continue;
      }
      const double up = i > 0 ? r(i - 1, j) : kInf;
      const double left = j > 0 ? r(i, j - 1) : kInf;
      const double diag = (i > 0 && j > 0) ? r(i - 1, j - 1) : kInf;
      r(i, j) = d(i, j) + std::min({up, left, diag});
    }
  }
  return r;
}

double dtw_cost(const DistanceMatrix& d) {
  const Matrix r = dtw_table(d);
  return r(r.rows() - 1, r.cols() - 1);
}

AlignmentPath dtw_path(const DistanceMatrix& d) {
  const Matrix r = dtw_table(d);
  Index i = r.rows() - 1;
  Index j = r.cols() - 1;
  std::vector<Cell> reversed{{i, j}};
  while (i > 0 || j > 0) {
    const double diag = (i > 0 && j > 0) ? r(i - 1, j - 1) : kInf;
    const double up = i > 0 ? r(i - 1, j) : kInf;
    const double left = j > 0 ? r(i, j - 1) : kInf;
    if (diag <= up && diag <= left) {
      --i;
      --j;
    } else if (up <= left) {
      --i;
    } else {
      --j;
    }
    reversed.push_back({i, j});
  }
  std::reverse(reversed.begin(), reversed.end());
  return AlignmentPath{std::move(reversed)};
}

void validate_path(const AlignmentPath& path, Index n, Index m) {
  require(n > 0 && m > 0, "path grid must be nonempty");
  require(!path.steps.empty(), "path is empty");
  for (const Cell& c : path.steps) {
    require(c.row >= 0 && c.row < n && c.col >= 0 && c.col < m,
            "path step (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                ") is outside the " + std::to_string(n) + "x" + std::to_string(m) + " grid");
  }
  require(path.steps.front() == Cell{0, 0}, "path must start at (0,0)");
  require(path.steps.back() == Cell{n - 1, m - 1}, "path must end at (n-1,m-1)");
  for (std::size_t k = 1; k < path.steps.size(); ++k) {
    const Index di = path.steps[k].row - path.steps[k - 1].row;
    const Index dj = path.steps[k].col - path.steps[k - 1].col;
    const bool ok = (di == 0 && dj == 1) || (di == 1 && dj == 0) || (di == 1 && dj == 1);
    require(ok, "path step " + std::to_string(k) + " is not a monotone unit move");
  }
}

AlignmentMatrix alignment_matrix(const AlignmentPath& path, Index n, Index m) {
  validate_path(path, n, m);
  AlignmentMatrix a = AlignmentMatrix::Zero(n, m);
  for (const Cell& c : path.steps) {
    a(c.row, c.col) = 1;
  }
  return a;
}

double path_cost(const AlignmentPath& path, const DistanceMatrix& d) {
  double total = 0.0;
  for (const Cell& c : path.steps) {
    total += d(c.row, c.col);
  }
  return total;
}

std::vector<AlignmentPath> enumerate_paths(Index n, Index m) {
  require(n > 0 && m > 0, "enumerate_paths: grid must be nonempty");
  if (n > kMaxEnumerate || m > kMaxEnumerate) {
    throw RefusalError("enumerate_paths: refusing " + std::to_string(n) + "x" +
                       std::to_string(m) + " grid (limit " + std::to_string(kMaxEnumerate) +
                       ")");
  }
  std::vector<AlignmentPath> out;
  std::vector<Cell> prefix{{0, 0}};
  extend_paths(n, m, prefix, out);
  return out;
}

std::vector<AlignmentMatrix> enumerate_alignments(Index n, Index m) {
  std::vector<AlignmentMatrix> out;
  for (const AlignmentPath& p : enumerate_paths(n, m)) {
    out.push_back(alignment_matrix(p, n, m));
  }
  return out;
}

std::uint64_t count_paths(Index n, Index m) {
  require(n > 0 && m > 0, "count_paths: grid must be nonempty");
  std::vector<std::uint64_t> prev(static_cast<std::size_t>(m), 1);
  for (Index i = 1; i < n; ++i) {
    std::vector<std::uint64_t> cur(static_cast<std::size_t>(m), 1);
    for (Index j = 1; j < m; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      cur[uj] = prev[uj] + cur[uj - 1] + prev[uj - 1];
    }
    prev = std::move(cur);
  }
  return prev.back();
}

}  // namespace lrprop::alignment

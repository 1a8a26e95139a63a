#pragma once

// Frame-embedding evaluation: Kendall's tau, phase classification, phase
// progression, AP@K retrieval, and DTW alignment accuracy.
//
// Nearest-neighbour ties resolve to the smallest frame index throughout.

#include "lrprop/common.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <vector>

namespace lrprop::metrics {

/// Embeddings of one video with per-frame labels and progress targets.
struct LabeledSequence {
  EmbeddingSequence embeddings;
  std::vector<int> labels;
  std::vector<double> progress;
};

/// Index of the row of `corpus` nearest to `query` (l2), smallest index on ties.
Index nearest_neighbor(const Eigen::Ref<const RowVector>& query, const EmbeddingSequence& corpus);

/// (concordant - discordant) / C(n,2) over frame pairs of the first video
/// mapped to nearest neighbours in the second. Equal neighbours count as
/// discordant.
double kendall_tau(const EmbeddingSequence& emb_a, const EmbeddingSequence& emb_b);

/// Fraction of DTW path steps joining frames with equal labels.
double dtw_accuracy(const EmbeddingSequence& emb_a, std::span<const int> labels_a,
                    const EmbeddingSequence& emb_b, std::span<const int> labels_b);

/// Multinomial logistic regression fitted by full-batch gradient descent on
/// standardized features.
class SoftmaxClassifier {
 public:
  struct Options {
    int iterations = 500;
    double step_size = 0.5;
    double l2 = 1e-4;
  };

  SoftmaxClassifier() = default;
  void fit(const Matrix& features, std::span<const int> labels, const Options& options);
  void fit(const Matrix& features, std::span<const int> labels) { fit(features, labels, Options{}); }
  [[nodiscard]] std::vector<int> predict(const Matrix& features) const;

 private:
  RowVector mean_;
  RowVector scale_;
  Matrix weights_;  // (d + 1) × classes
  int classes_ = 0;
};

/// Deterministic stratified subsample: per label, round(fraction·count)
/// (at least one) evenly spaced frames.
std::vector<std::size_t> stratified_subsample(std::span<const int> labels, double fraction);

/// Test accuracy for classifiers fitted on each fraction of the training frames.
std::map<double, double> phase_classification(std::span<const LabeledSequence> train,
                                              std::span<const LabeledSequence> test,
                                              std::span<const double> fractions);

/// Least-squares linear map (with bias) from embeddings to progress, fitted
/// on `train`; mean per-video R² on `test`.
double phase_progression(std::span<const LabeledSequence> train,
                         std::span<const LabeledSequence> test);

/// Coefficient of determination. Throws InvalidInput for a constant target.
double r_squared(std::span<const double> target, std::span<const double> prediction);

/// Mean over every query frame of the fraction of its K nearest corpus
/// frames (other videos only) sharing its label. `query_video` and
/// `corpus_video` tag each sequence with a video identity.
double average_precision_at_k(std::span<const LabeledSequence> queries,
                              std::span<const int> query_video,
                              std::span<const LabeledSequence> corpus,
                              std::span<const int> corpus_video, Index k);

struct EvalReport {
  double kendall_tau = 0.0;
  std::map<double, double> phase_classification;
  double phase_progression = 0.0;
  std::map<Index, double> ap_at_k;
  double dtw_accuracy = 0.0;

  /// Throws InvalidInput when a field leaves its declared range.
  void validate() const;
};

/// Full metric suite. tau and DTW accuracy average over ordered test pairs;
/// classification and progression fit on `train`; AP@K queries test frames
/// against other test videos.
EvalReport evaluate(std::span<const LabeledSequence> train, std::span<const LabeledSequence> test,
                    std::span<const double> fractions, std::span<const Index> ks);

/// Mean over ordered pairs (a != b) of kendall_tau and dtw_accuracy.
double mean_pairwise_kendall_tau(std::span<const LabeledSequence> videos);
double mean_pairwise_dtw_accuracy(std::span<const LabeledSequence> videos);

void write_report_json(std::ostream& out, const EvalReport& report);
/// One header row and one value row: tau, progress, AP@K..., Classification@%..., DTW A.
void write_report_csv(std::ostream& out, const EvalReport& report);

}  // namespace lrprop::metrics

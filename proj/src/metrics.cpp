#include "lrprop/metrics.hpp"

#include "lrprop/alignment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace lrprop::metrics {

Index nearest_neighbor(const Eigen::Ref<const RowVector>& query, const EmbeddingSequence& corpus) {
  require(corpus.rows() > 0, "nearest_neighbor: empty corpus");
  require(corpus.cols() == query.size(), "nearest_neighbor: dimension mismatch");
  Index best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Index r = 0; r < corpus.rows(); ++r) {
    const double dist = (corpus.row(r) - query).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = r;
    }
  }
  return best;
}

double kendall_tau(const EmbeddingSequence& emb_a, const EmbeddingSequence& emb_b) {
  const Index n = emb_a.rows();
  require(n >= 2, "kendall_tau: first video needs at least 2 frames");
  require(emb_b.rows() >= 1, "kendall_tau: second video is empty");
  std::vector<Index> nn(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    nn[static_cast<std::size_t>(i)] = nearest_neighbor(emb_a.row(i), emb_b);
  }
  double concordant = 0.0;
  double discordant = 0.0;
  for (std::size_t i = 0; i < nn.size(); ++i) {
    for (std::size_t j = i + 1; j < nn.size(); ++j) {
      if (nn[i] < nn[j]) {
        concordant += 1.0;
      } else {
        discordant += 1.0;
      }
    }
  }
  const double total = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return (concordant - discordant) / total;
}

double dtw_accuracy(const EmbeddingSequence& emb_a, std::span<const int> labels_a,
                    const EmbeddingSequence& emb_b, std::span<const int> labels_b) {
  require(static_cast<Index>(labels_a.size()) == emb_a.rows() &&
              static_cast<Index>(labels_b.size()) == emb_b.rows(),
          "dtw_accuracy: label counts must match frame counts");
  const alignment::AlignmentPath path =
      alignment::dtw_path(alignment::distance_matrix(emb_a, emb_b));
  std::size_t hits = 0;
  for (const alignment::Cell& c : path.steps) {
    if (labels_a[static_cast<std::size_t>(c.row)] == labels_b[static_cast<std::size_t>(c.col)]) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(path.size());
}

void SoftmaxClassifier::fit(const Matrix& features, std::span<const int> labels,
                            const Options& options) {
  const Index n = features.rows();
  const Index d = features.cols();
  require(n > 0 && static_cast<Index>(labels.size()) == n, "classifier: label count mismatch");
  require(*std::min_element(labels.begin(), labels.end()) >= 0, "classifier: negative label");
  classes_ = *std::max_element(labels.begin(), labels.end()) + 1;

  mean_ = features.colwise().mean();
  scale_ = ((features.rowwise() - mean_).array().square().colwise().mean()).sqrt();
  for (Index c = 0; c < d; ++c) {
    scale_(c) = scale_(c) > 1e-12 ? 1.0 / scale_(c) : 1.0;
  }
  Matrix x(n, d + 1);
  x.leftCols(d) = (features.rowwise() - mean_).array().rowwise() * scale_.array();
  x.col(d).setOnes();
  Matrix onehot = Matrix::Zero(n, classes_);
  for (Index r = 0; r < n; ++r) {
    onehot(r, labels[static_cast<std::size_t>(r)]) = 1.0;
  }
  weights_ = Matrix::Zero(d + 1, classes_);
  for (int it = 0; it < options.iterations; ++it) {
    Matrix logits = x * weights_;
    for (Index r = 0; r < n; ++r) {
      const double shift = logits.row(r).maxCoeff();
      logits.row(r) = (logits.row(r).array() - shift).exp();
      logits.row(r) /= logits.row(r).sum();
    }
    Matrix grad = x.transpose() * (logits - onehot) / static_cast<double>(n);
    grad.topRows(d) += options.l2 * weights_.topRows(d);
    weights_ -= options.step_size * grad;
  }
}

std::vector<int> SoftmaxClassifier::predict(const Matrix& features) const {
  require(classes_ > 0, "classifier: predict before fit");
  const Index d = features.cols();
  require(d == mean_.size(), "classifier: feature dimension mismatch");
  Matrix x(features.rows(), d + 1);
  x.leftCols(d) = (features.rowwise() - mean_).array().rowwise() * scale_.array();
  x.col(d).setOnes();
  const Matrix logits = x * weights_;
  std::vector<int> out(static_cast<std::size_t>(features.rows()));
  for (Index r = 0; r < logits.rows(); ++r) {
    Index best = 0;
    logits.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

std::vector<std::size_t> stratified_subsample(std::span<const int> labels, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, "fraction must lie in (0, 1]");
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    by_label[labels[k]].push_back(k);
  }
  std::vector<std::size_t> picked;
  for (const auto& [label, members] : by_label) {
    const auto count = static_cast<std::size_t>(std::clamp<double>(
        std::round(fraction * static_cast<double>(members.size())), 1.0,
        static_cast<double>(members.size())));
    const double stride = static_cast<double>(members.size()) / static_cast<double>(count);
    for (std::size_t k = 0; k < count; ++k) {
      picked.push_back(members[static_cast<std::size_t>(std::floor(stride * static_cast<double>(k)))]);
    }
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

namespace {

struct Stacked {
  Matrix features;
  std::vector<int> labels;
  std::vector<double> progress;
};

Stacked stack(std::span<const LabeledSequence> videos) {
  require(!videos.empty(), "metrics: no videos");
  Index rows = 0;
  const Index dim = videos.front().embeddings.cols();
  for (const LabeledSequence& v : videos) {
    require(v.embeddings.cols() == dim, "metrics: embedding dimensions differ across videos");
    require(static_cast<Index>(v.labels.size()) == v.embeddings.rows(),
            "metrics: label count does not match frame count");
    rows += v.embeddings.rows();
  }
  Stacked s;
  s.features.resize(rows, dim);
  Index offset = 0;
  for (const LabeledSequence& v : videos) {
    s.features.middleRows(offset, v.embeddings.rows()) = v.embeddings;
    offset += v.embeddings.rows();
    s.labels.insert(s.labels.end(), v.labels.begin(), v.labels.end());
    s.progress.insert(s.progress.end(), v.progress.begin(), v.progress.end());
  }
  return s;
}

Matrix with_bias(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

}  // namespace

std::map<double, double> phase_classification(std::span<const LabeledSequence> train,
                                              std::span<const LabeledSequence> test,
                                              std::span<const double> fractions) {
  require(!fractions.empty(), "phase_classification: no fractions given");
  const Stacked tr = stack(train);
  const Stacked te = stack(test);
  std::map<double, double> out;
  for (double fraction : fractions) {
    const std::vector<std::size_t> rows = stratified_subsample(tr.labels, fraction);
    Matrix x(static_cast<Index>(rows.size()), tr.features.cols());
    std::vector<int> y(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      x.row(static_cast<Index>(k)) = tr.features.row(static_cast<Index>(rows[k]));
      y[k] = tr.labels[rows[k]];
    }
    SoftmaxClassifier clf;
    clf.fit(x, y);
    const std::vector<int> predicted = clf.predict(te.features);
    std::size_t correct = 0;
    for (std::size_t k = 0; k < predicted.size(); ++k) {
      correct += predicted[k] == te.labels[k] ? 1U : 0U;
    }
    out[fraction] = static_cast<double>(correct) / static_cast<double>(predicted.size());
  }
  return out;
}

double r_squared(std::span<const double> target, std::span<const double> prediction) {
  require(target.size() == prediction.size() && !target.empty(), "r_squared: size mismatch");
  const double mean =
      std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(target.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    ss_res += (target[k] - prediction[k]) * (target[k] - prediction[k]);
    ss_tot += (target[k] - mean) * (target[k] - mean);
  }
  require(ss_tot > 0.0, "r_squared: target has zero variance");
  return 1.0 - ss_res / ss_tot;
}

double phase_progression(std::span<const LabeledSequence> train,
                         std::span<const LabeledSequence> test) {
  const Stacked tr = stack(train);
  require(tr.progress.size() == tr.labels.size(), "phase_progression: missing progress targets");
  const Matrix x = with_bias(tr.features);
  const Vector y = Eigen::Map<const Vector>(tr.progress.data(), static_cast<Index>(tr.progress.size()));
  const Vector coef = x.colPivHouseholderQr().solve(y);
  require(!test.empty(), "phase_progression: no test videos");
  double total = 0.0;
  for (const LabeledSequence& v : test) {
    require(static_cast<Index>(v.progress.size()) == v.embeddings.rows(),
            "phase_progression: missing progress targets");
    const Vector pred = with_bias(v.embeddings) * coef;
    total += r_squared(v.progress, std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())));
  }
  return total / static_cast<double>(test.size());
}

double average_precision_at_k(std::span<const LabeledSequence> queries,
                              std::span<const int> query_video,
                              std::span<const LabeledSequence> corpus,
                              std::span<const int> corpus_video, Index k) {
  require(k >= 1, "AP@K: K must be positive");
  require(queries.size() == query_video.size() && corpus.size() == corpus_video.size(),
          "AP@K: video tags must match sequence counts");
  const Stacked pool = stack(corpus);
  std::vector<int> pool_video;
  for (std::size_t v = 0; v < corpus.size(); ++v) {
    pool_video.insert(pool_video.end(), static_cast<std::size_t>(corpus[v].embeddings.rows()),
                      corpus_video[v]);
  }
  double total = 0.0;
  std::size_t count = 0;
  std::vector<std::pair<double, std::size_t>> candidates;
  for (std::size_t qv = 0; qv < queries.size(); ++qv) {
    const LabeledSequence& q = queries[qv];
    require(q.embeddings.cols() == pool.features.cols(), "AP@K: dimension mismatch");
    for (Index f = 0; f < q.embeddings.rows(); ++f) {
      candidates.clear();
      for (std::size_t r = 0; r < pool_video.size(); ++r) {
        if (pool_video[r] == query_video[qv]) {
          continue;
        }
        candidates.emplace_back((pool.features.row(static_cast<Index>(r)) - q.embeddings.row(f)).squaredNorm(), r);
      }
      require(static_cast<Index>(candidates.size()) >= k,
              "AP@K: K exceeds the number of cross-video corpus frames");
      const auto kk = static_cast<std::size_t>(k);
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(kk),
                        candidates.end());
      std::size_t hits = 0;
      for (std::size_t r = 0; r < kk; ++r) {
        hits += pool.labels[candidates[r].second] == q.labels[static_cast<std::size_t>(f)] ? 1U : 0U;
      }
      total += static_cast<double>(hits) / static_cast<double>(k);
      ++count;
    }
  }
  require(count > 0, "AP@K: no query frames");
  return total / static_cast<double>(count);
}

double mean_pairwise_kendall_tau(std::span<const LabeledSequence> videos) {
  require(videos.size() >= 2, "need at least two videos");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < videos.size(); ++a) {
    for (std::size_t b = 0; b < videos.size(); ++b) {
      if (a != b) {
        total += kendall_tau(videos[a].embeddings, videos[b].embeddings);
        ++pairs;
      }
    }
  }
  return total / static_cast<double>(pairs);
}

double mean_pairwise_dtw_accuracy(std::span<const LabeledSequence> videos) {
  require(videos.size() >= 2, "need at least two videos");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < videos.size(); ++a) {
    for (std::size_t b = 0; b < videos.size(); ++b) {
      if (a != b) {
        total += dtw_accuracy(videos[a].embeddings, videos[a].labels, videos[b].embeddings,
                              videos[b].labels);
        ++pairs;
      }
    }
  }
  return total / static_cast<double>(pairs);
}

void EvalReport::validate() const {
  auto in = [](double v, double lo, double hi) { return std::isfinite(v) && v >= lo && v <= hi; };
  require(in(kendall_tau, -1.0, 1.0), "kendall_tau out of range");
  require(in(dtw_accuracy, 0.0, 1.0), "dtw_accuracy out of range");
  require(std::isfinite(phase_progression) && phase_progression <= 1.0,
          "phase_progression out of range");
  require(!phase_classification.empty() && !ap_at_k.empty(), "metric maps must be nonempty");
  for (const auto& [fraction, acc] : phase_classification) {
    require(in(acc, 0.0, 1.0), "phase classification accuracy out of range");
  }
  for (const auto& [k, ap] : ap_at_k) {
    require(in(ap, 0.0, 1.0), "AP@K out of range");
  }
}

EvalReport evaluate(std::span<const LabeledSequence> train, std::span<const LabeledSequence> test,
                    std::span<const double> fractions, std::span<const Index> ks) {
  require(!ks.empty(), "evaluate: no K values");
  EvalReport report;
  report.kendall_tau = mean_pairwise_kendall_tau(test);
  report.dtw_accuracy = mean_pairwise_dtw_accuracy(test);
  report.phase_classification = phase_classification(train, test, fractions);
  report.phase_progression = phase_progression(train, test);
  std::vector<int> ids(test.size());
  std::iota(ids.begin(), ids.end(), 0);
  for (Index k : ks) {
    report.ap_at_k[k] = average_precision_at_k(test, ids, test, ids, k);
  }
  report.validate();
  return report;
}

namespace {

std::string fraction_key(double fraction) {
  std::ostringstream os;
  os << fraction;
  return os.str();
}

}  // namespace

void write_report_json(std::ostream& out, const EvalReport& report) {
  nlohmann::json classification = nlohmann::json::object();
  for (const auto& [fraction, acc] : report.phase_classification) {
    classification[fraction_key(fraction)] = acc;
  }
  nlohmann::json ap = nlohmann::json::object();
  for (const auto& [k, value] : report.ap_at_k) {
    ap[std::to_string(k)] = value;
  }
  const nlohmann::json j{{"kendall_tau", report.kendall_tau},
                         {"phase_progression", report.phase_progression},
                         {"ap_at_k", ap},
                         {"phase_classification", classification},
                         {"dtw_accuracy", report.dtw_accuracy}};
  out << j.dump(2) << '\n';
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "tau,progress";
  for (const auto& [k, value] : report.ap_at_k) {
    out << ",AP@" << k;
  }
  for (const auto& [fraction, acc] : report.phase_classification) {
    out << ",Classification@" << fraction_key(fraction * 100.0) << '%';
  }
  out << ",DTW A\n";
  out << std::setprecision(6) << report.kendall_tau << ',' << report.phase_progression;
  for (const auto& [k, value] : report.ap_at_k) {
    out << ',' << value;
  }
  for (const auto& [fraction, acc] : report.phase_classification) {
    out << ',' << acc;
  }
  out << ',' << report.dtw_accuracy << '\n';
}

}  // namespace lrprop::metrics

#include "helpers.hpp"
#include "lrprop/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

using namespace lrprop;
using namespace lrprop::metrics;
using lrprop::test::random_normal;

namespace {

Matrix reversed(const Matrix& m) { return m.colwise().reverse(); }

LabeledSequence sequence(const Matrix& e, std::vector<int> labels) {
  LabeledSequence s;
  s.embeddings = e;
  s.labels = std::move(labels);
  s.progress.resize(s.labels.size());
  for (std::size_t k = 0; k < s.progress.size(); ++k) {
    s.progress[k] = static_cast<double>(k) / static_cast<double>(s.progress.size() - 1);
  }
  return s;
}

}  // namespace

TEST_CASE("kendall tau") {
  const Matrix e = random_normal(10, 3, 1);
  CHECK(kendall_tau(e, e) == 1.0);
  CHECK(kendall_tau(e, reversed(e)) == -1.0);
  Matrix swapped(3, 3);
  const Matrix a = random_normal(3, 3, 2);
  swapped.row(0) = a.row(0);
  swapped.row(1) = a.row(2);
  swapped.row(2) = a.row(1);
  CHECK(kendall_tau(a, swapped) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(kendall_tau(random_normal(1, 3, 3), e), InvalidInput);
  // Frames collapsing onto one neighbour count as discordant.
  CHECK(kendall_tau(e, Matrix::Zero(4, 3)) == -1.0);
}

TEST_CASE("nearest neighbour ties take the smallest index") {
  Matrix corpus(3, 1);
  corpus << 1.0, -1.0, 1.0;
  RowVector q(1);
  q << 0.0;
  CHECK(nearest_neighbor(q, corpus) == 0);
}

TEST_CASE("dtw accuracy") {
  const Matrix e = random_normal(12, 3, 4);
  std::vector<int> labels(12);
  for (int k = 0; k < 12; ++k) {
    labels[static_cast<std::size_t>(k)] = k / 3;
  }
  CHECK(dtw_accuracy(e, labels, e, labels) == 1.0);
  std::vector<int> other(12);
  for (int k = 0; k < 12; ++k) {
    other[static_cast<std::size_t>(k)] = 100 + k;
  }
  CHECK(dtw_accuracy(e, labels, random_normal(12, 3, 5), other) == 0.0);
  CHECK_THROWS_AS(dtw_accuracy(e, std::vector<int>(3, 0), e, labels), InvalidInput);
}

TEST_CASE("phase classification") {
  std::vector<LabeledSequence> train;
  std::vector<LabeledSequence> test;
  for (std::uint64_t v = 0; v < 4; ++v) {
    Matrix e = random_normal(20, 2, 10 + v);
    std::vector<int> labels(20);
    for (Index k = 0; k < 20; ++k) {
      labels[static_cast<std::size_t>(k)] = k < 10 ? 0 : 1;
      e(k, 0) = std::abs(e(k, 0)) + 3.0;
      if (k < 10) {
        e(k, 0) = -e(k, 0);
      }
    }
    (v < 3 ? train : test).push_back(sequence(e, labels));
  }
  const std::vector<double> fractions{0.1, 0.5, 1.0};
  const auto acc = phase_classification(train, test, fractions);
  CHECK(acc.size() == 3);
  for (const auto& [f, a] : acc) {
    CHECK(a == 1.0);
  }

  SUBCASE("shuffled labels are at chance") {
    std::mt19937_64 rng(3);
    std::vector<LabeledSequence> tr;
    std::vector<LabeledSequence> te;
    for (std::uint64_t v = 0; v < 8; ++v) {
      std::vector<int> labels(80);
      for (std::size_t k = 0; k < 80; ++k) {
        labels[k] = static_cast<int>(k % 4);
      }
      std::shuffle(labels.begin(), labels.end(), rng);
      (v < 6 ? tr : te).push_back(sequence(random_normal(80, 4, 50 + v), labels));
    }
    const std::vector<double> all{1.0};
    CHECK(std::abs(phase_classification(tr, te, all).at(1.0) - 0.25) <= 0.1);
  }
  SUBCASE("stratified subsample") {
    const std::vector<int> labels{0, 0, 0, 0, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2};
    const auto idx = stratified_subsample(labels, 0.5);
    CHECK(idx.size() == 2 + 1 + 5);
    CHECK(stratified_subsample(labels, 0.01).size() == 3);
    CHECK(stratified_subsample(labels, 0.5) == idx);
  }
}

TEST_CASE("phase progression") {
  SUBCASE("exactly linear targets") {
    std::vector<LabeledSequence> train;
    std::vector<LabeledSequence> test;
    for (std::uint64_t v = 0; v < 3; ++v) {
      LabeledSequence s = sequence(random_normal(15, 3, 70 + v), std::vector<int>(15, 0));
      for (Index k = 0; k < 15; ++k) {
        s.progress[static_cast<std::size_t>(k)] =
            0.3 + 0.2 * s.embeddings(k, 0) - 0.7 * s.embeddings(k, 2);
      }
      (v < 2 ? train : test).push_back(s);
    }
    CHECK(phase_progression(train, test) == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("zero-variance embeddings") {
    std::vector<LabeledSequence> train{sequence(Matrix::Ones(10, 2), std::vector<int>(10, 0))};
    std::vector<LabeledSequence> test{sequence(Matrix::Ones(8, 2), std::vector<int>(8, 0))};
    CHECK(phase_progression(train, test) <= 1e-12);
  }
  SUBCASE("closed-form least squares") {
    // Two points per dimension: one-dimensional embeddings at x = 0 and x = 2.
    LabeledSequence tr = sequence(Matrix(2, 1), std::vector<int>(2, 0));
    tr.embeddings << 0.0, 2.0;
    tr.progress = {0.1, 0.9};
    LabeledSequence te = sequence(Matrix(4, 1), std::vector<int>(4, 0));
    te.embeddings << 0.5, 1.0, 1.5, 3.0;
    te.progress = {0.2, 0.6, 0.6, 1.0};
    // Normal equations for [1 x] give intercept 0.1 and slope 0.4.
    Matrix x(2, 2);
    x << 1, 0, 1, 2;
    Vector y(2);
    y << 0.1, 0.9;
    const Vector beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    std::vector<double> pred;
    for (Index k = 0; k < 4; ++k) {
      pred.push_back(beta(0) + beta(1) * te.embeddings(k, 0));
    }
    const double expected = r_squared(te.progress, pred);
    std::vector<LabeledSequence> train{tr};
    std::vector<LabeledSequence> test{te};
    CHECK(phase_progression(train, test) == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK_THROWS_AS(r_squared(std::vector<double>{1, 1}, std::vector<double>{1, 2}), InvalidInput);
}

TEST_CASE("average precision at k") {
  SUBCASE("single label") {
    std::vector<LabeledSequence> seqs{sequence(random_normal(5, 2, 1), std::vector<int>(5, 2)),
                                      sequence(random_normal(6, 2, 2), std::vector<int>(6, 2))};
    const std::vector<int> ids{0, 1};
    for (Index k : {1, 3, 5}) {
      CHECK(average_precision_at_k(seqs, ids, seqs, ids, k) == 1.0);
    }
  }
  SUBCASE("k equals the corpus with balanced labels") {
    std::vector<LabeledSequence> q{sequence(random_normal(4, 2, 3), {0, 1, 0, 1})};
    std::vector<LabeledSequence> c{sequence(random_normal(6, 2, 4), {0, 0, 0, 1, 1, 1})};
    const std::vector<int> qid{0};
    const std::vector<int> cid{1};
    CHECK(average_precision_at_k(q, qid, c, cid, 6) == doctest::Approx(0.5));
  }
  SUBCASE("brute force on a 6-frame corpus") {
    const Matrix qe = random_normal(3, 2, 5);
    const Matrix ce = random_normal(6, 2, 6);
    const std::vector<int> ql{0, 1, 1};
    const std::vector<int> cl{1, 0, 1, 0, 0, 1};
    std::vector<LabeledSequence> q{sequence(qe, ql)};
    std::vector<LabeledSequence> c{sequence(ce, cl)};
    const std::vector<int> qid{0};
    const std::vector<int> cid{1};
    const Index k = 3;
    double total = 0.0;
    for (Index i = 0; i < 3; ++i) {
      std::vector<Index> order(6);
      std::iota(order.begin(), order.end(), Index{0});
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return (ce.row(a) - qe.row(i)).norm() < (ce.row(b) - qe.row(i)).norm();
      });
      int hits = 0;
      for (Index r = 0; r < k; ++r) {
        hits += cl[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] ==
                        ql[static_cast<std::size_t>(i)]
                    ? 1
                    : 0;
      }
      total += static_cast<double>(hits) / static_cast<double>(k);
    }
    CHECK(average_precision_at_k(q, qid, c, cid, k) == doctest::Approx(total / 3.0));
  }
  SUBCASE("same-video frames are excluded") {
    std::vector<LabeledSequence> seqs{sequence(random_normal(4, 2, 7), {0, 0, 0, 0}),
                                      sequence(random_normal(4, 2, 8), {1, 1, 1, 1})};
    const std::vector<int> ids{0, 1};
    CHECK(average_precision_at_k(seqs, ids, seqs, ids, 2) == 0.0);
  }
}

TEST_CASE("evaluate and reports") {
  std::vector<LabeledSequence> train;
  std::vector<LabeledSequence> test;
  for (std::uint64_t v = 0; v < 6; ++v) {
    std::vector<int> labels(20);
    for (std::size_t k = 0; k < 20; ++k) {
      labels[k] = static_cast<int>(k / 5);
    }
    (v < 3 ? train : test).push_back(sequence(random_normal(20, 3, 90 + v), labels));
  }
  const std::vector<double> fractions{0.5, 1.0};
  const std::vector<Index> ks{2, 4};
  const EvalReport r = evaluate(train, test, fractions, ks);
  r.validate();
  CHECK(r.phase_classification.size() == 2);
  CHECK(r.ap_at_k.size() == 2);
  CHECK(r.kendall_tau == doctest::Approx(mean_pairwise_kendall_tau(test)));
  CHECK(r.dtw_accuracy == doctest::Approx(mean_pairwise_dtw_accuracy(test)));

  std::ostringstream csv;
  write_report_csv(csv, r);
  CHECK(csv.str().rfind("tau,progress,AP@2,AP@4,Classification@50%,Classification@100%,DTW A\n",
                        0) == 0);
  std::ostringstream json;
  write_report_json(json, r);
  CHECK(json.str().find("\"dtw_accuracy\"") != std::string::npos);

  EvalReport bad = r;
  bad.kendall_tau = 1.5;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

#include "helpers.hpp"
#include "lrprop/oracles.hpp"
#include "lrprop/priors_losses.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

using namespace lrprop;
using namespace lrprop::losses;
using lrprop::test::random_normal;
using lrprop::test::unit_rows;

namespace {

std::vector<Index> sorted_indices(Index count, Index max, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Index> all(static_cast<std::size_t>(max));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<Index> out;
  std::sample(all.begin(), all.end(), std::back_inserter(out), count, rng);
  return out;
}

}  // namespace

TEST_CASE("similarity distribution") {
  SUBCASE("identical embeddings give uniform rows") {
    const Matrix z = Matrix::Ones(5, 3);
    const Matrix q = similarity_distribution(z, z, 0.1);
    CHECK((q.array() - 0.2).abs().maxCoeff() < 1e-15);
  }
  SUBCASE("hand softmax") {
    Matrix za(2, 2);
    za << 1, 0, 0, 1;
    Matrix zb(2, 2);
    zb << 1, 0, 0, 1;
    const Matrix q = similarity_distribution(za, zb, 0.1);
    CHECK(q(0, 0) == doctest::Approx(0.9999546).epsilon(1e-7));
    CHECK(q(0, 1) == doctest::Approx(4.54e-5).epsilon(1e-3));
  }
  SUBCASE("rows sum to one, rows index clip B") {
    const Matrix za = random_normal(4, 3, 1);
    const Matrix zb = random_normal(6, 3, 2);
    const Matrix q = similarity_distribution(za, zb, 0.1);
    REQUIRE(q.rows() == 6);
    REQUIRE(q.cols() == 4);
    CHECK(row_stochastic_stats(q).max_row_error < 1e-12);
    CHECK(row_stochastic_stats(q).min_entry > 0.0);
  }
  SUBCASE("scale invariance of cosine") {
    const Matrix za = random_normal(4, 3, 3);
    const Matrix zb = random_normal(4, 3, 4);
    const Matrix q1 = similarity_distribution(za, zb, 0.5);
    const Matrix q2 = similarity_distribution(3.0 * za, 0.2 * zb, 0.5);
    CHECK((q1 - q2).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("errors") {
    Matrix z = random_normal(3, 2, 5);
    z.row(1).setZero();
    CHECK_THROWS_AS(similarity_distribution(z, random_normal(3, 2, 6), 0.1), InvalidInput);
    CHECK_THROWS_AS(similarity_distribution(random_normal(3, 2, 6), random_normal(3, 3, 7), 0.1),
                    InvalidInput);
    CHECK_THROWS_AS(similarity_distribution(random_normal(3, 2, 6), random_normal(3, 2, 7), 0.0),
                    InvalidInput);
  }
}

TEST_CASE("same-video prior") {
  const std::vector<Index> s{0, 1, 2};
  const Matrix p = same_video_prior(s, s, 10.0);
  CHECK(p(1, 0) == doctest::Approx(0.32773).epsilon(1e-4));
  CHECK(p(1, 1) == doctest::Approx(0.34454).epsilon(1e-4));
  CHECK(p(1, 2) == doctest::Approx(0.32773).epsilon(1e-4));
  CHECK(row_stochastic_stats(p).max_row_error < 1e-12);

  const std::vector<Index> sa = sorted_indices(8, 40, 1);
  for (double sigma_sq : {0.5, 10.0, 1000.0}) {
    const Matrix q = same_video_prior(sa, sa, sigma_sq);
    for (Index j = 0; j < q.rows(); ++j) {
      Index arg = 0;
      q.row(j).maxCoeff(&arg);
      CHECK(arg == j);
    }
    CHECK(row_stochastic_stats(q).max_row_error < 1e-12);
  }
  const std::vector<Index> sb = sorted_indices(6, 40, 2);
  const Matrix r = same_video_prior(sa, sb, 10.0);
  CHECK(r.rows() == 6);
  CHECK(r.cols() == 8);
  CHECK_THROWS_AS(same_video_prior(s, s, 0.0), InvalidInput);
}

TEST_CASE("propagation prior") {
  const std::vector<Index> sb{3, 7, 12, 20};
  SUBCASE("identity alignment equals the same-video prior bit for bit") {
    AlignmentMatrix a = AlignmentMatrix::Zero(4, 4);
    for (Index k = 0; k < 4; ++k) {
      a(k, k) = 1;
    }
    const Matrix p = propagation_prior(sb, a, 10.0);
    const Matrix q = same_video_prior(sb, sb, 10.0);
    CHECK((p.array() == q.array()).all());
  }
  SUBCASE("smallest row wins ties") {
    AlignmentMatrix a = AlignmentMatrix::Zero(5, 3);
    a(0, 0) = 1;
    a(1, 1) = 1;
    a(2, 2) = 1;
    a(3, 2) = 1;
    a(4, 2) = 1;
    const std::vector<Index> rows = propagated_rows(a);
    CHECK(rows == std::vector<Index>{0, 1, 2});
    AlignmentMatrix b = AlignmentMatrix::Zero(5, 2);
    b(0, 0) = 1;
    b(2, 1) = 1;
    b(4, 1) = 1;
    CHECK(propagated_rows(b)[1] == 2);
  }
  SUBCASE("empty column rejected") {
    AlignmentMatrix a = AlignmentMatrix::Zero(3, 3);
    a(0, 0) = 1;
    a(1, 1) = 1;
    CHECK_THROWS_AS(propagation_prior(std::vector<Index>{1, 2, 3}, a, 10.0), InvalidInput);
  }
  SUBCASE("row maxima sit at the nearest propagated index") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Matrix za = unit_rows(random_normal(6, 3, 20 + seed));
      const Matrix zb = unit_rows(random_normal(6, 3, 40 + seed));
      const std::vector<Index> sbb = sorted_indices(6, 50, 60 + seed);
      const AlignmentMatrix a = current_alignment(za, zb);
      const Matrix p = propagation_prior(sbb, a, 10.0);
      const std::vector<Index> k = propagated_rows(a);
      CHECK(row_stochastic_stats(p).max_row_error < 1e-12);
      for (Index j = 0; j < 6; ++j) {
        double best = 1e300;
        for (Index i = 0; i < 6; ++i) {
          best = std::min(best, std::abs(static_cast<double>(
                                    sbb[static_cast<std::size_t>(j)] -
                                    sbb[static_cast<std::size_t>(k[static_cast<std::size_t>(i)])])));
        }
        const double at_max = std::abs(static_cast<double>(
            sbb[static_cast<std::size_t>(j)] -
            sbb[static_cast<std::size_t>(k[static_cast<std::size_t>([&] {
              Index arg = 0;
              p.row(j).maxCoeff(&arg);
              return arg;
            }())])]));
        CHECK(at_max == best);
      }
    }
  }
}

TEST_CASE("kl divergence") {
  const std::vector<double> p{0.2, 0.3, 0.5};
  CHECK(kl_row(p, p) == 0.0);
  CHECK(kl_row(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(kl_row(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}),
                  NumericalError);
  CHECK_THROWS_AS(kl_row(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), InvalidInput);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(6);
    std::vector<double> b(6);
    for (std::size_t k = 0; k < 6; ++k) {
      a[k] = u(rng);
      b[k] = u(rng) + 1e-3;
    }
    const double sa = std::accumulate(a.begin(), a.end(), 0.0);
    const double sb = std::accumulate(b.begin(), b.end(), 0.0);
    for (std::size_t k = 0; k < 6; ++k) {
      a[k] /= sa;
      b[k] /= sb;
    }
    CHECK(kl_row(a, b) >= -1e-12);
  }
}

TEST_CASE("loss_same and loss_prop") {
  const Matrix za = unit_rows(random_normal(5, 4, 1));
  const Matrix zb = unit_rows(random_normal(5, 4, 2));
  const Matrix q = similarity_distribution(za, zb, 0.1);
  CHECK(loss_same(q, q) == 0.0);
  CHECK(loss_prop(q, q) == 0.0);
  const Matrix uniform = Matrix::Constant(5, 5, 0.2);
  double direct = 0.0;
  for (Index j = 0; j < 5; ++j) {
    for (Index i = 0; i < 5; ++i) {
      direct += 0.2 * std::log(0.2 / q(j, i));
    }
  }
  direct /= 5.0;
  CHECK(loss_same(uniform, q) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(loss_prop(uniform, q) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(loss_same(uniform, q) >= 0.0);
  CHECK_THROWS_AS(loss_same(Matrix::Constant(4, 5, 0.2), q), InvalidInput);
}

TEST_CASE("kl similarity gradient") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix za = random_normal(4, 3, 100 + seed);
    const Matrix zb = random_normal(5, 3, 200 + seed);
    const std::vector<Index> sa = sorted_indices(4, 20, seed);
    const std::vector<Index> sb = sorted_indices(5, 20, seed + 1);
    const Matrix prior = same_video_prior(sa, sb, 10.0);
    const double tau = 0.3;
    const Matrix q = similarity_distribution(za, zb, tau);
    const EmbeddingPairGradient g = kl_similarity_gradient(za, zb, prior, q, tau);
    const Vector fa = oracles::finite_difference(
        [&](const Vector& x) {
          return mean_row_kl(prior, similarity_distribution(oracles::unflatten(x, 4, 3), zb, tau));
        },
        oracles::flatten(za), 1e-6);
    const Vector fb = oracles::finite_difference(
        [&](const Vector& x) {
          return mean_row_kl(prior, similarity_distribution(za, oracles::unflatten(x, 5, 3), tau));
        },
        oracles::flatten(zb), 1e-6);
    CHECK(oracles::relative_error(oracles::flatten(g.grad_a), fa) < 1e-5);
    CHECK(oracles::relative_error(oracles::flatten(g.grad_b), fb) < 1e-5);
  }
}

TEST_CASE("pair loss") {
  const Matrix za = unit_rows(random_normal(6, 4, 11));
  const Matrix zb = unit_rows(random_normal(6, 4, 12));
  const std::vector<Index> sa = sorted_indices(6, 40, 13);
  const std::vector<Index> sb = sorted_indices(6, 40, 14);
  HyperParams hp;

  SUBCASE("same video") {
    const PairLoss r = pair_loss(sa, sb, za, zb, hp, true);
    CHECK(r.report.pair_kind == PairKind::same_video);
    CHECK(r.report.combined == r.report.loss_same);
    CHECK(r.report.loss_prop == 0.0);
    CHECK(r.report.loss_sdtw == 0.0);
    CHECK(r.alignment.size() == 0);
  }
  SUBCASE("cross video with lambda1 = 0") {
    hp.lambda1 = 0.0;
    hp.sdtw_length_normalize = false;
    const PairLoss r = pair_loss(sa, sb, za, zb, hp, false);
    const double sdtw =
        softdtw::softdtw_cost(alignment::distance_matrix(zb, za), hp.gamma).cost;
    CHECK(r.report.loss_sdtw == doctest::Approx(sdtw).epsilon(1e-14));
    CHECK(r.report.combined == doctest::Approx(hp.lambda2 * sdtw).epsilon(1e-14));
  }
  SUBCASE("length normalization divides by the clip length") {
    hp.sdtw_length_normalize = false;
    const double raw = pair_loss(sa, sb, za, zb, hp, false).report.loss_sdtw;
    hp.sdtw_length_normalize = true;
    CHECK(pair_loss(sa, sb, za, zb, hp, false).report.loss_sdtw ==
          doctest::Approx(raw / 6.0).epsilon(1e-14));
  }
  SUBCASE("combine") {
    CHECK(combine(PairKind::same_video, 1.5, 2.0, 3.0, hp) == 1.5);
    CHECK(combine(PairKind::cross_video, 1.5, 2.0, 3.0, hp) ==
          doctest::Approx(hp.lambda1 * 2.0 + hp.lambda2 * 3.0));
  }
  SUBCASE("cross-video gradient with frozen alignment") {
    for (bool normalize : {false, true}) {
      hp.sdtw_length_normalize = normalize;
      hp.lambda1 = 0.5;
      const Matrix ya = random_normal(6, 4, 21);
      const Matrix yb = random_normal(6, 4, 22);
      const AlignmentMatrix a = current_alignment(ya, yb);
      const PairLoss r = cross_video_loss(sb, ya, yb, a, hp);
      const Vector fa = oracles::finite_difference(
          [&](const Vector& x) {
            return cross_video_loss(sb, oracles::unflatten(x, 6, 4), yb, a, hp).report.combined;
          },
          oracles::flatten(ya), 1e-6);
      const Vector fb = oracles::finite_difference(
          [&](const Vector& x) {
            return cross_video_loss(sb, ya, oracles::unflatten(x, 6, 4), a, hp).report.combined;
          },
          oracles::flatten(yb), 1e-6);
      CHECK(oracles::relative_error(oracles::flatten(r.grad_a), fa) < 1e-4);
      CHECK(oracles::relative_error(oracles::flatten(r.grad_b), fb) < 1e-4);
    }
  }
  SUBCASE("invalid hyperparameters") {
    hp.tau = -1.0;
    CHECK_THROWS_AS(pair_loss(sa, sb, za, zb, hp, true), InvalidInput);
  }
}

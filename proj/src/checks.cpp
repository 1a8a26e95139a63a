#include "lrprop/checks.hpp"

#include "lrprop/alignment.hpp"
#include "lrprop/encoder.hpp"
#include "lrprop/oracles.hpp"
#include "lrprop/priors_losses.hpp"
#include "lrprop/softdtw.hpp"
#include "lrprop/trainer.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

namespace lrprop::checks {

namespace {

using alignment::DistanceMatrix;
using Rng = std::mt19937_64;

Matrix uniform_matrix(Index rows, Index cols, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index k = 0; k < m.size(); ++k) {
    m.data()[k] = u(rng);
  }
  return m;
}

Matrix normal_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index k = 0; k < m.size(); ++k) {
    m.data()[k] = n(rng);
  }
  return m;
}

std::vector<Index> sorted_indices(Index count, Index range, Rng& rng) {
  std::vector<Index> all(static_cast<std::size_t>(range));
  std::iota(all.begin(), all.end(), 0);
  std::vector<Index> out;
  std::sample(all.begin(), all.end(), std::back_inserter(out), count, rng);
  return out;
}

struct Tracker {
  CheckResult result;
  Tracker(std::string name, std::string criterion, double tolerance) {
    result.name = std::move(name);
    result.criterion = std::move(criterion);
    result.tolerance = tolerance;
    result.passed = true;
  }
  void record(double error) {
    ++result.cases;
    if (!(error <= result.tolerance)) {
      result.passed = false;
    }
    if (std::isnan(error) || error > result.worst_error) {
      result.worst_error = error;
    }
  }
};

double sign_for(Fault injected, Fault active) { return injected == active ? -1.0 : 1.0; }

CheckResult check_dtw_bruteforce(Rng& rng) {
  Tracker t("dtw_vs_enumeration", "|dtw_cost - min over enumerated paths|", 0.0);
  std::uniform_int_distribution<Index> size(1, 5);
  for (int c = 0; c < 200; ++c) {
    const DistanceMatrix d = uniform_matrix(size(rng), size(rng), rng);
    t.record(std::abs(alignment::dtw_cost(d) - oracles::brute_force_dtw(d)));
  }
  return t.result;
}

CheckResult check_dtw_path(Rng& rng) {
  Tracker t("dtw_path_reproduces_cost", "|<A(path),D> - dtw_cost|", 1e-12);
  std::uniform_int_distribution<Index> size(1, 9);
  for (int c = 0; c < 100; ++c) {
    const DistanceMatrix d = uniform_matrix(size(rng), size(rng), rng);
    const alignment::AlignmentPath path = alignment::dtw_path(d);
    alignment::validate_path(path, d.rows(), d.cols());
    t.record(std::abs(alignment::path_cost(path, d) - alignment::dtw_cost(d)));
  }
  return t.result;
}

CheckResult check_softdtw_cost(Rng& rng) {
  Tracker t("softdtw_vs_enumeration", "|softdtw_cost - (-g log sum exp(-cost/g))|", 1e-8);
  std::uniform_int_distribution<Index> size(1, 4);
  for (int c = 0; c < 100; ++c) {
    const DistanceMatrix d = uniform_matrix(size(rng), size(rng), rng);
    for (double gamma : {0.05, 0.5, 2.0}) {
      t.record(std::abs(softdtw::softdtw_cost(d, gamma).cost -
                        oracles::brute_force_softdtw(d, gamma)));
    }
  }
  return t.result;
}

CheckResult check_softdtw_gibbs(Rng& rng, Fault fault) {
  Tracker t("softdtw_grad_vs_gibbs", "max |grad_d - E_gibbs[A]|", 1e-8);
  std::uniform_int_distribution<Index> size(1, 4);
  const double s = sign_for(Fault::flip_softdtw_gradient_sign, fault);
  for (int c = 0; c < 100; ++c) {
    const DistanceMatrix d = uniform_matrix(size(rng), size(rng), rng);
    for (double gamma : {0.05, 0.3, 2.0}) {
      const Matrix grad = s * softdtw::softdtw_cost(d, gamma).tables.grad_d;
      t.record((grad - oracles::gibbs_expectation(d, gamma)).cwiseAbs().maxCoeff());
    }
  }
  return t.result;
}

CheckResult check_softdtw_fd(Rng& rng, Fault fault) {
  Tracker t("softdtw_grad_vs_finite_differences", "relative error, h=1e-5", 1e-5);
  const double s = sign_for(Fault::flip_softdtw_gradient_sign, fault);
  std::uniform_real_distribution<double> gamma_dist(0.1, 1.0);
  for (int seed = 0; seed < 20; ++seed) {
    const DistanceMatrix d = uniform_matrix(4, 4, rng);
    const double gamma = gamma_dist(rng);
    const Matrix analytic = s * softdtw::softdtw_cost(d, gamma).tables.grad_d;
    const Vector numeric = oracles::finite_difference(
        [&](const Vector& x) {
          return softdtw::softdtw_cost(oracles::unflatten(x, 4, 4), gamma).cost;
        },
        oracles::flatten(d), 1e-5);
    t.record(oracles::relative_error(oracles::flatten(analytic), numeric));
  }
  return t.result;
}

CheckResult check_softdtw_embeddings(Rng& rng, Fault fault) {
  Tracker t("softdtw_embedding_grad_vs_finite_differences", "relative error, h=1e-6", 1e-4);
  const double s = sign_for(Fault::flip_softdtw_gradient_sign, fault);
  std::uniform_int_distribution<Index> len(2, 5);
  for (int seed = 0; seed < 20; ++seed) {
    const Index n = len(rng);
    const Index m = len(rng);
    const Matrix z1 = normal_matrix(n, 3, rng);
    const Matrix z2 = normal_matrix(m, 3, rng);
    const double gamma = 0.5;
    const auto res = softdtw::softdtw_cost(alignment::distance_matrix(z1, z2), gamma);
    const auto g = softdtw::softdtw_grad_wrt_embeddings(z1, z2, res.tables.grad_d);
    Vector x(z1.size() + z2.size());
    x << oracles::flatten(z1), oracles::flatten(z2);
    Vector analytic(x.size());
    analytic << s * oracles::flatten(g.grad_z1), s * oracles::flatten(g.grad_z2);
    const Vector numeric = oracles::finite_difference(
        [&](const Vector& v) {
          const Matrix a = oracles::unflatten(v.head(z1.size()), n, 3);
          const Matrix b = oracles::unflatten(v.tail(z2.size()), m, 3);
          return softdtw::softdtw_cost(alignment::distance_matrix(a, b), gamma).cost;
        },
        x, 1e-6);
    t.record(oracles::relative_error(analytic, numeric));
  }
  return t.result;
}

CheckResult check_gamma_limit(Rng& rng) {
  Tracker t("softdtw_gamma_limit",
            "max(dtw - softdtw - g log #paths, softdtw - dtw) and |softdtw - dtw| at g=1e-6 "
            "minus 1e-4",
            0.0);
  std::uniform_int_distribution<Index> size(1, 5);
  for (int c = 0; c < 100; ++c) {
    const DistanceMatrix d = uniform_matrix(size(rng), size(rng), rng);
    const double hard = alignment::dtw_cost(d);
    for (double gamma : {0.01, 0.1, 1.0}) {
      const double soft = softdtw::softdtw_cost(d, gamma).cost;
      const double bound =
          gamma * std::log(static_cast<double>(alignment::count_paths(d.rows(), d.cols())));
      // Tiny slack for rounding in the log-sum-exp.
      t.record(std::max(hard - soft - bound, soft - hard) - 1e-12);
    }
  }
  for (int c = 0; c < 50; ++c) {
    const DistanceMatrix d = uniform_matrix(4, 4, rng);
    t.record(std::abs(softdtw::softdtw_cost(d, 1e-6).cost - alignment::dtw_cost(d)) - 1e-4);
  }
  return t.result;
}

CheckResult check_distributions(Rng& rng) {
  Tracker t("distribution_soundness",
            "row-sum error (<=1e-12), -KL (<=1e-12), identity/tie-break mismatches", 1e-12);
  std::uniform_int_distribution<Index> len(2, 12);
  std::uniform_real_distribution<double> tau_dist(0.05, 1.0);
  for (int c = 0; c < 50; ++c) {
    const Index n = len(rng);
    const std::vector<Index> sa = sorted_indices(n, 3 * n, rng);
    const std::vector<Index> sb = sorted_indices(n, 3 * n, rng);
    const Matrix za = normal_matrix(n, 4, rng);
    const Matrix zb = normal_matrix(n, 4, rng);
    const auto same = losses::same_video_prior(sa, sb, 10.0);
    const auto q = losses::similarity_distribution(za, zb, tau_dist(rng));
    const auto a = losses::current_alignment(za, zb);
    const auto prop = losses::propagation_prior(sb, a, 10.0);
    for (const Matrix* p : {&same, &q, &prop}) {
      const auto stats = losses::row_stochastic_stats(*p);
      t.record(stats.max_row_error);
      t.record(stats.min_entry >= 0.0 ? 0.0 : 1.0);
    }
    t.record(-losses::loss_same(same, q));
    t.record(-losses::loss_prop(prop, q));

    alignment::AlignmentPath diag;
    for (Index k = 0; k < n; ++k) {
      diag.steps.push_back({k, k});
    }
    const auto identity = losses::propagation_prior(sb, alignment::alignment_matrix(diag, n, n), 10.0);
    const auto reference = losses::same_video_prior(sb, sb, 10.0);
    t.record((identity.array() != reference.array()).count() == 0 ? 0.0 : 1.0);
  }
  // Column 0 aligned to rows 2 and 4 only: propagation must pick row 2.
  losses::AlignmentMatrix tie = losses::AlignmentMatrix::Zero(5, 2);
  tie(2, 0) = 1;
  tie(4, 0) = 1;
  tie(0, 1) = 1;
  t.record(losses::propagated_rows(tie)[0] == 2 ? 0.0 : 1.0);
  return t.result;
}

losses::HyperParams check_hyperparams() {
  losses::HyperParams hp;
  hp.lambda1 = 1.0;
  hp.lambda2 = 0.5;
  hp.gamma = 0.5;
  hp.tau = 0.5;
  hp.sigma_sq = 4.0;
  return hp;
}

CheckResult check_pair_loss(Rng& rng, Fault fault) {
  Tracker t("pair_loss_grad_vs_finite_differences",
            "relative error over both embeddings, alignment frozen, h=1e-6", 1e-4);
  const double s_sim = sign_for(Fault::flip_similarity_gradient_sign, fault);
  const double s_sdtw = sign_for(Fault::flip_softdtw_gradient_sign, fault);
  const losses::HyperParams hp = check_hyperparams();
  const Index n = 6;
  const Index dim = 4;
  for (int seed = 0; seed < 20; ++seed) {
    const bool same = seed % 2 == 0;
    const Matrix za = normal_matrix(n, dim, rng);
    const Matrix zb = normal_matrix(n, dim, rng);
    const std::vector<Index> sa = sorted_indices(n, 20, rng);
    const std::vector<Index> sb = sorted_indices(n, 20, rng);
    const losses::AlignmentMatrix frozen = losses::current_alignment(za, zb);
    auto loss_of = [&](const Matrix& a, const Matrix& b) {
      return same ? losses::pair_loss(sa, sb, a, b, hp, true)
                  : losses::cross_video_loss(sb, a, b, frozen, hp);
    };
    Vector analytic(za.size() + zb.size());
    if (fault == Fault::none) {
      const losses::PairLoss base = loss_of(za, zb);
      analytic << oracles::flatten(base.grad_a), oracles::flatten(base.grad_b);
    } else {
      // Rebuild the gradient from its parts so a fault can flip one of them.
      Matrix ga = Matrix::Zero(n, dim);
      Matrix gb = Matrix::Zero(n, dim);
      const auto prior = same ? losses::same_video_prior(sa, sb, hp.sigma_sq)
                              : losses::propagation_prior(sb, frozen, hp.sigma_sq);
      const auto q = losses::similarity_distribution(za, zb, hp.tau);
      const auto kl = losses::kl_similarity_gradient(za, zb, prior, q, hp.tau);
      const double w_kl = same ? 1.0 : hp.lambda1;
      ga += s_sim * w_kl * kl.grad_a;
      gb += s_sim * w_kl * kl.grad_b;
      if (!same) {
        const auto sd = softdtw::softdtw_cost(alignment::distance_matrix(zb, za), hp.gamma);
        const auto eg = softdtw::softdtw_grad_wrt_embeddings(zb, za, sd.tables.grad_d);
        gb += s_sdtw * hp.lambda2 * eg.grad_z1;
        ga += s_sdtw * hp.lambda2 * eg.grad_z2;
      }
      analytic << oracles::flatten(ga), oracles::flatten(gb);
    }
    Vector x(za.size() + zb.size());
    x << oracles::flatten(za), oracles::flatten(zb);
    const Vector numeric = oracles::finite_difference(
        [&](const Vector& v) {
          return loss_of(oracles::unflatten(v.head(za.size()), n, dim),
                         oracles::unflatten(v.tail(zb.size()), n, dim))
              .report.combined;
        },
        x, 1e-6);
    t.record(oracles::relative_error(analytic, numeric));
  }
  return t.result;
}

CheckResult check_encoder(Rng& rng) {
  Tracker t("encoder_backward_vs_finite_differences", "relative error over all parameters, h=1e-6",
            1e-4);
  for (int seed = 0; seed < 10; ++seed) {
    encoder::EncoderSettings settings{0.3, 0.2};
    const encoder::EncoderParams params =
        encoder::init_params(static_cast<std::uint64_t>(seed) + 100U, {5, 7, 4}, settings);
    const Matrix x = normal_matrix(6, 5, rng);
    const Matrix upstream = normal_matrix(6, 4, rng);
    const Vector analytic = encoder::encode_backward(x, params, upstream);
    const Vector numeric = oracles::finite_difference(
        [&](const Vector& theta) {
          encoder::EncoderParams p = params;
          p.assign(theta);
          return encoder::encode(x, p).cwiseProduct(upstream).sum();
        },
        params.flatten(), 1e-6);
    t.record(oracles::relative_error(analytic, numeric));
  }
  return t.result;
}

CheckResult check_end_to_end(Rng& rng) {
  Tracker t("end_to_end_grad_vs_finite_differences",
            "relative error over all encoder parameters, alignments frozen, h=1e-6", 1e-3);
  losses::HyperParams hp;
  hp.clip_length = 8;
  for (int seed = 0; seed < 10; ++seed) {
    const encoder::EncoderParams params = encoder::init_params(
        static_cast<std::uint64_t>(seed) + 200U, {6, 10, 4}, encoder::EncoderSettings{0.5, 0.1});
    const Matrix video_a = normal_matrix(14, 6, rng);
    const Matrix video_b = normal_matrix(11, 6, rng);
    const sampling::Batch batch = sampling::build_batch(video_a, video_b, 8, 0.05, rng);
    const trainer::BatchGradient bg = trainer::batch_gradient(params, batch, hp, 1);
    const Vector numeric = oracles::finite_difference(
        [&](const Vector& theta) {
          encoder::EncoderParams p = params;
          p.assign(theta);
          return trainer::batch_objective(p, batch, hp, bg.alignments);
        },
        params.flatten(), 1e-6);
    t.record(oracles::relative_error(bg.grad, numeric));
  }
  return t.result;
}

}  // namespace

std::vector<CheckResult> run_checks(const CheckOptions& options) {
  Rng rng(options.seed);
  std::vector<CheckResult> out;
  out.push_back(check_dtw_bruteforce(rng));
  out.push_back(check_dtw_path(rng));
  out.push_back(check_softdtw_cost(rng));
  out.push_back(check_softdtw_gibbs(rng, options.fault));
  out.push_back(check_softdtw_fd(rng, options.fault));
  out.push_back(check_softdtw_embeddings(rng, options.fault));
  out.push_back(check_gamma_limit(rng));
  out.push_back(check_distributions(rng));
  out.push_back(check_pair_loss(rng, options.fault));
  out.push_back(check_encoder(rng));
  out.push_back(check_end_to_end(rng));
  return out;
}

bool print_report(std::ostream& out, const std::vector<CheckResult>& results) {
  bool all = true;
  for (const CheckResult& r : results) {
    all = all && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(48) << r.name
        << " cases=" << std::setw(4) << r.cases << " worst=" << std::setprecision(3)
        << std::scientific << r.worst_error << " tol=" << r.tolerance << std::defaultfloat
        << "  [" << r.criterion << "]\n";
  }
  out << (all ? "all checks passed" : "some checks FAILED") << '\n';
  return all;
}

}  // namespace lrprop::checks

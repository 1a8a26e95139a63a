#include "lrprop/checkpoint.hpp"
#include "lrprop/oracles.hpp"
#include "lrprop/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

using namespace lrprop;
using namespace lrprop::trainer;

namespace {

synthdata::Dataset small_dataset(std::uint64_t seed) {
  synthdata::SynthConfig c;
  c.train_videos = 4;
  c.test_videos = 2;
  c.min_frames = 20;
  c.max_frames = 30;
  c.input_dim = 6;
  return synthdata::generate_dataset(c, seed);
}

TrainConfig small_train_config() {
  TrainConfig c;
  c.dims = encoder::EncoderDims{6, 8, 4};
  c.hp.clip_length = 8;
  c.epochs = 2;
  c.learning_rate = 1e-3;
  return c;
}

}  // namespace

TEST_CASE("epoch pairs") {
  const auto pairs = epoch_pairs(6, 1, 0);
  CHECK(pairs.size() == 15);
  std::set<std::pair<std::size_t, std::size_t>> unique(pairs.begin(), pairs.end());
  CHECK(unique.size() == 15);
  for (const auto& [a, b] : pairs) {
    CHECK(a < b);
    CHECK(b < 6);
  }
  CHECK(epoch_pairs(6, 1, 0) == epoch_pairs(6, 1, 0));
  CHECK(epoch_pairs(6, 1, 0) != epoch_pairs(6, 1, 1));
}

TEST_CASE("learning rate schedule") {
  TrainConfig c;
  CHECK(scheduled_learning_rate(c, 0, 100) == doctest::Approx(c.learning_rate));
  CHECK(scheduled_learning_rate(c, 50, 100) == doctest::Approx(0.5 * c.learning_rate));
  CHECK(scheduled_learning_rate(c, 100, 100) == doctest::Approx(0.0));
  c.cosine_decay = false;
  CHECK(scheduled_learning_rate(c, 70, 100) == c.learning_rate);
}

TEST_CASE("adam update") {
  const TrainConfig c = small_train_config();
  encoder::EncoderParams p = encoder::init_params(1, c.dims);
  const Vector before = p.flatten();
  auto state = OptimizerState::zeros(p.size());
  const Vector grad = Vector::Constant(p.size(), 0.5);
  SUBCASE("zero learning rate keeps params but updates moments") {
    adam_update(p, state, grad, 0.0, c);
    CHECK(p.flatten() == before);
    CHECK(state.step == 1);
    CHECK(state.first_moment.isApprox(Vector::Constant(p.size(), 0.05)));
    CHECK(state.second_moment.isApprox(Vector::Constant(p.size(), 0.00025)));
  }
  SUBCASE("first step moves each weight by about the learning rate") {
    TrainConfig no_decay = c;
    no_decay.weight_decay = 0.0;
    adam_update(p, state, grad, 0.01, no_decay);
    CHECK(((before - p.flatten()).array() - 0.01).abs().maxCoeff() < 1e-6);
  }
  SUBCASE("decoupled weight decay shrinks parameters") {
    TrainConfig decay = c;
    decay.weight_decay = 0.1;
    adam_update(p, state, Vector::Zero(p.size()), 0.5, decay);
    CHECK(p.flatten().isApprox(before * (1.0 - 0.05)));
  }
}

TEST_CASE("batch gradient matches finite differences") {
  const synthdata::Dataset d = small_dataset(3);
  TrainConfig c = small_train_config();
  c.hp.lambda1 = 0.5;
  const encoder::EncoderParams p = encoder::init_params(2, c.dims);
  sampling::Rng rng(5);
  const sampling::Batch batch =
      sampling::build_batch(d.videos[0].features, d.videos[1].features, 8, 0.05, rng);
  const BatchGradient g = batch_gradient(p, batch, c.hp, 1);
  CHECK(g.alignments.size() == 6);
  const Vector fd = oracles::finite_difference(
      [&](const Vector& theta) {
        encoder::EncoderParams q = p;
        q.assign(theta);
        return batch_objective(q, batch, c.hp, g.alignments);
      },
      p.flatten(), 1e-6);
  CHECK(oracles::relative_error(g.grad, fd) < 1e-4);
  CHECK(g.report.combined == doctest::Approx(batch_objective(p, batch, c.hp, g.alignments)));
  const BatchGradient g4 = batch_gradient(p, batch, c.hp, 4);
  CHECK(g4.grad == g.grad);
}

TEST_CASE("train determinism, curve length and resume") {
  const synthdata::Dataset d = small_dataset(4);
  const TrainConfig c = small_train_config();
  const TrainResult a = train(d, c);
  const TrainResult b = train(d, c);
  CHECK(a.finished);
  CHECK(a.curve.size() == 2 * 6);
  CHECK(a.total_steps == 12);
  CHECK(a.params.flatten() == b.params.flatten());
  CHECK(checkpoint::serialize(a.params, &a.optimizer) ==
        checkpoint::serialize(b.params, &b.optimizer));

  TrainConfig threaded = c;
  threaded.threads = 3;
  CHECK(train(d, threaded).params.flatten() == a.params.flatten());

  TrainOptions stop;
  stop.stop_at_step = 5;
  const TrainResult first = train(d, c, stop);
  CHECK_FALSE(first.finished);
  CHECK(first.curve.size() == 5);
  TrainOptions resume;
  resume.resume = checkpoint::deserialize(checkpoint::serialize(first.params, &first.optimizer));
  const TrainResult rest = train(d, c, resume);
  CHECK(rest.finished);
  CHECK(rest.curve.size() == 7);
  CHECK(rest.params.flatten() == a.params.flatten());
  CHECK(rest.curve.back().combined == a.curve.back().combined);
}

TEST_CASE("same-video-only pure L_Same training") {
  const synthdata::Dataset d = small_dataset(5);
  TrainConfig c = small_train_config();
  c.same_video_only = true;
  c.hp.lambda1 = 0.0;
  c.hp.lambda2 = 0.0;
  c.epochs = 10;
  c.learning_rate = 3e-3;
  const TrainResult r = train(d, c);
  for (const StepReport& s : r.curve) {
    CHECK(s.loss_prop == 0.0);
    CHECK(s.loss_sdtw == 0.0);
    CHECK(s.combined == s.loss_same);
  }
  const auto mean = [&](std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t k = from; k < to; ++k) {
      s += r.curve[k].combined;
    }
    return s / static_cast<double>(to - from);
  };
  CHECK(mean(r.curve.size() - 10, r.curve.size()) < mean(0, 10));
}

TEST_CASE("200 steps on default data reduce the loss") {
  const synthdata::Dataset d = synthdata::generate_dataset(synthdata::SynthConfig{}, 7);
  TrainConfig c;
  TrainOptions opts;
  opts.stop_at_step = 200;
  const TrainResult r = train(d, c, opts);
  REQUIRE(r.curve.size() == 200);
  double first = 0.0;
  double last = 0.0;
  for (std::size_t k = 0; k < 20; ++k) {
    first += r.curve[k].combined;
    last += r.curve[180 + k].combined;
  }
  CHECK(last < first);
}

TEST_CASE("curve csv") {
  std::vector<StepReport> curve(3);
  curve[1].step = 1;
  curve[2].step = 2;
  std::ostringstream out;
  write_curve_csv(out, curve);
  const std::string s = out.str();
  CHECK(s.rfind("step,loss_same,loss_prop,loss_sdtw,combined,lr\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 4);
}

TEST_CASE("invalid train config") {
  const synthdata::Dataset d = small_dataset(6);
  TrainConfig c = small_train_config();
  c.learning_rate = -1.0;
  CHECK_THROWS_AS(train(d, c), InvalidInput);
  c = small_train_config();
  c.dims.input = 5;
  CHECK_THROWS_AS(train(d, c), InvalidInput);
}

TEST_CASE("parallel_for stores by index") {
  std::vector<int> out(100, 0);
  parallel_for(out.size(), 4, [&](std::size_t k) { out[k] = static_cast<int>(k * k); });
  for (std::size_t k = 0; k < out.size(); ++k) {
    CHECK(out[k] == static_cast<int>(k * k));
  }
}

#include "lrprop/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numbers>
#include <random>
#include <thread>

namespace lrprop::trainer {

void TrainConfig::validate() const {
  require(learning_rate >= 0.0 && std::isfinite(learning_rate), "learning_rate must be >= 0");
  require(weight_decay >= 0.0 && std::isfinite(weight_decay), "weight_decay must be >= 0");
  require(epochs >= 1, "epochs must be at least 1");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam betas must lie in [0,1)");
  require(epsilon > 0.0, "Adam epsilon must be positive");
  require(augment_strength >= 0.0, "augment strength must be >= 0");
  require(threads >= 0, "threads must be >= 0");
  require(dims.input > 0 && dims.hidden > 0 && dims.output > 0, "encoder dims must be positive");
  require(encoder_settings.mix_weight >= 0.0 && encoder_settings.mix_weight <= 1.0,
          "mix weight must lie in [0,1]");
  hp.validate();
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads <= 0 ? std::max(1U, std::thread::hardware_concurrency())
                                     : static_cast<std::size_t>(threads);
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) {
      fn(k);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < count; k = next++) {
          try {
            fn(k);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        }
      });
    }
  }
  for (const std::exception_ptr& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

namespace {

struct PairWork {
  losses::PairLoss loss;
};

BatchGradient compute(const encoder::EncoderParams& params, const sampling::Batch& batch,
                      const losses::HyperParams& hp, int threads,
                      const std::vector<alignment::AlignmentMatrix>* frozen, bool with_gradient) {
  require(!batch.pairs.empty(), "batch has no pairs");
  if (frozen != nullptr) {
    require(frozen->size() == batch.pairs.size(), "frozen alignments must match pair count");
  }
  const std::size_t n_clips = batch.clips.size();
  std::vector<EmbeddingSequence> embeddings(n_clips);
  parallel_for(n_clips, threads, [&](std::size_t c) {
    embeddings[c] = encoder::encode(batch.clips[c].features, params);
  });

  const std::size_t n_pairs = batch.pairs.size();
  std::vector<losses::PairLoss> results(n_pairs);
  parallel_for(n_pairs, threads, [&](std::size_t k) {
    const sampling::ClipPair& pair = batch.pairs[k];
    const sampling::SampledClip& a = batch.clips[pair.a];
    const sampling::SampledClip& b = batch.clips[pair.b];
    if (!pair.same_video && frozen != nullptr) {
      results[k] = losses::cross_video_loss(b.source_indices, embeddings[pair.a],
                                            embeddings[pair.b], (*frozen)[k], hp);
    } else {
      results[k] = losses::pair_loss(a.source_indices, b.source_indices, embeddings[pair.a],
                                     embeddings[pair.b], hp, pair.same_video);
    }
  });

  BatchGradient out;
  const double inv_pairs = 1.0 / static_cast<double>(n_pairs);
  Index n_same = 0;
  Index n_cross = 0;
  std::vector<Matrix> upstream(n_clips);
  for (std::size_t c = 0; c < n_clips; ++c) {
    upstream[c] = Matrix::Zero(embeddings[c].rows(), embeddings[c].cols());
  }
  // Fixed accumulation order: pairs ascending, then clips ascending.
  for (std::size_t k = 0; k < n_pairs; ++k) {
    const losses::PairLoss& r = results[k];
    const sampling::ClipPair& pair = batch.pairs[k];
    out.report.combined += r.report.combined * inv_pairs;
    out.report.zero_distance_cells += r.zero_distance_cells;
    if (pair.same_video) {
      out.report.loss_same += r.report.loss_same;
      ++n_same;
    } else {
      out.report.loss_prop += r.report.loss_prop;
      out.report.loss_sdtw += r.report.loss_sdtw;
      ++n_cross;
    }
    upstream[pair.a] += inv_pairs * r.grad_a;
    upstream[pair.b] += inv_pairs * r.grad_b;
    out.alignments.push_back(r.alignment);
    out.pair_reports.push_back(r.report);
  }
  if (n_same > 0) {
    out.report.loss_same /= static_cast<double>(n_same);
  }
  if (n_cross > 0) {
    out.report.loss_prop /= static_cast<double>(n_cross);
    out.report.loss_sdtw /= static_cast<double>(n_cross);
  }
  if (!with_gradient) {
    return out;
  }
  std::vector<Vector> clip_grads(n_clips);
  parallel_for(n_clips, threads, [&](std::size_t c) {
    clip_grads[c] = encoder::encode_backward(batch.clips[c].features, params, upstream[c]);
  });
  out.grad = Vector::Zero(params.size());
  for (const Vector& g : clip_grads) {
    out.grad += g;
  }
  out.report.grad_norm = out.grad.norm();
  return out;
}

std::uint64_t pairs_per_epoch(std::size_t videos) {
  return static_cast<std::uint64_t>(videos) * (videos - 1) / 2;
}

}  // namespace

BatchGradient batch_gradient(const encoder::EncoderParams& params, const sampling::Batch& batch,
                             const losses::HyperParams& hp, int threads,
                             const std::vector<alignment::AlignmentMatrix>* frozen) {
  return compute(params, batch, hp, threads, frozen, true);
}

double batch_objective(const encoder::EncoderParams& params, const sampling::Batch& batch,
                       const losses::HyperParams& hp,
                       const std::vector<alignment::AlignmentMatrix>& frozen) {
  return compute(params, batch, hp, 1, &frozen, false).report.combined;
}

double scheduled_learning_rate(const TrainConfig& config, std::uint64_t step,
                               std::uint64_t horizon) {
  if (!config.cosine_decay || horizon == 0) {
    return config.learning_rate;
  }
  const double progress =
      std::min(1.0, static_cast<double>(step) / static_cast<double>(horizon));
  return config.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void adam_update(encoder::EncoderParams& params, OptimizerState& state, const Vector& grad,
                 double learning_rate, const TrainConfig& config) {
  require(grad.size() == params.size() && state.first_moment.size() == params.size() &&
              state.second_moment.size() == params.size(),
          "adam_update: size mismatch");
  state.step += 1;
  state.first_moment = config.beta1 * state.first_moment + (1.0 - config.beta1) * grad;
  state.second_moment =
      config.beta2 * state.second_moment + (1.0 - config.beta2) * grad.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  Vector theta = params.flatten();
  const Vector direction =
      (state.first_moment / correction1).array() /
      ((state.second_moment / correction2).array().sqrt() + config.epsilon);
  theta -= learning_rate * (direction + config.weight_decay * theta);
  params.assign(theta);
}

sampling::Rng step_rng(std::uint64_t seed, std::uint64_t step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x5354U, static_cast<std::uint32_t>(step),
                    static_cast<std::uint32_t>(step >> 32)};
  return sampling::Rng(seq);
}

StepResult train_step(const encoder::EncoderParams& params, const OptimizerState& optimizer,
                      const Matrix& video_a, const Matrix& video_b, const TrainConfig& config,
                      sampling::Rng& rng, std::uint64_t horizon) {
  sampling::Batch batch =
      sampling::build_batch(video_a, video_b, config.hp.clip_length, config.augment_strength, rng);
  if (config.same_video_only) {
    std::erase_if(batch.pairs, [](const sampling::ClipPair& p) { return !p.same_video; });
  }
  const BatchGradient bg = batch_gradient(params, batch, config.hp, config.threads);
  StepResult out{params, optimizer, bg.report};
  out.report.step = optimizer.step;
  out.report.learning_rate = scheduled_learning_rate(config, optimizer.step, horizon);
  if (!std::isfinite(bg.report.combined) || !bg.grad.allFinite()) {
    throw NonFiniteLoss("non-finite loss or gradient at step " + std::to_string(optimizer.step),
                        out.report);
  }
  adam_update(out.params, out.optimizer, bg.grad, out.report.learning_rate, config);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> epoch_pairs(std::size_t videos,
                                                             std::uint64_t seed, int epoch) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < videos; ++i) {
    for (std::size_t j = i + 1; j < videos; ++j) {
      pairs.emplace_back(i, j);
    }
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x4550U, static_cast<std::uint32_t>(epoch)};
  sampling::Rng rng(seq);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t k = pairs.size(); k > 1; --k) {
    const std::size_t pick = static_cast<std::size_t>(rng() % k);
    std::swap(pairs[k - 1], pairs[pick]);
  }
  return pairs;
}

TrainResult train(const synthdata::Dataset& dataset, const TrainConfig& config,
                  const TrainOptions& options) {
  config.validate();
  const auto videos = dataset.split(synthdata::Split::train, config.class_id);
  require(videos.size() >= 2, "training needs at least two training videos");
  for (const synthdata::SyntheticVideo* v : videos) {
    require(v->features.cols() == config.dims.input,
            "dataset feature dimension does not match encoder input dimension");
  }

  TrainResult result;
  if (options.resume) {
    result.params = options.resume->params;
    require(result.params.dims == config.dims, "resume checkpoint dims differ from config");
    result.optimizer = options.resume->optimizer.value_or(OptimizerState::zeros(result.params.size()));
  } else {
    result.params = encoder::init_params(config.seed, config.dims, config.encoder_settings);
    result.optimizer = OptimizerState::zeros(result.params.size());
  }

  const std::uint64_t per_epoch = pairs_per_epoch(videos.size());
  result.total_steps = per_epoch * static_cast<std::uint64_t>(config.epochs);
  while (result.optimizer.step < result.total_steps) {
    if (options.stop_at_step && result.optimizer.step >= *options.stop_at_step) {
      return result;
    }
    const std::uint64_t step = result.optimizer.step;
    const int epoch = static_cast<int>(step / per_epoch);
    const auto pairs = epoch_pairs(videos.size(), config.seed, epoch);
    const auto& [ia, ib] = pairs[static_cast<std::size_t>(step % per_epoch)];
    sampling::Rng rng = step_rng(config.seed, step);
    StepResult sr = train_step(result.params, result.optimizer, videos[ia]->features,
                               videos[ib]->features, config, rng, result.total_steps);
    result.params = std::move(sr.params);
    result.optimizer = std::move(sr.optimizer);
    result.curve.push_back(sr.report);
    if (options.on_step) {
      options.on_step(sr.report);
    }
  }
  result.finished = true;
  return result;
}

void write_curve_csv(std::ostream& out, const std::vector<StepReport>& curve) {
  out << "step,loss_same,loss_prop,loss_sdtw,combined,lr\n";
  out << std::setprecision(17);
  for (const StepReport& r : curve) {
    out << r.step << ',' << r.loss_same << ',' << r.loss_prop << ',' << r.loss_sdtw << ','
        << r.combined << ',' << r.learning_rate << '\n';
  }
}

}  // namespace lrprop::trainer

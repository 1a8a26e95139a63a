#pragma once

// Compact per-frame encoder with an exact hand-written backward pass.
//
//   h_t = tanh(W1 x_t + b1)
//   p_t = h_t + s * PE(t)                       sinusoidal, clip position t
//   m_t = (1-w) p_t + (w/2)(p_{t-1} + p_{t+1})  edges replicated
//   y_t = W2 m_t + b2
//   z_t = y_t / ||y_t||
//
// W1, b1, W2, b2 are trainable. The mixing weight w and positional scale s
// are fixed architecture settings.

#include "lrprop/common.hpp"

#include <cstdint>

namespace lrprop::encoder {

struct EncoderDims {
  Index input = 12;
  Index hidden = 32;
  Index output = 16;

  friend bool operator==(const EncoderDims&, const EncoderDims&) = default;
};

struct EncoderParams {
  EncoderDims dims;
  double mix_weight = 0.0;
  double positional_scale = 0.0;
  Matrix w1;  ///< hidden × input
  Vector b1;
  Matrix w2;  ///< output × hidden
  Vector b2;

  /// Total trainable scalars.
  [[nodiscard]] Index size() const;
  /// Trainable values in declaration order: W1 (row-major), b1, W2 (row-major), b2.
  [[nodiscard]] Vector flatten() const;
  void assign(const Vector& flat);
  void validate() const;
};

struct EncoderSettings {
  double mix_weight = 0.5;
  double positional_scale = 0.1;
};

/// Deterministic in the seed; weights drawn N(0,1)/sqrt(fan_in), biases zero.
EncoderParams init_params(std::uint64_t seed, const EncoderDims& dims,
                          const EncoderSettings& settings = {});

/// Standard sinusoidal encoding of clip position t over `width` channels.
RowVector positional_encoding(Index t, Index width);

EmbeddingSequence encode(const Matrix& clip_features, const EncoderParams& params);

/// Gradient of <upstream, encode(features)> w.r.t. the trainable parameters,
/// flattened in EncoderParams::flatten order.
Vector encode_backward(const Matrix& clip_features, const EncoderParams& params,
                       const Matrix& upstream);

}  // namespace lrprop::encoder

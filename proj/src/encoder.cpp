#include "lrprop/encoder.hpp"

#include <cmath>
#include <random>
#include <string>

namespace lrprop::encoder {

Index EncoderParams::size() const {
  return w1.size() + b1.size() + w2.size() + b2.size();
}

Vector EncoderParams::flatten() const {
  Vector flat(size());
  Index offset = 0;
  for (Index r = 0; r < w1.rows(); ++r) {
    flat.segment(offset, w1.cols()) = w1.row(r).transpose();
    offset += w1.cols();
  }
  flat.segment(offset, b1.size()) = b1;
  offset += b1.size();
  for (Index r = 0; r < w2.rows(); ++r) {
    flat.segment(offset, w2.cols()) = w2.row(r).transpose();
    offset += w2.cols();
  }
  flat.segment(offset, b2.size()) = b2;
  return flat;
}

void EncoderParams::assign(const Vector& flat) {
  require(flat.size() == size(), "EncoderParams::assign: expected " + std::to_string(size()) +
                                     " values, got " + std::to_string(flat.size()));
  Index offset = 0;
  for (Index r = 0; r < w1.rows(); ++r) {
    w1.row(r) = flat.segment(offset, w1.cols()).transpose();
    offset += w1.cols();
  }
  b1 = flat.segment(offset, b1.size());
  offset += b1.size();
  for (Index r = 0; r < w2.rows(); ++r) {
    w2.row(r) = flat.segment(offset, w2.cols()).transpose();
    offset += w2.cols();
  }
  b2 = flat.segment(offset, b2.size());
}

void EncoderParams::validate() const {
  require(dims.input > 0 && dims.hidden > 0 && dims.output > 0, "encoder dims must be positive");
  require(w1.rows() == dims.hidden && w1.cols() == dims.input && b1.size() == dims.hidden &&
              w2.rows() == dims.output && w2.cols() == dims.hidden && b2.size() == dims.output,
          "encoder parameter shapes do not match dims");
  require(mix_weight >= 0.0 && mix_weight <= 1.0, "mix weight must lie in [0,1]");
  require(std::isfinite(positional_scale), "positional scale must be finite");
  require(w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite(),
          "encoder parameters must be finite");
}

EncoderParams init_params(std::uint64_t seed, const EncoderDims& dims,
                          const EncoderSettings& settings) {
  require(dims.input > 0 && dims.hidden > 0 && dims.output > 0, "encoder dims must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  EncoderParams p;
  p.dims = dims;
  p.mix_weight = settings.mix_weight;
  p.positional_scale = settings.positional_scale;
  p.w1.resize(dims.hidden, dims.input);
  p.w2.resize(dims.output, dims.hidden);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(dims.input));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(dims.hidden));
  for (Index i = 0; i < p.w1.size(); ++i) {
    p.w1.data()[i] = normal(rng) * s1;
  }
  for (Index i = 0; i < p.w2.size(); ++i) {
    p.w2.data()[i] = normal(rng) * s2;
  }
  p.b1 = Vector::Zero(dims.hidden);
  p.b2 = Vector::Zero(dims.output);
  p.validate();
  return p;
}

RowVector positional_encoding(Index t, Index width) {
  RowVector pe(width);
  for (Index c = 0; c < width; ++c) {
    const double exponent = static_cast<double>(2 * (c / 2)) / static_cast<double>(width);
    const double angle = static_cast<double>(t) / std::pow(10000.0, exponent);
    pe(c) = (c % 2 == 0) ? std::sin(angle) : std::cos(angle);
  }
  return pe;
}

namespace {

struct ForwardCache {
  Matrix hidden;  // h_t
  Matrix mixed;   // m_t
  Matrix out;     // y_t
  Vector out_norm;
};

ForwardCache forward(const Matrix& x, const EncoderParams& params) {
  params.validate();
  require(x.rows() > 0, "encode: clip has no frames");
  require(x.cols() == params.dims.input,
          "encode: feature dimension " + std::to_string(x.cols()) + " does not match encoder input " +
              std::to_string(params.dims.input));
  require(x.allFinite(), "encode: non-finite input features");
  const Index t_len = x.rows();
  ForwardCache c;
  c.hidden = ((x * params.w1.transpose()).rowwise() + params.b1.transpose()).array().tanh();
  Matrix pos = c.hidden;
  if (params.positional_scale != 0.0) {
    for (Index t = 0; t < t_len; ++t) {
      pos.row(t) += params.positional_scale * positional_encoding(t, params.dims.hidden);
    }
  }
  const double w = params.mix_weight;
  c.mixed.resize(t_len, params.dims.hidden);
  for (Index t = 0; t < t_len; ++t) {
    const Index prev = t > 0 ? t - 1 : 0;
    const Index next = t + 1 < t_len ? t + 1 : t_len - 1;
    c.mixed.row(t) = (1.0 - w) * pos.row(t) + (0.5 * w) * (pos.row(prev) + pos.row(next));
  }
  c.out = (c.mixed * params.w2.transpose()).rowwise() + params.b2.transpose();
  c.out_norm = c.out.rowwise().norm();
  for (Index t = 0; t < t_len; ++t) {
    if (!(c.out_norm(t) > 0.0)) {
      throw NumericalError("encode: frame " + std::to_string(t) + " maps to the zero vector");
    }
  }
  return c;
}

}  // namespace

EmbeddingSequence encode(const Matrix& clip_features, const EncoderParams& params) {
  const ForwardCache c = forward(clip_features, params);
  return c.out_norm.cwiseInverse().asDiagonal() * c.out;
}

Vector encode_backward(const Matrix& clip_features, const EncoderParams& params,
                       const Matrix& upstream) {
  const ForwardCache c = forward(clip_features, params);
  const Index t_len = clip_features.rows();
  require(upstream.rows() == t_len && upstream.cols() == params.dims.output,
          "encode_backward: upstream gradient shape mismatch");

  // Through z = y / ||y||: dy = (g - z <z, g>) / ||y||.
  Matrix dy(t_len, params.dims.output);
  for (Index t = 0; t < t_len; ++t) {
    const RowVector z = c.out.row(t) / c.out_norm(t);
    dy.row(t) = (upstream.row(t) - z * z.dot(upstream.row(t))) / c.out_norm(t);
  }
  const Matrix dw2 = dy.transpose() * c.mixed;
  const Vector db2 = dy.colwise().sum().transpose();
  const Matrix dm = dy * params.w2;

  const double w = params.mix_weight;
  Matrix dp = Matrix::Zero(t_len, params.dims.hidden);
  for (Index t = 0; t < t_len; ++t) {
    const Index prev = t > 0 ? t - 1 : 0;
    const Index next = t + 1 < t_len ? t + 1 : t_len - 1;
    dp.row(t) += (1.0 - w) * dm.row(t);
    dp.row(prev) += (0.5 * w) * dm.row(t);
    dp.row(next) += (0.5 * w) * dm.row(t);
  }
  const Matrix da = dp.array() * (1.0 - c.hidden.array().square());
  const Matrix dw1 = da.transpose() * clip_features;
  const Vector db1 = da.colwise().sum().transpose();

  EncoderParams grad = params;
  grad.w1 = dw1;
  grad.b1 = db1;
  grad.w2 = dw2;
  grad.b2 = db2;
  return grad.flatten();
}

}  // namespace lrprop::encoder

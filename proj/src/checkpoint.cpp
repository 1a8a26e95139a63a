#include "lrprop/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

namespace lrprop::checkpoint {

namespace {

constexpr std::string_view kMagic = "LRPROPCK";
constexpr std::uint32_t kHasOptimizer = 1U;

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void vec(const Vector& v) {
    for (Index i = 0; i < v.size(); ++i) {
      f64(v(i));
    }
  }
  std::string bytes;

 private:
  void put(std::uint64_t v, int width) {
    for (int b = 0; b < width; ++b) {
      bytes.push_back(static_cast<char>((v >> (8 * b)) & 0xFFU));
    }
  }
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  Vector vec(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
      v(i) = f64();
    }
    return v;
  }
  [[nodiscard]] bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::uint64_t get(int width) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) {
      throw FormatError("checkpoint: truncated file");
    }
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * b);
    }
    return v;
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

OptimizerState OptimizerState::zeros(Index size) {
  return OptimizerState{Vector::Zero(size), Vector::Zero(size), 0};
}

std::string serialize(const encoder::EncoderParams& params, const OptimizerState* optimizer) {
  params.validate();
  Writer w;
  w.bytes.append(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(optimizer != nullptr ? kHasOptimizer : 0U);
  w.u64(static_cast<std::uint64_t>(params.dims.input));
  w.u64(static_cast<std::uint64_t>(params.dims.hidden));
  w.u64(static_cast<std::uint64_t>(params.dims.output));
  w.f64(params.mix_weight);
  w.f64(params.positional_scale);
  w.vec(params.flatten());
  if (optimizer != nullptr) {
    require(optimizer->first_moment.size() == params.size() &&
                optimizer->second_moment.size() == params.size(),
            "checkpoint: optimizer state does not match parameter count");
    w.u64(optimizer->step);
    w.vec(optimizer->first_moment);
    w.vec(optimizer->second_moment);
  }
  return std::move(w.bytes);
}

Checkpoint deserialize(const std::string& bytes) {
  if (bytes.size() < kMagic.size() || std::string_view(bytes).substr(0, kMagic.size()) != kMagic) {
    throw FormatError("checkpoint: bad magic header");
  }
  const std::string body = bytes.substr(kMagic.size());
  Reader r(body);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint: unsupported version " + std::to_string(version) +
                       " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t flags = r.u32();
  if ((flags & ~kHasOptimizer) != 0U) {
    throw FormatError("checkpoint: unknown flags");
  }
  encoder::EncoderDims dims;
  dims.input = static_cast<Index>(r.u64());
  dims.hidden = static_cast<Index>(r.u64());
  dims.output = static_cast<Index>(r.u64());
  constexpr Index kMaxDim = 1 << 16;
  if (dims.input <= 0 || dims.hidden <= 0 || dims.output <= 0 || dims.input > kMaxDim ||
      dims.hidden > kMaxDim || dims.output > kMaxDim) {
    throw FormatError("checkpoint: implausible dimensions");
  }
  Checkpoint ck;
  ck.params.dims = dims;
  ck.params.mix_weight = r.f64();
  ck.params.positional_scale = r.f64();
  ck.params.w1.resize(dims.hidden, dims.input);
  ck.params.b1.resize(dims.hidden);
  ck.params.w2.resize(dims.output, dims.hidden);
  ck.params.b2.resize(dims.output);
  const Index n = ck.params.size();
  ck.params.assign(r.vec(n));
  if ((flags & kHasOptimizer) != 0U) {
    OptimizerState opt;
    opt.step = r.u64();
    opt.first_moment = r.vec(n);
    opt.second_moment = r.vec(n);
    ck.optimizer = std::move(opt);
  }
  if (!r.at_end()) {
    throw FormatError("checkpoint: trailing bytes");
  }
  try {
    ck.params.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const encoder::EncoderParams& params,
                     const OptimizerState* optimizer) {
  const std::string bytes = serialize(params, optimizer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("checkpoint not found: " + path.string());
  }
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace lrprop::checkpoint

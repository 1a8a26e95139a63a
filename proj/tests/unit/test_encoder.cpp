#include "helpers.hpp"
#include "lrprop/encoder.hpp"
#include "lrprop/oracles.hpp"

#include <doctest.h>

using namespace lrprop;
using namespace lrprop::encoder;
using lrprop::test::random_normal;

namespace {

const EncoderDims kSmall{5, 7, 4};

}  // namespace

TEST_CASE("init params") {
  const EncoderParams a = init_params(3, kSmall);
  const EncoderParams b = init_params(3, kSmall);
  const EncoderParams c = init_params(4, kSmall);
  CHECK(a.flatten() == b.flatten());
  CHECK(a.flatten() != c.flatten());
  CHECK(a.size() == 5 * 7 + 7 + 7 * 4 + 4);
  CHECK(a.b1.isZero(0.0));
  CHECK(a.b2.isZero(0.0));
  CHECK(a.mix_weight == EncoderSettings{}.mix_weight);
}

TEST_CASE("flatten and assign") {
  EncoderParams p = init_params(1, kSmall);
  const Vector flat = p.flatten();
  CHECK(flat(0) == p.w1(0, 0));
  CHECK(flat(1) == p.w1(0, 1));
  CHECK(flat(5 * 7) == p.b1(0));
  EncoderParams q = init_params(2, kSmall);
  q.assign(flat);
  CHECK(q.flatten() == flat);
  CHECK_THROWS_AS(q.assign(Vector::Zero(3)), InvalidInput);
}

TEST_CASE("encode") {
  const EncoderParams p = init_params(5, kSmall);
  const Matrix x = random_normal(9, 5, 6);
  const Matrix z = encode(x, p);
  REQUIRE(z.rows() == 9);
  REQUIRE(z.cols() == 4);
  CHECK((z.rowwise().norm().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(encode(Matrix::Ones(1, 5), p).row(0).norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(encode(random_normal(9, 4, 6), p), InvalidInput);

  SUBCASE("per-frame map without mixing or positions") {
    const EncoderParams plain = init_params(5, kSmall, EncoderSettings{0.0, 0.0});
    const std::vector<Index> perm{3, 0, 8, 1, 5, 2, 7, 4, 6};
    Matrix xp(9, 5);
    for (Index k = 0; k < 9; ++k) {
      xp.row(k) = x.row(perm[static_cast<std::size_t>(k)]);
    }
    const Matrix z0 = encode(x, plain);
    const Matrix zp = encode(xp, plain);
    for (Index k = 0; k < 9; ++k) {
      CHECK((zp.row(k) - z0.row(perm[static_cast<std::size_t>(k)])).norm() < 1e-14);
    }
  }
  SUBCASE("positional encoding") {
    const RowVector pe0 = positional_encoding(0, 6);
    CHECK(pe0(0) == 0.0);
    CHECK(pe0(1) == 1.0);
    const RowVector pe3 = positional_encoding(3, 6);
    CHECK(pe3(0) == doctest::Approx(std::sin(3.0)));
    CHECK(pe3(1) == doctest::Approx(std::cos(3.0)));
  }
  SUBCASE("invalid settings") {
    CHECK_THROWS_AS(init_params(1, kSmall, EncoderSettings{1.5, 0.0}), InvalidInput);
    CHECK_THROWS_AS(init_params(1, EncoderDims{0, 3, 3}), InvalidInput);
  }
}

TEST_CASE("encode backward") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const EncoderParams p = init_params(10 + seed, kSmall, EncoderSettings{0.4, 0.3});
    const Matrix x = random_normal(6, 5, 20 + seed);
    const Matrix up = random_normal(6, 4, 30 + seed);
    const Vector g = encode_backward(x, p, up);
    const Vector fd = oracles::finite_difference(
        [&](const Vector& theta) {
          EncoderParams q = p;
          q.assign(theta);
          return (encode(x, q).array() * up.array()).sum();
        },
        p.flatten(), 1e-6);
    CHECK(oracles::relative_error(g, fd) < 1e-4);
    CHECK(oracles::relative_error(encode_backward(x, p, 2.0 * up), Vector(2.0 * g)) < 1e-14);
  }
  SUBCASE("jacobian-vector product") {
    const EncoderParams p = init_params(3, kSmall);
    const Matrix x = random_normal(6, 5, 4);
    const Vector dir = random_normal(p.size(), 1, 5);
    const double h = 1e-6;
    EncoderParams plus = p;
    plus.assign(p.flatten() + h * dir);
    EncoderParams minus = p;
    minus.assign(p.flatten() - h * dir);
    const Matrix jvp = (encode(x, plus) - encode(x, minus)) / (2.0 * h);
    // <up, J dir> equals <J^T up, dir> for any upstream.
    const Matrix up = random_normal(6, 4, 6);
    const double lhs = (jvp.array() * up.array()).sum();
    const double rhs = encode_backward(x, p, up).dot(dir);
    CHECK(std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs)) < 1e-4);
  }
  const EncoderParams p = init_params(3, kSmall);
  const Matrix x = random_normal(6, 5, 4);
  CHECK(encode_backward(x, p, Matrix::Zero(6, 4)).isZero(0.0));
  CHECK_THROWS_AS(encode_backward(x, p, Matrix::Zero(5, 4)), InvalidInput);
}

// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "ddt/attention.hpp"
#include "oracles.hpp"

using namespace ddt;
using attn::DeformAttnConfig;
using attn::DeformableAttention;
using oracle::random;

namespace {

// Smallest distance of any sampling coordinate to the pixel lattice, in pixels.
double lattice_margin(const attn::AttentionTrace<double>& tr, std::int64_t h, std::int64_t w) {
  const auto& ref = tr.field.ref_points.value();
  const auto& off = tr.field.offsets.value();
  const std::int64_t pts = ref.size() / 2;
  double margin = 1e9;
  for (std::size_t i = 0; i < off.size(); ++i) {
    const std::int64_t extent = i % 2 == 0 ? w : h;
    const double u = ref[i % (2 * pts)] + off[i];
    if (u <= -1 || u >= 1) return 0;  // clamped: gradient kink
    const double px = nn::unnormalize_coord(u, extent);
    margin = std::min(margin, std::abs(px - std::round(px)));
  }
  return margin;
}

}  // namespace

TEST_CASE("reference grid") {
  const auto g = attn::reference_grid<double>(4, 4, 2);
  CHECK(g.shape() == Shape{2, 2, 2});
  const double expect[4][2] = {{0.5, 0.5}, {2.5, 0.5}, {0.5, 2.5}, {2.5, 2.5}};  // (x, y), row-major over (i, j)
  for (int k = 0; k < 4; ++k) {
    CHECK(nn::unnormalize_coord(g[2 * k], 4) == doctest::Approx(expect[k][0]).epsilon(1e-12));
    CHECK(nn::unnormalize_coord(g[2 * k + 1], 4) == doctest::Approx(expect[k][1]).epsilon(1e-12));
  }

  const auto g1 = attn::reference_grid<double>(3, 5, 1);
  CHECK(g1.shape() == Shape{3, 5, 2});
  CHECK(nn::unnormalize_coord(g1.at({2, 4, 0}), 5) == 4.0);

  const auto g3 = attn::reference_grid<double>(12, 6, 3);
  for (std::int64_t i = 0; i < 4; ++i)
    for (std::int64_t j = 0; j < 2; ++j)
      for (std::int64_t c = 0; c < 2; ++c) CHECK(g3.at({i, j, c}) == doctest::Approx(-g3.at({3 - i, 1 - j, c})));

  CHECK_THROWS_AS(attn::reference_grid<double>(5, 4, 2), std::invalid_argument);
}

TEST_CASE("config validation") {
  CHECK_THROWS(DeformAttnConfig{6, 4, 2, 0}.validate());
  CHECK_THROWS(DeformAttnConfig{8, 2, 0, 0}.validate());
  CHECK_NOTHROW(DeformAttnConfig{8, 2, 2, 0}.validate());
  CHECK(DeformAttnConfig{16, 4, 2, 0}.head_dim() == 4);
  CHECK(DeformAttnConfig{16, 4, 2, 0}.effective_offset_scale() == 2.0);
}

TEST_CASE("position sub-network") {
  DeformableAttention<double> da(DeformAttnConfig{4, 1, 2, 0});
  nn::Rng rng(3);
  da.init(rng);
  Tape<double> tape;
  const auto x = tape.constant(random({2, 4, 8, 6}, 1));

  SUBCASE("zero-initialised head is neutral") {
    const auto f = da.position_subnet(tape, x);
    CHECK(f.offsets.shape() == Shape{2, 4, 3, 2});
    CHECK(f.modulation.shape() == Shape{2, 1, 4, 3});
    for (double v : f.offsets.value().data()) CHECK(v == 0.0);
    for (double v : f.modulation.value().data()) CHECK(v == 1.0);
  }
  SUBCASE("bounded for large raw outputs") {
    da.offset_proj.init(rng, 50.0);
    da.offset_dw.init(rng, 5.0);
    const auto f = da.position_subnet(tape, x);
    const auto& off = f.offsets.value();
    for (std::size_t i = 0; i < off.size(); ++i) {
      const double half = (i % 2 == 0 ? 6 - 1 : 8 - 1) / 2.0;
      CHECK(std::abs(off[i]) * half <= 2.0 + 1e-12);
    }
    for (double v : f.modulation.value().data()) {
      CHECK(v >= 0.0);
      CHECK(v <= 2.0);
    }
  }
  CHECK_THROWS_AS(da.position_subnet(tape, tape.constant(Tensor<double>(Shape{1, 4, 7, 8}))), std::invalid_argument);
}

TEST_CASE("deformed sampling") {
  Tape<double> tape;
  const auto neutral = [&](std::int64_t n, std::int64_t h, std::int64_t w, int gamma) {
    attn::DeformableField<double> f;
    f.ref_points = tape.constant(attn::reference_grid<double>(h, w, gamma).reshape({1, h / gamma, w / gamma, 2}));
    f.offsets = tape.constant(Tensor<double>(Shape{n, h / gamma, w / gamma, 2}));
    f.modulation = tape.constant(Tensor<double>(Shape{n, 1, h / gamma, w / gamma}, 1.0));
    return f;
  };
  SUBCASE("identity at gamma 1") {
    const auto x = random({2, 3, 5, 4}, 2);
    CHECK(attn::sample_deformed(tape.constant(x), neutral(2, 5, 4, 1)).value() == x);
  }
  SUBCASE("gamma 2 samples the cell averages") {
    const auto x = random({1, 2, 4, 6}, 3);
    const auto y = attn::sample_deformed(tape.constant(x), neutral(1, 4, 6, 2)).value();
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) {
          const double avg = (x.at({0, c, 2 * i, 2 * j}) + x.at({0, c, 2 * i + 1, 2 * j}) +
                              x.at({0, c, 2 * i, 2 * j + 1}) + x.at({0, c, 2 * i + 1, 2 * j + 1})) / 4;
          CHECK(y.at({0, c, i, j}) == doctest::Approx(avg).epsilon(1e-13));
        }
  }
  SUBCASE("constant image gives c times the modulation") {
    auto f = neutral(1, 4, 4, 2);
    f.offsets = tape.constant(random({1, 2, 2, 2}, 4, -0.8, 0.8));
    const auto m = random({1, 1, 2, 2}, 5, 0.1, 1.9);
    f.modulation = tape.constant(m);
    const auto y = attn::sample_deformed(tape.constant(Tensor<double>(Shape{1, 3, 4, 4}, 0.3)), f).value();
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < 4; ++k) CHECK(y[c * 4 + k] == doctest::Approx(0.3 * m[k]).epsilon(1e-13));
  }
}

TEST_CASE("gamma 1 with a neutral field reproduces dense multi-head attention") {
  for (int heads : {1, 2, 4}) {
    DeformableAttention<double> da(DeformAttnConfig{16, heads, 1, 0});
    nn::Rng rng(10 + heads);
    da.init(rng);
    for (auto* p : {&da.q_proj, &da.k_proj, &da.v_proj, &da.o_proj}) {
      p->init(rng, 0.3);
      p->bias.value = random({16}, 20 + heads, -0.1, 0.1);
    }
    const auto x = random({2, 16, 8, 8}, 30 + heads);
    Tape<double> tape;
    const auto y = da.forward(tape, tape.constant(x));
    const Tensor<double>* w[4] = {&da.q_proj.weight.value, &da.k_proj.weight.value, &da.v_proj.weight.value,
                                  &da.o_proj.weight.value};
    const Tensor<double>* b[4] = {&da.q_proj.bias.value, &da.k_proj.bias.value, &da.v_proj.bias.value,
                                  &da.o_proj.bias.value};
    CHECK(oracle::max_abs_diff(y.value(), oracle::dense_mhsa(x, w, b, heads)) <= 1e-5);
  }
}

TEST_CASE("attention weights") {
  DeformableAttention<double> da(DeformAttnConfig{8, 2, 2, 0});
  nn::Rng rng(4);
  da.init(rng);
  da.offset_proj.init(rng, 0.5);
  Tape<double> tape;
  attn::AttentionTrace<double> tr;
  const auto y = da.forward(tape, tape.constant(random({1, 8, 8, 4}, 6)), &tr);
  CHECK(y.shape() == Shape{1, 8, 8, 4});
  CHECK(tr.probs.shape() == Shape{1, 2, 32, 8});  // keys: HW / gamma^2
  const auto& p = tr.probs.value();
  for (std::size_t row = 0; row < p.size() / 8; ++row) {
    double s = 0;
    for (int k = 0; k < 8; ++k) s += p[row * 8 + k];
    CHECK(std::abs(s - 1) <= 1e-6);
  }

  SUBCASE("single key") {
    DeformableAttention<double> one(DeformAttnConfig{4, 2, 2, 0});
    one.init(rng);
    Tape<double> t;
    attn::AttentionTrace<double> tr1;
    const auto x = random({1, 4, 2, 2}, 7);
    const auto out = one.forward(t, t.constant(x), &tr1);
    for (double v : tr1.probs.value().data()) CHECK(v == 1.0);
    const auto expected = one.o_proj.forward(t, one.v_proj.forward(t, tr1.sampled)).value();
    for (int c = 0; c < 4; ++c)
      for (int k = 0; k < 4; ++k) CHECK(out.value()[c * 4 + k] == doctest::Approx(expected[c]).epsilon(1e-12));
  }
}

TEST_CASE("zero key, value and output projections give zero output") {
  DeformableAttention<double> da(DeformAttnConfig{8, 2, 2, 0});
  nn::Rng rng(5);
  da.init(rng);
  da.k_proj.zero();
  da.v_proj.zero();
  da.o_proj.zero();
  Tape<double> tape;
  for (double v : da.forward(tape, tape.constant(random({1, 8, 4, 4}, 8))).value().data()) CHECK(v == 0.0);
}

TEST_CASE("batch permutation equivariance") {
  DeformableAttention<double> da(DeformAttnConfig{4, 2, 2, 0});
  nn::Rng rng(6);
  da.init(rng);
  da.offset_proj.init(rng, 0.5);
  const auto x = random({3, 4, 4, 4}, 9);
  Tensor<double> xp(x.shape());
  const int perm[3] = {2, 0, 1};
  const std::size_t per = x.size() / 3;
  for (int i = 0; i < 3; ++i) std::copy_n(x.ptr() + perm[i] * per, per, xp.ptr() + i * per);
  Tape<double> tape;
  const auto y = da.forward(tape, tape.constant(x)).value();
  const auto yp = da.forward(tape, tape.constant(xp)).value();
  for (int i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < per; ++k) CHECK(yp[i * per + k] == y[perm[i] * per + k]);
}

TEST_CASE("end-to-end gradient including offsets and modulation") {
  DeformableAttention<double> da(DeformAttnConfig{4, 2, 2, 0});
  Tensor<double> x;
  // Pick a seed whose sampling coordinates stay clear of the lattice and border.
  for (std::uint64_t seed = 0;; ++seed) {
    REQUIRE(seed < 50);
    nn::Rng rng(seed);
    da.init(rng);
    da.offset_proj.init(rng, 0.3);
    da.offset_proj.bias.value = random({3}, seed + 100, -0.5, 0.5);
    x = random({1, 4, 6, 6}, seed + 200);
    Tape<double> tape;
    attn::AttentionTrace<double> tr;
    da.forward(tape, tape.constant(x), &tr);
    if (lattice_margin(tr, 6, 6) > 1e-2) break;
  }
  std::vector<Parameter<double>*> params;
  da.visit("da", [&](const std::string&, Parameter<double>& p) { params.push_back(&p); });
  const auto r = oracle::finite_difference(
      [&](Tape<double>& t, const std::vector<oracle::Var>& v) { return oracle::weigh(da.forward(t, v[0])); }, {x},
      params, 200);
  CHECK(r.max_err <= 1e-4);
}

TEST_CASE("ablation operators") {
  Tape<double> tape;
  const auto x = tape.constant(random({2, 8, 4, 4}, 11));
  nn::Rng rng(7);
  for (auto op : {attn::AttentionOp::kDeformable, attn::AttentionOp::kDense, attn::AttentionOp::kMlpMixer}) {
    auto mixer = attn::make_mixer<double>(op, DeformAttnConfig{8, 2, 2, 0}, 4);
    mixer->init(rng);
    CHECK(mixer->forward(tape, x).shape() == x.shape());
  }
  attn::TokenMixer<double> mix(8, 4);
  CHECK(mix.parameter_count() == 2 * (64 + 8) + 256 + 16);
  CHECK_THROWS(mix.forward(tape, tape.constant(Tensor<double>(Shape{1, 8, 8, 8}))));

  attn::DenseAttention<double> dense(8, 2);
  dense.init(rng);
  const auto r = oracle::finite_difference(
      [&](Tape<double>& t, const std::vector<oracle::Var>& v) { return oracle::weigh(dense.forward(t, v[0])); },
      {random({1, 8, 2, 2}, 12)}, {}, 32);
  CHECK(r.max_err <= 1e-4);
  CHECK(attn::attention_op_from_string("mlp-mixer") == attn::AttentionOp::kMlpMixer);
  CHECK_THROWS(attn::attention_op_from_string("sparse"));
}

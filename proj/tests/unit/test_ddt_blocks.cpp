// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ddt/blocks.hpp"
#include "ddt/flops.hpp"
#include "oracles.hpp"

using namespace ddt;
using blocks::BlockConfig;
using blocks::BranchMode;
using oracle::random;

namespace {

Tensor<double> iota(const Shape& s) {
  Tensor<double> t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  return t;
}

BlockConfig small(BranchMode mode = BranchMode::kDual) {
  BlockConfig cfg;
  cfg.channels = 8;
  cfg.heads = 2;
  cfg.p_loc = 4;
  cfg.p_glob = 4;
  cfg.branch = mode;
  return cfg;
}

}  // namespace

TEST_CASE("local partition") {
  Tape<double> tape;
  const auto x = iota({1, 1, 4, 4});
  const auto p = blocks::partition_local(tape.constant(x), 2).value();
  REQUIRE(p.shape() == Shape{4, 1, 2, 2});
  // patch (0, 1): rows 0-1, columns 2-3
  CHECK(p.at({1, 0, 0, 0}) == 2);
  CHECK(p.at({1, 0, 0, 1}) == 3);
  CHECK(p.at({1, 0, 1, 0}) == 6);
  CHECK(p.at({1, 0, 1, 1}) == 7);
  CHECK(p.at({2, 0, 0, 0}) == 8);
}

TEST_CASE("global partition") {
  Tape<double> tape;
  const auto x = iota({1, 1, 4, 4});
  const auto g = blocks::partition_global(tape.constant(x), 2).value();
  REQUIRE(g.shape() == Shape{4, 1, 2, 2});
  // group (0, 0) collects (0,0), (0,2), (2,0), (2,2)
  CHECK(g.at({0, 0, 0, 0}) == 0);
  CHECK(g.at({0, 0, 0, 1}) == 2);
  CHECK(g.at({0, 0, 1, 0}) == 8);
  CHECK(g.at({0, 0, 1, 1}) == 10);

  // Each group is a strided (dilated) sub-lattice of the image.
  const auto y = random({2, 3, 8, 12}, 1);
  const auto gy = blocks::partition_global(tape.constant(y), 4).value();
  REQUIRE(gy.shape() == Shape{2 * 2 * 3, 3, 4, 4});
  for (std::int64_t n = 0; n < 2; ++n)
    for (std::int64_t r = 0; r < 2; ++r)
      for (std::int64_t s = 0; s < 3; ++s)
        for (std::int64_t c = 0; c < 3; ++c)
          for (std::int64_t a = 0; a < 4; ++a)
            for (std::int64_t b = 0; b < 4; ++b)
              CHECK(gy.at({(n * 2 + r) * 3 + s, c, a, b}) == y.at({n, c, a * 2 + r, b * 3 + s}));
}

TEST_CASE("partition round trips") {
  Tape<double> tape;
  const auto x = random({2, 3, 8, 12}, 2);
  for (int p : {1, 2, 4}) {
    const auto v = tape.constant(x);
    CHECK(blocks::unpartition_local(blocks::partition_local(v, p), p, 8, 12).value() == x);
    CHECK(blocks::unpartition_global(blocks::partition_global(v, p), p, 8, 12).value() == x);
  }
  CHECK_THROWS_AS(blocks::partition_local(tape.constant(x), 5), std::invalid_argument);
  CHECK_THROWS_AS(blocks::partition_global(tape.constant(x), 3), std::invalid_argument);

  const auto r = oracle::finite_difference(
      [](Tape<double>&, const std::vector<oracle::Var>& v) {
        return oracle::weigh(blocks::partition_global(blocks::partition_local(v[0], 2), 1));
      },
      {random({1, 2, 4, 4}, 3)}, {});
  CHECK(r.max_err <= 1e-6);
}

TEST_CASE("dual-branch attention") {
  nn::Rng rng(1);
  Tape<double> tape;
  const auto x = random({1, 8, 16, 16}, 4);

  SUBCASE("shape") {
    blocks::DualBranchAttention<double> dda(small());
    dda.init(rng);
    CHECK(dda.forward(tape, tape.constant(x)).shape() == Shape{1, 8, 16, 16});
    CHECK(dda.first.kind() == blocks::PartitionKind::kLocal);
    CHECK(dda.second.kind() == blocks::PartitionKind::kGlobal);
  }
  SUBCASE("zero fuse gives zero output") {
    blocks::DualBranchAttention<double> dda(small());
    dda.init(rng);
    dda.fuse.zero();
    for (double v : dda.forward(tape, tape.constant(x)).value().data()) CHECK(v == 0.0);
  }
  SUBCASE("branch modes") {
    for (auto mode : {BranchMode::kDual, BranchMode::kLocal, BranchMode::kGlobal}) {
      blocks::DualBranchAttention<double> dda(small(mode));
      CHECK(dda.parameter_count() == blocks::DualBranchAttention<double>(small()).parameter_count());
      const auto expect = mode == BranchMode::kGlobal ? blocks::PartitionKind::kGlobal : blocks::PartitionKind::kLocal;
      CHECK(dda.first.kind() == expect);
    }
    CHECK(blocks::branch_mode_from_string("global") == BranchMode::kGlobal);
    CHECK(blocks::to_string(BranchMode::kDual) == "dual");
    CHECK_THROWS(blocks::branch_mode_from_string("both"));
  }
  SUBCASE("receptive field of the single-branch ablations") {
    // Perturbing pixel (0, 0) may only change the outputs it shares a partition with.
    auto xp = x;
    xp.at({0, 3, 0, 0}) += 1.0;
    for (auto mode : {BranchMode::kLocal, BranchMode::kGlobal}) {
      blocks::DualBranchAttention<double> dda(small(mode));
      dda.init(rng);
      const auto a = dda.forward(tape, tape.constant(x)).value();
      const auto b = dda.forward(tape, tape.constant(xp)).value();
      int changed_inside = 0;
      for (std::int64_t i = 0; i < 16; ++i)
        for (std::int64_t j = 0; j < 16; ++j) {
          const bool inside = mode == BranchMode::kLocal ? (i < 4 && j < 4) : (i % 4 == 0 && j % 4 == 0);
          double diff = 0;
          for (std::int64_t c = 0; c < 8; ++c) diff = std::max(diff, std::abs(a.at({0, c, i, j}) - b.at({0, c, i, j})));
          if (inside) {
            changed_inside += diff > 0;
          } else {
            CHECK(diff == 0.0);
          }
        }
      CHECK(changed_inside > 1);
    }
  }
}

TEST_CASE("depthwise feed-forward") {
  nn::Rng rng(2);
  blocks::DepthwiseFFN<double> ffn(4, 2);
  CHECK(ffn.parameter_count() == (4 * 8 + 8) + (8 * 9 + 8) + (8 * 4 + 4));
  ffn.init(rng, true);
  Tape<double> tape;
  for (double v : ffn.forward(tape, tape.constant(random({1, 4, 5, 5}, 5))).value().data()) CHECK(v == 0.0);

  ffn.init(rng);
  std::vector<Parameter<double>*> params;
  ffn.visit("ffn", [&](const std::string&, Parameter<double>& p) { params.push_back(&p); });
  const auto r = oracle::finite_difference(
      [&](Tape<double>& t, const std::vector<oracle::Var>& v) { return oracle::weigh(ffn.forward(t, v[0])); },
      {random({1, 4, 5, 5}, 6)}, params, 60);
  CHECK(r.max_err <= 1e-5);
}

TEST_CASE("transformer block") {
  BlockConfig cfg = small();
  cfg.channels = 4;
  cfg.p_loc = 4;
  cfg.p_glob = 2;
  blocks::TransformerBlock<double> block(cfg);
  nn::Rng rng(3);
  block.init(rng);
  const auto x = random({1, 4, 8, 8}, 7);
  Tape<double> tape;

  SUBCASE("identity when both residual branches are silenced") {
    block.attention.fuse.zero();
    block.ffn.project_out.zero();
    CHECK(block.forward(tape, tape.constant(x)).value() == x);
  }
  SUBCASE("gradient") {
    block.attention.first.mixer().init(rng);
    std::vector<Parameter<double>*> params;
    block.visit("b", [&](const std::string&, Parameter<double>& p) { params.push_back(&p); });
    const auto r = oracle::finite_difference(
        [&](Tape<double>& t, const std::vector<oracle::Var>& v) { return oracle::weigh(block.forward(t, v[0])); }, {x},
        params, 120);
    CHECK(r.max_err <= 1e-4);
  }
  SUBCASE("parameter names") {
    std::vector<std::string> names;
    block.visit("enc", [&](const std::string& n, Parameter<double>&) { names.push_back(n); });
    CHECK(names.front() == "enc.norm1.gamma");
    CHECK(std::find(names.begin(), names.end(), "enc.attn.branch1.offset_proj.weight") != names.end());
    CHECK(std::find(names.begin(), names.end(), "enc.ffn.dw.weight") != names.end());
  }
  CHECK_THROWS_AS(block.forward(tape, tape.constant(Tensor<double>(Shape{1, 4, 6, 6}))), std::invalid_argument);
}

TEST_CASE("block cost grows linearly with the pixel count") {
  BlockConfig cfg = small();
  blocks::TransformerBlock<float> block(cfg);
  nn::Rng rng(4);
  block.init(rng);
  std::vector<double> per_pixel;
  for (std::int64_t h : {16, 32, 64}) {
    Tape<float> tape;
    FlopCounter counter;
    block.forward(tape, tape.constant(Tensor<float>(Shape{1, 8, h, h}, 0.5f)));
    per_pixel.push_back(static_cast<double>(counter.flops()) / static_cast<double>(h * h));
  }
  CHECK(per_pixel[1] == doctest::Approx(per_pixel[0]).epsilon(0.05));
  CHECK(per_pixel[2] == doctest::Approx(per_pixel[0]).epsilon(0.05));
}

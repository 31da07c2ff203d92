// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "ddt/checkpoint.hpp"
#include "ddt/cost_model.hpp"
#include "ddt/network.hpp"
#include "oracles.hpp"

using namespace ddt;
using net::NetworkConfig;
using oracle::random;
namespace fs = std::filesystem;

namespace {

std::vector<double> flatten(net::Network<double>& m) {
  std::vector<double> out;
  m.visit([&](const std::string&, Parameter<double>& p) { out.insert(out.end(), p.value.data().begin(), p.value.data().end()); });
  return out;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "ddt_network_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("config") {
  const auto toy = NetworkConfig::toy();
  CHECK(toy.required_multiple() == 32);
  CHECK(NetworkConfig::full().required_multiple() == 64);
  CHECK(NetworkConfig::from_json(toy.to_json()) == toy);
  auto j = toy.to_json();
  j["channels"] = 4;
  CHECK_THROWS(NetworkConfig::from_json(j));
  auto bad = toy;
  bad.heads[1] = 3;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("initialization is deterministic") {
  const auto cfg = NetworkConfig::toy();
  auto a = net::build<double>(cfg, 5);
  auto b = net::build<double>(cfg, 5);
  auto c = net::build<double>(cfg, 6);
  CHECK(flatten(a) == flatten(b));
  CHECK(flatten(a) != flatten(c));
}

TEST_CASE("toy network forward") {
  auto model = net::build<double>(NetworkConfig::toy(), 1);
  const auto x = random({2, 3, 32, 32}, 1, 0, 1);
  Tape<double> tape;
  net::ForwardTrace trace;

  SUBCASE("zero-initialized output head is the identity") {
    CHECK(model.forward(tape, tape.constant(x), &trace).value() == x);
    CHECK(trace.encoder == std::vector<Shape>{{2, 8, 32, 32}, {2, 16, 16, 16}, {2, 32, 8, 8}});
    CHECK(trace.bottleneck == Shape{2, 64, 4, 4});
    CHECK(trace.skip_concat == std::vector<Shape>{{2, 64, 8, 8}, {2, 32, 16, 16}, {2, 16, 32, 32}});
    CHECK(trace.decoder == std::vector<Shape>{{2, 32, 8, 8}, {2, 16, 16, 16}, {2, 16, 32, 32}});
    CHECK(trace.refinement == Shape{2, 16, 32, 32});
  }
  SUBCASE("random head gives a finite, non-trivial residual") {
    nn::Rng rng(2);
    model.output_proj.init(rng);
    const auto y = model.forward(tape, tape.constant(x)).value();
    double diff = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      REQUIRE(std::isfinite(y[i]));
      diff = std::max(diff, std::abs(y[i] - x[i]));
    }
    CHECK(diff > 0);
  }
  CHECK_THROWS_AS(model.forward(tape, tape.constant(Tensor<double>(Shape{1, 3, 48, 32}))), std::invalid_argument);
  CHECK_THROWS_AS(model.forward(tape, tape.constant(Tensor<double>(Shape{1, 1, 32, 32}))), std::invalid_argument);
}

TEST_CASE("parameter count") {
  nn::Conv2d<double> tiny(2, 3, 1, {}, true);
  CHECK(tiny.parameter_count() == 9);

  const auto toy = NetworkConfig::toy();
  CHECK(net::Network<float>(toy).parameter_count() == cost::count_params(toy));

  const auto full = NetworkConfig::full();
  const std::int64_t n = net::Network<float>(full).parameter_count();
  CHECK(n == cost::count_params(full));
  CHECK(static_cast<double>(n) == doctest::Approx(18.4e6).epsilon(0.15));

  std::size_t names = 0, unique = 0;
  std::set<std::string> seen;
  auto model = net::Network<double>(toy);
  model.visit([&](const std::string& name, Parameter<double>&) {
    ++names;
    unique += seen.insert(name).second;
  });
  CHECK(names == unique);
  CHECK(seen.count("decoder0.0.attn.fuse.weight") == 1);
  CHECK(seen.count("fuse0.weight") == 0);
}

TEST_CASE("reflect padding") {
  CHECK(net::reflect_index(-1, 5) == 1);
  CHECK(net::reflect_index(5, 5) == 3);
  CHECK(net::reflect_index(9, 5) == 1);
  CHECK(net::reflect_index(3, 1) == 0);
  const auto x = random({1, 1, 3, 2}, 3);
  const auto p = net::reflect_pad(x, 2, 1);
  REQUIRE(p.shape() == Shape{1, 1, 5, 3});
  CHECK(p.at({0, 0, 3, 0}) == x.at({0, 0, 1, 0}));
  CHECK(p.at({0, 0, 4, 2}) == x.at({0, 0, 0, 0}));

  auto model = net::build<double>(NetworkConfig::toy(), 1);
  const auto img = random({1, 3, 33, 45}, 4, 0, 1);
  CHECK(net::infer(model, img) == img);
  nn::Rng rng(3);
  model.output_proj.init(rng);
  CHECK(net::infer(model, img).shape() == img.shape());
}

TEST_CASE("checkpoint") {
  auto cfg = NetworkConfig::toy();
  cfg.dtype = DType::kF64;
  auto model = net::build<double>(cfg, 11);
  nn::Rng rng(1);
  model.output_proj.init(rng);
  const auto path = scratch("roundtrip.ckpt");
  net::TrainState state;
  state.iteration = 42;
  state.seed = 7;
  state.extra = {{"note", "x"}};
  const auto aux = random({3, 2}, 5);
  net::save_checkpoint<double>(path.string(), model, state, {{"adam.m/foo", &aux}});

  SUBCASE("round trip is bit exact") {
    net::TrainState back;
    auto loaded = net::load_model<double>(path.string(), &back);
    CHECK(flatten(loaded) == flatten(model));
    CHECK(loaded.config() == cfg);
    CHECK(back.iteration == 42);
    CHECK(back.seed == 7);
    CHECK(back.extra["note"] == "x");
    CHECK(net::read_checkpoint<double>(path.string()).tensors.at("adam.m/foo") == aux);
    CHECK(net::read_checkpoint_header(path.string())["config"]["base_channels"] == 8);
  }
  SUBCASE("wrong dtype") {
    CHECK_THROWS_AS(net::read_checkpoint<float>(path.string()), net::CheckpointShapeError);
  }
  SUBCASE("truncated file") {
    const auto bytes = slurp(path);
    const auto bad = scratch("truncated.ckpt");
    for (std::size_t keep : {std::size_t{0}, std::size_t{5}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
      spit(bad, bytes.substr(0, keep));
      CHECK_THROWS_AS(net::read_checkpoint<double>(bad.string()), net::CheckpointCorruptError);
    }
  }
  SUBCASE("flipped payload byte") {
    auto bytes = slurp(path);
    bytes[bytes.size() - 3] ^= 0x10;
    const auto bad = scratch("flipped.ckpt");
    spit(bad, bytes);
    CHECK_THROWS_AS(net::read_checkpoint<double>(bad.string()), net::CheckpointCorruptError);
  }
  SUBCASE("unsupported version") {
    auto bytes = slurp(path);
    bytes[8] = static_cast<char>(99);
    const auto bad = scratch("version.ckpt");
    spit(bad, bytes);
    CHECK_THROWS_AS(net::read_checkpoint<double>(bad.string()), net::CheckpointVersionError);
  }
  SUBCASE("different architecture") {
    auto other_cfg = cfg;
    other_cfg.base_channels = 16;
    auto other = net::build<double>(other_cfg, 1);
    const auto before = flatten(other);
    const auto ckpt = net::read_checkpoint<double>(path.string());
    CHECK_THROWS_AS(net::load_parameters(ckpt, other), net::CheckpointShapeError);
    CHECK(flatten(other) == before);
  }
  SUBCASE("extra tensors may not shadow parameters") {
    const auto& w = model.output_proj.weight.value;
    CHECK_THROWS(net::save_checkpoint<double>(scratch("shadow.ckpt").string(), model, state, {{"output_proj.weight", &w}}));
  }
  CHECK_THROWS_AS(net::read_checkpoint<double>(scratch("missing.ckpt").string()), net::CheckpointError);
}

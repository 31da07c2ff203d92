// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: train, denoise, eval, flops, gradcheck.
// Exit codes: 0 ok, 1 other failure, 2 configuration error, 3 numeric failure.

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ddt/checkpoint.hpp"
#include "ddt/cost_model.hpp"
#include "ddt/harness/config.hpp"
#include "ddt/harness/gradcheck.hpp"
#include "ddt/harness/train.hpp"

namespace {

using namespace ddt;

constexpr int kConfigError = 2;
constexpr int kNumericError = 3;

harness::RunConfig load_config(const std::string& path) {
  harness::RunConfig cfg = harness::load_run_config(path);
  if (const char* env = std::getenv("DDT_SEED")) {
    try {
      std::size_t used = 0;
      cfg.train.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw harness::ConfigError("DDT_SEED must be a non-negative integer, got '" + std::string(env) + "'");
    }
  }
  return cfg;
}

std::pair<std::int64_t, std::int64_t> parse_resolution(const std::string& s) {
  const auto x = s.find_first_of("xX");
  try {
    if (x != std::string::npos) return {std::stoll(s.substr(0, x)), std::stoll(s.substr(x + 1))};
  } catch (const std::exception&) {
  }
  throw harness::ConfigError("--resolution must look like 256x256, got '" + s + "'");
}

std::vector<double> parse_sigmas(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw harness::ConfigError("--sigma expects a comma-separated list of numbers, got '" + s + "'");
    }
  }
  if (out.empty()) throw harness::ConfigError("--sigma is empty");
  return out;
}

template <typename T>
int run_train(const harness::RunConfig& cfg, const std::string& out, bool quiet) {
  const auto images = harness::load_training_images(cfg.data);
  const auto result = harness::train<T>(cfg, images, out, quiet ? nullptr : &std::cout);
  std::cout << "final checkpoint: " << result.final_checkpoint << "\n";
  return 0;
}

bool checkpoint_is_f64(const std::string& path) {
  const auto header = net::read_checkpoint_header(path);
  return header.at("config").value("dtype", "f32") == "f64";
}

template <typename T>
int run_denoise(const std::string& ckpt, const std::string& in, const std::string& out) {
  net::Network<T> model = net::load_model<T>(ckpt);
  harness::write_pnm(out, harness::denoise_image(model, harness::read_pnm(in)));
  return 0;
}

template <typename T>
int run_eval(const std::string& ckpt, const std::vector<double>& sigmas, const std::string& dir) {
  net::Network<T> model = net::load_model<T>(ckpt);
  std::vector<Tensor<float>> images;
  for (const auto& path : harness::list_images(dir)) images.push_back(harness::read_pnm(path));
  harness::write_eval_csv(std::cout, harness::evaluate(model, images, sigmas));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-branch deformable transformer denoiser"};
  app.require_subcommand(1);

  std::string config, out, ckpt, in, testdir, sigma = "15,25,50", resolution = "256x256", module = "all";
  bool quiet = false, csv = false;

  auto* train = app.add_subcommand("train", "Train a model from a TOML config");
  train->add_option("--config", config, "TOML run configuration")->required();
  train->add_option("--out", out, "Output directory for metrics and checkpoints")->required();
  train->add_flag("--quiet", quiet, "Do not echo metric rows");

  auto* denoise = app.add_subcommand("denoise", "Denoise one PPM/PGM image");
  denoise->add_option("--ckpt", ckpt, "Checkpoint file")->required();
  denoise->add_option("--in", in, "Noisy input image")->required();
  denoise->add_option("--out", out, "Output image")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate PSNR/SSIM on synthetic noise over a test directory");
  eval->add_option("--ckpt", ckpt, "Checkpoint file")->required();
  eval->add_option("--sigma", sigma, "Comma-separated noise levels on the 0-255 scale");
  eval->add_option("--testdir", testdir, "Directory of clean PPM/PGM images")->required();

  auto* flops = app.add_subcommand("flops", "Analytic FLOPs and parameter report");
  flops->add_option("--config", config, "TOML run configuration")->required();
  flops->add_option("--resolution", resolution, "Input resolution HxW");
  flops->add_flag("--csv", csv, "Emit CSV instead of a table");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--module", module, "ops, nn, attention, blocks, network or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*train) {
      const auto cfg = load_config(config);
      return cfg.network.dtype == DType::kF64 ? run_train<double>(cfg, out, quiet) : run_train<float>(cfg, out, quiet);
    }
    if (*denoise) return checkpoint_is_f64(ckpt) ? run_denoise<double>(ckpt, in, out) : run_denoise<float>(ckpt, in, out);
    if (*eval) {
      const auto sigmas = parse_sigmas(sigma);
      return checkpoint_is_f64(ckpt) ? run_eval<double>(ckpt, sigmas, testdir) : run_eval<float>(ckpt, sigmas, testdir);
    }
    if (*flops) {
      const auto cfg = load_config(config);
      const auto [h, w] = parse_resolution(resolution);
      const auto report = cost::cost_network(cfg.network, h, w);
      if (csv) {
        cost::write_csv(std::cout, report);
      } else {
        cost::write_table(std::cout, report);
      }
      return 0;
    }
    if (*gradcheck) {
      bool ok = true;
      for (const auto& r : harness::run_gradcheck(module)) {
        std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << "  max rel err " << r.max_rel_err << " (tol "
                  << r.tolerance << ", " << r.checked << " entries)\n";
        ok = ok && r.passed();
      }
      return ok ? 0 : kNumericError;
    }
  } catch (const harness::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const harness::NumericError& e) {
    std::cerr << "error: " << e.what() << " (diagnostic checkpoint: " << e.checkpoint << ")\n";
    return kNumericError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

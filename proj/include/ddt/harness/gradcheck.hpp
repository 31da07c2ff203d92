// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference checks of the analytic gradients, in double
// precision. Used by the `gradcheck` CLI command.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ddt/autodiff.hpp"

namespace ddt::harness {

struct GradCheckReport {
  std::string name;
  double max_rel_err = 0;
  std::size_t checked = 0;
  double tolerance = 0;
  bool passed() const { return max_rel_err <= tolerance; }
};

// Builds a scalar loss from differentiable inputs on a fresh tape.
using LossFn = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

// Compares d loss / d input and d loss / d param against central differences
// with step `eps`, sampling at most `samples` entries per tensor. The error
// metric is |g - n| / max(|g|, |n|, 1e-4).
GradCheckReport check_gradients(const std::string& name, const LossFn& loss, std::vector<Tensor<double>> inputs,
                                const std::vector<Parameter<double>*>& params, double tolerance,
                                std::size_t samples = 24, double eps = 1e-5, std::uint64_t seed = 7);

// Module suites: "ops", "nn", "attention", "blocks", "network" or "all".
std::vector<GradCheckReport> run_gradcheck(const std::string& module, std::uint64_t seed = 7);

}  // namespace ddt::harness

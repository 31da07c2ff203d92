// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Analytic cost model. Costs are exact rationals counted in multiply-
// accumulates (one MAC = 1), the unit in which the closed forms below are
// written. The empirical counter in flops.hpp counts 2 per MAC instead.

#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ddt/network.hpp"

namespace ddt::cost {

using Rational = boost::multiprecision::cpp_rational;

struct CostQuery {
  std::int64_t h = 0, w = 0, c = 0;
  std::int64_t p = 8;  // patch side
  std::int64_t gamma = 2;
};

struct SubpartCosts {
  Rational ps, q, k, v, o, dp, dm, mha;
  Rational sum() const { return ps + q + k + v + o + dp + dm + mha; }
};

struct CostComponent {
  std::string name;
  Rational macs;
  std::int64_t params = 0;
};

struct CostReport {
  std::vector<CostComponent> components;  // in insertion order
  Rational total() const;
  std::int64_t total_params() const;
  const CostComponent& at(const std::string& name) const;
  void add(std::string name, Rational macs, std::int64_t params = 0);
};

// Two 1x1 convolutions of the block: 2HWC^2.
Rational cost_conv(const CostQuery& q);
SubpartCosts cost_subparts(const CostQuery& q);
// Closed form of one deformable attention over an H x W map; asserts that it
// equals the sum of the sub-parts.
Rational cost_da(const CostQuery& q);
Rational cost_da_closed_form(const CostQuery& q);
// One branch over an H x W map cut into p x p partitions; asserts that the
// patch sum equals the closed form.
Rational cost_branch(const CostQuery& q);
Rational cost_branch_closed_form(const CostQuery& q);
// Components "conv", "local_branch", "global_branch"; the total is checked
// against the closed form.
CostReport cost_dda(const CostQuery& q);
Rational cost_dda_closed_form(const CostQuery& q);

// Whole-network estimate: DDA terms from cost_dda (or the ablation operator's
// own cost) plus separately labelled terms the block formulas omit (sampling,
// DFFN, resampling, input/output projections).
CostReport cost_network(const net::NetworkConfig& cfg, std::int64_t h, std::int64_t w);
std::int64_t count_params(const net::NetworkConfig& cfg);

// Counted FLOPs (2 per MAC) of one forward pass on a zero input of `shape`.
template <typename T>
std::uint64_t empirical_flops(net::Network<T>& model, const Shape& shape);

// Renders an integral rational exactly, anything else with 3 decimals.
std::string render(const Rational& r);
void write_table(std::ostream& os, const CostReport& report);
void write_csv(std::ostream& os, const CostReport& report);

}  // namespace ddt::cost

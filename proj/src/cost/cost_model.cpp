// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddt/cost_model.hpp"

#include <stdexcept>

#include "ddt/flops.hpp"

namespace ddt::cost {
namespace {

Rational R(std::int64_t v) { return Rational(v); }

void check_query(const CostQuery& q) {
  if (q.h < 0 || q.w < 0 || q.c < 0 || q.p < 1 || q.gamma < 1) {
    throw std::invalid_argument("cost: dimensions must be non-negative and p, gamma positive");
  }
}

}  // namespace

Rational CostReport::total() const {
  Rational t = 0;
  for (const auto& c : components) t += c.macs;
  return t;
}

std::int64_t CostReport::total_params() const {
  std::int64_t t = 0;
  for (const auto& c : components) t += c.params;
  return t;
}

const CostComponent& CostReport::at(const std::string& name) const {
  for (const auto& c : components) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("cost report has no component '" + name + "'");
}

void CostReport::add(std::string name, Rational macs, std::int64_t params) {
  for (auto& c : components) {
    if (c.name == name) {
      c.macs += macs;
      c.params += params;
      return;
    }
  }
  components.push_back({std::move(name), std::move(macs), params});
}

Rational cost_conv(const CostQuery& q) {
  check_query(q);
  return 2 * R(q.h) * R(q.w) * R(q.c) * R(q.c);
}

SubpartCosts cost_subparts(const CostQuery& q) {
  check_query(q);
  const Rational hw = R(q.h) * R(q.w), c = R(q.c);
  const Rational g2 = R(q.gamma) * R(q.gamma);
  const Rational kv_tokens = hw / g2;
  SubpartCosts s;
  s.ps = 25 * kv_tokens * c + 3 * kv_tokens * c;  // 5x5 depthwise, then 1x1 to 3 channels
  s.q = hw * c * c;
  s.k = kv_tokens * c * c;
  s.v = kv_tokens * c * c;
  s.o = hw * c * c;
  s.dp = 2 * kv_tokens;
  s.dm = kv_tokens * c;
  s.mha = 2 * hw * hw * c / g2;
  return s;
}

Rational cost_da_closed_form(const CostQuery& q) {
  check_query(q);
  const Rational hw = R(q.h) * R(q.w), c = R(q.c);
  const Rational inv_g2 = Rational(1) / (R(q.gamma) * R(q.gamma));
  return 2 * inv_g2 * hw * hw * c + (2 + 2 * inv_g2) * hw * c * c + 29 * inv_g2 * hw * c + 2 * inv_g2 * hw;
}

Rational cost_da(const CostQuery& q) {
  const Rational closed = cost_da_closed_form(q);
  if (closed != cost_subparts(q).sum()) {
    throw std::logic_error("cost_da: closed form disagrees with the sum of its sub-parts");
  }
  return closed;
}

Rational cost_branch_closed_form(const CostQuery& q) {
  check_query(q);
  const Rational hw = R(q.h) * R(q.w), c = R(q.c), p2 = R(q.p) * R(q.p);
  const Rational inv_g2 = Rational(1) / (R(q.gamma) * R(q.gamma));
  return 2 * inv_g2 * hw * p2 * c + (2 + 2 * inv_g2) * hw * c * c + 29 * inv_g2 * hw * c + 2 * inv_g2 * hw;
}

Rational cost_branch(const CostQuery& q) {
  check_query(q);
  if (q.h % q.p != 0 || q.w % q.p != 0) {
    throw std::invalid_argument("cost_branch: " + std::to_string(q.h) + "x" + std::to_string(q.w) +
                                " not divisible by p=" + std::to_string(q.p));
  }
  const Rational patches = R(q.h / q.p) * R(q.w / q.p);
  const Rational sum = patches * cost_da(CostQuery{q.p, q.p, q.c, q.p, q.gamma});
  if (sum != cost_branch_closed_form(q)) {
    throw std::logic_error("cost_branch: patch sum disagrees with the closed form");
  }
  return sum;
}

Rational cost_dda_closed_form(const CostQuery& q) {
  check_query(q);
  const Rational hw = R(q.h) * R(q.w), c = R(q.c), p2 = R(q.p) * R(q.p);
  const Rational inv_g2 = Rational(1) / (R(q.gamma) * R(q.gamma));
  return (8 + 4 * inv_g2) * hw * c * c + 4 * inv_g2 * hw * p2 * c + 58 * inv_g2 * hw * c + 4 * inv_g2 * hw;
}

CostReport cost_dda(const CostQuery& q) {
  CostReport r;
  r.add("conv", 2 * cost_conv(q));
  r.add("local_branch", cost_branch(q));
  r.add("global_branch", cost_branch(q));
  if (r.total() != cost_dda_closed_form(q)) {
    throw std::logic_error("cost_dda: component sum disagrees with the closed form");
  }
  return r;
}

template <typename T>
std::uint64_t empirical_flops(net::Network<T>& model, const Shape& shape) {
  Tape<T> tape;
  const Var<T> x = tape.constant(Tensor<T>(shape));
  FlopCounter counter;
  model.forward(tape, x);
  return counter.flops();
}

template std::uint64_t empirical_flops<float>(net::Network<float>&, const Shape&);
template std::uint64_t empirical_flops<double>(net::Network<double>&, const Shape&);

}  // namespace ddt::cost

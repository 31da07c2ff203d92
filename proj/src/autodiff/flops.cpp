// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddt/flops.hpp"

namespace ddt {
namespace {
thread_local FlopCounter* active_counter = nullptr;
}  // namespace

FlopCounter::FlopCounter() : previous_(active_counter) { active_counter = this; }

FlopCounter::~FlopCounter() { active_counter = previous_; }

void FlopCounter::add(std::uint64_t n) noexcept {
  if (active_counter) active_counter->flops_ += n;
}

}  // namespace ddt

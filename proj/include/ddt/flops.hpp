// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace ddt {

// Scoped operation counter. While alive it receives every count reported by
// forward kernels on the constructing thread; nested counters shadow outer ones.
// One multiply-accumulate is reported as 2 FLOPs, any other arithmetic op as 1.
class FlopCounter {
 public:
  FlopCounter();
  ~FlopCounter();
  FlopCounter(const FlopCounter&) = delete;
  FlopCounter& operator=(const FlopCounter&) = delete;

  std::uint64_t flops() const noexcept { return flops_; }
  void reset() noexcept { flops_ = 0; }

  static void add(std::uint64_t n) noexcept;

 private:
  std::uint64_t flops_ = 0;
  FlopCounter* previous_ = nullptr;
};

inline void count_macs(std::uint64_t macs) noexcept { FlopCounter::add(2 * macs); }
inline void count_flops(std::uint64_t ops) noexcept { FlopCounter::add(ops); }

}  // namespace ddt

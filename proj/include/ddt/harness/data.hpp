// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0
//
// Clean-image sources, additive Gaussian noise and dihedral augmentation.
// Images are [C, H, W] tensors with values in [0, 1].

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddt/tensor.hpp"

namespace ddt::harness {

// Deterministic splitmix64 mixing of a seed with up to three indices.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

// Piecewise-smooth RGB scene: a colour gradient, random rectangles and disks,
// and a band-limited sinusoidal texture.
Tensor<float> procedural_image(std::int64_t h, std::int64_t w, std::uint64_t seed);

struct SamplePair {
  Tensor<float> clean;
  Tensor<float> noisy;  // never clamped
  double sigma = 0;     // on the 0-255 scale
};

// noisy = clean + N(0, (sigma/255)^2), i.i.d. per element.
SamplePair synth_pair(const Tensor<float>& clean, double sigma, std::uint64_t seed);

// Element k of the dihedral group of the square: k & 3 quarter turns
// (counter-clockwise) applied after a horizontal flip when k >= 4.
// Works on [C, H, W]; odd rotations swap H and W.
Tensor<float> dihedral(const Tensor<float>& img, int k);

Tensor<float> crop(const Tensor<float>& img, std::int64_t top, std::int64_t left, std::int64_t h, std::int64_t w);

// Stacks equally shaped [C, H, W] images into [N, C, H, W].
Tensor<float> stack(const std::vector<Tensor<float>>& images);

// Binary PNM: P5 (grey) and P6 (RGB), maxval up to 65535.
Tensor<float> read_pnm(const std::string& path);
// Writes P5 for one channel and P6 for three; values are clamped and rounded.
void write_pnm(const std::string& path, const Tensor<float>& img, int maxval = 255);

// All .ppm/.pgm/.pnm files in a directory, sorted by name.
std::vector<std::string> list_images(const std::string& dir);

}  // namespace ddt::harness

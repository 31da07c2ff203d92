// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddt/harness/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "ddt/checkpoint.hpp"
#include "ddt/harness/metrics.hpp"
#include "ddt/harness/optim.hpp"

namespace ddt::harness {
namespace {

template <typename T>
Tensor<T> to_dtype(const Tensor<float>& t) {
  if constexpr (std::is_same_v<T, float>) {
    return t;
  } else {
    return t.template cast<T>();
  }
}

std::string format_row(const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%lld,%.9g,%.6f,%.6f,%.9g,%.3f", static_cast<long long>(r.iteration), r.loss, r.psnr,
                r.ssim, r.lr, r.wall_time_s);
  return buf;
}

struct Batch {
  Tensor<float> noisy, clean;
};

}  // namespace

std::vector<Tensor<float>> load_training_images(const DataConfig& data) {
  std::vector<Tensor<float>> images;
  if (!data.train_dir.empty()) {
    for (const auto& path : list_images(data.train_dir)) {
      Tensor<float> img = read_pnm(path);
      if (img.dim(0) == 1) img = stack({img, img, img}).reshape({3, img.dim(1), img.dim(2)});
      images.push_back(std::move(img));
    }
    if (images.empty()) throw ConfigError("config: no PNM images in '" + data.train_dir + "'");
    return images;
  }
  for (int i = 0; i < data.synthetic_images; ++i) {
    images.push_back(procedural_image(data.synthetic_size, data.synthetic_size, mix_seed(data.synthetic_seed, i)));
  }
  return images;
}

template <typename T>
TrainResult train(const RunConfig& cfg, const std::vector<Tensor<float>>& images, const std::string& out_dir,
                  std::ostream* progress) {
  cfg.validate();
  net::Network<T> model = net::build<T>(cfg.network, cfg.train.seed);
  return train_model(model, cfg, images, out_dir, progress);
}

template <typename T>
TrainResult train_model(net::Network<T>& model, const RunConfig& cfg, const std::vector<Tensor<float>>& images,
                        const std::string& out_dir, std::ostream* progress) {
  cfg.validate();
  if (images.empty()) throw std::invalid_argument("train: empty dataset");
  const TrainConfig& tc = cfg.train;
  for (const auto& img : images) {
    const std::int64_t largest = tc.patch_schedule.back().second;
    if (img.rank() != 3 || img.dim(0) != 3 || img.dim(1) < largest || img.dim(2) < largest) {
      throw std::invalid_argument("train: every image must be [3, H, W] with H, W >= " + std::to_string(largest) +
                                  ", got " + shape_str(img.shape()));
    }
  }
  std::filesystem::create_directories(out_dir);
  const std::string dir = out_dir + "/";

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto draw_sigma = [&](std::mt19937_64& rng) {
    return tc.sigma_min == tc.sigma_max ? tc.sigma_min : tc.sigma_min + (tc.sigma_max - tc.sigma_min) * unit(rng);
  };

  // One noisy copy per image when the noise is held fixed.
  std::vector<Tensor<float>> fixed_noisy;
  if (cfg.data.noise == "fixed") {
    for (std::size_t i = 0; i < images.size(); ++i) {
      std::mt19937_64 rng(mix_seed(tc.seed, 0xf1ed, i));
      const double sigma = draw_sigma(rng);
      fixed_noisy.push_back(synth_pair(images[i], sigma, rng()).noisy);
    }
  }

  const auto make_batch = [&](std::int64_t it, std::int64_t side) {
    std::vector<Tensor<float>> noisy, clean;
    for (int b = 0; b < tc.batch_size; ++b) {
      std::mt19937_64 rng(mix_seed(tc.seed, static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(b)));
      const std::size_t idx = std::uniform_int_distribution<std::size_t>(0, images.size() - 1)(rng);
      const Tensor<float>& img = images[idx];
      const std::int64_t top = std::uniform_int_distribution<std::int64_t>(0, img.dim(1) - side)(rng);
      const std::int64_t left = std::uniform_int_distribution<std::int64_t>(0, img.dim(2) - side)(rng);
      const int k = tc.augment ? std::uniform_int_distribution<int>(0, 7)(rng) : 0;
      Tensor<float> c = dihedral(crop(img, top, left, side, side), k);
      if (fixed_noisy.empty()) {
        const double sigma = draw_sigma(rng);
        noisy.push_back(synth_pair(c, sigma, rng()).noisy);
      } else {
        noisy.push_back(dihedral(crop(fixed_noisy[idx], top, left, side, side), k));
      }
      clean.push_back(std::move(c));
    }
    return Batch{stack(noisy), stack(clean)};
  };

  AdamW<T> opt(tc.adam);
  const auto save = [&](const std::string& path, std::int64_t iteration) {
    net::TrainState st;
    st.iteration = static_cast<std::uint64_t>(iteration);
    st.seed = tc.seed;
    st.extra = {{"adam_steps", opt.steps()}};
    net::save_checkpoint(path, model, st, opt.state_tensors());
  };

  std::ofstream csv(dir + "metrics.csv", std::ios::trunc);
  if (!csv) throw std::runtime_error("train: cannot write " + dir + "metrics.csv");
  csv << "iter,loss,psnr,ssim,lr,wall_time_s\n";

  TrainResult result;
  const auto start = std::chrono::steady_clock::now();
  for (std::int64_t it = 0; it < tc.iterations; ++it) {
    const double lr = cosine_lr(it, tc.iterations, tc.lr_init, tc.lr_final);
    const Batch batch = make_batch(it, tc.patch_at(it));

    Tape<T> tape;
    const Var<T> pred = model.forward(tape, tape.constant(to_dtype<T>(batch.noisy)));
    const Var<T> loss = l1_loss(pred, tape.constant(to_dtype<T>(batch.clean)));
    const double loss_value = static_cast<double>(loss.value()[0]);
    if (!std::isfinite(loss_value)) {
      const std::string diag = dir + "diverged.ckpt";
      save(diag, it);
      throw NumericError("train: non-finite loss at iteration " + std::to_string(it), diag);
    }
    tape.backward(loss);
    opt.step([&](const ParamVisitor<T>& fn) { model.visit(fn); }, lr);

    const std::int64_t done = it + 1;
    if (done % tc.log_every == 0 || done == tc.iterations) {
      Tensor<float> out = pred.value().template cast<float>();
      MetricsRow row{done, loss_value, psnr(out, batch.clean), ssim(out, batch.clean), lr, 0.0};
      if (tc.log_wall_time) {
        row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
      csv << format_row(row) << '\n' << std::flush;
      if (progress) *progress << format_row(row) << '\n' << std::flush;
      result.rows.push_back(row);
    }
    if (tc.checkpoint_every > 0 && done % tc.checkpoint_every == 0 && done != tc.iterations) {
      char name[64];
      std::snprintf(name, sizeof name, "iter_%08lld.ckpt", static_cast<long long>(done));
      save(dir + name, done);
    }
  }
  result.final_checkpoint = dir + "final.ckpt";
  save(result.final_checkpoint, tc.iterations);
  return result;
}

template <typename T>
Tensor<float> denoise_image(net::Network<T>& model, const Tensor<float>& img) {
  if (img.rank() != 3 || (img.dim(0) != 1 && img.dim(0) != 3)) {
    throw std::invalid_argument("denoise: expected a 1- or 3-channel image, got " + shape_str(img.shape()));
  }
  const std::int64_t h = img.dim(1), w = img.dim(2);
  const Tensor<float> rgb = img.dim(0) == 3 ? img : stack({img, img, img}).reshape({3, h, w});
  const Tensor<float> out = net::infer(model, to_dtype<T>(rgb.reshape({1, 3, h, w}))).template cast<float>();
  if (img.dim(0) == 3) return out.reshape({3, h, w});
  Tensor<float> grey(Shape{1, h, w});
  for (std::int64_t i = 0; i < h * w; ++i) grey[i] = (out[i] + out[h * w + i] + out[2 * h * w + i]) / 3.0f;
  return grey;
}

template <typename T>
std::vector<EvalRow> evaluate(net::Network<T>& model, const std::vector<Tensor<float>>& images,
                              const std::vector<double>& sigmas, std::uint64_t seed) {
  if (images.empty()) throw std::invalid_argument("evaluate: empty test set");
  std::vector<EvalRow> rows;
  for (const double sigma : sigmas) {
    EvalRow row;
    row.sigma = sigma;
    row.images = images.size();
    for (std::size_t i = 0; i < images.size(); ++i) {
      const SamplePair pair = synth_pair(images[i], sigma, mix_seed(seed, static_cast<std::uint64_t>(sigma * 1000), i));
      const Tensor<float> out = denoise_image(model, pair.noisy);
      row.psnr_noisy += psnr(pair.noisy, pair.clean);
      row.psnr_out += psnr(out, pair.clean);
      row.ssim_noisy += ssim(pair.noisy, pair.clean);
      row.ssim_out += ssim(out, pair.clean);
    }
    const double n = static_cast<double>(images.size());
    row.psnr_noisy /= n;
    row.psnr_out /= n;
    row.ssim_noisy /= n;
    row.ssim_out /= n;
    rows.push_back(row);
  }
  return rows;
}

void write_eval_csv(std::ostream& os, const std::vector<EvalRow>& rows) {
  os << "sigma,images,psnr_noisy,psnr_out,ssim_noisy,ssim_out\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%g,%zu,%.4f,%.4f,%.4f,%.4f", r.sigma, r.images, r.psnr_noisy, r.psnr_out,
                  r.ssim_noisy, r.ssim_out);
    os << buf << '\n';
  }
}

#define DDT_INSTANTIATE_TRAIN(T)                                                                                     \
  template TrainResult train<T>(const RunConfig&, const std::vector<Tensor<float>>&, const std::string&,            \
                                std::ostream*);                                                                     \
  template TrainResult train_model<T>(net::Network<T>&, const RunConfig&, const std::vector<Tensor<float>>&,        \
                                      const std::string&, std::ostream*);                                           \
  template Tensor<float> denoise_image<T>(net::Network<T>&, const Tensor<float>&);                                   \
  template std::vector<EvalRow> evaluate<T>(net::Network<T>&, const std::vector<Tensor<float>>&,                    \
                                            const std::vector<double>&, std::uint64_t);

DDT_INSTANTIATE_TRAIN(float)
DDT_INSTANTIATE_TRAIN(double)

}  // namespace ddt::harness

// Copyright (c) 2026 The ddt-denoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddt/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

namespace ddt::net {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'D', 'D', 'T', 'C', 'K', 'P', 'T', '\0'};

std::uint64_t fnv1a(const char* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

template <typename U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

template <typename U>
U get(const std::string& in, std::size_t at) {
  U v;
  std::memcpy(&v, in.data() + at, sizeof(U));
  return v;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("checkpoint: cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(f), {});
}

struct Parsed {
  nlohmann::json header;
  std::string bytes;
  std::size_t payload_at = 0;
};

Parsed parse(const std::string& path, bool need_payload) {
  Parsed p;
  p.bytes = slurp(path);
  const std::string& b = p.bytes;
  if (b.size() < 20 || std::memcmp(b.data(), kMagic, 8) != 0) {
    throw CheckpointCorruptError("checkpoint: '" + path + "' is not a checkpoint file (bad magic or too short)");
  }
  const auto version = get<std::uint32_t>(b, 8);
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint: '" + path + "' has format version " + std::to_string(version) +
                                 ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  const auto len = get<std::uint64_t>(b, 12);
  if (len > b.size() - 20) throw CheckpointCorruptError("checkpoint: '" + path + "' header is truncated");
  try {
    p.header = nlohmann::json::parse(b.begin() + 20, b.begin() + 20 + static_cast<std::ptrdiff_t>(len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointCorruptError("checkpoint: '" + path + "' header is not valid JSON: " + e.what());
  }
  p.payload_at = 20 + len;
  if (!need_payload) return p;
  try {
    const auto payload_bytes = p.header.at("payload_bytes").get<std::uint64_t>();
    if (b.size() - p.payload_at != payload_bytes) {
      throw CheckpointCorruptError("checkpoint: '" + path + "' payload is " + std::to_string(b.size() - p.payload_at) +
                                   " bytes, header declares " + std::to_string(payload_bytes));
    }
    const std::string sum = hex64(fnv1a(b.data() + p.payload_at, payload_bytes));
    if (sum != p.header.at("payload_fnv1a").get<std::string>()) {
      throw CheckpointCorruptError("checkpoint: '" + path + "' payload checksum mismatch");
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointCorruptError("checkpoint: '" + path + "' header is incomplete: " + e.what());
  }
  return p;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::string& path, Network<T>& model, const TrainState& state,
                     const std::map<std::string, const Tensor<T>*>& extra) {
  std::vector<std::pair<std::string, const Tensor<T>*>> entries;
  model.visit([&](const std::string& name, Parameter<T>& p) { entries.emplace_back(name, &p.value); });
  for (const auto& [name, t] : extra) {
    for (const auto& e : entries) {
      if (e.first == name) throw CheckpointError("checkpoint: auxiliary tensor '" + name + "' shadows a parameter");
    }
    entries.emplace_back(name, t);
  }

  std::string payload;
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& [name, t] : entries) {
    const std::size_t nbytes = t->size() * sizeof(T);
    manifest.push_back({{"name", name},
                        {"dtype", to_string(dtype_of<T>())},
                        {"shape", t->shape()},
                        {"offset", payload.size()},
                        {"nbytes", nbytes}});
    payload.append(reinterpret_cast<const char*>(t->ptr()), nbytes);
  }
  nlohmann::json header{{"config", model.config().to_json()},
                        {"train_state",
                         {{"iteration", state.iteration},
                          {"seed", state.seed},
                          {"rng_state", state.rng_state},
                          {"extra", state.extra}}},
                        {"tensors", manifest},
                        {"payload_bytes", payload.size()},
                        {"payload_fnv1a", hex64(fnv1a(payload.data(), payload.size()))}};
  const std::string text = header.dump();

  std::string out(kMagic, 8);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  out += payload;

  // Write then rename so a crash never leaves a half-written checkpoint behind.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("checkpoint: cannot write '" + tmp + "'");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw CheckpointError("checkpoint: write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw CheckpointError("checkpoint: cannot rename to '" + path + "'");
}

nlohmann::json read_checkpoint_header(const std::string& path) { return parse(path, false).header; }

template <typename T>
CheckpointContents<T> read_checkpoint(const std::string& path) {
  const Parsed p = parse(path, true);
  CheckpointContents<T> c;
  try {
    c.config = NetworkConfig::from_json(p.header.at("config"));
    const auto& st = p.header.at("train_state");
    c.state.iteration = st.at("iteration").get<std::uint64_t>();
    c.state.seed = st.at("seed").get<std::uint64_t>();
    c.state.rng_state = st.at("rng_state").get<std::string>();
    c.state.extra = st.at("extra");
    const std::uint64_t payload_bytes = p.header.at("payload_bytes").get<std::uint64_t>();
    for (const auto& e : p.header.at("tensors")) {
      const auto name = e.at("name").get<std::string>();
      const DType dt = dtype_from_string(e.at("dtype").get<std::string>());
      if (dt != dtype_of<T>()) {
        throw CheckpointShapeError("checkpoint: tensor '" + name + "' is " + to_string(dt) + ", expected " +
                                   to_string(dtype_of<T>()));
      }
      const Shape shape = e.at("shape").get<Shape>();
      const auto offset = e.at("offset").get<std::uint64_t>();
      const auto nbytes = e.at("nbytes").get<std::uint64_t>();
      if (nbytes != static_cast<std::uint64_t>(shape_numel(shape)) * sizeof(T) || offset > payload_bytes ||
          nbytes > payload_bytes - offset) {
        throw CheckpointCorruptError("checkpoint: manifest entry for '" + name + "' is inconsistent");
      }
      Tensor<T> t(shape);
      std::memcpy(t.ptr(), p.bytes.data() + p.payload_at + offset, nbytes);
      if (!c.tensors.emplace(name, std::move(t)).second) {
        throw CheckpointCorruptError("checkpoint: duplicate tensor '" + name + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointCorruptError("checkpoint: '" + path + "' header is malformed: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointCorruptError("checkpoint: '" + path + "': " + e.what());
  }
  return c;
}

template <typename T>
void load_parameters(const CheckpointContents<T>& ckpt, Network<T>& model) {
  std::vector<std::pair<Parameter<T>*, const Tensor<T>*>> plan;
  model.visit([&](const std::string& name, Parameter<T>& p) {
    const auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw CheckpointShapeError("checkpoint: missing parameter '" + name + "'");
    if (it->second.shape() != p.value.shape()) {
      throw CheckpointShapeError("checkpoint: parameter '" + name + "' has shape " + shape_str(it->second.shape()) +
                                 ", model expects " + shape_str(p.value.shape()));
    }
    plan.emplace_back(&p, &it->second);
  });
  for (auto& [param, value] : plan) {
    param->value = *value;
    param->zero_grad();
  }
}

template <typename T>
Network<T> load_model(const std::string& path, TrainState* state) {
  const CheckpointContents<T> c = read_checkpoint<T>(path);
  Network<T> model(c.config);
  load_parameters(c, model);
  if (state) *state = c.state;
  return model;
}

#define DDT_INSTANTIATE_CKPT(T)                                                                                   \
  template void save_checkpoint<T>(const std::string&, Network<T>&, const TrainState&,                           \
                                   const std::map<std::string, const Tensor<T>*>&);                              \
  template CheckpointContents<T> read_checkpoint<T>(const std::string&);                                         \
  template void load_parameters<T>(const CheckpointContents<T>&, Network<T>&);                                   \
  template Network<T> load_model<T>(const std::string&, TrainState*);

DDT_INSTANTIATE_CKPT(float)
DDT_INSTANTIATE_CKPT(double)

}  // namespace ddt::net

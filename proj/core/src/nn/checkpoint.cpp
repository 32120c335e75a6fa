#include "mprkit/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace mprkit::nn {

namespace {

constexpr const char* kFormat = "mprkit-checkpoint";
constexpr int kVersion = 1;

void append_le(std::vector<unsigned char>& out, const std::vector<double>& values) {
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xff));
  }
}

double read_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

std::vector<Tensor*> payload_tensors(Model& model) {
  std::vector<Tensor*> tensors = model.params();
  for (Tensor& m : model.moment1) tensors.push_back(&m);
  for (Tensor& v : model.moment2) tensors.push_back(&v);
  for (Tensor* s : model.state()) tensors.push_back(s);
  return tensors;
}

}  // namespace

void save_checkpoint(Model& model, const std::filesystem::path& path) {
  nlohmann::json arch = nlohmann::json::array();
  for (const LayerSpec& spec : model.architecture()) {
    nlohmann::json hp = nlohmann::json::object();
    for (const auto& [key, value] : spec.hyperparams) hp[key] = value;
    arch.push_back({{"kind", spec.kind}, {"hyperparams", hp}});
  }

  std::vector<Tensor*> tensors = payload_tensors(model);
  std::size_t payload_doubles = 0;
  for (Tensor* t : tensors) payload_doubles += t->size();

  nlohmann::json header = {
      {"format", kFormat},
      {"version", kVersion},
      {"input_shape", model.input_shape},
      {"architecture", arch},
      {"seed", model.seed},
      {"step", model.step},
      {"epochs_done", model.epochs_done},
      {"norm_mean", model.norm.mean},
      {"norm_std", model.norm.std},
      {"payload_doubles", payload_doubles},
  };

  std::vector<unsigned char> payload;
  payload.reserve(payload_doubles * 8);
  for (Tensor* t : tensors) append_le(payload, t->data);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  const std::string head = header.dump();
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.put('\n');
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::string head;
  if (!std::getline(in, head)) throw std::runtime_error("incompatible checkpoint: missing header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(head);
  } catch (const nlohmann::json::exception& err) {
    throw std::runtime_error(std::string("incompatible checkpoint: bad header: ") + err.what());
  }

  try {
    if (header.at("format").get<std::string>() != kFormat ||
        header.at("version").get<int>() != kVersion) {
      throw std::runtime_error("incompatible checkpoint: unknown format or version");
    }

    std::vector<LayerSpec> specs;
    for (const auto& entry : header.at("architecture")) {
      LayerSpec spec;
      spec.kind = entry.at("kind").get<std::string>();
      for (const auto& [key, value] : entry.at("hyperparams").items()) {
        spec.hyperparams.emplace_back(key, value.get<int>());
      }
      specs.push_back(std::move(spec));
    }

    Model model = build_from_specs(specs, header.at("input_shape").get<std::vector<int>>());
    model.seed = header.at("seed").get<std::uint64_t>();
    model.step = header.at("step").get<std::int64_t>();
    model.epochs_done = header.at("epochs_done").get<int>();
    model.norm.mean = header.at("norm_mean").get<double>();
    model.norm.std = header.at("norm_std").get<double>();

    std::vector<Tensor*> tensors = payload_tensors(model);
    std::size_t payload_doubles = 0;
    for (Tensor* t : tensors) payload_doubles += t->size();
    if (header.at("payload_doubles").get<std::size_t>() != payload_doubles) {
      throw std::runtime_error("incompatible checkpoint: payload length mismatch");
    }

    std::vector<unsigned char> payload(payload_doubles * 8);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (in.gcount() != static_cast<std::streamsize>(payload.size())) {
      throw std::runtime_error("incompatible checkpoint: truncated payload");
    }
    char extra;
    if (in.read(&extra, 1)) {
      throw std::runtime_error("incompatible checkpoint: trailing bytes");
    }

    const unsigned char* p = payload.data();
    for (Tensor* t : tensors) {
      for (double& v : t->data) {
        v = read_le(p);
        p += 8;
      }
    }
    return model;
  } catch (const nlohmann::json::exception& err) {
    throw std::runtime_error(std::string("incompatible checkpoint: bad header: ") + err.what());
  }
}

}  // namespace mprkit::nn

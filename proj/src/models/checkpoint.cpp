#include "cdse/models/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "cdse/error.hpp"

namespace cdse::models {
namespace {

constexpr std::array<char, 8> kMagic{'C', 'D', 'S', 'E', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

std::string dtype_name(torch::Dtype d) {
  switch (d) {
    case torch::kFloat32: return "f32";
    case torch::kFloat64: return "f64";
    case torch::kInt64: return "i64";
    default: fail(ErrorCode::kFormat, "unsupported tensor dtype in checkpoint");
  }
}

torch::Dtype dtype_from(const std::string& s) {
  if (s == "f32") return torch::kFloat32;
  if (s == "f64") return torch::kFloat64;
  if (s == "i64") return torch::kInt64;
  fail(ErrorCode::kFormat, "unknown checkpoint dtype '" + s + "'");
}

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) fail(ErrorCode::kFormat, "truncated checkpoint");
  return v;
}

}  // namespace

Checkpoint snapshot(const Model& model, std::int64_t step, nlohmann::json meta) {
  Checkpoint c{model.spec, model.seed, step, std::move(meta), {}};
  for (const auto& item : model.net->named_parameters()) c.tensors[item.key()] = item.value().detach().clone();
  for (const auto& item : model.net->named_buffers()) c.tensors[item.key()] = item.value().detach().clone();
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header{{"spec", ckpt.spec}, {"seed", ckpt.seed}, {"step", ckpt.step}, {"meta", ckpt.meta}};
  auto entries = nlohmann::json::array();
  std::vector<torch::Tensor> blobs;
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    auto c = t.detach().contiguous().cpu();
    const auto bytes = static_cast<std::uint64_t>(c.numel()) * c.element_size();
    entries.push_back({{"name", name}, {"shape", c.sizes().vec()}, {"dtype", dtype_name(c.scalar_type())},
                       {"offset", offset}, {"bytes", bytes}});
    offset += bytes;
    blobs.push_back(c);
  }
  header["tensors"] = entries;
  const auto text = header.dump();

  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::kIo, "cannot write checkpoint " + tmp.string());
    os.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(os, kVersion);
    put<std::uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& b : blobs) {
      os.write(static_cast<const char*>(b.data_ptr()), static_cast<std::streamsize>(b.numel() * b.element_size()));
    }
    if (!os) fail(ErrorCode::kIo, "failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, std::int64_t step, nlohmann::json meta) {
  save_checkpoint(path, snapshot(model, step, std::move(meta)));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::kIo, "cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) fail(ErrorCode::kFormat, path.string() + " is not a checkpoint");
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) fail(ErrorCode::kFormat, "unsupported checkpoint version " + std::to_string(version));
  const auto len = get<std::uint64_t>(is);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) fail(ErrorCode::kFormat, "truncated checkpoint header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("bad checkpoint header: ") + e.what());
  }
  Checkpoint c;
  c.spec = header.at("spec").get<ModelSpec>();
  c.seed = header.at("seed").get<std::uint64_t>();
  c.step = header.at("step").get<std::int64_t>();
  c.meta = header.value("meta", nlohmann::json::object());
  const auto base = is.tellg();
  for (const auto& e : header.at("tensors")) {
    auto t = torch::empty(e.at("shape").get<std::vector<std::int64_t>>(),
                          torch::TensorOptions().dtype(dtype_from(e.at("dtype").get<std::string>())));
    const auto bytes = e.at("bytes").get<std::uint64_t>();
    if (bytes != static_cast<std::uint64_t>(t.numel()) * t.element_size()) {
      fail(ErrorCode::kFormat, "checkpoint tensor size does not match its shape");
    }
    is.seekg(base + static_cast<std::streamoff>(e.at("offset").get<std::uint64_t>()));
    is.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(bytes));
    if (!is) fail(ErrorCode::kFormat, "truncated checkpoint tensor " + e.at("name").get<std::string>());
    c.tensors[e.at("name").get<std::string>()] = t;
  }
  return c;
}

void restore(Model& model, const Checkpoint& ckpt) {
  require(model.spec == ckpt.spec, ErrorCode::kCheckpointMismatch,
          "checkpoint was written for a different model spec (" + nlohmann::json(ckpt.spec).dump() + ")");
  torch::NoGradGuard no_grad;
  std::size_t matched = 0;
  auto copy_into = [&](const std::string& name, torch::Tensor& dst) {
    auto it = ckpt.tensors.find(name);
    require(it != ckpt.tensors.end(), ErrorCode::kCheckpointMismatch, "checkpoint lacks tensor " + name);
    require(it->second.sizes() == dst.sizes(), ErrorCode::kCheckpointMismatch, "shape mismatch for " + name);
    dst.copy_(it->second);
    ++matched;
  };
  for (auto& item : model.net->named_parameters()) copy_into(item.key(), item.value());
  for (auto& item : model.net->named_buffers()) copy_into(item.key(), item.value());
  require(matched == ckpt.tensors.size(), ErrorCode::kCheckpointMismatch, "checkpoint has unexpected tensors");
  model.seed = ckpt.seed;
}

Model load_model(const std::filesystem::path& path) {
  auto ckpt = load_checkpoint(path);
  auto model = build_model(ckpt.spec, ckpt.seed);
  restore(model, ckpt);
  return model;
}

}  // namespace cdse::models

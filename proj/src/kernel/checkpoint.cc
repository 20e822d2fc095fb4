#include "xsem/kernel/checkpoint.h"

#include <bit>
#include <cstring>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "xsem/error.h"

namespace xsem::kernel {
namespace {

constexpr char kMagic[8] = {'X', 'S', 'E', 'M', 'C', 'K', 'P', 'T'};

template <typename T>
void PutLe(std::ostream& out, T v) {
  char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  }
  out.write(b, sizeof(T));
}

void ReadExact(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw InputError(std::string("checkpoint truncated while reading ") + what);
  }
}

template <typename T>
T GetLe(std::istream& in, const char* what) {
  unsigned char b[sizeof(T)];
  ReadExact(in, reinterpret_cast<char*>(b), sizeof(T), what);
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(b[i]) << (8 * i);
  }
  return v;
}

}  // namespace

void WriteCheckpoint(std::ostream& out, const ModelParams& params,
                     const Vocabs& vocabs) {
  const ModelConfig& c = params.config();
  nlohmann::ordered_json j;
  j["source_vocab"] = c.source_vocab;
  j["target_vocab"] = c.target_vocab;
  j["embed_dim"] = c.embed_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["layers"] = c.layers;
  j["ffnn_dim"] = c.ffnn_dim;
  j["mu"] = c.mu;
  j["seed"] = c.seed;
  j["source_tokens"] = vocabs.source.tokens();
  j["target_tokens"] = vocabs.target.tokens();
  const std::string record = j.dump();
  out.write(kMagic, sizeof(kMagic));
  PutLe<std::uint32_t>(out, kCheckpointVersion);
  PutLe<std::uint64_t>(out, record.size());
  out.write(record.data(), static_cast<std::streamsize>(record.size()));
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(params.tensors().size()));
  for (const Tensor& t : params.tensors()) {
    PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    PutLe<std::uint64_t>(out, t.rows);
    PutLe<std::uint64_t>(out, t.cols);
    for (double v : t.value) PutLe<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw InputError("failed to write checkpoint");
}

Checkpoint ReadCheckpoint(std::istream& in) {
  char magic[8];
  ReadExact(in, magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw InputError("not a checkpoint (bad magic)");
  }
  const auto version = GetLe<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw InputError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto len = GetLe<std::uint64_t>(in, "config length");
  if (len > (1ULL << 30)) throw InputError("checkpoint config record too large");
  std::string record(len, '\0');
  ReadExact(in, record.data(), len, "config record");

  ModelConfig c;
  Vocabs vocabs;
  try {
    const auto j = nlohmann::json::parse(record);
    c.source_vocab = j.at("source_vocab").get<std::size_t>();
    c.target_vocab = j.at("target_vocab").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.ffnn_dim = j.at("ffnn_dim").get<std::size_t>();
    c.mu = j.at("mu").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    vocabs.source = Vocab(j.at("source_tokens").get<std::vector<std::string>>());
    vocabs.target = Vocab(j.at("target_tokens").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad checkpoint config record: ") + e.what());
  }
  if (vocabs.source.size() != c.source_vocab ||
      vocabs.target.size() != c.target_vocab) {
    throw InputError("checkpoint vocabularies disagree with the config");
  }
  const Vocab fresh = NewTargetVocab();
  for (int id = 0; id < 3; ++id) {
    if (vocabs.target.size() < 3 || vocabs.target.Token(id) != fresh.Token(id)) {
      throw InputError("checkpoint target vocabulary lacks the reserved symbols");
    }
  }
  ModelParams params(c);
  const auto count = GetLe<std::uint32_t>(in, "tensor count");
  if (count != params.tensors().size()) {
    throw InputError("checkpoint has " + std::to_string(count) +
                     " tensors, expected " +
                     std::to_string(params.tensors().size()));
  }
  for (Tensor& t : params.tensors()) {
    const auto name_len = GetLe<std::uint32_t>(in, "tensor name length");
    if (name_len > 4096) throw InputError("checkpoint tensor name too long");
    std::string name(name_len, '\0');
    ReadExact(in, name.data(), name_len, "tensor name");
    const auto rows = GetLe<std::uint64_t>(in, "tensor rows");
    const auto cols = GetLe<std::uint64_t>(in, "tensor cols");
    if (name != t.name || rows != t.rows || cols != t.cols) {
      throw InputError("checkpoint tensor '" + name + "' does not match '" +
                       t.name + "'");
    }
    for (double& v : t.value) {
      v = std::bit_cast<double>(GetLe<std::uint64_t>(in, "tensor values"));
      if (!std::isfinite(v)) {
        throw InputError("checkpoint tensor '" + name + "' has a non-finite value");
      }
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw InputError("trailing bytes after checkpoint tensors");
  }
  return {std::move(params), std::move(vocabs)};
}

void SaveCheckpoint(const std::string& path, const ModelParams& params,
                    const Vocabs& vocabs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  WriteCheckpoint(out, params, vocabs);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return ReadCheckpoint(in);
}

}  // namespace xsem::kernel

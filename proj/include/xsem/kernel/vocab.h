#pragma once

// Token vocabularies for the copy model. Target tokens are stored in their
// encoded linearized spelling (`people_h`, `[`, `@b`), so a head word and the
// same word without the head mark are different entries. Ids 0, 1 and 2 of
// every target vocabulary are the start symbol, the end symbol and the
// bullet.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xsem/kernel/model.h"
#include "xsem/linear.h"

namespace xsem::kernel {

inline constexpr std::string_view kBosToken = "#bos";
inline constexpr std::string_view kEosToken = "#eos";

class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> tokens);

  // Id of `token`, adding it when absent.
  int Add(std::string_view token);
  // Id of `token`, or -1.
  int Find(std::string_view token) const;
  // Throws xsem::Error (input) for an unknown token.
  int Require(std::string_view token) const;
  const std::string& Token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

Vocab NewTargetVocab();

// Head flag per target id.
std::vector<bool> HeadFlags(const Vocab& target);

struct Vocabs {
  Vocab source;
  Vocab target;
};

// Vocabularies covering every token of `sources` and `targets`, in order of
// first appearance.
Vocabs BuildVocabs(std::span<const std::vector<std::string>> sources,
                   std::span<const LinearizedRepr> targets);

// Encodes a source sentence and its target; throws xsem::Error (input) on an
// unknown token.
TrainingExample EncodeExample(const Vocabs& v,
                              const std::vector<std::string>& source,
                              const LinearizedRepr& target);
std::vector<int> EncodeSource(const Vocab& source,
                              const std::vector<std::string>& words);

// Maps decoded ids (the end symbol and anything after it dropped) back to a
// linearized representation.
LinearizedRepr DecodeTarget(const Vocab& target, std::span<const int> y,
                            std::span<const Assignment> a);

}  // namespace xsem::kernel

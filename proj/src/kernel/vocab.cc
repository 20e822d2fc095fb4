#include "xsem/kernel/vocab.h"

#include "xsem/error.h"

namespace xsem::kernel {

Vocab::Vocab(std::vector<std::string> tokens) {
  for (const std::string& t : tokens) {
    if (Find(t) >= 0) throw InputError("duplicate vocabulary entry '" + t + "'");
    Add(t);
  }
}

int Vocab::Add(std::string_view token) {
  const int found = Find(token);
  if (found >= 0) return found;
  const int id = static_cast<int>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

int Vocab::Find(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? -1 : it->second;
}

int Vocab::Require(std::string_view token) const {
  const int id = Find(token);
  if (id < 0) throw InputError("unknown token '" + std::string(token) + "'");
  return id;
}

const std::string& Vocab::Token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw InputError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

Vocab NewTargetVocab() {
  return Vocab({std::string(kBosToken), std::string(kEosToken),
                std::string(kBulletAscii)});
}

std::vector<bool> HeadFlags(const Vocab& target) {
  std::vector<bool> flags(target.size(), false);
  for (std::size_t id = 3; id < target.size(); ++id) {
    flags[id] = DecodeToken(target.tokens()[id]).IsHeadWord();
  }
  return flags;
}

Vocabs BuildVocabs(std::span<const std::vector<std::string>> sources,
                   std::span<const LinearizedRepr> targets) {
  Vocabs v;
  v.target = NewTargetVocab();
  for (const auto& s : sources) {
    for (const std::string& w : s) v.source.Add(w);
  }
  for (const LinearizedRepr& l : targets) {
    for (const LinToken& t : l.tokens) v.target.Add(EncodeToken(t));
  }
  return v;
}

std::vector<int> EncodeSource(const Vocab& source,
                              const std::vector<std::string>& words) {
  std::vector<int> x;
  x.reserve(words.size());
  for (const std::string& w : words) x.push_back(source.Require(w));
  return x;
}

TrainingExample EncodeExample(const Vocabs& v,
                              const std::vector<std::string>& source,
                              const LinearizedRepr& target) {
  TrainingExample ex;
  ex.x = EncodeSource(v.source, source);
  for (std::size_t t = 0; t < target.size(); ++t) {
    const LinToken& tok = target.tokens[t];
    ex.y.push_back(v.target.Require(EncodeToken(tok)));
    ex.a.push_back(target.assignments[t]);
    ex.is_head.push_back(tok.IsHeadWord());
  }
  ex.y.push_back(kEosId);
  ex.a.push_back(std::nullopt);
  ex.is_head.push_back(false);
  return ex;
}

LinearizedRepr DecodeTarget(const Vocab& target, std::span<const int> y,
                            std::span<const Assignment> a) {
  if (a.size() != y.size()) {
    throw InputError("decoded ids and assignments differ in length");
  }
  LinearizedRepr l;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (y[t] == kEosId) break;
    if (y[t] == kBosId) throw InputError("start symbol inside a decoded sequence");
    l.tokens.push_back(DecodeToken(target.Token(y[t])));
    l.assignments.push_back(a[t]);
  }
  return l;
}

}  // namespace xsem::kernel

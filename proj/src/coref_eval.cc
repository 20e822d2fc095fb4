#include "xsem/coref_eval.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "xsem/assignment.h"
#include "xsem/error.h"

namespace xsem {
namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t Find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void Union(std::size_t a, std::size_t b) {
    a = Find(a);
    b = Find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

// Entity id of every mention in `s`; mentions outside `s` are absent.
std::map<MentionId, std::size_t> EntityIndex(
    const std::vector<std::vector<MentionId>>& entities) {
  std::map<MentionId, std::size_t> idx;
  for (std::size_t e = 0; e < entities.size(); ++e) {
    for (MentionId m : entities[e]) idx[m] = e;
  }
  return idx;
}

// Link-based recall of `key` against `response` (swap for precision).
std::pair<double, double> MucSide(const MentionChainSet& key,
                                  const MentionChainSet& response) {
  const auto resp_entities = response.Entities();
  const auto resp_idx = EntityIndex(resp_entities);
  double num = 0.0;
  double den = 0.0;
  for (const auto& k : key.Entities()) {
    if (k.size() < 2) continue;
    std::set<std::size_t> parts;
    std::size_t unaligned = 0;
    for (MentionId m : k) {
      auto it = resp_idx.find(m);
      if (it == resp_idx.end()) {
        ++unaligned;
      } else {
        parts.insert(it->second);
      }
    }
    num += static_cast<double>(k.size() - parts.size() - unaligned);
    den += static_cast<double>(k.size() - 1);
  }
  return {num, den};
}

std::pair<double, double> BCubedSide(const MentionChainSet& key,
                                     const MentionChainSet& response) {
  const auto key_entities = key.Entities();
  const auto resp_entities = response.Entities();
  const auto resp_idx = EntityIndex(resp_entities);
  double num = 0.0;
  double den = 0.0;
  for (const auto& k : key_entities) {
    for (MentionId m : k) {
      den += 1.0;
      auto it = resp_idx.find(m);
      if (it == resp_idx.end()) continue;  // no overlap at all
      const auto& r = resp_entities[it->second];
      std::size_t overlap = 0;
      for (MentionId x : k) {
        overlap += std::binary_search(r.begin(), r.end(), x) ? 1 : 0;
      }
      num += static_cast<double>(overlap) / static_cast<double>(k.size());
    }
  }
  return {num, den};
}

}  // namespace

std::vector<std::vector<MentionId>> MentionChainSet::Entities() const {
  std::vector<std::vector<MentionId>> out;
  std::set<MentionId> covered;
  for (const auto& c : chains) {
    auto sorted = c;
    std::sort(sorted.begin(), sorted.end());
    covered.insert(sorted.begin(), sorted.end());
    out.push_back(std::move(sorted));
  }
  for (MentionId m : mentions) {
    if (!covered.count(m)) out.push_back({m});
  }
  std::sort(out.begin(), out.end());
  return out;
}

void CheckChains(const MentionChainSet& s) {
  if (!std::is_sorted(s.mentions.begin(), s.mentions.end()) ||
      std::adjacent_find(s.mentions.begin(), s.mentions.end()) !=
          s.mentions.end()) {
    throw InputError("mentions must be sorted and unique");
  }
  std::set<MentionId> seen;
  for (const auto& c : s.chains) {
    if (c.empty()) throw InputError("empty coreference chain");
    for (MentionId m : c) {
      if (!std::binary_search(s.mentions.begin(), s.mentions.end(), m)) {
        throw InputError("chain member " + std::to_string(m) +
                         " is not a mention");
      }
      if (!seen.insert(m).second) {
        throw InputError("mention " + std::to_string(m) +
                         " belongs to two chains");
      }
    }
  }
}

MentionChainSet ChainsFromLinearized(const LinearizedRepr& l) {
  TextOptions lenient;
  lenient.allow_unlinked_bullets = true;
  CheckValid(l, lenient);
  const SpanTree t = BuildSpanTree(l.tokens);

  auto mention_of = [&](std::size_t pos) -> MentionId {
    const int s = t.innermost[pos];
    return s < 0 ? pos : t.spans[s].open;
  };
  std::set<MentionId> mentions;
  for (const SpanInfo& s : t.spans) {
    if (!s.is_pred) mentions.insert(s.open);
  }
  std::vector<std::pair<MentionId, MentionId>> links;
  for (std::size_t pos = 0; pos < l.tokens.size(); ++pos) {
    if (!l.tokens[pos].IsBullet()) continue;
    const MentionId b = mention_of(pos);
    mentions.insert(b);
    if (!l.assignments[pos]) continue;
    const MentionId a = mention_of(*l.assignments[pos]);
    mentions.insert(a);
    links.push_back({b, a});
  }

  MentionChainSet out;
  out.mentions.assign(mentions.begin(), mentions.end());
  auto index_of = [&](MentionId m) {
    return static_cast<std::size_t>(
        std::lower_bound(out.mentions.begin(), out.mentions.end(), m) -
        out.mentions.begin());
  };
  UnionFind uf(out.mentions.size());
  for (const auto& [b, a] : links) uf.Union(index_of(b), index_of(a));
  std::map<std::size_t, std::vector<MentionId>> groups;
  for (std::size_t i = 0; i < out.mentions.size(); ++i) {
    groups[uf.Find(i)].push_back(out.mentions[i]);
  }
  for (auto& [root, members] : groups) {
    if (members.size() >= 2) out.chains.push_back(std::move(members));
  }
  return out;
}

MetricCounts MucCounts(const MentionChainSet& key,
                       const MentionChainSet& response) {
  CheckChains(key);
  CheckChains(response);
  MetricCounts c;
  std::tie(c.r_num, c.r_den) = MucSide(key, response);
  std::tie(c.p_num, c.p_den) = MucSide(response, key);
  return c;
}

MetricCounts BCubedCounts(const MentionChainSet& key,
                          const MentionChainSet& response) {
  CheckChains(key);
  CheckChains(response);
  MetricCounts c;
  std::tie(c.r_num, c.r_den) = BCubedSide(key, response);
  std::tie(c.p_num, c.p_den) = BCubedSide(response, key);
  return c;
}

MetricCounts CeafECounts(const MentionChainSet& key,
                         const MentionChainSet& response) {
  CheckChains(key);
  CheckChains(response);
  const auto k = key.Entities();
  const auto r = response.Entities();
  MetricCounts c;
  c.r_den = static_cast<double>(k.size());
  c.p_den = static_cast<double>(r.size());
  if (k.empty() || r.empty()) return c;
  std::vector<std::vector<double>> w(k.size(), std::vector<double>(r.size()));
  for (std::size_t i = 0; i < k.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      std::size_t overlap = 0;
      for (MentionId m : k[i]) {
        overlap += std::binary_search(r[j].begin(), r[j].end(), m) ? 1 : 0;
      }
      w[i][j] = 2.0 * static_cast<double>(overlap) /
                static_cast<double>(k[i].size() + r[j].size());
    }
  }
  const double total = AssignmentWeight(w, AssignmentMax(w));
  c.r_num = total;
  c.p_num = total;
  return c;
}

PrfScore Muc(const MentionChainSet& key, const MentionChainSet& response) {
  return MucCounts(key, response).Score();
}

PrfScore BCubed(const MentionChainSet& key, const MentionChainSet& response) {
  return BCubedCounts(key, response).Score();
}

PrfScore CeafE(const MentionChainSet& key, const MentionChainSet& response) {
  return CeafECounts(key, response).Score();
}

double AvgF1(double muc_f1, double b3_f1, double ceafe_f1) {
  return (muc_f1 + b3_f1 + ceafe_f1) / 3.0;
}

CorefReport ScoreCoref(std::span<const MentionChainSet> key,
                       std::span<const MentionChainSet> response) {
  if (key.size() != response.size()) {
    throw AlignmentError("key has " + std::to_string(key.size()) +
                         " blocks but response has " +
                         std::to_string(response.size()));
  }
  if (key.empty()) throw InputError("empty corpus");
  MetricCounts muc;
  MetricCounts b3;
  MetricCounts ceafe;
  for (std::size_t i = 0; i < key.size(); ++i) {
    muc += MucCounts(key[i], response[i]);
    b3 += BCubedCounts(key[i], response[i]);
    ceafe += CeafECounts(key[i], response[i]);
  }
  CorefReport r;
  r.muc = muc.Score();
  r.b3 = b3.Score();
  r.ceafe = ceafe.Score();
  r.avg_f1 = AvgF1(r.muc.f1, r.b3.f1, r.ceafe.f1);
  return r;
}

}  // namespace xsem

#include "xsem/graph_metric.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <tuple>

#include "xsem/assignment.h"
#include "xsem/error.h"
#include "xsem/parallel.h"
#include "xsem/rng.h"

namespace xsem {
namespace {

constexpr double kMinGain = 1e-12;

struct EdgeRef {
  int a;
  int b;
  int label;  // index into Problem::labels
};

// Everything the search needs, precomputed once per pair.
class Problem {
 public:
  Problem(const GraphRepr& g1, const GraphRepr& g2, const MatchConfig& config)
      : n1_(static_cast<int>(g1.vars.size())),
        n2_(static_cast<int>(g2.vars.size())) {
    CheckSpec(config.phi);
    CheckSpec(config.psi);
    phi_.assign(static_cast<std::size_t>(n1_) * n2_, 0.0);
    for (int i = 0; i < n1_; ++i) {
      const TokenSpan& a = g1.InstanceOf(g1.vars[i].id);
      for (int j = 0; j < n2_; ++j) {
        phi_[i * n2_ + j] =
            InstanceSimilarity(config.phi, a, g2.InstanceOf(g2.vars[j].id));
      }
    }
    std::map<std::string, int> pos1;
    std::map<std::string, int> pos2;
    for (int i = 0; i < n1_; ++i) pos1[g1.vars[i].id] = i;
    for (int j = 0; j < n2_; ++j) pos2[g2.vars[j].id] = j;

    std::vector<std::string> labels1;
    std::vector<std::string> labels2;
    auto intern = [](std::vector<std::string>& table, const std::string& s) {
      auto it = std::find(table.begin(), table.end(), s);
      if (it != table.end()) return static_cast<int>(it - table.begin());
      table.push_back(s);
      return static_cast<int>(table.size() - 1);
    };
    incident_.resize(n1_);
    for (const Edge& e : g1.edges) {
      const int k = static_cast<int>(edges1_.size());
      edges1_.push_back(
          {pos1.at(e.governor), pos1.at(e.dependent), intern(labels1, e.label)});
      incident_[edges1_.back().a].push_back(k);
      incident_[edges1_.back().b].push_back(k);
    }
    label2_.assign(static_cast<std::size_t>(n2_) * n2_, -1);
    for (const Edge& e : g2.edges) {
      label2_[pos2.at(e.governor) * n2_ + pos2.at(e.dependent)] =
          intern(labels2, e.label);
    }
    psi_.assign(labels1.size() * labels2.size(), 0.0);
    width2_ = static_cast<int>(labels2.size());
    for (std::size_t x = 0; x < labels1.size(); ++x) {
      for (std::size_t y = 0; y < labels2.size(); ++y) {
        psi_[x * labels2.size() + y] =
            RelationSimilarity(config.psi, labels1[x], labels2[y]);
      }
    }
  }

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  double Phi(int i, int j) const { return phi_[i * n2_ + j]; }
  const std::vector<int>& Incident(int i) const { return incident_[i]; }
  const std::vector<EdgeRef>& edges1() const { return edges1_; }

  double EdgeValue(const EdgeRef& e, const VarMapping& m) const {
    const int x = m[e.a];
    const int y = m[e.b];
    if (x < 0 || y < 0) return 0.0;
    const int l2 = label2_[x * n2_ + y];
    return l2 < 0 ? 0.0 : psi_[e.label * width2_ + l2];
  }

  double NodeValue(int i, int j) const { return j < 0 ? 0.0 : Phi(i, j); }

  double Score(const VarMapping& m) const {
    double s = 0.0;
    for (int i = 0; i < n1_; ++i) s += NodeValue(i, m[i]);
    for (const EdgeRef& e : edges1_) s += EdgeValue(e, m);
    return s;
  }

 private:
  int n1_;
  int n2_;
  int width2_ = 0;
  std::vector<double> phi_;
  std::vector<EdgeRef> edges1_;
  std::vector<std::vector<int>> incident_;
  std::vector<int> label2_;
  std::vector<double> psi_;
};

std::vector<int> Ranks(const GraphRepr& g) {
  const auto order = CanonicalOrder(g);
  std::vector<int> rank(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    rank[order[r]] = static_cast<int>(r);
  }
  return rank;
}

class Climber {
 public:
  Climber(const Problem& p, std::vector<int> order1, std::vector<int> order2,
          std::size_t max_moves)
      : p_(p),
        order1_(std::move(order1)),
        order2_(std::move(order2)),
        max_moves_(max_moves) {}

  // Improves `m` in place and returns its score.
  double Climb(VarMapping& m) const {
    std::vector<int> owner(p_.n2(), -1);
    for (int i = 0; i < p_.n1(); ++i) {
      if (m[i] >= 0) owner[m[i]] = i;
    }
    for (std::size_t moves = 0; moves < max_moves_; ++moves) {
      double best_gain = kMinGain;
      int kind = -1;  // 0 reassign, 1 swap, 2 displace
      int bi = -1;
      int bj = -1;
      int best_alt = -1;
      auto consider = [&](double g, int k, int i, int j, int alt = -1) {
        if (g > best_gain) {
          best_gain = g;
          kind = k;
          bi = i;
          bj = j;
          best_alt = alt;
        }
      };
      for (int i : order1_) {
        const int cur = m[i];
        // Reassign to unmapped.
        if (cur >= 0) {
          const double g = ReassignGain(m, i, -1);
          consider(g, 0, i, -1);
        }
        for (int j : order2_) {
          if (owner[j] >= 0) continue;
          const double g = ReassignGain(m, i, j);
          consider(g, 0, i, j);
        }
      }
      for (std::size_t x = 0; x < order1_.size(); ++x) {
        for (std::size_t y = x + 1; y < order1_.size(); ++y) {
          const int i = order1_[x];
          const int k = order1_[y];
          if (m[i] == m[k]) continue;  // both unmapped
          const double g = SwapGain(m, i, k);
          consider(g, 1, i, k);
        }
      }
      if (kind < 0) {
        // Stuck: let i take k's target while k moves to a free target or
        // becomes unmapped.
        for (int i : order1_) {
          for (int j : order2_) {
            const int k = owner[j];
            if (k < 0 || k == i) continue;
            consider(DisplaceGain(m, i, k, -1), 2, i, k, -1);
            for (int alt : order2_) {
              if (owner[alt] >= 0) continue;
              consider(DisplaceGain(m, i, k, alt), 2, i, k, alt);
            }
          }
        }
      }
      if (kind < 0) break;
      if (kind == 2) {
        const int j = m[bj];
        if (m[bi] >= 0) owner[m[bi]] = -1;
        m[bi] = j;
        owner[j] = bi;
        m[bj] = best_alt;
        if (best_alt >= 0) owner[best_alt] = bj;
      } else if (kind == 0) {
        if (m[bi] >= 0) owner[m[bi]] = -1;
        m[bi] = bj;
        if (bj >= 0) owner[bj] = bi;
      } else {
        std::swap(m[bi], m[bj]);
        if (m[bi] >= 0) owner[m[bi]] = bi;
        if (m[bj] >= 0) owner[m[bj]] = bj;
      }
    }
    return p_.Score(m);
  }

 private:
  double Local(const VarMapping& m, int i) const {
    double s = p_.NodeValue(i, m[i]);
    for (int k : p_.Incident(i)) s += p_.EdgeValue(p_.edges1()[k], m);
    return s;
  }

  double ReassignGain(VarMapping& m, int i, int j) const {
    const int old = m[i];
    const double before = Local(m, i);
    m[i] = j;
    const double after = Local(m, i);
    m[i] = old;
    return after - before;
  }

  double Pair(const VarMapping& m, int i, int k) const {
    double s = p_.NodeValue(i, m[i]) + p_.NodeValue(k, m[k]);
    for (int e : p_.Incident(i)) s += p_.EdgeValue(p_.edges1()[e], m);
    for (int e : p_.Incident(k)) {
      const EdgeRef& r = p_.edges1()[e];
      if (r.a == i || r.b == i) continue;  // already counted
      s += p_.EdgeValue(r, m);
    }
    return s;
  }

  double SwapGain(VarMapping& m, int i, int k) const {
    const double before = Pair(m, i, k);
    std::swap(m[i], m[k]);
    const double after = Pair(m, i, k);
    std::swap(m[i], m[k]);
    return after - before;
  }

  // i takes k's target and k moves to `alt` (-1 for unmapped).
  double DisplaceGain(VarMapping& m, int i, int k, int alt) const {
    const int old_i = m[i];
    const int old_k = m[k];
    const double before = Pair(m, i, k);
    m[i] = old_k;
    m[k] = alt;
    const double after = Pair(m, i, k);
    m[i] = old_i;
    m[k] = old_k;
    return after - before;
  }

  const Problem& p_;
  std::vector<int> order1_;
  std::vector<int> order2_;
  std::size_t max_moves_;
};

void CheckMapping(const Problem& p, const VarMapping& m) {
  if (static_cast<int>(m.size()) != p.n1()) {
    throw InputError("mapping length differs from the first graph's size");
  }
  std::vector<bool> used(p.n2(), false);
  for (int j : m) {
    if (j < -1 || j >= p.n2()) throw InputError("mapping target out of range");
    if (j < 0) continue;
    if (used[j]) throw InputError("mapping is not injective");
    used[j] = true;
  }
}

std::uint64_t InjectionCount(int small, int large, std::uint64_t cap) {
  std::uint64_t count = 1;
  for (int k = 0; k < small; ++k) {
    count *= static_cast<std::uint64_t>(large - k);
    if (count > cap) return cap + 1;
  }
  return count;
}

MatchResult Finish(const GraphRepr& g1, const GraphRepr& g2, VarMapping m,
                   double score) {
  MatchResult r;
  r.mapping = std::move(m);
  r.score = score;
  r.prf = PrecisionRecall(g1, g2, score);
  return r;
}

}  // namespace

std::size_t MatchDenominator(const GraphRepr& g) {
  return g.vars.size() + g.edges.size();
}

PrfScore PrecisionRecall(const GraphRepr& g1, const GraphRepr& g2,
                         double score) {
  return MakePrf(score, static_cast<double>(MatchDenominator(g1)), score,
                 static_cast<double>(MatchDenominator(g2)));
}

double EvaluateMapping(const GraphRepr& g1, const GraphRepr& g2,
                       const VarMapping& m, const MatchConfig& config) {
  const Problem p(g1, g2, config);
  CheckMapping(p, m);
  return p.Score(m);
}

bool OracleApplicable(const GraphRepr& g1, const GraphRepr& g2,
                      const MatchConfig& config) {
  const int n1 = static_cast<int>(g1.vars.size());
  const int n2 = static_cast<int>(g2.vars.size());
  const int small = std::min(n1, n2);
  if (static_cast<std::size_t>(small) > config.oracle_limit) return false;
  return InjectionCount(small, std::max(n1, n2),
                        config.oracle_max_injections) <=
         config.oracle_max_injections;
}

MatchResult BruteForceMatch(const GraphRepr& g1, const GraphRepr& g2,
                            const MatchConfig& config) {
  if (!OracleApplicable(g1, g2, config)) {
    throw InputError("graph pair too large for exhaustive matching (" +
                     std::to_string(g1.vars.size()) + " x " +
                     std::to_string(g2.vars.size()) + " variables)");
  }
  const Problem p(g1, g2, config);
  const int n1 = p.n1();
  const int n2 = p.n2();
  VarMapping m(n1, -1);
  VarMapping best = m;
  double best_score = p.Score(m);

  if (n1 <= n2) {
    // Every g1 variable gets a distinct g2 variable.
    std::vector<bool> used(n2, false);
    auto rec = [&](auto&& self, int i, double acc) -> void {
      if (i == n1) {
        if (acc > best_score + kMinGain) {
          best_score = acc;
          best = m;
        }
        return;
      }
      for (int j = 0; j < n2; ++j) {
        if (used[j]) continue;
        used[j] = true;
        m[i] = j;
        double add = p.Phi(i, j);
        for (int k : p.Incident(i)) {
          const EdgeRef& e = p.edges1()[k];
          if (e.a <= i && e.b <= i) add += p.EdgeValue(e, m);
        }
        self(self, i + 1, acc + add);
        m[i] = -1;
        used[j] = false;
      }
    };
    rec(rec, 0, 0.0);
  } else {
    // Every g2 variable receives a distinct g1 variable.
    std::vector<bool> used(n1, false);
    auto rec = [&](auto&& self, int j) -> void {
      if (j == n2) {
        const double s = p.Score(m);
        if (s > best_score + kMinGain) {
          best_score = s;
          best = m;
        }
        return;
      }
      for (int i = 0; i < n1; ++i) {
        if (used[i]) continue;
        used[i] = true;
        m[i] = j;
        self(self, j + 1);
        m[i] = -1;
        used[i] = false;
      }
    };
    rec(rec, 0);
  }
  // Report the exact value of the chosen mapping, not the running sum.
  return Finish(g1, g2, best, p.Score(best));
}

MatchResult HillClimbMatch(const GraphRepr& g1, const GraphRepr& g2,
                           const MatchConfig& config) {
  if (config.restarts < 0) throw InputError("restarts must be nonnegative");
  const Problem p(g1, g2, config);
  const int n1 = p.n1();
  const int n2 = p.n2();
  const std::vector<int> rank1 = Ranks(g1);
  const std::vector<int> rank2 = Ranks(g2);
  std::vector<int> order1(n1);
  std::vector<int> order2(n2);
  for (int i = 0; i < n1; ++i) order1[rank1[i]] = i;
  for (int j = 0; j < n2; ++j) order2[rank2[j]] = j;
  const std::size_t max_moves =
      config.max_moves.value_or(10 * static_cast<std::size_t>(n1) *
                                static_cast<std::size_t>(n2));
  const Climber climber(p, order1, order2, max_moves);

  // Smart initialization: greedy by descending phi.
  struct Cand {
    double phi;
    int i;
    int j;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      if (p.Phi(i, j) > 0.0) cands.push_back({p.Phi(i, j), i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
    if (a.phi != b.phi) return a.phi > b.phi;
    if (rank1[a.i] != rank1[b.i]) return rank1[a.i] < rank1[b.i];
    return rank2[a.j] < rank2[b.j];
  });
  VarMapping init(n1, -1);
  std::vector<bool> used(n2, false);
  for (const Cand& c : cands) {
    if (init[c.i] >= 0 || used[c.j]) continue;
    init[c.i] = c.j;
    used[c.j] = true;
  }
  VarMapping best = init;
  double best_score = climber.Climb(best);

  // Second start: the assignment that is optimal for the instance scores
  // alone.
  if (n1 > 0 && n2 > 0) {
    std::vector<std::vector<double>> weights(n1, std::vector<double>(n2));
    for (int i = 0; i < n1; ++i) {
      for (int j = 0; j < n2; ++j) weights[i][j] = p.Phi(i, j);
    }
    VarMapping m = AssignmentMax(weights);
    for (int i = 0; i < n1; ++i) {
      if (m[i] >= 0 && p.Phi(i, m[i]) <= 0.0) m[i] = -1;
    }
    const double s = climber.Climb(m);
    if (s > best_score + kMinGain) {
      best_score = s;
      best = std::move(m);
    }
  }

  std::mt19937_64 rng(config.seed);
  for (int r = 0; r < config.restarts; ++r) {
    std::vector<int> targets(order2);
    std::vector<int> sources(order1);
    std::shuffle(targets.begin(), targets.end(), rng);
    std::shuffle(sources.begin(), sources.end(), rng);
    VarMapping m(n1, -1);
    for (int k = 0; k < std::min(n1, n2); ++k) m[sources[k]] = targets[k];
    const double s = climber.Climb(m);
    if (s > best_score + kMinGain) {
      best_score = s;
      best = std::move(m);
    }
  }
  return Finish(g1, g2, best, best_score);
}

MatchResult SmatchMatch(const GraphRepr& g1, const GraphRepr& g2,
                        MatchConfig config) {
  config.phi = SimilaritySpec::Delta();
  config.psi = SimilaritySpec::Delta();
  return HillClimbMatch(g1, g2, config);
}

CorpusScore ScoreCorpus(std::span<const GraphRepr> system,
                        std::span<const GraphRepr> gold,
                        const MatchConfig& config,
                        const CorpusOptions& options) {
  if (system.size() != gold.size()) {
    throw AlignmentError("system has " + std::to_string(system.size()) +
                         " graphs but gold has " + std::to_string(gold.size()));
  }
  if (system.empty()) throw InputError("empty corpus");
  CorpusScore out;
  out.pairs.resize(system.size());
  std::vector<char> eligible(system.size(), 0);
  ParallelFor(system.size(), options.workers, [&](std::size_t i) {
    MatchConfig c = config;
    c.seed = MixSeed(config.seed, i);
    MatchResult r = HillClimbMatch(system[i], gold[i], c);
    if (options.oracle && OracleApplicable(system[i], gold[i], c)) {
      const MatchResult exact = BruteForceMatch(system[i], gold[i], c);
      r.climbs_to_optimum = r.score >= exact.score - 1e-9;
      eligible[i] = 1;
    }
    out.pairs[i] = std::move(r);
  });
  for (std::size_t i = 0; i < system.size(); ++i) {
    out.total_score += out.pairs[i].score;
    out.system_total += static_cast<double>(MatchDenominator(system[i]));
    out.gold_total += static_cast<double>(MatchDenominator(gold[i]));
    if (eligible[i]) {
      ++out.oracle_eligible;
      if (*out.pairs[i].climbs_to_optimum) ++out.oracle_hits;
    }
  }
  out.prf = MakePrf(out.total_score, out.system_total, out.total_score,
                    out.gold_total);
  return out;
}

}  // namespace xsem

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mlrepair/minilang/ast.hpp"
#include "mlrepair/minilang/interp.hpp"
#include "mlrepair/testkit.hpp"

namespace mlrepair::faultloc {

using minilang::EventKind;
using minilang::ExecTrace;
using minilang::NodeUid;
using minilang::Program;
using minilang::StmtKind;
using minilang::Termination;

// Per-statement coverage counts. nf and np follow from the totals:
// ef + nf = F and ep + np = P for every statement.
struct Spectrum {
  int total_failing = 0;  // F
  int total_passing = 0;  // P
  std::map<NodeUid, std::pair<int, int>> counts;  // uid -> (ef, ep)

  int ef(NodeUid u) const {
    auto it = counts.find(u);
    return it == counts.end() ? 0 : it->second.first;
  }
  int ep(NodeUid u) const {
    auto it = counts.find(u);
    return it == counts.end() ? 0 : it->second.second;
  }
  int nf(NodeUid u) const { return total_failing - ef(u); }
  int np(NodeUid u) const { return total_passing - ep(u); }
};

// A statement is covered by a test iff any of the test's executed assertions
// reached it.
inline Spectrum collect_spectrum(const Program& p,
                                 const std::vector<testkit::TestCase>& suite,
                                 long long fuel = minilang::kDefaultFuel) {
  testkit::SuiteRunOptions opts;
  opts.fuel = fuel;
  opts.want_coverage = true;
  auto report = testkit::run_suite(p, suite, opts);

  Spectrum sp;
  sp.total_failing = report.failing;
  sp.total_passing = report.passing;
  for (const auto& tr : report.tests) {
    for (size_t u = 0; u < tr.coverage.size(); ++u) {
      if (!tr.coverage[u]) continue;
      auto& c = sp.counts[static_cast<NodeUid>(u)];
      if (tr.passed)
        ++c.second;
      else
        ++c.first;
    }
  }
  return sp;
}

// Ochiai suspiciousness: ef / sqrt(F * (ef + ep)), 0 when the denominator
// vanishes.
inline double ochiai_score(int ef, int ep, int total_failing) {
  double denom = std::sqrt(static_cast<double>(total_failing) *
                           static_cast<double>(ef + ep));
  if (denom == 0.0) return 0.0;
  return static_cast<double>(ef) / denom;
}

struct RankEntry {
  NodeUid node = -1;
  minilang::NodeRef id;
  int line = 0;
  double score = 0.0;
};

struct Ranking {
  std::vector<RankEntry> entries;

  bool contains(NodeUid u) const {
    for (const auto& e : entries)
      if (e.node == u) return true;
    return false;
  }
};

namespace detail {

inline void sort_entries(std::vector<RankEntry>& es) {
  std::stable_sort(es.begin(), es.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.line != b.line) return a.line < b.line;
    if (a.id.fn != b.id.fn) return a.id.fn < b.id.fn;
    return a.id.index < b.id.index;
  });
}

}  // namespace detail

// Descending score; ties broken by ascending line, then function name.
inline Ranking rank(const Program& p, const Spectrum& sp) {
  Ranking r;
  for (const auto& [uid, c] : sp.counts) {
    RankEntry e;
    e.node = uid;
    e.id = p.nodes[uid].id;
    e.line = p.nodes[uid].line;
    e.score = ochiai_score(c.first, c.second, sp.total_failing);
    r.entries.push_back(std::move(e));
  }
  detail::sort_entries(r.entries);
  return r;
}

// Error propagation chain: the executed statements lying on a dynamic
// dependence path from the seed to the failure observation node.
struct Epc {
  NodeUid seed = -1;
  std::string run;  // failing test name
  std::vector<NodeUid> chain;
};

namespace detail {

struct DepGraph {
  std::vector<std::vector<int>> out;
  std::vector<std::vector<int>> in;

  void add_edge(int a, int b) {
    if (a < 0 || b < 0 || a == b) return;
    out[static_cast<size_t>(a)].push_back(b);
    in[static_cast<size_t>(b)].push_back(a);
  }
};

// Dynamic dependence graph over trace events: data edges via definition-use
// pairs within a frame, parameter/return edges across call boundaries, and
// control edges from each governing occurrence to the events it governs.
inline DepGraph build_dependence(const Program& p, const ExecTrace& t) {
  const auto& ev = t.events;
  DepGraph g;
  g.out.resize(ev.size());
  g.in.resize(ev.size());

  // frame -> (var -> defining step); parameters bind at the caller's event.
  std::map<int, std::map<std::string, int>> last_def;
  std::map<int, int> frame_entry_gov;

  for (size_t i = 0; i < ev.size(); ++i) {
    const auto& e = ev[i];
    const auto& info = p.nodes[e.node];
    int step = static_cast<int>(i);

    if (!frame_entry_gov.count(e.frame)) {
      frame_entry_gov[e.frame] = e.gov;
      if (e.gov >= 0) {
        // First event of a frame: bind every parameter of this function to
        // the call-site event.
        int fn_index = info.fn_index;
        for (const auto& prm : p.functions[static_cast<size_t>(fn_index)].params)
          last_def[e.frame][prm.name] = e.gov;
      }
    }

    if (e.gov >= 0) g.add_edge(e.gov, step);

    auto& frame_defs = last_def[e.frame];
    for (const auto& u : info.uses) {
      auto it = frame_defs.find(u);
      if (it != frame_defs.end()) g.add_edge(it->second, step);
    }
    for (const auto& d : info.defs) frame_defs[d] = step;

    // Return value flows back to the call-site event.
    if (info.is_stmt && info.stmt_kind == StmtKind::Return) {
      int entry = frame_entry_gov[e.frame];
      if (entry >= 0 && ev[static_cast<size_t>(entry)].frame != e.frame)
        g.add_edge(step, entry);
    }
  }
  return g;
}

inline std::vector<char> reach(const DepGraph& g,
                               const std::vector<std::vector<int>>& adj,
                               int start) {
  std::vector<char> seen(g.out.size(), 0);
  std::vector<int> stack{start};
  seen[static_cast<size_t>(start)] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : adj[static_cast<size_t>(v)]) {
      if (!seen[static_cast<size_t>(w)]) {
        seen[static_cast<size_t>(w)] = 1;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

// Failure observation node of a failing run: the statement raising the
// runtime error, or the return statement that produced the wrong value.
inline int failure_event(const Program& p, const ExecTrace& t) {
  if (t.events.empty()) return -1;
  if (t.term.kind == Termination::Kind::RuntimeError ||
      t.term.kind == Termination::Kind::FuelExhausted)
    return static_cast<int>(t.events.size()) - 1;
  int entry_frame = t.events.front().frame;
  for (int i = static_cast<int>(t.events.size()) - 1; i >= 0; --i) {
    const auto& e = t.events[static_cast<size_t>(i)];
    const auto& info = p.nodes[e.node];
    if (e.frame == entry_frame && info.is_stmt &&
        info.stmt_kind == StmtKind::Return)
      return i;
  }
  return static_cast<int>(t.events.size()) - 1;
}

}  // namespace detail

// Chain from the last executed instance of the seed to the failure node:
// every event lying on a dependence path between them, in execution order,
// deduplicated by node.
inline std::optional<Epc> compute_epc(const Program& p, const ExecTrace& t,
                                      NodeUid seed,
                                      const std::string& run_name = "") {
  int seed_ev = -1;
  for (int i = static_cast<int>(t.events.size()) - 1; i >= 0; --i) {
    if (t.events[static_cast<size_t>(i)].node == seed) {
      seed_ev = i;
      break;
    }
  }
  if (seed_ev < 0) return std::nullopt;
  int fail_ev = detail::failure_event(p, t);
  if (fail_ev < 0) return std::nullopt;

  auto g = detail::build_dependence(p, t);
  auto fwd = detail::reach(g, g.out, seed_ev);
  if (!fwd[static_cast<size_t>(fail_ev)]) return std::nullopt;
  auto bwd = detail::reach(g, g.in, fail_ev);

  NodeUid fail_node = t.events[static_cast<size_t>(fail_ev)].node;
  Epc epc;
  epc.seed = seed;
  epc.run = run_name;
  if (seed == fail_node) {
    epc.chain = {seed};
    return epc;
  }
  std::set<NodeUid> picked;
  for (size_t i = static_cast<size_t>(seed_ev); i <= static_cast<size_t>(fail_ev);
       ++i) {
    if (!fwd[i] || !bwd[i]) continue;
    NodeUid n = t.events[i].node;
    if (picked.insert(n).second) epc.chain.push_back(n);
  }
  // The failure node closes the chain even when it also executed earlier.
  auto it = std::find(epc.chain.begin(), epc.chain.end(), fail_node);
  if (it != epc.chain.end()) epc.chain.erase(it);
  epc.chain.push_back(fail_node);
  return epc;
}

// Node ids present in every chain.
inline std::set<NodeUid> epc_intersections(const std::vector<Epc>& chains) {
  std::set<NodeUid> acc;
  if (chains.empty()) return acc;
  acc.insert(chains[0].chain.begin(), chains[0].chain.end());
  for (size_t i = 1; i < chains.size(); ++i) {
    std::set<NodeUid> cur(chains[i].chain.begin(), chains[i].chain.end());
    std::set<NodeUid> keep;
    for (NodeUid u : acc)
      if (cur.count(u)) keep.insert(u);
    acc = std::move(keep);
  }
  return acc;
}

// Injects pairwise EPC intersections into the ranking. Nodes already ranked
// are left untouched; new nodes enter with the maximum score among the top-k
// seeds whose chains contributed them.
inline Ranking merge_intersections_into_ranking(const Program& p,
                                                const Ranking& ranking, int k,
                                                const std::vector<Epc>& chains) {
  std::map<NodeUid, double> seed_score;
  int limit = std::min<int>(k, static_cast<int>(ranking.entries.size()));
  for (int i = 0; i < limit; ++i)
    seed_score[ranking.entries[static_cast<size_t>(i)].node] =
        ranking.entries[static_cast<size_t>(i)].score;

  std::map<NodeUid, double> injected;
  for (size_t i = 0; i < chains.size(); ++i) {
    for (size_t j = i + 1; j < chains.size(); ++j) {
      if (chains[i].seed == chains[j].seed) continue;
      auto si = seed_score.find(chains[i].seed);
      auto sj = seed_score.find(chains[j].seed);
      if (si == seed_score.end() || sj == seed_score.end()) continue;
      double contributed = std::max(si->second, sj->second);
      std::set<NodeUid> a(chains[i].chain.begin(), chains[i].chain.end());
      for (NodeUid u : chains[j].chain) {
        if (!a.count(u)) continue;
        if (ranking.contains(u)) continue;  // already listed: no operation
        auto [it, fresh] = injected.try_emplace(u, contributed);
        if (!fresh && contributed > it->second) it->second = contributed;
      }
    }
  }

  Ranking out = ranking;
  for (const auto& [uid, score] : injected) {
    RankEntry e;
    e.node = uid;
    e.id = p.nodes[uid].id;
    e.line = p.nodes[uid].line;
    e.score = score;
    out.entries.push_back(std::move(e));
  }
  detail::sort_entries(out.entries);
  return out;
}

struct FaultyLine {
  std::string fn;
  int line = 0;
};

// Line_Assumption: known faulty lines move to the head of the ranking with
// score 1.0, keeping their source order; lines absent from the ranking
// (never executed) are prepended anyway.
inline Ranking line_assumption(const Program& p, const Ranking& ranking,
                               const std::vector<FaultyLine>& faulty) {
  std::vector<RankEntry> head;
  std::set<NodeUid> promoted;
  for (const auto& fl : faulty) {
    NodeUid u = p.unit_at(fl.fn, fl.line);
    if (u < 0 || promoted.count(u)) continue;
    promoted.insert(u);
    RankEntry e;
    e.node = u;
    e.id = p.nodes[u].id;
    e.line = p.nodes[u].line;
    e.score = 1.0;
    head.push_back(std::move(e));
  }
  std::stable_sort(head.begin(), head.end(),
                   [&](const RankEntry& a, const RankEntry& b) {
                     int fa = p.nodes[a.node].fn_index;
                     int fb = p.nodes[b.node].fn_index;
                     if (fa != fb) return fa < fb;
                     return a.line < b.line;
                   });

  Ranking out;
  out.entries = std::move(head);
  for (const auto& e : ranking.entries)
    if (!promoted.count(e.node)) out.entries.push_back(e);
  return out;
}

}  // namespace mlrepair::faultloc

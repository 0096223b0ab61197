// Copyright 2026 gfz project authors. All rights reserved.
// Use of this source code is governed by Apache 2 LICENSE that can be found in the LICENSE file.

#pragma once

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <unordered_map>
#include <vector>

#include "gfz/graph.hpp"

namespace gfz {

/// Block-level static distance: find the functions that can reach the target
/// over the call graph, stitch their CFGs into a local inter-procedural CFG,
/// and run a reverse breadth-first search from the target block. Distances
/// are hop counts; blocks with no path to the target are simply absent.

struct TargetSite {
  BlockId block;
};

// Parses "function@index". The file:line form goes through
// resolve_target_loc instead.
inline TargetSite resolve_target(const Program& p, const std::string& spec) {
  auto at = spec.rfind('@');
  if (at == std::string::npos)
    throw ValidationError("target \"" + spec + "\" is not of the form function@block");
  std::string fname = spec.substr(0, at);
  FuncId f = p.func(fname);
  std::uint32_t idx = 0;
  try {
    idx = static_cast<std::uint32_t>(std::stoul(spec.substr(at + 1)));
  } catch (const std::exception&) {
    throw ValidationError("target \"" + spec + "\" has a malformed block index");
  }
  BlockId b{f, idx};
  if (!p.has_block(b))
    throw ValidationError("target block " + p.block_name(b) + " does not exist");
  return TargetSite{b};
}

inline TargetSite resolve_target_loc(const Program& p, const std::string& loc) {
  auto hits = blocks_at_source_loc(p, loc);
  if (hits.empty())
    throw ValidationError("no block carries source location \"" + loc + "\"");
  if (hits.size() > 1)
    throw ValidationError("source location \"" + loc + "\" is ambiguous (" +
                          std::to_string(hits.size()) + " blocks)");
  return TargetSite{hits.front()};
}

// Functions lying on some call-graph path to the target's function, found by
// walking callers bottom-up from the target. Hop counts are minimal.
struct ReachableSet {
  std::vector<FuncId> functions;  // sorted
  std::map<FuncId, std::uint32_t> hops;
  std::vector<std::pair<std::string, std::uint32_t>> entry_syscalls;  // name -> hops

  bool contains(FuncId f) const { return hops.count(f) != 0; }
};

inline ReachableSet reachable_set(const Program& p, const CallGraph& cg,
                                  TargetSite target) {
  if (!p.has_block(target.block))
    throw ValidationError("target block does not exist");
  ReachableSet rs;
  std::deque<FuncId> work;
  rs.hops[target.block.func] = 0;
  work.push_back(target.block.func);
  while (!work.empty()) {
    FuncId f = work.front();
    work.pop_front();
    std::uint32_t h = rs.hops[f];
    for (FuncId caller : cg.callers[f]) {
      if (rs.hops.count(caller)) continue;
      rs.hops[caller] = h + 1;
      work.push_back(caller);
    }
  }
  for (const auto& [f, h] : rs.hops) {
    rs.functions.push_back(f);
    if (p.functions[f].syscall_entry)
      rs.entry_syscalls.emplace_back(*p.functions[f].syscall_entry, h);
  }
  std::sort(rs.functions.begin(), rs.functions.end());
  std::sort(rs.entry_syscalls.begin(), rs.entry_syscalls.end());
  return rs;
}

// CFGs of the reachable functions connected by call-site -> callee-entry
// edges. Return edges are intentionally not modeled; the map guides forward
// progress toward the target.
struct InterCfg {
  std::vector<BlockId> nodes;  // sorted
  std::vector<std::vector<std::uint32_t>> succ;
  std::vector<std::vector<std::uint32_t>> pred;

  std::optional<std::uint32_t> node_index(BlockId b) const {
    auto it = index_.find(b.key());
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& s : succ) n += s.size();
    return n;
  }

  void finalize() {
    index_.clear();
    for (std::uint32_t i = 0; i < nodes.size(); ++i) index_.emplace(nodes[i].key(), i);
  }

 private:
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
};

inline InterCfg build_inter_cfg(const Program& p, const CallGraph& cg,
                                const ReachableSet& rs) {
  InterCfg g;
  for (FuncId f : rs.functions)
    for (const auto& b : p.cfgs[f].blocks) g.nodes.push_back({f, b.index});
  std::sort(g.nodes.begin(), g.nodes.end());
  g.finalize();
  g.succ.resize(g.nodes.size());
  g.pred.resize(g.nodes.size());

  auto add_edge = [&](BlockId from, BlockId to) {
    auto fi = g.node_index(from);
    auto ti = g.node_index(to);
    if (!fi || !ti) return;
    g.succ[*fi].push_back(*ti);
    g.pred[*ti].push_back(*fi);
  };

  for (FuncId f : rs.functions)
    for (const auto& [from, to] : p.cfgs[f].edges)
      add_edge({f, from}, {f, to});

  for (std::size_t s = 0; s < p.call_sites.size(); ++s) {
    const auto& cs = p.call_sites[s];
    if (!rs.contains(cs.caller.func)) continue;
    for (FuncId callee : cg.site_targets[s]) {
      if (!rs.contains(callee)) continue;  // no call edge toward pruned code
      add_edge(cs.caller, {callee, p.cfgs[callee].entry});
    }
  }

  for (auto& v : g.succ) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  for (auto& v : g.pred) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return g;
}

class DistanceMap {
 public:
  void set(BlockId b, std::uint32_t d) { d_[b.key()] = d; }

  Distance lookup(BlockId b) const {
    auto it = d_.find(b.key());
    if (it == d_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(BlockId b) const { return d_.count(b.key()) != 0; }
  std::size_t size() const { return d_.size(); }
  bool empty() const { return d_.empty(); }

  std::vector<std::pair<BlockId, std::uint32_t>> entries() const {
    std::vector<std::pair<BlockId, std::uint32_t>> out;
    out.reserve(d_.size());
    for (const auto& [k, v] : d_)
      out.emplace_back(BlockId{static_cast<FuncId>(k >> 32),
                               static_cast<std::uint32_t>(k & 0xffffffffu)},
                       v);
    std::sort(out.begin(), out.end());
    return out;
  }

  bool operator==(const DistanceMap& other) const { return d_ == other.d_; }

 private:
  std::unordered_map<std::uint64_t, std::uint32_t> d_;
};

// Reverse BFS from the target over the inter-procedural CFG; O(V+E).
inline DistanceMap bfs_distance(const InterCfg& g, TargetSite target) {
  DistanceMap dm;
  auto t = g.node_index(target.block);
  if (!t) throw ValidationError("target block is not part of the inter-procedural CFG");
  std::vector<std::uint32_t> dist(g.nodes.size(), UINT32_MAX);
  std::deque<std::uint32_t> work;
  dist[*t] = 0;
  work.push_back(*t);
  while (!work.empty()) {
    auto n = work.front();
    work.pop_front();
    for (auto pr : g.pred[n]) {
      if (dist[pr] != UINT32_MAX) continue;
      dist[pr] = dist[n] + 1;
      work.push_back(pr);
    }
  }
  for (std::uint32_t i = 0; i < g.nodes.size(); ++i)
    if (dist[i] != UINT32_MAX) dm.set(g.nodes[i], dist[i]);
  return dm;
}

// The distance of an input is the shortest static distance over the blocks
// it covered.
inline Distance seed_distance(const DistanceMap& dm,
                              const std::vector<BlockId>& covered) {
  Distance best;
  for (const auto& b : covered) {
    auto d = dm.lookup(b);
    if (closer(d, best)) best = d;
  }
  return best;
}

// Function-level approximation: every block of a reachable function gets its
// function's call-graph hop count times ten. Exists only as the degraded
// baseline behind the bench mode flag.
inline DistanceMap function_level_distance_map(const Program& p,
                                               const ReachableSet& rs) {
  DistanceMap dm;
  for (FuncId f : rs.functions) {
    std::uint32_t d = rs.hops.at(f) * 10;
    for (const auto& b : p.cfgs[f].blocks) dm.set({f, b.index}, d);
  }
  return dm;
}

// One record per line: function <TAB> block_index <TAB> distance, sorted by
// (function name, block index). Unreachable blocks are absent, never a
// sentinel value.
inline void write_distance_map(const DistanceMap& dm, const Program& p,
                               const std::filesystem::path& path) {
  std::vector<std::tuple<std::string, std::uint32_t, std::uint32_t>> rows;
  for (const auto& [b, d] : dm.entries())
    rows.emplace_back(p.functions[b.func].name, b.index, d);
  std::sort(rows.begin(), rows.end());
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  for (const auto& [fn, idx, d] : rows)
    out << fn << '\t' << idx << '\t' << d << '\n';
  if (!out) throw ParseError("write failed for " + path.string());
}

inline DistanceMap read_distance_map(const Program& p,
                                     const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  DistanceMap dm;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string fn;
    std::uint32_t idx, d;
    if (!std::getline(ls, fn, '\t') || !(ls >> idx >> d))
      throw ParseError("malformed distance record at " + path.string() + ":" +
                       std::to_string(lineno));
    BlockId b{p.func(fn), idx};
    if (!p.has_block(b))
      throw ValidationError("distance record names missing block " + p.block_name(b));
    dm.set(b, d);
  }
  return dm;
}

}  // namespace gfz

// Copyright 2026 gfz project authors. All rights reserved.
// Use of this source code is governed by Apache 2 LICENSE that can be found in the LICENSE file.

// Shared test utilities: fixture paths, random program generation, and the
// independent oracles (unit-weight Dijkstra, exhaustive subsequence search,
// rank-based effect size, recursive permutation enumeration). The oracles
// deliberately use different algorithms than the library code they check.

#pragma once

#include <filesystem>
#include <queue>
#include <set>

#include <json.hpp>

#include "gfz/gfz.hpp"

namespace gfz_test {

inline std::string scenario_path(const std::string& name) {
  return std::string(GFZ_SCENARIO_DIR) + "/" + name;
}

inline gfz::Scenario load_fixture(const std::string& name) {
  return gfz::load_scenario(scenario_path(name));
}

// Unit-weight Dijkstra from the target over reversed edges, priority-queue
// based; the independent route against the engine's breadth-first search.
inline std::map<gfz::BlockId, std::uint32_t> dijkstra_unit(const gfz::InterCfg& g,
                                                           gfz::BlockId target) {
  std::map<gfz::BlockId, std::uint32_t> out;
  auto t = g.node_index(target);
  if (!t) return out;
  std::vector<std::uint32_t> dist(g.nodes.size(), UINT32_MAX);
  using Item = std::pair<std::uint32_t, std::uint32_t>;  // (dist, node)
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[*t] = 0;
  pq.push({0, *t});
  while (!pq.empty()) {
    auto [d, n] = pq.top();
    pq.pop();
    if (d > dist[n]) continue;
    for (auto pr : g.pred[n]) {
      std::uint32_t nd = d + 1;
      if (nd < dist[pr]) {
        dist[pr] = nd;
        pq.push({nd, pr});
      }
    }
  }
  for (std::uint32_t i = 0; i < g.nodes.size(); ++i)
    if (dist[i] != UINT32_MAX) out[g.nodes[i]] = dist[i];
  return out;
}

// Reachable set containing every function, for full-graph oracles.
inline gfz::ReachableSet all_functions(const gfz::Program& p) {
  gfz::ReachableSet rs;
  for (gfz::FuncId f = 0; f < p.functions.size(); ++f) {
    rs.functions.push_back(f);
    rs.hops[f] = 0;
  }
  return rs;
}

struct RandomProgram {
  gfz::Program program;
  gfz::BlockId target;
};

// Random interchange document: up to max_funcs functions and max_blocks
// blocks total, around a third of call sites indirect, signatures drawn from
// a small pool so indirect matches fan out.
inline RandomProgram random_program(gfz::RandomSource& rng,
                                    std::uint32_t max_funcs = 30,
                                    std::uint32_t max_blocks = 200) {
  std::uint32_t n_funcs = 3 + static_cast<std::uint32_t>(rng.index(max_funcs - 2));
  std::uint32_t budget = max_blocks;
  nlohmann::json functions = nlohmann::json::array();
  nlohmann::json cfgs = nlohmann::json::array();
  nlohmann::json call_sites = nlohmann::json::array();
  nlohmann::json syscall_map = nlohmann::json::object();

  std::vector<std::uint32_t> block_counts;
  for (std::uint32_t f = 0; f < n_funcs; ++f) {
    std::string name = "f" + std::to_string(f);
    nlohmann::json jf = {{"name", name},
                         {"signature", "sig" + std::to_string(rng.index(5))}};
    if (rng.chance(0.3)) {
      std::string sc = "sc_" + name;
      jf["syscall_entry"] = sc;
      syscall_map[sc] = name;
    }
    functions.push_back(jf);

    std::uint32_t remaining_funcs = n_funcs - f;
    std::uint32_t cap = std::max<std::uint32_t>(1, budget - (remaining_funcs - 1));
    std::uint32_t nb = 1 + static_cast<std::uint32_t>(
                               rng.index(std::min<std::uint32_t>(cap, 12)));
    budget -= nb;
    block_counts.push_back(nb);

    nlohmann::json blocks = nlohmann::json::array();
    for (std::uint32_t b = 0; b < nb; ++b) blocks.push_back({{"index", b}});
    nlohmann::json edges = nlohmann::json::array();
    for (std::uint32_t b = 1; b < nb; ++b)
      edges.push_back({rng.index(b), b});  // keeps every block entry-reachable
    for (std::uint32_t e = 0; e < nb / 2; ++e)
      edges.push_back({rng.index(nb), rng.index(nb)});
    cfgs.push_back({{"function", name},
                    {"entry", 0},
                    {"blocks", blocks},
                    {"edges", edges}});
  }

  for (std::uint32_t f = 0; f < n_funcs; ++f) {
    std::uint32_t n_sites = static_cast<std::uint32_t>(rng.index(3));
    for (std::uint32_t s = 0; s < n_sites; ++s) {
      nlohmann::json site = {{"caller_function", "f" + std::to_string(f)},
                             {"caller_block", rng.index(block_counts[f])}};
      if (rng.chance(0.35)) {
        site["kind"] = "indirect";
        site["signature"] = "sig" + std::to_string(rng.index(5));
      } else {
        site["kind"] = "direct";
        site["callee"] = "f" + std::to_string(rng.index(n_funcs));
      }
      call_sites.push_back(site);
    }
  }

  nlohmann::json doc = {{"functions", functions},
                        {"cfgs", cfgs},
                        {"call_sites", call_sites},
                        {"syscall_map", syscall_map}};
  RandomProgram rp;
  rp.program = gfz::parse_program(doc);
  gfz::FuncId tf = static_cast<gfz::FuncId>(rng.index(n_funcs));
  rp.target = {tf, static_cast<std::uint32_t>(rng.index(block_counts[tf]))};
  return rp;
}

// Exhaustive subsequence search: the shortest subsequence of `poc` that
// still triggers, or nullopt. Independent check for the greedy minimizer.
inline std::optional<std::size_t> min_triggering_subsequence_len(
    const gfz::Input& poc, const gfz::Executor& ex, gfz::BlockId target) {
  const std::size_t n = poc.calls.size();
  std::optional<std::size_t> best;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    gfz::Input sub;
    std::vector<std::uint32_t> remap(n, UINT32_MAX);
    bool valid = true;
    for (std::size_t i = 0; i < n && valid; ++i) {
      if (!(mask & (1u << i))) continue;
      gfz::Call c = poc.calls[i];
      for (auto& a : c.args)
        if (auto* r = std::get_if<gfz::ResourceRef>(&a)) {
          if (remap[r->call_index] == UINT32_MAX)
            a = gfz::ArgValue{std::int64_t{0}};  // dependency dropped
          else
            r->call_index = remap[r->call_index];
        }
      remap[i] = static_cast<std::uint32_t>(sub.calls.size());
      sub.calls.push_back(std::move(c));
    }
    if (best && sub.calls.size() >= *best) continue;
    auto res = ex.run(sub);
    if (std::binary_search(res.covered.begin(), res.covered.end(), target))
      best = sub.calls.size();
  }
  return best;
}

// Rank-based effect size, the textbook formula: the independent route
// against the pairwise enumeration in the library.
inline double a12_by_ranks(const std::vector<double>& ours,
                           const std::vector<double>& baseline) {
  struct Tagged {
    double v;
    bool ours;
  };
  std::vector<Tagged> pool;
  for (double v : ours) pool.push_back({v, true});
  for (double v : baseline) pool.push_back({v, false});
  std::sort(pool.begin(), pool.end(),
            [](const Tagged& a, const Tagged& b) { return a.v < b.v; });
  std::vector<double> rank(pool.size());
  std::size_t i = 0;
  while (i < pool.size()) {
    std::size_t j = i;
    while (j < pool.size() && pool[j].v == pool[i].v) ++j;
    double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) rank[k] = mid;
    i = j;
  }
  double r1 = 0;
  for (std::size_t k = 0; k < pool.size(); ++k)
    if (pool[k].ours) r1 += rank[k];
  double m = static_cast<double>(ours.size());
  double n = static_cast<double>(baseline.size());
  // larger rank sum means larger values; invert so smaller-is-better wins
  double a_greater = (r1 / m - (m + 1.0) / 2.0) / n;
  return 1.0 - a_greater;
}

// Exact one-sided permutation p-value by recursive subset choice, a
// different enumeration than the library's next_permutation sweep.
inline double exact_p_by_subsets(const std::vector<double>& ours,
                                 const std::vector<double>& baseline) {
  std::vector<double> pool = ours;
  pool.insert(pool.end(), baseline.begin(), baseline.end());
  const std::size_t m = ours.size();
  auto u_of = [](const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0;
    for (double x : a)
      for (double y : b) {
        if (x < y) u += 1;
        else if (x == y) u += 0.5;
      }
    return u;
  };
  double u_obs = u_of(ours, baseline);
  std::uint64_t total = 0, at_least = 0;
  std::vector<std::size_t> chosen;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (chosen.size() == m) {
      std::vector<double> a, b;
      std::vector<bool> in(pool.size(), false);
      for (auto c : chosen) in[c] = true;
      for (std::size_t k = 0; k < pool.size(); ++k) (in[k] ? a : b).push_back(pool[k]);
      ++total;
      if (u_of(a, b) >= u_obs - 1e-9) ++at_least;
      return;
    }
    for (std::size_t k = start; k + (m - chosen.size()) <= pool.size(); ++k) {
      chosen.push_back(k);
      rec(k + 1);
      chosen.pop_back();
    }
  };
  rec(0);
  return static_cast<double>(at_least) / static_cast<double>(total);
}

}  // namespace gfz_test

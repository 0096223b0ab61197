// Copyright 2026 gfz project authors. All rights reserved.
// Use of this source code is governed by Apache 2 LICENSE that can be found in the LICENSE file.

#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "gfz/config.hpp"
#include "gfz/distance.hpp"
#include "gfz/inference.hpp"
#include "gfz/scenario.hpp"
#include "gfz/schedule.hpp"

namespace gfz {

/// The campaign loop. Seeds carry their coverage and static distance; new
/// coverage admits a seed to the global queue, a distance below the parent's
/// admits it to the shorter-distance queue and reinforces its syscalls'
/// selection weights. Seed selection follows the current phase: exploitation
/// samples m seeds and keeps the k closest, exploration picks proportionally
/// to coverage. Execution runs against an Executor, the extension point that
/// a real-kernel harness would implement.

class Executor {
 public:
  virtual ~Executor() = default;
  virtual ExecResult run(const Input& input) const = 0;
};

class ScenarioExecutor final : public Executor {
 public:
  explicit ScenarioExecutor(const Scenario& sc)
      : sc_(sc), cg_(resolve_indirect(sc.program)) {}
  ExecResult run(const Input& input) const override { return execute(sc_, cg_, input); }
  const Scenario& scenario() const { return sc_; }

 private:
  const Scenario& sc_;
  CallGraph cg_;
};

struct Seed {
  Input input;
  std::vector<BlockId> coverage;  // sorted
  Distance distance;
  Distance parent_distance;
};

struct SeedPool {
  std::vector<Seed> global_queue;   // inputs that triggered new coverage
  std::vector<Seed> shorter_queue;  // distance strictly below the parent's
};

struct TraceSample {
  double time = 0;
  std::string syscall;
  double probability = 0;
};

struct PhaseSpan {
  double time = 0;
  Phase phase = Phase::Initial;
};

struct CampaignResult {
  bool hit = false;
  double tte_secs = 0;  // censored at the budget when not hit
  std::uint64_t executions = 0;
  std::optional<Input> poc;
  std::vector<PhaseSpan> phases;
  std::vector<TraceSample> probability_trace;
  std::map<std::string, double> final_probabilities;
};

namespace detail {

// Insert `call` at `at`, shifting later calls' references.
inline void insert_call(Input& in, std::size_t at, Call call) {
  for (std::size_t i = at; i < in.calls.size(); ++i)
    for (auto& a : in.calls[i].args)
      if (auto* r = std::get_if<ResourceRef>(&a))
        if (r->call_index >= at) ++r->call_index;
  in.calls.insert(in.calls.begin() + static_cast<long>(at), std::move(call));
}

// Remove the call at `at`; references to it degrade to the integer zero
// (an unresolved resource), later references shift down.
inline void remove_call(Input& in, std::size_t at) {
  in.calls.erase(in.calls.begin() + static_cast<long>(at));
  for (std::size_t i = at; i < in.calls.size(); ++i)
    for (auto& a : in.calls[i].args) {
      auto* r = std::get_if<ResourceRef>(&a);
      if (!r) continue;
      if (r->call_index == at)
        a = ArgValue{std::int64_t{0}};
      else if (r->call_index > at)
        --r->call_index;
    }
}

}  // namespace detail

// Interesting constants per syscall: guard and block literals of every
// function its handler can reach. Stands in for a fuzzing dictionary.
inline std::map<std::string, std::vector<Constant>> syscall_dictionaries(
    const Scenario& sc, const CallGraph& cg) {
  std::map<std::string, std::vector<Constant>> out;
  for (const auto& [name, spec] : sc.syscalls) {
    std::set<FuncId> fwd{spec.handler};
    std::vector<FuncId> work{spec.handler};
    while (!work.empty()) {
      FuncId f = work.back();
      work.pop_back();
      for (FuncId callee : cg.callees[f])
        if (fwd.insert(callee).second) work.push_back(callee);
    }
    std::set<Constant> consts;
    for (FuncId f : fwd) {
      for (const auto& b : sc.program.cfgs[f].blocks)
        for (const auto& c : b.constants) consts.insert(c);
      for (const auto& [edge, guard] : sc.guards) {
        if (std::get<0>(edge) != f) continue;
        for (const auto& cond : guard)
          if (cond.kind == GuardCond::Kind::ArgEquals) consts.insert(cond.value);
      }
    }
    out[name].assign(consts.begin(), consts.end());
  }
  return out;
}

class Campaign {
 public:
  Campaign(const Scenario& sc, TargetSite target, DistanceMap dm,
           std::vector<InferredSyscall> inferred, const Executor& executor,
           const Config& cfg)
      : sc_(sc),
        target_(target),
        dm_(std::move(dm)),
        executor_(executor),
        cfg_(cfg),
        rng_(cfg.rng_seed),
        sched_{cfg.p_max, cfg.p_min, cfg.t_fuzz_secs} {
    cfg_.validate();
    for (auto& s : inferred)
      if (sc_.is_callable(s.name)) inferred_.push_back(std::move(s));
    std::vector<std::string> names;
    for (const auto& s : inferred_) names.push_back(s.name);
    weights_ = SyscallWeights(names);
    sw_.t_a = cfg_.t_a_secs;
    sw_.t_b = cfg_.t_b_secs;
    dict_ = syscall_dictionaries(sc_, resolve_indirect(sc_.program));
  }

  CampaignResult run() {
    result_ = CampaignResult{};
    result_.phases.push_back({0.0, Phase::Initial});

    for (auto& in : build_initial_seeds(cfg_.initial_seeds)) {
      if (hit_ || now_ >= cfg_.t_fuzz_secs) break;
      step(std::move(in), std::nullopt, /*initial=*/true);
    }

    switch (cfg_.mode) {
      case Mode::ExploreOnly:
      case Mode::Undirected:
        sw_.enter_explore(now_);
        sw_.pinned = true;
        break;
      case Mode::ExploitOnly:
        sw_.enter_exploit(now_);
        sw_.pinned = true;
        break;
      default:
        sw_.enter_exploit(now_);
    }
    result_.phases.push_back({now_, sw_.phase});

    while (!hit_ && now_ < cfg_.t_fuzz_secs && !pool_.global_queue.empty()) {
      std::size_t idx;
      if (pending_ && *pending_ < pool_.global_queue.size() &&
          sw_.phase == Phase::Explore) {
        idx = *pending_;  // fresh explore find mutates once before reselection
        pending_.reset();
      } else {
        pending_.reset();
        idx = select_seed(sw_.phase);
      }
      Seed sel = pool_.global_queue[idx];  // copy: admission grows the queue
      for (std::uint32_t b = 0; b < cfg_.mutation_burst; ++b) {
        if (hit_ || now_ >= cfg_.t_fuzz_secs) break;
        step(mutate(sel, now_), sel.distance, /*initial=*/false);
      }
    }

    result_.hit = hit_;
    result_.tte_secs = hit_ ? now_ : cfg_.t_fuzz_secs;
    result_.executions = execs_;
    for (const auto& s : inferred_)
      result_.final_probabilities[s.name] = weights_.selection_probability(s.name);
    return result_;
  }

  // --- pieces below are the unit-testable policy surface ---

  std::vector<Input> build_initial_seeds(std::uint32_t count) {
    std::vector<Input> out;
    for (std::uint32_t i = 0; i < count; ++i) {
      Input in;
      if (!inferred_.empty()) {
        insert_named(in, inferred_[rng_.index(inferred_.size())].name);
        if (rng_.chance(0.5) && !inferred_.empty())
          insert_named(in, inferred_[rng_.index(inferred_.size())].name);
      } else {
        std::uint32_t len = 1 + static_cast<std::uint32_t>(rng_.index(4));
        for (std::uint32_t j = 0; j < len; ++j) insert_random_call(in);
      }
      out.push_back(std::move(in));
    }
    return out;
  }

  // Exploitation: sample m, keep the k with the smallest distance (ties by
  // insertion order), pick uniformly among them. Exploration: pick a seed
  // with probability proportional to its coverage; distance plays no part.
  std::size_t select_seed(Phase phase) {
    const auto& q = pool_.global_queue;
    if (q.empty()) throw ValidationError("seed pool is empty");
    if (phase == Phase::Explore) {
      std::vector<double> w(q.size());
      for (std::size_t i = 0; i < q.size(); ++i)
        w[i] = static_cast<double>(q[i].coverage.size());
      return rng_.weighted(w);
    }
    std::size_t m = std::min<std::size_t>(cfg_.exploit_sample_m, q.size());
    std::vector<std::size_t> idx(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < m; ++i)
      std::swap(idx[i], idx[i + rng_.index(q.size() - i)]);
    idx.resize(m);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      auto da = q[a].distance, db = q[b].distance;
      if (da != db) return closer(da, db);
      return a < b;
    });
    std::size_t k = std::min<std::size_t>(cfg_.exploit_top_k, idx.size());
    return idx[rng_.index(k)];
  }

  Input mutate(const Seed& seed, double t) {
    Input in = seed.input;
    if (!inferred_.empty() && rng_.chance(utilization_probability(sched_, t)) &&
        in.calls.size() < cfg_.max_calls) {
      insert_named(in, weights_.sample(rng_));
    } else {
      generic_mutation(in);
    }
    return in;
  }

  // Admission bookkeeping; returns the event that feeds the phase switch.
  FuzzEvent admit(Seed seed, const ExecResult& exec) {
    bool fresh = false;
    bool fresh_reachable = false;
    for (const auto& b : seed.coverage)
      if (!seen_blocks_.count(b.key())) {
        if (!cfg_.edge_coverage) fresh = true;
        if (dm_.contains(b)) fresh_reachable = true;
      }
    if (cfg_.edge_coverage) {
      for (const auto& e : exec.covered_edges)
        if (!seen_edges_.count({e.first.key(), e.second.key()})) fresh = true;
    }
    if (!fresh) return FuzzEvent::None;

    for (const auto& b : seed.coverage) seen_blocks_.insert(b.key());
    for (const auto& e : exec.covered_edges)
      seen_edges_.insert({e.first.key(), e.second.key()});
    if (closer(seed.distance, seed.parent_distance)) {
      std::vector<std::string> names;
      for (const auto& c : seed.input.calls) names.push_back(c.name);
      weights_.record(names, cfg_.freq_per_occurrence);
      pool_.shorter_queue.push_back(seed);
    }
    pool_.global_queue.push_back(std::move(seed));
    return fresh_reachable ? FuzzEvent::NewReachablePath : FuzzEvent::NewPath;
  }

  const SeedPool& pool() const { return pool_; }
  const SyscallWeights& weights() const { return weights_; }
  const SwitchState& switch_state() const { return sw_; }
  const std::vector<InferredSyscall>& inferred() const { return inferred_; }
  double now() const { return now_; }

 private:
  void step(Input in, Distance parent_distance, bool initial) {
    ExecResult r = executor_.run(in);
    ++execs_;
    now_ += cfg_.exec_cost_secs;
    if (std::binary_search(r.covered.begin(), r.covered.end(), target_.block)) {
      hit_ = true;
      result_.poc = std::move(in);
      return;
    }
    Seed s;
    s.coverage = r.covered;
    s.distance = seed_distance(dm_, r.covered);
    // An initial seed has no parent; its own distance never beats itself.
    s.parent_distance = initial ? s.distance : parent_distance;
    s.input = std::move(in);
    FuzzEvent ev = admit(std::move(s), r);
    if (!initial) {
      if (auto flipped = sw_.step(ev, now_))
        result_.phases.push_back({now_, *flipped});
    }
    if (ev != FuzzEvent::None) {
      for (const auto& sn : inferred_)
        result_.probability_trace.push_back(
            {now_, sn.name, weights_.selection_probability(sn.name)});
      if (sw_.phase == Phase::Explore && !pool_.global_queue.empty())
        pending_ = pool_.global_queue.size() - 1;
    }
  }

  std::optional<std::size_t> producer_for(const Input& in, std::size_t before,
                                          const std::string& type) {
    std::vector<std::size_t> cands;
    for (std::size_t i = 0; i < before && i < in.calls.size(); ++i) {
      const auto& sp = sc_.spec_for(in.calls[i].name);
      if (sp.produces && *sp.produces == type) cands.push_back(i);
    }
    if (cands.empty()) return std::nullopt;
    return cands[rng_.index(cands.size())];
  }

  ArgValue random_plain_value(const std::string& base) {
    const auto& dict = dict_[base];
    double u = rng_.real();
    if (!dict.empty() && u < 0.6) {
      const Constant& c = dict[rng_.index(dict.size())];
      if (const auto* i = std::get_if<std::int64_t>(&c)) return ArgValue{*i};
      return ArgValue{std::get<std::string>(c)};
    }
    if (u < 0.85) return ArgValue{static_cast<std::int64_t>(rng_.index(9))};
    return ArgValue{static_cast<std::int64_t>(rng_.next_u64())};
  }

  Call make_call(const std::string& name, const Input& in, std::size_t at,
                 bool wire_resources) {
    const SyscallSpec& spec = sc_.spec_for(name);
    Call c;
    c.name = name;
    c.args.assign(spec.arg_count, ArgValue{std::int64_t{0}});
    for (std::uint32_t slot = 0; slot < spec.arg_count; ++slot) {
      if (sc_.is_variant(name) && slot == spec.variant_arg) continue;  // pinned
      const std::string* consumed = nullptr;
      for (const auto& [cs, type] : spec.consumes)
        if (cs == slot) consumed = &type;
      if (consumed) {
        if (wire_resources) {
          if (auto p = producer_for(in, at, *consumed))
            c.args[slot] = ResourceRef{static_cast<std::uint32_t>(*p)};
        }
      } else {
        c.args[slot] = random_plain_value(spec.name);  // dictionary keyed by base
      }
    }
    return c;
  }

  // Inferred-syscall insertion: position by producer/consumer role, then
  // close the resource dependencies by inserting producers in front.
  void insert_named(Input& in, const std::string& name, int depth = 0) {
    if (in.calls.size() >= cfg_.max_calls) return;
    const SyscallSpec& spec = sc_.spec_for(name);
    std::uint32_t n = static_cast<std::uint32_t>(in.calls.size());
    std::size_t at;
    if (!spec.consumes.empty())
      at = insert_index(rng_, n, InsertRole::Consumer, cfg_.bias_k);
    else if (spec.produces)
      at = insert_index(rng_, n, InsertRole::Producer, cfg_.bias_k);
    else
      at = rng_.index(n + 1);
    detail::insert_call(in, at, make_call(name, in, at, true));
    resolve_consumes(in, at, depth);
  }

  void resolve_consumes(Input& in, std::size_t at, int depth) {
    if (depth >= 4) return;
    const SyscallSpec& spec = sc_.spec_for(in.calls[at].name);
    for (const auto& [slot, type] : spec.consumes) {
      if (std::get_if<ResourceRef>(&in.calls[at].args[slot])) continue;
      auto producers = sc_.producers_of(type);
      if (producers.empty() || in.calls.size() >= cfg_.max_calls) continue;
      const std::string& pname = producers[rng_.index(producers.size())];
      std::size_t pat = insert_index(rng_, static_cast<std::uint32_t>(at),
                                     InsertRole::Producer, cfg_.bias_k);
      detail::insert_call(in, pat, make_call(pname, in, pat, true));
      ++at;  // the consumer moved one slot back
      in.calls[at].args[slot] = ResourceRef{static_cast<std::uint32_t>(pat)};
      resolve_consumes(in, pat, depth + 1);
    }
  }

  void insert_random_call(Input& in) {
    if (in.calls.size() >= cfg_.max_calls) return;
    const auto& names = sc_.callable_names();
    const std::string& name = names[rng_.index(names.size())];
    std::size_t at = rng_.index(in.calls.size() + 1);
    // Wiring existing producers most of the time keeps random inserts
    // semantically useful while still reaching error-handling paths.
    detail::insert_call(in, at, make_call(name, in, at, rng_.chance(0.7)));
  }

  void mutate_argument(Input& in) {
    if (in.calls.empty()) {
      insert_random_call(in);
      return;
    }
    std::size_t ci = rng_.index(in.calls.size());
    Call& call = in.calls[ci];
    const SyscallSpec& spec = sc_.spec_for(call.name);
    std::vector<std::uint32_t> slots;
    for (std::uint32_t s = 0; s < call.args.size(); ++s)
      if (!(sc_.is_variant(call.name) && s == spec.variant_arg)) slots.push_back(s);
    if (slots.empty()) {
      insert_random_call(in);
      return;
    }
    std::uint32_t slot = slots[rng_.index(slots.size())];
    const std::string* consumed = nullptr;
    for (const auto& [cs, type] : spec.consumes)
      if (cs == slot) consumed = &type;
    ArgValue old = call.args[slot];
    for (int attempt = 0; attempt < 8; ++attempt) {
      ArgValue next;
      if (consumed && rng_.chance(0.7)) {
        if (auto p = producer_for(in, ci, *consumed))
          next = ResourceRef{static_cast<std::uint32_t>(*p)};
        else
          next = ArgValue{std::int64_t{0}};
      } else {
        next = random_plain_value(spec.name);
      }
      if (!(next == old)) {
        call.args[slot] = next;
        return;
      }
    }
    insert_random_call(in);
  }

  void generic_mutation(Input& in) {
    if (in.calls.empty()) {
      insert_random_call(in);
      return;
    }
    std::size_t op = rng_.weighted(
        {cfg_.w_mutate_arg, cfg_.w_insert_call, cfg_.w_duplicate, cfg_.w_remove});
    switch (op) {
      case 0:
        mutate_argument(in);
        break;
      case 1:
        if (in.calls.size() < cfg_.max_calls) insert_random_call(in);
        else mutate_argument(in);
        break;
      case 2: {
        if (in.calls.size() >= cfg_.max_calls) {
          mutate_argument(in);
          break;
        }
        std::size_t j = rng_.index(in.calls.size());
        detail::insert_call(in, j + 1, in.calls[j]);
        break;
      }
      default:
        if (in.calls.size() > 1)
          detail::remove_call(in, rng_.index(in.calls.size()));
        else
          mutate_argument(in);
        break;
    }
  }

  const Scenario& sc_;
  TargetSite target_;
  DistanceMap dm_;
  const Executor& executor_;
  Config cfg_;
  RandomSource rng_;
  UtilizationSchedule sched_;
  std::vector<InferredSyscall> inferred_;
  SyscallWeights weights_;
  SwitchState sw_;
  SeedPool pool_;
  std::unordered_set<std::uint64_t> seen_blocks_;
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen_edges_;
  std::map<std::string, std::vector<Constant>> dict_;
  std::optional<std::size_t> pending_;
  double now_ = 0;
  std::uint64_t execs_ = 0;
  bool hit_ = false;
  CampaignResult result_;
};

namespace detail {

// Ways to drop the call at `at`: plain removal (dangling references degrade
// to zero) first, then every rewiring of the dangling slots onto surviving
// earlier calls. Rewiring is what lets a redundant duplicate producer go.
inline std::vector<Input> removal_variants(const Input& in, std::size_t at,
                                           std::size_t cap = 128) {
  Input base = in;
  remove_call(base, at);
  std::vector<std::pair<std::size_t, std::size_t>> dangling;  // (call, slot)
  for (std::size_t i = 0; i < base.calls.size(); ++i)
    for (std::size_t s = 0; s < base.calls[i].args.size(); ++s) {
      bool was_ref = std::holds_alternative<ResourceRef>(in.calls[i < at ? i : i + 1].args[s]);
      bool now_int = std::holds_alternative<std::int64_t>(base.calls[i].args[s]);
      if (was_ref && now_int) dangling.emplace_back(i, s);
    }
  std::vector<Input> out{base};
  if (dangling.empty()) return out;

  std::vector<std::size_t> pick(dangling.size(), 0);
  while (out.size() < cap) {
    Input cand = base;
    bool valid = true;
    for (std::size_t d = 0; d < dangling.size(); ++d) {
      auto [ci, slot] = dangling[d];
      if (pick[d] >= ci) {  // only earlier calls are legal targets
        valid = false;
        break;
      }
      cand.calls[ci].args[slot] = ResourceRef{static_cast<std::uint32_t>(pick[d])};
    }
    if (valid) out.push_back(std::move(cand));
    std::size_t d = 0;
    for (; d < dangling.size(); ++d) {
      if (++pick[d] < base.calls.size()) break;
      pick[d] = 0;
    }
    if (d == dangling.size()) break;
  }
  return out;
}

}  // namespace detail

// Deletes each call in turn, keeping a deletion iff some pruned variant
// (references rewired if needed) still triggers; passes repeat until one
// deletes nothing, so the final pass is the verification that no single
// remaining call is removable.
inline Input minimize_poc(const Input& poc, const Executor& executor, BlockId target) {
  auto triggers = [&](const Input& in) {
    auto r = executor.run(in);
    return std::binary_search(r.covered.begin(), r.covered.end(), target);
  };
  if (!triggers(poc)) throw ValidationError("input does not trigger the target");
  Input cur = poc;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < cur.calls.size();) {
      bool removed = false;
      for (auto& cand : detail::removal_variants(cur, i)) {
        if (!cand.calls.empty() && triggers(cand)) {
          cur = std::move(cand);
          removed = true;
          break;
        }
      }
      if (removed) changed = true;
      else ++i;
    }
  }
  return cur;
}

// Per-mode campaign ingredients: the distance map (full, function-level, or
// empty) and the inferred syscalls (possibly discarded).
struct CampaignPlan {
  ReachableSet rs;
  DistanceMap dm;
  std::vector<InferredSyscall> inferred;
};

inline CampaignPlan plan_campaign(const Scenario& sc, TargetSite target,
                                  const KnowledgeBase& kb, Mode mode,
                                  bool resolve_indirect_calls = true,
                                  const std::optional<StackTrace>& trace = std::nullopt,
                                  const SyscallNrTable& nr_table = {},
                                  const std::vector<DispatchFrame>& dispatch =
                                      default_dispatch_frames()) {
  CampaignPlan plan;
  CallGraph cg = resolve_indirect(sc.program, resolve_indirect_calls);
  plan.rs = reachable_set(sc.program, cg, target);
  InterCfg icfg = build_inter_cfg(sc.program, cg, plan.rs);
  switch (mode) {
    case Mode::Undirected:
      break;  // no distance guidance at all
    case Mode::FuncDis:
      plan.dm = function_level_distance_map(sc.program, plan.rs);
      break;
    default:
      plan.dm = bfs_distance(icfg, target);
  }
  if (mode != Mode::NoInfer && mode != Mode::Undirected) {
    std::set<std::string> known(sc.callable_names().begin(), sc.callable_names().end());
    DistanceMap infer_dm =
        mode == Mode::FuncDis ? bfs_distance(icfg, target) : plan.dm;
    plan.inferred = infer_all(sc.program, target, plan.rs, icfg, infer_dm, kb,
                              sc.variant_table(), trace, nr_table, dispatch, &known);
  }
  return plan;
}

}  // namespace gfz

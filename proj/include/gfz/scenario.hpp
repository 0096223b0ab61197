// Copyright 2026 gfz project authors. All rights reserved.
// Use of this source code is governed by Apache 2 LICENSE that can be found in the LICENSE file.

#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "gfz/distance.hpp"
#include "gfz/graph.hpp"

namespace gfz {

/// Deterministic toy kernel. A scenario declares a syscall table over the
/// graph's handler functions, guarded CFG edges, resource production and
/// consumption, and target blocks. Executing an input walks each call's
/// handler CFG, descends into callees, and reports covered blocks — the
/// stand-in for coverage instrumentation.

struct SyscallSpec {
  std::string name;
  FuncId handler = 0;
  std::uint32_t arg_count = 0;
  std::optional<std::string> produces;                    // resource type
  std::vector<std::pair<std::uint32_t, std::string>> consumes;  // (slot, type)
  std::uint32_t variant_arg = 0;                          // slot a variant pins
  std::map<std::string, Constant> variants;               // full name -> constant
  std::optional<std::uint32_t> error_block;  // divert here on unresolved consumes
};

struct GuardCond {
  enum class Kind { ArgEquals, ArgResourceValid, FlagSet, FlagUnset };
  Kind kind = Kind::ArgEquals;
  std::uint32_t arg = 0;
  Constant value{std::int64_t{0}};
  std::string flag;
};

using Guard = std::vector<GuardCond>;  // conjunction

struct ExecResult {
  std::vector<BlockId> covered;                          // sorted, unique
  std::vector<std::pair<BlockId, BlockId>> covered_edges;  // sorted, unique
  std::vector<BlockId> hit_targets;
  std::vector<std::pair<std::string, std::uint32_t>> resource_log;  // (type, call)
  // caller->callee pairs actually taken, for call-graph soundness replay
  std::vector<std::pair<FuncId, FuncId>> called;
};

using VariantTable = std::map<std::string, std::map<std::string, Constant>>;

class Scenario {
 public:
  Program program;
  std::map<std::string, SyscallSpec> syscalls;  // keyed by base name
  std::map<std::tuple<FuncId, std::uint32_t, std::uint32_t>, Guard> guards;
  std::map<std::uint64_t, std::vector<std::string>> effects;  // block -> flags set
  std::vector<BlockId> targets;  // sorted

  // Every name an input may call: base syscalls plus their variants.
  const std::vector<std::string>& callable_names() const { return callable_; }

  const SyscallSpec& spec_for(const std::string& call_name) const {
    auto it = base_of_.find(call_name);
    if (it == base_of_.end())
      throw ValidationError("unknown syscall \"" + call_name + "\"");
    return syscalls.at(it->second);
  }

  bool is_callable(const std::string& name) const { return base_of_.count(name) != 0; }

  bool is_variant(const std::string& name) const {
    auto it = base_of_.find(name);
    return it != base_of_.end() && it->second != name;
  }

  // Producers able to satisfy a resource type, in name order.
  std::vector<std::string> producers_of(const std::string& type) const {
    std::vector<std::string> out;
    for (const auto& [name, sc] : syscalls)
      if (sc.produces && *sc.produces == type) out.push_back(name);
    return out;
  }

  VariantTable variant_table() const {
    VariantTable vt;
    for (const auto& [name, sc] : syscalls)
      if (!sc.variants.empty()) vt[name] = sc.variants;
    return vt;
  }

  void finalize() {
    callable_.clear();
    base_of_.clear();
    for (const auto& [name, sc] : syscalls) {
      base_of_[name] = name;
      callable_.push_back(name);
      for (const auto& [vname, _] : sc.variants) {
        base_of_[vname] = name;
        callable_.push_back(vname);
      }
    }
    std::sort(callable_.begin(), callable_.end());
  }

 private:
  std::vector<std::string> callable_;
  std::map<std::string, std::string> base_of_;
};

namespace detail {

inline Guard parse_guard_conds(const nlohmann::json& arr, const std::string& where) {
  Guard g;
  for (const auto& jc : arr) {
    check_keys(jc, {"arg", "equals", "resource_valid", "flag", "set"}, where);
    GuardCond c;
    if (jc.contains("flag")) {
      c.flag = jc.at("flag").get<std::string>();
      bool set = require(jc, "set", where).get<bool>();
      c.kind = set ? GuardCond::Kind::FlagSet : GuardCond::Kind::FlagUnset;
    } else {
      c.arg = require(jc, "arg", where).get<std::uint32_t>();
      if (jc.contains("equals")) {
        c.kind = GuardCond::Kind::ArgEquals;
        c.value = parse_constant(jc.at("equals"), where);
      } else if (jc.contains("resource_valid")) {
        if (!jc.at("resource_valid").get<bool>())
          throw ParseError("resource_valid must be true in " + where);
        c.kind = GuardCond::Kind::ArgResourceValid;
      } else {
        throw ParseError("guard condition in " + where +
                         " needs equals, resource_valid, or flag");
      }
    }
    g.push_back(std::move(c));
  }
  return g;
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::require;

  if (!j.is_object()) throw ParseError("scenario document must be a JSON object");
  check_keys(j, {"graph", "syscalls", "guards", "effects", "targets"}, "scenario");

  Scenario sc;
  sc.program = parse_program(require(j, "graph", "scenario"));

  const auto& jsys = require(j, "syscalls", "scenario");
  if (!jsys.is_object()) throw ParseError("syscalls must be an object");
  for (const auto& item : jsys.items()) {
    const auto& js = item.value();
    const std::string where = "syscall \"" + item.key() + "\"";
    check_keys(js,
               {"handler", "arg_count", "produces", "consumes", "variant_arg",
                "variants", "error_block"},
               where);
    SyscallSpec spec;
    spec.name = item.key();
    spec.handler = sc.program.func(detail::require_string(js, "handler", where));
    if (js.contains("arg_count")) spec.arg_count = js.at("arg_count").get<std::uint32_t>();
    if (js.contains("produces")) spec.produces = js.at("produces").get<std::string>();
    if (js.contains("consumes"))
      for (const auto& jc : js.at("consumes")) {
        if (!jc.is_array() || jc.size() != 2)
          throw ParseError("consumes entries in " + where + " must be [slot, type]");
        spec.consumes.emplace_back(jc[0].get<std::uint32_t>(), jc[1].get<std::string>());
      }
    if (js.contains("variant_arg")) spec.variant_arg = js.at("variant_arg").get<std::uint32_t>();
    if (js.contains("variants"))
      for (const auto& jv : js.at("variants").items())
        spec.variants.emplace(jv.key(), detail::parse_constant(jv.value(), where));
    if (js.contains("error_block")) {
      auto eb = js.at("error_block").get<std::uint32_t>();
      if (!sc.program.has_block({spec.handler, eb}))
        throw ValidationError(where + " names missing error block " + std::to_string(eb));
      spec.error_block = eb;
    }
    if (!spec.consumes.empty() && !spec.error_block)
      throw ValidationError(where + " consumes resources but has no error_block");
    // Args must cover every slot the spec mentions.
    std::uint32_t needed = spec.variants.empty() ? 0 : spec.variant_arg + 1;
    for (const auto& [slot, _] : spec.consumes) needed = std::max(needed, slot + 1);
    spec.arg_count = std::max(spec.arg_count, needed);
    sc.syscalls.emplace(spec.name, std::move(spec));
  }

  if (j.contains("guards"))
    for (const auto& jg : j.at("guards")) {
      check_keys(jg, {"function", "from", "to", "when"}, "guard");
      FuncId f = sc.program.func(detail::require_string(jg, "function", "guard"));
      auto from = require(jg, "from", "guard").get<std::uint32_t>();
      auto to = require(jg, "to", "guard").get<std::uint32_t>();
      const auto& edges = sc.program.cfgs[f].edges;
      if (std::find(edges.begin(), edges.end(), std::make_pair(from, to)) == edges.end())
        throw ValidationError("guard on nonexistent edge " +
                              sc.program.functions[f].name + " [" +
                              std::to_string(from) + "," + std::to_string(to) + "]");
      sc.guards[{f, from, to}] = detail::parse_guard_conds(
          require(jg, "when", "guard"), "guard on \"" + sc.program.functions[f].name + "\"");
    }

  if (j.contains("effects"))
    for (const auto& je : j.at("effects")) {
      check_keys(je, {"function", "block", "set_flag"}, "effect");
      FuncId f = sc.program.func(detail::require_string(je, "function", "effect"));
      auto blk = require(je, "block", "effect").get<std::uint32_t>();
      BlockId b{f, blk};
      if (!sc.program.has_block(b))
        throw ValidationError("effect names missing block " + sc.program.block_name(b));
      sc.effects[b.key()].push_back(detail::require_string(je, "set_flag", "effect"));
    }

  for (const auto& jt : require(j, "targets", "scenario")) {
    check_keys(jt, {"function", "block"}, "target");
    FuncId f = sc.program.func(detail::require_string(jt, "function", "target"));
    BlockId b{f, require(jt, "block", "target").get<std::uint32_t>()};
    if (!sc.program.has_block(b))
      throw ValidationError("target names missing block " + sc.program.block_name(b));
    sc.targets.push_back(b);
  }
  std::sort(sc.targets.begin(), sc.targets.end());

  // Consumed resource types must have a producer somewhere in the table.
  for (const auto& [name, spec] : sc.syscalls)
    for (const auto& [slot, type] : spec.consumes)
      if (sc.producers_of(type).empty())
        throw ValidationError("resource type \"" + type + "\" consumed by \"" +
                              name + "\" has no producer");

  // Register base and variant names so executions can look up handlers.
  for (const auto& [name, spec] : sc.syscalls) {
    sc.program.syscall_map.emplace(name, spec.handler);
    for (const auto& [vname, _] : spec.variants)
      sc.program.syscall_map.emplace(vname, spec.handler);
  }

  sc.finalize();
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_scenario(j);
}

namespace detail {

struct ExecState {
  // resource store: type and producing call index, in production order
  std::vector<std::pair<std::string, std::uint32_t>> resources;
  std::set<std::string> flags;
  std::set<BlockId> covered;
  std::set<std::pair<BlockId, BlockId>> edges;
  std::vector<std::pair<FuncId, FuncId>> called;
};

// A resource argument resolves iff it references an earlier call that
// produced a resource of the wanted type (any type when unconstrained).
inline bool resource_ok(const ExecState& st, const ArgValue& arg,
                        const std::string* wanted_type) {
  const auto* ref = std::get_if<ResourceRef>(&arg);
  if (!ref) return false;
  for (const auto& [type, producer] : st.resources)
    if (producer == ref->call_index && (!wanted_type || type == *wanted_type))
      return true;
  return false;
}

inline bool constants_equal(const Constant& c, const ArgValue& a) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) {
    const auto* ai = std::get_if<std::int64_t>(&a);
    return ai && *ai == *i;
  }
  const auto* s = std::get_if<std::string>(&c);
  const auto* as = std::get_if<std::string>(&a);
  return s && as && *as == *s;
}

inline bool guard_holds(const Guard& g,
                        const std::vector<ArgValue>& args, const ExecState& st,
                        const SyscallSpec& spec) {
  for (const auto& c : g) {
    switch (c.kind) {
      case GuardCond::Kind::ArgEquals: {
        if (c.arg >= args.size() || !constants_equal(c.value, args[c.arg])) return false;
        break;
      }
      case GuardCond::Kind::ArgResourceValid: {
        if (c.arg >= args.size()) return false;
        const std::string* wanted = nullptr;
        for (const auto& [slot, type] : spec.consumes)
          if (slot == c.arg) wanted = &type;
        if (!resource_ok(st, args[c.arg], wanted)) return false;
        break;
      }
      case GuardCond::Kind::FlagSet:
        if (!st.flags.count(c.flag)) return false;
        break;
      case GuardCond::Kind::FlagUnset:
        if (st.flags.count(c.flag)) return false;
        break;
    }
  }
  return true;
}

constexpr int kMaxCallDepth = 32;

inline void walk(const Scenario& sc, const CallGraph& cg, FuncId func,
                 const std::vector<ArgValue>& args, const SyscallSpec& spec,
                 ExecState& st, int depth,
                 std::optional<std::uint32_t> start_block = std::nullopt) {
  if (depth > kMaxCallDepth) return;
  const Cfg& cfg = sc.program.cfgs[func];
  std::uint32_t b = start_block.value_or(cfg.entry);
  std::size_t steps = 0;
  const std::size_t step_cap = 4 * cfg.blocks.size() + 4;
  while (true) {
    BlockId here{func, b};
    st.covered.insert(here);
    if (auto it = sc.effects.find(here.key()); it != sc.effects.end())
      for (const auto& f : it->second) st.flags.insert(f);

    for (std::size_t s = 0; s < sc.program.call_sites.size(); ++s) {
      const auto& cs = sc.program.call_sites[s];
      if (cs.caller != here) continue;
      for (FuncId callee : cg.site_targets[s]) {
        st.called.emplace_back(func, callee);
        st.edges.emplace(here, BlockId{callee, sc.program.cfgs[callee].entry});
        walk(sc, cg, callee, args, spec, st, depth + 1);
      }
    }

    // First guarded successor whose guard holds wins; otherwise the first
    // unguarded one. Guards are mutually exclusive by construction.
    std::optional<std::uint32_t> next;
    std::optional<std::uint32_t> fallback;
    for (const auto& [from, to] : cfg.edges) {
      if (from != b) continue;
      auto git = sc.guards.find({func, from, to});
      if (git == sc.guards.end()) {
        if (!fallback) fallback = to;
      } else if (!next && guard_holds(git->second, args, st, spec)) {
        next = to;
      }
    }
    if (!next) next = fallback;
    if (!next) break;
    st.edges.emplace(here, BlockId{func, *next});
    b = *next;
    if (++steps > step_cap) break;
  }
}

}  // namespace detail

// Pure function of (scenario, input): walks each call's handler, taking
// guarded branches, diverting consumers with unresolved resources to their
// error block, and appending produced resources.
inline ExecResult execute(const Scenario& sc, const CallGraph& cg, const Input& input) {
  detail::ExecState st;
  for (std::uint32_t ci = 0; ci < input.calls.size(); ++ci) {
    const Call& call = input.calls[ci];
    const SyscallSpec& spec = sc.spec_for(call.name);

    std::vector<ArgValue> args = call.args;
    if (args.size() < spec.arg_count) args.resize(spec.arg_count, ArgValue{std::int64_t{0}});
    if (sc.is_variant(call.name)) {
      // A variant pins one argument slot; mutation never touches it either.
      const Constant& c = spec.variants.at(call.name);
      if (const auto* i = std::get_if<std::int64_t>(&c))
        args[spec.variant_arg] = *i;
      else
        args[spec.variant_arg] = std::get<std::string>(c);
    }

    bool unresolved = false;
    for (const auto& [slot, type] : spec.consumes)
      if (!detail::resource_ok(st, args[slot], &type)) unresolved = true;

    if (unresolved) {
      // Cover the entry, then divert to the designated error block.
      BlockId entry{spec.handler, sc.program.cfgs[spec.handler].entry};
      st.covered.insert(entry);
      if (auto it = sc.effects.find(entry.key()); it != sc.effects.end())
        for (const auto& f : it->second) st.flags.insert(f);
      detail::walk(sc, cg, spec.handler, args, spec, st, 0, *spec.error_block);
    } else {
      detail::walk(sc, cg, spec.handler, args, spec, st, 0);
      if (spec.produces) st.resources.emplace_back(*spec.produces, ci);
    }
  }

  ExecResult r;
  r.covered.assign(st.covered.begin(), st.covered.end());
  r.covered_edges.assign(st.edges.begin(), st.edges.end());
  for (const auto& t : sc.targets)
    if (st.covered.count(t)) r.hit_targets.push_back(t);
  r.resource_log = st.resources;
  std::sort(st.called.begin(), st.called.end());
  st.called.erase(std::unique(st.called.begin(), st.called.end()), st.called.end());
  r.called = std::move(st.called);
  return r;
}

inline ExecResult execute(const Scenario& sc, const Input& input) {
  return execute(sc, resolve_indirect(sc.program), input);
}

namespace detail {

// Candidate argument values per slot: guard constants reachable from the
// handler, a zero that matches nothing, and resource references to earlier
// producers of the wanted type.
inline std::vector<std::vector<ArgValue>> canonical_args(
    const Scenario& sc, const CallGraph& cg, const std::string& name,
    std::uint32_t position, const std::vector<std::string>& seq) {
  const SyscallSpec& spec = sc.spec_for(name);
  bool variant = sc.is_variant(name);

  // Functions reachable forward from the handler.
  std::set<FuncId> fwd{spec.handler};
  std::vector<FuncId> work{spec.handler};
  while (!work.empty()) {
    FuncId f = work.back();
    work.pop_back();
    for (FuncId callee : cg.callees[f])
      if (fwd.insert(callee).second) work.push_back(callee);
  }

  std::map<std::uint32_t, std::vector<Constant>> slot_consts;
  for (const auto& [edge, guard] : sc.guards) {
    if (!fwd.count(std::get<0>(edge))) continue;
    for (const auto& c : guard)
      if (c.kind == GuardCond::Kind::ArgEquals) slot_consts[c.arg].push_back(c.value);
  }

  std::vector<std::vector<ArgValue>> cands(spec.arg_count);
  for (std::uint32_t slot = 0; slot < spec.arg_count; ++slot) {
    if (variant && slot == spec.variant_arg) {
      const Constant& c = spec.variants.at(name);
      if (const auto* i = std::get_if<std::int64_t>(&c))
        cands[slot].push_back(ArgValue{*i});
      else
        cands[slot].push_back(ArgValue{std::get<std::string>(c)});
      continue;
    }
    const std::string* consumed_type = nullptr;
    for (const auto& [cslot, type] : spec.consumes)
      if (cslot == slot) consumed_type = &type;
    if (consumed_type) {
      for (std::uint32_t i = 0; i < position; ++i) {
        const SyscallSpec& prior = sc.spec_for(seq[i]);
        if (prior.produces && *prior.produces == *consumed_type)
          cands[slot].push_back(ArgValue{ResourceRef{i}});
      }
    }
    for (const auto& c : slot_consts[slot]) {
      if (const auto* i = std::get_if<std::int64_t>(&c))
        cands[slot].push_back(ArgValue{*i});
      else
        cands[slot].push_back(ArgValue{std::get<std::string>(c)});
    }
    cands[slot].push_back(ArgValue{std::int64_t{0}});
  }
  return cands;
}

// Depth-first enumeration of argument assignments for a fixed name sequence;
// returns true on the first assignment (in candidate order) covering the
// target, leaving that assignment in acc.
inline bool assign_args(const Scenario& sc, const CallGraph& cg,
                        const std::vector<std::string>& names, std::size_t idx,
                        Input& acc, BlockId target) {
  if (idx == names.size()) {
    auto res = execute(sc, cg, acc);
    return std::binary_search(res.covered.begin(), res.covered.end(), target);
  }
  auto cands = canonical_args(sc, cg, names[idx], static_cast<std::uint32_t>(idx), names);
  acc.calls.push_back(
      {names[idx], std::vector<ArgValue>(cands.size(), ArgValue{std::int64_t{0}})});
  std::vector<std::size_t> pick(cands.size(), 0);
  while (true) {
    for (std::size_t s = 0; s < cands.size(); ++s)
      acc.calls[idx].args[s] = cands[s][pick[s]];
    if (assign_args(sc, cg, names, idx + 1, acc, target)) return true;
    std::size_t s = 0;
    for (; s < cands.size(); ++s) {
      if (++pick[s] < cands[s].size()) break;
      pick[s] = 0;
    }
    if (s == cands.size()) break;
  }
  acc.calls.pop_back();
  return false;
}

inline std::optional<Input> search_sequences(const Scenario& sc, const CallGraph& cg,
                                             std::vector<std::string>& names,
                                             std::size_t remaining, BlockId target) {
  if (remaining == 0) {
    Input acc;
    if (assign_args(sc, cg, names, 0, acc, target)) return acc;
    return std::nullopt;
  }
  for (const auto& name : sc.callable_names()) {
    names.push_back(name);
    if (auto r = search_sequences(sc, cg, names, remaining - 1, target)) return r;
    names.pop_back();
  }
  return std::nullopt;
}

}  // namespace detail

// Exhaustive shortest triggering input over canonical argument choices, up
// to max_len calls. Iterative deepening, so the first hit has minimal length.
// The preconditions are the tractability guard.
inline std::optional<Input> brute_force_min_trigger(const Scenario& sc,
                                                    BlockId target,
                                                    std::size_t max_len) {
  if (max_len > 6)
    throw std::invalid_argument("brute_force_min_trigger: max_len must be <= 6");
  if (sc.callable_names().size() > 8)
    throw std::invalid_argument(
        "brute_force_min_trigger: syscall alphabet must be <= 8");
  CallGraph cg = resolve_indirect(sc.program);
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::string> names;
    if (auto r = detail::search_sequences(sc, cg, names, len, target)) return r;
  }
  return std::nullopt;
}

}  // namespace gfz

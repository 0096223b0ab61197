// Copyright 2026 gfz project authors. All rights reserved.
// Use of this source code is governed by Apache 2 LICENSE that can be found in the LICENSE file.

#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfz/distance.hpp"
#include "gfz/graph.hpp"
#include "gfz/scenario.hpp"

namespace gfz {

/// Target-related syscall inference. Generic rules (call chain, specialized
/// variants, stack traces) are algorithms over the analysis results; domain
/// rules live in a data-driven knowledge base whose default file covers the
/// common virtual filesystems, packet-injection variants, error-handling,
/// seccomp registration, and readiness notification.

enum class InferenceRule { CallChain, SpecializedVariant, KnowledgeBase, StackTrace };

inline const char* rule_name(InferenceRule r) {
  switch (r) {
    case InferenceRule::CallChain: return "call_chain";
    case InferenceRule::SpecializedVariant: return "specialized_variant";
    case InferenceRule::KnowledgeBase: return "knowledge_base";
    case InferenceRule::StackTrace: return "stack_trace";
  }
  return "?";
}

struct InferredSyscall {
  std::string name;
  InferenceRule source_rule = InferenceRule::CallChain;
  bool operator==(const InferredSyscall&) const = default;
};

struct KbPredicate {
  enum class Kind { PathPrefix, FsTag, Marker };
  Kind kind = Kind::PathPrefix;
  std::string value;
};

struct KbEntry {
  KbPredicate predicate;
  std::vector<std::string> syscalls;
};

struct KnowledgeBase {
  std::vector<KbEntry> entries;
};

inline KnowledgeBase parse_knowledge_base(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("knowledge base must be a JSON array");
  KnowledgeBase kb;
  for (const auto& je : j) {
    detail::check_keys(je, {"predicate", "syscalls"}, "knowledge-base entry");
    const auto& jp = detail::require(je, "predicate", "knowledge-base entry");
    detail::check_keys(jp, {"kind", "value"}, "predicate");
    KbEntry e;
    std::string kind = detail::require_string(jp, "kind", "predicate");
    if (kind == "path_prefix") e.predicate.kind = KbPredicate::Kind::PathPrefix;
    else if (kind == "fs_tag") e.predicate.kind = KbPredicate::Kind::FsTag;
    else if (kind == "marker") e.predicate.kind = KbPredicate::Kind::Marker;
    else throw ParseError("unknown predicate kind \"" + kind + "\"");
    e.predicate.value = detail::require_string(jp, "value", "predicate");
    if (e.predicate.kind == KbPredicate::Kind::Marker &&
        e.predicate.value != "mem_error_handling" &&
        e.predicate.value != "perm_error_handling" &&
        e.predicate.value != "seccomp" && e.predicate.value != "readiness")
      throw ParseError("unknown marker \"" + e.predicate.value + "\"");
    for (const auto& s : detail::require(je, "syscalls", "knowledge-base entry"))
      e.syscalls.push_back(s.get<std::string>());
    if (e.syscalls.empty())
      throw ValidationError("knowledge-base entry with empty syscall list");
    kb.entries.push_back(std::move(e));
  }
  return kb;
}

inline KnowledgeBase load_knowledge_base(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_knowledge_base(j);
}

struct StackFrame {
  std::string function;
  std::vector<std::int64_t> args;
};

struct StackTrace {
  std::vector<StackFrame> frames;
};

// One frame per line: function(arg0,arg1,...), args hexadecimal.
inline StackTrace parse_stack_trace(std::istream& in, const std::string& name) {
  StackTrace t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto open = line.find('(');
    auto close = line.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
      throw ParseError("malformed frame at " + name + ":" + std::to_string(lineno));
    StackFrame f;
    f.function = line.substr(0, open);
    std::string args = line.substr(open + 1, close - open - 1);
    std::istringstream as(args);
    std::string tok;
    while (std::getline(as, tok, ',')) {
      tok.erase(std::remove_if(tok.begin(), tok.end(),
                               [](char c) { return c == ' ' || c == '\t'; }),
                tok.end());
      if (tok.empty()) continue;
      try {
        f.args.push_back(static_cast<std::int64_t>(std::stoll(tok, nullptr, 16)));
      } catch (const std::exception&) {
        throw ParseError("malformed hex argument \"" + tok + "\" at " + name + ":" +
                         std::to_string(lineno));
      }
    }
    t.frames.push_back(std::move(f));
  }
  if (t.frames.empty()) throw ParseError("stack trace " + name + " is empty");
  return t;
}

inline StackTrace load_stack_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_stack_trace(in, path.string());
}

// A frame whose numeric argument is a syscall number; configuration because
// dispatcher names vary between kernels.
struct DispatchFrame {
  std::string function;
  std::uint32_t arg_index = 1;
};

inline std::vector<DispatchFrame> default_dispatch_frames() {
  return {{"doSyscallInvoke", 1}, {"doSyscallEnter", 1}};
}

using SyscallNrTable = std::map<std::int64_t, std::string>;

// Of the syscall handlers that reach the target, keep only those at the
// minimal call-graph hop count.
inline std::vector<InferredSyscall> infer_call_chain(const Program&,
                                                     const ReachableSet& rs) {
  std::vector<InferredSyscall> out;
  if (rs.entry_syscalls.empty()) return out;
  std::uint32_t best = UINT32_MAX;
  for (const auto& [_, h] : rs.entry_syscalls) best = std::min(best, h);
  for (const auto& [name, h] : rs.entry_syscalls)
    if (h == best) out.push_back({name, InferenceRule::CallChain});
  return out;
}

// Variants are inferred from the constants sitting on finite-distance blocks
// that the base syscall's handler can actually flow through.
inline std::vector<InferredSyscall> infer_variants(
    const Program& p, const InterCfg& icfg, const DistanceMap& dm,
    const std::vector<std::string>& base_syscalls, const VariantTable& variants) {
  std::vector<InferredSyscall> out;
  std::set<std::string> emitted;
  for (const auto& base : base_syscalls) {
    auto vit = variants.find(base);
    if (vit == variants.end()) continue;
    auto hit = p.syscall_map.find(base);
    if (hit == p.syscall_map.end()) continue;
    FuncId handler = hit->second;

    // Forward reachability from the handler entry, restricted to the local
    // inter-procedural CFG, intersected with the mapped blocks.
    BlockId entry{handler, p.cfgs[handler].entry};
    auto start = icfg.node_index(entry);
    if (!start) continue;
    std::vector<bool> seen(icfg.nodes.size(), false);
    std::vector<std::uint32_t> work{*start};
    seen[*start] = true;
    std::set<Constant> on_path;
    while (!work.empty()) {
      auto n = work.back();
      work.pop_back();
      BlockId b = icfg.nodes[n];
      if (dm.contains(b))
        for (const auto& c : p.block(b).constants) on_path.insert(c);
      for (auto s : icfg.succ[n])
        if (!seen[s]) {
          seen[s] = true;
          work.push_back(s);
        }
    }
    for (const auto& [vname, vconst] : vit->second)
      if (on_path.count(vconst) && emitted.insert(vname).second)
        out.push_back({vname, InferenceRule::SpecializedVariant});
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

namespace detail {

inline bool has_tag(const std::vector<std::string>& tags, const std::string& want) {
  return std::find(tags.begin(), tags.end(), want) != tags.end();
}

}  // namespace detail

inline std::vector<InferredSyscall> infer_knowledge(const KnowledgeBase& kb,
                                                    const Program& p,
                                                    TargetSite target) {
  const Block& blk = p.block(target.block);
  const Function& fn = p.functions[target.block.func];
  std::vector<InferredSyscall> out;
  std::set<std::string> emitted;
  for (const auto& e : kb.entries) {
    bool match = false;
    switch (e.predicate.kind) {
      case KbPredicate::Kind::PathPrefix:
        match = blk.source_loc.rfind(e.predicate.value, 0) == 0 ||
                fn.name.rfind(e.predicate.value, 0) == 0;
        break;
      case KbPredicate::Kind::FsTag: {
        std::string want = "fs_tag:" + e.predicate.value;
        match = detail::has_tag(blk.tags, want) || detail::has_tag(fn.tags, want);
        break;
      }
      case KbPredicate::Kind::Marker: {
        std::string want = "marker:" + e.predicate.value;
        match = detail::has_tag(blk.tags, want) || detail::has_tag(fn.tags, want);
        break;
      }
    }
    if (!match) continue;
    for (const auto& s : e.syscalls)
      if (emitted.insert(s).second) out.push_back({s, InferenceRule::KnowledgeBase});
  }
  return out;
}

// Handlers appearing as frames contribute their syscall; dispatch frames
// contribute the syscall named by their numeric argument. Frames naming
// unknown functions are skipped with a diagnostic.
inline std::vector<InferredSyscall> infer_stack_trace(
    const Program& p, const StackTrace& trace, const SyscallNrTable& nr_table,
    const std::vector<DispatchFrame>& dispatch = default_dispatch_frames(),
    std::vector<std::string>* diagnostics = nullptr) {
  if (trace.frames.empty()) throw ValidationError("stack trace is empty");
  std::vector<InferredSyscall> out;
  std::set<std::string> emitted;
  for (const auto& frame : trace.frames) {
    bool dispatched = false;
    for (const auto& d : dispatch) {
      if (frame.function != d.function) continue;
      dispatched = true;
      if (d.arg_index < frame.args.size()) {
        auto it = nr_table.find(frame.args[d.arg_index]);
        if (it != nr_table.end() && emitted.insert(it->second).second)
          out.push_back({it->second, InferenceRule::StackTrace});
      }
    }
    if (dispatched) continue;
    auto f = p.find_func(frame.function);
    if (!f) {
      if (diagnostics)
        diagnostics->push_back("frame \"" + frame.function + "\" is not a known function");
      continue;
    }
    const auto& entry = p.functions[*f].syscall_entry;
    if (entry && emitted.insert(*entry).second)
      out.push_back({*entry, InferenceRule::StackTrace});
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

// Composition of all rules: flat union, deduplicated by name with the first
// rule's provenance kept, ordered by (rule, name). Names unknown to the
// program and scenario are dropped (with a diagnostic) so the result is
// always directly usable by the mutation engine.
inline std::vector<InferredSyscall> infer_all(
    const Program& p, TargetSite target, const ReachableSet& rs,
    const InterCfg& icfg, const DistanceMap& dm, const KnowledgeBase& kb,
    const VariantTable& variants, const std::optional<StackTrace>& trace,
    const SyscallNrTable& nr_table = {},
    const std::vector<DispatchFrame>& dispatch = default_dispatch_frames(),
    const std::set<std::string>* known_names = nullptr,
    std::vector<std::string>* diagnostics = nullptr) {
  std::vector<InferredSyscall> all;

  auto cc = infer_call_chain(p, rs);
  std::vector<std::string> bases;
  for (const auto& s : cc) bases.push_back(s.name);
  auto kbres = infer_knowledge(kb, p, target);
  std::vector<InferredSyscall> stres;
  if (trace) stres = infer_stack_trace(p, *trace, nr_table, dispatch, diagnostics);
  for (const auto& s : kbres) bases.push_back(s.name);
  for (const auto& s : stres) bases.push_back(s.name);
  auto var = infer_variants(p, icfg, dm, bases, variants);

  for (auto* group : {&cc, &var, &kbres, &stres}) {
    std::sort(group->begin(), group->end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
    for (const auto& s : *group) all.push_back(s);
  }

  std::vector<InferredSyscall> out;
  std::set<std::string> emitted;
  for (const auto& s : all) {
    if (!emitted.insert(s.name).second) continue;
    bool known = p.syscall_map.count(s.name) != 0 ||
                 (known_names && known_names->count(s.name) != 0);
    if (!known) {
      if (diagnostics)
        diagnostics->push_back("inferred syscall \"" + s.name +
                               "\" is not available here; dropped");
      continue;
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace gfz

// Copyright 2026 gfz project authors. All rights reserved.
// Use of this source code is governed by Apache 2 LICENSE that can be found in the LICENSE file.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gfz/common.hpp"

namespace gfz {

/// Static program representation: a call graph plus one CFG per function,
/// loaded from the graph interchange file. Immutable after load; safe to
/// share read-only across workers.

struct Function {
  std::string name;
  std::string signature;                     // key for indirect-call matching
  std::optional<std::string> syscall_entry;  // set on syscall handler entries
  std::vector<std::string> tags;             // e.g. "fs_tag:pipefs", "marker:seccomp"
};

struct Block {
  std::uint32_t index = 0;
  std::string source_loc;           // advisory "file:line" metadata
  std::vector<Constant> constants;  // literals appearing in the block
  std::vector<std::string> tags;
};

struct Cfg {
  FuncId function = 0;
  std::uint32_t entry = 0;
  std::vector<Block> blocks;  // position == block index
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
};

enum class CallKind { Direct, Indirect };

struct CallSite {
  BlockId caller;
  CallKind kind = CallKind::Direct;
  FuncId callee = 0;      // Direct only
  std::string signature;  // Indirect only, nonempty
};

struct Program {
  std::vector<Function> functions;
  std::vector<Cfg> cfgs;  // indexed by FuncId
  std::vector<CallSite> call_sites;
  std::map<std::string, FuncId> syscall_map;  // syscall or variant name -> handler
  std::vector<std::string> warnings;          // dead blocks, etc.

  std::optional<FuncId> find_func(const std::string& name) const {
    auto it = func_index_.find(name);
    if (it == func_index_.end()) return std::nullopt;
    return it->second;
  }

  FuncId func(const std::string& name) const {
    auto f = find_func(name);
    if (!f) throw ValidationError("unknown function \"" + name + "\"");
    return *f;
  }

  const Block& block(BlockId b) const {
    if (b.func >= cfgs.size() || b.index >= cfgs[b.func].blocks.size())
      throw ValidationError("unknown block " + block_name(b));
    return cfgs[b.func].blocks[b.index];
  }

  bool has_block(BlockId b) const {
    return b.func < cfgs.size() && b.index < cfgs[b.func].blocks.size();
  }

  std::string block_name(BlockId b) const {
    std::string fn = b.func < functions.size() ? functions[b.func].name
                                               : "#" + std::to_string(b.func);
    return fn + "@" + std::to_string(b.index);
  }

  std::size_t total_blocks() const {
    std::size_t n = 0;
    for (const auto& c : cfgs) n += c.blocks.size();
    return n;
  }

  void rebuild_index() {
    func_index_.clear();
    for (FuncId i = 0; i < functions.size(); ++i)
      func_index_.emplace(functions[i].name, i);
  }

 private:
  std::unordered_map<std::string, FuncId> func_index_;
};

// Resolved call graph. Every direct edge plus, when indirect resolution is
// on, one edge per (indirect site, function with the same signature key) —
// an over-approximation by construction.
struct CallGraph {
  bool indirect_resolved = true;
  std::vector<std::pair<FuncId, FuncId>> edges;  // sorted, unique
  std::vector<std::vector<FuncId>> callees;      // by caller
  std::vector<std::vector<FuncId>> callers;      // by callee
  std::vector<std::vector<FuncId>> site_targets;  // per call-site, resolved callees
  std::vector<std::string> warnings;
};

namespace detail {

inline void check_keys(const nlohmann::json& obj,
                       std::initializer_list<const char*> allowed,
                       const std::string& where) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) ok = true;
    if (!ok)
      throw ParseError("unknown key \"" + item.key() + "\" in " + where);
  }
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                                     const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ParseError("missing key \"" + std::string(key) + "\" in " + where);
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string())
    throw ParseError("key \"" + std::string(key) + "\" in " + where +
                     " must be a string");
  return v.get<std::string>();
}

inline Constant parse_constant(const nlohmann::json& v, const std::string& where) {
  if (v.is_number_integer()) return Constant{v.get<std::int64_t>()};
  if (v.is_string()) return Constant{v.get<std::string>()};
  throw ParseError("constant in " + where + " must be an integer or string");
}

inline std::vector<std::string> parse_tags(const nlohmann::json& obj,
                                           const std::string& where) {
  std::vector<std::string> tags;
  if (auto it = obj.find("tags"); it != obj.end()) {
    if (!it->is_array()) throw ParseError("tags in " + where + " must be an array");
    for (const auto& t : *it) tags.push_back(t.get<std::string>());
  }
  return tags;
}

}  // namespace detail

inline Program parse_program(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::require;
  using detail::require_string;

  if (!j.is_object()) throw ParseError("graph document must be a JSON object");
  check_keys(j, {"functions", "cfgs", "call_sites", "syscall_map"}, "graph");

  Program p;
  for (const auto& jf : require(j, "functions", "graph")) {
    check_keys(jf, {"name", "signature", "syscall_entry", "tags"}, "function");
    Function f;
    f.name = require_string(jf, "name", "function");
    f.signature = require_string(jf, "signature", "function \"" + f.name + "\"");
    if (auto it = jf.find("syscall_entry"); it != jf.end())
      f.syscall_entry = it->get<std::string>();
    f.tags = detail::parse_tags(jf, "function \"" + f.name + "\"");
    if (p.find_func(f.name))
      throw ValidationError("duplicate function \"" + f.name + "\"");
    p.functions.push_back(std::move(f));
    p.rebuild_index();
  }
  p.cfgs.resize(p.functions.size());
  for (auto& c : p.cfgs) c.blocks.clear();

  std::vector<bool> has_cfg(p.functions.size(), false);
  for (const auto& jc : require(j, "cfgs", "graph")) {
    check_keys(jc, {"function", "entry", "blocks", "edges"}, "cfg");
    std::string fname = require_string(jc, "function", "cfg");
    FuncId fid = p.func(fname);
    if (has_cfg[fid]) throw ValidationError("duplicate cfg for \"" + fname + "\"");
    has_cfg[fid] = true;

    Cfg cfg;
    cfg.function = fid;
    const auto& jblocks = require(jc, "blocks", "cfg of \"" + fname + "\"");
    std::vector<Block> blocks;
    for (const auto& jb : jblocks) {
      check_keys(jb, {"index", "source_loc", "constants", "tags"},
                 "block of \"" + fname + "\"");
      Block b;
      b.index = require(jb, "index", "block of \"" + fname + "\"").get<std::uint32_t>();
      if (auto it = jb.find("source_loc"); it != jb.end())
        b.source_loc = it->get<std::string>();
      if (auto it = jb.find("constants"); it != jb.end())
        for (const auto& c : *it)
          b.constants.push_back(detail::parse_constant(c, "block of \"" + fname + "\""));
      b.tags = detail::parse_tags(jb, "block of \"" + fname + "\"");
      blocks.push_back(std::move(b));
    }
    cfg.blocks.resize(blocks.size());
    std::vector<bool> seen(blocks.size(), false);
    for (auto& b : blocks) {
      if (b.index >= blocks.size())
        throw ValidationError("block index " + std::to_string(b.index) + " in \"" +
                              fname + "\" exceeds block count");
      if (seen[b.index])
        throw ValidationError("duplicate block index " + std::to_string(b.index) +
                              " in \"" + fname + "\"");
      seen[b.index] = true;
      cfg.blocks[b.index] = std::move(b);
    }
    cfg.entry = require(jc, "entry", "cfg of \"" + fname + "\"").get<std::uint32_t>();
    if (cfg.entry >= cfg.blocks.size())
      throw ValidationError("entry block " + std::to_string(cfg.entry) +
                            " of \"" + fname + "\" does not exist");
    for (const auto& je : require(jc, "edges", "cfg of \"" + fname + "\"")) {
      if (!je.is_array() || je.size() != 2)
        throw ParseError("edge in cfg of \"" + fname + "\" must be [from, to]");
      auto from = je[0].get<std::uint32_t>();
      auto to = je[1].get<std::uint32_t>();
      if (from >= cfg.blocks.size() || to >= cfg.blocks.size())
        throw ValidationError("edge [" + std::to_string(from) + "," +
                              std::to_string(to) + "] in \"" + fname +
                              "\" references a missing block");
      cfg.edges.emplace_back(from, to);
    }
    p.cfgs[fid] = std::move(cfg);
  }
  for (FuncId fid = 0; fid < p.functions.size(); ++fid) {
    if (!has_cfg[fid])
      throw ValidationError("function \"" + p.functions[fid].name + "\" has no cfg");
    p.cfgs[fid].function = fid;
  }

  for (const auto& js : require(j, "call_sites", "graph")) {
    check_keys(js, {"caller_function", "caller_block", "kind", "callee", "signature"},
               "call_site");
    CallSite cs;
    std::string caller = require_string(js, "caller_function", "call_site");
    cs.caller.func = p.func(caller);
    cs.caller.index = require(js, "caller_block", "call_site").get<std::uint32_t>();
    if (cs.caller.index >= p.cfgs[cs.caller.func].blocks.size())
      throw ValidationError("call site block " + std::to_string(cs.caller.index) +
                            " missing in \"" + caller + "\"");
    std::string kind = require_string(js, "kind", "call_site");
    if (kind == "direct") {
      cs.kind = CallKind::Direct;
      std::string callee = require_string(js, "callee", "call_site in \"" + caller + "\"");
      auto f = p.find_func(callee);
      if (!f)
        throw ValidationError("call site in \"" + caller +
                              "\" names missing callee \"" + callee + "\"");
      cs.callee = *f;
    } else if (kind == "indirect") {
      cs.kind = CallKind::Indirect;
      cs.signature = require_string(js, "signature", "call_site in \"" + caller + "\"");
      if (cs.signature.empty())
        throw ValidationError("indirect call site in \"" + caller +
                              "\" has an empty signature");
    } else {
      throw ParseError("call site kind must be \"direct\" or \"indirect\"");
    }
    p.call_sites.push_back(std::move(cs));
  }

  const auto& jmap = require(j, "syscall_map", "graph");
  if (!jmap.is_object()) throw ParseError("syscall_map must be an object");
  for (const auto& item : jmap.items()) {
    auto f = p.find_func(item.value().get<std::string>());
    if (!f)
      throw ValidationError("syscall_map entry \"" + item.key() +
                            "\" names missing function \"" +
                            item.value().get<std::string>() + "\"");
    p.syscall_map.emplace(item.key(), *f);
  }
  for (FuncId fid = 0; fid < p.functions.size(); ++fid) {
    const auto& f = p.functions[fid];
    if (!f.syscall_entry) continue;
    auto it = p.syscall_map.find(*f.syscall_entry);
    if (it == p.syscall_map.end() || it->second != fid)
      throw ValidationError("function \"" + f.name + "\" declares syscall_entry \"" +
                            *f.syscall_entry + "\" absent from syscall_map");
  }

  // Dead blocks are kept; real extractors emit them.
  for (const auto& cfg : p.cfgs) {
    std::vector<bool> reach(cfg.blocks.size(), false);
    std::vector<std::uint32_t> work{cfg.entry};
    reach[cfg.entry] = true;
    while (!work.empty()) {
      auto b = work.back();
      work.pop_back();
      for (const auto& [from, to] : cfg.edges)
        if (from == b && !reach[to]) {
          reach[to] = true;
          work.push_back(to);
        }
    }
    for (std::uint32_t i = 0; i < cfg.blocks.size(); ++i)
      if (!reach[i])
        p.warnings.push_back("unreachable block " +
                             p.block_name({cfg.function, i}));
  }
  return p;
}

inline Program load_program(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_program(j);
}

// Builds the resolved call graph. Indirect sites match by exact signature
// equality against every function; a signature matching nothing yields no
// edge and a warning.
inline CallGraph resolve_indirect(const Program& p, bool include_indirect = true) {
  CallGraph cg;
  cg.indirect_resolved = include_indirect;
  std::set<std::pair<FuncId, FuncId>> edges;
  std::multimap<std::string, FuncId> by_sig;
  for (FuncId i = 0; i < p.functions.size(); ++i)
    by_sig.emplace(p.functions[i].signature, i);

  cg.site_targets.resize(p.call_sites.size());
  for (std::size_t s = 0; s < p.call_sites.size(); ++s) {
    const auto& cs = p.call_sites[s];
    if (cs.kind == CallKind::Direct) {
      cg.site_targets[s].push_back(cs.callee);
      edges.emplace(cs.caller.func, cs.callee);
    } else if (include_indirect) {
      auto [lo, hi] = by_sig.equal_range(cs.signature);
      for (auto it = lo; it != hi; ++it) {
        cg.site_targets[s].push_back(it->second);
        edges.emplace(cs.caller.func, it->second);
      }
      if (lo == hi)
        cg.warnings.push_back("indirect signature \"" + cs.signature +
                              "\" in \"" + p.functions[cs.caller.func].name +
                              "\" matches no function");
      std::sort(cg.site_targets[s].begin(), cg.site_targets[s].end());
    }
  }

  cg.edges.assign(edges.begin(), edges.end());
  cg.callees.resize(p.functions.size());
  cg.callers.resize(p.functions.size());
  for (const auto& [from, to] : cg.edges) {
    cg.callees[from].push_back(to);
    cg.callers[to].push_back(from);
  }
  return cg;
}

// file:line lookup over block source_loc metadata.
inline std::vector<BlockId> blocks_at_source_loc(const Program& p,
                                                 const std::string& loc) {
  std::vector<BlockId> out;
  for (const auto& cfg : p.cfgs)
    for (const auto& b : cfg.blocks)
      if (b.source_loc == loc) out.push_back({cfg.function, b.index});
  return out;
}

}  // namespace gfz

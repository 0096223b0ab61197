// Copyright 2026 gfz project authors. All rights reserved.
// Use of this source code is governed by Apache 2 LICENSE that can be found in the LICENSE file.

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gfz/engine.hpp"

namespace gfz {

// PoC file: one call per line, name(arg,...), resource references as
// @<call-index>, strings quoted.

inline std::string format_arg(const ArgValue& a) {
  if (const auto* i = std::get_if<std::int64_t>(&a)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&a)) return "\"" + *s + "\"";
  return "@" + std::to_string(std::get<ResourceRef>(a).call_index);
}

inline std::string format_call(const Call& c) {
  std::string out = c.name + "(";
  for (std::size_t i = 0; i < c.args.size(); ++i) {
    if (i) out += ",";
    out += format_arg(c.args[i]);
  }
  return out + ")";
}

inline std::string format_input(const Input& in) {
  std::string out;
  for (const auto& c : in.calls) out += format_call(c) + "\n";
  return out;
}

inline void write_poc(const Input& in, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << format_input(in);
  if (!out) throw ParseError("write failed for " + path.string());
}

inline Input parse_poc(std::istream& in, const std::string& name) {
  Input result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw ParseError(why + " at " + name + ":" + std::to_string(lineno));
    };
    auto open = line.find('(');
    if (open == std::string::npos || line.back() != ')') fail("malformed call");
    Call call;
    call.name = line.substr(0, open);
    if (call.name.empty()) fail("empty call name");
    std::string body = line.substr(open + 1, line.size() - open - 2);
    std::size_t i = 0;
    while (i < body.size()) {
      if (body[i] == '"') {
        auto close = body.find('"', i + 1);
        if (close == std::string::npos) fail("unterminated string");
        call.args.push_back(ArgValue{body.substr(i + 1, close - i - 1)});
        i = close + 1;
        if (i < body.size() && body[i] == ',') ++i;
      } else {
        auto comma = body.find(',', i);
        std::string tok = body.substr(i, comma == std::string::npos ? std::string::npos
                                                                    : comma - i);
        i = comma == std::string::npos ? body.size() : comma + 1;
        if (tok.empty()) fail("empty argument");
        try {
          if (tok[0] == '@')
            call.args.push_back(ArgValue{ResourceRef{
                static_cast<std::uint32_t>(std::stoul(tok.substr(1)))}});
          else if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X'))
            call.args.push_back(
                ArgValue{static_cast<std::int64_t>(std::stoll(tok, nullptr, 16))});
          else
            call.args.push_back(ArgValue{static_cast<std::int64_t>(std::stoll(tok))});
        } catch (const std::exception&) {
          fail("malformed argument \"" + tok + "\"");
        }
      }
    }
    result.calls.push_back(std::move(call));
  }
  if (!valid_refs(result))
    throw ValidationError("poc " + name + " has a forward resource reference");
  return result;
}

inline Input read_poc(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_poc(in, path.string());
}

// Campaign report: structured JSON with the verdict, budget accounting,
// phase timeline, and the selection-probability trace.

inline nlohmann::json campaign_report_json(const CampaignResult& r,
                                           const std::string& target,
                                           const std::string& mode,
                                           std::uint64_t rng_seed) {
  nlohmann::json j;
  j["target"] = target;
  j["mode"] = mode;
  j["rng_seed"] = rng_seed;
  j["hit"] = r.hit;
  j["tte_secs"] = r.tte_secs;
  j["executions"] = r.executions;
  j["phases"] = nlohmann::json::array();
  for (const auto& p : r.phases)
    j["phases"].push_back({{"time", p.time}, {"phase", phase_name(p.phase)}});
  j["probability_trace"] = nlohmann::json::array();
  for (const auto& t : r.probability_trace)
    j["probability_trace"].push_back(
        {{"time", t.time}, {"syscall", t.syscall}, {"probability", t.probability}});
  j["final_probabilities"] = nlohmann::json::object();
  for (const auto& [name, p] : r.final_probabilities) j["final_probabilities"][name] = p;
  if (r.poc) {
    j["poc"] = nlohmann::json::array();
    for (const auto& c : r.poc->calls) j["poc"].push_back(format_call(c));
  }
  return j;
}

inline void write_campaign_report(const nlohmann::json& j,
                                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw ParseError("write failed for " + path.string());
}

inline nlohmann::json read_campaign_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
  }
  for (const char* key : {"target", "mode", "hit", "tte_secs", "executions", "phases"})
    if (!j.contains(key))
      throw ParseError("campaign report " + path.string() + " lacks \"" + key + "\"");
  return j;
}

// Reachable-set report emitted by the analyze command.
inline std::string format_reachability_report(const Program& p, const ReachableSet& rs,
                                              const std::string& target,
                                              std::size_t mapped_blocks) {
  std::ostringstream out;
  double ratio = p.functions.empty()
                     ? 0.0
                     : 100.0 * static_cast<double>(rs.functions.size()) /
                           static_cast<double>(p.functions.size());
  out << "target: " << target << "\n";
  out << "reachable functions: " << rs.functions.size() << " / " << p.functions.size()
      << "\n";
  std::ostringstream pct;
  pct.setf(std::ios::fixed);
  pct.precision(2);
  pct << ratio;
  out << "reachable function ratio: " << pct.str() << "%\n";
  out << "mapped blocks: " << mapped_blocks << " / " << p.total_blocks() << "\n";
  out << "entry syscalls (hops):";
  if (rs.entry_syscalls.empty()) out << " none";
  for (const auto& [name, hops] : rs.entry_syscalls)
    out << " " << name << "(" << hops << ")";
  out << "\n";
  return out.str();
}

}  // namespace gfz

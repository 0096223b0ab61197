// Copyright 2026 gfz project authors. All rights reserved.
// Use of this source code is governed by Apache 2 LICENSE that can be found in the LICENSE file.

// Operator surface: analyze, infer, fuzz, bench, and minimize subcommands
// over the graph, scenario, knowledge-base, stack-trace, distance-map, and
// poc file formats. Exit codes: 0 success, 1 target not hit (fuzz), 2 input
// error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "gfz/gfz.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string graph_file;     // graph or scenario document
  std::string target;         // function@block
  std::string target_loc;     // file:line
  std::string kb_file;
  std::string trace_file;
  std::string nr_table_file;
  std::vector<std::string> dispatch_specs;
  std::string config_file;
  std::string out_dir = ".";
  bool no_indirect = false;
};

json slurp_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw gfz::ParseError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw gfz::ParseError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

// A scenario document embeds its graph under a top-level "graph" key; a bare
// graph document is accepted wherever a scenario adds nothing.
struct LoadedInput {
  gfz::Program program;
  std::optional<gfz::Scenario> scenario;
};

LoadedInput load_graph_or_scenario(const fs::path& path) {
  json j = slurp_json(path);
  LoadedInput li;
  if (j.is_object() && j.contains("graph")) {
    li.scenario = gfz::parse_scenario(j);
    li.program = li.scenario->program;
  } else {
    li.program = gfz::parse_program(j);
  }
  return li;
}

gfz::TargetSite pick_target(const gfz::Program& p, const CommonArgs& args,
                            const std::optional<gfz::Scenario>& sc) {
  if (!args.target.empty()) return gfz::resolve_target(p, args.target);
  if (!args.target_loc.empty()) return gfz::resolve_target_loc(p, args.target_loc);
  if (sc && !sc->targets.empty()) return gfz::TargetSite{sc->targets.front()};
  throw gfz::ValidationError("no target: pass --target function@block or --target-loc file:line");
}

gfz::KnowledgeBase load_kb_opt(const std::string& file) {
  if (file.empty()) return {};
  return gfz::load_knowledge_base(file);
}

std::optional<gfz::StackTrace> load_trace_opt(const std::string& file) {
  if (file.empty()) return std::nullopt;
  return gfz::load_stack_trace(file);
}

gfz::SyscallNrTable load_nr_table_opt(const std::string& file) {
  gfz::SyscallNrTable t;
  if (file.empty()) return t;
  json j = slurp_json(file);
  if (!j.is_object()) throw gfz::ParseError("syscall number table must be a JSON object");
  for (const auto& item : j.items()) {
    std::int64_t nr = 0;
    try {
      nr = std::stoll(item.key(), nullptr, 0);
    } catch (const std::exception&) {
      throw gfz::ParseError("bad syscall number \"" + item.key() + "\"");
    }
    t[nr] = item.value().get<std::string>();
  }
  return t;
}

std::vector<gfz::DispatchFrame> parse_dispatch(const std::vector<std::string>& specs) {
  if (specs.empty()) return gfz::default_dispatch_frames();
  std::vector<gfz::DispatchFrame> out;
  for (const auto& s : specs) {
    auto colon = s.rfind(':');
    gfz::DispatchFrame d;
    if (colon == std::string::npos) {
      d.function = s;
    } else {
      d.function = s.substr(0, colon);
      d.arg_index = static_cast<std::uint32_t>(std::stoul(s.substr(colon + 1)));
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::string target_name(const gfz::Program& p, gfz::TargetSite t) {
  return p.block_name(t.block);
}

int cmd_analyze(const CommonArgs& args) {
  LoadedInput li = load_graph_or_scenario(args.graph_file);
  gfz::TargetSite target = pick_target(li.program, args, li.scenario);
  gfz::CallGraph cg = gfz::resolve_indirect(li.program, !args.no_indirect);
  for (const auto& w : cg.warnings) std::cerr << "warning: " << w << "\n";
  auto rs = gfz::reachable_set(li.program, cg, target);
  auto icfg = gfz::build_inter_cfg(li.program, cg, rs);
  auto dm = gfz::bfs_distance(icfg, target);

  fs::create_directories(args.out_dir);
  fs::path dm_path = fs::path(args.out_dir) / "distance_map.tsv";
  gfz::write_distance_map(dm, li.program, dm_path);
  std::string report = gfz::format_reachability_report(
      li.program, rs, target_name(li.program, target), dm.size());
  fs::path report_path = fs::path(args.out_dir) / "reachability.txt";
  std::ofstream rout(report_path);
  rout << report;
  std::cout << report;
  std::cout << "distance map: " << dm_path.string() << "\n";
  return 0;
}

int cmd_infer(const CommonArgs& args) {
  LoadedInput li = load_graph_or_scenario(args.graph_file);
  gfz::TargetSite target = pick_target(li.program, args, li.scenario);
  gfz::CallGraph cg = gfz::resolve_indirect(li.program, !args.no_indirect);
  auto rs = gfz::reachable_set(li.program, cg, target);
  auto icfg = gfz::build_inter_cfg(li.program, cg, rs);
  auto dm = gfz::bfs_distance(icfg, target);

  gfz::KnowledgeBase kb = load_kb_opt(args.kb_file);
  gfz::VariantTable variants;
  std::set<std::string> known;
  if (li.scenario) {
    variants = li.scenario->variant_table();
    known.insert(li.scenario->callable_names().begin(),
                 li.scenario->callable_names().end());
  }
  auto trace = load_trace_opt(args.trace_file);
  auto nr_table = load_nr_table_opt(args.nr_table_file);
  auto dispatch = parse_dispatch(args.dispatch_specs);

  std::vector<std::string> diagnostics;
  auto inferred = gfz::infer_all(li.program, target, rs, icfg, dm, kb, variants,
                                 trace, nr_table, dispatch,
                                 known.empty() ? nullptr : &known, &diagnostics);
  for (const auto& d : diagnostics) std::cerr << "note: " << d << "\n";
  std::cout << "target: " << target_name(li.program, target) << "\n";
  if (inferred.empty()) {
    std::cout << "inferred syscalls: none (fuzzing would run undirected)\n";
    return 0;
  }
  std::cout << "inferred syscalls:\n";
  for (const auto& s : inferred)
    std::cout << "  " << s.name << "  [" << gfz::rule_name(s.source_rule) << "]\n";
  return 0;
}

gfz::Config make_config(const CommonArgs& args, const gfz::Config& flag_overrides,
                        const std::vector<std::string>& set_keys) {
  gfz::Config cfg;
  cfg.apply_env();
  if (!args.config_file.empty()) cfg.apply_file(args.config_file);
  // Individual flags win over config files.
  json patch = json::object();
  for (const auto& key : set_keys) {
    if (key == "p_max") patch[key] = flag_overrides.p_max;
    else if (key == "p_min") patch[key] = flag_overrides.p_min;
    else if (key == "t_fuzz_secs") patch[key] = flag_overrides.t_fuzz_secs;
    else if (key == "t_a_secs") patch[key] = flag_overrides.t_a_secs;
    else if (key == "t_b_secs") patch[key] = flag_overrides.t_b_secs;
    else if (key == "bias_k") patch[key] = flag_overrides.bias_k;
    else if (key == "exploit_sample_m") patch[key] = flag_overrides.exploit_sample_m;
    else if (key == "exploit_top_k") patch[key] = flag_overrides.exploit_top_k;
    else if (key == "rng_seed") patch[key] = flag_overrides.rng_seed;
    else if (key == "initial_seeds") patch[key] = flag_overrides.initial_seeds;
    else if (key == "mutation_burst") patch[key] = flag_overrides.mutation_burst;
    else if (key == "exec_cost_secs") patch[key] = flag_overrides.exec_cost_secs;
    else if (key == "repetitions") patch[key] = flag_overrides.repetitions;
    else if (key == "mode") patch[key] = gfz::mode_name(flag_overrides.mode);
  }
  cfg.apply_json(patch);
  return cfg;
}

struct CampaignSetup {
  gfz::Scenario scenario;
  gfz::TargetSite target;
  gfz::KnowledgeBase kb;
  std::optional<gfz::StackTrace> trace;
  gfz::SyscallNrTable nr_table;
  std::vector<gfz::DispatchFrame> dispatch;
};

CampaignSetup load_campaign_setup(const CommonArgs& args) {
  LoadedInput li = load_graph_or_scenario(args.graph_file);
  if (!li.scenario)
    throw gfz::ValidationError(args.graph_file + " is a bare graph; fuzzing needs a scenario");
  CampaignSetup s{std::move(*li.scenario), {}, load_kb_opt(args.kb_file),
                  load_trace_opt(args.trace_file),
                  load_nr_table_opt(args.nr_table_file),
                  parse_dispatch(args.dispatch_specs)};
  s.target = pick_target(s.scenario.program, args, s.scenario);
  return s;
}

gfz::CampaignResult run_one(const CampaignSetup& s, const gfz::Config& cfg,
                            bool resolve_indirect_calls) {
  auto plan = gfz::plan_campaign(s.scenario, s.target, s.kb, cfg.mode,
                                 resolve_indirect_calls, s.trace, s.nr_table,
                                 s.dispatch);
  gfz::ScenarioExecutor exec(s.scenario);
  gfz::Campaign campaign(s.scenario, s.target, plan.dm, plan.inferred, exec, cfg);
  return campaign.run();
}

int cmd_fuzz(const CommonArgs& args, const gfz::Config& cfg) {
  CampaignSetup s = load_campaign_setup(args);
  auto result = run_one(s, cfg, !args.no_indirect);

  fs::create_directories(args.out_dir);
  std::string tname = target_name(s.scenario.program, s.target);
  json report = gfz::campaign_report_json(result, tname, gfz::mode_name(cfg.mode),
                                          cfg.rng_seed);
  fs::path report_path = fs::path(args.out_dir) / "campaign_report.json";
  gfz::write_campaign_report(report, report_path);

  std::cout << "target: " << tname << "\n";
  std::cout << "mode: " << gfz::mode_name(cfg.mode) << "\n";
  std::cout << (result.hit ? "hit" : "not hit") << " after " << result.executions
            << " executions (tte " << result.tte_secs << "s)\n";
  std::cout << "report: " << report_path.string() << "\n";
  if (result.hit && result.poc) {
    fs::path poc_path = fs::path(args.out_dir) / "poc.txt";
    gfz::write_poc(*result.poc, poc_path);
    std::cout << "poc: " << poc_path.string() << "\n";
  }
  return result.hit ? 0 : 1;
}

int cmd_bench(const CommonArgs& args, const gfz::Config& cfg,
              const std::vector<std::string>& scenario_files,
              std::vector<std::string> mode_names, unsigned jobs) {
  if (mode_names.empty()) mode_names = {"gfuzz", "undirected"};
  bool have_undirected = false;
  for (const auto& m : mode_names) have_undirected |= (m == "undirected");
  if (!have_undirected) mode_names.push_back("undirected");

  fs::create_directories(args.out_dir);
  std::ofstream csv(fs::path(args.out_dir) / "bench.csv");
  csv << "scenario,target,mode,rep,seed,hit,tte_secs,executions\n";

  for (const auto& file : scenario_files) {
    CommonArgs one = args;
    one.graph_file = file;
    CampaignSetup s = load_campaign_setup(one);
    std::string tname = target_name(s.scenario.program, s.target);

    std::map<std::string, std::vector<gfz::CampaignResult>> results;
    for (const auto& mname : mode_names)
      results[mname].resize(cfg.repetitions);

    struct Job {
      std::string mode;
      std::uint32_t rep;
    };
    std::vector<Job> queue;
    for (const auto& mname : mode_names)
      for (std::uint32_t r = 0; r < cfg.repetitions; ++r) queue.push_back({mname, r});

    std::mutex mu;
    std::size_t next = 0;
    auto worker = [&] {
      while (true) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lk(mu);
          if (next >= queue.size()) return;
          i = next++;
        }
        gfz::Config rcfg = cfg;
        rcfg.mode = gfz::parse_mode(queue[i].mode);
        rcfg.rng_seed = cfg.rng_seed + queue[i].rep;  // derived per repetition
        auto res = run_one(s, rcfg, !args.no_indirect);
        std::lock_guard<std::mutex> lk(mu);
        results[queue[i].mode][queue[i].rep] = std::move(res);
      }
    };
    if (jobs <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    gfz::TteSample baseline;
    baseline.timeout = cfg.t_fuzz_secs;
    for (const auto& r : results["undirected"]) baseline.add(r.tte_secs, r.hit);

    std::vector<gfz::ComparisonRow> rows;
    for (const auto& mname : mode_names) {
      gfz::TteSample sample;
      sample.timeout = cfg.t_fuzz_secs;
      for (std::uint32_t r = 0; r < cfg.repetitions; ++r) {
        const auto& res = results[mname][r];
        sample.add(res.tte_secs, res.hit);
        csv << file << ',' << tname << ',' << mname << ',' << r << ','
            << cfg.rng_seed + r << ',' << res.hit << ',' << res.tte_secs << ','
            << res.executions << "\n";
      }
      auto sum = gfz::summarize(sample);
      gfz::ComparisonRow row;
      row.fuzzer = mname;
      row.runs = sum.runs;
      row.mu_tte = sum.mu_tte;
      if (mname != "undirected" && cfg.repetitions >= 2) {
        row.speedup = gfz::speedup(baseline, sample);
        row.a12 = gfz::a12(sample.values, baseline.values);
        row.p_value = gfz::mann_whitney_p(sample.values, baseline.values);
      }
      rows.push_back(row);
    }
    std::cout << gfz::format_comparison_table(rows, file + "  target " + tname)
              << "\n";
  }
  std::cout << "raw results: " << (fs::path(args.out_dir) / "bench.csv").string()
            << "\n";
  return 0;
}

int cmd_minimize(const CommonArgs& args, const std::string& poc_file) {
  CampaignSetup s = load_campaign_setup(args);
  gfz::Input poc = gfz::read_poc(poc_file);
  gfz::ScenarioExecutor exec(s.scenario);
  gfz::Input minimized = gfz::minimize_poc(poc, exec, s.target.block);
  fs::create_directories(args.out_dir);
  fs::path out_path = fs::path(args.out_dir) / "poc.min.txt";
  gfz::write_poc(minimized, out_path);
  std::cout << "minimized " << poc.calls.size() << " -> " << minimized.calls.size()
            << " calls\n";
  std::cout << gfz::format_input(minimized);
  std::cout << "written: " << out_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"directed greybox fuzzing engine for syscall-sequence targets"};
  app.require_subcommand(1);

  CommonArgs args;
  gfz::Config flags;
  std::vector<std::string> set_keys;
  std::vector<std::string> scenario_files;
  std::vector<std::string> mode_names;
  std::string poc_file;
  unsigned jobs = 1;

  auto add_common = [&](CLI::App* sub, bool needs_input) {
    auto* g = sub->add_option("--graph", args.graph_file,
                              "graph or scenario JSON document");
    auto* sopt = sub->add_option("--scenario", args.graph_file,
                                 "scenario JSON document (alias of --graph)");
    if (needs_input && sub->get_name() != "bench") {
      g->excludes(sopt);
    }
    sub->add_option("--target", args.target, "target as function@block");
    sub->add_option("--target-loc", args.target_loc, "target as file:line");
    sub->add_option("--kb", args.kb_file, "knowledge-base JSON file");
    sub->add_option("--config", args.config_file, "config JSON file");
    sub->add_option("--out-dir", args.out_dir, "output directory");
    sub->add_flag("--no-indirect", args.no_indirect,
                  "skip indirect-call resolution in the analysis");
  };

  auto add_config_flags = [&](CLI::App* sub, bool with_mode) {
    sub->add_option("--p-max", flags.p_max)->each([&](const std::string&) { set_keys.push_back("p_max"); });
    sub->add_option("--p-min", flags.p_min)->each([&](const std::string&) { set_keys.push_back("p_min"); });
    sub->add_option("--timeout-secs", flags.t_fuzz_secs)->each([&](const std::string&) { set_keys.push_back("t_fuzz_secs"); });
    sub->add_option("--t-a-secs", flags.t_a_secs)->each([&](const std::string&) { set_keys.push_back("t_a_secs"); });
    sub->add_option("--t-b-secs", flags.t_b_secs)->each([&](const std::string&) { set_keys.push_back("t_b_secs"); });
    sub->add_option("--bias-k", flags.bias_k)->each([&](const std::string&) { set_keys.push_back("bias_k"); });
    sub->add_option("--exploit-sample-m", flags.exploit_sample_m)->each([&](const std::string&) { set_keys.push_back("exploit_sample_m"); });
    sub->add_option("--exploit-top-k", flags.exploit_top_k)->each([&](const std::string&) { set_keys.push_back("exploit_top_k"); });
    sub->add_option("--rng-seed", flags.rng_seed)->each([&](const std::string&) { set_keys.push_back("rng_seed"); });
    sub->add_option("--initial-seeds", flags.initial_seeds)->each([&](const std::string&) { set_keys.push_back("initial_seeds"); });
    sub->add_option("--burst", flags.mutation_burst)->each([&](const std::string&) { set_keys.push_back("mutation_burst"); });
    sub->add_option("--exec-cost-secs", flags.exec_cost_secs)->each([&](const std::string&) { set_keys.push_back("exec_cost_secs"); });
    sub->add_option("--reps", flags.repetitions)->each([&](const std::string&) { set_keys.push_back("repetitions"); });
    if (with_mode)
      sub->add_option_function<std::string>(
          "--mode",
          [&](const std::string& m) {
            flags.mode = gfz::parse_mode(m);
            set_keys.push_back("mode");
          },
          "gfuzz|no_infer|explore_only|exploit_only|func_dis|undirected");
  };

  auto* analyze = app.add_subcommand("analyze", "reachability and distance map");
  add_common(analyze, true);

  auto* infer = app.add_subcommand("infer", "target-related syscall inference");
  add_common(infer, true);
  infer->add_option("--trace", args.trace_file, "stack-trace file");
  infer->add_option("--nr-table", args.nr_table_file, "syscall number table JSON");
  infer->add_option("--dispatch-frame", args.dispatch_specs,
                    "dispatch frame as name:argindex (repeatable)");

  auto* fuzz = app.add_subcommand("fuzz", "run one directed campaign");
  add_common(fuzz, true);
  fuzz->add_option("--trace", args.trace_file, "stack-trace file");
  fuzz->add_option("--nr-table", args.nr_table_file, "syscall number table JSON");
  fuzz->add_option("--dispatch-frame", args.dispatch_specs,
                   "dispatch frame as name:argindex (repeatable)");
  add_config_flags(fuzz, true);

  auto* bench = app.add_subcommand("bench", "repeated campaigns with statistics");
  bench->add_option("--scenario", scenario_files, "scenario file (repeatable)")
      ->required();
  bench->add_option("--target", args.target, "target as function@block");
  bench->add_option("--kb", args.kb_file, "knowledge-base JSON file");
  bench->add_option("--config", args.config_file, "config JSON file");
  bench->add_option("--out-dir", args.out_dir, "output directory");
  bench->add_flag("--no-indirect", args.no_indirect,
                  "skip indirect-call resolution in the analysis");
  bench->add_option("--mode", mode_names,
                    "mode to benchmark (repeatable; undirected baseline is implied)");
  bench->add_option("--jobs", jobs, "parallel campaigns");
  add_config_flags(bench, false);

  auto* minimize = app.add_subcommand("minimize", "remove redundant poc calls");
  add_common(minimize, true);
  minimize->add_option("--poc", poc_file, "poc file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(args);
    if (infer->parsed()) return cmd_infer(args);
    if (fuzz->parsed()) return cmd_fuzz(args, make_config(args, flags, set_keys));
    if (bench->parsed())
      return cmd_bench(args, make_config(args, flags, set_keys), scenario_files,
                       mode_names, jobs);
    if (minimize->parsed()) return cmd_minimize(args, poc_file);
  } catch (const gfz::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const gfz::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

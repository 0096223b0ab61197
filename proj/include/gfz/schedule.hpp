// Copyright 2026 gfz project authors. All rights reserved.
// Use of this source code is governed by Apache 2 LICENSE that can be found in the LICENSE file.

#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "gfz/common.hpp"

namespace gfz {

/// Scheduling policies: the linearly decaying probability of using inferred
/// syscalls during mutation, frequency-reinforced per-syscall selection, the
/// biased insert-index distribution, and the exploration/exploitation switch.
/// All time is a virtual clock in seconds.

struct UtilizationSchedule {
  double p_max = 0.9;
  double p_min = 0.1;
  double t_fuzz = 86400.0;
};

// p(t) = p_max - (p_max - p_min) / T_fuzz * t, clamped to [p_min, p_max].
// Past the campaign timeout the probability stays at p_min.
inline double utilization_probability(const UtilizationSchedule& s, double t) {
  double p = s.p_max - (s.p_max - s.p_min) / s.t_fuzz * t;
  return std::clamp(p, s.p_min, s.p_max);
}

// Per-syscall weights over the inferred set. A syscall's weight is its
// occurrence count in the shorter-distance queue plus one, so every inferred
// syscall starts equal and stays selectable.
class SyscallWeights {
 public:
  SyscallWeights() = default;
  explicit SyscallWeights(const std::vector<std::string>& names) {
    for (const auto& n : names) freq_.emplace(n, 0);
  }

  bool empty() const { return freq_.empty(); }
  const std::map<std::string, std::uint64_t>& frequencies() const { return freq_; }

  std::uint64_t total_frequency() const {
    std::uint64_t t = 0;
    for (const auto& [_, f] : freq_) t += f;
    return t;
  }

  double selection_probability(const std::string& s) const {
    auto it = freq_.find(s);
    if (it == freq_.end())
      throw ValidationError("\"" + s + "\" is not an inferred syscall");
    double total = 0;
    for (const auto& [_, f] : freq_) total += static_cast<double>(f) + 1.0;
    return (static_cast<double>(it->second) + 1.0) / total;
  }

  // Counts inferred-syscall occurrences of an input saved to the
  // shorter-distance queue. per_occurrence counts duplicates separately.
  void record(const std::vector<std::string>& call_names, bool per_occurrence = true) {
    std::map<std::string, std::uint64_t> seen;
    for (const auto& n : call_names) {
      auto it = freq_.find(n);
      if (it == freq_.end()) continue;
      if (per_occurrence)
        ++it->second;
      else if (seen[n]++ == 0)
        ++it->second;
    }
  }

  std::string sample(RandomSource& rng) const {
    double total = 0;
    for (const auto& [_, f] : freq_) total += static_cast<double>(f) + 1.0;
    double u = rng.real() * total;
    for (const auto& [name, f] : freq_) {
      u -= static_cast<double>(f) + 1.0;
      if (u < 0) return name;
    }
    return freq_.rbegin()->first;
  }

 private:
  std::map<std::string, std::uint64_t> freq_;
};

// Weight of index i under the linear bias: 1 at index 0 rising to k at
// index n-1, which makes Pr[n-1]/Pr[0] exactly k.
inline double biased_weight(std::uint32_t i, std::uint32_t n, std::uint32_t k) {
  if (n <= 1) return 1.0;
  return 1.0 + static_cast<double>(i) * (static_cast<double>(k) - 1.0) /
                   (static_cast<double>(n) - 1.0);
}

inline std::uint32_t biased_rand(RandomSource& rng, std::uint32_t n, std::uint32_t k) {
  if (n <= 1) return 0;
  // total = sum of the linear weights = n * (k + 1) / 2
  double total = static_cast<double>(n) * (static_cast<double>(k) + 1.0) / 2.0;
  double u = rng.real() * total;
  for (std::uint32_t i = 0; i + 1 < n; ++i) {
    u -= biased_weight(i, n, k);
    if (u < 0) return i;
  }
  return n - 1;
}

enum class InsertRole { Producer, Consumer };

// Insert slot in [0, seq_len]. Consumers are biased toward the back of the
// sequence, producers toward the front (mirror image).
inline std::uint32_t insert_index(RandomSource& rng, std::uint32_t seq_len,
                                  InsertRole role, std::uint32_t k) {
  std::uint32_t x = biased_rand(rng, seq_len + 1, k);
  return role == InsertRole::Consumer ? x : seq_len - x;
}

enum class Phase { Initial, Exploit, Explore };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Initial: return "initial";
    case Phase::Exploit: return "exploit";
    case Phase::Explore: return "explore";
  }
  return "?";
}

// Feedback event produced by seed admission.
enum class FuzzEvent { None, NewPath, NewReachablePath };

// Stuck-timer state machine. Exploitation counts only reachable-set progress;
// exploration counts any new path. A phase that makes no progress for its
// threshold hands control to the other one.
struct SwitchState {
  Phase phase = Phase::Initial;
  double last_progress = 0.0;
  double t_a = 300.0;  // exploit stuck threshold
  double t_b = 600.0;  // explore stuck threshold
  bool pinned = false;  // ablation modes disable switching

  void enter_exploit(double now) {
    phase = Phase::Exploit;
    last_progress = now;
  }

  void enter_explore(double now) {
    phase = Phase::Explore;
    last_progress = now;
  }

  // Returns the new phase when a flip happens.
  std::optional<Phase> step(FuzzEvent event, double now) {
    if (phase == Phase::Initial) return std::nullopt;
    if (phase == Phase::Exploit) {
      if (event == FuzzEvent::NewReachablePath) last_progress = now;
      if (!pinned && now - last_progress >= t_a) {
        enter_explore(now);
        return phase;
      }
    } else {
      if (event != FuzzEvent::None) last_progress = now;
      if (!pinned && now - last_progress >= t_b) {
        enter_exploit(now);
        return phase;
      }
    }
    return std::nullopt;
  }
};

}  // namespace gfz

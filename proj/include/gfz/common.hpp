// Copyright 2026 gfz project authors. All rights reserved.
// Use of this source code is governed by Apache 2 LICENSE that can be found in the LICENSE file.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace gfz {

// Malformed input file (bad JSON, missing field, unknown key).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally well-formed input that violates an invariant; the message
// names the offending entity.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

using FuncId = std::uint32_t;

struct BlockId {
  FuncId func = 0;
  std::uint32_t index = 0;

  auto operator<=>(const BlockId&) const = default;
  std::uint64_t key() const {
    return (static_cast<std::uint64_t>(func) << 32) | index;
  }
};

struct BlockIdHash {
  std::size_t operator()(const BlockId& b) const noexcept {
    return std::hash<std::uint64_t>{}(b.key());
  }
};

// Literal appearing in a basic block or a guard; matched exactly
// (integer equality, strings byte-equal).
using Constant = std::variant<std::int64_t, std::string>;

inline std::string constant_to_string(const Constant& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return "\"" + std::get<std::string>(c) + "\"";
}

// Reference to the resource produced by an earlier call in the same input.
struct ResourceRef {
  std::uint32_t call_index = 0;
  auto operator<=>(const ResourceRef&) const = default;
};

using ArgValue = std::variant<std::int64_t, std::string, ResourceRef>;

struct Call {
  std::string name;
  std::vector<ArgValue> args;
  bool operator==(const Call&) const = default;
};

// A syscall sequence. Resource references must point to earlier calls only.
struct Input {
  std::vector<Call> calls;
  bool operator==(const Input&) const = default;
};

inline bool valid_refs(const Input& in) {
  for (std::size_t i = 0; i < in.calls.size(); ++i) {
    for (const auto& a : in.calls[i].args) {
      if (const auto* r = std::get_if<ResourceRef>(&a)) {
        if (r->call_index >= i) return false;
      }
    }
  }
  return true;
}

// Seed distance is an optional hop count; absence means unreachable (infinity).
using Distance = std::optional<std::uint32_t>;

// Strict "less than" under the convention that absence is +infinity.
inline bool closer(Distance a, Distance b) {
  if (!a) return false;
  if (!b) return true;
  return *a < *b;
}

// Deterministic 64-bit random stream. Identical seed, identical stream;
// everything that randomizes in this library draws from one of these.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, n). The modulo bias is ~n/2^64, far below anything
  // observable at the sample sizes used here.
  std::uint64_t index(std::uint64_t n) {
    return n <= 1 ? 0 : next_u64() % n;
  }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return real() < p; }

  // Weighted pick over nonnegative weights; uniform fallback when all zero.
  std::size_t weighted(const std::vector<double>& weights) {
    double total = 0;
    for (double w : weights) total += w;
    if (total <= 0) return index(weights.size());
    double u = real() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0) return i;
    }
    return weights.size() - 1;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace gfz

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "condsub/gf2.hpp"
#include "condsub/rational.hpp"
#include "condsub/rng.hpp"

namespace condsub {

using StreamPos = unsigned __int128;

/// Seed-expanding generator for space-bounded tests. A seed of
/// S + 2*S*levels bits (start block plus one affine GF(2^S) key pair per
/// level) expands to output_bits pseudorandom bits, addressable in S-bit
/// blocks: block(j) applies the level hashes selected by the bits of j to
/// the start block.
class NisanGenerator {
 public:
  NisanGenerator(int space_bits, StreamPos output_bits,
                 std::span<const std::uint64_t> seed_words);

  static NisanGenerator from_master_seed(int space_bits, StreamPos output_bits,
                                         std::uint64_t master_seed);

  int space_bits() const { return s_; }
  StreamPos output_bits() const { return n_bits_; }
  StreamPos block_count() const { return block_count_; }
  int levels() const { return levels_; }
  int seed_bits() const { return s_ * (1 + 2 * levels_); }

  /// Block index must be below block_count(). The final block may cover
  /// fewer than space_bits() output bits; callers slice what they need.
  std::uint64_t block(StreamPos index) const;

  /// Value of bits [offset, offset+len) of the expanded stream, little
  /// endian (stream bit offset+t contributes 2^t). len <= 200.
  Uint256 window(StreamPos offset, int len) const;

  /// Same value for len <= 120, in native arithmetic.
  unsigned __int128 window128(StreamPos offset, int len) const;

  /// window128(offset, len) < threshold, comparing blockwise from the most
  /// significant end so usually only one block is expanded.
  bool window_less(StreamPos offset, int len, unsigned __int128 threshold) const;

 private:
  struct AffineMap {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
  };
  struct WindowTables;

  std::uint64_t block_direct(StreamPos index) const;
  const WindowTables& tables() const;

  int s_;
  StreamPos n_bits_;
  StreamPos block_count_;
  int levels_;
  std::uint64_t start_;
  std::vector<AffineMap> maps_;  // maps_[t] is the hash applied at level t+1
  const Gf2Field* field_;

  mutable std::atomic<std::uint64_t> block_calls_{0};
  mutable std::atomic<const WindowTables*> tables_ptr_{nullptr};
  mutable std::shared_ptr<const WindowTables> tables_;

 public:
  NisanGenerator(const NisanGenerator& o)
      : s_(o.s_), n_bits_(o.n_bits_), block_count_(o.block_count_),
        levels_(o.levels_), start_(o.start_), maps_(o.maps_), field_(o.field_),
        tables_(std::atomic_load(&o.tables_)) {
    tables_ptr_.store(tables_.get(), std::memory_order_release);
    block_calls_.store(o.block_calls_.load());
  }
  NisanGenerator& operator=(const NisanGenerator& o) {
    if (this != &o) {
      s_ = o.s_; n_bits_ = o.n_bits_; block_count_ = o.block_count_;
      levels_ = o.levels_; start_ = o.start_; maps_ = o.maps_; field_ = o.field_;
      tables_ = std::atomic_load(&o.tables_);
      tables_ptr_.store(tables_.get(), std::memory_order_release);
      block_calls_.store(o.block_calls_.load());
    }
    return *this;
  }
};

/// Deterministic finite automaton over bits; at most 2^space states.
struct BitAutomaton {
  int states = 1;
  int start = 0;
  std::vector<std::array<int, 2>> next;  // next[state][bit]
  std::vector<char> accept;

  static BitAutomaton random(int states, StreamRng& rng);
  bool run(std::uint64_t bits_lsb_first, int nbits) const;
};

/// Exact |P(A accepts truly uniform N bits) - P(A accepts generator output)|
/// by enumerating every seed and counting uniform strings with dynamic
/// programming. Only valid at test sizes; refuses when the seed space or
/// automaton would be too large to enumerate.
double distinguisher_gap(int space_bits, int n_bits, const BitAutomaton& a);

}  // namespace condsub

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "condsub/domain.hpp"
#include "condsub/predicate.hpp"
#include "condsub/rng.hpp"

#include <json.hpp>

namespace condsub {

struct LedgerEntry {
  std::uint64_t queries = 0;
  std::uint64_t desc_cost = 0;
};

/// Monotone counters of oracle usage, attributed to caller-chosen labels.
class QueryLedger {
 public:
  void charge(std::string_view label, std::int64_t desc_size) {
    total_.queries += 1;
    total_.desc_cost += static_cast<std::uint64_t>(desc_size);
    if (!label.empty()) {
      LedgerEntry& e = by_label_[std::string(label)];
      e.queries += 1;
      e.desc_cost += static_cast<std::uint64_t>(desc_size);
    }
  }
  std::uint64_t queries() const { return total_.queries; }
  std::uint64_t desc_cost() const { return total_.desc_cost; }
  const std::map<std::string, LedgerEntry>& by_label() const { return by_label_; }
  nlohmann::json to_json() const;

 private:
  LedgerEntry total_;
  std::map<std::string, LedgerEntry> by_label_;
};

struct CondResult {
  std::size_t index = 0;
  Point point;
};

struct OracleOptions {
  bool accelerate = false;   // ball-indexed match path; distribution identical
  bool check_answers = true; // re-verify every answer against the predicate
};

/// Uniform sampling from the dataset points satisfying a predicate, with
/// query metering. One instance is single threaded; trials use their own.
class CondOracle {
 public:
  CondOracle(const Dataset& ds, std::uint64_t seed, OracleOptions opt = {});

  const Dataset& dataset() const { return *ds_; }

  /// Uniform over matching indices; nullopt when nothing matches.
  std::optional<CondResult> cond(const Predicate& c, std::string_view label = {});

  /// Ground truth scan for tests; does not touch the meters.
  std::vector<std::size_t> exact_match_set(const Predicate& c) const;

  const QueryLedger& ledger() const { return ledger_; }

  /// Precompute per-point values for a weight used across many queries.
  void cache_weight(const WeightFn& f);
  const WeightCache& weights() const { return wcache_; }

 private:
  struct KdTree;
  const KdTree& kd() const;
  std::optional<std::size_t> scan_pick(const Predicate& c, StreamRng& rng) const;
  std::optional<std::size_t> accel_pick(const Predicate& c, const Predicate::Ball& ball,
                                        StreamRng& rng) const;

  const Dataset* ds_;
  StreamRng base_;
  std::uint64_t calls_ = 0;
  QueryLedger ledger_;
  WeightCache wcache_;
  OracleOptions opt_;
  mutable std::shared_ptr<const KdTree> kd_;
};

}  // namespace condsub

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "condsub/oracle.hpp"
#include "condsub/prg.hpp"
#include "condsub/rng.hpp"

namespace condsub {

/// Every asymptotic budget gets an explicit constant here, so measured query
/// counts can be checked against a single auditable table.
struct Tunables {
  // support estimation: repetitions per comparison = ceil(c * ln(2/delta') / eps^2)
  double se_rep_const = 1.15;
  int se_list_cap = 3;  // exact path for supports of size <= cap - 1

  // sum: coarse bracketing precision per level, then a refinement pool of
  // ceil((1.3 * z / (eps/2))^2) inversion samples split by contribution.
  double sum_coarse_eps = 0.75;
  double sum_coarse_delta = 0.2;
  double sum_refine_z = 2.3;
  int sum_refine_floor = 12;

  // max: randomized variant, per spec'd halving analysis
  double maxrand_budget_const = 2.0;  // steps <= c * log2(n) * ln(2 log2(n)/delta)

  // weighted sampling
  double wcond_round_const = 6.0;  // rounds = ceil(6 ln(1/delta))
  double wcond_sum_eps = 0.125;

  // distinct-elements sampling
  double des_retry_const = 3.0;
  int des_hash_slack_bits = 16;
};

const Tunables& default_tunables();

struct EstimateResult {
  double value = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  std::uint64_t queries = 0;
  std::uint64_t desc_cost = 0;
  bool exact = false;
};

/// One point of the conditioned set, or nothing.
std::optional<CondResult> ep(CondOracle& o, const Predicate& c,
                             std::string_view label = "ep");

struct ListResult {
  std::vector<CondResult> points;
  bool overflow = false;
};

/// All points of the conditioned set up to cap, by repeated exclusion.
ListResult list_all(CondOracle& o, const Predicate& c, std::size_t cap,
                    std::string_view label = "list");

EstimateResult support_estimation(CondOracle& o, const Predicate& c, double eps,
                                  double delta, StreamRng& rng,
                                  const Tunables& t = default_tunables(),
                                  std::string_view label = "se");

EstimateResult distinct_values(CondOracle& o, const Predicate& c, const WeightFn& f,
                               double eps, double delta, StreamRng& rng,
                               const Tunables& t = default_tunables(),
                               std::string_view label = "dv");

/// Exact maximum by threshold bisection; at most ceil(log2 M) + 2 queries.
std::optional<std::int64_t> max_binary(CondOracle& o, const Predicate& c,
                                       const WeightFn& f,
                                       std::string_view label = "max.binary");

struct ArgMaxResult {
  std::int64_t value = 0;
  CondResult arg;
};

/// Randomized maximum by repeated improvement; falls back to bisection if
/// the query budget runs out, so the answer is always the true maximum of
/// the conditioned set.
std::optional<ArgMaxResult> max_random(CondOracle& o, const Predicate& c,
                                       const WeightFn& f, double delta, StreamRng& rng,
                                       const Tunables& t = default_tunables(),
                                       std::string_view label = "max.random");

EstimateResult sum_weights(CondOracle& o, const Predicate& c, const WeightFn& f,
                           double eps, double delta, StreamRng& rng,
                           const Tunables& t = default_tunables(),
                           std::string_view label = "sum");

/// Draw a point with probability proportional to f, within eps_tv total
/// variation; nothing on failure (probability <= delta).
std::optional<CondResult> wcond(CondOracle& o, const Predicate& c, const WeightFn& f,
                                double eps_tv, double delta, StreamRng& rng,
                                const Tunables& t = default_tunables(),
                                std::string_view label = "wcond");

/// Draw a point so that every distinct f-value class is (near) equally
/// likely; nothing on failure.
std::optional<CondResult> des(CondOracle& o, const Predicate& c, const WeightFn& f,
                              double eps_tv, double delta, StreamRng& rng,
                              const Tunables& t = default_tunables(),
                              std::string_view label = "des");

// Internals shared with the estimators built on top (grid occupancy, level
// counts): a count estimator over either the point domain or a value range.
class CountCore {
 public:
  // Domain-index mode.
  CountCore(CondOracle& o, Predicate base, std::string_view label);
  // Value mode: counts distinct f-values of the conditioned set.
  CountCore(CondOracle& o, Predicate base, WeightFn f, std::int64_t value_span,
            std::string_view label);

  /// Exact count of members (or distinct values) up to cap-1; nullopt when
  /// there are at least cap.
  std::optional<std::int64_t> small_count(std::size_t cap);

  /// Fraction of m subset probes that came back empty at inclusion num/den.
  double empty_fraction(const BigInt& inv_num, const BigInt& inv_den, int m,
                        StreamRng& rng);

  /// Lattice bisection estimate per the repetition table.
  EstimateResult bisect(double eps, double delta, StreamRng& rng, const Tunables& t);

  /// ln(p_hat)/ln(1-q) at integer guess alpha >= 2 with m probes.
  double invert(std::int64_t alpha, int m, StreamRng& rng);

  std::int64_t upper_bound() const { return upper_; }

 private:
  Predicate probe(const BigInt& num, const BigInt& den, std::uint64_t seed) const;
  double truncated_q(const BigInt& inv_num, const BigInt& inv_den) const;

  CondOracle* o_;
  Predicate base_;
  WeightFn value_fn_;
  std::int64_t value_span_ = 0;  // 0 = domain mode
  std::int64_t upper_ = 0;
  double addr_count_ = 0;
  double delta_prg_ = 0;
  std::string label_;
};

}  // namespace condsub

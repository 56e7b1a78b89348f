// SPDX-License-Identifier: Apache-2.0
#include "condsub/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace condsub {

namespace {

int ceil_log2_i(std::int64_t v) {
  int b = 0;
  std::int64_t p = 1;
  while (p < v) { p <<= 1; ++b; }
  return b;
}

struct LedgerScope {
  const QueryLedger& ledger;
  std::uint64_t q0, d0;
  explicit LedgerScope(const CondOracle& o) : ledger(o.ledger()), q0(ledger.queries()), d0(ledger.desc_cost()) {}
  void finish(EstimateResult& r) const {
    r.queries = ledger.queries() - q0;
    r.desc_cost = ledger.desc_cost() - d0;
  }
};

}  // namespace

const Tunables& default_tunables() {
  static const Tunables t;
  return t;
}

std::optional<CondResult> ep(CondOracle& o, const Predicate& c, std::string_view label) {
  return o.cond(c, label);
}

ListResult list_all(CondOracle& o, const Predicate& c, std::size_t cap,
                    std::string_view label) {
  if (cap < 1) throw std::invalid_argument("list_all: cap must be >= 1");
  ListResult out;
  Predicate pred = c;
  while (out.points.size() < cap) {
    auto r = o.cond(pred, label);
    if (!r) return out;
    pred = Predicate::conjoin(std::move(pred), Predicate::not_equal_point(r->point));
    out.points.push_back(std::move(*r));
  }
  out.overflow = o.cond(pred, label).has_value();
  return out;
}

// ---------------------------------------------------------------------------
// CountCore

CountCore::CountCore(CondOracle& o, Predicate base, std::string_view label)
    : o_(&o), base_(std::move(base)), label_(label) {
  const Dataset& ds = o.dataset();
  addr_count_ = std::pow(static_cast<double>(ds.side()), ds.dim());
  upper_ = static_cast<std::int64_t>(ds.size());
  delta_prg_ = 1.0 / addr_count_;
}

CountCore::CountCore(CondOracle& o, Predicate base, WeightFn f, std::int64_t value_span,
                     std::string_view label)
    : o_(&o), base_(std::move(base)), value_fn_(std::move(f)), value_span_(value_span),
      label_(label) {
  if (value_span_ < 1) throw std::invalid_argument("CountCore: empty value span");
  addr_count_ = static_cast<double>(value_span_);
  upper_ = std::min<std::int64_t>(static_cast<std::int64_t>(o.dataset().size()), value_span_);
  delta_prg_ = 1.0 / addr_count_;
}

Predicate CountCore::probe(const BigInt& num, const BigInt& den, std::uint64_t seed) const {
  SubsetInclusion g = SubsetInclusion::constant(den, num);  // probability den/num
  const Dataset& ds = o_->dataset();
  Predicate subset =
      value_span_ == 0
          ? pseudo_subset_domain(ds.dim(), ds.side(), g, delta_prg_, seed)
          : pseudo_subset_value(value_fn_, value_span_, g, delta_prg_, seed);
  return Predicate::conjoin(base_, std::move(subset));
}

double CountCore::truncated_q(const BigInt& inv_num, const BigInt& inv_den) const {
  int k = subset_k_bits(addr_count_, delta_prg_);
  BigInt thr = (BigInt(1) << k) * inv_den / inv_num;
  return std::ldexp(thr.convert_to<double>(), -k);
}

std::optional<std::int64_t> CountCore::small_count(std::size_t cap) {
  if (value_span_ == 0) {
    ListResult lr = list_all(*o_, base_, cap, label_);
    if (lr.overflow || lr.points.size() >= cap) return std::nullopt;
    return static_cast<std::int64_t>(lr.points.size());
  }
  // Distinct values: exclude each seen value and re-ask.
  Predicate pred = base_;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < cap; ++i) {
    auto r = o_->cond(pred, label_);
    if (!r) return count;
    std::int64_t v = value_fn_(r->point);
    ++count;
    pred = Predicate::conjoin(
        std::move(pred),
        Predicate::negate(Predicate::weight_compare(value_fn_, CmpOp::EQ, v)));
  }
  return std::nullopt;  // at least cap distinct values
}

double CountCore::empty_fraction(const BigInt& inv_num, const BigInt& inv_den, int m,
                                 StreamRng& rng) {
  int empty = 0;
  for (int i = 0; i < m; ++i) {
    Predicate p = probe(inv_num, inv_den, rng.next());
    if (!o_->cond(p, label_)) ++empty;
  }
  return static_cast<double>(empty) / static_cast<double>(m);
}

EstimateResult CountCore::bisect(double eps, double delta, StreamRng& rng,
                                 const Tunables& t) {
  EstimateResult res;
  res.eps = eps;
  res.delta = delta;
  LedgerScope scope(*o_);

  Ratio er = Ratio::snap(eps);
  BigInt rnum = BigInt(er.den) + er.num;
  BigInt rden = er.den;
  double base = 1.0 + er.to_double();
  double lbase = std::log(base);
  int i_min = static_cast<int>(std::ceil(std::log(2.0) / lbase - 1e-9));
  int i_max = static_cast<int>(std::ceil(std::log(static_cast<double>(upper_)) / lbase - 1e-9));
  if (i_max <= i_min) i_max = i_min + 1;

  int comps = std::max(1, ceil_log2_i(i_max - i_min + 1));
  double dprime = delta / comps;
  int m = static_cast<int>(std::ceil(t.se_rep_const * std::log(2.0 / dprime) / (eps * eps)));
  m = std::max(m, 8);

  int lo = i_min, hi = i_max;
  while (lo < hi) {
    int mid = lo + (hi - lo) / 2;
    BigInt an = ipow(rnum, static_cast<unsigned>(mid));
    BigInt ad = ipow(rden, static_cast<unsigned>(mid));
    double alpha = std::pow(base, mid);
    double phat = empty_fraction(an, ad, m, rng);
    double tau = std::pow(1.0 - truncated_q(an, ad), alpha);
    if (phat < tau) lo = mid + 1; else hi = mid;
  }
  res.value = std::pow(base, static_cast<double>(lo) - 0.5);
  res.value = std::clamp(res.value, 2.0, static_cast<double>(upper_));
  scope.finish(res);
  return res;
}

double CountCore::invert(std::int64_t alpha, int m, StreamRng& rng) {
  alpha = std::max<std::int64_t>(alpha, 2);
  double phat = empty_fraction(BigInt(alpha), BigInt(1), m, rng);
  double lo_clamp = 0.5 / m;
  phat = std::clamp(phat, lo_clamp, 1.0 - lo_clamp);
  double q = truncated_q(BigInt(alpha), BigInt(1));
  double est = std::log(phat) / std::log(1.0 - q);
  return std::clamp(est, 0.0, static_cast<double>(upper_));
}

// ---------------------------------------------------------------------------
// Support estimation and distinct values

namespace {

EstimateResult count_with_core(CountCore& core, double eps, double delta, StreamRng& rng,
                               const Tunables& t, const CondOracle& o) {
  EstimateResult res;
  res.eps = eps;
  res.delta = delta;
  LedgerScope scope(o);
  auto small = core.small_count(static_cast<std::size_t>(t.se_list_cap));
  if (small) {
    res.value = static_cast<double>(*small);
    res.exact = true;
    scope.finish(res);
    return res;
  }
  EstimateResult b = core.bisect(eps, delta, rng, t);
  res.value = b.value;
  scope.finish(res);
  return res;
}

}  // namespace

EstimateResult support_estimation(CondOracle& o, const Predicate& c, double eps,
                                  double delta, StreamRng& rng, const Tunables& t,
                                  std::string_view label) {
  CountCore core(o, c, label);
  return count_with_core(core, eps, delta, rng, t, o);
}

EstimateResult distinct_values(CondOracle& o, const Predicate& c, const WeightFn& f,
                               double eps, double delta, StreamRng& rng,
                               const Tunables& t, std::string_view label) {
  CountCore core(o, c, f, f.bound(), label);
  return count_with_core(core, eps, delta, rng, t, o);
}

// ---------------------------------------------------------------------------
// Maximum weight

std::optional<std::int64_t> max_binary(CondOracle& o, const Predicate& c,
                                       const WeightFn& f, std::string_view label) {
  auto first = o.cond(c, label);
  if (!first) return std::nullopt;
  std::int64_t lo = f(first->point);
  std::int64_t hi = f.bound();
  while (lo < hi) {
    std::int64_t mid = lo + (hi - lo + 1) / 2;
    auto r = o.cond(Predicate::conjoin(c, Predicate::weight_compare(f, CmpOp::GE, mid)), label);
    if (r) lo = std::max(mid, f(r->point));
    else hi = mid - 1;
  }
  return lo;
}

std::optional<ArgMaxResult> max_random(CondOracle& o, const Predicate& c,
                                       const WeightFn& f, double delta, StreamRng& rng,
                                       const Tunables& t, std::string_view label) {
  (void)rng;
  auto first = o.cond(c, label);
  if (!first) return std::nullopt;
  ArgMaxResult best{f(first->point), std::move(*first)};
  double n = static_cast<double>(o.dataset().size());
  double log2n = std::max(1.0, std::log2(n));
  auto budget = static_cast<std::int64_t>(
      std::ceil(t.maxrand_budget_const * log2n * std::log(2.0 * log2n / delta)));
  for (std::int64_t step = 0; step < budget; ++step) {
    auto r = o.cond(Predicate::conjoin(c, Predicate::weight_compare(f, CmpOp::GT, best.value)),
                    label);
    if (!r) return best;  // nothing above the current value: exact maximum
    best.value = f(r->point);
    best.arg = std::move(*r);
  }
  // Budget exhausted: finish deterministically.
  auto mb = max_binary(o, c, f, label);
  if (!mb) return std::nullopt;
  if (*mb == best.value) return best;
  auto arg = o.cond(Predicate::conjoin(c, Predicate::weight_compare(f, CmpOp::EQ, *mb)), label);
  if (!arg) return best;
  return ArgMaxResult{*mb, std::move(*arg)};
}

// ---------------------------------------------------------------------------
// Sum of weights

EstimateResult sum_weights(CondOracle& o, const Predicate& c, const WeightFn& f,
                           double eps, double delta, StreamRng& rng, const Tunables& t,
                           std::string_view label) {
  EstimateResult res;
  res.eps = eps;
  res.delta = delta;
  LedgerScope scope(o);
  const Dataset& ds = o.dataset();
  if (BigInt(static_cast<std::int64_t>(ds.size())) * f.bound() >= (BigInt(1) << 120))
    throw std::invalid_argument("sum_weights: n*M out of supported range");

  std::string lbl(label);
  auto any = o.cond(c, lbl);
  if (!any) {
    res.exact = true;
    scope.finish(res);
    return res;
  }
  auto max_v = max_binary(o, c, f, lbl + ".max");
  std::int64_t maxw = max_v ? *max_v : 0;
  if (maxw == 0) {
    res.exact = true;
    scope.finish(res);
    return res;
  }

  double eps_i = eps / 4.0;
  Ratio er = Ratio::snap(eps);
  Ratio rho(er.den * 4 + er.num, er.den * 4);  // 1 + eps/4
  double rho_d = rho.to_double();
  int k_lv = static_cast<int>(std::ceil(
                 std::log(static_cast<double>(ds.size()) / eps_i) / std::log(rho_d))) + 1;

  struct Level {
    std::int64_t lo, hi;  // weight range (lo, hi]
    double rep;           // representative value Max / rho^(i-1)
    double coarse = 0;
    std::int64_t exact = -1;
    std::unique_ptr<CountCore> core;
  };
  std::vector<Level> levels;
  BigInt pnum = 1, pden = 1;
  std::int64_t prev = maxw;
  for (int i = 1; i <= k_lv && prev > 0; ++i) {
    pnum *= rho.num;
    pden *= rho.den;
    auto b = static_cast<std::int64_t>(BigInt(BigInt(maxw) * pden / pnum));
    if (b < prev) {
      Level lv;
      lv.lo = b;
      lv.hi = prev;
      lv.rep = static_cast<double>(maxw) / std::pow(rho_d, i - 1);
      levels.push_back(std::move(lv));
      prev = b;
    }
  }

  double total = 0;
  std::vector<Level*> active;
  for (Level& lv : levels) {
    Predicate range = Predicate::conjoin(
        Predicate::weight_compare(f, CmpOp::GT, lv.lo),
        Predicate::weight_compare(f, CmpOp::LE, lv.hi));
    Predicate pred = Predicate::conjoin(c, std::move(range));
    lv.core = std::make_unique<CountCore>(o, std::move(pred), lbl + ".level");
    auto small = lv.core->small_count(3);
    if (small) {
      lv.exact = *small;
      total += static_cast<double>(lv.exact) * lv.rep;
      continue;
    }
    EstimateResult coarse = lv.core->bisect(t.sum_coarse_eps, t.sum_coarse_delta, rng, t);
    lv.coarse = coarse.value;
    active.push_back(&lv);
  }

  if (!active.empty()) {
    double wtot = 0;
    for (Level* lv : active) wtot += lv->coarse * lv->rep;
    auto m_tot = static_cast<double>(
        std::ceil(std::pow(1.3 * t.sum_refine_z / (eps / 2.0), 2)));
    for (Level* lv : active) {
      double share = wtot > 0 ? lv->coarse * lv->rep / wtot : 1.0 / active.size();
      int m_i = std::max(t.sum_refine_floor,
                         static_cast<int>(std::ceil(m_tot * share)));
      double refined = lv->core->invert(
          static_cast<std::int64_t>(std::llround(lv->coarse)), m_i, rng);
      total += refined * lv->rep;
    }
  }

  res.value = total;
  scope.finish(res);
  return res;
}

// ---------------------------------------------------------------------------
// Weighted conditional sampling

std::optional<CondResult> wcond(CondOracle& o, const Predicate& c, const WeightFn& f,
                                double eps_tv, double delta, StreamRng& rng,
                                const Tunables& t, std::string_view label) {
  if (!(eps_tv > 0.0 && eps_tv < 1.0)) throw std::invalid_argument("wcond: bad eps_tv");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("wcond: bad delta");
  std::string lbl(label);
  auto any = o.cond(c, lbl);
  if (!any) return std::nullopt;

  EstimateResult sum = sum_weights(o, c, f, t.wcond_sum_eps, delta / 2.0, rng, t, lbl + ".sum");
  auto sum_int = static_cast<std::int64_t>(std::ceil(std::max(sum.value, 1.0)));

  const Dataset& ds = o.dataset();
  double omega = std::pow(static_cast<double>(ds.side()), ds.dim());
  double dprg = std::max(eps_tv / (omega * std::max(1.0, std::log(1.0 / delta))), 1.0 / omega);

  auto rounds = static_cast<int>(std::ceil(t.wcond_round_const * std::log(1.0 / delta)));
  for (int round = 0; round < rounds; ++round) {
    Predicate h = pseudo_subset_domain(ds.dim(), ds.side(),
                                       SubsetInclusion::scaled(f, BigInt(2) * sum_int),
                                       dprg, rng.next());
    Predicate ch = Predicate::conjoin(c, std::move(h));
    auto x = o.cond(ch, lbl);
    if (!x) continue;
    auto other = o.cond(Predicate::conjoin(ch, Predicate::not_equal_point(x->point)), lbl);
    if (other) continue;  // more than one survivor this round
    // Keep x with probability 1 - f(x) / (2 sum).
    auto fx = static_cast<unsigned __int128>(f(x->point));
    unsigned __int128 bound = (fx << 64) / static_cast<unsigned __int128>(2 * sum_int);
    if (bound >> 64) continue;  // weight above twice the sum estimate
    if (rng.next() >= static_cast<std::uint64_t>(bound)) return x;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Distinct-elements sampling

std::optional<CondResult> des(CondOracle& o, const Predicate& c, const WeightFn& f,
                              double eps_tv, double delta, StreamRng& rng,
                              const Tunables& t, std::string_view label) {
  if (!(eps_tv > 0.0 && eps_tv < 1.0)) throw std::invalid_argument("des: bad eps_tv");
  std::string lbl(label);
  auto any = o.cond(c, lbl);
  if (!any) return std::nullopt;

  const Dataset& ds = o.dataset();
  std::int64_t m_span = f.bound();
  int slack = std::max(t.des_hash_slack_bits,
                       static_cast<int>(std::ceil(std::log2(1.0 / eps_tv))));
  int k_h = std::min(62, ceil_log2_i(m_span) + slack);
  auto retries = static_cast<int>(std::ceil(t.des_retry_const * std::log(2.0 / delta)));

  for (int attempt = 0; attempt < retries; ++attempt) {
    WeightExpr h = WeightExpr::prg_hash(f.expr(), m_span, k_h, rng.next());
    WeightFn hf = WeightFn::make(std::move(h), (std::int64_t(1) << k_h) - 1, ds.dim(), ds.side());
    auto best = max_random(o, c, hf, delta / 2.0, rng, t, lbl);
    if (!best) return std::nullopt;
    std::int64_t fstar = f(best->arg.point);
    // The draw is valid only when the winning hash value is unique across
    // distinct f-values.
    Predicate collision = Predicate::conjoin(
        Predicate::conjoin(c, Predicate::weight_compare(hf, CmpOp::EQ, best->value)),
        Predicate::negate(Predicate::weight_compare(f, CmpOp::EQ, fstar)));
    if (o.cond(collision, lbl)) continue;
    return best->arg;
  }
  return std::nullopt;
}

}  // namespace condsub

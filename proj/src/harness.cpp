// SPDX-License-Identifier: Apache-2.0
#include "condsub/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "condsub/kmeans.hpp"
#include "condsub/mst.hpp"
#include "condsub/primitives.hpp"
#include "condsub/reference.hpp"

#include <CLI11.hpp>

namespace condsub {

namespace {

using Clock = std::chrono::steady_clock;

std::map<std::string, std::string> parse_kv(const std::string& args) {
  std::map<std::string, std::string> out;
  std::istringstream in(args);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("generator: expected key=value, got " + tok);
    out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

std::int64_t kv_int(const std::map<std::string, std::string>& kv, const std::string& key,
                    std::int64_t fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : std::stoll(it->second);
}

double kv_double(const std::map<std::string, std::string>& kv, const std::string& key,
                 double fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : std::stod(it->second);
}

std::string git_describe() {
  FILE* p = popen("git describe --always --dirty 2>/dev/null", "r");
  if (!p) return "unknown";
  char buf[128] = {0};
  std::string out;
  if (fgets(buf, sizeof buf, p)) out = buf;
  pclose(p);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  auto idx = static_cast<std::size_t>(p * static_cast<double>(v.size() - 1));
  return v[idx];
}

struct TaskContext {
  const ExperimentSpec& spec;
  const Dataset& ds;
  int trial;
  std::uint64_t trial_seed;
};

WeightFn sqdist_center_weight(const Dataset& ds) {
  std::vector<Coord> c(static_cast<std::size_t>(ds.dim()), (ds.side() + 1) / 2);
  std::int64_t span = ds.side() - 1;
  return WeightFn::make(WeightExpr::sqdist_to(Point(c)),
                        static_cast<std::int64_t>(ds.dim()) * span * span, ds.dim(), ds.side());
}

/// Random nonnegative-coefficient halfspace a.x >= b with b near the median.
Predicate random_halfspace(const Dataset& ds, StreamRng& rng, WeightFn* out_fn) {
  std::vector<WeightExpr> terms;
  std::int64_t coeff_sum = 0;
  for (int j = 0; j < ds.dim(); ++j) {
    auto a = static_cast<std::int64_t>(1 + rng.bounded(9));
    coeff_sum += a;
    terms.push_back(WeightExpr::mul({WeightExpr::constant(a), WeightExpr::coord(j)}));
  }
  WeightFn f = WeightFn::make(WeightExpr::add(terms), coeff_sum * ds.side(), ds.dim(), ds.side());
  double frac = 0.2 + 0.6 * rng.unit();
  auto b = static_cast<std::int64_t>(frac * static_cast<double>(coeff_sum) *
                                     static_cast<double>(ds.side()));
  if (out_fn) *out_fn = f;
  return Predicate::weight_compare(f, CmpOp::GE, std::max<std::int64_t>(b, 1));
}

TrialRow run_estimate_task(const TaskContext& tc) {
  const ExperimentSpec& spec = tc.spec;
  TrialRow row;
  row.trial = tc.trial;
  row.seed = tc.trial_seed;
  CondOracle oracle(tc.ds, tc.trial_seed, OracleOptions{spec.accel, true});
  StreamRng rng = StreamRng(tc.trial_seed).fork(0x7261);
  bool have_exact = tc.ds.size() <= reference::kScanGuard;

  if (spec.task == "se") {
    StreamRng prng = StreamRng(tc.trial_seed).fork(0x7072);
    Predicate pred = random_halfspace(tc.ds, prng, nullptr);
    EstimateResult r = support_estimation(oracle, pred, spec.eps, spec.delta, rng);
    row.estimate = r.value;
    if (have_exact) row.exact = static_cast<double>(reference::exact_set_size(tc.ds, pred));
  } else if (spec.task == "dv") {
    GridSpec buckets(tc.ds.dim(), tc.ds.side(), 10 * GridSpec::kFpDen,
                     std::vector<std::int64_t>(static_cast<std::size_t>(tc.ds.dim()), 0));
    WeightFn f = WeightFn::make(WeightExpr::grid_cell(buckets), buckets.linear_cell_count(),
                                tc.ds.dim(), tc.ds.side());
    EstimateResult r = distinct_values(oracle, Predicate::const_true(), f, spec.eps,
                                       spec.delta, rng);
    row.estimate = r.value;
    if (have_exact)
      row.exact = static_cast<double>(reference::exact_distinct(tc.ds, Predicate::const_true(), f));
  } else if (spec.task == "max") {
    WeightFn f = sqdist_center_weight(tc.ds);
    auto r = max_random(oracle, Predicate::const_true(), f, spec.delta, rng);
    row.estimate = r ? static_cast<double>(r->value) : 0.0;
    if (have_exact)
      row.exact = static_cast<double>(reference::exact_max(tc.ds, Predicate::const_true(), f));
  } else if (spec.task == "sum") {
    WeightFn f = sqdist_center_weight(tc.ds);
    EstimateResult r = sum_weights(oracle, Predicate::const_true(), f, spec.eps, spec.delta, rng);
    row.estimate = r.value;
    if (have_exact) row.exact = reference::exact_sum(tc.ds, Predicate::const_true(), f);
  } else if (spec.task == "mst") {
    Params params(spec.eps, spec.delta, tc.trial_seed);
    MstOptions opt;
    opt.max_level_override = spec.max_level_override;
    MstRun r = estimate_mst_weight(oracle, params, opt);
    row.estimate = r.estimate;
    if (have_exact && tc.ds.size() >= 2) row.exact = reference::exact_mst_weight(tc.ds);
  } else {
    throw std::invalid_argument("unknown estimate task " + spec.task);
  }

  row.queries = oracle.ledger().queries();
  row.desc_cost = oracle.ledger().desc_cost();
  if (row.exact > 0) {
    row.rel_error = std::abs(row.estimate - row.exact) / row.exact;
  } else if (have_exact) {
    row.rel_error = row.estimate == 0.0 ? 0.0 : 1.0;
  } else {
    row.rel_error = -1.0;  // no ground truth at this size
  }
  if (spec.task == "max" && have_exact) row.rel_error = row.estimate == row.exact ? 0.0 : 1.0;
  row.success = row.rel_error <= tc.spec.eps;
  return row;
}

TrialRow run_distribution_task(const TaskContext& tc) {
  const ExperimentSpec& spec = tc.spec;
  TrialRow row;
  row.trial = tc.trial;
  row.seed = tc.trial_seed;
  CondOracle oracle(tc.ds, tc.trial_seed, OracleOptions{spec.accel, true});
  StreamRng rng = StreamRng(tc.trial_seed).fork(0x7273);
  WeightFn f = WeightFn::make(WeightExpr::coord(0), tc.ds.side(), tc.ds.dim(), tc.ds.side());

  std::map<std::int64_t, double> target;
  std::map<std::int64_t, double> hits;
  int produced = 0, failures = 0;
  if (spec.task == "wcond") {
    double total = 0;
    for (std::size_t i = 0; i < tc.ds.size(); ++i) {
      target[tc.ds.point(i)[0]] += static_cast<double>(f(tc.ds.point(i)));
      total += static_cast<double>(f(tc.ds.point(i)));
    }
    for (auto& [v, w] : target) w /= total;
    for (int i = 0; i < spec.draws; ++i) {
      auto r = wcond(oracle, Predicate::const_true(), f, spec.eps, spec.delta, rng);
      if (!r) { ++failures; continue; }
      ++produced;
      hits[r->point[0]] += 1;
    }
  } else if (spec.task == "des") {
    std::set<std::int64_t> classes;
    for (std::size_t i = 0; i < tc.ds.size(); ++i) classes.insert(f(tc.ds.point(i)));
    for (std::int64_t v : classes) target[v] = 1.0 / static_cast<double>(classes.size());
    for (int i = 0; i < spec.draws; ++i) {
      auto r = des(oracle, Predicate::const_true(), f, std::min(spec.eps, 0.5 / static_cast<double>(f.bound())),
                   spec.delta, rng);
      if (!r) { ++failures; continue; }
      ++produced;
      hits[f(r->point)] += 1;
    }
  } else {
    throw std::invalid_argument("unknown distribution task " + spec.task);
  }

  double tv = 0;
  for (auto& [v, p] : target) {
    double got = produced ? hits[v] / produced : 0.0;
    tv += std::abs(got - p);
  }
  for (auto& [v, got] : hits)
    if (!target.count(v)) tv += got / std::max(produced, 1);
  tv /= 2.0;

  row.estimate = tv;
  row.exact = 0.0;
  row.rel_error = tv;
  row.success = tv <= spec.eps;
  row.queries = oracle.ledger().queries();
  row.desc_cost = oracle.ledger().desc_cost();
  (void)failures;
  return row;
}

TrialRow run_kmeans_task(const TaskContext& tc) {
  const ExperimentSpec& spec = tc.spec;
  TrialRow row;
  row.trial = tc.trial;
  row.seed = tc.trial_seed;
  CondOracle oracle(tc.ds, tc.trial_seed, OracleOptions{spec.accel, true});
  Params params(spec.eps, spec.delta, tc.trial_seed);
  KmeansOptions opt;
  opt.beta = spec.beta;
  KmeansRun run = kmeans_pipeline(oracle, spec.k, params, opt);
  row.queries = oracle.ledger().queries();
  row.desc_cost = oracle.ledger().desc_cost();
  if (tc.ds.size() <= reference::kKmeansGuard) {
    double ours = reference::kmeans_cost(tc.ds, run.clustering.centers);
    double base = reference::exact_kmeans_baseline(tc.ds, spec.k, 50, tc.trial_seed ^ 0x4c).cost;
    row.estimate = ours;
    row.exact = base;
    row.rel_error = base > 0 ? ours / base - 1.0 : 0.0;
    row.success = base > 0 ? ours <= spec.kmeans_ratio * base : ours <= 1e-9;
  } else {
    row.estimate = run.clustering.estimated_cost;
    row.exact = 0;
    row.rel_error = -1.0;
    row.success = true;
  }
  return row;
}

}  // namespace

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& j) {
  ExperimentSpec s;
  if (j.contains("task")) s.task = j["task"];
  if (j.contains("dataset")) s.dataset = j["dataset"];
  if (j.contains("eps")) s.eps = j["eps"];
  if (j.contains("delta")) s.delta = j["delta"];
  if (j.contains("seed")) s.seed = j["seed"];
  if (j.contains("trials")) s.trials = j["trials"];
  if (j.contains("jobs")) s.jobs = j["jobs"];
  if (j.contains("draws")) s.draws = j["draws"];
  if (j.contains("k")) s.k = j["k"];
  if (j.contains("beta")) s.beta = j["beta"];
  if (j.contains("kmeans_ratio")) s.kmeans_ratio = j["kmeans_ratio"];
  if (j.contains("max_level_override")) s.max_level_override = j["max_level_override"];
  if (j.contains("out_dir")) s.out_dir = j["out_dir"];
  if (j.contains("dedupe")) s.dedupe = j["dedupe"];
  if (j.contains("accel")) s.accel = j["accel"];
  if (j.contains("zero_wall")) s.zero_wall = j["zero_wall"];
  if (j.contains("max_failure_rate")) s.max_failure_rate = j["max_failure_rate"];
  if (j.contains("max_slope")) s.max_slope = j["max_slope"];
  if (j.contains("scaling_sizes")) s.scaling_sizes = j["scaling_sizes"].get<std::vector<std::int64_t>>();
  if (j.contains("scaling_trials")) s.scaling_trials = j["scaling_trials"];
  return s;
}

nlohmann::json ExperimentSpec::to_json() const {
  return {
      {"task", task}, {"dataset", dataset}, {"eps", eps}, {"delta", delta},
      {"seed", seed}, {"trials", trials}, {"jobs", jobs}, {"draws", draws},
      {"k", k}, {"beta", beta}, {"kmeans_ratio", kmeans_ratio},
      {"max_level_override", max_level_override}, {"out_dir", out_dir},
      {"dedupe", dedupe}, {"accel", accel}, {"zero_wall", zero_wall},
      {"max_failure_rate", max_failure_rate}, {"max_slope", max_slope},
      {"scaling_sizes", scaling_sizes}, {"scaling_trials", scaling_trials}};
}

void Report::finalize(double eps) {
  (void)eps;
  std::vector<double> rels, walls;
  std::vector<double> qs;
  int failures = 0, judged = 0;
  for (const TrialRow& r : rows) {
    if (r.rel_error >= 0) {
      ++judged;
      if (!r.success) ++failures;
      rels.push_back(r.rel_error);
    }
    qs.push_back(static_cast<double>(r.queries));
    walls.push_back(r.wall_ms);
    wall_total_ms += r.wall_ms;
  }
  failure_rate = judged ? static_cast<double>(failures) / judged : 0.0;
  rel_p50 = percentile(rels, 0.5);
  rel_p95 = percentile(rels, 0.95);
  queries_p50 = static_cast<std::uint64_t>(percentile(qs, 0.5));
  queries_p95 = static_cast<std::uint64_t>(percentile(qs, 0.95));
}

void Report::write_csv(std::ostream& out, bool zero_wall) const {
  out << "trial,seed,estimate,exact,rel_error,success,queries,desc_cost,wall_ms\n";
  char buf[256];
  for (const TrialRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%llu,%.9g,%.9g,%.9g,%d,%llu,%llu,%.3f\n", r.trial,
                  static_cast<unsigned long long>(r.seed), r.estimate, r.exact, r.rel_error,
                  r.success ? 1 : 0, static_cast<unsigned long long>(r.queries),
                  static_cast<unsigned long long>(r.desc_cost), zero_wall ? 0.0 : r.wall_ms);
    out << buf;
  }
}

nlohmann::json Report::to_json(const ExperimentSpec& spec) const {
  nlohmann::json agg = {
      {"failure_rate", failure_rate},  {"rel_error_p50", rel_p50},
      {"rel_error_p95", rel_p95},      {"queries_p50", queries_p50},
      {"queries_p95", queries_p95},    {"wall_total_ms", wall_total_ms},
      {"trials", rows.size()},         {"gate_passed", gate_passed}};
  nlohmann::json j = {{"config", spec.to_json()},
                      {"git", git_describe()},
                      {"aggregates", agg}};
  if (!extra.is_null()) j["extra"] = extra;
  return j;
}

Dataset generate_dataset(const std::string& kind_args, std::uint64_t seed) {
  auto colon = kind_args.find(':');
  std::string kind = kind_args.substr(0, colon);
  auto kv = colon == std::string::npos ? std::map<std::string, std::string>{}
                                       : parse_kv(kind_args.substr(colon + 1));
  StreamRng rng = StreamRng(seed).fork(0x67656e);

  if (kind == "uniform") {
    auto n = static_cast<std::size_t>(kv_int(kv, "n", 1000));
    int d = static_cast<int>(kv_int(kv, "d", 2));
    Coord side = kv_int(kv, "side", 1 << 14);
    double cap = std::pow(static_cast<double>(side), d);
    if (static_cast<double>(n) > cap)
      throw std::invalid_argument("uniform: cannot place n distinct points");
    std::set<std::vector<Coord>> seen;
    std::vector<Coord> flat;
    flat.reserve(n * static_cast<std::size_t>(d));
    while (seen.size() < n) {
      std::vector<Coord> p(static_cast<std::size_t>(d));
      for (int j = 0; j < d; ++j) p[static_cast<std::size_t>(j)] = 1 + static_cast<Coord>(rng.bounded(static_cast<std::uint64_t>(side)));
      if (seen.insert(p).second) flat.insert(flat.end(), p.begin(), p.end());
    }
    return Dataset(std::move(flat), d, side);
  }
  if (kind == "clustered") {
    auto n = static_cast<std::size_t>(kv_int(kv, "n", 1000));
    int d = static_cast<int>(kv_int(kv, "d", 2));
    auto k = static_cast<int>(kv_int(kv, "k", 3));
    double sigma = kv_double(kv, "sigma", 8.0);
    Coord side = kv_int(kv, "side", 1 << 14);
    std::vector<std::vector<Coord>> centers;
    for (int c = 0; c < k; ++c) {
      std::vector<Coord> ctr(static_cast<std::size_t>(d));
      for (int j = 0; j < d; ++j)
        ctr[static_cast<std::size_t>(j)] = static_cast<Coord>(side / 5 + rng.bounded(static_cast<std::uint64_t>(3 * side / 5)));
      centers.push_back(ctr);
    }
    std::set<std::vector<Coord>> seen;
    std::vector<Coord> flat;
    std::size_t rejects = 0;
    while (seen.size() < n) {
      const auto& ctr = centers[seen.size() % static_cast<std::size_t>(k)];
      std::vector<Coord> p(static_cast<std::size_t>(d));
      for (int j = 0; j < d; ++j) {
        double g = 0;
        for (int it = 0; it < 12; ++it) g += rng.unit();
        p[static_cast<std::size_t>(j)] = std::clamp<Coord>(
            ctr[static_cast<std::size_t>(j)] + static_cast<Coord>(std::llround((g - 6.0) * sigma)), 1, side);
      }
      if (seen.insert(p).second) flat.insert(flat.end(), p.begin(), p.end());
      else if (++rejects > 200 * n + 10000)
        throw std::invalid_argument("clustered: cannot place n distinct points");
    }
    return Dataset(std::move(flat), d, side);
  }
  if (kind == "collinear") {
    auto n = static_cast<std::size_t>(kv_int(kv, "n", 50));
    int d = static_cast<int>(kv_int(kv, "d", 1));
    Coord spacing = kv_int(kv, "spacing", 10);
    Coord maxc = 1 + spacing * static_cast<Coord>(n - 1);
    Coord side = kv_int(kv, "side", pow2_side(maxc));
    std::vector<Coord> flat;
    for (std::size_t i = 0; i < n; ++i) {
      flat.push_back(1 + spacing * static_cast<Coord>(i));
      for (int j = 1; j < d; ++j) flat.push_back(1);
    }
    return Dataset(std::move(flat), d, side);
  }
  if (kind == "lattice") {
    auto n = static_cast<std::size_t>(kv_int(kv, "n", 1024));
    int d = static_cast<int>(kv_int(kv, "d", 2));
    auto per_axis = static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(n), 1.0 / d)));
    Coord side = kv_int(kv, "side", pow2_side(per_axis * 4));
    Coord step = std::max<Coord>(1, side / (per_axis + 1));
    std::vector<Coord> flat;
    std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
    for (std::size_t count = 0; count < n;) {
      std::vector<Coord> p(static_cast<std::size_t>(d));
      for (int j = 0; j < d; ++j) p[static_cast<std::size_t>(j)] = 1 + static_cast<Coord>(idx[static_cast<std::size_t>(j)]) * step;
      flat.insert(flat.end(), p.begin(), p.end());
      ++count;
      int j = 0;
      while (j < d && ++idx[static_cast<std::size_t>(j)] >= per_axis) {
        idx[static_cast<std::size_t>(j)] = 0;
        ++j;
      }
      if (j >= d && count < n) throw std::invalid_argument("lattice: grid exhausted");
    }
    return Dataset(std::move(flat), d, side);
  }
  throw std::invalid_argument("unknown generator kind " + kind);
}

Dataset resolve_dataset(const std::string& source, std::uint64_t seed, bool dedupe) {
  if (source.rfind("gen:", 0) == 0) return generate_dataset(source.substr(4), seed);
  if (source.rfind("file:", 0) == 0) return Dataset::load_file(source.substr(5), dedupe);
  if (source.empty()) throw std::invalid_argument("no dataset given");
  return Dataset::load_file(source, dedupe);
}

double loglog_slope(const std::vector<double>& n, const std::vector<double>& q) {
  if (n.size() != q.size() || n.size() < 2)
    throw std::invalid_argument("loglog_slope: need matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  auto m = static_cast<double>(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    double x = std::log(n[i]), y = std::log(std::max(q[i], 1.0));
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

namespace {

Report run_scaling(const ExperimentSpec& spec) {
  Report report;
  nlohmann::json tasks_json;
  bool all_ok = true;
  int trial_counter = 0;
  for (const std::string task : {"se", "sum", "mst"}) {
    std::vector<double> sizes, medians;
    for (std::int64_t n : spec.scaling_sizes) {
      std::vector<double> qs;
      for (int t = 0; t < spec.scaling_trials; ++t) {
        ExperimentSpec sub = spec;
        sub.task = task;
        sub.trials = 1;
        sub.out_dir.clear();
        std::uint64_t tseed = StreamRng(spec.seed).fork(static_cast<std::uint64_t>(n)).fork(static_cast<std::uint64_t>(t)).key;
        sub.seed = tseed;
        std::ostringstream gen;
        gen << "gen:uniform:n=" << n << ",d=2,side=" << (1 << 20);
        sub.dataset = gen.str();
        Dataset ds = resolve_dataset(sub.dataset, tseed, false);
        TaskContext tc{sub, ds, trial_counter, tseed};
        auto t0 = Clock::now();
        TrialRow row = run_estimate_task(tc);
        row.trial = trial_counter++;
        row.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        report.rows.push_back(row);
        qs.push_back(static_cast<double>(row.queries));
      }
      std::sort(qs.begin(), qs.end());
      sizes.push_back(static_cast<double>(n));
      medians.push_back(qs[qs.size() / 2]);
    }
    double slope = loglog_slope(sizes, medians);
    tasks_json[task] = {{"sizes", sizes}, {"median_queries", medians}, {"slope", slope}};
    if (spec.max_slope >= 0 && slope > spec.max_slope) all_ok = false;
  }
  report.extra = {{"scaling", tasks_json}};
  report.finalize(spec.eps);
  report.gate_passed = all_ok;
  return report;
}

}  // namespace

Report run_experiment(const ExperimentSpec& spec) {
  Report report;
  if (spec.task == "scaling") {
    report = run_scaling(spec);
  } else {
    Dataset ds = resolve_dataset(spec.dataset, spec.seed, spec.dedupe);
    report.rows.resize(static_cast<std::size_t>(spec.trials));
    int jobs = spec.jobs;
    if (jobs <= 0) {
      if (const char* env = std::getenv("CONDSUB_JOBS")) jobs = std::atoi(env);
      if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
      if (jobs <= 0) jobs = 1;
    }
    jobs = std::min<int>(jobs, spec.trials);
    std::atomic<int> next{0};
    auto worker = [&] {
      for (;;) {
        int trial = next.fetch_add(1);
        if (trial >= spec.trials) return;
        std::uint64_t tseed = StreamRng(spec.seed).fork(static_cast<std::uint64_t>(trial)).key;
        TaskContext tc{spec, ds, trial, tseed};
        auto t0 = Clock::now();
        TrialRow row;
        if (spec.task == "wcond" || spec.task == "des") row = run_distribution_task(tc);
        else if (spec.task == "kmeans") row = run_kmeans_task(tc);
        else row = run_estimate_task(tc);
        row.trial = trial;
        row.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        report.rows[static_cast<std::size_t>(trial)] = row;
      }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    report.finalize(spec.eps);
    if (spec.max_failure_rate >= 0 && report.failure_rate > spec.max_failure_rate)
      report.gate_passed = false;
  }

  if (!spec.out_dir.empty()) {
    std::filesystem::create_directories(spec.out_dir);
    std::ofstream csv(spec.out_dir + "/report.csv");
    report.write_csv(csv, spec.zero_wall);
    std::ofstream js(spec.out_dir + "/report.json");
    js << report.to_json(spec).dump(2) << "\n";
  }
  return report;
}

}  // namespace condsub

// ---------------------------------------------------------------------------
// Command line

namespace condsub {

int run_cli(int argc, char** argv) {
  CLI::App app{"conditional-sampling experiment harness"};
  app.require_subcommand(1);

  ExperimentSpec spec;
  std::string config_path;
  std::string gen_spec, gen_out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON spec file; flags override");
    sub->add_option("--dataset", spec.dataset, "file path or gen:<kind>:<args>");
    sub->add_option("--eps", spec.eps, "target relative accuracy");
    sub->add_option("--delta", spec.delta, "target failure probability");
    sub->add_option("--seed", spec.seed, "master seed");
    sub->add_option("--trials", spec.trials, "number of trials");
    sub->add_option("--jobs", spec.jobs, "concurrent trials (env CONDSUB_JOBS)");
    sub->add_option("--draws", spec.draws, "draws for sampling tasks");
    sub->add_option("--out", spec.out_dir, "output directory for reports");
    sub->add_option("--max-failure-rate", spec.max_failure_rate,
                    "exit nonzero when the failure rate exceeds this");
    sub->add_flag("--dedupe", spec.dedupe, "deduplicate dataset files");
    sub->add_flag("--accel", spec.accel, "accelerated oracle match path");
    sub->add_flag("--zero-wall", spec.zero_wall, "write wall_ms as 0 in the CSV");
  };

  std::vector<std::string> tasks = {"se", "dv", "max", "sum", "wcond", "des", "kmeans", "mst", "scaling"};
  std::map<std::string, CLI::App*> subs;
  for (const std::string& t : tasks) {
    CLI::App* sub = app.add_subcommand(t, "run the " + t + " task");
    add_common(sub);
    if (t == "kmeans") {
      sub->add_option("--k", spec.k, "number of centers");
      sub->add_option("--beta", spec.beta, "candidate oversampling factor");
      sub->add_option("--ratio", spec.kmeans_ratio, "success ratio vs baseline");
    }
    if (t == "mst")
      sub->add_option("--max-level-override", spec.max_level_override, "cap on level count");
    if (t == "scaling") {
      sub->add_option("--sizes", spec.scaling_sizes, "dataset sizes");
      sub->add_option("--scaling-trials", spec.scaling_trials, "trials per size");
      sub->add_option("--max-slope", spec.max_slope, "log-log slope gate");
    }
    subs[t] = sub;
  }

  CLI::App* gen = app.add_subcommand("gen", "generate a dataset file");
  gen->add_option("--spec", gen_spec, "generator spec, e.g. uniform:n=1000,d=2,side=1024")
      ->required();
  gen->add_option("--seed", spec.seed, "generator seed");
  gen->add_option("--out", gen_out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      Dataset ds = generate_dataset(gen_spec, spec.seed);
      std::ofstream out(gen_out);
      if (!out) throw std::runtime_error("cannot open " + gen_out);
      ds.save(out);
      return 0;
    }
    for (const auto& [name, sub] : subs) {
      if (!sub->parsed()) continue;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open config " + config_path);
        nlohmann::json j;
        in >> j;
        ExperimentSpec base = ExperimentSpec::from_json(j);
        // Flags win over the config: reparse by applying config first, then
        // taking any explicitly passed options from the current spec.
        ExperimentSpec merged = base;
        merged.task = name;
        for (const CLI::Option* o : sub->get_options()) {
          if (o->count() == 0) continue;
          const std::string& n = o->get_name();
          if (n == "--dataset") merged.dataset = spec.dataset;
          else if (n == "--eps") merged.eps = spec.eps;
          else if (n == "--delta") merged.delta = spec.delta;
          else if (n == "--seed") merged.seed = spec.seed;
          else if (n == "--trials") merged.trials = spec.trials;
          else if (n == "--jobs") merged.jobs = spec.jobs;
          else if (n == "--draws") merged.draws = spec.draws;
          else if (n == "--out") merged.out_dir = spec.out_dir;
          else if (n == "--max-failure-rate") merged.max_failure_rate = spec.max_failure_rate;
          else if (n == "--dedupe") merged.dedupe = spec.dedupe;
          else if (n == "--accel") merged.accel = spec.accel;
          else if (n == "--zero-wall") merged.zero_wall = spec.zero_wall;
          else if (n == "--k") merged.k = spec.k;
          else if (n == "--beta") merged.beta = spec.beta;
          else if (n == "--ratio") merged.kmeans_ratio = spec.kmeans_ratio;
          else if (n == "--max-level-override") merged.max_level_override = spec.max_level_override;
          else if (n == "--sizes") merged.scaling_sizes = spec.scaling_sizes;
          else if (n == "--scaling-trials") merged.scaling_trials = spec.scaling_trials;
          else if (n == "--max-slope") merged.max_slope = spec.max_slope;
        }
        spec = merged;
      } else {
        spec.task = name;
      }
      Report report = run_experiment(spec);
      std::fprintf(stderr,
                   "%s: trials=%zu failure_rate=%.3f rel_p50=%.4f queries_p50=%llu%s\n",
                   spec.task.c_str(), report.rows.size(), report.failure_rate, report.rel_p50,
                   static_cast<unsigned long long>(report.queries_p50),
                   report.gate_passed ? "" : " [gate failed]");
      return report.gate_passed ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

}  // namespace condsub

#include "mmc/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mmc/parallel.hpp"
#include "mmc/smooth_minmax.hpp"

namespace mmc {

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw EstimationError("empirical CDF of an empty sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double t) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalCdf::probability(const Interval& iv) const {
  if (!(iv.lo <= iv.hi)) return 0.0;
  const auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), iv.lo);
  const auto hi = std::upper_bound(lo, sorted_.end(), iv.hi);
  return static_cast<double>(hi - lo) / static_cast<double>(sorted_.size());
}

double EmpiricalCdf::mean() const {
  Moments m;
  for (double v : sorted_) m.add(v);
  return m.mean;
}

std::vector<double> minmax_samples(const SampleStream& stream, std::size_t samples,
                                   unsigned workers) {
  const auto blocks = map_blocks<std::vector<double>>(
      samples, workers, [&](std::size_t b, std::size_t e) {
        std::vector<double> out;
        out.reserve(e - b);
        for (std::size_t k = b; k < e; ++k) out.push_back(exact_minmax(stream.sample_at(k)));
        return out;
      });
  std::vector<double> all;
  all.reserve(samples);
  for (const auto& b : blocks) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<Interval> default_grid(const std::vector<double>& pooled_sorted,
                                   const GridSpec& spec, std::uint64_t seed) {
  if (spec.explicit_intervals) return *spec.explicit_intervals;
  if (pooled_sorted.empty()) throw EstimationError("grid from an empty sample");
  if (spec.quantile_levels < 1) throw ConstraintError("quantile_levels must be >= 1");
  constexpr double inf = std::numeric_limits<double>::infinity();

  const std::size_t last = pooled_sorted.size() - 1;
  std::vector<double> q(static_cast<std::size_t>(spec.quantile_levels));
  for (int k = 0; k < spec.quantile_levels; ++k) {
    const double level = (k + 1.0) / (spec.quantile_levels + 1.0);
    q[static_cast<std::size_t>(k)] =
        pooled_sorted[static_cast<std::size_t>(std::floor(level * static_cast<double>(last)))];
  }

  std::vector<Interval> grid;
  for (double v : q) grid.push_back({-inf, v});
  for (double v : q) grid.push_back({v, inf});
  for (std::size_t k = 0; k + 1 < q.size(); ++k) grid.push_back({q[k], q[k + 1]});
  if (q.size() >= 2) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, q.size() - 1);
    for (int r = 0; r < spec.random_intervals; ++r) {
      std::size_t a = pick(rng), b = pick(rng);
      while (b == a) b = pick(rng);
      if (a > b) std::swap(a, b);
      grid.push_back({q[a], q[b]});
    }
  }
  return grid;
}

std::vector<GapRow> interval_gaps(const EmpiricalCdf& a, const EmpiricalCdf& b,
                                  const std::vector<Interval>& grid, double enlargement) {
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::vector<GapRow> rows;
  rows.reserve(grid.size());
  for (const auto& iv : grid) {
    GapRow r;
    r.interval = iv;
    r.mu_hat = a.probability(iv);
    r.nu_enlarged_hat = b.probability({iv.lo - enlargement, iv.hi + enlargement});
    r.gap = r.mu_hat - r.nu_enlarged_hat;
    r.se = std::sqrt(r.mu_hat * (1.0 - r.mu_hat) / na +
                     r.nu_enlarged_hat * (1.0 - r.nu_enlarged_hat) / nb);
    rows.push_back(r);
  }
  return rows;
}

bool gap_passes(const std::vector<GapRow>& rows, double rhs) {
  return std::all_of(rows.begin(), rows.end(),
                     [&](const GapRow& r) { return r.gap <= rhs + 2.0 * r.se; });
}

namespace {

double chosen_rhs(const BoundReport& b, bool gaussian) {
  return gaussian ? *b.rhs_gaussian : b.rhs_general;
}

}  // namespace

GapReport distributional_gap(const EnsembleSpec& spec_a, const EnsembleSpec& spec_b,
                             const BoundParams& params, const GapOptions& options) {
  validate(spec_a);
  validate(spec_b);
  if (spec_a.n != spec_b.n || spec_a.m != spec_b.m)
    throw DomainError("ensembles " + spec_a.name + " and " + spec_b.name +
                      " have different shapes");
  if (options.samples < 2) throw EstimationError("need at least two samples");

  GapReport rep;
  rep.name_a = spec_a.name;
  rep.name_b = spec_b.name;
  rep.samples = options.samples;
  rep.seed_a = derive_seed(options.seed, 1);
  rep.seed_b = derive_seed(options.seed, 2);
  rep.gaussian = spec_a.is_gaussian() && spec_b.is_gaussian();

  const SampleStream sa(spec_a, rep.seed_a), sb(spec_b, rep.seed_b);
  const std::size_t nc = options.component_samples ? options.component_samples
                                                   : options.samples;
  BoundComponents comps;
  comps.b1 = estimate_B1(sa, nc, options.workers);
  comps.b1p = estimate_B1(sb, nc, options.workers);
  comps.b2 = estimate_B2(sa, nc, options.workers);
  comps.b2p = estimate_B2(sb, nc, options.workers);
  comps.b3 = Estimate::exact_value(compute_B3(exact_covariance(spec_a), exact_covariance(spec_b)));
  rep.bound = coupling_rhs(spec_a.n, spec_a.m, params, comps, rep.gaussian);
  rep.rhs = chosen_rhs(rep.bound, rep.gaussian);
  rep.enlargement = rep.bound.threshold;

  const EmpiricalCdf ca(minmax_samples(sa, options.samples, options.workers));
  const EmpiricalCdf cb(minmax_samples(sb, options.samples, options.workers));
  std::vector<double> pooled;
  pooled.reserve(ca.size() + cb.size());
  std::merge(ca.sorted().begin(), ca.sorted().end(), cb.sorted().begin(), cb.sorted().end(),
             std::back_inserter(pooled));
  const auto grid = default_grid(pooled, options.grid, derive_seed(options.seed, 3));
  if (grid.empty()) throw EstimationError("empty interval grid");

  rep.rows = interval_gaps(ca, cb, grid, rep.enlargement);
  for (std::size_t k = 0; k < rep.rows.size(); ++k)
    if (rep.rows[k].gap > rep.rows[rep.argmax].gap) rep.argmax = k;
  rep.max_gap = rep.rows[rep.argmax].gap;
  rep.max_gap_se = rep.rows[rep.argmax].se;
  rep.pass = gap_passes(rep.rows, rep.rhs);
  return rep;
}

namespace {

GapReport with_c(GapReport rep, double C) {
  BoundParams p = rep.bound.params;
  p.C = C;
  rep.bound = coupling_rhs(rep.bound.n, rep.bound.m, p, rep.bound.components, rep.gaussian);
  rep.rhs = chosen_rhs(rep.bound, rep.gaussian);
  rep.pass = gap_passes(rep.rows, rep.rhs);
  return rep;
}

double margin(const GapReport& rep) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : rep.rows) worst = std::min(worst, rep.rhs + 2.0 * r.se - r.gap);
  return worst;
}

// Smallest C with with_c(rep, C).pass; +inf when no finite C works.
double required_c(const GapReport& rep) {
  if (with_c(rep, 0.0).pass) return 0.0;
  double hi = 1.0;
  while (!with_c(rep, hi).pass) {
    hi *= 2.0;
    if (hi > 1e12) return std::numeric_limits<double>::infinity();
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (with_c(rep, mid).pass ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

CalibrationResult calibrate_C(const std::vector<Scenario>& scenarios,
                              const GapOptions& options) {
  if (scenarios.empty()) throw ConstraintError("calibration needs at least one scenario");
  CalibrationResult out;
  std::vector<GapReport> reports;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    GapOptions o = options;
    o.seed = derive_seed(options.seed, 100 + s);
    BoundParams p = scenarios[s].params;
    p.C = 0.0;
    reports.push_back(distributional_gap(scenarios[s].a, scenarios[s].b, p, o));
    ScenarioMargin sm;
    sm.name = scenarios[s].name;
    sm.required_c = required_c(reports.back());
    sm.feasible = std::isfinite(sm.required_c);
    out.scenarios.push_back(sm);
  }

  out.c_star = 0.0;
  out.binding = out.scenarios.front().name;
  for (const auto& sm : out.scenarios)
    if (sm.required_c > out.c_star) {
      out.c_star = sm.required_c;
      out.binding = sm.name;
    }
  out.finite = std::isfinite(out.c_star);

  const double c_eval = out.finite ? out.c_star : 0.0;
  for (std::size_t s = 0; s < reports.size(); ++s) {
    out.reports.push_back(with_c(reports[s], c_eval));
    out.scenarios[s].margin = margin(out.reports.back());
  }
  return out;
}

}  // namespace mmc

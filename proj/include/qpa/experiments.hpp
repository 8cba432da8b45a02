#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qpa/auction.hpp"
#include "qpa/best_response.hpp"
#include "qpa/errors.hpp"
#include "qpa/weights.hpp"

namespace qpa {

/// (alpha, 1, ..., 1) with n entries.
inline ValuationProfile make_scenario(int n, double alpha) {
  if (n < 2) throw ParameterError("scenario needs n >= 2");
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) {
    throw ParameterError("scenario needs alpha >= 1");
  }
  std::vector<double> v(static_cast<std::size_t>(n), 1.0);
  v[0] = alpha;
  return ValuationProfile(std::move(v));
}

/// {1.2, 1.4, ..., 10.0} then {20, 30, ..., 100}.
inline std::vector<double> alpha_grid() {
  std::vector<double> grid;
  grid.reserve(54);
  for (int k = 6; k <= 50; ++k) grid.push_back(k / 5.0);
  for (int k = 2; k <= 10; ++k) grid.push_back(10.0 * k);
  return grid;
}

/// `count` points log-spaced over [lo, hi], endpoints included.
inline std::vector<double> log_space(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) {
    throw ParameterError("log_space needs 0 < lo < hi and count >= 2");
  }
  std::vector<double> out(static_cast<std::size_t>(count));
  const double step = std::log(hi / lo) / (count - 1);
  for (int k = 0; k < count; ++k) out[k] = lo * std::exp(step * k);
  out.front() = lo;
  out.back() = hi;
  return out;
}

inline std::vector<double> default_steepness_grid() {
  return log_space(0.05, 500.0, 60);
}

inline constexpr int kDefaultRefinementRounds = 2;
inline constexpr int kRefinementFactor = 10;

struct RevenuePoint {
  double revenue = 0.0;
  BidVector final;
  double high_alloc = 0.0;
  double residual = 0.0;
  bool converged = false;
};

/// Runs `iters` rounds of dynamics from (start, ..., start) and settles at the
/// final bids.  iters = 0 settles the start vector itself.
inline RevenuePoint revenue_at(const WeightSpec& spec,
                               const ValuationProfile& profile, int iters = 100,
                               double start = kDefaultStartBid) {
  if (iters < 0) throw ParameterError("iters must be >= 0");
  const BidVector start_bids = BidVector::uniform(profile.size(), start);
  RevenuePoint out;
  DynamicsOptions opts;
  if (iters == 0) {
    require_within_values(profile, start_bids);
    out.final = start_bids;
    const auto br = best_response_vector(spec, profile, start_bids, opts.response);
    out.residual = sup_distance(start_bids, br.bids);
  } else {
    opts.max_iters = iters;
    DynamicsTrace trace = run_dynamics(spec, profile, start_bids, opts);
    out.final = std::move(trace.final);
    out.residual = trace.residual;
  }
  out.converged = out.residual < opts.convergence_tol;
  const AuctionOutcome outcome = settle(spec, profile, out.final);
  out.revenue = outcome.revenue;
  out.high_alloc = outcome.allocations[0];
  return out;
}

struct ScenarioSpec {
  int n = 2;
  double alpha = 1.0;
  Family family = Family::exponential;
  std::vector<double> steepness_grid = default_steepness_grid();
  int iters = 100;
  double start_bid = kDefaultStartBid;
  int refinement_rounds = kDefaultRefinementRounds;
};

/// One evaluated steepness value of a sweep.
struct GridPoint {
  double steepness = 0.0;
  RevenuePoint result;
};

struct SweepRow {
  double alpha = 0.0;
  Family family = Family::exponential;
  double best_steepness = 0.0;
  double revenue = 0.0;
  double high_alloc = 0.0;
  double high_bid = 0.0;
  double low_bid = 0.0;
  double residual = 0.0;
  /// The maximizer sits on an end of the initial steepness range.
  bool boundary_flag = false;
  /// Final bids at the maximizer.
  BidVector bids;
  /// Every point evaluated, initial grid and refinements, in steepness order.
  std::vector<GridPoint> evaluated;

  bool grid_argmax_interior() const { return !boundary_flag; }
};

namespace detail {

inline std::size_t argmax_revenue(const std::vector<GridPoint>& points) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < points.size(); ++k) {
    if (points[k].result.revenue > points[best].result.revenue) best = k;
  }
  return best;
}

/// Bid of a representative small bidder: bidder 2, whose peers stay equal to
/// it under synchronous dynamics from a symmetric start.  If they drift
/// apart, use the midpoint of their spread.
inline double representative_low_bid(const BidVector& bids) {
  double lo = bids[1];
  double hi = bids[1];
  for (std::size_t i = 2; i < bids.size(); ++i) {
    lo = std::min(lo, bids[i]);
    hi = std::max(hi, bids[i]);
  }
  if (hi - lo <= 1e-12 * std::max(1.0, hi)) return bids[1];
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Revenue-maximizing steepness for one (n, alpha, family): argmax over the
/// whole grid, then `refinement_rounds` local subdivisions at 10x resolution
/// between the argmax's neighbours.
inline SweepRow sweep_steepness(const ScenarioSpec& scenario) {
  if (scenario.steepness_grid.empty()) {
    throw ParameterError("steepness grid must not be empty");
  }
  if (scenario.family == Family::polynomial) {
    throw ParameterError("steepness sweeps cover exponential and power only");
  }
  const ValuationProfile profile = make_scenario(scenario.n, scenario.alpha);
  std::vector<double> grid = scenario.steepness_grid;
  std::sort(grid.begin(), grid.end());
  const double range_lo = grid.front();
  const double range_hi = grid.back();

  auto evaluate = [&](double steepness) {
    return GridPoint{steepness,
                     revenue_at(WeightSpec::of_family(scenario.family, steepness),
                                profile, scenario.iters, scenario.start_bid)};
  };

  std::vector<GridPoint> points;
  points.reserve(grid.size());
  for (double s : grid) points.push_back(evaluate(s));

  for (int round = 0; round < scenario.refinement_rounds && points.size() > 1;
       ++round) {
    const std::size_t k = detail::argmax_revenue(points);
    const double left = points[k == 0 ? 0 : k - 1].steepness;
    const double right = points[std::min(k + 1, points.size() - 1)].steepness;
    const double step = std::log(right / left) / (2 * kRefinementFactor);
    std::vector<GridPoint> added;
    for (int j = 1; j < 2 * kRefinementFactor; ++j) {
      const double s = left * std::exp(step * j);
      bool known = false;
      for (const auto& p : points) known = known || p.steepness == s;
      if (!known && s > left && s < right) added.push_back(evaluate(s));
    }
    points.insert(points.end(), added.begin(), added.end());
    std::sort(points.begin(), points.end(),
              [](const GridPoint& a, const GridPoint& b) {
                return a.steepness < b.steepness;
              });
  }

  const GridPoint& best = points[detail::argmax_revenue(points)];
  SweepRow row;
  row.alpha = scenario.alpha;
  row.family = scenario.family;
  row.best_steepness = best.steepness;
  row.revenue = best.result.revenue;
  row.high_alloc = best.result.high_alloc;
  row.high_bid = best.result.final[0];
  row.low_bid = detail::representative_low_bid(best.result.final);
  row.residual = best.result.residual;
  row.boundary_flag =
      best.steepness == range_lo || best.steepness == range_hi;
  row.bids = best.result.final;
  row.evaluated = std::move(points);
  return row;
}

/// Worker count: QP_THREADS if set and positive, else hardware concurrency.
inline unsigned sweep_threads() {
  if (const char* env = std::getenv("QP_THREADS")) {
    const long k = std::strtol(env, nullptr, 10);
    if (k > 0) return static_cast<unsigned>(k);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates fn(0..count-1) over a small thread pool; results land by index,
/// so the output does not depend on scheduling.
template <class Fn>
auto parallel_map(std::size_t count, Fn fn, unsigned threads)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < count;) {
      try {
        slots[k].emplace(fn(k));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<R> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct ExperimentConfig {
  int n = 2;
  std::vector<double> alphas = alpha_grid();
  std::vector<Family> families = {Family::exponential, Family::power};
  std::vector<double> exp_grid = default_steepness_grid();
  std::vector<double> pow_grid = default_steepness_grid();
  int iters = 100;
  double start_bid = kDefaultStartBid;
  int refinement_rounds = kDefaultRefinementRounds;
  unsigned threads = sweep_threads();
};

/// Adjacent grid alphas between which a signed series changes sign.
struct SignChange {
  double alpha_lo;
  double alpha_hi;
};

struct ExperimentSummary {
  /// exp revenue - pow revenue changes sign here.
  std::vector<SignChange> revenue_crossovers;
  /// exp bid gap - pow bid gap changes sign here.
  std::vector<SignChange> bid_gap_crossovers;
  std::vector<double> alphas;
  std::vector<double> best_c;
  std::vector<double> best_p;
  std::vector<double> revenue_difference;
  std::vector<double> bid_gap_difference;
};

struct ExperimentResult {
  /// Sorted by (alpha, family).
  std::vector<SweepRow> rows;
  ExperimentSummary summary;

  const SweepRow* find(double alpha, Family family) const {
    for (const auto& r : rows) {
      if (r.alpha == alpha && r.family == family) return &r;
    }
    return nullptr;
  }
};

/// Sign changes of `series` over `alphas`; exact zeros attach to the
/// following interval.
inline std::vector<SignChange> sign_changes(const std::vector<double>& alphas,
                                            const std::vector<double>& series) {
  std::vector<SignChange> out;
  for (std::size_t k = 1; k < series.size(); ++k) {
    const bool before = series[k - 1] > 0.0;
    const bool after = series[k] > 0.0;
    if (before != after) out.push_back({alphas[k - 1], alphas[k]});
  }
  return out;
}

inline ExperimentSummary summarize(const std::vector<SweepRow>& rows,
                                   const std::vector<double>& alphas) {
  ExperimentSummary s;
  for (double alpha : alphas) {
    const SweepRow* e = nullptr;
    const SweepRow* p = nullptr;
    for (const auto& r : rows) {
      if (r.alpha != alpha) continue;
      if (r.family == Family::exponential) e = &r;
      if (r.family == Family::power) p = &r;
    }
    if (!e || !p) continue;
    s.alphas.push_back(alpha);
    s.best_c.push_back(e->best_steepness);
    s.best_p.push_back(p->best_steepness);
    s.revenue_difference.push_back(e->revenue - p->revenue);
    s.bid_gap_difference.push_back(std::abs(e->high_bid - e->low_bid) -
                                   std::abs(p->high_bid - p->low_bid));
  }
  s.revenue_crossovers = sign_changes(s.alphas, s.revenue_difference);
  s.bid_gap_crossovers = sign_changes(s.alphas, s.bid_gap_difference);
  return s;
}

inline bool row_order(const SweepRow& a, const SweepRow& b) {
  if (a.alpha != b.alpha) return a.alpha < b.alpha;
  return static_cast<int>(a.family) < static_cast<int>(b.family);
}

/// Full alpha x family sweep for one bidder count.
inline ExperimentResult run_full_experiment(const ExperimentConfig& config) {
  std::vector<double> alphas = config.alphas;
  std::sort(alphas.begin(), alphas.end());
  std::vector<ScenarioSpec> jobs;
  for (double alpha : alphas) {
    for (Family family : config.families) {
      ScenarioSpec spec;
      spec.n = config.n;
      spec.alpha = alpha;
      spec.family = family;
      spec.steepness_grid =
          family == Family::exponential ? config.exp_grid : config.pow_grid;
      spec.iters = config.iters;
      spec.start_bid = config.start_bid;
      spec.refinement_rounds = config.refinement_rounds;
      jobs.push_back(std::move(spec));
    }
  }
  ExperimentResult result;
  result.rows = parallel_map(
      jobs.size(), [&](std::size_t k) { return sweep_steepness(jobs[k]); },
      config.threads);
  std::stable_sort(result.rows.begin(), result.rows.end(), row_order);
  result.summary = summarize(result.rows, alphas);
  return result;
}

}  // namespace qpa

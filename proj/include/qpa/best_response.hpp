#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "qpa/auction.hpp"
#include "qpa/errors.hpp"
#include "qpa/weights.hpp"

namespace qpa {

/// The focal bidder's view: their value and the total weight of everyone
/// else's bids.  The rival weight is held as a logarithm so that steep
/// exponentials with large bids stay representable.
class ResponseProblem {
 public:
  static ResponseProblem from_rival_sum(WeightSpec spec, double value,
                                        double rival_weight_sum) {
    if (!(rival_weight_sum > 0.0)) {
      throw DegenerateInput("best response needs a positive rival weight sum");
    }
    return from_log_rival_sum(std::move(spec), value,
                              std::log(rival_weight_sum));
  }

  static ResponseProblem from_log_rival_sum(WeightSpec spec, double value,
                                            double log_rival_weight_sum) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw ParameterError("private value must be finite and positive");
    }
    if (!std::isfinite(log_rival_weight_sum)) {
      throw DegenerateInput("best response needs a positive rival weight sum");
    }
    return ResponseProblem(std::move(spec), value, log_rival_weight_sum);
  }

  const WeightSpec& spec() const { return spec_; }
  double value() const { return value_; }
  double log_rival_weight_sum() const { return log_s_; }
  double rival_weight_sum() const { return std::exp(log_s_); }

 private:
  ResponseProblem(WeightSpec spec, double value, double log_s)
      : spec_(std::move(spec)), value_(value), log_s_(log_s) {}

  WeightSpec spec_;
  double value_;
  double log_s_;
};

/// Allocation the focal bidder receives when bidding b.
inline double response_allocation(const ResponseProblem& problem, double b) {
  if (b == 0.0) return 0.0;
  const double gap = problem.log_rival_weight_sum() - log_weight(problem.spec(), b);
  return 1.0 / (1.0 + std::exp(gap));
}

/// The response curve u(b) = (v - b) f(b) / (f(b) + s).
inline double response_utility(const ResponseProblem& problem, double b) {
  return (problem.value() - b) * response_allocation(problem, b);
}

/// u'(b) = a [(v - b)(1 - a) f'/f - 1] for b > 0.
inline double response_slope(const ResponseProblem& problem, double b) {
  const double a = response_allocation(problem, b);
  const double phi = weight_log_slope(problem.spec(), b);
  return a * ((problem.value() - b) * (1.0 - a) * phi - 1.0);
}

namespace detail {

/// Has the sign of u'(b): (v - b)(1 - a) f'/f - 1.
inline double slope_sign_term(const ResponseProblem& problem, double b) {
  const double a_complement =
      1.0 / (1.0 + std::exp(log_weight(problem.spec(), b) -
                            problem.log_rival_weight_sum()));
  const double phi = weight_log_slope(problem.spec(), b);
  return (problem.value() - b) * a_complement * phi - 1.0;
}

}  // namespace detail

inline constexpr double kBidTolerance = 1e-13;
inline constexpr int kBisectionCap = 400;

/// Maximizer of the response curve on (0, v).  u' > 0 as b -> 0+ and u' < 0
/// at b = v, so [0, v] brackets the sign change; bisect it down to
/// kBidTolerance.
inline double best_response(const ResponseProblem& problem) {
  double lo = 0.0;
  double hi = problem.value();
  for (int it = 0; it < kBisectionCap; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= kBidTolerance || mid <= lo || mid >= hi) {
      return mid;
    }
    const double g = detail::slope_sign_term(problem, mid);
    if (std::isnan(g)) {
      throw NonConvergence("response slope is not a number during bisection");
    }
    (g > 0.0 ? lo : hi) = mid;
  }
  throw NonConvergence("best-response bisection exceeded its iteration cap");
}

struct ResponseOptions {
  /// Answer s = 0 with a floor bid instead of throwing.
  bool rescue = false;
  /// Floor bid as a fraction of the bidder's value.
  double floor_fraction = 1e-9;
};

struct ResponseVector {
  BidVector bids;
  bool rescued = false;
};

/// log sum_{j != skip} exp(logs[j]).
inline double log_sum_excluding(const std::vector<double>& logs,
                                std::size_t skip) {
  double top = detail::kNegInf;
  for (std::size_t j = 0; j < logs.size(); ++j) {
    if (j != skip) top = std::max(top, logs[j]);
  }
  if (top == detail::kNegInf) return top;
  double acc = 0.0;
  for (std::size_t j = 0; j < logs.size(); ++j) {
    if (j != skip) acc += std::exp(logs[j] - top);
  }
  return top + std::log(acc);
}

/// Simultaneous best responses: every component reacts to the same input.
inline ResponseVector best_response_vector(const WeightSpec& spec,
                                           const ValuationProfile& profile,
                                           const BidVector& bids,
                                           const ResponseOptions& options) {
  require_same_size(profile, bids);
  const std::vector<double> logs = log_weights(spec, bids);
  std::vector<double> out(bids.size());
  bool rescued = false;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    const double log_s = log_sum_excluding(logs, i);
    if (log_s == detail::kNegInf) {
      if (!options.rescue) {
        throw DegenerateInput("bidder " + std::to_string(i + 1) +
                              " faces no positive rival bid");
      }
      out[i] = options.floor_fraction * profile[i];
      rescued = true;
      continue;
    }
    out[i] = best_response(
        ResponseProblem::from_log_rival_sum(spec, profile[i], log_s));
  }
  return {BidVector(std::move(out)), rescued};
}

inline BidVector best_response_vector(const WeightSpec& spec,
                                      const ValuationProfile& profile,
                                      const BidVector& bids) {
  return best_response_vector(spec, profile, bids, ResponseOptions{}).bids;
}

inline double sup_distance(const BidVector& a, const BidVector& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
  }
  return d;
}

struct DynamicsOptions {
  int max_iters = 100;
  /// Stop once a step moves no bid by more than this; 0 runs every round.
  double tol = 0.0;
  /// A trace counts as converged when its fixed-point residual is below this.
  double convergence_tol = 1e-10;
  ResponseOptions response{.rescue = true, .floor_fraction = 1e-9};
};

struct DynamicsTrace {
  std::vector<BidVector> iterates;
  BidVector final;
  int iterations = 0;
  /// max_i |b_i - BR_i(b)| at the final bids.
  double residual = 0.0;
  bool converged = false;
  /// Some bidder faced an all-zero field and was given the floor bid.
  bool rescued = false;
};

inline constexpr double kDefaultStartBid = 0.5;

/// Synchronous best-response dynamics b^{k+1} = BR(b^k).
inline DynamicsTrace run_dynamics(const WeightSpec& spec,
                                  const ValuationProfile& profile,
                                  const BidVector& start,
                                  const DynamicsOptions& options = {}) {
  if (options.max_iters < 1) {
    throw ParameterError("dynamics need max_iters >= 1");
  }
  if (!(options.tol >= 0.0)) throw ParameterError("tol must be >= 0");
  require_within_values(profile, start);
  if (start.positive_count() < 2) {
    throw DegenerateInput("dynamics need at least two positive starting bids");
  }

  DynamicsTrace trace;
  trace.iterates.reserve(static_cast<std::size_t>(options.max_iters) + 1);
  trace.iterates.push_back(start);
  ResponseVector next =
      best_response_vector(spec, profile, start, options.response);
  for (int k = 0; k < options.max_iters; ++k) {
    trace.rescued = trace.rescued || next.rescued;
    const double step = sup_distance(next.bids, trace.iterates.back());
    trace.iterates.push_back(std::move(next.bids));
    trace.iterations = k + 1;
    next = best_response_vector(spec, profile, trace.iterates.back(),
                                options.response);
    if (step < options.tol) break;
  }
  trace.final = trace.iterates.back();
  trace.residual = sup_distance(trace.final, next.bids);
  trace.converged = trace.residual < options.convergence_tol;
  return trace;
}

inline DynamicsTrace run_dynamics(const WeightSpec& spec,
                                  const ValuationProfile& profile,
                                  const DynamicsOptions& options = {}) {
  return run_dynamics(spec, profile,
                      BidVector::uniform(profile.size(), kDefaultStartBid),
                      options);
}

}  // namespace qpa

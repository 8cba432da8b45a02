#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "qpa/auction.hpp"
#include "qpa/best_response.hpp"
#include "qpa/errors.hpp"
#include "qpa/weights.hpp"

namespace qpa {

inline constexpr double kFullAllocationTolerance = 1e-15;

/// 1 - a_i for every bidder, formed as (sum of rivals' weights) / total in
/// log space so it keeps full relative precision when a_i is close to 1.
inline std::vector<double> allocation_complements(const WeightSpec& spec,
                                                  const BidVector& bids) {
  if (bids.positive_count() == 0) {
    throw DegenerateInput("allocation undefined when every bid is zero");
  }
  const std::vector<double> logs = log_weights(spec, bids);
  const double log_total = detail::log_sum_exp(logs);
  std::vector<double> out(bids.size());
  for (std::size_t i = 0; i < bids.size(); ++i) {
    const double rivals = log_sum_excluding(logs, i);
    out[i] = rivals == detail::kNegInf ? 0.0 : std::exp(rivals - log_total);
  }
  return out;
}

/// Right-hand side of the first-order equilibrium condition for one bidder
/// with value v, bid b and allocation complement 1 - a.
///   exponential: v - (1/c)(1 - e^{-cb}) / (1 - a)
///   power:       v / (1 + (1/p) / (1 - a))
///   polynomial:  v - (f/f') / (1 - a)
inline double characterization_rhs(const WeightSpec& spec, double value,
                                   double bid, double complement) {
  return std::visit(
      detail::Overloaded{
          [&](const Exponential& e) {
            return value + std::expm1(-e.c * bid) / (e.c * complement);
          },
          [&](const Power& p) {
            return value / (1.0 + 1.0 / (p.p * complement));
          },
          [&](const Polynomial&) {
            return value - 1.0 / (weight_log_slope(spec, bid) * complement);
          }},
      spec.variant());
}

/// The family-independent form v - (f/f') / (1 - a).
inline double characterization_rhs_generic(const WeightSpec& spec, double value,
                                           double bid, double complement) {
  return value - 1.0 / (weight_log_slope(spec, bid) * complement);
}

namespace detail {

template <class Rhs>
std::vector<double> residual_with(const WeightSpec& spec,
                                  const ValuationProfile& profile,
                                  const BidVector& bids, Rhs rhs) {
  require_same_size(profile, bids);
  if (bids.positive_count() < 2) {
    throw DegenerateInput("characterization needs at least two positive bids");
  }
  const std::vector<double> complement = allocation_complements(spec, bids);
  std::vector<double> out(bids.size());
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (complement[i] <= kFullAllocationTolerance) {
      throw DegenerateInput("bidder " + std::to_string(i + 1) +
                            " holds the entire allocation");
    }
    if (bids[i] == 0.0) {
      // f/f' -> 0 as b -> 0 for every family, so the right-hand side is v.
      out[i] = -profile[i];
      continue;
    }
    out[i] = bids[i] - rhs(spec, profile[i], bids[i], complement[i]);
  }
  return out;
}

}  // namespace detail

/// b_i minus the right-hand side of the characterization for the spec's
/// family.  Zero exactly at bids satisfying the first-order condition.
inline std::vector<double> char_residual(const WeightSpec& spec,
                                         const ValuationProfile& profile,
                                         const BidVector& bids) {
  return detail::residual_with(spec, profile, bids,
                               [](const auto&... args) {
                                 return characterization_rhs(args...);
                               });
}

/// Same as char_residual but always through the generic f/f' form.
inline std::vector<double> char_residual_generic(const WeightSpec& spec,
                                                 const ValuationProfile& profile,
                                                 const BidVector& bids) {
  return detail::residual_with(spec, profile, bids,
                               [](const auto&... args) {
                                 return characterization_rhs_generic(args...);
                               });
}

/// Candidate lower bounds w for equilibrium bids.
struct BoundVector {
  std::vector<double> bounds;
  /// The bound inequality holds for every component at b = w.
  bool premise_ok = false;
  /// Fewer than two positive bounds, so allocations at w are undefined.
  bool degenerate = false;
  /// order[k] is the original index of the k-th largest value.
  std::vector<std::size_t> order;
};

inline const Exponential& require_exponential(const WeightSpec& spec) {
  const auto* e = std::get_if<Exponential>(&spec.variant());
  if (!e) throw ParameterError("bound premise is defined for exponential weights only");
  return *e;
}

/// Componentwise truth of w_i <= v_i - (1/c)(1 - e^{-c w_i}) / (1 - a_i(w)).
inline std::vector<bool> bound_premise(const WeightSpec& spec,
                                       const ValuationProfile& profile,
                                       std::span<const double> w) {
  require_exponential(spec);
  const BidVector at(std::vector<double>(w.begin(), w.end()));
  require_same_size(profile, at);
  if (at.positive_count() < 2) {
    throw DegenerateInput("bound premise needs at least two positive bounds");
  }
  const std::vector<double> complement = allocation_complements(spec, at);
  std::vector<bool> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    out[i] = w[i] <= characterization_rhs(spec, profile[i], w[i], complement[i]);
  }
  return out;
}

inline std::vector<bool> bound_premise(const WeightSpec& spec,
                                       const ValuationProfile& profile,
                                       const BoundVector& w) {
  return bound_premise(spec, profile, w.bounds);
}

/// Bounds from sorted values v_(1) >= v_(2) >= ...: the top bidder gets
/// v_(2) - 2/c, everyone else v_(i) - 2/c, clamped at 0.  Results are
/// reported in the caller's bidder order.
inline BoundVector corollary_bounds(const ValuationProfile& profile, double c) {
  const WeightSpec spec = WeightSpec::exponential(c);
  const std::size_t n = profile.size();
  BoundVector out;
  out.order.resize(n);
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return profile[a] > profile[b];
                   });
  out.bounds.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = profile[out.order[k == 0 ? 1 : k]];
    out.bounds[out.order[k]] = std::max(0.0, v - 2.0 / c);
  }
  std::size_t positive = 0;
  for (double w : out.bounds) positive += w > 0.0 ? 1 : 0;
  if (positive < 2) {
    out.degenerate = true;
    out.premise_ok = false;
    return out;
  }
  const std::vector<bool> ok = bound_premise(spec, profile, out.bounds);
  out.premise_ok = std::all_of(ok.begin(), ok.end(), [](bool b) { return b; });
  return out;
}

struct ProbeReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  /// min over samples and bidders of BR_i(b) - w_i; empty when samples = 0.
  std::optional<double> worst_margin;
  std::uint64_t seed = 0;
};

inline constexpr double kProbeMarginTolerance = 1e-9;

/// Engine for sample k of a probe; depends only on (seed, k).
inline std::mt19937_64 probe_engine(std::uint64_t seed, std::size_t k) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k),
                    static_cast<std::uint32_t>(std::uint64_t(k) >> 32)};
  return std::mt19937_64(seq);
}

/// Draws bid vectors uniformly from the box [w_1, v_1] x ... x [w_n, v_n] and
/// counts best-response components that land below their bound.
inline ProbeReport box_mapping_probe(const WeightSpec& spec,
                                     const ValuationProfile& profile,
                                     std::span<const double> w,
                                     std::size_t samples, std::uint64_t seed) {
  const std::vector<bool> premise = bound_premise(spec, profile, w);
  if (!std::all_of(premise.begin(), premise.end(), [](bool b) { return b; })) {
    throw ParameterError("box probe requires bounds satisfying the premise");
  }
  ProbeReport report;
  report.samples = samples;
  report.seed = seed;
  const ResponseOptions options{.rescue = true};
  for (std::size_t k = 0; k < samples; ++k) {
    std::mt19937_64 engine = probe_engine(seed, k);
    std::vector<double> draw(profile.size());
    for (std::size_t i = 0; i < draw.size(); ++i) {
      std::uniform_real_distribution<double> dist(w[i], profile[i]);
      draw[i] = dist(engine);
    }
    const BidVector response =
        best_response_vector(spec, profile, BidVector(std::move(draw)), options)
            .bids;
    for (std::size_t i = 0; i < response.size(); ++i) {
      const double margin = response[i] - w[i];
      if (margin < -kProbeMarginTolerance) ++report.violations;
      report.worst_margin =
          report.worst_margin ? std::min(*report.worst_margin, margin) : margin;
    }
  }
  return report;
}

inline ProbeReport box_mapping_probe(const WeightSpec& spec,
                                     const ValuationProfile& profile,
                                     const BoundVector& w, std::size_t samples,
                                     std::uint64_t seed) {
  if (!w.premise_ok) {
    throw ParameterError("box probe requires bounds with premise_ok set");
  }
  return box_mapping_probe(spec, profile, w.bounds, samples, seed);
}

}  // namespace qpa

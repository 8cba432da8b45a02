#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qpa/errors.hpp"
#include "qpa/weights.hpp"

namespace qpa {

/// Private values v_1..v_n, n >= 2, all positive.
class ValuationProfile {
 public:
  explicit ValuationProfile(std::vector<double> values)
      : values_(std::move(values)) {
    if (values_.size() < 2) {
      throw ParameterError("a valuation profile needs at least two bidders");
    }
    for (double v : values_) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ParameterError("private values must be finite and positive");
      }
    }
  }

  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

/// One nonnegative bid per bidder.
class BidVector {
 public:
  BidVector() = default;
  explicit BidVector(std::vector<double> bids) : bids_(std::move(bids)) {
    for (double b : bids_) {
      if (!(b >= 0.0) || !std::isfinite(b)) {
        throw ParameterError("bids must be finite and nonnegative");
      }
    }
  }

  /// (value, ..., value) of length n.
  static BidVector uniform(std::size_t n, double value) {
    return BidVector(std::vector<double>(n, value));
  }

  std::span<const double> bids() const { return bids_; }
  double operator[](std::size_t i) const { return bids_[i]; }
  std::size_t size() const { return bids_.size(); }

  std::size_t positive_count() const {
    std::size_t k = 0;
    for (double b : bids_) k += b > 0.0 ? 1 : 0;
    return k;
  }

  double max() const {
    double m = 0.0;
    for (double b : bids_) m = std::max(m, b);
    return m;
  }

  friend bool operator==(const BidVector&, const BidVector&) = default;

 private:
  std::vector<double> bids_;
};

struct AuctionOutcome {
  std::vector<double> allocations;
  std::vector<double> payments;
  std::vector<double> utilities;
  double revenue = 0.0;
};

inline void require_same_size(const ValuationProfile& profile,
                              const BidVector& bids) {
  if (profile.size() != bids.size()) {
    throw DimensionMismatch("bid vector has " + std::to_string(bids.size()) +
                            " entries but profile has " +
                            std::to_string(profile.size()));
  }
}

/// Requires 0 <= b_i <= v_i componentwise.
inline void require_within_values(const ValuationProfile& profile,
                                  const BidVector& bids) {
  require_same_size(profile, bids);
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (bids[i] > profile[i]) {
      throw ParameterError("bid " + std::to_string(i + 1) +
                           " exceeds the bidder's private value");
    }
  }
}

/// log f(b_i) for every bidder.
inline std::vector<double> log_weights(const WeightSpec& spec,
                                       const BidVector& bids) {
  std::vector<double> out(bids.size());
  for (std::size_t i = 0; i < bids.size(); ++i) {
    out[i] = log_weight(spec, bids[i]);
  }
  return out;
}

/// Shares f(b_i) / sum_j f(b_j), normalized by the largest weight in log
/// space for every family.
inline std::vector<double> allocate(const WeightSpec& spec,
                                    const BidVector& bids) {
  if (bids.positive_count() == 0) {
    throw DegenerateInput("allocation undefined when every bid is zero");
  }
  std::vector<double> shares = log_weights(spec, bids);
  double top = detail::kNegInf;
  for (double l : shares) top = std::max(top, l);
  for (double& l : shares) l = l == detail::kNegInf ? 0.0 : std::exp(l - top);
  // Summing in sorted order makes the result independent of bidder order,
  // so swapping two bids swaps their shares bit for bit.
  std::vector<double> sorted = shares;
  std::sort(sorted.begin(), sorted.end());
  const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  for (double& a : shares) a /= total;
  return shares;
}

/// Allocations, winners-pay payments b_i a_i, utilities (v_i - b_i) a_i.
inline AuctionOutcome settle(const WeightSpec& spec,
                             const ValuationProfile& profile,
                             const BidVector& bids) {
  require_same_size(profile, bids);
  AuctionOutcome out;
  out.allocations = allocate(spec, bids);
  const std::size_t n = bids.size();
  out.payments.resize(n);
  out.utilities.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.payments[i] = bids[i] * out.allocations[i];
    out.utilities[i] = (profile[i] - bids[i]) * out.allocations[i];
  }
  out.revenue = std::accumulate(out.payments.begin(), out.payments.end(), 0.0);
  return out;
}

}  // namespace qpa

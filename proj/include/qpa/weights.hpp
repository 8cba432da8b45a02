#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "qpa/errors.hpp"

namespace qpa {

/// f(x) = e^{cx} - 1
struct Exponential {
  double c;
};

/// f(x) = x^p
struct Power {
  double p;
};

/// f(x) = sum_k coeffs[k-1] * x^k, no constant term.
struct Polynomial {
  std::vector<double> coeffs;
};

enum class Family { exponential, power, polynomial };

inline constexpr std::size_t kMaxPolynomialDegree = 32;

/// c*x above which e^{cx} is never formed directly on allocation paths.
inline constexpr double kExpOverflowThreshold = 700.0;

/// A member of one of the three weight-function families.  Construct through
/// the named factories; they enforce positivity of the steepness parameter
/// (and nonnegative, non-trivial coefficients for polynomials), which makes
/// every constructible spec satisfy f(0) = 0 and strict monotonicity.
class WeightSpec {
 public:
  using Variant = std::variant<Exponential, Power, Polynomial>;

  static WeightSpec exponential(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw ParameterError("exponential weight requires finite c > 0");
    }
    return WeightSpec(Exponential{c});
  }

  static WeightSpec power(double p) {
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw ParameterError("power weight requires finite p > 0");
    }
    return WeightSpec(Power{p});
  }

  static WeightSpec polynomial(std::vector<double> coeffs) {
    if (coeffs.empty() || coeffs.size() > kMaxPolynomialDegree) {
      throw ParameterError("polynomial weight requires degree in [1, 32]");
    }
    bool any_positive = false;
    for (double ck : coeffs) {
      if (!(ck >= 0.0) || !std::isfinite(ck)) {
        throw ParameterError("polynomial coefficients must be finite and >= 0");
      }
      any_positive = any_positive || ck > 0.0;
    }
    if (!any_positive) {
      throw ParameterError("polynomial weight needs a positive coefficient");
    }
    return WeightSpec(Polynomial{std::move(coeffs)});
  }

  /// Exponential or power member with the given steepness.
  static WeightSpec of_family(Family family, double steepness) {
    switch (family) {
      case Family::exponential:
        return exponential(steepness);
      case Family::power:
        return power(steepness);
      case Family::polynomial:
        break;
    }
    throw ParameterError("polynomial family has no single steepness parameter");
  }

  const Variant& variant() const { return v_; }

  Family family() const {
    return static_cast<Family>(v_.index());
  }

  /// c or p; throws for polynomials.
  double steepness() const {
    if (const auto* e = std::get_if<Exponential>(&v_)) return e->c;
    if (const auto* p = std::get_if<Power>(&v_)) return p->p;
    throw ParameterError("polynomial weight has no steepness parameter");
  }

  friend bool operator==(const WeightSpec& a, const WeightSpec& b) {
    if (a.v_.index() != b.v_.index()) return false;
    return std::visit(
        [&](const auto& lhs) {
          using T = std::decay_t<decltype(lhs)>;
          const auto& rhs = std::get<T>(b.v_);
          if constexpr (std::is_same_v<T, Exponential>) return lhs.c == rhs.c;
          else if constexpr (std::is_same_v<T, Power>) return lhs.p == rhs.p;
          else return lhs.coeffs == rhs.coeffs;
        },
        a.v_);
  }

 private:
  explicit WeightSpec(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

inline void require_nonnegative(double x) {
  if (!(x >= 0.0)) throw DomainError("weight argument must be >= 0");
}

/// log sum_k exp(terms[k]); -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> terms) {
  double m = kNegInf;
  for (double t : terms) m = std::max(m, t);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - m);
  return m + std::log(acc);
}

/// log of sum_k scale(k) * c_k * x^(k - shift) over nonzero c_k, x > 0.
template <class Scale>
double polynomial_log_terms(const Polynomial& poly, double log_x, int shift,
                            Scale scale) {
  std::vector<double> terms;
  terms.reserve(poly.coeffs.size());
  for (std::size_t i = 0; i < poly.coeffs.size(); ++i) {
    const double ck = poly.coeffs[i];
    const int k = static_cast<int>(i) + 1;
    const double factor = scale(k);
    if (ck <= 0.0 || factor <= 0.0) continue;
    terms.push_back(std::log(ck * factor) + (k - shift) * log_x);
  }
  return log_sum_exp(terms);
}

}  // namespace detail

/// f(x).  Exponential values beyond double range come back as +inf; code that
/// forms allocations goes through log_weight() instead.
inline double weight_eval(const WeightSpec& spec, double x) {
  detail::require_nonnegative(x);
  if (x == 0.0) return 0.0;
  return std::visit(
      detail::Overloaded{
          [x](const Exponential& e) { return std::expm1(e.c * x); },
          [x](const Power& p) { return std::pow(x, p.p); },
          [x](const Polynomial& poly) {
            double acc = 0.0;
            for (auto it = poly.coeffs.rbegin(); it != poly.coeffs.rend(); ++it) {
              acc = acc * x + *it;
            }
            return acc * x;
          }},
      spec.variant());
}

/// Analytic f'(x) (order 1) or f''(x) (order 2).
inline double weight_deriv(const WeightSpec& spec, double x, int order) {
  detail::require_nonnegative(x);
  if (order != 1 && order != 2) {
    throw ParameterError("derivative order must be 1 or 2");
  }
  return std::visit(
      detail::Overloaded{
          [&](const Exponential& e) {
            return std::pow(e.c, order) * std::exp(e.c * x);
          },
          [&](const Power& p) {
            if (x == 0.0) {
              // x^(p - order) at 0: finite only when p >= order.
              if (p.p < order) {
                throw DomainError("power weight derivative undefined at 0");
              }
              if (order == 1) return p.p == 1.0 ? 1.0 : 0.0;
              return p.p == 2.0 ? 2.0 : 0.0;
            }
            const double lead = order == 1 ? p.p : p.p * (p.p - 1.0);
            return lead * std::pow(x, p.p - order);
          },
          [&](const Polynomial& poly) {
            double acc = 0.0;
            for (std::size_t i = poly.coeffs.size(); i-- > 0;) {
              const double k = static_cast<double>(i + 1);
              const double factor = order == 1 ? k : k * (k - 1.0);
              // Horner over the powers x^(k - order); terms with k < order vanish.
              if (static_cast<int>(i + 1) < order) continue;
              acc = acc * x + factor * poly.coeffs[i];
            }
            return acc;
          }},
      spec.variant());
}

/// log f(x); -inf at x = 0.  The exponential branch uses
/// log(e^{cx} - 1) = cx + log(1 - e^{-cx}), so it never overflows.
inline double log_weight(const WeightSpec& spec, double x) {
  detail::require_nonnegative(x);
  if (x == 0.0) return detail::kNegInf;
  return std::visit(
      detail::Overloaded{
          [x](const Exponential& e) {
            const double cx = e.c * x;
            return cx + std::log(-std::expm1(-cx));
          },
          [x](const Power& p) { return p.p * std::log(x); },
          [x](const Polynomial& poly) {
            return detail::polynomial_log_terms(poly, std::log(x), 0,
                                                [](int) { return 1.0; });
          }},
      spec.variant());
}

/// log f(x) - shift.
inline double log_weight_shifted(const WeightSpec& spec, double x,
                                 double shift) {
  return log_weight(spec, x) - shift;
}

/// f'(x) / f(x) for x > 0, evaluated without forming f or f'.
inline double weight_log_slope(const WeightSpec& spec, double x) {
  if (!(x > 0.0)) throw DomainError("log slope requires x > 0");
  return std::visit(
      detail::Overloaded{
          [x](const Exponential& e) { return e.c / -std::expm1(-e.c * x); },
          [x](const Power& p) { return p.p / x; },
          [x](const Polynomial& poly) {
            const double lx = std::log(x);
            const double num = detail::polynomial_log_terms(
                poly, lx, 1, [](int k) { return static_cast<double>(k); });
            const double den = detail::polynomial_log_terms(
                poly, lx, 0, [](int) { return 1.0; });
            return std::exp(num - den);
          }},
      spec.variant());
}

/// f(x) f''(x) / f'(x)^2 for x > 0; the single-peak condition on response
/// curves is that this stays below 2.
inline double curvature_ratio(const WeightSpec& spec, double x) {
  if (!(x > 0.0)) throw DomainError("curvature ratio requires x > 0");
  return std::visit(
      detail::Overloaded{
          [x](const Exponential& e) { return -std::expm1(-e.c * x); },
          [](const Power& p) { return (p.p - 1.0) / p.p; },
          [x](const Polynomial& poly) {
            const double lx = std::log(x);
            const double lf = detail::polynomial_log_terms(
                poly, lx, 0, [](int) { return 1.0; });
            const double lf1 = detail::polynomial_log_terms(
                poly, lx, 1, [](int k) { return static_cast<double>(k); });
            const double lf2 = detail::polynomial_log_terms(
                poly, lx, 2, [](int k) { return k * (k - 1.0); });
            if (lf2 == detail::kNegInf) return 0.0;
            return std::exp(lf + lf2 - 2.0 * lf1);
          }},
      spec.variant());
}

// ---------------------------------------------------------------------------
// Textual form: exp:c=<float>, pow:p=<float>, poly:c1=<f>,c2=<f>,...

inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

inline std::string_view family_tag(Family family) {
  switch (family) {
    case Family::exponential:
      return "exp";
    case Family::power:
      return "pow";
    case Family::polynomial:
      return "poly";
  }
  return "?";
}

inline Family parse_family(std::string_view tag) {
  if (tag == "exp") return Family::exponential;
  if (tag == "pow") return Family::power;
  if (tag == "poly") return Family::polynomial;
  throw ParameterError("unknown weight family '" + std::string(tag) + "'");
}

inline std::string to_string(const WeightSpec& spec) {
  return std::visit(
      detail::Overloaded{
          [](const Exponential& e) { return "exp:c=" + format_double(e.c); },
          [](const Power& p) { return "pow:p=" + format_double(p.p); },
          [](const Polynomial& poly) {
            std::string out = "poly:";
            for (std::size_t i = 0; i < poly.coeffs.size(); ++i) {
              if (i) out += ',';
              out += 'c' + std::to_string(i + 1) + '=' +
                     format_double(poly.coeffs[i]);
            }
            return out;
          }},
      spec.variant());
}

namespace detail {

inline double parse_number(std::string_view text, std::string_view what) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw ParameterError("malformed number '" + std::string(text) + "' for " +
                         std::string(what));
  }
  return value;
}

}  // namespace detail

inline WeightSpec parse_weight(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ParameterError("weight spec must look like exp:c=<x>, pow:p=<x> or "
                         "poly:c1=<x>,...; got '" + std::string(text) + "'");
  }
  const Family family = parse_family(text.substr(0, colon));
  std::string_view body = text.substr(colon + 1);

  if (family != Family::polynomial) {
    const std::string_view key = family == Family::exponential ? "c=" : "p=";
    if (body.substr(0, 2) != key) {
      throw ParameterError("expected '" + std::string(key) + "' in '" +
                           std::string(text) + "'");
    }
    return WeightSpec::of_family(family,
                                 detail::parse_number(body.substr(2), key));
  }

  std::vector<double> coeffs;
  while (!body.empty()) {
    const auto comma = body.find(',');
    const std::string_view item = body.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || item.empty() || item[0] != 'c') {
      throw ParameterError("malformed polynomial term '" + std::string(item) + "'");
    }
    const double index = detail::parse_number(item.substr(1, eq - 1), "degree");
    const auto degree = static_cast<std::size_t>(index);
    if (index != static_cast<double>(degree) || degree < 1 ||
        degree > kMaxPolynomialDegree) {
      throw ParameterError("polynomial degree out of range in '" +
                           std::string(item) + "'");
    }
    if (coeffs.size() < degree) coeffs.resize(degree, 0.0);
    coeffs[degree - 1] = detail::parse_number(item.substr(eq + 1), item);
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return WeightSpec::polynomial(std::move(coeffs));
}

}  // namespace qpa

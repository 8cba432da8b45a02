#pragma once

// Command-line front end.  Kept header-only so tests can drive parse_args()
// and execute() without spawning processes.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qpa/auction.hpp"
#include "qpa/best_response.hpp"
#include "qpa/csv.hpp"
#include "qpa/equilibrium.hpp"
#include "qpa/errors.hpp"
#include "qpa/experiments.hpp"
#include "qpa/weights.hpp"

namespace qpa::cli {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// --help was given; holds the rendered help text.
struct HelpRequested {
  std::string text;
};

enum class Verb { run, dynamics, sweep, bounds, verify };

struct GridFlag {
  double lo = 0.05;
  double hi = 500.0;
  int count = 60;

  std::vector<double> points() const { return log_space(lo, hi, count); }
};

struct RunConfig {
  Verb verb = Verb::run;
  std::optional<WeightSpec> weight;
  std::vector<double> values;  // resolved profile
  std::vector<double> bids;
  int n = 2;
  int iters = 100;
  double start = kDefaultStartBid;
  double tol = 0.0;
  std::vector<Family> families{Family::exponential, Family::power};
  std::vector<double> alphas = alpha_grid();
  GridFlag c_grid;
  GridFlag p_grid;
  int refine = kDefaultRefinementRounds;
  std::optional<double> c;
  std::vector<double> bounds;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  std::string output_path;  // empty: stdout
};

namespace detail {

inline GridFlag parse_grid(const std::string& text, const std::string& flag) {
  const auto parts = qpa::detail::split(text, ':');
  if (parts.size() != 3) {
    throw UsageError(flag + " expects lo:hi:count, got '" + text + "'");
  }
  GridFlag g;
  try {
    g.lo = qpa::detail::parse_number(parts[0], flag);
    g.hi = qpa::detail::parse_number(parts[1], flag);
    const double count = qpa::detail::parse_number(parts[2], flag);
    g.count = static_cast<int>(count);
    if (g.count != count) throw ParameterError("count must be an integer");
    (void)g.points();
  } catch (const std::exception& e) {
    throw UsageError(flag + ": " + e.what());
  }
  return g;
}

inline void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

}  // namespace detail

/// Parses and validates argv (argv[0] is the program name).
inline RunConfig parse_args(int argc, const char* const* argv) {
  CLI::App app{"Quasi-proportional auction equilibria and revenue sweeps",
               "qpa"};
  app.require_subcommand(1, 1);

  std::string weight_text;
  std::vector<double> values;
  std::vector<double> bids;
  std::vector<double> alphas;
  std::vector<double> extra_alphas;
  std::vector<std::string> families;
  std::string c_grid;
  std::string p_grid;
  RunConfig cfg;
  double alpha = 1.0;
  double c = 0.0;

  auto add_output = [&](CLI::App* sub) {
    sub->add_option("-o,--output", cfg.output_path,
                    "Output file (default: stdout)");
  };
  auto add_profile = [&](CLI::App* sub) {
    sub->add_option("--n", cfg.n, "Bidder count for the (alpha, 1, ..., 1) profile");
    sub->add_option("--alpha", alpha, "Value of bidder 1; the others have value 1");
    sub->add_option("--values", values, "Explicit private values")->delimiter(',');
  };

  auto* run = app.add_subcommand("run", "Settle one auction at given bids");
  run->add_option("--weight", weight_text, "exp:c=<x> | pow:p=<x> | poly:c1=<x>,...")
      ->required();
  add_profile(run);
  run->add_option("--bids", bids, "Bids, one per bidder")->delimiter(',')->required();
  add_output(run);

  auto* dyn = app.add_subcommand("dynamics", "Run best-response dynamics");
  dyn->add_option("--weight", weight_text, "exp:c=<x> | pow:p=<x> | poly:c1=<x>,...")
      ->required();
  add_profile(dyn);
  dyn->add_option("--iters", cfg.iters, "Best-response rounds");
  dyn->add_option("--start", cfg.start, "Common starting bid");
  dyn->add_option("--tol", cfg.tol, "Stop once a round moves no bid by more than this");
  add_output(dyn);

  auto* sweep = app.add_subcommand("sweep", "Revenue-maximizing steepness sweep");
  sweep->add_option("--n", cfg.n, "Bidder count");
  sweep->add_option("--families", families, "exp,pow")->delimiter(',');
  sweep->add_option("--alphas", alphas, "Replace the default alpha grid")->delimiter(',');
  sweep->add_option("--extra-alphas", extra_alphas, "Append to the alpha grid")
      ->delimiter(',');
  sweep->add_option("--c-grid", c_grid, "Exponential grid lo:hi:count (log-spaced)");
  sweep->add_option("--p-grid", p_grid, "Power grid lo:hi:count (log-spaced)");
  sweep->add_option("--refine", cfg.refine, "Local refinement rounds");
  sweep->add_option("--iters", cfg.iters, "Best-response rounds per point");
  sweep->add_option("--start", cfg.start, "Common starting bid");
  add_output(sweep);

  auto* bounds = app.add_subcommand("bounds", "Corollary lower bounds for exponential weights");
  add_profile(bounds);
  bounds->add_option("--c", c, "Exponential steepness")->required();
  add_output(bounds);

  auto* verify = app.add_subcommand("verify", "Sample the bound box and check BR maps into it");
  add_profile(verify);
  verify->add_option("--c", c, "Exponential steepness")->required();
  verify->add_option("--bounds", cfg.bounds, "Explicit bounds (default: corollary)")
      ->delimiter(',');
  verify->add_option("--samples", cfg.samples, "Number of sampled bid vectors");
  verify->add_option("--seed", cfg.seed, "Sampling seed");
  add_output(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (run->parsed()) cfg.verb = Verb::run;
  if (dyn->parsed()) cfg.verb = Verb::dynamics;
  if (sweep->parsed()) cfg.verb = Verb::sweep;
  if (bounds->parsed()) cfg.verb = Verb::bounds;
  if (verify->parsed()) cfg.verb = Verb::verify;

  if (!weight_text.empty()) {
    try {
      cfg.weight = parse_weight(weight_text);
    } catch (const std::exception& e) {
      throw UsageError(std::string("--weight: ") + e.what());
    }
  }

  detail::require(cfg.n >= 2, "--n must be at least 2");
  if (cfg.verb != Verb::sweep) {
    try {
      const ValuationProfile profile =
          values.empty() ? make_scenario(cfg.n, alpha) : ValuationProfile(values);
      cfg.values.assign(profile.values().begin(), profile.values().end());
    } catch (const std::exception& e) {
      throw UsageError(std::string(values.empty() ? "--alpha: " : "--values: ") +
                       e.what());
    }
  }

  switch (cfg.verb) {
    case Verb::run:
      detail::require(bids.size() == cfg.values.size(),
                      "--bids must have one entry per bidder");
      for (double b : bids) detail::require(b >= 0.0, "--bids must be nonnegative");
      cfg.bids = bids;
      break;
    case Verb::dynamics: {
      detail::require(cfg.iters >= 1, "--iters must be at least 1");
      detail::require(cfg.tol >= 0.0, "--tol must be nonnegative");
      double vmin = cfg.values[0];
      for (double v : cfg.values) vmin = std::min(vmin, v);
      detail::require(cfg.start > 0.0 && cfg.start <= vmin,
                      "--start must lie in (0, min value]");
      break;
    }
    case Verb::sweep:
      detail::require(cfg.iters >= 0, "--iters must be nonnegative");
      detail::require(cfg.start > 0.0 && cfg.start <= 1.0,
                      "--start must lie in (0, 1]");
      detail::require(cfg.refine >= 0, "--refine must be nonnegative");
      if (!families.empty()) {
        cfg.families.clear();
        for (const auto& f : families) {
          Family fam{};
          try {
            fam = parse_family(f);
          } catch (const std::exception& e) {
            throw UsageError(std::string("--families: ") + e.what());
          }
          detail::require(fam != Family::polynomial,
                          "--families: polynomial weights are not swept");
          cfg.families.push_back(fam);
        }
      }
      if (!alphas.empty()) cfg.alphas = alphas;
      cfg.alphas.insert(cfg.alphas.end(), extra_alphas.begin(), extra_alphas.end());
      for (double a : cfg.alphas) detail::require(a >= 1.0, "--alphas must be >= 1");
      if (!c_grid.empty()) cfg.c_grid = detail::parse_grid(c_grid, "--c-grid");
      if (!p_grid.empty()) cfg.p_grid = detail::parse_grid(p_grid, "--p-grid");
      break;
    case Verb::bounds:
    case Verb::verify:
      detail::require(c > 0.0, "--c must be positive");
      cfg.c = c;
      cfg.weight = WeightSpec::exponential(c);
      if (!cfg.bounds.empty()) {
        detail::require(cfg.bounds.size() == cfg.values.size(),
                        "--bounds must have one entry per bidder");
      }
      break;
  }
  return cfg;
}

inline RunConfig parse_args(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"qpa"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_args(static_cast<int>(argv.size()), argv.data());
}

namespace detail {

inline std::string join_indices(const std::vector<std::size_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i] + 1);
  }
  return out;
}

inline std::string join_bools(const std::vector<bool>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += xs[i] ? '1' : '0';
  }
  return out;
}

template <class Writer>
void emit(const RunConfig& cfg, std::ostream& out, Writer writer) {
  if (cfg.output_path.empty()) {
    writer(out);
  } else {
    write_file(cfg.output_path, writer);
  }
}

}  // namespace detail

/// Runs a parsed configuration.  Returns the process exit status: 0 on
/// success, 1 when verify finds violations.
inline int execute(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  switch (cfg.verb) {
    case Verb::run: {
      const ValuationProfile profile(cfg.values);
      const AuctionOutcome o = settle(*cfg.weight, profile, BidVector(cfg.bids));
      detail::emit(cfg, out, [&](std::ostream& os) {
        write_record(os, {{"weight", to_string(*cfg.weight)},
                          {"allocations", join(o.allocations)},
                          {"payments", join(o.payments)},
                          {"utilities", join(o.utilities)},
                          {"revenue", fmt12(o.revenue)}});
      });
      return 0;
    }
    case Verb::dynamics: {
      const ValuationProfile profile(cfg.values);
      DynamicsOptions opts;
      opts.max_iters = cfg.iters;
      opts.tol = cfg.tol;
      const DynamicsTrace trace = run_dynamics(
          *cfg.weight, profile, BidVector::uniform(profile.size(), cfg.start), opts);
      detail::emit(cfg, out, [&](std::ostream& os) {
        write_dynamics_csv(os, *cfg.weight, profile, trace);
      });
      log << "iterations=" << trace.iterations << " residual=" << fmt12(trace.residual)
          << " converged=" << (trace.converged ? 1 : 0)
          << (trace.rescued ? " rescued=1" : "") << '\n';
      return 0;
    }
    case Verb::sweep: {
      ExperimentConfig ec;
      ec.n = cfg.n;
      ec.alphas = cfg.alphas;
      ec.families = cfg.families;
      ec.exp_grid = cfg.c_grid.points();
      ec.pow_grid = cfg.p_grid.points();
      ec.iters = cfg.iters;
      ec.start_bid = cfg.start;
      ec.refinement_rounds = cfg.refine;
      const ExperimentResult result = run_full_experiment(ec);
      detail::emit(cfg, out,
                   [&](std::ostream& os) { write_sweep_csv(os, result.rows); });
      for (const auto& x : result.summary.revenue_crossovers) {
        log << "revenue crossover in [" << fmt12(x.alpha_lo) << ", "
            << fmt12(x.alpha_hi) << "]\n";
      }
      for (const auto& x : result.summary.bid_gap_crossovers) {
        log << "bid-gap crossover in [" << fmt12(x.alpha_lo) << ", "
            << fmt12(x.alpha_hi) << "]\n";
      }
      std::size_t boundary = 0;
      for (const auto& r : result.rows) boundary += r.boundary_flag ? 1 : 0;
      if (boundary) log << boundary << " row(s) maximized on a grid boundary\n";
      return 0;
    }
    case Verb::bounds: {
      const ValuationProfile profile(cfg.values);
      const BoundVector w = corollary_bounds(profile, *cfg.c);
      Record rec{{"c", fmt12(*cfg.c)},
                 {"bounds", join(w.bounds)},
                 {"order", detail::join_indices(w.order)},
                 {"premise_ok", w.premise_ok ? "1" : "0"},
                 {"degenerate", w.degenerate ? "1" : "0"}};
      if (!w.degenerate) {
        rec.emplace_back("premise",
                         detail::join_bools(bound_premise(*cfg.weight, profile, w)));
      }
      detail::emit(cfg, out, [&](std::ostream& os) { write_record(os, rec); });
      return 0;
    }
    case Verb::verify: {
      const ValuationProfile profile(cfg.values);
      std::vector<double> w = cfg.bounds;
      if (w.empty()) {
        const BoundVector cb = corollary_bounds(profile, *cfg.c);
        if (!cb.premise_ok) {
          throw ParameterError(cb.degenerate
                                   ? "corollary bounds are degenerate for this c"
                                   : "corollary bounds fail the premise");
        }
        w = cb.bounds;
      }
      const ProbeReport r = box_mapping_probe(*cfg.weight, profile, w, cfg.samples, cfg.seed);
      detail::emit(cfg, out, [&](std::ostream& os) {
        write_record(os, {{"c", fmt12(*cfg.c)},
                          {"bounds", join(w)},
                          {"samples", std::to_string(r.samples)},
                          {"seed", std::to_string(r.seed)},
                          {"violations", std::to_string(r.violations)},
                          {"worst_margin",
                           r.worst_margin ? fmt12(*r.worst_margin) : "undefined"}});
      });
      return r.violations == 0 ? 0 : 1;
    }
  }
  return 2;
}

/// Process entry: parse, execute, map errors to exit codes (2 usage, 3 runtime).
inline int main_entry(int argc, const char* const* argv, std::ostream& out,
                      std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_args(argc, argv);
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  try {
    return execute(cfg, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace qpa::cli

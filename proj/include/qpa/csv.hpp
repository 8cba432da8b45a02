#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qpa/auction.hpp"
#include "qpa/best_response.hpp"
#include "qpa/errors.hpp"
#include "qpa/experiments.hpp"
#include "qpa/weights.hpp"

namespace qpa {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kSweepHeader =
    "alpha,family,best_steepness,revenue,high_alloc,high_bid,low_bid,residual,"
    "boundary_flag";

/// 12 significant digits.
inline std::string fmt12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline void write_sweep_csv(std::ostream& out, std::vector<SweepRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), row_order);
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << fmt12(r.alpha) << ',' << family_tag(r.family) << ','
        << fmt12(r.best_steepness) << ',' << fmt12(r.revenue) << ','
        << fmt12(r.high_alloc) << ',' << fmt12(r.high_bid) << ','
        << fmt12(r.low_bid) << ',' << fmt12(r.residual) << ','
        << (r.boundary_flag ? 1 : 0) << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline void finish_write(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace detail

/// Inverse of write_sweep_csv up to the 12-digit rendering.  Only the CSV
/// columns are restored; bids and evaluated points stay empty.
inline std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSweepHeader) {
    throw IoError("sweep CSV header mismatch");
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != 9) throw IoError("sweep CSV row has wrong arity: " + line);
    SweepRow r;
    r.alpha = detail::parse_number(cells[0], "alpha");
    r.family = parse_family(cells[1]);
    r.best_steepness = detail::parse_number(cells[2], "best_steepness");
    r.revenue = detail::parse_number(cells[3], "revenue");
    r.high_alloc = detail::parse_number(cells[4], "high_alloc");
    r.high_bid = detail::parse_number(cells[5], "high_bid");
    r.low_bid = detail::parse_number(cells[6], "low_bid");
    r.residual = detail::parse_number(cells[7], "residual");
    if (cells[8] != "0" && cells[8] != "1") {
      throw IoError("boundary_flag must be 0 or 1");
    }
    r.boundary_flag = cells[8] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

/// iter,b_1,...,b_n,revenue,residual.  The residual on row k is
/// max_i |b_i^k - BR_i(b^k)|.
inline void write_dynamics_csv(std::ostream& out, const WeightSpec& spec,
                               const ValuationProfile& profile,
                               const DynamicsTrace& trace) {
  out << "iter";
  for (std::size_t i = 1; i <= profile.size(); ++i) out << ",b_" << i;
  out << ",revenue,residual\n";
  for (std::size_t k = 0; k < trace.iterates.size(); ++k) {
    const BidVector& b = trace.iterates[k];
    const double residual = k + 1 < trace.iterates.size()
                                ? sup_distance(b, trace.iterates[k + 1])
                                : trace.residual;
    out << k;
    for (double x : b.bids()) out << ',' << fmt12(x);
    out << ',' << fmt12(settle(spec, profile, b).revenue) << ','
        << fmt12(residual) << '\n';
  }
}

using Record = std::vector<std::pair<std::string, std::string>>;

/// One key=value pair per line.
inline void write_record(std::ostream& out, const Record& record) {
  for (const auto& [key, value] : record) out << key << '=' << value << '\n';
}

inline std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt12(xs[i]);
  }
  return out;
}

template <class Writer>
void write_file(const std::string& path, Writer writer) {
  auto out = detail::open_for_write(path);
  writer(out);
  detail::finish_write(out, path);
}

}  // namespace qpa

#include "chantseg/analysis.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>

#include <Eigen/Core>

#include "chantseg/errors.hpp"

namespace chantseg {

namespace {

using ModeCounts = std::array<std::int64_t, kModes>;

void check(std::span<const SegmentedChant> chants, int bins) {
  if (chants.empty()) throw EmptyInput("no segmented chants");
  if (bins < 1) throw Error("bin count must be positive");
  for (const auto& c : chants)
    if (static_cast<std::size_t>(c.segmentation.total_length()) != c.tones.size())
      throw Error("segmentation does not cover the chant");
}

PositionalCurve make_curve(CurveKind kind, int bins) {
  PositionalCurve curve;
  curve.kind = kind;
  curve.bins.resize(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) curve.bins[static_cast<std::size_t>(b)].center = (b + 0.5) / bins;
  return curve;
}

void finish(PositionalCurve& curve, const std::vector<double>& sums) {
  for (std::size_t b = 0; b < curve.bins.size(); ++b)
    curve.bins[b].mean = curve.bins[b].count ? sums[b] / static_cast<double>(curve.bins[b].count)
                                             : std::numeric_limits<double>::quiet_NaN();
}

// Walks every tone, handing the value of its segment to the tone's bin.
template <class SegmentValue>
PositionalCurve accumulate(CurveKind kind, std::span<const SegmentedChant> chants, int bins,
                           SegmentValue value) {
  PositionalCurve curve = make_curve(kind, bins);
  std::vector<double> sums(static_cast<std::size_t>(bins), 0.0);
  for (const auto& c : chants) {
    const std::size_t n = c.tones.size();
    std::size_t at = 0;
    for (int len : c.segmentation.lengths) {
      const double v = value(c, at, static_cast<std::size_t>(len));
      for (std::size_t i = at; i < at + static_cast<std::size_t>(len); ++i) {
        const auto b = static_cast<std::size_t>(position_bin(i, n, bins));
        sums[b] += v;
        ++curve.bins[b].count;
      }
      at += static_cast<std::size_t>(len);
    }
  }
  finish(curve, sums);
  return curve;
}

}  // namespace

std::string_view to_string(CurveKind k) {
  return k == CurveKind::segment_length ? "segment_length" : "modal_uniqueness";
}

std::int64_t PositionalCurve::total_count() const {
  std::int64_t n = 0;
  for (const auto& b : bins) n += b.count;
  return n;
}

double PositionalCurve::mean_between(double lo, double hi) const {
  double s = 0;
  std::int64_t n = 0;
  for (const auto& b : bins) {
    if (b.center < lo || b.center >= hi || b.count == 0) continue;
    s += b.mean * static_cast<double>(b.count);
    n += b.count;
  }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

int position_bin(std::size_t i, std::size_t n, int bins) {
  const double pos = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
  return std::min(bins - 1, static_cast<int>(std::floor(pos * bins)));
}

PositionalCurve positional_segment_length(std::span<const SegmentedChant> chants, int bins) {
  check(chants, bins);
  return accumulate(CurveKind::segment_length, chants, bins,
                    [](const SegmentedChant&, std::size_t, std::size_t len) { return static_cast<double>(len); });
}

double uniqueness_of(std::span<const std::int64_t> mode_counts, Uniqueness metric) {
  std::int64_t total = 0, top = 0;
  for (auto c : mode_counts) {
    total += c;
    top = std::max(top, c);
  }
  if (total == 0) throw EmptyInput("segment type never observed");
  if (metric == Uniqueness::max_fraction) return static_cast<double>(top) / static_cast<double>(total);
  double h = 0;
  for (auto c : mode_counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return std::exp(-h);
}

PositionalCurve modal_uniqueness(std::span<const SegmentedChant> chants, int bins, Uniqueness metric) {
  check(chants, bins);
  std::map<std::vector<int>, ModeCounts> counts;
  auto type_of = [](const SegmentedChant& c, std::size_t at, std::size_t len) {
    return std::vector<int>(c.tones.begin() + static_cast<std::ptrdiff_t>(at),
                            c.tones.begin() + static_cast<std::ptrdiff_t>(at + len));
  };
  for (const auto& c : chants) {
    if (c.mode < 1 || c.mode > kModes) throw Error("mode outside 1..8");
    std::size_t at = 0;
    for (int len : c.segmentation.lengths) {
      auto [it, fresh] = counts.try_emplace(type_of(c, at, static_cast<std::size_t>(len)));
      if (fresh) it->second.fill(0);
      ++it->second[static_cast<std::size_t>(c.mode - 1)];
      at += static_cast<std::size_t>(len);
    }
  }
  std::map<std::vector<int>, double> score;
  for (const auto& [type, mc] : counts) score[type] = uniqueness_of(mc, metric);
  return accumulate(CurveKind::modal_uniqueness, chants, bins,
                    [&](const SegmentedChant& c, std::size_t at, std::size_t len) {
                      return score.at(type_of(c, at, len));
                    });
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("paired series differ in length");
  if (x.size() < 3) throw Error("need at least 3 pairs");
  const auto n = static_cast<Eigen::Index>(x.size());
  const Eigen::Map<const Eigen::ArrayXd> a(x.data(), n), b(y.data(), n);
  const Eigen::ArrayXd da = a - a.mean(), db = b - b.mean();
  const double va = da.square().sum(), vb = db.square().sum();
  if (va <= 1e-24 * a.square().sum() || vb <= 1e-24 * b.square().sum()) throw ZeroVariance();
  return (da * db).sum() / std::sqrt(va * vb);
}

void write_curve_csv(std::ostream& out, const PositionalCurve& curve, bool header) {
  if (header) out << "kind,bin_center,mean,count\n";
  const auto flags = out.flags();
  out << std::setprecision(10);
  for (const auto& b : curve.bins) {
    out << to_string(curve.kind) << ',' << b.center << ',';
    if (b.count) out << b.mean;
    out << ',' << b.count << '\n';
  }
  out.flags(flags);
}

}  // namespace chantseg

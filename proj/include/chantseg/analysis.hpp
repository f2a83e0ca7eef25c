#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "chantseg/segment.hpp"

namespace chantseg {

enum class CurveKind { segment_length, modal_uniqueness };
std::string_view to_string(CurveKind k);

struct CurveBin {
  double center = 0;
  double mean = 0;  // NaN when the bin is empty
  std::int64_t count = 0;
};

struct PositionalCurve {
  CurveKind kind = CurveKind::segment_length;
  std::vector<CurveBin> bins;

  std::int64_t total_count() const;
  // Count-weighted mean over bins whose centers fall in [lo, hi).
  double mean_between(double lo, double hi) const;
};

struct SegmentedChant {
  std::vector<int> tones;
  Segmentation segmentation;
  int mode = 1;
};

inline constexpr int kDefaultBins = 50;
inline constexpr int kModes = 8;

// Relative position i/(n-1) (0 for a single tone); bin floor(pos*B),
// clamped to B-1.
int position_bin(std::size_t i, std::size_t n, int bins);

PositionalCurve positional_segment_length(std::span<const SegmentedChant> chants, int bins = kDefaultBins);

enum class Uniqueness {
  max_fraction,    // max_m count(s, m) / count(s)
  inverse_perplexity,  // exp(-H(mode | s)), also in [1/8, 1]
};

// Uniqueness of each segment type, counted over `chants`, contributed by
// every tone of the segment to its position bin.
PositionalCurve modal_uniqueness(std::span<const SegmentedChant> chants, int bins = kDefaultBins,
                                 Uniqueness metric = Uniqueness::max_fraction);

double uniqueness_of(std::span<const std::int64_t> mode_counts, Uniqueness metric);

double pearson(std::span<const double> x, std::span<const double> y);

void write_curve_csv(std::ostream& out, const PositionalCurve& curve, bool header = true);

}  // namespace chantseg

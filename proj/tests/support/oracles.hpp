#pragma once

// Brute-force references used by unit and acceptance tests.

#include <cmath>
#include <functional>
#include <vector>

#include "chantseg/nhpylm.hpp"
#include "chantseg/segment.hpp"

namespace oracle {

using chantseg::Segmentation;
using chantseg::ToneId;

inline void enumerate_segmentations(int n, int max_len,
                                    const std::function<void(const Segmentation&)>& f) {
  Segmentation cur;
  std::function<void(int)> rec = [&](int left) {
    if (left == 0) {
      f(cur);
      return;
    }
    for (int k = 1; k <= max_len && k <= left; ++k) {
      cur.lengths.push_back(k);
      rec(left - k);
      cur.lengths.pop_back();
    }
  };
  rec(n);
}

inline std::vector<Segmentation> all_segmentations(int n, int max_len) {
  std::vector<Segmentation> out;
  enumerate_segmentations(n, max_len, [&](const Segmentation& s) { out.push_back(s); });
  return out;
}

// Every tone string of length n over an alphabet of size a.
inline std::vector<std::vector<ToneId>> all_strings(int n, int a) {
  std::vector<std::vector<ToneId>> out{{}};
  for (int i = 0; i < n; ++i) {
    std::vector<std::vector<ToneId>> next;
    for (const auto& s : out)
      for (ToneId t = 0; t < a; ++t) {
        auto e = s;
        e.push_back(t);
        next.push_back(std::move(e));
      }
    out = std::move(next);
  }
  return out;
}

inline double log_prob(const chantseg::NhpylmModel& m, const std::vector<ToneId>& tones,
                       const Segmentation& seg) {
  return m.segmentation_log_prob(chantseg::segment_keys(tones, seg));
}

inline double total_mass(const chantseg::NhpylmModel& m, const std::vector<ToneId>& tones) {
  double z = 0.0;
  enumerate_segmentations(static_cast<int>(tones.size()), m.max_segment_length(),
                          [&](const Segmentation& s) { z += std::exp(log_prob(m, tones, s)); });
  return z;
}

// Argmax with the decoder's tie rule: near-equal scores prefer fewer
// segments, then the lexicographically smaller cut list.
inline Segmentation argmax(const chantseg::NhpylmModel& m, const std::vector<ToneId>& tones) {
  Segmentation best;
  double best_lp = -INFINITY;
  bool have = false;
  enumerate_segmentations(static_cast<int>(tones.size()), m.max_segment_length(),
                          [&](const Segmentation& s) {
                            const double lp = log_prob(m, tones, s);
                            bool take = !have;
                            if (have) {
                              const double tol =
                                  1e-11 * std::max(1.0, std::max(std::abs(lp), std::abs(best_lp)));
                              if (std::abs(lp - best_lp) > tol) take = lp > best_lp;
                              else if (s.size() != best.size()) take = s.size() < best.size();
                              else take = s.cuts() < best.cuts();
                            }
                            if (take) {
                              best = s;
                              best_lp = lp;
                              have = true;
                            }
                          });
  return best;
}

}  // namespace oracle

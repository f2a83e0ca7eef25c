#include "chantseg/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chantseg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

bool near(double a, double b) {
  return std::abs(a - b) <= 1e-11 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

SegmentLattice::SegmentLattice(const NhpylmModel& model, std::span<const ToneId> tones)
    : n_(static_cast<int>(tones.size())), max_len_(model.max_segment_length()) {
  if (n_ == 0) throw EmptyMelody("cannot segment an empty chant");
  const int L = max_len_;
  const int n = n_;

  // Unigram-level probability of every candidate segment.
  std::vector<SegmentKey> keys(static_cast<std::size_t>(n) * (L + 1), 0);
  std::vector<double> uni(keys.size(), 0.0);
  auto at = [L](int start, int k) { return static_cast<std::size_t>(start) * (L + 1) + k; };
  for (int s = 0; s < n; ++s) {
    for (int k = 1; k <= L && s + k <= n; ++k) {
      const SegmentKey key = pack_segment(tones.subspan(static_cast<std::size_t>(s), k));
      keys[at(s, k)] = key;
      uni[at(s, k)] = model.unigram_prob(key, model.base_measure(key));
    }
  }

  trans_.assign(static_cast<std::size_t>(n + 1) * (L + 1) * (L + 1), kNegInf);
  for (int t = 1; t <= n; ++t) {
    for (int k = 1; k <= L && k <= t; ++k) {
      const int start = t - k;
      const SegmentKey key = keys[at(start, k)];
      const double u = uni[at(start, k)];
      if (start == 0) {
        trans(t, k, 0) = std::log(model.bigram_prob(key, kBeginOfMelody, u));
        continue;
      }
      for (int j = 1; j <= L && j <= start; ++j)
        trans(t, k, j) = std::log(model.bigram_prob(key, keys[at(start - j, j)], u));
    }
  }

  eom_ = Eigen::ArrayXd::Constant(L + 1, kNegInf);
  const double eom_uni = model.unigram_prob(kEndOfMelody, model.base_measure(kEndOfMelody));
  for (int k = 1; k <= L && k <= n; ++k)
    eom_(k) = std::log(model.bigram_prob(kEndOfMelody, keys[at(n - k, k)], eom_uni));

  alpha_ = Eigen::ArrayXXd::Constant(n + 1, L + 1, kNegInf);
  for (int t = 1; t <= n; ++t) {
    for (int k = 1; k <= L && k <= t; ++k) {
      const int start = t - k;
      if (start == 0) {
        alpha_(t, k) = trans(t, k, 0);
        continue;
      }
      double acc = kNegInf;
      for (int j = 1; j <= L && j <= start; ++j) acc = log_add(acc, alpha_(start, j) + trans(t, k, j));
      alpha_(t, k) = acc;
    }
  }
}

double SegmentLattice::log_mass() const {
  double acc = kNegInf;
  for (int k = 1; k <= max_len_ && k <= n_; ++k) acc = log_add(acc, alpha_(n_, k) + eom_(k));
  return acc;
}

Segmentation SegmentLattice::sample(Rng& rng) const {
  std::vector<double> w(static_cast<std::size_t>(max_len_) + 1, kNegInf);
  for (int k = 1; k <= max_len_ && k <= n_; ++k) w[k] = alpha_(n_, k) + eom_(k);
  int k = static_cast<int>(rng.categorical_log(w));
  int t = n_;
  std::vector<int> lengths;
  while (true) {
    lengths.push_back(k);
    const int start = t - k;
    if (start == 0) break;
    std::fill(w.begin(), w.end(), kNegInf);
    for (int j = 1; j <= max_len_ && j <= start; ++j) w[j] = alpha_(start, j) + trans(t, k, j);
    t = start;
    k = static_cast<int>(rng.categorical_log(w));
  }
  std::reverse(lengths.begin(), lengths.end());
  return Segmentation{std::move(lengths)};
}

std::vector<int> SegmentLattice::cuts_ending(int t, int k, const Eigen::ArrayXXi& back) const {
  std::vector<int> cuts;
  while (t - k > 0) {
    cuts.push_back(t - k);
    const int j = back(t, k);
    t -= k;
    k = j;
  }
  std::reverse(cuts.begin(), cuts.end());
  return cuts;
}

Segmentation SegmentLattice::viterbi() const {
  const int L = max_len_;
  Eigen::ArrayXXd delta = Eigen::ArrayXXd::Constant(n_ + 1, L + 1, kNegInf);
  Eigen::ArrayXXi count = Eigen::ArrayXXi::Zero(n_ + 1, L + 1);
  Eigen::ArrayXXi back = Eigen::ArrayXXi::Zero(n_ + 1, L + 1);

  // Is candidate (score, segments, cuts) better than the incumbent?
  auto better = [&](double s, int c, int t0, int k0, double bs, int bc, int t1, int k1) {
    if (!near(s, bs)) return s > bs;
    if (c != bc) return c < bc;
    return cuts_ending(t0, k0, back) < cuts_ending(t1, k1, back);
  };

  for (int t = 1; t <= n_; ++t) {
    for (int k = 1; k <= L && k <= t; ++k) {
      const int start = t - k;
      if (start == 0) {
        delta(t, k) = trans(t, k, 0);
        count(t, k) = 1;
        continue;
      }
      int best = 0;
      for (int j = 1; j <= L && j <= start; ++j) {
        const double s = delta(start, j) + trans(t, k, j);
        if (s == kNegInf) continue;
        if (best == 0 || better(s, count(start, j) + 1, start, j, delta(t, k), count(t, k), start, best)) {
          best = j;
          delta(t, k) = s;
          count(t, k) = count(start, j) + 1;
        }
      }
      back(t, k) = best;
    }
  }

  int best_k = 0;
  double best_score = kNegInf;
  for (int k = 1; k <= L && k <= n_; ++k) {
    const double s = delta(n_, k) + eom_(k);
    if (s == kNegInf) continue;
    if (best_k == 0 || better(s, count(n_, k), n_, k, best_score, count(n_, best_k), n_, best_k)) {
      best_k = k;
      best_score = s;
    }
  }
  if (best_k == 0) best_k = std::min(L, n_);

  std::vector<int> lengths;
  int t = n_, k = best_k;
  while (true) {
    lengths.push_back(k);
    if (t - k == 0) break;
    const int j = back(t, k);
    t -= k;
    k = j;
  }
  std::reverse(lengths.begin(), lengths.end());
  return Segmentation{std::move(lengths)};
}

double SegmentLattice::path_log_prob(const Segmentation& seg) const {
  double lp = 0.0;
  int t = 0;
  int prev = 0;
  for (int k : seg.lengths) {
    t += k;
    lp += trans(t, k, prev);
    prev = k;
  }
  return lp + eom_(prev);
}

Segmentation sample_segmentation(const NhpylmModel& model, std::span<const ToneId> tones, Rng& rng) {
  return SegmentLattice(model, tones).sample(rng);
}

Segmentation viterbi_segment(const NhpylmModel& model, std::span<const ToneId> tones) {
  return SegmentLattice(model, tones).viterbi();
}

}  // namespace chantseg

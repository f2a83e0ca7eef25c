#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "chantseg/nhpylm.hpp"
#include "chantseg/random.hpp"
#include "chantseg/segment.hpp"

namespace chantseg {

// Semi-Markov lattice over one chant. A state (t, k) is "a segment of length
// k ends at position t"; because the segment model is a bigram, transitions
// into (t, k) are indexed by the length j of the previous segment (j = 0 for
// the begin-of-melody context). All scores are natural logs under a frozen
// model.
class SegmentLattice {
 public:
  SegmentLattice(const NhpylmModel& model, std::span<const ToneId> tones);

  int size() const { return n_; }
  int max_length() const { return max_len_; }

  // log of the total probability of the chant summed over segmentations.
  double log_mass() const;

  // Exact draw from p(segmentation | chant).
  Segmentation sample(Rng& rng) const;

  // Most probable segmentation. Near-ties (relative 1e-11) go to fewer
  // segments, then to the lexicographically smallest cut list.
  Segmentation viterbi() const;

  // log p of a given segmentation, read off the transition table.
  double path_log_prob(const Segmentation& seg) const;

  // Forward table alpha(t, k), log space; -inf where unreachable.
  const Eigen::ArrayXXd& forward() const { return alpha_; }

 private:
  double trans(int t, int k, int j) const {
    return trans_[(static_cast<std::size_t>(t) * (max_len_ + 1) + k) * (max_len_ + 1) + j];
  }
  double& trans(int t, int k, int j) {
    return trans_[(static_cast<std::size_t>(t) * (max_len_ + 1) + k) * (max_len_ + 1) + j];
  }
  std::vector<int> cuts_ending(int t, int k, const Eigen::ArrayXXi& back) const;

  int n_;
  int max_len_;
  std::vector<double> trans_;
  Eigen::ArrayXd eom_;
  Eigen::ArrayXXd alpha_;
};

Segmentation sample_segmentation(const NhpylmModel& model, std::span<const ToneId> tones, Rng& rng);
Segmentation viterbi_segment(const NhpylmModel& model, std::span<const ToneId> tones);

}  // namespace chantseg

#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "chantseg/pyp/context_tree.hpp"
#include "chantseg/random.hpp"
#include "chantseg/segment.hpp"
#include "chantseg/tone_model.hpp"

namespace chantseg {

// How p(k), the tone model's probability of producing a length-k segment,
// is obtained for the Poisson length correction.
enum class LengthNormalizer {
  exact,      // marginal length distribution of the tone model
  geometric,  // (1-q)^(k-1) q with q = unigram end-of-segment probability
};

struct NhpylmConfig {
  int max_segment_length = 7;
  int max_tone_depth = 8;
  pyp::DepthParams initial{0.5, 2.0};
  pyp::HyperPrior prior{};
  double stop_prior_a = 1.0;
  double stop_prior_b = 1.0;
  double lambda_shape = 6.0;
  double lambda_rate = 1.2;
  bool poisson_correction = true;
  LengthNormalizer length_normalizer = LengthNormalizer::exact;
};

// Nested hierarchical Pitman-Yor model: a bigram model over segments whose
// base measure is a variable-order tone model with a Poisson length
// correction.
//
// The segment tree's dish set is every segment of length 1..L plus the
// end-of-melody marker; the begin-of-melody marker only appears as context.
// Its base measure treats the end of a melody as a zero-length segment:
//   G0(end) = Po(0|lambda) / Z,  G0(s) = Po(k|lambda) / Z * P(s, end | tones) / p(k)
// with Z summing the Poisson pmf over 0..L, so G0 is a proper distribution
// and segment_base_prob() is G0 conditioned on k >= 1.
class NhpylmModel {
 public:
  using SegmentTree = pyp::ContextTree<SegmentKey>;

  struct ChantTrace {
    std::vector<SegmentTree::SeatTrace> seats;
  };

  explicit NhpylmModel(std::vector<std::string> symbols, NhpylmConfig config = {});
  explicit NhpylmModel(int alphabet_size, NhpylmConfig config = {});

  NhpylmModel(const NhpylmModel& other);
  NhpylmModel& operator=(const NhpylmModel& other);
  NhpylmModel(NhpylmModel&&) noexcept = default;
  NhpylmModel& operator=(NhpylmModel&&) noexcept = default;

  const NhpylmConfig& config() const { return config_; }
  int alphabet_size() const { return tones_.alphabet_size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  int max_segment_length() const { return config_.max_segment_length; }

  double lambda() const { return lambda_; }
  void set_lambda(double lambda);

  double tone_prob(ToneId t, std::span<const ToneId> ctx) const { return tones_.prob(t, ctx); }

  // Poisson-corrected tone-model probability of a segment, conditioned on
  // length >= 1. Sums to one over all segments of length 1..L.
  double segment_base_prob(std::span<const ToneId> tones) const;

  // Base measure of the segment tree over segments and the end marker.
  double base_measure(SegmentKey dish) const;

  // p(s | prev) under the bigram segment model.
  double segment_prob(SegmentKey s, SegmentKey prev) const;

  // Pieces of segment_prob, for lattices that reuse the unigram level.
  double unigram_prob(SegmentKey s, double base) const;
  double bigram_prob(SegmentKey s, SegmentKey prev, double unigram) const;

  // Sum of log p(s_i | s_{i-1}) plus the end-of-melody term.
  double segmentation_log_prob(std::span<const SegmentKey> segments) const;

  ChantTrace add_segmentation(std::span<const SegmentKey> segments, Rng& rng);
  void remove_segmentation(const ChantTrace& trace);

  void resample_hyperparameters(Rng& rng);
  // lambda ~ Gamma(shape + sum of lengths, rate + count).
  void resample_lambda(std::span<const int> segment_lengths, Rng& rng);

  // Probability of length k (k = 0..L) under the configured normalizer.
  // Refreshed lazily whenever the tone model changed.
  std::vector<double> length_normalizer() const;

  // Poisson pmf over 0..L, renormalised.
  const std::vector<double>& poisson() const { return poisson_; }

  const SegmentTree& segment_tree() const { return segments_; }
  const ToneModel& tone_model() const { return tones_; }

  // Observed segment-level customers (segments plus end markers).
  std::int64_t segment_customers() const { return segments_.total_customers(); }
  std::string check_invariants() const;
  std::string canonical_statistics() const;

  void write(std::ostream& os) const;
  static NhpylmModel read(std::istream& is);

 private:
  struct LengthCache {
    std::mutex mu;
    std::uint64_t version = ~0ULL;
    std::vector<double> normalizer;
  };

  void update_poisson();
  const std::vector<double>& cached_normalizer() const;
  double base_from(std::span<const ToneId> tones, const std::vector<double>& norm) const;

  NhpylmConfig config_;
  std::vector<std::string> symbols_;
  SegmentTree segments_;
  ToneModel tones_;
  double lambda_;
  std::vector<double> poisson_;
  // Tone customers owned by each root table of the segment tree.
  std::unordered_map<std::uint64_t, std::vector<ToneModel::Trace>> base_draws_;
  std::unique_ptr<LengthCache> cache_;
};

}  // namespace chantseg

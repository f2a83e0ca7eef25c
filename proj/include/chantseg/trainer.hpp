#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "chantseg/lattice.hpp"
#include "chantseg/nhpylm.hpp"
#include "chantseg/random.hpp"

namespace chantseg {

using ToneSequence = std::vector<ToneId>;

struct TrainConfig {
  int max_sweeps = 100;
  // Stop after this many sweeps without a validation improvement.
  int patience = 10;
  std::uint64_t seed = 0;
  int resample_every = 1;
  int evaluate_every = 1;
  // Probability of a cut at each interior position of the random initial
  // segmentation. Low values start from long segments, which mixes better.
  double init_cut_probability = 0.05;
};

void validate(const TrainConfig& config);

struct SweepRecord {
  int sweep = 0;
  // Perplexity of the sampled training segmentations, each scored with its
  // own chant removed from the model.
  double train_perplexity = 0.0;
  double train_log_prob = 0.0;
  // NaN when not evaluated this sweep (or no validation data).
  double validation_perplexity = std::numeric_limits<double>::quiet_NaN();
  double lambda = 0.0;
  std::vector<pyp::DepthParams> segment_params;
  std::vector<pyp::DepthParams> tone_params;
};

// Sum of log2 step probabilities over segments and end markers.
class PerplexityAccumulator {
 public:
  void add(const NhpylmModel& model, std::span<const SegmentKey> segments);
  void add_log2(double log2_prob, std::int64_t steps) {
    log2_sum_ += log2_prob;
    steps_ += steps;
  }
  std::int64_t steps() const { return steps_; }
  double log2_sum() const { return log2_sum_; }
  // 2^(-mean log2 p); NaN if nothing was added.
  double value() const;

 private:
  double log2_sum_ = 0.0;
  std::int64_t steps_ = 0;
};

// Perplexity of a segmented corpus under a frozen model.
double perplexity(const NhpylmModel& model, std::span<const ToneSequence> chants,
                  std::span<const Segmentation> segmentations);

// Viterbi-decodes every chant and returns the perplexity of the result.
double viterbi_perplexity(const NhpylmModel& model, std::span<const ToneSequence> chants,
                          std::vector<Segmentation>* decoded = nullptr);

// Independent cuts with a fixed probability at every position; a cut is
// forced whenever the current segment reaches the length cap.
Segmentation random_segmentation(std::size_t n_tones, int max_length, Rng& rng,
                                 double cut_probability = 0.5);

class TrainerState {
 public:
  static TrainerState init_random(std::vector<ToneSequence> corpus, NhpylmModel model, Rng& rng,
                                  double cut_probability = 0.05);
  // Starts from the given segmentations instead of random cuts.
  static TrainerState init_from(std::vector<ToneSequence> corpus, NhpylmModel model,
                                std::vector<Segmentation> segmentations, Rng& rng);

  // One blocked Gibbs pass over the corpus in a fresh random order, followed
  // by hyperparameter and lambda resampling when `resample` is set.
  void gibbs_sweep(Rng& rng, bool resample = true);

  const NhpylmModel& model() const { return model_; }
  const std::vector<ToneSequence>& corpus() const { return corpus_; }
  const std::vector<Segmentation>& segmentations() const { return segmentations_; }
  int sweeps() const { return sweeps_; }
  double last_log_prob() const { return last_log_prob_; }
  std::int64_t last_steps() const { return last_steps_; }

  // Segment lengths of all current segmentations.
  std::vector<int> segment_lengths() const;

 private:
  TrainerState(std::vector<ToneSequence> corpus, NhpylmModel model)
      : corpus_(std::move(corpus)), model_(std::move(model)) {}

  std::vector<ToneSequence> corpus_;
  NhpylmModel model_;
  std::vector<Segmentation> segmentations_;
  std::vector<NhpylmModel::ChantTrace> traces_;
  int sweeps_ = 0;
  double last_log_prob_ = 0.0;
  std::int64_t last_steps_ = 0;
};

struct TrainResult {
  NhpylmModel model;
  // Training segmentations belonging to the returned model state.
  std::vector<Segmentation> train_segmentations;
  std::vector<SweepRecord> history;
  int best_sweep = 0;
  double best_validation = std::numeric_limits<double>::quiet_NaN();
  // False when max_sweeps ran out before patience did.
  bool converged = false;
};

TrainResult train(std::span<const ToneSequence> train_set, std::span<const ToneSequence> validation,
                  NhpylmModel model, const TrainConfig& config,
                  const std::function<void(const SweepRecord&)>& progress = {});

}  // namespace chantseg

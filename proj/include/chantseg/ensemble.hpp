#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "chantseg/nhpylm.hpp"
#include "chantseg/trainer.hpp"

namespace chantseg {

inline constexpr int kModeCount = 8;
using ModeArray = std::array<double, kModeCount>;

struct EnsembleConfig {
  TrainConfig train{};
  bool uniform_prior = false;
  // Score with the lattice mass instead of the Viterbi path probability.
  bool full_sum = false;
  int threads = 1;
};

// One model per mode (index m-1 holds mode m) and a prior over modes.
struct ModeEnsemble {
  std::vector<NhpylmModel> models;
  ModeArray prior{};
  std::array<std::int64_t, kModeCount> train_counts{};
  bool full_sum = false;

  // Modes that had no training chants.
  std::vector<int> empty_modes() const;

  void write(std::ostream& os) const;
  static ModeEnsemble read(std::istream& is);
};

struct ModeTrainingReport {
  int mode = 0;
  TrainResult result;
};

// Trains model m on the chants labelled m only, seeded with seed + m.
// Modes without training chants keep an untrained model and prior 0; they
// are listed by empty_modes() rather than raised.
ModeEnsemble train_ensemble(std::span<const ToneSequence> train, std::span<const int> modes,
                            std::span<const ToneSequence> validation, std::span<const int> validation_modes,
                            const NhpylmModel& prototype, const EnsembleConfig& config,
                            std::vector<ModeTrainingReport>* reports = nullptr);

struct ModeDecision {
  int mode = 1;
  // log p(chant | m) + log prior(m); -inf for impossible modes.
  ModeArray scores{};
  // Set when every score was -inf and the prior argmax was used.
  bool fallback = false;
  // Winning model's Viterbi segmentation.
  Segmentation segmentation;
};

ModeDecision classify_mode(const ModeEnsemble& ensemble, std::span<const ToneId> tones);
Segmentation segment_with_ensemble(const ModeEnsemble& ensemble, std::span<const ToneId> tones);

// Softmax of the scores.
ModeArray posterior(const ModeArray& scores);

// Perplexity of each chant under its winning mode's model and segmentation.
double ensemble_perplexity(const ModeEnsemble& ensemble, std::span<const ToneSequence> chants);

}  // namespace chantseg

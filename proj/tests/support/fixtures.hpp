#pragma once

#include <vector>

#include "chantseg/nhpylm.hpp"
#include "chantseg/random.hpp"
#include "chantseg/trainer.hpp"

namespace fixture {

using chantseg::ToneSequence;

inline std::vector<ToneSequence> random_chants(int count, int min_len, int max_len, int alphabet,
                                               chantseg::Rng& rng) {
  std::vector<ToneSequence> out;
  for (int i = 0; i < count; ++i) {
    const int n = min_len + static_cast<int>(rng.uniform_index(max_len - min_len + 1));
    ToneSequence c;
    for (int j = 0; j < n; ++j) c.push_back(static_cast<chantseg::ToneId>(rng.uniform_index(alphabet)));
    out.push_back(std::move(c));
  }
  return out;
}

// Alphabet-2, L = 3 model trained for a few sweeps on random chants, so that
// every level of both trees carries customers.
inline chantseg::NhpylmModel tiny_model(std::uint64_t seed = 7, int sweeps = 3) {
  chantseg::NhpylmConfig cfg;
  cfg.max_segment_length = 3;
  cfg.max_tone_depth = 3;
  chantseg::Rng rng(seed);
  auto chants = random_chants(30, 3, 9, 2, rng);
  auto state = chantseg::TrainerState::init_random(chants, chantseg::NhpylmModel(2, cfg), rng);
  for (int i = 0; i < sweeps; ++i) state.gibbs_sweep(rng);
  return state.model();
}

}  // namespace fixture

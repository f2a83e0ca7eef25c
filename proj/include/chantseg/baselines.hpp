#pragma once

#include <string_view>

#include "chantseg/corpus.hpp"
#include "chantseg/features.hpp"
#include "chantseg/segment.hpp"

namespace chantseg {

enum class BaselineKind { ngram4, syllables, words, classical };

std::string_view to_string(BaselineKind k);

// Non-overlapping chunks of n tones from the left; a shorter remainder is
// its own final segment.
Segmentation ngram_segment(std::size_t n_tones, int n = 4);

enum class Unit { syllable, word };

// Cuts exactly at the chant's annotated syllable or word boundaries.
Segmentation unit_segment(const Chant& chant, Unit unit);

// One-hot initial pitch, one-hot final pitch, lowest and highest gamut index
// and the range, the last three divided by the top gamut index.
inline constexpr int kClassicalDimension = 2 * static_cast<int>(kGamut.size()) + 3;
FeatureVector classical_features(const Chant& chant);

}  // namespace chantseg

#include "chantseg/baselines.hpp"

#include <algorithm>

#include "chantseg/errors.hpp"

namespace chantseg {

std::string_view to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::ngram4: return "ngram4";
    case BaselineKind::syllables: return "syllables";
    case BaselineKind::words: return "words";
    case BaselineKind::classical: return "classical";
  }
  return "?";
}

Segmentation ngram_segment(std::size_t n_tones, int n) {
  if (n_tones == 0) throw EmptyMelody("cannot segment an empty chant");
  if (n < 1) throw Error("n-gram size must be positive");
  Segmentation seg;
  for (std::size_t at = 0; at < n_tones; at += static_cast<std::size_t>(n))
    seg.lengths.push_back(static_cast<int>(std::min<std::size_t>(n, n_tones - at)));
  return seg;
}

Segmentation unit_segment(const Chant& chant, Unit unit) {
  if (!chant.has_boundaries) throw MissingBoundaries("chant " + chant.record_id + " has no boundary annotation");
  if (chant.tones.empty()) throw EmptyMelody("cannot segment an empty chant");
  const auto& cuts = unit == Unit::syllable ? chant.syllable_boundaries : chant.word_boundaries;
  return Segmentation::from_cuts(static_cast<int>(chant.tones.size()), cuts);
}

FeatureVector classical_features(const Chant& chant) {
  if (chant.encoding != Encoding::pitch) throw NotApplicable("classical features need pitch encoding");
  if (chant.tones.empty()) throw EmptyMelody("cannot featurize an empty chant");
  const int g = static_cast<int>(kGamut.size());
  const int first = chant.tones.front(), last = chant.tones.back();
  const auto [lo, hi] = std::minmax_element(chant.tones.begin(), chant.tones.end());
  for (int t : {first, last})
    if (t < 0 || t >= g) throw UnknownCharacter("pitch outside the gamut");
  const double scale = g - 1;

  FeatureVector v(kClassicalDimension);
  v.insert(first) = 1.0;
  v.insert(g + last) = 1.0;
  if (*lo > 0) v.insert(2 * g) = *lo / scale;
  if (*hi > 0) v.insert(2 * g + 1) = *hi / scale;
  if (*hi > *lo) v.insert(2 * g + 2) = (*hi - *lo) / scale;
  return v;
}

}  // namespace chantseg

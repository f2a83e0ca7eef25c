#include <doctest.h>

#include <cmath>
#include <map>

#include "chantseg/lattice.hpp"
#include "chantseg/trainer.hpp"
#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

using namespace chantseg;

TEST_CASE("lattice mass and Viterbi match enumeration") {
  const NhpylmModel m = fixture::tiny_model();
  Rng rng(31);
  for (int i = 0; i < 60; ++i) {
    const auto tones = fixture::random_chants(1, 1, 10, 2, rng)[0];
    const SegmentLattice lat(m, tones);
    const double brute = oracle::total_mass(m, tones);
    CHECK(std::exp(lat.log_mass()) == doctest::Approx(brute).epsilon(1e-9));
    CHECK(lat.viterbi() == oracle::argmax(m, tones));
  }
}

TEST_CASE("path probability agrees with the model") {
  const NhpylmModel m = fixture::tiny_model();
  const std::vector<ToneId> tones{0, 1, 1, 0, 1, 0, 0};
  const SegmentLattice lat(m, tones);
  for (const auto& seg : oracle::all_segmentations(7, 3))
    CHECK(lat.path_log_prob(seg) == doctest::Approx(oracle::log_prob(m, tones, seg)).epsilon(1e-12));
}

TEST_CASE("single-tone chant has one segmentation") {
  const NhpylmModel m = fixture::tiny_model();
  const std::vector<ToneId> tones{1};
  Rng rng(1);
  CHECK(viterbi_segment(m, tones) == Segmentation{{1}});
  CHECK(sample_segmentation(m, tones, rng) == Segmentation{{1}});
}

TEST_CASE("empty chant is rejected") {
  const NhpylmModel m(2);
  const std::vector<ToneId> none;
  CHECK_THROWS_AS(viterbi_segment(m, none), EmptyMelody);
}

TEST_CASE("sampler matches the enumerated posterior") {
  const NhpylmModel m = fixture::tiny_model();
  const std::vector<ToneId> tones{0, 1, 1, 0, 1, 0};
  const auto segs = oracle::all_segmentations(6, 3);
  std::map<std::vector<int>, double> target;
  double z = 0.0;
  for (const auto& s : segs) z += std::exp(oracle::log_prob(m, tones, s));
  for (const auto& s : segs) target[s.lengths] = std::exp(oracle::log_prob(m, tones, s)) / z;

  const SegmentLattice lat(m, tones);
  Rng rng(99);
  const int draws = 20000;
  std::map<std::vector<int>, double> freq;
  for (int i = 0; i < draws; ++i) {
    const Segmentation s = lat.sample(rng);
    for (int k : s.lengths) REQUIRE(k <= 3);
    freq[s.lengths] += 1.0 / draws;
  }
  double tv = 0.0;
  for (const auto& [k, p] : target) tv += std::abs(p - freq[k]);
  CHECK(tv / 2 < 0.02);
}

TEST_CASE("decoding is deterministic and leaves the model untouched") {
  const NhpylmModel m = fixture::tiny_model();
  const std::string before = m.canonical_statistics();
  const std::vector<ToneId> tones{1, 1, 0, 1, 0, 0, 1, 1, 1};
  const auto a = viterbi_segment(m, tones);
  const auto b = viterbi_segment(m, tones);
  CHECK(a == b);
  CHECK(m.canonical_statistics() == before);
}

TEST_CASE("Viterbi ties prefer fewer segments") {
  // Untrained, alphabet 1, L = 2, lambda chosen so a 2-tone segment and two
  // 1-tone segments are compared under a symmetric model.
  NhpylmConfig c;
  c.max_segment_length = 2;
  NhpylmModel m(1, c);
  const std::vector<ToneId> tones{0, 0, 0, 0};
  const auto seg = viterbi_segment(m, tones);
  CHECK(seg == oracle::argmax(m, tones));
}

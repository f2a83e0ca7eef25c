#include <doctest.h>

#include <cmath>
#include <set>

#include "chantseg/errors.hpp"
#include "chantseg/pipeline.hpp"

using namespace chantseg;

namespace {

std::vector<Chant> fixture_chants(Encoding enc = Encoding::pitch) {
  FilterRules rules;
  rules.encoding = enc;
  return load_corpus(CHANTSEG_FIXTURES "/synthetic_chants.csv", rules).chants;
}

ExperimentConfig quick(Encoding enc = Encoding::pitch) {
  ExperimentConfig c;
  c.filter.encoding = enc;
  c.train.max_sweeps = 6;
  c.train.patience = 3;
  return c;
}

}  // namespace

TEST_CASE("fixture corpus loads") {
  const auto chants = fixture_chants();
  CHECK(chants.size() == 160);
  std::set<int> modes;
  for (const auto& c : chants) modes.insert(c.mode);
  CHECK(modes.size() == 8);
  CHECK_THROWS_AS(load_corpus("/nonexistent/file.csv", FilterRules{}), IoError);
}

TEST_CASE("every method yields one prediction per test chant") {
  const auto chants = fixture_chants();
  for (Method m : {Method::nhpylm, Method::nhpylm_classes, Method::ngram4, Method::syllables, Method::words,
                   Method::classical, Method::overlap17}) {
    CAPTURE(to_string(m));
    const SeedOutcome r = run_experiment(chants, m, quick(), 1);
    CHECK(r.n_train + r.n_validation + r.n_test == chants.size());
    CHECK(r.predictions.size() == r.n_test);
    CHECK((r.micro_f1 >= 0 && r.micro_f1 <= 1));
    CHECK(r.micro_f1 == doctest::Approx(r.accuracy));
    CHECK(uses_model(m) == !std::isnan(r.test_perplexity));
    CHECK((m == Method::nhpylm_classes) == !std::isnan(r.internal_f1));
    const bool segmented = m != Method::classical && m != Method::overlap17;
    CHECK(r.segmentations.size() == (segmented ? chants.size() : 0));
    for (const auto& s : r.segmentations) CHECK(s.segmentation.total_length() == static_cast<int>(s.symbols.size()));
  }
}

TEST_CASE("experiments are reproducible per seed") {
  const auto chants = fixture_chants();
  const auto a = run_experiment(chants, Method::nhpylm_classes, quick(), 4);
  const auto b = run_experiment(chants, Method::nhpylm_classes, quick(), 4);
  CHECK(a.micro_f1 == b.micro_f1);
  CHECK(a.test_perplexity == b.test_perplexity);
  REQUIRE(a.predictions.size() == b.predictions.size());
  for (std::size_t i = 0; i < a.predictions.size(); ++i) CHECK(a.predictions[i].predicted == b.predictions[i].predicted);
}

TEST_CASE("interval experiments and the classical guard") {
  const auto chants = fixture_chants(Encoding::interval);
  const auto r = run_experiment(chants, Method::nhpylm, quick(Encoding::interval), 2);
  CHECK(r.test_perplexity > 1);
  CHECK_THROWS_AS(run_experiment(chants, Method::classical, quick(Encoding::interval), 2), NotApplicable);
}

TEST_CASE("training curves come from the training part") {
  const auto chants = fixture_chants();
  const auto r = run_experiment(chants, Method::ngram4, quick(), 3);
  const auto curves = training_curves(r, 10);
  REQUIRE(curves.size() == 2);
  std::int64_t tones = 0;
  for (const auto& s : r.segmentations)
    if (s.part == "train") tones += static_cast<std::int64_t>(s.symbols.size());
  CHECK(curves[0].total_count() == tones);
  CHECK(curves[1].total_count() == tones);
}

TEST_CASE("summaries use the sample standard deviation") {
  const Summary s = summarize({1.0, 2.0, 3.0});
  CHECK(s.mean == 2.0);
  CHECK(s.sd == doctest::Approx(1.0));
  CHECK(std::isnan(summarize({5.0}).sd));
}

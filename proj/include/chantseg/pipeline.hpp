#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chantseg/analysis.hpp"
#include "chantseg/corpus.hpp"
#include "chantseg/ensemble.hpp"
#include "chantseg/features.hpp"
#include "chantseg/nhpylm.hpp"
#include "chantseg/trainer.hpp"

namespace chantseg {

enum class Method { nhpylm, nhpylm_classes, ngram4, syllables, words, classical, overlap17 };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);
bool uses_model(Method m);

struct ExperimentConfig {
  FilterRules filter{};
  SplitSpec split{};
  TrainConfig train{};
  NhpylmConfig model{};
  bool uniform_prior = false;
  bool full_sum = false;
  int threads = 1;
  SvmConfig svm{};
  std::size_t vocabulary_cap = Vocabulary::kDefaultCap;
  // Interval alphabets cover at least [-bound, bound].
  int interval_bound = 12;
  int bins = kDefaultBins;
};

// Reads a chant CSV (filtered by the rules) or a JSON-lines file written by
// ingest (filtered by genre and source, converted to the requested encoding).
FilterResult load_corpus(const std::string& path, const FilterRules& rules, const CsvColumns& columns = {});

// Alphabet for an experiment; interval alphabets cover every chant passed.
ToneAlphabet make_alphabet(const std::vector<Chant>& chants, Encoding encoding, int interval_bound);

NhpylmModel make_model(const ToneAlphabet& alphabet, const NhpylmConfig& config);

struct Prediction {
  std::string record_id;
  int gold = 0;
  int predicted = 0;
  // Per-mode scores, NaN for modes the classifier never saw.
  ModeArray scores{};
};

struct SegmentationRecord {
  std::string record_id;
  std::string part;  // train, validation or test
  int mode = 0;
  std::vector<std::string> symbols;
  Segmentation segmentation;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  Method method = Method::nhpylm;
  Encoding encoding = Encoding::pitch;
  std::size_t n_train = 0, n_validation = 0, n_test = 0;
  double micro_f1 = 0, accuracy = 0;
  // Bayes-rule classifier of the mode ensemble; NaN for other methods.
  double internal_f1 = std::numeric_limits<double>::quiet_NaN();
  double test_perplexity = std::numeric_limits<double>::quiet_NaN();
  int sweeps = 0;
  std::size_t vocabulary_size = 0;
  std::vector<Prediction> predictions;
  // Bayes-rule predictions, for nhpylm-classes.
  std::vector<Prediction> internal_predictions;
  std::vector<SegmentationRecord> segmentations;
  std::vector<SweepRecord> history;
  std::vector<int> empty_modes;
};

SeedOutcome run_experiment(const std::vector<Chant>& chants, Method method, const ExperimentConfig& config,
                           std::uint64_t seed);

// Positional curves over the training segmentations of one outcome.
std::vector<PositionalCurve> training_curves(const SeedOutcome& outcome, int bins,
                                             Uniqueness metric = Uniqueness::max_fraction);

std::vector<SegmentedChant> to_segmented(const std::vector<SegmentationRecord>& records, Encoding encoding,
                                         std::string_view part = {});

struct Summary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();  // sample sd, NaN below two values
};

Summary summarize(const std::vector<double>& values);

}  // namespace chantseg

#include "chantseg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "chantseg/baselines.hpp"
#include "chantseg/errors.hpp"
#include "chantseg/lattice.hpp"

namespace chantseg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

struct Part {
  const char* name;
  const std::vector<Chant>* chants;
  std::vector<ToneSequence> tones;
  std::vector<int> modes;
  std::vector<std::vector<std::string>> symbols;
};

Part encode_part(const char* name, const std::vector<Chant>& chants, const ToneAlphabet& alphabet) {
  Part p{name, &chants, {}, {}, {}};
  for (const auto& c : chants) {
    p.tones.push_back(alphabet.encode(c));
    p.modes.push_back(c.mode);
    std::vector<std::string> syms;
    for (ToneId t : p.tones.back()) syms.push_back(alphabet.symbol(t));
    p.symbols.push_back(std::move(syms));
  }
  return p;
}

Prediction make_prediction(const Chant& c, int predicted) {
  Prediction p;
  p.record_id = c.record_id;
  p.gold = c.mode;
  p.predicted = predicted;
  p.scores.fill(kNaN);
  return p;
}

std::vector<int> column(const std::vector<Prediction>& ps, bool gold) {
  std::vector<int> out;
  for (const auto& p : ps) out.push_back(gold ? p.gold : p.predicted);
  return out;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::nhpylm: return "nhpylm";
    case Method::nhpylm_classes: return "nhpylm-classes";
    case Method::ngram4: return "ngram4";
    case Method::syllables: return "syllables";
    case Method::words: return "words";
    case Method::classical: return "classical";
    case Method::overlap17: return "overlap17";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  for (Method m : {Method::nhpylm, Method::nhpylm_classes, Method::ngram4, Method::syllables, Method::words,
                   Method::classical, Method::overlap17})
    if (to_string(m) == s) return m;
  throw Error("unknown method '" + std::string(s) + "'");
}

bool uses_model(Method m) { return m == Method::nhpylm || m == Method::nhpylm_classes; }

FilterResult load_corpus(const std::string& path, const FilterRules& rules, const CsvColumns& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  if (!ends_with(path, ".jsonl")) return filter_corpus(read_records(in, columns), rules);

  FilterResult res;
  for (const char* rule : {"genre", "source", "too_short"}) res.dropped[rule] = 0;
  for (Chant& c : read_chants_jsonl(in)) {
    ++res.total;
    if (c.genre != rules.genre) {
      ++res.dropped["genre"];
      continue;
    }
    if (!rules.source.empty() && c.source_id.rfind(rules.source, 0) != 0) {
      ++res.dropped["source"];
      continue;
    }
    if (c.encoding != rules.encoding) {
      if (c.encoding == Encoding::interval) throw FormatError(path + " holds interval chants; pitch requested");
      c = to_intervals(c);
      if (c.tones.empty()) {
        ++res.dropped["too_short"];
        continue;
      }
    }
    res.chants.push_back(std::move(c));
  }
  return res;
}

ToneAlphabet make_alphabet(const std::vector<Chant>& chants, Encoding encoding, int interval_bound) {
  return encoding == Encoding::pitch ? ToneAlphabet::pitch() : ToneAlphabet::interval(chants, interval_bound);
}

NhpylmModel make_model(const ToneAlphabet& alphabet, const NhpylmConfig& config) {
  return NhpylmModel(alphabet.symbols(), config);
}

SeedOutcome run_experiment(const std::vector<Chant>& chants, Method method, const ExperimentConfig& config,
                           std::uint64_t seed) {
  const Encoding encoding = config.filter.encoding;
  if (method == Method::classical && encoding != Encoding::pitch)
    throw NotApplicable("the classical baseline needs pitch encoding");

  SplitSpec spec = config.split;
  spec.seed = seed;
  const Split split = split_corpus(chants, spec);
  const ToneAlphabet alphabet = make_alphabet(chants, encoding, config.interval_bound);
  std::vector<Part> parts;
  parts.push_back(encode_part("train", split.train, alphabet));
  parts.push_back(encode_part("validation", split.validation, alphabet));
  parts.push_back(encode_part("test", split.test, alphabet));
  const Part& tr = parts[0];
  const Part& va = parts[1];
  const Part& te = parts[2];

  SeedOutcome out;
  out.seed = seed;
  out.method = method;
  out.encoding = encoding;
  out.n_train = split.train.size();
  out.n_validation = split.validation.size();
  out.n_test = split.test.size();

  TrainConfig tc = config.train;
  tc.seed = seed;

  // Segmentation of every chant, per part, for the segment-based methods.
  std::vector<std::vector<Segmentation>> segs(parts.size());
  switch (method) {
    case Method::nhpylm: {
      TrainResult res = train(tr.tones, va.tones, make_model(alphabet, config.model), tc);
      out.history = res.history;
      out.sweeps = static_cast<int>(res.history.size());
      for (std::size_t p = 0; p < parts.size(); ++p)
        for (const auto& t : parts[p].tones) segs[p].push_back(viterbi_segment(res.model, t));
      PerplexityAccumulator acc;
      for (std::size_t i = 0; i < te.tones.size(); ++i) acc.add(res.model, segment_keys(te.tones[i], segs[2][i]));
      out.test_perplexity = acc.value();
      break;
    }
    case Method::nhpylm_classes: {
      EnsembleConfig ec;
      ec.train = tc;
      ec.uniform_prior = config.uniform_prior;
      ec.full_sum = config.full_sum;
      ec.threads = config.threads;
      std::vector<ModeTrainingReport> reports;
      const ModeEnsemble ens = train_ensemble(tr.tones, tr.modes, va.tones, va.modes,
                                              make_model(alphabet, config.model), ec, &reports);
      out.empty_modes = ens.empty_modes();
      for (const auto& r : reports) out.sweeps = std::max(out.sweeps, static_cast<int>(r.result.history.size()));
      PerplexityAccumulator acc;
      for (std::size_t p = 0; p < parts.size(); ++p) {
        for (std::size_t i = 0; i < parts[p].tones.size(); ++i) {
          ModeDecision d = classify_mode(ens, parts[p].tones[i]);
          if (p == 2) {
            Prediction pr = make_prediction((*parts[p].chants)[i], d.mode);
            pr.scores = d.scores;
            out.internal_predictions.push_back(pr);
            acc.add(ens.models[static_cast<std::size_t>(d.mode - 1)], segment_keys(parts[p].tones[i], d.segmentation));
          }
          segs[p].push_back(std::move(d.segmentation));
        }
      }
      out.test_perplexity = acc.value();
      out.internal_f1 = micro_f1(column(out.internal_predictions, false), column(out.internal_predictions, true));
      break;
    }
    case Method::ngram4:
      for (std::size_t p = 0; p < parts.size(); ++p)
        for (const auto& t : parts[p].tones) segs[p].push_back(ngram_segment(t.size(), 4));
      break;
    case Method::syllables:
    case Method::words:
      for (std::size_t p = 0; p < parts.size(); ++p)
        for (const auto& c : *parts[p].chants)
          segs[p].push_back(unit_segment(c, method == Method::syllables ? Unit::syllable : Unit::word));
      break;
    case Method::classical:
    case Method::overlap17:
      break;
  }

  const bool segmented = method != Method::classical && method != Method::overlap17;
  if (segmented) {
    for (std::size_t p = 0; p < parts.size(); ++p)
      for (std::size_t i = 0; i < segs[p].size(); ++i) {
        const Chant& c = (*parts[p].chants)[i];
        out.segmentations.push_back({c.record_id, parts[p].name, c.mode, parts[p].symbols[i], segs[p][i]});
      }
  }

  // Classifier features: fit on train + validation, applied to test.
  std::vector<FeatureVector> fit_x, test_x;
  std::vector<int> fit_y;
  int dimension = 0;
  if (method == Method::classical) {
    dimension = kClassicalDimension;
    for (std::size_t p = 0; p < 2; ++p)
      for (const auto& c : *parts[p].chants) fit_x.push_back(classical_features(c));
    for (const auto& c : *te.chants) test_x.push_back(classical_features(c));
  } else {
    auto doc = [&](std::size_t p, std::size_t i) {
      return segmented ? bag_of_segments(parts[p].symbols[i], segs[p][i]) : overlapping_ngrams(parts[p].symbols[i], 1, 7);
    };
    std::vector<Document> fit_docs;
    for (std::size_t p = 0; p < 2; ++p)
      for (std::size_t i = 0; i < parts[p].tones.size(); ++i) fit_docs.push_back(doc(p, i));
    const Vocabulary vocab = Vocabulary::build(fit_docs, config.vocabulary_cap);
    out.vocabulary_size = vocab.size();
    dimension = static_cast<int>(vocab.size());
    for (const auto& d : fit_docs) fit_x.push_back(vocab.vectorize(d));
    for (std::size_t i = 0; i < te.tones.size(); ++i) test_x.push_back(vocab.vectorize(doc(2, i)));
  }
  for (std::size_t p = 0; p < 2; ++p) fit_y.insert(fit_y.end(), parts[p].modes.begin(), parts[p].modes.end());

  SvmConfig svm = config.svm;
  svm.seed = derive_seed(seed, "classifier");
  const LinearClassifier clf = LinearClassifier::train(fit_x, fit_y, dimension, svm);
  for (std::size_t i = 0; i < test_x.size(); ++i) {
    Prediction pr = make_prediction((*te.chants)[i], clf.predict(test_x[i]));
    const Eigen::VectorXd s = clf.scores(test_x[i]);
    for (std::size_t c = 0; c < clf.classes().size(); ++c) {
      const int m = clf.classes()[c];
      if (m >= 1 && m <= kModeCount) pr.scores[static_cast<std::size_t>(m - 1)] = s(static_cast<Eigen::Index>(c));
    }
    out.predictions.push_back(pr);
  }
  out.micro_f1 = micro_f1(column(out.predictions, false), column(out.predictions, true));
  out.accuracy = accuracy(column(out.predictions, false), column(out.predictions, true));
  return out;
}

std::vector<SegmentedChant> to_segmented(const std::vector<SegmentationRecord>& records, Encoding encoding,
                                         std::string_view part) {
  std::vector<SegmentedChant> out;
  for (const auto& r : records) {
    if (!part.empty() && r.part != part) continue;
    SegmentedChant c;
    for (const auto& s : r.symbols) c.tones.push_back(ToneAlphabet::value_of(encoding, s));
    c.segmentation = r.segmentation;
    c.mode = r.mode;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<PositionalCurve> training_curves(const SeedOutcome& outcome, int bins, Uniqueness metric) {
  if (outcome.segmentations.empty()) return {};
  const auto chants = to_segmented(outcome.segmentations, outcome.encoding, "train");
  return {positional_segment_length(chants, bins), modal_uniqueness(chants, bins, metric)};
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return s;
  double ss = 0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return s;
}

}  // namespace chantseg

#include "chantseg/cli.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>
#include <Eigen/Core>

#include "chantseg/errors.hpp"
#include "chantseg/pipeline.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace chantseg::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : Error {
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

struct Options {
  std::string command;
  std::string corpus;
  std::string genre = "antiphon";
  std::string encoding = "pitch";
  std::string source;
  std::string method = "nhpylm";
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string out = "out";
  bool group_by_cantus_id = false;
  int max_sweeps = 100;
  int patience = 10;
  double init_cut_probability = 0.05;
  int max_segment_length = 7;
  int max_tone_depth = 8;
  int threads = 1;
  bool uniform_prior = false;
  bool full_sum = false;
  std::string train_fraction = "7/10";
  std::string validation_fraction = "1/10";
  std::size_t vocab_cap = Vocabulary::kDefaultCap;
  double svm_c = 1.0;
  int interval_bound = 12;
  int bins = kDefaultBins;
  std::string uniqueness = "max-fraction";
  std::string model;
  std::string segmentations;
  std::string pairs;
  bool strict = false;
  bool keep_differentia = false;
  bool verbose = false;
  CsvColumns columns;
};

// ------------------------------------------------------------ small writers

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
  }

  std::ofstream open(const std::string& name) {
    const fs::path p = dir_ / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write " + p.string());
    files_.push_back(name);
    return f;
  }

  const fs::path& path() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

json segmentation_json(std::uint64_t seed, const SegmentationRecord& r, Encoding enc) {
  json j;
  j["seed"] = seed;
  j["record_id"] = r.record_id;
  j["part"] = r.part;
  j["mode"] = r.mode;
  j["encoding"] = std::string(to_string(enc));
  j["tones"] = r.symbols;
  j["lengths"] = r.segmentation.lengths;
  return j;
}

void write_predictions_header(std::ostream& out) {
  out << "seed,classifier,record_id,gold_mode,predicted_mode";
  for (int m = 1; m <= kModeCount; ++m) out << ",score_" << m;
  out << '\n';
}

void write_prediction(std::ostream& out, std::uint64_t seed, std::string_view classifier, const Prediction& p) {
  out << seed << ',' << classifier << ',' << csv_field(p.record_id) << ',' << p.gold << ',' << p.predicted;
  for (double s : p.scores) out << ',' << (std::isinf(s) ? (s < 0 ? "-inf" : "inf") : fmt(s));
  out << '\n';
}

void write_history_header(std::ostream& out) {
  out << "seed,mode,sweep,train_perplexity,validation_perplexity,lambda\n";
}

void write_history(std::ostream& out, std::uint64_t seed, int mode, const std::vector<SweepRecord>& h) {
  for (const auto& r : h)
    out << seed << ',' << (mode ? std::to_string(mode) : "") << ',' << r.sweep << ',' << fmt(r.train_perplexity)
        << ',' << fmt(r.validation_perplexity) << ',' << fmt(r.lambda) << '\n';
}

// ------------------------------------------------------------- config glue

FilterRules filter_rules(const Options& o) {
  FilterRules r;
  r.genre = parse_genre(o.genre);
  r.encoding = parse_encoding(o.encoding);
  r.source = o.source;
  r.cleaning.strict = o.strict;
  r.cleaning.strip_differentia = !o.keep_differentia;
  return r;
}

ExperimentConfig experiment_config(const Options& o) try {
  ExperimentConfig c;
  c.filter = filter_rules(o);
  c.split.train_fraction = Fraction::parse(o.train_fraction);
  c.split.validation_fraction = Fraction::parse(o.validation_fraction);
  c.split.grouping = o.group_by_cantus_id ? Grouping::cantus_id : Grouping::record;
  c.train.max_sweeps = o.max_sweeps;
  c.train.patience = o.patience;
  c.train.init_cut_probability = o.init_cut_probability;
  validate(c.train);
  c.model.max_segment_length = o.max_segment_length;
  c.model.max_tone_depth = o.max_tone_depth;
  c.uniform_prior = o.uniform_prior;
  c.full_sum = o.full_sum;
  c.threads = o.threads;
  c.svm.C = o.svm_c;
  c.vocabulary_cap = o.vocab_cap;
  c.interval_bound = o.interval_bound;
  c.bins = o.bins;
  return c;
} catch (const UsageError&) {
  throw;
} catch (const Error& e) {
  throw UsageError(e.what());
}

Uniqueness uniqueness_metric(const Options& o) {
  return o.uniqueness == "inverse-perplexity" ? Uniqueness::inverse_perplexity : Uniqueness::max_fraction;
}

std::vector<Chant> load(const Options& o, std::map<std::string, std::int64_t>* dropped = nullptr,
                        std::int64_t* total = nullptr) {
  if (o.corpus.empty()) throw UsageError(o.command + " needs --corpus");
  FilterResult res = load_corpus(o.corpus, filter_rules(o), o.columns);
  if (dropped) *dropped = res.dropped;
  if (total) *total = res.total;
  if (o.verbose) std::cerr << "loaded " << res.kept() << " of " << res.total << " records from " << o.corpus << '\n';
  if (res.chants.empty()) throw EmptyInput("no chants left after filtering " + o.corpus);
  return std::move(res.chants);
}

std::string peek_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char buf[4] = {};
  in.read(buf, 4);
  return std::string(buf, static_cast<std::size_t>(in.gcount()));
}

// Splits chants into those the alphabet can encode and a skip count.
std::vector<std::pair<const Chant*, ToneSequence>> encodable(const std::vector<Chant>& chants,
                                                             const ToneAlphabet& alphabet, int& skipped) {
  std::vector<std::pair<const Chant*, ToneSequence>> out;
  skipped = 0;
  for (const auto& c : chants) {
    if (!alphabet.covers(c)) {
      ++skipped;
      continue;
    }
    out.emplace_back(&c, alphabet.encode(c));
  }
  return out;
}

ToneAlphabet model_alphabet(const NhpylmModel& model, Encoding enc) {
  std::vector<int> values;
  for (const auto& s : model.symbols()) values.push_back(ToneAlphabet::value_of(enc, s));
  return ToneAlphabet::from_values(enc, values);
}

// ---------------------------------------------------------------- commands

void cmd_ingest(const Options& o, OutputDir& out) {
  std::map<std::string, std::int64_t> dropped;
  std::int64_t total = 0;
  const auto chants = load(o, &dropped, &total);
  {
    auto f = out.open("chants.jsonl");
    write_chants_jsonl(f, chants);
  }
  auto f = out.open("ingest.csv");
  f << "item,count\ntotal," << total << "\nkept," << chants.size() << '\n';
  for (const auto& [k, v] : dropped) f << "dropped_" << k << ',' << v << '\n';
  std::cout << "kept " << chants.size() << " of " << total << " records\n";
}

void cmd_train(const Options& o, OutputDir& out) {
  const Method method = parse_method(o.method);
  if (!uses_model(method)) throw UsageError("train needs --method nhpylm or nhpylm-classes");
  const auto chants = load(o);
  const ExperimentConfig cfg = experiment_config(o);
  const std::uint64_t seed = o.seeds.front();
  SplitSpec spec = cfg.split;
  spec.seed = seed;
  const Split split = split_corpus(chants, spec);
  const ToneAlphabet alphabet = make_alphabet(chants, cfg.filter.encoding, cfg.interval_bound);
  auto encode_all = [&](const std::vector<Chant>& cs, std::vector<ToneSequence>& t, std::vector<int>& m) {
    for (const auto& c : cs) {
      t.push_back(alphabet.encode(c));
      m.push_back(c.mode);
    }
  };
  std::vector<ToneSequence> tr, va;
  std::vector<int> trm, vam;
  encode_all(split.train, tr, trm);
  encode_all(split.validation, va, vam);
  TrainConfig tc = cfg.train;
  tc.seed = seed;

  {
    auto f = out.open("split.csv");
    f << "record_id,part\n";
    for (const auto& [name, part] : {std::pair{"train", &split.train}, {"validation", &split.validation},
                                     {"test", &split.test}})
      for (const auto& c : *part) f << csv_field(c.record_id) << ',' << name << '\n';
  }
  auto hist = out.open("history.csv");
  write_history_header(hist);
  auto progress = [&](const SweepRecord& r) {
    if (o.verbose)
      std::cerr << "sweep " << r.sweep << " train ppl " << fmt(r.train_perplexity) << " validation ppl "
                << fmt(r.validation_perplexity) << '\n';
  };
  if (method == Method::nhpylm) {
    const TrainResult res = train(tr, va, make_model(alphabet, cfg.model), tc, progress);
    write_history(hist, seed, 0, res.history);
    auto f = out.open("model.bin");
    res.model.write(f);
    std::cout << "trained on " << tr.size() << " chants, best sweep " << res.best_sweep << ", validation perplexity "
              << fmt(res.best_validation) << '\n';
  } else {
    EnsembleConfig ec;
    ec.train = tc;
    ec.uniform_prior = cfg.uniform_prior;
    ec.full_sum = cfg.full_sum;
    ec.threads = cfg.threads;
    std::vector<ModeTrainingReport> reports;
    const ModeEnsemble ens = train_ensemble(tr, trm, va, vam, make_model(alphabet, cfg.model), ec, &reports);
    for (const auto& r : reports) write_history(hist, seed, r.mode, r.result.history);
    for (int m : ens.empty_modes()) std::cerr << "warning: mode " << m << " has no training chants\n";
    auto f = out.open("ensemble.bin");
    ens.write(f);
    std::cout << "trained " << reports.size() << " mode models on " << tr.size() << " chants\n";
  }
}

void cmd_segment(const Options& o, OutputDir& out) {
  if (o.model.empty()) throw UsageError("segment needs --model");
  const auto chants = load(o);
  const Encoding enc = parse_encoding(o.encoding);
  std::ifstream in(o.model, std::ios::binary);
  const bool ensemble = peek_magic(o.model) == "MENS";
  std::optional<ModeEnsemble> ens;
  std::optional<NhpylmModel> model;
  if (ensemble) ens = ModeEnsemble::read(in);
  else model = NhpylmModel::read(in);
  const ToneAlphabet alphabet = model_alphabet(ensemble ? ens->models.front() : *model, enc);
  int skipped = 0;
  auto f = out.open("segmentations.jsonl");
  for (const auto& [chant, tones] : encodable(chants, alphabet, skipped)) {
    SegmentationRecord r{chant->record_id, "all", chant->mode, {}, {}};
    for (ToneId t : tones) r.symbols.push_back(alphabet.symbol(t));
    r.segmentation = ensemble ? segment_with_ensemble(*ens, tones) : viterbi_segment(*model, tones);
    f << segmentation_json(o.seeds.front(), r, enc).dump() << '\n';
  }
  if (skipped) std::cerr << "skipped " << skipped << " chants with tones outside the model alphabet\n";
}

void cmd_classify(const Options& o, OutputDir& out) {
  if (o.model.empty()) throw UsageError("classify needs --model");
  if (peek_magic(o.model) != "MENS") throw UsageError("classify needs a mode ensemble (train --method nhpylm-classes)");
  const auto chants = load(o);
  const Encoding enc = parse_encoding(o.encoding);
  std::ifstream in(o.model, std::ios::binary);
  const ModeEnsemble ens = ModeEnsemble::read(in);
  const ToneAlphabet alphabet = model_alphabet(ens.models.front(), enc);
  int skipped = 0;
  std::vector<int> pred, gold;
  auto f = out.open("predictions.csv");
  write_predictions_header(f);
  int fallbacks = 0;
  for (const auto& [chant, tones] : encodable(chants, alphabet, skipped)) {
    const ModeDecision d = classify_mode(ens, tones);
    fallbacks += d.fallback;
    Prediction p{chant->record_id, chant->mode, d.mode, d.scores};
    write_prediction(f, o.seeds.front(), "bayes", p);
    pred.push_back(d.mode);
    gold.push_back(chant->mode);
  }
  if (skipped) std::cerr << "skipped " << skipped << " chants with tones outside the model alphabet\n";
  if (fallbacks) std::cerr << "warning: " << fallbacks << " chants scored -inf under every mode\n";
  auto m = out.open("metrics.csv");
  m << "classifier,n,micro_f1,accuracy\n";
  m << "bayes," << pred.size() << ',' << fmt(micro_f1(pred, gold)) << ',' << fmt(accuracy(pred, gold)) << '\n';
}

void cmd_evaluate(const Options& o, OutputDir& out) {
  const Method method = parse_method(o.method);
  const auto chants = load(o);
  const ExperimentConfig cfg = experiment_config(o);

  auto metrics = out.open("metrics.csv");
  auto preds = out.open("predictions.csv");
  std::optional<std::ofstream> segs, hist;
  if (method != Method::classical && method != Method::overlap17) segs = out.open("segmentations.jsonl");
  if (uses_model(method)) {
    hist = out.open("history.csv");
    write_history_header(*hist);
  }
  metrics << "method,genre,encoding,source,seed,n_train,n_validation,n_test,vocabulary,sweeps,micro_f1,accuracy,"
             "internal_f1,test_perplexity\n";
  write_predictions_header(preds);

  std::vector<double> f1s, accs, internal, ppl;
  std::optional<SeedOutcome> first;
  for (std::uint64_t seed : o.seeds) {
    SeedOutcome r = run_experiment(chants, method, cfg, seed);
    metrics << o.method << ',' << o.genre << ',' << o.encoding << ',' << csv_field(o.source) << ',' << seed << ','
            << r.n_train << ',' << r.n_validation << ',' << r.n_test << ',' << r.vocabulary_size << ',' << r.sweeps
            << ',' << fmt(r.micro_f1) << ',' << fmt(r.accuracy) << ',' << fmt(r.internal_f1) << ','
            << fmt(r.test_perplexity) << '\n';
    for (const auto& p : r.predictions) write_prediction(preds, seed, "svm", p);
    for (const auto& p : r.internal_predictions) write_prediction(preds, seed, "bayes", p);
    if (segs)
      for (const auto& s : r.segmentations) *segs << segmentation_json(seed, s, r.encoding).dump() << '\n';
    if (hist) write_history(*hist, seed, 0, r.history);
    for (int m : r.empty_modes) std::cerr << "warning: seed " << seed << ": mode " << m << " has no training chants\n";
    f1s.push_back(r.micro_f1);
    accs.push_back(r.accuracy);
    internal.push_back(r.internal_f1);
    ppl.push_back(r.test_perplexity);
    std::cout << "seed " << seed << ": micro-F1 " << fmt(r.micro_f1);
    if (!std::isnan(r.internal_f1)) std::cout << ", internal micro-F1 " << fmt(r.internal_f1);
    if (!std::isnan(r.test_perplexity)) std::cout << ", test perplexity " << fmt(r.test_perplexity);
    std::cout << '\n';
    if (!first) first = std::move(r);
  }
  const Summary f = summarize(f1s), a = summarize(accs), in = summarize(internal), p = summarize(ppl);
  for (auto [label, pick] : {std::pair{"mean", 0}, {"sd", 1}}) {
    auto v = [&](const Summary& s) { return fmt(pick ? s.sd : s.mean); };
    metrics << o.method << ',' << o.genre << ',' << o.encoding << ',' << csv_field(o.source) << ',' << label
            << ",,,,,," << v(f) << ',' << v(a) << ',' << v(in) << ',' << v(p) << '\n';
  }
  std::cout << "mean micro-F1 " << fmt(f.mean) << " (sd " << fmt(f.sd) << ")\n";

  if (segs) {
    auto c = out.open("curves.csv");
    bool header = true;
    for (const auto& curve : training_curves(*first, cfg.bins, uniqueness_metric(o))) {
      write_curve_csv(c, curve, header);
      header = false;
    }
  }
}

void cmd_analyze(const Options& o, OutputDir& out) {
  if (o.segmentations.empty() && o.pairs.empty()) throw UsageError("analyze needs --segmentations or --pairs");
  if (!o.segmentations.empty()) {
    std::ifstream in(o.segmentations);
    if (!in) throw IoError("cannot open " + o.segmentations);
    std::vector<SegmentationRecord> records;
    std::optional<Encoding> enc;
    bool any_train = false;
    std::optional<std::uint64_t> seed;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
        const auto s = j.at("seed").get<std::uint64_t>();
        if (!seed) seed = s;
        if (s != *seed) continue;  // first seed only
        const Encoding e = parse_encoding(j.at("encoding").get<std::string>());
        if (enc && *enc != e) throw FormatError("mixed encodings in " + o.segmentations);
        enc = e;
        SegmentationRecord r;
        r.record_id = j.at("record_id").get<std::string>();
        r.part = j.at("part").get<std::string>();
        r.mode = j.at("mode").get<int>();
        r.symbols = j.at("tones").get<std::vector<std::string>>();
        r.segmentation.lengths = j.at("lengths").get<std::vector<int>>();
        any_train |= r.part == "train";
        records.push_back(std::move(r));
      } catch (const json::exception& e) {
        throw FormatError(o.segmentations + ": " + e.what());
      }
    }
    if (records.empty()) throw EmptyInput("no segmentations in " + o.segmentations);
    const auto chants = to_segmented(records, *enc, any_train ? "train" : "");
    auto c = out.open("curves.csv");
    write_curve_csv(c, positional_segment_length(chants, o.bins), true);
    write_curve_csv(c, modal_uniqueness(chants, o.bins, uniqueness_metric(o)), false);
  }
  if (!o.pairs.empty()) {
    std::ifstream in(o.pairs, std::ios::binary);
    if (!in) throw IoError("cannot open " + o.pairs);
    const auto rows = read_csv_rows(in);
    if (rows.empty()) throw FormatError(o.pairs + " is empty");
    const auto& head = rows.front();
    auto col = [&](const std::string& name) {
      for (std::size_t i = 0; i < head.size(); ++i)
        if (head[i] == name) return i;
      throw FormatError(o.pairs + " lacks a '" + name + "' column");
    };
    const std::size_t pc = col("perplexity"), fc = col("f1");
    std::vector<double> x, y;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      try {
        x.push_back(std::stod(rows[r].at(pc)));
        y.push_back(std::stod(rows[r].at(fc)));
      } catch (const std::exception&) {
        throw FormatError(o.pairs + ": bad number on row " + std::to_string(r + 1));
      }
    }
    const double r = pearson(x, y);
    auto f = out.open("correlation.csv");
    f << "n,pearson_r\n" << x.size() << ',' << fmt(r) << '\n';
    std::cout << "pearson r = " << fmt(r) << " over " << x.size() << " pairs\n";
  }
}

// Errors that describe bad input rather than a bug.
bool user_error(const Error& e) {
  return dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
         dynamic_cast<const EmptyInput*>(&e) || dynamic_cast<const DegenerateSplit*>(&e) ||
         dynamic_cast<const NotApplicable*>(&e) || dynamic_cast<const MissingBoundaries*>(&e) ||
         dynamic_cast<const UnknownCharacter*>(&e) || dynamic_cast<const EmptyMelody*>(&e) ||
         dynamic_cast<const AllModesImpossible*>(&e);
}

// ----------------------------------------------------------------- manifest

void write_manifest(const Options& o, const std::vector<std::string>& args, const std::string& config_text,
                    OutputDir& out) {
  {
    std::ofstream cfg(out.path() / "config.ini", std::ios::binary);
    cfg << config_text;
  }
  json m;
  m["program"] = "chantseg";
  m["version"] = kVersion;
  m["command"] = o.command;
  m["argv"] = args;
  m["seeds"] = o.seeds;
  m["config_file"] = "config.ini";
  m["rerun"] = "chantseg " + o.command + " --config " + (out.path() / "config.ini").string();
  json inputs = json::array();
  for (const auto* p : {&o.corpus, &o.model, &o.segmentations, &o.pairs})
    if (!p->empty()) inputs.push_back({{"path", *p}, {"sha256", sha256_file(*p)}});
  m["inputs"] = inputs;
  json outputs = json::array();
  for (const auto& name : out.files()) {
    const auto p = (out.path() / name).string();
    outputs.push_back({{"path", name}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
  }
  outputs.push_back({{"path", "config.ini"}, {"sha256", sha256_file((out.path() / "config.ini").string())}});
  m["outputs"] = outputs;
  std::ostringstream eigen;
  eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
  m["versions"] = {{"compiler", __VERSION__}, {"eigen", eigen.str()}, {"cli11", CLI11_VERSION},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  std::ofstream f(out.path() / "manifest.json", std::ios::binary);
  f << m.dump(2) << '\n';
}

void add_options(CLI::App& app, Options& o) {
  app.add_option("command", o.command, "ingest | train | segment | classify | evaluate | analyze")
      ->required()
      ->check(CLI::IsMember({"ingest", "train", "segment", "classify", "evaluate", "analyze"}));
  app.add_option("--corpus", o.corpus, "chant CSV or JSON-lines file from ingest");
  app.add_option("--genre", o.genre)->check(CLI::IsMember({"antiphon", "responsory"}))->capture_default_str();
  app.add_option("--encoding", o.encoding)->check(CLI::IsMember({"pitch", "interval"}))->capture_default_str();
  app.add_option("--source", o.source, "keep sources whose id starts with this");
  app.add_option("--method", o.method)
      ->check(CLI::IsMember({"nhpylm", "nhpylm-classes", "ngram4", "syllables", "words", "classical", "overlap17"}))
      ->capture_default_str();
  app.add_option("--seeds", o.seeds, "one run per seed")->capture_default_str()->expected(1, -1);
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_flag("--group-by-cantus-id", o.group_by_cantus_id, "keep chants sharing a cantus id in one split part");
  app.add_option("--max-sweeps", o.max_sweeps)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--patience", o.patience)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--init-cut-probability", o.init_cut_probability)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  app.add_option("--max-segment-length", o.max_segment_length)->check(CLI::Range(1, 7))->capture_default_str();
  app.add_option("--max-tone-depth", o.max_tone_depth)->check(CLI::Range(0, 32))->capture_default_str();
  app.add_option("--threads", o.threads, "parallel mode models")->check(CLI::Range(1, 8))->capture_default_str();
  app.add_flag("--uniform-prior", o.uniform_prior, "uniform mode prior instead of training frequencies");
  app.add_flag("--full-sum", o.full_sum, "score modes by summing over segmentations");
  app.add_option("--train-fraction", o.train_fraction)->capture_default_str();
  app.add_option("--validation-fraction", o.validation_fraction, "share of the training part held out")
      ->capture_default_str();
  app.add_option("--vocab-cap", o.vocab_cap)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--svm-c", o.svm_c)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--interval-bound", o.interval_bound)->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--bins", o.bins)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--uniqueness", o.uniqueness)
      ->check(CLI::IsMember({"max-fraction", "inverse-perplexity"}))
      ->capture_default_str();
  app.add_option("--model", o.model, "model or ensemble file (segment, classify)");
  app.add_option("--segmentations", o.segmentations, "segmentations.jsonl (analyze)");
  app.add_option("--pairs", o.pairs, "CSV with perplexity and f1 columns (analyze)");
  app.add_flag("--strict", o.strict, "reject melodies with unknown characters");
  app.add_flag("--keep-differentia", o.keep_differentia);
  app.add_flag("-v,--verbose", o.verbose);
  app.add_option("--id-column", o.columns.id)->capture_default_str();
  app.add_option("--cantus-column", o.columns.cantus_id)->capture_default_str();
  app.add_option("--mode-column", o.columns.mode)->capture_default_str();
  app.add_option("--genre-column", o.columns.genre)->capture_default_str();
  app.add_option("--volpiano-column", o.columns.volpiano)->capture_default_str();
  app.add_option("--source-column", o.columns.source)->capture_default_str();
  app.add_option("--complete-column", o.columns.complete, "optional completeness flag column");
  app.set_config("--config", "", "INI or TOML file of option values");
}

}  // namespace

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Unsupervised chant segmentation and mode classification", "chantseg"};
  Options o;
  add_options(app, o);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    OutputDir out(o.out);
    if (o.command == "ingest") cmd_ingest(o, out);
    else if (o.command == "train") cmd_train(o, out);
    else if (o.command == "segment") cmd_segment(o, out);
    else if (o.command == "classify") cmd_classify(o, out);
    else if (o.command == "evaluate") cmd_evaluate(o, out);
    else cmd_analyze(o, out);
    write_manifest(o, args, app.config_to_str(true, false), out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const Error& e) {
    std::cerr << (user_error(e) ? "error: " : "internal error: ") << e.what() << '\n';
    return user_error(e) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace chantseg::cli

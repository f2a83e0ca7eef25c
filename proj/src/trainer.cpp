#include "chantseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace chantseg {

void validate(const TrainConfig& config) {
  if (config.max_sweeps < 1) throw Error("max_sweeps must be >= 1");
  if (config.patience < 1) throw Error("patience must be >= 1");
  if (config.resample_every < 1 || config.evaluate_every < 1)
    throw Error("resample/evaluate cadence must be >= 1");
  if (!(config.init_cut_probability >= 0.0 && config.init_cut_probability <= 1.0))
    throw Error("init_cut_probability must be in [0, 1]");
}

void PerplexityAccumulator::add(const NhpylmModel& model, std::span<const SegmentKey> segments) {
  SegmentKey prev = kBeginOfMelody;
  for (SegmentKey s : segments) {
    log2_sum_ += std::log2(model.segment_prob(s, prev));
    prev = s;
  }
  log2_sum_ += std::log2(model.segment_prob(kEndOfMelody, prev));
  steps_ += static_cast<std::int64_t>(segments.size()) + 1;
}

double PerplexityAccumulator::value() const {
  if (steps_ == 0) return std::numeric_limits<double>::quiet_NaN();
  return std::exp2(-log2_sum_ / static_cast<double>(steps_));
}

double perplexity(const NhpylmModel& model, std::span<const ToneSequence> chants,
                  std::span<const Segmentation> segmentations) {
  if (chants.size() != segmentations.size())
    throw Error("perplexity: chants and segmentations differ in count");
  PerplexityAccumulator acc;
  for (std::size_t i = 0; i < chants.size(); ++i)
    acc.add(model, segment_keys(chants[i], segmentations[i]));
  return acc.value();
}

double viterbi_perplexity(const NhpylmModel& model, std::span<const ToneSequence> chants,
                          std::vector<Segmentation>* decoded) {
  PerplexityAccumulator acc;
  if (decoded) decoded->clear();
  for (const ToneSequence& c : chants) {
    Segmentation seg = viterbi_segment(model, c);
    acc.add(model, segment_keys(c, seg));
    if (decoded) decoded->push_back(std::move(seg));
  }
  return acc.value();
}

Segmentation random_segmentation(std::size_t n_tones, int max_length, Rng& rng,
                                 double cut_probability) {
  Segmentation seg;
  int current = 0;
  for (std::size_t i = 0; i < n_tones; ++i) {
    ++current;
    const bool last = i + 1 == n_tones;
    if (last || current == max_length || rng.bernoulli(cut_probability)) {
      seg.lengths.push_back(current);
      current = 0;
    }
  }
  return seg;
}

TrainerState TrainerState::init_random(std::vector<ToneSequence> corpus, NhpylmModel model,
                                       Rng& rng, double cut_probability) {
  std::vector<Segmentation> segs;
  segs.reserve(corpus.size());
  for (const ToneSequence& c : corpus)
    segs.push_back(random_segmentation(c.size(), model.max_segment_length(), rng, cut_probability));
  return init_from(std::move(corpus), std::move(model), std::move(segs), rng);
}

TrainerState TrainerState::init_from(std::vector<ToneSequence> corpus, NhpylmModel model,
                                     std::vector<Segmentation> segmentations, Rng& rng) {
  if (corpus.size() != segmentations.size())
    throw Error("init_from: corpus and segmentations differ in count");
  TrainerState state(std::move(corpus), std::move(model));
  const int L = state.model_.max_segment_length();
  for (std::size_t i = 0; i < state.corpus_.size(); ++i) {
    const ToneSequence& c = state.corpus_[i];
    if (c.empty()) throw EmptyMelody("training chant has no tones");
    for (ToneId t : c)
      if (t < 0 || t >= state.model_.alphabet_size()) throw Error("tone outside the model alphabet");
    const std::string err = validate_segmentation(segmentations[i], c.size(), L);
    if (!err.empty()) throw Error("initial segmentation: " + err);
    state.traces_.push_back(state.model_.add_segmentation(segment_keys(c, segmentations[i]), rng));
  }
  state.segmentations_ = std::move(segmentations);
  return state;
}

std::vector<int> TrainerState::segment_lengths() const {
  std::vector<int> out;
  for (const Segmentation& s : segmentations_) out.insert(out.end(), s.lengths.begin(), s.lengths.end());
  return out;
}

void TrainerState::gibbs_sweep(Rng& rng, bool resample) {
  std::vector<std::size_t> order(corpus_.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  double log_prob = 0.0;
  std::int64_t steps = 0;
  for (std::size_t i : order) {
    model_.remove_segmentation(traces_[i]);
    const SegmentLattice lattice(model_, corpus_[i]);
    Segmentation seg = lattice.sample(rng);
    log_prob += lattice.path_log_prob(seg);
    steps += static_cast<std::int64_t>(seg.size()) + 1;
    traces_[i] = model_.add_segmentation(segment_keys(corpus_[i], seg), rng);
    segmentations_[i] = std::move(seg);
  }
  if (resample) {
    model_.resample_hyperparameters(rng);
    model_.resample_lambda(segment_lengths(), rng);
  }
  last_log_prob_ = log_prob;
  last_steps_ = steps;
  ++sweeps_;
}

TrainResult train(std::span<const ToneSequence> train_set, std::span<const ToneSequence> validation,
                  NhpylmModel model, const TrainConfig& config,
                  const std::function<void(const SweepRecord&)>& progress) {
  validate(config);
  Rng init_rng(config.seed, "init");
  Rng gibbs_rng(config.seed, "gibbs");
  TrainerState state = TrainerState::init_random(
      std::vector<ToneSequence>(train_set.begin(), train_set.end()), std::move(model), init_rng,
      config.init_cut_probability);

  TrainResult result{state.model(), state.segmentations(), {}, 0,
                     std::numeric_limits<double>::quiet_NaN(), false};
  int since_best = 0;
  for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
    state.gibbs_sweep(gibbs_rng, sweep % config.resample_every == 0);
    SweepRecord rec;
    rec.sweep = sweep;
    rec.train_log_prob = state.last_log_prob();
    rec.train_perplexity =
        state.last_steps() > 0
            ? std::exp2(-state.last_log_prob() / std::log(2.0) / static_cast<double>(state.last_steps()))
            : std::numeric_limits<double>::quiet_NaN();
    rec.lambda = state.model().lambda();
    rec.segment_params = state.model().segment_tree().params();
    rec.tone_params = state.model().tone_model().tree().params();

    const bool evaluate = !validation.empty() && sweep % config.evaluate_every == 0;
    if (evaluate) rec.validation_perplexity = viterbi_perplexity(state.model(), validation);

    bool improved = false;
    if (validation.empty()) {
      improved = true;  // nothing to select on: keep the latest state
    } else if (evaluate && (std::isnan(result.best_validation) ||
                            rec.validation_perplexity < result.best_validation)) {
      improved = true;
      result.best_validation = rec.validation_perplexity;
    }
    if (improved) {
      result.model = state.model();
      result.train_segmentations = state.segmentations();
      result.best_sweep = sweep;
      since_best = 0;
    } else {
      ++since_best;
    }
    result.history.push_back(rec);
    if (progress) progress(rec);
    if (!validation.empty() && since_best >= config.patience) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace chantseg

#include "chantseg/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

#include "chantseg/binary_io.hpp"
#include "chantseg/errors.hpp"
#include "chantseg/lattice.hpp"

namespace chantseg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t slot(int mode) {
  if (mode < 1 || mode > kModeCount) throw Error("mode " + std::to_string(mode) + " outside 1..8");
  return static_cast<std::size_t>(mode - 1);
}

}  // namespace

std::vector<int> ModeEnsemble::empty_modes() const {
  std::vector<int> out;
  for (int m = 1; m <= kModeCount; ++m)
    if (train_counts[slot(m)] == 0) out.push_back(m);
  return out;
}

ModeEnsemble train_ensemble(std::span<const ToneSequence> train, std::span<const int> modes,
                            std::span<const ToneSequence> validation, std::span<const int> validation_modes,
                            const NhpylmModel& prototype, const EnsembleConfig& config,
                            std::vector<ModeTrainingReport>* reports) {
  if (train.size() != modes.size() || validation.size() != validation_modes.size())
    throw Error("chant and mode counts differ");
  if (train.empty()) throw EmptyInput("no training chants");
  validate(config.train);

  std::array<std::vector<ToneSequence>, kModeCount> by_mode, val_by_mode;
  for (std::size_t i = 0; i < train.size(); ++i) by_mode[slot(modes[i])].push_back(train[i]);
  for (std::size_t i = 0; i < validation.size(); ++i) val_by_mode[slot(validation_modes[i])].push_back(validation[i]);

  ModeEnsemble ens;
  ens.full_sum = config.full_sum;
  for (int m = 1; m <= kModeCount; ++m) {
    ens.train_counts[slot(m)] = static_cast<std::int64_t>(by_mode[slot(m)].size());
    ens.models.push_back(prototype);
  }
  const auto total = static_cast<double>(train.size());
  const double occupied = static_cast<double>(kModeCount - ens.empty_modes().size());
  for (int m = 1; m <= kModeCount; ++m) {
    const auto n = static_cast<double>(ens.train_counts[slot(m)]);
    ens.prior[slot(m)] = config.uniform_prior ? (n > 0 ? 1.0 / occupied : 0.0) : n / total;
  }

  std::vector<std::optional<TrainResult>> results(kModeCount);
  std::atomic<int> next{1};
  std::mutex error_mu;
  std::exception_ptr error;
  auto worker = [&] {
    for (int m = next++; m <= kModeCount; m = next++) {
      if (by_mode[slot(m)].empty()) continue;
      try {
        TrainConfig tc = config.train;
        tc.seed = config.train.seed + static_cast<std::uint64_t>(m);
        results[slot(m)] = chantseg::train(by_mode[slot(m)], val_by_mode[slot(m)], prototype, tc);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(config.threads, 1, kModeCount);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  for (int m = 1; m <= kModeCount; ++m) {
    auto& r = results[slot(m)];
    if (!r) continue;
    ens.models[slot(m)] = r->model;
    if (reports) reports->push_back({m, std::move(*r)});
  }
  return ens;
}

ModeDecision classify_mode(const ModeEnsemble& ensemble, std::span<const ToneId> tones) {
  if (ensemble.models.size() != kModeCount) throw Error("ensemble needs eight models");
  ModeDecision d;
  std::array<Segmentation, kModeCount> paths;
  for (int m = 1; m <= kModeCount; ++m) {
    const auto s = slot(m);
    const double prior = ensemble.prior[s];
    if (prior <= 0) {
      d.scores[s] = kNegInf;
      continue;
    }
    SegmentLattice lattice(ensemble.models[s], tones);
    paths[s] = lattice.viterbi();
    const double lp = ensemble.full_sum ? lattice.log_mass() : lattice.path_log_prob(paths[s]);
    d.scores[s] = lp + std::log(prior);
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < kModeCount; ++s)
    if (d.scores[s] > d.scores[best]) best = s;
  if (d.scores[best] == kNegInf) {
    d.fallback = true;
    best = 0;
    for (std::size_t s = 1; s < kModeCount; ++s)
      if (ensemble.prior[s] > ensemble.prior[best]) best = s;
    if (paths[best].lengths.empty()) paths[best] = viterbi_segment(ensemble.models[best], tones);
  }
  d.mode = static_cast<int>(best) + 1;
  d.segmentation = std::move(paths[best]);
  return d;
}

Segmentation segment_with_ensemble(const ModeEnsemble& ensemble, std::span<const ToneId> tones) {
  return classify_mode(ensemble, tones).segmentation;
}

ModeArray posterior(const ModeArray& scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  if (top == kNegInf) throw AllModesImpossible();
  ModeArray p{};
  double z = 0;
  for (std::size_t i = 0; i < p.size(); ++i) z += p[i] = std::exp(scores[i] - top);
  for (double& v : p) v /= z;
  return p;
}

double ensemble_perplexity(const ModeEnsemble& ensemble, std::span<const ToneSequence> chants) {
  PerplexityAccumulator acc;
  for (const auto& tones : chants) {
    const ModeDecision d = classify_mode(ensemble, tones);
    const auto& model = ensemble.models[slot(d.mode)];
    acc.add(model, segment_keys(tones, d.segmentation));
  }
  return acc.value();
}

void ModeEnsemble::write(std::ostream& os) const {
  io::write_magic(os, "MENS", 1);
  io::write_pod<std::uint8_t>(os, full_sum ? 1 : 0);
  for (double p : prior) io::write_pod(os, p);
  for (auto n : train_counts) io::write_pod(os, n);
  io::write_pod<std::uint64_t>(os, models.size());
  for (const auto& m : models) m.write(os);
}

ModeEnsemble ModeEnsemble::read(std::istream& is) {
  io::expect_magic(is, "MENS", 1);
  ModeEnsemble e;
  e.full_sum = io::read_pod<std::uint8_t>(is) != 0;
  for (double& p : e.prior) p = io::read_pod<double>(is);
  for (auto& n : e.train_counts) n = io::read_pod<std::int64_t>(is);
  const auto n = io::read_pod<std::uint64_t>(is);
  if (n != kModeCount) throw FormatError("ensemble must hold eight models");
  for (std::uint64_t i = 0; i < n; ++i) e.models.push_back(NhpylmModel::read(is));
  return e;
}

}  // namespace chantseg

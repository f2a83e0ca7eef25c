#include "chantseg/nhpylm.hpp"

#include <cmath>
#include <sstream>

namespace chantseg {

namespace {

std::vector<std::string> numbered_symbols(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(std::to_string(i));
  return out;
}

void check_config(const NhpylmConfig& c) {
  if (c.max_segment_length < 1 || c.max_segment_length > kMaxPackedLength)
    throw Error("max segment length must be in 1.." + std::to_string(kMaxPackedLength));
  if (c.max_tone_depth < 0) throw Error("max tone depth must be non-negative");
  if (!(c.lambda_shape > 0.0 && c.lambda_rate > 0.0)) throw Error("lambda prior must be positive");
}

}  // namespace

NhpylmModel::NhpylmModel(std::vector<std::string> symbols, NhpylmConfig config)
    : config_(config),
      symbols_(std::move(symbols)),
      segments_(1, config.initial, config.prior),
      tones_(static_cast<int>(symbols_.size()), config.max_tone_depth, config.initial, config.prior,
             config.stop_prior_a, config.stop_prior_b),
      lambda_(config.lambda_shape / config.lambda_rate),
      cache_(std::make_unique<LengthCache>()) {
  check_config(config_);
  update_poisson();
}

NhpylmModel::NhpylmModel(int alphabet_size, NhpylmConfig config)
    : NhpylmModel(numbered_symbols(alphabet_size), config) {}

NhpylmModel::NhpylmModel(const NhpylmModel& other)
    : config_(other.config_),
      symbols_(other.symbols_),
      segments_(other.segments_),
      tones_(other.tones_),
      lambda_(other.lambda_),
      poisson_(other.poisson_),
      base_draws_(other.base_draws_),
      cache_(std::make_unique<LengthCache>()) {}

NhpylmModel& NhpylmModel::operator=(const NhpylmModel& other) {
  if (this != &other) {
    NhpylmModel tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

void NhpylmModel::set_lambda(double lambda) {
  if (!(lambda > 0.0)) throw Error("lambda must be positive");
  lambda_ = lambda;
  update_poisson();
}

void NhpylmModel::update_poisson() {
  const int L = config_.max_segment_length;
  poisson_.assign(static_cast<std::size_t>(L) + 1, 0.0);
  double z = 0.0;
  for (int k = 0; k <= L; ++k) {
    poisson_[k] = std::exp(k * std::log(lambda_) - lambda_ - std::lgamma(k + 1.0));
    z += poisson_[k];
  }
  for (double& p : poisson_) p /= z;
}

std::vector<double> NhpylmModel::length_normalizer() const { return cached_normalizer(); }

const std::vector<double>& NhpylmModel::cached_normalizer() const {
  std::lock_guard<std::mutex> lock(cache_->mu);
  const std::uint64_t v = tones_.tree().version();
  if (cache_->version != v) {
    const int L = config_.max_segment_length;
    if (config_.length_normalizer == LengthNormalizer::exact) {
      cache_->normalizer = tones_.length_marginals(L);
    } else {
      const ToneId eos = tones_.end_of_segment();
      const double q = tones_.prob(eos, {});
      std::vector<double> g(static_cast<std::size_t>(L) + 1, 0.0);
      double z = 0.0;
      for (int k = 1; k <= L; ++k) {
        g[k] = std::pow(1.0 - q, k - 1) * q;
        z += g[k];
      }
      for (int k = 1; k <= L; ++k) g[k] /= z;
      g[0] = q;
      cache_->normalizer = std::move(g);
    }
    cache_->version = v;
  }
  return cache_->normalizer;
}

double NhpylmModel::base_from(std::span<const ToneId> tones,
                              const std::vector<double>& norm) const {
  const double string = tones_.string_prob(tones);
  if (!config_.poisson_correction) return string;
  const std::size_t k = tones.size();
  return poisson_[k] * string / norm[k];
}

double NhpylmModel::segment_base_prob(std::span<const ToneId> tones) const {
  if (tones.empty()) throw Error("segments must contain at least one tone");
  if (static_cast<int>(tones.size()) > config_.max_segment_length)
    throw SegmentTooLong("segment of length " + std::to_string(tones.size()) +
                         " exceeds the cap " + std::to_string(config_.max_segment_length));
  if (!config_.poisson_correction) return tones_.string_prob(tones);
  return base_from(tones, cached_normalizer()) / (1.0 - poisson_[0]);
}

double NhpylmModel::base_measure(SegmentKey dish) const {
  if (dish == kEndOfMelody) {
    return config_.poisson_correction ? poisson_[0] : tones_.string_prob({});
  }
  if (dish == kBeginOfMelody) return 0.0;
  const auto tones = unpack_segment(dish);
  if (static_cast<int>(tones.size()) > config_.max_segment_length)
    throw SegmentTooLong("segment exceeds the length cap");
  if (!config_.poisson_correction) return tones_.string_prob(tones);
  return base_from(tones, cached_normalizer());
}

double NhpylmModel::unigram_prob(SegmentKey s, double base) const {
  return segments_.root().restaurant.predictive(s, base, segments_.params()[0]);
}

double NhpylmModel::bigram_prob(SegmentKey s, SegmentKey prev, double unigram) const {
  const auto* node = segments_.root().child(prev);
  if (!node) return unigram;
  return node->restaurant.predictive(s, unigram, segments_.params()[1]);
}

double NhpylmModel::segment_prob(SegmentKey s, SegmentKey prev) const {
  return bigram_prob(s, prev, unigram_prob(s, base_measure(s)));
}

double NhpylmModel::segmentation_log_prob(std::span<const SegmentKey> segments) const {
  double lp = 0.0;
  SegmentKey prev = kBeginOfMelody;
  for (SegmentKey s : segments) {
    lp += std::log(segment_prob(s, prev));
    prev = s;
  }
  return lp + std::log(segment_prob(kEndOfMelody, prev));
}

NhpylmModel::ChantTrace NhpylmModel::add_segmentation(std::span<const SegmentKey> segments,
                                                      Rng& rng) {
  ChantTrace trace;
  trace.seats.reserve(segments.size() + 1);
  // The length normalizer is taken from the tone model as it stood when the
  // chant was added; it is refreshed lazily before the next query.
  const std::vector<double> norm = cached_normalizer();
  auto seat = [&](SegmentKey s, SegmentKey prev) {
    double g0 = 0.0;
    if (s == kEndOfMelody) {
      g0 = base_measure(s);
    } else {
      const auto tones = unpack_segment(s);
      if (static_cast<int>(tones.size()) > config_.max_segment_length)
        throw SegmentTooLong("segment exceeds the length cap");
      g0 = base_from(tones, norm);
    }
    const SegmentKey ctx[1] = {prev};
    auto added = segments_.add_customer(ctx, 1, s, g0, rng);
    if (added.new_root_table != pyp::kNoTable && s != kEndOfMelody)
      base_draws_.emplace(added.new_root_table, tones_.add(unpack_segment(s), rng));
    trace.seats.push_back(std::move(added.trace));
  };
  SegmentKey prev = kBeginOfMelody;
  for (SegmentKey s : segments) {
    seat(s, prev);
    prev = s;
  }
  seat(kEndOfMelody, prev);
  return trace;
}

void NhpylmModel::remove_segmentation(const ChantTrace& trace) {
  for (auto it = trace.seats.rbegin(); it != trace.seats.rend(); ++it) {
    const auto removed = segments_.remove_customer(*it);
    if (removed.closed_root_table == pyp::kNoTable) continue;
    auto draw = base_draws_.find(removed.closed_root_table);
    if (draw == base_draws_.end()) continue;  // end marker tables own no tones
    tones_.remove(draw->second);
    base_draws_.erase(draw);
  }
}

void NhpylmModel::resample_hyperparameters(Rng& rng) {
  segments_.resample_hyperparameters(rng);
  tones_.resample_hyperparameters(rng);
}

void NhpylmModel::resample_lambda(std::span<const int> segment_lengths, Rng& rng) {
  double total = 0.0;
  for (int k : segment_lengths) total += k;
  const double shape = config_.lambda_shape + total;
  const double rate = config_.lambda_rate + static_cast<double>(segment_lengths.size());
  set_lambda(std::max(rng.gamma(shape, rate), 1e-8));
}

std::string NhpylmModel::check_invariants() const {
  std::string err = segments_.check_invariants();
  if (!err.empty()) return "segment tree: " + err;
  err = tones_.tree().check_invariants();
  if (!err.empty()) return "tone tree: " + err;
  std::int64_t root_tables = 0;
  for (const auto& [k, d] : segments_.root().restaurant.dishes())
    if (k != kEndOfMelody) root_tables += static_cast<std::int64_t>(d.tables.size());
  if (root_tables != static_cast<std::int64_t>(base_draws_.size()))
    return "base draws do not match root tables";
  std::int64_t tone_customers = 0;
  for (const auto& [id, traces] : base_draws_) tone_customers += static_cast<std::int64_t>(traces.size());
  if (tone_customers != tones_.tree().total_customers()) return "tone customers do not match base draws";
  return {};
}

std::string NhpylmModel::canonical_statistics() const {
  std::ostringstream os;
  os << "segments\n" << segments_.canonical_statistics() << "tones\n"
     << tones_.tree().canonical_statistics() << "lambda " << lambda_ << '\n';
  return os.str();
}

void NhpylmModel::write(std::ostream& os) const {
  io::write_magic(os, "NHPY", 1);
  io::write_pod(os, config_);
  io::write_pod<std::uint64_t>(os, symbols_.size());
  for (const auto& s : symbols_) io::write_string(os, s);
  io::write_pod(os, lambda_);
  segments_.write(os);
  tones_.write(os);
  io::write_pod<std::uint64_t>(os, base_draws_.size());
  for (const auto& [id, traces] : base_draws_) {
    io::write_pod(os, id);
    io::write_pod<std::uint64_t>(os, traces.size());
    for (const auto& t : traces) {
      io::write_pod<std::uint64_t>(os, t.context.size());
      for (ToneId c : t.context) io::write_pod(os, c);
      io::write_pod(os, t.dish);
      io::write_pod<std::int32_t>(os, t.depth);
      io::write_pod(os, t.table);
      io::write_pod<std::uint8_t>(os, t.counts_depth ? 1 : 0);
    }
  }
}

NhpylmModel NhpylmModel::read(std::istream& is) {
  io::expect_magic(is, "NHPY", 1);
  const auto config = io::read_pod<NhpylmConfig>(is);
  const auto n_symbols = io::read_pod<std::uint64_t>(is);
  if (n_symbols < 1 || n_symbols > static_cast<std::uint64_t>(kMaxAlphabetSize))
    throw FormatError("alphabet size out of range");
  std::vector<std::string> symbols;
  for (std::uint64_t i = 0; i < n_symbols; ++i) symbols.push_back(io::read_string(is));
  NhpylmModel model(std::move(symbols), config);
  model.set_lambda(io::read_pod<double>(is));
  model.segments_ = SegmentTree::read(is);
  model.tones_ = ToneModel::read(is);
  const auto n_draws = io::read_pod<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < n_draws; ++i) {
    const auto id = io::read_pod<std::uint64_t>(is);
    const auto n = io::read_pod<std::uint64_t>(is);
    std::vector<ToneModel::Trace> traces(n);
    for (auto& t : traces) {
      const auto len = io::read_pod<std::uint64_t>(is);
      if (len > 64) throw FormatError("tone trace context too long");
      t.context.resize(len);
      for (ToneId& c : t.context) c = io::read_pod<ToneId>(is);
      t.dish = io::read_pod<ToneId>(is);
      t.depth = io::read_pod<std::int32_t>(is);
      t.table = io::read_pod<std::uint64_t>(is);
      t.counts_depth = io::read_pod<std::uint8_t>(is) != 0;
    }
    model.base_draws_.emplace(id, std::move(traces));
  }
  return model;
}

}  // namespace chantseg

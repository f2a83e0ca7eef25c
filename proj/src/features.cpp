#include "chantseg/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "chantseg/errors.hpp"
#include "chantseg/random.hpp"

namespace chantseg {

namespace {

std::string join(std::span<const std::string> symbols, std::size_t begin, std::size_t len) {
  std::string out;
  for (std::size_t i = 0; i < len; ++i) {
    if (i) out += ' ';
    out += symbols[begin + i];
  }
  return out;
}

double dot(const FeatureVector& x, const Eigen::VectorXd& w) {
  double s = w(w.size() - 1);
  for (FeatureVector::InnerIterator it(x); it; ++it) s += it.value() * w(it.index());
  return s;
}

void axpy(double a, const FeatureVector& x, Eigen::VectorXd& w) {
  for (FeatureVector::InnerIterator it(x); it; ++it) w(it.index()) += a * it.value();
  w(w.size() - 1) += a;
}

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
}

}  // namespace

Document bag_of_segments(std::span<const std::string> tone_symbols, const Segmentation& seg) {
  if (static_cast<std::size_t>(seg.total_length()) != tone_symbols.size())
    throw Error("segmentation does not cover the chant");
  Document doc;
  doc.reserve(seg.size());
  std::size_t at = 0;
  for (int len : seg.lengths) {
    doc.push_back(join(tone_symbols, at, static_cast<std::size_t>(len)));
    at += static_cast<std::size_t>(len);
  }
  return doc;
}

Document overlapping_ngrams(std::span<const std::string> tone_symbols, int min_n, int max_n) {
  if (min_n < 1 || max_n < min_n) throw Error("bad n-gram range");
  Document doc;
  const std::size_t n = tone_symbols.size();
  for (int k = min_n; k <= max_n; ++k) {
    const auto len = static_cast<std::size_t>(k);
    for (std::size_t i = 0; i + len <= n; ++i) doc.push_back(join(tone_symbols, i, len));
  }
  return doc;
}

Vocabulary Vocabulary::build(std::span<const Document> train, std::size_t cap) {
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> stats;  // count, df
  for (const auto& doc : train) {
    std::set<std::string_view> seen;
    for (const auto& tok : doc) {
      auto& s = stats[tok];
      ++s.first;
      if (seen.insert(tok).second) ++s.second;
    }
  }
  std::vector<std::pair<std::string, std::pair<std::int64_t, std::int64_t>>> ranked(stats.begin(),
                                                                                      stats.end());
  // Already lexicographic, so a stable sort by count keeps ties in order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second.first > b.second.first; });
  if (ranked.size() > cap) ranked.resize(cap);

  Vocabulary v;
  v.n_docs_ = static_cast<std::int64_t>(train.size());
  for (auto& [tok, s] : ranked) {
    v.index_.emplace(tok, v.tokens_.size());
    v.tokens_.push_back(tok);
    v.counts_.push_back(s.first);
    v.df_.push_back(s.second);
  }
  return v;
}

std::optional<std::size_t> Vocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double Vocabulary::idf(std::size_t i) const {
  return std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + static_cast<double>(df_[i]))) + 1.0;
}

FeatureVector Vocabulary::weights(const Document& doc) const {
  std::map<std::size_t, double> tf;
  for (const auto& tok : doc)
    if (auto i = index(tok)) tf[*i] += 1.0;
  FeatureVector v(static_cast<Eigen::Index>(size()));
  v.reserve(static_cast<Eigen::Index>(tf.size()));
  for (const auto& [i, c] : tf) v.insertBack(static_cast<Eigen::Index>(i)) = c * idf(i);
  return v;
}

FeatureVector Vocabulary::vectorize(const Document& doc) const {
  FeatureVector v = weights(doc);
  const double norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

std::uint64_t Vocabulary::fingerprint() const {
  std::uint64_t h = 14695981039346656037ULL;
  fnv(h, &n_docs_, sizeof n_docs_);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    fnv(h, tokens_[i].data(), tokens_[i].size() + 1);
    fnv(h, &counts_[i], sizeof counts_[i]);
    fnv(h, &df_[i], sizeof df_[i]);
  }
  return h;
}

Eigen::VectorXd train_binary_svm(std::span<const FeatureVector> x, std::span<const int> y,
                                 int dimension, const SvmConfig& config, double* gap) {
  if (x.size() != y.size()) throw Error("feature and label counts differ");
  if (config.C <= 0 || config.tolerance <= 0 || config.max_epochs < 1) throw Error("bad SVM config");
  const std::size_t n = x.size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dimension + 1);
  std::vector<double> alpha(n, 0.0), qii(n);
  for (std::size_t i = 0; i < n; ++i) qii[i] = x[i].squaredNorm() + 1.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed, "svm");
  const double C = config.C;
  double last_gap = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t i : order) {
      const double yi = y[i];
      const double g = yi * dot(x[i], w) - 1.0;
      double pg = g;
      if (alpha[i] <= 0) pg = std::min(g, 0.0);
      else if (alpha[i] >= C) pg = std::max(g, 0.0);
      if (std::abs(pg) < 1e-14) continue;
      const double next = std::clamp(alpha[i] - g / qii[i], 0.0, C);
      if (next != alpha[i]) {
        axpy((next - alpha[i]) * yi, x[i], w);
        alpha[i] = next;
      }
    }
    const double ww = w.squaredNorm();
    double loss = 0, asum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      loss += std::max(0.0, 1.0 - y[i] * dot(x[i], w));
      asum += alpha[i];
    }
    const double primal = 0.5 * ww + C * loss;
    const double dual = asum - 0.5 * ww;
    last_gap = primal - dual;
    if (last_gap <= config.tolerance * std::max(1.0, primal)) break;
  }
  if (gap) *gap = last_gap;
  return w;
}

LinearClassifier LinearClassifier::train(std::span<const FeatureVector> x, std::span<const int> labels,
                                         int dimension, const SvmConfig& config) {
  if (x.size() != labels.size()) throw Error("feature and label counts differ");
  if (x.empty()) throw EmptyInput("no training vectors");
  for (const auto& v : x)
    if (v.size() != dimension) throw Error("feature dimension mismatch");

  LinearClassifier clf;
  clf.dimension_ = dimension;
  std::set<int> cls(labels.begin(), labels.end());
  clf.classes_.assign(cls.begin(), cls.end());
  clf.weights_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(clf.classes_.size()), dimension + 1);
  if (clf.classes_.size() == 1) return clf;

  std::vector<int> y(labels.size());
  for (std::size_t c = 0; c < clf.classes_.size(); ++c) {
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == clf.classes_[c] ? 1 : -1;
    SvmConfig cc = config;
    cc.seed = derive_seed(config.seed, "class" + std::to_string(clf.classes_[c]));
    clf.weights_.row(static_cast<Eigen::Index>(c)) = train_binary_svm(x, y, dimension, cc).transpose();
  }
  return clf;
}

Eigen::VectorXd LinearClassifier::scores(const FeatureVector& x) const {
  if (x.size() != dimension_) throw Error("feature dimension mismatch");
  Eigen::VectorXd s(weights_.rows());
  for (Eigen::Index c = 0; c < weights_.rows(); ++c) {
    const Eigen::VectorXd w = weights_.row(c).transpose();
    s(c) = dot(x, w);
  }
  return s;
}

int LinearClassifier::predict(const FeatureVector& x) const {
  const Eigen::VectorXd s = scores(x);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < s.size(); ++c)
    if (s(c) > s(best)) best = c;
  return classes_[static_cast<std::size_t>(best)];
}

double accuracy(std::span<const int> predicted, std::span<const int> gold) {
  if (predicted.size() != gold.size()) throw Error("prediction and gold lengths differ");
  if (gold.empty()) throw EmptyInput("no predictions to score");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hit += predicted[i] == gold[i];
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

double micro_f1(std::span<const int> predicted, std::span<const int> gold) {
  if (predicted.size() != gold.size()) throw Error("prediction and gold lengths differ");
  if (gold.empty()) throw EmptyInput("no predictions to score");
  std::set<int> classes(gold.begin(), gold.end());
  classes.insert(predicted.begin(), predicted.end());
  double tp = 0, fp = 0, fn = 0;
  for (int c : classes) {
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool p = predicted[i] == c, g = gold[i] == c;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
  }
  const double denom = 2 * tp + fp + fn;
  return denom > 0 ? 2 * tp / denom : 0.0;
}

}  // namespace chantseg

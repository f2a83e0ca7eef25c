#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "chantseg/segment.hpp"

namespace chantseg {

// A chant as a bag of string tokens (segments or n-grams).
using Document = std::vector<std::string>;
using FeatureVector = Eigen::SparseVector<double>;

// Tokens for each segment: the segment's tone symbols joined by spaces.
Document bag_of_segments(std::span<const std::string> tone_symbols, const Segmentation& seg);

// Every contiguous n-gram with min_n <= n <= max_n, with multiplicity.
Document overlapping_ngrams(std::span<const std::string> tone_symbols, int min_n = 1, int max_n = 7);

class Vocabulary {
 public:
  static constexpr std::size_t kDefaultCap = 5000;

  // Keeps the `cap` most frequent tokens by raw count; ties go to the
  // lexicographically smaller token.
  static Vocabulary build(std::span<const Document> train, std::size_t cap = kDefaultCap);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::int64_t count(std::size_t i) const { return counts_[i]; }
  std::int64_t document_frequency(std::size_t i) const { return df_[i]; }
  std::int64_t documents() const { return n_docs_; }
  std::optional<std::size_t> index(const std::string& token) const;

  // ln((1 + N) / (1 + df)) + 1
  double idf(std::size_t i) const;

  // TF-IDF with raw counts, then L2 normalisation. A document with no
  // in-vocabulary token maps to the zero vector.
  FeatureVector vectorize(const Document& doc) const;
  // Same without the final normalisation.
  FeatureVector weights(const Document& doc) const;

  // Stable digest of the fitted state.
  std::uint64_t fingerprint() const;

 private:
  std::vector<std::string> tokens_;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> df_;
  std::int64_t n_docs_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

struct SvmConfig {
  double C = 1.0;
  // Stop once the duality gap falls below tolerance * max(1, primal).
  double tolerance = 1e-4;
  int max_epochs = 2000;
  std::uint64_t seed = 0;
};

// One-vs-rest L2-regularised hinge-loss linear classifier. The bias is a
// constant feature of value 1 and is regularised with the rest.
class LinearClassifier {
 public:
  static LinearClassifier train(std::span<const FeatureVector> x, std::span<const int> labels,
                                int dimension, const SvmConfig& config = {});

  int dimension() const { return dimension_; }
  const std::vector<int>& classes() const { return classes_; }
  // Rows are classes; the last column is the bias.
  const Eigen::MatrixXd& weights() const { return weights_; }
  bool constant() const { return classes_.size() == 1; }

  Eigen::VectorXd scores(const FeatureVector& x) const;
  // Highest score; ties go to the lowest class label.
  int predict(const FeatureVector& x) const;

 private:
  int dimension_ = 0;
  std::vector<int> classes_;
  Eigen::MatrixXd weights_;
};

// Binary dual coordinate descent. Labels are +1/-1. Returns weights with
// the bias in the last entry and reports the final duality gap.
Eigen::VectorXd train_binary_svm(std::span<const FeatureVector> x, std::span<const int> y,
                                 int dimension, const SvmConfig& config, double* gap = nullptr);

// For single-label multiclass data micro-F1 equals accuracy.
double micro_f1(std::span<const int> predicted, std::span<const int> gold);
double accuracy(std::span<const int> predicted, std::span<const int> gold);

}  // namespace chantseg

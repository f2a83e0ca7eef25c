#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "chantseg/errors.hpp"
#include "chantseg/features.hpp"
#include "chantseg/random.hpp"

using namespace chantseg;

namespace {

std::vector<std::string> syms(std::string_view s) {
  std::vector<std::string> out;
  for (char c : s) out.emplace_back(1, c);
  return out;
}

}  // namespace

TEST_CASE("segments become space-joined tokens") {
  const auto doc = bag_of_segments(syms("fghg"), Segmentation{{2, 1, 1}});
  CHECK(doc == Document{"f g", "h", "g"});
  CHECK_THROWS(bag_of_segments(syms("fg"), Segmentation{{3}}));
}

TEST_CASE("overlapping n-grams count every window") {
  CHECK(overlapping_ngrams(syms("abc")).size() == 6);
  const auto two = overlapping_ngrams(syms("ab"), 1, 7);
  CHECK(two == Document{"a", "b", "a b"});
  CHECK(overlapping_ngrams(syms("abcdefghj")).size() == 9 + 8 + 7 + 6 + 5 + 4 + 3);
}

TEST_CASE("vocabulary below the cap keeps every token") {
  const std::vector<Document> docs{{"a", "b"}, {"b", "c"}};
  const auto v = Vocabulary::build(docs);
  CHECK(v.size() == 3);
  CHECK(v.tokens().front() == "b");
  CHECK(v.document_frequency(*v.index("b")) == 2);
}

TEST_CASE("vocabulary cap keeps the most frequent, ties lexicographic") {
  std::vector<Document> docs(1);
  for (int i = 0; i < 6000; ++i) {
    const std::string tok = "t" + std::to_string(i);
    const int reps = i % 3 + 1;
    for (int r = 0; r < reps; ++r) docs[0].push_back(tok);
  }
  const auto v = Vocabulary::build(docs);
  REQUIRE(v.size() == 5000);
  std::int64_t min_kept = 1 << 30;
  for (std::size_t i = 0; i < v.size(); ++i) min_kept = std::min(min_kept, v.count(i));
  for (int i = 0; i < 6000; ++i) {
    const std::string tok = "t" + std::to_string(i);
    if (!v.index(tok)) CHECK(i % 3 + 1 <= min_kept);
  }
  // Count-1 tokens compete for the last 1000 slots in lexicographic order.
  std::vector<std::string> ones;
  for (int i = 0; i < 6000; i += 3) ones.push_back("t" + std::to_string(i));
  std::sort(ones.begin(), ones.end());
  for (std::size_t k = 0; k < ones.size(); ++k) CHECK(v.index(ones[k]).has_value() == (k < 1000));

  std::vector<Document> shuffled{Document(docs[0].rbegin(), docs[0].rend())};
  CHECK(Vocabulary::build(shuffled).tokens() == v.tokens());
}

TEST_CASE("TF-IDF weights follow the smoothed formula") {
  const std::vector<Document> docs{{"x", "x", "y"}, {"x"}};
  const auto v = Vocabulary::build(docs);
  const auto ix = *v.index("x"), iy = *v.index("y");
  CHECK(v.idf(ix) == doctest::Approx(1.0));
  CHECK(v.idf(iy) == doctest::Approx(std::log(1.5) + 1.0));
  const auto w = v.weights(docs[0]);
  CHECK(w.coeff(static_cast<Eigen::Index>(ix)) == doctest::Approx(2.0));
  const auto u = v.vectorize(docs[0]);
  CHECK(u.norm() == doctest::Approx(1.0));
}

TEST_CASE("out-of-vocabulary documents map to zero, single tokens to a unit vector") {
  const std::vector<Document> docs{{"a"}, {"b"}};
  const auto v = Vocabulary::build(docs);
  CHECK(v.vectorize({"zz", "qq"}).nonZeros() == 0);
  const auto u = v.vectorize({"a"});
  CHECK(u.nonZeros() == 1);
  CHECK(u.norm() == doctest::Approx(1.0));
}

TEST_CASE("vectorize ignores token order and never mutates the vocabulary") {
  const std::vector<Document> docs{{"a", "b", "b"}, {"c", "a"}};
  const auto v = Vocabulary::build(docs);
  const auto before = v.fingerprint();
  const auto x = v.vectorize({"a", "b", "c", "b"});
  const auto y = v.vectorize({"b", "b", "c", "a", "unknown"});
  CHECK((Eigen::VectorXd(x) - Eigen::VectorXd(y)).norm() == doctest::Approx(0.0));
  CHECK(v.fingerprint() == before);
}

namespace {

struct Blobs {
  std::vector<FeatureVector> x;
  std::vector<int> y;
};

Blobs blobs(int per_class, int classes, double spread, std::uint64_t seed) {
  Rng rng(seed);
  Blobs b;
  const int dim = classes + 2;
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      FeatureVector v(dim);
      v.insert(c) = 1.0;
      v.insert(classes) = spread * (rng.uniform() - 0.5);
      v.insert(classes + 1) = spread * (rng.uniform() - 0.5);
      b.x.push_back(v);
      b.y.push_back(c + 1);
    }
  return b;
}

std::vector<int> predict_all(const LinearClassifier& clf, const std::vector<FeatureVector>& x) {
  std::vector<int> out;
  for (const auto& v : x) out.push_back(clf.predict(v));
  return out;
}

}  // namespace

TEST_CASE("separable clusters are fit perfectly") {
  const auto b = blobs(20, 4, 0.5, 1);
  const auto clf = LinearClassifier::train(b.x, b.y, 6);
  CHECK(clf.classes() == std::vector<int>{1, 2, 3, 4});
  CHECK(micro_f1(predict_all(clf, b.x), b.y) == 1.0);
}

TEST_CASE("binary solver closes the duality gap") {
  const auto b = blobs(30, 2, 3.0, 2);
  std::vector<int> y;
  for (int l : b.y) y.push_back(l == 1 ? 1 : -1);
  double gap = 1;
  SvmConfig cfg;
  const auto w = train_binary_svm(b.x, y, 4, cfg, &gap);
  CHECK(gap >= -1e-9);
  const double ww = w.squaredNorm();
  double loss = 0;
  for (std::size_t i = 0; i < b.x.size(); ++i) {
    double s = w(4);
    for (FeatureVector::InnerIterator it(b.x[i]); it; ++it) s += it.value() * w(it.index());
    loss += std::max(0.0, 1 - y[i] * s);
  }
  CHECK(gap <= cfg.tolerance * std::max(1.0, 0.5 * ww + loss));
}

TEST_CASE("classifier is deterministic and stable under duplication") {
  const auto b = blobs(15, 3, 2.5, 3);
  const auto p1 = predict_all(LinearClassifier::train(b.x, b.y, 5, {.seed = 9}), b.x);
  const auto p2 = predict_all(LinearClassifier::train(b.x, b.y, 5, {.seed = 9}), b.x);
  CHECK(p1 == p2);

  Blobs twice = b;
  twice.x.insert(twice.x.end(), b.x.begin(), b.x.end());
  twice.y.insert(twice.y.end(), b.y.begin(), b.y.end());
  const auto clf = LinearClassifier::train(twice.x, twice.y, 5);
  const auto base = predict_all(LinearClassifier::train(b.x, b.y, 5), b.x);
  CHECK(predict_all(clf, b.x) == base);
}

TEST_CASE("a single class gives a constant predictor") {
  FeatureVector v(3);
  v.insert(0) = 1;
  const std::vector<FeatureVector> x{v, v};
  const std::vector<int> y{5, 5};
  const auto clf = LinearClassifier::train(x, y, 3);
  CHECK(clf.constant());
  CHECK(clf.predict(FeatureVector(3)) == 5);
}

TEST_CASE("micro-F1 equals accuracy") {
  CHECK(micro_f1(std::vector<int>{1, 2, 3}, std::vector<int>{1, 2, 3}) == 1.0);
  CHECK(micro_f1(std::vector<int>{2, 3, 1}, std::vector<int>{1, 2, 3}) == 0.0);
  CHECK(micro_f1(std::vector<int>{1, 2, 3, 4}, std::vector<int>{1, 2, 3, 3}) == 0.75);
  CHECK_THROWS_AS(micro_f1(std::vector<int>{}, std::vector<int>{}), EmptyInput);
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> p, g;
    const auto n = 1 + rng.uniform_index(40);
    for (std::size_t i = 0; i < n; ++i) {
      p.push_back(1 + static_cast<int>(rng.uniform_index(8)));
      g.push_back(1 + static_cast<int>(rng.uniform_index(8)));
    }
    CHECK(micro_f1(p, g) == doctest::Approx(accuracy(p, g)).epsilon(1e-12));
  }
}

#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "chantseg/pyp/context_tree.hpp"
#include "chantseg/random.hpp"
#include "chantseg/segment.hpp"

namespace chantseg {

// Variable-order hierarchical Pitman-Yor model over tones inside a segment.
// Contexts never cross segment boundaries; the first tone of a segment is
// predicted from the empty context. Emits an end-of-segment marker whose id
// equals the alphabet size. The base distribution is uniform over tones plus
// the marker.
class ToneModel {
 public:
  using Tree = pyp::ContextTree<ToneId>;
  using Trace = Tree::SeatTrace;

  ToneModel(int alphabet_size, int max_depth, pyp::DepthParams init = {},
            pyp::HyperPrior prior = {}, double stop_a = 1.0, double stop_b = 1.0);

  int alphabet_size() const { return alphabet_size_; }
  ToneId end_of_segment() const { return alphabet_size_; }
  double base() const { return 1.0 / static_cast<double>(alphabet_size_ + 1); }

  // p(t | ctx) marginalised over context orders.
  double prob(ToneId t, std::span<const ToneId> ctx) const;

  // Probability of generating exactly `tones` followed by end-of-segment.
  double string_prob(std::span<const ToneId> tones) const;

  // P(k) for k = 0..max_length: probability that the model emits exactly k
  // tones and then the end-of-segment marker. Exact; computed by a forward
  // pass over an automaton of the tree's context strings.
  std::vector<double> length_marginals(int max_length) const;

  // Adds every tone of the segment and its end marker as customers.
  std::vector<Trace> add(std::span<const ToneId> tones, Rng& rng);
  void remove(const std::vector<Trace>& traces);

  void resample_hyperparameters(Rng& rng) { tree_.resample_hyperparameters(rng); }

  const Tree& tree() const { return tree_; }
  Tree& mutable_tree() { return tree_; }

  void write(std::ostream& os) const;
  static ToneModel read(std::istream& is);

 private:
  ToneModel(int alphabet_size, Tree tree) : alphabet_size_(alphabet_size), tree_(std::move(tree)) {}

  int alphabet_size_;
  Tree tree_;
};

}  // namespace chantseg

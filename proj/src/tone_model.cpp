#include "chantseg/tone_model.hpp"

#include <deque>
#include <unordered_map>

namespace chantseg {

ToneModel::ToneModel(int alphabet_size, int max_depth, pyp::DepthParams init,
                     pyp::HyperPrior prior, double stop_a, double stop_b)
    : alphabet_size_(alphabet_size), tree_(max_depth, init, prior, stop_a, stop_b) {
  if (alphabet_size < 1 || alphabet_size > kMaxAlphabetSize)
    throw Error("alphabet size must be in 1.." + std::to_string(kMaxAlphabetSize));
}

double ToneModel::prob(ToneId t, std::span<const ToneId> ctx) const {
  return tree_.mixture_predictive(ctx, t, base());
}

double ToneModel::string_prob(std::span<const ToneId> tones) const {
  double p = 1.0;
  for (std::size_t i = 0; i < tones.size(); ++i) p *= prob(tones[i], tones.first(i));
  return p * prob(end_of_segment(), tones);
}

std::vector<ToneModel::Trace> ToneModel::add(std::span<const ToneId> tones, Rng& rng) {
  std::vector<Trace> traces;
  traces.reserve(tones.size() + 1);
  for (std::size_t i = 0; i < tones.size(); ++i)
    traces.push_back(tree_.add_customer_variable(tones.first(i), tones[i], base(), rng).trace);
  traces.push_back(tree_.add_customer_variable(tones, end_of_segment(), base(), rng).trace);
  return traces;
}

void ToneModel::remove(const std::vector<Trace>& traces) {
  for (auto it = traces.rbegin(); it != traces.rend(); ++it) tree_.remove_customer(*it);
}

namespace {

using Node = ToneModel::Tree::Node;

struct DfsFrame {
  const Node* node;
  std::vector<ToneId> reading;  // context string, oldest first
  std::vector<double> p;        // p(t | this order) for every symbol
  std::vector<double> acc;      // mass accumulated from shallower orders
  double stay;
};

}  // namespace

std::vector<double> ToneModel::length_marginals(int max_length) const {
  const int symbols = alphabet_size_ + 1;
  const int depth_cap = std::min(max_length, tree_.max_depth());
  const auto& params = tree_.params();

  // Next-symbol distribution for every tree node taken as the deepest
  // matching context, plus each node's context string in reading order.
  std::vector<std::vector<double>> dist;
  std::vector<std::vector<ToneId>> strings;
  {
    std::vector<DfsFrame> stack;
    DfsFrame root{&tree_.root(), {}, std::vector<double>(symbols, base()),
                  std::vector<double>(symbols, 0.0), 1.0};
    stack.push_back(std::move(root));
    while (!stack.empty()) {
      DfsFrame f = std::move(stack.back());
      stack.pop_back();
      const auto& r = f.node->restaurant;
      const pyp::DepthParams& dp = params[static_cast<std::size_t>(f.node->depth)];
      if (!r.empty()) {
        const double denom = dp.concentration + static_cast<double>(r.customers());
        const double backoff = (dp.concentration + dp.discount * static_cast<double>(r.tables())) / denom;
        for (double& v : f.p) v *= backoff;
        for (const auto& [k, d] : r.dishes())
          f.p[k] += (static_cast<double>(d.customers) -
                     dp.discount * static_cast<double>(d.tables.size())) /
                    denom;
      }
      std::vector<double> own(symbols);
      for (int t = 0; t < symbols; ++t) own[t] = f.acc[t] + f.stay * f.p[t];
      dist.push_back(std::move(own));
      strings.push_back(f.reading);
      if (f.node->depth >= depth_cap) continue;
      const double q = tree_.stop_probability(f.node);
      for (const auto& [key, child] : f.node->children) {
        DfsFrame c;
        c.node = child.get();
        c.reading.reserve(f.reading.size() + 1);
        c.reading.push_back(key);
        c.reading.insert(c.reading.end(), f.reading.begin(), f.reading.end());
        c.p = f.p;
        c.acc.resize(symbols);
        for (int t = 0; t < symbols; ++t) c.acc[t] = f.acc[t] + f.stay * q * f.p[t];
        c.stay = f.stay * (1.0 - q);
        stack.push_back(std::move(c));
      }
    }
  }

  // Aho-Corasick automaton over the context strings. A state is the longest
  // suffix of the text that is a prefix of some context string; its output is
  // the longest suffix that is itself a tree node, which determines the
  // predictive distribution.
  const int A = alphabet_size_;
  std::vector<int> go{std::vector<int>(static_cast<std::size_t>(A), -1)};
  std::vector<int> out{-1};
  for (std::size_t id = 0; id < strings.size(); ++id) {
    int s = 0;
    for (ToneId t : strings[id]) {
      int& next = go[static_cast<std::size_t>(s) * A + t];
      if (next < 0) {
        next = static_cast<int>(out.size());
        out.push_back(-1);
        go.resize(go.size() + static_cast<std::size_t>(A), -1);
      }
      s = go[static_cast<std::size_t>(s) * A + t];
    }
    out[s] = static_cast<int>(id);
  }
  const std::size_t n_states = out.size();
  std::vector<int> fail(n_states, 0);
  std::deque<int> queue;
  for (int t = 0; t < A; ++t) {
    int& next = go[t];
    if (next < 0) {
      next = 0;
    } else {
      fail[next] = 0;
      queue.push_back(next);
    }
  }
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    if (out[s] < 0) out[s] = out[fail[s]];
    for (int t = 0; t < A; ++t) {
      int& next = go[static_cast<std::size_t>(s) * A + t];
      if (next < 0) {
        next = go[static_cast<std::size_t>(fail[s]) * A + t];
      } else {
        fail[next] = go[static_cast<std::size_t>(fail[s]) * A + t];
        queue.push_back(next);
      }
    }
  }

  std::vector<double> marginals(static_cast<std::size_t>(max_length) + 1, 0.0);
  std::vector<double> alpha(n_states, 0.0), next(n_states, 0.0);
  alpha[0] = 1.0;
  for (int k = 0; k <= max_length; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < n_states; ++s) {
      const double a = alpha[s];
      if (a == 0.0) continue;
      const std::vector<double>& d = dist[static_cast<std::size_t>(out[s])];
      marginals[k] += a * d[A];
      if (k == max_length) continue;
      const int* row = &go[s * static_cast<std::size_t>(A)];
      for (int t = 0; t < A; ++t) next[row[t]] += a * d[t];
    }
    alpha.swap(next);
  }
  return marginals;
}

void ToneModel::write(std::ostream& os) const {
  io::write_magic(os, "TONE", 1);
  io::write_pod<std::int32_t>(os, alphabet_size_);
  tree_.write(os);
}

ToneModel ToneModel::read(std::istream& is) {
  io::expect_magic(is, "TONE", 1);
  const int a = io::read_pod<std::int32_t>(is);
  if (a < 1 || a > kMaxAlphabetSize) throw FormatError("alphabet size out of range");
  return ToneModel(a, Tree::read(is));
}

}  // namespace chantseg

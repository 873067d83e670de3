#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mando/hetgraph.hpp"
#include "mando/metapath.hpp"

namespace mando {

/// Dense row-major node-feature matrix, one row per node id.
struct EmbeddingMatrix {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<float> data;

  static EmbeddingMatrix zeros(std::size_t n, std::size_t dim) {
    EmbeddingMatrix m;
    m.n = n;
    m.dim = dim;
    m.data.assign(n * dim, 0.0f);
    return m;
  }
  std::span<float> row(std::size_t i) {
    return std::span<float>(data).subspan(i * dim, dim);
  }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(data).subspan(i * dim, dim);
  }
  bool finite() const;
};

struct WalkConfig {
  int walks_per_node = 10;
  int walk_length = 80;
  double p = 1.0;  // node2vec return parameter
  double q = 1.0;  // node2vec in-out parameter
  int window = 5;
  int negatives = 5;
  int epochs = 1;
  double lr = 0.025;  // linearly decayed to lr/100 over training
  int dim = 128;
  std::uint64_t seed = 0;
};

/// Row i one-hot encodes φi against the graph's own sorted type list,
/// zero-padded to dim. Throws TooManyTypes when |A| > dim.
EmbeddingMatrix one_hot_features(const HetGraph& g, std::size_t dim = 128);

/// Same, against a caller-fixed vocabulary (for cross-graph consistency).
/// Throws UnknownType for node types outside the vocabulary.
EmbeddingMatrix one_hot_features(const HetGraph& g,
                                 const std::vector<TypeName>& vocab,
                                 std::size_t dim = 128);

/// Second-order p/q biased random walks over the graph viewed as undirected
/// and type-blind. Isolated nodes emit singleton walks.
std::vector<std::vector<NodeId>> node2vec_walks(const HetGraph& g,
                                                const WalkConfig& cfg);

/// Skip-gram with negative sampling over a walk corpus. Negatives are drawn
/// from the corpus unigram distribution raised to 3/4.
EmbeddingMatrix train_skipgram(const std::vector<std::vector<NodeId>>& corpus,
                               std::size_t n_nodes, const WalkConfig& cfg);

EmbeddingMatrix node2vec_embed(const HetGraph& g, const WalkConfig& cfg);

enum class LineOrder { First, Second };

/// Edge-sampling embedding. First order models direct edge affinity with a
/// single table and is the default elsewhere; Second adds a context table.
EmbeddingMatrix line_embed(const HetGraph& g, LineOrder order,
                           const WalkConfig& cfg);

/// Walks whose node types follow the most frequent catalog paths (top_k by
/// instance count, ties broken by catalog order). Patterns with a3 = a1
/// cycle; others truncate after one traversal. A missing typed successor
/// truncates the walk.
std::vector<std::vector<NodeId>> metapath2vec_walks(
    const HetGraph& g, const MetapathCatalog& catalog, const WalkConfig& cfg,
    int top_k = 8);

EmbeddingMatrix metapath2vec_embed(const HetGraph& g,
                                   const MetapathCatalog& catalog,
                                   const WalkConfig& cfg, int top_k = 8);

/// Binary feature file: "MNDE", version u32, n u64, dim u64, then n*dim
/// float32, everything little-endian.
void write_features(const EmbeddingMatrix& m, const std::string& path);
EmbeddingMatrix read_features(const std::string& path);

namespace sgns {

template <typename T>
T sigmoid(T x) {
  if (x > T(30)) return T(1);
  if (x < T(-30)) return T(0);
  return T(1) / (T(1) + std::exp(-x));
}

/// One pair's negative-sampling loss term. Adds d(loss)/d(u) into gu and
/// d(loss)/d(v) into gv; positive pairs use -log σ(u·v), negative pairs
/// -log σ(-u·v). Shared by the trainer and its finite-difference checks.
template <typename T>
T pair_grad(std::span<const T> u, std::span<const T> v, bool positive,
            std::span<T> gu, std::span<T> gv) {
  T dot = 0;
  for (std::size_t k = 0; k < u.size(); ++k) dot += u[k] * v[k];
  const T s = sigmoid(dot);
  const T coeff = s - (positive ? T(1) : T(0));
  for (std::size_t k = 0; k < u.size(); ++k) {
    gu[k] += coeff * v[k];
    gv[k] += coeff * u[k];
  }
  const T safe = positive ? std::max(s, T(1e-12)) : std::max(T(1) - s, T(1e-12));
  return -std::log(safe);
}

}  // namespace sgns

}  // namespace mando

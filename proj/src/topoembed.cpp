#include "mando/topoembed.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "mando/error.hpp"
#include "mando/rng.hpp"

namespace mando {

namespace {

bool all_finite(std::span<const float> v) {
  for (float x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

/// Undirected, type-blind adjacency with one entry per incident edge.
/// Neighbor lists are sorted so membership checks can bisect.
struct UndirectedView {
  std::vector<std::vector<NodeId>> adj;

  explicit UndirectedView(const HetGraph& g) : adj(g.node_count()) {
    for (const HetEdge& e : g.edges()) {
      adj[e.src].push_back(e.dst);
      if (e.dst != e.src) adj[e.dst].push_back(e.src);
    }
    for (auto& v : adj) std::sort(v.begin(), v.end());
  }

  bool connected(NodeId a, NodeId b) const {
    const auto& v = adj[a];
    return std::binary_search(v.begin(), v.end(), b);
  }
};

NodeId weighted_pick(const std::vector<double>& cumulative, Rng& rng,
                     const std::vector<NodeId>& items) {
  const double total = cumulative.back();
  const double r = rng.next_double() * total;
  const auto it =
      std::upper_bound(cumulative.begin(), cumulative.end(), r);
  std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
  if (idx >= items.size()) idx = items.size() - 1;
  return items[idx];
}

/// Degree^0.75 noise distribution over corpus occurrences.
struct NoiseTable {
  std::vector<double> cumulative;
  std::vector<NodeId> nodes;

  NoiseTable(const std::vector<std::vector<NodeId>>& corpus,
             std::size_t n_nodes) {
    std::vector<double> counts(n_nodes, 0.0);
    for (const auto& walk : corpus)
      for (NodeId n : walk) counts[n] += 1.0;
    double run = 0.0;
    for (NodeId n = 0; n < n_nodes; ++n) {
      const double w = counts[n] > 0 ? std::pow(counts[n], 0.75) : 0.0;
      if (w <= 0) continue;
      run += w;
      cumulative.push_back(run);
      nodes.push_back(n);
    }
    if (nodes.empty()) {  // degenerate corpus: uniform over all ids
      for (NodeId n = 0; n < n_nodes; ++n) {
        run += 1.0;
        cumulative.push_back(run);
        nodes.push_back(n);
      }
    }
  }

  NodeId draw(Rng& rng) const { return weighted_pick(cumulative, rng, nodes); }
};

EmbeddingMatrix init_in_vectors(std::size_t n, int dim, std::uint64_t seed) {
  EmbeddingMatrix m = EmbeddingMatrix::zeros(n, static_cast<std::size_t>(dim));
  const double half = 0.5 / dim;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::substream(seed, 0x1717, i);
    for (float& x : m.row(i))
      x = static_cast<float>(rng.next_double(-half, half));
  }
  return m;
}

void check_epoch_finite(const EmbeddingMatrix& m) {
  if (!all_finite(m.data))
    raise(ErrorCode::LengthMismatch,
          "embedding became non-finite during training");
}

void append_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void append_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
std::uint32_t take_u32(const std::string& s, std::size_t& at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[at++])) << (8 * i);
  return v;
}
std::uint64_t take_u64(const std::string& s, std::size_t& at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[at++])) << (8 * i);
  return v;
}

}  // namespace

bool EmbeddingMatrix::finite() const { return all_finite(data); }

EmbeddingMatrix one_hot_features(const HetGraph& g, std::size_t dim) {
  return one_hot_features(g, g.node_types(), dim);
}

EmbeddingMatrix one_hot_features(const HetGraph& g,
                                 const std::vector<TypeName>& vocab,
                                 std::size_t dim) {
  if (vocab.size() > dim)
    raise(ErrorCode::TooManyTypes,
          std::to_string(vocab.size()) + " node types exceed feature width " +
              std::to_string(dim));
  std::unordered_map<TypeName, std::size_t, TypeNameHash> slot;
  for (std::size_t i = 0; i < vocab.size(); ++i) slot.emplace(vocab[i], i);
  EmbeddingMatrix m = EmbeddingMatrix::zeros(g.node_count(), dim);
  for (const HetNode& n : g.nodes()) {
    auto it = slot.find(n.type);
    if (it == slot.end())
      raise(ErrorCode::UnknownType,
            "node type '" + n.type.str() + "' is outside the vocabulary");
    m.row(n.id)[it->second] = 1.0f;
  }
  return m;
}

std::vector<std::vector<NodeId>> node2vec_walks(const HetGraph& g,
                                                const WalkConfig& cfg) {
  const UndirectedView view(g);
  std::vector<std::vector<NodeId>> corpus;
  corpus.reserve(g.node_count() * cfg.walks_per_node);
  std::vector<double> cumulative;

  for (NodeId start = 0; start < g.node_count(); ++start) {
    for (int w = 0; w < cfg.walks_per_node; ++w) {
      Rng rng = Rng::substream(cfg.seed, start, static_cast<std::uint64_t>(w));
      std::vector<NodeId> walk{start};
      while (static_cast<int>(walk.size()) < cfg.walk_length) {
        const NodeId cur = walk.back();
        const auto& nbrs = view.adj[cur];
        if (nbrs.empty()) break;
        if (walk.size() == 1) {
          walk.push_back(nbrs[rng.next_below(nbrs.size())]);
          continue;
        }
        const NodeId prev = walk[walk.size() - 2];
        cumulative.clear();
        double run = 0.0;
        for (NodeId x : nbrs) {
          double wgt;
          if (x == prev)
            wgt = 1.0 / cfg.p;
          else if (view.connected(x, prev))
            wgt = 1.0;
          else
            wgt = 1.0 / cfg.q;
          run += wgt;
          cumulative.push_back(run);
        }
        walk.push_back(weighted_pick(cumulative, rng, nbrs));
      }
      corpus.push_back(std::move(walk));
    }
  }
  return corpus;
}

EmbeddingMatrix train_skipgram(const std::vector<std::vector<NodeId>>& corpus,
                               std::size_t n_nodes, const WalkConfig& cfg) {
  EmbeddingMatrix in = init_in_vectors(n_nodes, cfg.dim, cfg.seed);
  EmbeddingMatrix out = EmbeddingMatrix::zeros(n_nodes, cfg.dim);
  const NoiseTable noise(corpus, n_nodes);
  Rng rng = Rng::substream(cfg.seed, 0x5349, 0x4e47);

  std::uint64_t total_pairs = 0;
  for (const auto& walk : corpus)
    for (std::size_t c = 0; c < walk.size(); ++c) {
      const std::size_t lo = c >= static_cast<std::size_t>(cfg.window)
                                 ? c - cfg.window
                                 : 0;
      const std::size_t hi = std::min(walk.size(), c + cfg.window + 1);
      total_pairs += hi - lo - 1;
    }
  total_pairs *= static_cast<std::uint64_t>(cfg.epochs);
  if (total_pairs == 0) return in;

  std::vector<float> gu(cfg.dim), gv(cfg.dim);
  std::uint64_t seen = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& walk : corpus) {
      for (std::size_t c = 0; c < walk.size(); ++c) {
        const std::size_t lo = c >= static_cast<std::size_t>(cfg.window)
                                   ? c - cfg.window
                                   : 0;
        const std::size_t hi = std::min(walk.size(), c + cfg.window + 1);
        for (std::size_t j = lo; j < hi; ++j) {
          if (j == c) continue;
          const double progress =
              static_cast<double>(seen++) / static_cast<double>(total_pairs);
          const float lr = static_cast<float>(
              cfg.lr * std::max(1.0 - progress, 0.01));
          auto center = in.row(walk[c]);

          std::fill(gu.begin(), gu.end(), 0.0f);
          std::fill(gv.begin(), gv.end(), 0.0f);
          sgns::pair_grad<float>(center, out.row(walk[j]), true, gu, gv);
          for (std::size_t k = 0; k < center.size(); ++k)
            out.row(walk[j])[k] -= lr * gv[k];

          for (int neg = 0; neg < cfg.negatives; ++neg) {
            const NodeId nid = noise.draw(rng);
            if (nid == walk[j]) continue;
            std::fill(gv.begin(), gv.end(), 0.0f);
            sgns::pair_grad<float>(center, out.row(nid), false, gu, gv);
            for (std::size_t k = 0; k < center.size(); ++k)
              out.row(nid)[k] -= lr * gv[k];
          }
          for (std::size_t k = 0; k < center.size(); ++k)
            center[k] -= lr * gu[k];
        }
      }
    }
    check_epoch_finite(in);
  }
  return in;
}

EmbeddingMatrix node2vec_embed(const HetGraph& g, const WalkConfig& cfg) {
  return train_skipgram(node2vec_walks(g, cfg), g.node_count(), cfg);
}

EmbeddingMatrix line_embed(const HetGraph& g, LineOrder order,
                           const WalkConfig& cfg) {
  const std::size_t n = g.node_count();
  EmbeddingMatrix vert = init_in_vectors(n, cfg.dim, cfg.seed);
  EmbeddingMatrix ctx = EmbeddingMatrix::zeros(n, cfg.dim);
  if (g.edge_count() == 0) return vert;

  // noise ∝ undirected degree^0.75
  std::vector<double> cumulative;
  std::vector<NodeId> nodes;
  {
    std::vector<double> deg(n, 0.0);
    for (const HetEdge& e : g.edges()) {
      deg[e.src] += 1.0;
      deg[e.dst] += 1.0;
    }
    double run = 0.0;
    for (NodeId i = 0; i < n; ++i) {
      if (deg[i] <= 0) continue;
      run += std::pow(deg[i], 0.75);
      cumulative.push_back(run);
      nodes.push_back(i);
    }
  }

  Rng rng = Rng::substream(cfg.seed, 0x4c49, 0x4e45);
  const std::uint64_t samples = static_cast<std::uint64_t>(cfg.epochs) *
                                static_cast<std::uint64_t>(cfg.walks_per_node) *
                                static_cast<std::uint64_t>(cfg.walk_length) *
                                std::max<std::uint64_t>(n, 1);
  std::vector<float> gu(cfg.dim), gv(cfg.dim);
  const std::uint64_t check_every = std::max<std::uint64_t>(samples / 10, 1);

  for (std::uint64_t s = 0; s < samples; ++s) {
    const HetEdge& e = g.edges()[rng.next_below(g.edge_count())];
    // direction-blind: flip endpoints half the time
    NodeId a = e.src, b = e.dst;
    if (rng.next_below(2)) std::swap(a, b);
    const float lr = static_cast<float>(
        cfg.lr * std::max(1.0 - static_cast<double>(s) / samples, 0.01));
    EmbeddingMatrix& target = order == LineOrder::First ? vert : ctx;

    std::fill(gu.begin(), gu.end(), 0.0f);
    std::fill(gv.begin(), gv.end(), 0.0f);
    sgns::pair_grad<float>(vert.row(a), target.row(b), true, gu, gv);
    if (order == LineOrder::First && a == b) {
      // self-loop: both endpoints share one row
      for (std::size_t k = 0; k < gu.size(); ++k)
        vert.row(a)[k] -= lr * (gu[k] + gv[k]);
    } else {
      for (std::size_t k = 0; k < gv.size(); ++k) target.row(b)[k] -= lr * gv[k];
      for (int neg = 0; neg < cfg.negatives; ++neg) {
        const NodeId nid = weighted_pick(cumulative, rng, nodes);
        if (nid == b) continue;
        std::fill(gv.begin(), gv.end(), 0.0f);
        sgns::pair_grad<float>(vert.row(a), target.row(nid), false, gu, gv);
        for (std::size_t k = 0; k < gv.size(); ++k)
          target.row(nid)[k] -= lr * gv[k];
      }
      for (std::size_t k = 0; k < gu.size(); ++k) vert.row(a)[k] -= lr * gu[k];
    }
    if ((s + 1) % check_every == 0) check_epoch_finite(vert);
  }
  return vert;
}

std::vector<std::vector<NodeId>> metapath2vec_walks(
    const HetGraph& g, const MetapathCatalog& catalog, const WalkConfig& cfg,
    int top_k) {
  // rank catalog paths by instance count, ties by catalog (lexicographic)
  // position
  std::vector<std::size_t> order(catalog.paths().size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return catalog.instance_count(a) >
                            catalog.instance_count(b);
                   });
  if (static_cast<int>(order.size()) > top_k) order.resize(top_k);

  struct Scheme {
    TypeName a1, a2, a3;
    bool cyclic;
  };
  std::vector<Scheme> schemes;
  for (std::size_t idx : order) {
    const Metapath& p = catalog.paths()[idx];
    schemes.push_back({p.a1, p.a2, p.a3, p.a3 == p.a1});
  }

  // undirected adjacency grouped by neighbor type
  std::vector<std::unordered_map<TypeName, std::vector<NodeId>, TypeNameHash>>
      adj(g.node_count());
  auto link = [&](NodeId from, NodeId to) {
    adj[from][g.node(to).type].push_back(to);
  };
  for (const HetEdge& e : g.edges()) {
    link(e.src, e.dst);
    if (e.src != e.dst) link(e.dst, e.src);
  }
  for (auto& m : adj)
    for (auto& [t, v] : m) std::sort(v.begin(), v.end());

  std::vector<std::vector<NodeId>> corpus;
  for (NodeId start = 0; start < g.node_count(); ++start) {
    for (std::size_t si = 0; si < schemes.size(); ++si) {
      const Scheme& sc = schemes[si];
      if (g.node(start).type != sc.a1) continue;
      for (int w = 0; w < cfg.walks_per_node; ++w) {
        Rng rng = Rng::substream(
            cfg.seed, hash_combine(start, si), static_cast<std::uint64_t>(w));
        std::vector<NodeId> walk{start};
        // pattern positions: cyclic schemes repeat a1,a2; linear schemes
        // visit a1,a2,a3 once
        while (static_cast<int>(walk.size()) < cfg.walk_length) {
          TypeName want;
          if (sc.cyclic) {
            want = walk.size() % 2 == 1 ? sc.a2 : sc.a1;
          } else {
            if (walk.size() == 1)
              want = sc.a2;
            else if (walk.size() == 2)
              want = sc.a3;
            else
              break;
          }
          const auto& m = adj[walk.back()];
          auto it = m.find(want);
          if (it == m.end() || it->second.empty()) break;
          walk.push_back(it->second[rng.next_below(it->second.size())]);
        }
        corpus.push_back(std::move(walk));
      }
    }
  }
  return corpus;
}

EmbeddingMatrix metapath2vec_embed(const HetGraph& g,
                                   const MetapathCatalog& catalog,
                                   const WalkConfig& cfg, int top_k) {
  return train_skipgram(metapath2vec_walks(g, catalog, cfg, top_k),
                        g.node_count(), cfg);
}

void write_features(const EmbeddingMatrix& m, const std::string& path) {
  std::string out;
  out.reserve(24 + m.data.size() * 4);
  out += "MNDE";
  append_u32(out, 1);
  append_u64(out, m.n);
  append_u64(out, m.dim);
  for (float x : m.data) append_u32(out, std::bit_cast<std::uint32_t>(x));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) raise(ErrorCode::Io, "cannot create '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) raise(ErrorCode::Io, "write failed for '" + path + "'");
}

EmbeddingMatrix read_features(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(ErrorCode::Io, "cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 24 || bytes.compare(0, 4, "MNDE") != 0)
    raise(ErrorCode::SchemaError, "'" + path + "' is not a feature file");
  std::size_t at = 4;
  const std::uint32_t version = take_u32(bytes, at);
  if (version != 1)
    raise(ErrorCode::SchemaError,
          "unsupported feature file version " + std::to_string(version));
  EmbeddingMatrix m;
  m.n = take_u64(bytes, at);
  m.dim = take_u64(bytes, at);
  if (m.n > (1ull << 32) || m.dim > (1ull << 20))
    raise(ErrorCode::SchemaError, "feature file header out of range");
  if (bytes.size() != 24 + m.n * m.dim * 4)
    raise(ErrorCode::SchemaError, "feature file size mismatch");
  m.data.resize(m.n * m.dim);
  for (float& x : m.data) x = std::bit_cast<float>(take_u32(bytes, at));
  return m;
}

}  // namespace mando

#include "mando/mgnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mando/bytes.hpp"
#include "mando/error.hpp"
#include "mando/frontend.hpp"

namespace mando {

namespace {

// Eight fixed accumulator lanes: deterministic summation order that still
// vectorizes without reassociation licenses.
template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T lane[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (std::size_t u = 0; u < 8; ++u) lane[u] += a[i + u] * b[i + u];
  T acc = ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
          ((lane[4] + lane[5]) + (lane[6] + lane[7]));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void axpy(T a, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// out = W x
template <typename T>
void matvec(const Tensor<T>& w, const T* x, T* out) {
  for (std::size_t r = 0; r < w.rows; ++r)
    out[r] = dot(w.data.data() + r * w.cols, x, w.cols);
}

// out += W^T g
template <typename T>
void matvec_t_acc(const Tensor<T>& w, const T* g, T* out) {
  for (std::size_t r = 0; r < w.rows; ++r)
    axpy(g[r], w.data.data() + r * w.cols, out, w.cols);
}

// G += g x^T
template <typename T>
void outer_acc(Tensor<T>& grad, const T* g, const T* x) {
  for (std::size_t r = 0; r < grad.rows; ++r)
    axpy(g[r], x, grad.data.data() + r * grad.cols, grad.cols);
}

template <typename T>
T leaky(T x) {
  return x > T(0) ? x : T(0.2) * x;
}

template <typename T>
T activate(T x, bool identity) {
  if (identity) return x;
  return x > T(0) ? x : std::expm1(x);  // ELU
}

template <typename T>
T activate_grad(T x, bool identity) {
  if (identity) return T(1);
  return x > T(0) ? T(1) : std::exp(x);
}

void check_config(const ModelConfig& cfg) {
  if (cfg.d_in == 0 || cfg.d_type == 0 || cfg.heads == 0 || cfg.d_head == 0 ||
      cfg.hidden == 0)
    raise(ErrorCode::ConfigError, "model dimensions must be positive");
}

template <typename T>
void allocate_params(Params<T>& p, const ModelConfig& cfg,
                     std::size_t n_types, std::size_t n_paths) {
  const std::size_t concat = cfg.heads * cfg.d_head;
  p.transforms.assign(n_types, Tensor<T>(cfg.d_type, cfg.d_in));
  p.value.assign(n_paths * cfg.heads, Tensor<T>(cfg.d_head, cfg.d_type));
  p.attn.assign(n_paths * cfg.heads, Tensor<T>(1, 2 * cfg.d_head));
  p.w1 = Tensor<T>(cfg.hidden, n_types * concat);
  p.b1 = Tensor<T>(1, cfg.hidden);
  p.w2 = Tensor<T>(2, cfg.hidden);
  p.b2 = Tensor<T>(1, 2);
}

template <typename T>
struct TwoClass {
  std::array<T, 2> probs;
  T loss;  // -log p[label], computed via log-sum-exp
  int pred;
};

template <typename T>
TwoClass<T> two_class(const std::array<T, 2>& logits, int label) {
  const T hi = std::max(logits[0], logits[1]);
  const T lse =
      hi + std::log(std::exp(logits[0] - hi) + std::exp(logits[1] - hi));
  TwoClass<T> out;
  out.probs = {std::exp(logits[0] - lse), std::exp(logits[1] - lse)};
  out.loss = lse - logits[label];
  out.pred = logits[1] > logits[0] ? 1 : 0;
  return out;
}

// h = relu(W1[:, block] m + b1); logits = W2 h + b2
template <typename T>
std::array<T, 2> head_logits(const Params<T>& p, std::size_t block,
                             std::size_t concat, const T* mrow, T* hpre,
                             T* h) {
  const std::size_t hidden = p.b1.cols;
  for (std::size_t r = 0; r < hidden; ++r) {
    hpre[r] = p.b1.at(0, r) +
              dot(p.w1.data.data() + r * p.w1.cols + block * concat, mrow,
                  concat);
    h[r] = hpre[r] > T(0) ? hpre[r] : T(0);
  }
  return {p.b2.at(0, 0) + dot(p.w2.data.data(), h, hidden),
          p.b2.at(0, 1) + dot(p.w2.data.data() + hidden, h, hidden)};
}

template <typename T>
std::array<T, 2> dense_logits(const Params<T>& p, const T* vec, T* hpre,
                              T* h) {
  const std::size_t hidden = p.b1.cols;
  for (std::size_t r = 0; r < hidden; ++r) {
    hpre[r] =
        p.b1.at(0, r) + dot(p.w1.data.data() + r * p.w1.cols, vec, p.w1.cols);
    h[r] = hpre[r] > T(0) ? hpre[r] : T(0);
  }
  return {p.b2.at(0, 0) + dot(p.w2.data.data(), h, hidden),
          p.b2.at(0, 1) + dot(p.w2.data.data() + hidden, h, hidden)};
}

}  // namespace

template <typename T>
Tensor<T> features_as(const EmbeddingMatrix& m) {
  Tensor<T> t(m.n, m.dim);
  for (std::size_t i = 0; i < m.data.size(); ++i)
    t.data[i] = static_cast<T>(m.data[i]);
  return t;
}

template <typename T>
void softmax_inplace(std::span<T> v) {
  if (v.empty()) return;
  T hi = v[0];
  for (T x : v) hi = std::max(hi, x);
  T sum = T(0);
  for (T& x : v) {
    x = std::exp(x - hi);
    sum += x;
  }
  for (T& x : v) x /= sum;
}

template <typename T>
std::size_t Params<T>::count() const {
  std::size_t n = 0;
  for_each([&](const Tensor<T>& t) { n += t.data.size(); });
  return n;
}

template <typename T>
void Params<T>::zero() {
  for_each([](Tensor<T>& t) { std::fill(t.data.begin(), t.data.end(), T(0)); });
}

template <typename T>
Model<T>::Model(const ModelConfig& cfg, std::vector<TypeName> vocab,
                const MetapathCatalog& catalog)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  check_config(cfg_);
  std::sort(vocab_.begin(), vocab_.end(), TypeNameLess{});
  vocab_.erase(std::unique(vocab_.begin(), vocab_.end()), vocab_.end());
  if (vocab_.empty())
    raise(ErrorCode::ConfigError, "model needs a non-empty type vocabulary");
  digest_ = catalog.digest();
  n_paths_ = catalog.paths().size();
  allocate_params(params_, cfg_, vocab_.size(), n_paths_);

  std::uint64_t ordinal = 0;
  auto xavier = [&](Tensor<T>& t, std::size_t fan_in, std::size_t fan_out) {
    Rng rng = Rng::substream(cfg_.seed, 0x4d4e444dULL, ordinal++);
    const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
    for (T& x : t.data) x = static_cast<T>(rng.next_double(-limit, limit));
  };
  for (auto& t : params_.transforms) xavier(t, cfg_.d_in, cfg_.d_type);
  for (auto& t : params_.value) xavier(t, cfg_.d_type, cfg_.d_head);
  for (auto& t : params_.attn) xavier(t, 2 * cfg_.d_head, 1);
  xavier(params_.w1, readout_dim(), cfg_.hidden);
  xavier(params_.w2, cfg_.hidden, 2);
  // b1, b2 stay zero
}

template <typename T>
std::size_t Model<T>::type_slot(TypeName t) const {
  auto it = std::lower_bound(vocab_.begin(), vocab_.end(), t, TypeNameLess{});
  if (it == vocab_.end() || *it != t)
    raise(ErrorCode::UnknownType,
          "node type '" + t.str() + "' is outside the model vocabulary");
  return static_cast<std::size_t>(it - vocab_.begin());
}

template <typename T>
void Model<T>::check_catalog(const MetapathCatalog& catalog) const {
  if (catalog.digest() != digest_ || catalog.paths().size() != n_paths_)
    raise(ErrorCode::CatalogMismatch,
          "metapath catalog digest does not match the model's");
}

template <typename T>
struct Model<T>::Forward {
  std::size_t n = 0;
  std::vector<std::size_t> slots;  // per node, type slot
  std::vector<std::uint32_t> div;  // per node, paths rooted at its type
  Tensor<T> ep;                    // n x d_type
  Tensor<T> m;                     // n x concat, final node embeddings

  // Per-path records for the backward pass. alpha/drop/s_pre share one
  // layout: center blocks in catalog order; within a block, one run of the
  // center's neighbor count per head; block base = off[ci] * heads.
  struct PathTrace {
    std::vector<NodeId> involved;    // sorted unique centers + neighbors
    std::vector<std::uint32_t> off;  // neighbor-count prefix sums per center
    Tensor<T> proj;                  // involved x concat, value-projected
    std::vector<T> alpha;            // softmax weights before dropout
    std::vector<T> drop;             // inverted-dropout scales, or empty
    std::vector<T> s_pre;            // scores before LeakyReLU
    Tensor<T> z;                     // centers x concat, pre-activation sums
  };
  std::vector<PathTrace> traces;
  std::vector<std::uint32_t> pos;  // node id -> index into involved
};

template <typename T>
void Model<T>::run_forward(const HetGraph& g, const MetapathCatalog& catalog,
                           const Tensor<T>& feats, const PassOptions& opts,
                           bool keep_trace, Forward& f) const {
  check_catalog(catalog);
  const std::size_t n = g.node_count();
  if (feats.rows != n || feats.cols != cfg_.d_in)
    raise(ErrorCode::LengthMismatch,
          "feature matrix shape does not match the graph and model");
  const bool dropping = opts.training && opts.dropout > 0.0;
  if (dropping && opts.rng == nullptr)
    raise(ErrorCode::ConfigError, "training with dropout needs an rng");
  if (dropping && opts.dropout >= 1.0)
    raise(ErrorCode::ConfigError, "dropout must be below 1");
  const std::size_t heads = cfg_.heads, dh = cfg_.d_head, dt = cfg_.d_type;
  const std::size_t concat = heads * dh;
  const T keep = static_cast<T>(1.0 - opts.dropout);

  f.n = n;
  f.slots.resize(n);
  f.div.resize(n);
  f.ep = Tensor<T>(n, dt);
  f.m = Tensor<T>(n, concat);
  f.traces.clear();
  if (keep_trace) f.traces.resize(n_paths_);
  f.pos.assign(n, 0);

  for (NodeId i = 0; i < n; ++i) {
    const HetNode& node = g.node(i);
    f.slots[i] = type_slot(node.type);
    f.div[i] = static_cast<std::uint32_t>(catalog.paths_for(node.type).size());
    matvec(params_.transforms[f.slots[i]], feats.row(i).data(),
           f.ep.row(i).data());
  }

  std::vector<T> scores, weights, zbuf(dh);
  std::vector<NodeId> involved;
  std::vector<std::uint32_t> off;
  for (std::size_t t = 0; t < n_paths_; ++t) {
    const std::span<const NodeId> centers = catalog.centers(t);
    if (centers.empty()) continue;

    involved.assign(centers.begin(), centers.end());
    off.assign(1, 0);
    for (NodeId c : centers) {
      const auto nb = catalog.neighbors(t, c);
      involved.insert(involved.end(), nb.begin(), nb.end());
      off.push_back(off.back() + static_cast<std::uint32_t>(nb.size()));
    }
    std::sort(involved.begin(), involved.end());
    involved.erase(std::unique(involved.begin(), involved.end()),
                   involved.end());
    for (std::size_t iv = 0; iv < involved.size(); ++iv)
      f.pos[involved[iv]] = static_cast<std::uint32_t>(iv);
    const std::uint32_t total_nb = off.back();

    Tensor<T> proj(involved.size(), concat);
    Tensor<T> ssrc(involved.size(), heads), sdst(involved.size(), heads);
    for (std::size_t iv = 0; iv < involved.size(); ++iv) {
      const T* eprow = f.ep.row(involved[iv]).data();
      for (std::size_t h = 0; h < heads; ++h) {
        T* seg = proj.row(iv).data() + h * dh;
        matvec(params_.value[t * heads + h], eprow, seg);
        const T* a = params_.attn[t * heads + h].data.data();
        ssrc.at(iv, h) = dot(a, seg, dh);
        sdst.at(iv, h) = dot(a + dh, seg, dh);
      }
    }

    auto* tr = keep_trace ? &f.traces[t] : nullptr;
    if (tr) {
      tr->alpha.resize(std::size_t(total_nb) * heads);
      tr->s_pre.resize(std::size_t(total_nb) * heads);
      if (dropping) tr->drop.resize(std::size_t(total_nb) * heads);
      tr->z = Tensor<T>(centers.size(), concat);
    }

    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
      const NodeId c = centers[ci];
      const auto nb = catalog.neighbors(t, c);
      const std::size_t deg = nb.size();
      const std::size_t civ = f.pos[c];
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t base = std::size_t(off[ci]) * heads + h * deg;
        scores.resize(deg);
        for (std::size_t k = 0; k < deg; ++k)
          scores[k] = ssrc.at(civ, h) + sdst.at(f.pos[nb[k]], h);
        if (tr)
          std::copy(scores.begin(), scores.end(), tr->s_pre.begin() + base);
        for (T& s : scores) s = leaky(s);
        softmax_inplace(std::span<T>(scores));
        if (tr)
          std::copy(scores.begin(), scores.end(), tr->alpha.begin() + base);
        weights = scores;
        if (dropping) {
          for (std::size_t k = 0; k < deg; ++k) {
            const T scale =
                static_cast<T>(opts.rng->next_double()) < keep ? T(1) / keep
                                                               : T(0);
            if (tr) tr->drop[base + k] = scale;
            weights[k] *= scale;
          }
        }
        T* zseg = tr ? tr->z.row(ci).data() + h * dh : zbuf.data();
        std::fill(zseg, zseg + dh, T(0));
        for (std::size_t k = 0; k < deg; ++k)
          axpy(weights[k], proj.row(f.pos[nb[k]]).data() + h * dh, zseg, dh);
        T* mrow = f.m.row(c).data();
        for (std::size_t d = 0; d < dh; ++d)
          mrow[h * dh + d] += activate(zseg[d], cfg_.identity_activation);
      }
    }
    if (tr) {
      tr->involved = involved;
      tr->off.assign(off.begin(), off.end());
      tr->proj = std::move(proj);
    }
  }

  for (NodeId i = 0; i < n; ++i) {
    auto row = f.m.row(i);
    if (f.div[i] > 0) {
      const T inv = T(1) / static_cast<T>(f.div[i]);
      for (T& x : row) x *= inv;
    } else {
      const auto eprow = f.ep.row(i);
      for (std::size_t k = 0; k < concat; ++k) row[k] = eprow[k % dt];
    }
  }
}

// dm holds d(loss)/d(node embedding) and is consumed; f must come from a
// keep_trace forward of the same inputs.
template <typename T>
void Model<T>::backward_from_dm(const MetapathCatalog& catalog, Forward& f,
                                const Tensor<T>& feats, Tensor<T>& dm,
                                Params<T>& grads) const {
  const std::size_t heads = cfg_.heads, dh = cfg_.d_head, dt = cfg_.d_type;
  Tensor<T> dep(f.n, dt);

  for (NodeId i = 0; i < f.n; ++i) {
    auto dmrow = dm.row(i);
    if (f.div[i] == 0) {
      auto deprow = dep.row(i);
      for (std::size_t k = 0; k < dmrow.size(); ++k)
        deprow[k % dt] += dmrow[k];
    } else {
      const T inv = T(1) / static_cast<T>(f.div[i]);
      for (T& x : dmrow) x *= inv;
    }
  }

  std::vector<T> dz(dh), dat, da, ds, dspre;
  for (std::size_t t = 0; t < n_paths_; ++t) {
    auto& tr = f.traces[t];
    if (tr.involved.empty()) continue;
    const auto centers = catalog.centers(t);
    for (std::size_t iv = 0; iv < tr.involved.size(); ++iv)
      f.pos[tr.involved[iv]] = static_cast<std::uint32_t>(iv);
    Tensor<T> dproj(tr.involved.size(), heads * dh);

    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
      const NodeId c = centers[ci];
      const auto nb = catalog.neighbors(t, c);
      const std::size_t deg = nb.size();
      const std::size_t civ = f.pos[c];
      const T* dmrow = dm.row(c).data();
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t base = std::size_t(tr.off[ci]) * heads + h * deg;
        const T* zseg = tr.z.row(ci).data() + h * dh;
        for (std::size_t d = 0; d < dh; ++d)
          dz[d] = dmrow[h * dh + d] *
                  activate_grad(zseg[d], cfg_.identity_activation);

        dat.resize(deg);
        da.resize(deg);
        for (std::size_t k = 0; k < deg; ++k) {
          const std::size_t jv = f.pos[nb[k]];
          const T* pj = tr.proj.row(jv).data() + h * dh;
          dat[k] = dot(dz.data(), pj, dh);
          const T scale = tr.drop.empty() ? T(1) : tr.drop[base + k];
          axpy(tr.alpha[base + k] * scale, dz.data(),
               dproj.row(jv).data() + h * dh, dh);
          da[k] = dat[k] * scale;
        }

        T mix = T(0);
        for (std::size_t k = 0; k < deg; ++k)
          mix += tr.alpha[base + k] * da[k];
        ds.resize(deg);
        dspre.resize(deg);
        T sum_ds = T(0);
        for (std::size_t k = 0; k < deg; ++k) {
          ds[k] = tr.alpha[base + k] * (da[k] - mix);
          dspre[k] = ds[k] * (tr.s_pre[base + k] > T(0) ? T(1) : T(0.2));
          sum_ds += dspre[k];
        }

        const T* a = params_.attn[t * heads + h].data.data();
        T* ga = grads.attn[t * heads + h].data.data();
        const T* pc = tr.proj.row(civ).data() + h * dh;
        axpy(sum_ds, pc, ga, dh);
        axpy(sum_ds, a, dproj.row(civ).data() + h * dh, dh);
        for (std::size_t k = 0; k < deg; ++k) {
          const std::size_t jv = f.pos[nb[k]];
          axpy(dspre[k], tr.proj.row(jv).data() + h * dh, ga + dh, dh);
          axpy(dspre[k], a + dh, dproj.row(jv).data() + h * dh, dh);
        }
      }
    }

    for (std::size_t iv = 0; iv < tr.involved.size(); ++iv) {
      const NodeId v = tr.involved[iv];
      for (std::size_t h = 0; h < heads; ++h) {
        const T* dp = dproj.row(iv).data() + h * dh;
        outer_acc(grads.value[t * heads + h], dp, f.ep.row(v).data());
        matvec_t_acc(params_.value[t * heads + h], dp, dep.row(v).data());
      }
    }
  }

  for (NodeId i = 0; i < f.n; ++i)
    outer_acc(grads.transforms[f.slots[i]], dep.row(i).data(),
              feats.row(i).data());
}

template <typename T>
std::vector<T> Model<T>::attention_weights(const HetGraph& g,
                                           const MetapathCatalog& catalog,
                                           const Tensor<T>& feats,
                                           std::size_t path, NodeId center,
                                           std::size_t head) const {
  check_catalog(catalog);
  if (path >= n_paths_ || head >= cfg_.heads)
    raise(ErrorCode::ConfigError, "path or head index out of range");
  const auto nb = catalog.neighbors(path, center);
  if (nb.empty())
    raise(ErrorCode::NoNeighbors, "node has no neighbors under this metapath");
  const std::size_t dh = cfg_.d_head;
  const auto& value = params_.value[path * cfg_.heads + head];
  const T* a = params_.attn[path * cfg_.heads + head].data.data();

  std::vector<T> ep(cfg_.d_type), p(dh);
  auto project = [&](NodeId v) {
    matvec(params_.transforms[type_slot(g.node(v).type)],
           feats.row(v).data(), ep.data());
    matvec(value, ep.data(), p.data());
  };
  project(center);
  const T s_src = dot(a, p.data(), dh);
  std::vector<T> scores(nb.size());
  for (std::size_t k = 0; k < nb.size(); ++k) {
    project(nb[k]);
    scores[k] = leaky(s_src + dot(a + dh, p.data(), dh));
  }
  softmax_inplace(std::span<T>(scores));
  return scores;
}

template <typename T>
std::vector<T> Model<T>::metapath_embedding(const HetGraph& g,
                                            const MetapathCatalog& catalog,
                                            const Tensor<T>& feats,
                                            std::size_t path,
                                            NodeId center) const {
  check_catalog(catalog);
  if (path >= n_paths_)
    raise(ErrorCode::ConfigError, "path index out of range");
  const std::size_t heads = cfg_.heads, dh = cfg_.d_head;
  std::vector<T> out(heads * dh, T(0));
  const auto nb = catalog.neighbors(path, center);
  if (nb.empty()) return out;
  std::vector<T> ep(cfg_.d_type), p(dh), z(dh);
  for (std::size_t h = 0; h < heads; ++h) {
    const auto weights = attention_weights(g, catalog, feats, path, center, h);
    std::fill(z.begin(), z.end(), T(0));
    for (std::size_t k = 0; k < nb.size(); ++k) {
      matvec(params_.transforms[type_slot(g.node(nb[k]).type)],
             feats.row(nb[k]).data(), ep.data());
      matvec(params_.value[path * heads + h], ep.data(), p.data());
      axpy(weights[k], p.data(), z.data(), dh);
    }
    for (std::size_t d = 0; d < dh; ++d)
      out[h * dh + d] = activate(z[d], cfg_.identity_activation);
  }
  return out;
}

template <typename T>
Tensor<T> Model<T>::node_embeddings(const HetGraph& g,
                                    const MetapathCatalog& catalog,
                                    const Tensor<T>& feats) const {
  Forward f;
  run_forward(g, catalog, feats, PassOptions{}, false, f);
  return std::move(f.m);
}

template <typename T>
std::vector<T> Model<T>::coarse_vector(const HetGraph& g,
                                       const MetapathCatalog& catalog,
                                       const Tensor<T>& feats) const {
  Forward f;
  run_forward(g, catalog, feats, PassOptions{}, false, f);
  const std::size_t concat = cfg_.heads * cfg_.d_head;
  std::vector<T> out(readout_dim(), T(0));
  if (f.n == 0) return out;
  for (NodeId i = 0; i < f.n; ++i)
    axpy(T(1), f.m.row(i).data(), out.data() + f.slots[i] * concat, concat);
  const T inv = T(1) / static_cast<T>(f.n);
  for (T& x : out) x *= inv;
  return out;
}

template <typename T>
std::array<T, 2> Model<T>::coarse_logits(const HetGraph& g,
                                         const MetapathCatalog& catalog,
                                         const Tensor<T>& feats) const {
  const std::vector<T> vec = coarse_vector(g, catalog, feats);
  std::vector<T> hpre(cfg_.hidden), h(cfg_.hidden);
  return dense_logits(params_, vec.data(), hpre.data(), h.data());
}

template <typename T>
Tensor<T> Model<T>::fine_logits(const HetGraph& g,
                                const MetapathCatalog& catalog,
                                const Tensor<T>& feats) const {
  Forward f;
  run_forward(g, catalog, feats, PassOptions{}, false, f);
  const std::size_t concat = cfg_.heads * cfg_.d_head;
  Tensor<T> out(f.n, 2);
  std::vector<T> hpre(cfg_.hidden), h(cfg_.hidden);
  for (NodeId i = 0; i < f.n; ++i) {
    const auto logits = head_logits(params_, f.slots[i], concat,
                                    f.m.row(i).data(), hpre.data(), h.data());
    out.at(i, 0) = logits[0];
    out.at(i, 1) = logits[1];
  }
  return out;
}

template <typename T>
LossStats<T> Model<T>::coarse_pass(const HetGraph& g,
                                   const MetapathCatalog& catalog,
                                   const Tensor<T>& feats, int label,
                                   const PassOptions& opts,
                                   Params<T>* grads) const {
  if (label != 0 && label != 1)
    raise(ErrorCode::ConfigError, "graph label must be 0 or 1");
  Forward f;
  run_forward(g, catalog, feats, opts, grads != nullptr, f);
  if (f.n == 0) return {};
  const std::size_t concat = cfg_.heads * cfg_.d_head;

  std::vector<T> vec(readout_dim(), T(0));
  for (NodeId i = 0; i < f.n; ++i)
    axpy(T(1), f.m.row(i).data(), vec.data() + f.slots[i] * concat, concat);
  const T inv = T(1) / static_cast<T>(f.n);
  for (T& x : vec) x *= inv;

  std::vector<T> hpre(cfg_.hidden), h(cfg_.hidden);
  const auto logits = dense_logits(params_, vec.data(), hpre.data(), h.data());
  const auto tc = two_class(logits, label);
  LossStats<T> stats{tc.loss, 1, tc.pred == label ? std::size_t(1) : 0};
  if (!grads) return stats;

  std::array<T, 2> dlog = tc.probs;
  dlog[label] -= T(1);
  grads->b2.at(0, 0) += dlog[0];
  grads->b2.at(0, 1) += dlog[1];
  axpy(dlog[0], h.data(), grads->w2.row(0).data(), cfg_.hidden);
  axpy(dlog[1], h.data(), grads->w2.row(1).data(), cfg_.hidden);
  std::vector<T> dhid(cfg_.hidden);
  for (std::size_t r = 0; r < cfg_.hidden; ++r) {
    dhid[r] = params_.w2.at(0, r) * dlog[0] + params_.w2.at(1, r) * dlog[1];
    if (hpre[r] <= T(0)) dhid[r] = T(0);
    grads->b1.at(0, r) += dhid[r];
  }
  outer_acc(grads->w1, dhid.data(), vec.data());
  std::vector<T> dvec(readout_dim(), T(0));
  matvec_t_acc(params_.w1, dhid.data(), dvec.data());

  Tensor<T> dm(f.n, concat);
  for (NodeId i = 0; i < f.n; ++i) {
    const T* src = dvec.data() + f.slots[i] * concat;
    T* dst = dm.row(i).data();
    for (std::size_t k = 0; k < concat; ++k) dst[k] = src[k] * inv;
  }
  backward_from_dm(catalog, f, feats, dm, *grads);
  return stats;
}

template <typename T>
LossStats<T> Model<T>::fine_pass(const HetGraph& g,
                                 const MetapathCatalog& catalog,
                                 const Tensor<T>& feats,
                                 std::span<const int> labels,
                                 const PassOptions& opts,
                                 Params<T>* grads) const {
  if (labels.size() != g.node_count())
    raise(ErrorCode::LengthMismatch, "need exactly one label (or -1) per node");
  std::size_t n_lab = 0;
  for (int y : labels) {
    if (y < -1 || y > 1)
      raise(ErrorCode::ConfigError, "node labels must be -1, 0, or 1");
    if (y >= 0) ++n_lab;
  }
  if (n_lab == 0) return {};

  Forward f;
  run_forward(g, catalog, feats, opts, grads != nullptr, f);
  const std::size_t concat = cfg_.heads * cfg_.d_head;
  const T invw = T(1) / static_cast<T>(n_lab);

  LossStats<T> stats{T(0), n_lab, 0};
  std::vector<T> hpre(cfg_.hidden), h(cfg_.hidden), dhid(cfg_.hidden);
  Tensor<T> dm;
  if (grads) dm = Tensor<T>(f.n, concat);
  for (NodeId i = 0; i < f.n; ++i) {
    if (labels[i] < 0) continue;
    const int y = labels[i];
    const std::size_t block = f.slots[i];
    const auto logits = head_logits(params_, block, concat, f.m.row(i).data(),
                                    hpre.data(), h.data());
    const auto tc = two_class(logits, y);
    stats.loss += tc.loss;
    if (tc.pred == y) ++stats.correct;
    if (!grads) continue;

    std::array<T, 2> dlog = {tc.probs[0] * invw, tc.probs[1] * invw};
    dlog[y] -= invw;
    grads->b2.at(0, 0) += dlog[0];
    grads->b2.at(0, 1) += dlog[1];
    axpy(dlog[0], h.data(), grads->w2.row(0).data(), cfg_.hidden);
    axpy(dlog[1], h.data(), grads->w2.row(1).data(), cfg_.hidden);
    for (std::size_t r = 0; r < cfg_.hidden; ++r) {
      dhid[r] = params_.w2.at(0, r) * dlog[0] + params_.w2.at(1, r) * dlog[1];
      if (hpre[r] <= T(0)) dhid[r] = T(0);
      grads->b1.at(0, r) += dhid[r];
      axpy(dhid[r], f.m.row(i).data(),
           grads->w1.row(r).data() + block * concat, concat);
      axpy(dhid[r], params_.w1.row(r).data() + block * concat,
           dm.row(i).data(), concat);
    }
  }
  stats.loss *= invw;
  if (grads) backward_from_dm(catalog, f, feats, dm, *grads);
  return stats;
}

OneCycleSchedule::OneCycleSchedule(double lr_start, double lr_max,
                                   std::size_t total_steps, double warmup_frac)
    : start_(lr_start), max_(lr_max), total_(total_steps ? total_steps : 1) {
  if (!(lr_start > 0.0) || !(lr_start < lr_max))
    raise(ErrorCode::ConfigError, "schedule needs 0 < lr_start < lr_max");
  if (!(warmup_frac > 0.0) || !(warmup_frac < 1.0))
    raise(ErrorCode::ConfigError, "warmup fraction must be in (0, 1)");
  const std::size_t last = total_ - 1;
  peak_ = total_ >= 2 ? std::clamp<std::size_t>(
                            static_cast<std::size_t>(
                                std::llround(warmup_frac * double(last))),
                            1, last)
                      : 0;
}

double OneCycleSchedule::lr(std::size_t step) const {
  if (total_ == 1) return start_;
  const std::size_t s = std::min(step, total_ - 1);
  if (s == peak_) return max_;
  if (s < peak_) return start_ + (max_ - start_) * double(s) / double(peak_);
  const std::size_t last = total_ - 1;
  const double x = double(s - peak_) / double(last - peak_);
  constexpr double pi = 3.14159265358979323846;
  return start_ + (max_ - start_) * 0.5 * (1.0 + std::cos(pi * x));
}

TrainConfig default_train_config(Task task) {
  TrainConfig cfg;
  if (task == Task::Coarse) {
    cfg.epochs = 50;
    cfg.lr_start = 0.0005;
    cfg.lr_max = 0.01;
  } else {
    cfg.epochs = 100;
    cfg.lr_start = 0.0002;
    cfg.lr_max = 0.005;
  }
  return cfg;
}

template <typename T>
TrainHistory train(Model<T>& model, Task task,
                   std::span<const GraphSample<T>> samples,
                   const TrainConfig& cfg) {
  TrainHistory history;
  if (cfg.epochs == 0 || samples.empty()) return history;
  for (const auto& s : samples)
    if (!s.graph || !s.paths || !s.feats)
      raise(ErrorCode::ConfigError, "training sample with null members");

  const OneCycleSchedule sched(cfg.lr_start, cfg.lr_max,
                               cfg.epochs * samples.size(), cfg.warmup_frac);
  std::vector<std::span<T>> param_spans;
  model.params().for_each(
      [&](Tensor<T>& t) { param_spans.push_back(std::span<T>(t.data)); });
  Params<T> grads = model.params();
  grads.zero();
  std::vector<std::span<T>> grad_spans;
  grads.for_each(
      [&](Tensor<T>& t) { grad_spans.push_back(std::span<T>(t.data)); });

  std::size_t total = 0;
  for (const auto& s : param_spans) total += s.size();
  std::vector<double> adam_m(total, 0.0), adam_v(total, 0.0);

  Rng shuffle_rng = Rng::substream(cfg.seed, 0x6f726472ULL, 0);
  Rng drop_rng = Rng::substream(cfg.seed, 0x64726f70ULL, 1);
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t step = 0, adam_t = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle && order.size() > 1)
      for (std::size_t i = order.size() - 1; i > 0; --i)
        std::swap(order[i], order[shuffle_rng.next_below(i + 1)]);

    double eloss = 0.0;
    std::size_t esamples = 0, ecorrect = 0;
    for (std::size_t si : order) {
      const GraphSample<T>& s = samples[si];
      grads.zero();
      PassOptions opts{true, cfg.dropout, &drop_rng};
      const LossStats<T> stats =
          task == Task::Coarse
              ? model.coarse_pass(*s.graph, *s.paths, *s.feats, s.label, opts,
                                  &grads)
              : model.fine_pass(*s.graph, *s.paths, *s.feats,
                                std::span<const int>(s.node_labels), opts,
                                &grads);
      eloss += double(stats.loss) * double(stats.samples);
      esamples += stats.samples;
      ecorrect += stats.correct;
      if (stats.samples > 0) {
        const double lr = sched.lr(step);
        ++adam_t;
        const double c1 = 1.0 - std::pow(beta1, double(adam_t));
        const double c2 = 1.0 - std::pow(beta2, double(adam_t));
        std::size_t at = 0;
        for (std::size_t gi = 0; gi < param_spans.size(); ++gi) {
          auto p = param_spans[gi];
          auto gsp = grad_spans[gi];
          for (std::size_t k = 0; k < p.size(); ++k, ++at) {
            const double g = double(gsp[k]);
            adam_m[at] = beta1 * adam_m[at] + (1.0 - beta1) * g;
            adam_v[at] = beta2 * adam_v[at] + (1.0 - beta2) * g * g;
            const double mh = adam_m[at] / c1;
            const double vh = adam_v[at] / c2;
            p[k] -= static_cast<T>(lr * mh / (std::sqrt(vh) + eps));
          }
        }
      }
      ++step;
    }
    history.loss.push_back(esamples ? eloss / double(esamples) : 0.0);
    history.accuracy.push_back(esamples ? double(ecorrect) / double(esamples)
                                        : 0.0);

    bool finite = true;
    model.params().for_each([&](Tensor<T>& t) {
      for (T x : t.data)
        if (!std::isfinite(double(x))) finite = false;
    });
    if (!finite)
      raise(ErrorCode::LengthMismatch,
            "non-finite parameters after epoch " + std::to_string(epoch));
  }
  return history;
}

namespace {
constexpr char kMagic[4] = {'M', 'N', 'D', 'M'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path) {
  std::string out;
  out.append(kMagic, 4);
  bytes::append_u32(out, kVersion);
  const ModelConfig& cfg = model.config();
  bytes::append_u32(out, static_cast<std::uint32_t>(cfg.d_in));
  bytes::append_u32(out, static_cast<std::uint32_t>(cfg.d_type));
  bytes::append_u32(out, static_cast<std::uint32_t>(cfg.heads));
  bytes::append_u32(out, static_cast<std::uint32_t>(cfg.d_head));
  bytes::append_u32(out, static_cast<std::uint32_t>(cfg.hidden));
  out.push_back(cfg.identity_activation ? 1 : 0);
  bytes::append_u64(out, cfg.seed);
  bytes::append_u64(out, model.catalog_digest());
  bytes::append_u64(out, model.path_count());
  bytes::append_u32(out, static_cast<std::uint32_t>(model.vocab().size()));
  for (TypeName t : model.vocab()) {
    const std::string& name = t.str();
    bytes::append_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
  }
  model.params().for_each([&](const Tensor<T>& t) {
    for (T x : t.data) bytes::append_f32(out, static_cast<float>(x));
  });
  write_file(path, out);
}

template <typename T>
Model<T> load_checkpoint(const std::string& path,
                         const MetapathCatalog* expect) {
  const std::string in = read_file(path);
  std::size_t at = 0;
  if (in.size() < 4 || std::memcmp(in.data(), kMagic, 4) != 0)
    raise(ErrorCode::SchemaError, "not a model checkpoint");
  at = 4;
  if (bytes::take_u32(in, at) != kVersion)
    raise(ErrorCode::SchemaError, "unsupported checkpoint version");

  Model<T> model;
  model.cfg_.d_in = bytes::take_u32(in, at);
  model.cfg_.d_type = bytes::take_u32(in, at);
  model.cfg_.heads = bytes::take_u32(in, at);
  model.cfg_.d_head = bytes::take_u32(in, at);
  model.cfg_.hidden = bytes::take_u32(in, at);
  bytes::need(in, at, 1);
  model.cfg_.identity_activation = in[at++] != 0;
  model.cfg_.seed = bytes::take_u64(in, at);
  model.digest_ = bytes::take_u64(in, at);
  model.n_paths_ = bytes::take_u64(in, at);
  check_config(model.cfg_);
  const std::size_t limit = std::size_t(1) << 20;
  if (model.cfg_.d_in > limit || model.cfg_.d_type > limit ||
      model.cfg_.heads > 1024 || model.cfg_.d_head > limit ||
      model.cfg_.hidden > limit || model.n_paths_ > limit)
    raise(ErrorCode::SchemaError, "implausible checkpoint dimensions");

  const std::uint32_t n_types = bytes::take_u32(in, at);
  if (n_types == 0 || n_types > (1u << 16))
    raise(ErrorCode::SchemaError, "implausible type vocabulary size");
  model.vocab_.reserve(n_types);
  for (std::uint32_t i = 0; i < n_types; ++i) {
    const std::uint32_t len = bytes::take_u32(in, at);
    if (len == 0 || len > (1u << 12))
      raise(ErrorCode::SchemaError, "implausible type name length");
    model.vocab_.push_back(TypeName::intern(bytes::take_str(in, at, len)));
    if (i > 0 && !(model.vocab_[i - 1].str() < model.vocab_[i].str()))
      raise(ErrorCode::SchemaError, "type vocabulary not sorted");
  }

  allocate_params(model.params_, model.cfg_, model.vocab_.size(),
                  model.n_paths_);
  model.params_.for_each([&](Tensor<T>& t) {
    for (T& x : t.data) x = static_cast<T>(bytes::take_f32(in, at));
  });
  if (at != in.size())
    raise(ErrorCode::SchemaError, "trailing bytes after checkpoint");

  if (expect && (expect->digest() != model.digest_ ||
                 expect->paths().size() != model.n_paths_))
    raise(ErrorCode::CatalogMismatch,
          "checkpoint was trained against a different metapath catalog");
  return model;
}

template struct Params<float>;
template struct Params<double>;
template class Model<float>;
template class Model<double>;
template Tensor<float> features_as<float>(const EmbeddingMatrix&);
template Tensor<double> features_as<double>(const EmbeddingMatrix&);
template void softmax_inplace<float>(std::span<float>);
template void softmax_inplace<double>(std::span<double>);
template TrainHistory train<float>(Model<float>&, Task,
                                   std::span<const GraphSample<float>>,
                                   const TrainConfig&);
template TrainHistory train<double>(Model<double>&, Task,
                                    std::span<const GraphSample<double>>,
                                    const TrainConfig&);
template void save_checkpoint<float>(const Model<float>&, const std::string&);
template void save_checkpoint<double>(const Model<double>&,
                                      const std::string&);
template Model<float> load_checkpoint<float>(const std::string&,
                                             const MetapathCatalog*);
template Model<double> load_checkpoint<double>(const std::string&,
                                               const MetapathCatalog*);

}  // namespace mando

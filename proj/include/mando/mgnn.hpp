#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mando/hetgraph.hpp"
#include "mando/metapath.hpp"
#include "mando/rng.hpp"
#include "mando/topoembed.hpp"

namespace mando {

/// Dense row-major matrix. The scalar type is float in production and double
/// in the finite-difference test harness.
template <typename T>
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T(0)) {}

  std::span<T> row(std::size_t i) {
    return std::span<T>(data).subspan(i * cols, cols);
  }
  std::span<const T> row(std::size_t i) const {
    return std::span<const T>(data).subspan(i * cols, cols);
  }
  T& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Copies node features into the scalar type used by a model.
template <typename T>
Tensor<T> features_as(const EmbeddingMatrix& m);

/// Exp-normalizes in place over the whole span, shifting by the max first.
template <typename T>
void softmax_inplace(std::span<T> v);

struct ModelConfig {
  std::size_t d_in = 128;    // input feature width
  std::size_t d_type = 128;  // per-type transformed width
  std::size_t heads = 8;
  std::size_t d_head = 32;   // per-head hidden size
  std::size_t hidden = 64;   // classifier hidden width
  bool identity_activation = false;  // replaces ELU for oracle tests
  std::uint64_t seed = 0;
};

/// All learned tensors. for_each visits them in a fixed order shared by
/// initialization, the optimizer, and the checkpoint format.
template <typename T>
struct Params {
  std::vector<Tensor<T>> transforms;  // per type slot, d_type x d_in
  std::vector<Tensor<T>> value;       // per (path, head), d_head x d_type
  std::vector<Tensor<T>> attn;        // per (path, head), 1 x 2*d_head
  Tensor<T> w1, b1, w2, b2;           // classifier

  template <typename F>
  void for_each(F&& f) {
    for (auto& t : transforms) f(t);
    for (auto& t : value) f(t);
    for (auto& t : attn) f(t);
    f(w1);
    f(b1);
    f(w2);
    f(b2);
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& t : transforms) f(t);
    for (const auto& t : value) f(t);
    for (const auto& t : attn) f(t);
    f(w1);
    f(b1);
    f(w2);
    f(b2);
  }
  std::size_t count() const;
  void zero();
};

struct PassOptions {
  bool training = false;
  double dropout = 0.0;  // applied to attention weights, inverted scaling
  Rng* rng = nullptr;    // required when training with dropout > 0
};

template <typename T>
struct LossStats {
  T loss = T(0);           // mean cross-entropy over this call's samples
  std::size_t samples = 0;
  std::size_t correct = 0;
};

/// Node-level attention network over one metapath catalog.
///
/// Per node the input feature is projected by its type's transform; per
/// (metapath, head) the projected neighbors are value-projected, scored by an
/// additive attention vector with LeakyReLU(0.2), softmax-normalized, and
/// summed; heads concatenate to heads*d_head per path; a node's embedding is
/// the mean over every catalog path rooted at its type, with unrealized paths
/// contributing zero. Nodes whose type roots no path fall back to their
/// projected feature tiled to the concat width.
///
/// The classifier reads a block vector of width |vocab| * concat with the
/// node's type block filled (fine) or the mean of those vectors (coarse).
template <typename T>
class Model {
 public:
  /// Fresh model bound to the catalog's digest. vocab is sorted and must
  /// cover every node type of the graphs the model will see.
  Model(const ModelConfig& cfg, std::vector<TypeName> vocab,
        const MetapathCatalog& catalog);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<TypeName>& vocab() const { return vocab_; }
  std::uint64_t catalog_digest() const { return digest_; }
  std::size_t path_count() const { return n_paths_; }
  std::size_t concat_dim() const { return cfg_.heads * cfg_.d_head; }
  std::size_t readout_dim() const { return vocab_.size() * concat_dim(); }
  std::size_t type_slot(TypeName t) const;  // throws UnknownType

  Params<T>& params() { return params_; }
  const Params<T>& params() const { return params_; }
  std::size_t param_count() const { return params_.count(); }

  /// Softmax weights over the center's neighbors for one (path, head), in
  /// neighbor-list order. Throws NoNeighbors when the center has none.
  std::vector<T> attention_weights(const HetGraph& g,
                                   const MetapathCatalog& catalog,
                                   const Tensor<T>& feats, std::size_t path,
                                   NodeId center, std::size_t head) const;

  /// One path's contribution for a center, heads concatenated. Zero when the
  /// center has no neighbors under the path.
  std::vector<T> metapath_embedding(const HetGraph& g,
                                    const MetapathCatalog& catalog,
                                    const Tensor<T>& feats, std::size_t path,
                                    NodeId center) const;

  /// Per-node embeddings, n x concat_dim. Evaluation mode.
  Tensor<T> node_embeddings(const HetGraph& g, const MetapathCatalog& catalog,
                            const Tensor<T>& feats) const;

  /// Mean of the per-node block vectors, length readout_dim.
  std::vector<T> coarse_vector(const HetGraph& g,
                               const MetapathCatalog& catalog,
                               const Tensor<T>& feats) const;

  std::array<T, 2> coarse_logits(const HetGraph& g,
                                 const MetapathCatalog& catalog,
                                 const Tensor<T>& feats) const;
  Tensor<T> fine_logits(const HetGraph& g, const MetapathCatalog& catalog,
                        const Tensor<T>& feats) const;

  /// Loss over one graph treated as a batch: one sample (coarse) or one per
  /// labeled node (fine, label -1 masks a node out). When grads is non-null
  /// the backward pass accumulates into it; the caller zeroes between steps.
  LossStats<T> coarse_pass(const HetGraph& g, const MetapathCatalog& catalog,
                           const Tensor<T>& feats, int label,
                           const PassOptions& opts,
                           Params<T>* grads = nullptr) const;
  LossStats<T> fine_pass(const HetGraph& g, const MetapathCatalog& catalog,
                         const Tensor<T>& feats, std::span<const int> labels,
                         const PassOptions& opts,
                         Params<T>* grads = nullptr) const;

 private:
  template <typename U>
  friend Model<U> load_checkpoint(const std::string&, const MetapathCatalog*);

  Model() = default;

  struct Forward;
  void check_catalog(const MetapathCatalog& catalog) const;
  void run_forward(const HetGraph& g, const MetapathCatalog& catalog,
                   const Tensor<T>& feats, const PassOptions& opts,
                   bool keep_trace, Forward& out) const;
  void backward_from_dm(const MetapathCatalog& catalog, Forward& fwd,
                        const Tensor<T>& feats, Tensor<T>& dm,
                        Params<T>& grads) const;

  ModelConfig cfg_;
  std::vector<TypeName> vocab_;
  std::uint64_t digest_ = 0;
  std::size_t n_paths_ = 0;
  Params<T> params_;
};

/// Warmup from lr_start to lr_max over the first ~30% of steps, then cosine
/// anneal back to lr_start. lr(0) = lr_start; the peak value is attained
/// exactly. A single-step schedule stays at lr_start.
class OneCycleSchedule {
 public:
  OneCycleSchedule(double lr_start, double lr_max, std::size_t total_steps,
                   double warmup_frac = 0.3);
  double lr(std::size_t step) const;
  std::size_t total_steps() const { return total_; }

 private:
  double start_, max_;
  std::size_t total_, peak_;
};

/// One training unit: a graph, its neighbor indexes under the model's
/// catalog, its features, and labels for whichever task is run.
template <typename T>
struct GraphSample {
  const HetGraph* graph = nullptr;
  const MetapathCatalog* paths = nullptr;
  const Tensor<T>* feats = nullptr;
  int label = 0;                 // coarse
  std::vector<int> node_labels;  // fine; -1 masks a node out
};

enum class Task { Coarse, Fine };

struct TrainConfig {
  std::size_t epochs = 50;
  double lr_start = 0.0005;
  double lr_max = 0.01;
  double warmup_frac = 0.3;
  double dropout = 0.6;
  bool shuffle = true;  // seeded reorder of samples each epoch
  std::uint64_t seed = 0;
};

/// Coarse: 50 epochs, lr 0.0005..0.01. Fine: 100 epochs, lr 0.0002..0.005.
TrainConfig default_train_config(Task task);

struct TrainHistory {
  std::vector<double> loss;      // per-epoch mean over samples
  std::vector<double> accuracy;  // per-epoch, training split
};

/// Adam (beta 0.9/0.999) under the one-cycle schedule, one step per sample
/// batch (= one graph), samples visited in seeded shuffled order each epoch.
/// Single-threaded and deterministic.
template <typename T>
TrainHistory train(Model<T>& model, Task task,
                   std::span<const GraphSample<T>> samples,
                   const TrainConfig& cfg);

/// Versioned binary checkpoint (magic "MNDM"): hyperparameters, type
/// vocabulary, catalog digest, tensors as little-endian float32.
template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path);

/// Throws SchemaError on malformed bytes and CatalogMismatch when `expect`
/// is given and its digest differs from the stored one.
template <typename T>
Model<T> load_checkpoint(const std::string& path,
                         const MetapathCatalog* expect = nullptr);

}  // namespace mando

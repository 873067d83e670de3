#include "mando.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mando/detector.hpp"
#include "mando/error.hpp"
#include "mando/frontend.hpp"
#include "mando/hetgraph.hpp"
#include "mando/metapath.hpp"
#include "mando/mgnn.hpp"

using nlohmann::json;

struct mando_bundle {
  mando::ContractGraphBundle bundle;
  mando::HetGraph fused;
  mando::MetapathCatalog catalog;
};

struct mando_dataset {
  mando::DatasetManifest manifest;
  mando::PreparedDataset ds;
};

struct mando_model {
  mando::Model<float> model;
};

struct mando_report {
  mando::DetectionReport report;
};

namespace {

thread_local std::string t_last_error;

// The first 17 status values mirror the library's error codes one to one.
static_assert(MANDO_ERR_IO == static_cast<int>(mando::ErrorCode::Io));
static_assert(MANDO_ERR_PARSE == static_cast<int>(mando::ErrorCode::ParseError));
static_assert(MANDO_ERR_CATALOG_MISMATCH ==
              static_cast<int>(mando::ErrorCode::CatalogMismatch));

template <typename F>
mando_status guarded(F&& body) {
  try {
    body();
    return MANDO_OK;
  } catch (const mando::Error& e) {
    t_last_error = e.what();
    return static_cast<mando_status>(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return MANDO_ERR_INTERNAL;
  }
}

mando_status arg_error(const char* message) {
  t_last_error = message;
  return MANDO_ERR_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

mando_bundle* make_bundle(mando::ContractGraphBundle b) {
  auto fused = mando::fuse(b);
  auto catalog = mando::MetapathCatalog::extract(fused.graph);
  return new mando_bundle{std::move(b), std::move(fused.graph),
                          std::move(catalog)};
}

mando::FeatureOptions feature_options(const char* kind, size_t dim,
                                      uint64_t seed) {
  mando::FeatureOptions fo;
  fo.kind = mando::feature_kind_from(kind == nullptr ? "one_hot" : kind);
  if (dim != 0) fo.dim = dim;
  fo.seed = seed;
  return fo;
}

/// Manifest entry paths are resolved against the manifest's directory so a
/// corpus can move as one tree.
mando::DatasetManifest load_manifest_resolved(const std::string& path) {
  namespace fs = std::filesystem;
  mando::DatasetManifest m =
      mando::DatasetManifest::parse(mando::read_file(path));
  const fs::path base = fs::path(path).parent_path();
  for (mando::ManifestEntry& e : m.entries) {
    if (!fs::path(e.path).is_absolute())
      e.path = (base / e.path).lexically_normal().string();
    for (mando::BuggyLine& bl : e.buggy_lines)
      if (!fs::path(bl.file).is_absolute())
        bl.file = (base / bl.file).lexically_normal().string();
  }
  return m;
}

void apply_model_dims(mando::ModelConfig& mc, size_t d_type, size_t heads,
                      size_t d_head, size_t hidden, uint64_t seed) {
  if (d_type != 0) mc.d_type = d_type;
  if (heads != 0) mc.heads = heads;
  if (d_head != 0) mc.d_head = d_head;
  if (hidden != 0) mc.hidden = hidden;
  mc.seed = seed;
}

void check_model_fits(const mando::Model<float>& m,
                      const mando::PreparedDataset& ds) {
  if (m.config().d_in != ds.feature_dim)
    mando::raise(mando::ErrorCode::ConfigError,
                 "checkpoint expects feature width " +
                     std::to_string(m.config().d_in) + ", dataset has " +
                     std::to_string(ds.feature_dim));
  for (mando::TypeName t : ds.vocab)
    m.type_slot(t);  // throws UnknownType on vocabulary gaps
}

json history_json(const mando::TrainHistory& h) {
  json j;
  j["loss"] = h.loss;
  j["accuracy"] = h.accuracy;
  return j;
}

}  // namespace

extern "C" {

const char* mando_version(void) { return "0.1.0"; }

const char* mando_last_error(void) { return t_last_error.c_str(); }

const char* mando_status_name(mando_status status) {
  switch (status) {
    case MANDO_OK: return "ok";
    case MANDO_ERR_IO: return "io_error";
    case MANDO_ERR_DUPLICATE_NODE: return "duplicate_node";
    case MANDO_ERR_DUPLICATE_EDGE: return "duplicate_edge";
    case MANDO_ERR_UNKNOWN_ENDPOINT: return "unknown_endpoint";
    case MANDO_ERR_MISSING_ENTRY_POINT: return "missing_entry_point";
    case MANDO_ERR_LEX: return "lex_error";
    case MANDO_ERR_PARSE: return "parse_error";
    case MANDO_ERR_SCHEMA: return "schema_error";
    case MANDO_ERR_UNKNOWN_METAPATH: return "unknown_metapath";
    case MANDO_ERR_TOO_MANY_TYPES: return "too_many_types";
    case MANDO_ERR_UNKNOWN_TYPE: return "unknown_type";
    case MANDO_ERR_NO_NEIGHBORS: return "no_neighbors";
    case MANDO_ERR_STRATUM_TOO_SMALL: return "stratum_too_small";
    case MANDO_ERR_LENGTH_MISMATCH: return "length_mismatch";
    case MANDO_ERR_CONFIG: return "config_error";
    case MANDO_ERR_CATALOG_MISMATCH: return "catalog_mismatch";
    case MANDO_ERR_ARGUMENT: return "bad_argument";
    case MANDO_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

void mando_string_free(char* s) { std::free(s); }

/* ---- Bundles ---------------------------------------------------------- */

mando_status mando_bundle_from_file(const char* path, mando_bundle** out) {
  if (path == nullptr || out == nullptr)
    return arg_error("mando_bundle_from_file: null argument");
  return guarded([&] { *out = make_bundle(mando::load_bundle(path)); });
}

mando_status mando_bundle_from_source(const char* source, const char* name,
                                      mando_bundle** out) {
  if (source == nullptr || out == nullptr)
    return arg_error("mando_bundle_from_source: null argument");
  return guarded([&] {
    const std::string label = name == nullptr ? "<memory>" : name;
    *out = make_bundle(
        mando::build_bundle(mando::parse_source(source, label)));
  });
}

void mando_bundle_free(mando_bundle* b) { delete b; }

mando_status mando_bundle_export_json(const mando_bundle* b, char** out) {
  if (b == nullptr || out == nullptr)
    return arg_error("mando_bundle_export_json: null argument");
  return guarded(
      [&] { *out = dup_string(mando::export_json_text(b->bundle)); });
}

mando_status mando_bundle_fused_counts(const mando_bundle* b, size_t* nodes,
                                       size_t* edges) {
  if (b == nullptr)
    return arg_error("mando_bundle_fused_counts: null bundle");
  if (nodes != nullptr) *nodes = b->fused.node_count();
  if (edges != nullptr) *edges = b->fused.edge_count();
  return MANDO_OK;
}

mando_status mando_bundle_metapaths(const mando_bundle* b, char** out) {
  if (b == nullptr || out == nullptr)
    return arg_error("mando_bundle_metapaths: null argument");
  return guarded([&] { *out = dup_string(b->catalog.serialize()); });
}

mando_status mando_bundle_metapath_count(const mando_bundle* b, size_t* out) {
  if (b == nullptr || out == nullptr)
    return arg_error("mando_bundle_metapath_count: null argument");
  *out = b->catalog.paths().size();
  return MANDO_OK;
}

mando_status mando_bundle_catalog_digest(const mando_bundle* b,
                                         uint64_t* out) {
  if (b == nullptr || out == nullptr)
    return arg_error("mando_bundle_catalog_digest: null argument");
  *out = b->catalog.digest();
  return MANDO_OK;
}

mando_status mando_bundle_features(const mando_bundle* b,
                                   const char* feature_kind, size_t dim,
                                   uint64_t seed, const char* out_path) {
  if (b == nullptr || out_path == nullptr)
    return arg_error("mando_bundle_features: null argument");
  return guarded([&] {
    mando::FeatureOptions fo = feature_options(feature_kind, dim, seed);
    std::vector<mando::TypeName> vocab;
    for (mando::TypeName t : b->fused.node_types()) vocab.push_back(t);
    std::sort(vocab.begin(), vocab.end(), mando::TypeNameLess{});
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    if (fo.kind == mando::FeatureKind::OneHot && fo.dim < vocab.size())
      fo.dim = vocab.size();
    const mando::EmbeddingMatrix em =
        mando::contract_features(b->fused, b->catalog, vocab, fo, 0);
    mando::write_features(em, out_path);
  });
}

/* ---- Datasets --------------------------------------------------------- */

mando_status mando_dataset_from_manifest(const char* manifest_path,
                                         const char* feature_kind,
                                         size_t feature_dim,
                                         uint64_t feature_seed,
                                         mando_dataset** out) {
  if (manifest_path == nullptr || out == nullptr)
    return arg_error("mando_dataset_from_manifest: null argument");
  return guarded([&] {
    auto handle = std::make_unique<mando_dataset>();
    handle->manifest = load_manifest_resolved(manifest_path);
    handle->ds = mando::prepare_from_manifest(
        handle->manifest,
        feature_options(feature_kind, feature_dim, feature_seed));
    *out = handle.release();
  });
}

void mando_dataset_free(mando_dataset* d) { delete d; }

mando_status mando_dataset_size(const mando_dataset* d, size_t* out) {
  if (d == nullptr || out == nullptr)
    return arg_error("mando_dataset_size: null argument");
  *out = d->ds.contracts.size();
  return MANDO_OK;
}

mando_status mando_dataset_entry(const mando_dataset* d, size_t index,
                                 const char** name, size_t* nodes,
                                 size_t* buggy_nodes, int* label) {
  if (d == nullptr) return arg_error("mando_dataset_entry: null dataset");
  if (index >= d->ds.contracts.size())
    return arg_error("mando_dataset_entry: index out of range");
  const mando::PreparedContract& c = d->ds.contracts[index];
  if (name != nullptr) *name = c.name.c_str();
  if (nodes != nullptr) *nodes = c.graph.node_count();
  if (buggy_nodes != nullptr) {
    size_t buggy = 0;
    for (int l : c.node_labels.labels) buggy += static_cast<size_t>(l == 1);
    *buggy_nodes = buggy;
  }
  if (label != nullptr)
    *label = c.label == mando::GraphLabel::Buggy ? 1 : 0;
  return MANDO_OK;
}

mando_status mando_dataset_catalog_digest(const mando_dataset* d,
                                          uint64_t* out) {
  if (d == nullptr || out == nullptr)
    return arg_error("mando_dataset_catalog_digest: null argument");
  *out = d->ds.catalog.digest();
  return MANDO_OK;
}

mando_status mando_dataset_save_catalog(const mando_dataset* d,
                                        const char* path) {
  if (d == nullptr || path == nullptr)
    return arg_error("mando_dataset_save_catalog: null argument");
  return guarded(
      [&] { mando::write_file(path, d->ds.catalog.serialize()); });
}

mando_status mando_dataset_for_scan(const char* const* files, size_t count,
                                    const char* category,
                                    const char* catalog_path,
                                    const mando_model* model,
                                    const char* feature_kind,
                                    uint64_t feature_seed,
                                    mando_dataset** out) {
  if (files == nullptr || count == 0 || catalog_path == nullptr ||
      model == nullptr || out == nullptr)
    return arg_error("mando_dataset_for_scan: null or empty argument");
  for (size_t i = 0; i < count; ++i)
    if (files[i] == nullptr)
      return arg_error("mando_dataset_for_scan: null path");
  return guarded([&] {
    auto handle = std::make_unique<mando_dataset>();
    const mando::BugCategory cat = mando::bug_category_from(
        category == nullptr ? "reentrancy" : category);
    for (size_t i = 0; i < count; ++i) {
      mando::ManifestEntry e;
      e.path = files[i];
      e.category = cat;
      e.label = mando::GraphLabel::Clean;
      handle->manifest.entries.push_back(std::move(e));
    }

    const std::vector<mando::Metapath> paths =
        mando::MetapathCatalog::deserialize(mando::read_file(catalog_path));

    std::vector<mando::ContractGraphBundle> bundles;
    bundles.reserve(count);
    for (const mando::ManifestEntry& e : handle->manifest.entries)
      bundles.push_back(mando::load_bundle(e.path));
    std::vector<mando::ContractInput> inputs(count);
    for (size_t i = 0; i < count; ++i)
      inputs[i] = {&bundles[i], &handle->manifest.entries[i]};

    mando::FeatureOptions fo = feature_options(
        feature_kind, model->model.config().d_in, feature_seed);
    handle->ds = mando::prepare_dataset_with(inputs, paths,
                                             model->model.vocab(), fo);
    if (handle->ds.catalog.digest() != model->model.catalog_digest())
      mando::raise(mando::ErrorCode::CatalogMismatch,
                   "catalog file does not match the model's training digest");
    *out = handle.release();
  });
}

mando_status mando_dataset_timings(const mando_dataset* d,
                                   double* graph_seconds,
                                   double* feature_seconds) {
  if (d == nullptr) return arg_error("mando_dataset_timings: null dataset");
  if (graph_seconds != nullptr) *graph_seconds = d->ds.graph_seconds;
  if (feature_seconds != nullptr) *feature_seconds = d->ds.feature_seconds;
  return MANDO_OK;
}

/* ---- Training and persistence ----------------------------------------- */

void mando_train_options_init(mando_train_options* opts) {
  if (opts == nullptr) return;
  opts->task = MANDO_TASK_COARSE;
  opts->d_type = 0;
  opts->heads = 0;
  opts->d_head = 0;
  opts->hidden = 0;
  opts->epochs = 0;
  opts->dropout = -1.0;
  opts->lr_start = -1.0;
  opts->lr_max = -1.0;
  opts->model_seed = 0;
  opts->train_seed = 0;
  opts->test_fraction = 0.0;
  opts->split_seed = 0;
}

mando_status mando_train(const mando_dataset* d,
                         const mando_train_options* opts, mando_model** out,
                         char** history_json_out) {
  if (d == nullptr || opts == nullptr || out == nullptr)
    return arg_error("mando_train: null argument");
  if (opts->task != MANDO_TASK_COARSE && opts->task != MANDO_TASK_FINE)
    return arg_error("mando_train: unknown task");
  return guarded([&] {
    const bool fine = opts->task == MANDO_TASK_FINE;
    mando::DetectorConfig cfg;
    apply_model_dims(cfg.model, opts->d_type, opts->heads, opts->d_head,
                     opts->hidden, opts->model_seed);
    mando::TrainConfig& tc = fine ? cfg.fine_train : cfg.coarse_train;
    if (opts->epochs != 0) tc.epochs = opts->epochs;
    if (opts->dropout >= 0.0) tc.dropout = opts->dropout;
    if (opts->lr_start >= 0.0) tc.lr_start = opts->lr_start;
    if (opts->lr_max >= 0.0) tc.lr_max = opts->lr_max;
    tc.seed = opts->train_seed;

    std::vector<size_t> pool;
    if (opts->test_fraction > 0.0) {
      mando::SplitOptions so;
      so.test_fraction = opts->test_fraction;
      so.seed = opts->split_seed;
      pool = mando::split(d->manifest, d->ds.stats(), so).train;
    } else {
      pool.resize(d->ds.contracts.size());
      for (size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    }
    std::vector<size_t> train;
    for (size_t i : pool)
      if (!fine || d->ds.contracts[i].label == mando::GraphLabel::Buggy)
        train.push_back(i);
    if (train.empty())
      mando::raise(mando::ErrorCode::ConfigError,
                   fine ? "fine training needs buggy-labeled contracts"
                        : "training needs a non-empty dataset");

    mando::TrainHistory history;
    std::optional<mando::Model<float>> model;
    if (fine) {
      mando::FineResult r = mando::run_fine(d->ds, train, {}, cfg);
      history = std::move(r.history);
      model = std::move(r.model);
    } else {
      mando::CoarseResult r = mando::run_coarse(d->ds, train, {}, cfg);
      history = std::move(r.history);
      model = std::move(r.model);
    }
    *out = new mando_model{std::move(*model)};
    if (history_json_out != nullptr)
      *history_json_out = dup_string(history_json(history).dump());
  });
}

void mando_model_free(mando_model* m) { delete m; }

mando_status mando_model_save(const mando_model* m, const char* path) {
  if (m == nullptr || path == nullptr)
    return arg_error("mando_model_save: null argument");
  return guarded([&] { mando::save_checkpoint(m->model, path); });
}

mando_status mando_model_load(const char* path, const mando_dataset* d,
                              mando_model** out) {
  if (path == nullptr || out == nullptr)
    return arg_error("mando_model_load: null argument");
  return guarded([&] {
    const mando::MetapathCatalog* expect =
        d == nullptr ? nullptr : &d->ds.catalog;
    mando::Model<float> m = mando::load_checkpoint<float>(path, expect);
    if (d != nullptr) check_model_fits(m, d->ds);
    *out = new mando_model{std::move(m)};
  });
}

mando_status mando_model_coarse_score(const mando_model* m,
                                      const mando_dataset* d, size_t index,
                                      double* buggy_probability) {
  if (m == nullptr || d == nullptr || buggy_probability == nullptr)
    return arg_error("mando_model_coarse_score: null argument");
  if (index >= d->ds.contracts.size())
    return arg_error("mando_model_coarse_score: index out of range");
  return guarded([&] {
    const mando::PreparedContract& c = d->ds.contracts[index];
    std::array<float, 2> logits =
        m->model.coarse_logits(c.graph, c.paths, c.feats);
    mando::softmax_inplace(std::span<float>(logits));
    *buggy_probability = static_cast<double>(logits[1]);
  });
}

mando_status mando_model_embed_json(const mando_model* m,
                                    const mando_dataset* d, size_t index,
                                    char** out) {
  if (m == nullptr || d == nullptr || out == nullptr)
    return arg_error("mando_model_embed_json: null argument");
  if (index >= d->ds.contracts.size())
    return arg_error("mando_model_embed_json: index out of range");
  return guarded([&] {
    const mando::PreparedContract& c = d->ds.contracts[index];
    const mando::Tensor<float> emb =
        m->model.node_embeddings(c.graph, c.paths, c.feats);
    json rows = json::array();
    for (size_t i = 0; i < emb.rows; ++i) {
      const auto row = emb.row(i);
      rows.push_back(std::vector<float>(row.begin(), row.end()));
    }
    *out = dup_string(rows.dump());
  });
}

mando_status mando_scan(const mando_model* fine, const mando_model* coarse,
                        const mando_dataset* d, mando_report** out) {
  if (fine == nullptr || d == nullptr || out == nullptr)
    return arg_error("mando_scan: null argument");
  return guarded([&] {
    check_model_fits(fine->model, d->ds);
    std::vector<size_t> all(d->ds.contracts.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;

    mando::DetectionReport report;
    std::vector<size_t> scan = all;
    if (coarse != nullptr) {
      check_model_fits(coarse->model, d->ds);
      report.coarse = mando::apply_coarse(coarse->model, d->ds, all);
      scan.clear();
      for (size_t k = 0; k < report.coarse.test.size(); ++k)
        if (report.coarse.pred[k] == 1)
          scan.push_back(report.coarse.test[k]);
    }
    report.fine = mando::apply_fine(fine->model, d->ds, scan);
    *out = new mando_report{std::move(report)};
  });
}

/* ---- Detection --------------------------------------------------------- */

void mando_detect_options_init(mando_detect_options* opts) {
  if (opts == nullptr) return;
  opts->test_fraction = 0.3;
  opts->split_seed = 0;
  opts->d_type = 0;
  opts->heads = 0;
  opts->d_head = 0;
  opts->hidden = 0;
  opts->coarse_epochs = 0;
  opts->fine_epochs = 0;
  opts->dropout = -1.0;
  opts->lr_start = -1.0;
  opts->lr_max = -1.0;
  opts->model_seed = 0;
  opts->train_seed = 0;
  opts->save_coarse = nullptr;
  opts->save_fine = nullptr;
}

namespace {

mando::DetectionReport detect_once(const mando_dataset* d,
                                   const mando_detect_options& opts) {
  mando::SplitOptions so;
  so.test_fraction = opts.test_fraction;
  so.seed = opts.split_seed;
  const mando::SplitResult sp = mando::split(d->manifest, d->ds.stats(), so);

  mando::DetectorConfig cfg;
  apply_model_dims(cfg.model, opts.d_type, opts.heads, opts.d_head,
                   opts.hidden, opts.model_seed);
  if (opts.coarse_epochs != 0) cfg.coarse_train.epochs = opts.coarse_epochs;
  if (opts.fine_epochs != 0) cfg.fine_train.epochs = opts.fine_epochs;
  if (opts.dropout >= 0.0) {
    cfg.coarse_train.dropout = opts.dropout;
    cfg.fine_train.dropout = opts.dropout;
  }
  if (opts.lr_start >= 0.0) {
    cfg.coarse_train.lr_start = opts.lr_start;
    cfg.fine_train.lr_start = opts.lr_start;
  }
  if (opts.lr_max >= 0.0) {
    cfg.coarse_train.lr_max = opts.lr_max;
    cfg.fine_train.lr_max = opts.lr_max;
  }
  cfg.coarse_train.seed = opts.train_seed;
  cfg.fine_train.seed = opts.train_seed + 1;

  return mando::two_phase(d->ds, sp.train, sp.test, cfg);
}

}  // namespace

mando_status mando_detect(const mando_dataset* d,
                          const mando_detect_options* opts,
                          mando_report** out) {
  if (d == nullptr || opts == nullptr || out == nullptr)
    return arg_error("mando_detect: null argument");
  return guarded([&] {
    mando::DetectionReport report = detect_once(d, *opts);
    if (opts->save_coarse != nullptr && report.coarse.model.has_value())
      mando::save_checkpoint(*report.coarse.model, opts->save_coarse);
    if (opts->save_fine != nullptr && report.fine.model.has_value())
      mando::save_checkpoint(*report.fine.model, opts->save_fine);
    *out = new mando_report{std::move(report)};
  });
}

mando_status mando_eval(const mando_dataset* d,
                        const mando_detect_options* opts, size_t seeds,
                        char** metrics_json_out) {
  if (d == nullptr || opts == nullptr || metrics_json_out == nullptr)
    return arg_error("mando_eval: null argument");
  if (seeds == 0) return arg_error("mando_eval: seeds must be positive");
  return guarded([&] {
    if (d->ds.contracts.empty())
      mando::raise(mando::ErrorCode::ConfigError, "empty manifest");
    std::vector<mando::MetricsReport> coarse, fine;
    for (size_t s = 0; s < seeds; ++s) {
      mando_detect_options run = *opts;
      run.split_seed = opts->split_seed + s;
      run.model_seed = opts->model_seed + s;
      run.train_seed = opts->train_seed + 2 * s;  // detect uses seed, seed+1
      run.save_coarse = nullptr;
      run.save_fine = nullptr;
      const mando::DetectionReport report = detect_once(d, run);
      coarse.push_back(report.coarse.metrics);
      fine.push_back(report.fine.metrics);
    }
    json root;
    root["seeds"] = seeds;
    root["coarse"] = json::parse(mando::metrics_json(mando::aggregate(coarse)));
    root["fine"] = json::parse(mando::metrics_json(mando::aggregate(fine)));
    *metrics_json_out = dup_string(root.dump(2) + "\n");
  });
}

void mando_report_free(mando_report* r) { delete r; }

mando_status mando_report_json(const mando_report* r, char** out) {
  if (r == nullptr || out == nullptr)
    return arg_error("mando_report_json: null argument");
  return guarded([&] { *out = dup_string(mando::report_json(r->report)); });
}

mando_status mando_report_csv(const mando_report* r, char** out) {
  if (r == nullptr || out == nullptr)
    return arg_error("mando_report_csv: null argument");
  return guarded([&] { *out = dup_string(mando::report_csv(r->report)); });
}

int mando_report_all_clear(const mando_report* r) {
  if (r == nullptr) return -MANDO_ERR_ARGUMENT;
  return mando::all_clear(r->report) ? 1 : 0;
}

mando_status mando_report_timings(const mando_report* r, double out[4]) {
  if (r == nullptr || out == nullptr)
    return arg_error("mando_report_timings: null argument");
  out[0] = r->report.coarse.train_seconds;
  out[1] = r->report.coarse.infer_seconds;
  out[2] = r->report.fine.train_seconds;
  out[3] = r->report.fine.infer_seconds;
  return MANDO_OK;
}

}  // extern "C"

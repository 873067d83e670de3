/* C interface to the mando contract-analysis library.
 *
 * Every function that can fail returns a mando_status; 0 is success. On
 * failure a thread-local message is available from mando_last_error() until
 * the next failing call on the same thread. Strings returned through char**
 * out-parameters are heap-allocated and must be released with
 * mando_string_free(); handles must be released with their _free function.
 * Handles are not thread-safe; confine each to one thread at a time.
 */

#ifndef MANDO_H
#define MANDO_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef int32_t mando_status;

enum {
  MANDO_OK = 0,
  MANDO_ERR_IO = 1,
  MANDO_ERR_DUPLICATE_NODE = 2,
  MANDO_ERR_DUPLICATE_EDGE = 3,
  MANDO_ERR_UNKNOWN_ENDPOINT = 4,
  MANDO_ERR_MISSING_ENTRY_POINT = 5,
  MANDO_ERR_LEX = 6,
  MANDO_ERR_PARSE = 7,
  MANDO_ERR_SCHEMA = 8,
  MANDO_ERR_UNKNOWN_METAPATH = 9,
  MANDO_ERR_TOO_MANY_TYPES = 10,
  MANDO_ERR_UNKNOWN_TYPE = 11,
  MANDO_ERR_NO_NEIGHBORS = 12,
  MANDO_ERR_STRATUM_TOO_SMALL = 13,
  MANDO_ERR_LENGTH_MISMATCH = 14,
  MANDO_ERR_CONFIG = 15,
  MANDO_ERR_CATALOG_MISMATCH = 16,
  /* C-boundary failures without a library error code: */
  MANDO_ERR_ARGUMENT = 100, /* null handle or out-parameter */
  MANDO_ERR_INTERNAL = 101
};

/* Library version, static storage. */
const char* mando_version(void);

/* Message of the most recent failure on this thread, or "" if none. */
const char* mando_last_error(void);

/* Stable name for a status value ("ok", "parse_error", ...). */
const char* mando_status_name(mando_status status);

void mando_string_free(char* s);

/* ---- Contract graphs ------------------------------------------------- */

/* One contract source compiled to its call graph, per-function control-flow
 * graphs, and their fused heterogeneous form. */
typedef struct mando_bundle mando_bundle;

/* Reads a .sol source or a .json interchange file. */
mando_status mando_bundle_from_file(const char* path, mando_bundle** out);

/* Parses source text directly; `name` labels spans (like a file name). */
mando_status mando_bundle_from_source(const char* source, const char* name,
                                      mando_bundle** out);

void mando_bundle_free(mando_bundle* b);

/* Canonical JSON interchange text for the bundle. */
mando_status mando_bundle_export_json(const mando_bundle* b, char** out);

/* Node and edge counts of the fused graph. Either out-pointer may be null. */
mando_status mando_bundle_fused_counts(const mando_bundle* b, size_t* nodes,
                                       size_t* edges);

/* Canonical text listing every length-2 metapath realized by the fused
 * graph, one per line, sorted. */
mando_status mando_bundle_metapaths(const mando_bundle* b, char** out);

mando_status mando_bundle_metapath_count(const mando_bundle* b, size_t* out);

/* FNV-1a 64 digest of the canonical metapath list. */
mando_status mando_bundle_catalog_digest(const mando_bundle* b,
                                         uint64_t* out);

/* Writes node features for the bundle's fused graph, computed against the
 * graph's own type list, as a binary feature file ("MNDE" header, float32
 * rows). `feature_kind` as in mando_dataset_from_manifest. */
mando_status mando_bundle_features(const mando_bundle* b,
                                   const char* feature_kind, size_t dim,
                                   uint64_t seed, const char* out_path);

/* ---- Datasets -------------------------------------------------------- */

/* A labeled corpus prepared for training: fused graphs indexed against the
 * union metapath list, node features, and per-node line labels. */
typedef struct mando_dataset mando_dataset;

/* Loads a JSON-Lines manifest. Each line holds path, category, label, and
 * (for buggy entries) buggy_lines. `feature_kind` is one of "one_hot",
 * "node2vec", "line", "metapath2vec"; feature_dim 0 keeps the default. */
mando_status mando_dataset_from_manifest(const char* manifest_path,
                                         const char* feature_kind,
                                         size_t feature_dim,
                                         uint64_t feature_seed,
                                         mando_dataset** out);

void mando_dataset_free(mando_dataset* d);

mando_status mando_dataset_size(const mando_dataset* d, size_t* out);

/* Per-contract summary. `name` stays owned by the dataset. `label` is 1 for
 * buggy, 0 for clean. Out-pointers may be null. */
mando_status mando_dataset_entry(const mando_dataset* d, size_t index,
                                 const char** name, size_t* nodes,
                                 size_t* buggy_nodes, int* label);

mando_status mando_dataset_catalog_digest(const mando_dataset* d,
                                          uint64_t* out);

/* Writes the dataset's canonical metapath list. A checkpoint stores only
 * the list's digest, so this file is the companion artifact that lets new
 * graphs be indexed the way the model was trained. */
mando_status mando_dataset_save_catalog(const mando_dataset* d,
                                        const char* path);

/* Wall-clock cost of building the dataset: graph construction (fusion plus
 * metapath indexing) and node feature extraction. Either pointer may be
 * null. */
mando_status mando_dataset_timings(const mando_dataset* d,
                                   double* graph_seconds,
                                   double* feature_seconds);

/* ---- Training and persistence ----------------------------------------- */

typedef struct mando_model mando_model;
typedef struct mando_report mando_report;

enum { MANDO_TASK_COARSE = 0, MANDO_TASK_FINE = 1 };

typedef struct mando_train_options {
  int task;            /* MANDO_TASK_COARSE or MANDO_TASK_FINE */
  size_t d_type;       /* per-type transform width */
  size_t heads;
  size_t d_head;
  size_t hidden;       /* classifier hidden width */
  size_t epochs;       /* 0 keeps the task default (50 coarse, 100 fine) */
  double dropout;      /* negative keeps the default 0.6 */
  double lr_start;     /* negative keeps the task default */
  double lr_max;       /* negative keeps the task default */
  uint64_t model_seed; /* parameter initialization */
  uint64_t train_seed; /* shuffling and dropout */
  double test_fraction; /* 0 trains on the whole corpus; in (0,1) holds out
                         * a stratified test share and trains on the rest */
  uint64_t split_seed;
} mando_train_options;

/* Fills every field with its default. */
void mando_train_options_init(mando_train_options* opts);

/* Trains a fresh model on the dataset: the coarse task uses every contract,
 * the fine task the buggy-labeled ones. `history_json` (optional) receives
 * per-epoch loss and accuracy. */
mando_status mando_train(const mando_dataset* d,
                         const mando_train_options* opts, mando_model** out,
                         char** history_json);

void mando_model_free(mando_model* m);

/* Versioned binary checkpoint. Loading verifies the stored metapath digest
 * against the dataset and fails with MANDO_ERR_CATALOG_MISMATCH when the
 * dataset was built from different graphs. */
mando_status mando_model_save(const mando_model* m, const char* path);
mando_status mando_model_load(const char* path, const mando_dataset* d,
                              mando_model** out);

/* Buggy-class probability for one contract under a coarse-task model. */
mando_status mando_model_coarse_score(const mando_model* m,
                                      const mando_dataset* d, size_t index,
                                      double* buggy_probability);

/* Per-node embeddings of one contract as a JSON array of arrays. */
mando_status mando_model_embed_json(const mando_model* m,
                                    const mando_dataset* d, size_t index,
                                    char** out);

/* Builds an unlabeled dataset from .sol or .json files for scanning with a
 * trained model: graphs are indexed against the metapath list previously
 * written by mando_dataset_save_catalog, and features are computed over the
 * model's type vocabulary at the model's input width. Every entry carries
 * the given category (null: "reentrancy") and a clean gold label, so
 * metrics over such a dataset are not meaningful. `feature_kind` and
 * `feature_seed` must repeat the training-time settings. */
mando_status mando_dataset_for_scan(const char* const* files, size_t count,
                                    const char* category,
                                    const char* catalog_path,
                                    const mando_model* model,
                                    const char* feature_kind,
                                    uint64_t feature_seed,
                                    mando_dataset** out);

/* Scans every contract of `d` with a trained fine-task model and collects
 * line findings. When `coarse` is non-null it gates the scan: only
 * contracts it flags buggy are scanned. Models must have been trained on
 * graphs with the dataset's metapath digest. */
mando_status mando_scan(const mando_model* fine, const mando_model* coarse,
                        const mando_dataset* d, mando_report** out);

/* ---- Two-phase detection ---------------------------------------------- */

typedef struct mando_detect_options {
  double test_fraction;  /* stratified holdout share, in (0, 1) */
  uint64_t split_seed;
  size_t d_type;
  size_t heads;
  size_t d_head;
  size_t hidden;
  size_t coarse_epochs;    /* 0 keeps the default 50 */
  size_t fine_epochs;      /* 0 keeps the default 100 */
  double dropout;          /* negative keeps the default 0.6 */
  double lr_start;         /* negative keeps each task's default */
  double lr_max;           /* negative keeps each task's default */
  uint64_t model_seed;
  uint64_t train_seed;
  const char* save_coarse; /* checkpoint path, or null to skip */
  const char* save_fine;   /* checkpoint path, or null to skip */
} mando_detect_options;

void mando_detect_options_init(mando_detect_options* opts);

/* Splits the corpus, trains the coarse phase, scans flagged contracts with
 * the fine phase, and collects line findings plus metrics for both phases. */
mando_status mando_detect(const mando_dataset* d,
                          const mando_detect_options* opts,
                          mando_report** out);

void mando_report_free(mando_report* r);

mando_status mando_report_json(const mando_report* r, char** out);
mando_status mando_report_csv(const mando_report* r, char** out);

/* 1 when neither phase produced a buggy verdict, 0 otherwise, a negative
 * mando_status on bad arguments. */
int mando_report_all_clear(const mando_report* r);

/* Wall-clock seconds per phase: {coarse train, coarse inference, fine
 * train, fine inference}. Zero for phases that did not run. */
mando_status mando_report_timings(const mando_report* r, double out[4]);

/* Repeats split + two-phase detection `seeds` times, offsetting the split,
 * model, and training seeds by the run index, and aggregates both phases'
 * metrics (arithmetic mean plus per-seed values) into a JSON document. */
mando_status mando_eval(const mando_dataset* d,
                        const mando_detect_options* opts, size_t seeds,
                        char** metrics_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MANDO_H */

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mando/hetgraph.hpp"
#include "mando/metapath.hpp"
#include "mando/mgnn.hpp"
#include "mando/topoembed.hpp"

namespace mando {

enum class BugCategory {
  AccessControl,
  Arithmetic,
  DenialOfService,
  FrontRunning,
  Reentrancy,
  TimeManipulation,
  UncheckedLowLevelCalls,
};

inline constexpr std::size_t kBugCategoryCount = 7;

/// Snake-case wire name ("access_control", ...).
std::string_view bug_category_name(BugCategory c);
/// Throws Error(SchemaError) for unknown names.
BugCategory bug_category_from(std::string_view name);

struct BuggyLine {
  std::string file;
  std::uint32_t line = 1;

  friend bool operator==(const BuggyLine&, const BuggyLine&) = default;
};

enum class GraphLabel { Clean, Buggy };

struct ManifestEntry {
  std::string path;  // .sol source or .json interchange bundle
  BugCategory category = BugCategory::Reentrancy;
  GraphLabel label = GraphLabel::Clean;
  std::vector<BuggyLine> buggy_lines;  // non-empty iff label == Buggy
};

/// JSON-Lines dataset manifest: one entry object per line.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  /// Throws Error(SchemaError) on malformed lines or on a buggy_lines /
  /// label mismatch.
  static DatasetManifest parse(std::string_view text);
  static DatasetManifest load(const std::string& path);
  std::string serialize() const;
  void save(const std::string& path) const;
};

/// Total node labeling for one fused graph. 1 = buggy, 0 = clean.
struct NodeLabelMap {
  std::vector<int> labels;
  /// Buggy lines no node span covers, in input order, deduplicated.
  std::vector<BuggyLine> unmapped;
};

/// A node is buggy iff its span covers any buggy line of the same file.
/// Span-less nodes inherit: buggy iff any spanned node with the same owner
/// is buggy.
NodeLabelMap map_line_labels(const HetGraph& g,
                             std::span<const BuggyLine> lines);

struct EntryStats {
  std::size_t nodes = 0;
  std::size_t buggy_nodes = 0;
};

struct SplitOptions {
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
  /// Max |side ratio - global ratio| of buggy nodes, as a fraction.
  double node_ratio_tolerance = 0.05;
  std::size_t max_redraws = 100;
};

struct SplitResult {
  std::vector<std::size_t> train, test;  // entry indices, ascending
  std::size_t attempt = 0;               // redraw index that was accepted
  double global_ratio = 0.0, train_ratio = 0.0, test_ratio = 0.0;
  bool within_tolerance = true;
};

/// Stratifies by (category, label); each stratum contributes
/// clamp(round(test_fraction * n), 1, n - 1) test entries. Redraws until the
/// buggy-node ratio of both sides is within tolerance of the global ratio,
/// up to max_redraws, then keeps the best attempt.
/// Throws Error(StratumTooSmall) if any stratum has fewer than 2 entries,
/// Error(LengthMismatch) if stats and entries disagree.
SplitResult split(const DatasetManifest& manifest,
                  std::span<const EntryStats> stats,
                  const SplitOptions& opts = {});

struct ClassScores {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  /// Class absent from both prediction and gold; scores forced to 0.
  bool degenerate = false;
};

struct MetricsReport {
  ClassScores clean, buggy;
  double buggy_f1 = 0.0;
  double macro_f1 = 0.0;
  bool degenerate = false;
  /// Filled by aggregate(): one value per input report.
  std::vector<double> per_seed_buggy_f1, per_seed_macro_f1;
};

/// Binary F1 per class over aligned 0/1 vectors, buggy = positive class.
/// Throws Error(LengthMismatch) on size mismatch.
MetricsReport f1_scores(std::span<const int> pred, std::span<const int> gold);

/// Arithmetic mean per metric; per_seed_* keep the individual values.
/// Throws Error(ConfigError) on an empty span.
MetricsReport aggregate(std::span<const MetricsReport> reports);

enum class FeatureKind { OneHot, Node2vec, Line, Metapath2vec };

std::string_view feature_kind_name(FeatureKind k);
FeatureKind feature_kind_from(std::string_view name);

struct FeatureOptions {
  FeatureKind kind = FeatureKind::OneHot;
  std::size_t dim = 128;
  WalkConfig walks;  // walk-based kinds; dim/seed fields here win
  std::uint64_t seed = 0;
};

/// Feature matrix for one fused graph. `salt` separates the random streams
/// of contracts inside a corpus; standalone callers leave it 0.
EmbeddingMatrix contract_features(const HetGraph& g,
                                  const MetapathCatalog& paths,
                                  const std::vector<TypeName>& vocab,
                                  const FeatureOptions& opts,
                                  std::uint64_t salt = 0);

/// One contract ready for the detector: fused graph, neighbor index against
/// the dataset-wide path list, float features, gold labels.
struct PreparedContract {
  std::string name;
  BugCategory category = BugCategory::Reentrancy;
  GraphLabel label = GraphLabel::Clean;
  HetGraph graph;
  MetapathCatalog paths;
  Tensor<float> feats;
  NodeLabelMap node_labels;
};

struct PreparedDataset {
  std::vector<PreparedContract> contracts;
  std::vector<TypeName> vocab;    // union node-type vocabulary, sorted
  MetapathCatalog catalog;        // union path list (digest reference)
  std::size_t feature_dim = 0;

  // Wall-clock build cost; informational only, never serialized.
  double graph_seconds = 0.0;    // fusion + path indexing
  double feature_seconds = 0.0;  // node feature extraction

  std::vector<EntryStats> stats() const;
};

/// Source bundles paired with manifest metadata, before feature extraction.
struct ContractInput {
  const ContractGraphBundle* bundle = nullptr;
  const ManifestEntry* entry = nullptr;
};

/// Fuses each bundle, builds the union vocabulary and path list, indexes
/// each graph against it, extracts features, and maps line labels.
/// Throws Error(LengthMismatch) on null input members.
PreparedDataset prepare_dataset(std::span<const ContractInput> inputs,
                                const FeatureOptions& feats = {});

/// load_bundle() for every manifest entry, then prepare_dataset.
PreparedDataset prepare_from_manifest(const DatasetManifest& manifest,
                                      const FeatureOptions& feats = {});

/// Checkpoint-replay variant: indexes each graph against a fixed path list
/// and computes features over a fixed vocabulary at exactly feats.dim, so
/// the result lines up with a model trained elsewhere. Throws UnknownType
/// when a graph uses a node type outside the vocabulary.
PreparedDataset prepare_dataset_with(std::span<const ContractInput> inputs,
                                     const std::vector<Metapath>& paths,
                                     std::vector<TypeName> vocab,
                                     const FeatureOptions& feats);

struct DetectorConfig {
  ModelConfig model;        // d_in is overwritten by the dataset feature dim
  TrainConfig coarse_train = default_train_config(Task::Coarse);
  TrainConfig fine_train = default_train_config(Task::Fine);
};

struct CoarseResult {
  std::vector<std::size_t> test;   // entry indices evaluated, ascending
  std::vector<int> pred;           // parallel to test
  std::vector<double> confidence;  // buggy-class probability, parallel
  MetricsReport metrics;
  TrainHistory history;
  std::optional<Model<float>> model;
  double train_seconds = 0.0;  // wall clock, never serialized
  double infer_seconds = 0.0;
};

/// Trains a graph classifier on the train entries and labels every test
/// entry clean or buggy.
CoarseResult run_coarse(const PreparedDataset& ds,
                        std::span<const std::size_t> train,
                        std::span<const std::size_t> test,
                        const DetectorConfig& cfg);

/// Labels the given entries with an already trained classifier. The result
/// carries no model or history.
CoarseResult apply_coarse(const Model<float>& model,
                          const PreparedDataset& ds,
                          std::span<const std::size_t> test);

struct LineFinding {
  std::string contract;  // contract name, or manifest path when unnamed
  std::string file;
  std::uint32_t line_start = 1, line_end = 1;
  BugCategory category = BugCategory::Reentrancy;
  double confidence = 0.0;
};

struct FineResult {
  std::vector<std::size_t> scanned;        // entry indices, ascending
  std::vector<std::vector<int>> node_pred; // parallel to scanned
  std::vector<LineFinding> findings;       // deduplicated, sorted
  MetricsReport metrics;                   // node-level over scanned entries
  TrainHistory history;
  std::optional<Model<float>> model;
  double train_seconds = 0.0;  // wall clock, never serialized
  double infer_seconds = 0.0;
};

/// Trains a node classifier on the train entries and scans the given
/// entries; emits one finding per distinct buggy (file, line range), keeping
/// the highest node confidence.
FineResult run_fine(const PreparedDataset& ds,
                    std::span<const std::size_t> train,
                    std::span<const std::size_t> scan,
                    const DetectorConfig& cfg);

/// Scans entries with an already trained node classifier. Findings take
/// each entry's manifest category. No model or history in the result.
FineResult apply_fine(const Model<float>& model, const PreparedDataset& ds,
                      std::span<const std::size_t> scan);

struct DetectionReport {
  CoarseResult coarse;
  FineResult fine;
};

/// Phase 1 on train/test, then phase 2 restricted to the test entries phase
/// 1 flagged buggy; phase 2 trains on the gold-buggy train entries.
DetectionReport two_phase(const PreparedDataset& ds,
                          std::span<const std::size_t> train,
                          std::span<const std::size_t> test,
                          const DetectorConfig& cfg);

/// True when neither phase produced a buggy verdict (process exit 0 vs 1).
bool all_clear(const DetectionReport& report);

std::string report_json(const DetectionReport& report);
/// Columns: contract,file,line_start,line_end,category,confidence.
std::string report_csv(const DetectionReport& report);

std::string metrics_json(const MetricsReport& report);

}  // namespace mando

#include "mando/detector.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>
#include <unordered_set>

#include "json.hpp"
#include "mando/error.hpp"
#include "mando/frontend.hpp"
#include "mando/rng.hpp"

namespace mando {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, kBugCategoryCount> kCategoryNames = {
    "access_control",    "arithmetic",        "denial_of_service",
    "front_running",     "reentrancy",        "time_manipulation",
    "unchecked_low_level_calls"};

}  // namespace

std::string_view bug_category_name(BugCategory c) {
  return kCategoryNames[static_cast<std::size_t>(c)];
}

BugCategory bug_category_from(std::string_view name) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i)
    if (kCategoryNames[i] == name) return static_cast<BugCategory>(i);
  raise(ErrorCode::SchemaError,
        "unknown bug category \"" + std::string(name) + "\"");
}

std::string_view feature_kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::OneHot: return "one_hot";
    case FeatureKind::Node2vec: return "node2vec";
    case FeatureKind::Line: return "line";
    case FeatureKind::Metapath2vec: return "metapath2vec";
  }
  return "one_hot";
}

FeatureKind feature_kind_from(std::string_view name) {
  if (name == "one_hot") return FeatureKind::OneHot;
  if (name == "node2vec") return FeatureKind::Node2vec;
  if (name == "line") return FeatureKind::Line;
  if (name == "metapath2vec") return FeatureKind::Metapath2vec;
  raise(ErrorCode::SchemaError,
        "unknown feature kind \"" + std::string(name) + "\"");
}

// --- manifest ---

namespace {

ManifestEntry entry_from_json(const json& j, std::size_t lineno) {
  const std::string where = "manifest line " + std::to_string(lineno);
  if (!j.is_object()) raise(ErrorCode::SchemaError, where + ": not an object");
  ManifestEntry e;
  try {
    e.path = j.at("path").get<std::string>();
    e.category = bug_category_from(j.at("category").get<std::string>());
    const std::string label = j.at("label").get<std::string>();
    if (label == "clean") {
      e.label = GraphLabel::Clean;
    } else if (label == "buggy") {
      e.label = GraphLabel::Buggy;
    } else {
      raise(ErrorCode::SchemaError, where + ": label must be clean or buggy");
    }
    if (j.contains("buggy_lines")) {
      for (const json& bl : j.at("buggy_lines")) {
        BuggyLine line;
        line.file = bl.at("file").get<std::string>();
        line.line = bl.at("line").get<std::uint32_t>();
        e.buggy_lines.push_back(std::move(line));
      }
    }
  } catch (const json::exception& ex) {
    raise(ErrorCode::SchemaError, where + ": " + ex.what());
  }
  const bool has_lines = !e.buggy_lines.empty();
  if (has_lines != (e.label == GraphLabel::Buggy))
    raise(ErrorCode::SchemaError,
          where + ": buggy_lines must be non-empty exactly for buggy entries");
  return e;
}

json entry_to_json(const ManifestEntry& e) {
  json j;
  j["path"] = e.path;
  j["category"] = std::string(bug_category_name(e.category));
  j["label"] = e.label == GraphLabel::Buggy ? "buggy" : "clean";
  if (!e.buggy_lines.empty()) {
    json arr = json::array();
    for (const BuggyLine& bl : e.buggy_lines) {
      json l;
      l["file"] = bl.file;
      l["line"] = bl.line;
      arr.push_back(std::move(l));
    }
    j["buggy_lines"] = std::move(arr);
  }
  return j;
}

}  // namespace

DatasetManifest DatasetManifest::parse(std::string_view text) {
  DatasetManifest m;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    ++lineno;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      raise(ErrorCode::SchemaError,
            "manifest line " + std::to_string(lineno) + ": invalid JSON");
    m.entries.push_back(entry_from_json(j, lineno));
  }
  return m;
}

DatasetManifest DatasetManifest::load(const std::string& path) {
  return parse(read_file(path));
}

std::string DatasetManifest::serialize() const {
  std::string out;
  for (const ManifestEntry& e : entries) {
    out += entry_to_json(e).dump();
    out += '\n';
  }
  return out;
}

void DatasetManifest::save(const std::string& path) const {
  write_file(path, serialize());
}

// --- line-label mapping ---

NodeLabelMap map_line_labels(const HetGraph& g,
                             std::span<const BuggyLine> lines) {
  NodeLabelMap out;
  out.labels.assign(g.node_count(), 0);

  std::vector<bool> covered(lines.size(), false);
  std::map<std::string, std::vector<std::size_t>> lines_by_file;
  for (std::size_t k = 0; k < lines.size(); ++k)
    lines_by_file[lines[k].file].push_back(k);

  std::unordered_set<std::string> buggy_owners;
  for (const HetNode& n : g.nodes()) {
    if (!n.span) continue;
    const auto it = lines_by_file.find(n.span->file);
    if (it == lines_by_file.end()) continue;
    for (std::size_t k : it->second) {
      const std::uint32_t line = lines[k].line;
      if (line < n.span->line_start || line > n.span->line_end) continue;
      out.labels[n.id] = 1;
      covered[k] = true;
      if (n.owner) buggy_owners.insert(*n.owner);
    }
  }
  for (const HetNode& n : g.nodes()) {
    if (n.span || !n.owner) continue;
    if (buggy_owners.count(*n.owner)) out.labels[n.id] = 1;
  }

  std::set<std::pair<std::string, std::uint32_t>> seen;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (covered[k]) continue;
    if (seen.emplace(lines[k].file, lines[k].line).second)
      out.unmapped.push_back(lines[k]);
  }
  return out;
}

// --- split ---

namespace {

struct SideRatio {
  std::size_t nodes = 0, buggy = 0;
  double ratio() const {
    return nodes == 0 ? 0.0 : double(buggy) / double(nodes);
  }
};

SideRatio tally(std::span<const std::size_t> idx,
                std::span<const EntryStats> stats) {
  SideRatio r;
  for (std::size_t i : idx) {
    r.nodes += stats[i].nodes;
    r.buggy += stats[i].buggy_nodes;
  }
  return r;
}

}  // namespace

SplitResult split(const DatasetManifest& manifest,
                  std::span<const EntryStats> stats,
                  const SplitOptions& opts) {
  const std::size_t n = manifest.entries.size();
  if (stats.size() != n)
    raise(ErrorCode::LengthMismatch, "need one node-count entry per contract");
  if (!(opts.test_fraction > 0.0) || !(opts.test_fraction < 1.0))
    raise(ErrorCode::ConfigError, "test fraction must be in (0, 1)");

  // Strata keyed by (category, label), iterated in that fixed order.
  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < n; ++i) {
    const ManifestEntry& e = manifest.entries[i];
    strata[{static_cast<int>(e.category),
            e.label == GraphLabel::Buggy ? 1 : 0}]
        .push_back(i);
  }
  for (const auto& [key, members] : strata) {
    if (members.size() < 2)
      raise(ErrorCode::StratumTooSmall,
            "stratum " +
                std::string(bug_category_name(
                    static_cast<BugCategory>(key.first))) +
                "/" + (key.second ? "buggy" : "clean") + " has " +
                std::to_string(members.size()) + " contract(s); need 2");
  }

  SideRatio global;
  for (std::size_t i = 0; i < n; ++i) {
    global.nodes += stats[i].nodes;
    global.buggy += stats[i].buggy_nodes;
  }

  SplitResult best;
  double best_dev = -1.0;
  for (std::size_t attempt = 0; attempt <= opts.max_redraws; ++attempt) {
    Rng rng = Rng::substream(opts.seed, 0x73706C74u, attempt);
    SplitResult cand;
    cand.attempt = attempt;
    for (const auto& [key, members] : strata) {
      std::vector<std::size_t> pool = members;
      for (std::size_t i = pool.size() - 1; i > 0; --i)
        std::swap(pool[i], pool[rng.next_below(i + 1)]);
      const auto want = static_cast<std::size_t>(
          std::lround(opts.test_fraction * double(pool.size())));
      const std::size_t n_test =
          std::clamp<std::size_t>(want, 1, pool.size() - 1);
      cand.test.insert(cand.test.end(), pool.begin(), pool.begin() + n_test);
      cand.train.insert(cand.train.end(), pool.begin() + n_test, pool.end());
    }
    std::sort(cand.train.begin(), cand.train.end());
    std::sort(cand.test.begin(), cand.test.end());

    cand.global_ratio = global.ratio();
    cand.train_ratio = tally(cand.train, stats).ratio();
    cand.test_ratio = tally(cand.test, stats).ratio();
    const double dev =
        std::max(std::fabs(cand.train_ratio - cand.global_ratio),
                 std::fabs(cand.test_ratio - cand.global_ratio));
    cand.within_tolerance = dev <= opts.node_ratio_tolerance;
    if (best_dev < 0.0 || dev < best_dev) {
      best_dev = dev;
      best = std::move(cand);
    }
    if (best.within_tolerance) break;
  }
  return best;
}

// --- metrics ---

namespace {

ClassScores class_scores(std::size_t tp, std::size_t fp, std::size_t fn,
                         bool absent) {
  ClassScores s;
  if (absent) {
    s.degenerate = true;
    return s;
  }
  s.precision = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
  s.recall = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
  s.f1 = s.precision + s.recall == 0.0
             ? 0.0
             : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

}  // namespace

MetricsReport f1_scores(std::span<const int> pred, std::span<const int> gold) {
  if (pred.size() != gold.size())
    raise(ErrorCode::LengthMismatch,
          "prediction and gold label counts differ");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, g = gold[i] != 0;
    if (p && g) ++tp;
    else if (p && !g) ++fp;
    else if (!p && g) ++fn;
    else ++tn;
  }
  MetricsReport r;
  r.buggy = class_scores(tp, fp, fn, tp + fp + fn == 0);
  r.clean = class_scores(tn, fn, fp, tn + fn + fp == 0);
  r.buggy_f1 = r.buggy.f1;
  r.macro_f1 = 0.5 * (r.buggy.f1 + r.clean.f1);
  r.degenerate = r.buggy.degenerate || r.clean.degenerate;
  return r;
}

MetricsReport aggregate(std::span<const MetricsReport> reports) {
  if (reports.empty())
    raise(ErrorCode::ConfigError, "cannot aggregate zero reports");
  MetricsReport out;
  const double inv = 1.0 / double(reports.size());
  for (const MetricsReport& r : reports) {
    out.buggy.precision += r.buggy.precision * inv;
    out.buggy.recall += r.buggy.recall * inv;
    out.buggy.f1 += r.buggy.f1 * inv;
    out.clean.precision += r.clean.precision * inv;
    out.clean.recall += r.clean.recall * inv;
    out.clean.f1 += r.clean.f1 * inv;
    out.buggy_f1 += r.buggy_f1 * inv;
    out.macro_f1 += r.macro_f1 * inv;
    out.degenerate = out.degenerate || r.degenerate;
    out.per_seed_buggy_f1.push_back(r.buggy_f1);
    out.per_seed_macro_f1.push_back(r.macro_f1);
  }
  return out;
}

// --- dataset preparation ---

std::vector<EntryStats> PreparedDataset::stats() const {
  std::vector<EntryStats> out;
  out.reserve(contracts.size());
  for (const PreparedContract& c : contracts) {
    EntryStats s;
    s.nodes = c.graph.node_count();
    for (int l : c.node_labels.labels) s.buggy_nodes += std::size_t(l);
    out.push_back(s);
  }
  return out;
}

EmbeddingMatrix contract_features(const HetGraph& g,
                                  const MetapathCatalog& paths,
                                  const std::vector<TypeName>& vocab,
                                  const FeatureOptions& opts,
                                  std::uint64_t salt) {
  WalkConfig wc = opts.walks;
  wc.dim = static_cast<int>(opts.dim);
  wc.seed = hash_combine(opts.seed, salt);
  switch (opts.kind) {
    case FeatureKind::OneHot:
      return one_hot_features(g, vocab, opts.dim);
    case FeatureKind::Node2vec:
      return node2vec_embed(g, wc);
    case FeatureKind::Line:
      return line_embed(g, LineOrder::First, wc);
    case FeatureKind::Metapath2vec:
      return metapath2vec_embed(g, paths, wc);
  }
  raise(ErrorCode::ConfigError, "unknown feature kind");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

PreparedDataset prepare_dataset(std::span<const ContractInput> inputs,
                                const FeatureOptions& feats) {
  for (const ContractInput& in : inputs)
    if (in.bundle == nullptr || in.entry == nullptr)
      raise(ErrorCode::LengthMismatch, "contract input missing bundle/entry");

  PreparedDataset ds;
  ds.contracts.reserve(inputs.size());

  const auto graph_start = Clock::now();
  std::vector<MetapathCatalog> local;
  local.reserve(inputs.size());
  std::set<TypeName, TypeNameLess> vocab;
  for (const ContractInput& in : inputs) {
    FusionResult fused = fuse(*in.bundle);
    for (TypeName t : fused.graph.node_types()) vocab.insert(t);
    local.push_back(MetapathCatalog::extract(fused.graph));

    PreparedContract c;
    c.name = in.bundle->contract.empty() ? in.entry->path
                                         : in.bundle->contract;
    c.category = in.entry->category;
    c.label = in.entry->label;
    c.node_labels = map_line_labels(fused.graph, in.entry->buggy_lines);
    c.graph = std::move(fused.graph);
    ds.contracts.push_back(std::move(c));
  }
  ds.vocab.assign(vocab.begin(), vocab.end());

  // Union path list across contracts, catalog order (lexicographic).
  std::vector<Metapath> all;
  for (const MetapathCatalog& cat : local)
    for (const Metapath& p : cat.paths()) all.push_back(p);
  std::sort(all.begin(), all.end(),
            [](const Metapath& a, const Metapath& b) { return lex_less(a, b); });
  all.erase(std::unique(all.begin(), all.end()), all.end());

  HetGraphBuilder empty_builder(GraphKind::Fused);
  const HetGraph empty = std::move(empty_builder).build();
  ds.catalog = MetapathCatalog::index_with(all, empty);

  const std::size_t dim =
      feats.kind == FeatureKind::OneHot && feats.dim < ds.vocab.size()
          ? ds.vocab.size()
          : feats.dim;
  ds.feature_dim = dim;
  FeatureOptions opts = feats;
  opts.dim = dim;

  for (std::size_t i = 0; i < ds.contracts.size(); ++i)
    ds.contracts[i].paths = MetapathCatalog::index_with(all,
                                                        ds.contracts[i].graph);
  ds.graph_seconds = seconds_since(graph_start);

  const auto feature_start = Clock::now();
  for (std::size_t i = 0; i < ds.contracts.size(); ++i) {
    PreparedContract& c = ds.contracts[i];
    const EmbeddingMatrix em =
        contract_features(c.graph, c.paths, ds.vocab, opts, i);
    c.feats = features_as<float>(em);
  }
  ds.feature_seconds = seconds_since(feature_start);
  return ds;
}

PreparedDataset prepare_dataset_with(std::span<const ContractInput> inputs,
                                     const std::vector<Metapath>& paths,
                                     std::vector<TypeName> vocab,
                                     const FeatureOptions& feats) {
  for (const ContractInput& in : inputs)
    if (in.bundle == nullptr || in.entry == nullptr)
      raise(ErrorCode::LengthMismatch, "contract input missing bundle/entry");
  if (!std::is_sorted(vocab.begin(), vocab.end(), TypeNameLess{}))
    raise(ErrorCode::ConfigError, "scan vocabulary must be sorted");

  PreparedDataset ds;
  ds.vocab = std::move(vocab);
  ds.feature_dim = feats.dim;
  ds.contracts.reserve(inputs.size());

  const auto graph_start = Clock::now();
  HetGraphBuilder empty_builder(GraphKind::Fused);
  const HetGraph empty = std::move(empty_builder).build();
  ds.catalog = MetapathCatalog::index_with(paths, empty);
  for (const ContractInput& in : inputs) {
    FusionResult fused = fuse(*in.bundle);
    PreparedContract c;
    c.name = in.bundle->contract.empty() ? in.entry->path
                                         : in.bundle->contract;
    c.category = in.entry->category;
    c.label = in.entry->label;
    c.node_labels = map_line_labels(fused.graph, in.entry->buggy_lines);
    c.graph = std::move(fused.graph);
    c.paths = MetapathCatalog::index_with(paths, c.graph);
    ds.contracts.push_back(std::move(c));
  }
  ds.graph_seconds = seconds_since(graph_start);

  const auto feature_start = Clock::now();
  for (std::size_t i = 0; i < ds.contracts.size(); ++i) {
    PreparedContract& c = ds.contracts[i];
    const EmbeddingMatrix em =
        contract_features(c.graph, c.paths, ds.vocab, feats, i);
    c.feats = features_as<float>(em);
  }
  ds.feature_seconds = seconds_since(feature_start);
  return ds;
}

PreparedDataset prepare_from_manifest(const DatasetManifest& manifest,
                                      const FeatureOptions& feats) {
  std::vector<ContractGraphBundle> bundles;
  bundles.reserve(manifest.entries.size());
  for (const ManifestEntry& e : manifest.entries)
    bundles.push_back(load_bundle(e.path));
  std::vector<ContractInput> inputs(manifest.entries.size());
  for (std::size_t i = 0; i < inputs.size(); ++i)
    inputs[i] = {&bundles[i], &manifest.entries[i]};
  return prepare_dataset(inputs, feats);
}

// --- phases ---

namespace {

ModelConfig resolve_model(const PreparedDataset& ds, ModelConfig cfg) {
  cfg.d_in = ds.feature_dim;
  return cfg;
}

std::vector<GraphSample<float>> make_samples(
    const PreparedDataset& ds, std::span<const std::size_t> idx) {
  std::vector<GraphSample<float>> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    const PreparedContract& c = ds.contracts[i];
    GraphSample<float> s;
    s.graph = &c.graph;
    s.paths = &c.paths;
    s.feats = &c.feats;
    s.label = c.label == GraphLabel::Buggy ? 1 : 0;
    s.node_labels = c.node_labels.labels;
    out.push_back(std::move(s));
  }
  return out;
}

void check_indices(const PreparedDataset& ds,
                   std::span<const std::size_t> idx) {
  for (std::size_t i : idx)
    if (i >= ds.contracts.size())
      raise(ErrorCode::LengthMismatch, "contract index out of range");
}

std::array<double, 2> softmax2(std::array<float, 2> logits) {
  const double hi = std::max(logits[0], logits[1]);
  const double e0 = std::exp(double(logits[0]) - hi);
  const double e1 = std::exp(double(logits[1]) - hi);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

}  // namespace

CoarseResult apply_coarse(const Model<float>& model,
                          const PreparedDataset& ds,
                          std::span<const std::size_t> test) {
  check_indices(ds, test);

  CoarseResult out;
  out.test.assign(test.begin(), test.end());
  std::sort(out.test.begin(), out.test.end());

  const auto infer_start = Clock::now();
  std::vector<int> gold;
  for (std::size_t i : out.test) {
    const PreparedContract& c = ds.contracts[i];
    const auto logits = model.coarse_logits(c.graph, c.paths, c.feats);
    const auto probs = softmax2(logits);
    out.pred.push_back(probs[1] > probs[0] ? 1 : 0);
    out.confidence.push_back(probs[1]);
    gold.push_back(c.label == GraphLabel::Buggy ? 1 : 0);
  }
  out.metrics = f1_scores(out.pred, gold);
  out.infer_seconds = seconds_since(infer_start);
  return out;
}

CoarseResult run_coarse(const PreparedDataset& ds,
                        std::span<const std::size_t> train,
                        std::span<const std::size_t> test,
                        const DetectorConfig& cfg) {
  check_indices(ds, train);

  Model<float> model(resolve_model(ds, cfg.model), ds.vocab, ds.catalog);
  const auto samples = make_samples(ds, train);
  const auto train_start = Clock::now();
  TrainHistory history =
      mando::train(model, Task::Coarse,
                   std::span<const GraphSample<float>>(samples),
                   cfg.coarse_train);
  const double train_seconds = seconds_since(train_start);

  CoarseResult out = apply_coarse(model, ds, test);
  out.history = std::move(history);
  out.train_seconds = train_seconds;
  out.model = std::move(model);
  return out;
}

FineResult apply_fine(const Model<float>& model, const PreparedDataset& ds,
                      std::span<const std::size_t> scan) {
  check_indices(ds, scan);

  FineResult out;
  out.scanned.assign(scan.begin(), scan.end());
  std::sort(out.scanned.begin(), out.scanned.end());

  const auto infer_start = Clock::now();
  // Dedup key: (contract, file, start, end) -> max confidence.
  std::map<std::tuple<std::string, std::string, std::uint32_t, std::uint32_t>,
           LineFinding>
      dedup;
  std::vector<int> all_pred, all_gold;
  for (std::size_t i : out.scanned) {
    const PreparedContract& c = ds.contracts[i];
    const Tensor<float> logits = model.fine_logits(c.graph, c.paths, c.feats);
    std::vector<int> pred(c.graph.node_count(), 0);
    for (NodeId v = 0; v < c.graph.node_count(); ++v) {
      const auto probs = softmax2({logits.at(v, 0), logits.at(v, 1)});
      pred[v] = probs[1] > probs[0] ? 1 : 0;
      all_pred.push_back(pred[v]);
      all_gold.push_back(c.node_labels.labels[v]);
      if (pred[v] != 1) continue;
      const HetNode& node = c.graph.node(v);
      if (!node.span) continue;
      LineFinding f;
      f.contract = c.name;
      f.file = node.span->file;
      f.line_start = node.span->line_start;
      f.line_end = node.span->line_end;
      f.category = c.category;
      f.confidence = probs[1];
      const auto key =
          std::make_tuple(f.contract, f.file, f.line_start, f.line_end);
      auto [it, fresh] = dedup.emplace(key, f);
      if (!fresh && f.confidence > it->second.confidence) it->second = f;
    }
    out.node_pred.push_back(std::move(pred));
  }
  for (auto& [key, f] : dedup) out.findings.push_back(std::move(f));
  out.metrics = f1_scores(all_pred, all_gold);
  out.infer_seconds = seconds_since(infer_start);
  return out;
}

FineResult run_fine(const PreparedDataset& ds,
                    std::span<const std::size_t> train,
                    std::span<const std::size_t> scan,
                    const DetectorConfig& cfg) {
  check_indices(ds, train);

  Model<float> model(resolve_model(ds, cfg.model), ds.vocab, ds.catalog);
  const auto samples = make_samples(ds, train);
  const auto train_start = Clock::now();
  TrainHistory history =
      mando::train(model, Task::Fine,
                   std::span<const GraphSample<float>>(samples),
                   cfg.fine_train);
  const double train_seconds = seconds_since(train_start);

  FineResult out = apply_fine(model, ds, scan);
  out.history = std::move(history);
  out.train_seconds = train_seconds;
  out.model = std::move(model);
  return out;
}

DetectionReport two_phase(const PreparedDataset& ds,
                          std::span<const std::size_t> train,
                          std::span<const std::size_t> test,
                          const DetectorConfig& cfg) {
  DetectionReport report;
  report.coarse = run_coarse(ds, train, test, cfg);

  std::vector<std::size_t> flagged;
  for (std::size_t k = 0; k < report.coarse.test.size(); ++k)
    if (report.coarse.pred[k] == 1) flagged.push_back(report.coarse.test[k]);

  std::vector<std::size_t> fine_train;
  for (std::size_t i : train)
    if (ds.contracts[i].label == GraphLabel::Buggy) fine_train.push_back(i);

  report.fine = run_fine(ds, fine_train, flagged, cfg);
  return report;
}

bool all_clear(const DetectionReport& report) {
  for (int p : report.coarse.pred)
    if (p == 1) return false;
  return report.fine.findings.empty();
}

// --- reports ---

namespace {

json metrics_to_json(const MetricsReport& m) {
  json j;
  j["buggy_f1"] = m.buggy_f1;
  j["macro_f1"] = m.macro_f1;
  j["degenerate"] = m.degenerate;
  json per_class;
  for (const auto& [name, s] :
       {std::pair<const char*, const ClassScores&>{"buggy", m.buggy},
        std::pair<const char*, const ClassScores&>{"clean", m.clean}}) {
    json c;
    c["precision"] = s.precision;
    c["recall"] = s.recall;
    c["f1"] = s.f1;
    c["degenerate"] = s.degenerate;
    per_class[name] = std::move(c);
  }
  j["per_class"] = std::move(per_class);
  if (!m.per_seed_buggy_f1.empty()) {
    j["per_seed_buggy_f1"] = m.per_seed_buggy_f1;
    j["per_seed_macro_f1"] = m.per_seed_macro_f1;
  }
  return j;
}

json finding_to_json(const LineFinding& f) {
  json j;
  j["contract"] = f.contract;
  j["file"] = f.file;
  j["line_start"] = f.line_start;
  j["line_end"] = f.line_end;
  j["category"] = std::string(bug_category_name(f.category));
  j["confidence"] = f.confidence;
  return j;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string metrics_json(const MetricsReport& report) {
  return metrics_to_json(report).dump(2) + "\n";
}

std::string report_json(const DetectionReport& report) {
  json root;
  root["schema_version"] = "1";

  json coarse;
  json contracts = json::array();
  for (std::size_t k = 0; k < report.coarse.test.size(); ++k) {
    json c;
    c["index"] = report.coarse.test[k];
    c["predicted"] = report.coarse.pred[k] == 1 ? "buggy" : "clean";
    c["confidence"] = report.coarse.confidence[k];
    contracts.push_back(std::move(c));
  }
  coarse["contracts"] = std::move(contracts);
  coarse["metrics"] = metrics_to_json(report.coarse.metrics);
  root["coarse"] = std::move(coarse);

  json fine;
  fine["scanned"] = report.fine.scanned;
  json findings = json::array();
  for (const LineFinding& f : report.fine.findings)
    findings.push_back(finding_to_json(f));
  fine["findings"] = std::move(findings);
  fine["metrics"] = metrics_to_json(report.fine.metrics);
  root["fine"] = std::move(fine);

  return root.dump(2) + "\n";
}

std::string report_csv(const DetectionReport& report) {
  std::string out = "contract,file,line_start,line_end,category,confidence\n";
  char buf[32];
  for (const LineFinding& f : report.fine.findings) {
    out += csv_escape(f.contract);
    out += ',';
    out += csv_escape(f.file);
    out += ',';
    out += std::to_string(f.line_start);
    out += ',';
    out += std::to_string(f.line_end);
    out += ',';
    out += bug_category_name(f.category);
    out += ',';
    std::snprintf(buf, sizeof(buf), "%.6f", f.confidence);
    out += buf;
    out += '\n';
  }
  return out;
}

}  // namespace mando

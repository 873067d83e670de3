// mando: vulnerability detection for Solidity contracts over fused
// heterogeneous graphs. Thin shell over the shared library; every analysis
// step goes through the C interface in mando.h.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mando.h"

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(mando_status st) {
  const char* detail = mando_last_error();
  std::string msg = mando_status_name(st);
  if (detail != nullptr && detail[0] != '\0') {
    msg += ": ";
    msg += detail;
  }
  throw std::runtime_error(msg);
}

void check(mando_status st) {
  if (st != MANDO_OK) fail(st);
}

std::string take_string(char* s) {
  std::string out = s == nullptr ? std::string() : std::string(s);
  mando_string_free(s);
  return out;
}

struct BundleFree {
  void operator()(mando_bundle* b) const { mando_bundle_free(b); }
};
struct DatasetFree {
  void operator()(mando_dataset* d) const { mando_dataset_free(d); }
};
struct ModelFree {
  void operator()(mando_model* m) const { mando_model_free(m); }
};
struct ReportFree {
  void operator()(mando_report* r) const { mando_report_free(r); }
};
using BundlePtr = std::unique_ptr<mando_bundle, BundleFree>;
using DatasetPtr = std::unique_ptr<mando_dataset, DatasetFree>;
using ModelPtr = std::unique_ptr<mando_model, ModelFree>;
using ReportPtr = std::unique_ptr<mando_report, ReportFree>;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
  }
};

// Phase timings go to stderr so files and stdout stay byte-stable.
void print_timing(const std::string& phase, double seconds) {
  std::fprintf(stderr, "[mando] %-12s %9.3f s\n", phase.c_str(), seconds);
}

void note(const std::string& text) {
  std::fprintf(stderr, "[mando] %s\n", text.c_str());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// The echo is a complete TOML config; `mando <cmd> --config <echo>` repeats
// the run byte for byte.
void write_echo(const CLI::App& cmd, const fs::path& path) {
  write_text(path, cmd.config_to_str(true, false));
}

// out/report.json -> out/report.config.toml
fs::path sibling_config(const fs::path& artifact) {
  fs::path p = artifact;
  p.replace_extension();
  p += ".config.toml";
  return p;
}

fs::path default_output(const std::string& input, const char* ext) {
  return fs::path(input).replace_extension(ext);
}

DatasetPtr open_dataset(const std::string& manifest,
                        const std::string& feature, std::size_t dim,
                        std::uint64_t feature_seed) {
  mando_dataset* d = nullptr;
  check(mando_dataset_from_manifest(manifest.c_str(), feature.c_str(), dim,
                                    feature_seed, &d));
  DatasetPtr own(d);
  double graph_s = 0.0, feat_s = 0.0;
  check(mando_dataset_timings(d, &graph_s, &feat_s));
  print_timing("graph build", graph_s);
  print_timing("features", feat_s);
  return own;
}

void emit_report(const mando_report* r, const std::string& format,
                 const std::string& out_dir) {
  char* text = nullptr;
  if (format == "csv")
    check(mando_report_csv(r, &text));
  else
    check(mando_report_json(r, &text));
  const std::string body = take_string(text);
  std::fputs(body.c_str(), stdout);
  std::fflush(stdout);
  if (!out_dir.empty()) {
    const fs::path path = fs::path(out_dir) / ("report." + format);
    write_text(path, body);
    note("wrote " + path.string());
  }
}

int report_exit_code(const mando_report* r) {
  const int clear = mando_report_all_clear(r);
  if (clear < 0) fail(static_cast<mando_status>(clear));
  return clear == 1 ? 0 : 1;
}

const std::vector<std::string> kFeatureKinds = {"one_hot", "node2vec", "line",
                                                "metapath2vec"};

struct BuildGraphArgs {
  std::string input;
  std::string output;
};

struct EmbedArgs {
  std::string input;
  std::string output;
  std::string method = "one_hot";
  std::size_t dim = 0;
  std::uint64_t feature_seed = 0;
};

struct TrainArgs {
  std::string manifest;
  std::string out_dir = ".";
  std::string task = "both";
  std::string feature = "one_hot";
  std::size_t dim = 0;
  std::uint64_t feature_seed = 0;
  std::size_t d_type = 128;
  std::size_t heads = 8;
  std::size_t d_head = 32;
  std::size_t hidden = 64;
  std::size_t coarse_epochs = 0;
  std::size_t fine_epochs = 0;
  double dropout = 0.6;
  double lr_start = -1.0;
  double lr_max = -1.0;
  double test_fraction = 0.0;
  std::uint64_t seed = 0;
};

struct DetectArgs {
  std::vector<std::string> contracts;
  std::string manifest;
  std::string model;
  std::string coarse_model;
  std::string catalog;
  std::string category = "reentrancy";
  std::string feature = "one_hot";
  std::size_t dim = 0;
  std::uint64_t feature_seed = 0;
  std::string format = "json";
  std::string out_dir;
  std::size_t d_type = 128;
  std::size_t heads = 8;
  std::size_t d_head = 32;
  std::size_t hidden = 64;
  std::size_t coarse_epochs = 0;
  std::size_t fine_epochs = 0;
  double dropout = 0.6;
  double lr_start = -1.0;
  double lr_max = -1.0;
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
};

struct EvalArgs {
  std::string manifest;
  std::string out_dir;
  std::size_t seeds = 20;
  std::string feature = "one_hot";
  std::size_t dim = 0;
  std::uint64_t feature_seed = 0;
  std::size_t d_type = 128;
  std::size_t heads = 8;
  std::size_t d_head = 32;
  std::size_t hidden = 64;
  std::size_t coarse_epochs = 0;
  std::size_t fine_epochs = 0;
  double dropout = 0.6;
  double lr_start = -1.0;
  double lr_max = -1.0;
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
};

void add_feature_flags(CLI::App* cmd, std::string& feature, std::size_t& dim,
                       std::uint64_t& feature_seed) {
  cmd->add_option("--feature", feature,
                  "Node feature method: one_hot, node2vec, line, or "
                  "metapath2vec")
      ->check(CLI::IsMember(kFeatureKinds));
  cmd->add_option("--dim", dim, "Feature width (0 = method default)");
  cmd->add_option("--feature-seed", feature_seed,
                  "Seed for stochastic feature methods");
}

template <typename Args>
void add_model_flags(CLI::App* cmd, Args& a) {
  cmd->add_option("--d-type", a.d_type, "Per-type transform width");
  cmd->add_option("--heads", a.heads, "Attention heads");
  cmd->add_option("--d-head", a.d_head, "Per-head width");
  cmd->add_option("--hidden", a.hidden, "Classifier hidden width");
  cmd->add_option("--coarse-epochs", a.coarse_epochs,
                  "Contract-level epochs (0 = default 50)");
  cmd->add_option("--fine-epochs", a.fine_epochs,
                  "Line-level epochs (0 = default 100)");
  cmd->add_option("--dropout", a.dropout, "Training dropout");
  cmd->add_option("--lr-start", a.lr_start,
                  "One-cycle start learning rate (negative = task default)");
  cmd->add_option("--lr-max", a.lr_max,
                  "One-cycle peak learning rate (negative = task default)");
  cmd->add_option("--seed", a.seed,
                  "Master seed for splitting, initialization, and training")
      ->envname("MANDO_SEED");
}

void fill_detect_options(mando_detect_options& o, const DetectArgs& a) {
  mando_detect_options_init(&o);
  o.test_fraction = a.test_fraction;
  o.split_seed = a.seed;
  o.d_type = a.d_type;
  o.heads = a.heads;
  o.d_head = a.d_head;
  o.hidden = a.hidden;
  o.coarse_epochs = a.coarse_epochs;
  o.fine_epochs = a.fine_epochs;
  o.dropout = a.dropout;
  o.lr_start = a.lr_start;
  o.lr_max = a.lr_max;
  o.model_seed = a.seed;
  o.train_seed = a.seed;
}

void run_build_graph(const CLI::App& cmd, const BuildGraphArgs& a) {
  Timer t;
  mando_bundle* raw = nullptr;
  check(mando_bundle_from_file(a.input.c_str(), &raw));
  BundlePtr b(raw);
  const fs::path out = a.output.empty()
                           ? default_output(a.input, ".graph.json")
                           : fs::path(a.output);
  char* text = nullptr;
  check(mando_bundle_export_json(b.get(), &text));
  write_text(out, take_string(text));
  print_timing("graph build", t.seconds());
  std::size_t nodes = 0, edges = 0;
  check(mando_bundle_fused_counts(b.get(), &nodes, &edges));
  note("wrote " + out.string() + " (" + std::to_string(nodes) + " nodes, " +
       std::to_string(edges) + " edges)");
  write_echo(cmd, sibling_config(out));
}

void run_embed(const CLI::App& cmd, const EmbedArgs& a) {
  Timer t_graph;
  mando_bundle* raw = nullptr;
  check(mando_bundle_from_file(a.input.c_str(), &raw));
  BundlePtr b(raw);
  print_timing("graph build", t_graph.seconds());
  const fs::path out = a.output.empty() ? default_output(a.input, ".feat")
                                        : fs::path(a.output);
  Timer t_feat;
  check(mando_bundle_features(b.get(), a.method.c_str(), a.dim,
                              a.feature_seed, out.string().c_str()));
  print_timing("features", t_feat.seconds());
  note("wrote " + out.string());
  write_echo(cmd, sibling_config(out));
}

void run_train(const CLI::App& cmd, const TrainArgs& a) {
  DatasetPtr d = open_dataset(a.manifest, a.feature, a.dim, a.feature_seed);
  const fs::path out(a.out_dir);
  fs::create_directories(out);
  const fs::path catalog = out / "catalog.json";
  check(mando_dataset_save_catalog(d.get(), catalog.string().c_str()));

  nlohmann::json history = nlohmann::json::object();
  for (const char* task : {"coarse", "fine"}) {
    const bool fine = std::string(task) == "fine";
    if (a.task != "both" && a.task != task) continue;
    mando_train_options o;
    mando_train_options_init(&o);
    o.task = fine ? MANDO_TASK_FINE : MANDO_TASK_COARSE;
    o.d_type = a.d_type;
    o.heads = a.heads;
    o.d_head = a.d_head;
    o.hidden = a.hidden;
    o.epochs = fine ? a.fine_epochs : a.coarse_epochs;
    o.dropout = a.dropout;
    o.lr_start = a.lr_start;
    o.lr_max = a.lr_max;
    o.model_seed = a.seed;
    // Matches detect: the fine phase trains one seed after the coarse one.
    o.train_seed = fine ? a.seed + 1 : a.seed;
    o.test_fraction = a.test_fraction;
    o.split_seed = a.seed;

    Timer t;
    mando_model* raw = nullptr;
    char* hist = nullptr;
    check(mando_train(d.get(), &o, &raw, &hist));
    ModelPtr m(raw);
    print_timing(std::string("train ") + task, t.seconds());
    const fs::path ckpt = out / (std::string(task) + ".ckpt");
    check(mando_model_save(m.get(), ckpt.string().c_str()));
    note("wrote " + ckpt.string());
    history[task] = nlohmann::json::parse(take_string(hist));
  }
  write_text(out / "history.json", history.dump(2) + "\n");
  note("wrote " + (out / "history.json").string() + " and " +
       catalog.string());
  write_echo(cmd, out / "train.config.toml");
}

int run_detect_scan(const CLI::App& cmd, const DetectArgs& a) {
  if (a.contracts.empty())
    throw std::runtime_error("scan mode needs contract files to scan");
  if (!a.manifest.empty())
    throw std::runtime_error("--manifest and --model are exclusive");

  mando_model* raw_fine = nullptr;
  check(mando_model_load(a.model.c_str(), nullptr, &raw_fine));
  ModelPtr fine(raw_fine);
  ModelPtr coarse;
  if (!a.coarse_model.empty()) {
    mando_model* raw_coarse = nullptr;
    check(mando_model_load(a.coarse_model.c_str(), nullptr, &raw_coarse));
    coarse.reset(raw_coarse);
  }

  const fs::path catalog =
      a.catalog.empty() ? fs::path(a.model).parent_path() / "catalog.json"
                        : fs::path(a.catalog);
  std::vector<const char*> files;
  files.reserve(a.contracts.size());
  for (const std::string& c : a.contracts) files.push_back(c.c_str());

  mando_dataset* raw_ds = nullptr;
  check(mando_dataset_for_scan(files.data(), files.size(),
                               a.category.c_str(), catalog.string().c_str(),
                               fine.get(), a.feature.c_str(), a.feature_seed,
                               &raw_ds));
  DatasetPtr ds(raw_ds);
  double graph_s = 0.0, feat_s = 0.0;
  check(mando_dataset_timings(ds.get(), &graph_s, &feat_s));
  print_timing("graph build", graph_s);
  print_timing("features", feat_s);

  Timer t;
  mando_report* raw_report = nullptr;
  check(mando_scan(fine.get(), coarse.get(), ds.get(), &raw_report));
  ReportPtr report(raw_report);
  print_timing("inference", t.seconds());

  emit_report(report.get(), a.format, a.out_dir);
  if (!a.out_dir.empty())
    write_echo(cmd, fs::path(a.out_dir) / "detect.config.toml");
  return report_exit_code(report.get());
}

int run_detect_corpus(const CLI::App& cmd, const DetectArgs& a) {
  if (a.manifest.empty())
    throw std::runtime_error("need --manifest, or --model with files");
  if (!a.contracts.empty())
    throw std::runtime_error(
        "positional contract files need --model (scan mode)");

  DatasetPtr d = open_dataset(a.manifest, a.feature, a.dim, a.feature_seed);
  mando_detect_options o;
  fill_detect_options(o, a);
  std::string save_coarse, save_fine;
  if (!a.out_dir.empty()) {
    const fs::path out(a.out_dir);
    fs::create_directories(out);
    save_coarse = (out / "coarse.ckpt").string();
    save_fine = (out / "fine.ckpt").string();
    o.save_coarse = save_coarse.c_str();
    o.save_fine = save_fine.c_str();
    check(mando_dataset_save_catalog(d.get(),
                                     (out / "catalog.json").string().c_str()));
  }

  mando_report* raw_report = nullptr;
  check(mando_detect(d.get(), &o, &raw_report));
  ReportPtr report(raw_report);
  double phases[4] = {0, 0, 0, 0};
  check(mando_report_timings(report.get(), phases));
  print_timing("train", phases[0] + phases[2]);
  print_timing("inference", phases[1] + phases[3]);

  emit_report(report.get(), a.format, a.out_dir);
  if (!a.out_dir.empty()) {
    note("wrote " + save_coarse + " and " + save_fine);
    write_echo(cmd, fs::path(a.out_dir) / "detect.config.toml");
  }
  return report_exit_code(report.get());
}

void run_eval(const CLI::App& cmd, const EvalArgs& a) {
  DatasetPtr d = open_dataset(a.manifest, a.feature, a.dim, a.feature_seed);
  DetectArgs base;
  base.test_fraction = a.test_fraction;
  base.d_type = a.d_type;
  base.heads = a.heads;
  base.d_head = a.d_head;
  base.hidden = a.hidden;
  base.coarse_epochs = a.coarse_epochs;
  base.fine_epochs = a.fine_epochs;
  base.dropout = a.dropout;
  base.lr_start = a.lr_start;
  base.lr_max = a.lr_max;
  base.seed = a.seed;
  mando_detect_options o;
  fill_detect_options(o, base);

  Timer t;
  char* metrics = nullptr;
  check(mando_eval(d.get(), &o, a.seeds, &metrics));
  print_timing("eval " + std::to_string(a.seeds) + "x", t.seconds());
  const std::string body = take_string(metrics);
  std::fputs(body.c_str(), stdout);
  std::fflush(stdout);
  if (!a.out_dir.empty()) {
    const fs::path out(a.out_dir);
    write_text(out / "metrics.json", body);
    note("wrote " + (out / "metrics.json").string());
    write_echo(cmd, out / "eval.config.toml");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "mando: two-phase vulnerability detection for Solidity contracts over "
      "fused heterogeneous graphs"};
  app.set_version_flag("--version", std::string(mando_version()));
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default(true);

  int exit_code = 0;

  BuildGraphArgs bg;
  CLI::App* c_bg = app.add_subcommand(
      "build-graph",
      "Parse a contract and write its fused heterogeneous graph as JSON");
  c_bg->set_config("--config", "", "Read options from a TOML file");
  c_bg->add_option("input", bg.input,
                   "Solidity source (.sol) or exported graph (.json)")
      ->required();
  c_bg->add_option("-o,--output", bg.output,
                   "Output path (default: <input>.graph.json)");
  c_bg->callback([&] { run_build_graph(*c_bg, bg); });

  EmbedArgs em;
  CLI::App* c_em = app.add_subcommand(
      "embed", "Write node features for one contract graph");
  c_em->set_config("--config", "", "Read options from a TOML file");
  c_em->add_option("input", em.input,
                   "Solidity source (.sol) or exported graph (.json)")
      ->required();
  c_em->add_option("-o,--output", em.output,
                   "Output feature file (default: <input>.feat)");
  c_em->add_option("--method", em.method,
                   "Feature method: one_hot, node2vec, line, or metapath2vec")
      ->check(CLI::IsMember(kFeatureKinds));
  c_em->add_option("--dim", em.dim, "Feature width (0 = method default)");
  c_em->add_option("--feature-seed", em.feature_seed,
                   "Seed for stochastic feature methods");
  c_em->callback([&] { run_embed(*c_em, em); });

  TrainArgs tr;
  CLI::App* c_tr = app.add_subcommand(
      "train", "Train detection models on a labeled corpus");
  c_tr->set_config("--config", "", "Read options from a TOML file");
  c_tr->add_option("-m,--manifest", tr.manifest,
                   "Corpus manifest (JSON lines)")
      ->required();
  c_tr->add_option("-o,--out-dir", tr.out_dir,
                   "Directory for checkpoints, catalog, and history");
  c_tr->add_option("--task", tr.task, "Which models to train")
      ->check(CLI::IsMember({"coarse", "fine", "both"}));
  add_feature_flags(c_tr, tr.feature, tr.dim, tr.feature_seed);
  add_model_flags(c_tr, tr);
  c_tr->add_option("--test-fraction", tr.test_fraction,
                   "Stratified holdout excluded from training (0 = none)");
  c_tr->callback([&] { run_train(*c_tr, tr); });

  DetectArgs de;
  CLI::App* c_de = app.add_subcommand(
      "detect",
      "Detect vulnerable contracts and lines. With --manifest: split the "
      "corpus, train both phases, and report on the holdout. With --model: "
      "scan the given files with saved checkpoints.");
  c_de->set_config("--config", "", "Read options from a TOML file");
  c_de->add_option("contracts", de.contracts,
                   "Contract files to scan (scan mode, needs --model)");
  c_de->add_option("-m,--manifest", de.manifest,
                   "Corpus manifest (JSON lines)");
  c_de->add_option("--model", de.model,
                   "Line-level checkpoint; switches to scan mode");
  c_de->add_option("--coarse-model", de.coarse_model,
                   "Contract-level checkpoint gating the scan");
  c_de->add_option("--catalog", de.catalog,
                   "Metapath list written at training time (default: "
                   "catalog.json next to --model)");
  c_de->add_option("--category", de.category,
                   "Bug category label for scan findings");
  c_de->add_option("--format", de.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}));
  c_de->add_option("-o,--out-dir", de.out_dir,
                   "Directory for the report and trained checkpoints");
  add_feature_flags(c_de, de.feature, de.dim, de.feature_seed);
  add_model_flags(c_de, de);
  c_de->add_option("--test-fraction", de.test_fraction,
                   "Stratified holdout share scored by the report");
  c_de->callback([&] {
    exit_code = de.model.empty() ? run_detect_corpus(*c_de, de)
                                 : run_detect_scan(*c_de, de);
  });

  EvalArgs ev;
  CLI::App* c_ev = app.add_subcommand(
      "eval", "Repeat split + detection over several seeds and aggregate");
  c_ev->set_config("--config", "", "Read options from a TOML file");
  c_ev->add_option("-m,--manifest", ev.manifest,
                   "Corpus manifest (JSON lines)")
      ->required();
  c_ev->add_option("-o,--out-dir", ev.out_dir, "Directory for metrics.json");
  c_ev->add_option("--seeds", ev.seeds, "Number of independent runs");
  add_feature_flags(c_ev, ev.feature, ev.dim, ev.feature_seed);
  add_model_flags(c_ev, ev);
  c_ev->add_option("--test-fraction", ev.test_fraction,
                   "Stratified holdout share scored each run");
  c_ev->callback([&] { run_eval(*c_ev, ev); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return exit_code;
}

// Exercises the shared-library C interface as an external consumer: only
// mando.h, no core headers.

#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mando.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("mando_capi_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& text) const {
    const fs::path p = path / name;
    std::ofstream out(p);
    out << text;
    return p.string();
  }
};

std::string clean_source(int k) {
  return "pragma solidity ^0.4.24;\n"
         "contract Clean" + std::to_string(k) + " {\n"
         "    uint total;\n"
         "    function add(uint x) public {\n"
         "        uint a = x + " + std::to_string(2 + k) + ";\n"
         "        require(a > 1);\n"
         "        total = total + a;\n"
         "    }\n"
         "    function sub(uint x) public {\n"
         "        uint b = x + " + std::to_string(3 + k) + ";\n"
         "        require(b > 2);\n"
         "        total = total - b;\n"
         "    }\n"
         "}\n";
}

std::string buggy_source(int k) {
  return "pragma solidity ^0.4.24;\n"
         "contract Vuln" + std::to_string(k) + " {\n"
         "    mapping(address => uint) balances;\n"
         "    uint total;\n"
         "    function put(uint amount) public {\n"
         "        uint a = amount + " + std::to_string(1 + k) + ";\n"
         "        require(a > 0);\n"
         "        total = total + a;\n"
         "    }\n"
         "    function drain(uint amount) public {\n"
         "        if (amount <= balances[msg.sender]) {\n"
         "            msg.sender.call.value(amount)();\n"
         "            balances[msg.sender] = balances[msg.sender] - amount;\n"
         "        }\n"
         "    }\n"
         "}\n";
}

std::string manifest_line(const std::string& file, bool buggy) {
  nlohmann::json j;
  j["path"] = file;
  j["category"] = "reentrancy";
  j["label"] = buggy ? "buggy" : "clean";
  if (buggy) {
    nlohmann::json lines = nlohmann::json::array();
    for (int l : {10, 11, 12, 13}) {
      nlohmann::json bl;
      bl["file"] = file;
      bl["line"] = l;
      lines.push_back(bl);
    }
    j["buggy_lines"] = lines;
  }
  return j.dump() + "\n";
}

/// 4 clean + 4 buggy contracts plus a manifest with dir-relative paths.
std::string write_corpus(const TempDir& dir) {
  std::string manifest;
  for (int k = 0; k < 4; ++k) {
    const std::string name = "Clean" + std::to_string(k) + ".sol";
    dir.file(name, clean_source(k));
    manifest += manifest_line(name, false);
  }
  for (int k = 0; k < 4; ++k) {
    const std::string name = "Vuln" + std::to_string(k) + ".sol";
    dir.file(name, buggy_source(k));
    manifest += manifest_line(name, true);
  }
  return dir.file("corpus.jsonl", manifest);
}

mando_train_options tiny_train(int task) {
  mando_train_options to;
  mando_train_options_init(&to);
  to.task = task;
  to.d_type = 8;
  to.heads = 2;
  to.d_head = 4;
  to.hidden = 8;
  to.epochs = 2;
  to.dropout = 0.0;
  return to;
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("version and status names") {
  CHECK(std::string(mando_version()) == "0.1.0");
  CHECK(std::string(mando_status_name(MANDO_OK)) == "ok");
  CHECK(std::string(mando_status_name(MANDO_ERR_PARSE)) == "parse_error");
  CHECK(std::string(mando_status_name(MANDO_ERR_CATALOG_MISMATCH)) ==
        "catalog_mismatch");
  CHECK(std::string(mando_status_name(9999)) == "unknown");
}

TEST_CASE("bundle lifecycle: source, counts, json, digest") {
  mando_bundle* b = nullptr;
  REQUIRE(mando_bundle_from_source(buggy_source(0).c_str(), "Vuln0.sol",
                                   &b) == MANDO_OK);
  size_t nodes = 0, edges = 0;
  CHECK(mando_bundle_fused_counts(b, &nodes, &edges) == MANDO_OK);
  CHECK(nodes > 10);
  CHECK(edges > 8);

  size_t n_paths = 0;
  CHECK(mando_bundle_metapath_count(b, &n_paths) == MANDO_OK);
  CHECK(n_paths > 5);
  uint64_t digest = 0;
  CHECK(mando_bundle_catalog_digest(b, &digest) == MANDO_OK);
  CHECK(digest != 0);

  char* paths_text = nullptr;
  REQUIRE(mando_bundle_metapaths(b, &paths_text) == MANDO_OK);
  CHECK(std::string(paths_text).find("EXPRESSION") != std::string::npos);
  mando_string_free(paths_text);

  char* json_text = nullptr;
  REQUIRE(mando_bundle_export_json(b, &json_text) == MANDO_OK);

  // Round trip through the interchange file keeps structure and digest.
  TempDir dir;
  const std::string json_path = dir.file("Vuln0.json", json_text);
  mando_string_free(json_text);
  mando_bundle* b2 = nullptr;
  REQUIRE(mando_bundle_from_file(json_path.c_str(), &b2) == MANDO_OK);
  size_t nodes2 = 0, edges2 = 0;
  CHECK(mando_bundle_fused_counts(b2, &nodes2, &edges2) == MANDO_OK);
  CHECK(nodes2 == nodes);
  CHECK(edges2 == edges);
  uint64_t digest2 = 0;
  CHECK(mando_bundle_catalog_digest(b2, &digest2) == MANDO_OK);
  CHECK(digest2 == digest);

  mando_bundle_free(b2);
  mando_bundle_free(b);
}

TEST_CASE("errors surface codes and messages") {
  mando_bundle* b = nullptr;
  CHECK(mando_bundle_from_source(nullptr, "x", &b) == MANDO_ERR_ARGUMENT);
  CHECK(std::string(mando_last_error()).find("null") != std::string::npos);

  const mando_status st =
      mando_bundle_from_source("contract {{{{", "bad.sol", &b);
  CHECK(st != MANDO_OK);
  CHECK(std::string(mando_last_error()).size() > 0);

  CHECK(mando_bundle_from_file("/nonexistent/file.sol", &b) == MANDO_ERR_IO);

  mando_dataset* d = nullptr;
  TempDir dir;
  const std::string bad_manifest = dir.file("bad.jsonl", "{not json\n");
  CHECK(mando_dataset_from_manifest(bad_manifest.c_str(), "one_hot", 0, 0,
                                    &d) == MANDO_ERR_SCHEMA);
  CHECK(mando_dataset_from_manifest(bad_manifest.c_str(), "alchemy", 0, 0,
                                    &d) == MANDO_ERR_SCHEMA);
}

TEST_CASE("dataset, training, persistence, scoring") {
  TempDir dir;
  const std::string manifest = write_corpus(dir);

  mando_dataset* d = nullptr;
  REQUIRE(mando_dataset_from_manifest(manifest.c_str(), "one_hot", 16, 0,
                                      &d) == MANDO_OK);
  size_t n = 0;
  CHECK(mando_dataset_size(d, &n) == MANDO_OK);
  REQUIRE(n == 8);

  const char* name = nullptr;
  size_t nodes = 0, buggy_nodes = 0;
  int label = -1;
  REQUIRE(mando_dataset_entry(d, 0, &name, &nodes, &buggy_nodes, &label) ==
          MANDO_OK);
  CHECK(std::string(name) == "Clean0");
  CHECK(nodes > 0);
  CHECK(buggy_nodes == 0);
  CHECK(label == 0);
  REQUIRE(mando_dataset_entry(d, 4, &name, &nodes, &buggy_nodes, &label) ==
          MANDO_OK);
  CHECK(std::string(name) == "Vuln0");
  CHECK(buggy_nodes > 0);
  CHECK(label == 1);
  CHECK(mando_dataset_entry(d, 99, nullptr, nullptr, nullptr, nullptr) ==
        MANDO_ERR_ARGUMENT);

  uint64_t ds_digest = 0;
  CHECK(mando_dataset_catalog_digest(d, &ds_digest) == MANDO_OK);
  CHECK(ds_digest != 0);

  mando_train_options to = tiny_train(MANDO_TASK_COARSE);
  mando_model* m = nullptr;
  char* history = nullptr;
  REQUIRE(mando_train(d, &to, &m, &history) == MANDO_OK);
  REQUIRE(history != nullptr);
  const nlohmann::json h = nlohmann::json::parse(history);
  mando_string_free(history);
  CHECK(h.at("loss").size() == 2);
  CHECK(h.at("accuracy").size() == 2);

  double p = -1.0;
  REQUIRE(mando_model_coarse_score(m, d, 0, &p) == MANDO_OK);
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);

  char* emb = nullptr;
  REQUIRE(mando_model_embed_json(m, d, 0, &emb) == MANDO_OK);
  const nlohmann::json rows = nlohmann::json::parse(emb);
  mando_string_free(emb);
  REQUIRE(rows.is_array());
  REQUIRE(mando_dataset_entry(d, 0, nullptr, &nodes, nullptr, nullptr) ==
          MANDO_OK);
  CHECK(rows.size() == nodes);
  CHECK(rows[0].size() == 8);  // heads * d_head

  const std::string ckpt = (dir.path / "coarse.bin").string();
  REQUIRE(mando_model_save(m, ckpt.c_str()) == MANDO_OK);
  mando_model* loaded = nullptr;
  REQUIRE(mando_model_load(ckpt.c_str(), d, &loaded) == MANDO_OK);
  double p2 = -1.0;
  REQUIRE(mando_model_coarse_score(loaded, d, 0, &p2) == MANDO_OK);
  CHECK(p2 == p);
  mando_model_free(loaded);

  // Unverified load works; a mismatched dataset is rejected.
  mando_model* unchecked = nullptr;
  REQUIRE(mando_model_load(ckpt.c_str(), nullptr, &unchecked) == MANDO_OK);
  mando_model_free(unchecked);

  TempDir dir2;
  std::string other_manifest = dir2.file("Solo.sol", clean_source(9));
  other_manifest =
      dir2.file("solo.jsonl", manifest_line("Solo.sol", false));
  mando_dataset* d2 = nullptr;
  REQUIRE(mando_dataset_from_manifest(other_manifest.c_str(), "one_hot", 16,
                                      0, &d2) == MANDO_OK);
  mando_model* wrong = nullptr;
  CHECK(mando_model_load(ckpt.c_str(), d2, &wrong) ==
        MANDO_ERR_CATALOG_MISMATCH);
  mando_dataset_free(d2);

  // Fine task trains on the buggy half only.
  mando_train_options tf = tiny_train(MANDO_TASK_FINE);
  mando_model* fine = nullptr;
  REQUIRE(mando_train(d, &tf, &fine, nullptr) == MANDO_OK);
  mando_model_free(fine);

  mando_model_free(m);
  mando_dataset_free(d);
}

TEST_CASE("detection end to end over the C boundary") {
  TempDir dir;
  const std::string manifest = write_corpus(dir);
  mando_dataset* d = nullptr;
  REQUIRE(mando_dataset_from_manifest(manifest.c_str(), "one_hot", 16, 0,
                                      &d) == MANDO_OK);

  mando_detect_options opts;
  mando_detect_options_init(&opts);
  CHECK(opts.test_fraction == 0.3);
  opts.d_type = 8;
  opts.heads = 2;
  opts.d_head = 4;
  opts.hidden = 8;
  opts.coarse_epochs = 10;
  opts.fine_epochs = 10;
  opts.dropout = 0.1;
  const std::string coarse_ckpt = (dir.path / "c.bin").string();
  opts.save_coarse = coarse_ckpt.c_str();

  mando_report* r = nullptr;
  REQUIRE(mando_detect(d, &opts, &r) == MANDO_OK);
  CHECK(fs::exists(coarse_ckpt));

  char* js = nullptr;
  REQUIRE(mando_report_json(r, &js) == MANDO_OK);
  const nlohmann::json parsed = nlohmann::json::parse(js);
  CHECK(parsed.at("schema_version") == "1");
  CHECK(parsed.at("coarse").at("contracts").size() == 2);  // 1 per stratum
  // A coarse-phase flag counts as a detection even without line findings.
  bool flagged = !parsed.at("fine").at("findings").empty();
  for (const auto& c : parsed.at("coarse").at("contracts"))
    flagged = flagged || c.at("predicted") == "buggy";
  CHECK(mando_report_all_clear(r) == (flagged ? 0 : 1));

  char* csv = nullptr;
  REQUIRE(mando_report_csv(r, &csv) == MANDO_OK);
  CHECK(std::string(csv).find("contract,file,line_start") == 0);

  // Same options, fresh run: byte-identical output.
  mando_report* r2 = nullptr;
  REQUIRE(mando_detect(d, &opts, &r2) == MANDO_OK);
  char* js2 = nullptr;
  REQUIRE(mando_report_json(r2, &js2) == MANDO_OK);
  CHECK(std::string(js) == js2);

  mando_string_free(js2);
  mando_string_free(js);
  mando_string_free(csv);
  mando_report_free(r2);
  mando_report_free(r);
  mando_dataset_free(d);
}

TEST_CASE("feature files, catalog replay, and checkpoint scanning") {
  TempDir dir;

  // Standalone feature file for one bundle.
  mando_bundle* b = nullptr;
  REQUIRE(mando_bundle_from_source(buggy_source(0).c_str(), "Vuln0.sol",
                                   &b) == MANDO_OK);
  const std::string feat_path = (dir.path / "v0.feat").string();
  REQUIRE(mando_bundle_features(b, "one_hot", 16, 0, feat_path.c_str()) ==
          MANDO_OK);
  {
    std::ifstream in(feat_path, std::ios::binary);
    char magic[4] = {};
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "MNDE");
  }
  mando_bundle_free(b);

  // Train on a corpus, persist model + catalog, scan fresh files.
  const std::string manifest = write_corpus(dir);
  mando_dataset* d = nullptr;
  REQUIRE(mando_dataset_from_manifest(manifest.c_str(), "one_hot", 16, 0,
                                      &d) == MANDO_OK);
  double graph_s = -1.0, feat_s = -1.0;
  REQUIRE(mando_dataset_timings(d, &graph_s, &feat_s) == MANDO_OK);
  CHECK(graph_s >= 0.0);
  CHECK(feat_s >= 0.0);

  const std::string catalog_path = (dir.path / "paths.txt").string();
  REQUIRE(mando_dataset_save_catalog(d, catalog_path.c_str()) == MANDO_OK);

  mando_detect_options opts;
  mando_detect_options_init(&opts);
  opts.d_type = 8;
  opts.heads = 2;
  opts.d_head = 4;
  opts.hidden = 8;
  opts.coarse_epochs = 15;
  opts.fine_epochs = 20;
  opts.dropout = 0.1;
  const std::string coarse_ckpt = (dir.path / "coarse.bin").string();
  const std::string fine_ckpt = (dir.path / "fine.bin").string();
  opts.save_coarse = coarse_ckpt.c_str();
  opts.save_fine = fine_ckpt.c_str();
  mando_report* trained = nullptr;
  REQUIRE(mando_detect(d, &opts, &trained) == MANDO_OK);

  double times[4] = {-1, -1, -1, -1};
  REQUIRE(mando_report_timings(trained, times) == MANDO_OK);
  CHECK(times[0] > 0.0);  // coarse training ran
  CHECK(times[1] >= 0.0);
  CHECK(times[2] > 0.0);  // fine training ran
  mando_report_free(trained);

  mando_model* fine = nullptr;
  REQUIRE(mando_model_load(fine_ckpt.c_str(), nullptr, &fine) == MANDO_OK);
  mando_model* coarse = nullptr;
  REQUIRE(mando_model_load(coarse_ckpt.c_str(), nullptr, &coarse) ==
          MANDO_OK);

  // Fresh files, not in the training corpus.
  const std::string scan_a = dir.file("FreshVuln.sol", buggy_source(7));
  const std::string scan_b = dir.file("FreshClean.sol", clean_source(7));
  const char* files[2] = {scan_a.c_str(), scan_b.c_str()};
  mando_dataset* scan_ds = nullptr;
  REQUIRE(mando_dataset_for_scan(files, 2, "reentrancy",
                                 catalog_path.c_str(), fine, "one_hot", 0,
                                 &scan_ds) == MANDO_OK);
  size_t n = 0;
  CHECK(mando_dataset_size(scan_ds, &n) == MANDO_OK);
  CHECK(n == 2);
  uint64_t scan_digest = 0, train_digest = 0;
  CHECK(mando_dataset_catalog_digest(scan_ds, &scan_digest) == MANDO_OK);
  CHECK(mando_dataset_catalog_digest(d, &train_digest) == MANDO_OK);
  CHECK(scan_digest == train_digest);

  mando_report* scanned = nullptr;
  REQUIRE(mando_scan(fine, coarse, scan_ds, &scanned) == MANDO_OK);
  char* js = nullptr;
  REQUIRE(mando_report_json(scanned, &js) == MANDO_OK);
  const nlohmann::json parsed = nlohmann::json::parse(js);
  mando_string_free(js);
  CHECK(parsed.at("coarse").at("contracts").size() == 2);
  CHECK(mando_report_all_clear(scanned) >= 0);
  mando_report_free(scanned);

  // Ungated scan covers everything.
  mando_report* ungated = nullptr;
  REQUIRE(mando_scan(fine, nullptr, scan_ds, &ungated) == MANDO_OK);
  char* js2 = nullptr;
  REQUIRE(mando_report_json(ungated, &js2) == MANDO_OK);
  const nlohmann::json parsed2 = nlohmann::json::parse(js2);
  mando_string_free(js2);
  CHECK(parsed2.at("coarse").at("contracts").empty());
  CHECK(parsed2.at("fine").at("scanned").size() == 2);
  mando_report_free(ungated);

  // A different catalog fails the digest check; junk text fails parsing.
  const std::string wrong_catalog = dir.file(
      "wrong.txt",
      "{\"version\":\"1\",\"paths\":[[\"EXPRESSION\",\"NEXT\","
      "\"EXPRESSION\",\"NEXT\",\"EXPRESSION\"]]}\n");
  mando_dataset* bad = nullptr;
  CHECK(mando_dataset_for_scan(files, 2, "reentrancy", wrong_catalog.c_str(),
                               fine, "one_hot", 0,
                               &bad) == MANDO_ERR_CATALOG_MISMATCH);
  const std::string junk_catalog = dir.file("junk.txt", "metapaths v1\n");
  CHECK(mando_dataset_for_scan(files, 2, "reentrancy", junk_catalog.c_str(),
                               fine, "one_hot", 0,
                               &bad) == MANDO_ERR_SCHEMA);

  mando_model_free(coarse);
  mando_model_free(fine);
  mando_dataset_free(scan_ds);
  mando_dataset_free(d);
}

TEST_CASE("eval aggregates seeds") {
  TempDir dir;
  const std::string manifest = write_corpus(dir);
  mando_dataset* d = nullptr;
  REQUIRE(mando_dataset_from_manifest(manifest.c_str(), "one_hot", 16, 0,
                                      &d) == MANDO_OK);

  mando_detect_options opts;
  mando_detect_options_init(&opts);
  opts.d_type = 8;
  opts.heads = 2;
  opts.d_head = 4;
  opts.hidden = 8;
  opts.coarse_epochs = 4;
  opts.fine_epochs = 4;
  opts.dropout = 0.0;

  char* metrics = nullptr;
  REQUIRE(mando_eval(d, &opts, 3, &metrics) == MANDO_OK);
  const nlohmann::json parsed = nlohmann::json::parse(metrics);
  mando_string_free(metrics);
  CHECK(parsed.at("seeds") == 3);
  CHECK(parsed.at("coarse").at("per_seed_buggy_f1").size() == 3);
  CHECK(parsed.at("fine").at("per_seed_macro_f1").size() == 3);
  const double mean = parsed.at("coarse").at("buggy_f1").get<double>();
  double acc = 0.0;
  for (const auto& v : parsed.at("coarse").at("per_seed_buggy_f1"))
    acc += v.get<double>();
  CHECK(mean == doctest::Approx(acc / 3.0).epsilon(1e-12));

  CHECK(mando_eval(d, &opts, 0, &metrics) == MANDO_ERR_ARGUMENT);
  mando_dataset_free(d);
}

}  // TEST_SUITE

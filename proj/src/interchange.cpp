#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "mando/error.hpp"
#include "mando/frontend.hpp"

namespace mando {

namespace {

using nlohmann::json;

json node_to_json(const HetNode& n, bool with_name) {
  json j;
  j["id"] = n.id;
  j["type"] = n.type.str();
  if (with_name && n.owner) j["name"] = *n.owner;
  if (n.external) j["external"] = true;
  if (n.span) {
    j["file"] = n.span->file;
    j["line_start"] = n.span->line_start;
    j["line_end"] = n.span->line_end;
  }
  return j;
}

json edges_to_json(const HetGraph& g) {
  std::vector<std::tuple<NodeId, NodeId, std::string>> rows;
  rows.reserve(g.edge_count());
  for (const HetEdge& e : g.edges())
    rows.emplace_back(e.src, e.dst, e.type.str());
  std::sort(rows.begin(), rows.end());
  json arr = json::array();
  for (const auto& [src, dst, type] : rows) {
    json j;
    j["src"] = src;
    j["dst"] = dst;
    j["type"] = type;
    arr.push_back(std::move(j));
  }
  return arr;
}

[[noreturn]] void schema_error(const std::string& where,
                               const std::string& what) {
  raise(ErrorCode::SchemaError, where + ": " + what);
}

const json& require_field(const json& obj, const char* key,
                          const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key,
                           const std::string& where) {
  const json& v = require_field(obj, key, where);
  if (!v.is_string()) schema_error(where, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

NodeId require_id(const json& obj, const char* key, const std::string& where) {
  const json& v = require_field(obj, key, where);
  if (!v.is_number_unsigned())
    schema_error(where, std::string("'") + key + "' must be a non-negative integer");
  return v.get<NodeId>();
}

void import_nodes(const json& arr, HetGraphBuilder& b,
                  const std::optional<std::string>& forced_owner,
                  const std::string& where) {
  if (!arr.is_array()) schema_error(where, "'nodes' must be an array");
  std::size_t i = 0;
  for (const json& jn : arr) {
    const std::string ctx = where + ".nodes[" + std::to_string(i++) + "]";
    if (!jn.is_object()) schema_error(ctx, "node must be an object");
    const NodeId id = require_id(jn, "id", ctx);
    const std::string type = require_string(jn, "type", ctx);
    if (type.empty()) schema_error(ctx, "'type' must be non-empty");
    std::optional<SourceSpan> span;
    if (jn.contains("file") || jn.contains("line_start") ||
        jn.contains("line_end")) {
      SourceSpan sp;
      sp.file = require_string(jn, "file", ctx);
      sp.line_start = require_id(jn, "line_start", ctx);
      sp.line_end = require_id(jn, "line_end", ctx);
      if (sp.line_end < sp.line_start)
        schema_error(ctx, "line_end precedes line_start");
      span = std::move(sp);
    }
    std::optional<std::string> owner = forced_owner;
    if (auto it = jn.find("name"); it != jn.end()) {
      if (!it->is_string()) schema_error(ctx, "'name' must be a string");
      owner = it->get<std::string>();
    }
    bool external = false;
    if (auto it = jn.find("external"); it != jn.end()) {
      if (!it->is_boolean()) schema_error(ctx, "'external' must be a boolean");
      external = it->get<bool>();
    }
    try {
      b.add_node_with_id(id, TypeName::intern(type), std::move(span),
                         std::move(owner), external);
    } catch (const Error& e) {
      schema_error(ctx, e.what());
    }
  }
}

void import_edges(const json& arr, HetGraphBuilder& b,
                  const std::string& where) {
  if (!arr.is_array()) schema_error(where, "'edges' must be an array");
  std::size_t i = 0;
  for (const json& je : arr) {
    const std::string ctx = where + ".edges[" + std::to_string(i++) + "]";
    if (!je.is_object()) schema_error(ctx, "edge must be an object");
    const NodeId src = require_id(je, "src", ctx);
    const NodeId dst = require_id(je, "dst", ctx);
    const std::string type = require_string(je, "type", ctx);
    if (type == "back") schema_error(ctx, "edge type 'back' is reserved");
    if (type.empty()) schema_error(ctx, "'type' must be non-empty");
    try {
      b.add_edge(src, dst, TypeName::intern(type));
    } catch (const Error& e) {
      schema_error(ctx, e.what());
    }
  }
}

}  // namespace

std::string export_json_text(const ContractGraphBundle& bundle) {
  json root;
  root["version"] = "1";
  root["contract"] = bundle.contract;

  json hcg;
  json nodes = json::array();
  for (const HetNode& n : bundle.hcg.nodes())
    nodes.push_back(node_to_json(n, /*with_name=*/true));
  hcg["nodes"] = std::move(nodes);
  hcg["edges"] = edges_to_json(bundle.hcg);
  root["hcg"] = std::move(hcg);

  json hcfgs = json::object();
  for (const auto& [fn, g] : bundle.hcfgs) {
    json jg;
    auto entry = bundle.entry_of.find(fn);
    jg["entry"] = entry != bundle.entry_of.end() ? entry->second : 0;
    json fnodes = json::array();
    for (const HetNode& n : g.nodes())
      fnodes.push_back(node_to_json(n, /*with_name=*/false));
    jg["nodes"] = std::move(fnodes);
    jg["edges"] = edges_to_json(g);
    hcfgs[fn] = std::move(jg);
  }
  root["hcfgs"] = std::move(hcfgs);
  return root.dump(2) + "\n";
}

ContractGraphBundle import_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    raise(ErrorCode::SchemaError, std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) schema_error("document", "root must be an object");

  const std::string version = require_string(root, "version", "document");
  if (version != "1")
    schema_error("version", "unsupported schema version '" + version + "'");

  ContractGraphBundle bundle;
  bundle.contract = require_string(root, "contract", "document");

  const json& jhcg = require_field(root, "hcg", "document");
  if (!jhcg.is_object()) schema_error("hcg", "must be an object");
  {
    HetGraphBuilder b(GraphKind::Hcg);
    import_nodes(require_field(jhcg, "nodes", "hcg"), b, std::nullopt, "hcg");
    import_edges(require_field(jhcg, "edges", "hcg"), b, "hcg");
    try {
      bundle.hcg = std::move(b).build();
    } catch (const Error& e) {
      schema_error("hcg", e.what());
    }
  }

  const json& jhcfgs = require_field(root, "hcfgs", "document");
  if (!jhcfgs.is_object()) schema_error("hcfgs", "must be an object");
  const TypeName t_entry = TypeName::intern("ENTRY_POINT");
  for (const auto& [fn, jg] : jhcfgs.items()) {
    const std::string where = "hcfgs['" + fn + "']";
    if (!jg.is_object()) schema_error(where, "must be an object");
    HetGraphBuilder b(GraphKind::Hcfg);
    import_nodes(require_field(jg, "nodes", where), b, fn, where);
    import_edges(require_field(jg, "edges", where), b, where);
    HetGraph g;
    try {
      g = std::move(b).build();
    } catch (const Error& e) {
      schema_error(where, e.what());
    }
    const NodeId entry = require_id(jg, "entry", where);
    if (entry >= g.node_count())
      schema_error(where, "entry id out of range");
    std::size_t entry_nodes = 0;
    for (const HetNode& n : g.nodes())
      if (n.type == t_entry) ++entry_nodes;
    if (entry_nodes != 1)
      schema_error(where, "control-flow graph must have exactly one ENTRY_POINT node");
    if (g.node(entry).type != t_entry)
      schema_error(where, "entry id does not reference the ENTRY_POINT node");
    bundle.hcfgs.emplace_back(fn, std::move(g));
    bundle.entry_of.emplace(fn, entry);
  }
  std::sort(bundle.hcfgs.begin(), bundle.hcfgs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Call-graph nodes that stand for this unit's own functions must come with
  // their control-flow graphs; everything else has to be marked external.
  const TypeName t_fn = TypeName::intern("FUNCTION_NAME");
  const TypeName t_fb = TypeName::intern("FALLBACK_NODE");
  for (const HetNode& n : bundle.hcg.nodes()) {
    if (n.external || (n.type != t_fn && n.type != t_fb)) continue;
    if (!n.owner)
      schema_error("hcg.nodes[" + std::to_string(n.id) + "]",
                   "internal function node needs a 'name'");
    if (!bundle.hcfg_of(*n.owner))
      schema_error("hcg.nodes[" + std::to_string(n.id) + "]",
                   "no control-flow graph for internal function '" + *n.owner +
                       "'");
  }
  return bundle;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) raise(ErrorCode::Io, "read failed for '" + path + "'");
  return std::move(buf).str();
}

void write_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::Io, "cannot create '" + path + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) raise(ErrorCode::Io, "write failed for '" + path + "'");
}

ContractGraphBundle import_json(const std::string& path) {
  return import_json_text(read_file(path));
}

void export_json(const ContractGraphBundle& bundle, const std::string& path) {
  write_file(path, export_json_text(bundle));
}

ContractGraphBundle load_bundle(const std::string& path) {
  const bool is_json =
      path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  if (is_json) return import_json(path);
  return build_bundle(parse_source(read_file(path), path));
}

}  // namespace mando

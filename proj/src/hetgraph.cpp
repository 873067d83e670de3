#include "mando/hetgraph.hpp"

#include <algorithm>
#include <mutex>
#include <unordered_map>
#include <unordered_set>

namespace mando {

namespace {

struct InternTable {
  std::mutex mu;
  std::unordered_map<std::string, std::uint32_t> by_name;
  std::vector<std::string> names;  // index = id - 1

  static InternTable& instance() {
    static InternTable table;
    return table;
  }
};

}  // namespace

TypeName TypeName::intern(std::string_view name) {
  if (name.empty()) raise(ErrorCode::SchemaError, "empty type name");
  auto& table = InternTable::instance();
  std::lock_guard<std::mutex> lock(table.mu);
  auto it = table.by_name.find(std::string(name));
  if (it != table.by_name.end()) return TypeName(it->second);
  table.names.emplace_back(name);
  const auto id = static_cast<std::uint32_t>(table.names.size());
  table.by_name.emplace(std::string(name), id);
  return TypeName(id);
}

const std::string& TypeName::str() const {
  static const std::string empty;
  if (id_ == 0) return empty;
  auto& table = InternTable::instance();
  // names never move: ids only grow, and vector entries are stable strings.
  std::lock_guard<std::mutex> lock(table.mu);
  return table.names[id_ - 1];
}

const char* graph_kind_name(GraphKind kind) {
  switch (kind) {
    case GraphKind::Hcfg:
      return "HCFG";
    case GraphKind::Hcg:
      return "HCG";
    case GraphKind::Fused:
      return "FUSED";
  }
  return "?";
}

std::span<const EdgeIdx> HetGraph::out_edges(NodeId id) const {
  return {out_index_.data() + out_offsets_[id],
          out_index_.data() + out_offsets_[id + 1]};
}

std::span<const EdgeIdx> HetGraph::in_edges(NodeId id) const {
  return {in_index_.data() + in_offsets_[id],
          in_index_.data() + in_offsets_[id + 1]};
}

std::vector<std::pair<TypeName, std::vector<NodeId>>> HetGraph::type_partition()
    const {
  std::vector<std::pair<TypeName, std::vector<NodeId>>> out;
  for (TypeName t : node_types_) out.emplace_back(t, std::vector<NodeId>{});
  for (const HetNode& n : nodes_) {
    for (auto& [t, ids] : out) {
      if (t == n.type) {
        ids.push_back(n.id);
        break;
      }
    }
  }
  return out;
}

HetGraphBuilder::HetGraphBuilder(GraphKind kind) : kind_(kind) {}

NodeId HetGraphBuilder::add_node(TypeName type, std::optional<SourceSpan> span,
                                 std::optional<std::string> owner,
                                 bool external) {
  if (explicit_ids_)
    raise(ErrorCode::SchemaError, "cannot mix auto and explicit node ids");
  const auto id = static_cast<NodeId>(nodes_.size());
  add_node_with_id(id, type, std::move(span), std::move(owner), external);
  explicit_ids_ = false;
  return id;
}

void HetGraphBuilder::add_node_with_id(NodeId id, TypeName type,
                                       std::optional<SourceSpan> span,
                                       std::optional<std::string> owner,
                                       bool external) {
  explicit_ids_ = true;
  if (!type.valid()) raise(ErrorCode::SchemaError, "node with invalid type");
  if (span && span->line_start > span->line_end)
    raise(ErrorCode::SchemaError, "span line_start > line_end");
  if (!ids_.insert(id).second)
    raise(ErrorCode::DuplicateNode, "duplicate node id " + std::to_string(id));
  nodes_.push_back(
      HetNode{id, type, std::move(span), std::move(owner), external});
}

EdgeIdx HetGraphBuilder::add_edge(NodeId src, NodeId dst, TypeName type) {
  if (!ids_.count(src) || !ids_.count(dst))
    raise(ErrorCode::UnknownEndpoint,
          "edge endpoint missing: " + std::to_string(src) + " -> " +
              std::to_string(dst));
  // 25/25/14 bit key: node ids stay well below 2^25 in practice, and the
  // key is only a dedup probe, so collisions on huge inputs are acceptable.
  const std::uint64_t key = (static_cast<std::uint64_t>(src) << 39) ^
                            (static_cast<std::uint64_t>(dst) << 14) ^
                            type.id();
  if (!edge_keys_.insert(key).second) {
    for (const HetEdge& e : edges_)
      if (e.src == src && e.dst == dst && e.type == type)
        raise(ErrorCode::DuplicateEdge,
              "parallel edge with same type: " + std::to_string(src) + " -" +
                  type.str() + "-> " + std::to_string(dst));
  }
  edges_.push_back(HetEdge{src, dst, type});
  return static_cast<EdgeIdx>(edges_.size() - 1);
}

HetGraph HetGraphBuilder::build() && {
  // Ids must be dense 0..n-1; reorder storage so index == id.
  const std::size_t n = nodes_.size();
  std::vector<HetNode> ordered(n);
  std::vector<bool> seen(n, false);
  for (HetNode& node : nodes_) {
    if (node.id >= n)
      raise(ErrorCode::SchemaError,
            "node ids not contiguous: id " + std::to_string(node.id) +
                " with " + std::to_string(n) + " nodes");
    seen[node.id] = true;
    ordered[node.id] = std::move(node);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!seen[i])
      raise(ErrorCode::SchemaError,
            "node ids not contiguous: missing id " + std::to_string(i));

  HetGraph g;
  g.kind_ = kind_;
  g.nodes_ = std::move(ordered);
  g.edges_ = std::move(edges_);

  std::unordered_set<std::uint32_t> node_type_ids, edge_type_ids;
  for (const HetNode& node : g.nodes_)
    if (node_type_ids.insert(node.type.id()).second)
      g.node_types_.push_back(node.type);
  for (const HetEdge& e : g.edges_)
    if (edge_type_ids.insert(e.type.id()).second)
      g.edge_types_.push_back(e.type);
  std::sort(g.node_types_.begin(), g.node_types_.end(), TypeNameLess{});
  std::sort(g.edge_types_.begin(), g.edge_types_.end(), TypeNameLess{});

  g.out_offsets_.assign(n + 1, 0);
  g.in_offsets_.assign(n + 1, 0);
  for (const HetEdge& e : g.edges_) {
    ++g.out_offsets_[e.src + 1];
    ++g.in_offsets_[e.dst + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    g.out_offsets_[i + 1] += g.out_offsets_[i];
    g.in_offsets_[i + 1] += g.in_offsets_[i];
  }
  g.out_index_.resize(g.edges_.size());
  g.in_index_.resize(g.edges_.size());
  std::vector<std::uint32_t> out_cursor(g.out_offsets_.begin(),
                                        g.out_offsets_.end() - 1);
  std::vector<std::uint32_t> in_cursor(g.in_offsets_.begin(),
                                       g.in_offsets_.end() - 1);
  for (EdgeIdx i = 0; i < g.edges_.size(); ++i) {
    g.out_index_[out_cursor[g.edges_[i].src]++] = i;
    g.in_index_[in_cursor[g.edges_[i].dst]++] = i;
  }
  return g;
}

const HetGraph* ContractGraphBundle::hcfg_of(const std::string& fn) const {
  for (const auto& [name, graph] : hcfgs)
    if (name == fn) return &graph;
  return nullptr;
}

TypeName fusion_edge_type() {
  static const TypeName t = TypeName::intern("CFG_OF");
  return t;
}

FusionResult fuse(const ContractGraphBundle& bundle) {
  HetGraphBuilder builder(GraphKind::Fused);
  FusionResult result;

  result.hcg_to_fused.resize(bundle.hcg.node_count());
  for (const HetNode& n : bundle.hcg.nodes())
    result.hcg_to_fused[n.id] =
        builder.add_node(n.type, n.span, n.owner, n.external);

  for (const auto& [fn, hcfg] : bundle.hcfgs) {
    std::vector<NodeId> map(hcfg.node_count());
    for (const HetNode& n : hcfg.nodes())
      map[n.id] = builder.add_node(n.type, n.span,
                                   n.owner ? n.owner : std::optional(fn),
                                   n.external);
    result.hcfg_to_fused.emplace_back(fn, std::move(map));
  }

  for (const HetEdge& e : bundle.hcg.edges())
    builder.add_edge(result.hcg_to_fused[e.src], result.hcg_to_fused[e.dst],
                     e.type);
  for (std::size_t i = 0; i < bundle.hcfgs.size(); ++i) {
    const auto& [fn, hcfg] = bundle.hcfgs[i];
    const auto& map = result.hcfg_to_fused[i].second;
    for (const HetEdge& e : hcfg.edges())
      builder.add_edge(map[e.src], map[e.dst], e.type);
  }

  // One CFG_OF bridge per call-graph node that owns an HCFG.
  const TypeName entry_type = TypeName::intern("ENTRY_POINT");
  std::unordered_map<std::string, std::size_t> hcfg_index;
  for (std::size_t i = 0; i < bundle.hcfgs.size(); ++i)
    hcfg_index.emplace(bundle.hcfgs[i].first, i);
  std::unordered_set<std::string> fused_fns;
  for (const HetNode& n : bundle.hcg.nodes()) {
    if (!n.owner) continue;
    const std::string& fn = *n.owner;
    auto idx_it = hcfg_index.find(fn);
    if (idx_it == hcfg_index.end()) continue;  // external or declared-only
    const std::size_t idx = idx_it->second;
    auto entry_it = bundle.entry_of.find(fn);
    const HetGraph& hcfg = bundle.hcfgs[idx].second;
    if (entry_it == bundle.entry_of.end() ||
        entry_it->second >= hcfg.node_count() ||
        !(hcfg.node(entry_it->second).type == entry_type))
      raise(ErrorCode::MissingEntryPoint,
            "function " + fn + " has no ENTRY_POINT node");
    builder.add_edge(result.hcg_to_fused[n.id],
                     result.hcfg_to_fused[idx].second[entry_it->second],
                     fusion_edge_type());
    ++result.fusion_edges;
    fused_fns.insert(fn);
  }
  for (const auto& [fn, hcfg] : bundle.hcfgs)
    if (!fused_fns.count(fn))
      raise(ErrorCode::SchemaError,
            "HCFG for " + fn + " has no call-graph function node");

  result.graph = std::move(builder).build();
  return result;
}

}  // namespace mando

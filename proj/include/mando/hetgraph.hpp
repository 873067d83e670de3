#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mando/error.hpp"

namespace mando {

using NodeId = std::uint32_t;
using EdgeIdx = std::uint32_t;

/// Interned type-name token. Equal strings intern to the same id, so equality
/// is an integer compare. The intern table is process-global and thread-safe;
/// ids are stable for the lifetime of the process but depend on interning
/// order, so deterministic sorts must go through str().
class TypeName {
 public:
  TypeName() = default;

  static TypeName intern(std::string_view name);

  const std::string& str() const;
  std::uint32_t id() const { return id_; }
  bool valid() const { return id_ != 0; }

  friend bool operator==(TypeName a, TypeName b) { return a.id_ == b.id_; }
  friend bool operator!=(TypeName a, TypeName b) { return a.id_ != b.id_; }

 private:
  explicit TypeName(std::uint32_t id) : id_(id) {}
  std::uint32_t id_ = 0;
};

/// Orders type names lexicographically by their string form.
struct TypeNameLess {
  bool operator()(TypeName a, TypeName b) const { return a.str() < b.str(); }
};

struct TypeNameHash {
  std::size_t operator()(TypeName t) const { return t.id(); }
};

struct SourceSpan {
  std::string file;
  std::uint32_t line_start = 1;  // 1-based, inclusive
  std::uint32_t line_end = 1;

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

struct HetNode {
  NodeId id = 0;
  TypeName type;
  std::optional<SourceSpan> span;
  std::optional<std::string> owner;  // qualified function name, when known
  bool external = false;             // call-graph nodes only
};

struct HetEdge {
  NodeId src = 0;
  NodeId dst = 0;
  TypeName type;
};

enum class GraphKind { Hcfg, Hcg, Fused };

const char* graph_kind_name(GraphKind kind);

/// Typed directed multigraph. Immutable once built; parallel edges are
/// allowed only with distinct edge types.
class HetGraph {
 public:
  HetGraph() = default;  // empty graph

  GraphKind kind() const { return kind_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const HetNode& node(NodeId id) const { return nodes_[id]; }
  const std::vector<HetNode>& nodes() const { return nodes_; }
  const std::vector<HetEdge>& edges() const { return edges_; }

  /// Node/edge type sets (the A and R of the graph), sorted by name.
  const std::vector<TypeName>& node_types() const { return node_types_; }
  const std::vector<TypeName>& edge_types() const { return edge_types_; }

  /// Edge indices leaving / entering a node, ordered by edge insertion.
  std::span<const EdgeIdx> out_edges(NodeId id) const;
  std::span<const EdgeIdx> in_edges(NodeId id) const;

  /// Groups node ids by type; covers every node exactly once. Deterministic:
  /// groups sorted by type name, ids ascending.
  std::vector<std::pair<TypeName, std::vector<NodeId>>> type_partition() const;

 private:
  friend class HetGraphBuilder;

  GraphKind kind_ = GraphKind::Hcfg;
  std::vector<HetNode> nodes_;
  std::vector<HetEdge> edges_;
  std::vector<TypeName> node_types_;
  std::vector<TypeName> edge_types_;
  // CSR adjacency, built once at build() time.
  std::vector<std::uint32_t> out_offsets_, out_index_;
  std::vector<std::uint32_t> in_offsets_, in_index_;
};

class HetGraphBuilder {
 public:
  explicit HetGraphBuilder(GraphKind kind);

  /// Appends a node with the next dense id and returns it.
  NodeId add_node(TypeName type, std::optional<SourceSpan> span = std::nullopt,
                  std::optional<std::string> owner = std::nullopt,
                  bool external = false);

  /// Import path: caller supplies ids, which must end up dense 0..n-1.
  void add_node_with_id(NodeId id, TypeName type,
                        std::optional<SourceSpan> span = std::nullopt,
                        std::optional<std::string> owner = std::nullopt,
                        bool external = false);

  /// Endpoints must already exist; a (src, dst, type) triple may appear once.
  EdgeIdx add_edge(NodeId src, NodeId dst, TypeName type);

  std::size_t node_count() const { return nodes_.size(); }

  HetGraph build() &&;

 private:
  GraphKind kind_;
  std::vector<HetNode> nodes_;
  std::vector<HetEdge> edges_;
  std::unordered_set<NodeId> ids_;
  std::unordered_set<std::uint64_t> edge_keys_;
  bool explicit_ids_ = false;
};

/// A contract's call graph plus the per-function control-flow graphs.
struct ContractGraphBundle {
  std::string contract;
  HetGraph hcg;
  /// Sorted by qualified function name.
  std::vector<std::pair<std::string, HetGraph>> hcfgs;
  /// Function name -> entry node id within its own HCFG.
  std::map<std::string, NodeId> entry_of;

  const HetGraph* hcfg_of(const std::string& fn) const;
};

/// Edge type that attaches a call-graph function node to its control-flow
/// graph's entry node in the fused graph.
TypeName fusion_edge_type();

struct FusionResult {
  HetGraph graph;
  /// Old hcg node id -> fused id.
  std::vector<NodeId> hcg_to_fused;
  /// Per function: old hcfg node id -> fused id. Same order as bundle.hcfgs.
  std::vector<std::pair<std::string, std::vector<NodeId>>> hcfg_to_fused;
  std::size_t fusion_edges = 0;
};

/// Unions the call graph with every control-flow graph, re-indexing node ids
/// densely (hcg nodes first, then each hcfg in name order), and adds one
/// fusion edge per resolvable function node.
FusionResult fuse(const ContractGraphBundle& bundle);

}  // namespace mando

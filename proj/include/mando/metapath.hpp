#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mando/hetgraph.hpp"

namespace mando {

/// The reflective relation token. Reserved: never a real edge type.
TypeName back_relation();

/// A length-2 metapath a1 -r1-> a2 -r2-> a3. Back-form paths have r2 = back
/// and a3 = a1 and read "one hop out along r1, then return".
struct Metapath {
  TypeName a1, r1, a2, r2, a3;

  bool is_back_form() const { return r2 == back_relation(); }
  std::array<std::uint32_t, 5> key() const {
    return {a1.id(), r1.id(), a2.id(), r2.id(), a3.id()};
  }
  /// Lexicographic on the five type-name strings.
  friend bool lex_less(const Metapath& x, const Metapath& y);
  friend bool operator==(const Metapath& x, const Metapath& y) {
    return x.key() == y.key();
  }
};

struct MetapathHash {
  std::size_t operator()(const Metapath& p) const;
};

/// All length-2 metapaths realized in one graph, with a per-path index from
/// each center node to its attention neighbors.
///
/// Neighbor semantics: for (a1,r1,a2,r2,a3) centered at a type-a1 node i,
/// the neighbors are the type-a2 nodes one hop from i along r1 that have at
/// least one r2 continuation into a type-a3 node. Back-form paths have no
/// continuation requirement.
class MetapathCatalog {
 public:
  /// Discovers every realized path of g and indexes neighbors.
  /// Throws Error(SchemaError) if g uses the reserved "back" edge type.
  static MetapathCatalog extract(const HetGraph& g);

  /// Indexes neighbors of g for a fixed path list (checkpoint replay).
  /// Paths with no instances in g keep empty neighbor indexes.
  static MetapathCatalog index_with(const std::vector<Metapath>& paths,
                                    const HetGraph& g);

  /// Sorted lexicographically on the 5-tuple of type-name strings.
  const std::vector<Metapath>& paths() const { return paths_; }

  /// Realized (u -r1-> v -r2-> w) triple count per path; back-forms count
  /// their r1 edges. Used for frequency ranking.
  std::uint64_t instance_count(std::size_t path_idx) const {
    return instances_[path_idx];
  }

  /// Indices into paths() whose a1 equals the given node type, in catalog
  /// order. Empty for unknown types.
  std::span<const std::uint32_t> paths_for(TypeName a1) const;

  /// Position of the path in paths(), or npos.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t index_of(const Metapath& p) const;

  /// Ascending neighbor ids of `center` under the path. Empty when the node
  /// has no instances. Throws Error(UnknownMetapath) for foreign paths.
  std::span<const NodeId> neighbors(const Metapath& p, NodeId center) const;
  std::span<const NodeId> neighbors(std::size_t path_idx, NodeId center) const;

  /// Centers with at least one neighbor under the path, ascending.
  std::span<const NodeId> centers(std::size_t path_idx) const;

  /// Canonical serialization of the path list (schema version "1"). Stable
  /// across runs; the digest is FNV-1a 64 over these bytes.
  std::string serialize() const;
  std::uint64_t digest() const;
  static std::vector<Metapath> deserialize(const std::string& text);

 private:
  /// One path's center -> neighbors index in CSR form.
  struct PathIndex {
    std::vector<NodeId> centers;          // ascending
    std::vector<std::uint32_t> offsets;   // centers.size() + 1
    std::vector<NodeId> neighbors;        // ascending per center
  };

  static MetapathCatalog build(std::vector<Metapath> paths,
                               const HetGraph& g, bool discover);

  std::vector<Metapath> paths_;
  std::vector<std::uint64_t> instances_;
  std::vector<PathIndex> index_;
  std::unordered_map<Metapath, std::uint32_t, MetapathHash> position_;
  std::unordered_map<TypeName, std::vector<std::uint32_t>, TypeNameHash>
      by_begin_type_;
};

}  // namespace mando

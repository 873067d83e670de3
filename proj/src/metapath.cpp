#include "mando/metapath.hpp"

#include <algorithm>
#include <tuple>

#include "json.hpp"
#include "mando/error.hpp"
#include "mando/rng.hpp"

namespace mando {

TypeName back_relation() {
  static const TypeName t = TypeName::intern("back");
  return t;
}

bool lex_less(const Metapath& x, const Metapath& y) {
  return std::tie(x.a1.str(), x.r1.str(), x.a2.str(), x.r2.str(), x.a3.str()) <
         std::tie(y.a1.str(), y.r1.str(), y.a2.str(), y.r2.str(), y.a3.str());
}

std::size_t MetapathHash::operator()(const Metapath& p) const {
  std::size_t h = 0xcbf29ce484222325ull;
  for (std::uint32_t id : p.key()) h = hash_combine(h, id);
  return h;
}

namespace {

struct Triple {
  std::uint32_t path;
  NodeId center;
  NodeId neighbor;

  friend bool operator<(const Triple& a, const Triple& b) {
    return std::tie(a.path, a.center, a.neighbor) <
           std::tie(b.path, b.center, b.neighbor);
  }
  friend bool operator==(const Triple& a, const Triple& b) {
    return a.path == b.path && a.center == b.center &&
           a.neighbor == b.neighbor;
  }
};

}  // namespace

MetapathCatalog MetapathCatalog::build(std::vector<Metapath> fixed,
                                       const HetGraph& g, bool discover) {
  for (TypeName t : g.edge_types())
    if (t == back_relation())
      raise(ErrorCode::SchemaError,
            "edge type 'back' is reserved for reflective metapaths");

  std::unordered_map<Metapath, std::uint32_t, MetapathHash> position;
  std::vector<Metapath> paths;
  if (!discover) {
    paths = std::move(fixed);
    for (std::uint32_t i = 0; i < paths.size(); ++i)
      position.emplace(paths[i], i);
  }

  auto path_slot = [&](const Metapath& p) -> std::int64_t {
    auto it = position.find(p);
    if (it != position.end()) return it->second;
    if (!discover) return -1;
    const auto idx = static_cast<std::uint32_t>(paths.size());
    paths.push_back(p);
    position.emplace(p, idx);
    return idx;
  };

  std::vector<Triple> triples;
  std::vector<std::uint64_t> instances;
  auto count_instance = [&](std::size_t slot) {
    if (instances.size() <= slot) instances.resize(slot + 1, 0);
    ++instances[slot];
  };

  const auto& edges = g.edges();
  for (const HetEdge& e : edges) {
    const TypeName tu = g.node(e.src).type;
    const TypeName tv = g.node(e.dst).type;
    // back-form: u -r1-> v -back-> u
    {
      const Metapath p{tu, e.type, tv, back_relation(), tu};
      const std::int64_t slot = path_slot(p);
      if (slot >= 0) {
        triples.push_back({static_cast<std::uint32_t>(slot), e.src, e.dst});
        count_instance(static_cast<std::size_t>(slot));
      }
    }
    // forward forms: u -r1-> v -r2-> w
    for (EdgeIdx ei : g.out_edges(e.dst)) {
      const HetEdge& e2 = edges[ei];
      const Metapath p{tu, e.type, tv, e2.type, g.node(e2.dst).type};
      const std::int64_t slot = path_slot(p);
      if (slot < 0) continue;
      triples.push_back({static_cast<std::uint32_t>(slot), e.src, e.dst});
      count_instance(static_cast<std::size_t>(slot));
    }
  }

  MetapathCatalog cat;
  if (discover) {
    // re-order by the lexicographic string form, remapping slot ids
    std::vector<std::uint32_t> order(paths.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return lex_less(paths[a], paths[b]);
    });
    std::vector<std::uint32_t> rank(paths.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
    cat.paths_.resize(paths.size());
    cat.instances_.assign(paths.size(), 0);
    instances.resize(paths.size(), 0);
    for (std::uint32_t i = 0; i < paths.size(); ++i) {
      cat.paths_[rank[i]] = paths[i];
      cat.instances_[rank[i]] = instances[i];
    }
    for (Triple& t : triples) t.path = rank[t.path];
  } else {
    cat.paths_ = std::move(paths);
    instances.resize(cat.paths_.size(), 0);
    cat.instances_ = std::move(instances);
  }

  for (std::uint32_t i = 0; i < cat.paths_.size(); ++i)
    cat.position_.emplace(cat.paths_[i], i);
  for (std::uint32_t i = 0; i < cat.paths_.size(); ++i)
    cat.by_begin_type_[cat.paths_[i].a1].push_back(i);

  std::sort(triples.begin(), triples.end());
  triples.erase(std::unique(triples.begin(), triples.end()), triples.end());

  cat.index_.resize(cat.paths_.size());
  std::size_t i = 0;
  while (i < triples.size()) {
    PathIndex& pi = cat.index_[triples[i].path];
    std::size_t j = i;
    while (j < triples.size() && triples[j].path == triples[i].path) ++j;
    pi.offsets.push_back(0);
    for (std::size_t k = i; k < j;) {
      const NodeId center = triples[k].center;
      pi.centers.push_back(center);
      while (k < j && triples[k].center == center)
        pi.neighbors.push_back(triples[k++].neighbor);
      pi.offsets.push_back(static_cast<std::uint32_t>(pi.neighbors.size()));
    }
    i = j;
  }
  for (PathIndex& pi : cat.index_)
    if (pi.offsets.empty()) pi.offsets.push_back(0);
  return cat;
}

MetapathCatalog MetapathCatalog::extract(const HetGraph& g) {
  return build({}, g, /*discover=*/true);
}

MetapathCatalog MetapathCatalog::index_with(const std::vector<Metapath>& paths,
                                            const HetGraph& g) {
  return build(paths, g, /*discover=*/false);
}

std::span<const std::uint32_t> MetapathCatalog::paths_for(TypeName a1) const {
  auto it = by_begin_type_.find(a1);
  if (it == by_begin_type_.end()) return {};
  return it->second;
}

std::size_t MetapathCatalog::index_of(const Metapath& p) const {
  auto it = position_.find(p);
  return it == position_.end() ? npos : it->second;
}

std::span<const NodeId> MetapathCatalog::neighbors(const Metapath& p,
                                                   NodeId center) const {
  const std::size_t idx = index_of(p);
  if (idx == npos)
    raise(ErrorCode::UnknownMetapath,
          "metapath " + p.a1.str() + "-" + p.r1.str() + "-" + p.a2.str() +
              "-" + p.r2.str() + "-" + p.a3.str() + " is not in the catalog");
  return neighbors(idx, center);
}

std::span<const NodeId> MetapathCatalog::neighbors(std::size_t path_idx,
                                                   NodeId center) const {
  const PathIndex& pi = index_[path_idx];
  auto it = std::lower_bound(pi.centers.begin(), pi.centers.end(), center);
  if (it == pi.centers.end() || *it != center) return {};
  const std::size_t pos = static_cast<std::size_t>(it - pi.centers.begin());
  return std::span<const NodeId>(pi.neighbors)
      .subspan(pi.offsets[pos], pi.offsets[pos + 1] - pi.offsets[pos]);
}

std::span<const NodeId> MetapathCatalog::centers(std::size_t path_idx) const {
  return index_[path_idx].centers;
}

std::string MetapathCatalog::serialize() const {
  nlohmann::json root;
  root["version"] = "1";
  nlohmann::json arr = nlohmann::json::array();
  for (const Metapath& p : paths_)
    arr.push_back({p.a1.str(), p.r1.str(), p.a2.str(), p.r2.str(),
                   p.a3.str()});
  root["paths"] = std::move(arr);
  return root.dump(2) + "\n";
}

std::uint64_t MetapathCatalog::digest() const {
  const std::string text = serialize();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<Metapath> MetapathCatalog::deserialize(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::SchemaError, std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("version") ||
      root["version"] != "1")
    raise(ErrorCode::SchemaError, "catalog: unsupported schema version");
  if (!root.contains("paths") || !root["paths"].is_array())
    raise(ErrorCode::SchemaError, "catalog: missing 'paths' array");
  std::vector<Metapath> out;
  for (const auto& jp : root["paths"]) {
    if (!jp.is_array() || jp.size() != 5)
      raise(ErrorCode::SchemaError, "catalog: each path is 5 type names");
    for (const auto& s : jp)
      if (!s.is_string() || s.get<std::string>().empty())
        raise(ErrorCode::SchemaError, "catalog: type names are non-empty strings");
    out.push_back(Metapath{TypeName::intern(jp[0].get<std::string>()),
                           TypeName::intern(jp[1].get<std::string>()),
                           TypeName::intern(jp[2].get<std::string>()),
                           TypeName::intern(jp[3].get<std::string>()),
                           TypeName::intern(jp[4].get<std::string>())});
  }
  return out;
}

}  // namespace mando

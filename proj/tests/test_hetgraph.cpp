#include <algorithm>
#include <set>

#include "doctest.h"
#include "mando/hetgraph.hpp"
#include "mando/rng.hpp"
#include "support/generators.hpp"

using namespace mando;

namespace {

TypeName t(const char* s) { return TypeName::intern(s); }

}  // namespace

TEST_SUITE("hetgraph") {
  TEST_CASE("type names intern injectively") {
    CHECK(t("ENTRY_POINT") == t("ENTRY_POINT"));
    CHECK(t("ENTRY_POINT") != t("NEXT"));
    CHECK(t("ENTRY_POINT").str() == "ENTRY_POINT");
  }

  TEST_CASE("empty graph") {
    HetGraphBuilder b(GraphKind::Hcfg);
    HetGraph g = std::move(b).build();
    CHECK(g.node_count() == 0);
    CHECK(g.edge_count() == 0);
    CHECK(g.node_types().empty());
    CHECK(g.type_partition().empty());
  }

  TEST_CASE("singleton node populates the type set") {
    HetGraphBuilder b(GraphKind::Hcfg);
    b.add_node(t("ENTRY_POINT"));
    HetGraph g = std::move(b).build();
    REQUIRE(g.node_types().size() == 1);
    CHECK(g.node_types()[0] == t("ENTRY_POINT"));
  }

  TEST_CASE("duplicate node id rejected") {
    HetGraphBuilder b(GraphKind::Hcfg);
    b.add_node_with_id(0, t("ENTRY_POINT"));
    CHECK_THROWS_WITH_AS(b.add_node_with_id(0, t("EXPRESSION")),
                         doctest::Contains("duplicate node id"), Error);
  }

  TEST_CASE("edge over missing endpoint rejected") {
    HetGraphBuilder b(GraphKind::Hcfg);
    b.add_node(t("ENTRY_POINT"));
    try {
      b.add_edge(0, 99, t("NEXT"));
      FAIL("expected UnknownEndpoint");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownEndpoint);
    }
  }

  TEST_CASE("parallel edges need distinct types") {
    HetGraphBuilder b(GraphKind::Hcfg);
    b.add_node(t("IF"));
    b.add_node(t("EXPRESSION"));
    b.add_edge(0, 1, t("TRUE"));
    b.add_edge(0, 1, t("FALSE"));  // distinct type: fine
    try {
      b.add_edge(0, 1, t("TRUE"));
      FAIL("expected DuplicateEdge");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DuplicateEdge);
    }
  }

  TEST_CASE("branching fragment carries its vocabularies") {
    // ENTRY_POINT -NEXT-> EXPRESSION -NEXT-> IF, IF -TRUE/FALSE-> ...
    HetGraphBuilder b(GraphKind::Hcfg);
    b.add_node(t("ENTRY_POINT"));
    b.add_node(t("EXPRESSION"));
    b.add_node(t("IF"));
    b.add_node(t("EXPRESSION"));
    b.add_node(t("END_IF"));
    b.add_edge(0, 1, t("NEXT"));
    b.add_edge(1, 2, t("NEXT"));
    b.add_edge(2, 3, t("TRUE"));
    b.add_edge(2, 4, t("FALSE"));
    HetGraph g = std::move(b).build();

    auto has = [](const std::vector<TypeName>& v, TypeName x) {
      return std::find(v.begin(), v.end(), x) != v.end();
    };
    CHECK(has(g.node_types(), t("ENTRY_POINT")));
    CHECK(has(g.node_types(), t("EXPRESSION")));
    CHECK(has(g.node_types(), t("IF")));
    CHECK(has(g.edge_types(), t("NEXT")));
    CHECK(has(g.edge_types(), t("TRUE")));
    CHECK(has(g.edge_types(), t("FALSE")));
  }

  TEST_CASE("type partition of a small fragment") {
    HetGraphBuilder b(GraphKind::Hcfg);
    b.add_node(t("ENTRY_POINT"));
    b.add_node(t("EXPRESSION"));
    b.add_node(t("IF"));
    HetGraph g = std::move(b).build();
    auto part = g.type_partition();
    REQUIRE(part.size() == 3);
    for (const auto& [type, ids] : part) {
      REQUIRE(ids.size() == 1);
      if (type == t("ENTRY_POINT")) CHECK(ids[0] == 0);
      if (type == t("EXPRESSION")) CHECK(ids[0] == 1);
      if (type == t("IF")) CHECK(ids[0] == 2);
    }
  }

  TEST_CASE("type partition covers every node exactly once") {
    Rng rng(41);
    for (int rep = 0; rep < 50; ++rep) {
      HetGraph g = testsupport::random_typed_graph(rng, 40, 5, 3);
      std::set<NodeId> seen;
      for (const auto& [type, ids] : g.type_partition())
        for (NodeId id : ids) {
          CHECK(g.node(id).type == type);
          CHECK(seen.insert(id).second);  // pairwise disjoint
        }
      CHECK(seen.size() == g.node_count());  // union = node set
    }
  }

  TEST_CASE("fusing an empty bundle reproduces the hcg") {
    ContractGraphBundle bundle;
    bundle.contract = "C";
    HetGraphBuilder hcg(GraphKind::Hcg);
    hcg.add_node(t("FUNCTION_NAME"), std::nullopt, std::string("C.f"), true);
    bundle.hcg = std::move(hcg).build();
    FusionResult r = fuse(bundle);
    CHECK(r.graph.node_count() == 1);
    CHECK(r.graph.edge_count() == 0);
    CHECK(r.fusion_edges == 0);
  }

  TEST_CASE("function node gains a CFG_OF bridge to its entry point") {
    ContractGraphBundle bundle;
    bundle.contract = "PrivateBank";
    HetGraphBuilder hcg(GraphKind::Hcg);
    hcg.add_node(t("FUNCTION_NAME"), std::nullopt,
                 std::string("PrivateBank.CashOut"));
    bundle.hcg = std::move(hcg).build();

    HetGraphBuilder cfg(GraphKind::Hcfg);
    cfg.add_node(t("ENTRY_POINT"), SourceSpan{"bank.sol", 12, 12},
                 std::string("PrivateBank.CashOut"));
    cfg.add_node(t("EXPRESSION"), SourceSpan{"bank.sol", 15, 15},
                 std::string("PrivateBank.CashOut"));
    cfg.add_edge(0, 1, t("NEXT"));
    bundle.hcfgs.emplace_back("PrivateBank.CashOut", std::move(cfg).build());
    bundle.entry_of["PrivateBank.CashOut"] = 0;

    FusionResult r = fuse(bundle);
    CHECK(r.graph.node_count() == 3);
    CHECK(r.graph.edge_count() == 2);
    CHECK(r.fusion_edges == 1);
    bool found = false;
    for (const HetEdge& e : r.graph.edges())
      if (e.type == fusion_edge_type()) {
        found = true;
        CHECK(e.src == r.hcg_to_fused[0]);
        CHECK(e.dst == r.hcfg_to_fused[0].second[0]);
        CHECK(r.graph.node(e.dst).type == t("ENTRY_POINT"));
      }
    CHECK(found);
  }

  TEST_CASE("fusing without an entry point fails") {
    ContractGraphBundle bundle;
    bundle.contract = "C";
    HetGraphBuilder hcg(GraphKind::Hcg);
    hcg.add_node(t("FUNCTION_NAME"), std::nullopt, std::string("C.f"));
    bundle.hcg = std::move(hcg).build();
    HetGraphBuilder cfg(GraphKind::Hcfg);
    cfg.add_node(t("EXPRESSION"));
    bundle.hcfgs.emplace_back("C.f", std::move(cfg).build());
    bundle.entry_of["C.f"] = 0;
    try {
      fuse(bundle);
      FAIL("expected MissingEntryPoint");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingEntryPoint);
    }
  }

  // Independent counting oracle for the union definition.
  TEST_CASE("fusion is node and edge conservative") {
    Rng rng(2024);
    for (int rep = 0; rep < 100; ++rep) {
      auto bundle = testsupport::random_bundle(rng, 6, 12);
      FusionResult r = fuse(bundle);

      std::size_t v_expected = bundle.hcg.node_count();
      std::size_t e_expected = bundle.hcg.edge_count();
      std::size_t internal_fns = 0;
      for (const auto& [fn, hcfg] : bundle.hcfgs) {
        v_expected += hcfg.node_count();
        e_expected += hcfg.edge_count();
        for (const HetNode& n : bundle.hcg.nodes())
          if (n.owner && *n.owner == fn) ++internal_fns;
      }
      CHECK(r.graph.node_count() == v_expected);
      CHECK(r.graph.edge_count() == e_expected + internal_fns);
      CHECK(r.fusion_edges == internal_fns);
    }
  }

  TEST_CASE("fusion preserves adjacency under re-indexing") {
    Rng rng(7);
    for (int rep = 0; rep < 30; ++rep) {
      auto bundle = testsupport::random_bundle(rng, 5, 10);
      FusionResult r = fuse(bundle);

      auto edge_present = [&](NodeId src, NodeId dst, TypeName type) {
        for (const HetEdge& e : r.graph.edges())
          if (e.src == src && e.dst == dst && e.type == type) return true;
        return false;
      };
      for (const HetEdge& e : bundle.hcg.edges())
        CHECK(edge_present(r.hcg_to_fused[e.src], r.hcg_to_fused[e.dst],
                           e.type));
      for (std::size_t i = 0; i < bundle.hcfgs.size(); ++i) {
        const auto& map = r.hcfg_to_fused[i].second;
        for (const HetEdge& e : bundle.hcfgs[i].second.edges())
          CHECK(edge_present(map[e.src], map[e.dst], e.type));
      }
    }
  }

  TEST_CASE("fusion introduces no edge type beyond CFG_OF") {
    Rng rng(99);
    for (int rep = 0; rep < 30; ++rep) {
      auto bundle = testsupport::random_bundle(rng, 5, 10);
      FusionResult r = fuse(bundle);
      std::set<std::string> allowed;
      for (TypeName et : bundle.hcg.edge_types()) allowed.insert(et.str());
      for (const auto& [fn, hcfg] : bundle.hcfgs)
        for (TypeName et : hcfg.edge_types()) allowed.insert(et.str());
      allowed.insert(fusion_edge_type().str());
      for (TypeName et : r.graph.edge_types())
        CHECK(allowed.count(et.str()) == 1);
    }
  }

  TEST_CASE("fused ids are dense and zero based") {
    Rng rng(5);
    auto bundle = testsupport::random_bundle(rng, 4, 8);
    FusionResult r = fuse(bundle);
    for (NodeId i = 0; i < r.graph.node_count(); ++i)
      CHECK(r.graph.node(i).id == i);
  }
}

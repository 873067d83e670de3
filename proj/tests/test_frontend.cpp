#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "mando/error.hpp"
#include "mando/frontend.hpp"
#include "mando/rng.hpp"
#include "support/generators.hpp"

using namespace mando;

namespace {

// Fig.-style sample bank: external send on line 15 precedes the debit.
const char* kPrivateBank = R"(pragma solidity ^0.4.19;

contract PrivateBank {
    mapping(address => uint) public balances;
    uint public MinDeposit = 1 ether;

    function Deposit() public payable {
        if (msg.value >= MinDeposit) {
            balances[msg.sender] += msg.value;
        }
    }
    function CashOut(uint _am) {
        if (_am <= balances[msg.sender]) {
            // send first, debit afterwards
            msg.sender.call.value(_am)();
            balances[msg.sender] -= _am;
        }
    }
    function () public payable {}
}
)";

std::multiset<std::tuple<std::string, std::string, std::string>> edge_set(
    const HetGraph& g) {
  std::multiset<std::tuple<std::string, std::string, std::string>> out;
  for (const HetEdge& e : g.edges())
    out.insert({g.node(e.src).type.str(), e.type.str(),
                g.node(e.dst).type.str()});
  return out;
}

std::vector<std::string> node_type_names(const HetGraph& g) {
  std::vector<std::string> out;
  for (const HetNode& n : g.nodes()) out.push_back(n.type.str());
  return out;
}

const AstFunction& fn_named(const CompilationUnit& unit,
                            const std::string& name) {
  for (const AstFunction& f : unit.functions)
    if (f.name == name) return f;
  REQUIRE(false);
  return unit.functions.front();
}

int count_in(const HetGraph& g, NodeId id) {
  return static_cast<int>(g.in_edges(id).size());
}

void check_cfg_invariants(const HetGraph& g) {
  const TypeName entry = TypeName::intern("ENTRY_POINT");
  const TypeName t_if = TypeName::intern("IF");
  const TypeName t_loop = TypeName::intern("IF_LOOP");
  const TypeName t_true = TypeName::intern("TRUE");
  const TypeName t_false = TypeName::intern("FALSE");
  std::size_t entries = 0;
  for (const HetNode& n : g.nodes()) {
    if (n.type == entry) {
      ++entries;
      CHECK(count_in(g, n.id) == 0);
    } else {
      CHECK(count_in(g, n.id) >= 1);
    }
    if (n.type == t_if || n.type == t_loop) {
      int trues = 0, falses = 0;
      for (EdgeIdx ei : g.out_edges(n.id)) {
        if (g.edges()[ei].type == t_true) ++trues;
        if (g.edges()[ei].type == t_false) ++falses;
      }
      CHECK(trues == 1);
      CHECK(falses == 1);
    }
    CHECK(n.span.has_value());
  }
  CHECK(entries == 1);
}

}  // namespace

TEST_SUITE("frontend") {

TEST_CASE("tokenize: empty and comment-only sources yield no tokens") {
  CHECK(tokenize("").empty());
  CHECK(tokenize("  \n\t \n").empty());
  CHECK(tokenize("// just a comment\n/* and\n a block */").empty());
}

TEST_CASE("tokenize: function header token kinds") {
  const auto toks = tokenize("function CashOut(uint _am)");
  REQUIRE(toks.size() == 6);
  CHECK(toks[0].kind == TokenKind::Keyword);
  CHECK(toks[0].text == "function");
  CHECK(toks[1].kind == TokenKind::Ident);
  CHECK(toks[1].text == "CashOut");
  CHECK(toks[2].kind == TokenKind::Punct);
  CHECK(toks[2].text == "(");
  CHECK(toks[3].kind == TokenKind::Keyword);
  CHECK(toks[3].text == "uint");
  CHECK(toks[4].kind == TokenKind::Ident);
  CHECK(toks[4].text == "_am");
  CHECK(toks[5].text == ")");
}

TEST_CASE("tokenize: line numbers survive comments and are non-decreasing") {
  const auto toks = tokenize("a // x\n/* two\nlines */ b\n  c");
  REQUIRE(toks.size() == 3);
  CHECK(toks[0].line == 1);
  CHECK(toks[1].line == 3);
  CHECK(toks[2].line == 4);
  for (std::size_t i = 1; i < toks.size(); ++i)
    CHECK(toks[i - 1].line <= toks[i].line);
}

TEST_CASE("tokenize: literals") {
  const auto toks = tokenize("x = \"hi\\\"there\"; y = 0x1F; z = 3e5; w = 1.5;");
  auto find = [&](TokenKind k) {
    std::vector<std::string> out;
    for (const Token& t : toks)
      if (t.kind == k) out.push_back(t.text);
    return out;
  };
  CHECK(find(TokenKind::String) == std::vector<std::string>{"hi\\\"there"});
  CHECK(find(TokenKind::Number) ==
        std::vector<std::string>{"0x1F", "3e5", "1.5"});
}

TEST_CASE("tokenize: longest-match punctuation") {
  const auto toks = tokenize("a >>= b ** c => d != e");
  std::vector<std::string> puncts;
  for (const Token& t : toks)
    if (t.kind == TokenKind::Punct) puncts.push_back(t.text);
  CHECK(puncts == std::vector<std::string>{">>=", "**", "=>", "!="});
}

TEST_CASE("tokenize: unterminated string reports its line") {
  try {
    tokenize("uint a;\nstring s = \"oops");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LexError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("tokenize: unterminated block comment reports its start line") {
  try {
    tokenize("a\nb /* never closed\nc");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LexError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("tokenize: bare 0x is a malformed hex literal") {
  CHECK_THROWS_AS(tokenize("a = 0x;"), Error);
}

TEST_CASE("parse: sample bank has three functions including the fallback") {
  const CompilationUnit unit = parse_source(kPrivateBank, "bank.sol");
  CHECK(unit.contracts == std::vector<std::string>{"PrivateBank"});
  REQUIRE(unit.functions.size() == 3);

  const AstFunction& deposit = fn_named(unit, "Deposit");
  CHECK(deposit.qualified_name == "PrivateBank.Deposit");
  CHECK(deposit.is_payable);
  CHECK(deposit.decl_line == 7);

  const AstFunction& cashout = fn_named(unit, "CashOut");
  CHECK(cashout.decl_line == 12);
  CHECK(cashout.params == std::vector<std::string>{"uint _am"});
  CHECK(!cashout.is_fallback);

  const AstFunction& fb = fn_named(unit, "fallback");
  CHECK(fb.is_fallback);
  CHECK(fb.is_payable);
  CHECK(fb.stmts.empty());
}

TEST_CASE("parse: empty contract body yields no functions") {
  const CompilationUnit unit = parse_source("contract Empty {}", "e.sol");
  CHECK(unit.contracts == std::vector<std::string>{"Empty"});
  CHECK(unit.functions.empty());
}

TEST_CASE("parse: inline assembly degrades to an opaque expression") {
  const CompilationUnit unit = parse_source(
      "contract A { function f() public { assembly { let x := add(1, 2) } "
      "total = 1; } }",
      "a.sol");
  REQUIRE(unit.functions.size() == 1);
  REQUIRE(unit.functions[0].stmts.size() == 2);
  CHECK(unit.functions[0].stmts[0].kind == StmtKind::Expression);
  CHECK(unit.functions[0].stmts[0].text == "assembly");
  CHECK(unit.functions[0].stmts[0].calls.empty());
}

TEST_CASE("parse: unbalanced braces are a structural error") {
  CHECK_THROWS_AS(parse_source("contract A { function f() public { if (x) {",
                               "bad.sol"),
                  Error);
  try {
    parse_source("contract A { ", "bad.sol");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
}

TEST_CASE("parse: declared-only functions are skipped") {
  const CompilationUnit unit = parse_source(
      "interface I { function f() external; function g() external; }",
      "i.sol");
  CHECK(unit.functions.empty());
}

TEST_CASE("parse: overloads get distinct qualified names") {
  const CompilationUnit unit = parse_source(
      "contract A { function f() public {} function f(uint x) public {} }",
      "a.sol");
  REQUIRE(unit.functions.size() == 2);
  CHECK(unit.functions[0].qualified_name == "A.f");
  CHECK(unit.functions[1].qualified_name == "A.f#2");
}

TEST_CASE("parse: non-function members are skipped without losing functions") {
  const char* src = R"(contract A {
      uint x = 1;
      event Moved(address indexed who, uint amount);
      struct S { uint a; uint b; }
      enum E { One, Two }
      modifier onlyOwner() { require(msg.sender == owner); _; }
      using SafeMath for uint;
      function f() public onlyOwner { x = 2; }
  })";
  const CompilationUnit unit = parse_source(src, "a.sol");
  REQUIRE(unit.functions.size() == 1);
  CHECK(unit.functions[0].name == "f");
}

TEST_CASE("parse: constructor keyword and emit statement") {
  const char* src = R"(contract A {
      constructor(uint seed) public { total = seed; }
      function f() public { emit Moved(msg.sender, 1); }
  })";
  const CompilationUnit unit = parse_source(src, "a.sol");
  REQUIRE(unit.functions.size() == 2);
  CHECK(unit.functions[0].qualified_name == "A.constructor");
  REQUIRE(unit.functions[1].stmts.size() == 1);
  CHECK(unit.functions[1].stmts[0].kind == StmtKind::Expression);
  CHECK(unit.functions[1].stmts[0].calls.empty());
}

TEST_CASE("parse: statement kinds and call extraction") {
  const char* src = R"(contract A {
      function f(uint n) public returns (uint) {
          uint acc = 0;
          acc = helper(n);
          target.run(acc);
          msg.sender.transfer(acc);
          require(acc > 0);
          if (acc > 10) { return acc; } else { acc = 0; }
          while (acc < n) { acc += 1; }
          for (uint i = 0; i < n; i++) { acc += i; }
          throw;
      }
      function helper(uint n) public returns (uint) { return n; }
  })";
  const CompilationUnit unit = parse_source(src, "a.sol");
  const AstFunction& f = fn_named(unit, "f");
  REQUIRE(f.stmts.size() == 9);
  CHECK(f.stmts[0].kind == StmtKind::NewVariable);
  CHECK(f.stmts[1].kind == StmtKind::Expression);
  CHECK(f.stmts[1].calls ==
        std::vector<CallRef>{CallRef{false, "helper"}});
  CHECK(f.stmts[2].calls == std::vector<CallRef>{CallRef{true, "run"}});
  CHECK(f.stmts[3].calls == std::vector<CallRef>{CallRef{true, "transfer"}});
  CHECK(f.stmts[4].kind == StmtKind::Throw);
  CHECK(!f.stmts[4].terminates);
  CHECK(f.stmts[5].kind == StmtKind::If);
  CHECK(f.stmts[5].has_else);
  CHECK(f.stmts[6].kind == StmtKind::While);
  CHECK(f.stmts[7].kind == StmtKind::For);
  REQUIRE(f.stmts[7].init.size() == 1);
  CHECK(f.stmts[7].init[0].kind == StmtKind::NewVariable);
  REQUIRE(f.stmts[7].step.size() == 1);
  CHECK(f.stmts[8].kind == StmtKind::Throw);
  CHECK(f.stmts[8].terminates);
}

TEST_CASE("parse: casts and builtins are not calls") {
  const char* src = R"(contract A {
      function f() public {
          uint x = uint(keccak256(abi.encodePacked(msg.sender)));
          address a = address(0);
          B b = new B(x);
      }
  })";
  const CompilationUnit unit = parse_source(src, "a.sol");
  const AstFunction& f = unit.functions[0];
  for (const AstStmt& s : f.stmts) CHECK(s.calls.empty());
}

TEST_CASE("hcfg: empty body is a lone entry node") {
  AstFunction fn;
  fn.file = "a.sol";
  fn.qualified_name = "A.f";
  fn.decl_line = 3;
  const HetGraph g = build_hcfg(fn);
  REQUIRE(g.node_count() == 1);
  CHECK(g.edge_count() == 0);
  CHECK(g.node(0).type.str() == "ENTRY_POINT");
  REQUIRE(g.node(0).span.has_value());
  CHECK(g.node(0).span->line_start == 3);
  CHECK(g.node(0).owner == "A.f");
}

TEST_CASE("hcfg: single-arm if converges at END_IF") {
  const CompilationUnit unit = parse_source(
      "contract A { function f() public { if (c) { x = 1; } } }", "a.sol");
  const HetGraph g = build_hcfg(unit.functions[0]);
  CHECK(node_type_names(g) ==
        std::vector<std::string>{"ENTRY_POINT", "IF", "EXPRESSION", "END_IF"});
  const auto edges = edge_set(g);
  decltype(edges) want = {
      {"ENTRY_POINT", "NEXT", "IF"},
      {"IF", "TRUE", "EXPRESSION"},
      {"EXPRESSION", "NEXT", "END_IF"},
      {"IF", "FALSE", "END_IF"},
  };
  CHECK(edges == want);
  check_cfg_invariants(g);
}

TEST_CASE("hcfg: while loop matches the hand-enumerated golden graph") {
  const CompilationUnit unit = parse_source(
      "contract A { function f() public { while (c) { x = 1; } } }", "a.sol");
  const HetGraph g = build_hcfg(unit.functions[0]);
  // golden: 0 ENTRY_POINT, 1 IF_LOOP, 2 EXPRESSION, 3 END_LOOP
  REQUIRE(g.node_count() == 4);
  CHECK(node_type_names(g) == std::vector<std::string>{
                                  "ENTRY_POINT", "IF_LOOP", "EXPRESSION",
                                  "END_LOOP"});
  std::multiset<std::tuple<NodeId, NodeId, std::string>> got;
  for (const HetEdge& e : g.edges()) got.insert({e.src, e.dst, e.type.str()});
  decltype(got) want = {
      {0, 1, "NEXT"},   // entry into the loop header
      {1, 2, "TRUE"},   // header into the body
      {2, 1, "NEXT"},   // back-edge
      {1, 3, "FALSE"},  // exit
  };
  CHECK(got == want);
  check_cfg_invariants(g);
}

TEST_CASE("hcfg: empty while body keeps one TRUE edge as a self-loop") {
  const CompilationUnit unit = parse_source(
      "contract A { function f() public { while (c) {} } }", "a.sol");
  const HetGraph g = build_hcfg(unit.functions[0]);
  const auto edges = edge_set(g);
  decltype(edges) want = {
      {"ENTRY_POINT", "NEXT", "IF_LOOP"},
      {"IF_LOOP", "TRUE", "IF_LOOP"},
      {"IF_LOOP", "FALSE", "END_LOOP"},
  };
  CHECK(edges == want);
  check_cfg_invariants(g);
}

TEST_CASE("hcfg: for desugars to init + guarded loop with step") {
  const CompilationUnit unit = parse_source(
      "contract A { function f() public { for (uint i = 0; i < n; i++) { x "
      "= i; } } }",
      "a.sol");
  const HetGraph g = build_hcfg(unit.functions[0]);
  CHECK(node_type_names(g) ==
        std::vector<std::string>{"ENTRY_POINT", "NEW_VARIABLE", "IF_LOOP",
                                 "EXPRESSION", "EXPRESSION", "END_LOOP"});
  std::multiset<std::tuple<NodeId, NodeId, std::string>> got;
  for (const HetEdge& e : g.edges()) got.insert({e.src, e.dst, e.type.str()});
  decltype(got) want = {
      {0, 1, "NEXT"}, {1, 2, "NEXT"},  {2, 3, "TRUE"},
      {3, 4, "NEXT"}, {4, 2, "NEXT"},  {2, 5, "FALSE"},
  };
  CHECK(got == want);
  check_cfg_invariants(g);
}

TEST_CASE("hcfg: throw ends its arm, require falls through") {
  const CompilationUnit unit = parse_source(
      "contract A { function f() public { require(c); if (d) { throw; } x = "
      "1; } }",
      "a.sol");
  const HetGraph g = build_hcfg(unit.functions[0]);
  // require-THROW falls through; the if-arm THROW has no outgoing edge and
  // no END_IF edge from it.
  const TypeName t_throw = TypeName::intern("THROW");
  int throws_with_out = 0, throws_total = 0;
  for (const HetNode& n : g.nodes()) {
    if (n.type != t_throw) continue;
    ++throws_total;
    if (!g.out_edges(n.id).empty()) ++throws_with_out;
  }
  CHECK(throws_total == 2);
  CHECK(throws_with_out == 1);
  check_cfg_invariants(g);
}

TEST_CASE("hcfg: code after return stays attached") {
  const CompilationUnit unit = parse_source(
      "contract A { function f() public { return 1; x = 2; } }", "a.sol");
  const HetGraph g = build_hcfg(unit.functions[0]);
  CHECK(node_type_names(g) ==
        std::vector<std::string>{"ENTRY_POINT", "RETURN", "EXPRESSION"});
  check_cfg_invariants(g);
}

TEST_CASE("hcfg: all-terminal branch arms drop the END_IF") {
  const CompilationUnit unit = parse_source(
      "contract A { function f() public { if (c) { throw; } else { return; } "
      "} }",
      "a.sol");
  const HetGraph g = build_hcfg(unit.functions[0]);
  for (const HetNode& n : g.nodes()) CHECK(n.type.str() != "END_IF");
  check_cfg_invariants(g);
}

TEST_CASE("hcfg: sample bank CashOut spans line 15") {
  const CompilationUnit unit = parse_source(kPrivateBank, "bank.sol");
  const HetGraph g = build_hcfg(fn_named(unit, "CashOut"));
  check_cfg_invariants(g);
  CHECK(g.node(0).span->line_start == 12);

  int ifs = 0;
  bool line15_expr = false;
  for (const HetNode& n : g.nodes()) {
    if (n.type.str() == "IF") ++ifs;
    if (n.type.str() == "EXPRESSION" && n.span->line_start <= 15 &&
        n.span->line_end >= 15)
      line15_expr = true;
  }
  CHECK(ifs == 1);
  CHECK(line15_expr);
}

TEST_CASE("hcfg: node spans cover every statement line") {
  const CompilationUnit unit = parse_source(kPrivateBank, "bank.sol");
  const HetGraph g = build_hcfg(fn_named(unit, "CashOut"));
  std::set<std::uint32_t> covered;
  for (const HetNode& n : g.nodes())
    for (std::uint32_t l = n.span->line_start; l <= n.span->line_end; ++l)
      covered.insert(l);
  // statement lines of CashOut's body (the comment line is not a statement)
  for (std::uint32_t l : {13u, 15u, 16u}) CHECK(covered.count(l) == 1);
}

TEST_CASE("hcfg/parser totality: fuzzed subset sources build clean graphs") {
  Rng rng(0xF00DF00Du);
  for (int iter = 0; iter < 300; ++iter) {
    testsupport::SubsetSourceGen gen(rng);
    const std::string src = gen.contract();
    CAPTURE(src);
    const CompilationUnit unit = parse_source(src, "fuzz.sol");
    for (const AstFunction& fn : unit.functions)
      check_cfg_invariants(build_hcfg(fn));
  }
}

TEST_CASE("hcg: sample bank call graph") {
  const CompilationUnit unit = parse_source(kPrivateBank, "bank.sol");
  const HetGraph g = build_hcg(unit);
  // 3 declared functions + 1 synthesized external callee
  REQUIRE(g.node_count() == 4);

  NodeId cashout = 0, external = 0;
  bool saw_fallback = false;
  for (const HetNode& n : g.nodes()) {
    if (n.owner == "PrivateBank.CashOut") cashout = n.id;
    if (n.external) {
      external = n.id;
      CHECK(n.owner == "call");
      CHECK(n.type.str() == "FUNCTION_NAME");
    }
    if (n.type.str() == "FALLBACK_NODE") saw_fallback = true;
  }
  CHECK(saw_fallback);
  REQUIRE(g.edge_count() == 1);
  const HetEdge& e = g.edges()[0];
  CHECK(e.src == cashout);
  CHECK(e.dst == external);
  CHECK(e.type.str() == "EXTERNAL_CALL");
}

TEST_CASE("hcg: no calls means no edges") {
  const CompilationUnit unit = parse_source(
      "contract A { function f() public {} function g() public {} }",
      "a.sol");
  const HetGraph g = build_hcg(unit);
  CHECK(g.node_count() == 2);
  CHECK(g.edge_count() == 0);
}

TEST_CASE("hcg: mutual recursion keeps its cycle") {
  const CompilationUnit unit = parse_source(
      "contract A { function f() public { g(); } function g() public { f(); "
      "} }",
      "a.sol");
  const HetGraph g = build_hcg(unit);
  REQUIRE(g.edge_count() == 2);
  for (const HetEdge& e : g.edges()) CHECK(e.type.str() == "INTERNAL_CALL");
  CHECK(g.edges()[0].src == g.edges()[1].dst);
  CHECK(g.edges()[0].dst == g.edges()[1].src);
}

TEST_CASE("hcg: repeated and unresolved calls") {
  const CompilationUnit unit = parse_source(
      "contract A { function f() public { g(); g(); missing(); } function "
      "g() public {} }",
      "a.sol");
  const HetGraph g = build_hcg(unit);
  CHECK(g.node_count() == 2);  // no node synthesized for `missing`
  CHECK(g.edge_count() == 1);
}

TEST_CASE("bundle: sample bank wires hcg owners to hcfg keys") {
  const ContractGraphBundle bundle =
      build_bundle(parse_source(kPrivateBank, "bank.sol"));
  CHECK(bundle.contract == "PrivateBank");
  REQUIRE(bundle.hcfgs.size() == 3);
  CHECK(std::is_sorted(bundle.hcfgs.begin(), bundle.hcfgs.end(),
                       [](const auto& a, const auto& b) {
                         return a.first < b.first;
                       }));
  for (const auto& [fn, g] : bundle.hcfgs) {
    CHECK(bundle.entry_of.at(fn) == 0);
    CHECK(g.node(0).type.str() == "ENTRY_POINT");
  }
  // fused form picks up one bridge edge per internal function
  const FusionResult fused = fuse(bundle);
  CHECK(fused.fusion_edges == 3);
}

TEST_CASE("interchange: canonical export is deterministic") {
  const ContractGraphBundle bundle =
      build_bundle(parse_source(kPrivateBank, "bank.sol"));
  const std::string a = export_json_text(bundle);
  const std::string b = export_json_text(bundle);
  CHECK(a == b);
  CHECK(a.find("\"version\": \"1\"") != std::string::npos);
}

TEST_CASE("interchange: export then import is the identity on canonical "
          "form") {
  Rng rng(0xC0FFEEu);
  for (int iter = 0; iter < 100; ++iter) {
    const ContractGraphBundle bundle =
        testsupport::random_bundle(rng, 6, 12);
    const std::string text = export_json_text(bundle);
    const ContractGraphBundle back = import_json_text(text);
    CHECK(export_json_text(back) == text);
    CHECK(back.contract == bundle.contract);
    CHECK(back.hcg.node_count() == bundle.hcg.node_count());
    CHECK(back.hcg.edge_count() == bundle.hcg.edge_count());
    REQUIRE(back.hcfgs.size() == bundle.hcfgs.size());
  }
}

TEST_CASE("interchange: source-built bundles survive the round trip") {
  const ContractGraphBundle bundle =
      build_bundle(parse_source(kPrivateBank, "bank.sol"));
  const std::string text = export_json_text(bundle);
  const ContractGraphBundle back = import_json_text(text);
  CHECK(export_json_text(back) == text);
  const HetGraph* cashout = back.hcfg_of("PrivateBank.CashOut");
  REQUIRE(cashout != nullptr);
  REQUIRE(cashout->node_count() > 0);
  CHECK(cashout->node(0).span->file == "bank.sol");
}

TEST_CASE("interchange: schema violations") {
  auto expect_schema_error = [](const std::string& text) {
    try {
      import_json_text(text);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaError);
    }
  };
  // not JSON at all
  expect_schema_error("nope");
  // missing version
  expect_schema_error(R"({"contract":"C","hcg":{"nodes":[],"edges":[]},"hcfgs":{}})");
  // unsupported version
  expect_schema_error(
      R"({"version":"2","contract":"C","hcg":{"nodes":[],"edges":[]},"hcfgs":{}})");
  // missing edge type
  expect_schema_error(
      R"({"version":"1","contract":"C","hcg":{"nodes":[{"id":0,"type":"FUNCTION_NAME","name":"x","external":true},{"id":1,"type":"FUNCTION_NAME","name":"y","external":true}],"edges":[{"src":0,"dst":1}]},"hcfgs":{}})");
  // reserved edge type
  expect_schema_error(
      R"({"version":"1","contract":"C","hcg":{"nodes":[{"id":0,"type":"FUNCTION_NAME","name":"x","external":true}],"edges":[{"src":0,"dst":0,"type":"back"}]},"hcfgs":{}})");
  // duplicate node id
  expect_schema_error(
      R"({"version":"1","contract":"C","hcg":{"nodes":[{"id":0,"type":"T"},{"id":0,"type":"T"}],"edges":[]},"hcfgs":{}})");
  // ids not dense
  expect_schema_error(
      R"({"version":"1","contract":"C","hcg":{"nodes":[{"id":1,"type":"T"}],"edges":[]},"hcfgs":{}})");
  // edge endpoint out of range
  expect_schema_error(
      R"({"version":"1","contract":"C","hcg":{"nodes":[{"id":0,"type":"T"}],"edges":[{"src":0,"dst":3,"type":"E"}]},"hcfgs":{}})");
  // hcfg without an ENTRY_POINT
  expect_schema_error(
      R"({"version":"1","contract":"C","hcg":{"nodes":[],"edges":[]},"hcfgs":{"C.f":{"entry":0,"nodes":[{"id":0,"type":"EXPRESSION"}],"edges":[]}}})");
  // entry pointing at a non-entry node
  expect_schema_error(
      R"({"version":"1","contract":"C","hcg":{"nodes":[],"edges":[]},"hcfgs":{"C.f":{"entry":1,"nodes":[{"id":0,"type":"ENTRY_POINT"},{"id":1,"type":"EXPRESSION"}],"edges":[]}}})");
  // internal function node with no control-flow graph
  expect_schema_error(
      R"({"version":"1","contract":"C","hcg":{"nodes":[{"id":0,"type":"FUNCTION_NAME","name":"C.f"}],"edges":[]},"hcfgs":{}})");
}

TEST_CASE("interchange: unknown node types pass through verbatim") {
  const char* text =
      R"({"version":"1","contract":"C","hcg":{"nodes":[{"id":0,"type":"WEIRD_TYPE","name":"n","external":true}],"edges":[]},"hcfgs":{}})";
  const ContractGraphBundle bundle = import_json_text(text);
  CHECK(bundle.hcg.node(0).type.str() == "WEIRD_TYPE");
}

TEST_CASE("interchange: load_bundle dispatches on extension") {
  const std::string dir = "frontend_io_scratch";
  write_file(dir + ".sol", kPrivateBank);
  const ContractGraphBundle from_sol = load_bundle(dir + ".sol");
  export_json(from_sol, dir + ".json");
  const ContractGraphBundle from_json = load_bundle(dir + ".json");
  CHECK(export_json_text(from_sol) == export_json_text(from_json));
  CHECK_THROWS_AS(load_bundle("does_not_exist.sol"), Error);
  std::remove((dir + ".sol").c_str());
  std::remove((dir + ".json").c_str());
}

}  // TEST_SUITE

#include <algorithm>
#include <unordered_map>

#include "mando/error.hpp"
#include "mando/frontend.hpp"

namespace mando {

namespace {

struct CfgTypes {
  TypeName entry{TypeName::intern("ENTRY_POINT")};
  TypeName expr{TypeName::intern("EXPRESSION")};
  TypeName newvar{TypeName::intern("NEW_VARIABLE")};
  TypeName ret{TypeName::intern("RETURN")};
  TypeName if_{TypeName::intern("IF")};
  TypeName end_if{TypeName::intern("END_IF")};
  TypeName if_loop{TypeName::intern("IF_LOOP")};
  TypeName end_loop{TypeName::intern("END_LOOP")};
  TypeName throw_{TypeName::intern("THROW")};
  TypeName next{TypeName::intern("NEXT")};
  TypeName true_{TypeName::intern("TRUE")};
  TypeName false_{TypeName::intern("FALSE")};
};

/// Open control-flow exit waiting for a successor. `terminal` exits come from
/// return/throw nodes: they connect onward only when no live exit reaches the
/// same join, which keeps unreachable trailing statements attached.
struct Dangling {
  NodeId from;
  TypeName label;
  bool terminal;
};

class CfgBuilder {
 public:
  CfgBuilder(const AstFunction& fn) : fn_(fn), b_(GraphKind::Hcfg) {}

  HetGraph build() && {
    const SourceSpan head{fn_.file, fn_.decl_line, fn_.decl_line};
    const NodeId entry = b_.add_node(t_.entry, head, fn_.qualified_name);
    std::vector<Dangling> exits =
        sequence(fn_.stmts, {{entry, t_.next, false}});
    (void)exits;  // function end: open exits simply stop
    return std::move(b_).build();
  }

 private:
  const AstFunction& fn_;
  HetGraphBuilder b_;
  CfgTypes t_;

  NodeId make_node(TypeName type, const SourceSpan& span) {
    return b_.add_node(type, span, fn_.qualified_name);
  }

  void edge(NodeId from, NodeId to, TypeName label) {
    b_.add_edge(from, to, label);
  }

  void connect_all(const std::vector<Dangling>& in, NodeId to) {
    for (const Dangling& d : in) edge(d.from, to, d.label);
  }

  static bool any_live(const std::vector<Dangling>& v) {
    return std::any_of(v.begin(), v.end(),
                       [](const Dangling& d) { return !d.terminal; });
  }

  std::vector<Dangling> sequence(const std::vector<AstStmt>& stmts,
                                 std::vector<Dangling> in) {
    for (const AstStmt& s : stmts) in = statement(s, std::move(in));
    return in;
  }

  SourceSpan span_of(const AstStmt& s) const {
    if (!s.span.file.empty()) return s.span;
    SourceSpan sp = s.span;
    sp.file = fn_.file;
    return sp;
  }

  std::uint32_t last_line(const AstStmt& s) const {
    std::uint32_t l = s.span.line_end;
    auto scan = [&](const std::vector<AstStmt>& body) {
      for (const AstStmt& c : body) l = std::max(l, last_line(c));
    };
    scan(s.then_body);
    scan(s.else_body);
    scan(s.body);
    scan(s.init);
    scan(s.step);
    return l;
  }

  std::vector<Dangling> statement(const AstStmt& s, std::vector<Dangling> in) {
    switch (s.kind) {
      case StmtKind::Block:
        return sequence(s.body, std::move(in));
      case StmtKind::Expression:
        return linear(t_.expr, s, std::move(in), false);
      case StmtKind::NewVariable:
        return linear(t_.newvar, s, std::move(in), false);
      case StmtKind::Return:
        return linear(t_.ret, s, std::move(in), true);
      case StmtKind::Throw:
        return linear(t_.throw_, s, std::move(in), s.terminates);
      case StmtKind::If:
        return branch(s, std::move(in));
      case StmtKind::While:
        return loop(s, s.body, {}, std::move(in));
      case StmtKind::For: {
        in = sequence(s.init, std::move(in));
        return loop(s, s.body, s.step, std::move(in));
      }
    }
    return in;
  }

  std::vector<Dangling> linear(TypeName type, const AstStmt& s,
                               std::vector<Dangling> in, bool terminal) {
    const NodeId n = make_node(type, span_of(s));
    connect_all(in, n);
    return {{n, t_.next, terminal}};
  }

  std::vector<Dangling> branch(const AstStmt& s, std::vector<Dangling> in) {
    const NodeId cond = make_node(t_.if_, span_of(s));
    connect_all(in, cond);
    std::vector<Dangling> merged =
        sequence(s.then_body, {{cond, t_.true_, false}});
    std::vector<Dangling> other =
        s.has_else ? sequence(s.else_body, {{cond, t_.false_, false}})
                   : std::vector<Dangling>{{cond, t_.false_, false}};
    merged.insert(merged.end(), other.begin(), other.end());
    if (!any_live(merged)) return merged;
    const std::uint32_t l = last_line(s);
    const NodeId join =
        make_node(t_.end_if, SourceSpan{span_of(s).file, l, l});
    for (const Dangling& d : merged)
      if (!d.terminal) edge(d.from, join, d.label);
    return {{join, t_.next, false}};
  }

  std::vector<Dangling> loop(const AstStmt& s, const std::vector<AstStmt>& body,
                             const std::vector<AstStmt>& step,
                             std::vector<Dangling> in) {
    const NodeId cond = make_node(t_.if_loop, span_of(s));
    connect_all(in, cond);
    std::vector<Dangling> tail = sequence(body, {{cond, t_.true_, false}});
    if (any_live(tail)) tail = sequence(step, std::move(tail));
    for (const Dangling& d : tail)
      if (!d.terminal) edge(d.from, cond, d.label);
    const std::uint32_t l = last_line(s);
    const NodeId exit =
        make_node(t_.end_loop, SourceSpan{span_of(s).file, l, l});
    edge(cond, exit, t_.false_);
    return {{exit, t_.next, false}};
  }
};

void collect_calls(const AstStmt& s, std::vector<CallRef>& out) {
  for (const CallRef& c : s.calls)
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  for (const std::vector<AstStmt>* body :
       {&s.then_body, &s.else_body, &s.body, &s.init, &s.step}) {
    for (const AstStmt& child : *body) collect_calls(child, out);
  }
}

}  // namespace

HetGraph build_hcfg(const AstFunction& fn) {
  return CfgBuilder(fn).build();
}

HetGraph build_hcg(const CompilationUnit& unit) {
  const TypeName t_fn = TypeName::intern("FUNCTION_NAME");
  const TypeName t_fb = TypeName::intern("FALLBACK_NODE");
  const TypeName e_int = TypeName::intern("INTERNAL_CALL");
  const TypeName e_ext = TypeName::intern("EXTERNAL_CALL");

  HetGraphBuilder b(GraphKind::Hcg);
  std::unordered_map<std::string, NodeId> by_qualified;
  for (const AstFunction& fn : unit.functions) {
    const NodeId id = b.add_node(fn.is_fallback ? t_fb : t_fn, std::nullopt,
                                 fn.qualified_name);
    by_qualified.emplace(fn.qualified_name, id);
  }

  std::unordered_map<std::string, NodeId> externals;
  auto external_node = [&](const std::string& callee) {
    auto it = externals.find(callee);
    if (it != externals.end()) return it->second;
    const NodeId id = b.add_node(t_fn, std::nullopt, callee, true);
    externals.emplace(callee, id);
    return id;
  };

  auto try_edge = [&](NodeId src, NodeId dst, TypeName type) {
    try {
      b.add_edge(src, dst, type);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DuplicateEdge) throw;
    }
  };

  for (const AstFunction& fn : unit.functions) {
    const NodeId src = by_qualified.at(fn.qualified_name);
    std::vector<CallRef> calls;
    for (const AstStmt& s : fn.stmts) collect_calls(s, calls);
    for (const CallRef& c : calls) {
      if (c.external) {
        try_edge(src, external_node(c.callee), e_ext);
        continue;
      }
      auto it = by_qualified.find(fn.contract + "." + c.callee);
      if (it != by_qualified.end()) try_edge(src, it->second, e_int);
      // unresolved plain calls (casts to unknown types, free functions)
      // are dropped
    }
  }
  return std::move(b).build();
}

ContractGraphBundle build_bundle(const CompilationUnit& unit) {
  ContractGraphBundle bundle;
  std::string contract;
  for (const std::string& c : unit.contracts) {
    if (!contract.empty()) contract += '+';
    contract += c;
  }
  bundle.contract = contract.empty() ? "Anonymous" : contract;
  bundle.hcg = build_hcg(unit);
  for (const AstFunction& fn : unit.functions) {
    bundle.hcfgs.emplace_back(fn.qualified_name, build_hcfg(fn));
    bundle.entry_of.emplace(fn.qualified_name, 0);
  }
  std::sort(bundle.hcfgs.begin(), bundle.hcfgs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return bundle;
}

}  // namespace mando

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "mando/error.hpp"
#include "mando/frontend.hpp"

namespace mando {

namespace {

const std::unordered_set<std::string_view> kLowLevelMembers = {
    "call", "delegatecall", "callcode", "send", "transfer"};

// Member names that look like calls but are builtins or call options.
const std::unordered_set<std::string_view> kIgnoredMembers = {
    "value", "gas", "length", "balance", "push", "pop"};

// Objects whose member calls are language builtins, not contract calls.
const std::unordered_set<std::string_view> kBuiltinObjects = {"abi", "msg",
                                                              "block", "tx"};

const std::unordered_set<std::string_view> kBuiltinFunctions = {
    "keccak256", "sha3",         "sha256",  "ripemd160", "ecrecover",
    "addmod",    "mulmod",       "gasleft", "blockhash", "selfdestruct",
    "suicide",   "type",         "unicode", "hex",
};

class Parser {
 public:
  Parser(const std::vector<Token>& tokens, std::string file)
      : toks_(tokens), file_(std::move(file)) {}

  CompilationUnit run() {
    CompilationUnit unit;
    unit.file = file_;
    while (!at_end()) {
      if (is_kw("pragma") || is_kw("import") || is_kw("using")) {
        skip_to_semi();
      } else if (is_kw("contract") || is_kw("library") || is_kw("interface")) {
        parse_contract(unit);
      } else {
        advance();
      }
    }
    return unit;
  }

 private:
  const std::vector<Token>& toks_;
  std::string file_;
  std::size_t pos_ = 0;
  std::unordered_set<std::string> taken_names_;

  // --- cursor helpers ---
  bool at_end() const { return pos_ >= toks_.size(); }
  const Token& tok(std::size_t off = 0) const {
    static const Token eof{TokenKind::Punct, "", 0};
    return pos_ + off < toks_.size() ? toks_[pos_ + off] : eof;
  }
  bool is_kw(std::string_view s, std::size_t off = 0) const {
    return tok(off).kind == TokenKind::Keyword && tok(off).text == s;
  }
  bool is_punct(std::string_view s, std::size_t off = 0) const {
    return tok(off).kind == TokenKind::Punct && tok(off).text == s;
  }
  std::uint32_t line() const {
    if (at_end()) return toks_.empty() ? 1 : toks_.back().line;
    return tok().line;
  }
  void advance() { ++pos_; }

  [[noreturn]] void structural_error(const std::string& expected) {
    raise(ErrorCode::ParseError,
          file_ + ":" + std::to_string(line()) + ": expected " + expected);
  }

  void skip_to_semi() {
    int depth = 0;
    while (!at_end()) {
      if (is_punct("(") || is_punct("[")) ++depth;
      if (is_punct(")") || is_punct("]")) --depth;
      if (depth <= 0 && is_punct(";")) {
        advance();
        return;
      }
      if (depth <= 0 && (is_punct("{") || is_punct("}"))) return;
      advance();
    }
  }

  // Consumes from the current '{' through its matching '}'.
  void skip_balanced_braces() {
    if (!is_punct("{")) structural_error("'{'");
    int depth = 0;
    while (!at_end()) {
      if (is_punct("{")) ++depth;
      if (is_punct("}")) {
        --depth;
        advance();
        if (depth == 0) return;
        continue;
      }
      advance();
    }
    structural_error("'}' (unbalanced braces)");
  }

  void skip_balanced_parens() {
    if (!is_punct("(")) structural_error("'('");
    int depth = 0;
    while (!at_end()) {
      if (is_punct("(")) ++depth;
      if (is_punct(")")) {
        --depth;
        advance();
        if (depth == 0) return;
        continue;
      }
      advance();
    }
    structural_error("')' (unbalanced parentheses)");
  }

  // --- contract level ---

  void parse_contract(CompilationUnit& unit) {
    advance();  // contract/library/interface
    std::string name = "Anonymous";
    if (tok().kind == TokenKind::Ident) {
      name = tok().text;
      advance();
    }
    unit.contracts.push_back(name);
    while (!at_end() && !is_punct("{")) advance();  // inheritance etc.
    if (at_end()) structural_error("'{' after contract header");
    advance();  // '{'
    while (!at_end() && !is_punct("}")) parse_member(unit, name);
    if (at_end()) structural_error("'}' closing contract body");
    advance();  // '}'
  }

  void parse_member(CompilationUnit& unit, const std::string& contract) {
    if (is_kw("function") || is_kw("constructor") || is_kw("fallback") ||
        is_kw("receive")) {
      parse_function(unit, contract);
      return;
    }
    if (is_kw("modifier")) {
      advance();
      if (tok().kind == TokenKind::Ident) advance();
      if (is_punct("(")) skip_balanced_parens();
      while (!at_end() && !is_punct("{") && !is_punct(";")) advance();
      if (is_punct("{"))
        skip_balanced_braces();
      else if (is_punct(";"))
        advance();
      return;
    }
    if (is_kw("struct") || is_kw("enum")) {
      advance();
      while (!at_end() && !is_punct("{") && !is_punct(";")) advance();
      if (is_punct("{"))
        skip_balanced_braces();
      else
        skip_to_semi();
      return;
    }
    if (is_kw("event") || is_kw("using")) {
      skip_to_semi();
      return;
    }
    // state variable or anything else: consume through ';'
    skip_to_semi();
    if (is_punct("{")) skip_balanced_braces();  // stray block
  }

  void parse_function(CompilationUnit& unit, const std::string& contract) {
    const std::uint32_t decl_line = line();
    AstFunction fn;
    fn.file = file_;
    fn.contract = contract;
    fn.decl_line = decl_line;

    if (is_kw("function")) {
      advance();
      if (tok().kind == TokenKind::Ident) {
        fn.name = tok().text;
        advance();
      } else {
        fn.name = "fallback";  // old-style unnamed fallback
        fn.is_fallback = true;
      }
    } else if (is_kw("constructor")) {
      fn.name = "constructor";
      advance();
    } else {  // fallback / receive keywords
      fn.name = tok().text;
      fn.is_fallback = true;
      advance();
    }

    if (is_punct("(")) {
      const std::size_t start = pos_ + 1;
      skip_balanced_parens();
      collect_params(fn, start, pos_ - 1);
    }

    // attribute soup until body or ';'
    while (!at_end() && !is_punct("{") && !is_punct(";")) {
      if (is_kw("payable")) fn.is_payable = true;
      if (is_kw("returns")) {
        advance();
        if (is_punct("(")) skip_balanced_parens();
        continue;
      }
      if (is_punct("(")) {
        skip_balanced_parens();  // modifier arguments
        continue;
      }
      advance();
    }
    if (at_end()) structural_error("function body or ';'");
    if (is_punct(";")) {
      advance();  // declared-only: no node, no graph
      return;
    }
    advance();  // '{'
    fn.stmts = parse_block_contents();

    fn.qualified_name = contract + "." + fn.name;
    int suffix = 2;
    while (!taken_names_.insert(fn.qualified_name).second)
      fn.qualified_name =
          contract + "." + fn.name + "#" + std::to_string(suffix++);
    unit.functions.push_back(std::move(fn));
  }

  void collect_params(AstFunction& fn, std::size_t begin, std::size_t end) {
    std::string cur;
    int depth = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const Token& t = toks_[i];
      if (t.kind == TokenKind::Punct && (t.text == "(" || t.text == "["))
        ++depth;
      if (t.kind == TokenKind::Punct && (t.text == ")" || t.text == "]"))
        --depth;
      if (depth == 0 && t.kind == TokenKind::Punct && t.text == ",") {
        if (!cur.empty()) fn.params.push_back(cur);
        cur.clear();
        continue;
      }
      if (!cur.empty()) cur += ' ';
      cur += t.text;
    }
    if (!cur.empty()) fn.params.push_back(cur);
  }

  // --- statements ---

  std::vector<AstStmt> parse_block_contents() {
    std::vector<AstStmt> out;
    while (!at_end() && !is_punct("}")) out.push_back(parse_statement());
    if (at_end()) structural_error("'}' closing block");
    advance();  // '}'
    return out;
  }

  AstStmt parse_statement() {
    if (is_punct("{")) {
      AstStmt s;
      s.kind = StmtKind::Block;
      const std::uint32_t l0 = line();
      advance();
      s.body = parse_block_contents();
      s.span = SourceSpan{file_, l0, prev_line()};
      return s;
    }
    if (is_kw("if")) return parse_if();
    if (is_kw("while")) return parse_while();
    if (is_kw("for")) return parse_for();
    if (is_kw("return")) return simple_stmt(StmtKind::Return, true, false);
    if (is_kw("throw")) return simple_stmt(StmtKind::Throw, true, true);
    if (is_kw("revert")) return simple_stmt(StmtKind::Throw, true, true);
    if (is_kw("require") || is_kw("assert"))
      return simple_stmt(StmtKind::Throw, true, false);
    if (is_kw("emit")) {
      AstStmt s = simple_stmt(StmtKind::Expression, true, false);
      s.calls.clear();  // event emission is not a function call
      return s;
    }
    if (is_kw("assembly")) {
      AstStmt s;
      s.kind = StmtKind::Expression;
      const std::uint32_t l0 = line();
      advance();
      if (tok().kind == TokenKind::String) advance();
      if (is_punct("(")) skip_balanced_parens();  // dialect flags
      if (is_punct("{")) skip_balanced_braces();
      s.span = SourceSpan{file_, l0, prev_line()};
      s.text = "assembly";
      return s;
    }
    if (is_kw("unchecked")) {
      AstStmt s;
      s.kind = StmtKind::Block;
      const std::uint32_t l0 = line();
      advance();
      if (is_punct("{")) {
        advance();
        s.body = parse_block_contents();
      }
      s.span = SourceSpan{file_, l0, prev_line()};
      return s;
    }
    if (is_kw("do")) {
      // degraded do-while: body once, condition as a trailing expression
      AstStmt s;
      s.kind = StmtKind::Block;
      const std::uint32_t l0 = line();
      advance();
      s.body.push_back(parse_statement());
      if (is_kw("while")) {
        AstStmt cond = simple_stmt(StmtKind::Expression, true, false);
        s.body.push_back(std::move(cond));
      }
      s.span = SourceSpan{file_, l0, prev_line()};
      return s;
    }
    if (starts_declaration()) return simple_stmt(StmtKind::NewVariable, false,
                                                 false);
    return simple_stmt(StmtKind::Expression, false, false);
  }

  std::uint32_t prev_line() const {
    return pos_ > 0 ? toks_[pos_ - 1].line : line();
  }

  bool starts_declaration() const {
    const Token& t = tok();
    if (t.kind == TokenKind::Keyword &&
        (is_type_keyword(t.text) || t.text == "var"))
      return true;
    if (t.kind == TokenKind::Ident) {
      if (tok(1).kind == TokenKind::Ident) return true;  // Foo x
      if (is_punct("[", 1)) {
        // Foo[...] x  vs  arr[...] = v
        std::size_t i = pos_ + 1;
        int depth = 0;
        while (i < toks_.size()) {
          if (toks_[i].kind == TokenKind::Punct && toks_[i].text == "[")
            ++depth;
          if (toks_[i].kind == TokenKind::Punct && toks_[i].text == "]") {
            --depth;
            if (depth == 0) break;
          }
          ++i;
        }
        if (i + 1 < toks_.size()) {
          const Token& after = toks_[i + 1];
          if (after.kind == TokenKind::Ident ||
              (after.kind == TokenKind::Keyword &&
               (after.text == "memory" || after.text == "storage" ||
                after.text == "calldata")))
            return true;
        }
      }
    }
    return false;
  }

  /// Statement consumed through its terminating ';'. leading_kw: keep the
  /// first keyword inside the scanned range (return/require/...).
  AstStmt simple_stmt(StmtKind kind, bool leading_kw, bool terminates) {
    AstStmt s;
    s.kind = kind;
    s.terminates = terminates;
    const std::uint32_t l0 = line();
    const std::size_t begin = pos_;
    (void)leading_kw;
    int depth = 0;
    while (!at_end()) {
      if (is_punct("(") || is_punct("[")) ++depth;
      if (is_punct(")") || is_punct("]")) --depth;
      if (depth <= 0 && is_punct(";")) break;
      if (depth <= 0 && (is_punct("{") || is_punct("}"))) break;
      advance();
    }
    const std::size_t end = pos_;
    if (is_punct(";")) advance();
    s.span = SourceSpan{file_, l0, prev_line()};
    s.text = text_of(begin, end);
    scan_calls(begin, end, s.calls);
    return s;
  }

  AstStmt parse_if() {
    AstStmt s;
    s.kind = StmtKind::If;
    const std::uint32_t l0 = line();
    advance();  // if
    const std::size_t cond_begin = pos_ + 1;
    if (!is_punct("(")) structural_error("'(' after if");
    skip_balanced_parens();
    const std::size_t cond_end = pos_ - 1;
    s.span = SourceSpan{file_, l0, toks_[cond_end].line};
    s.text = "if ( " + text_of(cond_begin, cond_end) + " )";
    scan_calls(cond_begin, cond_end, s.calls);
    s.then_body = arm();
    if (is_kw("else")) {
      advance();
      s.has_else = true;
      s.else_body = arm();
    }
    return s;
  }

  AstStmt parse_while() {
    AstStmt s;
    s.kind = StmtKind::While;
    const std::uint32_t l0 = line();
    advance();  // while
    const std::size_t cond_begin = pos_ + 1;
    if (!is_punct("(")) structural_error("'(' after while");
    skip_balanced_parens();
    const std::size_t cond_end = pos_ - 1;
    s.span = SourceSpan{file_, l0, toks_[cond_end].line};
    s.text = "while ( " + text_of(cond_begin, cond_end) + " )";
    scan_calls(cond_begin, cond_end, s.calls);
    s.body = arm();
    return s;
  }

  AstStmt parse_for() {
    AstStmt s;
    s.kind = StmtKind::For;
    const std::uint32_t l0 = line();
    advance();  // for
    if (!is_punct("(")) structural_error("'(' after for");
    advance();  // '('
    if (!is_punct(";")) {
      s.init.push_back(starts_declaration()
                           ? simple_stmt(StmtKind::NewVariable, false, false)
                           : simple_stmt(StmtKind::Expression, false, false));
    } else {
      advance();  // empty init
    }
    // condition through next ';'
    const std::size_t cond_begin = pos_;
    int depth = 0;
    while (!at_end()) {
      if (is_punct("(") || is_punct("[")) ++depth;
      if (is_punct(")") || is_punct("]")) {
        if (depth == 0) break;
        --depth;
      }
      if (depth == 0 && is_punct(";")) break;
      advance();
    }
    const std::size_t cond_end = pos_;
    scan_calls(cond_begin, cond_end, s.calls);
    if (is_punct(";")) advance();
    // step through closing ')'
    const std::size_t step_begin = pos_;
    depth = 0;
    while (!at_end()) {
      if (is_punct("(") || is_punct("[")) ++depth;
      if (is_punct(")") || is_punct("]")) {
        if (depth == 0) break;
        --depth;
      }
      advance();
    }
    const std::size_t step_end = pos_;
    s.span = SourceSpan{file_, l0, line()};
    s.text = "for ( " + text_of(cond_begin, cond_end) + " )";
    if (step_end > step_begin) {
      AstStmt step;
      step.kind = StmtKind::Expression;
      step.span = SourceSpan{file_, toks_[step_begin].line,
                             toks_[step_end - 1].line};
      step.text = text_of(step_begin, step_end);
      scan_calls(step_begin, step_end, step.calls);
      s.step.push_back(std::move(step));
    }
    if (is_punct(")")) advance();
    s.body = arm();
    return s;
  }

  std::vector<AstStmt> arm() {
    AstStmt s = parse_statement();
    if (s.kind == StmtKind::Block) return std::move(s.body);
    std::vector<AstStmt> out;
    out.push_back(std::move(s));
    return out;
  }

  std::string text_of(std::size_t begin, std::size_t end) const {
    std::string out;
    for (std::size_t i = begin; i < end && i < toks_.size(); ++i) {
      if (!out.empty()) out += ' ';
      if (toks_[i].kind == TokenKind::String)
        out += '"' + toks_[i].text + '"';
      else
        out += toks_[i].text;
      if (out.size() > 200) break;
    }
    return out;
  }

  void scan_calls(std::size_t begin, std::size_t end,
                  std::vector<CallRef>& out) const {
    auto add = [&](bool external, const std::string& callee) {
      CallRef ref{external, callee};
      if (std::find(out.begin(), out.end(), ref) == out.end())
        out.push_back(ref);
    };
    for (std::size_t i = begin; i < end && i < toks_.size(); ++i) {
      const Token& t = toks_[i];
      if (t.kind == TokenKind::Punct && t.text == "." && i + 1 < end) {
        const Token& member = toks_[i + 1];
        if (member.kind != TokenKind::Ident) continue;
        if (kLowLevelMembers.count(member.text)) {
          add(true, member.text);
          continue;
        }
        if (kIgnoredMembers.count(member.text)) continue;
        if (i + 2 < end && toks_[i + 2].kind == TokenKind::Punct &&
            toks_[i + 2].text == "(") {
          if (i > begin && toks_[i - 1].kind == TokenKind::Ident &&
              kBuiltinObjects.count(toks_[i - 1].text))
            continue;
          add(true, member.text);
        }
        continue;
      }
      if (t.kind == TokenKind::Ident && i + 1 < end &&
          toks_[i + 1].kind == TokenKind::Punct && toks_[i + 1].text == "(") {
        if (i > begin && toks_[i - 1].kind == TokenKind::Punct &&
            toks_[i - 1].text == ".")
          continue;  // member call, handled above
        if (i > begin && toks_[i - 1].kind == TokenKind::Keyword &&
            toks_[i - 1].text == "new")
          continue;  // contract creation
        if (kBuiltinFunctions.count(t.text)) continue;
        add(false, t.text);
      }
    }
  }
};

}  // namespace

CompilationUnit parse_unit(const std::vector<Token>& tokens,
                           const std::string& file) {
  return Parser(tokens, file).run();
}

CompilationUnit parse_source(std::string_view source, const std::string& file) {
  return parse_unit(tokenize(source), file);
}

}  // namespace mando

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mando/hetgraph.hpp"

namespace mando {

enum class TokenKind { Ident, Keyword, Number, String, Punct };

struct Token {
  TokenKind kind;
  std::string text;
  std::uint32_t line = 1;
};

/// Lexes a Solidity-subset source. Comments are stripped; line numbers are
/// preserved. Throws Error(LexError) on malformed literals.
std::vector<Token> tokenize(std::string_view source);

bool is_type_keyword(std::string_view text);

enum class StmtKind {
  Expression,
  NewVariable,
  Return,
  If,
  While,
  For,
  Throw,  // throw / revert / require / assert
  Block,
};

struct CallRef {
  bool external = false;  // member call on an address or another contract
  std::string callee;     // plain callee name, or member name for external

  friend bool operator==(const CallRef&, const CallRef&) = default;
};

struct AstStmt {
  StmtKind kind = StmtKind::Expression;
  SourceSpan span;
  std::string text;        // compacted source text of the statement head
  bool terminates = false; // throw/revert: control does not fall through
  std::vector<CallRef> calls;

  // If: then_body/else_body (has_else distinguishes an empty else-arm from
  // a missing one). While/For: body. For: init/step. Block: body.
  std::vector<AstStmt> then_body;
  std::vector<AstStmt> else_body;
  bool has_else = false;
  std::vector<AstStmt> body;
  std::vector<AstStmt> init;
  std::vector<AstStmt> step;
};

struct AstFunction {
  std::string file;
  std::string contract;
  std::string name;
  std::string qualified_name;  // "Contract.function"
  std::vector<std::string> params;
  std::vector<AstStmt> stmts;
  bool is_fallback = false;
  bool is_payable = false;
  std::uint32_t decl_line = 1;
};

struct CompilationUnit {
  std::string file;
  std::vector<std::string> contracts;
  std::vector<AstFunction> functions;  // grouped by contract, source order
};

/// Parses a token stream. Unsupported constructs degrade to opaque
/// expression statements; Error(ParseError) only on structural breakage.
CompilationUnit parse_unit(const std::vector<Token>& tokens,
                           const std::string& file);

/// Convenience: tokenize + parse.
CompilationUnit parse_source(std::string_view source, const std::string& file);

/// Statement-level control-flow graph with exactly one ENTRY_POINT node.
HetGraph build_hcfg(const AstFunction& fn);

/// Unit-level call graph: one node per function plus synthesized external
/// callees, INTERNAL_CALL/EXTERNAL_CALL edges.
HetGraph build_hcg(const CompilationUnit& unit);

/// Full bundle: hcg + per-function hcfgs + entry map.
ContractGraphBundle build_bundle(const CompilationUnit& unit);

// --- JSON graph interchange (schema version "1") ---

ContractGraphBundle import_json_text(const std::string& text);
ContractGraphBundle import_json(const std::string& path);
std::string export_json_text(const ContractGraphBundle& bundle);
void export_json(const ContractGraphBundle& bundle, const std::string& path);

/// Reads a bundle from either a .sol source or a .json interchange file.
ContractGraphBundle load_bundle(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view text);

}  // namespace mando

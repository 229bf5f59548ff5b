#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Structural front end for Python source. It recovers exactly the node kinds
// the component extractors consume (imports, class definitions, assignments,
// call expressions) and never aborts on malformed input: statements that do
// not parse are skipped and recorded as diagnostics.
namespace nnbom::pyfront {

struct Diagnostic {
    int line = 0;
    std::string message;
};

struct ImportedName {
    std::string name;
    std::string alias;  // empty: binds under `name`
};

struct ImportDecl {
    std::vector<std::string> path;  // dotted segments; may be empty for `from . import x`
    int relative_level = 0;         // count of leading dots
    bool is_from = false;
    std::string alias;                 // explicit `as` alias for plain imports
    std::vector<ImportedName> names;   // from-import names; {"*"} for star imports
    int line = 0;

    std::string dotted() const;
    // Binding name for a plain import: the `as` alias, else the last segment.
    std::string binding() const;
};

struct BaseExpr {
    std::string text;     // dotted name, or raw source text when opaque
    bool opaque = false;  // not a plain dotted name; ignored by inheritance resolution
};

struct ClassDef {
    std::string name;       // nesting-aware, e.g. "Outer.Inner"
    std::string qualified;  // module path + "." + name
    std::vector<BaseExpr> bases;
    int first_line = 0;  // 1-based, inclusive; includes decorator lines
    int last_line = 0;
    std::string source;  // verbatim byte slice of [first_line, last_line]

    int loc() const { return last_line - first_line + 1; }
};

enum class ValueKind { StringLiteral, NameRef, Opaque };

struct Value {
    ValueKind kind = ValueKind::Opaque;
    std::string text;  // decoded literal value, or referenced name
};

struct Assignment {
    std::string target;
    Value value;
    int line = 0;
};

struct CallSite {
    std::string callee;     // longest dotted name ending at the call paren
    bool attr_only = false; // callee chain hangs off a non-name expression
    std::vector<Value> args;
    std::vector<std::pair<std::string, Value>> kwargs;
    int line = 0;
};

struct SourceUnit {
    std::string path;         // repo-relative file path
    std::string module_path;  // dotted module path derived from `path`
    std::string text;         // decoded file contents (UTF-8, lossy-replaced)
    std::vector<ImportDecl> imports;
    std::vector<ClassDef> classes;
    std::vector<Assignment> assignments;
    std::vector<CallSite> calls;
    std::vector<Diagnostic> diagnostics;
};

struct SymbolTable {
    // name -> most recent string-literal value, file order, last write wins
    std::map<std::string, std::string> strings;
    // alias -> full dotted path (relative imports resolved against the file path)
    std::map<std::string, std::string> aliases;
    // qualified class name -> non-opaque base expressions
    std::map<std::string, std::vector<std::string>> class_bases;
};

// ---- token layer (exposed for the clone normalizer and tests) ----

enum class TokKind { Name, Number, String, Op };

struct Token {
    TokKind kind = TokKind::Op;
    std::string text;  // raw source text, including string quotes/prefix
    int line = 0;
    int end_line = 0;  // differs from line for multi-line strings
    size_t begin = 0, end = 0;  // byte offsets into the decoded text
    bool is_plain_string = false;  // str literal with a statically known value
    std::string string_value;      // decoded value when is_plain_string
};

struct LogicalLine {
    int indent = 0;  // leading columns; tabs count as one column
    int first_line = 0, last_line = 0;
    std::vector<Token> toks;
};

struct TokenizeResult {
    std::vector<LogicalLine> lines;
    std::vector<Diagnostic> diagnostics;
};

// Tokenizes Python source into logical lines. Always terminates; unterminated
// strings/brackets produce diagnostics, and bracket continuation is abandoned
// when the next physical line starts with a statement-only keyword.
TokenizeResult tokenize(std::string_view text);

// "pkg/sub/mod.py" -> "pkg.sub.mod"; "pkg/__init__.py" -> "pkg"
std::string module_path_of(std::string_view repo_relative_path);

SourceUnit parse_source(std::string_view bytes, std::string path);

SymbolTable build_symbol_table(const SourceUnit& unit);

}  // namespace nnbom::pyfront

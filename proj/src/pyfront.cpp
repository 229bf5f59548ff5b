#include "nnbom/pyfront.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_set>

#include "nnbom/util.hpp"

namespace nnbom::pyfront {

namespace {

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_cont(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

// Keywords that can never begin a continuation line inside brackets. Seeing
// one there means the enclosing statement was malformed; the tokenizer closes
// the logical line so later statements are still recovered.
const std::unordered_set<std::string>& recovery_keywords() {
    static const std::unordered_set<std::string> kw = {
        "import", "from",     "class",  "def",   "return", "pass",  "del",
        "raise",  "global",   "nonlocal", "assert", "break", "continue",
        "while",  "try",      "except", "finally", "elif",  "with",
    };
    return kw;
}

bool is_string_prefix(std::string_view s) {
    if (s.empty() || s.size() > 2) return false;
    for (char c : s) {
        char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (l != 'r' && l != 'b' && l != 'u' && l != 'f') return false;
    }
    return true;
}

// Multi-character operators, longest first.
const std::vector<std::string>& multi_ops() {
    static const std::vector<std::string> ops = {
        "**=", "//=", ">>=", "<<=", "...", "!=", ">=", "<=", "==", "->", ":=",
        "+=",  "-=",  "*=",  "/=",  "%=",  "@=", "&=", "|=", "^=", "**", "//",
        ">>",  "<<",
    };
    return ops;
}

std::string decode_escapes(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '\\' || i + 1 >= raw.size()) {
            out.push_back(raw[i]);
            continue;
        }
        char c = raw[++i];
        switch (c) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            case '\\': out.push_back('\\'); break;
            case '\'': out.push_back('\''); break;
            case '"': out.push_back('"'); break;
            case '0': out.push_back('\0'); break;
            case '\n': break;  // line continuation inside the literal
            case 'x': {
                if (i + 2 < raw.size() && std::isxdigit(static_cast<unsigned char>(raw[i + 1])) &&
                    std::isxdigit(static_cast<unsigned char>(raw[i + 2]))) {
                    int v = std::stoi(std::string(raw.substr(i + 1, 2)), nullptr, 16);
                    out.push_back(static_cast<char>(v));
                    i += 2;
                } else {
                    out.push_back('\\');
                    out.push_back('x');
                }
                break;
            }
            default:
                // Unknown escape keeps the backslash, like Python.
                out.push_back('\\');
                out.push_back(c);
        }
    }
    return out;
}

struct Tokenizer {
    std::string_view text;
    size_t pos = 0;
    int line = 1;
    int depth = 0;
    TokenizeResult result;
    LogicalLine current;
    bool in_logical = false;
    int bracket_open_line = 0;
    std::set<int> diagnosed_lines;

    explicit Tokenizer(std::string_view t) : text(t) {}

    void diag(int at_line, std::string message) {
        if (diagnosed_lines.insert(at_line).second) {
            result.diagnostics.push_back({at_line, std::move(message)});
        }
    }

    char peek(size_t off = 0) const {
        return pos + off < text.size() ? text[pos + off] : '\0';
    }

    void flush_line() {
        if (in_logical && !current.toks.empty()) {
            current.last_line = current.toks.back().end_line;
            result.lines.push_back(std::move(current));
        }
        current = LogicalLine{};
        in_logical = false;
        depth = 0;
    }

    // Measures indentation columns for the physical line that begins at `pos`.
    int measure_indent(size_t at) const {
        int cols = 0;
        for (size_t i = at; i < text.size(); ++i) {
            if (text[i] == ' ' || text[i] == '\t' || text[i] == '\f') {
                ++cols;  // tabs count as one column
            } else {
                break;
            }
        }
        return cols;
    }

    // Peeks the first identifier on the physical line starting at `at`.
    std::string first_word_of_line(size_t at) const {
        size_t i = at;
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\f')) ++i;
        size_t start = i;
        while (i < text.size() && is_ident_cont(static_cast<unsigned char>(text[i]))) ++i;
        if (i == start || !is_ident_start(static_cast<unsigned char>(text[start]))) return {};
        return std::string(text.substr(start, i - start));
    }

    void push_token(TokKind kind, size_t begin, size_t end, int at_line, int at_end_line,
                    bool plain = false, std::string value = {}) {
        if (!in_logical) {
            in_logical = true;
            // find start of this physical line to measure indentation
            size_t ls = begin;
            while (ls > 0 && text[ls - 1] != '\n') --ls;
            current.indent = measure_indent(ls);
            current.first_line = at_line;
        }
        Token t;
        t.kind = kind;
        t.text = std::string(text.substr(begin, end - begin));
        t.line = at_line;
        t.end_line = at_end_line;
        t.begin = begin;
        t.end = end;
        t.is_plain_string = plain;
        t.string_value = std::move(value);
        current.toks.push_back(std::move(t));
    }

    void scan_string(size_t prefix_begin, std::string_view prefix) {
        bool raw = false, bytes = false, fstr = false;
        for (char c : prefix) {
            char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (l == 'r') raw = true;
            if (l == 'b') bytes = true;
            if (l == 'f') fstr = true;
        }
        char quote = peek();
        int start_line = line;
        bool triple = peek(1) == quote && peek(2) == quote;
        pos += triple ? 3 : 1;
        size_t body_begin = pos;
        bool closed = false;
        while (pos < text.size()) {
            char c = text[pos];
            if (c == '\\' && pos + 1 < text.size()) {
                if (text[pos + 1] == '\n') ++line;
                pos += 2;
                continue;
            }
            if (c == '\n') {
                if (!triple) break;  // unterminated single-quoted string
                ++line;
                ++pos;
                continue;
            }
            if (c == quote) {
                if (!triple) {
                    closed = true;
                    ++pos;
                    break;
                }
                if (peek(1) == quote && peek(2) == quote) {
                    closed = true;
                    pos += 3;
                    break;
                }
            }
            ++pos;
        }
        size_t token_end = pos;
        size_t body_end = closed ? pos - (triple ? 3 : 1) : pos;
        if (!closed) diag(start_line, "unterminated string literal");
        bool plain = closed && !bytes && !fstr;
        std::string value;
        if (plain) {
            std::string_view body = text.substr(body_begin, body_end - body_begin);
            value = raw ? std::string(body) : decode_escapes(body);
        }
        push_token(TokKind::String, prefix_begin, token_end, start_line, line, plain,
                   std::move(value));
    }

    void run() {
        while (pos < text.size()) {
            char c = text[pos];

            if (c == '\n') {
                ++line;
                ++pos;
                if (depth > 0) {
                    // Abandon the bracket continuation if the next line cannot
                    // legally continue an expression.
                    std::string w = first_word_of_line(pos);
                    if (!w.empty() && recovery_keywords().count(w)) {
                        diag(bracket_open_line, "unbalanced brackets; statement abandoned");
                        flush_line();
                    }
                    continue;
                }
                flush_line();
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
                ++pos;
                continue;
            }
            if (c == '\\' && peek(1) == '\n') {
                pos += 2;
                ++line;
                continue;
            }
            if (c == '#') {
                while (pos < text.size() && text[pos] != '\n') ++pos;
                continue;
            }
            if (is_ident_start(static_cast<unsigned char>(c))) {
                size_t start = pos;
                while (pos < text.size() && is_ident_cont(static_cast<unsigned char>(text[pos]))) ++pos;
                std::string_view word = text.substr(start, pos - start);
                if ((peek() == '"' || peek() == '\'') && is_string_prefix(word)) {
                    scan_string(start, word);
                } else {
                    push_token(TokKind::Name, start, pos, line, line);
                }
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
                size_t start = pos;
                bool radix_prefix = c == '0' && (peek(1) == 'x' || peek(1) == 'X' ||
                                                 peek(1) == 'b' || peek(1) == 'B' ||
                                                 peek(1) == 'o' || peek(1) == 'O');
                while (pos < text.size()) {
                    char d = text[pos];
                    if (std::isalnum(static_cast<unsigned char>(d)) || d == '.' || d == '_') {
                        ++pos;
                        continue;
                    }
                    if ((d == '+' || d == '-') && !radix_prefix && pos > start &&
                        (text[pos - 1] == 'e' || text[pos - 1] == 'E')) {
                        ++pos;
                        continue;
                    }
                    break;
                }
                push_token(TokKind::Number, start, pos, line, line);
                continue;
            }
            if (c == '"' || c == '\'') {
                scan_string(pos, {});
                continue;
            }
            // operators / punctuation
            {
                size_t start = pos;
                std::string matched;
                for (const auto& op : multi_ops()) {
                    if (text.compare(pos, op.size(), op) == 0) {
                        matched = op;
                        break;
                    }
                }
                if (matched.empty()) matched = std::string(1, c);
                pos += matched.size();
                if (matched == "(" || matched == "[" || matched == "{") {
                    if (depth == 0) bracket_open_line = line;
                    ++depth;
                } else if (matched == ")" || matched == "]" || matched == "}") {
                    if (depth > 0) {
                        --depth;
                    } else {
                        diag(line, "unmatched closing bracket");
                    }
                }
                push_token(TokKind::Op, start, start + matched.size(), line, line);
                continue;
            }
        }
        if (depth > 0) diag(bracket_open_line, "unbalanced brackets at end of file");
        flush_line();
    }
};

}  // namespace

TokenizeResult tokenize(std::string_view text) {
    Tokenizer tk(text);
    tk.run();
    return tk.result;
}

std::string ImportDecl::dotted() const { return util::join(path, "."); }

std::string ImportDecl::binding() const {
    if (!alias.empty()) return alias;
    return path.empty() ? std::string() : path.back();
}

std::string module_path_of(std::string_view repo_relative_path) {
    std::string p(repo_relative_path);
    if (p.size() > 3 && p.ends_with(".py")) p.resize(p.size() - 3);
    auto parts = util::split(p, '/');
    if (!parts.empty() && parts.back() == "__init__") parts.pop_back();
    return util::join(parts, ".");
}

namespace {

using Toks = std::vector<Token>;

bool is_op(const Token& t, std::string_view s) { return t.kind == TokKind::Op && t.text == s; }
bool is_kw(const Token& t, std::string_view s) { return t.kind == TokKind::Name && t.text == s; }

// Returns the joined dotted name if toks[first..last] is NAME (DOT NAME)*.
std::optional<std::string> dotted_name(const Toks& toks, size_t first, size_t last) {
    if (first > last || last >= toks.size()) return std::nullopt;
    std::string out;
    bool expect_name = true;
    for (size_t i = first; i <= last; ++i) {
        if (expect_name) {
            if (toks[i].kind != TokKind::Name) return std::nullopt;
            out += toks[i].text;
        } else {
            if (!is_op(toks[i], ".")) return std::nullopt;
            out += '.';
        }
        expect_name = !expect_name;
    }
    if (expect_name) return std::nullopt;  // ended on a dot
    return out;
}

std::string raw_text(const Toks& toks, size_t first, size_t last) {
    std::vector<std::string> parts;
    for (size_t i = first; i <= last && i < toks.size(); ++i) parts.push_back(toks[i].text);
    return util::join(parts, " ");
}

// Classifies an expression slice as string literal / name ref / opaque.
Value classify_value(const Toks& toks, size_t first, size_t last) {
    if (first > last || last >= toks.size()) return {ValueKind::Opaque, ""};
    bool all_strings = true;
    for (size_t i = first; i <= last; ++i) {
        if (toks[i].kind != TokKind::String || !toks[i].is_plain_string) {
            all_strings = false;
            break;
        }
    }
    if (all_strings) {
        std::string v;
        for (size_t i = first; i <= last; ++i) v += toks[i].string_value;
        return {ValueKind::StringLiteral, v};
    }
    if (first == last && toks[first].kind == TokKind::Name) {
        return {ValueKind::NameRef, toks[first].text};
    }
    return {ValueKind::Opaque, raw_text(toks, first, last)};
}

struct PendingClass {
    int indent;
    std::string name;  // nesting-aware name
    std::vector<BaseExpr> bases;
    int first_line;        // includes decorators
    int header_last_line;  // last physical line of the header statement
    int body_last_line;    // grows while body lines arrive
};

struct Parser {
    SourceUnit& unit;
    std::vector<size_t> line_begin;  // byte offset of each physical line (0-based index)

    explicit Parser(SourceUnit& u) : unit(u) {
        line_begin.push_back(0);
        for (size_t i = 0; i < unit.text.size(); ++i) {
            if (unit.text[i] == '\n') line_begin.push_back(i + 1);
        }
    }

    void diag(int line, std::string message) {
        for (const auto& d : unit.diagnostics) {
            if (d.line == line) return;
        }
        unit.diagnostics.push_back({line, std::move(message)});
    }

    // Byte slice of 1-based inclusive line span, without a trailing newline.
    std::string slice(int first_line, int last_line) const {
        size_t begin = line_begin[static_cast<size_t>(first_line - 1)];
        size_t end;
        if (static_cast<size_t>(last_line) < line_begin.size()) {
            end = line_begin[static_cast<size_t>(last_line)];
            if (end > begin && unit.text[end - 1] == '\n') --end;
        } else {
            end = unit.text.size();
        }
        return unit.text.substr(begin, end - begin);
    }

    // ---- imports ----

    void parse_plain_import(const Toks& toks, size_t begin, size_t end_excl, int line) {
        size_t i = begin;
        bool any = false;
        while (i < end_excl) {
            ImportDecl decl;
            decl.line = line;
            while (i < end_excl && (is_op(toks[i], ".") || is_op(toks[i], "..."))) {
                decl.relative_level += is_op(toks[i], "...") ? 3 : 1;
                ++i;
            }
            while (i < end_excl && toks[i].kind == TokKind::Name && !is_kw(toks[i], "as")) {
                decl.path.push_back(toks[i].text);
                ++i;
                if (i < end_excl && is_op(toks[i], ".")) {
                    ++i;
                    continue;
                }
                break;
            }
            if (decl.path.empty() && decl.relative_level == 0) {
                diag(line, "malformed import statement");
                return;
            }
            if (i < end_excl && is_kw(toks[i], "as")) {
                ++i;
                if (i >= end_excl || toks[i].kind != TokKind::Name) {
                    diag(line, "malformed import alias");
                    return;
                }
                decl.alias = toks[i].text;
                ++i;
            }
            unit.imports.push_back(std::move(decl));
            any = true;
            if (i < end_excl && is_op(toks[i], ",")) {
                ++i;
                continue;
            }
            break;
        }
        if (!any) diag(line, "malformed import statement");
    }

    void parse_from_import(const Toks& toks, size_t begin, size_t end_excl, int line) {
        ImportDecl decl;
        decl.line = line;
        decl.is_from = true;
        size_t i = begin;
        while (i < end_excl && (is_op(toks[i], ".") || is_op(toks[i], "..."))) {
            decl.relative_level += is_op(toks[i], "...") ? 3 : 1;
            ++i;
        }
        while (i < end_excl && toks[i].kind == TokKind::Name && !is_kw(toks[i], "import")) {
            decl.path.push_back(toks[i].text);
            ++i;
            if (i < end_excl && is_op(toks[i], ".")) {
                ++i;
                continue;
            }
            break;
        }
        if (i >= end_excl || !is_kw(toks[i], "import")) {
            diag(line, "malformed from-import statement");
            return;
        }
        ++i;
        if (i < end_excl && is_op(toks[i], "*")) {
            decl.names.push_back({"*", ""});
            unit.imports.push_back(std::move(decl));
            return;
        }
        if (i < end_excl && is_op(toks[i], "(")) ++i;  // parenthesized name list
        bool any = false;
        while (i < end_excl) {
            if (is_op(toks[i], ")")) break;
            if (toks[i].kind != TokKind::Name) {
                diag(line, "malformed from-import name list");
                return;
            }
            ImportedName in;
            in.name = toks[i].text;
            ++i;
            if (i < end_excl && is_kw(toks[i], "as")) {
                ++i;
                if (i >= end_excl || toks[i].kind != TokKind::Name) {
                    diag(line, "malformed from-import alias");
                    return;
                }
                in.alias = toks[i].text;
                ++i;
            }
            decl.names.push_back(std::move(in));
            any = true;
            if (i < end_excl && is_op(toks[i], ",")) {
                ++i;
                continue;
            }
            break;
        }
        if (!any) {
            diag(line, "malformed from-import statement");
            return;
        }
        unit.imports.push_back(std::move(decl));
    }

    // ---- class headers ----

    // Returns nullopt when the header is malformed.
    std::optional<std::pair<std::string, std::vector<BaseExpr>>> parse_class_header(
        const Toks& toks, size_t begin, size_t end_excl, int line, size_t& header_colon) {
        size_t i = begin;
        if (i >= end_excl || toks[i].kind != TokKind::Name) {
            diag(line, "malformed class statement");
            return std::nullopt;
        }
        std::string name = toks[i].text;
        ++i;
        std::vector<BaseExpr> bases;
        if (i < end_excl && is_op(toks[i], "(")) {
            size_t open = i;
            int depth = 0;
            size_t close = end_excl;
            for (size_t j = open; j < end_excl; ++j) {
                if (is_op(toks[j], "(") || is_op(toks[j], "[") || is_op(toks[j], "{")) ++depth;
                if (is_op(toks[j], ")") || is_op(toks[j], "]") || is_op(toks[j], "}")) {
                    --depth;
                    if (depth == 0) {
                        close = j;
                        break;
                    }
                }
            }
            if (close == end_excl) {
                diag(line, "malformed class statement");
                return std::nullopt;
            }
            // split arguments at depth-1 commas
            size_t arg_start = open + 1;
            int d = 1;
            for (size_t j = open + 1; j <= close; ++j) {
                bool at_end = (j == close);
                if (is_op(toks[j], "(") || is_op(toks[j], "[") || is_op(toks[j], "{")) ++d;
                if (is_op(toks[j], ")") || is_op(toks[j], "]") || is_op(toks[j], "}")) --d;
                if ((d == 1 && is_op(toks[j], ",")) || at_end) {
                    size_t arg_end = j;  // exclusive
                    if (arg_end > arg_start) {
                        // keyword argument (metaclass=...) is not a base
                        bool is_kwarg = toks[arg_start].kind == TokKind::Name &&
                                        arg_start + 1 < arg_end && is_op(toks[arg_start + 1], "=");
                        if (!is_kwarg) {
                            auto dn = dotted_name(toks, arg_start, arg_end - 1);
                            if (dn) {
                                bases.push_back({*dn, false});
                            } else {
                                bases.push_back({raw_text(toks, arg_start, arg_end - 1), true});
                            }
                        }
                    }
                    arg_start = j + 1;
                }
            }
            i = close + 1;
        }
        if (i >= end_excl || !is_op(toks[i], ":")) {
            diag(line, "malformed class statement");
            return std::nullopt;
        }
        header_colon = i;
        return std::make_pair(std::move(name), std::move(bases));
    }

    // ---- assignments and calls ----

    void scan_assignment(const Toks& toks, size_t begin, size_t end_excl, int line) {
        static const std::unordered_set<std::string> aug_ops = {
            "+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=", "@=",
        };
        int depth = 0;
        size_t first_eq = end_excl, last_eq = end_excl;
        size_t aug = end_excl;
        for (size_t i = begin; i < end_excl; ++i) {
            if (is_op(toks[i], "(") || is_op(toks[i], "[") || is_op(toks[i], "{")) ++depth;
            if (is_op(toks[i], ")") || is_op(toks[i], "]") || is_op(toks[i], "}")) --depth;
            if (depth != 0) continue;
            if (is_op(toks[i], "=")) {
                if (first_eq == end_excl) first_eq = i;
                last_eq = i;
            } else if (toks[i].kind == TokKind::Op && aug_ops.count(toks[i].text) &&
                       aug == end_excl) {
                aug = i;
            }
        }
        if (aug != end_excl && (first_eq == end_excl || aug < first_eq)) {
            // augmented assignment to a simple name erases any string binding
            if (aug == begin + 1 && toks[begin].kind == TokKind::Name) {
                unit.assignments.push_back(
                    {toks[begin].text, {ValueKind::Opaque, ""}, line});
            }
            return;
        }
        if (first_eq == end_excl) return;
        Value rhs = classify_value(toks, last_eq + 1, end_excl - 1);
        // collect simple-name targets from each `=`-separated target segment
        size_t seg_start = begin;
        for (size_t i = begin; i <= last_eq; ++i) {
            if (i == last_eq || (is_op(toks[i], "=") && depth_at(toks, begin, i) == 0)) {
                collect_targets(toks, seg_start, i, rhs, line);
                seg_start = i + 1;
            }
        }
    }

    static int depth_at(const Toks& toks, size_t begin, size_t at) {
        int depth = 0;
        for (size_t i = begin; i < at; ++i) {
            if (is_op(toks[i], "(") || is_op(toks[i], "[") || is_op(toks[i], "{")) ++depth;
            if (is_op(toks[i], ")") || is_op(toks[i], "]") || is_op(toks[i], "}")) --depth;
        }
        return depth;
    }

    void collect_targets(const Toks& toks, size_t begin, size_t end_excl, const Value& rhs,
                         int line) {
        int depth = 0;
        for (size_t i = begin; i < end_excl; ++i) {
            if (is_op(toks[i], "(") || is_op(toks[i], "[") || is_op(toks[i], "{")) ++depth;
            if (is_op(toks[i], ")") || is_op(toks[i], "]") || is_op(toks[i], "}")) --depth;
            if (depth != 0 || toks[i].kind != TokKind::Name) continue;
            bool after_dot = i > begin && is_op(toks[i - 1], ".");
            bool attr_or_subscript =
                i + 1 < end_excl && (is_op(toks[i + 1], ".") || is_op(toks[i + 1], "["));
            if (after_dot || attr_or_subscript) continue;
            bool ok_next = i + 1 >= end_excl || is_op(toks[i + 1], ",") || is_op(toks[i + 1], ":");
            if (ok_next) unit.assignments.push_back({toks[i].text, rhs, line});
            if (i + 1 < end_excl && is_op(toks[i + 1], ":")) {
                // annotated target: skip the annotation
                break;
            }
        }
    }

    void scan_calls(const Toks& toks, size_t begin, size_t end_excl) {
        for (size_t i = begin; i < end_excl; ++i) {
            if (!is_op(toks[i], "(") || i == begin) continue;
            if (toks[i - 1].kind != TokKind::Name) continue;
            // walk the dotted chain backwards
            size_t j = i - 1;
            while (j >= begin + 2 && is_op(toks[j - 1], ".") && toks[j - 2].kind == TokKind::Name) {
                j -= 2;
            }
            CallSite call;
            call.line = toks[i - 1].line;
            call.attr_only = j > begin && is_op(toks[j - 1], ".");
            {
                std::string callee;
                for (size_t k = j; k < i; ++k) callee += toks[k].text;
                call.callee = std::move(callee);
            }
            // skip keyword-definition lookalikes: `def name(...)` / `class name(...)`
            if (j > begin && (is_kw(toks[j - 1], "def") || is_kw(toks[j - 1], "class"))) continue;
            parse_call_args(toks, i, end_excl, call);
            unit.calls.push_back(std::move(call));
        }
    }

    void parse_call_args(const Toks& toks, size_t open, size_t end_excl, CallSite& call) {
        int depth = 0;
        size_t close = end_excl;
        for (size_t j = open; j < end_excl; ++j) {
            if (is_op(toks[j], "(") || is_op(toks[j], "[") || is_op(toks[j], "{")) ++depth;
            if (is_op(toks[j], ")") || is_op(toks[j], "]") || is_op(toks[j], "}")) {
                --depth;
                if (depth == 0) {
                    close = j;
                    break;
                }
            }
        }
        size_t arg_start = open + 1;
        int d = 1;
        for (size_t j = open + 1; j <= close && j < end_excl; ++j) {
            bool at_end = (j == close);
            if (is_op(toks[j], "(") || is_op(toks[j], "[") || is_op(toks[j], "{")) ++d;
            if (is_op(toks[j], ")") || is_op(toks[j], "]") || is_op(toks[j], "}")) --d;
            if ((d == 1 && is_op(toks[j], ",")) || at_end) {
                size_t arg_end = j;  // exclusive
                if (arg_end > arg_start) add_call_arg(toks, arg_start, arg_end, call);
                arg_start = j + 1;
            }
        }
    }

    void add_call_arg(const Toks& toks, size_t begin, size_t end_excl, CallSite& call) {
        if (toks[begin].kind == TokKind::Name && begin + 1 < end_excl &&
            is_op(toks[begin + 1], "=")) {
            std::string key = toks[begin].text;
            for (const auto& [k, v] : call.kwargs) {
                if (k == key) return;  // at most one value per keyword name
            }
            call.kwargs.emplace_back(key, classify_value(toks, begin + 2, end_excl - 1));
            return;
        }
        call.args.push_back(classify_value(toks, begin, end_excl - 1));
    }

    // ---- statement dispatch ----

    struct StmtOutcome {
        bool is_class = false;
        std::string class_name;
        std::vector<BaseExpr> bases;
        size_t header_colon = 0;
        bool is_def = false;
        bool is_decorator = false;
    };

    StmtOutcome handle_simple_stmt(const Toks& toks, size_t begin, size_t end_excl, int line) {
        StmtOutcome out;
        if (begin >= end_excl) return out;
        const Token& head = toks[begin];
        if (is_op(head, "@")) {
            out.is_decorator = true;
            scan_calls(toks, begin, end_excl);
            return out;
        }
        if (is_kw(head, "import")) {
            parse_plain_import(toks, begin + 1, end_excl, line);
            scan_calls(toks, begin, end_excl);
            return out;
        }
        if (is_kw(head, "from")) {
            parse_from_import(toks, begin + 1, end_excl, line);
            scan_calls(toks, begin, end_excl);
            return out;
        }
        if (is_kw(head, "class")) {
            size_t colon = 0;
            auto parsed = parse_class_header(toks, begin + 1, end_excl, line, colon);
            if (parsed) {
                out.is_class = true;
                out.class_name = parsed->first;
                out.bases = parsed->second;
                out.header_colon = colon;
            }
            scan_calls(toks, begin, end_excl);
            return out;
        }
        if (is_kw(head, "def") || (is_kw(head, "async") && begin + 1 < end_excl &&
                                   is_kw(toks[begin + 1], "def"))) {
            out.is_def = true;
            scan_calls(toks, begin, end_excl);
            return out;
        }
        scan_assignment(toks, begin, end_excl, line);
        scan_calls(toks, begin, end_excl);
        return out;
    }
};

}  // namespace

SourceUnit parse_source(std::string_view bytes, std::string path) {
    SourceUnit unit;
    unit.path = std::move(path);
    unit.module_path = module_path_of(unit.path);

    // UTF-8 validation with lossy replacement.
    {
        std::string decoded;
        decoded.reserve(bytes.size());
        bool replaced = false;
        int line = 1;
        int first_bad_line = 0;
        size_t i = 0;
        while (i < bytes.size()) {
            unsigned char c = static_cast<unsigned char>(bytes[i]);
            if (c == '\n') ++line;
            size_t len = 0;
            if (c < 0x80) {
                len = 1;
            } else if ((c >> 5) == 0x6) {
                len = 2;
            } else if ((c >> 4) == 0xe) {
                len = 3;
            } else if ((c >> 3) == 0x1e) {
                len = 4;
            }
            bool ok = len > 0 && i + len <= bytes.size();
            for (size_t k = 1; ok && k < len; ++k) {
                if ((static_cast<unsigned char>(bytes[i + k]) >> 6) != 0x2) ok = false;
            }
            if (ok) {
                decoded.append(bytes.substr(i, len));
                i += len;
            } else {
                decoded += "\xEF\xBF\xBD";
                if (!replaced) first_bad_line = line;
                replaced = true;
                ++i;
            }
        }
        unit.text = std::move(decoded);
        if (replaced) {
            unit.diagnostics.push_back({first_bad_line, "invalid UTF-8 replaced"});
        }
    }

    TokenizeResult tok = tokenize(unit.text);
    for (auto& d : tok.diagnostics) unit.diagnostics.push_back(d);

    Parser parser(unit);

    std::vector<PendingClass> class_stack;
    std::optional<int> pending_decorator_line;

    auto finalize_class = [&](PendingClass& pc) {
        ClassDef def;
        def.name = pc.name;
        def.qualified =
            unit.module_path.empty() ? pc.name : unit.module_path + "." + pc.name;
        def.bases = pc.bases;
        def.first_line = pc.first_line;
        def.last_line = std::max(pc.header_last_line, pc.body_last_line);
        def.source = parser.slice(def.first_line, def.last_line);
        unit.classes.push_back(std::move(def));
    };

    auto pop_below = [&](int indent) {
        while (!class_stack.empty() && indent <= class_stack.back().indent) {
            finalize_class(class_stack.back());
            class_stack.pop_back();
        }
    };

    for (const auto& ll : tok.lines) {
        pop_below(ll.indent);
        for (auto& pc : class_stack) {
            if (ll.indent > pc.indent) pc.body_last_line = std::max(pc.body_last_line, ll.last_line);
        }

        // split the logical line at top-level semicolons
        const Toks& toks = ll.toks;
        std::vector<std::pair<size_t, size_t>> stmts;
        {
            int depth = 0;
            size_t start = 0;
            for (size_t i = 0; i < toks.size(); ++i) {
                if (is_op(toks[i], "(") || is_op(toks[i], "[") || is_op(toks[i], "{")) ++depth;
                if (is_op(toks[i], ")") || is_op(toks[i], "]") || is_op(toks[i], "}")) --depth;
                if (depth == 0 && is_op(toks[i], ";")) {
                    if (i > start) stmts.emplace_back(start, i);
                    start = i + 1;
                }
            }
            if (toks.size() > start) stmts.emplace_back(start, toks.size());
        }

        bool decorator_seen = false;
        for (auto [begin, end] : stmts) {
            auto out = parser.handle_simple_stmt(toks, begin, end, toks[begin].line);
            if (out.is_decorator) {
                decorator_seen = true;
                if (!pending_decorator_line) pending_decorator_line = ll.first_line;
                continue;
            }
            if (out.is_class) {
                PendingClass pc;
                pc.indent = ll.indent;
                pc.name = out.class_name;
                if (!class_stack.empty()) {
                    pc.name = class_stack.back().name + "." + out.class_name;
                }
                pc.bases = out.bases;
                pc.first_line = pending_decorator_line.value_or(ll.first_line);
                pc.header_last_line = ll.last_line;
                pc.body_last_line = 0;
                pending_decorator_line.reset();
                bool has_inline_body = out.header_colon + 1 < end;
                if (has_inline_body) {
                    // one-liner class: body on the header line, nothing to track
                    finalize_class(pc);
                } else {
                    class_stack.push_back(std::move(pc));
                }
                continue;
            }
            if (out.is_def) {
                pending_decorator_line.reset();
                continue;
            }
            if (!decorator_seen) pending_decorator_line.reset();
        }
    }
    pop_below(0);

    std::stable_sort(unit.classes.begin(), unit.classes.end(),
                     [](const ClassDef& a, const ClassDef& b) { return a.first_line < b.first_line; });
    return unit;
}

SymbolTable build_symbol_table(const SourceUnit& unit) {
    SymbolTable table;

    // Directory of the module, as dotted segments, for resolving relative imports.
    std::vector<std::string> dir_parts;
    if (!unit.module_path.empty()) {
        dir_parts = util::split(unit.module_path, '.');
        // an __init__.py's module path already names its own package
        if (!unit.path.ends_with("__init__.py")) dir_parts.pop_back();
    }

    auto resolve_prefix = [&](const ImportDecl& decl) -> std::vector<std::string> {
        std::vector<std::string> parts;
        if (decl.relative_level > 0) {
            parts = dir_parts;
            for (int i = 1; i < decl.relative_level && !parts.empty(); ++i) parts.pop_back();
        }
        for (const auto& seg : decl.path) parts.push_back(seg);
        return parts;
    };

    for (const auto& decl : unit.imports) {
        auto prefix = resolve_prefix(decl);
        if (!decl.is_from) {
            std::string binding = decl.binding();
            if (!binding.empty()) table.aliases[binding] = util::join(prefix, ".");
            continue;
        }
        for (const auto& name : decl.names) {
            if (name.name == "*") continue;
            auto full = prefix;
            full.push_back(name.name);
            const std::string& key = name.alias.empty() ? name.name : name.alias;
            table.aliases[key] = util::join(full, ".");
        }
    }

    for (const auto& asg : unit.assignments) {
        if (asg.value.kind == ValueKind::StringLiteral) {
            table.strings[asg.target] = asg.value.text;
        } else {
            table.strings.erase(asg.target);
        }
    }

    for (const auto& cls : unit.classes) {
        std::vector<std::string> bases;
        for (const auto& b : cls.bases) {
            if (!b.opaque) bases.push_back(b.text);
        }
        table.class_bases[cls.qualified] = std::move(bases);
    }
    return table;
}

}  // namespace nnbom::pyfront

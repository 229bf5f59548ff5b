#include "nnbom/clonecore.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "nnbom/pyfront.hpp"
#include "nnbom/util.hpp"

namespace nnbom::clonecore {

namespace {

using pyfront::TokKind;
using pyfront::Token;

bool is_op(const Token& t, std::string_view s) { return t.kind == TokKind::Op && t.text == s; }
bool is_name(const Token& t, std::string_view s) { return t.kind == TokKind::Name && t.text == s; }

int bracket_delta(const Token& t) {
    if (t.kind != TokKind::Op) return 0;
    if (t.text == "(" || t.text == "[" || t.text == "{") return 1;
    if (t.text == ")" || t.text == "]" || t.text == "}") return -1;
    return 0;
}

// Collects the names bound locally anywhere in the class body: parameters of
// def/lambda (except self), simple assignment targets, and for-loop or
// comprehension variables.
std::unordered_set<std::string> collect_locals(const std::vector<pyfront::LogicalLine>& lines) {
    std::unordered_set<std::string> locals;

    auto bind = [&](const std::string& name) {
        if (name != "self") locals.insert(name);
    };

    for (const auto& ll : lines) {
        const auto& toks = ll.toks;
        int depth = 0;
        for (size_t i = 0; i < toks.size(); ++i) {
            depth += bracket_delta(toks[i]);
            bool after_dot = i > 0 && is_op(toks[i - 1], ".");
            if (after_dot) continue;

            if (is_name(toks[i], "def") && i + 2 < toks.size() &&
                toks[i + 1].kind == TokKind::Name && is_op(toks[i + 2], "(")) {
                // parameter list: names at paren depth 1, skipping annotations
                // and default values
                int d = 0;
                bool skipping = false;  // inside an annotation or default
                for (size_t j = i + 2; j < toks.size(); ++j) {
                    int delta = bracket_delta(toks[j]);
                    d += delta;
                    if (d == 0 && delta < 0) break;  // closed the param list
                    if (d == 1) {
                        if (is_op(toks[j], ",")) {
                            skipping = false;
                            continue;
                        }
                        if (is_op(toks[j], ":") || is_op(toks[j], "=")) {
                            skipping = true;
                            continue;
                        }
                        if (!skipping && toks[j].kind == TokKind::Name) bind(toks[j].text);
                    }
                }
                continue;
            }
            if (is_name(toks[i], "lambda")) {
                int d = depth;
                bool skipping = false;
                for (size_t j = i + 1; j < toks.size(); ++j) {
                    int delta = bracket_delta(toks[j]);
                    if (d + delta < depth) break;  // left the enclosing bracket
                    d += delta;
                    if (d == depth) {
                        if (is_op(toks[j], ":")) break;
                        if (is_op(toks[j], ",")) {
                            skipping = false;
                            continue;
                        }
                        if (is_op(toks[j], "=")) {
                            skipping = true;
                            continue;
                        }
                        if (!skipping && toks[j].kind == TokKind::Name) bind(toks[j].text);
                    }
                }
                continue;
            }
            if (is_name(toks[i], "for")) {
                // bind all non-attribute names until the matching `in`
                int d = depth;
                for (size_t j = i + 1; j < toks.size(); ++j) {
                    d += bracket_delta(toks[j]);
                    if (d < depth) break;
                    if (d == depth && is_name(toks[j], "in")) break;
                    if (toks[j].kind == TokKind::Name && !(j > 0 && is_op(toks[j - 1], "."))) {
                        bind(toks[j].text);
                    }
                }
                continue;
            }
        }

        // simple statement-level assignment targets (split at `;`)
        int d2 = 0;
        size_t stmt_start = 0;
        std::vector<std::pair<size_t, size_t>> stmts;
        for (size_t i = 0; i < toks.size(); ++i) {
            d2 += bracket_delta(toks[i]);
            if (d2 == 0 && is_op(toks[i], ";")) {
                if (i > stmt_start) stmts.emplace_back(stmt_start, i);
                stmt_start = i + 1;
            }
        }
        if (toks.size() > stmt_start) stmts.emplace_back(stmt_start, toks.size());

        static const std::unordered_set<std::string> aug_ops = {
            "+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=", "@=",
        };
        for (auto [begin, end] : stmts) {
            if (begin < end && (is_name(toks[begin], "def") || is_name(toks[begin], "class") ||
                                is_name(toks[begin], "import") || is_name(toks[begin], "from"))) {
                continue;
            }
            int depth3 = 0;
            size_t last_eq = end;
            for (size_t i = begin; i < end; ++i) {
                depth3 += bracket_delta(toks[i]);
                if (depth3 == 0 && is_op(toks[i], "=")) last_eq = i;
                if (depth3 == 0 && toks[i].kind == TokKind::Op && aug_ops.count(toks[i].text) &&
                    i == begin + 1 && toks[begin].kind == TokKind::Name) {
                    bind(toks[begin].text);
                }
            }
            if (last_eq == end) continue;
            int depth4 = 0;
            for (size_t i = begin; i < last_eq; ++i) {
                depth4 += bracket_delta(toks[i]);
                if (toks[i].kind != TokKind::Name) continue;
                bool after_dot = i > begin && is_op(toks[i - 1], ".");
                bool attr_or_subscript =
                    i + 1 < last_eq && (is_op(toks[i + 1], ".") || is_op(toks[i + 1], "["));
                if (!after_dot && !attr_or_subscript) bind(toks[i].text);
            }
        }
    }
    return locals;
}

}  // namespace

std::optional<NormalizedForm> normalize(std::string_view class_source) {
    pyfront::TokenizeResult tok = pyfront::tokenize(class_source);
    if (tok.lines.empty()) return std::nullopt;

    // the class's own name: the first logical line that IS a class statement
    // (the slice may start with decorator lines)
    std::string class_name;
    for (const auto& ll : tok.lines) {
        if (ll.toks.empty()) continue;
        if (ll.toks[0].kind == TokKind::Op && ll.toks[0].text == "@") continue;
        if (is_name(ll.toks[0], "class") && ll.toks.size() > 1 &&
            ll.toks[1].kind == TokKind::Name) {
            class_name = ll.toks[1].text;
        }
        break;
    }
    if (class_name.empty()) return std::nullopt;

    auto locals = collect_locals(tok.lines);
    locals.erase(class_name);

    std::unordered_map<std::string, std::string> local_map;  // name -> Vk
    std::unordered_map<std::string, std::string> attr_map;   // name -> Ak

    NormalizedForm form;
    for (const auto& ll : tok.lines) {
        const auto& toks = ll.toks;
        int depth = 0;
        for (size_t i = 0; i < toks.size(); ++i) {
            const Token& t = toks[i];
            int delta = bracket_delta(t);
            switch (t.kind) {
                case TokKind::Number:
                    form.tokens.emplace_back("NUM");
                    break;
                case TokKind::String:
                    form.tokens.emplace_back("STR");
                    break;
                case TokKind::Op:
                    form.tokens.push_back(t.text);
                    break;
                case TokKind::Name: {
                    bool after_dot = i > 0 && is_op(toks[i - 1], ".");
                    bool on_self = after_dot && i >= 2 && is_name(toks[i - 2], "self") &&
                                   !(i >= 3 && is_op(toks[i - 3], "."));
                    if (on_self) {
                        auto it = attr_map.find(t.text);
                        if (it == attr_map.end()) {
                            it = attr_map.emplace(t.text, "A" + std::to_string(attr_map.size() + 1))
                                     .first;
                        }
                        form.tokens.push_back(it->second);
                        break;
                    }
                    if (after_dot) {
                        form.tokens.push_back(t.text);  // external attribute or method
                        break;
                    }
                    // keyword argument names inside calls are API surface
                    bool kwarg_name = depth > 0 && i + 1 < toks.size() && is_op(toks[i + 1], "=") &&
                                      i > 0 && (is_op(toks[i - 1], "(") || is_op(toks[i - 1], ","));
                    if (kwarg_name) {
                        form.tokens.push_back(t.text);
                        break;
                    }
                    if (t.text == class_name) {
                        form.tokens.emplace_back("CLASS");
                        break;
                    }
                    if (locals.count(t.text)) {
                        auto it = local_map.find(t.text);
                        if (it == local_map.end()) {
                            it = local_map
                                     .emplace(t.text, "V" + std::to_string(local_map.size() + 1))
                                     .first;
                        }
                        form.tokens.push_back(it->second);
                        break;
                    }
                    form.tokens.push_back(t.text);
                    break;
                }
            }
            depth += delta;
        }
    }
    form.canonical = util::join(form.tokens, " ");
    return form;
}

std::string module_hash(const NormalizedForm& form) { return util::sha256_hex(form.canonical); }

std::vector<CloneFamily> group_families(const std::vector<FamilyMemberInput>& records) {
    std::map<std::string, CloneFamily> by_hash;
    std::map<std::string, std::pair<int64_t, int>> best_rep;  // hash -> (time, index)

    for (const auto& rec : records) {
        auto& fam = by_hash[rec.hash];
        if (fam.members.empty()) {
            fam.hash = rec.hash;
            fam.first_year = rec.release_year;
            fam.last_year = rec.release_year;
        }
        fam.members.push_back(rec.module_index);
        fam.repositories.insert(rec.repo);
        fam.first_year = std::min(fam.first_year, rec.release_year);
        fam.last_year = std::max(fam.last_year, rec.release_year);
        for (const auto& d : rec.domains) ++fam.domains[d];
        ++fam.frequency;

        auto key = std::make_pair(rec.release_unix, rec.module_index);
        auto it = best_rep.find(rec.hash);
        if (it == best_rep.end() || key < it->second) {
            best_rep[rec.hash] = key;
            fam.representative = rec.class_name;
        }
    }

    std::vector<CloneFamily> out;
    out.reserve(by_hash.size());
    for (auto& [hash, fam] : by_hash) {
        std::sort(fam.members.begin(), fam.members.end());
        out.push_back(std::move(fam));
    }
    return out;
}

}  // namespace nnbom::clonecore

#include "nnbom/extractors.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "nnbom/util.hpp"

namespace nnbom::extractors {

namespace {

const char* kBuiltinCatalog =
    "# hub\tcallee pattern\targ selector\n"
    "pytorch-hub\ttorch.hub.load\tpos:0\n"
    "tensorflow-hub\ttensorflow_hub.load\tpos:0\n"
    "tensorflow-hub\ttensorflow_hub.KerasLayer\tpos:0\n"
    "vllm\tvllm.LLM\tkw:model\n"
    "deepspeed-mii\tmii.pipeline\tkw:model_name_or_path\n"
    "ctranslate2\tctranslate2.Translator\tpos:0\n"
    "ctranslate2\tctranslate2.Generator\tpos:0\n"
    "huggingface\t.from_pretrained\tpos:0\n";

bool is_requirements_file(const std::string& path) {
    auto slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    std::string dir = slash == std::string::npos ? "" : path.substr(0, slash);
    if (base.starts_with("requirements") && base.ends_with(".txt")) return true;
    return dir == "requirements" && base.ends_with(".txt");
}

}  // namespace

std::string normalize_package_name(std::string name) {
    name = util::to_lower(std::move(name));
    std::replace(name.begin(), name.end(), '_', '-');
    return name;
}

const std::set<std::string>& PtmPatternCatalog::known_hubs() {
    static const std::set<std::string> hubs = {
        "huggingface", "tensorflow-hub", "pytorch-hub",   "modelhub",   "nvidia-ngc",
        "matlab-hub",  "vllm",           "deepspeed-mii", "ctranslate2",
    };
    return hubs;
}

PtmPatternCatalog PtmPatternCatalog::builtin() {
    std::vector<std::string> errors;
    return parse(kBuiltinCatalog, errors);
}

PtmPatternCatalog PtmPatternCatalog::parse(std::string_view text, std::vector<std::string>& errors) {
    PtmPatternCatalog catalog;
    int lineno = 0;
    for (const auto& raw : util::split(text, '\n')) {
        ++lineno;
        std::string_view line = util::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto fields = util::split(line, '\t');
        if (fields.size() != 3) {
            errors.push_back("line " + std::to_string(lineno) + ": expected 3 tab-separated fields");
            continue;
        }
        CatalogEntry entry;
        entry.hub = std::string(util::trim(fields[0]));
        entry.pattern = std::string(util::trim(fields[1]));
        std::string selector(util::trim(fields[2]));
        if (!known_hubs().count(entry.hub)) {
            errors.push_back("line " + std::to_string(lineno) + ": unknown hub '" + entry.hub + "'");
            continue;
        }
        if (entry.pattern.empty()) {
            errors.push_back("line " + std::to_string(lineno) + ": empty pattern");
            continue;
        }
        if (selector.starts_with("pos:")) {
            entry.keyword = false;
            try {
                entry.position = std::stoi(selector.substr(4));
            } catch (...) {
                entry.position = -1;
            }
            if (entry.position < 0) {
                errors.push_back("line " + std::to_string(lineno) + ": bad positional selector");
                continue;
            }
        } else if (selector.starts_with("kw:") && selector.size() > 3) {
            entry.keyword = true;
            entry.kw_name = selector.substr(3);
        } else {
            errors.push_back("line " + std::to_string(lineno) + ": bad selector '" + selector + "'");
            continue;
        }
        for (const auto& existing : catalog.entries) {
            if (existing.pattern == entry.pattern) {
                errors.push_back("line " + std::to_string(lineno) + ": duplicate pattern '" +
                                 entry.pattern + "'");
            }
        }
        catalog.entries.push_back(std::move(entry));
    }
    return catalog;
}

std::string PtmPatternCatalog::serialize() const {
    std::string out = "# hub\tcallee pattern\targ selector\n";
    for (const auto& e : entries) {
        out += e.hub;
        out += '\t';
        out += e.pattern;
        out += '\t';
        out += e.keyword ? "kw:" + e.kw_name : "pos:" + std::to_string(e.position);
        out += '\n';
    }
    return out;
}

FileTree FileTree::from_files(std::map<std::string, std::string> files) {
    FileTree tree;
    tree.files = std::move(files);
    for (const auto& [path, _] : tree.files) {
        auto slash = path.find('/');
        if (slash != std::string::npos) {
            tree.top_level.insert(path.substr(0, slash));
        } else if (path.ends_with(".py")) {
            tree.top_level.insert(path.substr(0, path.size() - 3));
        }
    }
    return tree;
}

namespace {

// Parses one requirements-style line; returns false when the line declares
// nothing usable (options, URLs, garbage).
bool parse_requirement_line(std::string_view line, TplDependency& out) {
    std::string_view s = util::trim(line);
    if (s.empty() || s.front() == '#') return false;
    if (s.front() == '-') return false;  // pip options: -r, -e, --hash, ...
    if (s.find("://") != std::string_view::npos) return false;
    if (s.front() == '.' || s.front() == '/') return false;

    // strip trailing comment and environment marker
    if (auto pos = s.find(" #"); pos != std::string_view::npos) s = s.substr(0, pos);
    if (auto pos = s.find(';'); pos != std::string_view::npos) s = s.substr(0, pos);
    s = util::trim(s);

    size_t i = 0;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '-' ||
                            s[i] == '_' || s[i] == '.')) {
        ++i;
    }
    if (i == 0 || !std::isalnum(static_cast<unsigned char>(s[0]))) return false;
    out.name = normalize_package_name(std::string(s.substr(0, i)));
    out.source = TplSource::Config;
    out.version.reset();

    std::string_view rest = s.substr(i);
    if (!rest.empty() && rest.front() == '[') {  // extras
        auto close = rest.find(']');
        if (close == std::string_view::npos) return true;
        rest = rest.substr(close + 1);
    }
    rest = util::trim(rest);
    // a version is recorded only for an exact `==` pin
    for (const auto& spec : util::split(rest, ',')) {
        std::string_view sp = util::trim(spec);
        if (sp.starts_with("==") && !sp.starts_with("===")) {
            std::string_view ver = util::trim(sp.substr(2));
            if (!ver.empty()) out.version = std::string(ver);
        }
    }
    return true;
}

void scan_setup_py(const std::string& text, std::vector<TplDependency>& out,
                   std::vector<pyfront::Diagnostic>& diagnostics) {
    auto tok = pyfront::tokenize(text);
    for (const auto& ll : tok.lines) {
        const auto& toks = ll.toks;
        for (size_t i = 0; i + 2 < toks.size(); ++i) {
            if (toks[i].kind != pyfront::TokKind::Name || toks[i].text != "install_requires") {
                continue;
            }
            if (!(toks[i + 1].kind == pyfront::TokKind::Op && toks[i + 1].text == "=")) continue;
            if (!(toks[i + 2].kind == pyfront::TokKind::Op && toks[i + 2].text == "[")) continue;
            int depth = 1;
            for (size_t j = i + 3; j < toks.size() && depth > 0; ++j) {
                const auto& t = toks[j];
                if (t.kind == pyfront::TokKind::Op) {
                    if (t.text == "[" || t.text == "(" || t.text == "{") ++depth;
                    if (t.text == "]" || t.text == ")" || t.text == "}") --depth;
                    continue;
                }
                if (t.kind == pyfront::TokKind::String && depth == 1) {
                    if (!t.is_plain_string) {
                        diagnostics.push_back({t.line, "non-literal install_requires entry skipped"});
                        continue;
                    }
                    TplDependency dep;
                    if (parse_requirement_line(t.string_value, dep)) {
                        out.push_back(std::move(dep));
                    } else {
                        diagnostics.push_back({t.line, "unparseable install_requires entry"});
                    }
                }
            }
        }
    }
}

}  // namespace

ConfigTplResult extract_config_tpls(const FileTree& tree) {
    ConfigTplResult result;
    std::vector<TplDependency> raw;

    for (const auto& [path, content] : tree.files) {
        if (is_requirements_file(path)) {
            int lineno = 0;
            for (const auto& line : util::split(content, '\n')) {
                ++lineno;
                std::string_view t = util::trim(line);
                if (t.empty() || t.front() == '#') continue;
                TplDependency dep;
                if (parse_requirement_line(line, dep)) {
                    raw.push_back(std::move(dep));
                } else {
                    result.diagnostics.push_back(
                        {lineno, path + ": unparseable requirement line skipped"});
                }
            }
        } else if (path == "setup.py") {
            scan_setup_py(content, raw, result.diagnostics);
        }
    }

    // unique by name; an entry with a version beats one without
    std::map<std::string, TplDependency> by_name;
    for (auto& dep : raw) {
        auto it = by_name.find(dep.name);
        if (it == by_name.end()) {
            by_name.emplace(dep.name, std::move(dep));
        } else if (!it->second.version && dep.version) {
            it->second.version = dep.version;
        }
    }
    for (auto& [_, dep] : by_name) result.tpls.push_back(std::move(dep));
    return result;
}

ImportClass classify_import(const pyfront::ImportDecl& decl, const std::set<std::string>& layout) {
    if (decl.relative_level > 0) return ImportClass::Local;
    if (decl.path.empty()) return ImportClass::Local;
    return layout.count(decl.path.front()) ? ImportClass::Local : ImportClass::External;
}

std::vector<TplDependency> merge_tpls(const std::vector<TplDependency>& config,
                                      const std::vector<std::string>& imported) {
    std::map<std::string, TplDependency> by_name;
    for (const auto& dep : config) {
        auto [it, inserted] = by_name.emplace(dep.name, dep);
        if (!inserted && !it->second.version && dep.version) it->second.version = dep.version;
    }
    for (const auto& name : imported) {
        auto it = by_name.find(name);
        if (it != by_name.end()) {
            it->second.source = TplSource::Both;
        } else {
            by_name.emplace(name, TplDependency{name, std::nullopt, TplSource::Import});
        }
    }
    std::vector<TplDependency> out;
    out.reserve(by_name.size());
    for (auto& [_, dep] : by_name) out.push_back(std::move(dep));
    return out;  // std::map iteration is already name-sorted
}

namespace {

// Expands the leading segment of a dotted name through the alias table.
std::string expand_alias(const std::string& dotted,
                         const std::map<std::string, std::string>& aliases) {
    auto dot = dotted.find('.');
    std::string head = dot == std::string::npos ? dotted : dotted.substr(0, dot);
    auto it = aliases.find(head);
    if (it == aliases.end()) return dotted;
    return dot == std::string::npos ? it->second : it->second + dotted.substr(dot);
}

bool pattern_matches(const std::string& pattern, const std::string& callee, bool attr_only) {
    if (pattern.starts_with(".")) {
        if (callee.ends_with(pattern)) return true;
        // a bare attribute chain like `x().from_pretrained` has no dotted root
        return attr_only && ("." + callee).ends_with(pattern);
    }
    return callee == pattern || callee.ends_with("." + pattern);
}

}  // namespace

std::vector<PtmInvocation> detect_ptms(const std::vector<pyfront::SourceUnit>& units,
                                       const std::map<std::string, pyfront::SymbolTable>& tables,
                                       const PtmPatternCatalog& catalog) {
    std::vector<PtmInvocation> out;
    for (const auto& unit : units) {
        static const pyfront::SymbolTable kEmpty;
        auto table_it = tables.find(unit.path);
        const pyfront::SymbolTable& table = table_it == tables.end() ? kEmpty : table_it->second;

        for (const auto& call : unit.calls) {
            std::string expanded = expand_alias(call.callee, table.aliases);
            const CatalogEntry* matched = nullptr;
            for (const auto& entry : catalog.entries) {
                if (pattern_matches(entry.pattern, expanded, call.attr_only)) {
                    matched = &entry;
                    break;
                }
            }
            if (!matched) continue;

            PtmInvocation inv;
            inv.hub = matched->hub;
            inv.file = unit.path;
            inv.line = call.line;
            inv.resolution = PtmResolution::Unresolved;

            const pyfront::Value* arg = nullptr;
            if (matched->keyword) {
                for (const auto& [k, v] : call.kwargs) {
                    if (k == matched->kw_name) {
                        arg = &v;
                        break;
                    }
                }
            } else if (static_cast<size_t>(matched->position) < call.args.size()) {
                arg = &call.args[static_cast<size_t>(matched->position)];
            }
            if (arg) {
                if (arg->kind == pyfront::ValueKind::StringLiteral) {
                    inv.model_path = arg->text;
                    inv.resolution = PtmResolution::Literal;
                } else if (arg->kind == pyfront::ValueKind::NameRef) {
                    auto bound = table.strings.find(arg->text);
                    if (bound != table.strings.end()) {
                        inv.model_path = bound->second;
                        inv.resolution = PtmResolution::SymbolTable;
                    }
                }
            }
            out.push_back(std::move(inv));
        }
    }
    return out;
}

std::vector<NNModuleDef> extract_nn_modules(const std::vector<pyfront::SourceUnit>& units,
                                            const std::string& root) {
    struct ClassRef {
        const pyfront::SourceUnit* unit;
        const pyfront::ClassDef* def;
        const pyfront::SymbolTable* table;
    };

    std::vector<pyfront::SymbolTable> tables;
    tables.reserve(units.size());
    for (const auto& unit : units) tables.push_back(pyfront::build_symbol_table(unit));

    std::vector<ClassRef> classes;
    std::unordered_map<std::string, size_t> by_qualified;  // first definition wins
    for (size_t u = 0; u < units.size(); ++u) {
        for (const auto& def : units[u].classes) {
            classes.push_back({&units[u], &def, &tables[u]});
            by_qualified.emplace(def.qualified, classes.size() - 1);
        }
    }

    // Candidate qualified names a base expression may refer to.
    auto candidates = [&](const ClassRef& ref, const std::string& base) {
        std::vector<std::string> names;
        names.push_back(base);
        std::string expanded = expand_alias(base, ref.table->aliases);
        if (expanded != base) names.push_back(expanded);
        if (!ref.unit->module_path.empty()) {
            names.push_back(ref.unit->module_path + "." + base);
        }
        return names;
    };

    // Fixpoint: a class joins the set when some base resolves to the root or
    // to a class already in the set.
    std::unordered_set<std::string> known = {root};
    std::vector<bool> in_set(classes.size(), false);
    // resolved_via[i] = (base qualified name, class index or -1 for root)
    std::vector<std::pair<std::string, long>> resolved_via(classes.size(), {"", -2});

    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i < classes.size(); ++i) {
            if (in_set[i]) continue;
            for (const auto& base : classes[i].def->bases) {
                if (base.opaque) continue;
                bool found = false;
                for (const auto& cand : candidates(classes[i], base.text)) {
                    if (cand == root) {
                        resolved_via[i] = {root, -1};
                        found = true;
                        break;
                    }
                    if (known.count(cand)) {
                        auto it = by_qualified.find(cand);
                        resolved_via[i] = {cand, it == by_qualified.end()
                                                     ? -1
                                                     : static_cast<long>(it->second)};
                        found = true;
                        break;
                    }
                }
                if (found) break;
            }
            if (resolved_via[i].second != -2) {
                in_set[i] = true;
                known.insert(classes[i].def->qualified);
                changed = true;
            }
        }
    }

    // Derivation chains follow the resolving base of each step down to root.
    std::vector<NNModuleDef> out;
    for (size_t i = 0; i < classes.size(); ++i) {
        if (!in_set[i]) continue;
        NNModuleDef def;
        def.qualified_name = classes[i].def->qualified;
        def.source_text = classes[i].def->source;
        def.loc = classes[i].def->loc();
        def.file = classes[i].unit->path;

        std::unordered_set<size_t> visited = {i};
        long at = static_cast<long>(i);
        while (at >= 0) {
            const auto& [base_name, next] = resolved_via[static_cast<size_t>(at)];
            def.derivation_chain.push_back(base_name);
            if (base_name == root || next < 0) break;
            if (visited.count(static_cast<size_t>(next))) break;  // defensive, cannot cycle
            visited.insert(static_cast<size_t>(next));
            at = next;
        }
        out.push_back(std::move(def));
    }
    return out;
}

namespace {

VersionExtraction assemble(std::map<std::string, pyfront::SourceUnit> units, const FileTree& tree,
                           const PtmPatternCatalog& catalog, const std::string& root) {
    VersionExtraction result;
    result.units = std::move(units);

    std::vector<pyfront::SourceUnit> unit_list;
    unit_list.reserve(result.units.size());
    for (const auto& [_, unit] : result.units) unit_list.push_back(unit);

    std::map<std::string, pyfront::SymbolTable> tables;
    for (const auto& unit : unit_list) tables[unit.path] = pyfront::build_symbol_table(unit);

    // TPLs: config files take priority; imports contribute external roots
    auto config = extract_config_tpls(tree);
    result.diagnostics = std::move(config.diagnostics);
    std::set<std::string> import_roots;
    for (const auto& unit : unit_list) {
        for (const auto& decl : unit.imports) {
            if (classify_import(decl, tree.top_level) == ImportClass::External) {
                import_roots.insert(normalize_package_name(decl.path.front()));
            }
        }
        for (const auto& d : unit.diagnostics) {
            result.diagnostics.push_back({d.line, unit.path + ": " + d.message});
        }
    }
    result.tpls = merge_tpls(config.tpls,
                             std::vector<std::string>(import_roots.begin(), import_roots.end()));

    result.ptms = detect_ptms(unit_list, tables, catalog);
    result.modules = extract_nn_modules(unit_list, root);
    return result;
}

}  // namespace

VersionExtraction extract_full(const FileTree& tree, const PtmPatternCatalog& catalog,
                               const std::string& root) {
    std::map<std::string, pyfront::SourceUnit> units;
    for (const auto& [path, content] : tree.files) {
        if (path.ends_with(".py")) units[path] = pyfront::parse_source(content, path);
    }
    return assemble(std::move(units), tree, catalog, root);
}

VersionExtraction extract_incremental(const VersionExtraction& prev, const FileTree& tree,
                                      const std::set<std::string>& changed_files,
                                      const PtmPatternCatalog& catalog, const std::string& root) {
    std::map<std::string, pyfront::SourceUnit> units;
    for (const auto& [path, unit] : prev.units) {
        if (!changed_files.count(path) && tree.files.count(path)) units.emplace(path, unit);
    }
    for (const auto& path : changed_files) {
        auto it = tree.files.find(path);
        if (it != tree.files.end() && path.ends_with(".py")) {
            units[path] = pyfront::parse_source(it->second, path);
        }
    }
    // files present in the tree but absent from both prev and the change set
    // mean the change set was stale; parse them so equivalence still holds
    for (const auto& [path, content] : tree.files) {
        if (path.ends_with(".py") && !units.count(path)) {
            units[path] = pyfront::parse_source(content, path);
        }
    }
    return assemble(std::move(units), tree, catalog, root);
}

}  // namespace nnbom::extractors

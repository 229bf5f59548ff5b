#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nnbom/pyfront.hpp"

// Extraction of the three NNBOM component classes from one repository
// version: third-party libraries, pre-trained model invocations, and
// neural-network module definitions.
namespace nnbom::extractors {

enum class TplSource { Config, Import, Both };

struct TplDependency {
    std::string name;  // normalized: lowercase, underscores -> hyphens
    std::optional<std::string> version;
    TplSource source = TplSource::Import;
};

enum class PtmResolution { Literal, SymbolTable, Unresolved };

struct PtmInvocation {
    std::string hub;
    std::optional<std::string> model_path;
    std::string file;
    int line = 0;
    PtmResolution resolution = PtmResolution::Unresolved;
};

struct NNModuleDef {
    std::string qualified_name;
    std::string source_text;
    int loc = 0;  // blank lines and comments included
    std::string file;
    std::vector<std::string> derivation_chain;  // base qualified names, ending at the root
};

struct CatalogEntry {
    std::string hub;
    std::string pattern;   // leading '.' means suffix match on the callee
    bool keyword = false;  // arg selector: kw:<name> vs pos:<k>
    int position = 0;
    std::string kw_name;
};

struct PtmPatternCatalog {
    std::vector<CatalogEntry> entries;  // first match wins

    static const std::set<std::string>& known_hubs();
    static PtmPatternCatalog builtin();
    // Parses the line-delimited `hub<TAB>pattern<TAB>selector` format.
    static PtmPatternCatalog parse(std::string_view text, std::vector<std::string>& errors);
    std::string serialize() const;
};

// One repository version's file tree. Only `.py` and config file contents are
// needed; `top_level` carries every top-level entry name (directories plus
// `.py` stems) for import classification.
struct FileTree {
    std::map<std::string, std::string> files;
    std::set<std::string> top_level;

    static FileTree from_files(std::map<std::string, std::string> files);
    void add_top_level_entry(const std::string& name) { top_level.insert(name); }
};

std::string normalize_package_name(std::string name);

struct ConfigTplResult {
    std::vector<TplDependency> tpls;
    std::vector<pyfront::Diagnostic> diagnostics;
};

ConfigTplResult extract_config_tpls(const FileTree& tree);

enum class ImportClass { Local, External };
ImportClass classify_import(const pyfront::ImportDecl& decl, const std::set<std::string>& layout);

// Union by name; config wins the version, a name present on both sides gets
// source=Both. `imported` holds normalized external import roots.
std::vector<TplDependency> merge_tpls(const std::vector<TplDependency>& config,
                                      const std::vector<std::string>& imported);

std::vector<PtmInvocation> detect_ptms(const std::vector<pyfront::SourceUnit>& units,
                                       const std::map<std::string, pyfront::SymbolTable>& tables,
                                       const PtmPatternCatalog& catalog);

inline constexpr std::string_view kDefaultRootClass = "torch.nn.Module";

std::vector<NNModuleDef> extract_nn_modules(const std::vector<pyfront::SourceUnit>& units,
                                            const std::string& root = std::string(kDefaultRootClass));

// Full extraction result for one version; `units` is kept so the next
// version can be extracted incrementally.
struct VersionExtraction {
    std::map<std::string, pyfront::SourceUnit> units;  // .py path -> unit
    std::vector<TplDependency> tpls;
    std::vector<PtmInvocation> ptms;
    std::vector<NNModuleDef> modules;
    std::vector<pyfront::Diagnostic> diagnostics;
};

VersionExtraction extract_full(const FileTree& tree, const PtmPatternCatalog& catalog,
                               const std::string& root = std::string(kDefaultRootClass));

// Re-extracts after a change: units of unchanged files are reused, changed
// files are re-parsed, and everything downstream is recomputed over the
// merged unit set. Equivalent to extract_full on `tree`.
VersionExtraction extract_incremental(const VersionExtraction& prev, const FileTree& tree,
                                      const std::set<std::string>& changed_files,
                                      const PtmPatternCatalog& catalog,
                                      const std::string& root = std::string(kDefaultRootClass));

}  // namespace nnbom::extractors

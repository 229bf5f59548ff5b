#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nnbom/clonecore.hpp"
#include "nnbom/extractors.hpp"

// The NNBOM database: a directory of line-delimited JSON record files with
// sorted keys, one record per line. Writing the same corpus twice produces
// byte-identical files.
namespace nnbom::db {

struct RepoMeta {
    std::string repo_id;
    std::string name;
    std::string description;
    std::vector<std::string> topics;
    int64_t created_at = 0;
};

struct RepoRow {
    std::string repo;
    std::string name;
    std::vector<std::string> topics;
    int64_t created_at = 0;
    std::set<std::string> domains;
};

struct VersionRow {
    int version_index = 0;
    std::string repo;
    std::string tag;  // "HEAD" for untagged repositories
    int64_t release_unix = 0;
    std::vector<int> modules_self;
    std::vector<int> modules_cloned;
    std::vector<std::string> diagnostics;
};

struct ModuleRow {
    int module_index = 0;
    std::string hash;
    int version_index = 0;
    int loc = 0;
    std::set<std::string> domains;
    int frequency = 0;  // denormalized from the clone family
    std::string qualified_name;
    std::string file;
};

struct TplRow {
    int version_index = 0;
    std::string name;
    std::optional<std::string> version;
    std::string source;  // config | import | both
};

struct PtmRow {
    int version_index = 0;
    std::string hub;
    std::optional<std::string> model;
    std::string file;
    int line = 0;
    std::string resolution;  // literal | symbol-table | unresolved
};

struct EdgeRow {
    std::string a, b;  // a < b
    int weight = 0;
};

struct SkippedRepo {
    std::string repo;
    std::string reason;
};

struct Store {
    std::string root_class = std::string(extractors::kDefaultRootClass);
    int next_version_index = 0;
    int next_module_index = 0;
    std::vector<SkippedRepo> skipped;

    std::vector<RepoRow> repos;
    std::vector<VersionRow> versions;
    std::vector<ModuleRow> modules;
    std::vector<clonecore::CloneFamily> families;
    std::vector<TplRow> tpls;
    std::vector<PtmRow> ptms;
    std::vector<EdgeRow> edges;

    const RepoRow* find_repo(const std::string& id) const;
    const VersionRow* find_version(int index) const;
    int version_year(int index) const;

    static Store load(const std::string& dir);  // throws on malformed stores
    void save(const std::string& dir) const;
};

// Seven-domain taxonomy with case-insensitive substring matching over the
// repository name and topics.
struct DomainTaxonomy {
    // domain -> lowercase keywords
    std::map<std::string, std::vector<std::string>> keywords;

    static const std::vector<std::string>& domain_names();  // UL RL CV MML NLP GM Trans
    static DomainTaxonomy builtin();
    // `[DOMAIN]` headers with one keyword per line; '#' comments.
    static DomainTaxonomy parse(std::string_view text, std::vector<std::string>& errors);
    std::string serialize() const;
};

std::set<std::string> classify_domains(const RepoMeta& meta, const DomainTaxonomy& taxonomy);

// Version-size buckets: [0,100), [100,500), [500,1000), [1000,inf)
int size_bucket(int module_count);
inline constexpr int kSizeBucketCount = 4;

// Recomputes families, reuse marks, module frequencies/domains, and the
// repository dependency edges from the raw rows. Call after any ingestion.
void finalize_store(Store& store);

// A module occurrence is cloned iff its family has an occurrence in another
// repository with a strictly earlier release time.
void mark_reuse(Store& store);

}  // namespace nnbom::db

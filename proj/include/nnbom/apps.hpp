#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nnbom/analytics.hpp"
#include "nnbom/ingest.hpp"
#include "nnbom/store.hpp"

// The two applications built on the store: the multi-repository evolution
// (delta) analyzer and the single-repository component assessor/recommender.
namespace nnbom::apps {

struct DeltaReport {
    int64_t window_from = 0, window_to = 0;  // batch release-time range
    std::vector<std::string> new_tpls;       // names absent from the store
    std::vector<std::string> new_ptms;       // "hub:model" identities absent from the store
    std::vector<std::string> new_families;   // hashes absent from the store
    int total_module_occurrences = 0;
    int new_family_occurrences = 0;
    double original_fraction = 0.0;  // new-family occurrences / total occurrences
};

DeltaReport delta_analyze(const db::Store& base, const std::vector<std::string>& repo_paths,
                          const db::MetaManifest& manifest, const db::IngestOptions& options);

// Computes a delta against a batch already staged as a store.
DeltaReport delta_from_staging(const db::Store& base, const db::Store& staging);

enum class ModuleStatus { Original, Reused, Outdated };
std::string module_status_name(ModuleStatus status);

struct AssessedModule {
    std::string qualified_name;
    std::string file;
    std::string hash;
    ModuleStatus status = ModuleStatus::Original;
    std::optional<int> origin_year;  // family's earliest year when reused/outdated
};

struct Recommendation {
    std::string id;
    double score = 0.0;
};

struct SimilarRepo {
    std::string repo;
    double similarity = 0.0;  // Jaccard over clone-family sets
};

struct AssessmentReport {
    std::string repo_id;
    int64_t snapshot_unix = 0;
    int tpl_count = 0, ptm_count = 0, module_count = 0;
    std::vector<AssessedModule> modules;
    std::vector<Recommendation> recommended_tpls;
    std::vector<Recommendation> recommended_ptms;
    std::vector<Recommendation> recommended_modules;
    std::vector<SimilarRepo> similar;
};

struct AssessOptions {
    int staleness_years = 2;
    int recommend_n = 5;
    int similar_n = 5;
    std::optional<int64_t> snapshot_unix;  // default: HEAD commit time, else now
    db::IngestOptions ingest;
};

// Extracts the target (git HEAD, or a plain directory tree) and assesses it
// against the store.
AssessmentReport assess_repo(const db::Store& store, const std::string& path,
                             const AssessOptions& options);

// Candidates scored by summed co-usage edge weight to the owned components;
// components already owned are never returned. Ties break lexicographically.
std::vector<Recommendation> recommend_components(const analytics::WeightedGraph& network,
                                                 const std::set<std::string>& owned, int n);

std::vector<SimilarRepo> similar_repos(const db::Store& store,
                                       const std::set<std::string>& target_families, int n);

}  // namespace nnbom::apps

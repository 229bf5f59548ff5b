#include "nnbom/apps.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>

#include "nnbom/gitvcs.hpp"
#include "nnbom/util.hpp"

namespace fs = std::filesystem;

namespace nnbom::apps {

DeltaReport delta_from_staging(const db::Store& base, const db::Store& staging) {
    DeltaReport report;
    if (staging.versions.empty()) return report;

    report.window_from = staging.versions.front().release_unix;
    report.window_to = report.window_from;
    for (const auto& v : staging.versions) {
        report.window_from = std::min(report.window_from, v.release_unix);
        report.window_to = std::max(report.window_to, v.release_unix);
    }

    std::set<std::string> base_tpls, base_ptms, base_hashes;
    for (const auto& t : base.tpls) base_tpls.insert(t.name);
    for (const auto& p : base.ptms) {
        if (p.model) base_ptms.insert(p.hub + ":" + *p.model);
    }
    for (const auto& f : base.families) base_hashes.insert(f.hash);

    std::set<std::string> new_tpls, new_ptms, new_families;
    for (const auto& t : staging.tpls) {
        if (!base_tpls.count(t.name)) new_tpls.insert(t.name);
    }
    for (const auto& p : staging.ptms) {
        if (!p.model) continue;
        std::string id = p.hub + ":" + *p.model;
        if (!base_ptms.count(id)) new_ptms.insert(id);
    }
    for (const auto& m : staging.modules) {
        ++report.total_module_occurrences;
        if (!base_hashes.count(m.hash)) {
            ++report.new_family_occurrences;
            new_families.insert(m.hash);
        }
    }
    report.new_tpls.assign(new_tpls.begin(), new_tpls.end());
    report.new_ptms.assign(new_ptms.begin(), new_ptms.end());
    report.new_families.assign(new_families.begin(), new_families.end());
    report.original_fraction =
        report.total_module_occurrences
            ? static_cast<double>(report.new_family_occurrences) / report.total_module_occurrences
            : 0.0;
    return report;
}

DeltaReport delta_analyze(const db::Store& base, const std::vector<std::string>& repo_paths,
                          const db::MetaManifest& manifest, const db::IngestOptions& options) {
    db::Store staging;
    staging.root_class = base.root_class;
    db::ingest_paths(staging, repo_paths, manifest, options);
    return delta_from_staging(base, staging);
}

std::string module_status_name(ModuleStatus status) {
    switch (status) {
        case ModuleStatus::Original: return "original";
        case ModuleStatus::Reused: return "reused";
        case ModuleStatus::Outdated: return "outdated";
    }
    return "original";
}

std::vector<Recommendation> recommend_components(const analytics::WeightedGraph& network,
                                                 const std::set<std::string>& owned, int n) {
    std::map<std::string, double> scores;
    for (const auto& [key, w] : network.edges) {
        const std::string& a = network.node_ids[static_cast<size_t>(key.first)];
        const std::string& b = network.node_ids[static_cast<size_t>(key.second)];
        bool owns_a = owned.count(a) > 0, owns_b = owned.count(b) > 0;
        if (owns_a && !owns_b) scores[b] += w;
        if (owns_b && !owns_a) scores[a] += w;
    }
    std::vector<Recommendation> out;
    for (const auto& [id, score] : scores) out.push_back({id, score});
    std::sort(out.begin(), out.end(), [](const Recommendation& x, const Recommendation& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.id < y.id;
    });
    if (static_cast<int>(out.size()) > n) out.resize(static_cast<size_t>(n));
    return out;
}

std::vector<SimilarRepo> similar_repos(const db::Store& store,
                                       const std::set<std::string>& target_families, int n) {
    std::map<int, const db::VersionRow*> version_of;
    for (const auto& v : store.versions) version_of[v.version_index] = &v;
    std::map<std::string, std::set<std::string>> families_of;
    for (const auto& r : store.repos) families_of[r.repo];
    for (const auto& m : store.modules) {
        families_of[version_of.at(m.version_index)->repo].insert(m.hash);
    }

    std::vector<SimilarRepo> out;
    for (const auto& [repo, families] : families_of) {
        std::set<std::string> uni, inter;
        std::set_union(families.begin(), families.end(), target_families.begin(),
                       target_families.end(), std::inserter(uni, uni.begin()));
        std::set_intersection(families.begin(), families.end(), target_families.begin(),
                              target_families.end(), std::inserter(inter, inter.begin()));
        double sim = uni.empty() ? 0.0 : static_cast<double>(inter.size()) / uni.size();
        out.push_back({repo, sim});
    }
    std::sort(out.begin(), out.end(), [](const SimilarRepo& x, const SimilarRepo& y) {
        if (x.similarity != y.similarity) return x.similarity > y.similarity;
        return x.repo < y.repo;
    });
    if (static_cast<int>(out.size()) > n) out.resize(static_cast<size_t>(n));
    return out;
}

namespace {

// Loads the target repository's current state: HEAD for a git repo, the
// working tree for a plain directory.
extractors::FileTree load_target_tree(const std::string& path, int64_t& snapshot) {
    try {
        gitvcs::GitRepo repo(path);
        auto head = repo.head();
        snapshot = head.commit_unix;
        return repo.tree("HEAD");
    } catch (const gitvcs::NotARepository&) {
        std::map<std::string, std::string> files;
        for (const auto& entry : fs::recursive_directory_iterator(path)) {
            if (!entry.is_regular_file()) continue;
            std::string rel = fs::relative(entry.path(), path).generic_string();
            if (rel.ends_with(".py") || rel.ends_with(".txt") || rel == "setup.py") {
                files[rel] = util::read_file(entry.path().string());
            }
        }
        snapshot = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
        return extractors::FileTree::from_files(std::move(files));
    }
}

}  // namespace

AssessmentReport assess_repo(const db::Store& store, const std::string& path,
                             const AssessOptions& options) {
    AssessmentReport report;
    report.repo_id = fs::path(path).filename().string();

    int64_t snapshot = 0;
    auto tree = load_target_tree(path, snapshot);
    report.snapshot_unix = options.snapshot_unix.value_or(snapshot);

    auto extraction =
        extractors::extract_full(tree, options.ingest.catalog, options.ingest.root_class);
    report.tpl_count = static_cast<int>(extraction.tpls.size());
    report.ptm_count = static_cast<int>(extraction.ptms.size());

    std::map<std::string, const clonecore::CloneFamily*> family_of;
    for (const auto& f : store.families) family_of[f.hash] = &f;

    int snapshot_year = util::year_of(report.snapshot_unix);
    std::set<std::string> target_hashes;
    for (const auto& mod : extraction.modules) {
        AssessedModule am;
        am.qualified_name = mod.qualified_name;
        am.file = mod.file;
        auto form = clonecore::normalize(mod.source_text);
        if (!form) continue;  // excluded from clone analysis
        am.hash = clonecore::module_hash(*form);
        target_hashes.insert(am.hash);

        auto it = family_of.find(am.hash);
        if (it == family_of.end()) {
            am.status = ModuleStatus::Original;
        } else {
            am.origin_year = it->second->first_year;
            bool outdated = snapshot_year - it->second->last_year > options.staleness_years;
            am.status = outdated ? ModuleStatus::Outdated : ModuleStatus::Reused;
        }
        report.modules.push_back(std::move(am));
    }
    report.module_count = static_cast<int>(report.modules.size());

    // recommendations from the most recent year's co-usage networks
    auto years = analytics::store_years(store);
    if (!years.empty()) {
        int year = years.back();
        std::set<std::string> owned_tpls, owned_ptms;
        for (const auto& t : extraction.tpls) owned_tpls.insert(t.name);
        for (const auto& p : extraction.ptms) {
            if (p.model_path) owned_ptms.insert(p.hub + ":" + *p.model_path);
        }
        report.recommended_tpls = recommend_components(
            analytics::build_cousage(store, analytics::ComponentType::Tpl, year), owned_tpls,
            options.recommend_n);
        report.recommended_ptms = recommend_components(
            analytics::build_cousage(store, analytics::ComponentType::Ptm, year), owned_ptms,
            options.recommend_n);
        report.recommended_modules = recommend_components(
            analytics::build_cousage(store, analytics::ComponentType::ModuleFamily, year),
            target_hashes, options.recommend_n);
    }

    report.similar = similar_repos(store, target_hashes, options.similar_n);
    return report;
}

}  // namespace nnbom::apps

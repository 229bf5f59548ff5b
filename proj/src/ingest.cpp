#include "nnbom/ingest.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>

#include "nnbom/gitvcs.hpp"
#include "nnbom/util.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace nnbom::db {

namespace {

RepoMeta meta_from_json(const json& j, const std::string& fallback_id) {
    RepoMeta meta;
    meta.repo_id = j.value("repo", fallback_id);
    meta.name = j.value("name", meta.repo_id);
    meta.description = j.value("description", "");
    meta.topics = j.value("topics", std::vector<std::string>{});
    if (j.contains("created_at") && j["created_at"].is_string()) {
        if (auto t = util::parse_iso_utc(j["created_at"].get<std::string>())) meta.created_at = *t;
    }
    return meta;
}

bool tutorial_like(const RepoMeta& meta) {
    static const std::vector<std::string> kw = {"tutorial", "example", "demo"};
    std::string name = util::to_lower(meta.name);
    std::string desc = util::to_lower(meta.description);
    for (const auto& k : kw) {
        if (name.find(k) != std::string::npos || desc.find(k) != std::string::npos) return true;
    }
    return false;
}

std::string tpl_source_name(extractors::TplSource s) {
    switch (s) {
        case extractors::TplSource::Config: return "config";
        case extractors::TplSource::Import: return "import";
        case extractors::TplSource::Both: return "both";
    }
    return "import";
}

std::string resolution_name(extractors::PtmResolution r) {
    switch (r) {
        case extractors::PtmResolution::Literal: return "literal";
        case extractors::PtmResolution::SymbolTable: return "symbol-table";
        case extractors::PtmResolution::Unresolved: return "unresolved";
    }
    return "unresolved";
}

}  // namespace

MetaManifest load_meta_manifest(const std::string& path) {
    MetaManifest manifest;
    json j = json::parse(util::read_file(path));
    if (!j.is_object()) throw std::runtime_error("meta manifest must be a JSON object: " + path);
    for (const auto& [key, value] : j.items()) {
        manifest[key] = meta_from_json(value, key);
    }
    return manifest;
}

std::optional<RepoMeta> load_sidecar_meta(const std::string& repo_path) {
    std::string sidecar = repo_path + "/.nnbom-meta.json";
    if (!fs::exists(sidecar)) return std::nullopt;
    json j = json::parse(util::read_file(sidecar));
    return meta_from_json(j, fs::path(repo_path).filename().string());
}

bool ingest_repo(Store& store, const std::string& repo_path, const RepoMeta& meta,
                 const IngestOptions& options) {
    if (options.filter_tutorials && tutorial_like(meta)) {
        store.skipped.push_back({meta.repo_id, "tutorial/example/demo name or description"});
        return false;
    }

    gitvcs::GitRepo repo(repo_path);
    std::vector<std::string> diagnostics;
    auto versions = repo.versions(diagnostics);

    struct StagedVersion {
        gitvcs::TagInfo tag;
        extractors::VersionExtraction extraction;
        std::vector<std::string> diagnostics;
    };
    std::vector<StagedVersion> staged;

    const extractors::VersionExtraction* prev = nullptr;
    for (size_t i = 0; i < versions.size(); ++i) {
        StagedVersion sv;
        sv.tag = versions[i];
        auto tree = repo.tree(versions[i].name);
        if (prev == nullptr) {
            sv.extraction = extractors::extract_full(tree, options.catalog, options.root_class);
        } else {
            std::set<std::string> changed;
            bool diff_ok = true;
            try {
                changed = repo.changed_py(versions[i - 1].name, versions[i].name);
            } catch (const std::exception& e) {
                sv.diagnostics.push_back(std::string("diff failed, full re-extraction: ") + e.what());
                diff_ok = false;
            }
            if (diff_ok) {
                sv.extraction = extractors::extract_incremental(*prev, tree, changed,
                                                                options.catalog, options.root_class);
            } else {
                sv.extraction = extractors::extract_full(tree, options.catalog, options.root_class);
            }
        }
        for (const auto& d : sv.extraction.diagnostics) {
            sv.diagnostics.push_back("line " + std::to_string(d.line) + ": " + d.message);
        }
        staged.push_back(std::move(sv));
        prev = &staged.back().extraction;
    }

    if (options.filter_trivial) {
        bool any_modules = std::any_of(staged.begin(), staged.end(), [](const StagedVersion& sv) {
            return !sv.extraction.modules.empty();
        });
        if (!any_modules) {
            store.skipped.push_back({meta.repo_id, "no NN modules in any version"});
            return false;
        }
    }

    // All versions extracted; now commit the repository to the store as a unit.
    RepoRow repo_row;
    repo_row.repo = meta.repo_id;
    repo_row.name = meta.name;
    repo_row.topics = meta.topics;
    repo_row.created_at = meta.created_at;
    repo_row.domains = classify_domains(meta, options.taxonomy);
    store.repos.push_back(repo_row);

    for (auto& sv : staged) {
        VersionRow version;
        version.version_index = store.next_version_index++;
        version.repo = meta.repo_id;
        version.tag = sv.tag.name;
        version.release_unix = sv.tag.commit_unix;
        version.diagnostics = std::move(sv.diagnostics);
        for (const auto& d : diagnostics) version.diagnostics.push_back(d);
        diagnostics.clear();  // repo-level diagnostics attach to the first version

        for (const auto& tpl : sv.extraction.tpls) {
            store.tpls.push_back(
                {version.version_index, tpl.name, tpl.version, tpl_source_name(tpl.source)});
        }
        for (const auto& ptm : sv.extraction.ptms) {
            store.ptms.push_back({version.version_index, ptm.hub, ptm.model_path, ptm.file,
                                  ptm.line, resolution_name(ptm.resolution)});
        }
        for (const auto& mod : sv.extraction.modules) {
            ModuleRow row;
            row.module_index = store.next_module_index++;
            row.hash = [&] {
                auto form = clonecore::normalize(mod.source_text);
                return form ? clonecore::module_hash(*form) : std::string();
            }();
            if (row.hash.empty()) {
                version.diagnostics.push_back(mod.qualified_name +
                                              ": tokenization failed, excluded from clone analysis");
                --store.next_module_index;
                continue;
            }
            row.version_index = version.version_index;
            row.loc = mod.loc;
            row.frequency = 1;  // denormalized in finalize_store
            row.qualified_name = mod.qualified_name;
            row.file = mod.file;
            store.modules.push_back(std::move(row));
        }
        store.versions.push_back(std::move(version));
    }
    return true;
}

IngestSummary ingest_paths(Store& store, const std::vector<std::string>& paths,
                           const MetaManifest& manifest, const IngestOptions& options) {
    IngestSummary summary;
    for (const auto& path : paths) {
        std::string dir_name = fs::path(path).filename().string();
        if (dir_name.empty()) dir_name = fs::path(path).parent_path().filename().string();

        RepoMeta meta;
        auto manifest_it = manifest.find(dir_name);
        if (manifest_it != manifest.end()) {
            meta = manifest_it->second;
        } else if (auto sidecar = load_sidecar_meta(path)) {
            meta = *sidecar;
        } else {
            meta.repo_id = dir_name;
            meta.name = dir_name;
            summary.warnings.push_back(path + ": no metadata found, synthesized from directory name");
        }
        if (store.find_repo(meta.repo_id)) {
            summary.warnings.push_back(path + ": repo id '" + meta.repo_id +
                                       "' already in store, skipped");
            ++summary.skipped;
            continue;
        }
        if (ingest_repo(store, path, meta, options)) {
            ++summary.ingested;
        } else {
            ++summary.skipped;
        }
    }
    finalize_store(store);
    return summary;
}

}  // namespace nnbom::db

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nnbom/store.hpp"

namespace nnbom::db {

struct IngestOptions {
    bool filter_tutorials = false;
    bool filter_trivial = false;
    extractors::PtmPatternCatalog catalog = extractors::PtmPatternCatalog::builtin();
    DomainTaxonomy taxonomy = DomainTaxonomy::builtin();
    std::string root_class = std::string(extractors::kDefaultRootClass);
};

// Metadata for a repository checkout. Resolution order: corpus manifest entry
// (keyed by directory name), then `<repo>/.nnbom-meta.json`, else synthesized
// from the directory name with a diagnostic.
using MetaManifest = std::map<std::string, RepoMeta>;

MetaManifest load_meta_manifest(const std::string& path);  // throws on bad file
std::optional<RepoMeta> load_sidecar_meta(const std::string& repo_path);

// Extracts every version of one checkout (incrementally after the first) and
// appends its rows to the store. Returns false when the repo was skipped by a
// filter. Call finalize_store once all repositories are in.
bool ingest_repo(Store& store, const std::string& repo_path, const RepoMeta& meta,
                 const IngestOptions& options);

struct IngestSummary {
    int ingested = 0;
    int skipped = 0;
    std::vector<std::string> warnings;
};

// Ingests a batch of checkouts, resolving metadata per repo, then finalizes.
IngestSummary ingest_paths(Store& store, const std::vector<std::string>& paths,
                           const MetaManifest& manifest, const IngestOptions& options);

}  // namespace nnbom::db

// nnbom: build an NNBOM store from local repository checkouts and run the
// evolution analytics and assessment reports over it.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <iostream>

#include "nnbom/analytics.hpp"
#include "nnbom/apps.hpp"
#include "nnbom/ingest.hpp"
#include "nnbom/store.hpp"
#include "nnbom/util.hpp"

using json = nlohmann::json;
using namespace nnbom;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

void print_table(const std::vector<std::vector<std::string>>& rows) {
    if (rows.empty()) return;
    std::vector<size_t> widths;
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i >= widths.size()) widths.push_back(0);
            widths[i] = std::max(widths[i], row[i].size());
        }
    }
    for (const auto& row : rows) {
        std::string line;
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) line += "  ";
            line += row[i];
            if (i + 1 < row.size()) line.append(widths[i] - row[i].size(), ' ');
        }
        std::cout << line << "\n";
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

db::Store open_store(const std::string& dir) { return db::Store::load(dir); }

db::IngestOptions make_ingest_options(const std::string& catalog_path,
                                      const std::string& taxonomy_path, bool filter_tutorials,
                                      bool filter_trivial) {
    db::IngestOptions options;
    options.filter_tutorials = filter_tutorials;
    options.filter_trivial = filter_trivial;
    if (!catalog_path.empty()) {
        std::vector<std::string> errors;
        options.catalog = extractors::PtmPatternCatalog::parse(util::read_file(catalog_path), errors);
        if (!errors.empty()) {
            for (const auto& e : errors) std::cerr << "catalog: " << e << "\n";
            throw std::runtime_error("invalid PTM pattern catalog: " + catalog_path);
        }
    }
    if (!taxonomy_path.empty()) {
        std::vector<std::string> errors;
        options.taxonomy = db::DomainTaxonomy::parse(util::read_file(taxonomy_path), errors);
        if (!errors.empty()) {
            for (const auto& e : errors) std::cerr << "taxonomy: " << e << "\n";
            throw std::runtime_error("invalid domain taxonomy: " + taxonomy_path);
        }
    }
    return options;
}

int run_analyze(const std::string& report, const std::string& db_dir, const std::string& format,
                const std::string& mode_name, int year, int k, int threshold, uint64_t seed) {
    db::Store store = open_store(db_dir);
    bool records = format == "records";
    auto mode = mode_name == "yearly" ? analytics::EntropyMode::Yearly
                                      : analytics::EntropyMode::Cumulative;

    if (report == "trends") {
        auto rows = analytics::yearly_trends(store);
        if (records) {
            for (const auto& r : rows) {
                std::cout << json{{"avg_loc_per_module", r.avg_loc_per_module},
                                  {"avg_modules_per_version", r.avg_modules_per_version},
                                  {"distinct_tpls", r.distinct_tpls},
                                  {"modules", r.modules},
                                  {"ptm_invocations", r.ptm_invocations},
                                  {"versions", r.versions},
                                  {"year", r.year}}
                                 .dump()
                          << "\n";
            }
        } else {
            std::vector<std::vector<std::string>> table = {
                {"year", "versions", "tpls", "ptms", "modules", "avg_modules", "avg_loc"}};
            for (const auto& r : rows) {
                table.push_back({std::to_string(r.year), std::to_string(r.versions),
                                 std::to_string(r.distinct_tpls),
                                 std::to_string(r.ptm_invocations), std::to_string(r.modules),
                                 fmt(r.avg_modules_per_version), fmt(r.avg_loc_per_module)});
            }
            print_table(table);
        }
        return kExitOk;
    }
    if (report == "sizes") {
        auto dist = analytics::size_distribution(store);
        static const char* kBuckets[] = {"0-100", "100-500", "500-1000", ">=1000"};
        if (records) {
            for (const auto& [y, fractions] : dist) {
                json j{{"year", y}};
                for (size_t i = 0; i < fractions.size(); ++i) j[kBuckets[i]] = fractions[i];
                std::cout << j.dump() << "\n";
            }
        } else {
            std::vector<std::vector<std::string>> table = {
                {"year", kBuckets[0], kBuckets[1], kBuckets[2], kBuckets[3]}};
            for (const auto& [y, fractions] : dist) {
                table.push_back({std::to_string(y), fmt(fractions[0]), fmt(fractions[1]),
                                 fmt(fractions[2]), fmt(fractions[3])});
            }
            print_table(table);
        }
        return kExitOk;
    }
    if (report == "depgraph") {
        auto graph = analytics::build_dependency_graph(store);
        for (const auto& [key, w] : graph.edges) {
            const std::string& a = graph.node_ids[static_cast<size_t>(key.first)];
            const std::string& b = graph.node_ids[static_cast<size_t>(key.second)];
            if (records) {
                std::cout << json{{"a", a}, {"b", b}, {"weight", w}}.dump() << "\n";
            } else {
                std::cout << a << "\t" << b << "\t" << static_cast<long long>(w) << "\n";
            }
        }
        return kExitOk;
    }
    if (report == "communities") {
        auto rows = analytics::community_dynamics(store, threshold, seed);
        if (records) {
            for (const auto& r : rows) {
                std::cout << json{{"avg_size", r.avg_size},
                                  {"communities", r.communities},
                                  {"type", analytics::component_type_name(r.type)},
                                  {"year", r.year}}
                                 .dump()
                          << "\n";
            }
        } else {
            std::vector<std::vector<std::string>> table = {
                {"year", "type", "communities", "avg_size"}};
            for (const auto& r : rows) {
                table.push_back({std::to_string(r.year), analytics::component_type_name(r.type),
                                 std::to_string(r.communities), fmt(r.avg_size)});
            }
            print_table(table);
        }
        return kExitOk;
    }
    if (report == "entropy") {
        auto rows = analytics::entropy_by_year(store, mode);
        if (records) {
            for (const auto& r : rows) {
                std::cout << json{{"average_entropy", r.average},
                                  {"families", r.families},
                                  {"year", r.year}}
                                 .dump()
                          << "\n";
            }
        } else {
            std::vector<std::vector<std::string>> table = {{"year", "families", "avg_entropy"}};
            for (const auto& r : rows) {
                table.push_back(
                    {std::to_string(r.year), std::to_string(r.families), fmt(r.average)});
            }
            print_table(table);
        }
        return kExitOk;
    }
    if (report == "overlap") {
        auto years = analytics::store_years(store);
        std::vector<int> selected = year > 0 ? std::vector<int>{year} : years;
        std::vector<std::vector<std::string>> table = {{"year", "rank", "pair", "percent"}};
        for (int y : selected) {
            auto entries = analytics::domain_overlap(store, y, mode);
            int top = std::min<int>(5, static_cast<int>(entries.size()));
            for (int rank = 0; rank < top; ++rank) {
                const auto& e = entries[static_cast<size_t>(rank)];
                if (records) {
                    std::cout << json{{"domain_a", e.domain_a},
                                      {"domain_b", e.domain_b},
                                      {"percent", e.percent},
                                      {"rank", rank + 1},
                                      {"year", y}}
                                     .dump()
                              << "\n";
                } else {
                    table.push_back({std::to_string(y), std::to_string(rank + 1),
                                     e.domain_a + "-" + e.domain_b, fmt(e.percent)});
                }
            }
        }
        if (!records) print_table(table);
        return kExitOk;
    }
    if (report == "top-modules") {
        auto years = analytics::store_years(store);
        if (years.empty()) return kExitOk;
        int y = year > 0 ? year : years.back();
        auto entries = analytics::top_reused_modules(store, y, k);
        if (records) {
            int rank = 0;
            for (const auto& e : entries) {
                std::cout << json{{"first_year", e.first_year},
                                  {"hash", e.hash},
                                  {"occurrences", e.occurrences},
                                  {"rank", ++rank},
                                  {"representative", e.representative},
                                  {"year", y}}
                                 .dump()
                          << "\n";
            }
        } else {
            std::vector<std::vector<std::string>> table = {
                {"rank", "occurrences", "representative", "first_year", "hash"}};
            int rank = 0;
            for (const auto& e : entries) {
                table.push_back({std::to_string(++rank), std::to_string(e.occurrences),
                                 e.representative, std::to_string(e.first_year),
                                 e.hash.substr(0, 12)});
            }
            print_table(table);
        }
        return kExitOk;
    }
    if (report == "lifespan") {
        auto matrix = analytics::lifespan_matrix(store);
        if (records) {
            for (int l = 0; l < matrix.window; ++l) {
                json j{{"lifespan", l + 1}};
                for (int d = 0; d < 7; ++d) {
                    j["d" + std::to_string(d + 1)] =
                        matrix.cells[static_cast<size_t>(l)][static_cast<size_t>(d)];
                }
                std::cout << j.dump() << "\n";
            }
        } else {
            std::vector<std::vector<std::string>> table = {
                {"lifespan", "d1", "d2", "d3", "d4", "d5", "d6", "d7"}};
            for (int l = 0; l < matrix.window; ++l) {
                std::vector<std::string> row = {std::to_string(l + 1)};
                for (int d = 0; d < 7; ++d) {
                    row.push_back(std::to_string(
                        matrix.cells[static_cast<size_t>(l)][static_cast<size_t>(d)]));
                }
                table.push_back(std::move(row));
            }
            print_table(table);
        }
        return kExitOk;
    }
    std::cerr << "unknown report: " << report << "\n";
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NNBOM toolkit: extract TPLs, PTM invocations and NN modules from PyTorch-style "
                 "repositories, build the component database, and run evolution analytics"};
    app.require_subcommand(1);

    std::string db_dir = "nnbom-db";
    std::string meta_file, catalog_file, taxonomy_file;
    std::string format = "table";
    std::string mode = "cumulative";
    std::vector<std::string> paths;
    bool filter_tutorials = false, filter_trivial = false;
    int year = 0, k = 10, threshold = 5;
    int staleness_years = 2, recommend_n = 5, similar_n = 5;
    uint64_t seed = 0;
    std::string report;
    std::string catalog_action;

    auto* ingest = app.add_subcommand("ingest", "extract repositories into the store");
    ingest->add_option("paths", paths, "repository checkouts")->required()->expected(-1);
    ingest->add_option("--db", db_dir, "store directory");
    ingest->add_flag("--filter-tutorials", filter_tutorials,
                     "skip repositories named like tutorials/examples/demos");
    ingest->add_flag("--filter-trivial", filter_trivial, "skip repositories without NN modules");
    ingest->add_option("--meta", meta_file, "corpus metadata manifest (JSON)");
    ingest->add_option("--catalog", catalog_file, "PTM pattern catalog file");
    ingest->add_option("--taxonomy", taxonomy_file, "domain keyword file");

    auto* analyze = app.add_subcommand("analyze", "run a report over a closed store");
    analyze->add_option("report", report,
                        "trends|sizes|depgraph|communities|entropy|overlap|top-modules|lifespan")
        ->required();
    analyze->add_option("--db", db_dir, "store directory");
    analyze->add_option("--format", format, "table|records")
        ->check(CLI::IsMember({"table", "records"}));
    analyze->add_option("--mode", mode, "entropy membership: cumulative|yearly")
        ->check(CLI::IsMember({"cumulative", "yearly"}));
    analyze->add_option("--year", year, "restrict to one year");
    analyze->add_option("--k", k, "top-k size");
    analyze->add_option("--threshold", threshold, "co-usage repository threshold");
    analyze->add_option("--seed", seed, "community detection seed");

    auto* delta = app.add_subcommand("delta", "impact of a batch of new repositories");
    delta->add_option("--db", db_dir, "store directory")->required();
    delta->add_option("paths", paths, "new repository checkouts")->required()->expected(-1);
    delta->add_option("--meta", meta_file, "corpus metadata manifest (JSON)");
    delta->add_option("--catalog", catalog_file, "PTM pattern catalog file");
    delta->add_option("--format", format, "table|records")
        ->check(CLI::IsMember({"table", "records"}));

    auto* assess = app.add_subcommand("assess", "assess one repository against the store");
    assess->add_option("--db", db_dir, "store directory")->required();
    assess->add_option("path", paths, "target repository")->required()->expected(1);
    assess->add_option("--staleness-years", staleness_years, "outdated-reuse threshold");
    assess->add_option("--recommend", recommend_n, "recommendations per component type");
    assess->add_option("--similar", similar_n, "similar repositories to list");
    assess->add_option("--catalog", catalog_file, "PTM pattern catalog file");
    assess->add_option("--format", format, "table|records")
        ->check(CLI::IsMember({"table", "records"}));

    auto* catalog = app.add_subcommand("catalog", "show or validate the PTM pattern catalog");
    catalog->add_option("action", catalog_action, "show|validate")->required();
    catalog->add_option("--catalog", catalog_file, "catalog file (default: built-in)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (ingest->parsed()) {
            auto options =
                make_ingest_options(catalog_file, taxonomy_file, filter_tutorials, filter_trivial);
            db::MetaManifest manifest;
            if (!meta_file.empty()) manifest = db::load_meta_manifest(meta_file);

            db::Store store;
            bool existing = false;
            try {
                store = db::Store::load(db_dir);
                existing = true;
            } catch (const std::exception&) {
                store.root_class = options.root_class;
            }
            (void)existing;
            auto summary = db::ingest_paths(store, paths, manifest, options);
            store.save(db_dir);
            for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
            std::cout << "ingested " << summary.ingested << " repositories ("
                      << summary.skipped << " skipped) into " << db_dir << "\n";
            return kExitOk;
        }
        if (analyze->parsed()) {
            return run_analyze(report, db_dir, format, mode, year, k, threshold, seed);
        }
        if (delta->parsed()) {
            db::Store store = open_store(db_dir);
            auto options = make_ingest_options(catalog_file, "", false, false);
            db::MetaManifest manifest;
            if (!meta_file.empty()) manifest = db::load_meta_manifest(meta_file);
            auto rep = apps::delta_analyze(store, paths, manifest, options);
            json j{{"new_families", rep.new_families.size()},
                   {"new_family_list", rep.new_families},
                   {"new_ptm_list", rep.new_ptms},
                   {"new_ptms", rep.new_ptms.size()},
                   {"new_tpl_list", rep.new_tpls},
                   {"new_tpls", rep.new_tpls.size()},
                   {"original_fraction", rep.original_fraction},
                   {"total_module_occurrences", rep.total_module_occurrences},
                   {"window_from", util::iso_utc(rep.window_from)},
                   {"window_to", util::iso_utc(rep.window_to)}};
            if (format == "records") {
                std::cout << j.dump() << "\n";
            } else {
                std::cout << "window           " << util::iso_utc(rep.window_from) << " .. "
                          << util::iso_utc(rep.window_to) << "\n"
                          << "new TPLs         " << rep.new_tpls.size() << "\n"
                          << "new PTMs         " << rep.new_ptms.size() << "\n"
                          << "new families     " << rep.new_families.size() << "\n"
                          << "module total     " << rep.total_module_occurrences << "\n"
                          << "original share   " << fmt(rep.original_fraction) << "\n";
            }
            return kExitOk;
        }
        if (assess->parsed()) {
            db::Store store = open_store(db_dir);
            apps::AssessOptions options;
            options.staleness_years = staleness_years;
            options.recommend_n = recommend_n;
            options.similar_n = similar_n;
            options.ingest = make_ingest_options(catalog_file, "", false, false);
            auto rep = apps::assess_repo(store, paths.at(0), options);

            if (format == "records") {
                json mods = json::array();
                for (const auto& m : rep.modules) {
                    json jm{{"file", m.file},
                            {"hash", m.hash},
                            {"name", m.qualified_name},
                            {"status", apps::module_status_name(m.status)}};
                    jm["origin_year"] = m.origin_year ? json(*m.origin_year) : json(nullptr);
                    mods.push_back(jm);
                }
                auto recs = [](const std::vector<apps::Recommendation>& v) {
                    json arr = json::array();
                    for (const auto& r : v) arr.push_back({{"id", r.id}, {"score", r.score}});
                    return arr;
                };
                json sims = json::array();
                for (const auto& s : rep.similar) {
                    sims.push_back({{"repo", s.repo}, {"similarity", s.similarity}});
                }
                std::cout << json{{"modules", mods},
                                  {"module_count", rep.module_count},
                                  {"ptm_count", rep.ptm_count},
                                  {"recommended_modules", recs(rep.recommended_modules)},
                                  {"recommended_ptms", recs(rep.recommended_ptms)},
                                  {"recommended_tpls", recs(rep.recommended_tpls)},
                                  {"repo", rep.repo_id},
                                  {"similar", sims},
                                  {"snapshot", util::iso_utc(rep.snapshot_unix)},
                                  {"tpl_count", rep.tpl_count}}
                                 .dump()
                          << "\n";
            } else {
                std::cout << "repository  " << rep.repo_id << " (snapshot "
                          << util::iso_utc(rep.snapshot_unix) << ")\n"
                          << "inventory   " << rep.tpl_count << " TPLs, " << rep.ptm_count
                          << " PTMs, " << rep.module_count << " modules\n";
                int original = 0, reused = 0, outdated = 0;
                for (const auto& m : rep.modules) {
                    switch (m.status) {
                        case apps::ModuleStatus::Original: ++original; break;
                        case apps::ModuleStatus::Reused: ++reused; break;
                        case apps::ModuleStatus::Outdated: ++outdated; break;
                    }
                }
                std::cout << "modules     " << original << " original, " << reused << " reused, "
                          << outdated << " outdated\n";
                std::vector<std::vector<std::string>> table = {{"module", "status", "origin"}};
                for (const auto& m : rep.modules) {
                    table.push_back({m.qualified_name, apps::module_status_name(m.status),
                                     m.origin_year ? std::to_string(*m.origin_year) : "-"});
                }
                print_table(table);
                if (!rep.recommended_tpls.empty() || !rep.recommended_ptms.empty() ||
                    !rep.recommended_modules.empty()) {
                    std::cout << "recommended\n";
                    for (const auto& r : rep.recommended_tpls) {
                        std::cout << "  tpl     " << r.id << " (" << r.score << ")\n";
                    }
                    for (const auto& r : rep.recommended_ptms) {
                        std::cout << "  ptm     " << r.id << " (" << r.score << ")\n";
                    }
                    for (const auto& r : rep.recommended_modules) {
                        std::cout << "  module  " << r.id.substr(0, 12) << " (" << r.score << ")\n";
                    }
                }
                if (!rep.similar.empty()) {
                    std::cout << "similar\n";
                    for (const auto& s : rep.similar) {
                        std::cout << "  " << s.repo << "  " << fmt(s.similarity) << "\n";
                    }
                }
            }
            return kExitOk;
        }
        if (catalog->parsed()) {
            if (catalog_action == "show") {
                if (catalog_file.empty()) {
                    std::cout << extractors::PtmPatternCatalog::builtin().serialize();
                } else {
                    std::vector<std::string> errors;
                    auto cat =
                        extractors::PtmPatternCatalog::parse(util::read_file(catalog_file), errors);
                    std::cout << cat.serialize();
                    for (const auto& e : errors) std::cerr << "catalog: " << e << "\n";
                    if (!errors.empty()) return kExitData;
                }
                return kExitOk;
            }
            if (catalog_action == "validate") {
                std::string text = catalog_file.empty()
                                       ? extractors::PtmPatternCatalog::builtin().serialize()
                                       : util::read_file(catalog_file);
                std::vector<std::string> errors;
                auto cat = extractors::PtmPatternCatalog::parse(text, errors);
                for (const auto& e : errors) std::cerr << "catalog: " << e << "\n";
                std::cout << (errors.empty() ? "valid" : "invalid") << " ("
                          << cat.entries.size() << " entries)\n";
                return errors.empty() ? kExitOk : kExitData;
            }
            std::cerr << "unknown catalog action: " << catalog_action << "\n";
            return kExitUsage;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

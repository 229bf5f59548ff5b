#include "nnbom/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "nnbom/util.hpp"

namespace nnbom::analytics {

int WeightedGraph::add_node(const std::string& id) {
    node_ids.push_back(id);
    return static_cast<int>(node_ids.size()) - 1;
}

void WeightedGraph::add_edge(int a, int b, double w) {
    if (a > b) std::swap(a, b);
    edges[{a, b}] += w;
}

double WeightedGraph::total_weight2() const {
    double sum = 0.0;
    for (const auto& [_, w] : edges) sum += 2.0 * w;
    return sum;
}

int CommunityPartition::community_count() const {
    std::set<int> ids(assignment.begin(), assignment.end());
    return static_cast<int>(ids.size());
}

double modularity(const WeightedGraph& graph, const std::vector<int>& assignment,
                  double resolution) {
    double m2 = graph.total_weight2();
    if (m2 <= 0.0) return 0.0;

    std::map<int, double> in2, tot;
    std::vector<double> degree(graph.node_count(), 0.0);
    for (const auto& [key, w] : graph.edges) {
        auto [i, j] = key;
        if (i == j) {
            degree[static_cast<size_t>(i)] += 2.0 * w;
        } else {
            degree[static_cast<size_t>(i)] += w;
            degree[static_cast<size_t>(j)] += w;
        }
        if (assignment[static_cast<size_t>(i)] == assignment[static_cast<size_t>(j)]) {
            in2[assignment[static_cast<size_t>(i)]] += 2.0 * w;
        }
    }
    for (size_t i = 0; i < graph.node_count(); ++i) tot[assignment[i]] += degree[i];

    double q = 0.0;
    for (const auto& [c, t] : tot) {
        double inner = in2.count(c) ? in2[c] : 0.0;
        q += inner / m2 - resolution * (t / m2) * (t / m2);
    }
    return q;
}

namespace {

// Flat adjacency view used by the local-move phase.
struct LocalGraph {
    size_t n = 0;
    std::vector<std::vector<std::pair<int, double>>> adj;  // neighbors, no self entries
    std::vector<double> self_loop;                         // w_ii
    std::vector<double> degree;                            // k_i (self loop counts twice)
    double m2 = 0.0;

    explicit LocalGraph(const WeightedGraph& g) {
        n = g.node_count();
        adj.resize(n);
        self_loop.assign(n, 0.0);
        degree.assign(n, 0.0);
        for (const auto& [key, w] : g.edges) {
            auto [i, j] = key;
            if (i == j) {
                self_loop[static_cast<size_t>(i)] += w;
                degree[static_cast<size_t>(i)] += 2.0 * w;
            } else {
                adj[static_cast<size_t>(i)].emplace_back(j, w);
                adj[static_cast<size_t>(j)].emplace_back(i, w);
                degree[static_cast<size_t>(i)] += w;
                degree[static_cast<size_t>(j)] += w;
            }
        }
        m2 = std::accumulate(degree.begin(), degree.end(), 0.0);
    }
};

struct LevelResult {
    std::vector<int> n2c;  // dense community ids
    bool moved = false;
};

// One level of local moves; records Q after every full pass.
LevelResult local_moves(const LocalGraph& g, double resolution, std::mt19937_64& rng,
                        std::vector<double>& trace) {
    LevelResult result;
    result.n2c.resize(g.n);
    std::iota(result.n2c.begin(), result.n2c.end(), 0);
    if (g.n == 0 || g.m2 <= 0.0) return result;

    std::vector<double> tot(g.n, 0.0), in2(g.n, 0.0);
    for (size_t i = 0; i < g.n; ++i) {
        tot[i] = g.degree[i];
        in2[i] = 2.0 * g.self_loop[i];
    }

    auto pass_q = [&] {
        double q = 0.0;
        for (size_t c = 0; c < g.n; ++c) {
            q += in2[c] / g.m2 - resolution * (tot[c] / g.m2) * (tot[c] / g.m2);
        }
        return q;
    };

    std::vector<size_t> order(g.n);
    std::iota(order.begin(), order.end(), 0);

    double prev_q = pass_q();
    bool any_move = true;
    while (any_move) {
        any_move = false;
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t idx = 0; idx < g.n; ++idx) {
            size_t node = order[idx];
            int old_c = result.n2c[node];

            // weights from `node` to each neighboring community
            std::map<int, double> links;
            links[old_c];  // staying is always a candidate
            for (const auto& [nb, w] : g.adj[node]) {
                links[result.n2c[static_cast<size_t>(nb)]] += w;
            }

            // remove the node from its community
            tot[static_cast<size_t>(old_c)] -= g.degree[node];
            in2[static_cast<size_t>(old_c)] -= 2.0 * links[old_c] + 2.0 * g.self_loop[node];

            int best_c = old_c;
            double best_gain = links[old_c] -
                               resolution * tot[static_cast<size_t>(old_c)] * g.degree[node] / g.m2;
            for (const auto& [c, l] : links) {
                if (c == old_c) continue;
                double gain =
                    l - resolution * tot[static_cast<size_t>(c)] * g.degree[node] / g.m2;
                if (gain > best_gain + 1e-12) {
                    best_gain = gain;
                    best_c = c;
                }
            }

            tot[static_cast<size_t>(best_c)] += g.degree[node];
            in2[static_cast<size_t>(best_c)] += 2.0 * links[best_c] + 2.0 * g.self_loop[node];
            result.n2c[node] = best_c;
            if (best_c != old_c) {
                any_move = true;
                result.moved = true;
            }
        }
        double q = pass_q();
        if (q < prev_q - 1e-9) {
            throw std::logic_error("louvain: local-move pass decreased modularity");
        }
        trace.push_back(q);
        prev_q = q;
    }

    // renumber communities densely
    std::map<int, int> renumber;
    for (auto& c : result.n2c) {
        auto [it, inserted] = renumber.emplace(c, static_cast<int>(renumber.size()));
        c = it->second;
    }
    return result;
}

WeightedGraph aggregate(const WeightedGraph& g, const std::vector<int>& n2c, int communities) {
    WeightedGraph out;
    for (int c = 0; c < communities; ++c) out.add_node("c" + std::to_string(c));
    for (const auto& [key, w] : g.edges) {
        auto [i, j] = key;
        out.add_edge(n2c[static_cast<size_t>(i)], n2c[static_cast<size_t>(j)], w);
    }
    return out;
}

}  // namespace

CommunityPartition louvain(const WeightedGraph& graph, double resolution, uint64_t seed) {
    CommunityPartition result;
    result.assignment.resize(graph.node_count());
    std::iota(result.assignment.begin(), result.assignment.end(), 0);
    if (graph.node_count() == 0) return result;

    std::mt19937_64 rng(seed);
    WeightedGraph level_graph = graph;

    while (true) {
        LocalGraph lg(level_graph);
        LevelResult level = local_moves(lg, resolution, rng, result.pass_trace);
        // map original nodes through this level's assignment
        for (auto& c : result.assignment) c = level.n2c[static_cast<size_t>(c)];
        int communities = 1 + *std::max_element(level.n2c.begin(), level.n2c.end());
        if (!level.moved || communities == static_cast<int>(level_graph.node_count())) break;
        level_graph = aggregate(level_graph, level.n2c, communities);
    }

    // dense ids over the original nodes
    std::map<int, int> renumber;
    for (auto& c : result.assignment) {
        auto [it, inserted] = renumber.emplace(c, static_cast<int>(renumber.size()));
        c = it->second;
    }
    result.modularity = modularity(graph, result.assignment, resolution);
    return result;
}

// ---- store analytics ----

std::vector<int> store_years(const db::Store& store) {
    std::set<int> years;
    for (const auto& v : store.versions) years.insert(util::year_of(v.release_unix));
    return {years.begin(), years.end()};
}

std::vector<TrendRow> yearly_trends(const db::Store& store) {
    std::map<int, TrendRow> rows;
    std::map<int, std::set<std::string>> tpl_names;
    std::map<int, int64_t> loc_sum;
    std::map<int, int> version_year;

    for (const auto& v : store.versions) {
        int y = util::year_of(v.release_unix);
        version_year[v.version_index] = y;
        rows[y].year = y;
        ++rows[y].versions;
    }
    for (const auto& t : store.tpls) tpl_names[version_year.at(t.version_index)].insert(t.name);
    for (const auto& p : store.ptms) ++rows[version_year.at(p.version_index)].ptm_invocations;
    for (const auto& m : store.modules) {
        int y = version_year.at(m.version_index);
        ++rows[y].modules;
        loc_sum[y] += m.loc;
    }

    std::vector<TrendRow> out;
    for (auto& [y, row] : rows) {
        row.distinct_tpls = static_cast<int>(tpl_names[y].size());
        row.avg_modules_per_version =
            row.versions ? static_cast<double>(row.modules) / row.versions : 0.0;
        row.avg_loc_per_module =
            row.modules ? static_cast<double>(loc_sum[y]) / row.modules : 0.0;
        out.push_back(row);
    }
    return out;
}

std::map<int, std::array<double, db::kSizeBucketCount>> size_distribution(const db::Store& store) {
    std::map<int, int> module_count;
    for (const auto& m : store.modules) ++module_count[m.version_index];

    std::map<int, std::array<int, db::kSizeBucketCount>> counts;
    std::map<int, int> totals;
    for (const auto& v : store.versions) {
        int y = util::year_of(v.release_unix);
        int size = module_count.count(v.version_index) ? module_count[v.version_index] : 0;
        if (!counts.count(y)) counts[y] = {};
        ++counts[y][static_cast<size_t>(db::size_bucket(size))];
        ++totals[y];
    }
    std::map<int, std::array<double, db::kSizeBucketCount>> out;
    for (const auto& [y, buckets] : counts) {
        std::array<double, db::kSizeBucketCount> fractions{};
        for (size_t i = 0; i < buckets.size(); ++i) {
            fractions[i] = static_cast<double>(buckets[i]) / totals[y];
        }
        out[y] = fractions;
    }
    return out;
}

WeightedGraph build_dependency_graph(const db::Store& store) {
    WeightedGraph g;
    std::map<std::string, int> node_of;
    for (const auto& r : store.repos) node_of[r.repo] = g.add_node(r.repo);
    for (const auto& f : store.families) {
        std::vector<std::string> repos(f.repositories.begin(), f.repositories.end());
        for (size_t i = 0; i < repos.size(); ++i) {
            for (size_t j = i + 1; j < repos.size(); ++j) {
                g.add_edge(node_of.at(repos[i]), node_of.at(repos[j]), 1.0);
            }
        }
    }
    return g;
}

std::string component_type_name(ComponentType type) {
    switch (type) {
        case ComponentType::Tpl: return "tpl";
        case ComponentType::Ptm: return "ptm";
        case ComponentType::ModuleFamily: return "module-family";
    }
    return "tpl";
}

WeightedGraph build_cousage(const db::Store& store, ComponentType type, int year, int threshold) {
    std::map<int, const db::VersionRow*> version_of;
    for (const auto& v : store.versions) version_of[v.version_index] = &v;

    // per-version component sets for versions released in `year`
    std::map<int, std::set<std::string>> per_version;
    auto add = [&](int version_index, const std::string& id) {
        const db::VersionRow* v = version_of.at(version_index);
        if (util::year_of(v->release_unix) != year) return;
        per_version[version_index].insert(id);
    };
    switch (type) {
        case ComponentType::Tpl:
            for (const auto& t : store.tpls) add(t.version_index, t.name);
            break;
        case ComponentType::Ptm:
            for (const auto& p : store.ptms) {
                if (p.model) add(p.version_index, p.hub + ":" + *p.model);
            }
            break;
        case ComponentType::ModuleFamily:
            for (const auto& m : store.modules) add(m.version_index, m.hash);
            break;
    }

    // pair -> distinct repos with a version of `year` containing both
    std::map<std::pair<std::string, std::string>, std::set<std::string>> pair_repos;
    std::set<std::string> active;
    for (const auto& [vi, comps] : per_version) {
        const std::string& repo = version_of.at(vi)->repo;
        std::vector<std::string> list(comps.begin(), comps.end());
        for (const auto& c : list) active.insert(c);
        for (size_t i = 0; i < list.size(); ++i) {
            for (size_t j = i + 1; j < list.size(); ++j) {
                pair_repos[{list[i], list[j]}].insert(repo);
            }
        }
    }

    WeightedGraph g;
    std::map<std::string, int> node_of;
    for (const auto& id : active) node_of[id] = g.add_node(id);
    for (const auto& [pair, repos] : pair_repos) {
        if (static_cast<int>(repos.size()) >= threshold) {
            g.add_edge(node_of.at(pair.first), node_of.at(pair.second),
                       static_cast<double>(repos.size()));
        }
    }
    return g;
}

std::vector<CommunityDynamicsRow> community_dynamics(const db::Store& store, int threshold,
                                                     uint64_t seed) {
    std::vector<CommunityDynamicsRow> out;
    for (int year : store_years(store)) {
        for (ComponentType type :
             {ComponentType::Tpl, ComponentType::Ptm, ComponentType::ModuleFamily}) {
            WeightedGraph g = build_cousage(store, type, year, threshold);
            CommunityDynamicsRow row;
            row.year = year;
            row.type = type;
            if (g.node_count() == 0) {
                out.push_back(row);
                continue;
            }
            CommunityPartition part = louvain(g, 1.0, seed);
            row.communities = part.community_count();
            row.avg_size = static_cast<double>(g.node_count()) / row.communities;
            out.push_back(row);
        }
    }
    return out;
}

namespace {

// Domain assignment counts over the family members considered in `year`.
std::map<std::string, int> considered_assignments(const clonecore::CloneFamily& family,
                                                  const db::Store& store, int year,
                                                  EntropyMode mode) {
    std::map<int, const db::ModuleRow*> module_of;
    for (const auto& m : store.modules) module_of[m.module_index] = &m;
    std::map<int, const db::VersionRow*> version_of;
    for (const auto& v : store.versions) version_of[v.version_index] = &v;

    std::map<std::string, int> counts;
    for (int member : family.members) {
        auto it = module_of.find(member);
        if (it == module_of.end()) continue;
        int member_year = util::year_of(version_of.at(it->second->version_index)->release_unix);
        bool considered =
            mode == EntropyMode::Cumulative ? member_year <= year : member_year == year;
        if (!considered) continue;
        for (const auto& d : it->second->domains) ++counts[d];
    }
    return counts;
}

}  // namespace

std::optional<double> family_entropy(const clonecore::CloneFamily& family, const db::Store& store,
                                     int year, EntropyMode mode) {
    auto counts = considered_assignments(family, store, year, mode);
    int total = 0;
    for (const auto& [_, c] : counts) total += c;
    if (total == 0) return std::nullopt;
    double h = 0.0;
    for (const auto& [_, c] : counts) {
        double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    return h;
}

std::optional<double> average_entropy(const db::Store& store, int year, EntropyMode mode) {
    double sum = 0.0;
    int n = 0;
    for (const auto& f : store.families) {
        if (auto h = family_entropy(f, store, year, mode)) {
            sum += *h;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

std::vector<EntropyRow> entropy_by_year(const db::Store& store, EntropyMode mode) {
    std::vector<EntropyRow> out;
    for (int year : store_years(store)) {
        double sum = 0.0;
        int n = 0;
        for (const auto& f : store.families) {
            if (auto h = family_entropy(f, store, year, mode)) {
                sum += *h;
                ++n;
            }
        }
        if (n > 0) out.push_back({year, n, sum / n});
    }
    return out;
}

std::vector<OverlapEntry> domain_overlap(const db::Store& store, int year, EntropyMode mode) {
    // families labeled with each domain among the year's considered members
    std::map<std::string, std::set<std::string>> by_domain;  // domain -> family hashes
    for (const auto& f : store.families) {
        auto counts = considered_assignments(f, store, year, mode);
        for (const auto& [domain, _] : counts) by_domain[domain].insert(f.hash);
    }

    const auto& names = db::DomainTaxonomy::domain_names();
    std::vector<OverlapEntry> out;
    for (size_t i = 0; i < names.size(); ++i) {
        for (size_t j = i + 1; j < names.size(); ++j) {
            const auto& a = by_domain[names[i]];
            const auto& b = by_domain[names[j]];
            std::set<std::string> inter, uni;
            std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                                  std::inserter(inter, inter.begin()));
            std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::inserter(uni, uni.begin()));
            if (uni.empty()) continue;
            OverlapEntry entry;
            entry.domain_a = names[i];
            entry.domain_b = names[j];
            entry.percent = 100.0 * static_cast<double>(inter.size()) / uni.size();
            out.push_back(std::move(entry));
        }
    }
    std::sort(out.begin(), out.end(), [](const OverlapEntry& x, const OverlapEntry& y) {
        if (x.percent != y.percent) return x.percent > y.percent;
        if (x.domain_a != y.domain_a) return x.domain_a < y.domain_a;
        return x.domain_b < y.domain_b;
    });
    return out;
}

std::vector<TopModuleEntry> top_reused_modules(const db::Store& store, int year, int k) {
    std::map<int, int> version_year;
    for (const auto& v : store.versions) version_year[v.version_index] = util::year_of(v.release_unix);
    std::map<std::string, int> occurrences;
    for (const auto& m : store.modules) {
        if (version_year.at(m.version_index) == year) ++occurrences[m.hash];
    }

    std::vector<TopModuleEntry> out;
    for (const auto& f : store.families) {
        auto it = occurrences.find(f.hash);
        if (it == occurrences.end() || it->second == 0) continue;
        out.push_back({f.hash, it->second, f.representative, f.first_year});
    }
    std::sort(out.begin(), out.end(), [](const TopModuleEntry& a, const TopModuleEntry& b) {
        if (a.occurrences != b.occurrences) return a.occurrences > b.occurrences;
        if (a.first_year != b.first_year) return a.first_year < b.first_year;
        return a.hash < b.hash;
    });
    if (static_cast<int>(out.size()) > k) out.resize(static_cast<size_t>(k));
    return out;
}

LifespanMatrix lifespan_matrix(const db::Store& store) {
    LifespanMatrix matrix;
    auto years = store_years(store);
    if (years.empty()) return matrix;
    matrix.window = years.back() - years.front() + 1;
    matrix.cells.assign(static_cast<size_t>(matrix.window), {});

    for (const auto& f : store.families) {
        std::set<std::string> domains;
        for (const auto& [d, _] : f.domains) domains.insert(d);
        if (domains.empty()) continue;
        int lifespan = f.lifespan();
        int range = static_cast<int>(domains.size());
        if (lifespan < 1 || lifespan > matrix.window || range < 1 || range > 7) continue;
        ++matrix.cells[static_cast<size_t>(lifespan - 1)][static_cast<size_t>(range - 1)];
    }
    return matrix;
}

}  // namespace nnbom::analytics

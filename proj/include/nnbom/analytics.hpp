#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nnbom/store.hpp"

// Read-only analytics over a closed store: scale trends, dependency and
// co-usage graphs, Louvain communities, domain entropy and overlap, and the
// lifespan x domain-range matrix. Everything is a pure function of the store.
namespace nnbom::analytics {

// Undirected weighted graph; self-loops allowed (used during aggregation).
struct WeightedGraph {
    std::vector<std::string> node_ids;
    std::map<std::pair<int, int>, double> edges;  // key normalized to i <= j

    int add_node(const std::string& id);  // appends; caller keeps ids unique
    void add_edge(int a, int b, double w);
    double total_weight2() const;  // 2m: every edge counted in both directions
    size_t node_count() const { return node_ids.size(); }
};

struct CommunityPartition {
    std::vector<int> assignment;  // node index -> community id (0-based, dense)
    double modularity = 0.0;
    std::vector<double> pass_trace;  // Q after each local-move pass, all levels

    int community_count() const;
};

// Weighted modularity with resolution gamma.
double modularity(const WeightedGraph& graph, const std::vector<int>& assignment,
                  double resolution = 1.0);

// Two-phase Louvain (seeded node order, local moves then aggregation),
// iterated to a fixpoint. Throws std::logic_error if a local-move pass ever
// decreases modularity.
CommunityPartition louvain(const WeightedGraph& graph, double resolution = 1.0,
                           uint64_t seed = 0);

// ---- store analytics ----

struct TrendRow {
    int year = 0;
    int versions = 0;
    int distinct_tpls = 0;
    int ptm_invocations = 0;
    int modules = 0;
    double avg_modules_per_version = 0.0;
    double avg_loc_per_module = 0.0;
};

std::vector<TrendRow> yearly_trends(const db::Store& store);

// year -> fraction of versions per size bucket; fractions sum to 1.
std::map<int, std::array<double, db::kSizeBucketCount>> size_distribution(const db::Store& store);

// Nodes are repo ids; edge weight = number of shared clone families.
WeightedGraph build_dependency_graph(const db::Store& store);

enum class ComponentType { Tpl, Ptm, ModuleFamily };
std::string component_type_name(ComponentType type);

// Nodes: components appearing in a version released in `year`. Edge between
// two components iff at least `threshold` distinct repositories have such a
// version containing both; edge weight = that repository count.
WeightedGraph build_cousage(const db::Store& store, ComponentType type, int year,
                            int threshold = 5);

struct CommunityDynamicsRow {
    int year = 0;
    ComponentType type = ComponentType::Tpl;
    int communities = 0;
    double avg_size = 0.0;
};

std::vector<CommunityDynamicsRow> community_dynamics(const db::Store& store, int threshold = 5,
                                                     uint64_t seed = 0);

enum class EntropyMode { Cumulative, Yearly };

// Entropy of one family's domain assignments over the members considered in
// `year`; nullopt when no considered member carries a domain label.
std::optional<double> family_entropy(const clonecore::CloneFamily& family, const db::Store& store,
                                     int year, EntropyMode mode = EntropyMode::Cumulative);

std::optional<double> average_entropy(const db::Store& store, int year,
                                      EntropyMode mode = EntropyMode::Cumulative);

struct EntropyRow {
    int year = 0;
    int families = 0;  // N: families entering the average
    double average = 0.0;
};

std::vector<EntropyRow> entropy_by_year(const db::Store& store,
                                        EntropyMode mode = EntropyMode::Cumulative);

struct OverlapEntry {
    std::string domain_a, domain_b;  // a < b
    double percent = 0.0;            // P_AB as a percentage
};

// All domain pairs with a nonempty union, ranked by percent descending.
std::vector<OverlapEntry> domain_overlap(const db::Store& store, int year,
                                         EntropyMode mode = EntropyMode::Cumulative);

struct TopModuleEntry {
    std::string hash;
    int occurrences = 0;  // member occurrences in versions released that year
    std::string representative;
    int first_year = 0;
};

std::vector<TopModuleEntry> top_reused_modules(const db::Store& store, int year, int k = 10);

struct LifespanMatrix {
    int window = 0;  // observation window length in years
    // cells[lifespan-1][domain_range-1], lifespan 1..window, range 1..7
    std::vector<std::array<int, 7>> cells;
};

LifespanMatrix lifespan_matrix(const db::Store& store);

// Distinct version release years, ascending.
std::vector<int> store_years(const db::Store& store);

}  // namespace nnbom::analytics

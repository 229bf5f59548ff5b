#pragma once

#include <string>
#include <tuple>
#include <vector>

// Brute-force oracles, written directly from the definitions and kept
// independent of the library implementations they check.
namespace nnbom::testsupport {

struct OracleEdge {
    int a, b;
    double w;
};

// Newman weighted modularity computed straight from the edge list: each edge
// counts in both directions, self-loops contribute twice to the degree.
double oracle_modularity(int nodes, const std::vector<OracleEdge>& edges,
                         const std::vector<int>& assignment);

// Exhaustive best modularity over all partitions (restricted growth strings);
// feasible up to ~10 nodes.
double oracle_best_modularity(int nodes, const std::vector<OracleEdge>& edges,
                              std::vector<int>* best_assignment = nullptr);

// Entropy of a count vector with natural log, -sum p ln p.
double oracle_entropy(const std::vector<int>& counts);

}  // namespace nnbom::testsupport

#include "support/oracles.hpp"

#include <cmath>
#include <map>

namespace nnbom::testsupport {

double oracle_modularity(int nodes, const std::vector<OracleEdge>& edges,
                         const std::vector<int>& assignment) {
    double m2 = 0.0;
    std::vector<double> degree(static_cast<size_t>(nodes), 0.0);
    for (const auto& e : edges) {
        m2 += 2.0 * e.w;
        if (e.a == e.b) {
            degree[static_cast<size_t>(e.a)] += 2.0 * e.w;
        } else {
            degree[static_cast<size_t>(e.a)] += e.w;
            degree[static_cast<size_t>(e.b)] += e.w;
        }
    }
    if (m2 <= 0.0) return 0.0;

    std::map<int, double> in2, tot;
    for (const auto& e : edges) {
        if (assignment[static_cast<size_t>(e.a)] == assignment[static_cast<size_t>(e.b)]) {
            in2[assignment[static_cast<size_t>(e.a)]] += 2.0 * e.w;
        }
    }
    for (int i = 0; i < nodes; ++i) tot[assignment[static_cast<size_t>(i)]] += degree[static_cast<size_t>(i)];

    double q = 0.0;
    for (const auto& [c, t] : tot) {
        double inner = in2.count(c) ? in2[c] : 0.0;
        q += inner / m2 - (t / m2) * (t / m2);
    }
    return q;
}

double oracle_best_modularity(int nodes, const std::vector<OracleEdge>& edges,
                              std::vector<int>* best_assignment) {
    if (nodes == 0) return 0.0;
    std::vector<int> rgs(static_cast<size_t>(nodes), 0);
    std::vector<int> best = rgs;
    double best_q = oracle_modularity(nodes, edges, rgs);

    // iterate restricted growth strings: rgs[0] = 0, rgs[i] <= max(prefix)+1
    while (true) {
        int i = nodes - 1;
        for (; i > 0; --i) {
            int prefix_max = 0;
            for (int j = 0; j < i; ++j) prefix_max = std::max(prefix_max, rgs[static_cast<size_t>(j)]);
            if (rgs[static_cast<size_t>(i)] < prefix_max + 1) {
                ++rgs[static_cast<size_t>(i)];
                for (int j = i + 1; j < nodes; ++j) rgs[static_cast<size_t>(j)] = 0;
                break;
            }
        }
        if (i == 0) break;
        double q = oracle_modularity(nodes, edges, rgs);
        if (q > best_q) {
            best_q = q;
            best = rgs;
        }
    }
    if (best_assignment) *best_assignment = best;
    return best_q;
}

double oracle_entropy(const std::vector<int>& counts) {
    int total = 0;
    for (int c : counts) total += c;
    double h = 0.0;
    for (int c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace nnbom::testsupport

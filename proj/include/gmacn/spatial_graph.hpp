#pragma once

#include <string>

#include "gmacn/matrix.hpp"
#include "gmacn/montage.hpp"

namespace gmacn {

enum class GraphStrategy { kThreshold, kTopK };

// Weighted electrode adjacency plus its cached symmetric-normalized
// propagation matrix. Adjacency is symmetric with a zero diagonal and
// entries in [0,1]; self-loops appear only inside `normalized`.
struct ElectrodeGraph {
    Matrix adjacency;             // N x N
    Matrix normalized;            // D^{-1/2} (E + I) D^{-1/2}
    GraphStrategy strategy = GraphStrategy::kThreshold;
    double parameter = 0.0;       // threshold t, or neighbor count k
    std::string montage_name;
    std::string montage_hash;

    std::size_t node_count() const { return adjacency.rows(); }
    std::string strategy_str() const;

    // Row sums of the adjacency (weighted degree, self-loops excluded).
    std::vector<double> degrees() const;
};

Matrix pairwise_distances(const Montage& m);

// Edge between every pair closer than t, weighted 1/(1 + d/t). The boundary
// d == t is excluded, so nonzero weights lie strictly in (0.5, 1].
ElectrodeGraph build_threshold(const Montage& m, double t);

// Each node's k nearest other nodes (1-based rank, ties broken by montage
// ordinal) get weight 1/(1 + rank/k); everything else stays 0 and the result
// is symmetrized by elementwise max with its transpose.
ElectrodeGraph build_topk(const Montage& m, std::size_t k);

// D^{-1/2} (E + I) D^{-1/2} with D the diagonal degree of E + I.
Matrix normalize_adjacency(const Matrix& adjacency);

// CSV of upper-triangle `i,j,weight` rows plus a JSON sidecar holding the
// strategy, parameter and montage identity.
void save_graph(const ElectrodeGraph& g, const std::string& prefix);
ElectrodeGraph load_graph(const std::string& prefix);

}  // namespace gmacn

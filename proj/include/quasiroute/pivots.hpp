#pragma once

#include <cstdint>
#include <vector>

#include "quasiroute/quasimetric.hpp"

namespace quasiroute {

/// Ordered pivot indices; the first n_seeds entries were fixed before the
/// greedy furthest-first selection.
struct PivotSet {
    std::vector<int> indices;
    int n_seeds = 0;

    int size() const { return static_cast<int>(indices.size()); }
};

/// Node coordinates are the normalized outgoing/incoming distances to the
/// pivot set: coords(v, 2m) = d(v, p_m) / sqrt(2M), coords(v, 2m+1) = d(p_m, v) / sqrt(2M).
struct BfrEmbedding {
    Mat coords;       // n x 2M
    double norm_factor = 0.0;
    PivotSet pivots;
};

struct BourgainConfig {
    int scales = 0;        // J = floor(log2 n)
    int repetitions = 0;   // T, default ceil(log2 n)
    std::uint64_t seed = 0;

    static BourgainConfig defaults(int n, std::uint64_t seed);
};

/// Distortion summary of an embedding against a reference metric.
struct DistortionReport {
    double alpha = 0.0;       // min ||phi_i - phi_j|| / d_ref(i,j)
    double beta = 0.0;        // max ratio
    double distortion = 0.0;  // beta / alpha; +inf when a pair collapses
};

/// Furthest-first traversal under a symmetric reference metric, starting from
/// fixed seeds, with a cached minimum-distance vector. Argmax ties break
/// toward the lowest node index; selected nodes are never reselected.
PivotSet fps_select(const DistanceMatrix& d_fps, int m, const std::vector<int>& init_seeds);

BfrEmbedding bfr_embed(const DistanceMatrix& d, const PivotSet& pivots);

/// Outgoing-only variant used by the bidirectionality checks: n x M, 1/sqrt(M).
Mat frechet_embed_outgoing(const DistanceMatrix& d, const PivotSet& pivots);

/// max over nodes of min over pivots of d_ref(v, p).
double covering_radius(const DistanceMatrix& d_ref, const PivotSet& pivots);

/// s_P(i,j) = max over pivots p of max(|d(i,p)-d(j,p)|, |d(p,i)-d(p,j)|).
double separation_score(const DistanceMatrix& d, const PivotSet& pivots, int i, int j);

/// Random-subset embedding: J scales x T repetitions, coordinate = distance to
/// the sampled subset, empty subsets contribute the constant diam(V), all
/// scaled by 1/sqrt(T*J). Non-expansive w.r.t. the input metric.
Mat bourgain_embed(const DistanceMatrix& d_metric, const BourgainConfig& cfg);

DistortionReport distortion(const DistanceMatrix& d_ref, const Mat& embedding);

/// Inference-time view seeds: phase 1 walks a fixed random permutation of the
/// customers (depot set + one customer per view); once exhausted, phase 2
/// adds views with the depot set + two distinct random customers.
std::vector<std::vector<int>> multiview_pivot_seeds(int n_nodes,
                                                    const std::vector<int>& depot_set,
                                                    int n_aug, std::uint64_t seed);

/// Euclidean distance between two embedding rows.
double embedding_distance(const Mat& e, int i, int j);

}  // namespace quasiroute

#pragma once

#include <vector>

#include "quasiroute/learn.hpp"

namespace quasiroute {

struct SolveReport {
    Solution best;
    double best_cost = 0.0;
    std::vector<double> view_costs;
    double ref_cost = 0.0;
    double gap_percent = 0.0;
    double wall_time_s = 0.0;
};

/// Argmax decoding once per pivot view (re-embedding and re-encoding each
/// time), with the global depot lookahead at multi-depot branching points;
/// keeps the cheapest decoded solution. Reference cost and gap are filled
/// when `with_reference` is set (brute force for n <= 10, else greedy
/// nearest neighbor).
SolveReport greedy_decode(const Instance& inst, const ModelParams& params,
                          const std::vector<std::vector<int>>& views, bool with_reference = false);

/// Mask-respecting nearest-neighbor construction: serves the nearest feasible
/// customer by outgoing distance, returning to the depot (or rotating depots)
/// when none fits.
Solution nearest_neighbor(const Instance& inst);

/// Exhaustive depth-first search over feasible sequences; n <= 10 nodes.
Solution brute_force(const Instance& inst);

/// (cost - ref) / ref * 100; negative when the method beats the reference.
double gap(double cost, double ref);

}  // namespace quasiroute

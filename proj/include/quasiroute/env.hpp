#pragma once

#include <functional>
#include <string>
#include <vector>

#include "quasiroute/variants.hpp"

namespace quasiroute {

/// Mutable decoding state. Load semantics: remaining_load is the vehicle's
/// free/deliverable capacity in [0,1]; linehaul service consumes it, backhaul
/// pickups fill it back toward 1, PD pickups consume and deliveries release.
/// clock and route_used reset on every depot return (one vehicle per route).
struct RolloutState {
    int t = 0;
    int current = -1;
    int first = -1;
    std::vector<std::uint8_t> visited;  // customers only; depots are revisitable
    double remaining_load = 1.0;
    double clock = 0.0;
    double route_used = 0.0;
    double collected_prize = 0.0;
    int origin_depot = -1;
    std::vector<std::uint8_t> open_pickup;
    int n_open_pickups = 0;
    int served_customers = 0;
    bool route_has_backhaul = false;
    double accum_cost = 0.0;
    bool done = false;
};

struct Solution {
    std::vector<int> pi;
};

/// Additive logit offsets: 0 for feasible actions, -kMaskLarge otherwise.
struct Mask {
    std::vector<double> offsets;

    bool feasible(int v) const { return offsets[v] == 0.0; }
    int count_feasible() const {
        int c = 0;
        for (double o : offsets)
            if (o == 0.0) ++c;
        return c;
    }
};

RolloutState reset(const Instance& inst, int start);

/// Model-agnostic feasibility mask for the current state. When `reasons` is
/// given it receives, per node, the first rule that masked it (empty if feasible).
Mask feasible_mask(const RolloutState& state, const Instance& inst,
                   std::vector<std::string>* reasons = nullptr);

/// Applies an unmasked action; throws InvariantViolation on a masked one.
RolloutState step(const RolloutState& state, const Instance& inst, int action);

/// Objective of a structurally valid sequence: directed leg sum with open-route
/// final legs omitted and depot switches free; plus skipped-customer penalties
/// for PC; pure negated prize for OP; cyclic closure for the TSP family.
double route_cost(const Instance& inst, const Solution& sol);

/// Empty list iff re-simulating the sequence through step() never needs a
/// masked action, terminates exactly at the end, and covers all required nodes.
std::vector<std::string> validate_solution(const Instance& inst, const Solution& sol);

/// Per-candidate-depot scorer: returns (best feasible customer probability,
/// that customer's index); probability < 0 means no feasible customer there.
using DepotScorer = std::function<std::pair<double, int>(int depot)>;

/// Multi-depot lookahead: evaluates every candidate depot with depots masked;
/// returns the chosen customer when the current depot wins (ties prefer it),
/// otherwise the winning depot as a switch action.
int lookahead_depot_choice(const RolloutState& state, const Instance& inst,
                           const DepotScorer& scorer);

/// True when node v must be visited for a complete solution.
bool customer_required(const Instance& inst, int v);

}  // namespace quasiroute

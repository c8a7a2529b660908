#include "quasiroute/solve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace quasiroute {

namespace op = ops;

namespace {

// Hypothetical fresh-route state rooted at `depot` (for depot lookahead).
RolloutState fresh_at_depot(const RolloutState& st, const Instance& inst, int depot) {
    RolloutState probe = st;
    probe.current = depot;
    probe.origin_depot = depot;
    probe.clock = inst.spec.params.tw_early;
    probe.route_used = 0.0;
    probe.remaining_load = 1.0;
    probe.route_has_backhaul = false;
    return probe;
}

// Best feasible customer and its probability when decoding from `probe` with
// all depots masked out.
std::pair<double, int> best_customer(const EncodedInstance& encoded, const Instance& inst,
                                     const RolloutState& probe, const ModelConfig& cfg) {
    Mask mask = feasible_mask(probe, inst);
    for (int dep : inst.depots) mask.offsets[dep] = -kMaskLarge;
    bool any = false;
    for (int v = 0; v < inst.n_nodes(); ++v)
        if (mask.feasible(v)) any = true;
    if (!any) return {-1.0, -1};

    const int n = inst.n_nodes();
    std::vector<double> drow(n);
    for (int v = 0; v < n; ++v) drow[v] = encoded.d_norm(probe.current, v);
    Tensor probs = decode_step(encoded.enc, {probe.first}, {probe.current},
                               Tensor::from(1, 1, {problem_state_scalar(probe, inst)}),
                               Tensor::from(1, n, mask.offsets), Tensor::from(1, n, drow), cfg);
    double best_p = -1.0;
    int best_v = -1;
    for (int v = 0; v < n; ++v)
        if (mask.feasible(v) && probs.at(0, v) > best_p) {
            best_p = probs.at(0, v);
            best_v = v;
        }
    return {best_p, best_v};
}

Solution decode_one_view(const Instance& inst, const ModelParams& params,
                         const EncodedInstance& encoded, double* cost_out) {
    const int n = inst.n_nodes();
    const int start = inst.spec.has_depot() ? 0 : 0;
    RolloutState st = reset(inst, start);
    Solution sol;
    sol.pi.push_back(start);

    const int max_steps = 16 * n + 16;
    for (int stepno = 0; stepno < max_steps && !st.done; ++stepno) {
        int action = -1;
        const bool branching = inst.spec.flags.multi_depot && inst.spec.has_depot() &&
                               inst.is_depot(st.current) &&
                               st.served_customers < inst.n_customers;
        if (branching) {
            DepotScorer scorer = [&](int dep) {
                return best_customer(encoded, inst, fresh_at_depot(st, inst, dep), params.cfg);
            };
            action = lookahead_depot_choice(st, inst, scorer);
        } else {
            Mask mask = feasible_mask(st, inst);
            std::vector<double> drow(n);
            for (int v = 0; v < n; ++v) drow[v] = encoded.d_norm(st.current, v);
            Tensor probs = decode_step(encoded.enc, {st.first}, {st.current},
                                       Tensor::from(1, 1, {problem_state_scalar(st, inst)}),
                                       Tensor::from(1, n, mask.offsets),
                                       Tensor::from(1, n, drow), params.cfg);
            double best_p = -1.0;
            for (int v = 0; v < n; ++v)
                if (mask.feasible(v) && probs.at(0, v) > best_p) {
                    best_p = probs.at(0, v);
                    action = v;
                }
        }
        if (action < 0) throw InvariantViolation("greedy_decode: no action available");
        st = step(st, inst, action);
        sol.pi.push_back(action);
    }
    if (!st.done) throw InvariantViolation("greedy_decode: rollout did not terminate");
    *cost_out = st.accum_cost;
    return sol;
}

}  // namespace

SolveReport greedy_decode(const Instance& inst, const ModelParams& params,
                          const std::vector<std::vector<int>>& views, bool with_reference) {
    if (views.empty()) throw InvalidInput("greedy_decode: need at least one view");
    const auto t0 = std::chrono::steady_clock::now();
    SolveReport report;
    report.best_cost = std::numeric_limits<double>::infinity();
    for (const auto& seeds : views) {
        EncodedInstance encoded = encode_instance(inst, params, seeds);
        double cost = 0.0;
        Solution sol = decode_one_view(inst, params, encoded, &cost);
        report.view_costs.push_back(cost);
        if (cost < report.best_cost) {
            report.best_cost = cost;
            report.best = std::move(sol);
        }
    }
    if (with_reference) {
        Solution ref = inst.n_nodes() <= 10 ? brute_force(inst) : nearest_neighbor(inst);
        report.ref_cost = route_cost(inst, ref);
        report.gap_percent = report.ref_cost > 0.0 ? gap(report.best_cost, report.ref_cost) : 0.0;
    }
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

Solution nearest_neighbor(const Instance& inst) {
    const int n = inst.n_nodes();
    const int start = inst.spec.has_depot() ? 0 : 0;
    RolloutState st = reset(inst, start);
    Solution sol;
    sol.pi.push_back(start);

    const int max_steps = 16 * n + 16;
    for (int stepno = 0; stepno < max_steps && !st.done; ++stepno) {
        Mask mask = feasible_mask(st, inst);
        int action = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int v = 0; v < n; ++v) {
            if (!mask.feasible(v) || (inst.spec.has_depot() && inst.is_depot(v))) continue;
            const double d = inst.dist.at(st.current, v);
            if (d < best_d) {
                best_d = d;
                action = v;
            }
        }
        if (action < 0) {
            // no feasible customer from here: close the route or rotate depots
            if (inst.spec.has_depot() && inst.is_depot(st.current)) {
                const int idx = st.current;
                action = inst.depots[(idx + 1) % inst.depots.size()];
            } else {
                action = st.origin_depot;
            }
            if (!mask.feasible(action))
                throw InvariantViolation("nearest_neighbor: dead end");
        }
        st = step(st, inst, action);
        sol.pi.push_back(action);
    }
    if (!st.done) throw InvariantViolation("nearest_neighbor: did not terminate");
    return sol;
}

namespace {

struct BruteSearch {
    const Instance& inst;
    double best_cost = std::numeric_limits<double>::infinity();
    Solution best;
    std::vector<int> stack;
    bool prune_by_cost = true;  // invalid when step rewards can be negative (OP)

    void dfs(const RolloutState& st, bool last_was_switch) {
        if (st.done) {
            if (st.accum_cost < best_cost) {
                best_cost = st.accum_cost;
                best.pi = stack;
            }
            return;
        }
        if (prune_by_cost && st.accum_cost >= best_cost) return;
        Mask mask = feasible_mask(st, inst);
        for (int v = 0; v < inst.n_nodes(); ++v) {
            if (!mask.feasible(v)) continue;
            const bool is_switch = inst.spec.has_depot() && inst.is_depot(st.current) &&
                                   inst.is_depot(v);
            if (is_switch && last_was_switch) continue;  // one hop reaches any depot
            stack.push_back(v);
            dfs(step(st, inst, v), is_switch);
            stack.pop_back();
        }
    }
};

}  // namespace

Solution brute_force(const Instance& inst) {
    if (inst.n_nodes() > 10) throw InvalidInput("brute_force: limited to 10 nodes");
    BruteSearch search{inst};
    search.prune_by_cost = !inst.spec.flags.orienteering;
    const int start = inst.spec.has_depot() ? 0 : 0;
    RolloutState st = reset(inst, start);
    search.stack.push_back(start);
    if (st.done) {  // single-node edge
        search.best = Solution{search.stack};
        return search.best;
    }
    search.dfs(st, false);
    if (!std::isfinite(search.best_cost))
        throw InvariantViolation("brute_force: no feasible solution found");
    return search.best;
}

double gap(double cost, double ref) {
    if (!(ref > 0.0)) throw DomainError("gap: reference must be positive");
    return (cost - ref) / ref * 100.0;
}

}  // namespace quasiroute

#include "quasiroute/env.hpp"

#include <algorithm>
#include <cmath>

namespace quasiroute {

namespace {

constexpr double kEps = 1e-9;

bool optional_customers(const ProblemSpec& spec) {
    return spec.flags.orienteering || spec.flags.prize_collecting;
}

}  // namespace

bool customer_required(const Instance& inst, int v) {
    if (inst.is_depot(v)) return false;
    return !optional_customers(inst.spec);
}

RolloutState reset(const Instance& inst, int start) {
    const int n = inst.n_nodes();
    if (start < 0 || start >= n) throw InvalidInput("reset: start out of range");
    RolloutState st;
    st.visited.assign(n, 0);
    st.open_pickup.assign(n, 0);
    st.t = 1;
    st.first = start;
    st.current = start;
    st.clock = inst.spec.params.tw_early;
    if (inst.spec.has_depot()) {
        if (!inst.is_depot(start)) throw InvalidInput("reset: depot variants must start at a depot");
        st.origin_depot = start;
    } else {
        st.visited[start] = 1;
        st.served_customers = 1;
        if (st.served_customers == inst.n_customers) st.done = true;  // 1-node tour
    }
    return st;
}

Mask feasible_mask(const RolloutState& st, const Instance& inst, std::vector<std::string>* reasons) {
    if (st.done) throw InvalidInput("feasible_mask: state is terminal");
    const int n = inst.n_nodes();
    const ProblemSpec& spec = inst.spec;
    const ConstraintFlags& f = spec.flags;
    Mask mask;
    mask.offsets.assign(n, 0.0);
    if (reasons != nullptr) reasons->assign(n, "");

    const bool at_depot = spec.has_depot() && inst.is_depot(st.current);
    const bool all_served = st.served_customers == inst.n_customers;

    bool unvisited_linehaul = false;
    if (spec.has_backhaul()) {
        for (int v = inst.first_customer(); v < n; ++v)
            if (!st.visited[v] && inst.role_linehaul[v]) {
                unvisited_linehaul = true;
                break;
            }
    }

    auto block = [&](int v, const std::string& why) {
        if (mask.offsets[v] == 0.0) {
            mask.offsets[v] = -kMaskLarge;
            if (reasons != nullptr) (*reasons)[v] = why;
        }
    };

    for (int v = 0; v < n; ++v) {
        if (spec.has_depot() && inst.is_depot(v)) {
            if (at_depot) {
                if (v == st.current) block(v, "depot self-loop");
                // other depots stay open as fleet-switch actions (MD)
                continue;
            }
            if (v != st.origin_depot) {
                block(v, "return-to-origin: non-origin depot mid-route");
                continue;
            }
            if (f.pickup_delivery && st.n_open_pickups > 0) {
                block(v, "pickup-delivery: open pickups must be delivered before depot");
                continue;
            }
            if (f.prize_collecting && !all_served && st.collected_prize < inst.prize_target - kEps) {
                block(v, "prize-collecting: minimum prize not reached");
                continue;
            }
            if (spec.single_route() && !optional_customers(spec) && !all_served) {
                block(v, "single-route variant: customers remain");
                continue;
            }
            if (f.time_windows && !f.open_route) {
                const double arrival = st.clock + inst.dist.at(st.current, v);
                if (arrival > inst.tw_late[v] + kEps) {
                    block(v, "time window: depot closes before arrival");
                    continue;
                }
            }
            if (f.duration && !f.open_route &&
                st.route_used + inst.dist.at(st.current, v) > spec.params.duration_limit + kEps) {
                block(v, "duration: return leg exceeds limit");
            }
            continue;
        }

        // customer node (or plain TSP node)
        if (st.visited[v]) {
            block(v, "already visited");
            continue;
        }
        if (!spec.has_depot()) continue;  // TSP family: visitation is the only rule

        const double leg = inst.dist.at(st.current, v);

        if (f.capacity && !f.pickup_delivery) {
            const double delta = inst.demand[v];
            if (delta > 0.0) {
                if (delta > st.remaining_load + kEps) {
                    block(v, "capacity: demand exceeds remaining load");
                    continue;
                }
            } else if (spec.has_backhaul()) {
                // A route opened by a backhaul starts with zero delivery load.
                const double base = at_depot ? 0.0 : st.remaining_load;
                if (base - delta > 1.0 + kEps) {
                    block(v, "capacity: backhaul pickup exceeds capacity");
                    continue;
                }
            }
        }
        if (f.capacity && f.pickup_delivery && inst.role_pickup[v]) {
            if (-inst.demand[v] > st.remaining_load + kEps) {
                block(v, "capacity: pickup exceeds remaining load");
                continue;
            }
        }

        if (spec.has_backhaul() && at_depot && inst.role_backhaul[v] && unvisited_linehaul) {
            block(v, "backhaul: first customer in a route must be a linehaul");
            continue;
        }
        if (f.backhaul_priority && st.route_has_backhaul && inst.role_linehaul[v]) {
            block(v, "backhaul priority: linehaul after backhaul within a route");
            continue;
        }
        if (f.pickup_delivery && inst.role_delivery[v] && !st.open_pickup[inst.pd_partner(v)]) {
            block(v, "pickup-delivery: delivery before its pickup");
            continue;
        }

        if (f.time_windows) {
            const double start_service = std::max(st.clock + leg, inst.tw_early[v]);
            if (start_service > inst.tw_late[v] + kEps) {
                block(v, "time window: arrival after latest service start");
                continue;
            }
            if (!f.open_route) {
                const double back = start_service + inst.service[v] + inst.dist.at(v, st.origin_depot);
                if (back > inst.tw_late[st.origin_depot] + kEps) {
                    block(v, "time window: serving prevents timely depot return");
                    continue;
                }
            }
        }
        if (f.duration) {
            const double ret = f.open_route ? 0.0 : inst.dist.at(v, st.origin_depot);
            if (st.route_used + leg + ret > spec.params.duration_limit + kEps) {
                block(v, "duration: leg exceeds route limit");
                continue;
            }
        }
        if (f.orienteering) {
            const double ret = inst.dist.at(v, st.origin_depot);
            if (st.route_used + leg + ret > spec.params.op_max_length + kEps)
                block(v, "orienteering: length budget exhausted");
        }
    }
    return mask;
}

RolloutState step(const RolloutState& state, const Instance& inst, int action) {
    if (state.done) throw InvariantViolation("step: state is terminal");
    const Mask mask = feasible_mask(state, inst);
    if (action < 0 || action >= inst.n_nodes() || !mask.feasible(action))
        throw InvariantViolation("step: masked action " + std::to_string(action));

    RolloutState st = state;
    const ProblemSpec& spec = inst.spec;
    const ConstraintFlags& f = spec.flags;

    if (!spec.has_depot()) {
        st.accum_cost += inst.dist.at(st.current, action);
        st.visited[action] = 1;
        st.served_customers += 1;
        st.current = action;
        st.t += 1;
        if (st.served_customers == inst.n_customers) {
            st.accum_cost += inst.dist.at(st.current, st.first);  // close the tour
            st.done = true;
        }
        return st;
    }

    const bool from_depot = inst.is_depot(st.current);
    if (inst.is_depot(action)) {
        if (from_depot) {
            // zero-cost fleet switch; no clocks move
            st.origin_depot = action;
            st.current = action;
            st.t += 1;
            return st;
        }
        if (!f.open_route && !f.orienteering) st.accum_cost += inst.dist.at(st.current, action);
        st.current = action;
        st.t += 1;
        st.clock = spec.params.tw_early;
        st.route_used = 0.0;
        st.remaining_load = 1.0;
        st.route_has_backhaul = false;
        // PC/OP end on any depot return; others end once everyone is served.
        if (optional_customers(spec) || st.served_customers == inst.n_customers) {
            st.done = true;
            if (f.prize_collecting) {
                for (int v = inst.first_customer(); v < inst.n_nodes(); ++v)
                    if (!st.visited[v]) st.accum_cost += inst.penalty[v];
            }
        }
        return st;
    }

    // serve a customer
    const double leg = inst.dist.at(st.current, action);
    st.accum_cost += f.orienteering ? 0.0 : leg;
    st.route_used += leg;
    if (f.time_windows)
        st.clock = std::max(st.clock + leg, inst.tw_early[action]) + inst.service[action];
    else
        st.clock += leg;

    if (f.capacity) {
        const double delta = inst.demand[action];
        if (f.pickup_delivery) {
            st.remaining_load += delta;
        } else {
            if (from_depot && spec.has_backhaul() && delta < 0.0) st.remaining_load = 0.0;
            st.remaining_load -= delta;
        }
        st.remaining_load = std::clamp(st.remaining_load, 0.0, 1.0);
    }
    if (f.pickup_delivery) {
        if (inst.role_pickup[action]) {
            st.open_pickup[action] = 1;
            st.n_open_pickups += 1;
        } else if (inst.role_delivery[action]) {
            const int partner = inst.pd_partner(action);
            st.open_pickup[partner] = 0;
            st.n_open_pickups -= 1;
        }
    }
    if (f.orienteering || f.prize_collecting) {
        st.collected_prize += inst.prize[action];
        if (f.orienteering) st.accum_cost -= inst.prize[action];
    }
    if (spec.has_backhaul() && inst.role_backhaul[action]) st.route_has_backhaul = true;

    st.visited[action] = 1;
    st.served_customers += 1;
    st.current = action;
    st.t += 1;
    return st;
}

double route_cost(const Instance& inst, const Solution& sol) {
    const ProblemSpec& spec = inst.spec;
    const ConstraintFlags& f = spec.flags;
    if (sol.pi.empty()) throw InvalidInput("route_cost: empty sequence");
    for (int v : sol.pi)
        if (v < 0 || v >= inst.n_nodes()) throw InvalidInput("route_cost: node index out of range");

    if (!spec.has_depot()) {
        double cost = 0.0;
        for (std::size_t t = 1; t < sol.pi.size(); ++t)
            cost += inst.dist.at(sol.pi[t - 1], sol.pi[t]);
        cost += inst.dist.at(sol.pi.back(), sol.pi.front());
        return cost;
    }

    if (!inst.is_depot(sol.pi.front()))
        throw InvalidInput("route_cost: depot variants must start at a depot");
    std::vector<std::uint8_t> visited(inst.n_nodes(), 0);
    double cost = 0.0;
    for (std::size_t t = 1; t < sol.pi.size(); ++t) {
        const int a = sol.pi[t - 1];
        const int b = sol.pi[t];
        const bool a_dep = inst.is_depot(a);
        const bool b_dep = inst.is_depot(b);
        if (a_dep && b_dep) continue;  // fleet switch, free
        if (b_dep) {
            if (!f.open_route) cost += f.orienteering ? 0.0 : inst.dist.at(a, b);
            continue;
        }
        if (!f.orienteering) cost += inst.dist.at(a, b);
        visited[b] = 1;
    }
    if (f.orienteering) {
        for (int v = inst.first_customer(); v < inst.n_nodes(); ++v)
            if (visited[v]) cost -= inst.prize[v];
    }
    if (f.prize_collecting) {
        for (int v = inst.first_customer(); v < inst.n_nodes(); ++v)
            if (!visited[v]) cost += inst.penalty[v];
    }
    return cost;
}

std::vector<std::string> validate_solution(const Instance& inst, const Solution& sol) {
    std::vector<std::string> violations;
    if (sol.pi.empty()) return {"empty solution"};
    for (int v : sol.pi)
        if (v < 0 || v >= inst.n_nodes()) return {"node index out of range"};
    if (inst.spec.has_depot() && !inst.is_depot(sol.pi.front()))
        return {"solution must start at a depot"};

    RolloutState st = reset(inst, sol.pi.front());
    for (std::size_t t = 1; t < sol.pi.size(); ++t) {
        if (st.done) {
            violations.push_back("actions after terminal state at position " + std::to_string(t));
            break;
        }
        std::vector<std::string> reasons;
        const Mask mask = feasible_mask(st, inst, &reasons);
        const int a = sol.pi[t];
        if (!mask.feasible(a)) {
            violations.push_back("step " + std::to_string(t) + " -> node " + std::to_string(a) +
                                 ": " + reasons[a]);
            break;
        }
        st = step(st, inst, a);
    }
    if (violations.empty()) {
        for (int v = 0; v < inst.n_nodes(); ++v)
            if (customer_required(inst, v) && !st.visited[v])
                violations.push_back("coverage: customer " + std::to_string(v) + " unvisited");
        if (!st.done && violations.empty()) violations.push_back("sequence ends before terminal state");
    }
    return violations;
}

int lookahead_depot_choice(const RolloutState& st, const Instance& inst, const DepotScorer& scorer) {
    if (!inst.spec.has_depot() || !inst.is_depot(st.current))
        throw InvalidInput("lookahead_depot_choice: current node is not a depot");
    if (st.served_customers >= inst.n_customers)
        throw InvalidInput("lookahead_depot_choice: no customers remain");

    int best_depot = -1;
    int best_customer = -1;
    double best_p = -1.0;
    // Current depot first so ties resolve toward it.
    std::vector<int> order{st.current};
    for (int dep : inst.depots)
        if (dep != st.current) order.push_back(dep);
    for (int dep : order) {
        const auto [p, customer] = scorer(dep);
        if (customer >= 0 && p > best_p) {
            best_p = p;
            best_depot = dep;
            best_customer = customer;
        }
    }
    if (best_depot < 0)
        throw InvariantViolation("lookahead_depot_choice: no feasible customer from any depot");
    return best_depot == st.current ? best_customer : best_depot;
}

}  // namespace quasiroute

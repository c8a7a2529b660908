#include <cmath>

#include "doctest.h"
#include "quasiroute/env.hpp"

using namespace quasiroute;

namespace {

DistanceMatrix from_rows(std::vector<std::vector<double>> rows, bool symmetric) {
    DistanceMatrix d(static_cast<int>(rows.size()), symmetric);
    for (int i = 0; i < d.n; ++i)
        for (int j = 0; j < d.n; ++j) d.at(i, j) = rows[i][j];
    return d;
}

// Small hand-built CVRP: depot 0, three customers with chosen demands.
Instance tiny_cvrp(std::vector<double> demands_over_50) {
    Instance inst;
    inst.spec = spec_by_name("CVRP");
    const int n = 1 + static_cast<int>(demands_over_50.size());
    Coordinates c;
    for (int i = 0; i < n; ++i) c.points.emplace_back(0.1 * i, 0.05 * i * i);
    inst.coords = c;
    inst.dist = euclidean_matrix(c);
    inst.depots = {0};
    inst.n_customers = n - 1;
    inst.demand.assign(n, 0.0);
    inst.prize.assign(n, 0.0);
    inst.penalty.assign(n, 0.0);
    inst.tw_early.assign(n, 0.0);
    inst.tw_late.assign(n, 0.0);
    inst.service.assign(n, 0.0);
    inst.role_pickup.assign(n, 0);
    inst.role_delivery.assign(n, 0);
    inst.role_backhaul.assign(n, 0);
    inst.role_linehaul.assign(n, 0);
    for (int k = 0; k < inst.n_customers; ++k) {
        inst.demand[k + 1] = demands_over_50[k];
        inst.role_delivery[k + 1] = 1;
    }
    return inst;
}

// Uniform random rollout through the mask; returns the sequence.
Solution random_rollout(const Instance& inst, std::uint64_t seed, int start) {
    Rng rng(seed);
    RolloutState st = reset(inst, start);
    Solution sol;
    sol.pi.push_back(start);
    int guard = 60 * inst.n_nodes() + 60;
    while (!st.done && guard-- > 0) {
        Mask mask = feasible_mask(st, inst);
        std::vector<int> options;
        for (int v = 0; v < inst.n_nodes(); ++v)
            if (mask.feasible(v)) options.push_back(v);
        REQUIRE_FALSE(options.empty());
        const int a = options[rng.next_below(options.size())];
        st = step(st, inst, a);
        sol.pi.push_back(a);
    }
    REQUIRE(st.done);
    return sol;
}

}  // namespace

TEST_SUITE("env") {

TEST_CASE("reset basics") {
    Instance cvrp = make_instance(spec_by_name("CVRP"), 8, 1);
    RolloutState st = reset(cvrp, 0);
    CHECK(st.remaining_load == 1.0);
    CHECK(st.origin_depot == 0);
    CHECK_FALSE(st.done);

    Instance tsp = make_instance(spec_by_name("TSP"), 8, 1);
    RolloutState ts = reset(tsp, 5);
    CHECK(ts.first == 5);
    CHECK(ts.current == 5);
    CHECK(ts.visited[5] == 1);

    Instance md = make_instance(spec_by_name("MDCVRP"), 8, 1);
    RolloutState ms = reset(md, 2);
    CHECK(ms.origin_depot == 2);
    CHECK_THROWS_AS(reset(cvrp, 3), InvalidInput);  // customer start in a depot variant
}

TEST_CASE("capacity mask: demand-4 node blocked at load 3/50") {
    Instance inst = tiny_cvrp({2.0 / 50, 4.0 / 50, 5.0 / 50});
    RolloutState st = reset(inst, 0);
    st = step(st, inst, 3);  // consume 5/50
    st.remaining_load = 3.0 / 50;
    Mask mask = feasible_mask(st, inst);
    CHECK(mask.feasible(1));        // demand 2 fits
    CHECK_FALSE(mask.feasible(2));  // demand 4 exceeds load
    CHECK(mask.feasible(0));        // depot return open
}

TEST_CASE("all customers visited leaves only the depot") {
    Instance inst = tiny_cvrp({1.0 / 50, 1.0 / 50});
    RolloutState st = reset(inst, 0);
    st = step(st, inst, 1);
    st = step(st, inst, 2);
    Mask mask = feasible_mask(st, inst);
    CHECK(mask.count_feasible() == 1);
    CHECK(mask.feasible(0));
    st = step(st, inst, 0);
    CHECK(st.done);
}

TEST_CASE("masked action raises") {
    Instance inst = tiny_cvrp({1.0 / 50});
    RolloutState st = reset(inst, 0);
    st = step(st, inst, 1);
    CHECK_THROWS_AS(step(st, inst, 1), InvariantViolation);  // already visited
}

TEST_CASE("TW clock update uses max(arrival, e) + service") {
    Instance inst = make_instance(spec_by_name("CVRPTW"), 6, 7);
    RolloutState st = reset(inst, 0);
    Mask mask = feasible_mask(st, inst);
    int pick = -1;
    for (int v = 1; v < inst.n_nodes(); ++v)
        if (mask.feasible(v)) {
            pick = v;
            break;
        }
    REQUIRE(pick > 0);
    RolloutState nxt = step(st, inst, pick);
    const double arrival = st.clock + inst.dist.at(0, pick);
    CHECK(nxt.clock ==
          doctest::Approx(std::max(arrival, inst.tw_early[pick]) + 0.2).epsilon(1e-12));
}

TEST_CASE("multi-depot: mid-route non-origin depots masked, depot switch free") {
    Instance inst = make_instance(spec_by_name("MDCVRP"), 6, 3);
    RolloutState st = reset(inst, 1);
    Mask at_depot = feasible_mask(st, inst);
    CHECK_FALSE(at_depot.feasible(1));  // self-loop
    CHECK(at_depot.feasible(0));        // switch options
    CHECK(at_depot.feasible(2));

    RolloutState sw = step(st, inst, 2);  // zero-cost switch
    CHECK(sw.origin_depot == 2);
    CHECK(sw.accum_cost == 0.0);
    CHECK(sw.clock == st.clock);
    CHECK(sw.route_used == 0.0);

    Mask m2 = feasible_mask(sw, inst);
    int customer = -1;
    for (int v = 3; v < inst.n_nodes(); ++v)
        if (m2.feasible(v)) {
            customer = v;
            break;
        }
    REQUIRE(customer > 0);
    RolloutState mid = step(sw, inst, customer);
    Mask m3 = feasible_mask(mid, inst);
    CHECK_FALSE(m3.feasible(0));
    CHECK_FALSE(m3.feasible(1));
    CHECK(m3.feasible(2));  // only the origin depot
}

TEST_CASE("PD bookkeeping and precedence") {
    Instance inst = make_instance(spec_by_name("PDTSP"), 6, 5);
    RolloutState st = reset(inst, 0);
    Mask m0 = feasible_mask(st, inst);
    for (int k = 0; k < 3; ++k) {
        CHECK(m0.feasible(1 + k));        // pickups open
        CHECK_FALSE(m0.feasible(4 + k));  // deliveries blocked before pickup
    }
    CHECK_FALSE(m0.feasible(0));  // single-route variant: no early return

    RolloutState p1 = step(st, inst, 1);
    CHECK(p1.open_pickup[1] == 1);
    CHECK(p1.n_open_pickups == 1);
    Mask m1 = feasible_mask(p1, inst);
    CHECK(m1.feasible(4));        // partner now deliverable
    CHECK_FALSE(m1.feasible(5));  // other deliveries still blocked
    CHECK_FALSE(m1.feasible(0));  // open pickup forbids the depot

    RolloutState p2 = step(p1, inst, 4);
    CHECK(p2.open_pickup[1] == 0);
    CHECK(p2.n_open_pickups == 0);
}

TEST_CASE("backhaul rules: first customer linehaul, BP phase lock") {
    Instance inst = make_instance(spec_by_name("CVRPBP"), 10, 21);
    RolloutState st = reset(inst, 0);
    Mask m0 = feasible_mask(st, inst);
    for (int v = 1; v < inst.n_nodes(); ++v) {
        if (inst.role_backhaul[v]) CHECK_FALSE(m0.feasible(v));
    }
    // serve a linehaul, then a backhaul; afterwards linehauls are locked out
    int line = -1, back = -1;
    for (int v = 1; v < inst.n_nodes(); ++v) {
        if (line < 0 && inst.role_linehaul[v]) line = v;
        if (back < 0 && inst.role_backhaul[v]) back = v;
    }
    REQUIRE(line > 0);
    REQUIRE(back > 0);
    RolloutState s1 = step(st, inst, line);
    Mask m1 = feasible_mask(s1, inst);
    CHECK(m1.feasible(back));
    RolloutState s2 = step(s1, inst, back);
    Mask m2 = feasible_mask(s2, inst);
    for (int v = 1; v < inst.n_nodes(); ++v)
        if (inst.role_linehaul[v] && !s2.visited[v]) CHECK_FALSE(m2.feasible(v));
}

TEST_CASE("backhaul-opened route starts with zero load") {
    Instance inst = make_instance(spec_by_name("CVRPB"), 10, 8);
    // visit everything linehaul first, so only backhauls remain
    RolloutState st = reset(inst, 0);
    for (int v = 1; v < inst.n_nodes(); ++v)
        if (inst.role_linehaul[v]) {
            st.visited[v] = 1;
            st.served_customers += 1;
        }
    Mask m = feasible_mask(st, inst);
    int back = -1;
    for (int v = 1; v < inst.n_nodes(); ++v)
        if (inst.role_backhaul[v] && m.feasible(v)) {
            back = v;
            break;
        }
    REQUIRE(back > 0);
    RolloutState s1 = step(st, inst, back);
    CHECK(s1.remaining_load == doctest::Approx(-inst.demand[back]).epsilon(1e-12));
}

TEST_CASE("route_cost: closed, open, and the asymmetric closure tour") {
    Instance inst = tiny_cvrp({1.0 / 50});
    Solution sol;
    sol.pi = {0, 1, 0};
    CHECK(route_cost(inst, sol) ==
          doctest::Approx(inst.dist.at(0, 1) + inst.dist.at(1, 0)).epsilon(1e-12));

    Instance open = inst;
    open.spec = spec_by_name("OCVRP");
    CHECK(route_cost(open, sol) == doctest::Approx(inst.dist.at(0, 1)).epsilon(1e-12));

    // ATSP over the hand-closure matrix: 0 -> 1 -> 2 -> 0 costs 5 + 4 + 1
    Instance atsp;
    atsp.spec = spec_by_name("ATSP");
    atsp.dist = from_rows({{0, 5, 2}, {5, 0, 4}, {1, 6, 0}}, false);
    atsp.n_customers = 3;
    atsp.demand.assign(3, 0.0);
    atsp.prize.assign(3, 0.0);
    atsp.penalty.assign(3, 0.0);
    atsp.tw_early.assign(3, 0.0);
    atsp.tw_late.assign(3, 0.0);
    atsp.service.assign(3, 0.0);
    atsp.role_pickup.assign(3, 0);
    atsp.role_delivery.assign(3, 0);
    atsp.role_backhaul.assign(3, 0);
    atsp.role_linehaul.assign(3, 0);
    Solution tour;
    tour.pi = {0, 1, 2};
    CHECK(route_cost(atsp, tour) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("depot switch legs never change route cost") {
    Instance inst = make_instance(spec_by_name("MDCVRP"), 5, 13);
    Solution plain = random_rollout(inst, 3, 0);
    const double base = route_cost(inst, plain);
    Solution padded;
    padded.pi.push_back(plain.pi.front());
    padded.pi.push_back(1);  // extra switch before anything else
    padded.pi.push_back(0);
    for (std::size_t i = 1; i < plain.pi.size(); ++i) padded.pi.push_back(plain.pi[i]);
    CHECK(route_cost(inst, padded) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("validate_solution catches manual corruption") {
    Instance pd = make_instance(spec_by_name("PDTSP"), 6, 5);
    Solution good = random_rollout(pd, 9, 0);
    CHECK(validate_solution(pd, good).empty());

    // swap a pickup/delivery pair -> precedence violation
    Solution bad = good;
    for (std::size_t i = 1; i + 1 < bad.pi.size(); ++i)
        for (std::size_t j = i + 1; j + 1 < bad.pi.size(); ++j)
            if (!pd.is_depot(bad.pi[i]) && !pd.is_depot(bad.pi[j]) &&
                pd.role_pickup[bad.pi[i]] && pd.pd_partner(bad.pi[i]) == bad.pi[j]) {
                std::swap(bad.pi[i], bad.pi[j]);
                goto swapped;
            }
swapped:;
    auto violations = validate_solution(pd, bad);
    REQUIRE_FALSE(violations.empty());
    CHECK(violations.front().find("delivery before its pickup") != std::string::npos);

    // dropping a CVRP customer -> coverage violation
    Instance cvrp = tiny_cvrp({1.0 / 50, 1.0 / 50});
    Solution missing;
    missing.pi = {0, 1, 0};
    auto v2 = validate_solution(cvrp, missing);
    REQUIRE_FALSE(v2.empty());
    bool coverage = false;
    for (auto& s : v2) coverage = coverage || s.find("coverage") != std::string::npos;
    CHECK(coverage);
}

TEST_CASE("cost consistency: step accumulation equals route_cost") {
    for (const char* name : {"CVRP", "OCVRP", "ACVRPBLTW", "MDCVRPTW", "PDCVRP", "PCTSP", "OP", "TSP"}) {
        Instance inst = make_instance(spec_by_name(name), 8, 77);
        const int start = inst.spec.has_depot() ? 0 : 2;
        Rng rng(5);
        RolloutState st = reset(inst, start);
        Solution sol;
        sol.pi.push_back(start);
        while (!st.done) {
            Mask mask = feasible_mask(st, inst);
            std::vector<int> options;
            for (int v = 0; v < inst.n_nodes(); ++v)
                if (mask.feasible(v)) options.push_back(v);
            REQUIRE_FALSE(options.empty());
            const int a = options[rng.next_below(options.size())];
            st = step(st, inst, a);
            sol.pi.push_back(a);
        }
        CHECK(route_cost(inst, sol) == doctest::Approx(st.accum_cost).epsilon(1e-9));
        CHECK(validate_solution(inst, sol).empty());
    }
}

TEST_CASE("open-route cost never exceeds the closed cost of the same sequence") {
    Instance closed = make_instance(spec_by_name("CVRP"), 10, 31);
    Instance open = closed;
    open.spec = spec_by_name("OCVRP");
    for (std::uint64_t s = 0; s < 5; ++s) {
        Solution sol = random_rollout(closed, s, 0);
        CHECK(route_cost(open, sol) <= route_cost(closed, sol) + 1e-12);
    }
}

TEST_CASE("PC: depot gated by the prize target") {
    Instance inst = make_instance(spec_by_name("PCTSP"), 12, 19);
    RolloutState st = reset(inst, 0);
    Mask m0 = feasible_mask(st, inst);
    CHECK_FALSE(m0.feasible(0));  // nothing collected yet
    while (st.collected_prize < inst.prize_target) {
        Mask m = feasible_mask(st, inst);
        int pick = -1;
        for (int v = 1; v < inst.n_nodes(); ++v)
            if (m.feasible(v)) {
                pick = v;
                break;
            }
        REQUIRE(pick > 0);
        st = step(st, inst, pick);
    }
    Mask m1 = feasible_mask(st, inst);
    CHECK(m1.feasible(0));
    RolloutState done = step(st, inst, 0);
    CHECK(done.done);
    // skipped customers billed their penalties
    double expect = 0.0;
    Solution sol;  // reconstruct for route_cost comparison
    CHECK(done.accum_cost > 0.0);
    for (int v = 1; v < inst.n_nodes(); ++v)
        if (!done.visited[v]) expect += inst.penalty[v];
    CHECK(done.accum_cost >= expect - 1e-12);
}

TEST_CASE("lookahead depot choice") {
    Instance inst = make_instance(spec_by_name("MDCVRP"), 6, 2);
    RolloutState st = reset(inst, 0);

    SUBCASE("single best depot wins as a switch") {
        auto scorer = [&](int dep) -> std::pair<double, int> {
            return {dep == 2 ? 0.9 : 0.1, inst.first_customer()};
        };
        CHECK(lookahead_depot_choice(st, inst, scorer) == 2);
    }
    SUBCASE("current depot winning returns its customer") {
        auto scorer = [&](int dep) -> std::pair<double, int> {
            return {dep == 0 ? 0.9 : 0.1, inst.first_customer() + 1};
        };
        CHECK(lookahead_depot_choice(st, inst, scorer) == inst.first_customer() + 1);
    }
    SUBCASE("uniform scores tie to the current depot") {
        auto scorer = [&](int) -> std::pair<double, int> {
            return {0.5, inst.first_customer()};
        };
        CHECK(lookahead_depot_choice(st, inst, scorer) == inst.first_customer());
    }
    SUBCASE("no feasible customer anywhere is an invariant violation") {
        auto scorer = [&](int) -> std::pair<double, int> { return {-1.0, -1}; };
        CHECK_THROWS_AS(lookahead_depot_choice(st, inst, scorer), InvariantViolation);
    }
}

TEST_CASE("mask soundness + completeness mini-fuzz across families") {
    for (const char* name : {"TSP", "ATSP", "CVRP", "OCVRPBLTW", "CVRPBP", "MDCVRPTW",
                             "PDCVRP", "OPDCVRP", "PCTSP", "AOP", "ACVRPL"}) {
        const ProblemSpec& spec = spec_by_name(name);
        for (std::uint64_t s = 0; s < 4; ++s) {
            Instance inst = make_instance(spec, 10, 1000 + s);
            const int start = spec.has_depot() ? 0 : static_cast<int>(s % 10);
            Solution sol = random_rollout(inst, s, start);
            CHECK(validate_solution(inst, sol).empty());
        }
    }
}

}  // TEST_SUITE

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quasiroute/pivots.hpp"
#include "quasiroute/quasimetric.hpp"

namespace quasiroute {

/// Constraint families. `orienteering` discriminates OP from the PC family:
/// both carry prizes, but OP has a route-length budget and no penalties.
struct ConstraintFlags {
    bool capacity = false;           // C
    bool open_route = false;         // O
    bool backhaul = false;           // B
    bool backhaul_priority = false;  // BP
    bool duration = false;           // L
    bool time_windows = false;       // TW
    bool multi_depot = false;        // MD
    bool prize_collecting = false;   // PC
    bool pickup_delivery = false;    // PD
    bool orienteering = false;       // OP family

    bool any() const {
        return capacity || open_route || backhaul || backhaul_priority || duration ||
               time_windows || multi_depot || prize_collecting || pickup_delivery || orienteering;
    }
};

struct ProblemParams {
    int capacity = 50;             // 20 for capacitated PD variants
    double duration_limit = 3.0;   // 0.6 asymmetric
    int depot_count = 1;           // 3 under MD, 0 for the TSP family
    double tw_early = 0.0;
    double tw_late = 3.0;          // 1.0 asymmetric
    double service_time = 0.2;
    double backhaul_fraction = 0.20;
    double op_max_length = 4.0;    // 1.0 asymmetric
    double pc_min_prize = 1.0;
};

struct ProblemSpec {
    std::string name;
    ConstraintFlags flags;
    bool symmetric = true;
    ProblemParams params;

    bool has_depot() const { return flags.any(); }
    /// Variants whose solution is one route (TSP family, PD-TSP, OP, PCTSP).
    bool single_route() const { return !flags.capacity; }
    bool has_backhaul() const { return flags.backhaul || flags.backhaul_priority; }

    /// Throws InvalidInput when the flag combination is outside the catalog rules.
    void validate() const;
};

/// 10-dimensional multi-hot problem descriptor, Tables 8-10 layout.
struct MultiHotLambda {
    enum Bit { kDemand = 0, kPrize, kPenalty, kTime, kDepot, kPickup, kBackhaul, kDelivery, kSubRoutes, kOpenRoute };
    std::array<int, 10> bits{};

    int sum() const {
        int s = 0;
        for (int b : bits) s += b;
        return s;
    }
    bool operator==(const MultiHotLambda& o) const { return bits == o.bits; }
};

MultiHotLambda build_lambda(const ProblemSpec& spec);

/// Per-node attribute draw for one instance. Raw time units; demands are
/// normalized by capacity and signed by role.
struct AttributeSample {
    std::vector<double> demand, prize, penalty, tw_early, tw_late, service;
    std::vector<std::uint8_t> role_pickup, role_delivery, role_backhaul, role_linehaul;
    bool feasible = true;  // false when the geometry cannot host the windows/budget
};

/// Samples demands, prizes/penalties, windows, and roles. `geometry` (with the
/// depots at indices 0..depot_count-1) lets the window sampler keep every
/// customer round-trip feasible; pass nullptr to sample inside the bare horizon.
AttributeSample sample_attributes(const ProblemSpec& spec, int n_customers, std::uint64_t seed,
                                  const DistanceMatrix* geometry = nullptr);

/// One concrete problem instance. Node layout: depots first (0..depot_count-1),
/// then customers; for PD the first half of the customers are pickups and
/// customer k's partner is customer k + n_customers/2.
struct Instance {
    ProblemSpec spec;
    DistanceMatrix dist;
    std::optional<Coordinates> coords;
    std::vector<int> depots;
    int n_customers = 0;
    std::vector<double> demand, prize, penalty, tw_early, tw_late, service;
    std::vector<std::uint8_t> role_pickup, role_delivery, role_backhaul, role_linehaul;
    double prize_target = 0.0;  // min(pc_min_prize, total prize) for PC
    std::uint64_t seed = 0;

    int n_nodes() const { return dist.n; }
    bool is_depot(int v) const { return v < static_cast<int>(depots.size()); }
    int first_customer() const { return static_cast<int>(depots.size()); }
    /// Delivery partner of a pickup node (or pickup partner of a delivery node).
    int pd_partner(int v) const;
};

/// Generates geometry + attributes; retries with derived seeds until every
/// customer is serviceable under the active TW/L constraints.
Instance make_instance(const ProblemSpec& spec, int n_customers, std::uint64_t seed);

/// Geometry-level serviceability guard used by make_instance.
bool geometry_serviceable(const ProblemSpec& spec, const DistanceMatrix& dist, int n_customers);

/// Unified per-node features [Phi | omega | xi], width 2M + 13.
Mat build_udr(const Instance& instance, const BfrEmbedding& embedding);

/// All 110 variants: 12 seen, 46 unseen symmetric, 52 unseen asymmetric,
/// in table order.
const std::vector<ProblemSpec>& catalog();

/// Lookup by exact printed name (e.g. "OCVRPBLTW", "AMDCVRPBPTW").
const ProblemSpec& spec_by_name(const std::string& name);

/// Parses a variant name into flags/params; throws ParseError on unknown names.
ProblemSpec parse_variant_name(const std::string& name);

}  // namespace quasiroute

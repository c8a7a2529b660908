#include "quasiroute/variants.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace quasiroute {

void ProblemSpec::validate() const {
    if (flags.pickup_delivery && (flags.backhaul || flags.backhaul_priority))
        throw InvalidInput("problem spec: PD excludes backhaul constraints");
    if (flags.backhaul && flags.backhaul_priority)
        throw InvalidInput("problem spec: B and BP are mutually exclusive");
    if (flags.prize_collecting && flags.capacity)
        throw InvalidInput("problem spec: prize variants are uncapacitated");
    if (flags.orienteering && (flags.capacity || flags.prize_collecting || flags.pickup_delivery))
        throw InvalidInput("problem spec: orienteering combines with no other family");
    if ((flags.backhaul || flags.backhaul_priority) && !flags.capacity)
        throw InvalidInput("problem spec: backhaul requires capacity demands");
    if (flags.multi_depot && params.depot_count != 3)
        throw InvalidInput("problem spec: MD means depot_count = 3");
    if (!flags.multi_depot && flags.any() && params.depot_count != 1)
        throw InvalidInput("problem spec: single-depot variants have depot_count = 1");
}

MultiHotLambda build_lambda(const ProblemSpec& spec) {
    spec.validate();
    const ConstraintFlags& f = spec.flags;
    MultiHotLambda lam;
    lam.bits[MultiHotLambda::kDemand] = f.capacity ? 1 : 0;
    lam.bits[MultiHotLambda::kPrize] = (f.orienteering || f.prize_collecting) ? 1 : 0;
    lam.bits[MultiHotLambda::kPenalty] = f.prize_collecting ? 1 : 0;
    lam.bits[MultiHotLambda::kTime] = f.time_windows ? 1 : 0;
    lam.bits[MultiHotLambda::kDepot] = f.any() ? 1 : 0;
    lam.bits[MultiHotLambda::kPickup] = f.pickup_delivery ? 1 : 0;
    lam.bits[MultiHotLambda::kBackhaul] = (f.backhaul || f.backhaul_priority) ? 1 : 0;
    lam.bits[MultiHotLambda::kDelivery] = (f.capacity || f.pickup_delivery) ? 1 : 0;
    lam.bits[MultiHotLambda::kSubRoutes] = f.capacity ? 1 : 0;
    lam.bits[MultiHotLambda::kOpenRoute] = f.open_route ? 1 : 0;
    return lam;
}

int Instance::pd_partner(int v) const {
    if (!spec.flags.pickup_delivery) throw InvalidInput("pd_partner: not a PD variant");
    const int base = first_customer();
    const int half = n_customers / 2;
    const int c = v - base;
    if (c < 0 || c >= n_customers) throw InvalidInput("pd_partner: not a customer node");
    return c < half ? v + half : v - half;
}

namespace {

struct RoundTrip {
    double out = 0.0;   // best depot -> customer
    double back = 0.0;  // customer -> same depot
};

// Best same-depot round trip for a customer; depots occupy the leading indices.
RoundTrip best_round_trip(const DistanceMatrix& dist, int depot_count, int v) {
    RoundTrip best;
    double best_total = std::numeric_limits<double>::infinity();
    for (int dep = 0; dep < depot_count; ++dep) {
        const double total = dist.at(dep, v) + dist.at(v, dep);
        if (total < best_total) {
            best_total = total;
            best.out = dist.at(dep, v);
            best.back = dist.at(v, dep);
        }
    }
    return best;
}

}  // namespace

bool geometry_serviceable(const ProblemSpec& spec, const DistanceMatrix& dist, int n_customers) {
    const ConstraintFlags& f = spec.flags;
    if (!f.time_windows && !f.duration) return true;
    const int depot_count = spec.has_depot() ? spec.params.depot_count : 0;
    for (int c = 0; c < n_customers; ++c) {
        const int v = depot_count + c;
        const RoundTrip rt = best_round_trip(dist, depot_count, v);
        if (f.time_windows) {
            const double l0 = spec.params.tw_late;
            const double s = spec.params.service_time;
            if (f.open_route) {
                if (rt.out > l0) return false;
            } else if (rt.out + s + rt.back > l0) {
                return false;
            }
        }
        if (f.duration) {
            const double lim = spec.params.duration_limit;
            if (f.open_route ? rt.out > lim : rt.out + rt.back > lim) return false;
        }
    }
    return true;
}

AttributeSample sample_attributes(const ProblemSpec& spec, int n_customers, std::uint64_t seed,
                                  const DistanceMatrix* geometry) {
    spec.validate();
    const ConstraintFlags& f = spec.flags;
    const int depot_count = spec.has_depot() ? spec.params.depot_count : 0;
    const int n = depot_count + n_customers;
    if (f.pickup_delivery && n_customers % 2 != 0)
        throw InvalidInput("sample_attributes: PD needs an even customer count");
    if (n_customers < 1) throw InvalidInput("sample_attributes: need at least one customer");
    if (geometry != nullptr && geometry->n != n)
        throw InvalidInput("sample_attributes: geometry size mismatch");

    Rng rng(seed);
    AttributeSample s;
    s.demand.assign(n, 0.0);
    s.prize.assign(n, 0.0);
    s.penalty.assign(n, 0.0);
    s.tw_early.assign(n, 0.0);
    s.tw_late.assign(n, 0.0);
    s.service.assign(n, 0.0);
    s.role_pickup.assign(n, 0);
    s.role_delivery.assign(n, 0);
    s.role_backhaul.assign(n, 0);
    s.role_linehaul.assign(n, 0);

    if (f.capacity && !f.pickup_delivery) {
        const double cap = spec.params.capacity;
        for (int c = 0; c < n_customers; ++c) {
            const int v = depot_count + c;
            s.demand[v] = static_cast<double>(rng.uniform_int(1, 9)) / cap;
            s.role_delivery[v] = 1;
        }
        if (spec.has_backhaul()) {
            const int k = static_cast<int>(std::floor(spec.params.backhaul_fraction * n_customers));
            std::vector<int> order(n_customers);
            for (int c = 0; c < n_customers; ++c) order[c] = depot_count + c;
            rng.shuffle(order);
            for (int idx = 0; idx < k; ++idx) {
                const int v = order[idx];
                s.demand[v] = -s.demand[v];
                s.role_backhaul[v] = 1;
                s.role_delivery[v] = 0;
            }
            for (int c = 0; c < n_customers; ++c) {
                const int v = depot_count + c;
                if (!s.role_backhaul[v]) s.role_linehaul[v] = 1;
            }
        }
    }

    if (f.pickup_delivery) {
        const int half = n_customers / 2;
        for (int k = 0; k < half; ++k) {
            const int pv = depot_count + k;
            const int dv = pv + half;
            s.role_pickup[pv] = 1;
            s.role_delivery[dv] = 1;
            if (f.capacity) {
                const double x = static_cast<double>(rng.uniform_int(1, 9)) / spec.params.capacity;
                s.demand[pv] = -x;  // pickup carries negative demand, partner the positive mirror
                s.demand[dv] = x;
            }
        }
    }

    if (f.orienteering || f.prize_collecting) {
        for (int c = 0; c < n_customers; ++c) {
            const int v = depot_count + c;
            s.prize[v] = rng.uniform(0.0, 4.0 / n_customers);
            if (f.prize_collecting) s.penalty[v] = rng.uniform(0.0, 12.0 / n_customers);
        }
    }

    if (f.time_windows) {
        const double e0 = spec.params.tw_early;
        const double l0 = spec.params.tw_late;
        const double st = spec.params.service_time;
        for (int dep = 0; dep < depot_count; ++dep) {
            s.tw_early[dep] = e0;
            s.tw_late[dep] = l0;
        }
        for (int c = 0; c < n_customers; ++c) {
            const int v = depot_count + c;
            s.service[v] = st;
            const double w = rng.uniform(0.2, 0.6) * (l0 - e0) / 3.0;
            double lo = e0 + w / 2.0;
            double hi = l0 - w / 2.0;
            if (geometry != nullptr) {
                const RoundTrip rt = best_round_trip(*geometry, depot_count, v);
                const double b_max = f.open_route ? l0 : l0 - st - rt.back;
                if (rt.out > b_max) {
                    s.feasible = false;  // no window makes this customer serviceable
                    rng.uniform(lo, hi);
                    continue;
                }
                lo = std::max(lo, rt.out - w / 2.0);
                hi = std::min(hi, b_max + w / 2.0);
                if (hi < lo) hi = lo;
            }
            const double center = rng.uniform(lo, hi);
            s.tw_early[v] = center - w / 2.0;
            s.tw_late[v] = center + w / 2.0;
        }
    }

    return s;
}

Instance make_instance(const ProblemSpec& spec, int n_customers, std::uint64_t seed) {
    spec.validate();
    const int depot_count = spec.has_depot() ? spec.params.depot_count : 0;
    const int n = depot_count + n_customers;
    if (spec.flags.multi_depot && n_customers < 1)
        throw InvalidInput("make_instance: MD needs at least one customer");

    constexpr int kMaxAttempts = 100000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const std::uint64_t geo_seed = Rng(seed).fork(2 * attempt).next_u64();
        const std::uint64_t attr_seed = Rng(seed).fork(2 * attempt + 1).next_u64();

        Instance inst;
        inst.spec = spec;
        inst.seed = seed;
        inst.n_customers = n_customers;
        for (int dep = 0; dep < depot_count; ++dep) inst.depots.push_back(dep);

        if (spec.symmetric) {
            auto [coords, dist] = gen_euclidean(n, geo_seed);
            inst.coords = std::move(coords);
            inst.dist = std::move(dist);
        } else {
            inst.dist = gen_asymmetric(n, geo_seed);
        }
        if (!geometry_serviceable(spec, inst.dist, n_customers)) continue;

        AttributeSample attrs = sample_attributes(spec, n_customers, attr_seed, &inst.dist);
        if (!attrs.feasible) continue;
        inst.demand = std::move(attrs.demand);
        inst.prize = std::move(attrs.prize);
        inst.penalty = std::move(attrs.penalty);
        inst.tw_early = std::move(attrs.tw_early);
        inst.tw_late = std::move(attrs.tw_late);
        inst.service = std::move(attrs.service);
        inst.role_pickup = std::move(attrs.role_pickup);
        inst.role_delivery = std::move(attrs.role_delivery);
        inst.role_backhaul = std::move(attrs.role_backhaul);
        inst.role_linehaul = std::move(attrs.role_linehaul);

        if (spec.flags.prize_collecting) {
            double total = 0.0;
            for (double p : inst.prize) total += p;
            inst.prize_target = std::min(spec.params.pc_min_prize, total);
        }
        return inst;
    }
    throw InvariantViolation("make_instance: could not draw a serviceable geometry for " + spec.name);
}

Mat build_udr(const Instance& inst, const BfrEmbedding& embedding) {
    const int n = inst.n_nodes();
    if (embedding.coords.rows != n) throw InvalidInput("build_udr: embedding built on different instance");
    const int width = embedding.coords.cols + 6 + 7;
    const MultiHotLambda lam = build_lambda(inst.spec);
    const ConstraintFlags& f = inst.spec.flags;
    const double horizon = inst.spec.params.tw_late - inst.spec.params.tw_early;

    Mat u(n, width, 0.0);
    for (int v = 0; v < n; ++v) {
        for (int c = 0; c < embedding.coords.cols; ++c) u(v, c) = embedding.coords(v, c);
        const int w0 = embedding.coords.cols;
        if (f.capacity || f.pickup_delivery) u(v, w0 + 0) = inst.demand[v];
        if (f.orienteering || f.prize_collecting) u(v, w0 + 1) = inst.prize[v];
        if (f.prize_collecting) u(v, w0 + 2) = inst.penalty[v];
        if (f.time_windows) {
            u(v, w0 + 3) = inst.tw_early[v] / horizon;
            u(v, w0 + 4) = inst.tw_late[v] / horizon;
            u(v, w0 + 5) = inst.service[v] / horizon;
        }
        const int x0 = w0 + 6;
        u(v, x0 + 0) = inst.is_depot(v) ? 1.0 : 0.0;
        u(v, x0 + 1) = inst.role_pickup[v];
        u(v, x0 + 2) = inst.role_delivery[v];
        u(v, x0 + 3) = inst.role_backhaul[v];
        u(v, x0 + 4) = inst.role_linehaul[v];
        u(v, x0 + 5) = lam.bits[MultiHotLambda::kSubRoutes];
        u(v, x0 + 6) = lam.bits[MultiHotLambda::kOpenRoute];
    }
    return u;
}

ProblemSpec parse_variant_name(const std::string& name) {
    ProblemSpec spec;
    spec.name = name;
    std::string rest = name;

    auto eat = [&rest](const std::string& tok) {
        if (rest.rfind(tok, 0) == 0) {
            rest = rest.substr(tok.size());
            return true;
        }
        return false;
    };

    bool asym = false;
    // 'A' prefix marks the asymmetric counterpart; ATSP/AOP/... parse the same way.
    if (!rest.empty() && rest[0] == 'A') {
        asym = true;
        rest = rest.substr(1);
    }
    spec.symmetric = !asym;

    ConstraintFlags& f = spec.flags;
    if (rest == "TSP") {
        // no constraints
    } else if (rest == "OP") {
        f.orienteering = true;
    } else if (rest == "PCTSP" || rest == "SPCTSP") {
        f.prize_collecting = true;
    } else if (rest == "PDTSP") {
        f.pickup_delivery = true;
    } else {
        f.multi_depot = eat("MD");
        f.open_route = eat("O");
        f.pickup_delivery = eat("PD");
        if (!eat("CVRP")) throw ParseError("unknown variant name: " + name);
        f.capacity = true;
        if (eat("BP"))
            f.backhaul_priority = true;
        else if (eat("B"))
            f.backhaul = true;
        f.duration = eat("L");
        f.time_windows = eat("TW");
        if (!rest.empty()) throw ParseError("unknown variant name: " + name);
    }

    ProblemParams& p = spec.params;
    p.depot_count = f.multi_depot ? 3 : (f.any() ? 1 : 0);
    p.capacity = f.pickup_delivery && f.capacity ? 20 : 50;
    if (!spec.symmetric) {
        p.duration_limit = 0.6;
        p.tw_late = 1.0;
        p.op_max_length = 1.0;
    }
    spec.validate();
    return spec;
}

namespace {

// Table order: 12 seen, 46 unseen symmetric, 52 unseen asymmetric. The two
// redundant rows of the asymmetric table (a relisted seen variant and a
// duplicated MD row) are replaced by the mirror of their symmetric rows.
const char* const kCatalogNames[] = {
    // seen
    "ATSP", "TSP", "CVRP", "ACVRP", "OP", "PCTSP", "PDTSP", "CVRPTW", "OCVRP", "CVRPB",
    "OCVRPTW", "ACVRPBTW",
    // unseen symmetric, single depot
    "CVRPL", "OCVRPB", "CVRPBL", "CVRPLTW", "OCVRPBTW", "CVRPBLTW", "OCVRPL", "CVRPBTW",
    "OCVRPBL", "OCVRPLTW", "OCVRPBLTW", "CVRPBP", "OCVRPBP", "CVRPBPL", "OCVRPBPTW",
    "CVRPBPLTW", "CVRPBPTW", "OCVRPBPL", "OCVRPBPLTW",
    // unseen symmetric, multi depot
    "MDCVRP", "MDCVRPTW", "MDOCVRP", "MDCVRPL", "MDCVRPB", "MDOCVRPTW", "MDOCVRPB",
    "MDCVRPBL", "MDCVRPLTW", "MDOCVRPBTW", "MDCVRPBLTW", "MDOCVRPL", "MDCVRPBTW",
    "MDOCVRPBL", "MDOCVRPLTW", "MDOCVRPBLTW", "MDCVRPBP", "MDOCVRPBP", "MDCVRPBPL",
    "MDOCVRPBPTW", "MDCVRPBPLTW", "MDCVRPBPTW", "MDOCVRPBPL", "MDOCVRPBPLTW",
    // unseen symmetric, prize / pickup
    "SPCTSP", "PDCVRP", "OPDCVRP",
    // unseen asymmetric, single depot
    "ACVRPTW", "AOCVRP", "ACVRPL", "ACVRPB", "AOCVRPTW", "AOCVRPB", "ACVRPBL", "ACVRPLTW",
    "AOCVRPBTW", "ACVRPBLTW", "AOCVRPL", "ACVRPBPTW", "AOCVRPBL", "AOCVRPLTW", "AOCVRPBLTW",
    "ACVRPBP", "AOCVRPBP", "ACVRPBPL", "AOCVRPBPTW", "ACVRPBPLTW", "AOCVRPBPL", "AOCVRPBPLTW",
    // unseen asymmetric, multi depot
    "AMDCVRP", "AMDCVRPTW", "AMDOCVRP", "AMDCVRPL", "AMDCVRPB", "AMDOCVRPTW", "AMDOCVRPB",
    "AMDCVRPBL", "AMDCVRPLTW", "AMDOCVRPBTW", "AMDCVRPBLTW", "AMDOCVRPL", "AMDCVRPBTW",
    "AMDOCVRPBL", "AMDOCVRPLTW", "AMDOCVRPBLTW", "AMDCVRPBP", "AMDOCVRPBP", "AMDCVRPBPL",
    "AMDOCVRPBPTW", "AMDCVRPBPLTW", "AMDCVRPBPTW", "AMDOCVRPBPL", "AMDOCVRPBPLTW",
    // unseen asymmetric, prize / pickup
    "APDTSP", "APDCVRP", "AOPDCVRP", "AOP", "APCTSP", "ASPCTSP",
};

}  // namespace

const std::vector<ProblemSpec>& catalog() {
    static const std::vector<ProblemSpec> kCatalog = [] {
        std::vector<ProblemSpec> out;
        for (const char* name : kCatalogNames) out.push_back(parse_variant_name(name));
        return out;
    }();
    return kCatalog;
}

const ProblemSpec& spec_by_name(const std::string& name) {
    static const std::unordered_map<std::string, std::size_t> kIndex = [] {
        std::unordered_map<std::string, std::size_t> idx;
        for (std::size_t i = 0; i < catalog().size(); ++i) idx[catalog()[i].name] = i;
        return idx;
    }();
    auto it = kIndex.find(name);
    if (it == kIndex.end()) throw ParseError("unknown variant name: " + name);
    return catalog()[it->second];
}

}  // namespace quasiroute

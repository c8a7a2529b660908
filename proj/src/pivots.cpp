#include "quasiroute/pivots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace quasiroute {

BourgainConfig BourgainConfig::defaults(int n, std::uint64_t seed) {
    if (n < 2) throw InvalidInput("bourgain: n must be >= 2");
    BourgainConfig cfg;
    cfg.scales = static_cast<int>(std::floor(std::log2(static_cast<double>(n))));
    cfg.repetitions = std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(n)))));
    cfg.seed = seed;
    return cfg;
}

PivotSet fps_select(const DistanceMatrix& d_fps, int m, const std::vector<int>& init_seeds) {
    const int n = d_fps.n;
    if (m > n) throw InvalidInput("fps_select: M exceeds node count");
    if (static_cast<int>(init_seeds.size()) > m)
        throw InvalidInput("fps_select: more seeds than pivots requested");
    std::unordered_set<int> seen;
    for (int s : init_seeds) {
        if (s < 0 || s >= n) throw InvalidInput("fps_select: seed index out of range");
        if (!seen.insert(s).second) throw InvalidInput("fps_select: duplicate seed");
    }

    PivotSet out;
    out.indices = init_seeds;
    out.n_seeds = static_cast<int>(init_seeds.size());

    // delta[v] = min distance from v to the selected set; -inf marks selected.
    std::vector<double> delta(n, std::numeric_limits<double>::infinity());
    auto absorb = [&](int p) {
        for (int v = 0; v < n; ++v) delta[v] = std::min(delta[v], d_fps.at(v, p));
        delta[p] = -std::numeric_limits<double>::infinity();
    };
    for (int s : init_seeds) absorb(s);

    while (out.size() < m) {
        int best = -1;
        double best_d = -std::numeric_limits<double>::infinity();
        for (int v = 0; v < n; ++v)
            if (delta[v] > best_d) {
                best_d = delta[v];
                best = v;
            }
        if (best < 0) throw InvariantViolation("fps_select: no candidate left");
        out.indices.push_back(best);
        absorb(best);
    }
    return out;
}

BfrEmbedding bfr_embed(const DistanceMatrix& d, const PivotSet& pivots) {
    if (pivots.size() == 0) throw InvalidInput("bfr_embed: empty pivot set");
    const int n = d.n;
    const int m = pivots.size();
    for (int p : pivots.indices)
        if (p < 0 || p >= n) throw InvalidInput("bfr_embed: pivot index out of range");
    BfrEmbedding out;
    out.norm_factor = 1.0 / std::sqrt(2.0 * m);
    out.coords = Mat(n, 2 * m);
    for (int v = 0; v < n; ++v)
        for (int k = 0; k < m; ++k) {
            const int p = pivots.indices[k];
            out.coords(v, 2 * k) = d.at(v, p) * out.norm_factor;
            out.coords(v, 2 * k + 1) = d.at(p, v) * out.norm_factor;
        }
    out.pivots = pivots;
    return out;
}

Mat frechet_embed_outgoing(const DistanceMatrix& d, const PivotSet& pivots) {
    if (pivots.size() == 0) throw InvalidInput("frechet_embed_outgoing: empty pivot set");
    const int n = d.n;
    const int m = pivots.size();
    const double f = 1.0 / std::sqrt(static_cast<double>(m));
    Mat out(n, m);
    for (int v = 0; v < n; ++v)
        for (int k = 0; k < m; ++k) out(v, k) = d.at(v, pivots.indices[k]) * f;
    return out;
}

double covering_radius(const DistanceMatrix& d_ref, const PivotSet& pivots) {
    if (pivots.size() == 0) throw InvalidInput("covering_radius: empty pivot set");
    double radius = 0.0;
    for (int v = 0; v < d_ref.n; ++v) {
        double nearest = std::numeric_limits<double>::infinity();
        for (int p : pivots.indices) nearest = std::min(nearest, d_ref.at(v, p));
        radius = std::max(radius, nearest);
    }
    return radius;
}

double separation_score(const DistanceMatrix& d, const PivotSet& pivots, int i, int j) {
    if (i == j) throw InvalidInput("separation_score: i and j must differ");
    double s = 0.0;
    for (int p : pivots.indices) {
        s = std::max(s, std::abs(d.at(i, p) - d.at(j, p)));
        s = std::max(s, std::abs(d.at(p, i) - d.at(p, j)));
    }
    return s;
}

Mat bourgain_embed(const DistanceMatrix& d_metric, const BourgainConfig& cfg) {
    const int n = d_metric.n;
    if (n < 2) throw InvalidInput("bourgain_embed: n must be >= 2");
    if (cfg.scales < 1 || cfg.repetitions < 1)
        throw InvalidInput("bourgain_embed: scales and repetitions must be >= 1");
    Rng rng(cfg.seed);
    const double diam = diameter(d_metric);
    const int k = cfg.scales * cfg.repetitions;
    const double f = 1.0 / std::sqrt(static_cast<double>(k));
    Mat out(n, k);
    int col = 0;
    for (int j = 1; j <= cfg.scales; ++j) {
        const double p_include = std::pow(2.0, -j);
        for (int t = 0; t < cfg.repetitions; ++t, ++col) {
            std::vector<int> subset;
            for (int v = 0; v < n; ++v)
                if (rng.next_double() < p_include) subset.push_back(v);
            for (int v = 0; v < n; ++v) {
                double dist = diam;  // empty subset: constant coordinate
                for (int a : subset) dist = std::min(dist, d_metric.at(v, a));
                if (subset.empty()) dist = diam;
                out(v, col) = dist * f;
            }
        }
    }
    return out;
}

double embedding_distance(const Mat& e, int i, int j) {
    double s = 0.0;
    for (int c = 0; c < e.cols; ++c) {
        const double diff = e(i, c) - e(j, c);
        s += diff * diff;
    }
    return std::sqrt(s);
}

DistortionReport distortion(const DistanceMatrix& d_ref, const Mat& embedding) {
    const int n = d_ref.n;
    if (n < 2) throw InvalidInput("distortion: need at least two nodes");
    if (embedding.rows != n) throw ShapeError("distortion: embedding rows != n");
    DistortionReport rep;
    rep.alpha = std::numeric_limits<double>::infinity();
    rep.beta = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double ref = d_ref.at(i, j);
            if (!(ref > 0.0)) throw DomainError("distortion: zero off-diagonal reference distance");
            const double ratio = embedding_distance(embedding, i, j) / ref;
            rep.alpha = std::min(rep.alpha, ratio);
            rep.beta = std::max(rep.beta, ratio);
        }
    rep.distortion = rep.alpha > 0.0 ? rep.beta / rep.alpha
                                     : std::numeric_limits<double>::infinity();
    return rep;
}

std::vector<std::vector<int>> multiview_pivot_seeds(int n_nodes, const std::vector<int>& depot_set,
                                                    int n_aug, std::uint64_t seed) {
    if (n_aug < 1) throw InvalidInput("multiview_pivot_seeds: n_aug must be >= 1");
    std::vector<bool> is_depot(n_nodes, false);
    for (int d : depot_set) {
        if (d < 0 || d >= n_nodes) throw InvalidInput("multiview_pivot_seeds: bad depot index");
        is_depot[d] = true;
    }
    std::vector<int> customers;
    for (int v = 0; v < n_nodes; ++v)
        if (!is_depot[v]) customers.push_back(v);

    std::vector<std::vector<int>> views;
    views.reserve(n_aug);
    if (customers.empty()) {
        views.assign(n_aug, depot_set);
        return views;
    }

    Rng rng(seed);
    std::vector<int> perm = customers;
    rng.shuffle(perm);

    const int phase1 = std::min<int>(n_aug, static_cast<int>(customers.size()));
    for (int a = 0; a < phase1; ++a) {
        std::vector<int> v = depot_set;
        v.push_back(perm[a]);
        views.push_back(std::move(v));
    }
    // Phase 2: dual-customer seeding once single-customer views are exhausted.
    for (int a = phase1; a < n_aug; ++a) {
        const int c1 = customers[rng.next_below(customers.size())];
        std::vector<int> v = depot_set;
        v.push_back(c1);
        if (customers.size() > 1) {
            int c2 = c1;
            while (c2 == c1) c2 = customers[rng.next_below(customers.size())];
            v.push_back(c2);
        }
        views.push_back(std::move(v));
    }
    return views;
}

}  // namespace quasiroute

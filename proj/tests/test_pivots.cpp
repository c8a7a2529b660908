#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "quasiroute/pivots.hpp"

using namespace quasiroute;

namespace {

DistanceMatrix line_metric(const std::vector<double>& xs) {
    DistanceMatrix d(static_cast<int>(xs.size()), true);
    for (int i = 0; i < d.n; ++i)
        for (int j = 0; j < d.n; ++j) d.at(i, j) = std::abs(xs[i] - xs[j]);
    return d;
}

/// The directed 3-node space from the bidirectionality corollary proof:
/// nodes {p=0, v_i=1, v_j=2} with shortest-path quasimetric.
DistanceMatrix corollary_instance() {
    DistanceMatrix d(3, false);
    d.at(0, 1) = 2.0;  // d(p, v_i)
    d.at(0, 2) = 1.0;  // d(p, v_j)
    d.at(1, 0) = 1.0;  // d(v_i, p)
    d.at(1, 2) = 1.0;  // d(v_i, v_j)
    d.at(2, 0) = 1.0;  // d(v_j, p)
    d.at(2, 1) = 2.0;  // d(v_j, v_i)
    return d;
}

// Brute-force optimal covering radius over all M-subsets containing the seeds.
double optimal_covering_radius(const DistanceMatrix& d, int m, const std::vector<int>& seeds) {
    const int n = d.n;
    std::vector<int> chosen = seeds;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> pool;
    for (int v = 0; v < n; ++v)
        if (std::find(seeds.begin(), seeds.end(), v) == seeds.end()) pool.push_back(v);
    const int need = m - static_cast<int>(seeds.size());

    std::vector<int> pick(need);
    auto radius_of = [&](const std::vector<int>& set) {
        double r = 0.0;
        for (int v = 0; v < n; ++v) {
            double nearest = std::numeric_limits<double>::infinity();
            for (int p : set) nearest = std::min(nearest, d.at(v, p));
            r = std::max(r, nearest);
        }
        return r;
    };
    // enumerate all `need`-combinations of pool
    std::function<void(int, int)> rec = [&](int start, int k) {
        if (k == need) {
            std::vector<int> set = seeds;
            set.insert(set.end(), pick.begin(), pick.end());
            best = std::min(best, radius_of(set));
            return;
        }
        for (int i = start; i < static_cast<int>(pool.size()); ++i) {
            pick[k] = pool[i];
            rec(i + 1, k + 1);
        }
    };
    if (need == 0) return radius_of(seeds);
    rec(0, 0);
    return best;
}

}  // namespace

TEST_SUITE("pivots") {

TEST_CASE("fps with M equal to seed count returns the seeds") {
    DistanceMatrix d = line_metric({0, 1, 2, 10});
    PivotSet p = fps_select(d, 2, {3, 1});
    CHECK(p.indices == std::vector<int>{3, 1});
    CHECK(p.n_seeds == 2);
}

TEST_CASE("fps furthest-first traversal on the line {0,1,2,10}") {
    DistanceMatrix d = line_metric({0, 1, 2, 10});
    PivotSet p = fps_select(d, 3, {0});
    CHECK(p.indices == std::vector<int>{0, 3, 2});
}

TEST_CASE("fps errors") {
    DistanceMatrix d = line_metric({0, 1, 2});
    CHECK_THROWS_AS(fps_select(d, 4, {0}), InvalidInput);
    CHECK_THROWS_AS(fps_select(d, 3, {0, 0}), InvalidInput);
}

TEST_CASE("fps ties break to the lowest index") {
    // nodes 1 and 2 are equidistant from node 0
    DistanceMatrix d = line_metric({0, 1, -1, 5});
    PivotSet p = fps_select(d, 2, {0});
    CHECK(p.indices == std::vector<int>{0, 3});
    PivotSet q = fps_select(d, 3, {0, 3});
    CHECK(q.indices[2] == 1);  // both 1,2 at distance 1; lowest wins
}

TEST_CASE("covering radius basics and greedy monotonicity") {
    DistanceMatrix d = line_metric({0, 1, 2, 10});
    PivotSet all;
    all.indices = {0, 1, 2, 3};
    CHECK(covering_radius(d, all) == 0.0);

    PivotSet single;
    single.indices = {0};
    CHECK(covering_radius(d, single) == 10.0);

    PivotSet grown = fps_select(d, 4, {0});
    double prev = std::numeric_limits<double>::infinity();
    for (int m = 1; m <= 4; ++m) {
        PivotSet prefix;
        prefix.indices.assign(grown.indices.begin(), grown.indices.begin() + m);
        const double r = covering_radius(d, prefix);
        CHECK(r <= prev + 1e-12);
        prev = r;
    }
}

TEST_CASE("fps 2-approximation vs brute force on random metrics") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        DistanceMatrix q = gen_asymmetric(10 + static_cast<int>(seed % 3), seed + 100);
        DistanceMatrix d = symmetrize_mean(q);
        for (int m = 2; m <= 4; ++m) {
            PivotSet greedy = fps_select(d, m, {0});
            const double r_greedy = covering_radius(d, greedy);
            const double r_opt = optimal_covering_radius(d, m, {0});
            CHECK(r_greedy <= 2.0 * r_opt + 1e-9);
        }
    }
}

TEST_CASE("bfr embedding layout and normalization") {
    DistanceMatrix d = corollary_instance();
    PivotSet p;
    p.indices = {0};
    BfrEmbedding e = bfr_embed(d, p);
    const double f = 1.0 / std::sqrt(2.0);
    CHECK(e.coords(1, 0) == doctest::Approx(1.0 * f));  // d(v_i, p)
    CHECK(e.coords(1, 1) == doctest::Approx(2.0 * f));  // d(p, v_i)
    CHECK(e.coords(2, 0) == doctest::Approx(1.0 * f));
    CHECK(e.coords(2, 1) == doctest::Approx(1.0 * f));
    CHECK(embedding_distance(e.coords, 1, 2) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    // pivot's own coordinate pair is zero
    CHECK(e.coords(0, 0) == 0.0);
    CHECK(e.coords(0, 1) == 0.0);
}

TEST_CASE("bfr on symmetric input duplicates each pivot coordinate") {
    auto [coords, d] = gen_euclidean(10, 4);
    PivotSet p = fps_select(d, 3, {0});
    BfrEmbedding e = bfr_embed(d, p);
    for (int v = 0; v < d.n; ++v)
        for (int m = 0; m < 3; ++m) CHECK(e.coords(v, 2 * m) == e.coords(v, 2 * m + 1));
}

TEST_CASE("bfr rejects an empty pivot set") {
    DistanceMatrix d = corollary_instance();
    CHECK_THROWS_AS(bfr_embed(d, PivotSet{}), InvalidInput);
}

TEST_CASE("outgoing-only embedding collapses the corollary pair") {
    DistanceMatrix d = corollary_instance();
    PivotSet p;
    p.indices = {0};
    Mat out = frechet_embed_outgoing(d, p);
    CHECK(out(1, 0) == out(2, 0));
    CHECK(embedding_distance(out, 1, 2) == 0.0);

    DistortionReport rep = distortion(symmetrize_max(d), out);
    CHECK(rep.alpha == 0.0);
    CHECK(std::isinf(rep.distortion));
}

TEST_CASE("separation score") {
    DistanceMatrix d = corollary_instance();
    PivotSet p;
    p.indices = {0};
    CHECK(separation_score(d, p, 1, 2) == doctest::Approx(1.0));  // incoming side |2-1|
    CHECK_THROWS_AS(separation_score(d, p, 1, 1), InvalidInput);

    // identical rows and columns -> zero
    DistanceMatrix twin(4, true);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) twin.at(i, j) = (i == j) ? 0.0 : 1.0;
    PivotSet tp;
    tp.indices = {3};
    CHECK(separation_score(twin, tp, 0, 1) == 0.0);
}

TEST_CASE("geometric bounds: Lipschitz, non-contraction, coverage") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const bool euclidean = seed % 2 == 0;
        DistanceMatrix d = euclidean ? gen_euclidean(20, seed + 50).second
                                     : gen_asymmetric(20, seed + 50);
        DistanceMatrix dsym = symmetrize_max(d);
        Rng rng(seed);
        for (int m : {2, 4, 8}) {
            std::vector<int> seeds{static_cast<int>(rng.next_below(20))};
            PivotSet p = fps_select(symmetrize_mean(d), m, seeds);
            BfrEmbedding e = bfr_embed(d, p);
            const double root = std::sqrt(2.0 * m);
            for (int i = 0; i < d.n; ++i)
                for (int j = i + 1; j < d.n; ++j) {
                    const double emb = embedding_distance(e.coords, i, j);
                    CHECK(emb <= dsym.at(i, j) + 1e-9);
                    CHECK(emb >= separation_score(d, p, i, j) / root - 1e-9);
                    const double rho = covering_radius(dsym, p);
                    const double lower = std::max(0.0, dsym.at(i, j) - 2.0 * rho) / root;
                    CHECK(emb >= lower - 1e-9);
                }
        }
    }
}

TEST_CASE("distortion of exact coordinates is 1") {
    auto [coords, d] = gen_euclidean(12, 8);
    Mat exact(d.n, 2);
    for (int v = 0; v < d.n; ++v) {
        exact(v, 0) = coords.points[v].first;
        exact(v, 1) = coords.points[v].second;
    }
    DistortionReport rep = distortion(d, exact);
    CHECK(rep.distortion == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.beta >= rep.alpha);
}

TEST_CASE("distortion rejects degenerate references") {
    DistanceMatrix zero(3, true);
    Mat e(3, 1);
    CHECK_THROWS_AS(distortion(zero, e), DomainError);
}

TEST_CASE("bourgain embedding properties") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        DistanceMatrix d = symmetrize_mean(gen_asymmetric(24, seed + 300));
        BourgainConfig cfg = BourgainConfig::defaults(d.n, seed);
        Mat e = bourgain_embed(d, cfg);
        CHECK(e.cols == cfg.scales * cfg.repetitions);
        for (int i = 0; i < d.n; ++i)
            for (int j = i + 1; j < d.n; ++j)
                CHECK(embedding_distance(e, i, j) <= d.at(i, j) + 1e-9);
    }
    DistanceMatrix tiny(1, true);
    CHECK_THROWS_AS(bourgain_embed(tiny, BourgainConfig{1, 1, 0}), InvalidInput);
}

TEST_CASE("multiview seeds: phase 1 covers every customer exactly once") {
    const int n = 10;
    std::vector<int> depots{0};
    auto views = multiview_pivot_seeds(n, depots, 9, 77);
    CHECK(views.size() == 9);
    std::vector<int> seen;
    for (auto& v : views) {
        REQUIRE(v.size() == 2);
        CHECK(v[0] == 0);
        seen.push_back(v[1]);
    }
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9});
}

TEST_CASE("multiview seeds: phase 2 adds dual-customer views") {
    auto views = multiview_pivot_seeds(6, {0}, 8, 5);
    CHECK(views.size() == 8);
    for (std::size_t i = 5; i < 8; ++i) {
        REQUIRE(views[i].size() == 3);
        CHECK(views[i][1] != views[i][2]);
        CHECK(views[i][0] == 0);
    }
}

TEST_CASE("multiview seeds with no customers") {
    auto views = multiview_pivot_seeds(3, {0, 1, 2}, 4, 5);
    CHECK(views.size() == 4);
    for (auto& v : views) CHECK(v == std::vector<int>{0, 1, 2});
}

}  // TEST_SUITE

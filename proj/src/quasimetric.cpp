#include "quasiroute/quasimetric.hpp"

#include <algorithm>
#include <cmath>

namespace quasiroute {

namespace {

void check_square(const DistanceMatrix& d) {
    if (d.n < 1) throw InvalidInput("distance matrix: n must be >= 1");
    if (d.d.size() != static_cast<std::size_t>(d.n) * d.n)
        throw ShapeError("distance matrix: storage does not match n*n");
}

}  // namespace

std::vector<std::string> validate_quasimetric(const DistanceMatrix& d, double tol) {
    check_square(d);
    std::vector<std::string> out;
    const int n = d.n;
    for (int i = 0; i < n; ++i) {
        if (d.at(i, i) != 0.0) out.push_back("nonzero diagonal at " + std::to_string(i));
        for (int j = 0; j < n; ++j) {
            if (i != j && !(d.at(i, j) > 0.0))
                out.push_back("non-positive off-diagonal at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
    for (int i = 0; i < n && out.size() < 32; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                if (d.at(i, j) > d.at(i, k) + d.at(k, j) + tol) {
                    out.push_back("triangle violated for (" + std::to_string(i) + "," +
                                  std::to_string(k) + "," + std::to_string(j) + ")");
                    if (out.size() >= 32) break;
                }
    return out;
}

std::vector<std::string> validate_metric(const DistanceMatrix& d, double tol) {
    std::vector<std::string> out = validate_quasimetric(d, tol);
    for (int i = 0; i < d.n; ++i)
        for (int j = i + 1; j < d.n; ++j)
            if (d.at(i, j) != d.at(j, i)) {
                out.push_back("asymmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
                return out;
            }
    return out;
}

DistanceMatrix euclidean_matrix(const Coordinates& coords) {
    const int n = static_cast<int>(coords.points.size());
    DistanceMatrix d(n, true);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double dx = coords.points[i].first - coords.points[j].first;
            const double dy = coords.points[i].second - coords.points[j].second;
            const double v = std::sqrt(dx * dx + dy * dy);
            d.at(i, j) = v;
            d.at(j, i) = v;
        }
    return d;
}

std::pair<Coordinates, DistanceMatrix> gen_euclidean(int n, std::uint64_t seed) {
    if (n < 1) throw InvalidInput("gen_euclidean: n must be >= 1");
    Rng rng(seed);
    Coordinates coords;
    coords.points.reserve(n);
    for (int i = 0; i < n; ++i) {
        // Redraw on coincidence; distinct points keep d(i,j) > 0 for i != j.
        for (;;) {
            const double x = rng.next_double();
            const double y = rng.next_double();
            bool clash = false;
            for (const auto& p : coords.points)
                if (p.first == x && p.second == y) { clash = true; break; }
            if (!clash) {
                coords.points.emplace_back(x, y);
                break;
            }
        }
    }
    DistanceMatrix d = euclidean_matrix(coords);
    return {std::move(coords), std::move(d)};
}

DistanceMatrix min_plus_closure(const DistanceMatrix& raw) {
    check_square(raw);
    const int n = raw.n;
    for (int i = 0; i < n; ++i) {
        if (raw.at(i, i) != 0.0) throw InvalidInput("min_plus_closure: diagonal must be zero");
        for (int j = 0; j < n; ++j)
            if (raw.at(i, j) < 0.0) throw InvalidInput("min_plus_closure: negative entry");
    }
    DistanceMatrix out = raw;
    // Floyd-Warshall. One pass reaches the fixpoint in exact arithmetic; the
    // loop repeats until no entry moves so the result is a bit-exact fixpoint
    // under floating-point sums as well.
    bool changed = true;
    while (changed) {
        changed = false;
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i) {
                const double dik = out.at(i, k);
                for (int j = 0; j < n; ++j) {
                    const double via = dik + out.at(k, j);
                    if (via < out.at(i, j)) {
                        out.at(i, j) = via;
                        changed = true;
                    }
                }
            }
    }
    out.is_symmetric = raw.is_symmetric;
    return out;
}

DistanceMatrix gen_asymmetric(int n, std::uint64_t seed, double scaler) {
    if (n < 1) throw InvalidInput("gen_asymmetric: n must be >= 1");
    if (!(scaler > 0.0)) throw InvalidInput("gen_asymmetric: scaler must be positive");
    Rng rng(seed);
    DistanceMatrix raw(n, false);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            // Integer costs in [1, 10^6); zero draws are rejected to keep
            // off-diagonal entries strictly positive.
            std::uint64_t v = rng.next_below(1000000ULL);
            while (v == 0) v = rng.next_below(1000000ULL);
            raw.at(i, j) = static_cast<double>(v);
        }
    DistanceMatrix closed = min_plus_closure(raw);
    for (double& x : closed.d) x /= scaler;
    // Rounding in the division can leave 1-ulp triangle slack; re-closing makes
    // the stored matrix a floating-point fixpoint.
    closed = min_plus_closure(closed);
    closed.is_symmetric = false;
    return closed;
}

DistanceMatrix symmetrize_max(const DistanceMatrix& d) {
    check_square(d);
    DistanceMatrix out(d.n, true);
    for (int i = 0; i < d.n; ++i)
        for (int j = 0; j < d.n; ++j) out.at(i, j) = std::max(d.at(i, j), d.at(j, i));
    return out;
}

DistanceMatrix symmetrize_mean(const DistanceMatrix& d) {
    check_square(d);
    DistanceMatrix out(d.n, true);
    for (int i = 0; i < d.n; ++i)
        for (int j = 0; j < d.n; ++j) out.at(i, j) = 0.5 * (d.at(i, j) + d.at(j, i));
    return out;
}

Mat zscore_normalize(const DistanceMatrix& d) {
    check_square(d);
    const std::size_t total = d.d.size();
    double mean = 0.0;
    for (double x : d.d) mean += x;
    mean /= static_cast<double>(total);
    double var = 0.0;
    for (double x : d.d) var += (x - mean) * (x - mean);
    var /= static_cast<double>(total);
    const double sd = std::sqrt(var);
    Mat out(d.n, d.n, 0.0);
    if (sd < 1e-12) return out;
    for (std::size_t k = 0; k < total; ++k) out.a[k] = (d.d[k] - mean) / sd;
    return out;
}

double diameter(const DistanceMatrix& d) {
    double m = 0.0;
    for (double x : d.d) m = std::max(m, x);
    return m;
}

}  // namespace quasiroute

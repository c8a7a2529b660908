#include "quasiroute/common.hpp"

#include <cmath>
#include <cstdlib>

namespace quasiroute {

double Rng::next_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

int worker_threads() {
    const char* env = std::getenv("QUASIROUTE_THREADS");
    if (env == nullptr) return 1;
    const long v = std::strtol(env, nullptr, 10);
    if (v < 1) return 1;
    if (v > 256) return 256;
    return static_cast<int>(v);
}

}  // namespace quasiroute

#pragma once

#include "ppmlab/common.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace ppmlab::detail {

/// Running mean of the flattened iterate over the last fraction of iterations.
struct TailAverager {
    long start_iter = 0;
    long count = 0;
    Vector sum;

    TailAverager(long iterations, double fraction, long flat_size) {
        start_iter = static_cast<long>(std::floor((1.0 - fraction) * iterations));
        sum = Vector::Zero(flat_size);
    }

    void observe(long iter, const Vector& flat) {
        if (iter >= start_iter) {
            sum += flat;
            ++count;
        }
    }

    Vector mean() const { return count > 0 ? Vector(sum / static_cast<double>(count)) : sum; }
};

inline void check_guard(const std::vector<Vector>& particles, double guard, long iter) {
    for (const auto& p : particles) {
        const double n = p.norm();
        if (!(n <= guard)) {
            std::ostringstream msg;
            msg << "solver diverged at iteration " << iter << ": particle norm " << n
                << " exceeds guard " << guard;
            throw DivergenceError(msg.str(), iter, n);
        }
    }
}

} // namespace ppmlab::detail

#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace oracle {

IsotonicResult isotonic(std::span<const double> masses, std::span<const double> lengths) {
    const std::size_t n = masses.size();
    if (n == 0 || lengths.size() != n) throw std::invalid_argument("isotonic oracle: bad input sizes");
    if (n > 12) throw SizeCapExceeded("isotonic oracle handles at most 12 cells");
    IsotonicResult best;
    best.value = -std::numeric_limits<double>::infinity();
    std::vector<double> h(n);
    const unsigned long partitions = 1ul << (n - 1);
    // Bit k set: a block boundary after cell k.
    for (unsigned long mask = 0; mask < partitions; ++mask) {
        std::size_t start = 0;
        double prev = std::numeric_limits<double>::infinity();
        bool feasible = true;
        for (std::size_t k = 0; k < n && feasible; ++k) {
            const bool closes = k == n - 1 || (mask >> k & 1ul);
            if (!closes) continue;
            double m = 0.0, len = 0.0;
            for (std::size_t i = start; i <= k; ++i) {
                m += masses[i];
                len += lengths[i];
            }
            const double height = m / len;
            if (height > prev) feasible = false;
            for (std::size_t i = start; i <= k; ++i) h[i] = height;
            prev = height;
            start = k + 1;
        }
        if (!feasible) continue;
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (masses[i] > 0.0) obj += masses[i] * std::log(h[i]);
        if (obj > best.value) {
            best.value = obj;
            best.heights = h;
        }
    }
    best.method = "exhaustive contiguous block partitions";
    best.metadata = {{"cells", n}, {"partitions", partitions}};
    return best;
}

} // namespace oracle

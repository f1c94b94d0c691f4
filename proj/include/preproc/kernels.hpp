#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace preproc {

enum class KernelFamily { gaussian, gamma };

enum class Support { real_line, positive_half_line };

Support support_of(KernelFamily family);
std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

// True when x is a finite point of the family's support.
bool in_support(KernelFamily family, double x);

// Index of one kernel. Gaussian: (mean, sd). Gamma: (shape, rate).
struct KernelPoint {
    std::array<double, 2> coords{};

    double first() const { return coords[0]; }
    double second() const { return coords[1]; }
    bool operator==(const KernelPoint&) const = default;
};

// Throws ConfigError when u is not a valid index for the family.
void validate(KernelFamily family, const KernelPoint& u);

// log p_u(x). Throws UnsupportedObservation when x is outside the support.
double log_density(KernelFamily family, const KernelPoint& u, double x);

// P_u((-inf, x]); 0 below the support.
double cdf(KernelFamily family, const KernelPoint& u, double x);

// Per-node constants so that evaluating every kernel at one x costs a
// couple of flops per node.
class KernelTable {
public:
    KernelTable() = default;
    KernelTable(KernelFamily family, std::span<const KernelPoint> nodes);

    KernelFamily family() const { return family_; }
    std::size_t size() const { return offset_.size(); }

    // out[j] = log p_{u_j}(x). out.size() must equal size().
    void log_densities(double x, std::span<double> out) const;

private:
    KernelFamily family_ = KernelFamily::gaussian;
    // gaussian: offset = -log sd - log sqrt(2 pi), a = mean, b = -1/(2 sd^2)
    // gamma:    offset = shape log rate - lgamma(shape), a = shape - 1, b = -rate
    std::vector<double> offset_;
    std::vector<double> a_;
    std::vector<double> b_;
};

} // namespace preproc

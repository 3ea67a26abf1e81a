#include "bnls/fd_weights.hpp"

#include <stdexcept>

namespace bnls {

std::vector<std::vector<double>> fd_weights(double z, std::span<const double> x, int max_order) {
    const int n = static_cast<int>(x.size()) - 1;
    if (n < 0 || max_order < 0) throw std::invalid_argument("fd_weights: empty stencil");
    std::vector<std::vector<double>> c(max_order + 1, std::vector<double>(x.size(), 0.0));
    double c1 = 1.0;
    double c4 = x[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        const int mn = std::min(i, max_order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

std::vector<double> centered_weights(int half_width, int order) {
    std::vector<double> x(2 * half_width + 1);
    for (int i = 0; i < static_cast<int>(x.size()); ++i) x[i] = i - half_width;
    return fd_weights(0.0, x, order)[order];
}

}  // namespace bnls

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

// Real ground state of R'''' = -nu R + R^{2 sigma + 1} in one dimension by
// shooting on (R(0), R''(0)) with RK4. The two growing modes exp(lambda rho),
// lambda^4 = -nu, Re lambda > 0, are projected out at rho_end.
namespace oracle {

struct ShootingResult {
    double r0;
    double r2;  // R''(0)
    bool converged;
};

class StandingWaveShooter {
public:
    StandingWaveShooter(double sigma, double nu, double rho_end = 12.0, double step = 1e-3)
        : sigma_(sigma), nu_(nu), rho_end_(rho_end), step_(step) {}

    using State = std::array<double, 4>;

    State integrate(double r0, double r2, double until) const {
        State y{r0, 0.0, r2, 0.0};
        const int n = static_cast<int>(std::lround(until / step_));
        for (int i = 0; i < n; ++i) {
            const State k1 = rhs(y);
            const State k2 = rhs(axpy(y, 0.5 * step_, k1));
            const State k3 = rhs(axpy(y, 0.5 * step_, k2));
            const State k4 = rhs(axpy(y, step_, k3));
            for (int j = 0; j < 4; ++j) y[j] += step_ / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
        }
        return y;
    }

    // Coefficient of the growing mode exp(lambda rho), lambda = nu^{1/4} e^{i pi/4}.
    std::complex<double> growing_part(double r0, double r2) const {
        const State y = integrate(r0, r2, rho_end_);
        const std::complex<double> lam = std::polar(std::pow(nu_, 0.25), std::numbers::pi / 4);
        return y[3] + lam * y[2] + lam * lam * y[1] + lam * lam * lam * y[0];
    }

    ShootingResult solve(double r0, double r2, int max_iters = 30) const {
        for (int it = 0; it < max_iters; ++it) {
            const auto g = growing_part(r0, r2);
            const double d = 1e-7;
            const auto ga = (growing_part(r0 + d, r2) - g) / d;
            const auto gb = (growing_part(r0, r2 + d) - g) / d;
            const double det = ga.real() * gb.imag() - gb.real() * ga.imag();
            if (det == 0.0) throw std::runtime_error("shooting Jacobian singular");
            const double da = (g.real() * gb.imag() - gb.real() * g.imag()) / det;
            const double db = (ga.real() * g.imag() - g.real() * ga.imag()) / det;
            r0 -= da;
            r2 -= db;
            if (std::abs(da) + std::abs(db) < 1e-12 * (std::abs(r0) + std::abs(r2))) return {r0, r2, true};
        }
        return {r0, r2, false};
    }

private:
    State rhs(const State& y) const {
        return {y[1], y[2], y[3], -nu_ * y[0] + std::pow(std::abs(y[0]), 2 * sigma_) * y[0]};
    }
    static State axpy(State y, double a, const State& k) {
        for (int j = 0; j < 4; ++j) y[j] += a * k[j];
        return y;
    }

    double sigma_, nu_, rho_end_, step_;
};

}  // namespace oracle

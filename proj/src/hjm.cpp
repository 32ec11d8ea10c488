#include "finn/hjm.hpp"

#include <cmath>
#include <stdexcept>

namespace finn {

namespace {

// Linear interpolation of the grid rates at tau.
double interp_rate(const DiscreteCurve& curve, double tau) {
    const auto& g = curve.grid;
    const double d = g.dtau();
    int j = static_cast<int>(std::floor(tau / d));
    j = std::clamp(j, 0, g.k_count - 2);
    const double w = (tau - g.nodes[j]) / d;
    return curve.rates[j] * (1.0 - w) + curve.rates[j + 1] * w;
}

}  // namespace

IntegrationMatrix integration_matrix(const TenorGrid& grid) {
    IntegrationMatrix m;
    m.grid = grid;
    const int k = grid.k_count;
    const double d = grid.dtau();
    m.weights = Eigen::MatrixXd::Zero(k, k);
    for (int i = 1; i < k; ++i) {
        m.weights(i, 0) = 0.5 * d;
        for (int j = 1; j < i; ++j) m.weights(i, j) = d;
        m.weights(i, i) = 0.5 * d;
    }
    return m;
}

Eigen::VectorXd IntegrationMatrix::weights_to(double tau) const {
    if (tau < 0.0 || tau > grid.tau_max + 1e-12)
        throw std::out_of_range("IntegrationMatrix: tau outside grid horizon");
    tau = std::min(tau, grid.tau_max);
    const double d = grid.dtau();
    int j = static_cast<int>(std::floor(tau / d));
    j = std::clamp(j, 0, grid.k_count - 1);
    Eigen::VectorXd w = weights.row(j);
    const double h = tau - grid.nodes[j];
    if (h > 0.0 && j + 1 < grid.k_count) {
        // partial trapezoid panel with linear interpolation of f inside it
        w[j] += h - h * h / (2.0 * d);
        w[j + 1] += h * h / (2.0 * d);
    }
    return w;
}

void CapletContract::validate(const TenorGrid& grid) const {
    if (tau1 < 0.0) throw std::invalid_argument("CapletContract: tau1 must be >= 0");
    if (delta <= 0.0) throw std::invalid_argument("CapletContract: delta must be > 0");
    if (strike < 0.0) throw std::invalid_argument("CapletContract: strike must be >= 0");
    if (tau1 + delta > grid.tau_max + 1e-12)
        throw std::invalid_argument("CapletContract: tau1 + delta exceeds grid horizon");
}

double bond_price(const DiscreteCurve& curve, const IntegrationMatrix& C, double tau) {
    return std::exp(-C.integrate_to(curve.rates, tau));
}

double libor(const DiscreteCurve& curve, const IntegrationMatrix& C, double tau_a, double tau_b) {
    if (!(tau_a >= 0.0 && tau_a < tau_b))
        throw std::invalid_argument("libor: need 0 <= tau_a < tau_b");
    const double pa = bond_price(curve, C, tau_a);
    const double pb = bond_price(curve, C, tau_b);
    return (pa / pb - 1.0) / (tau_b - tau_a);
}

Eigen::VectorXd musiela_drift(const Eigen::VectorXd& rates, const Eigen::VectorXd& slope,
                              const VolModel& vols, const IntegrationMatrix& C) {
    const int k = C.grid.k_count;
    Eigen::VectorXd drift = slope;
    Eigen::MatrixXd sig(k, 3);
    for (int i = 0; i < k; ++i)
        sig.row(i) = vols.local_vol(C.grid.nodes[i], rates[i]).transpose();
    for (int n = 0; n < 3; ++n) {
        const Eigen::VectorXd integral = C.weights * sig.col(n);
        drift.array() += sig.col(n).array() * integral.array();
    }
    return drift;
}

double caplet_payoff(const DiscreteCurve& curve, const IntegrationMatrix& C,
                     const CapletContract& contract) {
    const double l = libor(curve, C, 0.0, contract.delta);
    const double p = bond_price(curve, C, contract.delta);
    return contract.delta * p * std::max(l - contract.strike, 0.0);
}

double zero_strike_value(const DiscreteCurve& curve, const IntegrationMatrix& C, double tau1,
                         double delta) {
    if (tau1 < 0.0 || tau1 + delta > C.grid.tau_max + 1e-12)
        throw std::out_of_range("zero_strike_value: contract outside grid horizon");
    return bond_price(curve, C, tau1) - bond_price(curve, C, tau1 + delta);
}

ZeroStrikeEval zero_strike_with_derivs(const DiscreteCurve& curve, const IntegrationMatrix& C,
                                       double tau1, double delta) {
    const Eigen::VectorXd w1 = C.weights_to(tau1);
    const Eigen::VectorXd w2 = C.weights_to(tau1 + delta);
    const double p1 = std::exp(-w1.dot(curve.rates));
    const double p2 = std::exp(-w2.dot(curve.rates));
    ZeroStrikeEval e;
    e.value = p1 - p2;
    // d/dtau1 of the integral bound is the interpolated rate at the bound
    e.dv_dtau1 = -interp_rate(curve, tau1) * p1 + interp_rate(curve, tau1 + delta) * p2;
    e.d_rates = -w1 * p1 + w2 * p2;
    return e;
}

double zero_strike_hvp(const DiscreteCurve& curve, const IntegrationMatrix& C, double tau1,
                       double delta, const Eigen::VectorXd& dir) {
    const Eigen::VectorXd w1 = C.weights_to(tau1);
    const Eigen::VectorXd w2 = C.weights_to(tau1 + delta);
    const double p1 = std::exp(-w1.dot(curve.rates));
    const double p2 = std::exp(-w2.dot(curve.rates));
    const double a = w1.dot(dir);
    const double b = w2.dot(dir);
    return a * a * p1 - b * b * p2;
}

}  // namespace finn

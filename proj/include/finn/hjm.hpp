#pragma once

#include <Eigen/Core>

#include "finn/market_data.hpp"
#include "finn/vol_model.hpp"

namespace finn {

/// Lower-triangular trapezoid weights: row i integrates a grid function from
/// node 0 to node i. Row 0 is all zeros. weights_to(tau) extends rows to
/// off-node tau with a partial trapezoid panel (linear interpolation of the
/// integrand inside the panel), so integrals stay linear in the node values.
struct IntegrationMatrix {
    TenorGrid grid;
    Eigen::MatrixXd weights;

    /// Weight vector w with w.dot(g) = integral of g from 0 to tau.
    Eigen::VectorXd weights_to(double tau) const;

    double integrate_to(const Eigen::VectorXd& g, double tau) const {
        return weights_to(tau).dot(g);
    }
};

IntegrationMatrix integration_matrix(const TenorGrid& grid);

/// Caplet contract features: years to settlement, accrual length, strike.
struct CapletContract {
    double tau1 = 0.0;
    double delta = 0.5;
    double strike = 0.0;

    void validate(const TenorGrid& grid) const;
};

/// P(t, tau) = exp(-integral of f over [0, tau]).
double bond_price(const DiscreteCurve& curve, const IntegrationMatrix& C, double tau);

/// Simply compounded forward rate over [tau_a, tau_b] implied by bond prices.
double libor(const DiscreteCurve& curve, const IntegrationMatrix& C, double tau_a, double tau_b);

/// Musiela no-arbitrage drift on the grid: slope + sigma * integral(sigma),
/// summed over the three volatility factors, with the capped local vol applied
/// at every tenor both inside and outside the integral.
Eigen::VectorXd musiela_drift(const Eigen::VectorXd& rates, const Eigen::VectorXd& slope,
                              const VolModel& vols, const IntegrationMatrix& C);

/// Caplet value at the settlement date: delta * P(delta) * max{L(0,delta) - strike, 0}.
/// The curve is the state at settlement (tau1 = 0 by convention).
double caplet_payoff(const DiscreteCurve& curve, const IntegrationMatrix& C,
                     const CapletContract& contract);

/// Closed form for a zero-strike caplet, valid at all times:
/// V = P(tau1) - P(tau1 + delta).
double zero_strike_value(const DiscreteCurve& curve, const IntegrationMatrix& C, double tau1,
                         double delta);

/// Value and exact derivatives of the zero-strike closed form with respect to
/// settlement time and the grid rates - the analytic side-evaluator used to
/// validate PDE residual assembly and as a Greeks oracle.
struct ZeroStrikeEval {
    double value = 0.0;
    double dv_dtau1 = 0.0;       // per year
    Eigen::VectorXd d_rates;     // K sensitivities
};

ZeroStrikeEval zero_strike_with_derivs(const DiscreteCurve& curve, const IntegrationMatrix& C,
                                       double tau1, double delta);

/// dir' D^2 V dir of the zero-strike closed form.
double zero_strike_hvp(const DiscreteCurve& curve, const IntegrationMatrix& C, double tau1,
                       double delta, const Eigen::VectorXd& dir);

}  // namespace finn

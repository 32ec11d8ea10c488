#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "finn/hjm.hpp"

namespace finn {

struct McConfig {
    int n_paths = 10000;
    double dt = 0.01;          // years
    std::uint64_t seed = 0;
    bool antithetic = false;
    int threads = 1;           // path-level fan-out; reduction order is fixed
};

struct McResult {
    double price = 0.0;
    double std_error = 0.0;
    double elapsed_s = 0.0;
    long rejected = 0;
};

/// Rates floored at zero for the sqrt(f) volatility scaling only; the state
/// itself keeps negative values (the drift can restore positivity).
Eigen::VectorXd negative_rate_policy(const Eigen::VectorXd& rates);

/// Second-order finite-difference tenor slope on the grid: central in the
/// interior, one-sided at both ends.
Eigen::VectorXd tenor_slope_fd(const Eigen::VectorXd& rates, double dtau);

/// Euler-Maruyama Monte Carlo caplet price under the discretized Musiela HJM
/// dynamics with local volatility. Steps land exactly on tau1; the discount
/// integral uses the time-trapezoid on the short rate path. Paths with a
/// non-finite state are rejected and counted; more than 1% rejections is a
/// hard error.
McResult simulate_price(const DiscreteCurve& curve0, const VolModel& vols,
                        const IntegrationMatrix& C, const CapletContract& contract,
                        const McConfig& cfg);

}  // namespace finn

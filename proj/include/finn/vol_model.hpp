#pragma once

#include <Eigen/Core>
#include <vector>

#include "finn/market_data.hpp"

namespace finn {

/// Annualized covariance of daily forward-rate changes. Uncentered second
/// moment: entries = annualization * E[(x)(x)'].
struct CovMatrix {
    Eigen::MatrixXd entries;
    bool proportional = false;
};

/// Top-3 eigenstructure of the change covariance. Loadings are unit-norm,
/// sign-fixed so the largest-magnitude entry of each vector is positive.
struct PcaFactors {
    Eigen::Vector3d eigenvalues;   // descending
    Eigen::MatrixXd loadings;      // dim x 3
    Eigen::MatrixXd adjusted;      // dim x 3, sqrt(lambda_n) * v_n
};

/// Three-factor volatility structure: degree-3 Chebyshev fits of the adjusted
/// PCA loadings plus the local-volatility cap.
struct VolModel {
    Eigen::Matrix<double, 3, 4> coeffs = Eigen::Matrix<double, 3, 4>::Zero();
    double fit_lo = 0.0;
    double fit_hi = 1.0;
    double cap_m = 0.4;
    bool proportional = true;
    Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();

    /// Chebyshev evaluation at tau; the mapped argument is clamped to [-1,1].
    Eigen::Vector3d sigma_tilde(double tau) const;

    /// min{sqrt(max(f,0)), cap_m} when proportional, else 1.
    double scale(double f) const;

    /// sigma_tilde(tau) * scale(f).
    Eigen::Vector3d local_vol(double tau, double f) const;
};

CovMatrix covariance(const Eigen::MatrixXd& change_rows, double annualization = 252.0,
                     bool proportional = false);

PcaFactors pca_top3(const CovMatrix& c);

/// Least-squares degree-3 Chebyshev fit of each adjusted factor over
/// fit domain [0, tenors.back()].
VolModel fit_chebyshev(const PcaFactors& factors, const std::vector<double>& tenors,
                       double cap_m = 0.4, bool proportional = true);

struct VolEstimationConfig {
    std::vector<double> tenors;    // estimation grid; default 1..30 years
    double annualization = 252.0;
    bool proportional = true;
    double eps = 0.005;            // rows with any level <= eps are dropped
    double cap_m = 0.4;

    static VolEstimationConfig fed_annual();
};

/// End-to-end estimation from a Svensson parameter time series: evaluate
/// levels on the estimation grid, form daily (proportional) changes,
/// covariance, PCA, Chebyshev fit.
VolModel estimate_vol(const std::vector<SvenssonParams>& series, const VolEstimationConfig& cfg);

/// Same pipeline starting from a level matrix (rows = days, cols = tenors).
VolModel estimate_vol_from_levels(const Eigen::MatrixXd& levels, const VolEstimationConfig& cfg);

}  // namespace finn

#include "finn/vol_model.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace finn {

namespace {

// T_0..T_3 at x.
Eigen::Vector4d cheb_basis(double x) {
    Eigen::Vector4d t;
    t[0] = 1.0;
    t[1] = x;
    t[2] = 2.0 * x * x - 1.0;
    t[3] = 4.0 * x * x * x - 3.0 * x;
    return t;
}

}  // namespace

Eigen::Vector3d VolModel::sigma_tilde(double tau) const {
    double x = 2.0 * (tau - fit_lo) / (fit_hi - fit_lo) - 1.0;
    x = std::clamp(x, -1.0, 1.0);
    return coeffs * cheb_basis(x);
}

double VolModel::scale(double f) const {
    if (!proportional) return 1.0;
    return std::min(std::sqrt(std::max(f, 0.0)), cap_m);
}

Eigen::Vector3d VolModel::local_vol(double tau, double f) const {
    return sigma_tilde(tau) * scale(f);
}

CovMatrix covariance(const Eigen::MatrixXd& change_rows, double annualization, bool proportional) {
    if (change_rows.rows() < 2) throw std::invalid_argument("covariance: need at least 2 rows");
    CovMatrix c;
    c.proportional = proportional;
    c.entries = annualization / static_cast<double>(change_rows.rows()) *
                (change_rows.transpose() * change_rows);
    // symmetrize away accumulation asymmetry
    c.entries = 0.5 * (c.entries + c.entries.transpose()).eval();
    return c;
}

PcaFactors pca_top3(const CovMatrix& c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.entries);
    if (es.info() != Eigen::Success) throw std::runtime_error("pca_top3: eigensolver failed");
    const auto& vals = es.eigenvalues();    // ascending
    const auto& vecs = es.eigenvectors();
    const Eigen::Index d = c.entries.rows();
    if (d < 3) throw std::invalid_argument("pca_top3: need dimension >= 3");

    PcaFactors out;
    out.loadings.resize(d, 3);
    out.adjusted.resize(d, 3);
    for (int n = 0; n < 3; ++n) {
        const Eigen::Index src = d - 1 - n;
        out.eigenvalues[n] = std::max(vals[src], 0.0);
        Eigen::VectorXd v = vecs.col(src);
        Eigen::Index imax;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0.0) v = -v;
        out.loadings.col(n) = v;
        out.adjusted.col(n) = std::sqrt(out.eigenvalues[n]) * v;
    }
    return out;
}

VolModel fit_chebyshev(const PcaFactors& factors, const std::vector<double>& tenors, double cap_m,
                       bool proportional) {
    const auto m = static_cast<Eigen::Index>(tenors.size());
    if (m < 4) throw std::invalid_argument("fit_chebyshev: need at least 4 tenor points");
    if (factors.adjusted.rows() != m)
        throw std::invalid_argument("fit_chebyshev: tenor/loading size mismatch");

    VolModel vm;
    vm.fit_lo = 0.0;
    vm.fit_hi = tenors.back();
    vm.cap_m = cap_m;
    vm.proportional = proportional;
    vm.eigenvalues = factors.eigenvalues;

    Eigen::MatrixXd design(m, 4);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double x = 2.0 * (tenors[i] - vm.fit_lo) / (vm.fit_hi - vm.fit_lo) - 1.0;
        design.row(i) = cheb_basis(x).transpose();
    }
    const auto qr = design.colPivHouseholderQr();
    if (qr.rank() < 4) throw std::invalid_argument("fit_chebyshev: rank-deficient design");
    for (int n = 0; n < 3; ++n)
        vm.coeffs.row(n) = qr.solve(factors.adjusted.col(n)).transpose();
    return vm;
}

VolEstimationConfig VolEstimationConfig::fed_annual() {
    VolEstimationConfig cfg;
    cfg.tenors.resize(30);
    for (int i = 0; i < 30; ++i) cfg.tenors[i] = i + 1.0;
    return cfg;
}

VolModel estimate_vol_from_levels(const Eigen::MatrixXd& levels, const VolEstimationConfig& cfg) {
    const Eigen::Index days = levels.rows();
    const Eigen::Index dim = levels.cols();
    if (days < 3) throw std::invalid_argument("estimate_vol: need at least 3 daily observations");
    if (dim != static_cast<Eigen::Index>(cfg.tenors.size()))
        throw std::invalid_argument("estimate_vol: level/tenor dimension mismatch");

    std::vector<Eigen::RowVectorXd> rows;
    rows.reserve(days - 1);
    for (Eigen::Index t = 1; t < days; ++t) {
        const Eigen::RowVectorXd prev = levels.row(t - 1);
        if ((prev.array() <= cfg.eps).any()) continue;
        Eigen::RowVectorXd d = levels.row(t) - prev;
        if (cfg.proportional) d = d.array() / prev.array().sqrt();
        if (!d.allFinite()) continue;
        rows.push_back(std::move(d));
    }
    if (rows.size() < 2) throw std::runtime_error("estimate_vol: too few usable daily changes");

    Eigen::MatrixXd changes(static_cast<Eigen::Index>(rows.size()), dim);
    for (size_t i = 0; i < rows.size(); ++i) changes.row(static_cast<Eigen::Index>(i)) = rows[i];

    const CovMatrix cov = covariance(changes, cfg.annualization, cfg.proportional);
    const PcaFactors factors = pca_top3(cov);
    return fit_chebyshev(factors, cfg.tenors, cfg.cap_m, cfg.proportional);
}

VolModel estimate_vol(const std::vector<SvenssonParams>& series, const VolEstimationConfig& cfg) {
    Eigen::MatrixXd levels(static_cast<Eigen::Index>(series.size()),
                           static_cast<Eigen::Index>(cfg.tenors.size()));
    for (size_t t = 0; t < series.size(); ++t)
        for (size_t i = 0; i < cfg.tenors.size(); ++i)
            levels(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) =
                svensson_forward(series[t], cfg.tenors[i]);
    return estimate_vol_from_levels(levels, cfg);
}

}  // namespace finn

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "finn/vol_model.hpp"
#include "support/synthetic.hpp"

using namespace finn;

TEST_CASE("covariance of zero rows is the zero matrix") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(10, 4);
    const auto c = covariance(x);
    CHECK(c.entries.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("covariance of a repeated row is 252 times its outer product") {
    Eigen::VectorXd r(3);
    r << 0.01, -0.02, 0.005;
    Eigen::MatrixXd x(8, 3);
    for (int i = 0; i < 8; ++i) x.row(i) = r.transpose();
    const auto c = covariance(x);
    const Eigen::MatrixXd expect = 252.0 * r * r.transpose();
    CHECK((c.entries - expect).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(c.entries).rank() == 1);
}

TEST_CASE("covariance equals the brute-force second moment") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0.0, 0.01);
    Eigen::MatrixXd x(50, 5);
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 5; ++j) x(i, j) = z(rng);
    const auto c = covariance(x);
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) {
            double s = 0.0;
            for (int i = 0; i < 50; ++i) s += x(i, a) * x(i, b);
            CHECK(c.entries(a, b) == doctest::Approx(252.0 * s / 50.0).epsilon(1e-12));
        }
}

TEST_CASE("covariance requires at least two rows") {
    CHECK_THROWS(covariance(Eigen::MatrixXd::Zero(1, 3)));
}

TEST_CASE("pca of an isotropic matrix") {
    CovMatrix c;
    c.entries = 0.09 * Eigen::MatrixXd::Identity(3, 3);
    const auto f = pca_top3(c);
    for (int n = 0; n < 3; ++n) {
        CHECK(f.eigenvalues[n] == doctest::Approx(0.09).epsilon(1e-12));
        CHECK(f.adjusted.col(n).norm() == doctest::Approx(0.3).epsilon(1e-12));
    }
}

TEST_CASE("pca of a diagonal matrix recovers axes") {
    CovMatrix c;
    c.entries = Eigen::Vector3d(4.0, 1.0, 0.25).asDiagonal();
    const auto f = pca_top3(c);
    CHECK(f.eigenvalues[0] == doctest::Approx(4.0));
    CHECK(f.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(f.eigenvalues[2] == doctest::Approx(0.25));
    Eigen::MatrixXd expect = Eigen::MatrixXd::Identity(3, 3);
    CHECK((f.loadings.cwiseAbs() - expect).cwiseAbs().maxCoeff() <= 1e-12);
    // sign convention makes the surviving entry positive
    CHECK(f.loadings.colwise().maxCoeff().minCoeff() > 0.0);
    CHECK(f.adjusted(0, 0) == doctest::Approx(2.0));
    CHECK(f.adjusted(1, 1) == doctest::Approx(1.0));
    CHECK(f.adjusted(2, 2) == doctest::Approx(0.5));
}

TEST_CASE("pca eigen-residual, orthonormality, and top-3 spectral reconstruction") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z;
    Eigen::MatrixXd a(8, 8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) a(i, j) = z(rng);
    CovMatrix c;
    c.entries = a * a.transpose();
    const auto f = pca_top3(c);

    for (int n = 0; n < 3; ++n) {
        const Eigen::VectorXd resid =
            c.entries * f.loadings.col(n) - f.eigenvalues[n] * f.loadings.col(n);
        CHECK(resid.cwiseAbs().maxCoeff() <=
              1e-8 * c.entries.cwiseAbs().rowwise().sum().maxCoeff());
        for (int m = 0; m < 3; ++m) {
            const double dot = f.loadings.col(m).dot(f.loadings.col(n));
            CHECK(std::abs(dot - (m == n ? 1.0 : 0.0)) <= 1e-10);
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(c.entries);
    Eigen::MatrixXd recon = Eigen::MatrixXd::Zero(8, 8);
    for (int n = 0; n < 3; ++n)
        recon += f.eigenvalues[n] * f.loadings.col(n) * f.loadings.col(n).transpose();
    Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(8, 8);
    for (int n = 0; n < 3; ++n) {
        const int i = 7 - n;  // Eigen sorts ascending
        oracle += full.eigenvalues()[i] * full.eigenvectors().col(i) *
                  full.eigenvectors().col(i).transpose();
    }
    CHECK((recon - oracle).cwiseAbs().maxCoeff() <= 1e-8);
}

namespace {
std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

PcaFactors factors_from_values(const std::vector<double>& tenors,
                               const std::function<double(double)>& f0) {
    PcaFactors f;
    f.eigenvalues = Eigen::Vector3d(1.0, 1.0, 1.0);
    f.adjusted.resize(static_cast<Eigen::Index>(tenors.size()), 3);
    f.loadings = f.adjusted;
    for (std::size_t i = 0; i < tenors.size(); ++i)
        for (int n = 0; n < 3; ++n)
            f.adjusted(static_cast<Eigen::Index>(i), n) = f0(tenors[i]);
    return f;
}
}  // namespace

TEST_CASE("chebyshev fit of a constant is T0 only") {
    const auto tenors = linspace(1.0, 30.0, 30);
    const auto f = factors_from_values(tenors, [](double) { return 0.01; });
    const auto v = fit_chebyshev(f, tenors);
    for (int n = 0; n < 3; ++n) {
        CHECK(v.coeffs(n, 0) == doctest::Approx(0.01).epsilon(1e-12));
        for (int j = 1; j < 4; ++j) CHECK(std::abs(v.coeffs(n, j)) <= 1e-12);
    }
}

TEST_CASE("chebyshev fit of a function linear in the mapped variable is T1 only") {
    const auto tenors = linspace(1.0, 30.0, 30);
    const double hi = 30.0;
    const auto f = factors_from_values(
        tenors, [hi](double tau) { return 0.02 * (2.0 * tau / hi - 1.0); });
    const auto v = fit_chebyshev(f, tenors);
    CHECK(std::abs(v.coeffs(0, 0)) <= 1e-12);
    CHECK(v.coeffs(0, 1) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(std::abs(v.coeffs(0, 2)) <= 1e-12);
    CHECK(std::abs(v.coeffs(0, 3)) <= 1e-12);
}

TEST_CASE("chebyshev fit of sin matches the normal-equations oracle") {
    const auto tenors = linspace(1.0, 30.0, 30);
    const auto f = factors_from_values(tenors, [](double tau) { return std::sin(tau); });
    const auto v = fit_chebyshev(f, tenors);

    // explicit 4x4 normal equations A'A c = A'y on the mapped argument
    Eigen::MatrixXd a(30, 4);
    Eigen::VectorXd y(30);
    for (int i = 0; i < 30; ++i) {
        const double x = 2.0 * tenors[i] / 30.0 - 1.0;
        a(i, 0) = 1.0;
        a(i, 1) = x;
        a(i, 2) = 2 * x * x - 1;
        a(i, 3) = 4 * x * x * x - 3 * x;
        y[i] = std::sin(tenors[i]);
    }
    const Eigen::VectorXd oracle = (a.transpose() * a).ldlt().solve(a.transpose() * y);
    for (int j = 0; j < 4; ++j) CHECK(v.coeffs(0, j) == doctest::Approx(oracle[j]).epsilon(1e-10));
}

TEST_CASE("fit optimality: coefficient perturbations do not reduce the residual") {
    const auto tenors = linspace(1.0, 30.0, 30);
    const auto f = factors_from_values(tenors, [](double tau) { return std::sin(tau); });
    const auto v = fit_chebyshev(f, tenors);
    const auto residual = [&](const Eigen::Matrix<double, 3, 4>& coeffs) {
        VolModel w = v;
        w.coeffs = coeffs;
        double s = 0.0;
        for (std::size_t i = 0; i < tenors.size(); ++i) {
            const double e = w.sigma_tilde(tenors[i])[0] - std::sin(tenors[i]);
            s += e * e;
        }
        return s;
    };
    const double base = residual(v.coeffs);
    for (int j = 0; j < 4; ++j)
        for (double eps : {1e-6, -1e-6}) {
            auto c = v.coeffs;
            c(0, j) += eps;
            CHECK(residual(c) >= base - 1e-18);
        }
}

TEST_CASE("fit rejects fewer than four distinct tenors") {
    const std::vector<double> tenors{1.0, 2.0, 2.0, 1.0};
    const auto f = factors_from_values(tenors, [](double tau) { return tau; });
    CHECK_THROWS(fit_chebyshev(f, tenors));
}

TEST_CASE("sigma_tilde evaluation identities") {
    VolModel v;
    v.fit_lo = 0.0;
    v.fit_hi = 30.0;
    v.coeffs.row(0) << 0.011, -0.004, 0.002, 0.0007;
    SUBCASE("domain midpoint gives c0 - c2") {
        CHECK(v.sigma_tilde(15.0)[0] == doctest::Approx(0.011 - 0.002).epsilon(1e-14));
    }
    SUBCASE("direct trigonometric evaluation at tau=1") {
        const double x = 2.0 * 1.0 / 30.0 - 1.0;
        double direct = 0.0;
        for (int j = 0; j < 4; ++j) direct += v.coeffs(0, j) * std::cos(j * std::acos(x));
        CHECK(v.sigma_tilde(1.0)[0] == doctest::Approx(direct).epsilon(1e-13));
    }
    SUBCASE("mapped argument clamps outside the domain") {
        CHECK(v.sigma_tilde(-2.0)[0] == doctest::Approx(v.sigma_tilde(0.0)[0]));
        CHECK(v.sigma_tilde(99.0)[0] == doctest::Approx(v.sigma_tilde(30.0)[0]));
    }
}

TEST_CASE("local vol scaling") {
    VolModel v;
    v.fit_lo = 0.0;
    v.fit_hi = 30.0;
    v.coeffs.row(0) << 0.01, 0.0, 0.0, 0.0;
    v.coeffs.row(1) << 0.02, 0.0, 0.0, 0.0;
    v.coeffs.row(2) << 0.03, 0.0, 0.0, 0.0;
    CHECK(v.scale(0.04) == doctest::Approx(0.2));
    CHECK(v.scale(1.0) == doctest::Approx(0.4));   // cap binds
    CHECK(v.local_vol(2.0, 0.0).cwiseAbs().maxCoeff() == 0.0);
    SUBCASE("monotone below the cap, constant above") {
        double prev = -1.0;
        for (double f = 0.0; f <= 0.16; f += 0.005) {
            const double s = v.scale(f);
            CHECK(s >= prev);
            prev = s;
        }
        CHECK(v.scale(0.16) == doctest::Approx(v.scale(10.0)));
    }
    SUBCASE("absolute-vol flag disables scaling") {
        VolModel w = v;
        w.proportional = false;
        CHECK(w.local_vol(2.0, 0.0001)[0] == doctest::Approx(0.01));
    }
}

TEST_CASE("proportional covariance scales rows before the moment") {
    // two days of levels; the proportional change matrix is built as
    // delta / sqrt(prev level), so the covariance of that matrix must equal
    // covariance() applied to the pre-scaled rows.
    Eigen::MatrixXd levels(3, 2);
    levels << 0.04, 0.09, 0.0425, 0.0875, 0.041, 0.09;
    Eigen::MatrixXd scaled(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            scaled(i, j) = (levels(i + 1, j) - levels(i, j)) / std::sqrt(levels(i, j));
    const auto direct = covariance(scaled, 252.0, true);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            double s = 0.0;
            for (int i = 0; i < 2; ++i) s += scaled(i, a) * scaled(i, b);
            CHECK(direct.entries(a, b) == doctest::Approx(252.0 * s / 2.0).epsilon(1e-12));
        }
}

TEST_CASE("end-to-end estimation from a synthetic series is well formed") {
    const auto v = testsupport::vol_model();
    CHECK(v.eigenvalues[0] >= v.eigenvalues[1]);
    CHECK(v.eigenvalues[1] >= v.eigenvalues[2]);
    CHECK(v.eigenvalues[2] >= 0.0);
    CHECK(v.proportional);
    CHECK(v.cap_m == doctest::Approx(0.4));
    CHECK(v.fit_lo == doctest::Approx(0.0));
    CHECK(v.fit_hi == doctest::Approx(30.0));
    // sigma_tilde stays finite and modest on the pricing grid
    for (double tau = 0.0; tau <= 5.0; tau += 0.5)
        CHECK(v.sigma_tilde(tau).cwiseAbs().maxCoeff() < 1.0);
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "finn/pricing.hpp"
#include "finn/trainer.hpp"
#include "support/synthetic.hpp"

using namespace finn;

namespace {
NetworkParams test_net(const CurveDataset& ds, const VolModel& vols, int width,
                       std::uint64_t seed) {
    return NetworkParams::init(ds.grid, vols, NetworkParams::default_norm(ds), width, seed);
}
}  // namespace

TEST_CASE("quote structure and conventions") {
    const auto ds = testsupport::dataset(10, 120);
    const auto vols = testsupport::vol_model();
    Pricer pricer(test_net(ds, vols, 8, 3));
    const auto& [sv, curve] = ds.records[0];
    const auto q = pricer.price(curve, sv, {1.0, 0.5, 0.02});
    CHECK(q.price >= 0.0);
    CHECK(q.curve_deltas.size() == 10);
    CHECK(q.theta == -q.dv_dtau1);
    CHECK(q.eval_time >= 0.0);
}

TEST_CASE("grid mismatch is a hard error") {
    const auto ds = testsupport::dataset(10, 120);
    const auto vols = testsupport::vol_model();
    Pricer pricer(test_net(ds, vols, 8, 3));
    const auto other = discretize(testsupport::base_params(), TenorGrid::make(25, 5.0));
    CHECK_THROWS(pricer.price(other, testsupport::base_params(), {1.0, 0.5, 0.02}));
    const auto& [sv, curve] = ds.records[0];
    CHECK_THROWS(pricer.price(curve, sv, {4.8, 0.5, 0.02}));  // outside the horizon
}

TEST_CASE("identical inputs give bit-identical quotes") {
    const auto ds = testsupport::dataset(10, 120);
    const auto vols = testsupport::vol_model();
    Pricer pricer(test_net(ds, vols, 8, 3));
    const auto& [sv, curve] = ds.records[1];
    const auto a = pricer.price(curve, sv, {1.7, 0.4, 0.015});
    const auto b = pricer.price(curve, sv, {1.7, 0.4, 0.015});
    CHECK(a.price == b.price);
    CHECK(a.theta == b.theta);
    CHECK((a.curve_deltas - b.curve_deltas).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("batch_price is elementwise price") {
    const auto ds = testsupport::dataset(10, 120);
    const auto vols = testsupport::vol_model();
    Pricer pricer(test_net(ds, vols, 8, 3));
    CHECK(pricer.batch_price({}).empty());

    std::vector<PricingRequest> reqs;
    for (int i = 0; i < 4; ++i)
        reqs.push_back({ds.records[i].second, ds.records[i].first, {0.5 + 0.3 * i, 0.5, 0.01 * i}});
    reqs.push_back(reqs[0]);  // duplicate
    const auto quotes = pricer.batch_price(reqs);
    REQUIRE(quotes.size() == 5);
    for (std::size_t i = 0; i < reqs.size(); ++i) {
        const auto single =
            pricer.price(reqs[i].curve, reqs[i].svensson, reqs[i].contract);
        CHECK(quotes[i].price == single.price);
    }
    CHECK(quotes[4].price == quotes[0].price);
}

TEST_CASE("curve deltas and theta match central differences of the network") {
    const auto ds = testsupport::dataset(10, 120);
    const auto vols = testsupport::vol_model();
    const auto net = test_net(ds, vols, 8, 11);
    Pricer pricer(net);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double h = 1e-5;
    for (int trial = 0; trial < 50; ++trial) {
        const auto& [sv, curve] = ds.records[rng() % ds.records.size()];
        CapletContract c;
        c.tau1 = 0.1 + 4.0 * u(rng);
        c.delta = 1.0 / 3.0 + u(rng) * (std::min(0.75, 5.0 - c.tau1) - 1.0 / 3.0);
        c.strike = 0.07 * u(rng);
        const auto q = pricer.price(curve, sv, c);
        for (int i = 0; i < 10; i += 3) {
            DiscreteCurve up = curve, dn = curve;
            up.rates[i] += h;
            dn.rates[i] -= h;
            const double fd =
                (pricer.price(up, sv, c).price - pricer.price(dn, sv, c).price) / (2 * h);
            CHECK(std::abs(q.curve_deltas[i] - fd) <= 1e-4 * std::max(1e-8, std::abs(fd)));
        }
        CapletContract cu = c, cd = c;
        cu.tau1 += h;
        cd.tau1 -= h;
        const double fd_tau =
            (pricer.price(curve, sv, cu).price - pricer.price(curve, sv, cd).price) / (2 * h);
        CHECK(std::abs(q.dv_dtau1 - fd_tau) <= 1e-4 * std::max(1e-8, std::abs(fd_tau)));
    }
}

TEST_CASE("zero-strike closed form: delta signs flip across the accrual region") {
    // oracle property backing the Greek sign conventions, on the analytic formula
    const auto grid = TenorGrid::make(25, 5.0);
    const auto C = integration_matrix(grid);
    const auto curve = discretize(testsupport::base_params(), grid);
    const double tau1 = 2.0, delta = 0.6, h = 1e-6;
    const auto e = zero_strike_with_derivs(curve, C, tau1, delta);
    for (int i = 0; i < 25; ++i) {
        DiscreteCurve up = curve, dn = curve;
        up.rates[i] += h;
        dn.rates[i] -= h;
        const double fd = (zero_strike_value(up, C, tau1, delta) -
                           zero_strike_value(dn, C, tau1, delta)) /
                          (2 * h);
        CHECK(e.d_rates[i] == doctest::Approx(fd).epsilon(1e-5));
        // sign pattern away from the interpolation panels around tau1 and
        // tau1+delta, where mixed weights can take either sign
        const double tau = grid.nodes[i], dtau = grid.dtau();
        if (tau < tau1 - dtau) CHECK(e.d_rates[i] <= 1e-15);          // discounting both bonds
        if (tau > tau1 + dtau && tau < tau1 + delta - dtau)
            CHECK(e.d_rates[i] >= -1e-15);                            // only the far bond
    }
}

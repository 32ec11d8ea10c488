#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "finn/market_data.hpp"
#include "support/synthetic.hpp"

using namespace finn;

TEST_CASE("svensson forward at tau=0 is beta0+beta1") {
    SvenssonParams p = testsupport::base_params();
    CHECK(svensson_forward(p, 0.0) == doctest::Approx(p.beta0 + p.beta1).epsilon(1e-15));
}

TEST_CASE("constant curve degenerate case") {
    SvenssonParams p;
    p.beta0 = 0.03;
    p.beta1 = p.beta2 = p.beta3 = 0.0;
    p.tau1 = p.tau2 = 1.0;
    CHECK(svensson_forward(p, 2.5) == doctest::Approx(0.03).epsilon(1e-15));
}

TEST_CASE("svensson forward matches direct scalar evaluation") {
    SvenssonParams p;
    p.beta0 = 0.02;
    p.beta1 = 0.01;
    p.beta2 = 0.005;
    p.beta3 = 0.0;
    p.tau1 = 2.0;
    p.tau2 = 1.0;
    // 0.02 + (0.01 + 0.005 * 2/2) * exp(-1)
    CHECK(svensson_forward(p, 2.0) == doctest::Approx(0.025518191617571635).epsilon(1e-15));
}

TEST_CASE("flat curve has zero tenor slope") {
    SvenssonParams p;
    p.beta0 = 0.04;
    p.beta1 = p.beta2 = p.beta3 = 0.0;
    p.tau1 = 1.3;
    p.tau2 = 4.0;
    for (double tau : {0.0, 0.5, 2.0, 5.0}) CHECK(svensson_dtau(p, tau) == 0.0);
}

TEST_CASE("slope at tau=0 with only beta1 is -beta1/tau1") {
    SvenssonParams p;
    p.beta0 = 0.0;
    p.beta1 = 0.01;
    p.beta2 = p.beta3 = 0.0;
    p.tau1 = 1.0;
    p.tau2 = 1.0;
    CHECK(svensson_dtau(p, 0.0) == doctest::Approx(-0.01).epsilon(1e-15));
}

TEST_CASE("analytic slope matches central differences at 100 random draws") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double h = 1e-6;
    for (int i = 0; i < 100; ++i) {
        SvenssonParams p;
        p.beta0 = 0.01 + 0.06 * u(rng);
        p.beta1 = -0.03 + 0.06 * u(rng);
        p.beta2 = -0.02 + 0.04 * u(rng);
        p.beta3 = -0.02 + 0.04 * u(rng);
        p.tau1 = 0.5 + 3.0 * u(rng);
        p.tau2 = 2.0 + 12.0 * u(rng);
        const double tau = 0.01 + 4.99 * u(rng);
        const double fd = (svensson_forward(p, tau + h) - svensson_forward(p, tau - h)) / (2 * h);
        const double an = svensson_dtau(p, tau);
        CHECK(std::abs(an - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("discretize is pointwise scalar evaluation") {
    const auto p = testsupport::base_params();
    SUBCASE("flat curve") {
        SvenssonParams flat;
        flat.beta0 = 0.03;
        flat.beta1 = flat.beta2 = flat.beta3 = 0.0;
        flat.tau1 = flat.tau2 = 1.0;
        const auto c = discretize(flat, TenorGrid::make(5, 5.0));
        for (int i = 0; i < 5; ++i) CHECK(c.rates[i] == doctest::Approx(0.03).epsilon(1e-15));
    }
    SUBCASE("node zero is the short rate") {
        const auto c = discretize(p, TenorGrid::make(10, 5.0));
        CHECK(c.rates[0] == doctest::Approx(p.beta0 + p.beta1).epsilon(1e-15));
        CHECK(c.short_rate() == c.rates[0]);
    }
    SUBCASE("K=25 pointwise") {
        const auto grid = TenorGrid::make(25, 5.0);
        const auto c = discretize(p, grid);
        for (int i = 0; i < 25; ++i)
            CHECK(c.rates[i] == doctest::Approx(svensson_forward(p, grid.nodes[i])).epsilon(1e-15));
    }
}

TEST_CASE("quantile estimator: linear interpolation") {
    std::vector<double> v{1, 2, 3, 4, 5};
    CHECK(quantile_linear(v, 0.0) == doctest::Approx(1.0));
    CHECK(quantile_linear(v, 1.0) == doctest::Approx(5.0));
    CHECK(quantile_linear(v, 0.5) == doctest::Approx(3.0));
    CHECK(quantile_linear(v, 0.25) == doctest::Approx(2.0));
    CHECK(quantile_linear(v, 0.1) == doctest::Approx(1.4));
}

namespace {
std::string write_rows(const std::vector<SvenssonParams>& rows, const char* name) {
    std::string path = std::string("md_") + name + ".csv";
    testsupport::write_series_csv(rows, path);
    return path;
}
}  // namespace

TEST_CASE("identical rows all survive ingest") {
    std::vector<SvenssonParams> rows(100, testsupport::base_params());
    const auto ds = ingest(write_rows(rows, "ident"), TenorGrid::make(10, 5.0));
    CHECK(ds.records.size() == 100);
    CHECK(ds.filter_report.rows_in == 100);
    CHECK(ds.filter_report.dropped_parse == 0);
    CHECK(ds.filter_report.dropped_quantile == 0);
    CHECK(ds.filter_report.dropped_positivity == 0);
    CHECK(ds.filter_report.rows_out == 100);
}

TEST_CASE("quantile filter drops a beta0 outlier in a 21-row file") {
    std::vector<SvenssonParams> rows(20, testsupport::base_params());
    SvenssonParams outlier = testsupport::base_params();
    outlier.beta0 = 0.10;  // above q95 = 0.045 (sorted index 19 of 21)
    rows.push_back(outlier);
    const auto ds = ingest(write_rows(rows, "outlier"), TenorGrid::make(10, 5.0));
    CHECK(ds.filter_report.dropped_quantile == 1);
    CHECK(ds.records.size() == 20);
}

TEST_CASE("positivity filter drops negative-forward rows") {
    std::vector<SvenssonParams> rows(70, testsupport::base_params());
    SvenssonParams bad = testsupport::base_params();
    bad.beta1 = -0.06;  // short rate 0.045 - 0.06 < 0
    rows.insert(rows.end(), 30, bad);  // common enough to pass the quantile stage
    const auto ds = ingest(write_rows(rows, "neg"), TenorGrid::make(10, 5.0));
    CHECK(ds.filter_report.dropped_quantile == 0);
    CHECK(ds.filter_report.dropped_positivity == 30);
    CHECK(ds.filter_report.rows_out == 70);
}

TEST_CASE("stage counts sum and parse drops are tallied") {
    const auto series = testsupport::svensson_series(200, 3);
    const auto path = write_rows(series, "sum");
    {
        std::ofstream app(path, std::ios::app);
        app << "2020-01-01,0.03,,0.0,0.0,1.0,1.0\n";   // empty cell
        app << "2020-01-02,abc,0.0,0.0,0.0,1.0,1.0\n"; // non-numeric
    }
    const auto ds = ingest(path, TenorGrid::make(10, 5.0));
    const auto& fr = ds.filter_report;
    CHECK(fr.rows_in == 202);
    CHECK(fr.dropped_parse == 2);
    CHECK(fr.rows_in == fr.rows_out + fr.dropped_parse + fr.dropped_quantile +
                            fr.dropped_positivity);
    CHECK(static_cast<long>(ds.records.size()) == fr.rows_out);
}

TEST_CASE("filter idempotence holds with persisted bounds, not with recomputed ones") {
    const auto series = testsupport::svensson_series(400, 11);
    const auto grid = TenorGrid::make(10, 5.0);
    const auto ds = ingest(write_rows(series, "idem"), grid);
    REQUIRE(ds.filter_report.dropped_quantile > 0);

    std::vector<SvenssonParams> kept;
    for (const auto& [sv, curve] : ds.records) kept.push_back(sv);
    const auto path2 = write_rows(kept, "idem2");

    IngestOptions persisted;
    persisted.bounds = ds.filter_report.bounds;
    const auto again = ingest(path2, grid, persisted);
    CHECK(again.filter_report.dropped_quantile == 0);
    CHECK(again.filter_report.rows_out == ds.filter_report.rows_out);

    const auto recomputed = ingest(path2, grid);
    CHECK(recomputed.filter_report.dropped_quantile > 0);
}

TEST_CASE("tab-delimited input is auto-detected") {
    std::ofstream out("md_tabs.tsv");
    out << "Date\tBETA0\tBETA1\tBETA2\tBETA3\tTAU1\tTAU2\n";
    out << "2020-01-01\t0.04\t-0.01\t0.01\t0.01\t1.5\t9.0\n";
    out.close();
    long rows_in = 0, dropped = 0;
    const auto rows = read_svensson_file("md_tabs.tsv", false, &rows_in, &dropped);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].beta0 == doctest::Approx(0.04));
    CHECK(dropped == 0);
}

TEST_CASE("percent-units flag converts rate parameters") {
    std::ofstream out("md_pct.csv");
    out << "Date,BETA0,BETA1,BETA2,BETA3,TAU1,TAU2\n";
    out << "2020-01-01,4.0,-1.0,1.0,1.0,1.5,9.0\n";
    out.close();
    const auto rows = read_svensson_file("md_pct.csv", true);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].beta0 == doctest::Approx(0.04));
    CHECK(rows[0].tau1 == doctest::Approx(1.5));  // decay scales stay in years
}

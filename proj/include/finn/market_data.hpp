#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace finn {

/// Six-parameter Svensson forward-curve specification for one observation date.
/// Rate parameters are decimal per annum (0.03 = 3%), decay scales in years.
struct SvenssonParams {
    double beta0 = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double beta3 = 0.0;
    double tau1 = 1.0;
    double tau2 = 1.0;
    std::string date;

    bool valid() const;
};

/// Equally spaced tenor grid on [0, tau_max]; nodes[0] = 0, nodes[K-1] = tau_max.
struct TenorGrid {
    int k_count = 0;
    double tau_max = 0.0;
    std::vector<double> nodes;

    static TenorGrid make(int k_count, double tau_max);
    double dtau() const { return tau_max / (k_count - 1); }
    bool same_as(const TenorGrid& other, double tol = 1e-12) const;
};

/// Forward rates on a fixed tenor grid; the PDE state vector f.
/// rates[0] is the short rate r = f(t,0).
struct DiscreteCurve {
    TenorGrid grid;
    Eigen::VectorXd rates;

    double short_rate() const { return rates[0]; }
};

/// Per-parameter [q05, q95] bounds used by the quantile filter. Persisted so
/// that re-filtering an already-filtered dataset is a no-op.
using QuantileBounds = std::map<std::string, std::pair<double, double>>;

struct FilterReport {
    long rows_in = 0;
    long dropped_parse = 0;
    long dropped_quantile = 0;
    long dropped_positivity = 0;
    long rows_out = 0;
    QuantileBounds bounds;
};

struct CurveDataset {
    TenorGrid grid;
    std::vector<std::pair<SvenssonParams, DiscreteCurve>> records;
    FilterReport filter_report;
};

/// Instantaneous Svensson forward rate at tenor tau (years).
double svensson_forward(const SvenssonParams& p, double tau);

/// Analytic tenor derivative df/dtau of the Svensson forward curve.
double svensson_dtau(const SvenssonParams& p, double tau);

/// Evaluate the forward curve at every grid node.
DiscreteCurve discretize(const SvenssonParams& p, const TenorGrid& grid);

/// Linear-interpolation empirical quantile, q in [0,1].
double quantile_linear(std::vector<double> values, double q);

struct IngestOptions {
    double eps = 0.005;            // positivity floor on discretized rates
    bool percent_units = false;    // input rates stored in percent, divide by 100
    std::optional<QuantileBounds> bounds;  // reuse persisted bounds instead of recomputing
};

/// Parse a delimited Svensson parameter file (comma or tab, auto-detected).
/// Rows with missing or non-numeric fields are dropped and counted.
std::vector<SvenssonParams> read_svensson_file(const std::string& path,
                                               bool percent_units,
                                               long* rows_in = nullptr,
                                               long* dropped_parse = nullptr);

/// Apply the quantile and positivity filters to parsed rows and discretize.
CurveDataset filter_and_discretize(const std::vector<SvenssonParams>& rows,
                                   const TenorGrid& grid,
                                   const IngestOptions& opt,
                                   long rows_in, long dropped_parse);

/// Full ingestion pipeline: parse, filter, discretize. Throws on unreadable
/// input or an empty post-filter dataset.
CurveDataset ingest(const std::string& path, const TenorGrid& grid,
                    const IngestOptions& opt = {});

/// Re-export records as a delimited file in the ingest column layout.
void write_svensson_csv(const std::vector<std::pair<SvenssonParams, DiscreteCurve>>& records,
                        const std::string& path);

}  // namespace finn

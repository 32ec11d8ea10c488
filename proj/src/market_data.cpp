#include "finn/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace finn {

bool SvenssonParams::valid() const {
    const double vals[] = {beta0, beta1, beta2, beta3, tau1, tau2};
    for (double v : vals)
        if (!std::isfinite(v)) return false;
    return tau1 > 0.0 && tau2 > 0.0;
}

TenorGrid TenorGrid::make(int k_count, double tau_max) {
    if (k_count < 2) throw std::invalid_argument("TenorGrid: k_count must be >= 2");
    if (tau_max <= 0.0) throw std::invalid_argument("TenorGrid: tau_max must be > 0");
    TenorGrid g;
    g.k_count = k_count;
    g.tau_max = tau_max;
    g.nodes.resize(k_count);
    const double d = tau_max / (k_count - 1);
    for (int i = 0; i < k_count; ++i) g.nodes[i] = i * d;
    g.nodes.back() = tau_max;
    return g;
}

bool TenorGrid::same_as(const TenorGrid& other, double tol) const {
    return k_count == other.k_count && std::abs(tau_max - other.tau_max) <= tol;
}

double svensson_forward(const SvenssonParams& p, double tau) {
    if (tau < 0.0) throw std::invalid_argument("svensson_forward: tau must be >= 0");
    const double x1 = tau / p.tau1;
    const double x2 = tau / p.tau2;
    const double f = p.beta0 + (p.beta1 + p.beta2 * x1) * std::exp(-x1) +
                     p.beta3 * x2 * std::exp(-x2);
    if (!std::isfinite(f)) throw std::invalid_argument("svensson_forward: non-finite result");
    return f;
}

double svensson_dtau(const SvenssonParams& p, double tau) {
    if (tau < 0.0) throw std::invalid_argument("svensson_dtau: tau must be >= 0");
    const double x1 = tau / p.tau1;
    const double x2 = tau / p.tau2;
    const double d = (-p.beta1 / p.tau1 + (p.beta2 / p.tau1) * (1.0 - x1)) * std::exp(-x1) +
                     (p.beta3 / p.tau2) * (1.0 - x2) * std::exp(-x2);
    if (!std::isfinite(d)) throw std::invalid_argument("svensson_dtau: non-finite result");
    return d;
}

DiscreteCurve discretize(const SvenssonParams& p, const TenorGrid& grid) {
    DiscreteCurve c;
    c.grid = grid;
    c.rates.resize(grid.k_count);
    for (int i = 0; i < grid.k_count; ++i) c.rates[i] = svensson_forward(p, grid.nodes[i]);
    return c;
}

double quantile_linear(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile_linear: empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * (static_cast<double>(values.size()) - 1.0);
    const auto lo = static_cast<size_t>(std::floor(pos));
    const auto hi = static_cast<size_t>(std::ceil(pos));
    const double w = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - w) + values[hi] * w;
}

namespace {

// Splits on the detected delimiter; returns trimmed cells.
std::vector<std::string> split_row(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, delim)) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        size_t b = cell.find_first_not_of(' ');
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b));
    }
    return out;
}

bool parse_double(const std::string& s, double* out) {
    if (s.empty()) return false;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return false;
    if (!std::isfinite(v)) return false;
    *out = v;
    return true;
}

std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

std::vector<SvenssonParams> read_svensson_file(const std::string& path, bool percent_units,
                                               long* rows_in, long* dropped_parse) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);

    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty input file: " + path);
    const char delim = header.find('\t') != std::string::npos ? '\t' : ',';

    const auto cols = split_row(header, delim);
    const std::vector<std::string> wanted = {"DATE",  "BETA0", "BETA1", "BETA2",
                                             "BETA3", "TAU1",  "TAU2"};
    std::vector<int> idx(wanted.size(), -1);
    for (size_t w = 0; w < wanted.size(); ++w)
        for (size_t c = 0; c < cols.size(); ++c)
            if (upper(cols[c]) == wanted[w]) idx[w] = static_cast<int>(c);
    for (size_t w = 0; w < wanted.size(); ++w)
        if (idx[w] < 0)
            throw std::runtime_error("missing required column " + wanted[w] + " in " + path);

    std::vector<SvenssonParams> rows;
    long n_in = 0, n_drop = 0;
    std::string line;
    const double unit = percent_units ? 0.01 : 1.0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++n_in;
        const auto cells = split_row(line, delim);
        SvenssonParams p;
        bool ok = true;
        auto cell = [&](int w) -> std::string {
            return static_cast<size_t>(idx[w]) < cells.size() ? cells[idx[w]] : std::string();
        };
        p.date = cell(0);
        double b0, b1, b2, b3, t1, t2;
        ok = ok && parse_double(cell(1), &b0);
        ok = ok && parse_double(cell(2), &b1);
        ok = ok && parse_double(cell(3), &b2);
        ok = ok && parse_double(cell(4), &b3);
        ok = ok && parse_double(cell(5), &t1);
        ok = ok && parse_double(cell(6), &t2);
        if (ok) {
            p.beta0 = b0 * unit;
            p.beta1 = b1 * unit;
            p.beta2 = b2 * unit;
            p.beta3 = b3 * unit;
            p.tau1 = t1;
            p.tau2 = t2;
            ok = p.valid();
        }
        if (!ok) {
            ++n_drop;
            continue;
        }
        rows.push_back(std::move(p));
    }
    if (rows_in) *rows_in = n_in;
    if (dropped_parse) *dropped_parse = n_drop;
    return rows;
}

CurveDataset filter_and_discretize(const std::vector<SvenssonParams>& rows, const TenorGrid& grid,
                                   const IngestOptions& opt, long rows_in, long dropped_parse) {
    CurveDataset ds;
    ds.grid = grid;
    ds.filter_report.rows_in = rows_in;
    ds.filter_report.dropped_parse = dropped_parse;

    QuantileBounds bounds;
    if (opt.bounds) {
        bounds = *opt.bounds;
    } else if (!rows.empty()) {
        const std::vector<std::string> names = {"beta0", "beta1", "beta2", "beta3", "tau1", "tau2"};
        for (size_t j = 0; j < names.size(); ++j) {
            std::vector<double> col;
            col.reserve(rows.size());
            for (const auto& r : rows) {
                const double vals[] = {r.beta0, r.beta1, r.beta2, r.beta3, r.tau1, r.tau2};
                col.push_back(vals[j]);
            }
            bounds[names[j]] = {quantile_linear(col, 0.05), quantile_linear(col, 0.95)};
        }
    }
    ds.filter_report.bounds = bounds;

    auto within = [&](const SvenssonParams& r) {
        const std::pair<std::string, double> vals[] = {
            {"beta0", r.beta0}, {"beta1", r.beta1}, {"beta2", r.beta2},
            {"beta3", r.beta3}, {"tau1", r.tau1},   {"tau2", r.tau2}};
        for (const auto& [name, v] : vals) {
            const auto it = bounds.find(name);
            if (it == bounds.end()) continue;
            if (v < it->second.first || v > it->second.second) return false;
        }
        return true;
    };

    for (const auto& r : rows) {
        if (!within(r)) {
            ++ds.filter_report.dropped_quantile;
            continue;
        }
        DiscreteCurve c = discretize(r, grid);
        if ((c.rates.array() < opt.eps).any()) {
            ++ds.filter_report.dropped_positivity;
            continue;
        }
        ds.records.emplace_back(r, std::move(c));
    }
    ds.filter_report.rows_out = static_cast<long>(ds.records.size());
    return ds;
}

CurveDataset ingest(const std::string& path, const TenorGrid& grid, const IngestOptions& opt) {
    long rows_in = 0, dropped_parse = 0;
    const auto rows = read_svensson_file(path, opt.percent_units, &rows_in, &dropped_parse);
    CurveDataset ds = filter_and_discretize(rows, grid, opt, rows_in, dropped_parse);
    if (ds.records.empty()) throw std::runtime_error("ingest: no records survive filtering");
    return ds;
}

void write_svensson_csv(const std::vector<std::pair<SvenssonParams, DiscreteCurve>>& records,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << "Date,BETA0,BETA1,BETA2,BETA3,TAU1,TAU2\n";
    out.precision(17);
    for (const auto& [p, c] : records) {
        out << p.date << ',' << p.beta0 << ',' << p.beta1 << ',' << p.beta2 << ',' << p.beta3
            << ',' << p.tau1 << ',' << p.tau2 << '\n';
    }
}

}  // namespace finn

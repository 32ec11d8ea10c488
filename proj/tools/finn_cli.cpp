// finn command-line front end: ingest market data, estimate the volatility
// model, train the pricing network, and price/benchmark against Monte Carlo.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "finn/bench.hpp"
#include "finn/mc.hpp"
#include "finn/pricing.hpp"
#include "finn/serialize.hpp"
#include "finn/trainer.hpp"

namespace {

using nlohmann::json;

finn::SvenssonParams svensson_from_doc(const json& j) {
    finn::SvenssonParams p;
    p.date = j.value("date", std::string{});
    p.beta0 = j.at("beta0").get<double>();
    p.beta1 = j.at("beta1").get<double>();
    p.beta2 = j.at("beta2").get<double>();
    p.beta3 = j.at("beta3").get<double>();
    p.tau1 = j.at("tau1").get<double>();
    p.tau2 = j.at("tau2").get<double>();
    return p;
}

/// Curve file: {"svensson": {...}} evaluated on the grid, or
/// {"rates": [...]} taken as the discretized curve directly.
finn::DiscreteCurve load_curve_file(const std::string& path, const finn::TenorGrid& grid,
                                    finn::SvenssonParams* sv_out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open curve file: " + path);
    const json doc = json::parse(in);
    if (doc.contains("svensson")) {
        const auto sv = svensson_from_doc(doc.at("svensson"));
        if (sv_out) *sv_out = sv;
        return finn::discretize(sv, grid);
    }
    if (doc.contains("rates")) {
        finn::DiscreteCurve c;
        c.grid = grid;
        const auto& a = doc.at("rates");
        if (static_cast<int>(a.size()) != grid.k_count)
            throw std::runtime_error("curve file rates length does not match grid");
        c.rates.resize(grid.k_count);
        for (int i = 0; i < grid.k_count; ++i) c.rates[i] = a[i].get<double>();
        return c;
    }
    throw std::runtime_error("curve file needs a 'svensson' or 'rates' field");
}

json quote_to_json(const finn::PriceQuote& q) {
    json deltas = json::array();
    for (Eigen::Index i = 0; i < q.curve_deltas.size(); ++i) deltas.push_back(q.curve_deltas[i]);
    return {{"price", q.price},
            {"theta", q.theta},
            {"dv_dtau1", q.dv_dtau1},
            {"curve_deltas", std::move(deltas)},
            {"eval_time", q.eval_time}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HJM caplet pricing: PDE-trained network with a Monte Carlo oracle"};
    app.require_subcommand(1);

    // ---- ingest -------------------------------------------------------------
    std::string in_path, out_path = "curves.json";
    int k = 25;
    double tau_max = 5.0, eps = 0.005;
    bool percent_units = false;
    auto* ingest = app.add_subcommand("ingest", "Filter a Svensson parameter file to curves.json");
    ingest->add_option("--input", in_path, "Delimited Svensson parameter file")->required();
    ingest->add_option("--k", k, "Tenor grid nodes");
    ingest->add_option("--tau-max", tau_max, "Grid horizon in years");
    ingest->add_option("--eps", eps, "Positivity floor on discretized rates");
    ingest->add_flag("--percent-units", percent_units, "Input rates are in percent");
    ingest->add_option("--out", out_path, "Output dataset path");

    // ---- estimate-vol -------------------------------------------------------
    std::string vol_in, vol_out = "vol.json";
    double annualization = 252.0, cap_m = 0.4;
    bool absolute_changes = false;
    auto* estvol = app.add_subcommand("estimate-vol", "PCA volatility model from a curve series");
    estvol->add_option("--input", vol_in, "Delimited Svensson parameter file")->required();
    estvol->add_option("--annualization", annualization, "Trading days per year");
    estvol->add_option("--cap", cap_m, "Local volatility cap M");
    estvol->add_flag("--absolute", absolute_changes, "Use absolute instead of proportional changes");
    estvol->add_flag("--percent-units", percent_units, "Input rates are in percent");
    estvol->add_option("--out", vol_out, "Output volatility model path");

    // ---- train ----------------------------------------------------------
    std::string data_path, vol_path, model_out = "model.json", history_out = "history.csv";
    std::string preset = "desk";
    int train_k = 0, width_override = 0;
    std::uint64_t seed = 7;
    auto* train = app.add_subcommand("train", "Train the pricing network");
    train->add_option("--data", data_path, "curves.json from ingest")->required();
    train->add_option("--vol", vol_path, "vol.json from estimate-vol")->required();
    train->add_option("--k", train_k, "Expected grid size (consistency check)");
    train->add_option("--preset", preset, "desk or full schedule")
        ->check(CLI::IsMember({"desk", "full"}));
    train->add_option("--width", width_override, "Hidden width override");
    train->add_option("--seed", seed, "Training seed");
    train->add_option("--out", model_out, "Checkpoint path");
    train->add_option("--history", history_out, "Loss history CSV path");

    // ---- mc-price -----------------------------------------------------------
    std::string curve_path, model_path;
    double tau1 = 1.0, delta = 0.5, strike = 0.02, dt = 0.01;
    int n_paths = 10000;
    bool antithetic = false;
    finn::SvenssonParams inline_sv;
    auto* mc = app.add_subcommand("mc-price", "Monte Carlo caplet price");
    mc->add_option("--curve", curve_path, "Curve JSON (svensson or rates)");
    mc->add_option("--vol", vol_path, "vol.json")->required();
    mc->add_option("--tau1", tau1, "Years to settlement");
    mc->add_option("--delta", delta, "Accrual period in years");
    mc->add_option("--strike", strike, "Strike rate");
    mc->add_option("--k", k, "Tenor grid nodes");
    mc->add_option("--tau-max", tau_max, "Grid horizon in years");
    mc->add_option("--paths", n_paths, "Simulation paths");
    mc->add_option("--dt", dt, "Time step in years");
    mc->add_option("--seed", seed, "Simulation seed");
    mc->add_flag("--antithetic", antithetic, "Antithetic pairing");
    mc->add_option("--beta0", inline_sv.beta0, "Inline Svensson beta0");
    mc->add_option("--beta1", inline_sv.beta1, "Inline Svensson beta1");
    mc->add_option("--beta2", inline_sv.beta2, "Inline Svensson beta2");
    mc->add_option("--beta3", inline_sv.beta3, "Inline Svensson beta3");
    mc->add_option("--sv-tau1", inline_sv.tau1, "Inline Svensson tau1");
    mc->add_option("--sv-tau2", inline_sv.tau2, "Inline Svensson tau2");

    // ---- price / greeks -------------------------------------------------
    auto add_price_opts = [&](CLI::App* cmd) {
        cmd->add_option("--model", model_path, "model.json checkpoint")->required();
        cmd->add_option("--curve", curve_path, "Curve JSON (svensson or rates)")->required();
        cmd->add_option("--tau1", tau1, "Years to settlement");
        cmd->add_option("--delta", delta, "Accrual period in years");
        cmd->add_option("--strike", strike, "Strike rate");
    };
    auto* price = app.add_subcommand("price", "Network price and Greeks as JSON");
    add_price_opts(price);
    auto* greeks = app.add_subcommand("greeks", "Curve delta vector as CSV");
    add_price_opts(greeks);

    // ---- bench ----------------------------------------------------------
    std::string bench_out = "results";
    int bench_n = 1000;
    double max_mae = -1.0;
    auto* bench = app.add_subcommand("bench", "Compare network vs Monte Carlo");
    bench->add_option("--model", model_path, "model.json checkpoint")->required();
    bench->add_option("--data", data_path, "curves.json test pool")->required();
    bench->add_option("--n", bench_n, "Test contracts");
    bench->add_option("--paths", n_paths, "MC paths per contract");
    bench->add_option("--dt", dt, "MC time step");
    bench->add_option("--seed", seed, "Test-set and MC seed");
    bench->add_option("--out", bench_out, "Output directory for CSV tables");
    bench->add_option("--max-mae", max_mae, "Fail (exit 1) if MAE exceeds this");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            finn::IngestOptions opt;
            opt.eps = eps;
            opt.percent_units = percent_units;
            const auto ds = finn::ingest(in_path, finn::TenorGrid::make(k, tau_max), opt);
            finn::save_curves(ds, out_path);
            const auto& fr = ds.filter_report;
            std::cout << "rows_in=" << fr.rows_in << " dropped_parse=" << fr.dropped_parse
                      << " dropped_quantile=" << fr.dropped_quantile
                      << " dropped_positivity=" << fr.dropped_positivity
                      << " rows_out=" << fr.rows_out << " -> " << out_path << std::endl;
        } else if (*estvol) {
            long rows_in = 0, skipped = 0;
            auto series = finn::read_svensson_file(vol_in, percent_units, &rows_in, &skipped);
            finn::VolEstimationConfig cfg = finn::VolEstimationConfig::fed_annual();
            cfg.annualization = annualization;
            cfg.cap_m = cap_m;
            cfg.proportional = !absolute_changes;
            const auto vols = finn::estimate_vol(series, cfg);
            finn::save_vol(vols, vol_out);
            std::cout << "rows=" << series.size() << " skipped=" << skipped
                      << " eigenvalues=" << vols.eigenvalues.transpose() << " -> " << vol_out
                      << std::endl;
        } else if (*train) {
            const auto ds = finn::load_curves(data_path);
            const auto vols = finn::load_vol(vol_path);
            if (train_k > 0 && train_k != ds.grid.k_count)
                throw std::runtime_error("--k does not match the dataset grid");
            finn::TrainConfig cfg =
                preset == "full" ? finn::TrainConfig::full() : finn::TrainConfig::desk();
            cfg.seed = seed;
            if (width_override > 0) cfg.hidden_width = width_override;
            const auto res = finn::train(ds, vols, cfg, &std::cout);
            finn::save_model(res.params, model_out);
            finn::write_history_csv(res.history, history_out);
            std::cout << "checkpoint -> " << model_out << ", history -> " << history_out
                      << std::endl;
        } else if (*mc) {
            const auto grid = finn::TenorGrid::make(k, tau_max);
            finn::DiscreteCurve curve = curve_path.empty()
                                            ? finn::discretize(inline_sv, grid)
                                            : load_curve_file(curve_path, grid, nullptr);
            const auto vols = finn::load_vol(vol_path);
            const auto C = finn::integration_matrix(grid);
            finn::McConfig mcc{n_paths, dt, seed, antithetic};
            const auto r = finn::simulate_price(curve, vols, C, {tau1, delta, strike}, mcc);
            std::cout << json{{"price", r.price},
                              {"std_error", r.std_error},
                              {"elapsed_s", r.elapsed_s}}
                             .dump(2)
                      << std::endl;
        } else if (*price || *greeks) {
            auto model = finn::load_model(model_path);
            finn::SvenssonParams sv;
            const auto curve = load_curve_file(curve_path, model.grid, &sv);
            finn::Pricer pricer(std::move(model));
            const auto q = pricer.price(curve, sv, {tau1, delta, strike});
            if (*price) {
                std::cout << quote_to_json(q).dump(2) << std::endl;
            } else {
                std::cout.precision(17);
                std::cout << "node,tenor,delta\n";
                for (Eigen::Index i = 0; i < q.curve_deltas.size(); ++i)
                    std::cout << i << ',' << curve.grid.nodes[i] << ',' << q.curve_deltas[i]
                              << '\n';
            }
        } else if (*bench) {
            const auto model = finn::load_model(model_path);
            const auto ds = finn::load_curves(data_path);
            finn::BenchConfig cfg;
            cfg.n_contracts = bench_n;
            cfg.seed = seed;
            cfg.mc.n_paths = n_paths;
            cfg.mc.dt = dt;
            cfg.mc.seed = seed;
            const auto rep = finn::run_benchmark(model, ds, cfg);
            finn::emit_tables({rep}, bench_out);
            std::cout << "k=" << rep.k << " mae=" << rep.mae
                      << " mc_s=" << rep.mc_time_per_contract
                      << " finn_s=" << rep.finn_time_per_contract << " speedup=" << rep.speedup
                      << " -> " << bench_out << "/{timing,error,scatter}.csv" << std::endl;
            if (max_mae >= 0.0 && rep.mae > max_mae) {
                std::cerr << "MAE " << rep.mae << " exceeds gate " << max_mae << std::endl;
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    }
    return 0;
}

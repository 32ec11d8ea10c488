#include "finn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace finn {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<PricingRequest> make_test_set(const CurveDataset& dataset, const SamplerConfig& cfg,
                                          int n, std::uint64_t seed) {
    if (dataset.records.empty()) throw std::invalid_argument("make_test_set: empty dataset");
    // keyed off the raw seed so the stream never collides with training,
    // which seeds its generator with the seed value directly
    std::mt19937_64 rng(splitmix64(seed ^ 0xb5297a4d3f84d5a3ULL));
    const auto batch = sample_batch(dataset, cfg, n, rng);
    std::vector<PricingRequest> set;
    set.reserve(n);
    for (int i = 0; i < n; ++i) {
        const auto& it = batch[i];  // skip the appended zero-strike clones
        const auto& [sv, curve] = dataset.records[it.record];
        set.push_back({curve, sv, {it.tau1, it.delta, it.strike}});
    }
    return set;
}

BenchReport run_benchmark(const NetworkParams& model, const CurveDataset& dataset,
                          const BenchConfig& cfg) {
    const auto set = make_test_set(dataset, cfg.sampler, cfg.n_contracts, cfg.seed);
    const IntegrationMatrix C = integration_matrix(dataset.grid);
    Pricer pricer(model);

    BenchReport rep;
    rep.k = dataset.grid.k_count;
    rep.n_contracts = cfg.n_contracts;

    // MC leg: priced once (too slow to repeat), timed around the pure calls
    std::vector<double> mc_prices(set.size());
    double mc_total = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        McConfig mcc = cfg.mc;
        mcc.seed = splitmix64(cfg.mc.seed + i);
        // contracts can settle sooner than one nominal step; shrink dt so the
        // path still lands exactly on tau1
        if (set[i].contract.tau1 > 0.0) mcc.dt = std::min(mcc.dt, set[i].contract.tau1);
        const auto t0 = std::chrono::steady_clock::now();
        McResult r;
        try {
            r = simulate_price(set[i].curve, model.vols, C, set[i].contract, mcc);
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "benchmark MC failure on contract " << i << " (tau1=" << set[i].contract.tau1
                << " delta=" << set[i].contract.delta << " strike=" << set[i].contract.strike
                << "): " << e.what();
            throw std::runtime_error(msg.str());
        }
        mc_total += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        mc_prices[i] = r.price;
    }
    rep.mc_time_per_contract = set.empty() ? 0.0 : mc_total / static_cast<double>(set.size());

    // FINN leg: warmup pass, then median of timing_reps full loops
    std::vector<double> finn_prices(set.size());
    for (std::size_t i = 0; i < set.size(); ++i)
        finn_prices[i] = pricer.price(set[i].curve, set[i].svensson, set[i].contract).price;

    std::vector<double> loop_times;
    for (int rep_i = 0; rep_i < cfg.timing_reps; ++rep_i) {
        const auto t0 = std::chrono::steady_clock::now();
        for (const auto& req : set) (void)pricer.price(req.curve, req.svensson, req.contract);
        loop_times.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    rep.finn_time_per_contract =
        set.empty() || loop_times.empty() ? 0.0
                                          : median(loop_times) / static_cast<double>(set.size());

    double abs_err = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        abs_err += std::abs(finn_prices[i] - mc_prices[i]);
        rep.scatter.push_back({finn_prices[i], mc_prices[i], set[i].contract.strike});
    }
    rep.mae = set.empty() ? 0.0 : abs_err / static_cast<double>(set.size());
    rep.speedup = rep.finn_time_per_contract > 0.0
                      ? rep.mc_time_per_contract / rep.finn_time_per_contract
                      : 0.0;
    return rep;
}

void emit_tables(const std::vector<BenchReport>& reports, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto open = [&](const char* name) {
        std::ofstream out(fs::path(out_dir) / name);
        if (!out) throw std::runtime_error(std::string("cannot write ") + name + " in " + out_dir);
        out.precision(17);
        return out;
    };

    auto timing = open("timing.csv");
    timing << "k,mc_s,finn_s,speedup,mae\n";
    for (const auto& r : reports)
        timing << r.k << ',' << r.mc_time_per_contract << ',' << r.finn_time_per_contract << ','
               << r.speedup << ',' << r.mae << '\n';

    auto error = open("error.csv");
    error << "k,n_contracts,mae\n";
    for (const auto& r : reports) error << r.k << ',' << r.n_contracts << ',' << r.mae << '\n';

    auto scatter = open("scatter.csv");
    scatter << "k,finn_price,mc_price,strike\n";
    for (const auto& r : reports)
        for (const auto& row : r.scatter)
            scatter << r.k << ',' << row.finn_price << ',' << row.mc_price << ',' << row.strike
                    << '\n';
}

}  // namespace finn

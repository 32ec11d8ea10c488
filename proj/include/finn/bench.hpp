#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finn/mc.hpp"
#include "finn/pricing.hpp"
#include "finn/trainer.hpp"

namespace finn {

struct ScatterRow {
    double finn_price = 0.0;
    double mc_price = 0.0;
    double strike = 0.0;
};

struct BenchReport {
    int k = 0;
    double mae = 0.0;
    double mc_time_per_contract = 0.0;    // seconds
    double finn_time_per_contract = 0.0;  // seconds
    double speedup = 0.0;                 // mc_time / finn_time
    int n_contracts = 0;
    std::vector<ScatterRow> scatter;
};

/// n contract+curve draws from the dataset using the training sampler's
/// distribution, on a seed stream disjoint from training.
std::vector<PricingRequest> make_test_set(const CurveDataset& dataset, const SamplerConfig& cfg,
                                          int n, std::uint64_t seed);

struct BenchConfig {
    int n_contracts = 100;
    std::uint64_t seed = 11;
    McConfig mc;                  // paths/dt/seed for the MC leg
    int timing_reps = 5;          // median of this many full-loop repetitions
    SamplerConfig sampler;
};

/// Price every test contract with both engines and time each in a tight
/// loop (median of timing_reps, one warmup pass discarded, I/O excluded).
BenchReport run_benchmark(const NetworkParams& model, const CurveDataset& dataset,
                          const BenchConfig& cfg);

/// Write error.csv, timing.csv (k,mc_s,finn_s,speedup,mae), scatter.csv
/// into out_dir. Appends to timing/error tables when accumulating a K-sweep.
void emit_tables(const std::vector<BenchReport>& reports, const std::string& out_dir);

}  // namespace finn

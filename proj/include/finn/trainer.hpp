#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "finn/hjm.hpp"
#include "finn/market_data.hpp"
#include "finn/network.hpp"
#include "finn/vol_model.hpp"

namespace finn {

struct SamplerConfig {
    double tau1_lo = 0.0;
    double tau1_hi = 5.0;
    double delta_lo = 1.0 / 3.0;
    double delta_hi = 0.75;
    double strike_lo = 0.0;
    double strike_hi = 0.07;
    int strike_nodes = 16;                  // Chebyshev nodes on [strike_lo, strike_hi]
    double zero_strike_fraction = 1.0 / 3.0;  // share of batch cloned with strike 0
};

/// Chebyshev-Gauss nodes of the strike grid, ascending.
std::vector<double> strike_grid(const SamplerConfig& cfg);

struct Regime {
    int epochs;
    double lr;
    int batch_size;
    int batches_per_epoch;
};

struct TrainSchedule {
    std::vector<Regime> regimes;

    static TrainSchedule full_scale();   // (15000,1e-4,100,10)(5000,1e-5,100,10)(2500,1e-6,500,2)
    static TrainSchedule desk_scale();    // epochs scaled to (3000,1000,500)
};

struct LossBreakdown {
    double pde = 0.0;
    double bc = 0.0;
    double zs = 0.0;
    double total() const { return pde + bc + zs; }
};

struct BatchItem {
    int record = 0;       // index into dataset.records
    double tau1 = 0.0;
    double delta = 0.5;
    double strike = 0.0;
    bool zs_clone = false;
};

/// n iid draws plus ceil(fraction*n) zero-strike clones appended.
/// tau1 is uniform over [lo, min(hi, tau_max - delta_lo)]; delta uniform over
/// [delta_lo, min(delta_hi, tau_max - tau1)] so tau1 + delta always fits the
/// grid; strikes are drawn uniformly over the Chebyshev node set.
std::vector<BatchItem> sample_batch(const CurveDataset& dataset, const SamplerConfig& cfg, int n,
                                    std::mt19937_64& rng);

/// Network input vector in the checkpoint layout (f_1..f_K, S, Xi).
Eigen::VectorXd make_input(const DiscreteCurve& curve, const SvenssonParams& sv, double tau1,
                           double delta, double strike);

/// Value and derivatives of a pricing functional at one point, in the shape
/// the PDE residual consumes. grad_inputs is in input layout; hvp_results
/// holds one quadratic form per volatility factor.
struct EvalWithDerivs {
    double value = 0.0;
    Eigen::VectorXd grad_inputs;
    Eigen::Vector3d hvp_results = Eigen::Vector3d::Zero();
};

/// -dV/dtau1 + mu.D_fV + 1/2 sum_n dir_n'D^2V dir_n - r V.
double assemble_residual(const EvalWithDerivs& e, const Eigen::VectorXd& mu, double r, int k);

/// Signed PDE residual of the network at an interior point (tau1 > 0), with
/// the Musiela drift built from the analytic Svensson tenor slope.
double pde_residual(const NetworkParams& net, const DiscreteCurve& curve,
                    const SvenssonParams& sv, const CapletContract& contract,
                    const VolModel& vols, const IntegrationMatrix& C);

/// Squared violation of the settlement boundary: (V(tau1=0) - payoff)^2.
double boundary_loss(const NetworkParams& net, const DiscreteCurve& curve,
                     const SvenssonParams& sv, const CapletContract& contract,
                     const IntegrationMatrix& C);

/// Squared violation of the zero-strike closed form at (tau1, delta).
double zero_strike_loss(const NetworkParams& net, const DiscreteCurve& curve,
                        const SvenssonParams& sv, double tau1, double delta,
                        const IntegrationMatrix& C);

struct TrainConfig {
    TrainSchedule schedule = TrainSchedule::desk_scale();
    SamplerConfig sampler;
    int hidden_width = 64;
    double w_pde = 1.0, w_bc = 1.0, w_zs = 1.0;
    std::uint64_t seed = 0;

    static TrainConfig desk();    // reduced schedule and width; CPU-friendly
    static TrainConfig full();   // full schedule, width 500
};

struct EpochLoss {
    int epoch = 0;                // global epoch index across regimes
    LossBreakdown loss;           // averaged over the epoch's batches
    double lr = 0.0;
};

struct TrainResult {
    NetworkParams params;
    std::vector<EpochLoss> history;
};

/// Three-regime curriculum training of the Finance-Informed loss. Batches are
/// redrawn every epoch; deterministic for a fixed seed. Throws with a
/// diagnostic if any loss term goes non-finite.
TrainResult train(const CurveDataset& dataset, const VolModel& vols, const TrainConfig& cfg,
                  std::ostream* log = nullptr);

void write_history_csv(const std::vector<EpochLoss>& history, const std::string& path);

// exposed for tests: one batched loss graph evaluation
struct BatchLossNodes {
    int total = -1, pde = -1, bc = -1, zs = -1;
};
BatchLossNodes build_batch_loss(ad::Tape& tape, const NetBinding& nb, const CurveDataset& dataset,
                                const VolModel& vols, const IntegrationMatrix& C,
                                const std::vector<BatchItem>& batch, double w_pde = 1.0,
                                double w_bc = 1.0, double w_zs = 1.0);

}  // namespace finn

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "finn/market_data.hpp"
#include "finn/tape.hpp"
#include "finn/vol_model.hpp"

namespace finn {

/// Per-input shift/scale applied as the first differentiable layer:
/// z_i = (x_i - shift_i) / scale_i. Forward rates pass through unchanged,
/// Svensson parameters are z-scored, time features divide by tau_max.
struct NormStats {
    Eigen::VectorXd shift;
    Eigen::VectorXd scale;
};

/// MLP weights plus everything needed to reproduce its outputs from a
/// checkpoint: normalization statistics, input layout, tenor grid, and the
/// volatility model it was trained against. Hidden layers use SiLU, the
/// output layer softplus, so the price is nonnegative by construction.
struct NetworkParams {
    std::vector<int> layer_sizes;             // {K+9, w, w, w, 1}
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    NormStats norm;
    std::vector<std::string> input_layout;
    TenorGrid grid;
    VolModel vols;

    int input_dim() const { return layer_sizes.front(); }
    int k() const { return grid.k_count; }

    /// Fan-in-scaled uniform init with a fixed seed; the output bias starts
    /// at softplus^-1 of a typical price scale.
    static NetworkParams init(const TenorGrid& grid, const VolModel& vols, const NormStats& norm,
                              int hidden_width, std::uint64_t seed);

    static std::vector<std::string> default_layout(int k);
    static NormStats default_norm(const CurveDataset& dataset);
};

/// Parameter leaves of one network bound onto a tape.
struct NetBinding {
    std::vector<int> w_ids;
    std::vector<int> b_ids;
    int shift_id = -1;
    int inv_scale_id = -1;
    const NetworkParams* params = nullptr;
};

NetBinding bind_params(ad::Tape& tape, const NetworkParams& p);

/// Build the network graph on an input node x (input_dim x batch).
/// Returns the 1 x batch output node.
int net_forward(ad::Tape& tape, const NetBinding& nb, int x);

// --- single-point convenience API -------------------------------------------

double forward(const NetworkParams& p, const Eigen::VectorXd& x);

/// Exact gradient of forward with respect to every input component,
/// including through the normalization layer.
Eigen::VectorXd grad_inputs(const NetworkParams& p, const Eigen::VectorXd& x);

/// Per-direction Hessian quadratic forms dir' D_f^2 V dir via the directional
/// derivative trick; directions live in the forward-rate block of the input.
/// The K x K Hessian is never materialized.
std::vector<double> hvp(const NetworkParams& p, const Eigen::VectorXd& x,
                        const std::vector<Eigen::VectorXd>& dirs);

struct ParamGrads {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

/// Exact gradient of a scalar loss built on the tape from the bound network,
/// including second-order paths where the loss contains input-derivatives.
struct LossGrads {
    double value = 0.0;
    ParamGrads grads;
};

LossGrads grad_params(const NetworkParams& p,
                      const std::function<int(ad::Tape&, const NetBinding&)>& build_loss);

// --- fast first-order inference path ----------------------------------------

/// Preallocated buffers for the no-tape evaluator; reusable across calls.
struct EvalWorkspace {
    std::vector<Eigen::VectorXd> pre;   // pre-activations per layer
    std::vector<Eigen::VectorXd> act;   // activations per layer
    Eigen::VectorXd z, g;
};

double eval_value(const NetworkParams& p, const Eigen::VectorXd& x, EvalWorkspace& ws);

struct FastEval {
    double value = 0.0;
    Eigen::VectorXd grad;
};

/// Value plus full input gradient in one hand-rolled reverse sweep.
/// Matches the tape path to machine precision (tested), just without
/// allocation per call.
FastEval eval_with_grad(const NetworkParams& p, const Eigen::VectorXd& x, EvalWorkspace& ws);

// --- optimizer ---------------------------------------------------------------

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-5;   // decoupled: lr * wd * theta subtracted
};

struct AdamState {
    std::vector<Eigen::MatrixXd> m_w, v_w;
    std::vector<Eigen::VectorXd> m_b, v_b;
    long step = 0;

    static AdamState init_like(const NetworkParams& p);
};

void adam_step(AdamState& state, NetworkParams& p, const ParamGrads& grads,
               const AdamConfig& cfg);

}  // namespace finn

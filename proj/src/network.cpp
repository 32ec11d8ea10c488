#include "finn/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace finn {

std::vector<std::string> NetworkParams::default_layout(int k) {
    std::vector<std::string> names;
    names.reserve(k + 9);
    for (int i = 1; i <= k; ++i) names.push_back("f_" + std::to_string(i));
    for (const char* s : {"beta0", "beta1", "beta2", "beta3", "tau1_sv", "tau2_sv",
                          "tau1", "delta", "strike"})
        names.emplace_back(s);
    return names;
}

NormStats NetworkParams::default_norm(const CurveDataset& dataset) {
    const int k = dataset.grid.k_count;
    NormStats ns;
    ns.shift = Eigen::VectorXd::Zero(k + 9);
    ns.scale = Eigen::VectorXd::Ones(k + 9);

    const auto n = static_cast<double>(dataset.records.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(6);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(6);
    for (const auto& [p, c] : dataset.records) {
        Eigen::VectorXd v(6);
        v << p.beta0, p.beta1, p.beta2, p.beta3, p.tau1, p.tau2;
        mean += v;
        sq += v.cwiseProduct(v);
    }
    mean /= n;
    for (int j = 0; j < 6; ++j) {
        const double var = std::max(sq[j] / n - mean[j] * mean[j], 0.0);
        const double sd = std::sqrt(var);
        ns.shift[k + j] = mean[j];
        ns.scale[k + j] = sd > 1e-8 ? sd : 1.0;
    }
    ns.scale[k + 6] = dataset.grid.tau_max;   // tau1
    ns.scale[k + 7] = dataset.grid.tau_max;   // delta
    // strike passes through unnormalized
    return ns;
}

NetworkParams NetworkParams::init(const TenorGrid& grid, const VolModel& vols,
                                  const NormStats& norm, int hidden_width, std::uint64_t seed) {
    NetworkParams p;
    p.grid = grid;
    p.vols = vols;
    p.norm = norm;
    p.input_layout = default_layout(grid.k_count);
    const int d = grid.k_count + 9;
    p.layer_sizes = {d, hidden_width, hidden_width, hidden_width, 1};
    if (norm.shift.size() != d || norm.scale.size() != d)
        throw std::invalid_argument("NetworkParams::init: norm stats size mismatch");
    if ((norm.scale.array() <= 0.0).any())
        throw std::invalid_argument("NetworkParams::init: norm scales must be positive");

    std::mt19937_64 rng(seed);
    for (size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
        const int fan_in = p.layer_sizes[l];
        const int fan_out = p.layer_sizes[l + 1];
        const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-limit, limit);
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) w(i, j) = u(rng);
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(Eigen::VectorXd::Zero(fan_out));
    }
    // start the softplus output in the typical price range instead of log 2
    p.biases.back()[0] = -4.0;
    return p;
}

NetBinding bind_params(ad::Tape& tape, const NetworkParams& p) {
    NetBinding nb;
    nb.params = &p;
    for (const auto& w : p.weights) nb.w_ids.push_back(tape.leaf(w, true));
    for (const auto& b : p.biases) nb.b_ids.push_back(tape.leaf(b, true));
    nb.shift_id = tape.leaf(p.norm.shift, false);
    nb.inv_scale_id = tape.leaf(p.norm.scale.cwiseInverse(), false);
    return nb;
}

int net_forward(ad::Tape& t, const NetBinding& nb, int x) {
    const auto batch = static_cast<int>(t.val(x).cols());
    int h = t.hadamard(t.sub(x, t.rep_cols(nb.shift_id, batch)),
                       t.rep_cols(nb.inv_scale_id, batch));
    const auto n_layers = nb.w_ids.size();
    for (size_t l = 0; l < n_layers; ++l) {
        int a = t.add(t.gemm(nb.w_ids[l], h), t.rep_cols(nb.b_ids[l], batch));
        h = t.unary(l + 1 < n_layers ? ad::Fn::Silu0 : ad::Fn::Softplus, a);
    }
    return h;
}

double forward(const NetworkParams& p, const Eigen::VectorXd& x) {
    if (x.size() != p.input_dim()) throw std::invalid_argument("forward: input size mismatch");
    ad::Tape t;
    const NetBinding nb = bind_params(t, p);
    const int out = net_forward(t, nb, t.leaf(x, false));
    return t.val(out)(0, 0);
}

Eigen::VectorXd grad_inputs(const NetworkParams& p, const Eigen::VectorXd& x) {
    if (x.size() != p.input_dim())
        throw std::invalid_argument("grad_inputs: input size mismatch");
    ad::Tape t;
    const NetBinding nb = bind_params(t, p);
    const int xn = t.leaf(x, true);
    const int out = net_forward(t, nb, xn);
    const auto cot = t.backward(out);
    return t.val(cot[xn]).col(0);
}

std::vector<double> hvp(const NetworkParams& p, const Eigen::VectorXd& x,
                        const std::vector<Eigen::VectorXd>& dirs) {
    const int k = p.k();
    ad::Tape t;
    const NetBinding nb = bind_params(t, p);
    const int xn = t.leaf(x, true);
    const int out = net_forward(t, nb, xn);
    const auto cot = t.backward(out);
    const int gf = t.slice_rows(cot[xn], 0, k);

    std::vector<double> res;
    res.reserve(dirs.size());
    for (const auto& dir : dirs) {
        if (dir.size() != k) throw std::invalid_argument("hvp: direction size mismatch");
        const int d = t.leaf(dir, false);
        const int s = t.sum_all(t.hadamard(gf, d));
        const auto cot2 = t.backward(s);
        if (cot2[xn] < 0) {
            res.push_back(0.0);
            continue;
        }
        const Eigen::VectorXd second = t.val(cot2[xn]).col(0).head(k);
        res.push_back(second.dot(dir));
    }
    return res;
}

LossGrads grad_params(const NetworkParams& p,
                      const std::function<int(ad::Tape&, const NetBinding&)>& build_loss) {
    ad::Tape t;
    const NetBinding nb = bind_params(t, p);
    const int loss = build_loss(t, nb);
    const auto cot = t.backward(loss);

    LossGrads out;
    out.value = t.val(loss)(0, 0);
    for (size_t l = 0; l < nb.w_ids.size(); ++l) {
        const int cw = cot[nb.w_ids[l]];
        out.grads.weights.push_back(cw >= 0 ? t.val(cw)
                                            : Eigen::MatrixXd::Zero(p.weights[l].rows(),
                                                                    p.weights[l].cols()));
        const int cb = cot[nb.b_ids[l]];
        out.grads.biases.push_back(cb >= 0 ? Eigen::VectorXd(t.val(cb).rowwise().sum())
                                           : Eigen::VectorXd::Zero(p.biases[l].size()));
    }
    return out;
}

namespace {

void ensure_workspace(const NetworkParams& p, EvalWorkspace& ws) {
    const auto n = p.weights.size();
    if (ws.pre.size() != n) {
        ws.pre.resize(n);
        ws.act.resize(n);
    }
}

}  // namespace

double eval_value(const NetworkParams& p, const Eigen::VectorXd& x, EvalWorkspace& ws) {
    ensure_workspace(p, ws);
    ws.z = (x - p.norm.shift).cwiseQuotient(p.norm.scale);
    const Eigen::VectorXd* h = &ws.z;
    const auto n = p.weights.size();
    for (size_t l = 0; l < n; ++l) {
        ws.pre[l].noalias() = p.weights[l] * (*h);
        ws.pre[l] += p.biases[l];
        if (l + 1 < n)
            ws.act[l] = ws.pre[l].unaryExpr([](double v) { return fn_eval(ad::Fn::Silu0, v); });
        else
            ws.act[l] = ws.pre[l].unaryExpr([](double v) { return fn_eval(ad::Fn::Softplus, v); });
        h = &ws.act[l];
    }
    return ws.act.back()[0];
}

FastEval eval_with_grad(const NetworkParams& p, const Eigen::VectorXd& x, EvalWorkspace& ws) {
    FastEval out;
    out.value = eval_value(p, x, ws);
    const auto n = p.weights.size();
    // reverse sweep: g holds dV/d(pre-activation of layer l)
    ws.g = ws.pre.back().unaryExpr([](double v) { return fn_eval(ad::Fn::Sigmoid, v); });
    for (size_t l = n - 1; l > 0; --l) {
        Eigen::VectorXd gh = p.weights[l].transpose() * ws.g;
        ws.g = gh.cwiseProduct(
            ws.pre[l - 1].unaryExpr([](double v) { return fn_eval(ad::Fn::Silu1, v); }));
    }
    out.grad = (p.weights[0].transpose() * ws.g).cwiseQuotient(p.norm.scale);
    return out;
}

AdamState AdamState::init_like(const NetworkParams& p) {
    AdamState s;
    for (const auto& w : p.weights) {
        s.m_w.emplace_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        s.v_w.emplace_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : p.biases) {
        s.m_b.emplace_back(Eigen::VectorXd::Zero(b.size()));
        s.v_b.emplace_back(Eigen::VectorXd::Zero(b.size()));
    }
    return s;
}

void adam_step(AdamState& s, NetworkParams& p, const ParamGrads& g, const AdamConfig& cfg) {
    ++s.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.step));
    auto update = [&](auto& m, auto& v, auto& theta, const auto& grad) {
        theta -= cfg.lr * cfg.weight_decay * theta;
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
        const auto m_hat = m / bc1;
        const auto v_hat = v / bc2;
        theta -= cfg.lr * (m_hat.array() / (v_hat.array().sqrt() + cfg.eps)).matrix();
    };
    for (size_t l = 0; l < p.weights.size(); ++l) {
        update(s.m_w[l], s.v_w[l], p.weights[l], g.weights[l]);
        update(s.m_b[l], s.v_b[l], p.biases[l], g.biases[l]);
    }
}

}  // namespace finn

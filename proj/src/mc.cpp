#include "finn/mc.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace finn {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct PathWorkspace {
    Eigen::VectorXd f;
    Eigen::VectorXd slope;
    Eigen::VectorXd drift;
    Eigen::MatrixXd sig;       // K x 3 local vols at the current state
    Eigen::VectorXd integral;
};

// One Euler-Maruyama step of size h with factor shocks z (3-vector of
// sqrt(h)-scaled normals). Returns the short rate before the step.
double euler_step(PathWorkspace& ws, const Eigen::MatrixXd& stilde, const VolModel& vols,
                  const IntegrationMatrix& C, double dtau, double h,
                  const Eigen::Vector3d& z_scaled) {
    const int k = static_cast<int>(ws.f.size());
    const double r0 = ws.f[0];
    ws.slope = tenor_slope_fd(ws.f, dtau);
    for (int i = 0; i < k; ++i) {
        const double s = vols.scale(ws.f[i]);
        ws.sig.row(i) = stilde.row(i) * s;
    }
    ws.drift = ws.slope;
    for (int n = 0; n < 3; ++n) {
        ws.integral.noalias() = C.weights * ws.sig.col(n);
        ws.drift.array() += ws.sig.col(n).array() * ws.integral.array();
    }
    ws.f += ws.drift * h;
    ws.f.noalias() += ws.sig * z_scaled;
    return r0;
}

}  // namespace

Eigen::VectorXd negative_rate_policy(const Eigen::VectorXd& rates) {
    return rates.cwiseMax(0.0);
}

Eigen::VectorXd tenor_slope_fd(const Eigen::VectorXd& rates, double dtau) {
    const auto k = rates.size();
    Eigen::VectorXd s(k);
    if (k < 3) throw std::invalid_argument("tenor_slope_fd: need at least 3 nodes");
    s[0] = (-3.0 * rates[0] + 4.0 * rates[1] - rates[2]) / (2.0 * dtau);
    for (Eigen::Index i = 1; i + 1 < k; ++i) s[i] = (rates[i + 1] - rates[i - 1]) / (2.0 * dtau);
    s[k - 1] = (3.0 * rates[k - 1] - 4.0 * rates[k - 2] + rates[k - 3]) / (2.0 * dtau);
    return s;
}

McResult simulate_price(const DiscreteCurve& curve0, const VolModel& vols,
                        const IntegrationMatrix& C, const CapletContract& contract,
                        const McConfig& cfg) {
    contract.validate(curve0.grid);
    if (cfg.n_paths < 2) throw std::invalid_argument("simulate_price: n_paths must be >= 2");
    if ((curve0.rates.array() <= 0.0).any())
        throw std::invalid_argument("simulate_price: initial curve must be strictly positive");

    const auto t_start = std::chrono::steady_clock::now();
    McResult res;

    if (contract.tau1 <= 0.0) {
        res.price = caplet_payoff(curve0, C, contract);
        res.std_error = 0.0;
        res.elapsed_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        return res;
    }
    if (cfg.dt <= 0.0 || cfg.dt > contract.tau1 + 1e-12)
        throw std::invalid_argument("simulate_price: need 0 < dt <= tau1");

    const int k = curve0.grid.k_count;
    const double dtau = curve0.grid.dtau();
    Eigen::MatrixXd stilde(k, 3);
    for (int i = 0; i < k; ++i)
        stilde.row(i) = vols.sigma_tilde(curve0.grid.nodes[i]).transpose();

    int n_steps = static_cast<int>(std::ceil(contract.tau1 / cfg.dt - 1e-12));
    std::vector<double> step_sizes(n_steps, cfg.dt);
    step_sizes.back() = contract.tau1 - (n_steps - 1) * cfg.dt;

    const bool anti = cfg.antithetic;
    const int n_units = anti ? cfg.n_paths / 2 : cfg.n_paths;
    if (n_units < 2) throw std::invalid_argument("simulate_price: too few paths");

    std::vector<double> payoffs(n_units, 0.0);
    std::vector<char> ok(n_units, 0);

    CapletContract settle = contract;
    settle.tau1 = 0.0;

    auto run_range = [&](int lo, int hi) {
        PathWorkspace ws[2];
        for (auto& w : ws) {
            w.f.resize(k);
            w.slope.resize(k);
            w.drift.resize(k);
            w.sig.resize(k, 3);
            w.integral.resize(k);
        }
        DiscreteCurve terminal;
        terminal.grid = curve0.grid;
        for (int p = lo; p < hi; ++p) {
            std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(p))));
            std::normal_distribution<double> normal(0.0, 1.0);
            const int n_legs = anti ? 2 : 1;
            for (int leg = 0; leg < n_legs; ++leg) ws[leg].f = curve0.rates;
            double disc[2] = {0.0, 0.0};
            for (double h : step_sizes) {
                Eigen::Vector3d z;
                for (int n = 0; n < 3; ++n) z[n] = normal(rng);
                z *= std::sqrt(h);
                for (int leg = 0; leg < n_legs; ++leg) {
                    const Eigen::Vector3d zz = leg == 0 ? z : Eigen::Vector3d(-z);
                    const double r0 = euler_step(ws[leg], stilde, vols, C, dtau, h, zz);
                    disc[leg] += 0.5 * (r0 + ws[leg].f[0]) * h;
                }
            }
            double sum = 0.0;
            bool finite = true;
            for (int leg = 0; leg < n_legs; ++leg) {
                if (!ws[leg].f.allFinite()) {
                    finite = false;
                    break;
                }
                terminal.rates = ws[leg].f;
                sum += std::exp(-disc[leg]) * caplet_payoff(terminal, C, settle);
            }
            if (finite) {
                payoffs[p] = sum / n_legs;
                ok[p] = 1;
            }
        }
    };

    const int n_threads = std::max(1, cfg.threads);
    if (n_threads == 1) {
        run_range(0, n_units);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n_units + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            const int lo = t * chunk;
            const int hi = std::min(n_units, lo + chunk);
            if (lo < hi) pool.emplace_back(run_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    // fixed-order reduction so results are identical across thread counts
    long n_valid = 0;
    double mean = 0.0;
    for (int p = 0; p < n_units; ++p)
        if (ok[p]) {
            ++n_valid;
            mean += payoffs[p];
        }
    res.rejected = n_units - n_valid;
    if (res.rejected > 0.01 * n_units)
        throw std::runtime_error("simulate_price: more than 1% of paths rejected");
    if (n_valid < 2) throw std::runtime_error("simulate_price: too few valid paths");
    mean /= static_cast<double>(n_valid);
    double ss = 0.0;
    for (int p = 0; p < n_units; ++p)
        if (ok[p]) {
            const double d = payoffs[p] - mean;
            ss += d * d;
        }
    res.price = mean;
    res.std_error = std::sqrt(ss / (static_cast<double>(n_valid) - 1.0) /
                              static_cast<double>(n_valid));
    res.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

}  // namespace finn

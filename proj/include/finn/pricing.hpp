#pragma once

#include <Eigen/Core>
#include <vector>

#include "finn/hjm.hpp"
#include "finn/market_data.hpp"
#include "finn/network.hpp"

namespace finn {

/// One network evaluation: price plus the Greeks that fall out of the same
/// reverse sweep. theta is reported as calendar-time decay -dV/dtau1;
/// dv_dtau1 keeps the raw time-to-settlement derivative for callers that
/// want the other convention.
struct PriceQuote {
    double price = 0.0;
    double theta = 0.0;           // -dV/dtau1
    double dv_dtau1 = 0.0;        // raw derivative wrt time to settlement
    Eigen::VectorXd curve_deltas; // dV/df_k, length K
    double eval_time = 0.0;       // seconds, forward + reverse pass
};

struct PricingRequest {
    DiscreteCurve curve;
    SvenssonParams svensson;
    CapletContract contract;
};

/// Read-only pricer around a trained checkpoint. Thread-safe once
/// constructed apart from the per-instance scratch workspace, so use one
/// instance per thread.
class Pricer {
  public:
    explicit Pricer(NetworkParams params);

    const NetworkParams& params() const { return params_; }

    /// Price one contract on one curve. Throws on grid mismatch or a
    /// contract outside the grid horizon.
    PriceQuote price(const DiscreteCurve& curve, const SvenssonParams& sv,
                     const CapletContract& contract);

    std::vector<PriceQuote> batch_price(const std::vector<PricingRequest>& requests);

  private:
    NetworkParams params_;
    EvalWorkspace ws_;
};

}  // namespace finn

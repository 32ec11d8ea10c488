#include "finn/pricing.hpp"

#include <chrono>
#include <stdexcept>

#include "finn/trainer.hpp"

namespace finn {

Pricer::Pricer(NetworkParams params) : params_(std::move(params)) {}

PriceQuote Pricer::price(const DiscreteCurve& curve, const SvenssonParams& sv,
                         const CapletContract& contract) {
    if (!params_.grid.same_as(curve.grid))
        throw std::invalid_argument("pricer: curve grid does not match model grid");
    contract.validate(curve.grid);

    const Eigen::VectorXd x =
        make_input(curve, sv, contract.tau1, contract.delta, contract.strike);

    const auto t0 = std::chrono::steady_clock::now();
    const FastEval e = eval_with_grad(params_, x, ws_);
    const auto t1 = std::chrono::steady_clock::now();

    const int k = params_.k();
    PriceQuote q;
    q.price = e.value;
    q.dv_dtau1 = e.grad[k + 6];
    q.theta = -q.dv_dtau1;
    q.curve_deltas = e.grad.head(k);
    q.eval_time = std::chrono::duration<double>(t1 - t0).count();
    return q;
}

std::vector<PriceQuote> Pricer::batch_price(const std::vector<PricingRequest>& requests) {
    std::vector<PriceQuote> quotes;
    quotes.reserve(requests.size());
    for (const auto& r : requests) quotes.push_back(price(r.curve, r.svensson, r.contract));
    return quotes;
}

}  // namespace finn

#pragma once

#include "asicval/calibration.hpp"
#include "asicval/core_model.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace support {

using namespace asicval;

// Toy market of the worked examples: h = 1 against H = 1 splits a reward of
// 2 * coins evenly, and phi = strike at 1 USD/Wh makes the strike exact.
inline MarketModel toy_market(double spot, double coins = 1.0, double growth = 0.0) {
    return MarketModel(spot, ExponentialHashRate{1.0, growth}, BlockRewardSchedule::constant(2.0 * coins),
                       ConstantElectricity{1.0}, MarketFees{});
}

inline AsicSpec toy_asic(double strike = 250.0, Turn lifetime = 1, Turn reception = 0) {
    return AsicSpec(1.0, strike, StepMortality{lifetime}, reception, lifetime);
}

inline RandomWalkParams example_walk() {
    return {2.0, 0.5, 1.0, std::nullopt};
}

inline bool close_rel(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(b));
}

// No-arbitrage value by recursion over the full (non-recombining) binary
// tree: at each node solve the two-asset system
//   c * up * P + b * r = V_up,  c * down * P + b * r = V_down
// and return c * P + b.
inline double replicate_tree(int depth, double price, double up, double down, double r,
                             const std::function<double(double)>& payoff) {
    if (depth == 0)
        return payoff(price);
    const double vu = replicate_tree(depth - 1, price * up, up, down, r, payoff);
    const double vd = replicate_tree(depth - 1, price * down, up, down, r, payoff);
    const double det = up * price * r - down * price * r;
    const double c = (vu * r - vd * r) / det;
    const double b = (up * price * vd - down * price * vu) / det;
    return c * price + b;
}

struct Instance {
    RandomWalkParams walk;
    AsicSpec asic;
    MarketModel market;
    Turn t;
    Turn k;
};

// Strict-valid walk and a market whose strike sits within a factor of a few
// of the forward reward, so both exercised and dead states occur.
inline Instance random_instance(std::mt19937_64& rng, Turn max_depth) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double up = 1.01 + 0.5 * U(rng);
    const double down = 0.6 + 0.39 * U(rng);
    const double r = 1.0 + (std::min(up, 1.08) - 1.0) * (0.02 + 0.9 * U(rng));
    const double spot = 50.0 + 5000.0 * U(rng);
    const double h = 1.0 + 99.0 * U(rng);
    const double H0 = 100.0 + 1e4 * U(rng);
    const double g = -0.01 + 0.06 * U(rng);
    const double reward = 1.0 + 49.0 * U(rng);
    const double pool = 0.05 * U(rng);
    const double e = 0.01 + U(rng);
    const Turn k = static_cast<Turn>(U(rng) * 5);
    const Turn depth = static_cast<Turn>(U(rng) * static_cast<double>(max_depth + 1));
    const Turn t = k + std::min(depth, max_depth);
    MarketModel market(spot, ExponentialHashRate{H0, g}, BlockRewardSchedule::constant(reward),
                       ConstantElectricity{e}, MarketFees{pool, 0.0, 0.0});
    const double coins = h / (hash_rate_at(market, t) + h) * net_block_reward_at(market, t);
    const double strike = coins * spot * (0.2 + 1.8 * U(rng));
    AsicSpec asic(h, strike / (h * e), StepMortality{1}, 0, 1);
    return {{up, down, r, std::nullopt}, asic, market, t, k};
}

// Daily-turn desk scenario: a 14 TH/s, 1372 W machine against a network
// growing 0.3% a day, 12.5 coins every ten minutes, 0.05 USD/kWh.
struct Desk {
    AsicSpec asic;
    MarketModel market;
    CalibrationContext context;
};

inline Desk desk(Turn lifetime = 60, double growth = 0.003, double usd_per_kwh = 0.05, double spot = 8000.0) {
    const double h = 14e12;
    const double wh_per_day = 1372.0 * 24.0;
    AsicSpec asic(h, wh_per_day / h, StepMortality{lifetime}, 0, lifetime);
    MarketModel market(spot, ExponentialHashRate{5e19, growth}, BlockRewardSchedule::constant(1800.0),
                       ConstantElectricity{usd_per_kwh / 1000.0}, MarketFees{0.02, 0.0, 0.0});
    CalibrationContext context{0.6, static_cast<double>(lifetime) / 365.0, lifetime, 0.02, 1.0 / 365.0};
    return {asic, market, context};
}

}  // namespace support

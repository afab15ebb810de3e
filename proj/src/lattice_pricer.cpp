#include "asicval/lattice_pricer.hpp"

#include "asicval/errors.hpp"

#include <cmath>
#include <limits>

namespace asicval {

namespace {

void require_walk(const RandomWalkParams& walk) {
    if (walk.up_factor == walk.down_factor)
        throw DegenerateLatticeError("degenerate lattice: Δ == δ");
    require_valid(walk, ValidationMode::example_compat);
}

void require_order(Turn t, Turn k) {
    if (k < 0)
        throw DomainError("valuation turn must be >= 0");
    if (k > t)
        throw DomainError("valuation turn k must not exceed opportunity turn t");
}

void require_price(double p) {
    if (!(p > 0.0) || !std::isfinite(p))
        throw DomainError("price must be positive");
}

// log|w|^e with 0^0 = 1.
double log_pow(double w, Turn e) {
    if (e == 0)
        return 0.0;
    return static_cast<double>(e) * std::log(std::fabs(w));
}

bool negative_pow(double w, Turn e) {
    return w < 0.0 && (e % 2) == 1;
}

double node_price(double root, Turn ups, Turn downs, double log_up, double log_down) {
    return std::exp(static_cast<double>(ups) * log_up + static_cast<double>(downs) * log_down) * root;
}

}  // namespace

std::string_view to_string(PricingMethod method) {
    switch (method) {
    case PricingMethod::induction:
        return "induction";
    case PricingMethod::closed_form:
        return "closed_form";
    case PricingMethod::oracle:
        return "oracle";
    }
    return "unknown";
}

double ValueLattice::at(Turn turn, Turn up_moves) const {
    const Turn level = turn - valuation_turn;
    if (level < 0 || static_cast<std::size_t>(level) >= levels.size() || up_moves < 0 || up_moves > level)
        throw DomainError("lattice index out of range");
    return levels[static_cast<std::size_t>(level)][static_cast<std::size_t>(up_moves)];
}

RiskNeutralWeights risk_neutral_weights(const RandomWalkParams& walk) {
    const double spread = walk.up_factor - walk.down_factor;
    if (spread == 0.0)
        throw DegenerateLatticeError("degenerate lattice: Δ == δ");
    const double r = walk.gross_rate;
    const double kappa_down = (1.0 - walk.up_factor / r) / spread;
    return {kappa_down + 1.0 / r, -kappa_down};
}

double reward_coins(Turn t, const AsicSpec& asic, const MarketModel& market) {
    const double h = asic.hash_rate();
    return h / (hash_rate_at(market, t) + h) * net_block_reward_at(market, t);
}

double activation_cost(Turn t, const AsicSpec& asic, const MarketModel& market) {
    return asic.hash_rate() * asic.energy_per_turn() * electricity_price_at(market, t);
}

double immediate_value(Turn t, double price, const AsicSpec& asic, const MarketModel& market) {
    require_price(price);
    const double payoff = reward_coins(t, asic, market) * price - activation_cost(t, asic, market);
    return payoff > 0.0 ? payoff : 0.0;
}

double short_amount(double price, double v_up, double v_down, const RandomWalkParams& walk) {
    require_price(price);
    const double spread = walk.up_factor - walk.down_factor;
    if (spread == 0.0)
        throw DegenerateLatticeError("degenerate lattice: Δ == δ");
    return (v_up - v_down) / (price * spread);
}

double one_step_value(double v_up, double v_down, const RandomWalkParams& walk) {
    require_walk(walk);
    const auto w = risk_neutral_weights(walk);
    return w.up * v_up + w.down * v_down;
}

ValueLattice induction_lattice(Turn depth, double root_price, const RandomWalkParams& walk,
                               const TerminalPayoff& payoff, bool keep_levels) {
    if (depth < 0)
        throw DomainError("lattice depth must be >= 0");
    require_price(root_price);
    require_walk(walk);
    const auto w = risk_neutral_weights(walk);
    const double log_up = std::log(walk.up_factor);
    const double log_down = std::log(walk.down_factor);

    const auto n = static_cast<std::size_t>(depth);
    std::vector<double> values(n + 1);
    for (std::size_t j = 0; j <= n; ++j)
        values[j] = payoff(node_price(root_price, static_cast<Turn>(j), static_cast<Turn>(n - j), log_up, log_down));

    ValueLattice lattice;
    lattice.root_price = root_price;
    if (keep_levels) {
        lattice.levels.resize(n + 1);
        lattice.levels[n] = values;
    }
    for (std::size_t level = n; level-- > 0;) {
        for (std::size_t j = 0; j <= level; ++j)
            values[j] = w.up * values[j + 1] + w.down * values[j];
        if (keep_levels)
            lattice.levels[level].assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(level) + 1);
    }
    if (!keep_levels)
        lattice.levels.push_back({values.front()});
    return lattice;
}

double risk_neutral_sum(Turn depth, double root_price, const RandomWalkParams& walk, const TerminalPayoff& payoff,
                        Turn first) {
    if (depth < 0)
        throw DomainError("lattice depth must be >= 0");
    require_price(root_price);
    require_walk(walk);
    const auto w = risk_neutral_weights(walk);
    const double log_up = std::log(walk.up_factor);
    const double log_down = std::log(walk.down_factor);
    const double log_n_fact = std::lgamma(static_cast<double>(depth) + 1.0);

    double total = 0.0;
    for (Turn j = first < 0 ? 0 : first; j <= depth; ++j) {
        const Turn rest = depth - j;
        const double v = payoff(node_price(root_price, j, rest, log_up, log_down));
        if (v == 0.0)
            continue;
        if ((w.up == 0.0 && j > 0) || (w.down == 0.0 && rest > 0))
            continue;
        const double log_binom =
            log_n_fact - std::lgamma(static_cast<double>(j) + 1.0) - std::lgamma(static_cast<double>(rest) + 1.0);
        // Under valid walks each weight is at most 1, so only the weight goes
        // through exp and the payoff multiplies in linearly.
        const double weight = std::exp(log_binom + log_pow(w.up, j) + log_pow(w.down, rest));
        const bool negative = negative_pow(w.up, j) != negative_pow(w.down, rest);
        total += negative ? -weight * v : weight * v;
    }
    return total;
}

OpportunityQuote opportunity_value(Turn t, Turn k, double spot, const AsicSpec& asic, const MarketModel& market,
                                   const RandomWalkParams& walk, bool keep_lattice) {
    require_order(t, k);
    require_price(spot);
    const double coins = reward_coins(t, asic, market);
    const double cost = activation_cost(t, asic, market);
    auto lattice = induction_lattice(
        t - k, spot, walk,
        [coins, cost](double p) {
            const double v = coins * p - cost;
            return v > 0.0 ? v : 0.0;
        },
        keep_lattice);
    lattice.valuation_turn = k;
    lattice.opportunity_turn = t;

    OpportunityQuote quote{t, k, spot, lattice.levels.front().front(), PricingMethod::induction, std::nullopt};
    if (keep_lattice)
        quote.lattice = std::move(lattice);
    return quote;
}

Turn closed_form_cutoff(Turn t, Turn k, double spot, const AsicSpec& asic, const MarketModel& market,
                        const RandomWalkParams& walk) {
    require_order(t, k);
    require_price(spot);
    require_walk(walk);
    const Turn depth = t - k;
    const double coins = reward_coins(t, asic, market);
    const double cost = activation_cost(t, asic, market);
    if (coins <= 0.0)
        return depth + 1;
    if (cost <= 0.0)
        return 0;

    const double log_up = std::log(walk.up_factor);
    const double log_down = std::log(walk.down_factor);
    // ceil( log( cost / (coins * down^depth * P_k) ) / log(up / down) )
    const double numerator = std::log(cost) - std::log(coins) - static_cast<double>(depth) * log_down - std::log(spot);
    const double raw = std::ceil(numerator / (log_up - log_down));
    if (raw > static_cast<double>(depth))
        return depth + 1;
    Turn cutoff = raw < 0.0 ? 0 : static_cast<Turn>(raw);
    // The logarithms can round the boundary state to the wrong side.
    while (cutoff > 0 && coins * node_price(spot, cutoff - 1, depth - cutoff + 1, log_up, log_down) - cost > 0.0)
        --cutoff;
    return cutoff;
}

OpportunityQuote closed_form_value(Turn t, Turn k, double spot, const AsicSpec& asic, const MarketModel& market,
                                   const RandomWalkParams& walk) {
    const Turn cutoff = closed_form_cutoff(t, k, spot, asic, market, walk);
    OpportunityQuote quote{t, k, spot, 0.0, PricingMethod::closed_form, std::nullopt};
    const Turn depth = t - k;
    if (cutoff > depth)
        return quote;
    const double coins = reward_coins(t, asic, market);
    const double cost = activation_cost(t, asic, market);
    quote.value = risk_neutral_sum(
        depth, spot, walk,
        [coins, cost](double p) {
            const double v = coins * p - cost;
            return v > 0.0 ? v : 0.0;
        },
        cutoff);
    return quote;
}

double path_oracle_value(Turn t, Turn k, double spot, const AsicSpec& asic, const MarketModel& market,
                         const RandomWalkParams& walk) {
    require_order(t, k);
    require_price(spot);
    require_walk(walk);
    const Turn depth = t - k;
    if (depth > kOracleDepthLimit)
        throw DomainError("path oracle refuses depths above 25; use the lattice");

    const double q = risk_neutral_probability(walk);
    const std::uint64_t paths = std::uint64_t{1} << depth;
    double expectation = 0.0;
    for (std::uint64_t mask = 0; mask < paths; ++mask) {
        double price = spot;
        int ups = 0;
        for (Turn step = 0; step < depth; ++step) {
            if ((mask >> step) & 1U) {
                price *= walk.up_factor;
                ++ups;
            } else {
                price *= walk.down_factor;
            }
        }
        const double weight = std::pow(q, ups) * std::pow(1.0 - q, static_cast<double>(depth - ups));
        expectation += weight * immediate_value(t, price, asic, market);
    }
    return expectation / std::pow(walk.gross_rate, static_cast<double>(depth));
}

}  // namespace asicval

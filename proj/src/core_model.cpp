#include "asicval/core_model.hpp"

#include "asicval/errors.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace asicval {

namespace {

ValidationReport fail(const std::string& what, double value) {
    std::ostringstream os;
    os << what << " fails (" << value << ")";
    return {false, os.str()};
}

void require_fraction(double f, const char* name) {
    if (!(f >= 0.0 && f < 1.0)) {
        std::ostringstream os;
        os << name << " must lie in [0, 1), got " << f;
        throw ValidationError(os.str());
    }
}

double table_lookup(const std::vector<double>& values, Turn t) {
    const auto idx = static_cast<std::size_t>(t);
    return idx < values.size() ? values[idx] : values.back();
}

}  // namespace

ValidationReport validate(const RandomWalkParams& walk, ValidationMode mode) {
    const double up = walk.up_factor;
    const double down = walk.down_factor;
    const double r = walk.gross_rate;
    if (!std::isfinite(up) || !std::isfinite(down) || !std::isfinite(r))
        return {false, "factors must be finite"};
    if (!(down > 0.0))
        return fail("δ > 0", down);
    if (mode == ValidationMode::strict) {
        if (!(down < 1.0))
            return fail("δ < 1", down);
        if (!(r > 1.0))
            return fail("r > 1", r);
        if (!(r < up))
            return fail("r < Δ", up);
    } else {
        if (!(down < up))
            return fail("δ < Δ", up);
        if (!(r >= 1.0))
            return fail("r ≥ 1", r);
        if (!(down < r))
            return fail("δ < r", down);
    }
    if (walk.up_probability) {
        const double q = *walk.up_probability;
        if (!(q >= 0.0 && q <= 1.0))
            return fail("0 ≤ q ≤ 1", q);
    }
    return {};
}

void require_valid(const RandomWalkParams& walk, ValidationMode mode) {
    if (auto report = validate(walk, mode); !report)
        throw ValidationError("invalid random walk: " + report.violation);
}

double risk_neutral_probability(const RandomWalkParams& walk) {
    const double spread = walk.up_factor - walk.down_factor;
    if (spread == 0.0)
        throw DegenerateLatticeError("degenerate lattice: Δ == δ");
    return (walk.gross_rate - walk.down_factor) / spread;
}

// ---------------------------------------------------------------------------

double mortality_weight(const MortalityModel& model, Turn t) {
    if (t < 0)
        throw DomainError("mortality_weight: negative turn offset");
    return std::visit(
        [t](const auto& m) -> double {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, StepMortality>) {
                return t < m.lifetime ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<M, ExponentialMortality>) {
                return std::exp(-m.decay_per_turn * static_cast<double>(t));
            } else {
                const auto idx = static_cast<std::size_t>(t);
                return idx < m.weights.size() ? m.weights[idx] : 0.0;
            }
        },
        model);
}

void check_mortality(const MortalityModel& model) {
    std::visit(
        [](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, StepMortality>) {
                if (m.lifetime < 1)
                    throw ValidationError("step mortality lifetime must be >= 1 turn");
            } else if constexpr (std::is_same_v<M, ExponentialMortality>) {
                if (!(m.decay_per_turn >= 0.0) || !std::isfinite(m.decay_per_turn))
                    throw ValidationError("exponential mortality decay must be finite and >= 0");
            } else {
                if (m.weights.empty() || m.weights.front() != 1.0)
                    throw ValidationError("mortality table must start with weight 1");
                for (std::size_t i = 1; i < m.weights.size(); ++i) {
                    if (!(m.weights[i] >= 0.0) || m.weights[i] > m.weights[i - 1])
                        throw ValidationError("mortality table must be non-increasing and non-negative");
                }
            }
        },
        model);
}

// ---------------------------------------------------------------------------

AsicSpec::AsicSpec(double hash_rate, double energy_per_turn, MortalityModel mortality, Turn reception_turn,
                   Turn lifetime_horizon)
    : hash_rate_(hash_rate),
      energy_per_turn_(energy_per_turn),
      mortality_(std::move(mortality)),
      reception_turn_(reception_turn),
      lifetime_horizon_(lifetime_horizon) {
    if (!(hash_rate_ > 0.0) || !std::isfinite(hash_rate_))
        throw ValidationError("ASIC hash-rate must be positive");
    if (!(energy_per_turn_ >= 0.0) || !std::isfinite(energy_per_turn_))
        throw ValidationError("ASIC energy per turn must be >= 0");
    if (reception_turn_ < 0)
        throw ValidationError("reception turn must be >= 0");
    if (lifetime_horizon_ < 1)
        throw ValidationError("lifetime horizon must be >= 1 turn");
    check_mortality(mortality_);
}

AsicSpec AsicSpec::with_reception_turn(Turn s) const {
    return {hash_rate_, energy_per_turn_, mortality_, s, lifetime_horizon_};
}

AsicSpec AsicSpec::with_hash_rate(double h) const {
    return {h, energy_per_turn_, mortality_, reception_turn_, lifetime_horizon_};
}

AsicSpec AsicSpec::with_mortality(MortalityModel m) const {
    return {hash_rate_, energy_per_turn_, std::move(m), reception_turn_, lifetime_horizon_};
}

AsicSpec AsicSpec::with_lifetime_horizon(Turn horizon) const {
    return {hash_rate_, energy_per_turn_, mortality_, reception_turn_, horizon};
}

// ---------------------------------------------------------------------------

BlockRewardSchedule::BlockRewardSchedule(double initial, std::optional<Turn> interval, Turn first_halving)
    : initial_(initial), interval_(interval), first_halving_(first_halving) {
    if (!(initial_ >= 0.0) || !std::isfinite(initial_))
        throw ValidationError("block reward must be finite and >= 0");
    if (interval_ && *interval_ < 1)
        throw ValidationError("halving interval must be >= 1 turn");
    if (first_halving_ < 0)
        throw ValidationError("first halving turn must be >= 0");
}

BlockRewardSchedule BlockRewardSchedule::constant(double coins_per_turn) {
    return {coins_per_turn, std::nullopt, 0};
}

BlockRewardSchedule BlockRewardSchedule::halving(double initial, Turn interval, std::optional<Turn> first_halving) {
    return {initial, interval, first_halving.value_or(interval)};
}

double BlockRewardSchedule::at(Turn t) const {
    if (t < 0)
        throw DomainError("block_reward_at: negative turn");
    if (!interval_ || t < first_halving_)
        return initial_;
    const Turn halvings = 1 + (t - first_halving_) / *interval_;
    return halvings >= 1100 ? 0.0 : std::ldexp(initial_, -static_cast<int>(halvings));
}

// ---------------------------------------------------------------------------

MarketModel::MarketModel(double spot_price, HashRateModel hash_rate, BlockRewardSchedule block_reward,
                         ElectricityPrice electricity, MarketFees fees)
    : spot_price_(spot_price),
      hash_rate_(std::move(hash_rate)),
      block_reward_(std::move(block_reward)),
      electricity_(std::move(electricity)),
      fees_(fees) {
    if (!(spot_price_ > 0.0) || !std::isfinite(spot_price_))
        throw ValidationError("spot price must be positive");
    std::visit(
        [](const auto& h) {
            using H = std::decay_t<decltype(h)>;
            if constexpr (std::is_same_v<H, ExponentialHashRate>) {
                if (!(h.initial > 0.0) || !std::isfinite(h.initial) || !std::isfinite(h.growth_per_turn))
                    throw ValidationError("exponential hash-rate needs a positive initial value and finite growth");
            } else {
                if (h.values.empty())
                    throw ValidationError("hash-rate table is empty");
                for (double v : h.values)
                    if (!(v > 0.0) || !std::isfinite(v))
                        throw ValidationError("hash-rate table entries must be positive");
            }
        },
        hash_rate_);
    std::visit(
        [](const auto& e) {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, ConstantElectricity>) {
                if (!(e.usd_per_wh >= 0.0) || !std::isfinite(e.usd_per_wh))
                    throw ValidationError("electricity price must be >= 0");
            } else {
                if (e.usd_per_wh.empty())
                    throw ValidationError("electricity table is empty");
                for (double v : e.usd_per_wh)
                    if (!(v >= 0.0) || !std::isfinite(v))
                        throw ValidationError("electricity table entries must be >= 0");
            }
        },
        electricity_);
    require_fraction(fees_.pool, "pool fee");
    require_fraction(fees_.coin_trade, "coin trade fee");
    require_fraction(fees_.bond_trade, "bond trade fee");
}

MarketModel MarketModel::with_spot_price(double p) const {
    return {p, hash_rate_, block_reward_, electricity_, fees_};
}

MarketModel MarketModel::with_hash_rate(HashRateModel h) const {
    return {spot_price_, std::move(h), block_reward_, electricity_, fees_};
}

MarketModel MarketModel::with_electricity(ElectricityPrice e) const {
    return {spot_price_, hash_rate_, block_reward_, std::move(e), fees_};
}

MarketModel MarketModel::with_fees(MarketFees f) const {
    return {spot_price_, hash_rate_, block_reward_, electricity_, f};
}

double hash_rate_at(const MarketModel& model, Turn t) {
    if (t < 0)
        throw DomainError("hash_rate_at: negative turn");
    return std::visit(
        [t](const auto& h) -> double {
            using H = std::decay_t<decltype(h)>;
            if constexpr (std::is_same_v<H, ExponentialHashRate>)
                return h.initial * std::exp(h.growth_per_turn * static_cast<double>(t));
            else
                return table_lookup(h.values, t);
        },
        model.hash_rate());
}

double block_reward_at(const MarketModel& model, Turn t) {
    return model.block_reward().at(t);
}

double net_block_reward_at(const MarketModel& model, Turn t) {
    return (1.0 - model.fees().pool) * block_reward_at(model, t);
}

double electricity_price_at(const MarketModel& model, Turn t) {
    if (t < 0)
        throw DomainError("electricity_price_at: negative turn");
    return std::visit(
        [t](const auto& e) -> double {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, ConstantElectricity>)
                return e.usd_per_wh;
            else
                return table_lookup(e.usd_per_wh, t);
        },
        model.electricity());
}

// ---------------------------------------------------------------------------

double LatticeState::price(const RandomWalkParams& walk) const {
    const Turn downs = down_moves();
    if (up_moves < 0 || downs < 0)
        throw DomainError("lattice state outside the tree");
    return std::exp(static_cast<double>(up_moves) * std::log(walk.up_factor) +
                    static_cast<double>(downs) * std::log(walk.down_factor)) *
           root_price;
}

}  // namespace asicval

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace asicval {

// Index of a mining opportunity. The calendar length of one turn is a
// configuration value (see calibration::turn_grid).
using Turn = std::int64_t;

// ---------------------------------------------------------------------------
// Exchange-rate random walk

// Multiplicative walk P -> up_factor * P or P -> down_factor * P per turn,
// with a risk-free bond returning gross_rate per turn.
//
// up_probability is the real-world probability of an up move. It is carried
// for documentation and path simulation only; no pricing routine reads it.
struct RandomWalkParams {
    double up_factor = 0.0;
    double down_factor = 0.0;
    double gross_rate = 1.0;
    std::optional<double> up_probability;
};

enum class ValidationMode {
    strict,          // 0 < down < 1 < r < up
    example_compat,  // 0 < down < up, r >= 1, down < r (allows r == 1)
};

struct ValidationReport {
    bool ok = true;
    std::string violation;  // names the failed inequality, empty when ok

    explicit operator bool() const { return ok; }
};

ValidationReport validate(const RandomWalkParams& walk, ValidationMode mode = ValidationMode::strict);

// Throws ValidationError carrying the report's message when validation fails.
void require_valid(const RandomWalkParams& walk, ValidationMode mode);

// (r - down) / (up - down). Throws DegenerateLatticeError when up == down.
double risk_neutral_probability(const RandomWalkParams& walk);

// ---------------------------------------------------------------------------
// Hardware mortality

struct StepMortality {
    Turn lifetime = 0;  // M(t) = 1 for t < lifetime, 0 afterwards
};

struct ExponentialMortality {
    double decay_per_turn = 0.0;  // M(t) = exp(-decay * t)
};

// Explicit weights, weights[0] must be 1 and the sequence non-increasing.
// Turns past the end of the table carry weight 0; the last listed weight may
// be positive.
struct TableMortality {
    std::vector<double> weights;
};

using MortalityModel = std::variant<StepMortality, ExponentialMortality, TableMortality>;

double mortality_weight(const MortalityModel& model, Turn t);

// Throws ValidationError if the model breaks M(0) = 1 or monotonicity.
void check_mortality(const MortalityModel& model);

// ---------------------------------------------------------------------------
// Hardware

class AsicSpec {
public:
    // hash_rate in hashes/second; energy_per_turn in watt-hours per unit of
    // hash-rate per turn, so the activation cost of one turn is
    // hash_rate * energy_per_turn * electricity price.
    AsicSpec(double hash_rate, double energy_per_turn, MortalityModel mortality, Turn reception_turn,
             Turn lifetime_horizon);

    double hash_rate() const { return hash_rate_; }
    double energy_per_turn() const { return energy_per_turn_; }
    const MortalityModel& mortality() const { return mortality_; }
    Turn reception_turn() const { return reception_turn_; }
    Turn lifetime_horizon() const { return lifetime_horizon_; }

    AsicSpec with_reception_turn(Turn s) const;
    AsicSpec with_hash_rate(double h) const;
    AsicSpec with_mortality(MortalityModel m) const;
    AsicSpec with_lifetime_horizon(Turn horizon) const;

private:
    double hash_rate_;
    double energy_per_turn_;
    MortalityModel mortality_;
    Turn reception_turn_;
    Turn lifetime_horizon_;
};

// ---------------------------------------------------------------------------
// Deterministic market forecasts

struct ExponentialHashRate {
    double initial = 0.0;          // H(0), hashes/second
    double growth_per_turn = 0.0;  // H(t) = initial * exp(growth * t)
};

// H(t) = values[t], extended with the last value past the end.
struct TableHashRate {
    std::vector<double> values;
};

using HashRateModel = std::variant<ExponentialHashRate, TableHashRate>;

// Coins paid per turn. Piecewise constant; the halving form divides the
// reward by two at first_halving and every interval turns after it.
class BlockRewardSchedule {
public:
    static BlockRewardSchedule constant(double coins_per_turn);
    static BlockRewardSchedule halving(double initial, Turn interval, std::optional<Turn> first_halving = {});

    double at(Turn t) const;

    double initial() const { return initial_; }
    std::optional<Turn> interval() const { return interval_; }
    Turn first_halving() const { return first_halving_; }

private:
    BlockRewardSchedule(double initial, std::optional<Turn> interval, Turn first_halving);

    double initial_;
    std::optional<Turn> interval_;
    Turn first_halving_;
};

struct ConstantElectricity {
    double usd_per_wh = 0.0;
};

struct TableElectricity {
    std::vector<double> usd_per_wh;  // last value extends
};

using ElectricityPrice = std::variant<ConstantElectricity, TableElectricity>;

// Fractions in [0, 1).
struct MarketFees {
    double pool = 0.0;
    double coin_trade = 0.0;
    double bond_trade = 0.0;
};

class MarketModel {
public:
    MarketModel(double spot_price, HashRateModel hash_rate, BlockRewardSchedule block_reward,
                ElectricityPrice electricity, MarketFees fees);

    double spot_price() const { return spot_price_; }
    const HashRateModel& hash_rate() const { return hash_rate_; }
    const BlockRewardSchedule& block_reward() const { return block_reward_; }
    const ElectricityPrice& electricity() const { return electricity_; }
    const MarketFees& fees() const { return fees_; }

    MarketModel with_spot_price(double p) const;
    MarketModel with_hash_rate(HashRateModel h) const;
    MarketModel with_electricity(ElectricityPrice e) const;
    MarketModel with_fees(MarketFees f) const;

private:
    double spot_price_;
    HashRateModel hash_rate_;
    BlockRewardSchedule block_reward_;
    ElectricityPrice electricity_;
    MarketFees fees_;
};

double hash_rate_at(const MarketModel& model, Turn t);
double block_reward_at(const MarketModel& model, Turn t);
// Block reward after the pool's cut: (1 - pool fee) * B(t).
double net_block_reward_at(const MarketModel& model, Turn t);
double electricity_price_at(const MarketModel& model, Turn t);

// ---------------------------------------------------------------------------
// Recombining lattice node

struct LatticeState {
    Turn valuation_turn = 0;  // k
    Turn turn = 0;            // tau >= k
    Turn up_moves = 0;        // 0 <= up_moves <= tau - k
    double root_price = 0.0;  // P_k

    Turn down_moves() const { return turn - valuation_turn - up_moves; }

    // up^a * down^b * P_k evaluated as exp(a ln up + b ln down) * P_k.
    double price(const RandomWalkParams& walk) const;
};

}  // namespace asicval

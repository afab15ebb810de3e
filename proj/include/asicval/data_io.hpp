#pragma once

#include "asicval/asic_valuer.hpp"
#include "asicval/calibration.hpp"
#include "asicval/core_model.hpp"
#include "asicval/lattice_pricer.hpp"
#include "asicval/replication.hpp"
#include "asicval/series.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace asicval {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// CSV market data

inline constexpr std::string_view kPriceHeader = "date,price_usd";
inline constexpr std::string_view kHashRateHeader = "date,hashrate_hs";

// Parses `<header>\n<date>,<value>\n...`. Dates must strictly increase and
// values be positive. Errors name the source, line and column.
DatedSeries parse_series_csv(std::istream& in, std::string_view header, std::string_view source);

DatedSeries load_price_csv(const std::filesystem::path& path);
DatedSeries load_hashrate_csv(const std::filesystem::path& path);
MarketHistory load_market_history(const std::filesystem::path& prices, const std::filesystem::path& hash_rates);

void write_series_csv(const DatedSeries& series, std::string_view header, std::ostream& out);

// ---------------------------------------------------------------------------
// Run configuration

enum class ElectricityUnit { usd_per_kwh, usd_per_wh };

struct MortalityConfig {
    std::string kind = "step";  // step | exponential | table
    double decay_per_day = 0.0;
    std::vector<double> weights;
};

struct AsicConfig {
    double hash_rate_hs = 0.0;
    std::optional<double> power_watts;
    std::optional<double> energy_per_turn_wh;
    double lifetime_days = 730.0;
    double reception_delay_days = 0.0;
    std::optional<double> listed_price_usd;
    MortalityConfig mortality;
};

struct BlockRewardConfig {
    std::optional<double> coins_per_turn;
    double coins_per_block = 12.5;
    double blocks_per_day = 144.0;
    std::optional<Date> next_halving;
    double halving_interval_days = 210000.0 / 144.0;
};

struct HashRateConfig {
    double initial_hs = 0.0;
    double growth_per_day = 0.0;
};

struct MarketConfig {
    std::optional<double> spot_price_usd;
    double pool_fee = 0.02;
    double coin_trade_fee = 0.01;
    double bond_trade_fee = 0.01;
    double annual_interest = 0.02;
    double electricity_price = 0.035;
    ElectricityUnit electricity_unit = ElectricityUnit::usd_per_kwh;
    BlockRewardConfig block_reward;
    std::optional<HashRateConfig> hash_rate;
};

struct CalibrationConfig {
    std::optional<double> sigma;
    std::optional<RandomWalkParams> walk;
    Date volatility_start = Date{std::chrono::year{kDefaultVolatilityStartYear} / 1 / 1};
    double hashrate_window_days = 730.0;
    double turns_per_day = 1.0;
    Turn steps_per_opportunity = 25;
    ValidationMode validation = ValidationMode::strict;
};

struct RunConfig {
    AsicConfig asic;
    MarketConfig market;
    CalibrationConfig calibration;
};

// Strict schema: unknown keys and unit violations throw ValidationError.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
Json config_to_json(const RunConfig& config);

// Model objects resolved from a configuration plus optional market history.
struct Scenario {
    AsicSpec asic;
    MarketModel market;
    RandomWalkParams walk;
    CalibrationContext context;
    std::optional<Date> valuation_date;
    double turns_per_day = 1.0;
    Json calibration;  // every derived value, for report provenance
};

// Spot, volatility and hash-rate growth come from the config when given and
// are estimated from history otherwise. valuation_date defaults to the last
// price observation.
Scenario resolve_scenario(const RunConfig& config, const std::optional<MarketHistory>& history,
                          std::optional<Date> valuation_date);

struct BacktestRun {
    Scenario scenario;
    AlignedHistory window;
    ReplicationSetup setup;
    BacktestReport report;
};

// Backtests the configured ASIC on history, one aligned row per turn.
// Without a start date the run begins reception + lifetime rows before the
// end of the aligned history. The ASIC's initial cost is its listed price,
// or the portfolio's when no price is listed.
BacktestRun run_backtest(const RunConfig& config, const MarketHistory& history, std::optional<Date> start,
                         std::optional<Turn> steps_per_opportunity = {});

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { csv, json };

std::string format_number(double x);  // 12 significant digits
double round_significant(double x);   // x rounded to 12 significant digits
void round_floats(Json& doc);         // round_significant on every float; non-finite become null

Json to_json(const OpportunityQuote& quote);
Json to_json(const AsicQuote& quote);
Json to_json(const SweepResult& sweep);
Json to_json(const BacktestReport& report);
Json to_json(const std::vector<ImitationNode>& table);

void write_csv(const OpportunityQuote& quote, std::ostream& out);
void write_csv(const AsicQuote& quote, std::ostream& out);
void write_csv(const SweepResult& sweep, std::ostream& out);
void write_csv(const BacktestReport& report, std::ostream& out);
void write_csv(const std::vector<ImitationNode>& table, std::ostream& out);

// Both pricing routes for one opportunity.
struct PriceComparison {
    OpportunityQuote induction;
    OpportunityQuote closed_form;

    double abs_difference() const;
    double rel_difference() const;  // |a - b| / max(1, |induction|)
};

Json to_json(const PriceComparison& comparison);
void write_csv(const PriceComparison& comparison, std::ostream& out);

using Report = std::variant<OpportunityQuote, PriceComparison, AsicQuote, SweepResult, BacktestReport, std::vector<ImitationNode>>;

std::string_view report_type(const Report& report);

// JSON output wraps the result in {report, generated_at?, provenance, result}.
// CSV output writes the plot table only.
std::string render_report(const Report& report, ReportFormat format, const Json& provenance,
                          std::optional<std::string> generated_at = {});

// Writes the rendered report; I/O failures throw DataError naming the path.
void write_report(const Report& report, ReportFormat format, const std::filesystem::path& path,
                  const Json& provenance, std::optional<std::string> generated_at = {});

}  // namespace asicval

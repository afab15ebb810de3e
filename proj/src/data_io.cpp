#include "asicval/data_io.hpp"

#include "asicval/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

namespace asicval {

// ---------------------------------------------------------------------------
// CSV

namespace {

[[noreturn]] void csv_error(std::string_view source, std::size_t line, std::size_t column, const std::string& what) {
    std::ostringstream os;
    os << source << ":" << line << ":" << column << ": " << what;
    throw DataError(os.str());
}

std::optional<double> parse_double(std::string_view text) {
    if (text.empty())
        return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value))
        return std::nullopt;
    return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open " + path.string());
    return in;
}

}  // namespace

DatedSeries parse_series_csv(std::istream& in, std::string_view header, std::string_view source) {
    std::string line;
    if (!std::getline(in, line))
        csv_error(source, 1, 1, "empty file, expected header '" + std::string(header) + "'");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != header)
        csv_error(source, 1, 1, "expected header '" + std::string(header) + "', got '" + line + "'");

    DatedSeries series;
    std::size_t line_no = 1;
    bool saw_blank = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty()) {
            saw_blank = true;
            continue;
        }
        if (saw_blank)
            csv_error(source, line_no - 1, 1, "blank line inside data");

        const auto comma = line.find(',');
        if (comma == std::string::npos)
            csv_error(source, line_no, line.size() + 1, "expected 2 fields");
        if (line.find(',', comma + 1) != std::string::npos)
            csv_error(source, line_no, line.find(',', comma + 1) + 1, "expected 2 fields");

        const std::string_view date_text = std::string_view(line).substr(0, comma);
        const std::string_view value_text = std::string_view(line).substr(comma + 1);
        const auto date = parse_iso_date(date_text);
        if (!date)
            csv_error(source, line_no, 1, "invalid date '" + std::string(date_text) + "'");
        const auto value = parse_double(value_text);
        if (!value)
            csv_error(source, line_no, comma + 2, "invalid number '" + std::string(value_text) + "'");
        if (!(*value > 0.0))
            csv_error(source, line_no, comma + 2, header == kPriceHeader ? "non-positive price" : "non-positive value");
        if (!series.dates.empty()) {
            if (*date == series.dates.back())
                csv_error(source, line_no, 1, "duplicate date " + std::string(date_text));
            if (*date < series.dates.back())
                csv_error(source, line_no, 1, "date " + std::string(date_text) + " is out of order");
        }
        series.dates.push_back(*date);
        series.values.push_back(*value);
    }
    return series;
}

DatedSeries load_price_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_series_csv(in, kPriceHeader, path.string());
}

DatedSeries load_hashrate_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_series_csv(in, kHashRateHeader, path.string());
}

MarketHistory load_market_history(const std::filesystem::path& prices, const std::filesystem::path& hash_rates) {
    return {load_price_csv(prices), load_hashrate_csv(hash_rates)};
}

void write_series_csv(const DatedSeries& series, std::string_view header, std::ostream& out) {
    out << header << '\n';
    for (std::size_t i = 0; i < series.size(); ++i)
        out << format_date(series.dates[i]) << ',' << format_number(series.values[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
    throw ValidationError("config " + where + ": " + what);
}

void check_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!obj.is_object())
        schema_error(where, "expected an object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (auto key : allowed)
            known = known || item.key() == key;
        if (!known)
            schema_error(where, "unknown key '" + item.key() + "'");
    }
}

std::optional<double> number(const nlohmann::json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end())
        return std::nullopt;
    if (!it->is_number())
        schema_error(where + "." + key, "expected a number");
    const double v = it->get<double>();
    if (!std::isfinite(v))
        schema_error(where + "." + key, "must be finite");
    return v;
}

double require_range(double v, double lo, bool lo_inclusive, double hi, bool hi_inclusive, const std::string& where) {
    const bool lo_ok = lo_inclusive ? v >= lo : v > lo;
    const bool hi_ok = hi_inclusive ? v <= hi : v < hi;
    if (!lo_ok || !hi_ok) {
        std::ostringstream os;
        os << "value " << v << " outside " << (lo_inclusive ? "[" : "(") << lo << ", " << hi
           << (hi_inclusive ? "]" : ")");
        schema_error(where, os.str());
    }
    return v;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

void read_positive(const nlohmann::json& obj, const char* key, const std::string& where, double& out) {
    if (auto v = number(obj, key, where))
        out = require_range(*v, 0.0, false, kInf, false, where + "." + key);
}

void read_non_negative(const nlohmann::json& obj, const char* key, const std::string& where, double& out) {
    if (auto v = number(obj, key, where))
        out = require_range(*v, 0.0, true, kInf, false, where + "." + key);
}

void read_fraction(const nlohmann::json& obj, const char* key, const std::string& where, double& out) {
    if (auto v = number(obj, key, where))
        out = require_range(*v, 0.0, true, 1.0, false, where + "." + key);
}

Date read_date(const nlohmann::json& value, const std::string& where) {
    if (!value.is_string())
        schema_error(where, "expected an ISO-8601 date string");
    auto d = parse_iso_date(value.get<std::string>());
    if (!d)
        schema_error(where, "invalid date '" + value.get<std::string>() + "'");
    return *d;
}

MortalityConfig parse_mortality(const nlohmann::json& obj, const std::string& where) {
    check_keys(obj, {"kind", "decay_per_day", "weights"}, where);
    MortalityConfig m;
    if (auto it = obj.find("kind"); it != obj.end()) {
        if (!it->is_string())
            schema_error(where + ".kind", "expected a string");
        m.kind = it->get<std::string>();
    }
    if (m.kind == "step") {
        if (obj.contains("decay_per_day") || obj.contains("weights"))
            schema_error(where, "step mortality takes no parameters");
    } else if (m.kind == "exponential") {
        auto v = number(obj, "decay_per_day", where);
        if (!v)
            schema_error(where, "exponential mortality needs decay_per_day");
        m.decay_per_day = require_range(*v, 0.0, true, kInf, false, where + ".decay_per_day");
    } else if (m.kind == "table") {
        auto it = obj.find("weights");
        if (it == obj.end() || !it->is_array() || it->empty())
            schema_error(where, "table mortality needs a non-empty weights array");
        for (const auto& w : *it) {
            if (!w.is_number())
                schema_error(where + ".weights", "expected numbers");
            m.weights.push_back(w.get<double>());
        }
    } else {
        schema_error(where + ".kind", "expected step, exponential or table");
    }
    return m;
}

AsicConfig parse_asic(const nlohmann::json& obj) {
    const std::string where = "asic";
    check_keys(obj,
               {"hash_rate_hs", "power_watts", "energy_per_turn_wh", "lifetime_days", "reception_delay_days",
                "listed_price_usd", "mortality"},
               where);
    AsicConfig a;
    auto h = number(obj, "hash_rate_hs", where);
    if (!h)
        schema_error(where, "hash_rate_hs is required");
    a.hash_rate_hs = require_range(*h, 0.0, false, kInf, false, where + ".hash_rate_hs");
    if (auto p = number(obj, "power_watts", where))
        a.power_watts = require_range(*p, 0.0, true, kInf, false, where + ".power_watts");
    if (auto e = number(obj, "energy_per_turn_wh", where))
        a.energy_per_turn_wh = require_range(*e, 0.0, true, kInf, false, where + ".energy_per_turn_wh");
    if (a.power_watts.has_value() == a.energy_per_turn_wh.has_value())
        schema_error(where, "exactly one of power_watts or energy_per_turn_wh is required");
    read_positive(obj, "lifetime_days", where, a.lifetime_days);
    read_non_negative(obj, "reception_delay_days", where, a.reception_delay_days);
    if (auto p = number(obj, "listed_price_usd", where))
        a.listed_price_usd = require_range(*p, 0.0, true, kInf, false, where + ".listed_price_usd");
    if (auto it = obj.find("mortality"); it != obj.end())
        a.mortality = parse_mortality(*it, where + ".mortality");
    return a;
}

BlockRewardConfig parse_block_reward(const nlohmann::json& obj, const std::string& where) {
    check_keys(obj, {"coins_per_turn", "coins_per_block", "blocks_per_day", "next_halving", "halving_interval_days"},
               where);
    BlockRewardConfig b;
    if (auto v = number(obj, "coins_per_turn", where))
        b.coins_per_turn = require_range(*v, 0.0, true, kInf, false, where + ".coins_per_turn");
    read_non_negative(obj, "coins_per_block", where, b.coins_per_block);
    read_positive(obj, "blocks_per_day", where, b.blocks_per_day);
    if (auto it = obj.find("next_halving"); it != obj.end())
        b.next_halving = read_date(*it, where + ".next_halving");
    read_positive(obj, "halving_interval_days", where, b.halving_interval_days);
    if (b.coins_per_turn && (obj.contains("coins_per_block") || obj.contains("blocks_per_day")))
        schema_error(where, "coins_per_turn excludes coins_per_block and blocks_per_day");
    return b;
}

MarketConfig parse_market(const nlohmann::json& obj) {
    const std::string where = "market";
    check_keys(obj,
               {"spot_price_usd", "pool_fee", "coin_trade_fee", "bond_trade_fee", "annual_interest", "electricity",
                "block_reward", "hash_rate"},
               where);
    MarketConfig m;
    if (auto v = number(obj, "spot_price_usd", where))
        m.spot_price_usd = require_range(*v, 0.0, false, kInf, false, where + ".spot_price_usd");
    read_fraction(obj, "pool_fee", where, m.pool_fee);
    read_fraction(obj, "coin_trade_fee", where, m.coin_trade_fee);
    read_fraction(obj, "bond_trade_fee", where, m.bond_trade_fee);
    read_non_negative(obj, "annual_interest", where, m.annual_interest);
    if (auto it = obj.find("electricity"); it != obj.end()) {
        const std::string w = where + ".electricity";
        check_keys(*it, {"usd_per_kwh", "usd_per_wh"}, w);
        auto kwh = number(*it, "usd_per_kwh", w);
        auto wh = number(*it, "usd_per_wh", w);
        if (kwh.has_value() == wh.has_value())
            schema_error(w, "exactly one of usd_per_kwh or usd_per_wh is required");
        m.electricity_unit = kwh ? ElectricityUnit::usd_per_kwh : ElectricityUnit::usd_per_wh;
        m.electricity_price = require_range(kwh ? *kwh : *wh, 0.0, true, kInf, false, w);
    }
    if (auto it = obj.find("block_reward"); it != obj.end())
        m.block_reward = parse_block_reward(*it, where + ".block_reward");
    if (auto it = obj.find("hash_rate"); it != obj.end()) {
        const std::string w = where + ".hash_rate";
        check_keys(*it, {"initial_hs", "growth_per_day"}, w);
        HashRateConfig h;
        auto init = number(*it, "initial_hs", w);
        if (!init)
            schema_error(w, "initial_hs is required");
        h.initial_hs = require_range(*init, 0.0, false, kInf, false, w + ".initial_hs");
        h.growth_per_day = number(*it, "growth_per_day", w).value_or(0.0);
        m.hash_rate = h;
    }
    return m;
}

CalibrationConfig parse_calibration(const nlohmann::json& obj) {
    const std::string where = "calibration";
    check_keys(obj,
               {"sigma", "walk", "volatility_start", "hashrate_window_days", "turns_per_day", "steps_per_opportunity",
                "validation"},
               where);
    CalibrationConfig c;
    if (auto v = number(obj, "sigma", where))
        c.sigma = require_range(*v, 0.0, true, kInf, false, where + ".sigma");
    if (auto it = obj.find("walk"); it != obj.end()) {
        const std::string w = where + ".walk";
        check_keys(*it, {"up_factor", "down_factor", "gross_rate", "up_probability"}, w);
        RandomWalkParams walk;
        auto up = number(*it, "up_factor", w);
        auto down = number(*it, "down_factor", w);
        auto r = number(*it, "gross_rate", w);
        if (!up || !down || !r)
            schema_error(w, "up_factor, down_factor and gross_rate are required");
        walk.up_factor = *up;
        walk.down_factor = *down;
        walk.gross_rate = *r;
        walk.up_probability = number(*it, "up_probability", w);
        c.walk = walk;
    }
    if (auto it = obj.find("volatility_start"); it != obj.end())
        c.volatility_start = read_date(*it, where + ".volatility_start");
    read_positive(obj, "hashrate_window_days", where, c.hashrate_window_days);
    read_positive(obj, "turns_per_day", where, c.turns_per_day);
    if (auto it = obj.find("steps_per_opportunity"); it != obj.end()) {
        if (!it->is_number_integer() || it->get<long long>() < 1)
            schema_error(where + ".steps_per_opportunity", "expected an integer >= 1");
        c.steps_per_opportunity = it->get<Turn>();
    }
    if (auto it = obj.find("validation"); it != obj.end()) {
        const std::string mode = it->is_string() ? it->get<std::string>() : "";
        if (mode == "strict")
            c.validation = ValidationMode::strict;
        else if (mode == "example_compat")
            c.validation = ValidationMode::example_compat;
        else
            schema_error(where + ".validation", "expected strict or example_compat");
    }
    return c;
}

Json optional_number(const std::optional<double>& v) {
    return v ? Json(*v) : Json(nullptr);
}

Turn days_to_turns(double days, double turns_per_day) {
    return static_cast<Turn>(std::llround(days * turns_per_day));
}

// Null members read as absent, so an echoed config parses back.
nlohmann::json drop_nulls(const nlohmann::json& j) {
    if (!j.is_object())
        return j;
    nlohmann::json out = nlohmann::json::object();
    for (const auto& item : j.items())
        if (!item.value().is_null())
            out[item.key()] = drop_nulls(item.value());
    return out;
}

}  // namespace

RunConfig parse_config(const nlohmann::json& raw) {
    const nlohmann::json doc = drop_nulls(raw);
    check_keys(doc, {"asic", "market", "calibration"}, "root");
    RunConfig config;
    auto asic = doc.find("asic");
    if (asic == doc.end())
        schema_error("root", "asic block is required");
    config.asic = parse_asic(*asic);
    if (auto it = doc.find("market"); it != doc.end())
        config.market = parse_market(*it);
    if (auto it = doc.find("calibration"); it != doc.end())
        config.calibration = parse_calibration(*it);
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open config " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config " + path.string() + ": " + e.what());
    }
    return parse_config(doc);
}

Json config_to_json(const RunConfig& config) {
    const auto& a = config.asic;
    const auto& m = config.market;
    const auto& c = config.calibration;

    Json mortality = {{"kind", a.mortality.kind}};
    if (a.mortality.kind == "exponential")
        mortality["decay_per_day"] = a.mortality.decay_per_day;
    if (a.mortality.kind == "table")
        mortality["weights"] = a.mortality.weights;

    Json reward;
    if (m.block_reward.coins_per_turn) {
        reward["coins_per_turn"] = *m.block_reward.coins_per_turn;
    } else {
        reward["coins_per_block"] = m.block_reward.coins_per_block;
        reward["blocks_per_day"] = m.block_reward.blocks_per_day;
    }
    reward["next_halving"] = m.block_reward.next_halving ? Json(format_date(*m.block_reward.next_halving)) : Json();
    reward["halving_interval_days"] = m.block_reward.halving_interval_days;

    Json walk = nullptr;
    if (c.walk) {
        walk = {{"up_factor", c.walk->up_factor},
                {"down_factor", c.walk->down_factor},
                {"gross_rate", c.walk->gross_rate},
                {"up_probability", optional_number(c.walk->up_probability)}};
    }

    return {
        {"asic",
         {{"hash_rate_hs", a.hash_rate_hs},
          {"power_watts", optional_number(a.power_watts)},
          {"energy_per_turn_wh", optional_number(a.energy_per_turn_wh)},
          {"lifetime_days", a.lifetime_days},
          {"reception_delay_days", a.reception_delay_days},
          {"listed_price_usd", optional_number(a.listed_price_usd)},
          {"mortality", mortality}}},
        {"market",
         {{"spot_price_usd", optional_number(m.spot_price_usd)},
          {"pool_fee", m.pool_fee},
          {"coin_trade_fee", m.coin_trade_fee},
          {"bond_trade_fee", m.bond_trade_fee},
          {"annual_interest", m.annual_interest},
          {"electricity",
           {{m.electricity_unit == ElectricityUnit::usd_per_kwh ? "usd_per_kwh" : "usd_per_wh", m.electricity_price}}},
          {"block_reward", reward},
          {"hash_rate", m.hash_rate ? Json{{"initial_hs", m.hash_rate->initial_hs},
                                           {"growth_per_day", m.hash_rate->growth_per_day}}
                                    : Json()}}},
        {"calibration",
         {{"sigma", optional_number(c.sigma)},
          {"walk", walk},
          {"volatility_start", format_date(c.volatility_start)},
          {"hashrate_window_days", c.hashrate_window_days},
          {"turns_per_day", c.turns_per_day},
          {"steps_per_opportunity", c.steps_per_opportunity},
          {"validation", c.validation == ValidationMode::strict ? "strict" : "example_compat"}}},
    };
}

Scenario resolve_scenario(const RunConfig& config, const std::optional<MarketHistory>& history,
                          std::optional<Date> valuation_date) {
    const auto& ac = config.asic;
    const auto& mc = config.market;
    const auto& cc = config.calibration;
    const double tpd = cc.turns_per_day;
    const double turn_length_years = 1.0 / (kDaysPerYear * tpd);
    Json provenance;

    if (!valuation_date && history && !history->prices.empty())
        valuation_date = history->prices.dates.back();
    provenance["valuation_date"] = valuation_date ? Json(format_date(*valuation_date)) : Json();
    provenance["turns_per_day"] = tpd;
    provenance["turn_length_years"] = turn_length_years;

    // Hardware
    const Turn lifetime = std::max<Turn>(1, days_to_turns(ac.lifetime_days, tpd));
    const Turn reception = days_to_turns(ac.reception_delay_days, tpd);
    const double energy_per_turn_wh =
        ac.energy_per_turn_wh ? *ac.energy_per_turn_wh : *ac.power_watts * 24.0 / tpd;
    MortalityModel mortality = StepMortality{lifetime};
    if (ac.mortality.kind == "exponential")
        mortality = ExponentialMortality{ac.mortality.decay_per_day / tpd};
    else if (ac.mortality.kind == "table")
        mortality = TableMortality{ac.mortality.weights};
    AsicSpec asic(ac.hash_rate_hs, energy_per_turn_wh / ac.hash_rate_hs, mortality, reception, lifetime);
    provenance["lifetime_turns"] = lifetime;
    provenance["reception_turn"] = reception;
    provenance["energy_per_turn_wh"] = energy_per_turn_wh;

    // Spot
    double spot = 0.0;
    if (mc.spot_price_usd) {
        spot = *mc.spot_price_usd;
        provenance["spot_source"] = "config";
    } else {
        if (!history || !valuation_date)
            throw DataError("no spot price: set market.spot_price_usd or pass a price history");
        auto p = history->prices.at(*valuation_date);
        if (!p)
            throw DataError("price history has no observation on " + format_date(*valuation_date));
        spot = *p;
        provenance["spot_source"] = "history";
    }
    provenance["spot_price_usd"] = spot;

    // Hash-rate forecast
    HashRateModel hash_rate = ExponentialHashRate{};
    if (mc.hash_rate) {
        hash_rate = ExponentialHashRate{mc.hash_rate->initial_hs, mc.hash_rate->growth_per_day / tpd};
        provenance["hash_rate_source"] = "config";
    } else {
        if (!history || !valuation_date)
            throw DataError("no hash-rate forecast: set market.hash_rate or pass a hash-rate history");
        const auto window_start = *valuation_date - std::chrono::days{std::llround(cc.hashrate_window_days)};
        auto window = history->hash_rates.window(window_start + std::chrono::days{1}, *valuation_date);
        if (window.size() < 2)
            throw DataError("hash-rate history has fewer than 2 observations in the fit window");
        const auto fit = exp_growth_fit(window, *valuation_date, tpd);
        hash_rate = ExponentialHashRate{fit.initial, fit.growth_per_turn};
        provenance["hash_rate_source"] = "history";
        provenance["hash_rate_fit_observations"] = window.size();
    }
    const auto& hr = std::get<ExponentialHashRate>(hash_rate);
    provenance["hash_rate_initial_hs"] = hr.initial;
    provenance["hash_rate_growth_per_turn"] = hr.growth_per_turn;

    // Block reward
    const auto& br = mc.block_reward;
    const double coins_per_turn = br.coins_per_turn ? *br.coins_per_turn : br.coins_per_block * br.blocks_per_day / tpd;
    BlockRewardSchedule reward = BlockRewardSchedule::constant(coins_per_turn);
    if (br.next_halving) {
        if (!valuation_date)
            throw DataError("block_reward.next_halving needs a valuation date");
        const auto days_until = (*br.next_halving - *valuation_date).count();
        if (days_until < 0)
            throw ValidationError("config market.block_reward.next_halving precedes the valuation date");
        reward = BlockRewardSchedule::halving(coins_per_turn,
                                              std::max<Turn>(1, days_to_turns(br.halving_interval_days, tpd)),
                                              days_to_turns(static_cast<double>(days_until), tpd));
    }
    provenance["block_reward_coins_per_turn"] = coins_per_turn;

    const double usd_per_wh =
        mc.electricity_unit == ElectricityUnit::usd_per_kwh ? mc.electricity_price / 1000.0 : mc.electricity_price;
    provenance["electricity_usd_per_wh"] = usd_per_wh;

    MarketModel market(spot, hash_rate, reward, ConstantElectricity{usd_per_wh},
                       MarketFees{mc.pool_fee, mc.coin_trade_fee, mc.bond_trade_fee});

    // Volatility and walk
    CalibrationContext context;
    context.calendar_horizon_years = static_cast<double>(lifetime) * turn_length_years;
    context.lattice_steps = lifetime;
    context.annual_interest = mc.annual_interest;
    context.turn_length_years = turn_length_years;
    std::optional<double> sigma = cc.sigma;
    if (sigma) {
        provenance["volatility_source"] = "config";
    } else if (!cc.walk) {
        if (!history || !valuation_date)
            throw DataError("no volatility: set calibration.sigma or pass a price history");
        sigma = annualized_volatility(history->prices.window(cc.volatility_start, *valuation_date));
        provenance["volatility_source"] = "history";
        provenance["volatility_start"] = format_date(cc.volatility_start);
    }
    context.annual_volatility = sigma.value_or(0.0);
    provenance["annual_volatility"] = optional_number(sigma);

    RandomWalkParams walk;
    if (cc.walk) {
        walk = *cc.walk;
        provenance["walk_source"] = "config";
    } else {
        walk = calibrated_walk(context);
        provenance["walk_source"] = "crr";
    }
    require_valid(walk, cc.validation);
    provenance["validation"] = cc.validation == ValidationMode::strict ? "strict" : "example_compat";
    provenance["up_factor"] = walk.up_factor;
    provenance["down_factor"] = walk.down_factor;
    provenance["gross_rate_per_turn"] = walk.gross_rate;
    provenance["risk_neutral_probability"] = risk_neutral_probability(walk);

    return {std::move(asic), std::move(market), walk, context, valuation_date, tpd, std::move(provenance)};
}

BacktestRun run_backtest(const RunConfig& config, const MarketHistory& history, std::optional<Date> start,
                         std::optional<Turn> steps_per_opportunity) {
    const auto& c = config;
    if (c.calibration.turns_per_day != 1.0)
        throw ValidationError("backtest reads one history row per turn and needs turns_per_day = 1");
    const auto all = history.aligned();
    const auto needed = static_cast<std::size_t>(std::llround(c.asic.reception_delay_days) +
                                                 std::max<long long>(1, std::llround(c.asic.lifetime_days)));
    if (!start) {
        if (all.size() < needed)
            throw DataError("history has " + std::to_string(all.size()) + " aligned rows, backtest needs " +
                            std::to_string(needed));
        start = all.dates[all.size() - needed];
    }

    auto scenario = resolve_scenario(config, history, start);
    auto window = history.aligned(*start, std::nullopt);
    if (window.dates.empty() || window.dates.front() != *start)
        throw DataError("no aligned price and hash-rate row on " + format_date(*start));
    if (window.size() > needed) {
        window.dates.resize(needed);
        window.prices.resize(needed);
        window.hash_rates.resize(needed);
    }

    ReplicationSetup setup;
    setup.steps_per_opportunity = steps_per_opportunity.value_or(c.calibration.steps_per_opportunity);
    setup.fees = {c.market.coin_trade_fee, c.market.bond_trade_fee};
    setup.annual_interest = c.market.annual_interest;
    setup.turn_length_years = scenario.context.turn_length_years;
    setup.fixed_sigma = c.calibration.sigma;
    setup.volatility_history = history.prices;
    setup.volatility_start = c.calibration.volatility_start;

    auto portfolio = simulate_replication(window, scenario.asic, scenario.market, setup);
    const double asic_cost = c.asic.listed_price_usd.value_or(portfolio.portfolio_initial_cost);
    auto report = merge_legs(asic_realized_revenue(window, scenario.asic, scenario.market, asic_cost), portfolio);
    scenario.calibration["backtest_start"] = format_date(*start);
    scenario.calibration["backtest_rows"] = window.size();
    scenario.calibration["steps_per_opportunity"] = setup.steps_per_opportunity;
    return {std::move(scenario), std::move(window), std::move(setup), std::move(report)};
}

// ---------------------------------------------------------------------------
// Reports

std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

double round_significant(double x) {
    if (!std::isfinite(x))
        return x;
    return std::strtod(format_number(x).c_str(), nullptr);
}

namespace {

Json num(double x) {
    if (!std::isfinite(x))
        return nullptr;
    return round_significant(x);
}

}  // namespace

void round_floats(Json& j) {
    if (j.is_number_float()) {
        j = num(j.get<double>());
    } else if (j.is_structured()) {
        for (auto& child : j)
            round_floats(child);
    }
}

double PriceComparison::abs_difference() const {
    return std::fabs(induction.value - closed_form.value);
}

double PriceComparison::rel_difference() const {
    return abs_difference() / std::max(1.0, std::fabs(induction.value));
}

Json to_json(const OpportunityQuote& q) {
    return {{"method", std::string(to_string(q.method))},
            {"opportunity_turn", q.opportunity_turn},
            {"valuation_turn", q.valuation_turn},
            {"spot_usd", num(q.spot)},
            {"value_usd", num(q.value)}};
}

Json to_json(const PriceComparison& c) {
    return {{"opportunity_turn", c.induction.opportunity_turn},
            {"valuation_turn", c.induction.valuation_turn},
            {"spot_usd", num(c.induction.spot)},
            {"induction_value_usd", num(c.induction.value)},
            {"closed_form_value_usd", num(c.closed_form.value)},
            {"abs_difference_usd", num(c.abs_difference())},
            {"rel_difference", num(c.rel_difference())}};
}

Json to_json(const AsicQuote& q) {
    Json breakdown = Json::array();
    for (const auto& b : q.breakdown)
        breakdown.push_back({{"turn", b.turn}, {"mortality_weight", num(b.weight)}, {"value_usd", num(b.value)}});
    return {{"valuation_turn", q.valuation_turn},
            {"reception_turn", q.reception_turn},
            {"spot_usd", num(q.spot)},
            {"value_usd", num(q.value)},
            {"breakdown", breakdown}};
}

Json to_json(const SweepResult& s) {
    auto point = [](const SweepPoint& p) {
        return Json{{"axis", num(p.axis)}, {"value_usd", num(p.value)}, {"percent_change", num(p.percent_change)}};
    };
    Json points = Json::array();
    for (const auto& p : s.points)
        points.push_back(point(p));
    return {{"axis", s.axis_label}, {"baseline", point(s.baseline)}, {"points", points}};
}

Json to_json(const BacktestReport& r) {
    Json series = Json::array();
    for (std::size_t i = 0; i < r.dates.size(); ++i)
        series.push_back({{"date", format_date(r.dates[i])},
                          {"asic_revenue_usd", num(r.asic_revenue[i])},
                          {"portfolio_revenue_usd", num(r.portfolio_revenue[i])}});
    return {{"asic_initial_cost_usd", num(r.asic_initial_cost)},
            {"portfolio_initial_cost_usd", num(r.portfolio_initial_cost)},
            {"asic_total_usd", num(r.asic_total())},
            {"portfolio_total_usd", num(r.portfolio_total())},
            {"total_fees_usd", num(r.total_fees)},
            {"tracking_error_usd", num(r.tracking_error)},
            {"opportunities", r.opportunities.size()},
            {"trades", r.trades.size()},
            {"series", series}};
}

Json to_json(const std::vector<ImitationNode>& table) {
    Json nodes = Json::array();
    for (const auto& n : table)
        nodes.push_back({{"turn", n.turn},
                         {"up_moves", n.up_moves},
                         {"price_usd", num(n.price)},
                         {"value_usd", num(n.value)},
                         {"coins", num(n.weights.coins)},
                         {"bonds_usd", num(n.weights.bonds)}});
    return {{"nodes", nodes}};
}

void write_csv(const OpportunityQuote& q, std::ostream& out) {
    out << "method,opportunity_turn,valuation_turn,spot_usd,value_usd\n"
        << to_string(q.method) << ',' << q.opportunity_turn << ',' << q.valuation_turn << ',' << format_number(q.spot)
        << ',' << format_number(q.value) << '\n';
}

void write_csv(const PriceComparison& c, std::ostream& out) {
    out << "method,opportunity_turn,valuation_turn,spot_usd,value_usd\n";
    for (const auto* q : {&c.induction, &c.closed_form})
        out << to_string(q->method) << ',' << q->opportunity_turn << ',' << q->valuation_turn << ','
            << format_number(q->spot) << ',' << format_number(q->value) << '\n';
}

void write_csv(const AsicQuote& q, std::ostream& out) {
    out << "turn,mortality_weight,value_usd\n";
    for (const auto& b : q.breakdown)
        out << b.turn << ',' << format_number(b.weight) << ',' << format_number(b.value) << '\n';
}

void write_csv(const SweepResult& s, std::ostream& out) {
    out << "axis,value_usd,percent_change\n";
    for (const auto& p : s.points)
        out << format_number(p.axis) << ',' << format_number(p.value) << ',' << format_number(p.percent_change) << '\n';
}

void write_csv(const BacktestReport& r, std::ostream& out) {
    out << "date,asic_revenue_usd,portfolio_revenue_usd\n";
    for (std::size_t i = 0; i < r.dates.size(); ++i)
        out << format_date(r.dates[i]) << ',' << format_number(r.asic_revenue[i]) << ','
            << format_number(r.portfolio_revenue[i]) << '\n';
}

void write_csv(const std::vector<ImitationNode>& table, std::ostream& out) {
    out << "turn,up_moves,price_usd,value_usd,coins,bonds_usd\n";
    for (const auto& n : table)
        out << n.turn << ',' << n.up_moves << ',' << format_number(n.price) << ',' << format_number(n.value) << ','
            << format_number(n.weights.coins) << ',' << format_number(n.weights.bonds) << '\n';
}

std::string_view report_type(const Report& report) {
    struct Visitor {
        std::string_view operator()(const OpportunityQuote&) const { return "opportunity_quote"; }
        std::string_view operator()(const PriceComparison&) const { return "price"; }
        std::string_view operator()(const AsicQuote&) const { return "asic_quote"; }
        std::string_view operator()(const SweepResult& s) const {
            return s.axis_label == "volatility" ? "volatility_sweep" : "delay_sweep";
        }
        std::string_view operator()(const BacktestReport&) const { return "backtest"; }
        std::string_view operator()(const std::vector<ImitationNode>&) const { return "imitating_portfolio"; }
    };
    return std::visit(Visitor{}, report);
}

std::string render_report(const Report& report, ReportFormat format, const Json& provenance,
                          std::optional<std::string> generated_at) {
    std::ostringstream out;
    if (format == ReportFormat::csv) {
        std::visit([&out](const auto& r) { write_csv(r, out); }, report);
        return out.str();
    }
    Json doc;
    doc["report"] = std::string(report_type(report));
    if (generated_at)
        doc["generated_at"] = *generated_at;
    doc["provenance"] = provenance;
    doc["result"] = std::visit([](const auto& r) { return to_json(r); }, report);
    round_floats(doc);
    out << doc.dump(2) << '\n';
    return out.str();
}

void write_report(const Report& report, ReportFormat format, const std::filesystem::path& path,
                  const Json& provenance, std::optional<std::string> generated_at) {
    const std::string text = render_report(report, format, provenance, std::move(generated_at));
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out)
        throw DataError("write to " + path.string() + " failed");
}

}  // namespace asicval

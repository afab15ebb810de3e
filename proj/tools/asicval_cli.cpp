// asicval: command-line front end for opportunity pricing, ASIC valuation,
// sweeps, imitating portfolios and backtests.
#include "asicval/asic_valuer.hpp"
#include "asicval/data_io.hpp"
#include "asicval/errors.hpp"
#include "asicval/replication.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace asicval;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitData = 3;
constexpr int kExitSelfCheck = 4;
constexpr double kSelfCheckTolerance = 1e-6;

struct Options {
    fs::path config;
    fs::path prices;
    fs::path hashrate;
    fs::path out;
    std::string format = "json";
    std::string date;
    bool reproducible = false;
    int verbosity = 0;

    Turn turn = -1;
    Turn valuation_turn = 0;
    std::vector<double> delay_days = {0, 7, 14, 30, 60, 90};
    std::string sigma_grid = "0.3:1.2:0.1";
    Turn steps_per_opportunity = 0;  // 0: take from config
};

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> parts;
    std::size_t start = 0;
    for (;;) {
        const auto colon = text.find(':', start);
        const auto piece = text.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
        char* end = nullptr;
        const double v = std::strtod(piece.c_str(), &end);
        if (piece.empty() || end != piece.c_str() + piece.size() || !std::isfinite(v))
            throw ValidationError("--sigma-grid: expected a:b:step, got '" + text + "'");
        parts.push_back(v);
        if (colon == std::string::npos)
            break;
        start = colon + 1;
    }
    if (parts.size() != 3)
        throw ValidationError("--sigma-grid: expected a:b:step, got '" + text + "'");
    const double a = parts[0], b = parts[1], step = parts[2];
    if (!(step > 0.0) || b < a || a < 0.0)
        throw ValidationError("--sigma-grid: need 0 <= a <= b and step > 0");
    std::vector<double> grid;
    for (long i = 0;; ++i) {
        const double x = a + static_cast<double>(i) * step;
        if (x > b + 1e-9 * step)
            break;
        grid.push_back(x);
        if (grid.size() > 10000)
            throw ValidationError("--sigma-grid: more than 10000 points");
    }
    return grid;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Json describe_series(const DatedSeries& s) {
    if (s.empty())
        return {{"rows", 0}};
    return {{"rows", s.size()}, {"first", format_date(s.dates.front())}, {"last", format_date(s.dates.back())}};
}

class Runner {
public:
    Runner(std::string command, const Options& opt) : command_(std::move(command)), opt_(opt) {}

    int run() {
        check_inputs();
        config_ = load_config(opt_.config);
        if (!opt_.prices.empty())
            history_ = load_market_history(opt_.prices, opt_.hashrate);
        std::optional<Date> date;
        if (!opt_.date.empty()) {
            date = parse_iso_date(opt_.date);
            if (!date)
                throw ValidationError("--date: invalid ISO date '" + opt_.date + "'");
        }

        if (command_ == "backtest")
            return backtest(date);
        scenario_ = resolve_scenario(config_, history_, date);
        log("resolved scenario: spot " + format_number(scenario_->market.spot_price()) + ", up " +
            format_number(scenario_->walk.up_factor) + ", down " + format_number(scenario_->walk.down_factor));
        if (command_ == "price")
            return price();
        if (command_ == "value-asic")
            return emit(asic_value(scenario_->asic.reception_turn(), opt_.valuation_turn, spot(), scenario_->asic,
                                   scenario_->market, scenario_->walk));
        if (command_ == "delay")
            return delay();
        if (command_ == "sensitivity")
            return sensitivity();
        if (command_ == "imitate")
            return emit(imitation_table(require_turn(), opt_.valuation_turn, spot(), scenario_->asic,
                                        scenario_->market, scenario_->walk));
        throw ValidationError("unknown command " + command_);
    }

private:
    void check_inputs() const {
        if (opt_.prices.empty() != opt_.hashrate.empty())
            throw ValidationError("--prices and --hashrate must be given together");
        if (command_ == "backtest" && opt_.prices.empty())
            throw ValidationError("backtest needs --prices and --hashrate");
        if ((command_ == "price" || command_ == "imitate") && opt_.turn < 0)
            throw ValidationError(command_ + " needs --turn");
        if (opt_.valuation_turn < 0)
            throw ValidationError("--valuation-turn must be >= 0");
    }

    Turn require_turn() const {
        if (opt_.turn < opt_.valuation_turn)
            throw ValidationError("--turn must not precede --valuation-turn");
        return opt_.turn;
    }

    // Turn 0 is the valuation date, so a quote at a later valuation turn uses
    // the same spot as its lattice root.
    double spot() const { return scenario_->market.spot_price(); }

    void log(const std::string& msg) const {
        if (opt_.verbosity > 0)
            std::cerr << "asicval: " << msg << '\n';
    }

    Json provenance() const {
        Json args = {{"turn", opt_.turn >= 0 ? Json(opt_.turn) : Json()},
                     {"valuation_turn", opt_.valuation_turn},
                     {"date", opt_.date.empty() ? Json() : Json(opt_.date)}};
        if (command_ == "delay")
            args["delay_days"] = opt_.delay_days;
        if (command_ == "sensitivity")
            args["sigma_grid"] = opt_.sigma_grid;
        if (command_ == "backtest")
            args["steps_per_opportunity"] = steps_per_opportunity();
        Json p = {{"command", command_}, {"arguments", args}, {"config", config_to_json(config_)}};
        p["calibration"] = scenario_ ? scenario_->calibration : Json();
        if (history_)
            p["history"] = {{"prices", describe_series(history_->prices)},
                            {"hash_rates", describe_series(history_->hash_rates)}};
        return p;
    }

    Turn steps_per_opportunity() const {
        return opt_.steps_per_opportunity > 0 ? opt_.steps_per_opportunity : config_.calibration.steps_per_opportunity;
    }

    int emit(const Report& report) const {
        const auto format = opt_.format == "csv" ? ReportFormat::csv : ReportFormat::json;
        const auto stamp = opt_.reproducible ? std::optional<std::string>{} : std::optional{utc_timestamp()};
        const Json prov = provenance();
        if (opt_.out.empty()) {
            std::cout << render_report(report, format, prov, stamp);
            return 0;
        }
        write_report(report, format, opt_.out, prov, stamp);
        if (format == ReportFormat::csv) {
            Json side = {{"report", std::string(report_type(report))}};
            if (stamp)
                side["generated_at"] = *stamp;
            side["provenance"] = prov;
            round_floats(side);
            const fs::path path = opt_.out.string() + ".provenance.json";
            std::ofstream sidecar(path, std::ios::binary);
            if (!(sidecar << side.dump(2) << '\n'))
                throw DataError("cannot write " + path.string());
        }
        log("wrote " + opt_.out.string());
        return 0;
    }

    int price() {
        const Turn t = require_turn();
        const Turn k = opt_.valuation_turn;
        const auto& s = *scenario_;
        PriceComparison cmp{opportunity_value(t, k, spot(), s.asic, s.market, s.walk),
                            closed_form_value(t, k, spot(), s.asic, s.market, s.walk)};
        std::fprintf(stderr, "induction %s  closed-form %s  difference %s\n", format_number(cmp.induction.value).c_str(),
                     format_number(cmp.closed_form.value).c_str(), format_number(cmp.abs_difference()).c_str());
        const int rc = emit(cmp);
        if (!(cmp.rel_difference() <= kSelfCheckTolerance)) {
            std::fprintf(stderr, "asicval: self-check failed: methods differ by %s relative\n",
                         format_number(cmp.rel_difference()).c_str());
            return kExitSelfCheck;
        }
        return rc;
    }

    int delay() {
        std::vector<Turn> grid;
        for (double d : opt_.delay_days) {
            if (!(d >= 0.0))
                throw ValidationError("--delay-days must be non-negative");
            grid.push_back(static_cast<Turn>(std::llround(d * scenario_->turns_per_day)));
        }
        const auto& s = *scenario_;
        return emit(delay_sweep(grid, s.asic.reception_turn(), opt_.valuation_turn, spot(), s.asic, s.market, s.walk));
    }

    int sensitivity() {
        const auto grid = parse_grid(opt_.sigma_grid);
        return emit(volatility_sweep(grid, scenario_->context, scenario_->asic, scenario_->market));
    }

    int backtest(std::optional<Date> date) {
        std::optional<Turn> steps;
        if (opt_.steps_per_opportunity > 0)
            steps = opt_.steps_per_opportunity;
        auto run = run_backtest(config_, *history_, date, steps);
        log("backtest from " + format_date(run.window.dates.front()) + " over " + std::to_string(run.window.size()) +
            " rows");
        scenario_ = std::move(run.scenario);
        return emit(run.report);
    }

    std::string command_;
    const Options& opt_;
    RunConfig config_;
    std::optional<MarketHistory> history_;
    std::optional<Scenario> scenario_;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Valuation of proof-of-work mining hardware as a strip of real options", "asicval"};
    app.require_subcommand(1, 1);
    Options opt;

    app.add_option("--config", opt.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    app.add_option("--prices", opt.prices, "Price history CSV (date,price_usd)")->check(CLI::ExistingFile);
    app.add_option("--hashrate", opt.hashrate, "Hash-rate history CSV (date,hashrate_hs)")->check(CLI::ExistingFile);
    app.add_option("--out", opt.out, "Output path; stdout when omitted");
    app.add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--date", opt.date, "Valuation date (YYYY-MM-DD); backtest start for backtest");
    app.add_flag("--reproducible", opt.reproducible, "Omit the generated_at timestamp");
    app.add_flag("-v,--verbose", opt.verbosity, "Log progress to stderr");

    auto* price = app.add_subcommand("price", "Price one opportunity by induction and closed form");
    auto* value = app.add_subcommand("value-asic", "Value the whole ASIC");
    auto* delay = app.add_subcommand("delay", "Value change from delayed reception");
    auto* sens = app.add_subcommand("sensitivity", "ASIC value across a volatility grid");
    auto* imitate = app.add_subcommand("imitate", "Imitating portfolio for every state of one opportunity");
    auto* backtest = app.add_subcommand("backtest", "Replicate the ASIC on history and compare revenue");
    for (auto* sub : {price, value, delay, sens, imitate, backtest}) {
        sub->fallthrough();
        sub->add_option("--valuation-turn", opt.valuation_turn, "Valuation turn k (turn 0 is the valuation date)");
    }
    for (auto* sub : {price, imitate})
        sub->add_option("--turn", opt.turn, "Opportunity turn t")->required();
    delay->add_option("--delay-days", opt.delay_days, "Delays in days")->delimiter(',');
    sens->add_option("--sigma-grid", opt.sigma_grid, "Volatility grid a:b:step");
    backtest->add_option("--steps-per-opportunity", opt.steps_per_opportunity, "Rebalances per opportunity");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    try {
        Runner runner(app.get_subcommands().front()->get_name(), opt);
        return runner.run();
    } catch (const DataError& e) {
        std::cerr << "asicval: data error: " << e.what() << '\n';
        return kExitData;
    } catch (const CalibrationError& e) {
        std::cerr << "asicval: calibration error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "asicval: invalid input: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DomainError& e) {
        std::cerr << "asicval: invalid input: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "asicval: " << e.what() << '\n';
        return 1;
    }
}

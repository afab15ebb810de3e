#include "asicval/asic_valuer.hpp"
#include "asicval/calibration.hpp"
#include "asicval/data_io.hpp"
#include "asicval/errors.hpp"
#include "asicval/lattice_pricer.hpp"
#include "asicval/replication.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace asicval;

namespace {

Date date_arg(const std::string& text) {
    if (auto d = parse_iso_date(text))
        return *d;
    throw DataError("invalid date '" + text + "', expected YYYY-MM-DD");
}

std::optional<Date> date_arg(const std::optional<std::string>& text) {
    if (!text)
        return std::nullopt;
    return date_arg(*text);
}

// ordered_json -> Python objects through the json module keeps key order.
py::object to_python(const Json& doc) {
    Json rounded = doc;
    round_floats(rounded);
    return py::module_::import("json").attr("loads")(rounded.dump());
}

ReportFormat format_arg(const std::string& name) {
    if (name == "json")
        return ReportFormat::json;
    if (name == "csv")
        return ReportFormat::csv;
    throw ValidationError("format must be 'json' or 'csv'");
}

std::optional<MarketHistory> history_arg(const std::optional<std::filesystem::path>& prices,
                                         const std::optional<std::filesystem::path>& hashrate) {
    if (!prices && !hashrate)
        return std::nullopt;
    if (!prices || !hashrate)
        throw ValidationError("prices and hashrate must be given together");
    return load_market_history(*prices, *hashrate);
}

template <class T>
void bind_report(py::class_<T>& cls) {
    cls.def("to_dict", [](const T& r) { return to_python(to_json(r)); })
        .def(
            "render",
            [](const T& r, const std::string& format) {
                return render_report(Report{r}, format_arg(format), Json::object());
            },
            py::arg("format") = "json");
}

}  // namespace

PYBIND11_MODULE(_asicval, m) {
    m.doc() = "Arbitrage-free valuation of proof-of-work mining hardware";

    auto base = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<CalibrationError>(m, "CalibrationError", base.ptr());
    py::register_exception<DegenerateLatticeError>(m, "DegenerateLatticeError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

    // -- model ---------------------------------------------------------------

    py::enum_<ValidationMode>(m, "ValidationMode")
        .value("strict", ValidationMode::strict)
        .value("example_compat", ValidationMode::example_compat);

    py::class_<RandomWalkParams>(m, "RandomWalk")
        .def(py::init([](double up, double down, double gross_rate, std::optional<double> q) {
                 return RandomWalkParams{up, down, gross_rate, q};
             }),
             py::arg("up"), py::arg("down"), py::arg("gross_rate") = 1.0, py::arg("up_probability") = py::none())
        .def_readwrite("up", &RandomWalkParams::up_factor)
        .def_readwrite("down", &RandomWalkParams::down_factor)
        .def_readwrite("gross_rate", &RandomWalkParams::gross_rate)
        .def_readwrite("up_probability", &RandomWalkParams::up_probability)
        .def("__repr__", [](const RandomWalkParams& w) {
            return "RandomWalk(up=" + format_number(w.up_factor) + ", down=" + format_number(w.down_factor) +
                   ", gross_rate=" + format_number(w.gross_rate) + ")";
        });

    py::class_<ValidationReport>(m, "ValidationReport")
        .def_readonly("ok", &ValidationReport::ok)
        .def_readonly("violation", &ValidationReport::violation)
        .def("__bool__", [](const ValidationReport& r) { return r.ok; });

    m.def("validate", &validate, py::arg("walk"), py::arg("mode") = ValidationMode::strict);
    m.def("risk_neutral_probability", &risk_neutral_probability, py::arg("walk"));

    py::class_<StepMortality>(m, "StepMortality")
        .def(py::init([](Turn lifetime) { return StepMortality{lifetime}; }), py::arg("lifetime"))
        .def_readwrite("lifetime", &StepMortality::lifetime);
    py::class_<ExponentialMortality>(m, "ExponentialMortality")
        .def(py::init([](double decay) { return ExponentialMortality{decay}; }), py::arg("decay_per_turn"))
        .def_readwrite("decay_per_turn", &ExponentialMortality::decay_per_turn);
    py::class_<TableMortality>(m, "TableMortality")
        .def(py::init([](std::vector<double> w) { return TableMortality{std::move(w)}; }), py::arg("weights"))
        .def_readwrite("weights", &TableMortality::weights);
    m.def("mortality_weight", &mortality_weight, py::arg("model"), py::arg("turn"));

    py::class_<AsicSpec>(m, "AsicSpec")
        .def(py::init<double, double, MortalityModel, Turn, Turn>(), py::arg("hash_rate"),
             py::arg("energy_per_turn"), py::arg("mortality"), py::arg("reception_turn"),
             py::arg("lifetime_horizon"))
        .def_property_readonly("hash_rate", &AsicSpec::hash_rate)
        .def_property_readonly("energy_per_turn", &AsicSpec::energy_per_turn)
        .def_property_readonly("mortality", &AsicSpec::mortality)
        .def_property_readonly("reception_turn", &AsicSpec::reception_turn)
        .def_property_readonly("lifetime_horizon", &AsicSpec::lifetime_horizon)
        .def("with_reception_turn", &AsicSpec::with_reception_turn, py::arg("turn"));

    py::class_<ExponentialHashRate>(m, "ExponentialHashRate")
        .def(py::init([](double h0, double g) { return ExponentialHashRate{h0, g}; }), py::arg("initial"),
             py::arg("growth_per_turn") = 0.0)
        .def_readwrite("initial", &ExponentialHashRate::initial)
        .def_readwrite("growth_per_turn", &ExponentialHashRate::growth_per_turn);
    py::class_<TableHashRate>(m, "TableHashRate")
        .def(py::init([](std::vector<double> v) { return TableHashRate{std::move(v)}; }), py::arg("values"))
        .def_readwrite("values", &TableHashRate::values);

    py::class_<BlockRewardSchedule>(m, "BlockReward")
        .def_static("constant", &BlockRewardSchedule::constant, py::arg("coins_per_turn"))
        .def_static("halving", &BlockRewardSchedule::halving, py::arg("initial"), py::arg("interval"),
                    py::arg("first_halving") = py::none())
        .def("at", &BlockRewardSchedule::at, py::arg("turn"));

    py::class_<ConstantElectricity>(m, "ConstantElectricity")
        .def(py::init([](double p) { return ConstantElectricity{p}; }), py::arg("usd_per_wh"))
        .def_readwrite("usd_per_wh", &ConstantElectricity::usd_per_wh);
    py::class_<TableElectricity>(m, "TableElectricity")
        .def(py::init([](std::vector<double> p) { return TableElectricity{std::move(p)}; }), py::arg("usd_per_wh"))
        .def_readwrite("usd_per_wh", &TableElectricity::usd_per_wh);

    py::class_<MarketFees>(m, "MarketFees")
        .def(py::init([](double pool, double coin, double bond) { return MarketFees{pool, coin, bond}; }),
             py::arg("pool") = 0.0, py::arg("coin_trade") = 0.0, py::arg("bond_trade") = 0.0)
        .def_readwrite("pool", &MarketFees::pool)
        .def_readwrite("coin_trade", &MarketFees::coin_trade)
        .def_readwrite("bond_trade", &MarketFees::bond_trade);

    py::class_<MarketModel>(m, "MarketModel")
        .def(py::init<double, HashRateModel, BlockRewardSchedule, ElectricityPrice, MarketFees>(),
             py::arg("spot_price"), py::arg("hash_rate"), py::arg("block_reward"), py::arg("electricity"),
             py::arg("fees") = MarketFees{})
        .def_property_readonly("spot_price", &MarketModel::spot_price)
        .def_property_readonly("fees", &MarketModel::fees)
        .def("with_spot_price", &MarketModel::with_spot_price, py::arg("price"))
        .def("hash_rate_at", [](const MarketModel& mm, Turn t) { return hash_rate_at(mm, t); }, py::arg("turn"))
        .def("net_block_reward_at", [](const MarketModel& mm, Turn t) { return net_block_reward_at(mm, t); },
             py::arg("turn"))
        .def("electricity_price_at", [](const MarketModel& mm, Turn t) { return electricity_price_at(mm, t); },
             py::arg("turn"));

    // -- calibration ---------------------------------------------------------

    py::class_<CalibrationContext>(m, "CalibrationContext")
        .def(py::init([](double sigma, double years, Turn steps, double interest, double turn_years) {
                 return CalibrationContext{sigma, years, steps, interest, turn_years};
             }),
             py::arg("annual_volatility"), py::arg("calendar_horizon_years"), py::arg("lattice_steps"),
             py::arg("annual_interest") = 0.0, py::arg("turn_length_years") = 1.0 / kDaysPerYear)
        .def_readwrite("annual_volatility", &CalibrationContext::annual_volatility)
        .def_readwrite("calendar_horizon_years", &CalibrationContext::calendar_horizon_years)
        .def_readwrite("lattice_steps", &CalibrationContext::lattice_steps)
        .def_readwrite("annual_interest", &CalibrationContext::annual_interest)
        .def_readwrite("turn_length_years", &CalibrationContext::turn_length_years);

    m.def(
        "crr_factors",
        [](double sigma, double years, Turn steps) {
            const auto f = crr_factors(sigma, years, steps);
            return py::make_tuple(f.up, f.down);
        },
        py::arg("sigma"), py::arg("years"), py::arg("steps"));
    m.def("calibrated_walk", &calibrated_walk, py::arg("context"));
    m.def(
        "annualized_volatility",
        [](const std::vector<std::string>& dates, const std::vector<double>& prices) {
            if (dates.size() != prices.size())
                throw DataError("dates and prices differ in length");
            DatedSeries s;
            for (std::size_t i = 0; i < dates.size(); ++i) {
                s.dates.push_back(date_arg(dates[i]));
                s.values.push_back(prices[i]);
            }
            return annualized_volatility(s);
        },
        py::arg("dates"), py::arg("prices"));

    // -- pricing -------------------------------------------------------------

    m.def("immediate_value", &immediate_value, py::arg("turn"), py::arg("price"), py::arg("asic"), py::arg("market"));
    m.def("activation_cost", &activation_cost, py::arg("turn"), py::arg("asic"), py::arg("market"));
    m.def("one_step_value", &one_step_value, py::arg("v_up"), py::arg("v_down"), py::arg("walk"));
    m.def("short_amount", &short_amount, py::arg("price"), py::arg("v_up"), py::arg("v_down"), py::arg("walk"));

    py::class_<OpportunityQuote> quote(m, "OpportunityQuote");
    quote.def_readonly("opportunity_turn", &OpportunityQuote::opportunity_turn)
        .def_readonly("valuation_turn", &OpportunityQuote::valuation_turn)
        .def_readonly("spot", &OpportunityQuote::spot)
        .def_readonly("value", &OpportunityQuote::value)
        .def_property_readonly("method", [](const OpportunityQuote& q) { return std::string(to_string(q.method)); })
        .def_property_readonly("lattice", [](const OpportunityQuote& q) -> py::object {
            if (!q.lattice)
                return py::none();
            return py::cast(q.lattice->levels);
        });
    bind_report(quote);

    m.def(
        "opportunity_value",
        [](Turn t, Turn k, double spot, const AsicSpec& a, const MarketModel& mm, const RandomWalkParams& w,
           const std::string& method, bool keep_lattice) {
            if (method == "induction")
                return opportunity_value(t, k, spot, a, mm, w, keep_lattice);
            if (method == "closed_form")
                return closed_form_value(t, k, spot, a, mm, w);
            if (method == "oracle")
                return OpportunityQuote{t, k, spot, path_oracle_value(t, k, spot, a, mm, w), PricingMethod::oracle, {}};
            throw ValidationError("method must be 'induction', 'closed_form' or 'oracle'");
        },
        py::arg("t"), py::arg("k"), py::arg("spot"), py::arg("asic"), py::arg("market"), py::arg("walk"),
        py::arg("method") = "induction", py::arg("keep_lattice") = false);

    py::class_<ImitatingWeights>(m, "ImitatingWeights")
        .def_readonly("coins", &ImitatingWeights::coins)
        .def_readonly("bonds", &ImitatingWeights::bonds);
    m.def("imitating_weights", &imitating_weights, py::arg("price"), py::arg("v_up"), py::arg("v_down"),
          py::arg("walk"));
    m.def(
        "imitation_table",
        [](Turn t, Turn k, double spot, const AsicSpec& a, const MarketModel& mm, const RandomWalkParams& w) {
            return to_python(to_json(imitation_table(t, k, spot, a, mm, w)).at("nodes"));
        },
        py::arg("t"), py::arg("k"), py::arg("spot"), py::arg("asic"), py::arg("market"), py::arg("walk"));

    // -- whole ASIC ----------------------------------------------------------

    py::class_<AsicQuote> asic_quote(m, "AsicQuote");
    asic_quote.def_readonly("valuation_turn", &AsicQuote::valuation_turn)
        .def_readonly("reception_turn", &AsicQuote::reception_turn)
        .def_readonly("spot", &AsicQuote::spot)
        .def_readonly("value", &AsicQuote::value)
        .def_property_readonly("breakdown", [](const AsicQuote& q) {
            py::list out;
            for (const auto& b : q.breakdown)
                out.append(py::make_tuple(b.turn, b.weight, b.value));
            return out;
        });
    bind_report(asic_quote);

    py::class_<SweepResult> sweep(m, "SweepResult");
    sweep.def_property_readonly("points", [](const SweepResult& s) {
        py::list out;
        for (const auto& p : s.points)
            out.append(py::make_tuple(p.axis, p.value, p.percent_change));
        return out;
    });
    bind_report(sweep);

    m.def("asic_value", &asic_value, py::arg("s"), py::arg("t"), py::arg("spot"), py::arg("asic"), py::arg("market"),
          py::arg("walk"));
    m.def("reception_delay_loss", &reception_delay_loss, py::arg("s"), py::arg("s_delayed"), py::arg("t"),
          py::arg("spot"), py::arg("asic"), py::arg("market"), py::arg("walk"));
    m.def("volatility_sweep", &volatility_sweep, py::arg("sigma_grid"), py::arg("context"), py::arg("asic"),
          py::arg("market"));
    m.def("delay_sweep", &delay_sweep, py::arg("delay_grid"), py::arg("s"), py::arg("t"), py::arg("spot"),
          py::arg("asic"), py::arg("market"), py::arg("walk"));

    // -- configured runs -----------------------------------------------------

    py::class_<Scenario>(m, "Scenario")
        .def_readonly("asic", &Scenario::asic)
        .def_readonly("market", &Scenario::market)
        .def_readonly("walk", &Scenario::walk)
        .def_readonly("context", &Scenario::context)
        .def_readonly("turns_per_day", &Scenario::turns_per_day)
        .def_property_readonly("calibration", [](const Scenario& s) { return to_python(s.calibration); });

    m.def(
        "load_scenario",
        [](const std::filesystem::path& config, std::optional<std::filesystem::path> prices,
           std::optional<std::filesystem::path> hashrate, std::optional<std::string> date) {
            return resolve_scenario(load_config(config), history_arg(prices, hashrate), date_arg(date));
        },
        py::arg("config"), py::arg("prices") = py::none(), py::arg("hashrate") = py::none(),
        py::arg("date") = py::none());

    py::class_<BacktestReport> backtest(m, "BacktestReport");
    backtest
        .def_property_readonly("dates",
                               [](const BacktestReport& r) {
                                   std::vector<std::string> out;
                                   for (Date d : r.dates)
                                       out.push_back(format_date(d));
                                   return out;
                               })
        .def_readonly("asic_revenue", &BacktestReport::asic_revenue)
        .def_readonly("portfolio_revenue", &BacktestReport::portfolio_revenue)
        .def_readonly("asic_initial_cost", &BacktestReport::asic_initial_cost)
        .def_readonly("portfolio_initial_cost", &BacktestReport::portfolio_initial_cost)
        .def_readonly("total_fees", &BacktestReport::total_fees)
        .def_readonly("tracking_error", &BacktestReport::tracking_error);
    bind_report(backtest);

    m.def(
        "run_backtest",
        [](const std::filesystem::path& config, const std::filesystem::path& prices,
           const std::filesystem::path& hashrate, std::optional<std::string> start,
           std::optional<Turn> steps_per_opportunity) {
            return run_backtest(load_config(config), load_market_history(prices, hashrate), date_arg(start),
                                steps_per_opportunity)
                .report;
        },
        py::arg("config"), py::arg("prices"), py::arg("hashrate"), py::arg("start") = py::none(),
        py::arg("steps_per_opportunity") = py::none());
}

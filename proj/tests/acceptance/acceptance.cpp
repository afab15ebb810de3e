// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.
//
//   acceptance --config <synthetic_backtest.json> --fixtures <dir>
#include "asicval/asic_valuer.hpp"
#include "asicval/data_io.hpp"
#include "asicval/lattice_pricer.hpp"
#include "asicval/replication.hpp"
#include "../unit/support.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace asicval;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool near(double a, double b, double tol) {
    return std::fabs(a - b) <= tol;
}

// 1 -------------------------------------------------------------------------
Outcome single_turn_price() {
    const auto walk = support::example_walk();
    const auto asic = support::toy_asic();
    const double up = immediate_value(0, 800.0, asic, support::toy_market(800.0));
    const double down = immediate_value(0, 200.0, asic, support::toy_market(200.0));
    const double v = one_step_value(up, down, walk);
    return {near(v, 550.0 / 3.0, 1e-12) && up == 550.0 && down == 0.0, fmt("value %.15g, expected 550/3", v)};
}

// 2 -------------------------------------------------------------------------
Outcome two_turn_lattice() {
    const auto walk = support::example_walk();
    const auto asic = support::toy_asic(250.0, 3);
    const auto market = support::toy_market(200.0);
    const auto lattice = opportunity_value(2, 0, 200.0, asic, market, walk, true);
    const auto closed = closed_form_value(2, 0, 200.0, asic, market, walk);
    const auto w = risk_neutral_weights(walk);
    const Turn cutoff = closed_form_cutoff(2, 0, 200.0, asic, market, walk);
    const bool ok = near(lattice.value, 550.0 / 9.0, 1e-12) && near(lattice.lattice->at(1, 1), 550.0 / 3.0, 1e-12) &&
                    lattice.lattice->at(1, 0) == 0.0 && near(closed.value, 550.0 / 9.0, 1e-12) &&
                    near(w.kappa_down(), -2.0 / 3.0, 1e-12) && near(w.kappa_up(), 1.0 / 3.0, 1e-12) && cutoff == 2;
    return {ok, fmt("induction %.15g, closed form %.15g, node(400) %.15g, node(100) %g, kappa (%.6g, %.6g), cutoff %lld",
                    lattice.value, closed.value, lattice.lattice->at(1, 1), lattice.lattice->at(1, 0), w.kappa_down(),
                    w.kappa_up(), static_cast<long long>(cutoff))};
}

// 3 -------------------------------------------------------------------------
Outcome hedge_ratio() {
    const auto walk = support::example_walk();
    const double shorted = short_amount(400.0, 550.0, 0.0, walk);
    const auto table = imitation_table(2, 0, 200.0, support::toy_asic(250.0, 3), support::toy_market(200.0), walk);
    const auto at = [&](Turn turn, double price) {
        for (const auto& n : table)
            if (n.turn == turn && near(n.price, price, 1e-9))
                return n.weights;
        return ImitatingWeights{std::nan(""), std::nan("")};
    };
    const auto top = at(1, 400.0);
    const auto bottom = at(1, 100.0);
    const auto root = at(0, 200.0);
    const bool ok = near(shorted, 11.0 / 12.0, 1e-12) && near(top.coins, 11.0 / 12.0, 1e-12) &&
                    near(top.bonds, -550.0 / 3.0, 1e-12) && bottom.coins == 0.0 && bottom.bonds == 0.0 &&
                    near(root.coins, 11.0 / 18.0, 1e-12) && near(root.bonds, -550.0 / 9.0, 1e-12);
    return {ok, fmt("short %.15g; (%.6g, %.6g) at 400, (%g, %g) at 100, (%.6g, %.6g) at root", shorted, top.coins,
                    top.bonds, bottom.coins, bottom.bonds, root.coins, root.bonds)};
}

// 4 -------------------------------------------------------------------------
Outcome triple_agreement() {
    std::mt19937_64 rng(4);
    const auto t0 = Clock::now();
    double worst = 0.0;
    int failures = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto inst = support::random_instance(rng, 12);
        if (!validate(inst.walk).ok)
            return {false, "generator produced a walk outside strict validity"};
        const double spot = inst.market.spot_price();
        const double a = opportunity_value(inst.t, inst.k, spot, inst.asic, inst.market, inst.walk).value;
        const double b = closed_form_value(inst.t, inst.k, spot, inst.asic, inst.market, inst.walk).value;
        const double c = path_oracle_value(inst.t, inst.k, spot, inst.asic, inst.market, inst.walk);
        const double scale = std::max(1.0, std::fabs(a));
        const double err = std::max({std::fabs(a - b), std::fabs(a - c), std::fabs(b - c)}) / scale;
        worst = std::max(worst, err);
        failures += err > 1e-9;
    }
    const double elapsed = seconds_since(t0);
    return {failures == 0 && elapsed < 60.0,
            fmt("1000 instances, worst relative gap %.3g, %d over 1e-9, %.2f s", worst, failures, elapsed)};
}

// Shared by 5 and 9b: an instance whose realized path moves exactly on the
// one-turn CRR lattice and whose realized hash-rate is the forecast.
struct OnLattice {
    AsicSpec asic;
    MarketModel market;
    ReplicationSetup setup;
    double up;
    double down;
};

OnLattice on_lattice_instance(std::mt19937_64& rng, Turn reception, Turn lifetime) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    ReplicationSetup setup;
    setup.turn_length_years = (0.5 + 2.5 * U(rng)) / 365.0;
    setup.annual_interest = 0.1 * U(rng);
    setup.fixed_sigma = 0.2 + 1.3 * U(rng);
    setup.steps_per_opportunity = 64;
    setup.fees = {};
    const auto f = crr_factors(*setup.fixed_sigma, setup.turn_length_years, 1);

    const double spot = 100.0 + 9000.0 * U(rng);
    MarketModel market(spot, ExponentialHashRate{1e3 + 1e5 * U(rng), 0.05 * U(rng)},
                       BlockRewardSchedule::constant(1.0 + 20.0 * U(rng)), ConstantElectricity{0.01 + U(rng)},
                       MarketFees{0.05 * U(rng), 0.0, 0.0});
    const double h = 1.0 + 50.0 * U(rng);
    const double coins = h / (hash_rate_at(market, reception) + h) * net_block_reward_at(market, reception);
    const double strike = coins * spot * (0.5 + U(rng));
    AsicSpec asic(h, strike / (h * electricity_price_at(market, 0)), StepMortality{lifetime}, reception, lifetime);
    return {asic, market, setup, f.up, f.down};
}

AlignedHistory path_history(const OnLattice& inst, unsigned mask, Turn depth) {
    AlignedHistory h;
    double p = inst.market.spot_price();
    for (Turn i = 0; i <= depth; ++i) {
        h.dates.push_back(Date{std::chrono::year{2020} / 1 / 1} + std::chrono::days{i});
        h.prices.push_back(p);
        h.hash_rates.push_back(hash_rate_at(inst.market, i));
        p *= (mask >> i) & 1u ? inst.up : inst.down;
    }
    return h;
}

// 5 -------------------------------------------------------------------------
Outcome replication_exactness() {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> depth_dist(1, 8);
    long paths = 0;
    long opportunities = 0;
    double worst_injection = 0.0;
    double worst_liquidation = 0.0;
    bool ok = true;
    for (int i = 0; i < 100; ++i) {
        const Turn depth = depth_dist(rng);
        const Turn lifetime = 1 + static_cast<Turn>(rng() % static_cast<unsigned long>(depth));
        const Turn reception = depth - lifetime + 1;
        const auto inst = on_lattice_instance(rng, reception, lifetime);
        for (unsigned mask = 0; mask < (1u << depth); ++mask) {
            const auto history = path_history(inst, mask, depth);
            const auto report = simulate_replication(history, inst.asic, inst.market, inst.setup);
            ++paths;
            for (const auto& opp : report.opportunities) {
                ++opportunities;
                const auto u = static_cast<std::size_t>(opp.turn);
                const double payoff =
                    opp.weight * immediate_value(opp.turn, history.prices[u], inst.asic, inst.market);
                const double inj = opp.initial_cost > 0.0 ? opp.max_abs_injection / opp.initial_cost
                                                          : (opp.max_abs_injection > 0.0 ? 1.0 : 0.0);
                const double liq = std::fabs(opp.liquidation - payoff) / std::max(1.0, payoff);
                worst_injection = std::max(worst_injection, inj);
                worst_liquidation = std::max(worst_liquidation, liq);
                ok = ok && inj < 1e-9 && liq <= 1e-9 && report.total_fees == 0.0;
            }
        }
    }
    return {ok, fmt("%ld paths, %ld opportunities; worst injection/initial %.3g, worst liquidation gap %.3g", paths,
                    opportunities, worst_injection, worst_liquidation)};
}

// 6 -------------------------------------------------------------------------
Outcome no_arbitrage_identities() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    bool coin_equal = true;
    for (int i = 0; i < 10000; ++i) {
        const auto inst = support::random_instance(rng, 1);
        const double p = inst.market.spot_price();
        const double vu = 1000.0 * U(rng);
        const double vd = vu * U(rng);
        const double q = risk_neutral_probability(inst.walk);
        const double a = naive_branch_average(vu, vd, q, inst.walk.gross_rate);
        const double b = one_step_value(vu, vd, inst.walk);
        worst = std::max(worst, std::fabs(a - b) / std::max(1.0, vu));
        coin_equal = coin_equal && short_amount(p, vu, vd, inst.walk) == imitating_weights(p, vu, vd, inst.walk).coins;
    }
    const auto ex = support::example_walk();
    const bool example = near(naive_branch_average(550.0, 0.0, 1.0 / 3.0, 1.0), one_step_value(550.0, 0.0, ex), 1e-12);
    return {worst <= 1e-12 && coin_equal && example,
            fmt("10000 walks: worst |branch average - one step| %.3g; coin legs %s", worst,
                coin_equal ? "identical" : "differ")};
}

// 7 -------------------------------------------------------------------------
Outcome volatility_monotonicity() {
    const auto d = support::desk(61);
    std::vector<double> grid;
    for (int i = 0; i < 10; ++i)
        grid.push_back(0.3 + 0.1 * i);
    const auto sweep = volatility_sweep(grid, d.context, d.asic, d.market);

    // The deepest opportunity alone, 60 turns out.
    std::vector<double> single;
    for (double sigma : grid) {
        auto c = d.context;
        c.annual_volatility = sigma;
        single.push_back(closed_form_value(60, 0, d.market.spot_price(), d.asic, d.market, calibrated_walk(c)).value);
    }
    bool ok = activation_cost(60, d.asic, d.market) > 0.0;
    double worst_drop = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double a = (sweep.points[i - 1].value - sweep.points[i].value) / sweep.points[i - 1].value;
        const double b = (single[i - 1] - single[i]) / std::max(single[i - 1], 1e-300);
        worst_drop = std::max({worst_drop, a, b});
    }
    ok = ok && worst_drop <= 1e-9;
    return {ok, fmt("sigma 0.3..1.2: ASIC %.6g -> %.6g (%+.2f%%), opportunity 60 %.6g -> %.6g", sweep.points.front().value,
                    sweep.points.back().value, sweep.points.back().percent_change, single.front(), single.back())};
}

// 8 -------------------------------------------------------------------------
Outcome delay_sign() {
    const auto growing = support::desk(60);
    const auto walk = calibrated_walk(growing.context);
    const double spot = growing.market.spot_price();
    double largest = -1e300;
    for (Turn delay = 1; delay <= 60; ++delay)
        largest = std::max(largest, reception_delay_loss(0, delay, 0, spot, growing.asic, growing.market, walk));
    const auto free_power = support::desk(60, 0.003, 0.0);
    double largest_free = -1e300;
    for (Turn delay = 1; delay <= 60; ++delay)
        largest_free =
            std::max(largest_free, reception_delay_loss(0, delay, 0, spot, free_power.asic, free_power.market, walk));

    const auto flat = support::desk(60, 0.0, 0.0);
    double flat_worst = 0.0;
    for (Turn delay = 0; delay <= 60; ++delay)
        flat_worst =
            std::max(flat_worst, std::fabs(reception_delay_loss(0, delay, 0, spot, flat.asic, flat.market, walk)));
    return {largest < 0.0 && largest_free < 0.0 && flat_worst <= 1e-9,
            fmt("growing: max loss %.6g (priced power), %.6g (free power) over delays 1..60; flat: max |loss| %.3g",
                largest, largest_free, flat_worst)};
}

// 9 -------------------------------------------------------------------------
std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome backtest_regression(const fs::path& config, const fs::path& fixtures) {
    const auto run_config = load_config(config);
    const auto history =
        load_market_history(fixtures / "synthetic_prices.csv", fixtures / "synthetic_hashrate.csv");
    const auto first = render_report(run_backtest(run_config, history, std::nullopt).report, ReportFormat::csv, {});
    const auto second = render_report(run_backtest(run_config, history, std::nullopt).report, ReportFormat::csv, {});
    const auto frozen = read_file(fixtures / "backtest_regression.csv");

    // On-lattice property with several overlapping opportunities.
    std::mt19937_64 rng(9);
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
        const Turn reception = 1 + static_cast<Turn>(rng() % 4);
        const Turn lifetime = 1 + static_cast<Turn>(rng() % 20);
        const auto inst = on_lattice_instance(rng, reception, lifetime);
        const Turn depth = reception + lifetime - 1;
        for (int j = 0; j < 10; ++j) {
            const auto history_path = path_history(inst, static_cast<unsigned>(rng()), depth);
            const auto portfolio = simulate_replication(history_path, inst.asic, inst.market, inst.setup);
            const auto mined = asic_realized_revenue(history_path, inst.asic, inst.market);
            for (std::size_t k = 0; k < history_path.size(); ++k)
                worst = std::max(worst, std::fabs(portfolio.portfolio_revenue[k] - mined.asic_revenue[k]) /
                                            std::max(1.0, std::fabs(mined.asic_revenue[k])));
        }
    }
    const bool same = first == second;
    const bool matches = first == frozen;
    return {same && matches && worst <= 1e-9,
            fmt("rerun %s, frozen CSV %s (%zu bytes); on-lattice revenue gap %.3g", same ? "identical" : "differs",
                matches ? "identical" : "differs", first.size(), worst)};
}

// 10 ------------------------------------------------------------------------
Outcome performance() {
    const auto d = support::desk(730);
    const auto walk = calibrated_walk(d.context);
    const auto asic = d.asic.with_reception_turn(1);
    const auto t0 = Clock::now();
    const auto quote = asic_value(1, 0, d.market.spot_price(), asic, d.market, walk);
    const double elapsed = seconds_since(t0);
    bool finite = std::isfinite(quote.value);
    for (const auto& b : quote.breakdown)
        finite = finite && std::isfinite(b.value) && b.value >= 0.0;

    const RandomWalkParams deep{std::exp(0.6 * std::sqrt(1.0 / 365.0)), std::exp(-0.6 * std::sqrt(1.0 / 365.0)),
                                std::pow(1.02, 1.0 / 365.0), {}};
    const auto market = support::toy_market(8000.0);
    const auto strike = support::toy_asic(7000.0);
    const double closed = closed_form_value(2000, 0, 8000.0, strike, market, deep).value;
    const double lattice = opportunity_value(2000, 0, 8000.0, strike, market, deep).value;
    const bool deep_ok = std::isfinite(closed) && closed > 0.0 && std::fabs(closed - lattice) <= 1e-9 * lattice;
    return {elapsed < 5.0 && finite && quote.breakdown.size() == 730 && deep_ok,
            fmt("730 opportunities in %.3f s, value %.6g; depth 2000 closed form %.10g vs induction %.10g", elapsed,
                quote.value, closed, lattice)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    fs::path config;
    fs::path fixtures;
    app.add_option("--config", config, "Synthetic backtest config")->required()->check(CLI::ExistingFile);
    app.add_option("--fixtures", fixtures, "Fixture directory")->required()->check(CLI::ExistingDirectory);
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"single-turn example price", single_turn_price},
        {"two-turn example lattice and closed form", two_turn_lattice},
        {"hedge ratio and imitating weights", hedge_ratio},
        {"induction, closed form and path oracle agree", triple_agreement},
        {"zero-fee replication is exact on every lattice path", replication_exactness},
        {"no-arbitrage identities", no_arbitrage_identities},
        {"ASIC value non-decreasing in volatility", volatility_monotonicity},
        {"reception delay sign", delay_sign},
        {"backtest regression and on-lattice revenue", [&] { return backtest_regression(config, fixtures); }},
        {"performance and deep-lattice stability", performance},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("threw: ") + e.what()};
        }
        failed += !out.pass;
        std::printf("%s [%zu] %s: %s\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}

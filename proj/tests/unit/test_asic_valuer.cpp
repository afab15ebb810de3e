#include "doctest.h"

#include "asicval/asic_valuer.hpp"
#include "asicval/errors.hpp"
#include "support.hpp"

#include <cmath>
#include <random>

using namespace asicval;
using support::close_rel;

namespace {

// Direct summation of weighted opportunity values, each from the
// independent replication tree.
double summed_value(Turn s, Turn t, double spot, const AsicSpec& asic, const MarketModel& market,
                    const RandomWalkParams& walk) {
    double total = 0.0;
    for (Turn off = 0; off < asic.lifetime_horizon(); ++off) {
        const Turn u = s + off;
        const double w = mortality_weight(asic.mortality(), off);
        total += w * support::replicate_tree(static_cast<int>(u - t), spot, walk.up_factor, walk.down_factor,
                                             walk.gross_rate,
                                             [&](double p) { return immediate_value(u, p, asic, market); });
    }
    return total;
}

}  // namespace

TEST_SUITE("asic_valuer") {

TEST_CASE("single-turn machine is worth its immediate value") {
    const auto market = support::toy_market(800.0);
    const auto q = asic_value(0, 0, 800.0, support::toy_asic(250.0, 1), market, support::example_walk());
    CHECK(q.value == doctest::Approx(550.0).epsilon(1e-12));
    REQUIRE(q.breakdown.size() == 1);
    CHECK(q.breakdown[0].weight == 1.0);
}

TEST_CASE("two opportunities on the two-turn market") {
    const auto walk = support::example_walk();
    const auto market = support::toy_market(200.0);
    const auto asic = support::toy_asic(250.0, 2, 1);
    const auto q = asic_value(1, 0, 200.0, asic, market, walk);
    // V(1,0,200) = one step over (immediate(400), immediate(100)) = 150/3.
    CHECK(std::fabs(q.value - (50.0 + 550.0 / 9.0)) < 1e-12);
    CHECK(std::fabs(q.value - summed_value(1, 0, 200.0, asic, market, walk)) < 1e-12);
    REQUIRE(q.breakdown.size() == 2);
    CHECK(q.breakdown[0].turn == 1);
    CHECK(q.breakdown[1].turn == 2);
}

TEST_CASE("breakdown sums to the quote and matches direct summation") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        auto inst = support::random_instance(rng, 4);
        const Turn life = 1 + static_cast<Turn>(U(rng) * 8);
        const MortalityModel m = i % 2 == 0 ? MortalityModel{ExponentialMortality{0.2 * U(rng)}}
                                            : MortalityModel{StepMortality{life}};
        const auto asic = inst.asic.with_mortality(m).with_lifetime_horizon(life).with_reception_turn(inst.k + 2);
        const auto q = asic_value(inst.k + 2, inst.k, inst.market.spot_price(), asic, inst.market, inst.walk);
        double sum = 0.0;
        for (const auto& b : q.breakdown)
            sum += b.weight * b.value;
        CHECK(close_rel(q.value, sum, 1e-9));
        CHECK(close_rel(q.value, summed_value(inst.k + 2, inst.k, inst.market.spot_price(), asic, inst.market,
                                              inst.walk),
                        1e-9));
        CHECK(q.value >= 0.0);
    }
}

TEST_CASE("vanishing hash-rate is worth nothing") {
    const auto walk = support::example_walk();
    const auto market = support::toy_market(200.0);
    double previous = 1e300;
    for (double h : {1.0, 1e-3, 1e-6, 1e-9, 1e-12}) {
        const AsicSpec asic(h, 100.0, StepMortality{3}, 0, 3);
        const double v = asic_value(0, 0, 200.0, asic, market, walk).value;
        CHECK(v <= previous);
        previous = v;
    }
    CHECK(previous < 1e-9);
}

TEST_CASE("larger survival and longer horizons never lower the value") {
    const auto d = support::desk(40);
    const auto walk = calibrated_walk(d.context);
    const double spot = d.market.spot_price();
    const auto short_life = d.asic.with_mortality(ExponentialMortality{0.1});
    const auto long_life = d.asic.with_mortality(ExponentialMortality{0.05});
    CHECK(asic_value(0, 0, spot, long_life, d.market, walk).value >=
          asic_value(0, 0, spot, short_life, d.market, walk).value);
    double previous = 0.0;
    for (Turn horizon : {1, 5, 10, 20, 40}) {
        const double v = asic_value(0, 0, spot, d.asic.with_lifetime_horizon(horizon).with_mortality(StepMortality{40}),
                                    d.market, walk)
                             .value;
        CHECK(v >= previous);
        previous = v;
    }
}

TEST_CASE("argument ordering is enforced") {
    const auto market = support::toy_market(200.0);
    const auto asic = support::toy_asic(250.0, 2);
    const auto walk = support::example_walk();
    CHECK_THROWS_AS(asic_value(0, 1, 200.0, asic, market, walk), DomainError);
    CHECK_THROWS_AS(reception_delay_loss(2, 1, 0, 200.0, asic, market, walk), DomainError);
    CHECK_THROWS_AS(reception_delay_loss(0, 1, 1, 200.0, asic, market, walk), DomainError);
}

TEST_CASE("reception delay") {
    const auto walk = support::example_walk();
    const auto market = support::toy_market(200.0);
    const auto asic = support::toy_asic(250.0, 2);
    CHECK(reception_delay_loss(1, 1, 0, 200.0, asic, market, walk) == 0.0);

    // Growing network, constant reward and electricity.
    const auto d = support::desk(30);
    const auto dwalk = calibrated_walk(d.context);
    const double spot = d.market.spot_price();
    for (Turn delay : {1, 7, 30}) {
        const double loss = reception_delay_loss(0, delay, 0, spot, d.asic, d.market, dwalk);
        CHECK(loss < 0.0);
        const double direct = asic_value(delay, 0, spot, d.asic, d.market, dwalk).value -
                              asic_value(0, 0, spot, d.asic, d.market, dwalk).value;
        CHECK(loss == doctest::Approx(direct).epsilon(1e-12));
    }

    // Flat network and free power: every opportunity is worth its coins at spot.
    const auto flat = support::desk(30, 0.0, 0.0);
    for (Turn delay : {1, 7, 30})
        CHECK(std::fabs(reception_delay_loss(0, delay, 0, spot, flat.asic, flat.market, dwalk)) <=
              1e-9 * asic_value(0, 0, spot, flat.asic, flat.market, dwalk).value);
}

TEST_CASE("naive expected value") {
    // No drift, free power: discounted sum of today's gross rewards.
    const auto d = support::desk(10, 0.0, 0.0);
    const double r = 1.0001;
    double expected = 0.0;
    for (Turn u = 0; u < 10; ++u)
        expected += reward_coins(u, d.asic, d.market) * 8000.0 / std::pow(r, static_cast<double>(u));
    CHECK(naive_expected_value(0, 0, 8000.0, 1.0, r, d.asic, d.market) == doctest::Approx(expected).epsilon(1e-12));

    // Single opportunity one turn out, drifted 400 -> 500.
    const auto asic = support::toy_asic(250.0, 1, 1);
    CHECK(naive_expected_value(1, 0, 400.0, 1.25, 1.0, asic, support::toy_market(400.0)) ==
          doctest::Approx(250.0).epsilon(1e-14));

    // Turns past the step lifetime add nothing.
    const auto longer = d.asic.with_lifetime_horizon(20);
    CHECK(naive_expected_value(0, 0, 8000.0, 1.0, r, longer, d.market) == doctest::Approx(expected).epsilon(1e-12));

    CHECK_THROWS_AS(naive_expected_value(0, 0, 8000.0, 0.0, r, d.asic, d.market), DomainError);
}

TEST_CASE("branch average") {
    CHECK(naive_branch_average(550.0, 0.0, 0.5, 1.0) == 275.0);
    CHECK(naive_branch_average(42.0, 42.0, 0.77, 1.05) == doctest::Approx(40.0).epsilon(1e-15));
    CHECK(std::fabs(naive_branch_average(550.0, 0.0, 1.0 / 3.0, 1.0) - 550.0 / 3.0) < 1e-12);
    CHECK_THROWS_AS(naive_branch_average(1.0, 0.0, 1.5, 1.0), DomainError);

    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> U(0.0, 1000.0);
    for (int i = 0; i < 500; ++i) {
        const auto inst = support::random_instance(rng, 1);
        const double vu = U(rng);
        const double vd = U(rng) * 0.5;
        const double q = risk_neutral_probability(inst.walk);
        CHECK(std::fabs(naive_branch_average(vu, vd, q, inst.walk.gross_rate) - one_step_value(vu, vd, inst.walk)) <=
              1e-12 * std::max(1.0, vu));
    }
}

TEST_CASE("volatility sweep") {
    const auto d = support::desk(60);
    const auto single = volatility_sweep({0.6}, d.context, d.asic, d.market);
    REQUIRE(single.points.size() == 1);
    CHECK(single.points[0].percent_change == 0.0);
    CHECK(single.axis_label == "volatility");

    std::vector<double> grid;
    for (int i = 0; i < 10; ++i)
        grid.push_back(0.3 + 0.1 * i);
    const auto sweep = volatility_sweep(grid, d.context, d.asic, d.market);
    REQUIRE(sweep.points.size() == grid.size());
    for (std::size_t i = 1; i < grid.size(); ++i) {
        CHECK(sweep.points[i].value > sweep.points[i - 1].value);
        CHECK(sweep.points[i].percent_change > sweep.points[i - 1].percent_change);
    }
    CHECK(sweep.baseline.axis == 0.3);

    CHECK_THROWS_AS(volatility_sweep({0.5, 0.4}, d.context, d.asic, d.market), DomainError);
    CHECK_THROWS_AS(volatility_sweep({0.0, 0.4}, d.context, d.asic, d.market), CalibrationError);
}

TEST_CASE("delay sweep") {
    const auto d = support::desk(30);
    const auto walk = calibrated_walk(d.context);
    const auto sweep = delay_sweep({0, 1, 7, 30}, 0, 0, d.market.spot_price(), d.asic, d.market, walk);
    REQUIRE(sweep.points.size() == 4);
    CHECK(sweep.points[0].percent_change == 0.0);
    for (std::size_t i = 1; i < 4; ++i)
        CHECK(sweep.points[i].percent_change < sweep.points[i - 1].percent_change);

    const auto flat = support::desk(30, 0.0, 0.0);
    const auto flat_sweep = delay_sweep({0, 5, 30}, 0, 0, 8000.0, flat.asic, flat.market, walk);
    for (const auto& p : flat_sweep.points)
        CHECK(std::fabs(p.percent_change) < 1e-7);

    CHECK_THROWS_AS(delay_sweep({3, 1}, 0, 0, 8000.0, d.asic, d.market, walk), DomainError);
}

}

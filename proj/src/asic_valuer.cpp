#include "asicval/asic_valuer.hpp"

#include "asicval/errors.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <sstream>

namespace asicval {

namespace {

double percent_change(double value, double base) {
    if (base == 0.0)
        return value == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    return 100.0 * (value / base - 1.0);
}

template <typename Axis>
void require_increasing(const std::vector<Axis>& grid, const char* what) {
    if (grid.empty())
        throw DomainError(std::string(what) + " grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw DomainError(std::string(what) + " grid must be strictly increasing");
}

double opportunity_at(Turn u, Turn t, double spot, const AsicSpec& asic, const MarketModel& market,
                      const RandomWalkParams& walk) {
    const double v = closed_form_value(u, t, spot, asic, market, walk).value;
    if (std::isfinite(v))
        return v;
    return opportunity_value(u, t, spot, asic, market, walk).value;
}

}  // namespace

AsicQuote asic_value(Turn s, Turn t, double spot, const AsicSpec& asic, const MarketModel& market,
                     const RandomWalkParams& walk) {
    if (t < 0 || t > s)
        throw DomainError("asic_value requires 0 <= t <= s");
    require_valid(walk, ValidationMode::example_compat);

    AsicQuote quote;
    quote.valuation_turn = t;
    quote.reception_turn = s;
    quote.spot = spot;
    for (Turn offset = 0; offset < asic.lifetime_horizon(); ++offset) {
        const double weight = mortality_weight(asic.mortality(), offset);
        if (weight < kMortalityCutoff)
            break;
        const Turn u = s + offset;
        const double v = opportunity_at(u, t, spot, asic, market, walk);
        quote.breakdown.push_back({u, weight, v});
        quote.value += weight * v;
    }
    return quote;
}

double reception_delay_loss(Turn s, Turn s_delayed, Turn t, double spot, const AsicSpec& asic,
                            const MarketModel& market, const RandomWalkParams& walk) {
    if (s_delayed < s)
        throw DomainError("delayed reception precedes the original reception turn");
    if (s < t)
        throw DomainError("reception turn precedes the valuation turn");
    if (s_delayed == s)
        return 0.0;
    return asic_value(s_delayed, t, spot, asic, market, walk).value - asic_value(s, t, spot, asic, market, walk).value;
}

double naive_expected_value(Turn s, Turn t, double spot, double growth_rate, double gross_rate, const AsicSpec& asic,
                            const MarketModel& market) {
    if (t < 0 || t > s)
        throw DomainError("naive_expected_value requires 0 <= t <= s");
    if (!(growth_rate > 0.0))
        throw DomainError("growth rate must be positive");
    if (!(gross_rate > 0.0))
        throw DomainError("gross rate must be positive");
    if (!(spot > 0.0))
        throw DomainError("price must be positive");

    double total = 0.0;
    for (Turn offset = 0; offset < asic.lifetime_horizon(); ++offset) {
        const double weight = mortality_weight(asic.mortality(), offset);
        if (weight < kMortalityCutoff)
            break;
        const Turn u = s + offset;
        const auto elapsed = static_cast<double>(u - t);
        const double drifted = spot * std::pow(growth_rate, elapsed);
        const double payoff = reward_coins(u, asic, market) * drifted - activation_cost(u, asic, market);
        if (payoff > 0.0)
            total += weight * payoff / std::pow(gross_rate, elapsed);
    }
    return total;
}

double naive_branch_average(double v_up, double v_down, double q, double gross_rate) {
    if (!(q >= 0.0 && q <= 1.0))
        throw DomainError("branch probability must lie in [0, 1]");
    if (!(gross_rate > 0.0))
        throw DomainError("gross rate must be positive");
    return (q * v_up + (1.0 - q) * v_down) / gross_rate;
}

SweepResult volatility_sweep(const std::vector<double>& sigma_grid, const CalibrationContext& context,
                             const AsicSpec& asic, const MarketModel& market) {
    require_increasing(sigma_grid, "volatility");
    for (double sigma : sigma_grid)
        if (!(sigma > 0.0))
            throw CalibrationError("volatility grid values must be positive");

    std::vector<RandomWalkParams> walks;
    walks.reserve(sigma_grid.size());
    for (double sigma : sigma_grid) {
        CalibrationContext c = context;
        c.annual_volatility = sigma;
        auto walk = calibrated_walk(c);
        if (auto report = validate(walk, ValidationMode::strict); !report) {
            std::ostringstream os;
            os << "sigma " << sigma << " calibrates to an invalid walk: " << report.violation;
            throw CalibrationError(os.str());
        }
        walks.push_back(walk);
    }

    const Turn s = asic.reception_turn();
    std::vector<std::future<double>> jobs;
    jobs.reserve(walks.size());
    for (const auto& walk : walks)
        jobs.push_back(std::async(std::launch::async, [&asic, &market, walk, s] {
            return asic_value(s, 0, market.spot_price(), asic, market, walk).value;
        }));

    SweepResult result;
    result.axis_label = "volatility";
    for (std::size_t i = 0; i < jobs.size(); ++i)
        result.points.push_back({sigma_grid[i], jobs[i].get(), 0.0});
    const double base = result.points.front().value;
    for (auto& p : result.points)
        p.percent_change = percent_change(p.value, base);
    result.baseline = result.points.front();
    return result;
}

SweepResult delay_sweep(const std::vector<Turn>& delay_grid, Turn s, Turn t, double spot, const AsicSpec& asic,
                        const MarketModel& market, const RandomWalkParams& walk) {
    require_increasing(delay_grid, "delay");
    if (delay_grid.front() < 0)
        throw DomainError("delays must be >= 0");
    if (s < t)
        throw DomainError("reception turn precedes the valuation turn");

    auto base_job = std::async(std::launch::async,
                               [&] { return asic_value(s, t, spot, asic, market, walk).value; });
    std::vector<std::future<double>> jobs;
    jobs.reserve(delay_grid.size());
    for (Turn d : delay_grid)
        jobs.push_back(std::async(std::launch::async, [&asic, &market, &walk, s, t, spot, d] {
            return asic_value(s + d, t, spot, asic, market, walk).value;
        }));

    SweepResult result;
    result.axis_label = "delay";
    const double base = base_job.get();
    result.baseline = {0.0, base, 0.0};
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const double v = jobs[i].get();
        result.points.push_back({static_cast<double>(delay_grid[i]), v, percent_change(v, base)});
    }
    return result;
}

}  // namespace asicval

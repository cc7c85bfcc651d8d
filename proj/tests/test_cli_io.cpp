#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "fspc/errors.hpp"
#include "fspc/io.hpp"
#include "fspc/rng.hpp"
#include "fspc/synth.hpp"

using namespace fspc;

namespace {

std::string day_row(const std::string& date, const std::array<double, 24>& vals) {
    std::ostringstream os;
    os << date;
    for (double v : vals) os << ',' << format_double(v);
    return os.str();
}

DailyProfileRecord make_record(Pollutant p, const std::array<double, 24>& vals) {
    DailyProfileRecord rec;
    rec.date = "2004-01-01";
    rec.pollutant = p;
    rec.values = vals;
    return rec;
}

std::array<double, 24> constant_day(double v) {
    std::array<double, 24> a{};
    a.fill(v);
    return a;
}

} // namespace

TEST_CASE("who_flag: table semantics on edge cases") {
    // CO is judged on rolling 8-hour means against 10
    CHECK_FALSE(who_flag(make_record(Pollutant::CO, constant_day(9.9))).flagged);
    CHECK_FALSE(who_flag(make_record(Pollutant::CO, constant_day(10.0))).flagged);
    CHECK(who_flag(make_record(Pollutant::CO, constant_day(10.1))).flagged);

    // a single spiked hour dilutes below the CO limit
    auto spiked = constant_day(5.0);
    spiked[12] = 30.0;
    CHECK_FALSE(who_flag(make_record(Pollutant::CO, spiked)).flagged);

    // hourly-max pollutants
    auto o3 = constant_day(100.0);
    o3[7] = 240.0;
    CHECK_FALSE(who_flag(make_record(Pollutant::O3, o3)).flagged);
    o3[7] = 241.0;
    const auto flag = who_flag(make_record(Pollutant::O3, o3));
    CHECK(flag.flagged);
    REQUIRE(flag.violated.size() == 1);
    CHECK(flag.violated[0] == "O3/240");

    CHECK(who_flag(make_record(Pollutant::NO2, constant_day(401.0))).flagged);
    CHECK_FALSE(who_flag(make_record(Pollutant::NO2, constant_day(400.0))).flagged);
    CHECK(who_flag(make_record(Pollutant::SO2, constant_day(501.0))).flagged);

    // NO carries no limit, ever
    CHECK_FALSE(who_flag(make_record(Pollutant::NO, constant_day(1e6))).flagged);
    CHECK_FALSE(threshold_rule(Pollutant::NO).has_value());
}

TEST_CASE("who_flag: agrees with exhaustive window re-evaluation") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::array<double, 24> vals{};
        for (auto& v : vals) v = rng.uniform(0.0, 14.0);
        const auto rec = make_record(Pollutant::CO, vals);
        bool expect = false;
        for (std::size_t k = 0; k + 8 <= 24; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < 8; ++i) s += vals[k + i];
            expect = expect || (s / 8.0 > 10.0);
        }
        CHECK(who_flag(rec).flagged == expect);
    }
}

TEST_CASE("ingest_csv: happy path, ordering, and hour mapping") {
    std::ostringstream file;
    file << profiles_csv_header() << "\n";
    file << day_row("2004-01-02", constant_day(2.0)) << "\n";
    file << day_row("2004-01-01", constant_day(1.0)) << "\n";
    std::istringstream in(file.str());
    const auto res = ingest_csv_stream(in, Pollutant::CO);
    REQUIRE(res.records.size() == 2);
    CHECK(res.warnings.empty());
    CHECK(res.records[0].date == "2004-01-01"); // sorted by date
    CHECK(res.records[1].date == "2004-01-02");
    CHECK(res.records[0].values[5] == 1.0);

    // hour k sits at t = k/23 on the curve
    const TimeGrid working(101);
    std::array<double, 24> ramp{};
    for (std::size_t k = 0; k < 24; ++k) ramp[k] = static_cast<double>(k);
    const auto curve = record_to_curve(make_record(Pollutant::CO, ramp), working);
    for (std::size_t k = 0; k < 24; ++k)
        CHECK(evaluate(curve, static_cast<double>(k) / 23.0) ==
              doctest::Approx(static_cast<double>(k)).epsilon(1e-12));
}

TEST_CASE("ingest_csv: missing-cell handling") {
    std::ostringstream file;
    file << profiles_csv_header() << "\n";
    // two interior holes -> linear fill
    file << "2004-01-01,0,1,2,,4,5,6,7,8,9,10,11,12,13,14,,16,17,18,19,20,21,22,23\n";
    // five holes -> skipped with a warning
    file << "2004-01-02,0,1,2,,,,,,8,9,10,11,12,13,14,15,16,17,18,19,20,21,22,23\n";
    // leading hole -> nearest-value fill
    file << "2004-01-03,,5,5,5,5,5,5,5,5,5,5,5,5,5,5,5,5,5,5,5,5,5,5,5\n";
    std::istringstream in(file.str());
    const auto res = ingest_csv_stream(in, Pollutant::CO);
    REQUIRE(res.records.size() == 2);
    REQUIRE(res.warnings.size() == 1);
    CHECK(res.warnings[0].find("2004-01-02") != std::string::npos);

    const auto& filled = res.records[0];
    CHECK(filled.values[3] == doctest::Approx(3.0).epsilon(1e-14)); // between 2 and 4
    CHECK(filled.values[15] == doctest::Approx(15.0).epsilon(1e-14));
    CHECK(filled.filled_hours == std::vector<std::size_t>{3, 15});

    CHECK(res.records[1].values[0] == 5.0);
    CHECK(res.records[1].filled_hours == std::vector<std::size_t>{0});
}

TEST_CASE("ingest_csv: malformed input reports the line") {
    auto expect_parse_error = [](const std::string& content, const char* needle) {
        std::istringstream in(content);
        try {
            ingest_csv_stream(in, Pollutant::CO);
            FAIL_CHECK("expected parse_error for: " << needle);
        } catch (const parse_error& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_parse_error("date,h00\n", "line 1");
    expect_parse_error(profiles_csv_header() + "\n2004-01-01,1,2\n", "line 2");
    expect_parse_error(profiles_csv_header() + "\nnot-a-date" + day_row("", constant_day(1)) + "\n",
                       "line 2");
    expect_parse_error(profiles_csv_header() + "\n" +
                           day_row("2004-01-01", constant_day(1)) + "\n" +
                           "2004-01-02,1,1,1,1,1,1,1,1,1,1,bad,1,1,1,1,1,1,1,1,1,1,1,1,1\n",
                       "line 3");
    expect_parse_error(profiles_csv_header() + "\n" +
                           "2004-01-02,1,1,1,-2,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1\n",
                       ">= 0");
}

TEST_CASE("profiles round trip: parse(write(parse(file))) is stable") {
    SynthSpec law;
    law.n = 8;
    law.grid_points = 24;
    law.alpha = ParamLaw::uniform(0.9, 1.1);
    law.beta = ParamLaw::uniform(0.5, 1.0);
    law.seed = 3;
    const auto set = generate_ic_set(law);
    std::vector<DailyProfileRecord> recs;
    std::string date = "2004-01-01";
    for (const auto& c : set.curves) {
        DailyProfileRecord r;
        r.date = date;
        const auto hours = curve_to_hours(c);
        std::copy(hours.begin(), hours.end(), r.values.begin());
        for (auto& v : r.values) v = std::max(v, 0.0);
        recs.push_back(r);
        date = next_date(date);
    }
    const std::string path1 = "roundtrip_a.csv", path2 = "roundtrip_b.csv";
    write_profiles_csv(path1, recs);
    const auto in1 = ingest_csv(path1, Pollutant::CO);
    REQUIRE(in1.records.size() == recs.size());
    for (std::size_t j = 0; j < recs.size(); ++j)
        CHECK(in1.records[j].values == recs[j].values); // exact decimal round trip
    write_profiles_csv(path2, in1.records);
    CHECK(read_text_file(path1) == read_text_file(path2));
    std::remove(path1.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("format_double round-trips bit-exactly") {
    Rng rng(8);
    for (int trial = 0; trial < 1000; ++trial) {
        double v = rng.normal(0.0, 1.0) * std::pow(10.0, rng.uniform(-12.0, 12.0));
        const std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("databank JSON round trip preserves every field bit-exactly") {
    SynthSpec spec;
    spec.n = 6;
    spec.grid_points = 31;
    spec.alpha = ParamLaw::uniform(0.9, 1.1);
    spec.beta = ParamLaw::uniform(-0.2, 0.2);
    spec.noise_sigma = 0.02;
    spec.seed = 12;
    const auto set = generate_ic_set(spec);
    FrechetConfig cfg;
    cfg.seed = 9;
    cfg.max_iterations = 3;
    const auto result = estimate_frechet_mean(set.curves, cfg);

    const auto j = databank_to_json(result);
    const auto back = databank_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.f0.values == result.f0.values);
    CHECK(back.bank.gamma == result.bank.gamma);
    CHECK(back.bank.xi == result.bank.xi);
    CHECK(back.frechet_variance == result.frechet_variance);
    CHECK(back.objective_trace == result.objective_trace);
    CHECK(back.weights == result.weights);
    CHECK(back.ic_deviances == result.ic_deviances);
    CHECK(back.iterations == result.iterations);
    CHECK(back.converged == result.converged);
    REQUIRE(back.train_curves.size() == result.train_curves.size());
    for (std::size_t i = 0; i < back.train_curves.size(); ++i)
        CHECK(back.train_curves[i].values == result.train_curves[i].values);
    REQUIRE(back.ic_params.size() == result.ic_params.size());
    for (std::size_t i = 0; i < back.ic_params.size(); ++i) {
        CHECK(back.ic_params[i].params.alpha == result.ic_params[i].params.alpha);
        CHECK(back.ic_params[i].params.zeta == result.ic_params[i].params.zeta);
        CHECK(back.ic_params[i].objective == result.ic_params[i].objective);
    }
    CHECK_THROWS_AS(databank_from_json(nlohmann::json{{"schema", "bogus"}}), parse_error);
}

TEST_CASE("limits and state JSON round trips") {
    ControlLimits limits;
    limits.deviance_ucl = 0.123456789012345678;
    for (std::size_t k = 0; k < 4; ++k) limits.param[k] = {-0.5 - k * 0.1, 0.5 + k * 0.3};
    EwmaConfig cfg;
    cfg.lambda = 0.15;
    cfg.limit_level = 0.975;
    cfg.mode = VariabilityMode::frechet_function;
    cfg.raw_deviance = true;
    cfg.fix_kappa = true;
    cfg.reference_orders = 123;
    cfg.seed = 999;

    const auto [l2, c2] = limits_from_json(limits_to_json(limits, cfg));
    CHECK(l2.deviance_ucl == limits.deviance_ucl);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(l2.param[k].lcl == limits.param[k].lcl);
        CHECK(l2.param[k].ucl == limits.param[k].ucl);
    }
    CHECK(c2.lambda == cfg.lambda);
    CHECK(c2.limit_level == cfg.limit_level);
    CHECK(c2.mode == cfg.mode);
    CHECK(c2.raw_deviance == cfg.raw_deviance);
    CHECK(c2.fix_kappa == cfg.fix_kappa);
    CHECK(c2.reference_orders == cfg.reference_orders);
    CHECK(c2.seed == cfg.seed);

    EwmaState state;
    state.step = 42;
    state.theta_tilde = {1.25, -0.5, 1.1, 0.05};
    state.f_tilde = curve_from_function(TimeGrid(11), [](double t) { return t * t; });
    state.d_tilde = 0.33333333333333331;
    state.param_ewma = {1.1, -0.2, 1.0, 0.01};
    const auto s2 = state_from_json(state_to_json(state));
    CHECK(s2.step == state.step);
    CHECK(s2.theta_tilde.alpha == state.theta_tilde.alpha);
    CHECK(s2.f_tilde.values == state.f_tilde.values);
    CHECK(s2.d_tilde == state.d_tilde);
    CHECK(s2.param_ewma == state.param_ewma);
}

TEST_CASE("chart CSV layout") {
    ChartPoint p;
    p.step = 3;
    p.label = "2005-02-01";
    p.theta = {1.5, -0.25, 1.0, 0.125};
    p.theta_fit = {1.1, -0.1, 1.0, 0.0625};
    p.param_ewma = {1.05, -0.05, 1.0, 0.03125};
    p.deviance = 0.5;
    p.deviance_ewma = 0.25;
    p.ooc = true;
    p.ooc_param = {true, false, false, true};
    p.who_flag = false;

    CHECK(chart_csv_header() ==
          "step,date,D,Dtilde,alpha,beta,kappa,zeta,alpha_t,beta_t,kappa_t,zeta_t,ooc,ooc_params,"
          "who");
    CHECK(chart_csv_row(p) ==
          "3,2005-02-01,0.5,0.25,1.5,-0.25,1,0.125,1.05,-0.05,1,0.03125,1,alpha;zeta,0");

    const auto j = chart_point_to_json(p);
    CHECK(j.at("step").get<std::size_t>() == 3);
    CHECK(j.at("ooc").get<bool>());
    CHECK(j.at("ooc_params").at("alpha").get<bool>());
    CHECK_FALSE(j.at("ooc_params").at("beta").get<bool>());
    CHECK(j.at("who").get<bool>() == false);
}

TEST_CASE("synth spec JSON") {
    const auto j = nlohmann::json::parse(R"({
        "base": "logistic",
        "n": 40,
        "alpha": {"kind": "uniform", "lo": 0.8, "hi": 1.2},
        "beta": {"kind": "trunc_normal", "mean": 0.0, "sd": 0.1, "lo": -0.3, "hi": 0.3},
        "zeta": 0.01,
        "noise_sigma": 0.05,
        "seed": 7,
        "shift": {"at_step": 10, "alpha_mult": 1.5}
    })");
    const auto spec = synth_spec_from_json(j);
    CHECK(spec.law.base == BaseFamily::logistic);
    CHECK(spec.length == 40);
    CHECK(spec.law.alpha.kind == ParamLaw::Kind::uniform);
    CHECK(spec.law.beta.kind == ParamLaw::Kind::trunc_normal);
    CHECK(spec.law.zeta.kind == ParamLaw::Kind::constant);
    CHECK(spec.law.zeta.value == 0.01);
    CHECK(spec.shift.at_step == 10);
    CHECK(spec.shift.alpha_mult == 1.5);

    const auto round = synth_spec_from_json(synth_spec_to_json(spec));
    CHECK(round.law.alpha.lo == spec.law.alpha.lo);
    CHECK(round.shift.at_step == spec.shift.at_step);

    CHECK_THROWS_AS(synth_spec_from_json(nlohmann::json{{"base", "nope"}, {"n", 1}}),
                    configuration_error);
}

TEST_CASE("next_date handles month, year, and leap rollovers") {
    CHECK(next_date("2004-01-01") == "2004-01-02");
    CHECK(next_date("2004-01-31") == "2004-02-01");
    CHECK(next_date("2004-02-28") == "2004-02-29"); // leap year
    CHECK(next_date("2005-02-28") == "2005-03-01");
    CHECK(next_date("2004-12-31") == "2005-01-01");
    CHECK(next_date("2100-02-28") == "2100-03-01"); // century, not leap
}

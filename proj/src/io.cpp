#include "fspc/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fspc/errors.hpp"

namespace fspc {

using nlohmann::json;

Pollutant pollutant_from_name(const std::string& name) {
    if (name == "CO") return Pollutant::CO;
    if (name == "NO") return Pollutant::NO;
    if (name == "NO2") return Pollutant::NO2;
    if (name == "O3") return Pollutant::O3;
    if (name == "SO2") return Pollutant::SO2;
    throw configuration_error("unknown pollutant: " + name);
}

std::string pollutant_name(Pollutant p) {
    switch (p) {
        case Pollutant::CO: return "CO";
        case Pollutant::NO: return "NO";
        case Pollutant::NO2: return "NO2";
        case Pollutant::O3: return "O3";
        case Pollutant::SO2: return "SO2";
    }
    return "?";
}

std::optional<ThresholdRule> threshold_rule(Pollutant p) {
    switch (p) {
        case Pollutant::CO:
            return ThresholdRule{p, ThresholdRule::Statistic::rolling_8h_mean_max, 10.0};
        case Pollutant::NO:
            return std::nullopt; // no specified limit
        case Pollutant::NO2:
            return ThresholdRule{p, ThresholdRule::Statistic::hourly_max, 400.0};
        case Pollutant::O3:
            return ThresholdRule{p, ThresholdRule::Statistic::hourly_max, 240.0};
        case Pollutant::SO2:
            return ThresholdRule{p, ThresholdRule::Statistic::hourly_max, 500.0};
    }
    return std::nullopt;
}

WhoFlag who_flag(const DailyProfileRecord& record) {
    WhoFlag flag;
    const auto rule = threshold_rule(record.pollutant);
    if (!rule) return flag;
    double statistic = 0.0;
    if (rule->statistic == ThresholdRule::Statistic::hourly_max) {
        statistic = *std::max_element(record.values.begin(), record.values.end());
    } else {
        // 17 rolling 8-hour means within the day
        double best = -1.0;
        for (std::size_t k = 0; k + 8 <= 24; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < 8; ++i) s += record.values[k + i];
            best = std::max(best, s / 8.0);
        }
        statistic = best;
    }
    if (statistic > rule->limit) {
        flag.flagged = true;
        std::ostringstream os;
        os << pollutant_name(record.pollutant) << "/" << format_double(rule->limit);
        flag.violated.push_back(os.str());
    }
    return flag;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw numeric_error("format_double failed");
    return std::string(buf, ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

bool is_missing_cell(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s.empty() || s == "na" || s == "nan" || s == "null";
}

double parse_cell(const std::string& s, std::size_t line_no) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc{} || res.ptr != e)
        throw parse_error("line " + std::to_string(line_no) + ": bad number '" + s + "'");
    if (!std::isfinite(v) || v < 0.0)
        throw parse_error("line " + std::to_string(line_no) + ": value must be finite and >= 0");
    return v;
}

bool valid_date(const std::string& d) {
    if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(d[i]))) return false;
    return true;
}

} // namespace

IngestResult ingest_csv_stream(std::istream& in, Pollutant pollutant) {
    IngestResult out;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw parse_error("empty file");
    ++line_no;
    if (split_csv_line(line) != split_csv_line(profiles_csv_header()))
        throw parse_error("line 1: expected header '" + profiles_csv_header() + "'");

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 25)
            throw parse_error("line " + std::to_string(line_no) + ": expected 25 fields, got " +
                              std::to_string(fields.size()));
        DailyProfileRecord rec;
        rec.pollutant = pollutant;
        rec.date = fields[0];
        if (!valid_date(rec.date))
            throw parse_error("line " + std::to_string(line_no) + ": bad date '" + rec.date + "'");

        std::array<bool, 24> missing{};
        std::size_t n_missing = 0;
        for (std::size_t h = 0; h < 24; ++h) {
            if (is_missing_cell(fields[h + 1])) {
                missing[h] = true;
                ++n_missing;
            } else {
                rec.values[h] = parse_cell(fields[h + 1], line_no);
            }
        }
        if (n_missing > 4) {
            out.warnings.push_back("line " + std::to_string(line_no) + " (" + rec.date +
                                   "): skipped, " + std::to_string(n_missing) + " missing hours");
            continue;
        }
        if (n_missing == 24) {
            out.warnings.push_back("line " + std::to_string(line_no) + ": skipped, empty day");
            continue;
        }
        // linear fill between the nearest observed hours; constant fill at
        // the edges
        for (std::size_t h = 0; h < 24; ++h) {
            if (!missing[h]) continue;
            rec.filled_hours.push_back(h);
            std::ptrdiff_t prev = -1, next = -1;
            for (std::ptrdiff_t k = static_cast<std::ptrdiff_t>(h) - 1; k >= 0; --k)
                if (!missing[static_cast<std::size_t>(k)]) {
                    prev = k;
                    break;
                }
            for (std::size_t k = h + 1; k < 24; ++k)
                if (!missing[k]) {
                    next = static_cast<std::ptrdiff_t>(k);
                    break;
                }
            if (prev < 0) {
                rec.values[h] = rec.values[static_cast<std::size_t>(next)];
            } else if (next < 0) {
                rec.values[h] = rec.values[static_cast<std::size_t>(prev)];
            } else {
                const double w = static_cast<double>(h - prev) / static_cast<double>(next - prev);
                rec.values[h] = (1.0 - w) * rec.values[static_cast<std::size_t>(prev)] +
                                w * rec.values[static_cast<std::size_t>(next)];
            }
        }
        out.records.push_back(std::move(rec));
    }
    std::stable_sort(out.records.begin(), out.records.end(),
                     [](const auto& a, const auto& b) { return a.date < b.date; });
    return out;
}

IngestResult ingest_csv(const std::string& path, Pollutant pollutant) {
    std::ifstream in(path);
    if (!in) throw configuration_error("cannot open " + path);
    return ingest_csv_stream(in, pollutant);
}

SampledCurve record_to_curve(const DailyProfileRecord& record, const TimeGrid& working) {
    SampledCurve hourly(TimeGrid(24),
                        std::vector<double>(record.values.begin(), record.values.end()));
    return resample(hourly, working);
}

std::array<double, 24> curve_to_hours(const SampledCurve& curve) {
    std::array<double, 24> out{};
    for (std::size_t k = 0; k < 24; ++k)
        out[k] = evaluate(curve, static_cast<double>(k) / 23.0);
    return out;
}

// --- JSON ------------------------------------------------------------------

namespace {

json params_to_json(const SimParams& p) {
    return json{{"alpha", p.alpha}, {"beta", p.beta}, {"kappa", p.kappa}, {"zeta", p.zeta}};
}

SimParams params_from_json(const json& j) {
    SimParams p;
    p.alpha = j.at("alpha").get<double>();
    p.beta = j.at("beta").get<double>();
    p.kappa = j.at("kappa").get<double>();
    p.zeta = j.at("zeta").get<double>();
    return p;
}

} // namespace

json databank_to_json(const FrechetMeanResult& result) {
    json j;
    j["schema"] = "fspc-databank-v1";
    j["grid_points"] = result.f0.grid.size();
    j["f0"] = result.f0.values;
    j["bank"] = {{"gamma", result.bank.gamma}, {"xi", result.bank.xi}};
    j["frechet_variance"] = result.frechet_variance;
    j["iterations"] = result.iterations;
    j["converged"] = result.converged;
    j["objective_trace"] = result.objective_trace;
    j["weights"] = result.weights;
    j["fix_kappa"] = result.fix_kappa;
    json regs = json::array();
    for (const auto& r : result.ic_params) {
        json e = params_to_json(r.params);
        e["residual_norm"] = r.residual_norm;
        e["objective"] = r.objective;
        regs.push_back(std::move(e));
    }
    j["ic_params"] = std::move(regs);
    j["ic_deviances"] = result.ic_deviances;
    json curves = json::array();
    for (const auto& c : result.train_curves) curves.push_back(c.values);
    j["train_curves"] = std::move(curves);
    return j;
}

FrechetMeanResult databank_from_json(const json& j) {
    if (j.value("schema", "") != "fspc-databank-v1")
        throw parse_error("databank: unknown schema");
    FrechetMeanResult r;
    const std::size_t m = j.at("grid_points").get<std::size_t>();
    const TimeGrid grid(m);
    r.f0 = SampledCurve(grid, j.at("f0").get<std::vector<double>>());
    r.bank.gamma = j.at("bank").at("gamma").get<std::vector<double>>();
    r.bank.xi = j.at("bank").at("xi").get<std::vector<double>>();
    r.frechet_variance = j.at("frechet_variance").get<double>();
    r.iterations = j.at("iterations").get<std::size_t>();
    r.converged = j.at("converged").get<bool>();
    r.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    r.weights = j.at("weights").get<std::vector<double>>();
    r.fix_kappa = j.value("fix_kappa", false);
    for (const auto& e : j.at("ic_params")) {
        RegistrationResult reg;
        reg.params = params_from_json(e);
        reg.residual_norm = e.at("residual_norm").get<double>();
        reg.objective = e.at("objective").get<double>();
        r.ic_params.push_back(reg);
    }
    r.ic_deviances = j.at("ic_deviances").get<std::vector<double>>();
    for (const auto& vals : j.at("train_curves"))
        r.train_curves.emplace_back(grid, vals.get<std::vector<double>>());
    return r;
}

json limits_to_json(const ControlLimits& limits, const EwmaConfig& cfg) {
    json j;
    j["schema"] = "fspc-limits-v1";
    j["deviance_ucl"] = limits.deviance_ucl;
    const char* names[4] = {"alpha", "beta", "kappa", "zeta"};
    for (std::size_t k = 0; k < 4; ++k)
        j["param"][names[k]] = {{"lcl", limits.param[k].lcl}, {"ucl", limits.param[k].ucl}};
    j["lambda"] = cfg.lambda;
    j["limit_level"] = cfg.limit_level;
    j["variability_mode"] = cfg.mode == VariabilityMode::deviance ? "deviance" : "frechet_function";
    j["raw_deviance"] = cfg.raw_deviance;
    j["fix_kappa"] = cfg.fix_kappa;
    j["reference_orders"] = cfg.reference_orders;
    j["seed"] = cfg.seed;
    return j;
}

std::pair<ControlLimits, EwmaConfig> limits_from_json(const json& j) {
    if (j.value("schema", "") != "fspc-limits-v1") throw parse_error("limits: unknown schema");
    ControlLimits limits;
    limits.deviance_ucl = j.at("deviance_ucl").get<double>();
    const char* names[4] = {"alpha", "beta", "kappa", "zeta"};
    for (std::size_t k = 0; k < 4; ++k) {
        limits.param[k].lcl = j.at("param").at(names[k]).at("lcl").get<double>();
        limits.param[k].ucl = j.at("param").at(names[k]).at("ucl").get<double>();
    }
    EwmaConfig cfg;
    cfg.lambda = j.at("lambda").get<double>();
    cfg.limit_level = j.at("limit_level").get<double>();
    cfg.mode = j.at("variability_mode").get<std::string>() == "frechet_function"
                   ? VariabilityMode::frechet_function
                   : VariabilityMode::deviance;
    cfg.raw_deviance = j.at("raw_deviance").get<bool>();
    cfg.fix_kappa = j.at("fix_kappa").get<bool>();
    cfg.reference_orders = j.at("reference_orders").get<std::size_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return {limits, cfg};
}

json state_to_json(const EwmaState& state) {
    json j;
    j["schema"] = "fspc-state-v1";
    j["step"] = state.step;
    j["theta_tilde"] = params_to_json(state.theta_tilde);
    j["grid_points"] = state.f_tilde.grid.size();
    j["f_tilde"] = state.f_tilde.values;
    j["d_tilde"] = state.d_tilde;
    j["param_ewma"] = state.param_ewma;
    return j;
}

EwmaState state_from_json(const json& j) {
    if (j.value("schema", "") != "fspc-state-v1") throw parse_error("state: unknown schema");
    EwmaState s;
    s.step = j.at("step").get<std::size_t>();
    s.theta_tilde = params_from_json(j.at("theta_tilde"));
    const TimeGrid grid(j.at("grid_points").get<std::size_t>());
    s.f_tilde = SampledCurve(grid, j.at("f_tilde").get<std::vector<double>>());
    s.d_tilde = j.at("d_tilde").get<double>();
    const auto arr = j.at("param_ewma").get<std::vector<double>>();
    if (arr.size() != 4) throw parse_error("state: param_ewma must have 4 entries");
    std::copy(arr.begin(), arr.end(), s.param_ewma.begin());
    return s;
}

json chart_point_to_json(const ChartPoint& point) {
    json j;
    j["step"] = point.step;
    if (!point.label.empty()) j["date"] = point.label;
    j["theta"] = params_to_json(point.theta);
    j["theta_fit"] = params_to_json(point.theta_fit);
    j["param_ewma"] = point.param_ewma;
    j["D"] = point.deviance;
    j["Dtilde"] = point.deviance_ewma;
    j["residual"] = point.residual;
    j["ooc"] = point.ooc;
    const char* names[4] = {"alpha", "beta", "kappa", "zeta"};
    json flags = json::object();
    for (std::size_t k = 0; k < 4; ++k) flags[names[k]] = point.ooc_param[k];
    j["ooc_params"] = std::move(flags);
    if (point.who_flag.has_value()) j["who"] = *point.who_flag;
    return j;
}

// --- synth spec -------------------------------------------------------------

namespace {

json law_to_json(const ParamLaw& law) {
    switch (law.kind) {
        case ParamLaw::Kind::constant:
            return json{{"kind", "constant"}, {"value", law.value}};
        case ParamLaw::Kind::uniform:
            return json{{"kind", "uniform"}, {"lo", law.lo}, {"hi", law.hi}};
        case ParamLaw::Kind::trunc_normal:
            return json{{"kind", "trunc_normal"},
                        {"mean", law.mean},
                        {"sd", law.sd},
                        {"lo", law.lo},
                        {"hi", law.hi}};
    }
    throw configuration_error("law_to_json: unknown kind");
}

ParamLaw law_from_json(const json& j, const char* field) {
    if (j.is_number()) return ParamLaw::constant(j.get<double>());
    if (!j.is_object()) throw parse_error(std::string("spec.") + field + ": expected law object");
    const std::string kind = j.value("kind", "constant");
    if (kind == "constant") return ParamLaw::constant(j.at("value").get<double>());
    if (kind == "uniform")
        return ParamLaw::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
    if (kind == "trunc_normal")
        return ParamLaw::trunc_normal(j.at("mean").get<double>(), j.at("sd").get<double>(),
                                      j.at("lo").get<double>(), j.at("hi").get<double>());
    throw parse_error(std::string("spec.") + field + ": unknown law kind '" + kind + "'");
}

} // namespace

json synth_spec_to_json(const StreamSpec& spec) {
    json j;
    j["base"] = base_family_name(spec.law.base);
    j["n"] = spec.length;
    j["grid_points"] = spec.law.grid_points;
    j["alpha"] = law_to_json(spec.law.alpha);
    j["beta"] = law_to_json(spec.law.beta);
    j["kappa"] = law_to_json(spec.law.kappa);
    j["zeta"] = law_to_json(spec.law.zeta);
    j["noise_sigma"] = spec.law.noise_sigma;
    j["seed"] = spec.law.seed;
    j["project_centrality"] = spec.law.project_centrality;
    if (spec.shift.at_step >= 1) {
        j["shift"] = {{"at_step", spec.shift.at_step},
                      {"alpha_mult", spec.shift.alpha_mult},
                      {"beta_delta", spec.shift.beta_delta},
                      {"kappa_mult", spec.shift.kappa_mult},
                      {"zeta_delta", spec.shift.zeta_delta}};
    }
    return j;
}

StreamSpec synth_spec_from_json(const json& j) {
    StreamSpec spec;
    try {
        spec.law.base = base_family_from_name(j.value("base", "sine"));
        spec.length = j.at("n").get<std::size_t>();
        spec.law.n = spec.length;
        spec.law.grid_points = j.value("grid_points", std::size_t{24});
        if (j.contains("alpha")) spec.law.alpha = law_from_json(j.at("alpha"), "alpha");
        if (j.contains("beta")) spec.law.beta = law_from_json(j.at("beta"), "beta");
        if (j.contains("kappa")) spec.law.kappa = law_from_json(j.at("kappa"), "kappa");
        if (j.contains("zeta")) spec.law.zeta = law_from_json(j.at("zeta"), "zeta");
        spec.law.noise_sigma = j.value("noise_sigma", 0.0);
        spec.law.seed = j.value("seed", std::uint64_t{0});
        spec.law.project_centrality = j.value("project_centrality", false);
        if (j.contains("shift")) {
            const auto& s = j.at("shift");
            spec.shift.at_step = s.at("at_step").get<std::size_t>();
            spec.shift.alpha_mult = s.value("alpha_mult", 1.0);
            spec.shift.beta_delta = s.value("beta_delta", 0.0);
            spec.shift.kappa_mult = s.value("kappa_mult", 1.0);
            spec.shift.zeta_delta = s.value("zeta_delta", 0.0);
        }
    } catch (const json::exception& e) {
        throw parse_error(std::string("spec: ") + e.what());
    }
    spec.law.validate();
    return spec;
}

// --- files -------------------------------------------------------------------

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw configuration_error("cannot write " + path);
    out << content;
    if (!out) throw configuration_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw configuration_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json_file(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw parse_error(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

std::string chart_csv_header() {
    return "step,date,D,Dtilde,alpha,beta,kappa,zeta,alpha_t,beta_t,kappa_t,zeta_t,ooc,ooc_params,"
           "who";
}

std::string chart_csv_row(const ChartPoint& p) {
    std::ostringstream os;
    os << p.step << ',' << p.label << ',' << format_double(p.deviance) << ','
       << format_double(p.deviance_ewma);
    os << ',' << format_double(p.theta.alpha) << ',' << format_double(p.theta.beta) << ','
       << format_double(p.theta.kappa) << ',' << format_double(p.theta.zeta);
    for (std::size_t k = 0; k < 4; ++k) os << ',' << format_double(p.param_ewma[k]);
    os << ',' << (p.ooc ? 1 : 0) << ',';
    const char* names[4] = {"alpha", "beta", "kappa", "zeta"};
    bool first = true;
    for (std::size_t k = 0; k < 4; ++k) {
        if (!p.ooc_param[k]) continue;
        if (!first) os << ';';
        os << names[k];
        first = false;
    }
    os << ',';
    if (p.who_flag.has_value()) os << (*p.who_flag ? 1 : 0);
    return os.str();
}

void write_chart_csv(const std::string& path, const std::vector<ChartPoint>& points) {
    std::ostringstream os;
    os << chart_csv_header() << '\n';
    for (const auto& p : points) os << chart_csv_row(p) << '\n';
    write_text_file(path, os.str());
}

void write_chart_jsonl(const std::string& path, const std::vector<ChartPoint>& points) {
    std::ostringstream os;
    for (const auto& p : points) os << chart_point_to_json(p).dump() << '\n';
    write_text_file(path, os.str());
}

std::string profiles_csv_header() {
    std::string h = "date";
    for (int k = 0; k < 24; ++k) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), ",h%02d", k);
        h += buf;
    }
    return h;
}

void write_profiles_csv(const std::string& path, const std::vector<DailyProfileRecord>& records) {
    std::ostringstream os;
    os << profiles_csv_header() << '\n';
    for (const auto& r : records) {
        os << r.date;
        for (double v : r.values) os << ',' << format_double(v);
        os << '\n';
    }
    write_text_file(path, os.str());
}

std::string next_date(const std::string& date) {
    int y = std::stoi(date.substr(0, 4));
    int m = std::stoi(date.substr(5, 2));
    int d = std::stoi(date.substr(8, 2));
    const bool leap = (y % 4 == 0 && y % 100 != 0) || (y % 400 == 0);
    const int days[12] = {31, leap ? 29 : 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (++d > days[m - 1]) {
        d = 1;
        if (++m > 12) {
            m = 1;
            ++y;
        }
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

} // namespace fspc

// frechet-spc: shape-invariant profile monitoring from the command line.
//
//   phase1    estimate the in-control mean curve and databank from training profiles
//   phase2    run the EWMA charts over new profiles against a databank
//   simulate  generate synthetic daily profiles plus ground truth
//   who-check evaluate the WHO safety thresholds per day
//
// Exit codes: 0 ok, 2 input/configuration, 3 incompatibility, 4 numerical failure.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fspc/errors.hpp"
#include "fspc/io.hpp"
#include "fspc/parallel.hpp"
#include "fspc/synth.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using nlohmann::json;

struct CommonOpts {
    double lambda = 0.10;
    double limit_level = 0.95;
    bool fix_kappa = false;
    bool raw_deviance = false;
    bool enrich = false;
    std::string variability_mode = "deviance";
    std::uint64_t seed = 1;
    std::size_t grid_points = 101;
    std::size_t reference_orders = 200;
    int threads = 0;
    bool serial = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--lambda", o.lambda, "EWMA weight in (0,1); 0.05/0.10/0.15/0.20 are the usual grid")
        ->check(CLI::Range(1e-9, 1.0 - 1e-9));
    cmd->add_option("--limit-level", o.limit_level, "confidence level of the control limits")
        ->check(CLI::Range(1e-6, 1.0 - 1e-6));
    cmd->add_flag("--fix-kappa", o.fix_kappa, "pin the phase scale kappa to 1");
    cmd->add_flag("--raw-deviance", o.raw_deviance, "deviance uses the raw curve, not its fit");
    cmd->add_flag("--enrich", o.enrich, "grow the parameter databank on IC verdicts");
    cmd->add_option("--variability-mode", o.variability_mode, "deviance | frechet")
        ->check(CLI::IsMember({"deviance", "frechet"}));
    cmd->add_option("--seed", o.seed, "seed for every randomized path");
    cmd->add_option("--grid-points", o.grid_points, "working grid size")->check(CLI::Range(2, 100000));
    cmd->add_option("--reference-orders", o.reference_orders,
                    "random training replays behind the deviance limit");
    cmd->add_option("--threads", o.threads, "worker thread count (0 = library default)");
    cmd->add_flag("--serial", o.serial, "run the serial reference kernels");
}

fspc::EwmaConfig ewma_config(const CommonOpts& o) {
    fspc::EwmaConfig cfg;
    cfg.lambda = o.lambda;
    cfg.limit_level = o.limit_level;
    cfg.fix_kappa = o.fix_kappa;
    cfg.raw_deviance = o.raw_deviance;
    cfg.enrich = o.enrich;
    cfg.mode = o.variability_mode == "frechet" ? fspc::VariabilityMode::frechet_function
                                               : fspc::VariabilityMode::deviance;
    cfg.reference_orders = o.reference_orders;
    cfg.seed = o.seed;
    return cfg;
}

void apply_threading(const CommonOpts& o) {
    fspc::set_parallel_enabled(!o.serial);
#ifdef _OPENMP
    if (o.threads > 0) omp_set_num_threads(o.threads);
#endif
}

std::vector<fspc::SampledCurve> records_to_curves(const std::vector<fspc::DailyProfileRecord>& recs,
                                                  std::size_t grid_points) {
    const fspc::TimeGrid grid(grid_points);
    std::vector<fspc::SampledCurve> curves;
    curves.reserve(recs.size());
    for (const auto& r : recs) curves.push_back(fspc::record_to_curve(r, grid));
    return curves;
}

int cmd_phase1(const std::string& train_path, const std::string& pollutant_name,
               const std::string& out_path, std::string limits_path, bool who_ic_only,
               const CommonOpts& o) {
    apply_threading(o);
    const bool have_pollutant = !pollutant_name.empty();
    if (who_ic_only && !have_pollutant)
        throw fspc::configuration_error("--who-ic-only needs --pollutant");
    const auto pollutant =
        have_pollutant ? fspc::pollutant_from_name(pollutant_name) : fspc::Pollutant::CO;

    auto ingest = fspc::ingest_csv(train_path, pollutant);
    for (const auto& w : ingest.warnings) std::cerr << "warning: " << w << "\n";

    std::vector<fspc::DailyProfileRecord> records;
    for (auto& r : ingest.records) {
        if (who_ic_only && fspc::who_flag(r).flagged) continue;
        records.push_back(std::move(r));
    }
    if (records.empty())
        throw fspc::configuration_error("training set is empty after filtering");

    const auto curves = records_to_curves(records, o.grid_points);

    fspc::FrechetConfig fcfg;
    fcfg.fix_kappa = o.fix_kappa;
    fcfg.seed = o.seed;
    const auto result = fspc::estimate_frechet_mean(curves, fcfg);

    const auto ecfg = ewma_config(o);
    const auto [state, limits] = fspc::init_state(result, ecfg);
    (void)state;

    fspc::write_json_file(out_path, fspc::databank_to_json(result));
    if (limits_path.empty()) limits_path = out_path + ".limits.json";
    fspc::write_json_file(limits_path, fspc::limits_to_json(limits, ecfg));

    std::cout << "curves: " << curves.size() << "\n"
              << "frechet_variance: " << fspc::format_double(result.frechet_variance) << "\n"
              << "iterations: " << result.iterations << "\n"
              << "converged: " << (result.converged ? "yes" : "no") << "\n"
              << "deviance_ucl: " << fspc::format_double(limits.deviance_ucl) << "\n"
              << "databank: " << out_path << "\n"
              << "limits: " << limits_path << "\n";
    return 0;
}

int cmd_phase2(const std::string& test_path, const std::string& databank_path,
               const std::string& limits_path, const std::string& pollutant_name,
               const std::string& out_csv, const std::string& out_jsonl, const CLI::App* cmd,
               CommonOpts o) {
    apply_threading(o);
    const auto databank = fspc::databank_from_json(fspc::read_json_file(databank_path));
    if (cmd->count("--grid-points") > 0 && o.grid_points != databank.f0.grid.size())
        throw fspc::shape_error("requested --grid-points " + std::to_string(o.grid_points) +
                                " but the databank uses " +
                                std::to_string(databank.f0.grid.size()));
    o.grid_points = databank.f0.grid.size();

    fspc::EwmaConfig ecfg = ewma_config(o);
    std::optional<fspc::ControlLimits> limits;
    if (!limits_path.empty()) {
        auto [lim, lim_cfg] = fspc::limits_from_json(fspc::read_json_file(limits_path));
        // explicit flags must agree with the limits file; otherwise the
        // file's chart parameters apply
        auto conflict = [&](const char* flag, double file_v, double flag_v) {
            if (cmd->count(flag) > 0 && file_v != flag_v)
                throw fspc::shape_error(std::string("limits file was built with ") + flag + "=" +
                                        fspc::format_double(file_v) + ", got " +
                                        fspc::format_double(flag_v));
        };
        conflict("--lambda", lim_cfg.lambda, ecfg.lambda);
        conflict("--limit-level", lim_cfg.limit_level, ecfg.limit_level);
        if (cmd->count("--fix-kappa") > 0 && lim_cfg.fix_kappa != ecfg.fix_kappa)
            throw fspc::shape_error("limits file disagrees on --fix-kappa");
        if (cmd->count("--variability-mode") > 0 && lim_cfg.mode != ecfg.mode)
            throw fspc::shape_error("limits file disagrees on --variability-mode");
        if (cmd->count("--raw-deviance") > 0 && lim_cfg.raw_deviance != ecfg.raw_deviance)
            throw fspc::shape_error("limits file disagrees on --raw-deviance");
        const bool keep_enrich = ecfg.enrich;
        const auto seed = ecfg.seed;
        ecfg = lim_cfg;
        ecfg.enrich = keep_enrich;
        if (cmd->count("--seed") > 0) ecfg.seed = seed;
        limits = lim;
    }

    const bool have_pollutant = !pollutant_name.empty();
    const auto pollutant =
        have_pollutant ? fspc::pollutant_from_name(pollutant_name) : fspc::Pollutant::CO;
    auto ingest = fspc::ingest_csv(test_path, pollutant);
    for (const auto& w : ingest.warnings) std::cerr << "warning: " << w << "\n";
    if (ingest.records.empty()) throw fspc::configuration_error("test set is empty");

    fspc::MonitorSession session =
        limits ? fspc::MonitorSession(databank, ecfg, *limits) : fspc::MonitorSession(databank, ecfg);

    std::vector<fspc::ChartPoint> points;
    points.reserve(ingest.records.size());
    std::size_t alarms = 0;
    const fspc::TimeGrid grid(o.grid_points);
    for (const auto& rec : ingest.records) {
        auto point = session.step(fspc::record_to_curve(rec, grid), rec.date);
        if (have_pollutant) point.who_flag = fspc::who_flag(rec).flagged;
        if (point.ooc) ++alarms;
        points.push_back(std::move(point));
    }

    if (!out_csv.empty()) fspc::write_chart_csv(out_csv, points);
    if (!out_jsonl.empty()) fspc::write_chart_jsonl(out_jsonl, points);

    std::cout << "steps: " << points.size() << "\n"
              << "deviance_ucl: " << fspc::format_double(session.limits().deviance_ucl) << "\n"
              << "alarms: " << alarms << "\n";
    if (!out_csv.empty()) std::cout << "chart_csv: " << out_csv << "\n";
    if (!out_jsonl.empty()) std::cout << "chart_jsonl: " << out_jsonl << "\n";
    return 0;
}

int cmd_simulate(const std::string& spec_path, const std::string& out_csv,
                 const std::string& truth_path, const std::string& start_date, const CLI::App* cmd,
                 const CommonOpts& o) {
    apply_threading(o);
    auto spec = fspc::synth_spec_from_json(fspc::read_json_file(spec_path));
    spec.law.grid_points = 24; // daily profile rows
    if (cmd->count("--seed") > 0) spec.law.seed = o.seed;

    std::vector<fspc::DailyProfileRecord> records;
    json truth;
    truth["schema"] = "fspc-truth-v1";
    truth["spec"] = fspc::synth_spec_to_json(spec);
    json truth_params = json::array();

    const fspc::TimeGrid grid(spec.law.grid_points);
    const auto base = fspc::base_family_curve(spec.law.base, grid);
    truth["base_values"] = base.values;

    std::string date = start_date;
    auto push_record = [&](const fspc::SampledCurve& curve, const fspc::SimParams& p,
                           bool shifted) {
        fspc::DailyProfileRecord rec;
        rec.date = date;
        const auto hours = fspc::curve_to_hours(curve);
        std::copy(hours.begin(), hours.end(), rec.values.begin());
        for (auto& v : rec.values) v = std::max(v, 0.0); // concentrations are nonnegative
        records.push_back(rec);
        truth_params.push_back({{"date", date},
                                {"alpha", p.alpha},
                                {"beta", p.beta},
                                {"kappa", p.kappa},
                                {"zeta", p.zeta},
                                {"shifted", shifted}});
        date = fspc::next_date(date);
    };

    if (spec.law.project_centrality && spec.shift.at_step == 0) {
        const auto set = fspc::generate_ic_set(spec.law);
        for (std::size_t j = 0; j < set.curves.size(); ++j)
            push_record(set.curves[j], set.params[j], false);
    } else {
        for (const auto& sample : fspc::generate_stream(spec))
            push_record(sample.curve, sample.params, sample.shifted);
    }

    fspc::write_profiles_csv(out_csv, records);
    truth["params"] = std::move(truth_params);
    if (!truth_path.empty()) fspc::write_json_file(truth_path, truth);

    std::cout << "rows: " << records.size() << "\n"
              << "csv: " << out_csv << "\n";
    if (!truth_path.empty()) std::cout << "truth: " << truth_path << "\n";
    return 0;
}

int cmd_who_check(const std::string& input_path, const std::string& pollutant_name,
                  const std::string& out_path) {
    const auto pollutant = fspc::pollutant_from_name(pollutant_name);
    auto ingest = fspc::ingest_csv(input_path, pollutant);
    for (const auto& w : ingest.warnings) std::cerr << "warning: " << w << "\n";

    std::ostringstream os;
    os << "date,who_ooc,rules\n";
    std::size_t flagged = 0;
    for (const auto& rec : ingest.records) {
        const auto flag = fspc::who_flag(rec);
        if (flag.flagged) ++flagged;
        os << rec.date << ',' << (flag.flagged ? 1 : 0) << ',';
        for (std::size_t i = 0; i < flag.violated.size(); ++i) {
            if (i) os << ';';
            os << flag.violated[i];
        }
        os << '\n';
    }
    if (!out_path.empty())
        fspc::write_text_file(out_path, os.str());
    else
        std::cout << os.str();
    std::cout << "days: " << ingest.records.size() << "\n"
              << "who_ooc_days: " << flagged << "\n";
    return 0;
}

// JSON config files mapped onto the same option names as the TOML path
class ConfigJson : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            j = json::parse(input);
        } catch (const json::exception& e) {
            throw CLI::FileError(std::string("bad JSON config: ") + e.what());
        }
        std::vector<CLI::ConfigItem> out;
        for (auto it = j.begin(); it != j.end(); ++it) {
            CLI::ConfigItem item;
            item.name = it.key();
            const auto& v = it.value();
            if (v.is_boolean())
                item.inputs = {v.get<bool>() ? "true" : "false"};
            else if (v.is_string())
                item.inputs = {v.get<std::string>()};
            else
                item.inputs = {v.dump()};
            out.push_back(std::move(item));
        }
        return out;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fréchet-mean profile monitoring under the shape-invariant model"};
    app.require_subcommand(1);

    // config file applies to whichever subcommand is invoked
    bool json_config = false;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a.rfind("--config", 0) == 0 && a.find(".json") != std::string::npos) json_config = true;
        if (a == "--config" && i + 1 < argc && std::string(argv[i + 1]).ends_with(".json"))
            json_config = true;
    }

    CommonOpts o1, o2, o3;
    std::string train_path, test_path, databank_path, limits_path, limits_out, pollutant;
    std::string out_path = "databank.json";
    std::string out_csv, out_jsonl, spec_path, truth_path, input_path, who_out;
    std::string start_date = "2004-01-01";
    bool who_ic_only = false;

    auto* phase1 = app.add_subcommand("phase1", "estimate the IC databank from training profiles");
    phase1->add_option("--train", train_path, "training CSV (date,h00..h23)")->required();
    phase1->add_option("--pollutant", pollutant, "CO|NO|NO2|O3|SO2");
    phase1->add_option("--out", out_path, "databank JSON path");
    phase1->add_option("--limits-out", limits_out, "control-limits JSON path");
    phase1->add_flag("--who-ic-only", who_ic_only, "train only on WHO-in-control days");
    add_common(phase1, o1);
    phase1->set_config("--config");

    auto* phase2 = app.add_subcommand("phase2", "monitor new profiles against a databank");
    phase2->add_option("--test", test_path, "test CSV (date,h00..h23)")->required();
    phase2->add_option("--databank", databank_path, "databank JSON from phase1")->required();
    phase2->add_option("--limits", limits_path, "control-limits JSON from phase1");
    phase2->add_option("--pollutant", pollutant, "adds the WHO comparison column");
    phase2->add_option("--out-csv", out_csv, "chart stream CSV path");
    phase2->add_option("--out-jsonl", out_jsonl, "chart stream JSON-lines path");
    add_common(phase2, o2);
    phase2->set_config("--config");

    auto* simulate = app.add_subcommand("simulate", "generate synthetic daily profiles");
    simulate->add_option("--spec", spec_path, "synthetic spec JSON")->required();
    simulate->add_option("--out", out_csv, "output CSV path")->required();
    simulate->add_option("--truth-out", truth_path, "ground-truth JSON path");
    simulate->add_option("--start-date", start_date, "date of the first row");
    add_common(simulate, o3);
    simulate->set_config("--config");

    auto* who = app.add_subcommand("who-check", "evaluate WHO thresholds per day");
    who->add_option("--input", input_path, "CSV (date,h00..h23)")->required();
    who->add_option("--pollutant", pollutant, "CO|NO|NO2|O3|SO2")->required();
    who->add_option("--out", who_out, "flags CSV path (stdout when omitted)");

    if (json_config) {
        phase1->config_formatter(std::make_shared<ConfigJson>());
        phase2->config_formatter(std::make_shared<ConfigJson>());
        simulate->config_formatter(std::make_shared<ConfigJson>());
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (phase1->parsed())
            return cmd_phase1(train_path, pollutant, out_path, limits_out, who_ic_only, o1);
        if (phase2->parsed())
            return cmd_phase2(test_path, databank_path, limits_path, pollutant, out_csv, out_jsonl,
                              phase2, o2);
        if (simulate->parsed())
            return cmd_simulate(spec_path, out_csv, truth_path, start_date, simulate, o3);
        if (who->parsed()) return cmd_who_check(input_path, pollutant, who_out);
    } catch (const fspc::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fspc::configuration_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fspc::shape_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const fspc::identifiability_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const fspc::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

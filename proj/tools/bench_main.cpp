// Timing harness for the data-parallel kernels: each one runs on the
// serial reference path and on the OpenMP path, checks that the results
// are bit-identical, and reports the speedup.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "fspc/ewma.hpp"
#include "fspc/frechet.hpp"
#include "fspc/parallel.hpp"
#include "fspc/sim.hpp"
#include "fspc/synth.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

double run_ms(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

struct Row {
    std::string name;
    double serial_ms;
    double parallel_ms;
    bool identical;
};

void print_rows(const std::vector<Row>& rows) {
    std::printf("%-28s %12s %12s %9s %10s\n", "kernel", "serial_ms", "openmp_ms", "speedup",
                "identical");
    for (const auto& r : rows)
        std::printf("%-28s %12.1f %12.1f %8.2fx %10s\n", r.name.c_str(), r.serial_ms,
                    r.parallel_ms, r.serial_ms / r.parallel_ms, r.identical ? "yes" : "no");
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (built without OpenMP)\n\n");
#endif

    std::vector<Row> rows;

    fspc::SynthSpec spec;
    spec.base = fspc::BaseFamily::sine;
    spec.n = 160;
    spec.alpha = fspc::ParamLaw::uniform(0.85, 1.2);
    spec.beta = fspc::ParamLaw::uniform(-0.3, 0.3);
    spec.zeta = fspc::ParamLaw::uniform(-0.05, 0.05);
    spec.noise_sigma = 0.05;
    spec.seed = 11;
    const auto set = fspc::generate_ic_set(spec);
    const fspc::RegisterConfig reg;

    // batch registration across curves
    {
        std::vector<fspc::RegistrationResult> serial(set.curves.size()),
            parallel(set.curves.size());
        auto batch = [&](std::vector<fspc::RegistrationResult>& out) {
            fspc::par_for(set.curves.size(), [&](std::size_t j) {
                out[j] = fspc::register_curve(set.curves[j], set.base, reg);
            });
        };
        double s_ms, p_ms;
        {
            fspc::ParallelGuard g(false);
            s_ms = run_ms([&] { batch(serial); });
        }
        {
            fspc::ParallelGuard g(true);
            p_ms = run_ms([&] { batch(parallel); });
        }
        bool same = true;
        for (std::size_t j = 0; j < serial.size(); ++j)
            same = same && serial[j].params.alpha == parallel[j].params.alpha &&
                   serial[j].params.zeta == parallel[j].params.zeta &&
                   serial[j].objective == parallel[j].objective;
        rows.push_back({"batch_register(160)", s_ms, p_ms, same});
    }

    // Phase I estimation (per-curve fits inside each stage)
    fspc::FrechetMeanResult ic_serial, ic_parallel;
    {
        fspc::FrechetConfig fcfg;
        fcfg.seed = 5;
        fcfg.max_iterations = 6;
        double s_ms, p_ms;
        {
            fspc::ParallelGuard g(false);
            fcfg.parallel = false;
            s_ms = run_ms([&] { ic_serial = fspc::estimate_frechet_mean(set.curves, fcfg); });
        }
        {
            fspc::ParallelGuard g(true);
            fcfg.parallel = true;
            p_ms = run_ms([&] { ic_parallel = fspc::estimate_frechet_mean(set.curves, fcfg); });
        }
        const bool same = ic_serial.f0.values == ic_parallel.f0.values &&
                          ic_serial.frechet_variance == ic_parallel.frechet_variance;
        rows.push_back({"frechet_mean(160)", s_ms, p_ms, same});
    }

    // control-limit calibration (random-order replays)
    fspc::ControlLimits lim_serial, lim_parallel;
    fspc::EwmaConfig ecfg;
    ecfg.seed = 17;
    ecfg.reference_orders = 64;
    {
        double s_ms, p_ms;
        {
            fspc::ParallelGuard g(false);
            ecfg.parallel = false;
            s_ms = run_ms([&] { lim_serial = fspc::init_state(ic_serial, ecfg).second; });
        }
        {
            fspc::ParallelGuard g(true);
            ecfg.parallel = true;
            p_ms = run_ms([&] { lim_parallel = fspc::init_state(ic_serial, ecfg).second; });
        }
        rows.push_back({"calibrate_limits(64x160)", s_ms, p_ms,
                        lim_serial.deviance_ucl == lim_parallel.deviance_ucl});
    }

    // Monte Carlo run-length experiment (independent replicate streams)
    {
        fspc::StreamSpec stream;
        stream.law = spec;
        stream.law.project_centrality = false;
        stream.law.seed = 23;
        stream.length = 160;
        fspc::RunLengthSummary serial_sum, parallel_sum;
        double s_ms, p_ms;
        {
            fspc::ParallelGuard g(false);
            ecfg.parallel = false;
            s_ms = run_ms([&] {
                serial_sum =
                    fspc::run_length_experiment(stream, ic_serial, lim_serial, ecfg, 8);
            });
        }
        {
            fspc::ParallelGuard g(true);
            ecfg.parallel = true;
            p_ms = run_ms([&] {
                parallel_sum =
                    fspc::run_length_experiment(stream, ic_serial, lim_serial, ecfg, 8);
            });
        }
        rows.push_back({"run_length(8x160)", s_ms, p_ms,
                        serial_sum.total_alarms == parallel_sum.total_alarms &&
                            serial_sum.first_alarm_step == parallel_sum.first_alarm_step});
    }

    print_rows(rows);
    return 0;
}

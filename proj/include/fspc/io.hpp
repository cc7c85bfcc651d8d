#ifndef FSPC_IO_HPP
#define FSPC_IO_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fspc/curve.hpp"
#include "fspc/ewma.hpp"
#include "fspc/frechet.hpp"
#include "fspc/synth.hpp"

namespace fspc {

enum class Pollutant { CO, NO, NO2, O3, SO2 };

Pollutant pollutant_from_name(const std::string& name);
std::string pollutant_name(Pollutant p);

// One day of hourly means; missing cells are filled at ingestion and the
// affected hours recorded.
struct DailyProfileRecord {
    std::string date; // YYYY-MM-DD
    Pollutant pollutant = Pollutant::CO;
    std::array<double, 24> values{};
    std::vector<std::size_t> filled_hours;
};

struct IngestResult {
    std::vector<DailyProfileRecord> records;
    std::vector<std::string> warnings; // one line per skipped record
};

// Expects the exact header `date,h00,...,h23`. Cells may be empty or NA;
// records with more than 4 missing hours are skipped with a warning,
// the rest are filled by linear interpolation within the day. Records
// come back sorted by date.
IngestResult ingest_csv(const std::string& path, Pollutant pollutant);
IngestResult ingest_csv_stream(std::istream& in, Pollutant pollutant);

struct ThresholdRule {
    Pollutant pollutant;
    enum class Statistic { hourly_max, rolling_8h_mean_max } statistic;
    double limit; // mg/m^3
};

// The WHO safety rule for a pollutant; NO carries no rule.
std::optional<ThresholdRule> threshold_rule(Pollutant p);

struct WhoFlag {
    bool flagged = false;
    std::vector<std::string> violated; // e.g. "O3/240"
};

WhoFlag who_flag(const DailyProfileRecord& record);

// hour k maps to t = k/23, then linear resampling onto the working grid
SampledCurve record_to_curve(const DailyProfileRecord& record, const TimeGrid& working);
// inverse of record_to_curve's sampling: curve evaluated at the 24 hour points
std::array<double, 24> curve_to_hours(const SampledCurve& curve);

// shortest round-trip decimal formatting (std::to_chars)
std::string format_double(double v);

// --- JSON documents -------------------------------------------------------
nlohmann::json databank_to_json(const FrechetMeanResult& result);
FrechetMeanResult databank_from_json(const nlohmann::json& j);

nlohmann::json limits_to_json(const ControlLimits& limits, const EwmaConfig& cfg);
// returns the limits plus the chart configuration they were computed under
std::pair<ControlLimits, EwmaConfig> limits_from_json(const nlohmann::json& j);

nlohmann::json state_to_json(const EwmaState& state);
EwmaState state_from_json(const nlohmann::json& j);

nlohmann::json chart_point_to_json(const ChartPoint& point);

nlohmann::json synth_spec_to_json(const StreamSpec& spec);
StreamSpec synth_spec_from_json(const nlohmann::json& j);

// --- files ----------------------------------------------------------------
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

std::string chart_csv_header();
std::string chart_csv_row(const ChartPoint& point);
void write_chart_csv(const std::string& path, const std::vector<ChartPoint>& points);
void write_chart_jsonl(const std::string& path, const std::vector<ChartPoint>& points);

std::string profiles_csv_header();
void write_profiles_csv(const std::string& path, const std::vector<DailyProfileRecord>& records);

// sequential calendar dates for synthetic files
std::string next_date(const std::string& date);

} // namespace fspc

#endif

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gridcast::timeseries {

/// Missing values are quiet NaNs throughout the library.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

[[nodiscard]] inline bool is_missing(double v) noexcept { return v != v; }

/// When a column's value for time t+h is known at forecast origin t.
enum class AvailabilityClass { short_term_forecast, weather_forecast, market_data, real_time };

[[nodiscard]] std::string_view to_string(AvailabilityClass tag);
[[nodiscard]] AvailabilityClass parse_availability(std::string_view text);

/// True when a column of this class may feed a model for horizon h.
/// short_term_forecast only for h <= 6, weather_forecast only for h > 6.
[[nodiscard]] bool available_for_horizon(AvailabilityClass tag, int horizon);

/// True for classes whose row t+h already holds the value for the target time.
[[nodiscard]] bool is_forecast_class(AvailabilityClass tag);

/// Hours since 1970-01-01T00:00:00Z.
using HourStamp = std::int64_t;

[[nodiscard]] HourStamp parse_timestamp(std::string_view text);
[[nodiscard]] std::string format_timestamp(HourStamp hour);

struct CalendarFields {
	int hour;    // 0..23
	int weekday; // 0 = Monday .. 6 = Sunday
	int month;   // 1..12
	std::int64_t month_index; // months since 1970-01
};

[[nodiscard]] CalendarFields calendar(HourStamp hour);

struct Column {
	std::string name;
	AvailabilityClass tag = AvailabilityClass::real_time;
	std::vector<double> values;
};

/// Hourly multivariate series: row i is start + i hours, no gaps.
/// Immutable after construction.
class TimeFrame {
public:
	TimeFrame(HourStamp start, std::vector<Column> columns);

	[[nodiscard]] HourStamp start() const noexcept { return start_; }
	[[nodiscard]] std::size_t rows() const noexcept { return rows_; }
	[[nodiscard]] std::size_t width() const noexcept { return columns_.size(); }
	[[nodiscard]] HourStamp stamp(std::size_t row) const noexcept {
		return start_ + static_cast<HourStamp>(row);
	}
	/// Row holding the given stamp, if inside the frame.
	[[nodiscard]] std::optional<std::size_t> row_of(HourStamp stamp) const noexcept;

	[[nodiscard]] const std::vector<Column> &columns() const noexcept { return columns_; }
	[[nodiscard]] bool has(std::string_view name) const noexcept;
	[[nodiscard]] const Column &column(std::string_view name) const;
	[[nodiscard]] std::span<const double> values(std::string_view name) const {
		return column(name).values;
	}

private:
	HourStamp start_;
	std::size_t rows_ = 0;
	std::vector<Column> columns_;
};

struct ColumnSchema {
	AvailabilityClass tag = AvailabilityClass::real_time;
	std::optional<std::pair<double, double>> clip;
};

using Schema = std::map<std::string, ColumnSchema, std::less<>>;

[[nodiscard]] Schema load_schema(const std::filesystem::path &path);
[[nodiscard]] Schema parse_schema(std::string_view json_text);
[[nodiscard]] std::string dump_schema(const Schema &schema);

struct IngestOptions {
	/// When set, columns absent from the schema get this tag instead of
	/// raising an error.
	std::optional<AvailabilityClass> unknown_column_tag;
};

[[nodiscard]] TimeFrame ingest_csv(const std::filesystem::path &path, const Schema &schema,
                                   const IngestOptions &options = {});
[[nodiscard]] TimeFrame parse_csv(std::string_view text, const Schema &schema,
                                  const IngestOptions &options = {});

/// Values are printed with 17 significant digits; missing cells are empty.
[[nodiscard]] std::string to_csv(const TimeFrame &frame);
void write_csv(const TimeFrame &frame, const std::filesystem::path &path);

/// output[t] = mean of input[t-n+1..t]; missing if the window is short or
/// contains a missing value.
[[nodiscard]] std::vector<double> moving_average(std::span<const double> input, std::size_t n);
/// Single entry of moving_average(input, n) at index t.
[[nodiscard]] double window_mean(std::span<const double> input, std::size_t t, std::size_t n);
[[nodiscard]] std::vector<double> moving_average(const TimeFrame &frame, std::string_view column,
                                                 std::size_t n);

/// output[t] = input[t-k]; the first k entries are missing.
[[nodiscard]] std::vector<double> lag(std::span<const double> input, std::size_t k);
[[nodiscard]] std::vector<double> lag(const TimeFrame &frame, std::string_view column, std::size_t k);

[[nodiscard]] std::vector<double> clip(std::span<const double> input, double lo, double hi);

/// Named columns restricted to complete rows, with the original row of
/// each kept row. Kept rows are no longer contiguous in time, hence not a
/// TimeFrame.
struct CompleteRows {
	std::vector<std::string> names;
	std::vector<std::vector<double>> columns;
	std::vector<std::size_t> row_map;
};

[[nodiscard]] CompleteRows drop_incomplete_rows(const TimeFrame &frame,
                                                std::span<const std::string> columns);

/// Indices i where every column is non-missing. Throws DataError when none is.
[[nodiscard]] std::vector<std::size_t>
complete_row_indices(std::span<const std::span<const double>> columns);

} // namespace gridcast::timeseries

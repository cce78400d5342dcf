#include "gridcast/timeseries.hpp"

#include "gridcast/errors.hpp"
#include "gridcast/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <numeric>
#include <set>
#include <unordered_set>

namespace gridcast::timeseries {

namespace {

constexpr std::string_view kModule = "timeseries";

std::vector<std::string_view> split_line(std::string_view line) {
	std::vector<std::string_view> out;
	std::size_t pos = 0;
	while (true) {
		const auto comma = line.find(',', pos);
		if (comma == std::string_view::npos) {
			out.push_back(line.substr(pos));
			break;
		}
		out.push_back(line.substr(pos, comma - pos));
		pos = comma + 1;
	}
	return out;
}

std::string_view trim(std::string_view s) {
	while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
		s.remove_prefix(1);
	}
	while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
		s.remove_suffix(1);
	}
	return s;
}

double parse_cell(std::string_view cell, std::size_t line_no) {
	cell = trim(cell);
	if (cell.empty()) {
		return kMissing;
	}
	double value = 0.0;
	auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
	if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
		throw DataError(kModule, "line " + std::to_string(line_no) + ": not a number: '" +
		                             std::string(cell) + "'");
	}
	return value;
}

int parse_int(std::string_view s, std::string_view whole) {
	int v = 0;
	auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
	if (ec != std::errc{} || ptr != s.data() + s.size()) {
		throw DataError(kModule, "malformed timestamp '" + std::string(whole) + "'");
	}
	return v;
}

} // namespace

double window_mean(std::span<const double> input, std::size_t t, std::size_t n) {
	if (n == 0 || t >= input.size() || t + 1 < n) {
		return kMissing;
	}
	double sum = 0.0;
	for (std::size_t i = t + 1 - n; i <= t; ++i) {
		if (is_missing(input[i])) {
			return kMissing;
		}
		sum += input[i];
	}
	return sum / static_cast<double>(n);
}

std::string_view to_string(AvailabilityClass tag) {
	switch (tag) {
	case AvailabilityClass::short_term_forecast:
		return "short_term_forecast";
	case AvailabilityClass::weather_forecast:
		return "weather_forecast";
	case AvailabilityClass::market_data:
		return "market_data";
	case AvailabilityClass::real_time:
		return "real_time";
	}
	return "real_time";
}

AvailabilityClass parse_availability(std::string_view text) {
	for (auto tag : {AvailabilityClass::short_term_forecast, AvailabilityClass::weather_forecast,
	                 AvailabilityClass::market_data, AvailabilityClass::real_time}) {
		if (to_string(tag) == text) {
			return tag;
		}
	}
	throw ConfigError(kModule, "unknown availability class '" + std::string(text) + "'");
}

bool available_for_horizon(AvailabilityClass tag, int horizon) {
	switch (tag) {
	case AvailabilityClass::short_term_forecast:
		return horizon <= 6;
	case AvailabilityClass::weather_forecast:
		return horizon > 6;
	case AvailabilityClass::market_data:
	case AvailabilityClass::real_time:
		return true;
	}
	return false;
}

bool is_forecast_class(AvailabilityClass tag) { return tag != AvailabilityClass::real_time; }

HourStamp parse_timestamp(std::string_view text) {
	text = trim(text);
	// YYYY-MM-DDTHH:MM:SSZ
	if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
	    text[16] != ':' || text[19] != 'Z') {
		throw DataError(kModule, "malformed timestamp '" + std::string(text) +
		                             "' (expected YYYY-MM-DDTHH:00:00Z)");
	}
	const int year = parse_int(text.substr(0, 4), text);
	const int month = parse_int(text.substr(5, 2), text);
	const int day = parse_int(text.substr(8, 2), text);
	const int hour = parse_int(text.substr(11, 2), text);
	const int minute = parse_int(text.substr(14, 2), text);
	const int second = parse_int(text.substr(17, 2), text);
	const std::chrono::year_month_day ymd{std::chrono::year{year},
	                                      std::chrono::month{static_cast<unsigned>(month)},
	                                      std::chrono::day{static_cast<unsigned>(day)}};
	if (!ymd.ok() || hour > 23 || minute > 59 || second > 59) {
		throw DataError(kModule, "invalid date '" + std::string(text) + "'");
	}
	if (minute != 0 || second != 0) {
		throw DataError(kModule, "non-hourly timestamp '" + std::string(text) + "'");
	}
	const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
	return static_cast<HourStamp>(days) * 24 + hour;
}

std::string format_timestamp(HourStamp hour) {
	auto days = hour >= 0 ? hour / 24 : -((-hour + 23) / 24);
	const int hh = static_cast<int>(hour - days * 24);
	const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
	char buf[32];
	std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00:00Z", static_cast<int>(ymd.year()),
	              static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hh);
	return buf;
}

CalendarFields calendar(HourStamp hour) {
	auto days = hour >= 0 ? hour / 24 : -((-hour + 23) / 24);
	const auto sd = std::chrono::sys_days{std::chrono::days{days}};
	const std::chrono::year_month_day ymd{sd};
	const std::chrono::weekday wd{sd};
	CalendarFields out{};
	out.hour = static_cast<int>(hour - days * 24);
	out.weekday = static_cast<int>(wd.iso_encoding()) - 1;
	out.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
	out.month_index = (static_cast<std::int64_t>(static_cast<int>(ymd.year())) - 1970) * 12 + out.month - 1;
	return out;
}

TimeFrame::TimeFrame(HourStamp start, std::vector<Column> columns)
    : start_(start), columns_(std::move(columns)) {
	if (columns_.empty()) {
		throw DataError(kModule, "frame has no columns");
	}
	rows_ = columns_.front().values.size();
	if (rows_ == 0) {
		throw DataError(kModule, "frame has no rows");
	}
	std::unordered_set<std::string> seen;
	for (const auto &c : columns_) {
		if (c.values.size() != rows_) {
			throw DataError(kModule, "column '" + c.name + "' has " + std::to_string(c.values.size()) +
			                             " rows, expected " + std::to_string(rows_));
		}
		if (!seen.insert(c.name).second) {
			throw DataError(kModule, "duplicate column name '" + c.name + "'");
		}
	}
}

std::optional<std::size_t> TimeFrame::row_of(HourStamp stamp) const noexcept {
	if (stamp < start_ || stamp >= start_ + static_cast<HourStamp>(rows_)) {
		return std::nullopt;
	}
	return static_cast<std::size_t>(stamp - start_);
}

bool TimeFrame::has(std::string_view name) const noexcept {
	return std::any_of(columns_.begin(), columns_.end(), [&](const Column &c) { return c.name == name; });
}

const Column &TimeFrame::column(std::string_view name) const {
	for (const auto &c : columns_) {
		if (c.name == name) {
			return c;
		}
	}
	throw DataError(kModule, "unknown column '" + std::string(name) + "'");
}

Schema parse_schema(std::string_view json_text) {
	nlohmann::json j;
	try {
		j = nlohmann::json::parse(json_text);
	} catch (const nlohmann::json::exception &e) {
		throw ConfigError(kModule, std::string("schema is not valid JSON: ") + e.what());
	}
	if (!j.is_object()) {
		throw ConfigError(kModule, "schema must be a JSON object");
	}
	Schema schema;
	for (const auto &[name, spec] : j.items()) {
		ColumnSchema cs;
		if (spec.is_string()) {
			cs.tag = parse_availability(spec.get<std::string>());
		} else if (spec.is_object() && spec.contains("tag")) {
			cs.tag = parse_availability(spec.at("tag").get<std::string>());
			if (spec.contains("clip")) {
				const auto &c = spec.at("clip");
				if (!c.is_array() || c.size() != 2) {
					throw ConfigError(kModule, "clip for '" + name + "' must be [lo, hi]");
				}
				const double lo = c[0].get<double>();
				const double hi = c[1].get<double>();
				if (!(lo <= hi)) {
					throw ConfigError(kModule, "clip for '" + name + "' has lo > hi");
				}
				cs.clip = std::make_pair(lo, hi);
			}
		} else {
			throw ConfigError(kModule, "schema entry for '" + name + "' must be a class name or {\"tag\": ...}");
		}
		schema.emplace(name, cs);
	}
	return schema;
}

Schema load_schema(const std::filesystem::path &path) {
	try {
		return parse_schema(io::read_file(path));
	} catch (const DataError &) {
		throw ConfigError(kModule, "cannot read schema " + path.string());
	}
}

std::string dump_schema(const Schema &schema) {
	nlohmann::json j = nlohmann::json::object();
	for (const auto &[name, cs] : schema) {
		if (cs.clip) {
			j[name] = {{"tag", to_string(cs.tag)}, {"clip", {cs.clip->first, cs.clip->second}}};
		} else {
			j[name] = to_string(cs.tag);
		}
	}
	return j.dump(2) + "\n";
}

TimeFrame parse_csv(std::string_view text, const Schema &schema, const IngestOptions &options) {
	std::vector<std::string_view> lines;
	{
		std::size_t pos = 0;
		while (pos < text.size()) {
			auto nl = text.find('\n', pos);
			if (nl == std::string_view::npos) {
				nl = text.size();
			}
			auto line = text.substr(pos, nl - pos);
			if (!trim(line).empty()) {
				lines.push_back(line);
			}
			pos = nl + 1;
		}
	}
	if (lines.empty()) {
		throw DataError(kModule, "empty CSV");
	}
	std::string_view header_line = lines.front();
	if (header_line.size() >= 3 && static_cast<unsigned char>(header_line[0]) == 0xEF) {
		header_line.remove_prefix(3); // UTF-8 BOM
	}
	const auto header = split_line(header_line);
	if (trim(header.front()) != "timestamp") {
		throw DataError(kModule, "first header must be 'timestamp'");
	}
	const std::size_t width = header.size() - 1;
	if (width == 0) {
		throw DataError(kModule, "CSV has no value columns");
	}

	std::vector<Column> columns(width);
	std::vector<std::optional<std::pair<double, double>>> clips(width);
	for (std::size_t c = 0; c < width; ++c) {
		const auto name = std::string(trim(header[c + 1]));
		columns[c].name = name;
		const auto it = schema.find(name);
		if (it != schema.end()) {
			columns[c].tag = it->second.tag;
			clips[c] = it->second.clip;
		} else if (options.unknown_column_tag) {
			columns[c].tag = *options.unknown_column_tag;
		} else {
			throw DataError(kModule, "column '" + name + "' is not in the schema");
		}
	}

	struct Row {
		HourStamp stamp;
		std::size_t line;
		std::vector<double> values;
	};
	std::vector<Row> rows;
	rows.reserve(lines.size() - 1);
	for (std::size_t i = 1; i < lines.size(); ++i) {
		const auto cells = split_line(lines[i]);
		if (cells.size() != header.size()) {
			throw DataError(kModule, "line " + std::to_string(i + 1) + " has " + std::to_string(cells.size()) +
			                             " cells, header has " + std::to_string(header.size()));
		}
		Row row{parse_timestamp(cells[0]), i + 1, {}};
		row.values.reserve(width);
		for (std::size_t c = 0; c < width; ++c) {
			row.values.push_back(parse_cell(cells[c + 1], i + 1));
		}
		rows.push_back(std::move(row));
	}
	if (rows.empty()) {
		throw DataError(kModule, "CSV has no data rows");
	}
	std::stable_sort(rows.begin(), rows.end(), [](const Row &a, const Row &b) { return a.stamp < b.stamp; });
	for (std::size_t i = 1; i < rows.size(); ++i) {
		if (rows[i].stamp == rows[i - 1].stamp) {
			throw DataError(kModule, "duplicate timestamp " + format_timestamp(rows[i].stamp));
		}
	}
	const HourStamp start = rows.front().stamp;
	const auto n = static_cast<std::size_t>(rows.back().stamp - start + 1);
	for (auto &c : columns) {
		c.values.assign(n, kMissing);
	}
	for (const auto &row : rows) {
		const auto r = static_cast<std::size_t>(row.stamp - start);
		for (std::size_t c = 0; c < width; ++c) {
			double v = row.values[c];
			if (clips[c] && !is_missing(v)) {
				v = std::clamp(v, clips[c]->first, clips[c]->second);
			}
			columns[c].values[r] = v;
		}
	}
	return TimeFrame(start, std::move(columns));
}

TimeFrame ingest_csv(const std::filesystem::path &path, const Schema &schema, const IngestOptions &options) {
	if (!std::filesystem::exists(path)) {
		throw DataError(kModule, "file not found: " + path.string());
	}
	return parse_csv(io::read_file(path), schema, options);
}

std::string to_csv(const TimeFrame &frame) {
	std::string out = "timestamp";
	for (const auto &c : frame.columns()) {
		out += ',';
		out += c.name;
	}
	out += '\n';
	for (std::size_t r = 0; r < frame.rows(); ++r) {
		out += format_timestamp(frame.stamp(r));
		for (const auto &c : frame.columns()) {
			out += ',';
			if (!is_missing(c.values[r])) {
				out += io::format_double(c.values[r]);
			}
		}
		out += '\n';
	}
	return out;
}

void write_csv(const TimeFrame &frame, const std::filesystem::path &path) {
	io::write_file_atomic(path, to_csv(frame));
}

std::vector<double> moving_average(std::span<const double> input, std::size_t n) {
	if (n == 0) {
		throw ConfigError(kModule, "moving average window must be >= 1");
	}
	std::vector<double> out(input.size(), kMissing);
	// Direct window sums (no running sum) so a single-origin evaluation at
	// forecast time reproduces these values bit for bit.
	for (std::size_t t = n - 1; t < input.size(); ++t) {
		out[t] = window_mean(input, t, n);
	}
	return out;
}

std::vector<double> moving_average(const TimeFrame &frame, std::string_view column, std::size_t n) {
	return moving_average(frame.values(column), n);
}

std::vector<double> lag(std::span<const double> input, std::size_t k) {
	std::vector<double> out(input.size(), kMissing);
	for (std::size_t t = k; t < input.size(); ++t) {
		out[t] = input[t - k];
	}
	return out;
}

std::vector<double> lag(const TimeFrame &frame, std::string_view column, std::size_t k) {
	return lag(frame.values(column), k);
}

std::vector<double> clip(std::span<const double> input, double lo, double hi) {
	std::vector<double> out(input.begin(), input.end());
	for (auto &v : out) {
		if (!is_missing(v)) {
			v = std::clamp(v, lo, hi);
		}
	}
	return out;
}

std::vector<std::size_t> complete_row_indices(std::span<const std::span<const double>> columns) {
	if (columns.empty()) {
		throw ConfigError(kModule, "no columns given");
	}
	const auto n = columns.front().size();
	std::vector<std::size_t> rows;
	for (std::size_t r = 0; r < n; ++r) {
		bool ok = true;
		for (const auto &c : columns) {
			if (is_missing(c[r])) {
				ok = false;
				break;
			}
		}
		if (ok) {
			rows.push_back(r);
		}
	}
	if (rows.empty()) {
		throw DataError(kModule, "no complete rows: unusable data range");
	}
	return rows;
}

CompleteRows drop_incomplete_rows(const TimeFrame &frame, std::span<const std::string> columns) {
	std::vector<std::span<const double>> spans;
	for (const auto &name : columns) {
		spans.push_back(frame.values(name));
	}
	CompleteRows out;
	out.row_map = complete_row_indices(spans);
	out.names.assign(columns.begin(), columns.end());
	for (const auto &s : spans) {
		std::vector<double> v;
		v.reserve(out.row_map.size());
		for (auto r : out.row_map) {
			v.push_back(s[r]);
		}
		out.columns.push_back(std::move(v));
	}
	return out;
}

} // namespace gridcast::timeseries

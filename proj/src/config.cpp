#include "gridcast/config.hpp"

#include "gridcast/arima.hpp"
#include "gridcast/errors.hpp"
#include "gridcast/io.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <set>

namespace gridcast::config {

namespace {

constexpr const char *kModule = "config";

using nlohmann::json;

std::string trim(std::string_view s) {
	const auto b = s.find_first_not_of(" \t");
	if (b == std::string_view::npos) {
		return {};
	}
	const auto e = s.find_last_not_of(" \t");
	return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
	std::vector<std::string> out;
	std::size_t pos = 0;
	while (pos <= s.size()) {
		const auto comma = s.find(',', pos);
		const auto item = trim(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
		if (!item.empty()) {
			out.push_back(item);
		}
		if (comma == std::string_view::npos) {
			break;
		}
		pos = comma + 1;
	}
	return out;
}

template <typename T> T parse_number(std::string_view key, std::string_view text) {
	T v{};
	const auto *end = text.data() + text.size();
	const auto [ptr, ec] = std::from_chars(text.data(), end, v);
	if (ec != std::errc() || ptr != end) {
		throw ConfigError(kModule, std::string(key) + ": '" + std::string(text) + "' is not a valid integer");
	}
	return v;
}

// Lists of integers accept JSON arrays, "1,2,3" and ranges such as "1-24".
std::vector<int> int_list(std::string_view key, const json &v) {
	if (v.is_array()) {
		std::vector<int> out;
		for (const auto &e : v) {
			if (!e.is_number_integer()) {
				throw ConfigError(kModule, std::string(key) + " must hold integers");
			}
			out.push_back(e.get<int>());
		}
		return out;
	}
	if (v.is_number_integer()) {
		return {v.get<int>()};
	}
	if (!v.is_string()) {
		throw ConfigError(kModule, std::string(key) + " must be a list of integers");
	}
	std::vector<int> out;
	for (const auto &item : split_list(v.get<std::string>())) {
		const auto dash = item.find('-', 1);
		if (dash == std::string::npos) {
			out.push_back(parse_number<int>(key, item));
			continue;
		}
		const int lo = parse_number<int>(key, trim(std::string_view(item).substr(0, dash)));
		const int hi = parse_number<int>(key, trim(std::string_view(item).substr(dash + 1)));
		if (hi < lo) {
			throw ConfigError(kModule, std::string(key) + ": empty range '" + item + "'");
		}
		for (int h = lo; h <= hi; ++h) {
			out.push_back(h);
		}
	}
	return out;
}

std::vector<std::string> string_list(std::string_view key, const json &v) {
	if (v.is_string()) {
		return split_list(v.get<std::string>());
	}
	if (!v.is_array()) {
		throw ConfigError(kModule, std::string(key) + " must be a list of strings");
	}
	std::vector<std::string> out;
	for (const auto &e : v) {
		if (!e.is_string()) {
			throw ConfigError(kModule, std::string(key) + " must hold strings");
		}
		out.push_back(e.get<std::string>());
	}
	return out;
}

std::size_t count(std::string_view key, const json &v) {
	if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
		return v.get<std::size_t>();
	}
	if (v.is_string()) {
		return parse_number<std::size_t>(key, trim(v.get<std::string>()));
	}
	throw ConfigError(kModule, std::string(key) + " must be a non-negative integer");
}

std::string text(std::string_view key, const json &v) {
	if (!v.is_string()) {
		throw ConfigError(kModule, std::string(key) + " must be a string");
	}
	return v.get<std::string>();
}

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p) {
	const std::filesystem::path path(p);
	return path.is_absolute() || base.empty() ? path : base / path;
}

void set_field(RunConfig &c, std::string_view key, const json &v, const std::filesystem::path &base) {
	if (key == "data") {
		c.data = resolve(base, text(key, v));
	} else if (key == "schema") {
		c.schema = resolve(base, text(key, v));
	} else if (key == "output") {
		c.output = resolve(base, text(key, v));
	} else if (key == "response") {
		c.response = text(key, v);
	} else if (key == "kind") {
		c.kind = ensemble::parse_kind(text(key, v));
	} else if (key == "horizons") {
		c.horizons = int_list(key, v);
	} else if (key == "columns") {
		c.columns = string_list(key, v);
	} else if (key == "members") {
		c.members.clear();
		for (const auto &m : string_list(key, v)) {
			c.members.push_back(basis::parse_variant(m));
		}
	} else if (key == "ma_windows") {
		c.ma_windows.clear();
		for (int w : int_list(key, v)) {
			if (w <= 0) {
				throw ConfigError(kModule, "ma_windows must be positive");
			}
			c.ma_windows.push_back(static_cast<std::size_t>(w));
		}
	} else if (key == "interaction_pool") {
		c.interaction_pool = count(key, v);
	} else if (key == "bs_count") {
		c.bs_count = static_cast<int>(count(key, v));
	} else if (key == "ns_count") {
		c.ns_count = static_cast<int>(count(key, v));
	} else if (key == "n_splits") {
		c.n_splits = count(key, v);
	} else if (key == "validation_len") {
		c.validation_len = count(key, v);
	} else if (key == "test_len") {
		c.test_len = count(key, v);
	} else if (key == "corrected_horizons") {
		if (v.is_null() || (v.is_string() && v.get<std::string>() == "default")) {
			c.corrected_horizons.reset();
		} else {
			c.corrected_horizons = int_list(key, v);
		}
	} else if (key == "arima") {
		c.arima = text(key, v);
	} else if (key == "history_window") {
		c.history_window = count(key, v);
	} else if (key == "seed") {
		if (v.is_string()) {
			c.seed = parse_seed(v.get<std::string>());
		} else if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
			c.seed = v.get<std::uint64_t>();
		} else {
			throw ConfigError(kModule, "seed must be an unsigned 64-bit integer");
		}
	} else {
		throw ConfigError(kModule, "unknown key '" + std::string(key) + "'");
	}
}

json pipeline_json(const RunConfig &c) {
	std::vector<std::string> members;
	for (auto m : c.members) {
		members.emplace_back(basis::to_string(m));
	}
	return {{"response", c.response},
	        {"kind", ensemble::to_string(c.kind)},
	        {"horizons", c.horizons},
	        {"columns", c.columns},
	        {"members", members},
	        {"ma_windows", c.ma_windows},
	        {"interaction_pool", c.interaction_pool},
	        {"bs_count", c.bs_count},
	        {"ns_count", c.ns_count},
	        {"n_splits", c.n_splits},
	        {"validation_len", c.validation_len},
	        {"test_len", c.test_len},
	        {"corrected_horizons", c.corrected_horizons ? json(*c.corrected_horizons) : json(nullptr)},
	        {"arima", c.arima},
	        {"history_window", c.history_window}};
}

} // namespace

void RunConfig::validate() const {
	if (response.empty()) {
		throw ConfigError(kModule, "response column must be named");
	}
	for (int h : horizons) {
		if (h < 1 || h > 24) {
			throw ConfigError(kModule, "horizon " + std::to_string(h) + " outside 1..24");
		}
	}
	if (corrected_horizons) {
		for (int h : *corrected_horizons) {
			if (h < 1 || h > 6) {
				throw ConfigError(kModule, "corrected horizon " + std::to_string(h) + " outside 1..6");
			}
		}
	}
	if (members.empty()) {
		throw ConfigError(kModule, "at least one ensemble member is required");
	}
	std::set<basis::Variant> seen;
	for (auto m : members) {
		if (m == basis::Variant::M0) {
			throw ConfigError(kModule, "M0 only ranks the interaction pool and cannot be a member");
		}
		if (!seen.insert(m).second) {
			throw ConfigError(kModule, "duplicate member " + std::string(basis::to_string(m)));
		}
	}
	if (n_splits == 0 || validation_len == 0 || test_len == 0) {
		throw ConfigError(kModule, "n_splits, validation_len and test_len must be positive");
	}
	if (bs_count < 1 || ns_count < 1 || interaction_pool == 0 || history_window == 0) {
		throw ConfigError(kModule, "bs_count, ns_count, interaction_pool and history_window must be positive");
	}
	if (!arima.empty() && arima != "auto" && arima != "average" && arima != "marginal") {
		(void)arima::parse_order(arima);
	}
}

json to_json(const RunConfig &c) {
	json j = pipeline_json(c);
	j["data"] = c.data.string();
	j["schema"] = c.schema.string();
	j["output"] = c.output.string();
	j["seed"] = c.seed;
	return j;
}

RunConfig from_json(const json &j, const std::filesystem::path &base_dir) {
	if (!j.is_object()) {
		throw ConfigError(kModule, "configuration must be a JSON object");
	}
	RunConfig c;
	for (const auto &[key, value] : j.items()) {
		set_field(c, key, value, base_dir);
	}
	c.validate();
	return c;
}

RunConfig load(const std::filesystem::path &path) {
	json j;
	try {
		j = json::parse(io::read_file(path));
	} catch (const json::exception &e) {
		throw ConfigError(kModule, "malformed " + path.string() + ": " + e.what());
	}
	return from_json(j, path.parent_path());
}

void apply_override(RunConfig &config, std::string_view assignment) {
	const auto eq = assignment.find('=');
	if (eq == std::string_view::npos || eq == 0) {
		throw ConfigError(kModule, "override '" + std::string(assignment) + "' is not key=value");
	}
	const std::string key = trim(assignment.substr(0, eq));
	const std::string raw = trim(assignment.substr(eq + 1));
	json value = json::parse(raw, nullptr, false);
	if (value.is_discarded()) {
		value = raw;
	}
	set_field(config, key, value, {});
	config.validate();
}

void apply_environment(RunConfig &config) {
	if (const char *env = std::getenv("GRIDCAST_SEED"); env != nullptr && *env != '\0') {
		config.seed = parse_seed(env);
	}
}

std::uint64_t parse_seed(std::string_view text) {
	std::uint64_t v = 0;
	const auto *end = text.data() + text.size();
	const auto [ptr, ec] = std::from_chars(text.data(), end, v);
	if (text.empty() || ec != std::errc() || ptr != end) {
		throw ConfigError(kModule, "seed '" + std::string(text) + "' is not an unsigned 64-bit integer");
	}
	return v;
}

std::string config_hash(const RunConfig &config) {
	char buf[17];
	std::snprintf(buf, sizeof buf, "%016llx",
	              static_cast<unsigned long long>(io::fnv1a(pipeline_json(config).dump())));
	return buf;
}

ensemble::CompoundOptions compound_options(const RunConfig &c) {
	ensemble::CompoundOptions o;
	o.pipeline.n_splits = c.n_splits;
	o.pipeline.validation_len = c.validation_len;
	o.pipeline.test_len = c.test_len;
	o.pipeline.columns = c.columns;
	o.pipeline.ma_windows = c.ma_windows;
	o.pipeline.interaction_pool = c.interaction_pool;
	o.pipeline.bs_count = c.bs_count;
	o.pipeline.ns_count = c.ns_count;
	o.corrector.arima = c.arima;
	o.corrector.history_window = c.history_window;
	o.members = c.members;
	o.corrected_horizons = c.corrected_horizons;
	o.horizons = c.horizons;
	return o;
}

} // namespace gridcast::config

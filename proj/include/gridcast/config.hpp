#pragma once

#include "gridcast/ensemble.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridcast::config {

/// Everything a train run depends on. Relative paths in a config file are
/// resolved against the file's directory.
struct RunConfig {
	std::filesystem::path data;
	std::filesystem::path schema;
	std::string response = "co2";
	ensemble::ResponseKind kind = ensemble::ResponseKind::average;
	std::vector<int> horizons; // empty: all 24

	// Recipe overrides.
	std::vector<std::string> columns; // empty: every available column
	std::vector<basis::Variant> members{basis::Variant::M1, basis::Variant::M2, basis::Variant::M3};
	std::vector<std::size_t> ma_windows{24, 48};
	std::size_t interaction_pool = 50;
	int bs_count = 4;
	int ns_count = 4;

	std::size_t n_splits = 8;
	std::size_t validation_len = 672;
	std::size_t test_len = 672;

	std::optional<std::vector<int>> corrected_horizons; // unset: the kind's default
	std::string arima;                                  // empty: the kind's preset
	std::size_t history_window = 2016;

	std::uint64_t seed = 42;
	std::filesystem::path output = "model";

	void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const RunConfig &config);
/// Unknown keys raise ConfigError. Missing keys keep their defaults.
[[nodiscard]] RunConfig from_json(const nlohmann::json &j, const std::filesystem::path &base_dir = {});
[[nodiscard]] RunConfig load(const std::filesystem::path &path);

/// Applies "key=value". The value is parsed as JSON when it can be; list
/// keys also accept comma-separated items ("horizons=1,2,3").
void apply_override(RunConfig &config, std::string_view assignment);

/// Replaces the seed with GRIDCAST_SEED when that variable is set.
void apply_environment(RunConfig &config);

[[nodiscard]] std::uint64_t parse_seed(std::string_view text);

/// FNV-1a of the canonical JSON, as 16 hex digits. Paths and the seed are
/// excluded: the hash names the pipeline, not where or how it was run.
[[nodiscard]] std::string config_hash(const RunConfig &config);

[[nodiscard]] ensemble::CompoundOptions compound_options(const RunConfig &config);

} // namespace gridcast::config

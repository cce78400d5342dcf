#pragma once

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gridcast::report {

struct Row {
	std::string model;
	std::string horizons; // e.g. "3-6" or "1-2,5"
	double validation_rmse = 0.0;
	double test_rmse = 0.0;
	std::optional<double> weight; // empty for ensemble rows
};

/// "1-2,5" from {1, 2, 5}.
[[nodiscard]] std::string format_ranges(std::span<const int> horizons);

/// One row per member of every ensemble, then an "ensemble" row when the
/// ensemble has more than one member. `label`, when non-empty, prefixes
/// each model name as "label:M1".
[[nodiscard]] std::vector<Row> rows(const nlohmann::json &evaluation, const std::string &label = {});

/// Aligned text table, numbers at 4 significant digits.
[[nodiscard]] std::string to_text(std::span<const Row> rows);
/// model,horizons,validation_rmse,test_rmse,weight with the same 4-digit numbers.
[[nodiscard]] std::string to_csv(std::span<const Row> rows);

} // namespace gridcast::report

#include "gridcast/cv.hpp"

#include "gridcast/errors.hpp"
#include "gridcast/linreg.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>

namespace gridcast::cv {

namespace {
constexpr const char *kModule = "cv";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double number_or_nan(const nlohmann::json &j) { return j.is_null() ? kNaN : j.get<double>(); }
} // namespace

std::size_t CvPlan::selection_end() const {
	if (splits.empty()) {
		throw ConfigError(kModule, "empty plan");
	}
	return splits.back().validation.end;
}

CvPlan make_plan(std::size_t n_rows, std::size_t n_splits, std::size_t validation_len, std::size_t test_len,
                 std::size_t min_train_len) {
	if (n_splits == 0 || validation_len == 0 || min_train_len == 0) {
		throw ConfigError(kModule, "n_splits, validation_len and min_train_len must be positive");
	}
	const std::size_t needed = min_train_len + n_splits * (validation_len + test_len);
	if (n_rows < needed) {
		throw ConfigError(kModule, "plan needs at least " + std::to_string(needed) + " rows, got " +
		                               std::to_string(n_rows));
	}
	CvPlan plan;
	plan.n_rows = n_rows;
	for (std::size_t k = 0; k < n_splits; ++k) {
		Split s;
		s.train = {0, min_train_len + k * (validation_len + test_len)};
		s.validation = {s.train.end, s.train.end + validation_len};
		s.test = {s.validation.end, s.validation.end + test_len};
		plan.splits.push_back(s);
	}
	return plan;
}

CvPlan default_plan(std::size_t n_rows, std::size_t n_splits, std::size_t validation_len, std::size_t test_len) {
	const std::size_t used = n_splits * (validation_len + test_len);
	if (n_rows <= used) {
		throw ConfigError(kModule, "plan needs more than " + std::to_string(used) + " rows, got " +
		                               std::to_string(n_rows));
	}
	return make_plan(n_rows, n_splits, validation_len, test_len, n_rows - used);
}

Evaluation evaluate(const Fitter &fitter, const Eigen::MatrixXd &X, const Eigen::VectorXd &y, const CvPlan &plan) {
	if (static_cast<std::size_t>(X.rows()) != plan.n_rows || y.size() != X.rows()) {
		throw ConfigError(kModule, "plan was made for " + std::to_string(plan.n_rows) + " rows, design has " +
		                               std::to_string(X.rows()));
	}
	auto rows = [](const auto &m, const Range &r) {
		return m.middleRows(static_cast<Eigen::Index>(r.begin), static_cast<Eigen::Index>(r.size()));
	};
	Evaluation out;
	double sum_val = 0.0;
	double sum_test = 0.0;
	std::size_t ok = 0;
	std::size_t ok_test = 0;
	for (const auto &split : plan.splits) {
		SplitMetrics m;
		try {
			const Predictor predict = fitter(rows(X, split.train), rows(y, split.train));
			m.validation_rmse = linreg::rmse(Eigen::VectorXd(rows(y, split.validation)),
			                                 predict(rows(X, split.validation)));
			m.test_rmse = split.test.size() == 0
			                  ? kNaN
			                  : linreg::rmse(Eigen::VectorXd(rows(y, split.test)), predict(rows(X, split.test)));
			m.ok = true;
		} catch (const Error &e) {
			m.error = e.what();
		}
		if (m.ok) {
			sum_val += m.validation_rmse;
			++ok;
			if (std::isfinite(m.test_rmse)) {
				sum_test += m.test_rmse;
				++ok_test;
			}
		}
		out.splits.push_back(std::move(m));
	}
	out.complete = ok == plan.splits.size();
	out.mean_validation_rmse = ok > 0 ? sum_val / static_cast<double>(ok) : kNaN;
	out.mean_test_rmse = ok_test > 0 ? sum_test / static_cast<double>(ok_test) : kNaN;
	return out;
}

nlohmann::json to_json(const CvPlan &plan) {
	nlohmann::json j;
	j["n_rows"] = plan.n_rows;
	auto splits = nlohmann::json::array();
	for (const auto &s : plan.splits) {
		splits.push_back({{"train", {s.train.begin, s.train.end}},
		                  {"validation", {s.validation.begin, s.validation.end}},
		                  {"test", {s.test.begin, s.test.end}}});
	}
	j["splits"] = std::move(splits);
	return j;
}

nlohmann::json to_json(const Evaluation &e) {
	nlohmann::json j;
	auto splits = nlohmann::json::array();
	for (const auto &s : e.splits) {
		nlohmann::json item{{"ok", s.ok}};
		if (s.ok) {
			item["validation_rmse"] = number_or_null(s.validation_rmse);
			item["test_rmse"] = number_or_null(s.test_rmse);
		} else {
			item["error"] = s.error;
		}
		splits.push_back(std::move(item));
	}
	j["splits"] = std::move(splits);
	j["mean_validation_rmse"] = number_or_null(e.mean_validation_rmse);
	j["mean_test_rmse"] = number_or_null(e.mean_test_rmse);
	j["complete"] = e.complete;
	return j;
}

Evaluation evaluation_from_json(const nlohmann::json &j) {
	try {
		Evaluation e;
		for (const auto &s : j.at("splits")) {
			SplitMetrics m;
			m.ok = s.at("ok").get<bool>();
			if (m.ok) {
				m.validation_rmse = number_or_nan(s.at("validation_rmse"));
				m.test_rmse = number_or_nan(s.at("test_rmse"));
			} else {
				m.error = s.value("error", std::string{});
			}
			e.splits.push_back(std::move(m));
		}
		e.mean_validation_rmse = number_or_nan(j.at("mean_validation_rmse"));
		e.mean_test_rmse = number_or_nan(j.at("mean_test_rmse"));
		e.complete = j.at("complete").get<bool>();
		return e;
	} catch (const nlohmann::json::exception &ex) {
		throw ConfigError(kModule, std::string("malformed evaluation: ") + ex.what());
	}
}

} // namespace gridcast::cv

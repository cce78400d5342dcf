#include "gridcast/linreg.hpp"

#include "gridcast/errors.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include <cmath>

namespace gridcast::linreg {

namespace {
constexpr const char *kModule = "linreg";

std::string column_label(const std::vector<basis::Feature> &features, Eigen::Index col) {
	if (col == 0) {
		return "(intercept)";
	}
	if (static_cast<std::size_t>(col) <= features.size()) {
		return features[static_cast<std::size_t>(col) - 1].id();
	}
	return "column " + std::to_string(col);
}

void check_row(const LinearModel &model, Eigen::Index size) {
	if (size != model.beta.size()) {
		throw ConfigError(kModule, "row has " + std::to_string(size) + " entries, model expects " +
		                               std::to_string(model.beta.size()));
	}
}
} // namespace

LinearModel fit_ols(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, std::vector<basis::Feature> features) {
	const Eigen::Index n = X.rows();
	const Eigen::Index m = X.cols();
	if (y.size() != n) {
		throw ConfigError(kModule, "response length does not match design rows");
	}
	if (m == 0 || n <= m) {
		throw ConfigError(kModule, "need more rows than columns (n=" + std::to_string(n) +
		                               ", m=" + std::to_string(m) + ")");
	}
	Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
	qr.setThreshold(kRankThreshold);
	if (qr.rank() < m) {
		const Eigen::Index dependent = qr.colsPermutation().indices()(qr.rank());
		throw NumericalError(kModule, "rank deficient design: " + column_label(features, dependent) +
		                                  " is linearly dependent on earlier columns");
	}
	LinearModel model;
	model.beta = qr.solve(y);
	const Eigen::VectorXd resid = y - X * model.beta;
	model.dof = static_cast<int>(n - m);
	model.sigma2 = resid.squaredNorm() / model.dof;

	// X P = Q R  =>  (X'X)^-1 = P R^-1 R^-T P'.
	const auto R = qr.matrixR().topLeftCorner(m, m).template triangularView<Eigen::Upper>();
	Eigen::MatrixXd rinv = Eigen::MatrixXd::Identity(m, m);
	R.solveInPlace(rinv);
	const Eigen::MatrixXd inner = rinv * rinv.transpose();
	const auto &perm = qr.colsPermutation();
	model.xtx_inv = perm * inner * perm.transpose();
	model.xtx_inv = 0.5 * (model.xtx_inv + model.xtx_inv.transpose()).eval();
	model.features = std::move(features);
	return model;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd &X) {
	Eigen::MatrixXd out(X.rows(), X.cols() + 1);
	out.col(0).setOnes();
	out.rightCols(X.cols()) = X;
	return out;
}

LinearModel fit_design(const basis::FeatureMatrix &X, const Eigen::VectorXd &y) {
	return fit_ols(with_intercept(X.data()), y, X.provenance());
}

double predict(const LinearModel &model, const Eigen::Ref<const Eigen::VectorXd> &row) {
	check_row(model, row.size());
	return model.beta.dot(row);
}

Eigen::VectorXd predict_rows(const LinearModel &model, const Eigen::MatrixXd &X) {
	check_row(model, X.cols());
	return X * model.beta;
}

double mean_variance(const LinearModel &model, const Eigen::Ref<const Eigen::VectorXd> &row) {
	check_row(model, row.size());
	return model.sigma2 * std::max(0.0, row.dot(model.xtx_inv * row));
}

Interval prediction_interval(const LinearModel &model, const Eigen::Ref<const Eigen::VectorXd> &row, double level) {
	if (!(level > 0.0 && level < 1.0)) {
		throw ConfigError(kModule, "interval level must lie in (0, 1)");
	}
	const double point = predict(model, row);
	const double var = model.sigma2 + mean_variance(model, row);
	const boost::math::students_t dist(model.dof);
	const double q = boost::math::quantile(dist, 0.5 + level / 2.0);
	const double half = q * std::sqrt(var);
	return {point - half, point + half};
}

double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
	if (y_true.size() != y_pred.size() || y_true.empty()) {
		throw ConfigError(kModule, "rmse needs equal, non-empty inputs");
	}
	double ss = 0.0;
	for (std::size_t i = 0; i < y_true.size(); ++i) {
		const double d = y_true[i] - y_pred[i];
		ss += d * d;
	}
	return std::sqrt(ss / static_cast<double>(y_true.size()));
}

double rmse(const Eigen::VectorXd &y_true, const Eigen::VectorXd &y_pred) {
	return rmse(std::span<const double>(y_true.data(), static_cast<std::size_t>(y_true.size())),
	            std::span<const double>(y_pred.data(), static_cast<std::size_t>(y_pred.size())));
}

nlohmann::json to_json(const LinearModel &model) {
	nlohmann::json j;
	j["beta"] = std::vector<double>(model.beta.data(), model.beta.data() + model.beta.size());
	j["sigma2"] = model.sigma2;
	j["dof"] = model.dof;
	std::vector<double> flat;
	flat.reserve(static_cast<std::size_t>(model.xtx_inv.size()));
	for (Eigen::Index r = 0; r < model.xtx_inv.rows(); ++r) {
		for (Eigen::Index c = 0; c < model.xtx_inv.cols(); ++c) {
			flat.push_back(model.xtx_inv(r, c));
		}
	}
	j["xtx_inv"] = flat;
	auto features = nlohmann::json::array();
	for (const auto &f : model.features) {
		features.push_back(basis::to_json(f));
	}
	j["features"] = std::move(features);
	return j;
}

LinearModel model_from_json(const nlohmann::json &j) {
	try {
		LinearModel model;
		const auto beta = j.at("beta").get<std::vector<double>>();
		model.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
		model.sigma2 = j.at("sigma2").get<double>();
		model.dof = j.at("dof").get<int>();
		const auto flat = j.at("xtx_inv").get<std::vector<double>>();
		const auto m = model.beta.size();
		if (static_cast<Eigen::Index>(flat.size()) != m * m || model.dof < 1 || model.sigma2 < 0.0) {
			throw ConfigError(kModule, "inconsistent linear model file");
		}
		model.xtx_inv.resize(m, m);
		for (Eigen::Index r = 0; r < m; ++r) {
			for (Eigen::Index c = 0; c < m; ++c) {
				model.xtx_inv(r, c) = flat[static_cast<std::size_t>(r * m + c)];
			}
		}
		for (const auto &f : j.at("features")) {
			model.features.push_back(basis::feature_from_json(f));
		}
		if (!model.features.empty() && static_cast<Eigen::Index>(model.features.size()) + 1 != m) {
			throw ConfigError(kModule, "feature count does not match coefficients");
		}
		return model;
	} catch (const nlohmann::json::exception &e) {
		throw ConfigError(kModule, std::string("malformed linear model: ") + e.what());
	}
}

} // namespace gridcast::linreg

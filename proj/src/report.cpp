#include "gridcast/report.hpp"

#include "gridcast/errors.hpp"
#include "gridcast/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>

namespace gridcast::report {

namespace {

constexpr const char *kModule = "report";
constexpr int kDigits = 4;

std::string number(double v) { return std::isnan(v) ? "nan" : io::format_significant(v, kDigits); }

std::array<std::string, 5> cells(const Row &r) {
	return {r.model, r.horizons, number(r.validation_rmse), number(r.test_rmse),
	        r.weight ? number(*r.weight) : std::string()};
}

double rmse_field(const nlohmann::json &j, const char *key) {
	const auto &v = j.at(key);
	// NaN is serialized as null.
	return v.is_null() ? std::nan("") : v.get<double>();
}

std::string csv_field(const std::string &s) {
	if (s.find_first_of(",\"\n") == std::string::npos) {
		return s;
	}
	std::string out = "\"";
	for (char c : s) {
		out += c == '"' ? std::string("\"\"") : std::string(1, c);
	}
	return out + "\"";
}

} // namespace

std::string format_ranges(std::span<const int> horizons) {
	std::vector<int> hs(horizons.begin(), horizons.end());
	std::sort(hs.begin(), hs.end());
	hs.erase(std::unique(hs.begin(), hs.end()), hs.end());
	std::string out;
	for (std::size_t i = 0; i < hs.size();) {
		std::size_t j = i;
		while (j + 1 < hs.size() && hs[j + 1] == hs[j] + 1) {
			++j;
		}
		out += (out.empty() ? "" : ",") + std::to_string(hs[i]);
		if (j > i) {
			out += "-" + std::to_string(hs[j]);
		}
		i = j + 1;
	}
	return out;
}

std::vector<Row> rows(const nlohmann::json &evaluation, const std::string &label) {
	const std::string prefix = label.empty() ? "" : label + ":";
	std::vector<Row> out;
	try {
		for (const auto &h : evaluation.at("horizons")) {
			const auto serves = h.at("serves").get<std::vector<int>>();
			const auto range = format_ranges(serves);
			const auto &members = h.at("members");
			for (const auto &m : members) {
				out.push_back({prefix + m.at("model").get<std::string>(), range, rmse_field(m, "validation_rmse"),
				               rmse_field(m, "test_rmse"), m.at("weight").get<double>()});
			}
			if (members.size() > 1) {
				const auto &e = h.at("ensemble");
				out.push_back({prefix + "ensemble", range, rmse_field(e, "validation_rmse"),
				               rmse_field(e, "test_rmse"), std::nullopt});
			}
		}
	} catch (const nlohmann::json::exception &e) {
		throw DataError(kModule, std::string("evaluation JSON lacks the expected fields: ") + e.what());
	}
	return out;
}

std::string to_text(std::span<const Row> rows) {
	const std::array<std::string, 5> header{"model", "horizons", "val_rmse", "test_rmse", "weight"};
	std::array<std::size_t, 5> width{};
	for (std::size_t c = 0; c < 5; ++c) {
		width[c] = header[c].size();
	}
	std::vector<std::array<std::string, 5>> body;
	for (const auto &r : rows) {
		body.push_back(cells(r));
		for (std::size_t c = 0; c < 5; ++c) {
			width[c] = std::max(width[c], body.back()[c].size());
		}
	}
	auto line = [&](const std::array<std::string, 5> &v) {
		std::string s;
		for (std::size_t c = 0; c < 5; ++c) {
			// Names left-aligned, numbers right-aligned.
			const std::string pad(width[c] - v[c].size(), ' ');
			s += (c == 0 ? "" : "  ") + (c < 2 ? v[c] + pad : pad + v[c]);
		}
		while (!s.empty() && s.back() == ' ') {
			s.pop_back();
		}
		return s + "\n";
	};
	std::string out = line(header);
	for (const auto &b : body) {
		out += line(b);
	}
	return out;
}

std::string to_csv(std::span<const Row> rows) {
	std::string out = "model,horizons,validation_rmse,test_rmse,weight\n";
	for (const auto &r : rows) {
		const auto v = cells(r);
		for (std::size_t c = 0; c < 5; ++c) {
			out += (c == 0 ? "" : ",") + csv_field(v[c]);
		}
		out += "\n";
	}
	return out;
}

} // namespace gridcast::report

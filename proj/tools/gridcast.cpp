// gridcast: command-line entry point. Commands: synth, train, evaluate,
// forecast, report. Exit codes: 0 ok, 2 configuration, 3 data, 4 numerical.

#include "gridcast/config.hpp"
#include "gridcast/ensemble.hpp"
#include "gridcast/errors.hpp"
#include "gridcast/io.hpp"
#include "gridcast/log.hpp"
#include "gridcast/report.hpp"
#include "gridcast/synth.hpp"
#include "gridcast/timeseries.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>

namespace {

using namespace gridcast;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

timeseries::TimeFrame load_frame(const fs::path &data, const fs::path &schema) {
	if (data.empty() || schema.empty()) {
		throw ConfigError("cli", "both a data CSV and a schema JSON are required");
	}
	return timeseries::ingest_csv(data, timeseries::load_schema(schema));
}

std::optional<std::size_t> last_observed(const timeseries::TimeFrame &frame, std::string_view response) {
	const auto y = frame.values(response);
	for (std::size_t i = y.size(); i-- > 0;) {
		if (!timeseries::is_missing(y[i])) {
			return i;
		}
	}
	return std::nullopt;
}

std::size_t row_at(const timeseries::TimeFrame &frame, const std::string &stamp) {
	const auto row = frame.row_of(timeseries::parse_timestamp(stamp));
	if (!row) {
		throw DataError("cli", "timestamp " + stamp + " is outside the data");
	}
	return *row;
}

void emit(const std::string &path, const std::string &content) {
	if (path.empty() || path == "-") {
		std::cout << content;
	} else {
		io::write_file_atomic(path, content);
	}
}

// synth ---------------------------------------------------------------------

struct SynthArgs {
	std::string spec;
	std::string out;
	std::optional<std::uint64_t> seed;
	std::optional<std::size_t> hours;
};

void cmd_synth(const SynthArgs &a) {
	synth::SyntheticSpec spec = synth::default_spec();
	if (!a.spec.empty()) {
		try {
			spec = synth::spec_from_json(nlohmann::json::parse(io::read_file(a.spec)));
		} catch (const nlohmann::json::exception &e) {
			throw ConfigError("cli", "malformed " + a.spec + ": " + e.what());
		}
	}
	if (const char *env = std::getenv("GRIDCAST_SEED"); env != nullptr && *env != '\0') {
		spec.seed = config::parse_seed(env);
	}
	if (a.seed) {
		spec.seed = *a.seed;
	}
	if (a.hours) {
		spec.n_hours = *a.hours;
	}
	synth::write(spec, a.out);
	io::write_file_atomic(fs::path(a.out) / "spec.json", synth::to_json(spec).dump(2) + "\n");
	log::info("cli", "wrote synthetic data to " + a.out);
}

// train ---------------------------------------------------------------------

struct ConfigArgs {
	std::string config;
	std::vector<std::string> sets;
	std::string data;
	std::string schema;
	std::string out;
};

// File, then GRIDCAST_SEED, then --set and the path flags.
config::RunConfig resolve_config(const ConfigArgs &a) {
	config::RunConfig c = a.config.empty() ? config::RunConfig{} : config::load(a.config);
	config::apply_environment(c);
	for (const auto &s : a.sets) {
		config::apply_override(c, s);
	}
	if (!a.data.empty()) {
		c.data = a.data;
	}
	if (!a.schema.empty()) {
		c.schema = a.schema;
	}
	if (!a.out.empty()) {
		c.output = a.out;
	}
	c.validate();
	return c;
}

void check_columns(const config::RunConfig &c, const timeseries::TimeFrame &frame) {
	if (!frame.has(c.response)) {
		throw ConfigError("cli", "response column '" + c.response + "' is not in " + c.data.string());
	}
	for (const auto &col : c.columns) {
		if (!frame.has(col)) {
			throw ConfigError("cli", "column '" + col + "' is not in " + c.data.string());
		}
	}
}

nlohmann::json run_record(const config::RunConfig &c) {
	auto j = config::to_json(c);
	for (const char *key : {"data", "schema", "output", "seed"}) {
		j.erase(key);
	}
	return j;
}

void cmd_train(const ConfigArgs &a) {
	const auto c = resolve_config(a);
	const auto frame = load_frame(c.data, c.schema);
	check_columns(c, frame);
	const auto forecaster = ensemble::build_compound(frame, c.response, c.kind, config::compound_options(c));
	ensemble::save(forecaster, c.output);

	auto evaluation = ensemble::evaluation_json(forecaster);
	evaluation["config_hash"] = config::config_hash(c);
	evaluation["seed"] = c.seed;
	evaluation["config"] = run_record(c);
	io::write_file_atomic(c.output / "evaluation.json", evaluation.dump(2) + "\n");
	io::write_file_atomic(c.output / "config.json", config::to_json(c).dump(2) + "\n");
	log::info("cli", "model written to " + c.output.string());
}

// evaluate ------------------------------------------------------------------

struct EvaluateArgs {
	std::string model;
	std::string data;
	std::string schema;
	std::string from;
	std::string to;
	std::size_t origins = 672;
	std::string out;
};

void cmd_evaluate(const EvaluateArgs &a) {
	const auto forecaster = ensemble::load(a.model);
	const auto frame = load_frame(a.data, a.schema);
	if (!frame.has(forecaster.response)) {
		throw DataError("cli", "response column '" + forecaster.response + "' is not in " + a.data);
	}
	std::size_t first = 0;
	std::size_t last = 0;
	if (!a.from.empty() && !a.to.empty()) {
		first = row_at(frame, a.from);
		last = row_at(frame, a.to);
	} else {
		const auto end = last_observed(frame, forecaster.response);
		const auto hmax = static_cast<std::size_t>(forecaster.horizons.back());
		if (!end || *end < hmax + a.origins) {
			throw DataError("cli", "not enough observed rows for " + std::to_string(a.origins) + " origins");
		}
		last = *end - hmax;
		first = last + 1 - a.origins;
	}
	if (last < first) {
		throw ConfigError("cli", "--from is after --to");
	}
	std::vector<std::size_t> origins(last - first + 1);
	for (std::size_t i = 0; i < origins.size(); ++i) {
		origins[i] = first + i;
	}
	const auto scores = ensemble::backtest(forecaster, frame, origins);

	nlohmann::json j{{"response", forecaster.response},
	                 {"kind", ensemble::to_string(forecaster.kind)},
	                 {"origins",
	                  {{"from", timeseries::format_timestamp(frame.stamp(first))},
	                   {"to", timeseries::format_timestamp(frame.stamp(last))},
	                   {"count", origins.size()}}},
	                 {"horizons", ensemble::to_json(scores)}};
	const auto trained = fs::path(a.model) / "evaluation.json";
	if (fs::exists(trained)) {
		const auto t = nlohmann::json::parse(io::read_file(trained), nullptr, false);
		if (t.is_object() && t.contains("config_hash")) {
			j["config_hash"] = t.at("config_hash");
			j["seed"] = t.at("seed");
		}
	}
	emit(a.out, j.dump(2) + "\n");
}

// forecast ------------------------------------------------------------------

struct ForecastArgs {
	std::string model;
	std::string data;
	std::string schema;
	std::string at;
	std::string out;
};

void cmd_forecast(const ForecastArgs &a) {
	const auto forecaster = ensemble::load(a.model);
	const auto frame = load_frame(a.data, a.schema);
	if (!frame.has(forecaster.response)) {
		throw DataError("cli", "response column '" + forecaster.response + "' is not in " + a.data);
	}
	std::size_t origin = 0;
	if (a.at.empty()) {
		const auto last = last_observed(frame, forecaster.response);
		if (!last) {
			throw DataError("cli", "the response is never observed");
		}
		origin = *last;
	} else {
		origin = row_at(frame, a.at);
	}
	const auto rows = ensemble::forecast_24h(forecaster, frame, origin);
	emit(a.out, ensemble::forecast_csv(rows));
}

// report --------------------------------------------------------------------

struct ReportArgs {
	std::vector<std::string> files;
	std::string out;
	std::string csv;
};

void cmd_report(const ReportArgs &a) {
	std::vector<report::Row> rows;
	for (const auto &file : a.files) {
		nlohmann::json j;
		try {
			j = nlohmann::json::parse(io::read_file(file));
		} catch (const nlohmann::json::exception &e) {
			throw DataError("report", "malformed " + file + ": " + e.what());
		}
		std::string label;
		if (a.files.size() > 1) {
			label = j.value("response", std::string("?")) + "/" + j.value("kind", std::string("?"));
		}
		try {
			const auto r = report::rows(j, label);
			rows.insert(rows.end(), r.begin(), r.end());
		} catch (const DataError &e) {
			throw DataError("report", file + ": " + e.what());
		}
	}
	emit(a.out, report::to_text(rows));
	if (!a.csv.empty()) {
		io::write_file_atomic(a.csv, report::to_csv(rows));
	}
}

int run(int argc, char **argv) {
	CLI::App app{"Hourly emission-intensity forecasting with compound linear/ARIMA models"};
	app.require_subcommand(1);
	int verbosity = 0;
	app.add_flag("-v,--verbose", verbosity, "More logging (-vv for debug)");

	SynthArgs synth_args;
	auto *synth = app.add_subcommand("synth", "Generate a synthetic data set with known ground truth");
	synth->add_option("--spec", synth_args.spec, "Synthetic spec JSON (defaults otherwise)")->check(CLI::ExistingFile);
	synth->add_option("--out", synth_args.out, "Output directory")->required();
	synth->add_option("--seed", synth_args.seed, "Root seed (overrides GRIDCAST_SEED and the spec)");
	synth->add_option("--hours", synth_args.hours, "Number of observed hours");

	auto add_config = [](CLI::App *cmd, ConfigArgs &args) {
		cmd->add_option("--config", args.config, "Run configuration JSON")->check(CLI::ExistingFile);
		cmd->add_option("--set", args.sets, "Override a configuration key (key=value), repeatable");
		cmd->add_option("--data", args.data, "Data CSV (overrides the config)");
		cmd->add_option("--schema", args.schema, "Schema JSON (overrides the config)");
		cmd->add_option("--out", args.out, "Model directory (overrides the config)");
	};
	ConfigArgs train_args;
	auto *train = app.add_subcommand("train", "Fit the compound forecaster and write the model directory");
	add_config(train, train_args);

	EvaluateArgs eval_args;
	auto *evaluate = app.add_subcommand("evaluate", "Backtest a trained model: per-horizon RMSE and coverage");
	evaluate->add_option("--model", eval_args.model, "Model directory")->required();
	evaluate->add_option("--data", eval_args.data, "Data CSV")->required();
	evaluate->add_option("--schema", eval_args.schema, "Schema JSON")->required();
	evaluate->add_option("--from", eval_args.from, "First origin (ISO timestamp)");
	evaluate->add_option("--to", eval_args.to, "Last origin (ISO timestamp)");
	evaluate->add_option("--origins", eval_args.origins, "Number of trailing origins when --from/--to are absent");
	evaluate->add_option("--out", eval_args.out, "Output JSON (stdout when absent)");

	ForecastArgs fc_args;
	auto *forecast = app.add_subcommand("forecast", "Write the 24-hour forecast CSV from an origin");
	forecast->add_option("--model", fc_args.model, "Model directory")->required();
	forecast->add_option("--data", fc_args.data, "Data CSV")->required();
	forecast->add_option("--schema", fc_args.schema, "Schema JSON")->required();
	forecast->add_option("--at", fc_args.at, "Origin (ISO timestamp); default: last observed response");
	forecast->add_option("--out", fc_args.out, "Output CSV (stdout when absent)");

	ReportArgs report_args;
	auto *rep = app.add_subcommand("report", "Summarize evaluation JSONs as a table");
	rep->add_option("files", report_args.files, "evaluation.json files")->required();
	rep->add_option("--out", report_args.out, "Text table (stdout when absent)");
	rep->add_option("--csv", report_args.csv, "Also write the table as CSV");

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		const int code = app.exit(e);
		return code == 0 ? 0 : kExitConfig;
	}
	log::set_level(verbosity >= 2 ? log::Level::debug : verbosity == 1 ? log::Level::info : log::Level::warn);

	if (synth->parsed()) {
		cmd_synth(synth_args);
	} else if (train->parsed()) {
		cmd_train(train_args);
	} else if (evaluate->parsed()) {
		cmd_evaluate(eval_args);
	} else if (forecast->parsed()) {
		cmd_forecast(fc_args);
	} else if (rep->parsed()) {
		cmd_report(report_args);
	}
	return 0;
}

} // namespace

int main(int argc, char **argv) {
	try {
		return run(argc, argv);
	} catch (const ConfigError &e) {
		std::cerr << "gridcast: configuration error: " << e.what() << "\n";
		return kExitConfig;
	} catch (const DataError &e) {
		std::cerr << "gridcast: data error: " << e.what() << "\n";
		return kExitData;
	} catch (const NumericalError &e) {
		std::cerr << "gridcast: numerical failure: " << e.what() << "\n";
		return kExitNumerical;
	} catch (const std::exception &e) {
		std::cerr << "gridcast: " << e.what() << "\n";
		return 1;
	}
}

// chronocast command-line front end. Every subcommand delegates to the library.

#include "chronocast/checkpoint.hpp"
#include "chronocast/data.hpp"
#include "chronocast/error.hpp"
#include "chronocast/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace chronocast;

namespace {

struct UsageError : std::invalid_argument {
	using std::invalid_argument::invalid_argument;
};

struct Options {
	std::string input;
	std::string format = "carbon-monitor";
	std::string config;
	std::vector<std::string> models;
	std::optional<std::uint64_t> seed;
	std::string out = "chronocast-out";
	bool paper_config = false;
	std::string profile = "full";
	std::string scale = "both";
	std::string checkpoint;
	std::size_t horizon = 92;
	std::size_t window = 3;
	std::string first;
	std::string last;
	std::string country;
};

InputFormat input_format(const Options &o) {
	const auto f = parse_input_format(o.format);
	if (!f) {
		throw UsageError("--format must be carbon-monitor or tidy");
	}
	return *f;
}

std::optional<DateRange> date_range(const Options &o) {
	if (o.first.empty() && o.last.empty()) {
		return std::nullopt;
	}
	const auto a = parse_iso_date(o.first);
	const auto b = parse_iso_date(o.last);
	if (!a || !b) {
		throw UsageError("--first and --last must both be ISO dates (YYYY-MM-DD)");
	}
	return DateRange{*a, *b};
}

TimeSeries load_input(const Options &o) {
	if (o.input.empty()) {
		throw UsageError("--input is required");
	}
	const InputFormat fmt = input_format(o);
	const auto range = date_range(o);
	if (fmt == InputFormat::CarbonMonitor && (range || !o.country.empty())) {
		std::ifstream in(o.input);
		if (!in) {
			throw DataError("cannot open input " + o.input);
		}
		return ingest_carbon_monitor(in, range, o.country.empty() ? std::nullopt : std::optional(o.country));
	}
	return load_series(o.input, fmt);
}

std::uint64_t resolve_seed(const Options &o, std::uint64_t config_seed) {
	if (o.seed) {
		return *o.seed;
	}
	if (const char *env = std::getenv("CHRONOCAST_SEED"); env && *env) {
		try {
			std::size_t used = 0;
			const auto v = std::stoull(env, &used);
			if (used != std::string(env).size()) {
				throw std::invalid_argument(env);
			}
			return v;
		} catch (const std::exception &) {
			throw UsageError(std::string("CHRONOCAST_SEED is not a non-negative integer: ") + env);
		}
	}
	return config_seed;
}

harness::ExperimentConfig experiment(const Options &o) {
	harness::ExperimentConfig cfg;
	if (!o.config.empty()) {
		cfg = harness::load_experiment(o.config);
		if (!o.input.empty()) {
			cfg.input = o.input;
			cfg.format = input_format(o);
		}
	} else {
		if (o.input.empty()) {
			throw UsageError("either --config or --input is required");
		}
		cfg = harness::default_experiment(o.input, input_format(o));
		cfg.window_length = o.window;
	}
	if (const auto r = date_range(o)) {
		cfg.date_range = r;
	}
	if (!o.country.empty()) {
		cfg.country = o.country;
	}
	if (!o.models.empty()) {
		std::vector<harness::ModelSpec> chosen;
		for (const auto &name : o.models) {
			const auto kind = parse_model_kind(name);
			if (!kind) {
				throw UsageError("unknown model '" + name + "'");
			}
			bool found = false;
			for (const auto &spec : cfg.models) {
				if (harness::kind_of(spec.config) == *kind) {
					chosen.push_back(spec);
					found = true;
				}
			}
			if (!found) {
				chosen.push_back(harness::default_spec(*kind));
			}
		}
		cfg.models = std::move(chosen);
	}
	if (o.paper_config) {
		harness::apply_paper_config(cfg);
	}
	harness::apply_profile(cfg, o.profile == "ci" ? harness::Profile::Ci : harness::Profile::Full);
	cfg.seed = resolve_seed(o, cfg.seed);
	if (o.scale == "normalized") {
		cfg.scales = {Scale::Normalized};
	} else if (o.scale == "physical") {
		cfg.scales = {Scale::Physical};
	} else {
		cfg.scales = {Scale::Normalized, Scale::Physical};
	}
	cfg.validate();
	return cfg;
}

std::string cell(std::optional<double> v, const char *fmt) {
	if (!v) {
		return "n/a";
	}
	char buf[48];
	std::snprintf(buf, sizeof buf, fmt, *v);
	return buf;
}

void print_table(const harness::ComparisonTable &table, const harness::ExperimentConfig &cfg) {
	for (Scale s : cfg.scales) {
		std::printf("\n%s scale (test split)\n", std::string(to_string(s)).c_str());
		std::printf("%-8s %-17s %12s %10s %10s %11s %9s\n", "model", "mode", "MSE", "RMSE", "MAE", "MAPE%", "R2");
		for (const auto &r : table.results) {
			const Accuracy &a = r.at(s);
			std::printf("%-8s %-17s %12.4e %10.4f %10.4f %11s %9s\n", std::string(to_string(r.kind)).c_str(),
			            r.forecast_mode.c_str(), a.mse, a.rmse, a.mae, cell(a.mape_percent, "%.4f").c_str(),
			            cell(a.r2, "%.4f").c_str());
		}
		if (const auto w = table.winners.find(s); w != table.winners.end()) {
			std::printf("overall winner: %s\n", w->second.overall.c_str());
		}
	}
	for (const auto &f : table.failures) {
		std::fprintf(stderr, "model %s failed: %s\n", std::string(to_string(f.kind)).c_str(), f.message.c_str());
	}
}

int cmd_stats(const Options &o) {
	const TimeSeries series = load_input(o);
	const DescriptiveStats d = describe(series);
	std::printf("period             %s .. %s\n", format_iso(series.first_date()).c_str(),
	            format_iso(series.last_date()).c_str());
	std::printf("count              %zu\n", d.count);
	std::printf("maximum            %.4f\n", d.maximum);
	std::printf("minimum            %.4f\n", d.minimum);
	std::printf("mean               %.4f\n", d.mean);
	std::printf("median             %.4f\n", d.median);
	std::printf("range              %.4f\n", d.range);
	std::printf("skewness           %.4f\n", d.skewness);
	std::printf("kurtosis           %.4f\n", d.kurtosis);
	std::printf("standard deviation %.4f\n", d.standard_deviation);
	std::printf("standard error     %.4f\n", d.standard_error);
	std::printf("total              %.4f\n", d.total);
	return 0;
}

int cmd_prepare(const Options &o) {
	const PreparedData data = window_and_split(load_input(o), o.window);
	fs::create_directories(o.out);
	const fs::path path = fs::path(o.out) / "prepared.csv";
	std::ofstream f(path);
	if (!f) {
		throw DataError("cannot write " + path.string());
	}
	f << "date,value,normalized,split\n";
	for (std::size_t i = 0; i < data.dates.size(); ++i) {
		const char *split = "input";
		if (i >= data.window_length()) {
			const std::size_t s = i - data.window_length();
			split = s < data.train.end ? "train" : s < data.validation.end ? "validation" : "test";
		}
		char buf[96];
		std::snprintf(buf, sizeof buf, "%.17g,%.17g,", data.physical[i], data.normalized[i]);
		f << format_iso(data.dates[i]) << ',' << buf << split << '\n';
	}
	std::printf("samples %zu (train %zu, validation %zu, test %zu), window %zu\n", data.samples.count(),
	            data.train.size(), data.validation.size(), data.test.size(), data.window_length());
	std::printf("normalizer min %.6f max %.6f\n", data.normalizer.train_min(), data.normalizer.train_max());
	std::printf("wrote %s\n", path.string().c_str());
	return 0;
}

int run_and_write(const harness::ExperimentConfig &cfg, const Options &o) {
	const auto table = harness::run_experiment(cfg);
	const auto paths = harness::write_outputs(table, cfg, o.out);
	print_table(table, cfg);
	std::printf("\nwrote %s, %s", paths.comparison_json.string().c_str(), paths.comparison_csv.string().c_str());
	for (const auto &p : paths.checkpoints) {
		std::printf(", %s", p.filename().string().c_str());
	}
	std::printf("\n");
	if (table.results.empty()) {
		throw ModelError("every model failed");
	}
	return 0;
}

int cmd_train(const Options &o) {
	if (o.models.empty()) {
		throw UsageError("train needs --model");
	}
	return run_and_write(experiment(o), o);
}

int cmd_forecast(const Options &o) {
	if (o.checkpoint.empty()) {
		throw UsageError("forecast needs --checkpoint");
	}
	if (o.horizon < 1) {
		throw UsageError("--horizon must be >= 1");
	}
	const TrainedModel model = load_checkpoint(o.checkpoint);
	const auto values = forecast_future(model, o.horizon);
	fs::create_directories(o.out);
	const fs::path path = fs::path(o.out) / "forecast.csv";
	std::ofstream f(path);
	if (!f) {
		throw DataError("cannot write " + path.string());
	}
	harness::write_forecast_csv(f, values);
	std::printf("%s forecast, %zu days: %s .. %s (%.4f .. %.4f)\nwrote %s\n", std::string(to_string(model.kind)).c_str(),
	            values.size(), format_iso(values.front().date).c_str(), format_iso(values.back().date).c_str(),
	            values.front().value, values.back().value, path.string().c_str());
	return 0;
}

} // namespace

int main(int argc, char **argv) {
	CLI::App app{"chronocast: daily emissions forecasting benchmark"};
	app.require_subcommand(1, 1);
	Options o;

	auto add_input = [&](CLI::App *c) {
		c->add_option("--input", o.input, "Input CSV");
		c->add_option("--format", o.format, "carbon-monitor or tidy")->check(CLI::IsMember({"carbon-monitor", "tidy"}));
		c->add_option("--first", o.first, "First date to keep (YYYY-MM-DD)");
		c->add_option("--last", o.last, "Last date to keep (YYYY-MM-DD)");
		c->add_option("--country", o.country, "Country filter for Carbon Monitor files");
	};
	auto add_experiment = [&](CLI::App *c) {
		add_input(c);
		c->add_option("--config", o.config, "Experiment config (JSON)");
		c->add_option("--seed", o.seed, "Master seed (overrides CHRONOCAST_SEED and the config)");
		c->add_option("--out", o.out, "Output directory");
		c->add_flag("--paper-config", o.paper_config, "Use the reference hyperparameters, no grid search");
		c->add_option("--profile", o.profile, "ci caps training at 300 epochs")->check(CLI::IsMember({"ci", "full"}));
		c->add_option("--scale", o.scale, "normalized, physical or both")
		    ->check(CLI::IsMember({"normalized", "physical", "both"}));
		c->add_option("--window", o.window, "Window length when no config is given")->check(CLI::PositiveNumber);
	};

	auto *stats = app.add_subcommand("stats", "Descriptive statistics of the daily series");
	add_input(stats);
	auto *prep = app.add_subcommand("prepare", "Normalize, window and split; writes prepared.csv");
	add_input(prep);
	prep->add_option("--window", o.window, "Window length")->check(CLI::PositiveNumber);
	prep->add_option("--out", o.out, "Output directory");
	auto *train = app.add_subcommand("train", "Grid-search and fit selected models; writes checkpoints");
	add_experiment(train);
	train->add_option("--model", o.models, "Model(s): gm11 arima sarimax ann rf lstm")->required();
	auto *evaluate = app.add_subcommand("evaluate", "Fit selected models and report test-split accuracy");
	add_experiment(evaluate);
	evaluate->add_option("--model", o.models, "Model(s); default all");
	auto *compare = app.add_subcommand("compare", "Run all configured models and write the comparison");
	add_experiment(compare);
	compare->add_option("--model", o.models, "Restrict to these models");
	auto *forecast = app.add_subcommand("forecast", "Forecast from a checkpoint; writes forecast.csv");
	forecast->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
	forecast->add_option("--horizon", o.horizon, "Days to forecast");
	forecast->add_option("--out", o.out, "Output directory");

	try {
		app.parse(argc, argv);
	} catch (const CLI::CallForHelp &e) {
		return app.exit(e);
	} catch (const CLI::CallForAllHelp &e) {
		return app.exit(e);
	} catch (const CLI::ParseError &e) {
		app.exit(e);
		return 1;
	}

	try {
		if (*stats) {
			return cmd_stats(o);
		}
		if (*prep) {
			return cmd_prepare(o);
		}
		if (*train) {
			return cmd_train(o);
		}
		if (*evaluate || *compare) {
			return run_and_write(experiment(o), o);
		}
		return cmd_forecast(o);
	} catch (const UsageError &e) {
		std::fprintf(stderr, "usage error: %s\n", e.what());
		return 1;
	} catch (const std::invalid_argument &e) {
		std::fprintf(stderr, "usage error: %s\n", e.what());
		return 1;
	} catch (const DataError &e) {
		std::fprintf(stderr, "data error: %s\n", e.what());
		return 2;
	} catch (const fs::filesystem_error &e) {
		std::fprintf(stderr, "data error: %s\n", e.what());
		return 2;
	} catch (const nlohmann::json::exception &e) {
		std::fprintf(stderr, "usage error: config: %s\n", e.what());
		return 1;
	} catch (const ModelError &e) {
		std::fprintf(stderr, "model error: %s\n", e.what());
		return 3;
	} catch (const std::exception &e) {
		std::fprintf(stderr, "model error: %s\n", e.what());
		return 3;
	}
}

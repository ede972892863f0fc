#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chronocast/checkpoint.hpp"
#include "chronocast/error.hpp"
#include "chronocast/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace chronocast;
using namespace chronocast::harness;
using nlohmann::json;

namespace {

const PreparedData &fixture() {
	static const PreparedData data = prepare(default_experiment(CHRONOCAST_FIXTURE, InputFormat::CarbonMonitor));
	return data;
}

ModelSpec quick(ModelKind kind) {
	ModelSpec s = paper_spec(kind);
	if (auto *a = std::get_if<AnnConfig>(&s.config)) {
		a->train.epochs = 20;
	}
	if (auto *l = std::get_if<LstmModelConfig>(&s.config)) {
		l->hidden = {8};
		l->train.epochs = 3;
	}
	if (auto *r = std::get_if<RfConfig>(&s.config)) {
		r->forest.n_estimators = 10;
	}
	return s;
}

ExperimentConfig quick_experiment(std::vector<ModelKind> kinds) {
	ExperimentConfig cfg = default_experiment(CHRONOCAST_FIXTURE, InputFormat::CarbonMonitor);
	cfg.models.clear();
	for (ModelKind k : kinds) {
		cfg.models.push_back(quick(k));
	}
	return cfg;
}

// Positive trending series with a zero placed inside the training range.
PreparedData series_with_zero() {
	std::vector<Date> dates;
	std::vector<double> values;
	std::mt19937_64 rng(1);
	std::normal_distribution<double> z(0, 0.3);
	for (int k = 0; k < 200; ++k) {
		dates.push_back(add_days(*parse_iso_date("2021-01-01"), k));
		values.push_back(10.0 + 0.01 * k + z(rng));
	}
	values[50] = 0.0;
	return window_and_split(TimeSeries(dates, values), 3);
}

ModelResult result_with(ModelKind kind, double mse, double mae, double mape, double r2) {
	ModelResult r{};
	r.kind = kind;
	r.normalized = Accuracy{mse, std::sqrt(mse), mae, mape, r2, 10};
	r.physical = r.normalized;
	return r;
}

} // namespace

TEST_CASE("grid expansion order") {
	ModelSpec s{ArimaConfig{}, {{"p", {0, 1}}, {"q", {2, 3, 4}}}};
	const auto cfgs = expand_grid(s);
	REQUIRE(cfgs.size() == 6);
	const auto &first = std::get<ArimaConfig>(cfgs[0]).order;
	const auto &second = std::get<ArimaConfig>(cfgs[1]).order;
	const auto &last = std::get<ArimaConfig>(cfgs[5]).order;
	CHECK(first.p == 0);
	CHECK(first.q == 2);
	CHECK(second.p == 0);
	CHECK(second.q == 3);
	CHECK(last.p == 1);
	CHECK(last.q == 4);
	CHECK(expand_grid(ModelSpec{GmConfig{}, {}}).size() == 1);
	CHECK(expand_grid(default_spec(ModelKind::Arima)).size() == 48);
	CHECK_THROWS(expand_grid(ModelSpec{ArimaConfig{}, {{"bogus", {1}}}}));
}

TEST_CASE("apply_param") {
	ModelConfig rf = RfConfig{};
	apply_param(rf, "max_depth", nullptr);
	CHECK_FALSE(std::get<RfConfig>(rf).forest.tree.max_depth);
	apply_param(rf, "max_depth", 7);
	CHECK(std::get<RfConfig>(rf).forest.tree.max_depth == 7u);
	ModelConfig l = LstmModelConfig{};
	apply_param(l, "hidden", json::array({16, 8}));
	CHECK(std::get<LstmModelConfig>(l).hidden == std::vector<std::size_t>{16, 8});
	apply_param(l, "hidden", 32);
	CHECK(std::get<LstmModelConfig>(l).hidden == std::vector<std::size_t>{32, 32});
	ModelConfig a = AnnConfig{};
	CHECK_THROWS_AS(apply_param(a, "hidden", "twelve"), std::invalid_argument);
	CHECK_THROWS_AS(apply_param(a, "depth", 3), std::invalid_argument);
}

TEST_CASE("reference configurations") {
	const auto ann = std::get<AnnConfig>(paper_config(ModelKind::Ann));
	CHECK(ann.hidden == 12);
	CHECK(ann.train.epochs == 3000);
	CHECK(ann.train.batch_size == 32);
	const auto lstm = std::get<LstmModelConfig>(paper_config(ModelKind::Lstm));
	CHECK(lstm.hidden == std::vector<std::size_t>{50, 50});
	CHECK(lstm.train.epochs == 3000);
	const auto rf = std::get<RfConfig>(paper_config(ModelKind::Rf));
	CHECK(rf.forest.n_estimators == 100);
	CHECK(rf.forest.tree.max_depth == 20u);
	CHECK(rf.forest.random_state == 2);
	const auto arima = std::get<ArimaConfig>(paper_config(ModelKind::Arima));
	CHECK(arima.order == boxjenkins::ArimaOrder{0, 1, 3, 0, 0, 0, 0});

	ExperimentConfig cfg = default_experiment("x.csv", InputFormat::CarbonMonitor);
	apply_paper_config(cfg);
	for (const auto &m : cfg.models) {
		CHECK(m.grid.empty());
	}
	apply_profile(cfg, Profile::Ci);
	for (const auto &m : cfg.models) {
		if (const auto *a = std::get_if<AnnConfig>(&m.config)) {
			CHECK(a->train.epochs == kCiEpochs);
		}
	}
}

TEST_CASE("singleton grid") {
	const auto g = grid_search(ModelSpec{GmConfig{}, {}}, fixture(), 42);
	CHECK(g.outcomes.size() == 1);
	REQUIRE(g.outcomes[0].validation_mse);
	CHECK(*g.outcomes[0].validation_mse == g.best.validation_mse);
}

TEST_CASE("grid search picks the lowest validation error and keeps the first of equals") {
	const auto g = grid_search(ModelSpec{ArimaConfig{}, {{"d", {0, 1}}, {"q", {0, 1}}}}, fixture(), 42);
	REQUIRE(g.outcomes.size() == 4);
	double lowest = INFINITY;
	for (const auto &o : g.outcomes) {
		REQUIRE(o.validation_mse);
		lowest = std::min(lowest, *o.validation_mse);
	}
	CHECK(g.best.validation_mse == lowest);

	// s = 0 and s = 7 with no seasonal terms describe the same model
	const auto tie = grid_search(ModelSpec{SarimaxConfig{}, {{"s", {7, 0}}}}, fixture(), 42);
	REQUIRE(tie.outcomes.size() == 2);
	CHECK(*tie.outcomes[0].validation_mse == *tie.outcomes[1].validation_mse);
	CHECK(std::get<SarimaxConfig>(tie.best.config).order.s == 7);
}

TEST_CASE("a grid with no working candidate reports every failure") {
	try {
		grid_search(ModelSpec{GmConfig{}, {{"tail", {150, 160}}}}, series_with_zero(), 42);
		FAIL("expected ModelError");
	} catch (const ModelError &e) {
		const std::string msg = e.what();
		CHECK(msg.find("all 2 candidates") != std::string::npos);
		CHECK(msg.find("\"tail\":150") != std::string::npos);
		CHECK(msg.find("\"tail\":160") != std::string::npos);
	}
}

TEST_CASE("single-model run and table consistency") {
	const auto cfg = quick_experiment({ModelKind::Gm11, ModelKind::Arima, ModelKind::Ann, ModelKind::Rf});
	const auto table = run_experiment(cfg, fixture());
	CHECK(table.failures.empty());
	REQUIRE(table.results.size() == 4);
	for (const auto &r : table.results) {
		REQUIRE(r.trace.size() == fixture().test.size());
		std::vector<double> a, p, an, pn;
		for (const auto &t : r.trace) {
			a.push_back(t.actual);
			p.push_back(t.predicted);
			an.push_back(t.actual_normalized);
			pn.push_back(t.predicted_normalized);
			CHECK(std::isfinite(t.predicted));
		}
		const auto phys = evaluate(a, p);
		const auto norm = evaluate(an, pn);
		CHECK(r.physical.mse == phys.mse);
		CHECK(r.physical.mape_percent == phys.mape_percent);
		CHECK(r.normalized.mse == norm.mse);
		CHECK(r.normalized.r2 == norm.r2);
		CHECK(r.trace.front().date == fixture().target_date(fixture().test.begin));
		CHECK(r.trace.back().date == *parse_iso_date("2022-09-30"));
	}
	CHECK(table.find(ModelKind::Gm11)->forecast_mode == "fixed-origin");
	CHECK(table.find(ModelKind::Ann)->forecast_mode == "one-step");
	CHECK(table.find(ModelKind::Lstm) == nullptr);

	const auto gm_only = run_experiment(quick_experiment({ModelKind::Gm11}), fixture());
	CHECK(gm_only.results.size() == 1);
	CHECK(gm_only.winners.at(Scale::Normalized).overall == "gm11");
}

TEST_CASE("future forecasts") {
	const auto table = run_experiment(quick_experiment({ModelKind::Gm11, ModelKind::Ann, ModelKind::Rf}), fixture());
	for (const auto &r : table.results) {
		const auto fc = forecast_future(r.checkpoint, 92);
		REQUIRE(fc.size() == 92);
		CHECK(fc.front().date == *parse_iso_date("2022-10-01"));
		CHECK(fc.back().date == *parse_iso_date("2022-12-31"));
		for (std::size_t h = 1; h < fc.size(); ++h) {
			CHECK(fc[h].date == add_days(fc[h - 1].date, 1));
		}
	}
	const auto &ann = table.find(ModelKind::Ann)->checkpoint;
	const auto &data = fixture();
	const std::vector<double> last(data.normalized.end() - 3, data.normalized.end());
	CHECK(ann.context.last_window == last);
	CHECK(forecast_normalized(ann, 1)[0] == std::get<neural::DenseNet>(ann.model).predict(last));

	const auto &rf = table.find(ModelKind::Rf)->checkpoint;
	const auto &f = std::get<forest::ForestModel>(rf.model);
	for (double v : forecast_normalized(rf, 92)) {
		CHECK(v >= f.target_min);
		CHECK(v <= f.target_max);
	}
}

TEST_CASE("rolling and fixed-origin agree on the first test step") {
	auto cfg = quick_experiment({ModelKind::Arima});
	const auto fixed = run_experiment(cfg, fixture());
	cfg.statistical_mode = ForecastMode::Rolling;
	const auto rolling = run_experiment(cfg, fixture());
	const auto &a = fixed.results.at(0).trace;
	const auto &b = rolling.results.at(0).trace;
	CHECK(a.front().predicted_normalized == b.front().predicted_normalized);
	CHECK(rolling.results.at(0).forecast_mode == "rolling-one-step");
	CHECK(b.back().predicted_normalized != a.back().predicted_normalized);
}

TEST_CASE("a failing model does not stop the others") {
	ExperimentConfig cfg = quick_experiment({ModelKind::Gm11, ModelKind::Arima});
	const auto table = run_experiment(cfg, series_with_zero());
	REQUIRE(table.failures.size() == 1);
	CHECK(table.failures[0].kind == ModelKind::Gm11);
	REQUIRE(table.results.size() == 1);
	CHECK(table.results[0].kind == ModelKind::Arima);
}

TEST_CASE("winner selection") {
	std::vector<ModelResult> rows{result_with(ModelKind::Gm11, 0.5, 0.4, 9.0, 0.1),
	                              result_with(ModelKind::Rf, 0.2, 0.3, 8.0, 0.6),
	                              result_with(ModelKind::Ann, 0.3, 0.1, 3.0, 0.4)};
	auto w = pick_winners(rows, Scale::Normalized);
	CHECK(w.per_criterion.at("mse") == "rf");
	CHECK(w.per_criterion.at("rmse") == "rf");
	CHECK(w.per_criterion.at("r2") == "rf");
	CHECK(w.per_criterion.at("mae") == "ann");
	CHECK(w.per_criterion.at("mape_percent") == "ann");
	CHECK(w.overall == "rf");

	// 2-2 split with one undefined MAPE: the lower MSE decides
	rows = {result_with(ModelKind::Gm11, 0.2, 0.5, 5.0, 0.1), result_with(ModelKind::Lstm, 0.3, 0.1, 1.0, 0.9)};
	rows[1].normalized.mape_percent.reset();
	rows[0].normalized.rmse = 0.6;
	w = pick_winners(rows, Scale::Normalized);
	CHECK(w.per_criterion.count("mape_percent") == 1);
	CHECK(w.per_criterion.at("mape_percent") == "gm11");
	CHECK(w.per_criterion.at("rmse") == "lstm");
	CHECK(w.overall == "lstm");

	CHECK(pick_winners({}, Scale::Normalized).overall.empty());
}

TEST_CASE("experiment JSON") {
	const json j = {{"input", "data/cm.csv"},
	                {"format", "carbon-monitor"},
	                {"date_range", {{"first", "2020-01-01"}, {"last", "2021-12-31"}}},
	                {"country", "China"},
	                {"window_length", 4},
	                {"split", {{"train", 0.7}, {"validation", 0.15}, {"test", 0.15}}},
	                {"seed", 7},
	                {"statistical_forecast_mode", "rolling"},
	                {"scales", {"physical"}},
	                {"forecast_horizon", 30},
	                {"models",
	                 {"gm11",
	                  {{"model", "rf"}, {"params", {{"n_estimators", 50}}}, {"grid", {{"max_depth", {5, nullptr}}}}},
	                  {{"model", "lstm"}, {"grid", {{{"name", "hidden"}, {"values", {16, 32}}}}}}}}};
	const auto cfg = parse_experiment(j, "/base");
	CHECK(cfg.input == std::filesystem::path("/base/data/cm.csv"));
	CHECK(cfg.window_length == 4);
	CHECK(cfg.seed == 7);
	CHECK(cfg.statistical_mode == ForecastMode::Rolling);
	CHECK(cfg.scales == std::vector<Scale>{Scale::Physical});
	CHECK(cfg.forecast_horizon == 30);
	REQUIRE(cfg.date_range);
	CHECK(cfg.date_range->last == *parse_iso_date("2021-12-31"));
	REQUIRE(cfg.models.size() == 3);
	CHECK(kind_of(cfg.models[0].config) == ModelKind::Gm11);
	CHECK(std::get<RfConfig>(cfg.models[1].config).forest.n_estimators == 50);
	CHECK(expand_grid(cfg.models[1]).size() == 2);
	CHECK(expand_grid(cfg.models[2]).size() == 2);

	CHECK_THROWS(parse_experiment(json{{"input", "a.csv"}, {"colour", "red"}}));
	CHECK_THROWS(parse_experiment(json{{"input", "a.csv"}, {"models", {"xgboost"}}}));
	CHECK_THROWS(parse_experiment(json{{"input", "a.csv"}, {"split", {{"train", 0.9}, {"validation", 0.2}, {"test", 0.1}}}}));
	CHECK_THROWS(parse_experiment(json{{"input", "a.csv"}, {"models", {{{"model", "ann"}, {"params", {{"wings", 2}}}}}}}));

	const json back = to_json(cfg);
	CHECK(back["input"] == "cm.csv");
	CHECK(back["models"].size() == 3);
}

TEST_CASE("identical inputs give byte-identical comparison output") {
	const auto cfg = quick_experiment({ModelKind::Gm11, ModelKind::Arima, ModelKind::Ann, ModelKind::Rf, ModelKind::Lstm});
	const auto a = comparison_json(run_experiment(cfg, fixture()), cfg, "T").dump(2);
	const auto b = comparison_json(run_experiment(cfg, fixture()), cfg, "T").dump(2);
	CHECK(a == b);
	auto other = cfg;
	other.seed = 43;
	const auto c = comparison_json(run_experiment(other, fixture()), other, "T").dump(2);
	CHECK(a != c);
}

TEST_CASE("output files") {
	const auto dir = std::filesystem::temp_directory_path() / "chronocast_harness_out";
	std::filesystem::remove_all(dir);
	const auto cfg = quick_experiment({ModelKind::Gm11, ModelKind::Ann});
	const auto table = run_experiment(cfg, fixture());
	const auto paths = write_outputs(table, cfg, dir);
	CHECK(std::filesystem::exists(paths.comparison_json));
	CHECK(std::filesystem::exists(dir / "history_ann.csv"));
	CHECK_FALSE(std::filesystem::exists(dir / "history_gm11.csv"));
	REQUIRE(paths.forecast);
	std::ifstream f(*paths.forecast);
	std::string line;
	int rows = 0;
	std::getline(f, line);
	CHECK(line == "date,predicted");
	while (std::getline(f, line)) {
		++rows;
	}
	CHECK(rows == 92);
	std::ifstream j(paths.comparison_json);
	const json doc = json::parse(j);
	CHECK(doc["rows"].size() == 2);
	CHECK(doc["metadata"].contains("generated_at"));
	const auto reloaded = load_checkpoint(dir / "ann.ckpt");
	CHECK(forecast_normalized(reloaded, 5) == forecast_normalized(table.find(ModelKind::Ann)->checkpoint, 5));
	std::filesystem::remove_all(dir);
}

#include "chronocast/harness.hpp"

#include "chronocast/checkpoint.hpp"
#include "chronocast/error.hpp"
#include "chronocast/grey.hpp"
#include "chronocast/lstm.hpp"
#include "chronocast/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace chronocast::harness {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
	using Ts::operator()...;
};

std::uint64_t mix(std::uint64_t x) {
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, ModelKind kind, std::uint64_t stream) {
	return mix(mix(master) ^ (static_cast<std::uint64_t>(kind) << 8) ^ stream);
}

std::string num(double v) {
	char buf[40];
	std::snprintf(buf, sizeof buf, "%.17g", v);
	return buf;
}

std::size_t as_count(const json &v, const std::string &name, std::size_t min = 0) {
	if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min)) {
		throw std::invalid_argument("parameter '" + name + "' must be an integer >= " + std::to_string(min));
	}
	return v.get<std::size_t>();
}

int as_order(const json &v, const std::string &name) { return static_cast<int>(as_count(v, name)); }

bool as_bool(const json &v, const std::string &name) {
	if (!v.is_boolean()) {
		throw std::invalid_argument("parameter '" + name + "' must be true or false");
	}
	return v.get<bool>();
}

double as_positive(const json &v, const std::string &name) {
	if (!v.is_number() || !(v.get<double>() > 0)) {
		throw std::invalid_argument("parameter '" + name + "' must be a positive number");
	}
	return v.get<double>();
}

bool apply_train_param(neural::TrainConfig &t, const std::string &name, const json &value) {
	if (name == "epochs") {
		t.epochs = static_cast<int>(as_count(value, name, 1));
	} else if (name == "batch_size") {
		t.batch_size = as_count(value, name, 1);
	} else if (name == "learning_rate") {
		t.adam.learning_rate = as_positive(value, name);
	} else {
		return false;
	}
	return true;
}

void put_train(json &j, const neural::TrainConfig &t) {
	j["epochs"] = t.epochs;
	j["batch_size"] = t.batch_size;
	j["learning_rate"] = t.adam.learning_rate;
}

void put_order(json &j, const boxjenkins::ArimaOrder &o, bool seasonal) {
	j["p"] = o.p;
	j["d"] = o.d;
	j["q"] = o.q;
	if (seasonal) {
		j["P"] = o.P;
		j["D"] = o.D;
		j["Q"] = o.Q;
		j["s"] = o.s;
	}
}

bool apply_order(boxjenkins::ArimaOrder &o, const std::string &name, const json &value, bool seasonal) {
	static const std::pair<const char *, int boxjenkins::ArimaOrder::*> fields[] = {
	    {"p", &boxjenkins::ArimaOrder::p}, {"d", &boxjenkins::ArimaOrder::d}, {"q", &boxjenkins::ArimaOrder::q},
	    {"P", &boxjenkins::ArimaOrder::P}, {"D", &boxjenkins::ArimaOrder::D}, {"Q", &boxjenkins::ArimaOrder::Q},
	    {"s", &boxjenkins::ArimaOrder::s}};
	for (std::size_t k = 0; k < (seasonal ? 7u : 3u); ++k) {
		if (name == fields[k].first) {
			o.*fields[k].second = as_order(value, name);
			return true;
		}
	}
	return false;
}

json accuracy_json(const Accuracy &a) {
	json j;
	j["mse"] = a.mse;
	j["rmse"] = a.rmse;
	j["mae"] = a.mae;
	j["mape_percent"] = a.mape_percent ? json(*a.mape_percent) : json(nullptr);
	j["r2"] = a.r2 ? json(*a.r2) : json(nullptr);
	j["n"] = a.n;
	return j;
}

std::optional<double> criterion(const Accuracy &a, std::string_view name) {
	if (name == "mse") {
		return a.mse;
	}
	if (name == "rmse") {
		return a.rmse;
	}
	if (name == "mae") {
		return a.mae;
	}
	if (name == "mape_percent") {
		return a.mape_percent;
	}
	return a.r2;
}

json outcome_json(const CandidateOutcome &o) {
	json j;
	j["config"] = o.config;
	j["validation_mse"] = o.validation_mse ? json(*o.validation_mse) : json(nullptr);
	if (!o.error.empty()) {
		j["error"] = o.error;
	}
	return j;
}

ModelContext make_context(const PreparedData &data) {
	ModelContext ctx;
	ctx.normalizer = data.normalizer;
	ctx.window = data.window_length();
	ctx.last_date = data.dates.back();
	ctx.last_window.assign(data.normalized.end() - static_cast<std::ptrdiff_t>(ctx.window), data.normalized.end());
	return ctx;
}

std::span<const double> targets_of(const PreparedData &data, IndexRange r) {
	return std::span<const double>(data.samples.targets).subspan(r.begin, r.size());
}

struct Positions {
	std::size_t fit_end;     // raw values [0, fit_end) are the training range
	std::size_t test_start;  // series position of the first test target
	std::size_t n_val;
	std::size_t n_test;
};

Positions positions(const PreparedData &data) {
	return {data.target_position(data.train.end), data.target_position(data.test.begin), data.validation.size(),
	        data.test.size()};
}

Candidate fit_gm(const GmConfig &cfg, const PreparedData &data, ForecastMode mode) {
	const Positions pos = positions(data);
	const std::size_t len = cfg.tail ? std::min(*cfg.tail, pos.fit_end) : pos.fit_end;
	const std::span<const double> phys(data.physical);
	const grey::GreyModel m = grey::fit_gm11(phys.subspan(pos.fit_end - len, len));

	Candidate c{cfg, 0, {}, {}, {}, {}};
	if (pos.n_val > 0) {
		std::vector<double> pred;
		for (std::size_t h = 1; h <= pos.n_val; ++h) {
			pred.push_back(data.normalizer.normalize(grey::value_at(m, m.n_fit + h)));
		}
		c.validation_mse = neural::mean_squared_error(pred, targets_of(data, data.validation));
	} else {
		const auto fitted = grey::fitted_values(m);
		c.validation_mse = neural::mean_squared_error(data.normalizer.normalize(fitted),
		                                              std::span<const double>(data.normalized).subspan(pos.fit_end - len, len));
	}
	for (std::size_t k = 0; k < pos.n_test; ++k) {
		double v;
		if (mode == ForecastMode::FixedOrigin) {
			v = grey::value_at(m, m.n_fit + pos.n_val + k + 1);
		} else {
			const std::size_t end = pos.test_start + k;
			const grey::GreyModel r = grey::fit_gm11(phys.subspan(end - len, len));
			v = grey::value_at(r, r.n_fit + 1);
		}
		c.test_predictions_physical.push_back(v);
		c.test_predictions.push_back(data.normalizer.normalize(v));
	}
	c.checkpoint.kind = ModelKind::Gm11;
	c.checkpoint.model = m;
	c.checkpoint.context = make_context(data);
	c.checkpoint.steps_since_fit = data.physical.size() - pos.fit_end;
	c.checkpoint.validation_mse = c.validation_mse;
	return c;
}

Candidate fit_box_jenkins(const ModelConfig &config, const boxjenkins::ArimaOrder &order, bool exog, ModelKind kind,
                          const PreparedData &data, ForecastMode mode) {
	const Positions pos = positions(data);
	const std::span<const double> z(data.normalized);
	std::optional<Matrix> calendar;
	if (exog) {
		calendar = boxjenkins::default_calendar_exog(data.dates);
	}
	auto rows = [&](std::size_t begin, std::size_t end) -> std::optional<Matrix> {
		if (!calendar) {
			return std::nullopt;
		}
		Matrix m(end - begin, calendar->cols());
		for (std::size_t r = begin; r < end; ++r) {
			std::copy(calendar->row(r).begin(), calendar->row(r).end(), m.row(r - begin).begin());
		}
		return m;
	};
	auto ptr = [](const std::optional<Matrix> &m) { return m ? &*m : nullptr; };

	const auto x_fit = rows(0, pos.fit_end);
	boxjenkins::ArimaModel m = boxjenkins::fit(z.first(pos.fit_end), order, ptr(x_fit));

	Candidate c{config, 0, {}, {}, {}, {}};
	if (pos.n_val > 0) {
		const auto x_val = rows(pos.fit_end, pos.test_start);
		const auto pred = boxjenkins::forecast(m, pos.n_val, ptr(x_val));
		c.validation_mse = neural::mean_squared_error(pred, targets_of(data, data.validation));
		m = boxjenkins::filter(m, z.subspan(pos.fit_end, pos.n_val), ptr(x_val)).model;
	} else {
		c.validation_mse = m.residual_variance;
	}
	const auto x_test = rows(pos.test_start, z.size());
	const auto test_actual = z.subspan(pos.test_start, pos.n_test);
	auto advanced = boxjenkins::filter(m, test_actual, ptr(x_test));
	c.test_predictions = mode == ForecastMode::FixedOrigin ? boxjenkins::forecast(m, pos.n_test, ptr(x_test))
	                                                       : advanced.one_step;
	c.test_predictions_physical = data.normalizer.denormalize(c.test_predictions);
	c.checkpoint.kind = kind;
	c.checkpoint.model = std::move(advanced.model);
	c.checkpoint.context = make_context(data);
	c.checkpoint.calendar_exog = exog;
	c.checkpoint.validation_mse = c.validation_mse;
	return c;
}

template <typename Net>
Candidate fit_network(const ModelConfig &config, Net net, const neural::TrainConfig &train_cfg, ModelKind kind,
                      const PreparedData &data, std::uint64_t seed) {
	const auto train_set = neural::slice(data.samples, data.train);
	const auto val_set = neural::slice(data.samples, data.validation);
	const auto test_set = neural::slice(data.samples, data.test);
	neural::TrainConfig cfg = train_cfg;
	cfg.shuffle_seed = derive_seed(seed, kind, 1);
	const auto result = neural::train(net, train_set, val_set, cfg);

	Candidate c{config, result.best_validation_mse, neural::predict_rows(net, test_set.inputs), {}, {}, result.history};
	c.test_predictions_physical = data.normalizer.denormalize(c.test_predictions);
	c.checkpoint.kind = kind;
	c.checkpoint.seed = derive_seed(seed, kind, 0);
	c.checkpoint.epoch = result.best_epoch;
	c.checkpoint.validation_mse = result.best_validation_mse;
	c.checkpoint.context = make_context(data);
	c.checkpoint.model = std::move(net);
	return c;
}

Candidate fit_rf(const RfConfig &cfg, const PreparedData &data) {
	const auto train_set = neural::slice(data.samples, data.train);
	const auto val_set = neural::slice(data.samples, data.validation);
	const auto test_set = neural::slice(data.samples, data.test);
	forest::ForestModel model = forest::fit_forest(train_set.inputs, train_set.targets, cfg.forest);

	Candidate c{cfg, 0, neural::predict_rows(model, test_set.inputs), {}, {}, {}};
	if (val_set.size() > 0) {
		c.validation_mse = neural::mean_squared_error(neural::predict_rows(model, val_set.inputs), val_set.targets);
	} else {
		c.validation_mse = neural::mean_squared_error(neural::predict_rows(model, train_set.inputs), train_set.targets);
	}
	c.test_predictions_physical = data.normalizer.denormalize(c.test_predictions);
	c.checkpoint.kind = ModelKind::Rf;
	c.checkpoint.seed = cfg.forest.random_state;
	c.checkpoint.validation_mse = c.validation_mse;
	c.checkpoint.context = make_context(data);
	c.checkpoint.model = std::move(model);
	return c;
}

std::string mode_label(ModelKind kind, ForecastMode mode) {
	if (!is_statistical(kind)) {
		return "one-step";
	}
	return mode == ForecastMode::FixedOrigin ? "fixed-origin" : "rolling-one-step";
}

std::string describe(const json &config) { return config.dump(); }

} // namespace

ModelKind kind_of(const ModelConfig &config) {
	return std::visit(overloaded{
	                      [](const GmConfig &) { return ModelKind::Gm11; },
	                      [](const ArimaConfig &) { return ModelKind::Arima; },
	                      [](const SarimaxConfig &) { return ModelKind::Sarimax; },
	                      [](const AnnConfig &) { return ModelKind::Ann; },
	                      [](const RfConfig &) { return ModelKind::Rf; },
	                      [](const LstmModelConfig &) { return ModelKind::Lstm; },
	                  },
	                  config);
}

ModelConfig paper_config(ModelKind kind) {
	switch (kind) {
	case ModelKind::Gm11:
		return GmConfig{};
	case ModelKind::Arima:
		return ArimaConfig{};
	case ModelKind::Sarimax:
		return SarimaxConfig{};
	case ModelKind::Ann:
		return AnnConfig{};
	case ModelKind::Rf:
		return RfConfig{};
	case ModelKind::Lstm:
		return LstmModelConfig{};
	}
	return GmConfig{};
}

void apply_param(ModelConfig &config, const std::string &name, const json &value) {
	const bool known = std::visit(
	    overloaded{
	        [&](GmConfig &c) {
		        if (name != "tail") {
			        return false;
		        }
		        c.tail = value.is_null() ? std::nullopt : std::optional<std::size_t>(as_count(value, name, 4));
		        return true;
	        },
	        [&](ArimaConfig &c) { return apply_order(c.order, name, value, false); },
	        [&](SarimaxConfig &c) {
		        if (name == "exog") {
			        c.calendar_exog = as_bool(value, name);
			        return true;
		        }
		        return apply_order(c.order, name, value, true);
	        },
	        [&](AnnConfig &c) {
		        if (name == "hidden") {
			        c.hidden = as_count(value, name, 1);
			        return true;
		        }
		        return apply_train_param(c.train, name, value);
	        },
	        [&](RfConfig &c) {
		        auto &f = c.forest;
		        if (name == "max_depth") {
			        f.tree.max_depth = value.is_null() ? std::nullopt : std::optional<std::size_t>(as_count(value, name, 1));
		        } else if (name == "n_estimators") {
			        f.n_estimators = as_count(value, name, 1);
		        } else if (name == "m_try") {
			        f.tree.m_try = as_count(value, name);
		        } else if (name == "min_leaf") {
			        f.tree.min_leaf = as_count(value, name, 1);
		        } else if (name == "random_state") {
			        f.random_state = as_count(value, name);
		        } else {
			        return false;
		        }
		        return true;
	        },
	        [&](LstmModelConfig &c) {
		        if (name == "hidden") {
			        if (value.is_array()) {
				        std::vector<std::size_t> sizes;
				        for (const auto &v : value) {
					        sizes.push_back(as_count(v, name, 1));
				        }
				        if (sizes.empty()) {
					        throw std::invalid_argument("parameter 'hidden' needs at least one layer");
				        }
				        c.hidden = std::move(sizes);
			        } else {
				        std::fill(c.hidden.begin(), c.hidden.end(), as_count(value, name, 1));
			        }
			        return true;
		        }
		        if (name == "relu") {
			        c.relu_on_hidden = as_bool(value, name);
			        return true;
		        }
		        return apply_train_param(c.train, name, value);
	        },
	    },
	    config);
	if (!known) {
		throw std::invalid_argument("unknown parameter '" + name + "' for model " + std::string(to_string(kind_of(config))));
	}
}

json to_json(const ModelConfig &config) {
	json j;
	j["model"] = to_string(kind_of(config));
	std::visit(overloaded{
	               [&](const GmConfig &c) { j["tail"] = c.tail ? json(*c.tail) : json(nullptr); },
	               [&](const ArimaConfig &c) { put_order(j, c.order, false); },
	               [&](const SarimaxConfig &c) {
		               put_order(j, c.order, true);
		               j["exog"] = c.calendar_exog;
	               },
	               [&](const AnnConfig &c) {
		               j["hidden"] = c.hidden;
		               put_train(j, c.train);
	               },
	               [&](const RfConfig &c) {
		               const auto &f = c.forest;
		               j["n_estimators"] = f.n_estimators;
		               j["max_depth"] = f.tree.max_depth ? json(*f.tree.max_depth) : json(nullptr);
		               j["m_try"] = f.tree.m_try;
		               j["min_leaf"] = f.tree.min_leaf;
		               j["random_state"] = f.random_state;
	               },
	               [&](const LstmModelConfig &c) {
		               j["hidden"] = c.hidden;
		               j["relu"] = c.relu_on_hidden;
		               put_train(j, c.train);
	               },
	           },
	           config);
	return j;
}

ModelSpec default_spec(ModelKind kind) {
	auto range = [](int lo, int hi) {
		std::vector<json> v;
		for (int k = lo; k <= hi; ++k) {
			v.emplace_back(k);
		}
		return v;
	};
	ModelSpec spec{paper_config(kind), {}};
	switch (kind) {
	case ModelKind::Gm11:
		break;
	case ModelKind::Arima:
		spec.grid = {{"p", range(0, 3)}, {"d", range(0, 2)}, {"q", range(0, 3)}};
		break;
	case ModelKind::Sarimax:
		spec.grid = {{"p", range(0, 3)}, {"d", range(0, 2)}, {"q", range(0, 3)}};
		break;
	case ModelKind::Ann:
		spec.grid = {{"hidden", {8, 12, 16}}};
		break;
	case ModelKind::Rf:
		spec.grid = {{"max_depth", {10, 20, nullptr}}};
		break;
	case ModelKind::Lstm:
		spec.grid = {{"hidden", {32, 50, 64}}};
		break;
	}
	return spec;
}

ModelSpec paper_spec(ModelKind kind) { return {paper_config(kind), {}}; }

std::vector<ModelConfig> expand_grid(const ModelSpec &spec) {
	std::vector<ModelConfig> out{spec.config};
	for (const GridAxis &axis : spec.grid) {
		if (axis.values.empty()) {
			throw std::invalid_argument("grid axis '" + axis.name + "' has no values");
		}
		std::vector<ModelConfig> next;
		for (const ModelConfig &base : out) {
			for (const json &v : axis.values) {
				ModelConfig c = base;
				apply_param(c, axis.name, v);
				next.push_back(std::move(c));
			}
		}
		out = std::move(next);
	}
	return out;
}

std::string_view to_string(ForecastMode mode) {
	return mode == ForecastMode::FixedOrigin ? "fixed-origin" : "rolling";
}

std::optional<ForecastMode> parse_forecast_mode(std::string_view name) {
	if (name == "fixed-origin") {
		return ForecastMode::FixedOrigin;
	}
	if (name == "rolling") {
		return ForecastMode::Rolling;
	}
	return std::nullopt;
}

void ExperimentConfig::validate() const {
	if (models.empty()) {
		throw std::invalid_argument("experiment needs at least one model");
	}
	for (const auto &m : models) {
		for (const auto &axis : m.grid) {
			if (axis.values.empty()) {
				throw std::invalid_argument("grid axis '" + axis.name + "' has no values");
			}
		}
	}
	if (window_length < 1) {
		throw std::invalid_argument("window_length must be >= 1");
	}
	if (scales.empty()) {
		throw std::invalid_argument("at least one evaluation scale is required");
	}
	if (forecast_horizon < 1) {
		throw std::invalid_argument("forecast_horizon must be >= 1");
	}
	if (split.train <= 0 || split.validation < 0 || split.test <= 0 ||
	    std::abs(split.train + split.validation + split.test - 1.0) > 1e-9) {
		throw std::invalid_argument("split ratios must be positive and sum to 1");
	}
	if (date_range && date_range->first > date_range->last) {
		throw std::invalid_argument("date_range.first is after date_range.last");
	}
}

ExperimentConfig default_experiment(std::filesystem::path input, InputFormat format) {
	ExperimentConfig cfg;
	cfg.input = std::move(input);
	cfg.format = format;
	for (ModelKind k : all_model_kinds()) {
		cfg.models.push_back(default_spec(k));
	}
	return cfg;
}

ExperimentConfig parse_experiment(const json &j, const std::filesystem::path &base_dir) {
	if (!j.is_object()) {
		throw std::invalid_argument("experiment config must be a JSON object");
	}
	static const std::vector<std::string> keys{"input",    "format", "date_range", "country", "window_length",
	                                           "split",    "seed",   "statistical_forecast_mode",
	                                           "scales",   "forecast_horizon", "models"};
	for (const auto &[k, v] : j.items()) {
		if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
			throw std::invalid_argument("unknown experiment key '" + k + "'");
		}
	}
	ExperimentConfig cfg;
	if (!j.contains("input") || !j["input"].is_string()) {
		throw std::invalid_argument("experiment config needs an 'input' path");
	}
	cfg.input = j["input"].get<std::string>();
	if (cfg.input.is_relative() && !base_dir.empty()) {
		cfg.input = base_dir / cfg.input;
	}
	if (j.contains("format")) {
		const auto f = parse_input_format(j["format"].get<std::string>());
		if (!f) {
			throw std::invalid_argument("unknown format '" + j["format"].get<std::string>() + "'");
		}
		cfg.format = *f;
	}
	if (j.contains("date_range")) {
		const auto &r = j["date_range"];
		const auto a = parse_iso_date(r.at("first").get<std::string>());
		const auto b = parse_iso_date(r.at("last").get<std::string>());
		if (!a || !b || *b < *a) {
			throw std::invalid_argument("date_range needs ISO dates with first <= last");
		}
		cfg.date_range = DateRange{*a, *b};
	}
	if (j.contains("country")) {
		cfg.country = j["country"].get<std::string>();
	}
	if (j.contains("window_length")) {
		cfg.window_length = as_count(j["window_length"], "window_length", 1);
	}
	if (j.contains("split")) {
		const auto &s = j["split"];
		cfg.split = {s.at("train").get<double>(), s.at("validation").get<double>(), s.at("test").get<double>()};
	}
	if (j.contains("seed")) {
		cfg.seed = as_count(j["seed"], "seed");
	}
	if (j.contains("statistical_forecast_mode")) {
		const auto m = parse_forecast_mode(j["statistical_forecast_mode"].get<std::string>());
		if (!m) {
			throw std::invalid_argument("statistical_forecast_mode must be fixed-origin or rolling");
		}
		cfg.statistical_mode = *m;
	}
	if (j.contains("scales")) {
		cfg.scales.clear();
		for (const auto &s : j["scales"]) {
			const auto name = s.get<std::string>();
			if (name == "normalized") {
				cfg.scales.push_back(Scale::Normalized);
			} else if (name == "physical") {
				cfg.scales.push_back(Scale::Physical);
			} else {
				throw std::invalid_argument("unknown scale '" + name + "'");
			}
		}
	}
	if (j.contains("forecast_horizon")) {
		cfg.forecast_horizon = as_count(j["forecast_horizon"], "forecast_horizon", 1);
	}
	if (j.contains("models")) {
		for (const auto &m : j["models"]) {
			if (m.is_string()) {
				const auto kind = parse_model_kind(m.get<std::string>());
				if (!kind) {
					throw std::invalid_argument("unknown model '" + m.get<std::string>() + "'");
				}
				cfg.models.push_back(default_spec(*kind));
				continue;
			}
			const auto kind = parse_model_kind(m.at("model").get<std::string>());
			if (!kind) {
				throw std::invalid_argument("unknown model '" + m.at("model").get<std::string>() + "'");
			}
			ModelSpec spec = m.contains("grid") ? ModelSpec{paper_config(*kind), {}} : default_spec(*kind);
			if (m.contains("params")) {
				for (const auto &[name, value] : m["params"].items()) {
					apply_param(spec.config, name, value);
				}
			}
			if (m.contains("grid")) {
				const auto &g = m["grid"];
				if (g.is_object()) {
					for (const auto &[name, values] : g.items()) {
						spec.grid.push_back({name, values.get<std::vector<json>>()});
					}
				} else {
					for (const auto &axis : g) {
						spec.grid.push_back({axis.at("name").get<std::string>(), axis.at("values").get<std::vector<json>>()});
					}
				}
				expand_grid(spec);
			}
			cfg.models.push_back(std::move(spec));
		}
	} else {
		for (ModelKind k : all_model_kinds()) {
			cfg.models.push_back(default_spec(k));
		}
	}
	cfg.validate();
	cfg.validate();
	return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw DataError("cannot open experiment config " + path.string());
	}
	json j;
	try {
		in >> j;
	} catch (const json::parse_error &e) {
		throw std::invalid_argument("experiment config " + path.string() + " is not valid JSON: " + e.what());
	}
	return parse_experiment(j, path.parent_path());
}

json to_json(const ExperimentConfig &cfg) {
	json j;
	j["input"] = cfg.input.filename().string();
	j["format"] = cfg.format == InputFormat::CarbonMonitor ? "carbon-monitor" : "tidy";
	if (cfg.date_range) {
		j["date_range"] = {{"first", format_iso(cfg.date_range->first)}, {"last", format_iso(cfg.date_range->last)}};
	}
	if (cfg.country) {
		j["country"] = *cfg.country;
	}
	j["window_length"] = cfg.window_length;
	j["split"] = {{"train", cfg.split.train}, {"validation", cfg.split.validation}, {"test", cfg.split.test}};
	j["seed"] = cfg.seed;
	j["statistical_forecast_mode"] = to_string(cfg.statistical_mode);
	j["scales"] = json::array();
	for (Scale s : cfg.scales) {
		j["scales"].push_back(to_string(s));
	}
	j["forecast_horizon"] = cfg.forecast_horizon;
	j["models"] = json::array();
	for (const auto &m : cfg.models) {
		json spec;
		spec["model"] = to_string(kind_of(m.config));
		spec["params"] = to_json(m.config);
		spec["params"].erase("model");
		spec["grid"] = json::array();
		for (const auto &axis : m.grid) {
			spec["grid"].push_back({{"name", axis.name}, {"values", axis.values}});
		}
		j["models"].push_back(std::move(spec));
	}
	return j;
}

void apply_paper_config(ExperimentConfig &config) {
	for (auto &m : config.models) {
		m = paper_spec(kind_of(m.config));
	}
}

void apply_profile(ExperimentConfig &config, Profile profile) {
	if (profile != Profile::Ci) {
		return;
	}
	auto cap = [](neural::TrainConfig &t) { t.epochs = std::min(t.epochs, kCiEpochs); };
	for (auto &m : config.models) {
		std::visit(overloaded{[&](AnnConfig &c) { cap(c.train); }, [&](LstmModelConfig &c) { cap(c.train); },
		                      [](auto &) {}},
		           m.config);
		for (auto &axis : m.grid) {
			if (axis.name == "epochs") {
				for (auto &v : axis.values) {
					if (v.is_number_integer() && v.get<long long>() > kCiEpochs) {
						v = kCiEpochs;
					}
				}
			}
		}
	}
}

Candidate fit_candidate(const ModelConfig &config, const PreparedData &data, std::uint64_t seed, ForecastMode mode) {
	if (data.train.empty() || data.test.empty()) {
		throw DataError("prepared data needs non-empty training and test splits");
	}
	return std::visit(
	    overloaded{
	        [&](const GmConfig &c) { return fit_gm(c, data, mode); },
	        [&](const ArimaConfig &c) {
		        return fit_box_jenkins(config, c.order, false, ModelKind::Arima, data, mode);
	        },
	        [&](const SarimaxConfig &c) {
		        return fit_box_jenkins(config, c.order, c.calendar_exog, ModelKind::Sarimax, data, mode);
	        },
	        [&](const AnnConfig &c) {
		        auto net = neural::DenseNet::feed_forward(data.window_length(), c.hidden,
		                                                  derive_seed(seed, ModelKind::Ann, 0));
		        return fit_network(config, std::move(net), c.train, ModelKind::Ann, data, seed);
	        },
	        [&](const RfConfig &c) { return fit_rf(c, data); },
	        [&](const LstmModelConfig &c) {
		        lstm::LstmNet net(lstm::LstmConfig{1, c.hidden, c.relu_on_hidden}, derive_seed(seed, ModelKind::Lstm, 0));
		        return fit_network(config, std::move(net), c.train, ModelKind::Lstm, data, seed);
	        },
	    },
	    config);
}

GridResult grid_search(const ModelSpec &spec, const PreparedData &data, std::uint64_t seed, ForecastMode mode) {
	const auto candidates = expand_grid(spec);
	std::optional<Candidate> best;
	GridResult result;
	std::string failures;
	for (const auto &cfg : candidates) {
		CandidateOutcome outcome{to_json(cfg), std::nullopt, {}};
		try {
			Candidate c = fit_candidate(cfg, data, seed, mode);
			if (!std::isfinite(c.validation_mse)) {
				throw ModelError("non-finite validation MSE");
			}
			outcome.validation_mse = c.validation_mse;
			if (!best || c.validation_mse < best->validation_mse) {
				best = std::move(c);
			}
		} catch (const std::exception &e) {
			outcome.error = e.what();
			failures += "\n  " + describe(outcome.config) + ": " + e.what();
		}
		result.outcomes.push_back(std::move(outcome));
	}
	if (!best) {
		throw ModelError("all " + std::to_string(candidates.size()) + " candidates for " +
		                 std::string(to_string(kind_of(spec.config))) + " failed:" + failures);
	}
	result.best = std::move(*best);
	return result;
}

const ModelResult *ComparisonTable::find(ModelKind kind) const {
	for (const auto &r : results) {
		if (r.kind == kind) {
			return &r;
		}
	}
	return nullptr;
}

Winners pick_winners(const std::vector<ModelResult> &results, Scale scale) {
	Winners w;
	if (results.empty()) {
		return w;
	}
	std::vector<int> wins(results.size(), 0);
	for (std::string_view name : kCriteria) {
		std::optional<std::size_t> best;
		for (std::size_t k = 0; k < results.size(); ++k) {
			const auto v = criterion(results[k].at(scale), name);
			if (!v) {
				continue;
			}
			if (!best) {
				best = k;
				continue;
			}
			const double b = *criterion(results[*best].at(scale), name);
			if (name == "r2" ? *v > b : *v < b) {
				best = k;
			}
		}
		if (best) {
			++wins[*best];
			w.per_criterion[std::string(name)] = to_string(results[*best].kind);
		}
	}
	std::size_t top = 0;
	for (std::size_t k = 1; k < results.size(); ++k) {
		if (wins[k] > wins[top] || (wins[k] == wins[top] && results[k].at(scale).mse < results[top].at(scale).mse)) {
			top = k;
		}
	}
	w.overall = to_string(results[top].kind);
	return w;
}

PreparedData prepare(const ExperimentConfig &config) {
	TimeSeries series = [&] {
		if (config.format == InputFormat::CarbonMonitor && (config.date_range || config.country)) {
			std::ifstream in(config.input);
			if (!in) {
				throw DataError("cannot open input " + config.input.string());
			}
			return ingest_carbon_monitor(in, config.date_range, config.country);
		}
		return load_series(config.input, config.format);
	}();
	return window_and_split(series, config.window_length, config.split);
}

ComparisonTable run_experiment(const ExperimentConfig &config, const PreparedData &data) {
	config.validate();
	ComparisonTable table;
	const auto actual_norm = targets_of(data, data.test);
	std::vector<double> actual_phys;
	std::vector<Date> dates;
	for (std::size_t i = data.test.begin; i < data.test.end; ++i) {
		actual_phys.push_back(data.physical[data.target_position(i)]);
		dates.push_back(data.target_date(i));
	}
	for (const ModelSpec &spec : config.models) {
		const ModelKind kind = kind_of(spec.config);
		try {
			GridResult g = grid_search(spec, data, config.seed, config.statistical_mode);
			Candidate &c = g.best;
			ModelResult r{kind,
			              mode_label(kind, config.statistical_mode),
			              to_json(c.config),
			              c.validation_mse,
			              evaluate(actual_norm, c.test_predictions),
			              evaluate(actual_phys, c.test_predictions_physical),
			              {},
			              std::move(g.outcomes),
			              std::move(c.history),
			              std::move(c.checkpoint)};
			for (std::size_t k = 0; k < dates.size(); ++k) {
				r.trace.push_back({dates[k], actual_phys[k], c.test_predictions_physical[k], actual_norm[k],
				                   c.test_predictions[k]});
			}
			table.results.push_back(std::move(r));
		} catch (const std::exception &e) {
			table.failures.push_back({kind, e.what()});
		}
	}
	for (Scale s : config.scales) {
		table.winners[s] = pick_winners(table.results, s);
	}
	return table;
}

ComparisonTable run_experiment(const ExperimentConfig &config) { return run_experiment(config, prepare(config)); }

json comparison_json(const ComparisonTable &table, const ExperimentConfig &config, const std::string &generated_at) {
	json j;
	j["metadata"] = {{"generated_at", generated_at}, {"generator", "chronocast"}};
	j["experiment"] = to_json(config);
	j["rows"] = json::array();
	for (const auto &r : table.results) {
		json row;
		row["model"] = to_string(r.kind);
		row["forecast_mode"] = r.forecast_mode;
		row["config"] = r.config;
		row["validation_mse"] = r.validation_mse;
		for (Scale s : config.scales) {
			row[std::string(to_string(s))] = accuracy_json(r.at(s));
		}
		if (r.kind == ModelKind::Rf) {
			const auto &f = std::get<forest::ForestModel>(r.checkpoint.model);
			row["training_target_range"] = {f.target_min, f.target_max};
		}
		row["grid"] = json::array();
		for (const auto &o : r.grid) {
			row["grid"].push_back(outcome_json(o));
		}
		j["rows"].push_back(std::move(row));
	}
	j["winners"] = json::object();
	for (const auto &[scale, w] : table.winners) {
		j["winners"][std::string(to_string(scale))] = {{"per_criterion", w.per_criterion}, {"overall", w.overall}};
	}
	j["failures"] = json::array();
	for (const auto &f : table.failures) {
		j["failures"].push_back({{"model", to_string(f.kind)}, {"error", f.message}});
	}
	return j;
}

void write_forecast_csv(std::ostream &out, std::span<const DatedValue> forecast) {
	out << "date,predicted\n";
	for (const auto &v : forecast) {
		out << format_iso(v.date) << ',' << num(v.value) << '\n';
	}
}

OutputPaths write_outputs(const ComparisonTable &table, const ExperimentConfig &config,
                          const std::filesystem::path &out_dir) {
	std::filesystem::create_directories(out_dir);
	auto open = [](const std::filesystem::path &p) {
		std::ofstream f(p);
		if (!f) {
			throw DataError("cannot write " + p.string());
		}
		return f;
	};
	OutputPaths paths;
	paths.comparison_json = out_dir / "comparison.json";
	{
		char stamp[32];
		const std::time_t now = std::time(nullptr);
		std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
		auto f = open(paths.comparison_json);
		f << comparison_json(table, config, stamp).dump(2) << '\n';
	}
	paths.comparison_csv = out_dir / "comparison.csv";
	{
		auto f = open(paths.comparison_csv);
		f << csv_header() << '\n';
		for (const auto &r : table.results) {
			for (Scale s : config.scales) {
				f << csv_row({std::string(to_string(r.kind)), "test", s, r.at(s)}) << '\n';
			}
		}
	}
	for (const auto &r : table.results) {
		const auto name = std::string(to_string(r.kind));
		paths.traces.push_back(out_dir / ("trace_" + name + ".csv"));
		auto f = open(paths.traces.back());
		f << "date,actual,predicted,actual_normalized,predicted_normalized\n";
		for (const auto &t : r.trace) {
			f << format_iso(t.date) << ',' << num(t.actual) << ',' << num(t.predicted) << ',' << num(t.actual_normalized)
			  << ',' << num(t.predicted_normalized) << '\n';
		}
		if (!r.history.empty()) {
			auto h = open(out_dir / ("history_" + name + ".csv"));
			h << "epoch,train_mse,validation_mse\n";
			for (const auto &e : r.history) {
				h << e.epoch << ',' << num(e.train_mse) << ',' << num(e.validation_mse) << '\n';
			}
		}
		paths.checkpoints.push_back(out_dir / (name + ".ckpt"));
		save_checkpoint(paths.checkpoints.back(), r.checkpoint);
	}
	const auto w = table.winners.find(Scale::Normalized);
	const std::string winner =
	    w != table.winners.end() ? w->second.overall : (table.winners.empty() ? "" : table.winners.begin()->second.overall);
	if (!winner.empty()) {
		const auto kind = parse_model_kind(winner);
		const ModelResult *r = table.find(*kind);
		paths.forecast = out_dir / "forecast.csv";
		const auto fc = forecast_future(r->checkpoint, config.forecast_horizon);
		auto f = open(*paths.forecast);
		write_forecast_csv(f, fc);
	}
	return paths;
}

} // namespace chronocast::harness

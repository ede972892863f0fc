#include "chronocast/model.hpp"

#include "chronocast/error.hpp"
#include "chronocast/training.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace chronocast {

namespace {

constexpr std::array kKinds{ModelKind::Gm11, ModelKind::Arima, ModelKind::Sarimax,
                            ModelKind::Ann,  ModelKind::Rf,    ModelKind::Lstm};

template <class... Ts>
struct overloaded : Ts... {
	using Ts::operator()...;
};

} // namespace

std::string_view to_string(ModelKind kind) {
	switch (kind) {
	case ModelKind::Gm11:
		return "gm11";
	case ModelKind::Arima:
		return "arima";
	case ModelKind::Sarimax:
		return "sarimax";
	case ModelKind::Ann:
		return "ann";
	case ModelKind::Rf:
		return "rf";
	case ModelKind::Lstm:
		return "lstm";
	}
	return "gm11";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
	for (ModelKind k : kKinds) {
		if (to_string(k) == name) {
			return k;
		}
	}
	if (name == "gm" || name == "grey") {
		return ModelKind::Gm11;
	}
	return std::nullopt;
}

bool is_statistical(ModelKind kind) {
	return kind == ModelKind::Gm11 || kind == ModelKind::Arima || kind == ModelKind::Sarimax;
}

std::span<const ModelKind> all_model_kinds() { return kKinds; }

std::vector<double> forecast_normalized(const TrainedModel &tm, std::size_t horizon) {
	if (horizon == 0) {
		throw std::invalid_argument("forecast horizon must be >= 1");
	}
	const ModelContext &ctx = tm.context;
	const auto from_window = [&](const auto &net) {
		if (ctx.last_window.size() != ctx.window) {
			throw ModelError("checkpoint context has no seed window of length " + std::to_string(ctx.window));
		}
		return neural::forecast_recursive(net, ctx.last_window, horizon);
	};
	return std::visit(
	    overloaded{
	        [&](const grey::GreyModel &m) {
		        std::vector<double> out;
		        out.reserve(horizon);
		        for (std::size_t h = 1; h <= horizon; ++h) {
			        out.push_back(ctx.normalizer.normalize(grey::value_at(m, m.n_fit + tm.steps_since_fit + h)));
		        }
		        return out;
	        },
	        [&](const boxjenkins::ArimaModel &m) {
		        if (!tm.calendar_exog) {
			        return boxjenkins::forecast(m, horizon);
		        }
		        std::vector<Date> dates;
		        for (std::size_t h = 1; h <= horizon; ++h) {
			        dates.push_back(add_days(ctx.last_date, static_cast<long long>(h)));
		        }
		        const Matrix exog = boxjenkins::default_calendar_exog(dates);
		        return boxjenkins::forecast(m, horizon, &exog);
	        },
	        [&](const neural::DenseNet &m) { return from_window(m); },
	        [&](const lstm::LstmNet &m) { return from_window(m); },
	        [&](const forest::ForestModel &m) { return from_window(m); },
	    },
	    tm.model);
}

std::vector<DatedValue> forecast_future(const TrainedModel &model, std::size_t horizon) {
	const auto z = forecast_normalized(model, horizon);
	std::vector<DatedValue> out;
	out.reserve(horizon);
	for (std::size_t h = 0; h < horizon; ++h) {
		const double v = model.context.normalizer.denormalize(z[h]);
		if (!std::isfinite(v)) {
			throw ModelError("forecast produced a non-finite value at step " + std::to_string(h + 1));
		}
		out.push_back({add_days(model.context.last_date, static_cast<long long>(h + 1)), v});
	}
	return out;
}

} // namespace chronocast

#pragma once

#include "chronocast/boxjenkins.hpp"
#include "chronocast/calendar.hpp"
#include "chronocast/data.hpp"
#include "chronocast/forest.hpp"
#include "chronocast/grey.hpp"
#include "chronocast/lstm.hpp"
#include "chronocast/neural.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace chronocast {

enum class ModelKind { Gm11, Arima, Sarimax, Ann, Rf, Lstm };

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view name);
bool is_statistical(ModelKind kind);
/// All six, statistical first.
std::span<const ModelKind> all_model_kinds();

/// What a fitted model needs to forecast past the end of the observed data.
struct ModelContext {
	Normalizer normalizer{0.0, 1.0};
	std::size_t window = 3;
	Date last_date{};
	std::vector<double> last_window;  // normalized, oldest first
};

struct TrainedModel {
	ModelKind kind = ModelKind::Gm11;
	std::variant<grey::GreyModel, boxjenkins::ArimaModel, neural::DenseNet, lstm::LstmNet, forest::ForestModel> model;
	ModelContext context;
	bool calendar_exog = false;        // SARIMAX with day-of-week regressors
	std::size_t steps_since_fit = 0;   // GM(1,1): observations between the fit and the end of the data
	std::uint64_t seed = 0;
	int epoch = 0;
	double validation_mse = 0;
};

/// Recursive forecast of the next `horizon` days at normalized scale.
std::vector<double> forecast_normalized(const TrainedModel &model, std::size_t horizon);

struct DatedValue {
	Date date;
	double value;
};

/// Forecast of the next `horizon` days in physical units, dated from the day after `last_date`.
std::vector<DatedValue> forecast_future(const TrainedModel &model, std::size_t horizon);

} // namespace chronocast

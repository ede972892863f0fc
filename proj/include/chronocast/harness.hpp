#pragma once

#include "chronocast/boxjenkins.hpp"
#include "chronocast/data.hpp"
#include "chronocast/forest.hpp"
#include "chronocast/metrics.hpp"
#include "chronocast/model.hpp"
#include "chronocast/training.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace chronocast::harness {

struct GmConfig {
	std::optional<std::size_t> tail;  // most recent training observations used; empty = all
};

struct ArimaConfig {
	boxjenkins::ArimaOrder order{0, 1, 3, 0, 0, 0, 0};
};

struct SarimaxConfig {
	boxjenkins::ArimaOrder order{0, 1, 3, 0, 0, 0, 7};
	bool calendar_exog = false;
};

struct AnnConfig {
	std::size_t hidden = 12;
	neural::TrainConfig train;
};

struct LstmModelConfig {
	std::vector<std::size_t> hidden{50, 50};
	bool relu_on_hidden = true;
	neural::TrainConfig train;
};

struct RfConfig {
	forest::ForestConfig forest;
};

using ModelConfig = std::variant<GmConfig, ArimaConfig, SarimaxConfig, AnnConfig, RfConfig, LstmModelConfig>;

ModelKind kind_of(const ModelConfig &config);
/// Reference hyperparameters for the family; the statistical models get fixed orders.
ModelConfig paper_config(ModelKind kind);

/// Sets one named hyperparameter. Unknown names or ill-typed values throw std::invalid_argument.
void apply_param(ModelConfig &config, const std::string &name, const nlohmann::json &value);
nlohmann::json to_json(const ModelConfig &config);

struct GridAxis {
	std::string name;
	std::vector<nlohmann::json> values;
};

struct ModelSpec {
	ModelConfig config;
	std::vector<GridAxis> grid;  // empty: the base config alone
};

/// Base config with the default search grid for the family.
ModelSpec default_spec(ModelKind kind);
/// Reference config with no grid.
ModelSpec paper_spec(ModelKind kind);

/// Cartesian product in enumeration order, the last axis varying fastest.
std::vector<ModelConfig> expand_grid(const ModelSpec &spec);

enum class ForecastMode { FixedOrigin, Rolling };
std::string_view to_string(ForecastMode mode);
std::optional<ForecastMode> parse_forecast_mode(std::string_view name);

enum class Profile { Full, Ci };
inline constexpr int kCiEpochs = 300;

struct ExperimentConfig {
	std::filesystem::path input;
	InputFormat format = InputFormat::CarbonMonitor;
	std::optional<DateRange> date_range;
	std::optional<std::string> country;
	std::size_t window_length = 3;
	SplitRatios split;
	std::vector<ModelSpec> models;
	std::uint64_t seed = 42;
	ForecastMode statistical_mode = ForecastMode::FixedOrigin;
	std::vector<Scale> scales{Scale::Normalized, Scale::Physical};
	std::size_t forecast_horizon = 92;

	void validate() const;
};

/// All six models with default grids.
ExperimentConfig default_experiment(std::filesystem::path input, InputFormat format);

/// Reads the JSON schema documented in the README; a relative input path is taken relative to the file.
ExperimentConfig load_experiment(const std::filesystem::path &path);
ExperimentConfig parse_experiment(const nlohmann::json &j, const std::filesystem::path &base_dir = {});
nlohmann::json to_json(const ExperimentConfig &config);

/// Replaces every model's config by its reference value and drops the grids.
void apply_paper_config(ExperimentConfig &config);
/// Ci caps training epochs at kCiEpochs, in base configs and in grid values.
void apply_profile(ExperimentConfig &config, Profile profile);

/// One model fitted for scoring: validation score, test predictions and the forecasting checkpoint.
struct Candidate {
	ModelConfig config;
	double validation_mse = 0;
	std::vector<double> test_predictions;           // normalized, aligned with the test targets
	std::vector<double> test_predictions_physical;  // same in physical units
	TrainedModel checkpoint;
	std::vector<neural::EpochRecord> history;
};

struct CandidateOutcome {
	nlohmann::json config;
	std::optional<double> validation_mse;
	std::string error;
};

struct GridResult {
	Candidate best;
	std::vector<CandidateOutcome> outcomes;  // in enumeration order
};

/// Fits one configuration. The statistical models are estimated on the training range; the forecast for
/// the validation targets is fixed-origin from its end. For the test targets the state is carried through
/// the validation actuals without re-estimation (fixed-origin from the test start, or rolling one-step).
/// ML models train on the training windows with best-validation checkpointing and predict the test windows
/// one step ahead from actual lags.
Candidate fit_candidate(const ModelConfig &config, const PreparedData &data, std::uint64_t seed,
                        ForecastMode statistical_mode = ForecastMode::FixedOrigin);

/// Exhaustive search by validation MSE; ties keep the earlier candidate. Throws ModelError listing every
/// failure when no candidate fits.
GridResult grid_search(const ModelSpec &spec, const PreparedData &data, std::uint64_t seed,
                       ForecastMode statistical_mode = ForecastMode::FixedOrigin);

inline constexpr std::array<std::string_view, 5> kCriteria{"mse", "rmse", "mae", "mape_percent", "r2"};

struct TraceRow {
	Date date;
	double actual;
	double predicted;
	double actual_normalized;
	double predicted_normalized;
};

struct ModelResult {
	ModelKind kind;
	std::string forecast_mode;  // "fixed-origin", "rolling-one-step" or "one-step"
	nlohmann::json config;
	double validation_mse = 0;
	Accuracy normalized;
	Accuracy physical;
	std::vector<TraceRow> trace;
	std::vector<CandidateOutcome> grid;
	std::vector<neural::EpochRecord> history;
	TrainedModel checkpoint;

	const Accuracy &at(Scale scale) const { return scale == Scale::Normalized ? normalized : physical; }
};

struct Failure {
	ModelKind kind;
	std::string message;
};

struct Winners {
	std::map<std::string, std::string> per_criterion;  // criterion -> model, undefined criteria skipped
	std::string overall;
};

struct ComparisonTable {
	std::vector<ModelResult> results;
	std::vector<Failure> failures;
	std::map<Scale, Winners> winners;

	const ModelResult *find(ModelKind kind) const;
};

/// Majority of the five criteria, ties broken by the lower MSE, then by row order.
Winners pick_winners(const std::vector<ModelResult> &results, Scale scale);

/// Runs every configured model. A model that fails is recorded and the others continue.
ComparisonTable run_experiment(const ExperimentConfig &config, const PreparedData &data);
ComparisonTable run_experiment(const ExperimentConfig &config);

/// Loads, windows and splits the configured input.
PreparedData prepare(const ExperimentConfig &config);

/// comparison.json content. The wall-clock time sits under "metadata" and nowhere else.
nlohmann::json comparison_json(const ComparisonTable &table, const ExperimentConfig &config,
                               const std::string &generated_at);

struct OutputPaths {
	std::filesystem::path comparison_json;
	std::filesystem::path comparison_csv;
	std::vector<std::filesystem::path> traces;
	std::vector<std::filesystem::path> checkpoints;
	std::optional<std::filesystem::path> forecast;
};

/// Writes comparison.json/.csv, trace_<model>.csv, <model>.ckpt and, when a winner exists,
/// forecast.csv from the overall normalized-scale winner.
OutputPaths write_outputs(const ComparisonTable &table, const ExperimentConfig &config,
                          const std::filesystem::path &out_dir);

void write_forecast_csv(std::ostream &out, std::span<const DatedValue> forecast);

} // namespace chronocast::harness

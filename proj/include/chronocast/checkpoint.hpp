#pragma once

#include "chronocast/model.hpp"

#include <filesystem>
#include <iosfwd>

namespace chronocast {

/// Line-oriented text: a versioned header, the model tag and training metadata, the forecasting
/// context, then the parameters as 17-significant-digit decimals (lossless for doubles).
inline constexpr int kCheckpointVersion = 1;

void write_checkpoint(std::ostream &out, const TrainedModel &model);
TrainedModel read_checkpoint(std::istream &in);

void save_checkpoint(const std::filesystem::path &path, const TrainedModel &model);
TrainedModel load_checkpoint(const std::filesystem::path &path);

} // namespace chronocast

#pragma once

#include <string>

#include "finn/market_data.hpp"
#include "finn/network.hpp"
#include "finn/vol_model.hpp"

namespace finn {

inline constexpr int kCurvesVersion = 1;
inline constexpr int kVolVersion = 1;
inline constexpr int kModelVersion = 1;

/// Versioned JSON documents. Doubles are written with shortest round-trip
/// formatting, so load(save(x)) reproduces every value bit-for-bit.
std::string curves_to_json(const CurveDataset& dataset);
CurveDataset curves_from_json(const std::string& text);

std::string vol_to_json(const VolModel& vols);
VolModel vol_from_json(const std::string& text);

/// Checkpoint: {version, layer_sizes, weights, biases, norm_stats,
/// input_layout, grid, vol_model}. Throws on version mismatch.
std::string model_to_json(const NetworkParams& params);
NetworkParams model_from_json(const std::string& text);

// file helpers
void save_curves(const CurveDataset& dataset, const std::string& path);
CurveDataset load_curves(const std::string& path);
void save_vol(const VolModel& vols, const std::string& path);
VolModel load_vol(const std::string& path);
void save_model(const NetworkParams& params, const std::string& path);
NetworkParams load_model(const std::string& path);

}  // namespace finn

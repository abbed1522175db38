// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>

#include <json.hpp>

#include "rts/common.hpp"

namespace rts::train {

struct TrainConfig {
  std::size_t epochs = 200;  // fusion policy epochs
  double lr = 1e-3;
  std::size_t batch = 8;  // sessions per optimizer step
  std::uint64_t seed = 1;
  std::size_t patience = 0;  // 0 disables early stopping
  std::size_t detector_epochs = 6;
  std::size_t tick_stride = 2;  // detector windows subsampled per epoch
  bool class_weights = true;

  void validate() const {
    if (epochs == 0 || detector_epochs == 0) throw InvalidInput("train: epochs must be positive");
    if (!(lr > 0)) throw InvalidInput("train: lr must be positive");
    if (batch == 0) throw InvalidInput("train: batch must be positive");
    if (tick_stride == 0) throw InvalidInput("train: tick_stride must be positive");
  }

  nlohmann::json to_json() const {
    return {{"epochs", epochs},   {"lr", lr},
            {"batch", batch},     {"seed", seed},
            {"patience", patience}, {"detector_epochs", detector_epochs},
            {"tick_stride", tick_stride}, {"class_weights", class_weights}};
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    try {
      c.epochs = j.value("epochs", c.epochs);
      c.lr = j.value("lr", c.lr);
      c.batch = j.value("batch", c.batch);
      c.seed = j.value("seed", c.seed);
      c.patience = j.value("patience", c.patience);
      c.detector_epochs = j.value("detector_epochs", c.detector_epochs);
      c.tick_stride = j.value("tick_stride", c.tick_stride);
      c.class_weights = j.value("class_weights", c.class_weights);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("train config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

// One line-delimited metrics record per epoch.
using Logger = std::function<void(const nlohmann::json&)>;

inline void log_to(const Logger& log, const nlohmann::json& j) {
  if (log) log(j);
}

}  // namespace rts::train

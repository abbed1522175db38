// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "rts/eval/experiment.hpp"

namespace rts::train {

// Trains (or reuses) and evaluates every requested variant on the test
// split, in the order given.
inline std::vector<eval::VariantResult> run_sweep(Workspace& ws, const std::vector<VariantSpec>& variants) {
  if (variants.empty()) throw InvalidInput("sweep: no variants requested");
  std::vector<eval::VariantResult> rows;
  for (const auto& v : variants) {
    ws.progress({{"stage", "sweep"}, {"variant", v.key}, {"name", v.name()}});
    rows.push_back(eval::evaluate_variant(ws, v));
    ws.progress({{"stage", "sweep"}, {"variant", v.key}, {"metric", rows.back().metric}, {"value", rows.back().value}});
  }
  return rows;
}

}  // namespace rts::train

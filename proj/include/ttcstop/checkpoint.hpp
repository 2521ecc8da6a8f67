#pragma once

#include <cstdint>
#include <optional>

#include "ttcstop/passk.hpp"

namespace ttcstop {

/// One evaluated training checkpoint.
struct CheckpointObservation {
  std::int64_t step = 0;
  std::int64_t tokens = 0;
  double train_flops = 0.0;   // cumulative F_tr[t]
  double baseline_acc = 0.0;  // single-sample accuracy, pp
  std::optional<CorrectnessMatrix> correctness;

  friend bool operator==(const CheckpointObservation&,
                         const CheckpointObservation&) = default;
};

}  // namespace ttcstop

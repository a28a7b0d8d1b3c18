#pragma once

#include <filesystem>
#include <optional>

#include "graphreason/encoder.hpp"

namespace graphreason {

struct Checkpoint {
  SageParams sage;
  Projector proj;
  std::optional<Eigen::MatrixXd> label_embs;
  std::optional<TrainState> train_state;
};

/// Checkpoint file: "CKPT v1 tensors=<k>" header, a single-line JSON meta
/// record, one "tensor <name> <rows> <cols> <dtype>" line per tensor, then
/// the little-endian row-major payloads in listing order (dtype f64).
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// CSV with a "step,loss" header row.
void write_loss_curve_csv(const std::filesystem::path& path,
                          const LossCurve& curve);

}  // namespace graphreason

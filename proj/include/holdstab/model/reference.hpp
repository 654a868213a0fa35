#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "holdstab/model/network.hpp"

namespace holdstab::reference {

/// Straight-line per-example, per-timestep loops with no Eigen kernels and no
/// threading. Same contract as holdstab::loss_and_grad, including dropout masks.
/// Slow by design; used to cross-check the batched path and as the benchmark
/// baseline.
double loss_and_grad(const Model<double>& model, std::span<const Example> batch, double dropout,
                     std::uint64_t dropout_seed, std::vector<double>* grad);

Eigen::Vector2d forward(const Model<double>& model, const Eigen::MatrixXd& x, double dropout = 0.0,
                        std::uint64_t dropout_seed = 0, std::size_t slot = 0);

}  // namespace holdstab::reference

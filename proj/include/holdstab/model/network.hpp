#pragma once

#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "holdstab/core/labels.hpp"
#include "holdstab/core/parallel.hpp"
#include "holdstab/model/params.hpp"

namespace holdstab {

/// Class order of the two logits.
inline constexpr int kStableClass = 0;
inline constexpr int kNotStableClass = 1;

/// A T x D feature matrix and its target class. The matrix is borrowed.
struct Example {
    const Eigen::MatrixXd* x = nullptr;
    int target = kStableClass;
};

inline int class_of(BinaryLabel b) noexcept { return b == BinaryLabel::Stable ? kStableClass : kNotStableClass; }

/// Examples are processed in chunks of this many; gradients are reduced in
/// chunk order, so results do not depend on the number of threads.
inline constexpr std::size_t kChunkSize = 32;

/// Inverted-dropout keep mask for the input of layer `boundary + 1`: rows x T,
/// column-major, entries 0 or 1/(1-p). Depends only on (seed, slot, boundary),
/// where slot is the example's position in the batch.
Eigen::MatrixXd dropout_mask(std::uint64_t seed, std::size_t slot, int boundary, int rows, int timesteps, double p);

/// Mean cross-entropy over the batch. When `grad` is non-null it is resized to
/// the parameter count and overwritten with the exact gradient for the realized
/// dropout masks. Dropout is only applied between recurrent layers.
/// Throws NumericError on a non-finite loss, ConfigError on shape mismatch.
template <class S>
double loss_and_grad(const Model<S>& model, std::span<const Example> batch, double dropout, std::uint64_t dropout_seed,
                     std::type_identity_t<std::vector<S>>* grad, Exec exec = Exec::Parallel);

/// 2 x N logits with dropout off.
template <class S>
Eigen::MatrixXd logits(const Model<S>& model, std::span<const Eigen::MatrixXd* const> xs, Exec exec = Exec::Parallel);

/// Single-sequence forward. dropout > 0 uses the masks of batch slot 0.
template <class S>
Eigen::Vector2d forward(const Model<S>& model, const Eigen::MatrixXd& x, double dropout = 0.0,
                        std::uint64_t dropout_seed = 0);

/// Argmax; a tie is Stable.
BinaryLabel predict_label(const Eigen::Ref<const Eigen::Vector2d>& logit) noexcept;

template <class S>
std::vector<BinaryLabel> predict(const Model<S>& model, std::span<const Eigen::MatrixXd* const> xs,
                                 Exec exec = Exec::Parallel);

template <class S>
BinaryLabel predict(const Model<S>& model, const Eigen::MatrixXd& x);

}  // namespace holdstab

#pragma once

#include <torch/torch.h>

#include <span>

#include "arepas/grid.hpp"

namespace arepas {

/// [1, 1, H, W] float32 tensor holding `grid`.
torch::Tensor to_tensor(const RealGrid& grid);
torch::Tensor to_tensor(const Mask& grid);

/// Stacks equally shaped grids into [N, 1, H, W].
torch::Tensor stack_grids(std::span<const RealGrid* const> grids);

/// Reads a [H, W], [1, H, W] or [1, 1, H, W] tensor back into a grid.
RealGrid to_grid(const torch::Tensor& t);

/// Seeds torch's global generator and pins deterministic kernels.
void seed_torch(std::uint64_t seed);

}  // namespace arepas

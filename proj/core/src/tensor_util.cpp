#include "arepas/tensor_util.hpp"

namespace arepas {

torch::Tensor to_tensor(const RealGrid& grid) {
  auto t = torch::empty({1, 1, grid.rows(), grid.cols()}, torch::kFloat32);
  auto* dst = t.data_ptr<float>();
  for (std::size_t i = 0; i < grid.size(); ++i) dst[i] = static_cast<float>(grid[i]);
  return t;
}

torch::Tensor to_tensor(const Mask& grid) {
  auto t = torch::empty({1, 1, grid.rows(), grid.cols()}, torch::kFloat32);
  auto* dst = t.data_ptr<float>();
  for (std::size_t i = 0; i < grid.size(); ++i) dst[i] = grid[i] ? 1.0f : 0.0f;
  return t;
}

torch::Tensor stack_grids(std::span<const RealGrid* const> grids) {
  if (grids.empty()) throw Error(ErrorCode::kInvalidArgument, "stack_grids: empty input");
  const int rows = grids.front()->rows();
  const int cols = grids.front()->cols();
  auto t = torch::empty({static_cast<long>(grids.size()), 1, rows, cols}, torch::kFloat32);
  auto* dst = t.data_ptr<float>();
  for (const RealGrid* g : grids) {
    require_same_shape(*grids.front(), *g, "stack_grids");
    for (double v : *g) *dst++ = static_cast<float>(v);
  }
  return t;
}

RealGrid to_grid(const torch::Tensor& t) {
  auto flat = t.detach().to(torch::kCPU, torch::kFloat64).contiguous();
  while (flat.dim() > 2) {
    if (flat.size(0) != 1) throw Error(ErrorCode::kShapeMismatch, "to_grid: batch or channel dim > 1");
    flat = flat.squeeze(0);
  }
  if (flat.dim() != 2) throw Error(ErrorCode::kShapeMismatch, "to_grid: expected a 2D tensor");
  const auto* src = flat.data_ptr<double>();
  return RealGrid(static_cast<int>(flat.size(0)), static_cast<int>(flat.size(1)),
                  std::vector<double>(src, src + flat.numel()));
}

void seed_torch(std::uint64_t seed) {
  torch::manual_seed(seed);
  at::globalContext().setDeterministicAlgorithms(true, /*warn_only=*/true);
}

}  // namespace arepas

// Deterministic sample sets: tensor grids, capped grids with seeded
// uniform fill-in, and unit directions.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "quasilin/feedback.hpp"

namespace quasilin {

// Tensor grid with per_axis nodes per axis over the box.
std::vector<Eigen::VectorXd> box_grid(const Box& box, int per_axis);

// Exactly `count` points: a tensor grid walk truncated to count when the
// grid is large enough, otherwise the full grid plus seeded uniform points.
std::vector<Eigen::VectorXd> box_points(const Box& box, int count, std::uint64_t seed);

// Tensor grid over the cube of half-width `radius` (scaled per axis by the
// box half-width) around `center`, clipped to the box. Capped at
// max_points by seeded uniform sampling; the center always comes first.
std::vector<Eigen::VectorXd> cube_grid(const Eigen::VectorXd& center, double radius, const Box& box,
                                       int per_axis, int max_points, std::uint64_t seed);

// 2d axis directions followed by seeded random unit vectors, `count` total.
std::vector<Eigen::VectorXd> unit_directions(int dim, int count, std::uint64_t seed);

}  // namespace quasilin

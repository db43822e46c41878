#include "quasilin/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace quasilin {

std::vector<Eigen::VectorXd> box_grid(const Box& box, int per_axis) {
    const int d = box.dim();
    long total = 1;
    for (int i = 0; i < d; ++i) total *= per_axis;
    std::vector<Eigen::VectorXd> pts;
    pts.reserve(static_cast<std::size_t>(total));
    for (long flat = 0; flat < total; ++flat) {
        Eigen::VectorXd x(d);
        long rest = flat;
        for (int i = d - 1; i >= 0; --i) {
            int idx = static_cast<int>(rest % per_axis);
            rest /= per_axis;
            const Interval& iv = box.axes[static_cast<std::size_t>(i)];
            x(i) = per_axis == 1 ? 0.5 * (iv.lo + iv.hi)
                                 : iv.lo + (iv.hi - iv.lo) * idx / (per_axis - 1);
        }
        pts.push_back(std::move(x));
    }
    return pts;
}

std::vector<Eigen::VectorXd> box_points(const Box& box, int count, std::uint64_t seed) {
    const int d = box.dim();
    int per_axis = 1;
    while (std::pow(per_axis, d) < count) ++per_axis;
    std::vector<Eigen::VectorXd> grid = box_grid(box, per_axis);
    if (static_cast<int>(grid.size()) >= count) {
        grid.resize(static_cast<std::size_t>(count));
        return grid;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    while (static_cast<int>(grid.size()) < count) {
        Eigen::VectorXd x(d);
        for (int i = 0; i < d; ++i) {
            const Interval& iv = box.axes[static_cast<std::size_t>(i)];
            x(i) = iv.lo + (iv.hi - iv.lo) * unif(rng);
        }
        grid.push_back(std::move(x));
    }
    return grid;
}

std::vector<Eigen::VectorXd> cube_grid(const Eigen::VectorXd& center, double radius, const Box& box,
                                       int per_axis, int max_points, std::uint64_t seed) {
    const int d = box.dim();
    Box cube;
    cube.axes.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        const Interval& iv = box.axes[static_cast<std::size_t>(i)];
        double half = radius * 0.5 * (iv.hi - iv.lo);
        cube.axes[static_cast<std::size_t>(i)] = {std::max(iv.lo, center(i) - half),
                                                  std::min(iv.hi, center(i) + half)};
    }
    std::vector<Eigen::VectorXd> pts;
    pts.push_back(center);
    double total = std::pow(per_axis, d);
    std::vector<Eigen::VectorXd> fill =
        total <= max_points ? box_grid(cube, per_axis) : box_points(cube, max_points, seed);
    for (auto& x : fill)
        if ((x - center).norm() > 0.0) pts.push_back(std::move(x));
    return pts;
}

std::vector<Eigen::VectorXd> unit_directions(int dim, int count, std::uint64_t seed) {
    std::vector<Eigen::VectorXd> dirs;
    for (int i = 0; i < dim; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
        e(i) = 1.0;
        dirs.push_back(e);
        dirs.push_back(-e);
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    while (static_cast<int>(dirs.size()) < count) {
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) v(i) = normal(rng);
        double norm = v.norm();
        if (norm < 1e-12) continue;
        dirs.push_back(v / norm);
    }
    return dirs;
}

}  // namespace quasilin

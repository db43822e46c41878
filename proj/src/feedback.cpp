#include "quasilin/feedback.hpp"

#include <algorithm>
#include <cmath>

namespace quasilin {

bool Box::contains(const Eigen::VectorXd& x, double pad) const {
    if (x.size() != dim()) throw DimensionMismatchError("box test on a point of wrong dimension");
    for (int i = 0; i < dim(); ++i) {
        const Interval& iv = axes[static_cast<std::size_t>(i)];
        if (x(i) < iv.lo - pad || x(i) > iv.hi + pad) return false;
    }
    return true;
}

double Box::margin(const Eigen::VectorXd& x, int i) const {
    const Interval& iv = axes[static_cast<std::size_t>(i)];
    return std::min(x(i) - iv.lo, iv.hi - x(i));
}

Box Box::sub(int begin, int count) const {
    Box b;
    b.axes.assign(axes.begin() + begin, axes.begin() + begin + count);
    return b;
}

Eigen::VectorXd Feedback::value(const Eigen::VectorXd& x) const {
    if (x.size() != in_dim()) throw DimensionMismatchError("feedback evaluated at a point of wrong dimension");
    Eigen::VectorXd u(out_dim());
    eval({x.data(), static_cast<std::size_t>(x.size())}, {u.data(), static_cast<std::size_t>(u.size())});
    return u;
}

ExprFeedback::ExprFeedback(ExprVec alpha) : alpha_(std::move(alpha)) {}

GridFeedback::GridFeedback(Box box, std::vector<int> counts, Eigen::MatrixXd values)
    : box_(std::move(box)), counts_(std::move(counts)), values_(std::move(values)) {
    if (static_cast<int>(counts_.size()) != box_.dim()) throw DimensionMismatchError("grid counts differ from box dimension");
    long total = 1;
    for (int c : counts_) {
        if (c < 2) throw InputError("grid needs at least two nodes per axis");
        total *= c;
    }
    if (values_.rows() != total) throw DimensionMismatchError("grid value count differs from node count");
    strides_.assign(counts_.size(), 1);
    for (int i = static_cast<int>(counts_.size()) - 2; i >= 0; --i)
        strides_[static_cast<std::size_t>(i)] =
            strides_[static_cast<std::size_t>(i + 1)] * counts_[static_cast<std::size_t>(i + 1)];
}

Eigen::VectorXd GridFeedback::node(int flat) const {
    Eigen::VectorXd x(box_.dim());
    for (int i = 0; i < box_.dim(); ++i) {
        int idx = (flat / strides_[static_cast<std::size_t>(i)]) % counts_[static_cast<std::size_t>(i)];
        const Interval& iv = box_.axes[static_cast<std::size_t>(i)];
        x(i) = iv.lo + (iv.hi - iv.lo) * idx / (counts_[static_cast<std::size_t>(i)] - 1);
    }
    return x;
}

double GridFeedback::max_spacing() const {
    double h = 0.0;
    for (int i = 0; i < box_.dim(); ++i)
        h = std::max(h, box_.width(i) / (counts_[static_cast<std::size_t>(i)] - 1));
    return h;
}

void GridFeedback::eval(std::span<const double> x, std::span<double> u) const {
    const int d = box_.dim();
    std::vector<int> base(static_cast<std::size_t>(d));
    std::vector<double> frac(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        const Interval& iv = box_.axes[static_cast<std::size_t>(i)];
        int c = counts_[static_cast<std::size_t>(i)];
        double t = (std::clamp(x[static_cast<std::size_t>(i)], iv.lo, iv.hi) - iv.lo) / (iv.hi - iv.lo) * (c - 1);
        int b = std::min(static_cast<int>(t), c - 2);
        base[static_cast<std::size_t>(i)] = b;
        frac[static_cast<std::size_t>(i)] = t - b;
    }
    std::fill(u.begin(), u.end(), 0.0);
    const int corners = 1 << d;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        int flat = 0;
        for (int i = 0; i < d; ++i) {
            int bit = (c >> i) & 1;
            w *= bit ? frac[static_cast<std::size_t>(i)] : 1.0 - frac[static_cast<std::size_t>(i)];
            flat += (base[static_cast<std::size_t>(i)] + bit) * strides_[static_cast<std::size_t>(i)];
        }
        if (w == 0.0) continue;
        for (int j = 0; j < out_dim(); ++j) u[static_cast<std::size_t>(j)] += w * values_(flat, j);
    }
}

namespace {
// Smooth bump supported on (-1, 1).
double bump(double t) {
    double s = t * t;
    if (s >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s));
}
}  // namespace

MollifiedFeedback::MollifiedFeedback(std::shared_ptr<const GridFeedback> grid, double width)
    : grid_(std::move(grid)), width_(width) {
    if (width_ <= 0.0) throw InputError("kernel width must be positive");
}

void MollifiedFeedback::eval(std::span<const double> x, std::span<double> u) const {
    const int d = in_dim();
    const int m = out_dim();
    std::fill(u.begin(), u.end(), 0.0);
    double total = 0.0;
    const Eigen::MatrixXd& vals = grid_->values();
    for (int flat = 0; flat < grid_->node_count(); ++flat) {
        Eigen::VectorXd node = grid_->node(flat);
        double w = 1.0;
        for (int i = 0; i < d && w > 0.0; ++i) w *= bump((x[static_cast<std::size_t>(i)] - node(i)) / width_);
        if (w <= 0.0) continue;
        total += w;
        for (int j = 0; j < m; ++j) u[static_cast<std::size_t>(j)] += w * vals(flat, j);
    }
    if (total <= 0.0) throw DomainError("mollifier kernel does not cover the query point");
    for (int j = 0; j < m; ++j) u[static_cast<std::size_t>(j)] /= total;
}

}  // namespace quasilin

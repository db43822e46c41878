// State feedbacks u = alpha(x): expression-backed (smooth, dual-capable),
// grid-sampled with multilinear interpolation, and mollified grids.
#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "quasilin/dual.hpp"
#include "quasilin/errors.hpp"
#include "quasilin/expr.hpp"

namespace quasilin {

struct Interval {
    double lo = 0.0, hi = 0.0;
};

struct Box {
    std::vector<Interval> axes;

    int dim() const { return static_cast<int>(axes.size()); }
    bool contains(const Eigen::VectorXd& x, double pad = 0.0) const;
    double width(int i) const { return axes[static_cast<std::size_t>(i)].hi - axes[static_cast<std::size_t>(i)].lo; }
    // Distance from x(i) to the nearest face along axis i.
    double margin(const Eigen::VectorXd& x, int i) const;
    Box sub(int begin, int count) const;
};

class Feedback {
  public:
    virtual ~Feedback() = default;
    virtual int in_dim() const = 0;
    virtual int out_dim() const = 0;
    virtual void eval(std::span<const double> x, std::span<double> u) const = 0;

    virtual bool has_dual() const { return false; }
    virtual void eval_dual(std::span<const D1>, std::span<D1>) const {
        throw Error("feedback does not support dual evaluation");
    }
    virtual bool has_dual2() const { return false; }
    virtual void eval_dual2(std::span<const D2>, std::span<D2>) const {
        throw Error("feedback does not support second-order dual evaluation");
    }

    Eigen::VectorXd value(const Eigen::VectorXd& x) const;
};

using FeedbackPtr = std::shared_ptr<const Feedback>;

class ExprFeedback : public Feedback {
  public:
    explicit ExprFeedback(ExprVec alpha);
    int in_dim() const override { return alpha_.symbols()->size(); }
    int out_dim() const override { return alpha_.dim(); }
    void eval(std::span<const double> x, std::span<double> u) const override { alpha_.eval_values(x, u); }
    bool has_dual() const override { return true; }
    void eval_dual(std::span<const D1> x, std::span<D1> u) const override { alpha_.eval_values(x, u); }
    bool has_dual2() const override { return true; }
    void eval_dual2(std::span<const D2> x, std::span<D2> u) const override { alpha_.eval_values(x, u); }
    const ExprVec& exprs() const { return alpha_; }

  private:
    ExprVec alpha_;
};

class ConstantFeedback : public Feedback {
  public:
    ConstantFeedback(int in_dim, Eigen::VectorXd u) : in_(in_dim), u_(std::move(u)) {}
    int in_dim() const override { return in_; }
    int out_dim() const override { return static_cast<int>(u_.size()); }
    void eval(std::span<const double>, std::span<double> u) const override {
        for (int i = 0; i < out_dim(); ++i) u[static_cast<std::size_t>(i)] = u_(i);
    }
    bool has_dual() const override { return true; }
    void eval_dual(std::span<const D1>, std::span<D1> u) const override {
        for (int i = 0; i < out_dim(); ++i) u[static_cast<std::size_t>(i)] = D1(u_(i));
    }
    bool has_dual2() const override { return true; }
    void eval_dual2(std::span<const D2>, std::span<D2> u) const override {
        for (int i = 0; i < out_dim(); ++i) u[static_cast<std::size_t>(i)] = D2(u_(i));
    }

  private:
    int in_;
    Eigen::VectorXd u_;
};

// Values on a uniform tensor grid over a box, evaluated by multilinear
// interpolation; queries are clamped to the box.
class GridFeedback : public Feedback {
  public:
    GridFeedback(Box box, std::vector<int> counts, Eigen::MatrixXd values);

    int in_dim() const override { return box_.dim(); }
    int out_dim() const override { return static_cast<int>(values_.cols()); }
    void eval(std::span<const double> x, std::span<double> u) const override;

    const Box& box() const { return box_; }
    const std::vector<int>& counts() const { return counts_; }
    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::VectorXd node(int flat) const;
    int node_count() const { return static_cast<int>(values_.rows()); }
    double max_spacing() const;

  private:
    Box box_;
    std::vector<int> counts_;   // nodes per axis, >= 2
    std::vector<int> strides_;  // row-major
    Eigen::MatrixXd values_;    // node_count x out_dim
};

// Normalized convolution of grid samples with a compactly supported bump,
// smooth throughout the box as long as the kernel covers the grid spacing.
class MollifiedFeedback : public Feedback {
  public:
    MollifiedFeedback(std::shared_ptr<const GridFeedback> grid, double width);

    int in_dim() const override { return grid_->in_dim(); }
    int out_dim() const override { return grid_->out_dim(); }
    void eval(std::span<const double> x, std::span<double> u) const override;
    double width() const { return width_; }

  private:
    std::shared_ptr<const GridFeedback> grid_;
    double width_;
};

}  // namespace quasilin

// Vector fields on R^d with optional dual-number evaluation. Fields that
// support duals get exact Jacobians; the rest fall back to central finite
// differences with step 1e-5 (automatic differentiation does not cross
// numeric flow maps).
#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "quasilin/dual.hpp"
#include "quasilin/errors.hpp"
#include "quasilin/expr.hpp"

namespace quasilin {

class VectorField {
  public:
    virtual ~VectorField() = default;

    virtual int dim() const = 0;
    virtual void eval(std::span<const double> x, std::span<double> out) const = 0;

    virtual bool has_dual() const { return false; }
    virtual void eval_dual(std::span<const D1>, std::span<D1>) const {
        throw Error("field does not support first-order dual evaluation");
    }
    virtual bool has_dual2() const { return false; }
    virtual void eval_dual2(std::span<const D2>, std::span<D2>) const {
        throw Error("field does not support second-order dual evaluation");
    }

    Eigen::VectorXd value(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;

    // Directional derivative J(x) v, exact when duals are supported.
    Eigen::VectorXd directional(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const;
};

using FieldPtr = std::shared_ptr<const VectorField>;

class ConstantField : public VectorField {
  public:
    explicit ConstantField(Eigen::VectorXd v) : v_(std::move(v)) {}
    int dim() const override { return static_cast<int>(v_.size()); }
    void eval(std::span<const double>, std::span<double> out) const override {
        for (int i = 0; i < dim(); ++i) out[static_cast<std::size_t>(i)] = v_(i);
    }
    bool has_dual() const override { return true; }
    void eval_dual(std::span<const D1>, std::span<D1> out) const override {
        for (int i = 0; i < dim(); ++i) out[static_cast<std::size_t>(i)] = D1(v_(i));
    }
    bool has_dual2() const override { return true; }
    void eval_dual2(std::span<const D2>, std::span<D2> out) const override {
        for (int i = 0; i < dim(); ++i) out[static_cast<std::size_t>(i)] = D2(v_(i));
    }

  private:
    Eigen::VectorXd v_;
};

// Autonomous field given by expressions over the coordinate symbols.
class ExprField : public VectorField {
  public:
    explicit ExprField(ExprVec comps);
    int dim() const override { return comps_.dim(); }
    void eval(std::span<const double> x, std::span<double> out) const override { comps_.eval_values(x, out); }
    bool has_dual() const override { return true; }
    void eval_dual(std::span<const D1> x, std::span<D1> out) const override { comps_.eval_values(x, out); }
    bool has_dual2() const override { return true; }
    void eval_dual2(std::span<const D2> x, std::span<D2> out) const override { comps_.eval_values(x, out); }
    const ExprVec& exprs() const { return comps_; }

  private:
    ExprVec comps_;
};

// c1 X1 + c2 X2
class CombinationField : public VectorField {
  public:
    CombinationField(double c1, FieldPtr X1, double c2, FieldPtr X2);
    int dim() const override { return X1_->dim(); }
    void eval(std::span<const double> x, std::span<double> out) const override;
    bool has_dual() const override { return X1_->has_dual() && X2_->has_dual(); }
    void eval_dual(std::span<const D1> x, std::span<D1> out) const override;
    bool has_dual2() const override { return X1_->has_dual2() && X2_->has_dual2(); }
    void eval_dual2(std::span<const D2> x, std::span<D2> out) const override;

  private:
    double c1_, c2_;
    FieldPtr X1_, X2_;
};

// [X, Y](p) = J_Y(p) X(p) - J_X(p) Y(p), computed with directional duals
// when the operands allow it and finite differences otherwise.
class BracketField : public VectorField {
  public:
    BracketField(FieldPtr X, FieldPtr Y);
    int dim() const override { return X_->dim(); }
    void eval(std::span<const double> x, std::span<double> out) const override;
    bool has_dual() const override { return X_->has_dual2() && Y_->has_dual2(); }
    void eval_dual(std::span<const D1> x, std::span<D1> out) const override;

  private:
    FieldPtr X_, Y_;
};

Eigen::VectorXd lie_bracket(const VectorField& X, const VectorField& Y, const Eigen::VectorXd& p);

FieldPtr lie_bracket_field(FieldPtr X, FieldPtr Y);

}  // namespace quasilin

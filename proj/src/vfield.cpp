#include "quasilin/vfield.hpp"

#include <algorithm>
#include <cmath>

namespace quasilin {

namespace {
constexpr double kFdStep = 1e-5;
}

Eigen::VectorXd VectorField::value(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) throw DimensionMismatchError("field evaluated at a point of wrong dimension");
    Eigen::VectorXd out(dim());
    eval({x.data(), static_cast<std::size_t>(x.size())}, {out.data(), static_cast<std::size_t>(out.size())});
    return out;
}

Eigen::MatrixXd VectorField::jacobian(const Eigen::VectorXd& x) const {
    const int d = dim();
    if (x.size() != d) throw DimensionMismatchError("field evaluated at a point of wrong dimension");
    Eigen::MatrixXd J(d, d);
    if (has_dual()) {
        std::vector<D1> in(static_cast<std::size_t>(d));
        std::vector<D1> out(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) {
            for (int i = 0; i < d; ++i) in[static_cast<std::size_t>(i)] = D1(x(i), i == j ? 1.0 : 0.0);
            eval_dual(in, out);
            for (int i = 0; i < d; ++i) J(i, j) = out[static_cast<std::size_t>(i)].dx;
        }
        return J;
    }
    Eigen::VectorXd xp = x, xm = x;
    for (int j = 0; j < d; ++j) {
        double h = kFdStep * std::max(1.0, std::abs(x(j)));
        xp(j) = x(j) + h;
        xm(j) = x(j) - h;
        J.col(j) = (value(xp) - value(xm)) / (2.0 * h);
        xp(j) = x(j);
        xm(j) = x(j);
    }
    return J;
}

Eigen::VectorXd VectorField::directional(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
    const int d = dim();
    if (has_dual()) {
        std::vector<D1> in(static_cast<std::size_t>(d));
        std::vector<D1> out(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) in[static_cast<std::size_t>(i)] = D1(x(i), v(i));
        eval_dual(in, out);
        Eigen::VectorXd r(d);
        for (int i = 0; i < d; ++i) r(i) = out[static_cast<std::size_t>(i)].dx;
        return r;
    }
    double vn = v.norm();
    if (vn == 0.0) return Eigen::VectorXd::Zero(d);
    double h = kFdStep * std::max(1.0, x.norm());
    Eigen::VectorXd dir = v / vn;
    return (value(x + h * dir) - value(x - h * dir)) * (vn / (2.0 * h));
}

ExprField::ExprField(ExprVec comps) : comps_(std::move(comps)) {
    if (comps_.dim() == 0) throw InputError("field has no components");
    if (comps_.dim() != comps_.symbols()->size())
        throw DimensionMismatchError("field needs one component per coordinate symbol");
}

CombinationField::CombinationField(double c1, FieldPtr X1, double c2, FieldPtr X2)
    : c1_(c1), c2_(c2), X1_(std::move(X1)), X2_(std::move(X2)) {
    if (X1_->dim() != X2_->dim()) throw DimensionMismatchError("combined fields live on different spaces");
}

void CombinationField::eval(std::span<const double> x, std::span<double> out) const {
    std::vector<double> tmp(out.size());
    X1_->eval(x, tmp);
    X2_->eval(x, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c1_ * tmp[i] + c2_ * out[i];
}

void CombinationField::eval_dual(std::span<const D1> x, std::span<D1> out) const {
    std::vector<D1> tmp(out.size());
    X1_->eval_dual(x, tmp);
    X2_->eval_dual(x, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = D1(c1_) * tmp[i] + D1(c2_) * out[i];
}

void CombinationField::eval_dual2(std::span<const D2> x, std::span<D2> out) const {
    std::vector<D2> tmp(out.size());
    X1_->eval_dual2(x, tmp);
    X2_->eval_dual2(x, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = D2(c1_) * tmp[i] + D2(c2_) * out[i];
}

BracketField::BracketField(FieldPtr X, FieldPtr Y) : X_(std::move(X)), Y_(std::move(Y)) {
    if (X_->dim() != Y_->dim()) throw DimensionMismatchError("bracketed fields live on different spaces");
}

void BracketField::eval(std::span<const double> x, std::span<double> out) const {
    const std::size_t d = static_cast<std::size_t>(dim());
    if (X_->has_dual() && Y_->has_dual()) {
        std::vector<double> vx(d), vy(d);
        X_->eval(x, vx);
        Y_->eval(x, vy);
        std::vector<D1> in(d), oy(d), ox(d);
        for (std::size_t i = 0; i < d; ++i) in[i] = D1(x[i], vx[i]);
        Y_->eval_dual(in, oy);  // J_Y X
        for (std::size_t i = 0; i < d; ++i) in[i] = D1(x[i], vy[i]);
        X_->eval_dual(in, ox);  // J_X Y
        for (std::size_t i = 0; i < d; ++i) out[i] = oy[i].dx - ox[i].dx;
        return;
    }
    Eigen::VectorXd p(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) p(static_cast<Eigen::Index>(i)) = x[i];
    Eigen::VectorXd r = Y_->directional(p, X_->value(p)) - X_->directional(p, Y_->value(p));
    for (std::size_t i = 0; i < d; ++i) out[i] = r(static_cast<Eigen::Index>(i));
}

void BracketField::eval_dual(std::span<const D1> x, std::span<D1> out) const {
    const std::size_t d = static_cast<std::size_t>(dim());
    std::vector<D1> vx(d), vy(d);
    X_->eval_dual(x, vx);
    Y_->eval_dual(x, vy);
    std::vector<D2> in(d), oy(d), ox(d);
    for (std::size_t i = 0; i < d; ++i) in[i] = D2(x[i], vx[i]);
    Y_->eval_dual2(in, oy);
    for (std::size_t i = 0; i < d; ++i) in[i] = D2(x[i], vy[i]);
    X_->eval_dual2(in, ox);
    for (std::size_t i = 0; i < d; ++i) out[i] = oy[i].dx - ox[i].dx;
}

Eigen::VectorXd lie_bracket(const VectorField& X, const VectorField& Y, const Eigen::VectorXd& p) {
    if (X.dim() != Y.dim()) throw DimensionMismatchError("bracketed fields live on different spaces");
    if (p.size() != X.dim()) throw DimensionMismatchError("bracket evaluated at a point of wrong dimension");
    return Y.directional(p, X.value(p)) - X.directional(p, Y.value(p));
}

FieldPtr lie_bracket_field(FieldPtr X, FieldPtr Y) {
    return std::make_shared<BracketField>(std::move(X), std::move(Y));
}

}  // namespace quasilin

#include "quasilin/system.hpp"

#include <algorithm>

namespace quasilin {

namespace {

// Evaluates f with the control slots frozen; dual-capable at both orders.
class FrozenControlField : public VectorField {
  public:
    FrozenControlField(ExprVec f, int n, Eigen::VectorXd u_bar)
        : f_(std::move(f)), n_(n), u_(std::move(u_bar)) {}

    int dim() const override { return n_; }

    void eval(std::span<const double> x, std::span<double> out) const override {
        std::vector<double> vals(static_cast<std::size_t>(n_ + u_.size()));
        for (int i = 0; i < n_; ++i) vals[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
        for (int i = 0; i < u_.size(); ++i) vals[static_cast<std::size_t>(n_ + i)] = u_(i);
        f_.eval_values<double>(vals, out);
    }
    bool has_dual() const override { return true; }
    void eval_dual(std::span<const D1> x, std::span<D1> out) const override { eval_t<D1>(x, out); }
    bool has_dual2() const override { return true; }
    void eval_dual2(std::span<const D2> x, std::span<D2> out) const override { eval_t<D2>(x, out); }

  private:
    template <class T>
    void eval_t(std::span<const T> x, std::span<T> out) const {
        std::vector<T> vals(static_cast<std::size_t>(n_ + u_.size()));
        for (int i = 0; i < n_; ++i) vals[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
        for (int i = 0; i < u_.size(); ++i) vals[static_cast<std::size_t>(n_ + i)] = T(u_(i));
        f_.eval_values<T>(vals, out);
    }

    ExprVec f_;
    int n_;
    Eigen::VectorXd u_;
};

// x -> column `col` of df/du at (x, u_bar). Values need one dual level on
// the control slot; differentiating the field itself needs the second.
class ControlJacobianColumnField : public VectorField {
  public:
    ControlJacobianColumnField(ExprVec f, int n, Eigen::VectorXd u_bar, int col)
        : f_(std::move(f)), n_(n), u_(std::move(u_bar)), col_(col) {}

    int dim() const override { return n_; }

    void eval(std::span<const double> x, std::span<double> out) const override {
        std::vector<D1> vals(static_cast<std::size_t>(n_ + u_.size()));
        for (int i = 0; i < n_; ++i) vals[static_cast<std::size_t>(i)] = D1(x[static_cast<std::size_t>(i)]);
        for (int i = 0; i < u_.size(); ++i) vals[static_cast<std::size_t>(n_ + i)] = D1(u_(i), i == col_ ? 1.0 : 0.0);
        std::vector<D1> o(static_cast<std::size_t>(n_));
        f_.eval_values<D1>(vals, o);
        for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = o[static_cast<std::size_t>(i)].dx;
    }

    bool has_dual() const override { return true; }
    void eval_dual(std::span<const D1> x, std::span<D1> out) const override {
        std::vector<D2> vals(static_cast<std::size_t>(n_ + u_.size()));
        for (int i = 0; i < n_; ++i) vals[static_cast<std::size_t>(i)] = D2(x[static_cast<std::size_t>(i)], D1(0.0));
        for (int i = 0; i < u_.size(); ++i)
            vals[static_cast<std::size_t>(n_ + i)] = D2(D1(u_(i)), D1(i == col_ ? 1.0 : 0.0));
        std::vector<D2> o(static_cast<std::size_t>(n_));
        f_.eval_values<D2>(vals, o);
        for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = o[static_cast<std::size_t>(i)].dx;
    }

  private:
    ExprVec f_;
    int n_;
    Eigen::VectorXd u_;
    int col_;
};

class ClosedLoopField : public VectorField {
  public:
    ClosedLoopField(ExprVec f, int n, int m, FeedbackPtr alpha)
        : f_(std::move(f)), n_(n), m_(m), alpha_(std::move(alpha)) {
        if (alpha_->in_dim() != n_ || alpha_->out_dim() != m_)
            throw DimensionMismatchError("feedback dimensions do not match the system");
    }

    int dim() const override { return n_; }
    void eval(std::span<const double> x, std::span<double> out) const override { eval_t<double>(x, out); }
    bool has_dual() const override { return alpha_->has_dual(); }
    void eval_dual(std::span<const D1> x, std::span<D1> out) const override { eval_t<D1>(x, out); }
    bool has_dual2() const override { return alpha_->has_dual2(); }
    void eval_dual2(std::span<const D2> x, std::span<D2> out) const override { eval_t<D2>(x, out); }

  private:
    template <class T>
    void eval_t(std::span<const T> x, std::span<T> out) const {
        std::vector<T> u(static_cast<std::size_t>(m_));
        if constexpr (std::is_same_v<T, double>)
            alpha_->eval(x, u);
        else if constexpr (std::is_same_v<T, D1>)
            alpha_->eval_dual(x, u);
        else
            alpha_->eval_dual2(x, u);
        std::vector<T> vals(static_cast<std::size_t>(n_ + m_));
        for (int i = 0; i < n_; ++i) vals[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
        for (int i = 0; i < m_; ++i) vals[static_cast<std::size_t>(n_ + i)] = u[static_cast<std::size_t>(i)];
        f_.eval_values<T>(vals, out);
    }

    ExprVec f_;
    int n_, m_;
    FeedbackPtr alpha_;
};

}  // namespace

void ControlSystem::validate() const {
    if (states.empty() || controls.empty()) throw InputError("system needs at least one state and one control");
    if (f.dim() != n()) throw DimensionMismatchError("f has " + std::to_string(f.dim()) + " components for " +
                                                     std::to_string(n()) + " states");
    if (box.dim() != n() + m()) throw DimensionMismatchError("box dimension differs from state + control count");
    if (base_point.size() != n() + m()) throw DimensionMismatchError("base point dimension differs from state + control count");
    std::vector<std::string> all = states;
    all.insert(all.end(), controls.begin(), controls.end());
    if (!(*f.symbols() == SymbolTable(all))) throw InputError("f symbols must be the states followed by the controls");
    for (int i = 0; i < box.dim(); ++i)
        if (box.axes[static_cast<std::size_t>(i)].lo >= box.axes[static_cast<std::size_t>(i)].hi)
            throw InputError("box interval " + std::to_string(i) + " is empty");
    if (!box.contains(base_point)) throw InputError("base point lies outside the box");
}

Eigen::VectorXd ControlSystem::f_at(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    std::vector<double> vals(static_cast<std::size_t>(n() + m()));
    for (int i = 0; i < n(); ++i) vals[static_cast<std::size_t>(i)] = x(i);
    for (int i = 0; i < m(); ++i) vals[static_cast<std::size_t>(n() + i)] = u(i);
    Eigen::VectorXd out(n());
    f.eval_values<double>(vals, {out.data(), static_cast<std::size_t>(out.size())});
    return out;
}

Eigen::MatrixXd ControlSystem::dfdx(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    std::vector<double> vals(static_cast<std::size_t>(n() + m()));
    for (int i = 0; i < n(); ++i) vals[static_cast<std::size_t>(i)] = x(i);
    for (int i = 0; i < m(); ++i) vals[static_cast<std::size_t>(n() + i)] = u(i);
    std::vector<int> idx(static_cast<std::size_t>(n()));
    for (int i = 0; i < n(); ++i) idx[static_cast<std::size_t>(i)] = i;
    return f.jacobian_values(vals, idx);
}

Eigen::MatrixXd ControlSystem::dfdu(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    std::vector<double> vals(static_cast<std::size_t>(n() + m()));
    for (int i = 0; i < n(); ++i) vals[static_cast<std::size_t>(i)] = x(i);
    for (int i = 0; i < m(); ++i) vals[static_cast<std::size_t>(n() + i)] = u(i);
    std::vector<int> idx(static_cast<std::size_t>(m()));
    for (int i = 0; i < m(); ++i) idx[static_cast<std::size_t>(i)] = n() + i;
    return f.jacobian_values(vals, idx);
}

FieldPtr ControlSystem::frozen_control_field(const Eigen::VectorXd& u_bar) const {
    return std::make_shared<FrozenControlField>(f, n(), u_bar);
}

FieldPtr ControlSystem::control_jacobian_column_field(const Eigen::VectorXd& u_bar, int col) const {
    return std::make_shared<ControlJacobianColumnField>(f, n(), u_bar, col);
}

FieldPtr ControlSystem::closed_loop_field(FeedbackPtr alpha) const {
    return std::make_shared<ClosedLoopField>(f, n(), m(), std::move(alpha));
}

FieldPtr ControlSystem::difference_field(FeedbackPtr alpha1, FeedbackPtr alpha2) const {
    FieldPtr f1 = closed_loop_field(std::move(alpha1));
    FieldPtr f2 = closed_loop_field(std::move(alpha2));
    return std::make_shared<CombinationField>(1.0, std::move(f1), -1.0, std::move(f2));
}

LinearPair ControlSystem::linearize(const Eigen::VectorXd& point) const {
    if (point.size() != n() + m()) throw DimensionMismatchError("linearization point has wrong dimension");
    return {dfdx(point.head(n()), point.tail(m())), dfdu(point.head(n()), point.tail(m()))};
}

ControlSystem make_linear_system(const LinearPair& p, double box_halfwidth) {
    p.validate();
    const int n = p.n();
    const int m = p.m();
    std::vector<std::string> states, controls, all;
    for (int i = 0; i < n; ++i) states.push_back("x" + std::to_string(i + 1));
    for (int i = 0; i < m; ++i) controls.push_back("u" + std::to_string(i + 1));
    all = states;
    all.insert(all.end(), controls.begin(), controls.end());
    SymbolsPtr syms = make_symbols(all);

    std::vector<Expr> comps;
    for (int i = 0; i < n; ++i) {
        Expr e = Expr::constant(syms, 0.0);
        bool any = false;
        for (int j = 0; j < n; ++j) {
            if (p.A(i, j) == 0.0) continue;
            Expr term = Expr::constant(syms, p.A(i, j)) * Expr::variable(syms, states[static_cast<std::size_t>(j)]);
            e = any ? e + term : term;
            any = true;
        }
        for (int j = 0; j < m; ++j) {
            if (p.B(i, j) == 0.0) continue;
            Expr term = Expr::constant(syms, p.B(i, j)) * Expr::variable(syms, controls[static_cast<std::size_t>(j)]);
            e = any ? e + term : term;
            any = true;
        }
        comps.push_back(e);
    }

    ControlSystem sys;
    sys.name = "linear";
    sys.states = states;
    sys.controls = controls;
    sys.f = ExprVec(std::move(comps));
    sys.box.axes.assign(static_cast<std::size_t>(n + m), Interval{-box_halfwidth, box_halfwidth});
    sys.base_point = Eigen::VectorXd::Zero(n + m);
    sys.validate();
    return sys;
}

}  // namespace quasilin

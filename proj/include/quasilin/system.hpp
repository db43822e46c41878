// A control system dx/dt = f(x, u) over named state and control symbols,
// restricted to a product box, with a marked base point.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "quasilin/expr.hpp"
#include "quasilin/feedback.hpp"
#include "quasilin/linsys.hpp"
#include "quasilin/vfield.hpp"

namespace quasilin {

struct ControlSystem {
    std::string name;
    std::vector<std::string> states;
    std::vector<std::string> controls;
    ExprVec f;                    // over states followed by controls
    Box box;                      // n + m intervals, same order
    Eigen::VectorXd base_point;   // n + m values

    int n() const { return static_cast<int>(states.size()); }
    int m() const { return static_cast<int>(controls.size()); }

    void validate() const;

    Eigen::VectorXd state_part(const Eigen::VectorXd& xu) const { return xu.head(n()); }
    Eigen::VectorXd control_part(const Eigen::VectorXd& xu) const { return xu.tail(m()); }
    Box state_box() const { return box.sub(0, n()); }
    Box control_box() const { return box.sub(n(), m()); }

    Eigen::VectorXd f_at(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    Eigen::MatrixXd dfdx(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    Eigen::MatrixXd dfdu(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

    // x -> f(x, u_bar)
    FieldPtr frozen_control_field(const Eigen::VectorXd& u_bar) const;
    // x -> (d f / d u_col)(x, u_bar)
    FieldPtr control_jacobian_column_field(const Eigen::VectorXd& u_bar, int col) const;
    // x -> f(x, alpha(x))
    FieldPtr closed_loop_field(FeedbackPtr alpha) const;
    // x -> f(x, alpha1(x)) - f(x, alpha2(x))
    FieldPtr difference_field(FeedbackPtr alpha1, FeedbackPtr alpha2) const;

    // First-order pair (df/dx, df/du) at the given combined point.
    LinearPair linearize(const Eigen::VectorXd& point) const;
};

// dx/dt = A x + B u as an expression-backed system on a centered box.
ControlSystem make_linear_system(const LinearPair& p, double box_halfwidth = 2.0);

}  // namespace quasilin

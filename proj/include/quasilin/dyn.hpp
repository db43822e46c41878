#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "quasilin/feedback.hpp"
#include "quasilin/linsys.hpp"
#include "quasilin/system.hpp"
#include "quasilin/vfield.hpp"

namespace quasilin {

// Open-loop control signal t -> u(t).  Piecewise-defined controls report a
// left limit at their breakpoints so integrators can close each interval.
class Control {
  public:
    virtual ~Control() = default;
    virtual int dim() const = 0;
    virtual Eigen::VectorXd at(double t, bool left_limit = false) const = 0;
};

class ExprControl : public Control {
  public:
    explicit ExprControl(ExprVec components);
    int dim() const override { return components_.dim(); }
    Eigen::VectorXd at(double t, bool left_limit) const override;

  private:
    ExprVec components_;
};

class LambdaControl : public Control {
  public:
    LambdaControl(int dim, std::function<Eigen::VectorXd(double)> fn) : dim_(dim), fn_(std::move(fn)) {}
    int dim() const override { return dim_; }
    Eigen::VectorXd at(double t, bool) const override { return fn_(t); }

  private:
    int dim_;
    std::function<Eigen::VectorXd(double)> fn_;
};

class PiecewiseConstantControl : public Control {
  public:
    // values[k] holds on [breaks[k], breaks[k+1]); breaks has one more entry
    // than values and must be strictly increasing.
    PiecewiseConstantControl(std::vector<double> breaks, std::vector<Eigen::VectorXd> values);
    int dim() const override { return dim_; }
    Eigen::VectorXd at(double t, bool left_limit) const override;

  private:
    std::vector<double> breaks_;
    std::vector<Eigen::VectorXd> values_;
    int dim_;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<Eigen::VectorXd> controls;
    bool exited = false;
    double exit_time = 0.0;
};

// Classic fourth-order Runge-Kutta with fixed step; truncates when the state
// leaves the state box.
Trajectory integrate(const ControlSystem& sys, const Eigen::VectorXd& x0, const Control& u, double T, double dt);
Trajectory integrate_closed_loop(const ControlSystem& sys, const Eigen::VectorXd& x0, const Feedback& alpha,
                                 double T, double dt);

// Flow of an autonomous field for a signed time; throws BoxExitError when the
// trajectory leaves the box.
Eigen::VectorXd flow_point(const VectorField& X, const Box& box, Eigen::VectorXd x, double time, double dt);

struct ChatterResult {
    Trajectory switched;
    Trajectory averaged;
    double sup_error = 0.0;
    int segments = 0;
    double dt_used = 0.0;
};

// Fast switching between two fields against the averaged field (X1+X2)/2.
// Each of `segments` subintervals runs X1 on its first half and X2 on its
// second; the step is adjusted to divide the half-interval exactly.
ChatterResult chatter_compare(const VectorField& X1, const VectorField& X2, const Box& box,
                              const Eigen::VectorXd& x0, double T, int segments, double dt);

// Composition of flows: coords (xi_1..xi_d) map to
// Y1_{xi_1}( Y2_{xi_2}( ... Yd_{xi_d}(base) ) ), innermost field applied first.
Eigen::VectorXd flow_coords(const std::vector<FieldPtr>& fields, const Box& box, const Eigen::VectorXd& base,
                            const Eigen::VectorXd& xi, double dt);

// Value of the pushforward of X under the time-s flow of Y, at point p.
// The differential is transported by central differences along the flow.
Eigen::VectorXd pushforward_value(const VectorField& Y, double s, const VectorField& X, const Eigen::VectorXd& p,
                                  const Box& box, double dt);

struct OrbitParams {
    std::vector<double> probe_times = {0.05, 0.1};
    double dt = 1e-3;
    double rel_tol = 1e-9;
    int max_depth = 2;
};

struct OrbitResult {
    int dimension = 0;
    int vectors_used = 0;
};

// Dimension at `base` of the span generated by the fields and their
// pushforwards under short flow compositions (up to max_depth flows).
OrbitResult orbit_dimension(const std::vector<FieldPtr>& fields, const Box& box, const Eigen::VectorXd& base,
                            const OrbitParams& params = {});

// Candidate conjugacy x -> (chi_I(x), chi_II(x,u)) onto a linear pair.  Both
// parts are expressions over states ++ controls; the state part must not
// actually depend on the controls (measured by triangularity_defect).
struct Conjugation {
    ExprVec chi_I;
    ExprVec chi_II;
    std::optional<ExprVec> chi_I_inverse;
};

// Max over samples of | Dx(chi_I) f(x,u) - A chi_I(x) - B chi_II(x,u) |.
double conjugacy_residual(const ControlSystem& sys, const LinearPair& target, const Conjugation& chi,
                          const std::vector<Eigen::VectorXd>& points);

// Max over samples of the Frobenius norm of d(chi_I)/du.
double triangularity_defect(const ControlSystem& sys, const Conjugation& chi,
                            const std::vector<Eigen::VectorXd>& points);

struct DynamicCheck {
    Trajectory traj;                    // (x, u) path of the nonlinear system
    std::vector<Eigen::VectorXd> z;     // co-integrated linear state
    double max_deviation = 0.0;         // sup_t | z(t) - chi_I(x(t)) |
    double triangularity = 0.0;
};

// Integrates the system and the target pair side by side, driving the linear
// state with chi_II(x(t), u(t)) from the nonlinear trajectory.
DynamicCheck verify_conjugacy_dynamic(const ControlSystem& sys, const LinearPair& target, const Conjugation& chi,
                                      const Eigen::VectorXd& x0, const Control& u, double T, double dt,
                                      int defect_samples = 64, std::uint64_t seed = 42);

struct SmoothResult {
    FeedbackPtr feedback;
    double width = 0.0;      // kernel width, 0 when passed through unchanged
    double max_error = 0.0;  // certified sup deviation from the input
    bool passthrough = false;
};

// Smooth approximation of a feedback law within eps on its box.  Feedbacks
// that are already smooth pass through; sampled feedbacks are mollified with
// a bump kernel whose width is halved until a denser certification grid
// accepts it.  Throws CannotAchieveError when the width drops below the data
// spacing before certification succeeds.
SmoothResult smooth_feedback(FeedbackPtr fb, double eps, int certify_factor = 10);

}  // namespace quasilin

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "quasilin/dyn.hpp"
#include "quasilin/numlin.hpp"
#include "quasilin/sampling.hpp"
#include "quasilin/system.hpp"

using namespace quasilin;

namespace {

ControlSystem build_system(const std::vector<std::string>& states, const std::vector<std::string>& controls,
                           const std::vector<std::string>& rhs, double halfwidth) {
    ControlSystem sys;
    sys.states = states;
    sys.controls = controls;
    std::vector<std::string> names = states;
    names.insert(names.end(), controls.begin(), controls.end());
    auto syms = make_symbols(names);
    std::vector<Expr> comps;
    for (const std::string& c : rhs) comps.push_back(parse_expr(c, syms));
    sys.f = ExprVec(std::move(comps));
    for (std::size_t i = 0; i < names.size(); ++i) sys.box.axes.push_back({-halfwidth, halfwidth});
    sys.base_point = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(names.size()));
    sys.validate();
    return sys;
}

ExprVec field2(const std::string& c1, const std::string& c2) {
    auto syms = make_symbols({"x", "y"});
    return ExprVec({parse_expr(c1, syms), parse_expr(c2, syms)});
}

Conjugation cubic_chi() {
    auto syms = make_symbols({"x", "u"});
    Conjugation chi;
    chi.chi_I = ExprVec({parse_expr("x", syms)});
    chi.chi_II = ExprVec({parse_expr("u^3", syms)});
    return chi;
}

LinearPair cubic_pair() {
    Eigen::MatrixXd A(1, 1), B(1, 1);
    A << 0;
    B << 1;
    return {A, B};
}

double max_state_gap(const Trajectory& a, const Trajectory& b) {
    REQUIRE(a.states.size() == b.states.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < a.states.size(); ++k) worst = std::max(worst, (a.states[k] - b.states[k]).norm());
    return worst;
}

}  // namespace

TEST_CASE("controls evaluate with left limits at breakpoints") {
    ExprControl sine(ExprVec({parse_expr("0.5*sin(t)", make_symbols({"t"}))}));
    CHECK(sine.dim() == 1);
    CHECK(sine.at(0.3, false)(0) == doctest::Approx(0.5 * std::sin(0.3)));

    PiecewiseConstantControl steps({0.0, 0.5, 1.0},
                                   {Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, -1.0)});
    CHECK(steps.at(0.25, false)(0) == 1.0);
    CHECK(steps.at(0.5, false)(0) == -1.0);        // right-continuous value
    CHECK(steps.at(0.5, true)(0) == 1.0);   // left limit
    CHECK(steps.at(0.75, false)(0) == -1.0);
    CHECK_THROWS_AS(PiecewiseConstantControl({0.0, 0.0}, {Eigen::VectorXd::Constant(1, 1.0)}), InputError);
}

TEST_CASE("integration is fourth-order accurate") {
    // dx/dt = x with u frozen to zero: exact flow e^t.
    ControlSystem sys = build_system({"x"}, {"u"}, {"x + 0*u"}, 4.0);
    ConstantFeedback zero(1, Eigen::VectorXd::Zero(1));
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 1.0);

    auto err_at = [&](double dt) {
        Trajectory t = integrate_closed_loop(sys, x0, zero, 1.0, dt);
        return std::abs(t.states.back()(0) - std::exp(1.0));
    };
    double coarse = err_at(0.05), fine = err_at(0.005);
    CHECK(fine < coarse);
    CHECK(coarse / fine > 5e3);  // h^4 predicts 1e4
    CHECK(err_at(1e-3) < 1e-12);
}

TEST_CASE("step integral of a piecewise constant control is exact") {
    ControlSystem sys = build_system({"x"}, {"u"}, {"u"}, 4.0);
    PiecewiseConstantControl u({0.0, 0.5, 1.0},
                               {Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 0.0)});
    Trajectory t = integrate(sys, Eigen::VectorXd::Zero(1), u, 1.0, 0.05);
    CHECK(t.states.back()(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(t.times.size() == 21);
    CHECK(t.controls.front()(0) == 1.0);
    CHECK(t.controls.back()(0) == 0.0);
}

TEST_CASE("leaving the box truncates or throws") {
    ControlSystem sys = build_system({"x"}, {"u"}, {"u"}, 1.0);
    LambdaControl two(1, [](double) { return Eigen::VectorXd::Constant(1, 2.0); });
    // The control box only allows |u| <= 1; use a closed-loop push instead.
    ConstantFeedback push(1, Eigen::VectorXd::Constant(1, 1.0));
    Trajectory t = integrate_closed_loop(sys, Eigen::VectorXd::Zero(1), push, 2.0, 1e-2);
    CHECK(t.exited);
    CHECK(t.exit_time == doctest::Approx(1.0).epsilon(0.02));
    CHECK(t.states.back()(0) >= 1.0);
    CHECK(t.times.size() < 202);
    (void)two;

    ConstantField right(Eigen::VectorXd::Constant(1, 1.0));
    Box box;
    box.axes = {{-1.0, 1.0}};
    CHECK_THROWS_AS(flow_point(right, box, Eigen::VectorXd::Zero(1), 2.0, 1e-2), BoxExitError);
    Eigen::VectorXd ok = flow_point(right, box, Eigen::VectorXd::Zero(1), 0.5, 1e-2);
    CHECK(ok(0) == doctest::Approx(0.5));
    // Signed time flows backward.
    Eigen::VectorXd back = flow_point(right, box, Eigen::VectorXd::Zero(1), -0.5, 1e-2);
    CHECK(back(0) == doctest::Approx(-0.5));
}

TEST_CASE("uniform convergence under perturbed fields") {
    // Rotation field plus a 1/k constant defect, realized through the control.
    ControlSystem sys = build_system({"x", "y"}, {"u1", "u2"}, {"y + u1", "-x + u2"}, 4.0);
    Eigen::VectorXd x0(2);
    x0 << 1.0, 0.0;
    auto run = [&](double defect) {
        LambdaControl u(2, [defect](double) {
            Eigen::VectorXd v(2);
            v << defect, 0.0;
            return v;
        });
        return integrate(sys, x0, u, 1.0, 1e-3);
    };
    Trajectory limit = run(0.0);
    double err10 = max_state_gap(run(0.1), limit);
    double err100 = max_state_gap(run(0.01), limit);
    CHECK(err100 < err10);
    CHECK(err100 < 0.02);
}

TEST_CASE("uniform convergence under oscillating control perturbations") {
    ControlSystem sys = build_system({"x", "y"}, {"u"}, {"y", "-sin(x) + u"}, 4.0);
    Eigen::VectorXd x0(2);
    x0 << 0.5, 0.0;

    auto square_wave = [&](double amplitude) {
        std::vector<double> breaks;
        std::vector<Eigen::VectorXd> values;
        for (int k = 0; k < 20; ++k) {
            breaks.push_back(0.05 * k);
            values.push_back(Eigen::VectorXd::Constant(1, 0.2 + (k % 2 ? amplitude : -amplitude)));
        }
        breaks.push_back(1.0);
        return PiecewiseConstantControl(breaks, values);
    };
    LambdaControl base(1, [](double) { return Eigen::VectorXd::Constant(1, 0.2); });
    Trajectory limit = integrate(sys, x0, base, 1.0, 1e-3);
    double err10 = max_state_gap(integrate(sys, x0, square_wave(0.1), 1.0, 1e-3), limit);
    double err100 = max_state_gap(integrate(sys, x0, square_wave(0.01), 1.0, 1e-3), limit);
    CHECK(err100 < err10);
}

TEST_CASE("chattering between opposite constants has a sawtooth gap") {
    ConstantField plus(Eigen::VectorXd::Constant(1, 1.0));
    ConstantField minus(Eigen::VectorXd::Constant(1, -1.0));
    Box box;
    box.axes = {{-2.0, 2.0}};
    for (int l : {5, 10, 20}) {
        ChatterResult r = chatter_compare(plus, minus, box, Eigen::VectorXd::Zero(1), 1.0, l, 1e-3);
        CHECK(std::abs(r.sup_error - 1.0 / (2 * l)) < 1e-6);
        CHECK(r.segments == l);
        // The averaged field vanishes: its trajectory stays at the start.
        CHECK(r.averaged.states.back().norm() < 1e-12);
        CHECK_FALSE(r.switched.exited);
    }
    // The forced step divides the half-interval even for awkward dt.
    ChatterResult odd = chatter_compare(plus, minus, box, Eigen::VectorXd::Zero(1), 1.0, 7, 0.003);
    double half = 1.0 / 14.0;
    int per_half = static_cast<int>(std::round(half / odd.dt_used));
    CHECK(std::abs(per_half * odd.dt_used - half) < 1e-12);
    CHECK(odd.dt_used <= 0.003 + 1e-15);
}

TEST_CASE("chattering error decays as the switching speeds up") {
    auto X1 = std::make_shared<ExprField>(field2("y", "0"));
    auto X2 = std::make_shared<ExprField>(field2("0", "x"));
    Box box;
    box.axes = {{-5.0, 5.0}, {-5.0, 5.0}};
    Eigen::VectorXd x0(2);
    x0 << 1.0, 1.0;
    double prev = 1e100;
    for (int l : {4, 8, 16, 32}) {
        ChatterResult r = chatter_compare(*X1, *X2, box, x0, 1.0, l, 1e-3);
        CHECK(r.sup_error < prev);
        prev = r.sup_error;
    }
    CHECK(prev < 0.05);
}

TEST_CASE("flow coordinates hit closed-form flows and invert cleanly") {
    auto tangent = std::make_shared<ExprField>(ExprVec({parse_expr("1 + x^2", make_symbols({"x"}))}));
    Box line;
    line.axes = {{-3.0, 3.0}};
    Eigen::VectorXd origin = Eigen::VectorXd::Zero(1);
    Eigen::VectorXd xi = Eigen::VectorXd::Constant(1, 0.5);
    Eigen::VectorXd y = flow_coords({tangent}, line, origin, xi, 1e-3);
    CHECK(y(0) == doctest::Approx(std::tan(0.5)).epsilon(1e-10));

    // Two non-commuting fields: composing with the negated times in reverse
    // order returns to the base point.
    auto Y1 = std::make_shared<ConstantField>(Eigen::Vector2d(1.0, 0.0));
    auto Y2 = std::make_shared<ExprField>(field2("0", "x"));
    Box plane;
    plane.axes = {{-4.0, 4.0}, {-4.0, 4.0}};
    Eigen::VectorXd base(2);
    base << 0.5, -0.25;
    Eigen::VectorXd coords(2);
    coords << 0.3, -0.4;
    Eigen::VectorXd fwd = flow_coords({Y1, Y2}, plane, base, coords, 1e-3);
    Eigen::VectorXd backtracked = flow_point(*Y1, plane, fwd, -coords(0), 1e-3);
    backtracked = flow_point(*Y2, plane, backtracked, -coords(1), 1e-3);
    CHECK((backtracked - base).norm() <= 1e-6);
}

TEST_CASE("pushforward through a linear flow matches the matrix exponential") {
    // Y(x) = (y, 0): flow is the shear (x + s y, y); d(flow) = [[1, s], [0, 1]].
    auto Y = std::make_shared<ExprField>(field2("y", "0"));
    auto X = std::make_shared<ConstantField>(Eigen::Vector2d(0.0, 1.0));
    Box plane;
    plane.axes = {{-3.0, 3.0}, {-3.0, 3.0}};
    Eigen::VectorXd p(2);
    p << 0.5, 0.2;
    double s = 0.3;
    Eigen::VectorXd v = pushforward_value(*Y, s, *X, p, plane, 1e-3);
    CHECK(v(0) == doctest::Approx(s).epsilon(1e-6));
    CHECK(v(1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("orbit dimensions of elementary families") {
    Box plane;
    plane.axes = {{-3.0, 3.0}, {-3.0, 3.0}};

    // A single constant field explores a line.
    auto E1 = std::make_shared<ConstantField>(Eigen::Vector2d(1.0, 0.0));
    CHECK(orbit_dimension({E1}, plane, Eigen::VectorXd::Zero(2)).dimension == 1);

    // (1,0) and (0,x): full plane once the flow moves x off zero.
    auto shear = std::make_shared<ExprField>(field2("0", "x"));
    Eigen::VectorXd at(2);
    at << 1.0, 0.0;
    CHECK(orbit_dimension({E1, shear}, plane, at).dimension == 2);
    CHECK(orbit_dimension({E1, shear}, plane, Eigen::VectorXd::Zero(2)).dimension == 2);

    // The shear alone at x = 0 never leaves the origin.
    CHECK(orbit_dimension({shear}, plane, Eigen::VectorXd::Zero(2)).dimension == 0);
}

TEST_CASE("orbit of linear difference fields stays in the input range") {
    LinearPair p = canonical_pair({2, 1}, 2);
    ControlSystem sys = make_linear_system(p);
    auto zero = std::make_shared<ConstantFeedback>(3, Eigen::VectorXd::Zero(2));
    std::vector<FieldPtr> fields;
    for (int j = 0; j < 2; ++j) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(2);
        c(j) = 1.0;
        fields.push_back(sys.difference_field(std::make_shared<ConstantFeedback>(3, c), zero));
    }
    auto linear_fb = std::make_shared<ExprFeedback>(
        ExprVec({parse_expr("x1", make_symbols({"x1", "x2", "x3"})),
                 parse_expr("x2", make_symbols({"x1", "x2", "x3"}))}));
    fields.push_back(sys.difference_field(linear_fb, zero));

    OrbitResult orr = orbit_dimension(fields, sys.state_box(), Eigen::VectorXd::Zero(3));
    CHECK(orr.dimension == numerical_rank(p.B));
}

TEST_CASE("static residual and dynamic deviation agree for the cubic model") {
    ControlSystem sys = build_system({"x"}, {"u"}, {"u^3"}, 1.0);
    Conjugation chi = cubic_chi();
    LinearPair target = cubic_pair();

    std::vector<Eigen::VectorXd> pts = box_points(sys.box, 101, 42);
    CHECK(conjugacy_residual(sys, target, chi, pts) <= 1e-12);
    CHECK(triangularity_defect(sys, chi, pts) == 0.0);

    ExprControl sine(ExprVec({parse_expr("sin(t)", make_symbols({"t"}))}));
    DynamicCheck ok = verify_conjugacy_dynamic(sys, target, chi, Eigen::VectorXd::Zero(1), sine, 1.0, 1e-3);
    CHECK(ok.max_deviation < 1e-6);

    // Corrupt the control part: both checks must light up together.
    Conjugation bad = cubic_chi();
    bad.chi_II = ExprVec({parse_expr("u^3 + 0.1", make_symbols({"x", "u"}))});
    CHECK(conjugacy_residual(sys, target, bad, pts) >= 0.09);
    DynamicCheck drift = verify_conjugacy_dynamic(sys, target, bad, Eigen::VectorXd::Zero(1), sine, 1.0, 1e-3);
    CHECK(drift.max_deviation > 1e-2);
}

TEST_CASE("state parts that touch the control are reported as defects") {
    ControlSystem sys = build_system({"x"}, {"u"}, {"u^3"}, 1.0);
    auto syms = make_symbols({"x", "u"});
    Conjugation skew;
    skew.chi_I = ExprVec({parse_expr("x + 0.01*u", syms)});
    skew.chi_II = ExprVec({parse_expr("u^3", syms)});
    std::vector<Eigen::VectorXd> pts = box_points(sys.box, 32, 1);
    CHECK(triangularity_defect(sys, skew, pts) == doctest::Approx(0.01));
}

TEST_CASE("difference fields transport through the state part of a conjugacy") {
    // Pendulum rewritten in the coordinates y = (x1, x1 + x2): solutions,
    // and hence integral curves of feedback differences, must correspond.
    ControlSystem orig = build_system({"x1", "x2"}, {"u"}, {"x2", "-sin(x1) + u"}, 4.0);
    // y1' = y2 - y1, y2' = y1' + x2' = (y2 - y1) - sin(y1) + u
    ControlSystem moved =
        build_system({"y1", "y2"}, {"u"}, {"y2 - y1", "y2 - y1 - sin(y1) + u"}, 8.0);

    auto a1 = std::make_shared<ExprFeedback>(ExprVec({parse_expr("0.3 - x2", make_symbols({"x1", "x2"}))}));
    auto a2 = std::make_shared<ExprFeedback>(ExprVec({parse_expr("-0.2*x1", make_symbols({"x1", "x2"}))}));
    // The same feedbacks seen through y: x1 = y1, x2 = y2 - y1.
    auto b1 = std::make_shared<ExprFeedback>(
        ExprVec({parse_expr("0.3 - (y2 - y1)", make_symbols({"y1", "y2"}))}));
    auto b2 = std::make_shared<ExprFeedback>(ExprVec({parse_expr("-0.2*y1", make_symbols({"y1", "y2"}))}));

    FieldPtr df = orig.difference_field(a1, a2);
    FieldPtr dg = moved.difference_field(b1, b2);

    Eigen::VectorXd x0(2);
    x0 << 0.4, -0.3;
    Eigen::MatrixXd T(2, 2);
    T << 1, 0, 1, 1;

    Eigen::VectorXd end_x = flow_point(*df, orig.state_box(), x0, 0.5, 1e-4);
    Eigen::VectorXd end_y = flow_point(*dg, moved.state_box(), T * x0, 0.5, 1e-4);
    CHECK((T * end_x - end_y).norm() < 1e-5);
}

TEST_CASE("already-smooth feedbacks pass through the smoother") {
    auto alpha = std::make_shared<ExprFeedback>(ExprVec({parse_expr("-x", make_symbols({"x"}))}));
    SmoothResult r = smooth_feedback(alpha, 0.5);
    CHECK(r.passthrough);
    CHECK(r.max_error == 0.0);
    CHECK(r.feedback == alpha);
}

TEST_CASE("grid feedbacks are mollified within tolerance") {
    Box line;
    line.axes = {{-1.0, 1.0}};
    int nodes = 21;
    Eigen::MatrixXd values(nodes, 1);
    for (int i = 0; i < nodes; ++i) values(i, 0) = std::abs(-1.0 + 2.0 * i / (nodes - 1));
    auto grid = std::make_shared<GridFeedback>(line, std::vector<int>{nodes}, values);

    SmoothResult r = smooth_feedback(grid, 0.1);
    CHECK_FALSE(r.passthrough);
    CHECK(r.max_error < 0.1);
    CHECK(r.width >= 2.0 / (nodes - 1));

    // Bounded second differences and no poles anywhere on a fine scan.
    double h = 1e-3, worst = 0.0;
    for (double x = -0.95; x <= 0.95; x += 0.01) {
        Eigen::VectorXd xm = Eigen::VectorXd::Constant(1, x - h);
        Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, x);
        Eigen::VectorXd xp = Eigen::VectorXd::Constant(1, x + h);
        double second =
            (r.feedback->value(xp)(0) - 2 * r.feedback->value(x0)(0) + r.feedback->value(xm)(0)) / (h * h);
        CHECK(std::isfinite(second));
        worst = std::max(worst, std::abs(second));
    }
    CHECK(worst < 1e4);

    // A 3-node grid cannot certify a 1% tolerance: the kernel would have to
    // shrink below the data spacing.
    Eigen::MatrixXd coarse(3, 1);
    coarse << 1.0, 0.0, 1.0;
    auto coarse_grid = std::make_shared<GridFeedback>(line, std::vector<int>{3}, coarse);
    CHECK_THROWS_AS(smooth_feedback(coarse_grid, 0.01), CannotAchieveError);
}

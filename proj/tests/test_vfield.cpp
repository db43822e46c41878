#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "quasilin/expr.hpp"
#include "quasilin/vfield.hpp"

using namespace quasilin;

namespace {

ExprVec vec2(const std::string& c1, const std::string& c2) {
    auto syms = make_symbols({"x", "y"});
    return ExprVec({parse_expr(c1, syms), parse_expr(c2, syms)});
}

// Flow by classic fourth-order steps; test-local oracle, no box logic.
Eigen::VectorXd rk4_flow(const VectorField& X, Eigen::VectorXd x, double T, int steps) {
    double h = T / steps;
    for (int s = 0; s < steps; ++s) {
        Eigen::VectorXd k1 = X.value(x);
        Eigen::VectorXd k2 = X.value(x + 0.5 * h * k1);
        Eigen::VectorXd k3 = X.value(x + 0.5 * h * k2);
        Eigen::VectorXd k4 = X.value(x + h * k3);
        x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return x;
}

}  // namespace

TEST_CASE("values, Jacobians, and directional derivatives") {
    ExprField X(vec2("x*y", "sin(x)"));
    Eigen::VectorXd p(2);
    p << 0.5, 2.0;

    Eigen::VectorXd v = X.value(p);
    CHECK(v(0) == doctest::Approx(1.0));
    CHECK(v(1) == doctest::Approx(std::sin(0.5)));

    Eigen::MatrixXd J = X.jacobian(p);
    CHECK(J(0, 0) == doctest::Approx(2.0));
    CHECK(J(0, 1) == doctest::Approx(0.5));
    CHECK(J(1, 0) == doctest::Approx(std::cos(0.5)));
    CHECK(J(1, 1) == doctest::Approx(0.0));

    Eigen::VectorXd dir(2);
    dir << 1.0, -1.0;
    CHECK((X.directional(p, dir) - J * dir).norm() < 1e-12);
}

TEST_CASE("finite-difference fallback agrees with the dual path") {
    // Wrap an ExprField behind a dual-less lambda-style shim.
    struct Shim : VectorField {
        explicit Shim(const VectorField& inner) : inner_(inner) {}
        int dim() const override { return inner_.dim(); }
        void eval(std::span<const double> x, std::span<double> out) const override { inner_.eval(x, out); }
        const VectorField& inner_;
    };

    ExprField smooth(vec2("exp(x) - y^2", "x*y + cos(y)"));
    Shim fd_only(smooth);
    Eigen::VectorXd p(2);
    p << 0.3, -0.8;
    CHECK((fd_only.jacobian(p) - smooth.jacobian(p)).norm() < 1e-8);
    Eigen::VectorXd dir(2);
    dir << 0.6, 1.0;
    CHECK((fd_only.directional(p, dir) - smooth.directional(p, dir)).norm() < 1e-8);
}

TEST_CASE("constant and combination fields") {
    Eigen::VectorXd c(2);
    c << 1.0, -2.0;
    auto C = std::make_shared<ConstantField>(c);
    CHECK(C->value(Eigen::Vector2d(5, 5)) == c);
    CHECK(C->jacobian(Eigen::Vector2d(5, 5)).norm() == 0.0);

    auto X = std::make_shared<ExprField>(vec2("y", "0"));
    CombinationField mix(0.5, C, 2.0, X);
    Eigen::VectorXd p(2);
    p << 0.0, 3.0;
    Eigen::VectorXd v = mix.value(p);
    CHECK(v(0) == doctest::Approx(0.5 + 6.0));
    CHECK(v(1) == doctest::Approx(-1.0));
    CHECK(mix.has_dual());
}

TEST_CASE("bracket of rotation and translation") {
    // X = (-y, x) rotation, Y = (1, 0): [X, Y] = J_Y X - J_X Y = (0, -1).
    auto X = std::make_shared<ExprField>(vec2("-y", "x"));
    auto Y = std::make_shared<ConstantField>(Eigen::Vector2d(1, 0));
    Eigen::VectorXd p(2);
    p << 0.7, -0.2;
    Eigen::VectorXd br = lie_bracket(*X, *Y, p);
    CHECK(br(0) == doctest::Approx(0.0));
    CHECK(br(1) == doctest::Approx(-1.0));

    // Coordinate fields commute.
    auto E1 = std::make_shared<ConstantField>(Eigen::Vector2d(1, 0));
    auto E2 = std::make_shared<ConstantField>(Eigen::Vector2d(0, 1));
    CHECK(lie_bracket(*E1, *E2, p).norm() == 0.0);
}

TEST_CASE("bracket matches the flow commutator") {
    // [X, Y] = lim (1/t^2) (flow_Y(-t) flow_X(-t) flow_Y(t) flow_X(t) - id)
    auto X = std::make_shared<ExprField>(vec2("y", "x*y"));
    auto Y = std::make_shared<ExprField>(vec2("sin(y)", "x"));
    Eigen::VectorXd p(2);
    p << 0.4, 0.3;

    double t = 1e-3;
    Eigen::VectorXd q = rk4_flow(*X, p, t, 64);
    q = rk4_flow(*Y, q, t, 64);
    q = rk4_flow(*X, q, -t, 64);
    q = rk4_flow(*Y, q, -t, 64);
    Eigen::VectorXd commutator = (q - p) / (t * t);

    Eigen::VectorXd br = lie_bracket(*X, *Y, p);
    CHECK((commutator - br).norm() < 1e-3);  // O(t) defect of the limit
}

TEST_CASE("bracket fields nest with a finite-difference fallback") {
    auto X = std::make_shared<ExprField>(vec2("y", "x*y"));
    auto Y = std::make_shared<ExprField>(vec2("sin(y)", "x"));
    FieldPtr XY = lie_bracket_field(X, Y);
    CHECK(XY->has_dual());  // operands carry second-order duals

    Eigen::VectorXd p(2);
    p << -0.3, 0.9;
    CHECK((XY->value(p) - lie_bracket(*X, *Y, p)).norm() < 1e-12);

    // Depth two: [X, [X, Y]] only has the finite-difference route available.
    FieldPtr XXY = lie_bracket_field(X, XY);
    CHECK_FALSE(XXY->has_dual());
    // Oracle via hand Jacobians of Z = [X, Y] computed with the dual path:
    Eigen::VectorXd z = XXY->value(p);
    double h = 1e-5;
    Eigen::MatrixXd Jz(2, 2);
    for (int j = 0; j < 2; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(2);
        e(j) = h;
        Jz.col(j) = (XY->value(p + e) - XY->value(p - e)) / (2 * h);
    }
    Eigen::VectorXd oracle = Jz * X->value(p) - X->jacobian(p) * XY->value(p);
    CHECK((z - oracle).norm() < 1e-6);
}

TEST_CASE("dimension mismatches are rejected") {
    auto X = std::make_shared<ExprField>(vec2("y", "x"));
    auto C = std::make_shared<ConstantField>(Eigen::Vector3d(1, 2, 3));
    CHECK_THROWS_AS(CombinationField(1.0, X, 1.0, C), DimensionMismatchError);
    CHECK_THROWS_AS(BracketField(X, C), DimensionMismatchError);
    Eigen::VectorXd wrong(3);
    wrong << 1, 2, 3;
    CHECK_THROWS_AS(X->value(wrong), DimensionMismatchError);
}

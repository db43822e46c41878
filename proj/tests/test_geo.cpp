#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "quasilin/geo.hpp"
#include "quasilin/sampling.hpp"

using namespace quasilin;

namespace {

ControlSystem scalar_system(const std::string& rhs, double xw = 1.0, double uw = 1.0) {
    ControlSystem sys;
    sys.states = {"x"};
    sys.controls = {"u"};
    sys.f = ExprVec({parse_expr(rhs, make_symbols({"x", "u"}))});
    sys.box.axes = {{-xw, xw}, {-uw, uw}};
    sys.base_point = Eigen::VectorXd::Zero(2);
    sys.validate();
    return sys;
}

ControlSystem planar_system(const std::vector<std::string>& rhs, const std::vector<std::string>& controls) {
    ControlSystem sys;
    sys.states = {"x1", "x2"};
    sys.controls = controls;
    std::vector<std::string> names = sys.states;
    names.insert(names.end(), controls.begin(), controls.end());
    auto syms = make_symbols(names);
    std::vector<Expr> comps;
    for (const std::string& c : rhs) comps.push_back(parse_expr(c, syms));
    sys.f = ExprVec(std::move(comps));
    for (std::size_t i = 0; i < names.size(); ++i) sys.box.axes.push_back({-2.0, 2.0});
    sys.base_point = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(names.size()));
    sys.validate();
    return sys;
}

Eigen::VectorXd vec1(double v) {
    Eigen::VectorXd x(1);
    x << v;
    return x;
}

}  // namespace

TEST_CASE("point classification trichotomy") {
    // Cubic control influence: rank drops to 0 exactly at u = 0.
    ControlSystem cubic = scalar_system("u^3");
    PointClass at0 = classify_point(cubic, vec1(0.0), vec1(0.0));
    CHECK(at0.tag == PointTag::WeaklySingular);
    CHECK(at0.rank_at_point == 0);
    CHECK(at0.sup_rank_nbhd == 1);

    PointClass off = classify_point(cubic, vec1(0.0), vec1(0.5));
    CHECK(off.tag == PointTag::Regular);
    CHECK(off.rank_at_point == 1);

    // Two controls, only one direction of influence anywhere: strongly singular.
    ControlSystem strangled = planar_system({"u1^3", "x1"}, {"u1", "u2"});
    PointClass strong = classify_point(strangled, Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0));
    CHECK(strong.tag == PointTag::StronglySingular);
    CHECK(strong.sup_rank_nbhd == 1);

    CHECK(to_string(PointTag::Regular) == "Regular");
    CHECK(to_string(PointTag::WeaklySingular) == "WeaklySingular");
    CHECK(to_string(PointTag::StronglySingular) == "StronglySingular");
}

TEST_CASE("limit directions recover the secant span at degenerate controls") {
    ControlSystem cubic = scalar_system("u^3");
    DirectionSpan D = limit_directions(cubic, vec1(0.0), vec1(0.0));
    CHECK_FALSE(D.degenerate);
    REQUIRE(D.space.dim() == 1);  // dim D = 1 even though rank df/du = 0
    CHECK(std::abs(std::abs(D.space.basis(0, 0)) - 1.0) < 1e-12);

    // At a regular control the span equals the Jacobian range.
    DirectionSpan Dreg = limit_directions(cubic, vec1(0.0), vec1(0.5));
    CHECK(Dreg.space.dim() == 1);

    // No control influence at all: degenerate by definition.
    ControlSystem inert = scalar_system("x");
    DirectionSpan none = limit_directions(inert, vec1(0.5), vec1(0.0));
    CHECK(none.degenerate);
    CHECK(none.space.dim() == 0);
}

TEST_CASE("direction span equals the Jacobian range at regular points") {
    ControlSystem pend = planar_system({"x2", "-sin(x1) + u"}, {"u"});
    std::vector<Eigen::VectorXd> pts = box_points(pend.box, 12, 99);
    for (const Eigen::VectorXd& p : pts) {
        Eigen::VectorXd x = p.head(2), u = p.tail(1);
        // Stay clear of the control-box faces so secant spheres fit.
        u(0) = 0.8 * u(0);
        DirectionSpan D = limit_directions(pend, x, u);
        Subspace ran = span(pend.dfdu(x, u), 1e-9);
        REQUIRE(D.space.dim() == ran.dim());
        CHECK(subspace_distance(D.space, ran) <= 1e-3);
    }
}

TEST_CASE("flag levels of a chain of integrators") {
    // Double integrator: D = span{e2}, one bracket fills the plane.
    ControlSystem dint = planar_system({"x2", "u"}, {"u"});
    VerdictParams params;
    std::vector<Eigen::VectorXd> grid =
        cube_grid(Eigen::Vector2d(0, 0), params.nbhd_radius, dint.state_box(), params.grid_per_axis,
                  params.max_state_samples, params.seed);
    FlagReport fr = build_flag(dint, Eigen::Vector2d(0, 0), Eigen::VectorXd::Zero(1), grid, params);
    REQUIRE(fr.levels.size() >= 2);
    CHECK(fr.levels[0].rank == 1);
    CHECK(fr.levels[1].rank == 2);
    CHECK(fr.levels[0].rank_constant);
    CHECK(fr.levels[0].involutive);
    CHECK(fr.flag_ok);
    CHECK(fr.final_rank == 2);
    CHECK(fr.basis_mode == "jacobian-columns");
}

TEST_CASE("verdicts across the example gallery") {
    ControlSystem cubic = scalar_system("u^3");
    FlagReport quasi = linearizability_verdict(cubic, vec1(0.0), vec1(0.0));
    CHECK(quasi.point_class.tag == PointTag::WeaklySingular);
    CHECK(quasi.flag_ok);
    CHECK(quasi.fibration_ok);
    CHECK(quasi.verdict == Verdict::QuasiSmoothCandidate);

    FlagReport smooth = linearizability_verdict(cubic, vec1(0.0), vec1(0.5));
    CHECK(smooth.point_class.tag == PointTag::Regular);
    CHECK(smooth.verdict == Verdict::SmoothLinearizable);

    ControlSystem pend = planar_system({"x2", "-sin(x1) + u"}, {"u"});
    FlagReport pendv = linearizability_verdict(pend, Eigen::Vector2d(0, 0), Eigen::VectorXd::Zero(1));
    CHECK(pendv.verdict == Verdict::SmoothLinearizable);
    CHECK(pendv.final_rank == 2);

    // One-sided control image: the square cannot straighten at u = 0.
    ControlSystem square = scalar_system("u^2");
    FlagReport sq = linearizability_verdict(square, vec1(0.0), vec1(0.0));
    CHECK(sq.verdict == Verdict::NotLinearizable);
    CHECK(sq.robust_failure);
    CHECK(sq.failure_reason == "image of the control map is one-sided");

    // Rank of the flag jumps with the state: robustly not linearizable.
    ControlSystem parabolic = planar_system({"u", "x1^2"}, {"u"});
    FlagReport par = linearizability_verdict(parabolic, Eigen::Vector2d(0, 0), Eigen::VectorXd::Zero(1));
    CHECK(par.verdict == Verdict::NotLinearizable);
    CHECK(par.robust_failure);
    CHECK(par.failure_reason == "distribution rank varies across the sampled states");
}

TEST_CASE("flag of a linear pair reproduces the controllability growth") {
    LinearPair p = canonical_pair({2, 1}, 2);
    ControlSystem sys = make_linear_system(p);
    KroneckerData kd = kronecker_data(p);
    VerdictParams params;
    std::vector<Eigen::VectorXd> grid =
        cube_grid(Eigen::VectorXd::Zero(3), params.nbhd_radius, sys.state_box(), params.grid_per_axis,
                  params.max_state_samples, params.seed);
    FlagReport fr = build_flag(sys, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), grid, params);
    for (std::size_t k = 0; k < fr.levels.size(); ++k) {
        int expected = kd.r[std::min(k, kd.r.size() - 1)];
        CHECK(fr.levels[k].rank == expected);
        CHECK(fr.levels[k].rank_constant);
        CHECK(fr.levels[k].involutive);
    }
    CHECK(fr.flag_ok);
    CHECK(fr.final_rank == 3);
}

TEST_CASE("verdict parameters are honored") {
    ControlSystem cubic = scalar_system("u^3");
    VerdictParams strict;
    strict.grid_per_axis = 3;
    strict.seed = 7;
    FlagReport fr = linearizability_verdict(cubic, vec1(0.0), vec1(0.0), strict);
    CHECK(fr.states_sampled == 3);
    CHECK(fr.verdict == Verdict::QuasiSmoothCandidate);
}

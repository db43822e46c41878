#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "quasilin/numlin.hpp"

using namespace quasilin;

TEST_CASE("numerical rank with relative tolerance") {
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(3, 2);
    CHECK(numerical_rank(Z) == 0);
    CHECK(numerical_rank(Eigen::MatrixXd(3, 0)) == 0);
    CHECK(numerical_rank(Eigen::Matrix3d::Identity()) == 3);

    Eigen::MatrixXd M(2, 2);
    M << 1.0, 0.0, 0.0, 1e-12;
    CHECK(numerical_rank(M, 1e-9) == 1);
    CHECK(numerical_rank(M, 1e-15) == 2);

    // Rank-1 product of random vectors
    Eigen::VectorXd a(4), b(3);
    a << 1, -2, 0.5, 3;
    b << 2, 1, -1;
    CHECK(numerical_rank(a * b.transpose()) == 1);
}

TEST_CASE("span produces an orthonormal basis filtered by tolerance") {
    std::vector<Eigen::VectorXd> vecs;
    Eigen::VectorXd v1(3), v2(3), v3(3);
    v1 << 1, 0, 0;
    v2 << 1, 1e-12, 0;  // nearly parallel to v1
    v3 << 0, 1, 0;
    vecs = {v1, v2, v3};
    Subspace U = span(vecs, 1e-9);
    CHECK(U.ambient == 3);
    CHECK(U.dim() == 2);
    CHECK((U.basis.transpose() * U.basis - Eigen::Matrix2d::Identity()).norm() < 1e-12);

    CHECK(span(std::vector<Eigen::VectorXd>{}, 1e-9).dim() == 0);
}

TEST_CASE("subspace distance is the largest principal angle") {
    auto axis_plane = [](int i, int j) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(3, 2);
        M(i, 0) = 1.0;
        M(j, 1) = 1.0;
        return span(M);
    };
    Subspace xy = axis_plane(0, 1);
    CHECK(subspace_distance(xy, xy) == doctest::Approx(0.0).epsilon(1e-12));

    // Rotate the xy-plane by theta around the x-axis: largest angle = theta.
    double theta = 0.3;
    Eigen::MatrixXd R(3, 2);
    R << 1, 0, 0, std::cos(theta), 0, std::sin(theta);
    CHECK(subspace_distance(xy, span(R)) == doctest::Approx(theta).epsilon(1e-9));

    // Different dimensions: by convention the angle saturates at pi/2.
    Eigen::MatrixXd line = Eigen::MatrixXd::Zero(3, 1);
    line(0, 0) = 1.0;
    CHECK(subspace_distance(xy, span(line)) == doctest::Approx(M_PI / 2));

    Subspace wrong;
    wrong.ambient = 2;
    wrong.basis = Eigen::MatrixXd::Identity(2, 1);
    CHECK_THROWS_AS(subspace_distance(xy, wrong), DimensionMismatchError);
}

TEST_CASE("containment residual measures the orthogonal component") {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(3, 2);
    M(0, 0) = 1.0;
    M(1, 1) = 1.0;
    Subspace xy = span(M);

    Eigen::VectorXd inside(3), outside(3);
    inside << 2, -1, 0;
    outside << 0, 3, 4;
    CHECK(containment_residual(xy, inside) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(containment_residual(xy, outside) == doctest::Approx(4.0));

    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(3, 1);
    L(0, 0) = 1.0;
    CHECK(containment_residual(xy, span(L)) == doctest::Approx(0.0).epsilon(1e-12));  // line in plane
    CHECK(containment_residual(span(L), xy) == doctest::Approx(1.0));                 // plane not in line
}

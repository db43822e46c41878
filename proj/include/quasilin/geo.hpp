// Local geometry of a control system near a point: classification of the
// control influence, secant-limit direction spans, the bracket-generated
// flag of distributions, and the combined linearizability verdict.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "quasilin/numlin.hpp"
#include "quasilin/system.hpp"

namespace quasilin {

enum class PointTag { Regular, WeaklySingular, StronglySingular };

std::string to_string(PointTag tag);

struct PointClass {
    PointTag tag = PointTag::Regular;
    int rank_at_point = 0;
    int sup_rank_nbhd = 0;
    int samples_used = 0;
};

// Rank behaviour of df/du on a sampled neighborhood of (x, u). The
// neighborhood radius is in box-normalized units (1 = the half-width of
// each axis); samples are capped and reproducible for a given seed.
PointClass classify_point(const ControlSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          double nbhd_radius = 0.1, int grid_per_axis = 5, double rel_tol = 1e-9,
                          std::uint64_t seed = 42, int max_samples = 1024);

struct DirectionSpan {
    Subspace space;
    bool degenerate = false;  // f(x, .) constant on every sampled sphere
    int collected = 0;
};

// Span of normalized secant directions (f(x, w) - f(x, u)) / |...| collected
// on shrinking spheres around u. A direction contributes when its secants
// at the two smallest radii agree within angular_tol.
DirectionSpan limit_directions(const ControlSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                               int n_samples = 32, std::vector<double> radius_schedule = {},
                               double rel_tol = 1e-9, double angular_tol = 1e-3, std::uint64_t seed = 42);

enum class Verdict { SmoothLinearizable, QuasiSmoothCandidate, NotLinearizable, Inconclusive };

std::string to_string(Verdict v);

struct FlagLevel {
    int rank = 0;  // at the base state
    bool rank_constant = true;
    bool involutive = true;
    double worst_bracket_residual = 0.0;  // multiples of the involutivity tolerance
};

struct FlagReport {
    std::vector<FlagLevel> levels;  // levels 0 .. n-1
    PointClass point_class;

    bool directions_independent_of_u = true;
    double worst_direction_distance = 0.0;

    bool rank_dfdu_constant = false;

    bool flag_ok = false;  // constant ranks, involutive, full rank at the top
    int final_rank = 0;

    bool fibration_ok = false;
    bool fiber_dim_constant = true;
    double openness_margin = 0.0;

    bool robust_failure = false;
    std::string failure_reason;

    std::string basis_mode;  // "jacobian-columns" or "frozen-secants"
    int states_sampled = 0;

    Verdict verdict = Verdict::Inconclusive;
};

struct VerdictParams {
    double rel_tol = 1e-9;
    double nbhd_radius = 0.1;  // box-normalized
    int grid_per_axis = 5;
    int n_samples = 32;
    double angular_tol = 1e-3;
    double direction_match_tol = 5e-3;  // condition on u-independence of the direction span
    double involutivity_tol = 1e-6;
    double robust_factor = 10.0;
    std::uint64_t seed = 42;
    int max_state_samples = 243;
    int max_class_samples = 1024;
    int direction_check_states = 9;
    int involutivity_states = 25;  // bracket pairs are costly at deep levels
};

// Flag of distributions seeded by the direction span at (x_bar, u_bar) and
// grown by brackets with the frozen-control field, sampled over state_grid.
FlagReport build_flag(const ControlSystem& sys, const Eigen::VectorXd& x_bar, const Eigen::VectorXd& u_bar,
                      const std::vector<Eigen::VectorXd>& state_grid, const VerdictParams& params = {});

// build_flag on a default grid around x_bar plus the fiber/openness
// surrogate, combined into a final verdict.
FlagReport linearizability_verdict(const ControlSystem& sys, const Eigen::VectorXd& x_bar,
                                   const Eigen::VectorXd& u_bar, const VerdictParams& params = {});

}  // namespace quasilin

#include "quasilin/geo.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "quasilin/sampling.hpp"

namespace quasilin {

namespace {

double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double c = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
    return std::acos(c);
}

// Smallest distance from u to a control-box face, in absolute units.
double control_margin(const ControlSystem& sys, const Eigen::VectorXd& u) {
    double margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < sys.m(); ++i) {
        const Interval& iv = sys.box.axes[static_cast<std::size_t>(sys.n() + i)];
        margin = std::min(margin, std::min(u(i) - iv.lo, iv.hi - u(i)));
    }
    return margin;
}

std::vector<double> default_radius_schedule(double margin) {
    std::vector<double> radii;
    double r = 0.4 * margin;
    for (int k = 0; k < 6; ++k) {
        radii.push_back(r);
        r *= 0.5;
    }
    return radii;
}

// Control points near u_bar staying clear of the box faces, for probing
// how the secant span varies with the control argument.
std::vector<Eigen::VectorXd> control_offsets(const ControlSystem& sys, const Eigen::VectorXd& u_bar,
                                             double nbhd_radius, int count, std::uint64_t seed) {
    std::vector<Eigen::VectorXd> out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const int m = sys.m();
    for (int k = 0; k < count; ++k) {
        Eigen::VectorXd u = u_bar;
        for (int i = 0; i < m; ++i) {
            const Interval& iv = sys.box.axes[static_cast<std::size_t>(sys.n() + i)];
            double half = 0.5 * (iv.hi - iv.lo);
            double step = std::min(0.3 * nbhd_radius * half, 0.5 * std::min(u_bar(i) - iv.lo, iv.hi - u_bar(i)));
            u(i) += step * unif(rng);
        }
        out.push_back(std::move(u));
    }
    return out;
}

struct LevelData {
    std::vector<FieldPtr> basis;                 // pruned spanning set
    std::vector<Eigen::MatrixXd> values;         // per grid state: n x |basis|, normalized columns
};

// Columns are normalized field values; columns whose value is numerically
// zero (below the finite-difference noise floor) are dropped to zero so they
// cannot masquerade as directions.
Eigen::MatrixXd normalized_values(const std::vector<FieldPtr>& fields, const Eigen::VectorXd& x) {
    Eigen::MatrixXd M(x.size(), static_cast<Eigen::Index>(fields.size()));
    double vmax = 0.0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
        M.col(static_cast<Eigen::Index>(c)) = fields[c]->value(x);
        vmax = std::max(vmax, M.col(static_cast<Eigen::Index>(c)).norm());
    }
    double floor_norm = 1e-8 * (1.0 + vmax);
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
        double norm = M.col(c).norm();
        M.col(c) = norm > floor_norm ? Eigen::VectorXd(M.col(c) / norm) : Eigen::VectorXd::Zero(x.size());
    }
    return M;
}

}  // namespace

std::string to_string(PointTag tag) {
    switch (tag) {
        case PointTag::Regular: return "Regular";
        case PointTag::WeaklySingular: return "WeaklySingular";
        case PointTag::StronglySingular: return "StronglySingular";
    }
    return "?";
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::SmoothLinearizable: return "SmoothLinearizable";
        case Verdict::QuasiSmoothCandidate: return "QuasiSmoothCandidate";
        case Verdict::NotLinearizable: return "NotLinearizable";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

PointClass classify_point(const ControlSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          double nbhd_radius, int grid_per_axis, double rel_tol, std::uint64_t seed,
                          int max_samples) {
    sys.validate();
    if (x.size() != sys.n() || u.size() != sys.m()) throw DimensionMismatchError("classify_point: point dimensions");
    Eigen::VectorXd center(sys.n() + sys.m());
    center << x, u;
    std::vector<Eigen::VectorXd> samples = cube_grid(center, nbhd_radius, sys.box, grid_per_axis, max_samples, seed);

    PointClass out;
    out.samples_used = static_cast<int>(samples.size());
    out.rank_at_point = numerical_rank(sys.dfdu(x, u), rel_tol);
    int sup = 0;
    bool constant = true;
    for (const Eigen::VectorXd& p : samples) {
        int r = numerical_rank(sys.dfdu(p.head(sys.n()), p.tail(sys.m())), rel_tol);
        sup = std::max(sup, r);
        if (r != out.rank_at_point) constant = false;
    }
    out.sup_rank_nbhd = sup;
    if (constant)
        out.tag = PointTag::Regular;
    else if (sup == sys.m())
        out.tag = PointTag::WeaklySingular;
    else
        out.tag = PointTag::StronglySingular;
    return out;
}

DirectionSpan limit_directions(const ControlSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                               int n_samples, std::vector<double> radius_schedule, double rel_tol,
                               double angular_tol, std::uint64_t seed) {
    if (x.size() != sys.n() || u.size() != sys.m()) throw DimensionMismatchError("limit_directions: point dimensions");
    const int m = sys.m();
    if (radius_schedule.empty()) {
        double margin = control_margin(sys, u);
        if (margin <= 0.0) throw InputError("control point lies on the box boundary");
        radius_schedule = default_radius_schedule(margin);
    }
    std::sort(radius_schedule.begin(), radius_schedule.end(), std::greater<>());

    std::vector<Eigen::VectorXd> dirs = unit_directions(m, std::max(n_samples, 2 * m), seed);
    const Eigen::VectorXd f0 = sys.f_at(x, u);
    const double zero_tol = 1e-13 * (1.0 + f0.norm());

    DirectionSpan out;
    std::vector<Eigen::VectorXd> collected;
    bool any_motion = false;
    for (const Eigen::VectorXd& d : dirs) {
        Eigen::VectorXd last, prev;
        bool have_last = false, have_prev = false;
        for (std::size_t k = 0; k < radius_schedule.size(); ++k) {
            Eigen::VectorXd w = u + radius_schedule[k] * d;
            Eigen::VectorXd diff = sys.f_at(x, w) - f0;
            double norm = diff.norm();
            if (norm <= zero_tol) {
                if (k + 1 == radius_schedule.size()) have_last = false;
                continue;
            }
            any_motion = true;
            prev = last;
            have_prev = have_last;
            last = diff / norm;
            have_last = true;
            if (k + 1 < radius_schedule.size()) continue;
        }
        if (have_last && have_prev && angle_between(last, prev) <= angular_tol) {
            collected.push_back(last);
        }
    }
    out.degenerate = !any_motion;
    out.collected = static_cast<int>(collected.size());
    double span_tol = std::max(rel_tol, 3.0 * angular_tol);
    if (collected.empty()) {
        out.space.ambient = sys.n();
        out.space.tol = span_tol;
        out.space.basis.resize(sys.n(), 0);
        return out;
    }
    out.space = span(collected, span_tol);
    return out;
}

namespace {

struct FlagBuild {
    std::vector<LevelData> levels;
    std::vector<std::vector<int>> ranks;          // per level, per grid state
    std::vector<double> rank_jump_margins;        // certificate strength of any non-constancy
    std::vector<double> involutivity_ratio;       // per level, worst residual / tolerance
    std::vector<double> deficit_margin;           // per level, best sigma_n / (tol * sigma_1)
};

}  // namespace

FlagReport build_flag(const ControlSystem& sys, const Eigen::VectorXd& x_bar, const Eigen::VectorXd& u_bar,
                      const std::vector<Eigen::VectorXd>& state_grid, const VerdictParams& params) {
    sys.validate();
    const int n = sys.n();
    FlagReport report;
    report.states_sampled = static_cast<int>(state_grid.size());
    report.point_class = classify_point(sys, x_bar, u_bar, params.nbhd_radius, params.grid_per_axis,
                                        params.rel_tol, params.seed, params.max_class_samples);
    report.rank_dfdu_constant = report.point_class.tag == PointTag::Regular;

    // Seed basis: control-Jacobian columns where the rank is locally
    // constant, otherwise secant directions frozen at the base state.
    std::vector<FieldPtr> basis;
    if (report.point_class.tag == PointTag::Regular) {
        report.basis_mode = "jacobian-columns";
        Eigen::MatrixXd J = sys.dfdu(x_bar, u_bar);
        Eigen::MatrixXd ortho(n, 0);
        for (int j = 0; j < sys.m(); ++j) {
            Eigen::VectorXd cand = J.col(j);
            Eigen::VectorXd resid = cand;
            if (ortho.cols() > 0) resid -= ortho * (ortho.transpose() * cand);
            if (cand.norm() > 0.0 && resid.norm() > params.rel_tol * cand.norm()) {
                ortho.conservativeResize(Eigen::NoChange, ortho.cols() + 1);
                ortho.col(ortho.cols() - 1) = resid / resid.norm();
                basis.push_back(sys.control_jacobian_column_field(u_bar, j));
            }
        }
    } else {
        report.basis_mode = "frozen-secants";
        DirectionSpan ds = limit_directions(sys, x_bar, u_bar, params.n_samples, {}, params.rel_tol,
                                            params.angular_tol, params.seed);
        for (int j = 0; j < ds.space.dim(); ++j)
            basis.push_back(std::make_shared<ConstantField>(Eigen::VectorXd(ds.space.basis.col(j))));
    }

    // Condition: the secant span must not depend on the control argument.
    {
        int n_states = std::min<int>(static_cast<int>(state_grid.size()), params.direction_check_states);
        std::vector<Eigen::VectorXd> probes = control_offsets(sys, u_bar, params.nbhd_radius, 4, params.seed + 1);
        double worst = 0.0;
        for (int si = 0; si < n_states; ++si) {
            const Eigen::VectorXd& x = state_grid[static_cast<std::size_t>(si)];
            DirectionSpan base = limit_directions(sys, x, u_bar, params.n_samples, {}, params.rel_tol,
                                                  params.angular_tol, params.seed);
            for (const Eigen::VectorXd& u : probes) {
                DirectionSpan other = limit_directions(sys, x, u, params.n_samples, {}, params.rel_tol,
                                                       params.angular_tol, params.seed);
                worst = std::max(worst, subspace_distance(base.space, other.space));
            }
        }
        report.worst_direction_distance = worst;
        report.directions_independent_of_u = worst <= params.direction_match_tol;
        if (worst > params.robust_factor * params.direction_match_tol) {
            report.robust_failure = true;
            report.failure_reason = "secant span varies with the control argument";
        }
    }

    FieldPtr drift = sys.frozen_control_field(u_bar);
    report.levels.assign(static_cast<std::size_t>(n), FlagLevel{});

    // Bracket values at deep levels come from finite differences; anything
    // below this floor (relative to the drift scale) is treated as zero so
    // normalized noise cannot enter a span.
    std::vector<double> fscale(state_grid.size());
    for (std::size_t si = 0; si < state_grid.size(); ++si)
        fscale[si] = 1.0 + drift->value(state_grid[si]).norm();
    constexpr double kValueFloor = 1e-6;
    constexpr double kNewDirTol = 1e-6;

    auto extend_span = [&](Eigen::MatrixXd& S, const Eigen::VectorXd& raw, double scale) {
        double norm = raw.norm();
        if (norm <= kValueFloor * scale) return;
        Eigen::VectorXd v = raw / norm;
        if (S.cols() > 0) v -= S * (S.transpose() * v);
        if (v.norm() > kNewDirTol) {
            S.conservativeResize(Eigen::NoChange, S.cols() + 1);
            S.col(S.cols() - 1) = v / v.norm();
        }
    };

    std::vector<FieldPtr> current = basis;
    // Per-state orthonormal spans of the selected fields, for pruning.
    std::vector<Eigen::MatrixXd> spans(state_grid.size());
    for (std::size_t si = 0; si < state_grid.size(); ++si) {
        spans[si].resize(n, 0);
        for (const FieldPtr& b : current) extend_span(spans[si], b->value(state_grid[si]), fscale[si]);
    }

    double worst_rank_jump = 0.0;
    double worst_involutivity = 0.0;
    bool stabilized = false;

    for (int level = 0; level < n; ++level) {
        FlagLevel& L = report.levels[static_cast<std::size_t>(level)];
        if (stabilized && level > 0) {
            L = report.levels[static_cast<std::size_t>(level - 1)];
            continue;
        }

        // Ranks of the current collection over the grid, with margins for
        // any disagreement.
        std::vector<int> ranks(state_grid.size(), 0);
        std::vector<Eigen::VectorXd> sigmas(state_grid.size());
        for (std::size_t si = 0; si < state_grid.size(); ++si) {
            Eigen::MatrixXd M = normalized_values(current, state_grid[si]);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
            sigmas[si] = svd.singularValues();
            int r = 0;
            if (sigmas[si].size() > 0 && sigmas[si](0) > 0.0)
                for (Eigen::Index i = 0; i < sigmas[si].size(); ++i)
                    if (sigmas[si](i) > params.rel_tol * sigmas[si](0)) ++r;
            ranks[si] = r;
        }
        int base_rank = ranks[0];
        L.rank = base_rank;
        int min_rank = *std::min_element(ranks.begin(), ranks.end());
        L.rank_constant = true;
        for (std::size_t si = 0; si < state_grid.size(); ++si) {
            if (ranks[si] != base_rank) L.rank_constant = false;
            if (ranks[si] > min_rank && sigmas[si].size() > min_rank && sigmas[si](0) > 0.0) {
                double ratio = sigmas[si](min_rank) / (params.rel_tol * sigmas[si](0));
                worst_rank_jump = std::max(worst_rank_jump, ratio);
            }
        }

        // Involutivity: brackets of basis pairs must stay in the level span.
        // Deep bracket evaluations are expensive, so pairs are checked on a
        // leading subset of the grid.
        L.involutive = true;
        L.worst_bracket_residual = 0.0;
        bool full_everywhere = min_rank == n && L.rank_constant;
        if (!full_everywhere && current.size() > 1) {
            std::size_t n_inv =
                std::min(state_grid.size(), static_cast<std::size_t>(std::max(1, params.involutivity_states)));
            for (std::size_t i = 0; i < current.size(); ++i) {
                for (std::size_t j = i + 1; j < current.size(); ++j) {
                    for (std::size_t si = 0; si < n_inv; ++si) {
                        const Eigen::VectorXd& x = state_grid[si];
                        Eigen::VectorXd bv = lie_bracket(*current[i], *current[j], x);
                        double scale = 1.0 + current[i]->value(x).norm() + current[j]->value(x).norm() + bv.norm();
                        Eigen::VectorXd resid = bv;
                        if (spans[si].cols() > 0) resid -= spans[si] * (spans[si].transpose() * bv);
                        double ratio = resid.norm() / (params.involutivity_tol * scale);
                        if (ratio > L.worst_bracket_residual) L.worst_bracket_residual = ratio;
                    }
                }
            }
            if (L.worst_bracket_residual > 1.0) L.involutive = false;
            worst_involutivity = std::max(worst_involutivity, L.worst_bracket_residual);
        }

        if (level + 1 < n) {
            // Grow: brackets of the drift with the current basis; keep the
            // ones adding a direction at some grid state.
            std::vector<FieldPtr> next = current;
            bool grew = false;
            if (!full_everywhere) {
                for (const FieldPtr& b : current) {
                    if (static_cast<int>(next.size()) >= 4 * n) break;
                    FieldPtr cand = lie_bracket_field(drift, b);
                    bool adds = false;
                    for (std::size_t si = 0; si < state_grid.size() && !adds; ++si) {
                        Eigen::VectorXd v = cand->value(state_grid[si]);
                        double norm = v.norm();
                        if (norm <= kValueFloor * fscale[si]) continue;
                        Eigen::VectorXd resid = v / norm;
                        if (spans[si].cols() > 0) resid -= spans[si] * (spans[si].transpose() * Eigen::VectorXd(v / norm));
                        adds = resid.norm() > kNewDirTol;
                    }
                    if (adds) {
                        next.push_back(cand);
                        grew = true;
                        for (std::size_t si = 0; si < state_grid.size(); ++si)
                            extend_span(spans[si], cand->value(state_grid[si]), fscale[si]);
                    }
                }
            }
            if (!grew) stabilized = true;
            current = std::move(next);
        }
    }

    const FlagLevel& top = report.levels.back();
    report.final_rank = top.rank;
    bool all_ok = true;
    for (const FlagLevel& L : report.levels)
        if (!L.rank_constant || !L.involutive) all_ok = false;
    report.flag_ok = all_ok && top.rank == n;

    if (!report.flag_ok && !report.robust_failure) {
        if (worst_rank_jump > params.robust_factor) {
            report.robust_failure = true;
            report.failure_reason = "distribution rank varies across the sampled states";
        } else if (worst_involutivity > params.robust_factor) {
            report.robust_failure = true;
            report.failure_reason = "bracket leaves its distribution level";
        } else if (top.rank < n && all_ok) {
            // Deficit certificate: nowhere does the top level come close to
            // full rank.
            double best = 0.0;
            for (const Eigen::VectorXd& x : state_grid) {
                Eigen::MatrixXd M = normalized_values(current, x);
                Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
                const auto& sv = svd.singularValues();
                if (sv.size() >= n && sv(0) > 0.0) best = std::max(best, sv(n - 1) / (params.rel_tol * sv(0)));
            }
            if (best < 1.0 / params.robust_factor) {
                report.robust_failure = true;
                report.failure_reason = "flag never reaches full rank";
            }
        }
    }
    return report;
}

namespace {

// Level-set and openness probes for the map u -> f(x, u) around a sample.
struct FiberProbe {
    int fiber_dim = 0;
    double openness_margin = 1.0;
    bool degenerate = false;
};

FiberProbe probe_fiber(const ControlSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                       const Eigen::MatrixXd& direction_basis, const VerdictParams& params) {
    FiberProbe out;
    const int m = sys.m();
    double margin = control_margin(sys, u);
    double rf = 0.2 * margin;
    std::vector<Eigen::VectorXd> dirs = unit_directions(m, std::max(params.n_samples, 2 * m), params.seed + 7);
    Eigen::VectorXd f0 = sys.f_at(x, u);

    std::vector<Eigen::VectorXd> diffs(dirs.size());
    double scale = 0.0;
    for (std::size_t k = 0; k < dirs.size(); ++k) {
        diffs[k] = sys.f_at(x, u + rf * dirs[k]) - f0;
        scale = std::max(scale, diffs[k].norm());
    }
    if (scale <= 1e-13 * (1.0 + f0.norm())) {
        out.degenerate = true;
        out.fiber_dim = m;
        return out;
    }

    std::vector<Eigen::VectorXd> fiber_dirs;
    for (std::size_t k = 0; k < dirs.size(); ++k)
        if (diffs[k].norm() <= 0.01 * scale) fiber_dirs.push_back(dirs[k]);
    out.fiber_dim = fiber_dirs.empty() ? 0 : span(fiber_dirs, 1e-6).dim();

    const int r1 = static_cast<int>(direction_basis.cols());
    if (r1 > 0) {
        std::vector<Eigen::VectorXd> probes = unit_directions(r1, std::max(8, 2 * r1), params.seed + 11);
        double proj_scale = 0.0;
        std::vector<Eigen::VectorXd> proj(diffs.size());
        for (std::size_t k = 0; k < diffs.size(); ++k) {
            proj[k] = direction_basis.transpose() * diffs[k];
            proj_scale = std::max(proj_scale, proj[k].norm());
        }
        if (proj_scale <= 0.0) {
            out.openness_margin = 0.0;
            return out;
        }
        double worst = std::numeric_limits<double>::infinity();
        for (const Eigen::VectorXd& dir : probes) {
            double best = -std::numeric_limits<double>::infinity();
            for (const Eigen::VectorXd& p : proj) best = std::max(best, p.dot(dir));
            worst = std::min(worst, best / proj_scale);
        }
        out.openness_margin = worst;
    }
    return out;
}

}  // namespace

FlagReport linearizability_verdict(const ControlSystem& sys, const Eigen::VectorXd& x_bar,
                                   const Eigen::VectorXd& u_bar, const VerdictParams& params) {
    sys.validate();
    Box sbox = sys.state_box();
    std::vector<Eigen::VectorXd> grid =
        cube_grid(x_bar, params.nbhd_radius, sbox, params.grid_per_axis, params.max_state_samples, params.seed);
    FlagReport report = build_flag(sys, x_bar, u_bar, grid, params);

    const bool regular = report.point_class.tag == PointTag::Regular;
    if (regular) {
        // Constant rank already provides a local product structure.
        report.fibration_ok = true;
        report.fiber_dim_constant = true;
        report.openness_margin = 1.0;
    } else {
        int n_states = std::min<int>(static_cast<int>(grid.size()), params.direction_check_states);
        std::vector<Eigen::VectorXd> probes = control_offsets(sys, u_bar, params.nbhd_radius, 3, params.seed + 3);
        probes.insert(probes.begin(), u_bar);

        int r1 = report.levels.empty() ? 0 : report.levels[0].rank;
        double openness = std::numeric_limits<double>::infinity();
        bool dims_ok = true;
        for (int si = 0; si < n_states; ++si) {
            const Eigen::VectorXd& x = grid[static_cast<std::size_t>(si)];
            DirectionSpan ds = limit_directions(sys, x, u_bar, params.n_samples, {}, params.rel_tol,
                                                params.angular_tol, params.seed);
            for (const Eigen::VectorXd& u : probes) {
                FiberProbe fp = probe_fiber(sys, x, u, ds.space.basis, params);
                if (!fp.degenerate && fp.fiber_dim != sys.m() - r1) dims_ok = false;
                openness = std::min(openness, fp.openness_margin);
            }
        }
        report.fiber_dim_constant = dims_ok;
        report.openness_margin = std::isfinite(openness) ? openness : 0.0;
        report.fibration_ok = dims_ok && report.openness_margin >= 0.05;
        if (!report.robust_failure && (!dims_ok || report.openness_margin < 0.005)) {
            report.robust_failure = true;
            report.failure_reason = !dims_ok ? "level-set dimension varies across samples"
                                             : "image of the control map is one-sided";
        }
    }

    const bool c1 = report.directions_independent_of_u;
    const bool c3 = report.flag_ok;
    if (c1 && c3 && regular)
        report.verdict = Verdict::SmoothLinearizable;
    else if (c1 && c3 && report.fibration_ok)
        report.verdict = Verdict::QuasiSmoothCandidate;
    else if (report.robust_failure)
        report.verdict = Verdict::NotLinearizable;
    else
        report.verdict = Verdict::Inconclusive;
    return report;
}

}  // namespace quasilin

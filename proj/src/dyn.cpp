#include "quasilin/dyn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "quasilin/numlin.hpp"
#include "quasilin/sampling.hpp"

namespace quasilin {

namespace {

std::string fmt_time(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", t);
    return buf;
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ExprControl::ExprControl(ExprVec components) : components_(std::move(components)) {
    if (components_.dim() == 0) throw InputError("control signal has no components");
    if (components_.symbols()->size() != 1)
        throw InputError("control signal expressions must use a single time symbol");
}

Eigen::VectorXd ExprControl::at(double t, bool) const {
    std::vector<double> in{t}, out(static_cast<std::size_t>(components_.dim()));
    components_.eval_values<double>(in, out);
    return to_vec(out);
}

PiecewiseConstantControl::PiecewiseConstantControl(std::vector<double> breaks, std::vector<Eigen::VectorXd> values)
    : breaks_(std::move(breaks)), values_(std::move(values)) {
    if (values_.empty() || breaks_.size() != values_.size() + 1)
        throw InputError("piecewise control needs one more breakpoint than values");
    for (std::size_t i = 0; i + 1 < breaks_.size(); ++i)
        if (!(breaks_[i] < breaks_[i + 1])) throw InputError("piecewise control breakpoints must increase");
    dim_ = static_cast<int>(values_.front().size());
    for (const Eigen::VectorXd& v : values_)
        if (v.size() != dim_) throw DimensionMismatchError("piecewise control values differ in dimension");
}

Eigen::VectorXd PiecewiseConstantControl::at(double t, bool left_limit) const {
    if (t <= breaks_.front()) return values_.front();
    if (t >= breaks_.back()) return values_.back();
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
    std::size_t idx = static_cast<std::size_t>(it - breaks_.begin()) - 1;
    if (left_limit && idx > 0 && breaks_[idx] == t) --idx;
    return values_[std::min(idx, values_.size() - 1)];
}

namespace {

// One RK4 step of dx/dt = f(x, u(t)) from t with step h.  The last stage
// takes the left limit of the control so each piecewise interval is closed.
template <class Rhs>
Eigen::VectorXd rk4_controlled(const Rhs& rhs, const Eigen::VectorXd& x, double t, double h) {
    Eigen::VectorXd k1 = rhs(t, x, false);
    Eigen::VectorXd k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1, false);
    Eigen::VectorXd k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2, false);
    Eigen::VectorXd k4 = rhs(t + h, x + h * k3, true);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <class ControlFn>
Trajectory run_integration(const ControlSystem& sys, const Eigen::VectorXd& x0, const ControlFn& control_at,
                           double T, double dt) {
    sys.validate();
    if (x0.size() != sys.n()) throw DimensionMismatchError("initial state dimension");
    if (!(dt > 0.0)) throw InputError("step size must be positive");
    if (T < 0.0) throw InputError("horizon must be nonnegative");

    const Box sbox = sys.state_box();
    if (!sbox.contains(x0)) throw BoxExitError("initial state lies outside the box");

    auto rhs = [&](double t, const Eigen::VectorXd& x, bool left) {
        return sys.f_at(x, control_at(t, x, left));
    };

    Trajectory traj;
    Eigen::VectorXd x = x0;
    double t = 0.0;
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    traj.controls.push_back(control_at(0.0, x, false));
    // Node times come from multiplication, not accumulation, so control
    // breakpoints laid out on the step grid are hit exactly.
    for (long long k = 1; t < T - 1e-12 * std::max(1.0, T); ++k) {
        double t_next = std::min(static_cast<double>(k) * dt, T);
        double h = t_next - t;
        Eigen::VectorXd next = rk4_controlled(rhs, x, t, h);
        t = t_next;
        x = next;
        traj.times.push_back(t);
        traj.states.push_back(x);
        traj.controls.push_back(control_at(t, x, false));
        if (!sbox.contains(x)) {
            traj.exited = true;
            traj.exit_time = t;
            break;
        }
    }
    return traj;
}

}  // namespace

Trajectory integrate(const ControlSystem& sys, const Eigen::VectorXd& x0, const Control& u, double T, double dt) {
    if (u.dim() != sys.m()) throw DimensionMismatchError("control signal dimension");
    return run_integration(
        sys, x0, [&](double t, const Eigen::VectorXd&, bool left) { return u.at(t, left); }, T, dt);
}

Trajectory integrate_closed_loop(const ControlSystem& sys, const Eigen::VectorXd& x0, const Feedback& alpha,
                                 double T, double dt) {
    if (alpha.in_dim() != sys.n() || alpha.out_dim() != sys.m())
        throw DimensionMismatchError("feedback dimensions do not match the system");
    return run_integration(
        sys, x0, [&](double, const Eigen::VectorXd& x, bool) { return alpha.value(x); }, T, dt);
}

namespace {

Eigen::VectorXd rk4_autonomous(const VectorField& X, const Eigen::VectorXd& x, double h) {
    Eigen::VectorXd k1 = X.value(x);
    Eigen::VectorXd k2 = X.value(x + 0.5 * h * k1);
    Eigen::VectorXd k3 = X.value(x + 0.5 * h * k2);
    Eigen::VectorXd k4 = X.value(x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Eigen::VectorXd flow_point(const VectorField& X, const Box& box, Eigen::VectorXd x, double time, double dt) {
    if (!(dt > 0.0)) throw InputError("step size must be positive");
    if (!box.contains(x)) throw BoxExitError("flow starts outside the box");
    double remaining = std::abs(time);
    double sgn = time >= 0.0 ? 1.0 : -1.0;
    double t = 0.0;
    while (remaining > 1e-14 * std::max(1.0, std::abs(time))) {
        double h = std::min(dt, remaining);
        x = rk4_autonomous(X, x, sgn * h);
        remaining -= h;
        t += h;
        if (!box.contains(x)) throw BoxExitError("flow left the box at |t| = " + fmt_time(t));
    }
    return x;
}

ChatterResult chatter_compare(const VectorField& X1, const VectorField& X2, const Box& box,
                              const Eigen::VectorXd& x0, double T, int segments, double dt) {
    if (X1.dim() != X2.dim() || X1.dim() != x0.size()) throw DimensionMismatchError("chatter field dimensions");
    if (segments < 1) throw InputError("segment count must be positive");
    if (!(T > 0.0) || !(dt > 0.0)) throw InputError("horizon and step size must be positive");
    if (!box.contains(x0)) throw BoxExitError("initial state lies outside the box");

    const double half = T / (2.0 * segments);
    const int steps_per_half = std::max(1, static_cast<int>(std::ceil(half / dt - 1e-12)));
    const double h = half / steps_per_half;

    CombinationField avg(0.5, FieldPtr(&X1, [](const VectorField*) {}), 0.5, FieldPtr(&X2, [](const VectorField*) {}));

    ChatterResult out;
    out.segments = segments;
    out.dt_used = h;
    Eigen::VectorXd xs = x0, xa = x0;
    out.switched.times.push_back(0.0);
    out.switched.states.push_back(xs);
    out.averaged.times.push_back(0.0);
    out.averaged.states.push_back(xa);

    const int total_steps = 2 * segments * steps_per_half;
    for (int s = 0; s < total_steps; ++s) {
        const bool first_half = (s % (2 * steps_per_half)) < steps_per_half;
        const VectorField& active = first_half ? X1 : X2;
        double t = (s + 1) * h;
        xs = rk4_autonomous(active, xs, h);
        xa = rk4_autonomous(avg, xa, h);
        if (!box.contains(xs) || !box.contains(xa))
            throw BoxExitError("chatter trajectory left the box at t = " + fmt_time(t));
        out.switched.times.push_back(t);
        out.switched.states.push_back(xs);
        out.averaged.times.push_back(t);
        out.averaged.states.push_back(xa);
        out.sup_error = std::max(out.sup_error, (xs - xa).norm());
    }
    return out;
}

Eigen::VectorXd flow_coords(const std::vector<FieldPtr>& fields, const Box& box, const Eigen::VectorXd& base,
                            const Eigen::VectorXd& xi, double dt) {
    if (static_cast<int>(fields.size()) != xi.size()) throw DimensionMismatchError("one coordinate per field");
    Eigen::VectorXd x = base;
    for (int k = static_cast<int>(fields.size()) - 1; k >= 0; --k)
        x = flow_point(*fields[static_cast<std::size_t>(k)], box, x, xi(k), dt);
    return x;
}

namespace {

// A composition of flows, outermost first: phi(x) = F1(F2(...Fk(x))).
struct FlowComposition {
    std::vector<std::pair<const VectorField*, double>> parts;

    Eigen::VectorXd forward(const Box& box, Eigen::VectorXd x, double dt) const {
        for (auto it = parts.rbegin(); it != parts.rend(); ++it) x = flow_point(*it->first, box, std::move(x), it->second, dt);
        return x;
    }
    Eigen::VectorXd inverse(const Box& box, Eigen::VectorXd x, double dt) const {
        for (const auto& [field, time] : parts) x = flow_point(*field, box, std::move(x), -time, dt);
        return x;
    }

    // (phi_* X)(p) = Dphi(y) X(y) at y = phi^{-1}(p), differential by central
    // differences along the composed flow.
    Eigen::VectorXd pushforward(const VectorField& X, const Eigen::VectorXd& p, const Box& box, double dt) const {
        Eigen::VectorXd y = inverse(box, p, dt);
        Eigen::VectorXd v = X.value(y);
        double norm = v.norm();
        if (norm == 0.0) return Eigen::VectorXd::Zero(p.size());
        Eigen::VectorXd dir = v / norm;
        double h = 1e-5 * (1.0 + y.norm());
        Eigen::VectorXd a = forward(box, y + h * dir, dt);
        Eigen::VectorXd b = forward(box, y - h * dir, dt);
        return norm * (a - b) / (2.0 * h);
    }
};

}  // namespace

Eigen::VectorXd pushforward_value(const VectorField& Y, double s, const VectorField& X, const Eigen::VectorXd& p,
                                  const Box& box, double dt) {
    FlowComposition comp{{{&Y, s}}};
    return comp.pushforward(X, p, box, dt);
}

OrbitResult orbit_dimension(const std::vector<FieldPtr>& fields, const Box& box, const Eigen::VectorXd& base,
                            const OrbitParams& params) {
    if (fields.empty()) throw InputError("orbit computation needs at least one field");
    if (params.probe_times.empty()) throw InputError("orbit computation needs a probe time");
    const int n = static_cast<int>(base.size());

    std::vector<FlowComposition> comps;
    comps.push_back({});  // identity
    for (double tau : params.probe_times) {
        if (params.max_depth >= 1) {
            for (const FieldPtr& Y : fields)
                for (double s : {tau, -tau}) comps.push_back({{{Y.get(), s}}});
        }
        if (params.max_depth >= 2) {
            for (const FieldPtr& Y1 : fields)
                for (const FieldPtr& Y2 : fields)
                    for (double s1 : {tau, -tau})
                        for (double s2 : {tau, -tau}) comps.push_back({{{Y1.get(), s1}, {Y2.get(), s2}}});
        }
    }

    std::vector<Eigen::VectorXd> vectors;
    OrbitResult out;
    double rank_tol = std::max(params.rel_tol, 1e-7);
    for (const FlowComposition& comp : comps) {
        for (const FieldPtr& X : fields) {
            if (static_cast<int>(vectors.size()) >= 64) break;
            Eigen::VectorXd v;
            try {
                v = comp.pushforward(*X, base, box, params.dt);
            } catch (const BoxExitError&) {
                continue;  // probe flow left the domain; it contributes nothing
            }
            double norm = v.norm();
            if (norm == 0.0) continue;
            vectors.push_back(v / norm);
        }
        if (!vectors.empty()) {
            Eigen::MatrixXd M(n, static_cast<Eigen::Index>(vectors.size()));
            for (std::size_t i = 0; i < vectors.size(); ++i) M.col(static_cast<Eigen::Index>(i)) = vectors[i];
            out.dimension = numerical_rank(M, rank_tol);
            if (out.dimension == n) break;
        }
    }
    out.vectors_used = static_cast<int>(vectors.size());
    return out;
}

namespace {

void check_conjugation(const ControlSystem& sys, const LinearPair& target, const Conjugation& chi) {
    target.validate();
    if (!(*chi.chi_I.symbols() == *sys.f.symbols()) || !(*chi.chi_II.symbols() == *sys.f.symbols()))
        throw InputError("conjugacy expressions must use the system's state and control symbols");
    if (chi.chi_I.dim() != target.n() || target.n() != sys.n())
        throw DimensionMismatchError("state map dimension must match both systems");
    if (chi.chi_II.dim() != target.m()) throw DimensionMismatchError("control map dimension must match the target");
    if (chi.chi_I_inverse && chi.chi_I_inverse->dim() != sys.n())
        throw DimensionMismatchError("inverse state map dimension");
}

std::vector<int> index_range(int begin, int count) {
    std::vector<int> idx(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) idx[static_cast<std::size_t>(i)] = begin + i;
    return idx;
}

}  // namespace

double conjugacy_residual(const ControlSystem& sys, const LinearPair& target, const Conjugation& chi,
                          const std::vector<Eigen::VectorXd>& points) {
    sys.validate();
    check_conjugation(sys, target, chi);
    const int n = sys.n(), m = sys.m();
    std::vector<int> state_idx = index_range(0, n);

    double worst = 0.0;
    for (const Eigen::VectorXd& p : points) {
        if (p.size() != n + m) throw DimensionMismatchError("sample point dimension");
        std::vector<double> vals(p.data(), p.data() + p.size());
        Eigen::MatrixXd Dchi = chi.chi_I.jacobian_values(vals, state_idx);
        std::vector<double> c1(static_cast<std::size_t>(target.n())), c2(static_cast<std::size_t>(target.m()));
        chi.chi_I.eval_values<double>(vals, c1);
        chi.chi_II.eval_values<double>(vals, c2);
        Eigen::VectorXd resid =
            Dchi * sys.f_at(p.head(n), p.tail(m)) - target.A * to_vec(c1) - target.B * to_vec(c2);
        worst = std::max(worst, resid.norm());
    }
    return worst;
}

double triangularity_defect(const ControlSystem& sys, const Conjugation& chi,
                            const std::vector<Eigen::VectorXd>& points) {
    if (!(*chi.chi_I.symbols() == *sys.f.symbols()))
        throw InputError("conjugacy expressions must use the system's state and control symbols");
    std::vector<int> ctrl_idx = index_range(sys.n(), sys.m());
    double worst = 0.0;
    for (const Eigen::VectorXd& p : points) {
        std::vector<double> vals(p.data(), p.data() + p.size());
        worst = std::max(worst, chi.chi_I.jacobian_values(vals, ctrl_idx).norm());
    }
    return worst;
}

DynamicCheck verify_conjugacy_dynamic(const ControlSystem& sys, const LinearPair& target, const Conjugation& chi,
                                      const Eigen::VectorXd& x0, const Control& u, double T, double dt,
                                      int defect_samples, std::uint64_t seed) {
    sys.validate();
    check_conjugation(sys, target, chi);
    if (u.dim() != sys.m()) throw DimensionMismatchError("control signal dimension");
    const int n = sys.n(), m = sys.m();
    const Box sbox = sys.state_box();
    if (!sbox.contains(x0)) throw BoxExitError("initial state lies outside the box");

    auto chi_I_at = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& uc) {
        Eigen::VectorXd p(n + m);
        p << x, uc;
        std::vector<double> vals(p.data(), p.data() + p.size());
        std::vector<double> out(static_cast<std::size_t>(n));
        chi.chi_I.eval_values<double>(vals, out);
        return to_vec(out);
    };
    auto chi_II_at = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& uc) {
        Eigen::VectorXd p(n + m);
        p << x, uc;
        std::vector<double> vals(p.data(), p.data() + p.size());
        std::vector<double> out(static_cast<std::size_t>(m));
        chi.chi_II.eval_values<double>(vals, out);
        return to_vec(out);
    };

    DynamicCheck check;
    Eigen::VectorXd x = x0;
    Eigen::VectorXd z = chi_I_at(x0, u.at(0.0));

    auto rhs = [&](double t, const Eigen::VectorXd& w, bool left) {
        Eigen::VectorXd uc = u.at(t, left);
        Eigen::VectorXd xw = w.head(n), zw = w.tail(n);
        Eigen::VectorXd dw(2 * n);
        dw << sys.f_at(xw, uc), target.A * zw + target.B * chi_II_at(xw, uc);
        return dw;
    };

    Eigen::VectorXd w(2 * n);
    w << x, z;
    double t = 0.0;
    check.traj.times.push_back(0.0);
    check.traj.states.push_back(x);
    check.traj.controls.push_back(u.at(0.0));
    check.z.push_back(z);
    for (long long k = 1; t < T - 1e-12 * std::max(1.0, T); ++k) {
        double t_next = std::min(static_cast<double>(k) * dt, T);
        double h = t_next - t;
        w = rk4_controlled(rhs, w, t, h);
        t = t_next;
        x = w.head(n);
        z = w.tail(n);
        check.traj.times.push_back(t);
        check.traj.states.push_back(x);
        check.traj.controls.push_back(u.at(t));
        check.z.push_back(z);
        if (!sbox.contains(x)) {
            check.traj.exited = true;
            check.traj.exit_time = t;
            break;
        }
    }
    for (std::size_t k = 0; k < check.z.size(); ++k) {
        Eigen::VectorXd dev = check.z[k] - chi_I_at(check.traj.states[k], check.traj.controls[k]);
        check.max_deviation = std::max(check.max_deviation, dev.norm());
    }
    check.triangularity = triangularity_defect(sys, chi, box_points(sys.box, defect_samples, seed));
    return check;
}

SmoothResult smooth_feedback(FeedbackPtr fb, double eps, int certify_factor) {
    if (!(eps > 0.0)) throw InputError("tolerance must be positive");
    auto grid = std::dynamic_pointer_cast<const GridFeedback>(fb);
    if (!grid) return SmoothResult{std::move(fb), 0.0, 0.0, true};

    const Box& box = grid->box();
    const int d = box.dim();
    const double spacing = grid->max_spacing();

    // Certification nodes, denser than the data grid.
    std::vector<int> dense(static_cast<std::size_t>(d));
    long total = 1;
    for (int i = 0; i < d; ++i) {
        dense[static_cast<std::size_t>(i)] = (grid->counts()[static_cast<std::size_t>(i)] - 1) * certify_factor + 1;
        total *= dense[static_cast<std::size_t>(i)];
    }
    if (total > 200000) throw InputError("certification grid too large");
    std::vector<Eigen::VectorXd> nodes;
    nodes.reserve(static_cast<std::size_t>(total));
    for (long flat = 0; flat < total; ++flat) {
        Eigen::VectorXd x(d);
        long rest = flat;
        for (int i = d - 1; i >= 0; --i) {
            int c = dense[static_cast<std::size_t>(i)];
            int k = static_cast<int>(rest % c);
            rest /= c;
            const Interval& iv = box.axes[static_cast<std::size_t>(i)];
            x(i) = c == 1 ? 0.5 * (iv.lo + iv.hi) : iv.lo + box.width(i) * k / (c - 1);
        }
        nodes.push_back(std::move(x));
    }

    double min_width = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i) min_width = std::min(min_width, box.width(i));
    double w = std::max(2.0 * spacing, 0.25 * min_width);
    while (true) {
        auto moll = std::make_shared<MollifiedFeedback>(grid, w);
        double err = 0.0;
        for (const Eigen::VectorXd& x : nodes) err = std::max(err, (moll->value(x) - grid->value(x)).norm());
        if (err <= eps) return SmoothResult{std::move(moll), w, err, false};
        w *= 0.5;
        if (w < spacing)
            throw CannotAchieveError("smoothing within the requested tolerance needs a kernel finer than the data grid");
    }
}

}  // namespace quasilin

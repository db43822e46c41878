// Command-line front end: loads system files, dispatches subcommands, and
// emits text reports (JSON on request).  Exit codes: 0 success, 2 input
// error, 3 numerical failure.
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "quasilin/dyn.hpp"
#include "quasilin/geo.hpp"
#include "quasilin/linsys.hpp"
#include "quasilin/report.hpp"
#include "quasilin/sampling.hpp"
#include "quasilin/sysfile.hpp"

namespace ql = quasilin;

namespace {

struct CommonOpts {
    double tol = 1e-9;
    double dt = 1e-3;
    int grid = 5;
    double radius = 0.1;
    std::uint64_t seed = 42;
    std::string json_path;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--tol", o.tol, "relative rank / residual tolerance")->capture_default_str();
    cmd->add_option("--dt", o.dt, "integration step")->capture_default_str();
    cmd->add_option("--grid", o.grid, "sample points per axis")->capture_default_str();
    cmd->add_option("--radius", o.radius, "box-normalized neighborhood radius")->capture_default_str();
    cmd->add_option("--seed", o.seed, "sampling seed")->capture_default_str();
    cmd->add_option("--json", o.json_path, "write the JSON report to this path");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ql::InputError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct LoadedSystem {
    ql::SystemFile file;
    std::uint64_t digest = 0;
};

LoadedSystem load(const std::string& path) {
    std::string bytes = read_file(path);
    LoadedSystem ls;
    ls.digest = ql::fnv1a(bytes);
    ls.file = ql::parse_system_file(bytes, path);
    std::string stem = path;
    if (std::size_t slash = stem.find_last_of('/'); slash != std::string::npos) stem.erase(0, slash + 1);
    if (std::size_t dot = stem.find_last_of('.'); dot != std::string::npos) stem.erase(dot);
    if (ls.file.system.name == path) ls.file.system.name = stem;
    return ls;
}

Eigen::VectorXd parse_point(const std::string& text, int expected, const std::string& what) {
    std::string cleaned = text;
    for (char& c : cleaned)
        if (c == ',') c = ' ';
    std::istringstream is(cleaned);
    std::vector<double> vals;
    double v;
    while (is >> v) vals.push_back(v);
    if (static_cast<int>(vals.size()) != expected)
        throw ql::InputError(what + " needs " + std::to_string(expected) + " values");
    return Eigen::Map<const Eigen::VectorXd>(vals.data(), expected);
}

Eigen::MatrixXd parse_matrix_arg(const std::string& text, const std::string& what) {
    std::vector<std::vector<double>> rows;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t semi = text.find(';', pos);
        std::string row = semi == std::string::npos ? text.substr(pos) : text.substr(pos, semi - pos);
        for (char& c : row)
            if (c == ',') c = ' ';
        std::istringstream is(row);
        std::vector<double> vals;
        double v;
        while (is >> v) vals.push_back(v);
        if (vals.empty()) throw ql::InputError(what + " has an empty row");
        rows.push_back(std::move(vals));
        if (semi == std::string::npos) break;
        pos = semi + 1;
    }
    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw ql::InputError(what + " rows differ in length");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return M;
}

ql::VerdictParams verdict_params(const CommonOpts& o) {
    ql::VerdictParams p;
    p.rel_tol = o.tol;
    p.nbhd_radius = o.radius;
    p.grid_per_axis = o.grid;
    p.seed = o.seed;
    return p;
}

void echo_common(ql::Report& rep, const CommonOpts& o) {
    rep.add("tol", o.tol);
    rep.add("grid", o.grid);
    rep.add("radius", o.radius);
    rep.add("seed", o.seed);
}

void emit(const ql::Report& rep, const CommonOpts& o, std::chrono::steady_clock::time_point start) {
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << rep.text(wall);
    if (!o.json_path.empty()) {
        std::ofstream out(o.json_path);
        if (!out) throw ql::InputError("cannot write '" + o.json_path + "'");
        out << rep.json().dump(2) << "\n";
    }
}

ql::Json kappa_json(const std::vector<int>& kappa) {
    ql::Json arr = ql::Json::array();
    for (int k : kappa) arr.push_back(k);
    return arr;
}

// Split an n+m point option into (x, u); empty option means the base point.
std::pair<Eigen::VectorXd, Eigen::VectorXd> point_or_base(const ql::ControlSystem& sys, const std::string& at) {
    Eigen::VectorXd p = at.empty() ? sys.base_point : parse_point(at, sys.n() + sys.m(), "--at");
    return {p.head(sys.n()), p.tail(sys.m())};
}

// The linear pair an operation works with: an explicit A/B block if the file
// has one, otherwise the first-order approximation at the base point.
ql::LinearPair pair_of(const ql::SystemFile& sf) {
    if (sf.target) return *sf.target;
    return sf.system.linearize(sf.system.base_point);
}

std::unique_ptr<ql::Control> control_of(const ql::SystemFile& sf) {
    if (sf.control) return std::make_unique<ql::ExprControl>(*sf.control);
    Eigen::VectorXd u_bar = sf.system.control_part(sf.system.base_point);
    return std::make_unique<ql::LambdaControl>(sf.system.m(), [u_bar](double) { return u_bar; });
}

void flag_payload(ql::Report& rep, const ql::FlagReport& fr) {
    rep.add("class", ql::to_string(fr.point_class.tag));
    rep.add("rank_dfdu", fr.point_class.rank_at_point);
    rep.add("basis_mode", fr.basis_mode);
    rep.add("states_sampled", fr.states_sampled);
    ql::Json levels = ql::Json::array();
    for (const ql::FlagLevel& L : fr.levels) {
        ql::Json level;
        level["rank"] = L.rank;
        level["rank_constant"] = L.rank_constant;
        level["involutive"] = L.involutive;
        level["bracket_residual"] = L.worst_bracket_residual;
        levels.push_back(level);
    }
    rep.add("levels", levels);
    rep.add("directions_independent_of_u", fr.directions_independent_of_u);
    rep.add("worst_direction_distance", fr.worst_direction_distance);
    rep.add("flag_ok", fr.flag_ok);
    rep.add("final_rank", fr.final_rank);
    rep.add("robust_failure", fr.robust_failure);
    if (!fr.failure_reason.empty()) rep.add("failure_reason", fr.failure_reason);
}

void write_csv(const std::string& path, const ql::ControlSystem& sys, const ql::Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw ql::InputError("cannot write '" + path + "'");
    out << "t";
    for (const std::string& s : sys.states) out << "," << s;
    for (const std::string& c : sys.controls) out << "," << c;
    out << "\n";
    char buf[64];
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.12g", traj.times[k]);
        out << buf;
        for (int i = 0; i < sys.n(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.12g", traj.states[k](i));
            out << "," << buf;
        }
        for (int i = 0; i < sys.m(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.12g", traj.controls[k](i));
            out << "," << buf;
        }
        out << "\n";
    }
}

void write_plot_script(const std::string& path, const std::string& csv_path, int columns) {
    std::ofstream out(path);
    if (!out) throw ql::InputError("cannot write '" + path + "'");
    out << "set datafile separator ','\n";
    out << "set key autotitle columnhead\n";
    out << "set xlabel 't'\n";
    out << "plot for [i=2:" << columns << "] '" << csv_path << "' using 1:i with lines\n";
}

int run(int argc, char** argv) {
    CLI::App app{"Numerical toolkit for control systems dx/dt = f(x,u): canonical forms, "
                 "linearizability analysis, conjugacy checks, and simulation."};
    app.set_version_flag("--version", std::string("quasilin ") + ql::kToolVersion);
    app.require_subcommand(1);

    // classify
    auto* c_classify = app.add_subcommand("classify", "Classify a point by the local rank behavior of df/du");
    std::string classify_file, classify_at;
    CommonOpts classify_opts;
    c_classify->add_option("file", classify_file, "system file")->required();
    c_classify->add_option("--at", classify_at, "combined point x1..xn u1..um (default: base point)");
    add_common(c_classify, classify_opts);

    // indices
    auto* c_indices = app.add_subcommand("indices", "Controllability growth vector and Kronecker indices");
    std::string indices_file, indices_at, indices_A, indices_B;
    CommonOpts indices_opts;
    c_indices->add_option("file", indices_file, "system file (uses its A/B block or the linearization)");
    c_indices->add_option("--at", indices_at, "linearization point (default: base point)");
    c_indices->add_option("--A", indices_A, "state matrix, rows ';'-separated");
    c_indices->add_option("--B", indices_B, "input matrix, rows ';'-separated");
    add_common(c_indices, indices_opts);

    // brunovsky
    auto* c_brunovsky = app.add_subcommand("brunovsky", "Transform a controllable pair to chain-block form");
    std::string brunovsky_file, brunovsky_at, brunovsky_A, brunovsky_B;
    CommonOpts brunovsky_opts;
    c_brunovsky->add_option("file", brunovsky_file, "system file (uses its A/B block or the linearization)");
    c_brunovsky->add_option("--at", brunovsky_at, "linearization point (default: base point)");
    c_brunovsky->add_option("--A", brunovsky_A, "state matrix, rows ';'-separated");
    c_brunovsky->add_option("--B", brunovsky_B, "input matrix, rows ';'-separated");
    add_common(c_brunovsky, brunovsky_opts);

    // conjugate-linear
    auto* c_conj = app.add_subcommand("conjugate-linear", "Decide linear conjugacy of two pairs");
    std::string conj_file1, conj_file2;
    CommonOpts conj_opts;
    c_conj->add_option("file1", conj_file1, "first system file")->required();
    c_conj->add_option("file2", conj_file2, "second system file")->required();
    add_common(c_conj, conj_opts);

    // flag
    auto* c_flag = app.add_subcommand("flag", "Bracket-generated distribution flag around a point");
    std::string flag_file, flag_at;
    CommonOpts flag_opts;
    c_flag->add_option("file", flag_file, "system file")->required();
    c_flag->add_option("--at", flag_at, "combined point (default: base point)");
    add_common(c_flag, flag_opts);

    // verdict
    auto* c_verdict = app.add_subcommand("verdict", "Linearizability verdict at a point");
    std::string verdict_file, verdict_at;
    CommonOpts verdict_opts;
    c_verdict->add_option("file", verdict_file, "system file")->required();
    c_verdict->add_option("--at", verdict_at, "combined point (default: base point)");
    add_common(c_verdict, verdict_opts);

    // residual
    auto* c_residual = app.add_subcommand("residual", "Static conjugacy residual of the file's chi against A/B");
    std::string residual_file;
    int residual_samples = 64;
    CommonOpts residual_opts;
    c_residual->add_option("file", residual_file, "system file with chi_I/chi_II and A/B")->required();
    c_residual->add_option("--samples", residual_samples, "sample count over the box")->capture_default_str();
    add_common(c_residual, residual_opts);

    // verify
    auto* c_verify = app.add_subcommand("verify", "Dynamic conjugacy check along a trajectory");
    std::string verify_file, verify_x0;
    double verify_T = 1.0;
    CommonOpts verify_opts;
    c_verify->add_option("file", verify_file, "system file with chi_I/chi_II and A/B")->required();
    c_verify->add_option("--T", verify_T, "horizon")->capture_default_str();
    c_verify->add_option("--x0", verify_x0, "initial state (default: base point states)");
    add_common(c_verify, verify_opts);

    // chatter
    auto* c_chatter = app.add_subcommand("chatter", "Fast switching between X1/X2 against the averaged field");
    std::string chatter_file, chatter_x0;
    int chatter_l = 10;
    double chatter_T = 1.0;
    CommonOpts chatter_opts;
    c_chatter->add_option("file", chatter_file, "system file with X1/X2 blocks")->required();
    c_chatter->add_option("--l", chatter_l, "number of switching segments")->capture_default_str();
    c_chatter->add_option("--T", chatter_T, "horizon")->capture_default_str();
    c_chatter->add_option("--x0", chatter_x0, "initial state (default: base point states)");
    add_common(c_chatter, chatter_opts);

    // orbit-dim
    auto* c_orbit = app.add_subcommand("orbit-dim", "Orbit dimension of the file's field family at the base state");
    std::string orbit_file;
    std::vector<double> orbit_probes;
    CommonOpts orbit_opts;
    c_orbit->add_option("file", orbit_file, "system file")->required();
    c_orbit->add_option("--probe-time", orbit_probes, "flow probe times (default: 0.05 0.1)");
    add_common(c_orbit, orbit_opts);

    // simulate
    auto* c_simulate = app.add_subcommand("simulate", "Integrate the system and export the trajectory");
    std::string sim_file, sim_x0, sim_csv, sim_plot;
    double sim_T = 1.0;
    bool sim_closed = false;
    CommonOpts sim_opts;
    c_simulate->add_option("file", sim_file, "system file")->required();
    c_simulate->add_option("--T", sim_T, "horizon")->capture_default_str();
    c_simulate->add_option("--x0", sim_x0, "initial state (default: base point states)");
    c_simulate->add_option("--csv", sim_csv, "write the trajectory as CSV to this path");
    c_simulate->add_option("--plot", sim_plot, "write a gnuplot script to this path (needs --csv)");
    c_simulate->add_flag("--closed-loop", sim_closed, "drive with the file's feedback block");
    add_common(c_simulate, sim_opts);

    // smooth-feedback
    auto* c_smooth = app.add_subcommand("smooth-feedback", "Smooth approximation of the file's feedback law");
    std::string smooth_file;
    double smooth_eps = 0.1;
    int smooth_grid = 0;
    CommonOpts smooth_opts;
    c_smooth->add_option("file", smooth_file, "system file with a feedback block")->required();
    c_smooth->add_option("--eps", smooth_eps, "sup-norm tolerance")->capture_default_str();
    c_smooth->add_option("--sample-grid", smooth_grid,
                         "sample the feedback on this many nodes per axis first (0: use it as is)")
        ->capture_default_str();
    add_common(c_smooth, smooth_opts);

    CLI11_PARSE(app, argc, argv);
    auto start = std::chrono::steady_clock::now();

    if (*c_classify) {
        LoadedSystem ls = load(classify_file);
        auto [x, u] = point_or_base(ls.file.system, classify_at);
        ql::PointClass pc = ql::classify_point(ls.file.system, x, u, classify_opts.radius, classify_opts.grid,
                                               classify_opts.tol, classify_opts.seed);
        Eigen::VectorXd here(x.size() + u.size());
        here << x, u;
        ql::Report rep("classify", ls.file.system.name, ls.digest);
        rep.add("point", ql::json_vector(here));
        rep.add("class", ql::to_string(pc.tag));
        rep.add("rank_at_point", pc.rank_at_point);
        rep.add("sup_rank_nbhd", pc.sup_rank_nbhd);
        rep.add("samples", pc.samples_used);
        echo_common(rep, classify_opts);
        emit(rep, classify_opts, start);
        return 0;
    }

    auto pair_from_flags_or_file = [&](const std::string& file, const std::string& at, const std::string& A,
                                       const std::string& B, std::string& name,
                                       std::uint64_t& digest) -> ql::LinearPair {
        if (!A.empty() || !B.empty()) {
            if (A.empty() || B.empty()) throw ql::InputError("--A and --B must be given together");
            name = "flags";
            digest = ql::fnv1a(A + ";" + B);
            ql::LinearPair p{parse_matrix_arg(A, "--A"), parse_matrix_arg(B, "--B")};
            p.validate();
            return p;
        }
        if (file.empty()) throw ql::InputError("give a system file or --A/--B");
        LoadedSystem ls = load(file);
        name = ls.file.system.name;
        digest = ls.digest;
        if (ls.file.target && at.empty()) return *ls.file.target;
        Eigen::VectorXd p = at.empty() ? ls.file.system.base_point
                                       : parse_point(at, ls.file.system.n() + ls.file.system.m(), "--at");
        return ls.file.system.linearize(p);
    };

    if (*c_indices) {
        std::string name;
        std::uint64_t digest = 0;
        ql::LinearPair p = pair_from_flags_or_file(indices_file, indices_at, indices_A, indices_B, name, digest);
        ql::KroneckerData kd = ql::kronecker_data(p, indices_opts.tol);
        ql::Report rep("indices", name, digest);
        rep.add("n", p.n());
        rep.add("m", p.m());
        rep.add("r", kappa_json(kd.r));
        rep.add("s", kappa_json(kd.s));
        rep.add("sigma", kappa_json(kd.sigma));
        rep.add("rho", kd.rho);
        rep.add("kappa", kappa_json(kd.kappa));
        rep.add("controllable", kd.controllable);
        rep.add("tol", indices_opts.tol);
        emit(rep, indices_opts, start);
        return 0;
    }

    if (*c_brunovsky) {
        std::string name;
        std::uint64_t digest = 0;
        ql::LinearPair p =
            pair_from_flags_or_file(brunovsky_file, brunovsky_at, brunovsky_A, brunovsky_B, name, digest);
        ql::BrunovskyResult br = ql::brunovsky(p, brunovsky_opts.tol);
        ql::LinearPair canon = ql::canonical_pair(br.kappa, p.m());
        ql::Report rep("brunovsky", name, digest);
        rep.add("kappa", kappa_json(br.kappa));
        rep.add("P", ql::json_matrix(br.P));
        rep.add("K", ql::json_matrix(br.K));
        rep.add("Q", ql::json_matrix(br.Q));
        rep.add("residual_A", (br.Ac - canon.A).norm());
        rep.add("residual_B", (br.Bc - canon.B).norm());
        rep.add("tol", brunovsky_opts.tol);
        emit(rep, brunovsky_opts, start);
        return 0;
    }

    if (*c_conj) {
        LoadedSystem ls1 = load(conj_file1);
        LoadedSystem ls2 = load(conj_file2);
        ql::LinearPair p1 = pair_of(ls1.file), p2 = pair_of(ls2.file);
        ql::KroneckerData k1 = ql::kronecker_data(p1, conj_opts.tol);
        ql::KroneckerData k2 = ql::kronecker_data(p2, conj_opts.tol);
        bool conj = ql::linearly_conjugate(p1, p2, conj_opts.tol);
        ql::Report rep("conjugate-linear", ls1.file.system.name + "," + ls2.file.system.name,
                       ls1.digest ^ (ls2.digest * 1099511628211ull));
        rep.add("kappa1", kappa_json(k1.kappa));
        rep.add("kappa2", kappa_json(k2.kappa));
        rep.add("conjugate", conj);
        rep.add("tol", conj_opts.tol);
        emit(rep, conj_opts, start);
        return 0;
    }

    if (*c_flag) {
        LoadedSystem ls = load(flag_file);
        auto [x, u] = point_or_base(ls.file.system, flag_at);
        ql::VerdictParams vp = verdict_params(flag_opts);
        std::vector<Eigen::VectorXd> grid = ql::cube_grid(x, vp.nbhd_radius, ls.file.system.state_box(),
                                                          vp.grid_per_axis, vp.max_state_samples, vp.seed);
        ql::FlagReport fr = ql::build_flag(ls.file.system, x, u, grid, vp);
        ql::Report rep("flag", ls.file.system.name, ls.digest);
        flag_payload(rep, fr);
        echo_common(rep, flag_opts);
        emit(rep, flag_opts, start);
        return 0;
    }

    if (*c_verdict) {
        LoadedSystem ls = load(verdict_file);
        auto [x, u] = point_or_base(ls.file.system, verdict_at);
        ql::FlagReport fr = ql::linearizability_verdict(ls.file.system, x, u, verdict_params(verdict_opts));
        ql::Report rep("verdict", ls.file.system.name, ls.digest);
        flag_payload(rep, fr);
        rep.add("fibration_ok", fr.fibration_ok);
        rep.add("fiber_dim_constant", fr.fiber_dim_constant);
        rep.add("openness_margin", fr.openness_margin);
        rep.add("verdict", ql::to_string(fr.verdict));
        echo_common(rep, verdict_opts);
        emit(rep, verdict_opts, start);
        return 0;
    }

    if (*c_residual) {
        LoadedSystem ls = load(residual_file);
        if (!ls.file.conjugation || !ls.file.target)
            throw ql::InputError("'" + residual_file + "' needs chi_I/chi_II and A/B blocks");
        std::vector<Eigen::VectorXd> pts =
            ql::box_points(ls.file.system.box, residual_samples, residual_opts.seed);
        double res = ql::conjugacy_residual(ls.file.system, *ls.file.target, *ls.file.conjugation, pts);
        double defect = ql::triangularity_defect(ls.file.system, *ls.file.conjugation, pts);
        ql::Report rep("residual", ls.file.system.name, ls.digest);
        rep.add("residual", res);
        rep.add("triangularity_defect", defect);
        rep.add("samples", static_cast<int>(pts.size()));
        rep.add("seed", residual_opts.seed);
        emit(rep, residual_opts, start);
        return 0;
    }

    if (*c_verify) {
        LoadedSystem ls = load(verify_file);
        if (!ls.file.conjugation || !ls.file.target)
            throw ql::InputError("'" + verify_file + "' needs chi_I/chi_II and A/B blocks");
        Eigen::VectorXd x0 = verify_x0.empty() ? ls.file.system.state_part(ls.file.system.base_point)
                                               : parse_point(verify_x0, ls.file.system.n(), "--x0");
        std::unique_ptr<ql::Control> ctrl = control_of(ls.file);
        ql::DynamicCheck check = ql::verify_conjugacy_dynamic(ls.file.system, *ls.file.target, *ls.file.conjugation,
                                                              x0, *ctrl, verify_T, verify_opts.dt, 64,
                                                              verify_opts.seed);
        ql::Report rep("verify", ls.file.system.name, ls.digest);
        rep.add("max_deviation", check.max_deviation);
        rep.add("triangularity_defect", check.triangularity);
        rep.add("T", verify_T);
        rep.add("dt", verify_opts.dt);
        rep.add("steps", static_cast<int>(check.traj.times.size()) - 1);
        rep.add("exited", check.traj.exited);
        if (check.traj.exited) rep.add("exit_time", check.traj.exit_time);
        emit(rep, verify_opts, start);
        return 0;
    }

    if (*c_chatter) {
        LoadedSystem ls = load(chatter_file);
        if (!ls.file.X1 || !ls.file.X2) throw ql::InputError("'" + chatter_file + "' needs X1/X2 blocks");
        ql::ExprField X1(*ls.file.X1), X2(*ls.file.X2);
        Eigen::VectorXd x0 = chatter_x0.empty() ? ls.file.system.state_part(ls.file.system.base_point)
                                                : parse_point(chatter_x0, ls.file.system.n(), "--x0");
        ql::ChatterResult cr = ql::chatter_compare(X1, X2, ls.file.system.state_box(), x0, chatter_T, chatter_l,
                                                   chatter_opts.dt);
        ql::Report rep("chatter", ls.file.system.name, ls.digest);
        rep.add("l", cr.segments);
        rep.add("T", chatter_T);
        rep.add("dt", cr.dt_used);
        rep.add("sup_error", cr.sup_error);
        rep.add("final_switched", ql::json_vector(cr.switched.states.back()));
        rep.add("final_averaged", ql::json_vector(cr.averaged.states.back()));
        emit(rep, chatter_opts, start);
        return 0;
    }

    if (*c_orbit) {
        LoadedSystem ls = load(orbit_file);
        const ql::ControlSystem& sys = ls.file.system;
        std::vector<ql::FieldPtr> fields;
        if (ls.file.X1 && ls.file.X2) {
            fields.push_back(std::make_shared<ql::ExprField>(*ls.file.X1));
            fields.push_back(std::make_shared<ql::ExprField>(*ls.file.X2));
        } else {
            Eigen::VectorXd u_bar = sys.control_part(sys.base_point);
            fields.push_back(sys.frozen_control_field(u_bar));
            for (int j = 0; j < sys.m(); ++j) fields.push_back(sys.control_jacobian_column_field(u_bar, j));
        }
        ql::OrbitParams op;
        if (!orbit_probes.empty()) op.probe_times = orbit_probes;
        op.dt = orbit_opts.dt;
        op.rel_tol = orbit_opts.tol;
        ql::OrbitResult orr = ql::orbit_dimension(fields, sys.state_box(), sys.state_part(sys.base_point), op);
        ql::Report rep("orbit-dim", sys.name, ls.digest);
        rep.add("dimension", orr.dimension);
        rep.add("vectors_used", orr.vectors_used);
        ql::Json probes = ql::Json::array();
        for (double t : op.probe_times) probes.push_back(t);
        rep.add("probe_times", probes);
        rep.add("dt", op.dt);
        rep.add("tol", op.rel_tol);
        emit(rep, orbit_opts, start);
        return 0;
    }

    if (*c_simulate) {
        LoadedSystem ls = load(sim_file);
        const ql::ControlSystem& sys = ls.file.system;
        Eigen::VectorXd x0 =
            sim_x0.empty() ? sys.state_part(sys.base_point) : parse_point(sim_x0, sys.n(), "--x0");
        ql::Trajectory traj;
        if (sim_closed) {
            if (!ls.file.feedback) throw ql::InputError("'" + sim_file + "' has no feedback block");
            ql::ExprFeedback alpha(*ls.file.feedback);
            traj = ql::integrate_closed_loop(sys, x0, alpha, sim_T, sim_opts.dt);
        } else {
            std::unique_ptr<ql::Control> ctrl = control_of(ls.file);
            traj = ql::integrate(sys, x0, *ctrl, sim_T, sim_opts.dt);
        }
        if (!sim_csv.empty()) write_csv(sim_csv, sys, traj);
        if (!sim_plot.empty()) {
            if (sim_csv.empty()) throw ql::InputError("--plot needs --csv");
            write_plot_script(sim_plot, sim_csv, 1 + sys.n() + sys.m());
        }
        ql::Report rep("simulate", sys.name, ls.digest);
        rep.add("T", sim_T);
        rep.add("dt", sim_opts.dt);
        rep.add("steps", static_cast<int>(traj.times.size()) - 1);
        rep.add("closed_loop", sim_closed);
        rep.add("final_state", ql::json_vector(traj.states.back()));
        rep.add("exited", traj.exited);
        if (traj.exited) rep.add("exit_time", traj.exit_time);
        if (!sim_csv.empty()) rep.add("csv", sim_csv);
        if (!sim_plot.empty()) rep.add("plot", sim_plot);
        emit(rep, sim_opts, start);
        return 0;
    }

    if (*c_smooth) {
        LoadedSystem ls = load(smooth_file);
        const ql::ControlSystem& sys = ls.file.system;
        if (!ls.file.feedback) throw ql::InputError("'" + smooth_file + "' has no feedback block");
        ql::FeedbackPtr fb = std::make_shared<ql::ExprFeedback>(*ls.file.feedback);
        if (smooth_grid >= 2) {
            ql::Box sbox = sys.state_box();
            std::vector<int> counts(static_cast<std::size_t>(sys.n()), smooth_grid);
            std::vector<Eigen::VectorXd> nodes = ql::box_grid(sbox, smooth_grid);
            Eigen::MatrixXd values(static_cast<Eigen::Index>(nodes.size()), sys.m());
            for (std::size_t k = 0; k < nodes.size(); ++k)
                values.row(static_cast<Eigen::Index>(k)) = fb->value(nodes[k]).transpose();
            fb = std::make_shared<ql::GridFeedback>(sbox, counts, values);
        }
        ql::SmoothResult sr = ql::smooth_feedback(fb, smooth_eps);
        ql::Report rep("smooth-feedback", sys.name, ls.digest);
        rep.add("eps", smooth_eps);
        rep.add("sample_grid", smooth_grid);
        rep.add("passthrough", sr.passthrough);
        rep.add("width", sr.width);
        rep.add("max_error", sr.max_error);
        emit(rep, smooth_opts, start);
        return 0;
    }

    return 0;
}

int fail(int code, const char* kind, const std::string& what) {
    std::cerr << "error (" << kind << "): " << what << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ql::BoxExitError& e) {
        return fail(3, "box-exit", e.what());
    } catch (const ql::DomainError& e) {
        return fail(3, "domain", e.what());
    } catch (const ql::NotControllableError& e) {
        return fail(3, "not-controllable", e.what());
    } catch (const ql::CannotAchieveError& e) {
        return fail(3, "cannot-achieve", e.what());
    } catch (const ql::Error& e) {
        return fail(2, "input", e.what());
    } catch (const std::exception& e) {
        return fail(3, "internal", e.what());
    }
}

#include "quasilin/sysfile.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace quasilin {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_words(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

std::vector<double> parse_numbers(const std::string& s, const std::string& what) {
    std::string cleaned = s;
    for (char& c : cleaned)
        if (c == ',') c = ' ';
    std::istringstream is(cleaned);
    std::vector<double> out;
    double v;
    while (is >> v) out.push_back(v);
    is.clear();
    std::string rest;
    if (is >> rest) throw InputError("bad number in " + what + ": '" + rest + "'");
    if (out.empty()) throw InputError(what + " has no values");
    return out;
}

Eigen::MatrixXd parse_matrix(const std::string& s, const std::string& what) {
    std::vector<std::vector<double>> rows;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t semi = s.find(';', pos);
        std::string row = semi == std::string::npos ? s.substr(pos) : s.substr(pos, semi - pos);
        rows.push_back(parse_numbers(row, what + " row"));
        if (semi == std::string::npos) break;
        pos = semi + 1;
    }
    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw InputError(what + " rows differ in length");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return M;
}

ExprVec build_vec(const std::vector<std::string>& lines, SymbolsPtr syms, const std::string& what) {
    std::vector<Expr> comps;
    for (const std::string& line : lines) {
        try {
            comps.push_back(parse_expr(line, syms));
        } catch (const Error& e) {
            throw InputError(what + ": " + e.what());
        }
    }
    return ExprVec(std::move(comps));
}

}  // namespace

SystemFile parse_system_file(const std::string& text, const std::string& origin) {
    std::map<std::string, std::vector<std::string>> entries;
    std::vector<std::string> order;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::string line = trim(raw);
        if (line.empty()) continue;
        std::size_t colon = line.find(':');
        if (colon == std::string::npos)
            throw InputError(origin + ":" + std::to_string(lineno) + ": expected 'key: value'");
        std::string key = trim(line.substr(0, colon));
        std::string value = trim(line.substr(colon + 1));
        if (key.empty()) throw InputError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (!entries.count(key)) order.push_back(key);
        entries[key].push_back(value);
    }

    static const std::vector<std::string> known = {"name", "states",  "controls", "f",   "box", "base",
                                                   "chi_I", "chi_II", "chi_I_inv", "A",  "B",   "control",
                                                   "feedback", "X1",  "X2"};
    for (const std::string& key : order)
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw InputError(origin + ": unknown key '" + key + "'");

    auto single = [&](const std::string& key) -> std::optional<std::string> {
        auto it = entries.find(key);
        if (it == entries.end()) return std::nullopt;
        if (it->second.size() != 1) throw InputError(origin + ": key '" + key + "' given more than once");
        return it->second.front();
    };
    auto lines = [&](const std::string& key) -> std::vector<std::string> {
        auto it = entries.find(key);
        return it == entries.end() ? std::vector<std::string>{} : it->second;
    };

    SystemFile sf;
    auto states_line = single("states");
    auto controls_line = single("controls");
    if (!states_line || !controls_line) throw InputError(origin + ": 'states' and 'controls' are required");
    sf.system.states = split_words(*states_line);
    sf.system.controls = split_words(*controls_line);
    sf.system.name = single("name").value_or(origin);

    std::vector<std::string> all = sf.system.states;
    all.insert(all.end(), sf.system.controls.begin(), sf.system.controls.end());
    SymbolsPtr syms = make_symbols(all);
    const int n = static_cast<int>(sf.system.states.size());
    const int m = static_cast<int>(sf.system.controls.size());

    std::vector<std::string> f_lines = lines("f");
    if (static_cast<int>(f_lines.size()) != n)
        throw InputError(origin + ": expected one 'f' line per state, got " + std::to_string(f_lines.size()));
    sf.system.f = build_vec(f_lines, syms, origin + ": f");

    std::vector<std::string> box_lines = lines("box");
    if (static_cast<int>(box_lines.size()) != n + m)
        throw InputError(origin + ": expected one 'box' line per state and control");
    for (const std::string& line : box_lines) {
        std::vector<double> v = parse_numbers(line, origin + ": box");
        if (v.size() != 2 || !(v[0] < v[1])) throw InputError(origin + ": each box line needs 'lo hi' with lo < hi");
        sf.system.box.axes.push_back(Interval{v[0], v[1]});
    }

    if (auto base = single("base")) {
        std::vector<double> v = parse_numbers(*base, origin + ": base");
        if (static_cast<int>(v.size()) != n + m) throw InputError(origin + ": base needs one value per symbol");
        sf.system.base_point = Eigen::Map<const Eigen::VectorXd>(v.data(), n + m);
    } else {
        sf.system.base_point.resize(n + m);
        for (int i = 0; i < n + m; ++i) {
            const Interval& iv = sf.system.box.axes[static_cast<std::size_t>(i)];
            sf.system.base_point(i) = 0.5 * (iv.lo + iv.hi);
        }
    }
    try {
        sf.system.validate();
    } catch (const Error& e) {
        throw InputError(origin + ": " + e.what());
    }

    std::vector<std::string> ci = lines("chi_I"), cii = lines("chi_II");
    if (!ci.empty() || !cii.empty()) {
        if (static_cast<int>(ci.size()) != n || static_cast<int>(cii.size()) != m)
            throw InputError(origin + ": conjugacy needs one chi_I line per state and one chi_II line per control");
        Conjugation conj;
        conj.chi_I = build_vec(ci, syms, origin + ": chi_I");
        conj.chi_II = build_vec(cii, syms, origin + ": chi_II");
        std::vector<std::string> inv = lines("chi_I_inv");
        if (!inv.empty()) {
            if (static_cast<int>(inv.size()) != n) throw InputError(origin + ": chi_I_inv needs one line per state");
            std::vector<std::string> znames;
            for (int i = 1; i <= n; ++i) znames.push_back("z" + std::to_string(i));
            conj.chi_I_inverse = build_vec(inv, make_symbols(znames), origin + ": chi_I_inv");
        }
        sf.conjugation = std::move(conj);
    }

    auto a_line = single("A");
    auto b_line = single("B");
    if (a_line.has_value() != b_line.has_value()) throw InputError(origin + ": 'A' and 'B' must appear together");
    if (a_line) {
        LinearPair target{parse_matrix(*a_line, origin + ": A"), parse_matrix(*b_line, origin + ": B")};
        try {
            target.validate();
        } catch (const Error& e) {
            throw InputError(origin + ": " + e.what());
        }
        sf.target = std::move(target);
    }

    if (std::vector<std::string> c = lines("control"); !c.empty()) {
        if (static_cast<int>(c.size()) != m) throw InputError(origin + ": 'control' needs one line per control");
        sf.control = build_vec(c, make_symbols({"t"}), origin + ": control");
    }
    if (std::vector<std::string> fb = lines("feedback"); !fb.empty()) {
        if (static_cast<int>(fb.size()) != m) throw InputError(origin + ": 'feedback' needs one line per control");
        sf.feedback = build_vec(fb, make_symbols(sf.system.states), origin + ": feedback");
    }
    for (const char* key : {"X1", "X2"}) {
        std::vector<std::string> fl = lines(key);
        if (fl.empty()) continue;
        if (static_cast<int>(fl.size()) != n)
            throw InputError(origin + ": '" + std::string(key) + "' needs one line per state");
        ExprVec vec = build_vec(fl, make_symbols(sf.system.states), origin + ": " + key);
        (std::string(key) == "X1" ? sf.X1 : sf.X2) = std::move(vec);
    }
    if (sf.X1.has_value() != sf.X2.has_value()) throw InputError(origin + ": 'X1' and 'X2' must appear together");

    return sf;
}

SystemFile load_system_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    std::string stem = path;
    if (std::size_t slash = stem.find_last_of('/'); slash != std::string::npos) stem.erase(0, slash + 1);
    if (std::size_t dot = stem.find_last_of('.'); dot != std::string::npos) stem.erase(dot);
    SystemFile sf = parse_system_file(buf.str(), path);
    if (sf.system.name == path) sf.system.name = stem;
    return sf;
}

}  // namespace quasilin

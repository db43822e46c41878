// Expression trees over named symbols: parsing, canonical printing,
// evaluation over generic scalars (double or nested duals), Jacobians.
#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "quasilin/dual.hpp"
#include "quasilin/errors.hpp"

namespace quasilin {

// Maps symbol name -> value; must cover every symbol of the expression.
using EvalPoint = std::map<std::string, double>;

class SymbolTable {
  public:
    explicit SymbolTable(std::vector<std::string> names);
    int index(std::string_view name) const;  // -1 when absent
    int size() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }
    bool operator==(const SymbolTable& other) const { return names_ == other.names_; }

  private:
    std::vector<std::string> names_;
};

using SymbolsPtr = std::shared_ptr<const SymbolTable>;

SymbolsPtr make_symbols(std::vector<std::string> names);

class Expr {
  public:
    enum class Kind { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Tanh, Sqrt };

    struct Node {
        Kind kind;
        double cval = 0.0;  // Const
        int var = -1;       // Var: index into the symbol table
        int ipow = 0;       // Pow exponent
        std::shared_ptr<const Node> a, b;
    };
    using NodePtr = std::shared_ptr<const Node>;

    Expr() = default;

    static Expr constant(SymbolsPtr syms, double value);
    static Expr variable(SymbolsPtr syms, std::string_view name);

    bool valid() const { return root_ != nullptr; }
    const SymbolsPtr& symbols() const { return syms_; }
    const NodePtr& root() const { return root_; }

    // Canonical text form; parsing it back yields the same tree.
    std::string str() const;
    bool same_structure(const Expr& other) const;

    double eval(const EvalPoint& point) const;

    // Evaluation over values ordered like the symbol table.
    template <class T>
    T eval_values(std::span<const T> values) const;

    // Derivatives with respect to `wrt` symbols, as a row vector.
    Eigen::RowVectorXd gradient(const std::vector<std::string>& wrt, const EvalPoint& point) const;

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    friend Expr operator+(const Expr& a, double c);
    friend Expr operator+(double c, const Expr& a);
    friend Expr operator*(double c, const Expr& a);
    friend Expr pow(const Expr& a, int k);
    friend Expr sin(const Expr& a);
    friend Expr cos(const Expr& a);
    friend Expr exp(const Expr& a);
    friend Expr tanh(const Expr& a);
    friend Expr sqrt(const Expr& a);

    static Expr make(SymbolsPtr syms, NodePtr node) { return Expr(std::move(syms), std::move(node)); }

  private:
    Expr(SymbolsPtr syms, NodePtr root) : syms_(std::move(syms)), root_(std::move(root)) {}

    SymbolsPtr syms_;
    NodePtr root_;
};

// Canonical rendering of a subtree, used for printing and error messages.
std::string node_text(const Expr::Node& node, const SymbolTable& syms);

namespace detail {

template <class T>
T eval_node(const Expr::Node& n, std::span<const T> v, const SymbolTable& syms) {
    using std::cos;
    using std::exp;
    using std::sin;
    using std::sqrt;
    using std::tanh;
    switch (n.kind) {
        case Expr::Kind::Const:
            return T(n.cval);
        case Expr::Kind::Var:
            return v[static_cast<std::size_t>(n.var)];
        case Expr::Kind::Neg:
            return -eval_node(*n.a, v, syms);
        case Expr::Kind::Add:
            return eval_node(*n.a, v, syms) + eval_node(*n.b, v, syms);
        case Expr::Kind::Sub:
            return eval_node(*n.a, v, syms) - eval_node(*n.b, v, syms);
        case Expr::Kind::Mul:
            return eval_node(*n.a, v, syms) * eval_node(*n.b, v, syms);
        case Expr::Kind::Div: {
            T den = eval_node(*n.b, v, syms);
            if (primal(den) == 0.0) throw DomainError("division by zero in '" + node_text(n, syms) + "'");
            return eval_node(*n.a, v, syms) / den;
        }
        case Expr::Kind::Pow: {
            T base = eval_node(*n.a, v, syms);
            if (n.ipow < 0 && primal(base) == 0.0)
                throw DomainError("zero base with negative exponent in '" + node_text(n, syms) + "'");
            return pow_int(base, n.ipow);
        }
        case Expr::Kind::Sin:
            return sin(eval_node(*n.a, v, syms));
        case Expr::Kind::Cos:
            return cos(eval_node(*n.a, v, syms));
        case Expr::Kind::Exp:
            return exp(eval_node(*n.a, v, syms));
        case Expr::Kind::Tanh:
            return tanh(eval_node(*n.a, v, syms));
        case Expr::Kind::Sqrt: {
            T arg = eval_node(*n.a, v, syms);
            double p = primal(arg);
            if (p < 0.0) throw DomainError("sqrt of a negative value in '" + node_text(n, syms) + "'");
            if (p == 0.0 && !std::is_same_v<T, double>)
                throw DomainError("sqrt derivative at zero in '" + node_text(n, syms) + "'");
            return sqrt(arg);
        }
    }
    throw Error("corrupt expression node");
}

}  // namespace detail

template <class T>
T Expr::eval_values(std::span<const T> values) const {
    if (!root_) throw Error("empty expression");
    if (static_cast<int>(values.size()) != syms_->size()) throw DimensionMismatchError("value count differs from symbol count");
    return detail::eval_node<T>(*root_, values, *syms_);
}

// A vector of expressions over one shared symbol table.
class ExprVec {
  public:
    ExprVec() = default;
    explicit ExprVec(std::vector<Expr> comps);

    int dim() const { return static_cast<int>(comps_.size()); }
    const Expr& operator[](int i) const { return comps_[static_cast<std::size_t>(i)]; }
    const SymbolsPtr& symbols() const { return syms_; }
    const std::vector<Expr>& components() const { return comps_; }

    Eigen::VectorXd eval(const EvalPoint& point) const;

    template <class T>
    void eval_values(std::span<const T> values, std::span<T> out) const {
        for (std::size_t i = 0; i < comps_.size(); ++i) out[i] = comps_[i].eval_values(values);
    }

    // Rows follow the components, columns the `wrt` symbols.
    Eigen::MatrixXd jacobian(const std::vector<std::string>& wrt, const EvalPoint& point) const;
    Eigen::MatrixXd jacobian_values(std::span<const double> values, std::span<const int> wrt_idx) const;

  private:
    std::vector<Expr> comps_;
    SymbolsPtr syms_;
};

Expr parse_expr(const std::string& text, SymbolsPtr symbols);
Expr parse_expr(const std::string& text, const std::vector<std::string>& symbols);

// Values ordered like the table; throws UnknownSymbolError on gaps.
std::vector<double> values_from_point(const SymbolTable& syms, const EvalPoint& point);

}  // namespace quasilin

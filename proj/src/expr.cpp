#include "quasilin/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <utility>

namespace quasilin {

namespace {

const std::array<std::pair<std::string_view, Expr::Kind>, 5> kFunctions = {{
    {"sin", Expr::Kind::Sin},
    {"cos", Expr::Kind::Cos},
    {"exp", Expr::Kind::Exp},
    {"tanh", Expr::Kind::Tanh},
    {"sqrt", Expr::Kind::Sqrt},
}};

bool is_function_name(std::string_view s) {
    for (const auto& [name, kind] : kFunctions)
        if (name == s) return true;
    return false;
}

Expr::NodePtr make_node(Expr::Node n) { return std::make_shared<const Expr::Node>(std::move(n)); }

Expr::NodePtr const_node(double v) {
    Expr::Node n;
    n.kind = Expr::Kind::Const;
    n.cval = v;
    return make_node(std::move(n));
}

Expr::NodePtr unary_node(Expr::Kind kind, Expr::NodePtr a) {
    Expr::Node n;
    n.kind = kind;
    n.a = std::move(a);
    return make_node(std::move(n));
}

Expr::NodePtr binary_node(Expr::Kind kind, Expr::NodePtr a, Expr::NodePtr b) {
    Expr::Node n;
    n.kind = kind;
    n.a = std::move(a);
    n.b = std::move(b);
    return make_node(std::move(n));
}

// Negation folds constants so that "-2" round-trips as a constant.
Expr::NodePtr neg_node(Expr::NodePtr a) {
    if (a->kind == Expr::Kind::Const) return const_node(-a->cval);
    if (a->kind == Expr::Kind::Neg) return a->a;
    return unary_node(Expr::Kind::Neg, std::move(a));
}

void require_same_table(const Expr& a, const Expr& b) {
    if (!a.valid() || !b.valid()) throw Error("empty expression operand");
    if (a.symbols() != b.symbols() && !(*a.symbols() == *b.symbols()))
        throw Error("expressions use different symbol tables");
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

// Binding strength; parentheses are emitted only when a child binds weaker
// than its context requires.
int precedence(const Expr::Node& n) {
    switch (n.kind) {
        case Expr::Kind::Add:
        case Expr::Kind::Sub:
            return 10;
        case Expr::Kind::Mul:
        case Expr::Kind::Div:
            return 20;
        case Expr::Kind::Neg:
            return 30;
        case Expr::Kind::Pow:
            return 40;
        default:
            return 100;
    }
}

void print_node(const Expr::Node& n, const SymbolTable& syms, std::string& out);

void print_child(const Expr::Node& child, const SymbolTable& syms, int min_prec, std::string& out) {
    // A negative constant prints with a leading '-', so it binds like a negation.
    int prec = child.kind == Expr::Kind::Const && child.cval < 0.0 ? 30 : precedence(child);
    bool parens = prec < min_prec;
    if (parens) out += '(';
    print_node(child, syms, out);
    if (parens) out += ')';
}

void print_node(const Expr::Node& n, const SymbolTable& syms, std::string& out) {
    switch (n.kind) {
        case Expr::Kind::Const: {
            double v = n.cval;
            if (v < 0.0) {
                out += '-';
                v = -v;
            }
            out += format_double(v);
            return;
        }
        case Expr::Kind::Var:
            out += syms.names()[static_cast<std::size_t>(n.var)];
            return;
        case Expr::Kind::Neg:
            out += '-';
            print_child(*n.a, syms, 30, out);
            return;
        case Expr::Kind::Add:
            print_child(*n.a, syms, 10, out);
            out += " + ";
            print_child(*n.b, syms, 11, out);
            return;
        case Expr::Kind::Sub:
            print_child(*n.a, syms, 10, out);
            out += " - ";
            print_child(*n.b, syms, 11, out);
            return;
        case Expr::Kind::Mul:
            print_child(*n.a, syms, 20, out);
            out += "*";
            print_child(*n.b, syms, 21, out);
            return;
        case Expr::Kind::Div:
            print_child(*n.a, syms, 20, out);
            out += "/";
            print_child(*n.b, syms, 21, out);
            return;
        case Expr::Kind::Pow:
            print_child(*n.a, syms, 100, out);
            out += '^';
            if (n.ipow < 0) {
                out += '(';
                out += std::to_string(n.ipow);
                out += ')';
            } else {
                out += std::to_string(n.ipow);
            }
            return;
        case Expr::Kind::Sin:
        case Expr::Kind::Cos:
        case Expr::Kind::Exp:
        case Expr::Kind::Tanh:
        case Expr::Kind::Sqrt: {
            for (const auto& [name, kind] : kFunctions)
                if (kind == n.kind) out += name;
            out += '(';
            print_node(*n.a, syms, out);
            out += ')';
            return;
        }
    }
}

struct Token {
    enum Type { Num, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };
    Type type;
    double num = 0.0;
    std::string text;
    std::size_t pos = 0;
};

class Lexer {
  public:
    explicit Lexer(const std::string& src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> toks;
        while (true) {
            skip_space();
            Token t;
            t.pos = i_;
            if (i_ >= src_.size()) {
                t.type = Token::End;
                toks.push_back(t);
                return toks;
            }
            char c = src_[i_];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                t.type = Token::Num;
                t.text = scan_number();
                const char* begin = t.text.c_str();
                char* end = nullptr;
                t.num = std::strtod(begin, &end);
                if (end != begin + t.text.size()) throw SyntaxError("malformed number '" + t.text + "'", t.pos);
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                t.type = Token::Ident;
                while (i_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_'))
                    t.text += src_[i_++];
            } else {
                switch (c) {
                    case '+': t.type = Token::Plus; break;
                    case '-': t.type = Token::Minus; break;
                    case '*': t.type = Token::Star; break;
                    case '/': t.type = Token::Slash; break;
                    case '^': t.type = Token::Caret; break;
                    case '(': t.type = Token::LParen; break;
                    case ')': t.type = Token::RParen; break;
                    default:
                        throw SyntaxError(std::string("unexpected character '") + c + "'", i_);
                }
                ++i_;
            }
            toks.push_back(std::move(t));
        }
    }

  private:
    void skip_space() {
        while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
    }

    std::string scan_number() {
        std::string s;
        while (i_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[i_])) || src_[i_] == '.'))
            s += src_[i_++];
        if (i_ < src_.size() && (src_[i_] == 'e' || src_[i_] == 'E')) {
            std::size_t save = i_;
            std::string ex;
            ex += src_[i_++];
            if (i_ < src_.size() && (src_[i_] == '+' || src_[i_] == '-')) ex += src_[i_++];
            if (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) {
                while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) ex += src_[i_++];
                s += ex;
            } else {
                i_ = save;  // 'e' belongs to a following identifier, not the number
            }
        }
        return s;
    }

    const std::string& src_;
    std::size_t i_ = 0;
};

// Recursive descent over: sum -> product -> unary minus -> power -> atom.
class Parser {
  public:
    Parser(const std::string& src, SymbolsPtr syms) : syms_(std::move(syms)), toks_(Lexer(src).run()) {}

    Expr::NodePtr parse() {
        Expr::NodePtr e = parse_sum();
        if (peek().type != Token::End) throw SyntaxError("unexpected trailing input", peek().pos);
        return e;
    }

    SymbolsPtr syms_;

  private:
    const Token& peek() const { return toks_[i_]; }
    const Token& advance() { return toks_[i_++]; }
    bool accept(Token::Type t) {
        if (peek().type == t) {
            ++i_;
            return true;
        }
        return false;
    }

    Expr::NodePtr parse_sum() {
        Expr::NodePtr lhs = parse_product();
        while (true) {
            if (accept(Token::Plus))
                lhs = binary_node(Expr::Kind::Add, lhs, parse_product());
            else if (accept(Token::Minus))
                lhs = binary_node(Expr::Kind::Sub, lhs, parse_product());
            else
                return lhs;
        }
    }

    Expr::NodePtr parse_product() {
        Expr::NodePtr lhs = parse_unary();
        while (true) {
            if (accept(Token::Star))
                lhs = binary_node(Expr::Kind::Mul, lhs, parse_unary());
            else if (accept(Token::Slash))
                lhs = binary_node(Expr::Kind::Div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    Expr::NodePtr parse_unary() {
        if (accept(Token::Minus)) return neg_node(parse_unary());
        return parse_power();
    }

    Expr::NodePtr parse_power() {
        Expr::NodePtr base = parse_atom();
        if (!accept(Token::Caret)) return base;
        Expr::Node n;
        n.kind = Expr::Kind::Pow;
        n.a = std::move(base);
        n.ipow = parse_exponent();
        return make_node(std::move(n));
    }

    int parse_exponent() {
        bool parens = accept(Token::LParen);
        int sign = accept(Token::Minus) ? -1 : 1;
        const Token& t = peek();
        if (t.type != Token::Num) throw SyntaxError("expected integer exponent", t.pos);
        for (char c : t.text)
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw SyntaxError("exponent must be an integer literal", t.pos);
        advance();
        if (parens && !accept(Token::RParen)) throw SyntaxError("expected ')' after exponent", peek().pos);
        return sign * static_cast<int>(t.num);
    }

    Expr::NodePtr parse_atom() {
        const Token& t = peek();
        switch (t.type) {
            case Token::Num: {
                advance();
                return const_node(t.num);
            }
            case Token::Ident: {
                advance();
                if (is_function_name(t.text)) {
                    if (!accept(Token::LParen))
                        throw SyntaxError("expected '(' after function '" + t.text + "'", peek().pos);
                    Expr::NodePtr arg = parse_sum();
                    if (!accept(Token::RParen)) throw SyntaxError("expected ')'", peek().pos);
                    for (const auto& [name, kind] : kFunctions)
                        if (name == t.text) return unary_node(kind, std::move(arg));
                }
                int idx = syms_->index(t.text);
                if (idx < 0) throw UnknownSymbolError(t.text);
                Expr::Node n;
                n.kind = Expr::Kind::Var;
                n.var = idx;
                return make_node(std::move(n));
            }
            case Token::LParen: {
                advance();
                Expr::NodePtr e = parse_sum();
                if (!accept(Token::RParen)) throw SyntaxError("expected ')'", peek().pos);
                return e;
            }
            default:
                throw SyntaxError("expected a number, symbol, or '('", t.pos);
        }
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
};

bool same_node(const Expr::Node& a, const Expr::Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expr::Kind::Const:
            return a.cval == b.cval;
        case Expr::Kind::Var:
            return a.var == b.var;
        case Expr::Kind::Pow:
            return a.ipow == b.ipow && same_node(*a.a, *b.a);
        case Expr::Kind::Add:
        case Expr::Kind::Sub:
        case Expr::Kind::Mul:
        case Expr::Kind::Div:
            return same_node(*a.a, *b.a) && same_node(*a.b, *b.b);
        default:
            return same_node(*a.a, *b.a);
    }
}

}  // namespace

SymbolTable::SymbolTable(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i].empty()) throw InputError("empty symbol name");
        if (is_function_name(names_[i])) throw InputError("symbol '" + names_[i] + "' shadows a function name");
        for (std::size_t j = i + 1; j < names_.size(); ++j)
            if (names_[i] == names_[j]) throw InputError("duplicate symbol '" + names_[i] + "'");
    }
}

int SymbolTable::index(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    return -1;
}

SymbolsPtr make_symbols(std::vector<std::string> names) {
    return std::make_shared<const SymbolTable>(std::move(names));
}

std::string node_text(const Expr::Node& node, const SymbolTable& syms) {
    std::string out;
    print_node(node, syms, out);
    return out;
}

Expr Expr::constant(SymbolsPtr syms, double value) { return Expr(std::move(syms), const_node(value)); }

Expr Expr::variable(SymbolsPtr syms, std::string_view name) {
    int idx = syms->index(name);
    if (idx < 0) throw UnknownSymbolError(std::string(name));
    Node n;
    n.kind = Kind::Var;
    n.var = idx;
    return Expr(std::move(syms), make_node(std::move(n)));
}

std::string Expr::str() const {
    if (!root_) return "";
    return node_text(*root_, *syms_);
}

bool Expr::same_structure(const Expr& other) const {
    if (!root_ || !other.root_) return root_ == other.root_;
    return same_node(*root_, *other.root_);
}

double Expr::eval(const EvalPoint& point) const {
    std::vector<double> vals = values_from_point(*syms_, point);
    return eval_values<double>(vals);
}

Eigen::RowVectorXd Expr::gradient(const std::vector<std::string>& wrt, const EvalPoint& point) const {
    std::vector<double> vals = values_from_point(*syms_, point);
    Eigen::RowVectorXd g(wrt.size());
    std::vector<D1> dvals(vals.size());
    for (std::size_t j = 0; j < wrt.size(); ++j) {
        int idx = syms_->index(wrt[j]);
        if (idx < 0) throw UnknownSymbolError(wrt[j]);
        for (std::size_t i = 0; i < vals.size(); ++i) dvals[i] = D1(vals[i], i == static_cast<std::size_t>(idx) ? 1.0 : 0.0);
        g(static_cast<Eigen::Index>(j)) = eval_values<D1>(dvals).dx;
    }
    return g;
}

Expr operator+(const Expr& a, const Expr& b) {
    require_same_table(a, b);
    return Expr::make(a.syms_, binary_node(Expr::Kind::Add, a.root_, b.root_));
}
Expr operator-(const Expr& a, const Expr& b) {
    require_same_table(a, b);
    return Expr::make(a.syms_, binary_node(Expr::Kind::Sub, a.root_, b.root_));
}
Expr operator*(const Expr& a, const Expr& b) {
    require_same_table(a, b);
    return Expr::make(a.syms_, binary_node(Expr::Kind::Mul, a.root_, b.root_));
}
Expr operator/(const Expr& a, const Expr& b) {
    require_same_table(a, b);
    return Expr::make(a.syms_, binary_node(Expr::Kind::Div, a.root_, b.root_));
}
Expr operator-(const Expr& a) { return Expr::make(a.syms_, neg_node(a.root_)); }
Expr operator+(const Expr& a, double c) { return a + Expr::constant(a.syms_, c); }
Expr operator+(double c, const Expr& a) { return Expr::constant(a.syms_, c) + a; }
Expr operator*(double c, const Expr& a) { return Expr::constant(a.syms_, c) * a; }
Expr pow(const Expr& a, int k) {
    Expr::Node n;
    n.kind = Expr::Kind::Pow;
    n.ipow = k;
    n.a = a.root_;
    return Expr::make(a.syms_, make_node(std::move(n)));
}
Expr sin(const Expr& a) { return Expr::make(a.syms_, unary_node(Expr::Kind::Sin, a.root_)); }
Expr cos(const Expr& a) { return Expr::make(a.syms_, unary_node(Expr::Kind::Cos, a.root_)); }
Expr exp(const Expr& a) { return Expr::make(a.syms_, unary_node(Expr::Kind::Exp, a.root_)); }
Expr tanh(const Expr& a) { return Expr::make(a.syms_, unary_node(Expr::Kind::Tanh, a.root_)); }
Expr sqrt(const Expr& a) { return Expr::make(a.syms_, unary_node(Expr::Kind::Sqrt, a.root_)); }

ExprVec::ExprVec(std::vector<Expr> comps) : comps_(std::move(comps)) {
    if (comps_.empty()) throw Error("empty expression vector");
    syms_ = comps_[0].symbols();
    for (const Expr& e : comps_) {
        if (!e.valid()) throw Error("empty expression component");
        if (e.symbols() != syms_ && !(*e.symbols() == *syms_))
            throw Error("expression vector mixes symbol tables");
    }
}

Eigen::VectorXd ExprVec::eval(const EvalPoint& point) const {
    std::vector<double> vals = values_from_point(*syms_, point);
    Eigen::VectorXd out(dim());
    for (int i = 0; i < dim(); ++i) out(i) = comps_[static_cast<std::size_t>(i)].eval_values<double>(vals);
    return out;
}

Eigen::MatrixXd ExprVec::jacobian(const std::vector<std::string>& wrt, const EvalPoint& point) const {
    std::vector<double> vals = values_from_point(*syms_, point);
    std::vector<int> idx(wrt.size());
    for (std::size_t j = 0; j < wrt.size(); ++j) {
        idx[j] = syms_->index(wrt[j]);
        if (idx[j] < 0) throw UnknownSymbolError(wrt[j]);
    }
    return jacobian_values(vals, idx);
}

Eigen::MatrixXd ExprVec::jacobian_values(std::span<const double> values, std::span<const int> wrt_idx) const {
    Eigen::MatrixXd J(dim(), static_cast<Eigen::Index>(wrt_idx.size()));
    std::vector<D1> dvals(values.size());
    for (std::size_t j = 0; j < wrt_idx.size(); ++j) {
        for (std::size_t i = 0; i < values.size(); ++i)
            dvals[i] = D1(values[i], i == static_cast<std::size_t>(wrt_idx[j]) ? 1.0 : 0.0);
        for (int i = 0; i < dim(); ++i)
            J(i, static_cast<Eigen::Index>(j)) = comps_[static_cast<std::size_t>(i)].eval_values<D1>(dvals).dx;
    }
    return J;
}

Expr parse_expr(const std::string& text, SymbolsPtr symbols) {
    Parser p(text, symbols);
    return Expr::make(std::move(symbols), p.parse());
}

Expr parse_expr(const std::string& text, const std::vector<std::string>& symbols) {
    return parse_expr(text, make_symbols(symbols));
}

std::vector<double> values_from_point(const SymbolTable& syms, const EvalPoint& point) {
    std::vector<double> vals(static_cast<std::size_t>(syms.size()));
    for (int i = 0; i < syms.size(); ++i) {
        auto it = point.find(syms.names()[static_cast<std::size_t>(i)]);
        if (it == point.end()) throw UnknownSymbolError(syms.names()[static_cast<std::size_t>(i)]);
        vals[static_cast<std::size_t>(i)] = it->second;
    }
    return vals;
}

}  // namespace quasilin

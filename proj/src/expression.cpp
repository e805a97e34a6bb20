#include "koblab/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "koblab/errors.hpp"

namespace koblab {

enum class NodeKind { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Func };

struct Expr::Node {
    NodeKind kind;
    double value = 0.0;       // Const
    int var = -1;             // Var
    std::string func;         // Func name
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_const(double v) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = NodeKind::Const;
    n->value = v;
    return n;
}

NodePtr make_var(int i) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = NodeKind::Var;
    n->var = i;
    return n;
}

bool is_const(const NodePtr& n, double v) {
    return n->kind == NodeKind::Const && n->value == v;
}

NodePtr make_bin(NodeKind k, NodePtr a, NodePtr b) {
    // light constant folding keeps derivative trees small
    if (a->kind == NodeKind::Const && b->kind == NodeKind::Const) {
        switch (k) {
            case NodeKind::Add: return make_const(a->value + b->value);
            case NodeKind::Sub: return make_const(a->value - b->value);
            case NodeKind::Mul: return make_const(a->value * b->value);
            case NodeKind::Div: return make_const(a->value / b->value);
            default: break;
        }
    }
    if (k == NodeKind::Add) {
        if (is_const(a, 0.0)) return b;
        if (is_const(b, 0.0)) return a;
    }
    if (k == NodeKind::Sub && is_const(b, 0.0)) return a;
    if (k == NodeKind::Mul) {
        if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
        if (is_const(a, 1.0)) return b;
        if (is_const(b, 1.0)) return a;
    }
    if (k == NodeKind::Div && is_const(b, 1.0)) return a;
    if (k == NodeKind::Pow && is_const(b, 1.0)) return a;
    auto n = std::make_shared<Expr::Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_neg(NodePtr a) {
    if (a->kind == NodeKind::Const) return make_const(-a->value);
    auto n = std::make_shared<Expr::Node>();
    n->kind = NodeKind::Neg;
    n->a = std::move(a);
    return n;
}

NodePtr make_func(const std::string& f, NodePtr a) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = NodeKind::Func;
    n->func = f;
    n->a = std::move(a);
    return n;
}

class Parser {
  public:
    Parser(const std::string& s, int nvars) : s_(s), nvars_(nvars) {}

    NodePtr parse() {
        NodePtr e = parse_sum();
        skip_ws();
        if (pos_ != s_.size())
            throw SpecParseError("trailing characters in expression at position " +
                                 std::to_string(pos_));
        return e;
    }

  private:
    const std::string& s_;
    int nvars_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) { ++pos_; return true; }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    NodePtr parse_sum() {
        NodePtr e = parse_term();
        for (;;) {
            if (eat('+')) e = make_bin(NodeKind::Add, e, parse_term());
            else if (eat('-')) e = make_bin(NodeKind::Sub, e, parse_term());
            else return e;
        }
    }

    NodePtr parse_term() {
        NodePtr e = parse_unary();
        for (;;) {
            if (eat('*')) e = make_bin(NodeKind::Mul, e, parse_unary());
            else if (eat('/')) e = make_bin(NodeKind::Div, e, parse_unary());
            else return e;
        }
    }

    NodePtr parse_unary() {
        if (eat('-')) return make_neg(parse_unary());
        if (eat('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (eat('^')) {
            // right associative, exponent may itself carry a sign
            NodePtr exp = parse_unary();
            return make_bin(NodeKind::Pow, base, exp);
        }
        return base;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos_ >= s_.size()) throw SpecParseError("unexpected end of expression");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_sum();
            if (!eat(')')) throw SpecParseError("missing ')' in expression");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            char* end = nullptr;
            const double v = std::strtod(s_.c_str() + pos_, &end);
            pos_ = static_cast<std::size_t>(end - s_.c_str());
            return make_const(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            if (name.size() >= 2 && name[0] == 'x') {
                bool digits = true;
                for (std::size_t i = 1; i < name.size(); ++i)
                    if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
                if (digits) {
                    const int idx = std::atoi(name.c_str() + 1);
                    if (idx < 1 || idx > nvars_)
                        throw SpecParseError("variable " + name + " out of range");
                    return make_var(idx - 1);
                }
            }
            if (name == "pi") return make_const(3.14159265358979323846);
            static const char* funcs[] = {"exp", "log", "sin", "cos", "sinh", "cosh"};
            for (const char* f : funcs) {
                if (name == f) {
                    if (!eat('(')) throw SpecParseError(name + " needs parenthesized argument");
                    NodePtr arg = parse_sum();
                    if (!eat(')')) throw SpecParseError("missing ')' after " + name);
                    return make_func(name, arg);
                }
            }
            throw SpecParseError("unknown identifier '" + name + "'");
        }
        throw SpecParseError(std::string("unexpected character '") + c + "' in expression");
    }
};

double eval_node(const Expr::Node& n, const Vec& x) {
    switch (n.kind) {
        case NodeKind::Const: return n.value;
        case NodeKind::Var: return x[static_cast<std::size_t>(n.var)];
        case NodeKind::Add: return eval_node(*n.a, x) + eval_node(*n.b, x);
        case NodeKind::Sub: return eval_node(*n.a, x) - eval_node(*n.b, x);
        case NodeKind::Mul: return eval_node(*n.a, x) * eval_node(*n.b, x);
        case NodeKind::Div: return eval_node(*n.a, x) / eval_node(*n.b, x);
        case NodeKind::Pow: return std::pow(eval_node(*n.a, x), eval_node(*n.b, x));
        case NodeKind::Neg: return -eval_node(*n.a, x);
        case NodeKind::Func: {
            const double v = eval_node(*n.a, x);
            if (n.func == "exp") return std::exp(v);
            if (n.func == "log") return std::log(v);
            if (n.func == "sin") return std::sin(v);
            if (n.func == "cos") return std::cos(v);
            if (n.func == "sinh") return std::sinh(v);
            return std::cosh(v);
        }
    }
    return 0.0;
}

NodePtr diff_node(const NodePtr& n, int var) {
    switch (n->kind) {
        case NodeKind::Const: return make_const(0.0);
        case NodeKind::Var: return make_const(n->var == var ? 1.0 : 0.0);
        case NodeKind::Add: return make_bin(NodeKind::Add, diff_node(n->a, var), diff_node(n->b, var));
        case NodeKind::Sub: return make_bin(NodeKind::Sub, diff_node(n->a, var), diff_node(n->b, var));
        case NodeKind::Mul:
            return make_bin(NodeKind::Add,
                            make_bin(NodeKind::Mul, diff_node(n->a, var), n->b),
                            make_bin(NodeKind::Mul, n->a, diff_node(n->b, var)));
        case NodeKind::Div:
            return make_bin(NodeKind::Div,
                            make_bin(NodeKind::Sub,
                                     make_bin(NodeKind::Mul, diff_node(n->a, var), n->b),
                                     make_bin(NodeKind::Mul, n->a, diff_node(n->b, var))),
                            make_bin(NodeKind::Mul, n->b, n->b));
        case NodeKind::Pow: {
            if (n->b->kind == NodeKind::Const) {
                // d(a^c) = c a^(c-1) a'
                const double c = n->b->value;
                return make_bin(NodeKind::Mul, make_const(c),
                                make_bin(NodeKind::Mul,
                                         make_bin(NodeKind::Pow, n->a, make_const(c - 1.0)),
                                         diff_node(n->a, var)));
            }
            // a^b = exp(b log a)
            NodePtr loga = make_func("log", n->a);
            NodePtr inner = make_bin(NodeKind::Add,
                                     make_bin(NodeKind::Mul, diff_node(n->b, var), loga),
                                     make_bin(NodeKind::Mul, n->b,
                                              make_bin(NodeKind::Div, diff_node(n->a, var), n->a)));
            return make_bin(NodeKind::Mul, n, inner);
        }
        case NodeKind::Neg: return make_neg(diff_node(n->a, var));
        case NodeKind::Func: {
            NodePtr da = diff_node(n->a, var);
            NodePtr outer;
            if (n->func == "exp") outer = make_func("exp", n->a);
            else if (n->func == "log") outer = make_bin(NodeKind::Div, make_const(1.0), n->a);
            else if (n->func == "sin") outer = make_func("cos", n->a);
            else if (n->func == "cos") outer = make_neg(make_func("sin", n->a));
            else if (n->func == "sinh") outer = make_func("cosh", n->a);
            else outer = make_func("sinh", n->a);
            return make_bin(NodeKind::Mul, outer, da);
        }
    }
    return make_const(0.0);
}

void print_node(const Expr::Node& n, std::ostringstream& out) {
    switch (n.kind) {
        case NodeKind::Const: out << n.value; return;
        case NodeKind::Var: out << "x" << (n.var + 1); return;
        case NodeKind::Neg: out << "(-"; print_node(*n.a, out); out << ")"; return;
        case NodeKind::Func: out << n.func << "("; print_node(*n.a, out); out << ")"; return;
        default: break;
    }
    const char* op = n.kind == NodeKind::Add ? "+"
                   : n.kind == NodeKind::Sub ? "-"
                   : n.kind == NodeKind::Mul ? "*"
                   : n.kind == NodeKind::Div ? "/" : "^";
    out << "(";
    print_node(*n.a, out);
    out << op;
    print_node(*n.b, out);
    out << ")";
}

} // namespace

Expr Expr::parse(const std::string& text, int nvars) {
    Parser p(text, nvars);
    return Expr(p.parse(), nvars);
}

Expr Expr::constant(double c) { return Expr(make_const(c), 0); }

double Expr::eval(const Vec& x) const { return eval_node(*root_, x); }

Expr Expr::derivative(int var) const { return Expr(diff_node(root_, var), nvars_); }

bool Expr::is_zero() const { return root_->kind == NodeKind::Const && root_->value == 0.0; }

std::string Expr::str() const {
    std::ostringstream out;
    print_node(*root_, out);
    return out.str();
}

} // namespace koblab

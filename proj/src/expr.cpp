#include "thinhomog/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <utility>
#include <vector>

namespace thinhomog {

ParseError::ParseError(const std::string& msg, std::size_t offset)
    : std::runtime_error(msg + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

enum class Op {
    Number,
    VarX,
    VarY,
    Neg,
    Sin,
    Cos,
    Exp,
    Abs,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
};

struct Expr::Node {
    Op op;
    double value = 0.0; // Number only
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_node(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_number(double v) {
    auto n = std::make_shared<Expr::Node>();
    n->op = Op::Number;
    n->value = v;
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& src) : s_(src) {}

    NodePtr run() {
        NodePtr e = parse_sum();
        skip_ws();
        if (pos_ != s_.size())
            fail("unexpected trailing input");
        return e;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    // sum := product (('+'|'-') product)*
    NodePtr parse_sum() {
        NodePtr e = parse_product();
        for (;;) {
            if (eat('+'))
                e = make_node(Op::Add, e, parse_product());
            else if (eat('-'))
                e = make_node(Op::Sub, e, parse_product());
            else
                return e;
        }
    }

    // product := unary (('*'|'/') unary)*
    NodePtr parse_product() {
        NodePtr e = parse_unary();
        for (;;) {
            if (eat('*'))
                e = make_node(Op::Mul, e, parse_unary());
            else if (eat('/'))
                e = make_node(Op::Div, e, parse_unary());
            else
                return e;
        }
    }

    // unary := '-' unary | power.  Binds looser than '^': -x^2 == -(x^2).
    NodePtr parse_unary() {
        if (eat('-'))
            return make_node(Op::Neg, parse_unary());
        return parse_power();
    }

    // power := atom ('^' unary)?   right-associative, exponent may carry a sign
    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (eat('^'))
            return make_node(Op::Pow, base, parse_unary());
        return base;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos_ >= s_.size())
            fail("unexpected end of input");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_sum();
            if (!eat(')'))
                fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)))
            return parse_name();
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr parse_number() {
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin)
            fail("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        return make_number(v);
    }

    NodePtr parse_name() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
        std::string name = s_.substr(start, pos_ - start);
        if (name == "x")
            return make_node(Op::VarX);
        if (name == "y")
            return make_node(Op::VarY);
        if (name == "pi")
            return make_number(4.0 * std::atan(1.0));
        Op op;
        if (name == "sin")
            op = Op::Sin;
        else if (name == "cos")
            op = Op::Cos;
        else if (name == "exp")
            op = Op::Exp;
        else if (name == "abs")
            op = Op::Abs;
        else {
            pos_ = start;
            fail("unknown name '" + name + "'");
        }
        if (!eat('(')) {
            fail("expected '(' after '" + name + "'");
        }
        NodePtr arg = parse_sum();
        if (!eat(')'))
            fail("expected ')'");
        return make_node(op, arg);
    }
};

double eval_node(const Expr::Node& n, double x, double y) {
    switch (n.op) {
    case Op::Number:
        return n.value;
    case Op::VarX:
        return x;
    case Op::VarY:
        return y;
    case Op::Neg:
        return -eval_node(*n.a, x, y);
    case Op::Sin:
        return std::sin(eval_node(*n.a, x, y));
    case Op::Cos:
        return std::cos(eval_node(*n.a, x, y));
    case Op::Exp: {
        double v = std::exp(eval_node(*n.a, x, y));
        if (!std::isfinite(v))
            throw EvalError("exp overflow");
        return v;
    }
    case Op::Abs:
        return std::fabs(eval_node(*n.a, x, y));
    case Op::Add:
        return eval_node(*n.a, x, y) + eval_node(*n.b, x, y);
    case Op::Sub:
        return eval_node(*n.a, x, y) - eval_node(*n.b, x, y);
    case Op::Mul:
        return eval_node(*n.a, x, y) * eval_node(*n.b, x, y);
    case Op::Div: {
        double denom = eval_node(*n.b, x, y);
        if (denom == 0.0)
            throw EvalError("division by zero");
        double v = eval_node(*n.a, x, y) / denom;
        if (!std::isfinite(v))
            throw EvalError("non-finite quotient");
        return v;
    }
    case Op::Pow: {
        double base = eval_node(*n.a, x, y);
        double expo = eval_node(*n.b, x, y);
        if (base == 0.0 && expo < 0.0)
            throw EvalError("zero raised to a negative power");
        double v = std::pow(base, expo);
        if (!std::isfinite(v))
            throw EvalError("non-finite power");
        return v;
    }
    }
    throw EvalError("corrupt expression node");
}

// Precedence levels used when printing: higher binds tighter.
int prec(Op op) {
    switch (op) {
    case Op::Add:
    case Op::Sub:
        return 1;
    case Op::Mul:
    case Op::Div:
        return 2;
    case Op::Neg:
        return 3;
    case Op::Pow:
        return 4;
    default:
        return 5;
    }
}

void print_node(const Expr::Node& n, std::string& out);

void print_child(const Expr::Node& child, int parent_prec, bool force_parens, std::string& out) {
    bool parens = force_parens || prec(child.op) < parent_prec ||
                  (child.op == Op::Number && child.value < 0.0 && parent_prec > 1);
    if (parens)
        out += '(';
    print_node(child, out);
    if (parens)
        out += ')';
}

void print_node(const Expr::Node& n, std::string& out) {
    switch (n.op) {
    case Op::Number: {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", n.value);
        out += buf;
        return;
    }
    case Op::VarX:
        out += 'x';
        return;
    case Op::VarY:
        out += 'y';
        return;
    case Op::Neg:
        out += '-';
        print_child(*n.a, prec(Op::Neg), false, out);
        return;
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Abs:
        out += (n.op == Op::Sin   ? "sin"
                : n.op == Op::Cos ? "cos"
                : n.op == Op::Exp ? "exp"
                                  : "abs");
        out += '(';
        print_node(*n.a, out);
        out += ')';
        return;
    case Op::Add:
        print_child(*n.a, 1, false, out);
        out += " + ";
        // parenthesize so reparsing reassociates identically (bitwise round trip)
        print_child(*n.b, 2, false, out);
        return;
    case Op::Sub:
        print_child(*n.a, 1, false, out);
        out += " - ";
        print_child(*n.b, 2, false, out);
        return;
    case Op::Mul:
        print_child(*n.a, 2, false, out);
        out += "*";
        print_child(*n.b, 3, false, out);
        return;
    case Op::Div:
        print_child(*n.a, 2, false, out);
        out += "/";
        // parenthesize b*c in a/(b*c)
        print_child(*n.b, 3, false, out);
        return;
    case Op::Pow:
        // base of '^' must be an atom when printed (unary minus binds looser)
        print_child(*n.a, 5, false, out);
        out += "^";
        print_child(*n.b, 3, false, out);
        return;
    }
}

bool depends_on(const Expr::Node& n, Op var) {
    if (n.op == var)
        return true;
    if (n.a && depends_on(*n.a, var))
        return true;
    if (n.b && depends_on(*n.b, var))
        return true;
    return false;
}

NodePtr substitute(const NodePtr& n, Op var, double v) {
    if (!n)
        return nullptr;
    if (n->op == var)
        return make_number(v);
    if (!n->a && !n->b)
        return n;
    return [&] {
        auto m = std::make_shared<Expr::Node>();
        m->op = n->op;
        m->value = n->value;
        m->a = substitute(n->a, var, v);
        m->b = substitute(n->b, var, v);
        return m;
    }();
}

} // namespace

Expr Expr::parse(const std::string& src) {
    Parser p(src);
    return Expr(p.run());
}

Expr Expr::constant(double v) { return Expr(make_number(v)); }

double Expr::eval(double x, double y) const {
    if (!root_)
        throw EvalError("empty expression");
    double v = eval_node(*root_, x, y);
    if (!std::isfinite(v))
        throw EvalError("non-finite result");
    return v;
}

std::string Expr::str() const {
    if (!root_)
        return "";
    std::string out;
    print_node(*root_, out);
    return out;
}

bool Expr::depends_on_x() const { return root_ && depends_on(*root_, Op::VarX); }
bool Expr::depends_on_y() const { return root_ && depends_on(*root_, Op::VarY); }

Expr Expr::substitute_x(double v) const { return Expr(substitute(root_, Op::VarX, v)); }

Expr Expr::add_constant(double c) const {
    if (c == 0.0)
        return *this;
    return Expr(make_node(Op::Add, root_, make_number(c)));
}

} // namespace thinhomog

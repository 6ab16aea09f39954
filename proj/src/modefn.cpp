#include "mazer/modefn.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace mazer {

namespace {

using ast::Fn;
using ast::Node;
using ast::NodePtr;
using ast::Op;

NodePtr make_number(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Number;
    n->value = v;
    return n;
}

NodePtr make_leaf(Node::Kind k) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    return n;
}

NodePtr make_binary(Op op, NodePtr l, NodePtr r) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Binary;
    n->op = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
}

NodePtr make_neg(NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Neg;
    n->lhs = std::move(a);
    return n;
}

NodePtr make_call(Fn fn, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Call;
    n->fn = fn;
    n->lhs = std::move(a);
    return n;
}

// Recursive-descent parser.  Precedence, tightest first:
//   ^ (right associative), unary -, * /, + -
class Parser {
public:
    explicit Parser(const std::string& src) : src_(src) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip_ws();
        if (pos_ != src_.size())
            fail(ParseError::Kind::Syntax, pos_, "unexpected trailing input");
        return e;
    }

private:
    const std::string& src_;
    std::size_t pos_ = 0;
    int depth_ = 0;

    [[noreturn]] void fail(ParseError::Kind k, std::size_t off, const std::string& msg) {
        throw ParseError(k, off, msg);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) { ++pos_; return true; }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser, std::size_t at) : p(parser) {
            if (++p.depth_ > 256)
                throw ParseError(ParseError::Kind::Syntax, at, "expression nested too deeply");
        }
        ~DepthGuard() { --p.depth_; }
    };

    NodePtr expr() {
        DepthGuard guard(*this, pos_);
        NodePtr lhs = term();
        for (;;) {
            if (eat('+')) lhs = make_binary(Op::Add, lhs, term());
            else if (eat('-')) lhs = make_binary(Op::Sub, lhs, term());
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = factor();
        for (;;) {
            if (eat('*')) lhs = make_binary(Op::Mul, lhs, factor());
            else if (eat('/')) lhs = make_binary(Op::Div, lhs, factor());
            else return lhs;
        }
    }

    NodePtr factor() {
        DepthGuard guard(*this, pos_);
        if (eat('-')) return make_neg(factor());
        return power();
    }

    NodePtr power() {
        NodePtr base = atom();
        if (eat('^')) return make_binary(Op::Pow, base, factor());
        return base;
    }

    NodePtr atom() {
        skip_ws();
        if (pos_ >= src_.size())
            fail(ParseError::Kind::Syntax, pos_, "unexpected end of input");
        const char c = src_[pos_];
        if (c == '(') {
            const std::size_t open = pos_;
            ++pos_;
            NodePtr e = expr();
            if (!eat(')'))
                fail(ParseError::Kind::Syntax, open, "unbalanced parenthesis");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail(ParseError::Kind::Syntax, pos_, std::string("unexpected character '") + c + "'");
    }

    NodePtr number() {
        const std::size_t start = pos_;
        double value = 0.0;
        auto res = std::from_chars(src_.data() + start, src_.data() + src_.size(), value);
        if (res.ec != std::errc{} || !std::isfinite(value))
            fail(ParseError::Kind::Syntax, start, "malformed number");
        pos_ = static_cast<std::size_t>(res.ptr - src_.data());
        return make_number(value);
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string name = src_.substr(start, pos_ - start);

        if (name == "z") return make_leaf(Node::Kind::VarZ);
        if (name == "L") return make_leaf(Node::Kind::ParamL);
        if (name == "pi") return make_number(std::numbers::pi);

        Fn fn;
        if (name == "sin") fn = Fn::Sin;
        else if (name == "cos") fn = Fn::Cos;
        else if (name == "exp") fn = Fn::Exp;
        else if (name == "tanh") fn = Fn::Tanh;
        else if (name == "sech") fn = Fn::Sech;
        else if (name == "sqrt") fn = Fn::Sqrt;
        else fail(ParseError::Kind::UnknownIdentifier, start, "unknown identifier '" + name + "'");

        if (!eat('('))
            fail(ParseError::Kind::Arity, start, "function '" + name + "' requires an argument list");
        if (peek() == ')')
            fail(ParseError::Kind::Arity, pos_, "function '" + name + "' requires exactly one argument");
        NodePtr arg = expr();
        if (peek() == ',')
            fail(ParseError::Kind::Arity, pos_, "function '" + name + "' takes exactly one argument");
        if (!eat(')'))
            fail(ParseError::Kind::Syntax, start, "unbalanced parenthesis in call to '" + name + "'");
        return make_call(fn, arg);
    }
};

const char* fn_name(Fn fn) {
    switch (fn) {
        case Fn::Sin: return "sin";
        case Fn::Cos: return "cos";
        case Fn::Exp: return "exp";
        case Fn::Tanh: return "tanh";
        case Fn::Sech: return "sech";
        case Fn::Sqrt: return "sqrt";
    }
    return "?";
}

int precedence(const Node& n) {
    switch (n.kind) {
        case Node::Kind::Binary:
            switch (n.op) {
                case Op::Add: case Op::Sub: return 1;
                case Op::Mul: case Op::Div: return 2;
                case Op::Pow: return 4;
            }
            return 1;
        case Node::Kind::Neg: return 3;
        default: return 5;
    }
}

void print_node(const NodePtr& n, std::string& out, int parent_prec, bool rhs_of_binary) {
    const int prec = precedence(*n);
    const bool parens = prec < parent_prec || (prec == parent_prec && rhs_of_binary);
    if (parens) out += '(';
    switch (n->kind) {
        case Node::Kind::Number: {
            char buf[32];
            auto res = std::to_chars(buf, buf + sizeof buf, n->value);
            out.append(buf, res.ptr);
            break;
        }
        case Node::Kind::VarZ: out += 'z'; break;
        case Node::Kind::ParamL: out += 'L'; break;
        case Node::Kind::Neg:
            out += '-';
            print_node(n->lhs, out, prec, true);
            break;
        case Node::Kind::Call:
            out += fn_name(n->fn);
            out += '(';
            print_node(n->lhs, out, 0, false);
            out += ')';
            break;
        case Node::Kind::Binary: {
            const char* op_text = "";
            switch (n->op) {
                case Op::Add: op_text = "+"; break;
                case Op::Sub: op_text = "-"; break;
                case Op::Mul: op_text = "*"; break;
                case Op::Div: op_text = "/"; break;
                case Op::Pow: op_text = "^"; break;
            }
            // ^ is right-associative: parenthesize a left operand of equal precedence
            const bool pow = n->op == Op::Pow;
            print_node(n->lhs, out, prec + (pow ? 1 : 0), false);
            out += op_text;
            print_node(n->rhs, out, prec, !pow);
            break;
        }
    }
    if (parens) out += ')';
}

Jet2 eval_node(const Node& n, const Jet2& z, double L) {
    switch (n.kind) {
        case Node::Kind::Number: return Jet2::constant(n.value);
        case Node::Kind::VarZ: return z;
        case Node::Kind::ParamL: return Jet2::constant(L);
        case Node::Kind::Neg: return -eval_node(*n.lhs, z, L);
        case Node::Kind::Call: {
            const Jet2 a = eval_node(*n.lhs, z, L);
            switch (n.fn) {
                case Fn::Sin: return sin(a);
                case Fn::Cos: return cos(a);
                case Fn::Exp: return exp(a);
                case Fn::Tanh: return tanh(a);
                case Fn::Sech: return sech(a);
                case Fn::Sqrt: return sqrt(a);
            }
            throw DomainError("unreachable function kind");
        }
        case Node::Kind::Binary: {
            const Jet2 a = eval_node(*n.lhs, z, L);
            const Jet2 b = eval_node(*n.rhs, z, L);
            switch (n.op) {
                case Op::Add: return a + b;
                case Op::Sub: return a - b;
                case Op::Mul: return a * b;
                case Op::Div: return a / b;
                case Op::Pow: return pow(a, b);
            }
            throw DomainError("unreachable operator kind");
        }
    }
    throw DomainError("unreachable node kind");
}

// Exact closed-form jets for the built-in profiles (interior formula).
std::tuple<double, double, double> builtin_interior(BuiltinMode mode, double z, double L) {
    switch (mode) {
        case BuiltinMode::Mesa:
            return {1.0, 0.0, 0.0};
        case BuiltinMode::Sine: {
            const double w = std::numbers::pi / L;
            return {std::sin(w * z), w * std::cos(w * z), -w * w * std::sin(w * z)};
        }
        case BuiltinMode::Sine2: {
            const double w = std::numbers::pi / L;
            const double s = std::sin(w * z), c = std::cos(w * z);
            return {s * s, 2.0 * w * s * c, 2.0 * w * w * (c * c - s * s)};
        }
        case BuiltinMode::Gauss: {
            // exp(-(z - L/2)^2 * 16 / L^2)
            const double a = 16.0 / (L * L);
            const double x = z - 0.5 * L;
            const double f = std::exp(-a * x * x);
            return {f, -2.0 * a * x * f, (4.0 * a * a * x * x - 2.0 * a) * f};
        }
        case BuiltinMode::Sech2: {
            // sech^2((z - L/2) * 8 / L)
            const double b = 8.0 / L;
            const double x = b * (z - 0.5 * L);
            const double s = 1.0 / std::cosh(x), t = std::tanh(x);
            const double s2 = s * s;
            return {s2, -2.0 * b * s2 * t, 2.0 * b * b * s2 * (2.0 * t * t - s2)};
        }
        case BuiltinMode::None: break;
    }
    throw std::logic_error("builtin_interior: not a builtin");
}

}  // namespace

ast::NodePtr parse_expression(const std::string& source) {
    if (source.empty())
        throw ParseError(ParseError::Kind::Syntax, 0, "empty expression");
    return Parser(source).parse();
}

std::string print_expression(const ast::NodePtr& node) {
    std::string out;
    print_node(node, out, 0, false);
    return out;
}

Jet2 eval_expression(const ast::NodePtr& node, const Jet2& z, double L) {
    return eval_node(*node, z, L);
}

ModeExpr ModeExpr::parse(const std::string& source, double L) {
    if (!(L > 0.0) || !std::isfinite(L))
        throw std::invalid_argument("ModeExpr: cavity length must be positive and finite");
    ModeExpr m;
    m.source_ = source;
    m.length_ = L;
    if (source == "mesa") m.builtin_ = BuiltinMode::Mesa;
    else if (source == "sine") m.builtin_ = BuiltinMode::Sine;
    else if (source == "sine2") m.builtin_ = BuiltinMode::Sine2;
    else if (source == "gauss") m.builtin_ = BuiltinMode::Gauss;
    else if (source == "sech2") m.builtin_ = BuiltinMode::Sech2;
    else m.ast_ = parse_expression(source);
    return m;
}

ModeExpr ModeExpr::with_length(double L) const {
    ModeExpr m = *this;
    if (!(L > 0.0) || !std::isfinite(L))
        throw std::invalid_argument("ModeExpr: cavity length must be positive and finite");
    m.length_ = L;
    return m;
}

std::tuple<double, double, double> ModeExpr::eval012(double z) const {
    if (!std::isfinite(z)) throw std::invalid_argument("eval012: z must be finite");
    // compact support: 0 outside (0, L), including the endpoints
    if (z <= 0.0 || z >= length_) return {0.0, 0.0, 0.0};
    return eval_interior(z);
}

std::tuple<double, double, double> ModeExpr::eval_interior(double z) const {
    if (builtin_ != BuiltinMode::None) return builtin_interior(builtin_, z, length_);
    const Jet2 r = eval_node(*ast_, Jet2::variable(z), length_);
    if (!std::isfinite(r.v) || !std::isfinite(r.d1) || !std::isfinite(r.d2))
        throw DomainError("mode evaluation produced a non-finite value at z = " + std::to_string(z));
    return {r.v, r.d1, r.d2};
}

std::string ModeExpr::to_string() const {
    if (builtin_ != BuiltinMode::None) return source_;
    return print_expression(ast_);
}

}  // namespace mazer

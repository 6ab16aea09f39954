#ifndef MAZER_MODEFN_HPP
#define MAZER_MODEFN_HPP

#include <memory>
#include <stdexcept>
#include <string>
#include <tuple>

#include "mazer/jet.hpp"

namespace mazer {

// Parse failure.  `offset` is the byte offset into the source text
// where the problem was detected.
struct ParseError : std::runtime_error {
    enum class Kind { Syntax, UnknownIdentifier, Arity };

    ParseError(Kind k, std::size_t off, const std::string& msg)
        : std::runtime_error(msg + " (at offset " + std::to_string(off) + ")"),
          kind(k), offset(off) {}

    Kind kind;
    std::size_t offset;
};

namespace ast {
struct Node;
using NodePtr = std::shared_ptr<const Node>;

enum class Op { Add, Sub, Mul, Div, Pow };
enum class Fn { Sin, Cos, Exp, Tanh, Sech, Sqrt };

struct Node {
    enum class Kind { Number, VarZ, ParamL, Binary, Neg, Call } kind;
    double value = 0.0;  // Number
    Op op = Op::Add;     // Binary
    Fn fn = Fn::Sin;     // Call
    NodePtr lhs, rhs;    // Binary: both; Neg/Call: lhs only
};
}  // namespace ast

enum class BuiltinMode { None, Mesa, Sine, Sine2, Gauss, Sech2 };

// A cavity mode profile u(z).  Either one of the built-in shapes or a
// parsed expression over {z, L, pi}; in both cases u is truncated to
// the support (0, L): outside, and at exactly z = 0 or z = L, the
// profile is 0.  Immutable after construction; cheap to copy.
class ModeExpr {
public:
    // Parse `source`, which is either a built-in name (mesa, sine,
    // sine2, gauss, sech2) or an infix expression.  Throws ParseError.
    static ModeExpr parse(const std::string& source, double L);

    // (u, u', u'') at z, honoring the (0, L) support window.
    std::tuple<double, double, double> eval012(double z) const;

    // (u, u', u'') of the interior formula, without the support window;
    // gives the one-sided limits the solvers need at z = 0+ and z = L-.
    std::tuple<double, double, double> eval_interior(double z) const;

    // Canonical text form; re-parsing it reproduces the same AST.
    std::string to_string() const;

    const std::string& source() const { return source_; }
    double length() const { return length_; }
    bool is_mesa() const { return builtin_ == BuiltinMode::Mesa; }
    BuiltinMode builtin() const { return builtin_; }
    const ast::NodePtr& tree() const { return ast_; }

    // Same profile with a different cavity length (used by L sweeps).
    ModeExpr with_length(double L) const;

private:
    ModeExpr() = default;
    BuiltinMode builtin_ = BuiltinMode::None;
    ast::NodePtr ast_;
    std::string source_;
    double length_ = 0.0;
};

// Parse an expression only (no built-in names); exposed for tests.
ast::NodePtr parse_expression(const std::string& source);
std::string print_expression(const ast::NodePtr& node);
Jet2 eval_expression(const ast::NodePtr& node, const Jet2& z, double L);

}  // namespace mazer

#endif

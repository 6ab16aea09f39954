#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mazer/modefn.hpp"
#include "oracle_helpers.hpp"

using namespace mazer;
using std::numbers::pi;

namespace {

bool ast_equal(const ast::NodePtr& a, const ast::NodePtr& b) {
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case ast::Node::Kind::Number: return a->value == b->value;
        case ast::Node::Kind::VarZ:
        case ast::Node::Kind::ParamL: return true;
        case ast::Node::Kind::Neg: return ast_equal(a->lhs, b->lhs);
        case ast::Node::Kind::Call:
            return a->fn == b->fn && ast_equal(a->lhs, b->lhs);
        case ast::Node::Kind::Binary:
            return a->op == b->op && ast_equal(a->lhs, b->lhs) && ast_equal(a->rhs, b->rhs);
    }
    return false;
}

}  // namespace

TEST_CASE("built-in names parse to built-in modes") {
    const auto mesa = ModeExpr::parse("mesa", 10.0);
    CHECK(mesa.is_mesa());
    const auto [u, du, d2u] = mesa.eval012(5.0);
    CHECK(u == 1.0);
    CHECK(du == 0.0);
    CHECK(d2u == 0.0);
    for (const char* name : {"sine", "sine2", "gauss", "sech2"})
        CHECK(ModeExpr::parse(name, 3.0).builtin() != BuiltinMode::None);
}

TEST_CASE("grammar structure of a parsed expression") {
    const auto ast = parse_expression("sin(pi*z/L)^2");
    REQUIRE(ast->kind == ast::Node::Kind::Binary);
    CHECK(ast->op == ast::Op::Pow);
    REQUIRE(ast->lhs->kind == ast::Node::Kind::Call);
    CHECK(ast->lhs->fn == ast::Fn::Sin);
    REQUIRE(ast->rhs->kind == ast::Node::Kind::Number);
    CHECK(ast->rhs->value == 2.0);
    const auto& div = ast->lhs->lhs;
    REQUIRE(div->kind == ast::Node::Kind::Binary);
    CHECK(div->op == ast::Op::Div);
    CHECK(div->lhs->op == ast::Op::Mul);
}

TEST_CASE("parse errors carry kind and byte offset") {
    try {
        parse_expression("sin(");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.kind == ParseError::Kind::Syntax);
        CHECK(e.offset == 4);
    }
    try {
        parse_expression("2*q");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.kind == ParseError::Kind::UnknownIdentifier);
        CHECK(e.offset == 2);
    }
    CHECK_THROWS_AS(parse_expression("sin(z, L)"), ParseError);
    CHECK_THROWS_AS(parse_expression("sin + 1"), ParseError);
    CHECK_THROWS_AS(parse_expression("sin()"), ParseError);
    CHECK_THROWS_AS(parse_expression(""), ParseError);
    CHECK_THROWS_AS(parse_expression("1 + "), ParseError);
    CHECK_THROWS_AS(parse_expression("(1"), ParseError);
    try {
        parse_expression("cos(z))");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset == 6);  // the stray closing parenthesis
    }
}

TEST_CASE("precedence and associativity") {
    // ^ binds tighter than unary minus; right associative
    const auto a = parse_expression("-z^2");
    REQUIRE(a->kind == ast::Node::Kind::Neg);
    CHECK(a->lhs->op == ast::Op::Pow);

    const auto b = parse_expression("2^3^2");
    REQUIRE(b->op == ast::Op::Pow);
    CHECK(b->lhs->value == 2.0);
    CHECK(b->rhs->op == ast::Op::Pow);

    const Jet2 r = eval_expression(parse_expression("2^3^2"), Jet2::variable(0.0), 1.0);
    CHECK(r.v == doctest::Approx(512.0));

    const Jet2 m = eval_expression(parse_expression("1-2*3+8/4"), Jet2::variable(0.0), 1.0);
    CHECK(m.v == doctest::Approx(-3.0));
}

TEST_CASE("evaluation with exact derivatives") {
    const double L = 10.0;
    const auto mode = ModeExpr::parse("sin(pi*z/L)", L);
    {
        const auto [u, du, d2u] = mode.eval012(L / 2);
        CHECK(u == doctest::Approx(1.0));
        CHECK(du == doctest::Approx(0.0));
        CHECK(d2u == doctest::Approx(-pi * pi / (L * L)));
    }
    const auto mode2 = ModeExpr::parse("sin(pi*z/L)^2", L);
    {
        // frozen from the closed forms sin^2' = 2 w sin cos, checked
        // below against the finite-difference oracle as well
        const auto [u, du, d2u] = mode2.eval012(L / 4);
        CHECK(u == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(du == doctest::Approx(pi / L).epsilon(1e-12));
        CHECK(d2u == doctest::Approx(0.0));

        const auto value_at = [&](double z) { return std::get<0>(mode2.eval012(z)); };
        const double h = 1e-6 * L;
        CHECK(oracle::central_diff1(value_at, L / 4, h) == doctest::Approx(du).epsilon(1e-6));
        // second difference at the coarser step where its rounding noise
        // (~4 eps/h^2) stays under the tolerance
        const double h2 = 1e-5 * L;
        CHECK(oracle::central_diff2(value_at, L / 4, h2) ==
              doctest::Approx(d2u).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("support window: zero outside and at the boundary") {
    const double L = 7.0;
    for (const char* name : {"mesa", "sine", "sine2", "gauss", "sech2", "1+z"}) {
        const auto mode = ModeExpr::parse(name, L);
        for (double z : {-3.0, 0.0, L, L + 2.0, 11.0 * L}) {
            const auto [u, du, d2u] = mode.eval012(z);
            CHECK(u == 0.0);
            CHECK(du == 0.0);
            CHECK(d2u == 0.0);
        }
    }
    // interior limits at the edges come from eval_interior
    const auto gauss = ModeExpr::parse("gauss", L);
    CHECK(std::get<0>(gauss.eval_interior(0.0)) == doctest::Approx(std::exp(-4.0)));
    const auto mesa = ModeExpr::parse("mesa", L);
    CHECK(std::get<0>(mesa.eval_interior(0.0)) == 1.0);
}

TEST_CASE("domain errors are typed") {
    const auto bad = ModeExpr::parse("1/(z-z)", 2.0);
    CHECK_THROWS_AS(bad.eval012(1.0), DomainError);
    const auto logneg = ModeExpr::parse("(0-2)^0.5", 2.0);
    CHECK_THROWS_AS(logneg.eval012(1.0), DomainError);
    // integer powers of negative bases are fine
    const auto cube = ModeExpr::parse("(z-1)^3", 2.0);
    CHECK(std::get<0>(cube.eval012(0.5)) == doctest::Approx(-0.125));
}

TEST_CASE("round-trip: print then parse is structurally identical") {
    std::mt19937_64 rng(918273);
    for (int i = 0; i < 20; ++i) {
        const std::string src = oracle::random_expression(rng);
        const auto ast = parse_expression(src);
        const std::string printed = print_expression(ast);
        const auto reparsed = parse_expression(printed);
        CAPTURE(src);
        CAPTURE(printed);
        CHECK(ast_equal(ast, reparsed));
        CHECK(print_expression(reparsed) == printed);
    }
    // hand-picked precedence traps
    for (const char* src : {"-z^2", "z-(1-z)", "z/(z*z+1)", "2^3^2", "(z^2)^3",
                            "-(z+1)*2", "z^-2"}) {
        const auto ast = parse_expression(src);
        CHECK(ast_equal(ast, parse_expression(print_expression(ast))));
    }
}

TEST_CASE("autodiff derivatives match finite differences") {
    std::mt19937_64 rng(5551234);
    const double L = 10.0;
    const double h = 1e-5 * L;
    std::uniform_real_distribution<double> z_dist(0.05 * L, 0.95 * L);

    std::vector<ModeExpr> modes;
    for (const char* name : {"sine", "sine2", "gauss", "sech2"})
        modes.push_back(ModeExpr::parse(name, L));
    for (int i = 0; i < 20; ++i)
        modes.push_back(ModeExpr::parse(oracle::random_expression(rng), L));

    const double rtol = 1e-6;
    for (const auto& mode : modes) {
        oracle::ScaledResidual res1(oracle::fd1_noise_floor(h, rtol));
        oracle::ScaledResidual res2(oracle::fd2_noise_floor(h, rtol));
        const auto value_at = [&](double z) { return std::get<0>(mode.eval_interior(z)); };
        struct Obs { double fd, ad; };
        std::vector<Obs> first, second;
        for (int s = 0; s < 100; ++s) {
            const double z = z_dist(rng);
            const auto [u, du, d2u] = mode.eval_interior(z);
            (void)u;
            res1.observe(du);
            res2.observe(d2u);
            first.push_back({oracle::central_diff1(value_at, z, h), du});
            second.push_back({oracle::central_diff2(value_at, z, h), d2u});
        }
        for (const auto& o : first) CHECK(res1.residual(o.fd, o.ad) <= rtol);
        for (const auto& o : second) CHECK(res2.residual(o.fd, o.ad) <= rtol);
    }
}

TEST_CASE("fuzzing the parser never crashes") {
    std::mt19937_64 rng(424242);
    int parsed = 0, rejected = 0;
    for (int i = 0; i < 2000; ++i) {
        const std::string s = oracle::random_bytes(rng);
        try {
            auto ast = parse_expression(s);
            (void)ast;
            ++parsed;
        } catch (const ParseError& e) {
            CHECK(e.offset <= s.size());
            ++rejected;
        }
    }
    CHECK(parsed + rejected == 2000);
    CHECK(rejected > 0);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rhb/parser.hpp"

using namespace rhb;

TEST_CASE("pendulum source parses into a second-order equation with sin") {
    OdeSystem sys = parse_system(
        "system pendulum { var theta; conservative true;"
        " eq theta'' + sin(theta) = 0; init theta(0) = 1.5; init theta'(0) = 0; }");
    CHECK(sys.name == "pendulum");
    CHECK(sys.vars == std::vector<std::string>{"theta"});
    CHECK(sys.conservative);
    REQUIRE(sys.equations.size() == 1);
    const auto& eq = sys.equations[0];
    REQUIRE(eq->kind == ExprKind::Sum);
    REQUIRE(eq->children.size() == 2);
    CHECK(eq->children[0]->kind == ExprKind::Deriv);
    CHECK(eq->children[0]->order == 2);
    CHECK(eq->children[1]->kind == ExprKind::Elementary);
    CHECK(eq->children[1]->fn == ElemFn::Sin);
    REQUIRE(sys.constraints.size() == 2);
    CHECK(sys.constraints[0].value == 1.5);
    CHECK(sys.constraints[1].order == 1);
}

TEST_CASE("linear oscillator parses without elementary nodes") {
    OdeSystem sys = parse_system("system lin { var x; conservative true;"
                                 " eq x'' + x = 0; init x(0) = 1; init x'(0) = 0; }");
    std::function<bool(const ExprPtr&)> has_elem = [&](const ExprPtr& e) {
        if (e->kind == ExprKind::Elementary) return true;
        for (const auto& c : e->children)
            if (has_elem(c)) return true;
        return false;
    };
    CHECK_FALSE(has_elem(sys.equations[0]));
}

TEST_CASE("rational power 3/2 parses as a RatPow node") {
    OdeSystem sys = parse_system("system rel { var x; conservative true;"
                                 " eq x'' + (1 - x'^2)^(3/2)*x = 0;"
                                 " init x(0) = 0; init x'(0) = 0.85; }");
    std::function<const Expr*(const ExprPtr&)> find_rat = [&](const ExprPtr& e) -> const Expr* {
        if (e->kind == ExprKind::RatPow) return e.get();
        for (const auto& c : e->children)
            if (auto* r = find_rat(c)) return r;
        return nullptr;
    };
    const Expr* rat = find_rat(sys.equations[0]);
    REQUIRE(rat != nullptr);
    CHECK(rat->rat_q == 3);
    CHECK(rat->rat_p == 2);
}

TEST_CASE("round-trip pretty-print reparses to an identical tree") {
    const char* sources[] = {
        "system pendulum { var theta; conservative true; eq theta'' + sin(theta) = 0;"
        " init theta(0) = 1.5; init theta'(0) = 0; }",
        "system duffing { var x; forcing w = 2.0; eq x'' + 0.1*x' + x + x^3 = 1.5*cos(w*t); }",
        "system rel { var x; conservative true; eq x'' + (1 - x'^2)^(3/2)*x = 0;"
        " init x(0) = 0; init x'(0) = 0.85; }",
        "system misc { var a, b; forcing w = 0.25;"
        " eq a'' + exp(a)*log(10, b) + atan(a/b) = sin(3*w*t);"
        " eq b' - tan(a) + asin(b)*acos(b) = 0; }",
    };
    for (const char* src : sources) {
        OdeSystem first = parse_system(src);
        OdeSystem second = parse_system(system_to_string(first));
        CHECK(system_equal(first, second));
    }
}

TEST_CASE("syntax errors carry line and column") {
    try {
        parse_system("system bad {\n var x;\n eq x'' + = 0;\n}");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
        CHECK(e.column > 0);
    }
}

TEST_CASE("unknown identifiers are rejected") {
    CHECK_THROWS_AS(parse_system("system bad { var x; eq x'' + y = 0; }"), ParseError);
}

TEST_CASE("equation/variable count mismatch is rejected") {
    CHECK_THROWS_AS(parse_system("system bad { var x, y; eq x'' + x = 0; }"), ParseError);
}

TEST_CASE("constraints away from t = 0 are rejected") {
    CHECK_THROWS_AS(
        parse_system("system bad { var x; eq x'' + x = 0; init x(1) = 0; init x'(0) = 0; }"),
        ParseError);
}

TEST_CASE("log base must be positive and not one") {
    CHECK_THROWS_AS(parse_system("system bad { var x; eq x' + log(1, x) = 0; }"), ParseError);
    CHECK_THROWS_AS(parse_system("system bad { var x; eq x' + log(-2, x) = 0; }"), ParseError);
    CHECK_NOTHROW(parse_system("system ok { var x; eq x' + log(2, x) = 0; }"));
}

TEST_CASE("harmonics require a matching forcing declaration") {
    CHECK_THROWS_AS(parse_system("system bad { var x; eq x' + x = cos(w*t); }"), ParseError);
    CHECK_THROWS_AS(
        parse_system("system bad { var x; forcing v = 1.0; eq x' + x = cos(w*t); }"),
        ParseError);
    OdeSystem ok = parse_system(
        "system ok { var x; forcing w = 2.5; eq x' + x = 4*cos(3*w*t) + sin(w*t); }");
    CHECK(ok.forcing_omega == 2.5);
}

TEST_CASE("conservative systems cannot carry forcing") {
    CHECK_THROWS_AS(parse_system("system bad { var x; forcing w = 1.0; conservative true;"
                                 " eq x' + x = cos(w*t); }"),
                    ParseError);
}

TEST_CASE("bare t outside a harmonic is rejected") {
    CHECK_THROWS_AS(parse_system("system bad { var x; eq x' + t = 0; }"), ParseError);
}

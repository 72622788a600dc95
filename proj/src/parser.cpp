#include "rhb/parser.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>
#include <vector>

namespace rhb {

namespace {

enum class Tok { Ident, Number, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0.0;
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(&src) { advance(); }

    const Token& peek() const { return cur_; }

    Token next() {
        Token t = cur_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < src_->size() && (std::isspace((unsigned char)(*src_)[pos_]) || (*src_)[pos_] == '#')) {
            if ((*src_)[pos_] == '#') { // line comment
                while (pos_ < src_->size() && (*src_)[pos_] != '\n') ++pos_;
                continue;
            }
            if ((*src_)[pos_] == '\n') { ++line_; col_ = 1; }
            else ++col_;
            ++pos_;
        }
        cur_.line = line_;
        cur_.col = col_;
        if (pos_ >= src_->size()) { cur_.kind = Tok::End; cur_.text.clear(); return; }
        char c = (*src_)[pos_];
        if (std::isalpha((unsigned char)c) || c == '_') {
            size_t start = pos_;
            while (pos_ < src_->size() &&
                   (std::isalnum((unsigned char)(*src_)[pos_]) || (*src_)[pos_] == '_'))
                take();
            cur_.kind = Tok::Ident;
            cur_.text = src_->substr(start, pos_ - start);
            return;
        }
        if (std::isdigit((unsigned char)c) || (c == '.' && pos_ + 1 < src_->size() &&
                                               std::isdigit((unsigned char)(*src_)[pos_ + 1]))) {
            size_t start = pos_;
            while (pos_ < src_->size() && (std::isdigit((unsigned char)(*src_)[pos_]) || (*src_)[pos_] == '.'))
                take();
            if (pos_ < src_->size() && ((*src_)[pos_] == 'e' || (*src_)[pos_] == 'E')) {
                size_t save = pos_;
                take();
                if (pos_ < src_->size() && ((*src_)[pos_] == '+' || (*src_)[pos_] == '-')) take();
                if (pos_ < src_->size() && std::isdigit((unsigned char)(*src_)[pos_])) {
                    while (pos_ < src_->size() && std::isdigit((unsigned char)(*src_)[pos_])) take();
                } else {
                    pos_ = save; // not an exponent
                }
            }
            cur_.kind = Tok::Number;
            cur_.text = src_->substr(start, pos_ - start);
            cur_.number = std::strtod(cur_.text.c_str(), nullptr);
            return;
        }
        cur_.kind = Tok::Punct;
        cur_.text = std::string(1, c);
        take();
    }

    void take() {
        if ((*src_)[pos_] == '\n') { ++line_; col_ = 1; }
        else ++col_;
        ++pos_;
    }

    const std::string* src_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token cur_;
};

bool is_integer(double v) { return v == std::floor(v) && std::abs(v) < 1e15; }

class Parser {
public:
    explicit Parser(const std::string& text) : lex_(text) {}

    OdeSystem parse() {
        expect_ident("system");
        sys_.name = expect(Tok::Ident, "system name").text;
        expect_punct("{");
        while (!at_punct("}")) statement();
        expect_punct("}");
        validate();
        return sys_;
    }

private:
    [[noreturn]] void fail(const Token& t, const std::string& msg) {
        throw ParseError(t.line, t.col, msg);
    }

    Token expect(Tok kind, const std::string& what) {
        Token t = lex_.next();
        if (t.kind != kind) fail(t, "expected " + what + ", got '" + t.text + "'");
        return t;
    }

    void expect_punct(const std::string& p) {
        Token t = lex_.next();
        if (t.kind != Tok::Punct || t.text != p)
            fail(t, "expected '" + p + "', got '" + t.text + "'");
    }

    void expect_ident(const std::string& kw) {
        Token t = lex_.next();
        if (t.kind != Tok::Ident || t.text != kw)
            fail(t, "expected '" + kw + "', got '" + t.text + "'");
    }

    bool at_punct(const std::string& p) {
        return lex_.peek().kind == Tok::Punct && lex_.peek().text == p;
    }

    bool accept_punct(const std::string& p) {
        if (at_punct(p)) { lex_.next(); return true; }
        return false;
    }

    void statement() {
        Token t = lex_.next();
        if (t.kind != Tok::Ident) fail(t, "expected a statement keyword");
        if (t.text == "var") {
            do {
                Token v = expect(Tok::Ident, "variable name");
                if (sys_.var_index(v.text) >= 0) fail(v, "duplicate variable '" + v.text + "'");
                sys_.vars.push_back(v.text);
            } while (accept_punct(","));
            expect_punct(";");
        } else if (t.text == "eq") {
            ExprPtr lhs = parse_expr();
            expect_punct("=");
            ExprPtr rhs = parse_expr();
            expect_punct(";");
            ExprPtr residual;
            if (rhs->kind == ExprKind::Constant && rhs->value == 0.0)
                residual = lhs;
            else
                residual = make_sum({lhs, negate(rhs)});
            eq_tokens_.push_back(t);
            sys_.equations.push_back(residual);
        } else if (t.text == "conservative") {
            Token b = expect(Tok::Ident, "true or false");
            if (b.text == "true") sys_.conservative = true;
            else if (b.text == "false") sys_.conservative = false;
            else fail(b, "expected true or false");
            expect_punct(";");
        } else if (t.text == "forcing") {
            Token n = expect(Tok::Ident, "forcing symbol");
            if (sys_.forcing_symbol) fail(n, "forcing already declared");
            expect_punct("=");
            sys_.forcing_omega = signed_number();
            expect_punct(";");
            sys_.forcing_symbol = n.text;
        } else if (t.text == "init") {
            Token v = expect(Tok::Ident, "variable name");
            int order = 0;
            while (accept_punct("'")) ++order;
            expect_punct("(");
            Token z = lex_.next();
            if (z.kind != Tok::Number || z.number != 0.0)
                fail(z, "point constraints are only accepted at t = 0");
            expect_punct(")");
            expect_punct("=");
            double val = signed_number();
            expect_punct(";");
            init_tokens_.push_back(v);
            sys_.constraints.push_back({v.text, order, val});
        } else {
            fail(t, "unknown statement '" + t.text + "'");
        }
    }

    double signed_number() {
        double sign = 1.0;
        while (at_punct("-") || at_punct("+")) {
            if (lex_.next().text == "-") sign = -sign;
        }
        Token n = expect(Tok::Number, "number");
        return sign * n.number;
    }

    // expression grammar: sum > product > unary > power > primary
    ExprPtr parse_expr() {
        ExprPtr left = parse_term();
        std::vector<ExprPtr> terms{left};
        while (at_punct("+") || at_punct("-")) {
            bool minus = lex_.next().text == "-";
            ExprPtr rhs = parse_term();
            terms.push_back(minus ? negate(rhs) : rhs);
        }
        return terms.size() == 1 ? terms[0] : make_sum(std::move(terms));
    }

    ExprPtr parse_term() {
        std::vector<ExprPtr> factors{parse_unary()};
        while (at_punct("*") || at_punct("/")) {
            bool div = lex_.next().text == "/";
            ExprPtr rhs = parse_unary();
            if (div) {
                if (rhs->kind == ExprKind::Constant) {
                    if (rhs->value == 0.0) fail(lex_.peek(), "division by zero constant");
                    // fold constant divisions
                    if (factors.back()->kind == ExprKind::Constant)
                        factors.back() = make_const(factors.back()->value / rhs->value);
                    else
                        factors.push_back(make_const(1.0 / rhs->value));
                } else {
                    factors.push_back(make_int_pow(rhs, -1));
                }
            } else {
                factors.push_back(rhs);
            }
        }
        return factors.size() == 1 ? factors[0] : make_product(std::move(factors));
    }

    ExprPtr parse_unary() {
        if (at_punct("-")) { lex_.next(); return negate(parse_unary()); }
        if (at_punct("+")) { lex_.next(); return parse_unary(); }
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_primary();
        if (at_punct("^")) {
            lex_.next();
            auto [q, p] = parse_exponent();
            return p == 1 ? make_int_pow(base, q) : make_rat_pow(base, q, p);
        }
        return base;
    }

    // exponent := ['-'] INT | '(' ['-'] INT ['/' INT] ')'
    std::pair<int, int> parse_exponent() {
        bool paren = accept_punct("(");
        int sign = 1;
        while (at_punct("-")) { lex_.next(); sign = -sign; }
        Token n = expect(Tok::Number, "integer exponent");
        if (!is_integer(n.number)) fail(n, "exponent must be an integer or a rational q/p");
        int q = sign * int(n.number);
        int p = 1;
        if (paren && at_punct("/")) {
            lex_.next();
            Token d = expect(Tok::Number, "integer denominator");
            if (!is_integer(d.number) || d.number < 1)
                fail(d, "rational exponent denominator must be a positive integer");
            p = int(d.number);
        }
        if (paren) expect_punct(")");
        return {q, p};
    }

    ExprPtr parse_primary() {
        Token t = lex_.next();
        if (t.kind == Tok::Number) return make_const(t.number);
        if (t.kind == Tok::Punct && t.text == "(") {
            ExprPtr e = parse_expr();
            expect_punct(")");
            return e;
        }
        if (t.kind != Tok::Ident) fail(t, "expected an operand, got '" + t.text + "'");

        static const std::set<std::string> fns = {"exp", "log", "sin", "cos",
                                                  "tan", "asin", "acos", "atan"};
        if (fns.count(t.text) && at_punct("(")) return parse_call(t);

        if (t.text == "t") fail(t, "'t' may appear only inside forcing harmonics");
        int order = 0;
        while (accept_punct("'")) ++order;
        used_idents_.push_back(t);
        return order == 0 ? make_var(t.text) : make_deriv(t.text, order);
    }

    ExprPtr parse_call(const Token& fn_tok) {
        expect_punct("(");
        if (fn_tok.text == "sin" || fn_tok.text == "cos") {
            if (auto h = try_harmonic(fn_tok.text == "cos" ? Phase::Cos : Phase::Sin))
                return h;
        }
        if (fn_tok.text == "log") {
            Token base = lex_.next();
            if (base.kind != Tok::Number)
                fail(base, "log requires a numeric base: log(a, x)");
            if (base.number <= 0.0 || base.number == 1.0)
                fail(base, "log base must be positive and != 1");
            expect_punct(",");
            ExprPtr arg = parse_expr();
            expect_punct(")");
            return make_elem(ElemFn::Log, arg, base.number);
        }
        ExprPtr arg = parse_expr();
        expect_punct(")");
        ElemFn f;
        if (fn_tok.text == "exp") f = ElemFn::Exp;
        else if (fn_tok.text == "sin") f = ElemFn::Sin;
        else if (fn_tok.text == "cos") f = ElemFn::Cos;
        else if (fn_tok.text == "tan") f = ElemFn::Tan;
        else if (fn_tok.text == "asin") f = ElemFn::Asin;
        else if (fn_tok.text == "acos") f = ElemFn::Acos;
        else f = ElemFn::Atan;
        return make_elem(f, arg);
    }

    // Matches [INT '*'] NAME '*' 't' ')' right after "cos(" / "sin(".
    ExprPtr try_harmonic(Phase phase) {
        Lexer save = lex_;
        int multiple = 1;
        Token t = lex_.peek();
        if (t.kind == Tok::Number) {
            if (!is_integer(t.number) || t.number < 1) { lex_ = save; return nullptr; }
            multiple = int(t.number);
            lex_.next();
            if (!accept_punct("*")) { lex_ = save; return nullptr; }
            t = lex_.peek();
        }
        if (t.kind != Tok::Ident || t.text == "t") { lex_ = save; return nullptr; }
        std::string symbol = t.text;
        lex_.next();
        if (!accept_punct("*")) { lex_ = save; return nullptr; }
        Token tt = lex_.peek();
        if (tt.kind != Tok::Ident || tt.text != "t") { lex_ = save; return nullptr; }
        lex_.next();
        if (!accept_punct(")")) { lex_ = save; return nullptr; }
        Token sym_tok = t;
        harmonic_tokens_.push_back(sym_tok);
        return make_harmonic(1.0, multiple, phase, symbol);
    }

    void validate() {
        if (sys_.equations.size() != sys_.vars.size()) {
            Token t = eq_tokens_.empty() ? Token{} : eq_tokens_.back();
            fail(t, "system has " + std::to_string(sys_.equations.size()) + " equations but " +
                        std::to_string(sys_.vars.size()) + " variables");
        }
        for (auto& tok : used_idents_)
            if (sys_.var_index(tok.text) < 0)
                fail(tok, "unknown identifier '" + tok.text + "'");
        for (auto& tok : harmonic_tokens_) {
            if (!sys_.forcing_symbol)
                fail(tok, "harmonic uses '" + tok.text + "' but no forcing is declared");
            if (tok.text != *sys_.forcing_symbol)
                fail(tok, "harmonic symbol '" + tok.text + "' does not match forcing '" +
                              *sys_.forcing_symbol + "'");
        }
        for (auto& tok : init_tokens_)
            if (sys_.var_index(tok.text) < 0)
                fail(tok, "constraint on undeclared variable '" + tok.text + "'");
        if (sys_.conservative && sys_.forcing_symbol) {
            Token t;
            fail(t, "conservative systems cannot carry forcing");
        }
    }

    Lexer lex_;
    OdeSystem sys_;
    std::vector<Token> used_idents_;
    std::vector<Token> harmonic_tokens_;
    std::vector<Token> init_tokens_;
    std::vector<Token> eq_tokens_;
};

} // namespace

OdeSystem parse_system(const std::string& text) {
    Parser p(text);
    return p.parse();
}

} // namespace rhb

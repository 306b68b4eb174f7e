#include "tlab/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace tlab {

namespace {

struct Function {
    const char* name;
    int arity;
};

constexpr Function kFunctions[] = {
    {"sin", 1},  {"cos", 1},  {"tan", 1},  {"exp", 1},  {"log", 1},   {"sqrt", 1}, {"abs", 1},
    {"sinh", 1}, {"cosh", 1}, {"tanh", 1}, {"atan", 1}, {"atan2", 2}, {"min", 2},  {"max", 2},
    {"pow", 2},
};

double apply1(unsigned char fn, double a) {
    switch (fn) {
        case 0: return std::sin(a);
        case 1: return std::cos(a);
        case 2: return std::tan(a);
        case 3: return std::exp(a);
        case 4: return std::log(a);
        case 5: return std::sqrt(a);
        case 6: return std::abs(a);
        case 7: return std::sinh(a);
        case 8: return std::cosh(a);
        case 9: return std::tanh(a);
        case 10: return std::atan(a);
        default: return 0.0;
    }
}

double apply2(unsigned char fn, double a, double b) {
    switch (fn) {
        case 11: return std::atan2(a, b);
        case 12: return std::min(a, b);
        case 13: return std::max(a, b);
        case 14: return std::pow(a, b);
        default: return 0.0;
    }
}

class Parser {
public:
    Parser(const std::string& text, std::vector<Expression::Op>& out) : s_(text), out_(out) {}

    void run() {
        expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    }

private:
    const std::string& s_;
    std::vector<Expression::Op>& out_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorCode::config,
                    "expression \"" + s_ + "\": " + msg + " at offset " + std::to_string(pos_));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void emit(Expression::Op::Kind k, unsigned char fn = 0, double v = 0.0) { out_.push_back({k, fn, v}); }

    void expr() {
        term();
        for (;;) {
            if (accept('+')) {
                term();
                emit(Expression::Op::add);
            } else if (accept('-')) {
                term();
                emit(Expression::Op::sub);
            } else {
                return;
            }
        }
    }

    void term() {
        unary();
        for (;;) {
            if (accept('*')) {
                unary();
                emit(Expression::Op::mul);
            } else if (accept('/')) {
                unary();
                emit(Expression::Op::div);
            } else {
                return;
            }
        }
    }

    void unary() {
        if (accept('-')) {
            unary();
            emit(Expression::Op::neg);
        } else if (accept('+')) {
            unary();
        } else {
            power();
        }
    }

    // right associative; binds tighter than unary minus on its left operand
    void power() {
        primary();
        if (accept('^')) {
            unary();
            emit(Expression::Op::pow);
        }
    }

    void primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (accept('(')) {
            expr();
            if (!accept(')')) fail("expected ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos_ += static_cast<std::size_t>(end - begin);
            emit(Expression::Op::push, 0, v);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            if (accept('(')) {
                for (unsigned char i = 0; i < std::size(kFunctions); ++i) {
                    if (name != kFunctions[i].name) continue;
                    expr();
                    if (kFunctions[i].arity == 2) {
                        if (!accept(',')) fail("expected ',' in call to " + name);
                        expr();
                    }
                    if (!accept(')')) fail("expected ')' after arguments of " + name);
                    emit(kFunctions[i].arity == 1 ? Expression::Op::call1 : Expression::Op::call2, i);
                    return;
                }
                fail("unknown function '" + name + "'");
            }
            if (name == "x") return emit(Expression::Op::var_x);
            if (name == "y") return emit(Expression::Op::var_y);
            if (name == "pi") return emit(Expression::Op::push, 0, pi);
            if (name == "e") return emit(Expression::Op::push, 0, std::exp(1.0));
            fail("unknown identifier '" + name + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }
};

}  // namespace

Expression Expression::parse(const std::string& text) {
    Expression e;
    e.source_ = text;
    Parser(text, e.program_).run();
    int depth = 0;
    for (const Op& op : e.program_) {
        if (op.kind == Op::var_x || op.kind == Op::var_y) e.constant_ = false;
        switch (op.kind) {
            case Op::push: case Op::var_x: case Op::var_y: ++depth; break;
            case Op::neg: case Op::call1: break;
            default: --depth; break;
        }
        if (depth > 64) throw Error(ErrorCode::config, "expression \"" + text + "\" nests too deeply");
    }
    return e;
}

Expression Expression::constant(double value) {
    Expression e;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    e.source_ = buf;
    e.program_.push_back({Op::push, 0, value});
    return e;
}

double Expression::operator()(Vec2 p) const {
    double stack[64];
    int top = -1;
    for (const Op& op : program_) {
        switch (op.kind) {
            case Op::push: stack[++top] = op.value; break;
            case Op::var_x: stack[++top] = p.x; break;
            case Op::var_y: stack[++top] = p.y; break;
            case Op::add: --top; stack[top] += stack[top + 1]; break;
            case Op::sub: --top; stack[top] -= stack[top + 1]; break;
            case Op::mul: --top; stack[top] *= stack[top + 1]; break;
            case Op::div: --top; stack[top] /= stack[top + 1]; break;
            case Op::pow: --top; stack[top] = std::pow(stack[top], stack[top + 1]); break;
            case Op::neg: stack[top] = -stack[top]; break;
            case Op::call1: stack[top] = apply1(op.fn, stack[top]); break;
            case Op::call2: --top; stack[top] = apply2(op.fn, stack[top], stack[top + 1]); break;
        }
    }
    return top == 0 ? stack[0] : 0.0;
}

}  // namespace tlab

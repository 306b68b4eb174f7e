#pragma once

#include <string>
#include <vector>

#include "tlab/types.hpp"

namespace tlab {

/// Scalar formula in the variables x and y, compiled once to a postfix
/// program. Grammar: + - * / ^, unary minus, parentheses, the constants pi and
/// e, and sin cos tan exp log sqrt abs sinh cosh tanh atan atan2 min max pow.
class Expression {
public:
    Expression() = default;
    static Expression parse(const std::string& text);
    static Expression constant(double value);

    double operator()(Vec2 p) const;
    double operator()(double x, double y) const { return (*this)({x, y}); }

    const std::string& source() const { return source_; }
    bool is_constant() const { return constant_; }

    struct Op {
        enum Kind : unsigned char { push, var_x, var_y, add, sub, mul, div, pow, neg, call1, call2 } kind;
        unsigned char fn = 0;
        double value = 0.0;
    };

private:
    std::string source_;
    std::vector<Op> program_;
    bool constant_ = true;
};

}  // namespace tlab

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bnls {

class ExpressionError : public std::invalid_argument {
public:
    ExpressionError(const std::string& what, int column)
        : std::invalid_argument(what + " at column " + std::to_string(column)), column(column) {}
    int column;  // 1-based
};

/// Real function of the radial coordinate, parsed from text such as
/// "1.6*exp(-x^2)". Grammar: numbers, the variables x and r (both the radius),
/// + - * / ^ (right-associative, binding tighter than unary minus), exp(),
/// and parentheses.
class RadialExpression {
public:
    static RadialExpression parse(std::string_view text);

    double operator()(double r) const;
    const std::string& text() const { return text_; }

private:
    enum class Op { kConst, kVar, kAdd, kSub, kMul, kDiv, kPow, kNeg, kExp };
    struct Instr {
        Op op;
        double value = 0.0;
    };
    class Parser;

    std::string text_;
    std::vector<Instr> code_;  // postfix
    std::size_t max_depth_ = 0;
};

}  // namespace bnls

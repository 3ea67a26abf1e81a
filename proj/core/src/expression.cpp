#include "bnls/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace bnls {

class RadialExpression::Parser {
public:
    Parser(std::string_view s, std::vector<Instr>& out) : s_(s), out_(out) {}

    void parse() {
        expr();
        skip_space();
        if (pos_ < s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    }

    std::size_t max_depth() const { return max_depth_; }

private:
    void expr() {
        term();
        for (;;) {
            if (accept('+')) {
                term();
                emit(Op::kAdd);
            } else if (accept('-')) {
                term();
                emit(Op::kSub);
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
                emit(Op::kMul);
            } else if (accept('/')) {
                unary();
                emit(Op::kDiv);
            } else {
                return;
            }
        }
    }

    void unary() {
        if (accept('-')) {
            unary();
            emit(Op::kNeg);
        } else if (accept('+')) {
            unary();
        } else {
            power();
        }
    }

    void power() {
        primary();
        if (accept('^')) {
            unary();
            emit(Op::kPow);
        }
    }

    void primary() {
        skip_space();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        const char c = s_[pos_];
        if (accept('(')) {
            expr();
            expect(')');
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            const auto name = s_.substr(start, pos_ - start);
            if (name == "x" || name == "r") {
                push({Op::kVar});
            } else if (name == "exp") {
                expect('(');
                expr();
                expect(')');
                emit(Op::kExp);
            } else {
                pos_ = start;
                fail("unknown name '" + std::string(name) + "'");
            }
            return;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    void number() {
        double v = 0.0;
        const char* first = s_.data() + pos_;
        const auto [end, ec] = std::from_chars(first, s_.data() + s_.size(), v);
        if (ec != std::errc()) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - first);
        push({Op::kConst, v});
    }

    void skip_space() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip_space();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw ExpressionError(what, static_cast<int>(pos_) + 1);
    }

    void push(Instr in) {
        out_.push_back(in);
        max_depth_ = std::max(max_depth_, ++depth_);
    }
    void emit(Op op) {
        if (op != Op::kNeg && op != Op::kExp) --depth_;
        out_.push_back({op});
    }

    std::string_view s_;
    std::vector<Instr>& out_;
    std::size_t pos_ = 0, depth_ = 0, max_depth_ = 0;
};

RadialExpression RadialExpression::parse(std::string_view text) {
    RadialExpression e;
    e.text_ = std::string(text);
    Parser p(e.text_, e.code_);
    p.parse();
    e.max_depth_ = p.max_depth();
    return e;
}

double RadialExpression::operator()(double r) const {
    // Small fixed stack; expressions of interest are a handful of terms deep.
    std::vector<double> st;
    st.reserve(max_depth_);
    auto pop = [&st] {
        const double v = st.back();
        st.pop_back();
        return v;
    };
    for (const auto& in : code_) {
        switch (in.op) {
            case Op::kConst: st.push_back(in.value); break;
            case Op::kVar: st.push_back(r); break;
            case Op::kNeg: st.back() = -st.back(); break;
            case Op::kExp: st.back() = std::exp(st.back()); break;
            default: {
                const double b = pop();
                double& a = st.back();
                switch (in.op) {
                    case Op::kAdd: a += b; break;
                    case Op::kSub: a -= b; break;
                    case Op::kMul: a *= b; break;
                    case Op::kDiv: a /= b; break;
                    case Op::kPow: a = std::pow(a, b); break;
                    default: break;
                }
            }
        }
    }
    return st.back();
}

}  // namespace bnls

#pragma once

// Scalar expressions over named phase-space coordinates, evaluated as
// forward-mode jets (value, gradient, Hessian).
//
// Grammar (precedence high to low):
//   primary := number | ident | func '(' args ')' | '(' expr ')'
//   power   := primary ('^' unary)?          right-assoc, exponent must be constant
//   unary   := '-' unary | power
//   term    := unary (('*' | '/') unary)*
//   expr    := term (('+' | '-') term)*
// with func in {sin, cos, tan, exp, log, sqrt, atan2}.

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "integ/types.hpp"

namespace integ::expr {

enum class BinaryOp { Add, Sub, Mul, Div };
enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Atan2 };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Number {
    double value;
};
struct Variable {
    std::size_t index;
};
struct Binary {
    BinaryOp op;
    NodePtr lhs, rhs;
};
struct Negate {
    NodePtr operand;
};
/// base ^ exponent with the exponent folded to a constant at parse time.
struct Power {
    NodePtr base;
    double exponent;
};
struct Call {
    Func func;
    std::vector<NodePtr> args;
};

struct Node {
    std::variant<Number, Variable, Binary, Negate, Power, Call> data;
};

struct Jet1 {
    double value = 0;
    Vec gradient;
};

/// Second-order jet of a scalar function at a point. The Hessian is built
/// symmetric by the propagation rules.
struct Jet2 {
    double value = 0;
    Vec gradient;
    Mat hessian;
};

/// Immutable parsed expression together with the coordinate names it ranges
/// over. Cheap to copy (shared AST); safe to evaluate concurrently.
class Expression {
public:
    Expression(NodePtr root, std::vector<std::string> coordinates);

    const Node& root() const { return *root_; }
    NodePtr root_ptr() const { return root_; }
    const std::vector<std::string>& coordinates() const { return coords_; }
    std::size_t dimension() const { return coords_.size(); }

    double value(const Vec& point) const;
    Jet1 jet1(const Vec& point) const;
    Jet2 jet2(const Vec& point) const;

    /// Fully parenthesized source that parses back to an identical AST.
    std::string to_string() const;
    /// Number of nodes on the longest root-to-leaf path.
    std::size_t depth() const;
    std::size_t call_count() const;

    static Expression constant(double c, std::vector<std::string> coordinates);
    static Expression variable(std::size_t index, std::vector<std::string> coordinates);

private:
    NodePtr root_;
    std::vector<std::string> coords_;
};

/// Throws ParseError (with byte offset) or UnknownIdentifierError.
Expression parse(std::string_view source, const std::vector<std::string>& coordinates);

/// Throws DomainError naming the offending subexpression.
Jet2 eval_jet2(const Expression& e, const Vec& point);

bool structurally_equal(const Expression& a, const Expression& b);

/// Replaces coordinate i of `e` by replacements[i]. All replacements must share
/// one coordinate list, which becomes the coordinate list of the result.
Expression substitute(const Expression& e, const std::vector<Expression>& replacements);

std::string node_to_string(const Node& node, const std::vector<std::string>& coordinates);

}  // namespace integ::expr

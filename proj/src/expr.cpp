#include "integ/expr.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "integ/errors.hpp"

namespace integ::expr {

namespace {

constexpr std::array<std::pair<std::string_view, Func>, 7> kFunctions{{
    {"sin", Func::Sin},
    {"cos", Func::Cos},
    {"tan", Func::Tan},
    {"exp", Func::Exp},
    {"log", Func::Log},
    {"sqrt", Func::Sqrt},
    {"atan2", Func::Atan2},
}};

std::string_view func_name(Func f) {
    for (auto& [name, fn] : kFunctions)
        if (fn == f) return name;
    return "?";
}

std::size_t func_arity(Func f) { return f == Func::Atan2 ? 2 : 1; }

NodePtr make(auto data) { return std::make_shared<const Node>(Node{std::move(data)}); }

std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    std::string s(buf.data(), end);
    if (v < 0) return "(" + s + ")";
    return s;
}

bool contains_variable(const Node& n) {
    return std::visit(
        [](const auto& d) -> bool {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Variable>) return true;
            else if constexpr (std::is_same_v<T, Number>) return false;
            else if constexpr (std::is_same_v<T, Binary>)
                return contains_variable(*d.lhs) || contains_variable(*d.rhs);
            else if constexpr (std::is_same_v<T, Negate>) return contains_variable(*d.operand);
            else if constexpr (std::is_same_v<T, Power>) return contains_variable(*d.base);
            else {
                return std::any_of(d.args.begin(), d.args.end(),
                                   [](const NodePtr& a) { return contains_variable(*a); });
            }
        },
        n.data);
}

// ---------------------------------------------------------------------------
// Forward-mode jet propagation. Order 0: value only; 1: + gradient; 2: + Hessian.

template <int Order>
struct Jet {
    double v = 0;
    Vec g;
    Mat h;
};

template <int Order>
class JetEvaluator {
public:
    JetEvaluator(const std::vector<std::string>& coords, const Vec& x)
        : coords_(coords), x_(x), d_(static_cast<Eigen::Index>(x.size())) {}

    Jet<Order> eval(const Node& n) const {
        return std::visit([&](const auto& d) { return this->visit(n, d); }, n.data);
    }

private:
    const std::vector<std::string>& coords_;
    const Vec& x_;
    Eigen::Index d_;

    [[noreturn]] void domain(const std::string& what, const Node& n) const {
        throw DomainError(what, node_to_string(n, coords_));
    }

    Jet<Order> constant(double c) const {
        Jet<Order> r;
        r.v = c;
        if constexpr (Order >= 1) r.g = Vec::Zero(d_);
        if constexpr (Order >= 2) r.h = Mat::Zero(d_, d_);
        return r;
    }

    // r = f(u) with f' = f1, f'' = f2 at u.
    static Jet<Order> chain(const Jet<Order>& u, double f0, double f1, double f2) {
        Jet<Order> r;
        r.v = f0;
        if constexpr (Order >= 1) r.g = f1 * u.g;
        if constexpr (Order >= 2) {
            r.h = f1 * u.h;
            if (f2 != 0) r.h.noalias() += f2 * u.g * u.g.transpose();
        }
        return r;
    }

    // r = f(u, w) given the first and second partials of f.
    static Jet<Order> chain2(const Jet<Order>& u, const Jet<Order>& w, double f, double fu,
                             double fw, double fuu, double fuw, double fww) {
        Jet<Order> r;
        r.v = f;
        if constexpr (Order >= 1) r.g = fu * u.g + fw * w.g;
        if constexpr (Order >= 2) {
            r.h = fu * u.h + fw * w.h;
            if (fuu != 0) r.h.noalias() += fuu * u.g * u.g.transpose();
            if (fww != 0) r.h.noalias() += fww * w.g * w.g.transpose();
            if (fuw != 0) {
                Mat cross = u.g * w.g.transpose();
                r.h += fuw * (cross + cross.transpose());
            }
        }
        return r;
    }

    Jet<Order> visit(const Node&, const Number& num) const { return constant(num.value); }

    Jet<Order> visit(const Node&, const Variable& var) const {
        Jet<Order> r = constant(x_[static_cast<Eigen::Index>(var.index)]);
        if constexpr (Order >= 1) r.g[static_cast<Eigen::Index>(var.index)] = 1;
        return r;
    }

    Jet<Order> visit(const Node& n, const Binary& b) const {
        Jet<Order> u = eval(*b.lhs);
        Jet<Order> w = eval(*b.rhs);
        switch (b.op) {
            case BinaryOp::Add:
            case BinaryOp::Sub: {
                const double s = b.op == BinaryOp::Add ? 1.0 : -1.0;
                Jet<Order> r;
                r.v = u.v + s * w.v;
                if constexpr (Order >= 1) r.g = u.g + s * w.g;
                if constexpr (Order >= 2) r.h = u.h + s * w.h;
                return r;
            }
            case BinaryOp::Mul:
                return chain2(u, w, u.v * w.v, w.v, u.v, 0, 1, 0);
            case BinaryOp::Div: {
                if (w.v == 0) domain("division by zero", n);
                const double inv = 1 / w.v;
                return chain2(u, w, u.v * inv, inv, -u.v * inv * inv, 0, -inv * inv,
                              2 * u.v * inv * inv * inv);
            }
        }
        throw std::logic_error("unreachable binary op");
    }

    Jet<Order> visit(const Node&, const Negate& neg) const {
        Jet<Order> r = eval(*neg.operand);
        r.v = -r.v;
        if constexpr (Order >= 1) r.g = -r.g;
        if constexpr (Order >= 2) r.h = -r.h;
        return r;
    }

    Jet<Order> visit(const Node& n, const Power& p) const {
        Jet<Order> u = eval(*p.base);
        const double c = p.exponent;
        if (c == std::floor(c) && std::abs(c) < 1e9) {
            const int k = static_cast<int>(c);
            if (k == 0) return constant(1);
            if (u.v == 0 && k < 0) domain("division by zero", n);
            const double f0 = std::pow(u.v, k);
            const double f1 = k * std::pow(u.v, k - 1);
            const double f2 = (k == 1) ? 0.0 : k * (k - 1) * std::pow(u.v, k - 2);
            return chain(u, f0, f1, f2);
        }
        // Non-integer exponents go through exp(c log u).
        if (u.v <= 0) domain("non-positive base for non-integer exponent", n);
        const double f0 = std::exp(c * std::log(u.v));
        return chain(u, f0, c * f0 / u.v, c * (c - 1) * f0 / (u.v * u.v));
    }

    Jet<Order> visit(const Node& n, const Call& call) const {
        Jet<Order> u = eval(*call.args[0]);
        switch (call.func) {
            case Func::Sin: {
                const double s = std::sin(u.v), c = std::cos(u.v);
                return chain(u, s, c, -s);
            }
            case Func::Cos: {
                const double s = std::sin(u.v), c = std::cos(u.v);
                return chain(u, c, -s, -c);
            }
            case Func::Tan: {
                if (std::cos(u.v) == 0) domain("tan pole", n);
                const double t = std::tan(u.v), sec2 = 1 + t * t;
                return chain(u, t, sec2, 2 * t * sec2);
            }
            case Func::Exp: {
                const double e = std::exp(u.v);
                return chain(u, e, e, e);
            }
            case Func::Log: {
                if (u.v <= 0) domain("log of non-positive value", n);
                return chain(u, std::log(u.v), 1 / u.v, -1 / (u.v * u.v));
            }
            case Func::Sqrt: {
                if (u.v < 0) domain("sqrt of negative value", n);
                const double s = std::sqrt(u.v);
                if constexpr (Order >= 1) {
                    if (u.v == 0) domain("sqrt is not differentiable at 0", n);
                    return chain(u, s, 0.5 / s, -0.25 / (s * u.v));
                }
                return chain(u, s, 0, 0);
            }
            case Func::Atan2: {
                Jet<Order> w = eval(*call.args[1]);
                const double y = u.v, x = w.v, r2 = x * x + y * y;
                if (r2 == 0) domain("atan2 at the origin", n);
                const double r4 = r2 * r2;
                return chain2(u, w, std::atan2(y, x), x / r2, -y / r2, -2 * x * y / r4,
                              (y * y - x * x) / r4, 2 * x * y / r4);
            }
        }
        throw std::logic_error("unreachable function");
    }
};

// ---------------------------------------------------------------------------
// Recursive-descent parser.

class Parser {
public:
    Parser(std::string_view src, const std::vector<std::string>& coords)
        : src_(src), coords_(coords) {}

    NodePtr parse_all() {
        NodePtr e = expression();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
        return e;
    }

private:
    std::string_view src_;
    const std::vector<std::string>& coords_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' ||
                                      src_[pos_] == '\n' || src_[pos_] == '\r'))
            ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= src_.size()) fail(std::string("expected '") + c + "' but input ended");
            fail(std::string("expected '") + c + "'");
        }
    }

    NodePtr expression() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) lhs = make(Binary{BinaryOp::Add, lhs, term()});
            else if (accept('-')) lhs = make(Binary{BinaryOp::Sub, lhs, term()});
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = make(Binary{BinaryOp::Mul, lhs, unary()});
            else if (accept('/')) lhs = make(Binary{BinaryOp::Div, lhs, unary()});
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Negate{unary()});
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (!accept('^')) return base;
        skip_ws();
        const std::size_t exponent_at = pos_;
        NodePtr exponent = unary();
        if (contains_variable(*exponent))
            throw ParseError("exponent must be a constant", exponent_at);
        const Vec none;
        const double c = JetEvaluator<0>(coords_, none).eval(*exponent).v;
        return make(Power{base, c});
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input");
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        if (accept('(')) {
            NodePtr e = expression();
            expect(')');
            return e;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        };
        digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) digits();
            else pos_ = save;
        }
        double v = 0;
        auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (ec != std::errc() || ptr != src_.data() + pos_) throw ParseError("malformed number", start);
        return make(Number{v});
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string name(src_.substr(start, pos_ - start));
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            auto it = std::find_if(kFunctions.begin(), kFunctions.end(),
                                   [&](const auto& f) { return f.first == name; });
            if (it == kFunctions.end()) throw UnknownIdentifierError(name, start);
            ++pos_;
            std::vector<NodePtr> args{expression()};
            while (accept(',')) args.push_back(expression());
            expect(')');
            if (args.size() != func_arity(it->second))
                throw ParseError(name + " expects " + std::to_string(func_arity(it->second)) +
                                     " argument(s)",
                                 start);
            return make(Call{it->second, std::move(args)});
        }
        auto it = std::find(coords_.begin(), coords_.end(), name);
        if (it == coords_.end()) throw UnknownIdentifierError(name, start);
        return make(Variable{static_cast<std::size_t>(it - coords_.begin())});
    }
};

bool nodes_equal(const Node& a, const Node& b) {
    if (a.data.index() != b.data.index()) return false;
    return std::visit(
        [&](const auto& da) -> bool {
            using T = std::decay_t<decltype(da)>;
            const auto& db = std::get<T>(b.data);
            if constexpr (std::is_same_v<T, Number>) return da.value == db.value;
            else if constexpr (std::is_same_v<T, Variable>) return da.index == db.index;
            else if constexpr (std::is_same_v<T, Binary>)
                return da.op == db.op && nodes_equal(*da.lhs, *db.lhs) && nodes_equal(*da.rhs, *db.rhs);
            else if constexpr (std::is_same_v<T, Negate>) return nodes_equal(*da.operand, *db.operand);
            else if constexpr (std::is_same_v<T, Power>)
                return da.exponent == db.exponent && nodes_equal(*da.base, *db.base);
            else {
                if (da.func != db.func || da.args.size() != db.args.size()) return false;
                for (std::size_t i = 0; i < da.args.size(); ++i)
                    if (!nodes_equal(*da.args[i], *db.args[i])) return false;
                return true;
            }
        },
        a.data);
}

NodePtr substitute_node(const NodePtr& n, const std::vector<NodePtr>& repl) {
    return std::visit(
        [&](const auto& d) -> NodePtr {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Number>) return n;
            else if constexpr (std::is_same_v<T, Variable>) return repl.at(d.index);
            else if constexpr (std::is_same_v<T, Binary>)
                return make(Binary{d.op, substitute_node(d.lhs, repl), substitute_node(d.rhs, repl)});
            else if constexpr (std::is_same_v<T, Negate>) return make(Negate{substitute_node(d.operand, repl)});
            else if constexpr (std::is_same_v<T, Power>) return make(Power{substitute_node(d.base, repl), d.exponent});
            else {
                std::vector<NodePtr> args;
                for (const auto& a : d.args) args.push_back(substitute_node(a, repl));
                return make(Call{d.func, std::move(args)});
            }
        },
        n->data);
}

std::size_t node_depth(const Node& n) {
    return std::visit(
        [](const auto& d) -> std::size_t {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Number> || std::is_same_v<T, Variable>) return 1;
            else if constexpr (std::is_same_v<T, Binary>)
                return 1 + std::max(node_depth(*d.lhs), node_depth(*d.rhs));
            else if constexpr (std::is_same_v<T, Negate>) return 1 + node_depth(*d.operand);
            else if constexpr (std::is_same_v<T, Power>) return 1 + node_depth(*d.base);
            else {
                std::size_t m = 0;
                for (const auto& a : d.args) m = std::max(m, node_depth(*a));
                return 1 + m;
            }
        },
        n.data);
}

std::size_t node_calls(const Node& n) {
    return std::visit(
        [](const auto& d) -> std::size_t {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Number> || std::is_same_v<T, Variable>) return 0;
            else if constexpr (std::is_same_v<T, Binary>) return node_calls(*d.lhs) + node_calls(*d.rhs);
            else if constexpr (std::is_same_v<T, Negate>) return node_calls(*d.operand);
            else if constexpr (std::is_same_v<T, Power>) return node_calls(*d.base);
            else {
                std::size_t m = 1;
                for (const auto& a : d.args) m += node_calls(*a);
                return m;
            }
        },
        n.data);
}

void check_dimension(const Expression& e, const Vec& x) {
    if (static_cast<std::size_t>(x.size()) != e.dimension())
        throw PreconditionError("point has dimension " + std::to_string(x.size()) +
                                " but expression has " + std::to_string(e.dimension()) +
                                " coordinates");
}

}  // namespace

std::string node_to_string(const Node& node, const std::vector<std::string>& coords) {
    return std::visit(
        [&](const auto& d) -> std::string {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Number>) return format_number(d.value);
            else if constexpr (std::is_same_v<T, Variable>) return coords.at(d.index);
            else if constexpr (std::is_same_v<T, Binary>) {
                static constexpr std::array<const char*, 4> ops{" + ", " - ", " * ", " / "};
                return "(" + node_to_string(*d.lhs, coords) + ops[static_cast<int>(d.op)] +
                       node_to_string(*d.rhs, coords) + ")";
            } else if constexpr (std::is_same_v<T, Negate>)
                return "(-" + node_to_string(*d.operand, coords) + ")";
            else if constexpr (std::is_same_v<T, Power>)
                return "(" + node_to_string(*d.base, coords) + "^" + format_number(d.exponent) + ")";
            else {
                std::string s(func_name(d.func));
                s += "(";
                for (std::size_t i = 0; i < d.args.size(); ++i) {
                    if (i) s += ", ";
                    s += node_to_string(*d.args[i], coords);
                }
                return s + ")";
            }
        },
        node.data);
}

Expression::Expression(NodePtr root, std::vector<std::string> coordinates)
    : root_(std::move(root)), coords_(std::move(coordinates)) {}

double Expression::value(const Vec& point) const {
    check_dimension(*this, point);
    return JetEvaluator<0>(coords_, point).eval(*root_).v;
}

Jet1 Expression::jet1(const Vec& point) const {
    check_dimension(*this, point);
    auto j = JetEvaluator<1>(coords_, point).eval(*root_);
    return {j.v, std::move(j.g)};
}

Jet2 Expression::jet2(const Vec& point) const {
    check_dimension(*this, point);
    auto j = JetEvaluator<2>(coords_, point).eval(*root_);
    return {j.v, std::move(j.g), std::move(j.h)};
}

std::string Expression::to_string() const { return node_to_string(*root_, coords_); }
std::size_t Expression::depth() const { return node_depth(*root_); }
std::size_t Expression::call_count() const { return node_calls(*root_); }

Expression Expression::constant(double c, std::vector<std::string> coordinates) {
    return Expression(make(Number{c}), std::move(coordinates));
}

Expression Expression::variable(std::size_t index, std::vector<std::string> coordinates) {
    if (index >= coordinates.size()) throw PreconditionError("variable index out of range");
    return Expression(make(Variable{index}), std::move(coordinates));
}

Expression parse(std::string_view source, const std::vector<std::string>& coordinates) {
    return Expression(Parser(source, coordinates).parse_all(), coordinates);
}

Jet2 eval_jet2(const Expression& e, const Vec& point) { return e.jet2(point); }

bool structurally_equal(const Expression& a, const Expression& b) {
    return a.coordinates() == b.coordinates() && nodes_equal(a.root(), b.root());
}

Expression substitute(const Expression& e, const std::vector<Expression>& replacements) {
    if (replacements.size() != e.dimension())
        throw PreconditionError("substitute: need one replacement per coordinate");
    std::vector<NodePtr> roots;
    for (const auto& r : replacements) {
        if (r.coordinates() != replacements.front().coordinates())
            throw PreconditionError("substitute: replacements disagree on coordinates");
        roots.push_back(r.root_ptr());
    }
    std::vector<std::string> coords =
        replacements.empty() ? std::vector<std::string>{} : replacements.front().coordinates();
    return Expression(substitute_node(e.root_ptr(), roots), std::move(coords));
}

}  // namespace integ::expr

#include "integ/spec_file.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "integ/errors.hpp"

namespace integ::cli {

namespace {

struct Value;
using Array = std::vector<Value>;
struct Value {
    std::variant<std::string, double, bool, Array> v;
};

struct Entry {
    std::string key;
    Value value;
    std::size_t line;
};

struct Section {
    std::string name;
    std::size_t line;
    std::vector<Entry> entries;
};

class LineParser {
public:
    LineParser(std::string_view text, const std::string& label, std::size_t line)
        : s_(text), label_(label), line_(line) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw InputError(label_ + ":" + std::to_string(line_) + ": " + msg);
    }

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
    }
    bool at_end() {
        skip_ws();
        return pos_ >= s_.size() || s_[pos_] == '#';
    }
    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string key() {
        skip_ws();
        if (peek() == '{') {
            const std::size_t close = s_.find('}', pos_);
            if (close == std::string_view::npos) fail("unterminated '{' in key");
            std::string k(s_.substr(pos_, close - pos_ + 1));
            pos_ = close + 1;
            return k;
        }
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        if (start == pos_) fail("expected a key");
        return std::string(s_.substr(start, pos_ - start));
    }

    Value value() {
        const char c = peek();
        if (c == '"') return {string()};
        if (c == '[') {
            ++pos_;
            Array arr;
            if (peek() == ']') {
                ++pos_;
                return {arr};
            }
            while (true) {
                arr.push_back(value());
                const char d = peek();
                ++pos_;
                if (d == ']') break;
                if (d != ',') fail("expected ',' or ']' in array");
            }
            return {arr};
        }
        const std::size_t start = pos_;
        while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != ',' &&
               s_[pos_] != ']' && s_[pos_] != '#')
            ++pos_;
        const std::string_view word = s_.substr(start, pos_ - start);
        if (word == "true") return {true};
        if (word == "false") return {false};
        double d = 0;
        const char* b = word.data();
        const char* e = b + word.size();
        if (!word.empty() && *b == '+') ++b;
        auto [ptr, ec] = std::from_chars(b, e, d);
        if (word.empty() || ec != std::errc() || ptr != e) fail("bad value '" + std::string(word) + "'");
        return {d};
    }

private:
    std::string string() {
        expect('"');
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
            out += s_[pos_++];
        }
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }

    std::string_view s_;
    const std::string& label_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

std::vector<Section> tokenize(std::string_view text, const std::string& label) {
    std::vector<Section> sections;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(start, end - start);
        ++line_no;
        LineParser p(line, label, line_no);
        if (!p.at_end()) {
            if (p.peek() == '[') {
                p.expect('[');
                const std::string name = p.key();
                p.expect(']');
                if (!p.at_end()) p.fail("trailing characters after section header");
                for (const auto& s : sections)
                    if (s.name == name) p.fail("duplicate section [" + name + "]");
                sections.push_back({name, line_no, {}});
            } else {
                if (sections.empty()) p.fail("entry outside of any section");
                std::string key = p.key();
                p.expect('=');
                Value v = p.value();
                if (!p.at_end()) p.fail("trailing characters after value");
                for (const auto& e : sections.back().entries)
                    if (e.key == key) p.fail("duplicate key '" + key + "'");
                sections.back().entries.push_back({std::move(key), std::move(v), line_no});
            }
        }
        if (end == text.size()) break;
        start = end + 1;
    }
    return sections;
}

class Reader {
public:
    explicit Reader(const std::string& label) : label_(label) {}

    [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
        throw InputError(label_ + ":" + std::to_string(line) + ": " + msg);
    }

    std::string str(const Entry& e) const {
        if (auto* s = std::get_if<std::string>(&e.value.v)) return *s;
        fail(e.line, "'" + e.key + "' must be a string");
    }
    double num(const Entry& e) const {
        if (auto* d = std::get_if<double>(&e.value.v)) return *d;
        fail(e.line, "'" + e.key + "' must be a number");
    }
    std::size_t count(const Entry& e) const {
        const double d = num(e);
        if (d < 0 || d != std::floor(d) || d > 1e15) fail(e.line, "'" + e.key + "' must be a non-negative integer");
        return static_cast<std::size_t>(d);
    }
    bool flag(const Entry& e) const {
        if (auto* b = std::get_if<bool>(&e.value.v)) return *b;
        fail(e.line, "'" + e.key + "' must be true or false");
    }
    bundleclass::Tri tri(const Entry& e) const {
        if (auto* b = std::get_if<bool>(&e.value.v)) return *b ? bundleclass::Tri::True : bundleclass::Tri::False;
        if (auto* s = std::get_if<std::string>(&e.value.v); s && *s == "unknown") return bundleclass::Tri::Unknown;
        fail(e.line, "'" + e.key + "' must be true, false or \"unknown\"");
    }
    std::vector<double> numbers(const Entry& e) const {
        auto* arr = std::get_if<Array>(&e.value.v);
        if (!arr) fail(e.line, "'" + e.key + "' must be an array of numbers");
        std::vector<double> out;
        for (const auto& v : *arr) {
            auto* d = std::get_if<double>(&v.v);
            if (!d) fail(e.line, "'" + e.key + "' must be an array of numbers");
            out.push_back(*d);
        }
        return out;
    }
    std::vector<std::string> strings(const Entry& e) const {
        auto* arr = std::get_if<Array>(&e.value.v);
        if (!arr) fail(e.line, "'" + e.key + "' must be an array of strings");
        std::vector<std::string> out;
        for (const auto& v : *arr) {
            auto* s = std::get_if<std::string>(&v.v);
            if (!s) fail(e.line, "'" + e.key + "' must be an array of strings");
            out.push_back(*s);
        }
        return out;
    }
    expr::Expression expression(const Entry& e, const std::vector<std::string>& coords) const {
        const std::string src = str(e);
        try {
            return expr::parse(src, coords);
        } catch (const ParseError& err) {
            fail(e.line, "malformed expression for '" + e.key + "': " + err.what());
        }
    }

private:
    const std::string& label_;
};

bool is_identifier(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

}  // namespace

std::vector<std::string> SystemSpec::function_names() const {
    std::vector<std::string> out;
    for (const auto& f : functions) out.push_back(f.name);
    return out;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

SystemSpec parse_spec(std::string_view text, const std::string& label) {
    const auto sections = tokenize(text, label);
    const Reader rd(label);
    std::map<std::string, const Section*> by_name;
    static const std::set<std::string> known{"system", "functions", "closure", "casimirs", "box", "singular",
                                             "tolerances", "topology", "declarations", "pipeline"};
    for (const auto& s : sections) {
        if (!known.count(s.name)) rd.fail(s.line, "unknown section [" + s.name + "]");
        by_name[s.name] = &s;
    }
    auto section = [&](const std::string& name) -> const std::vector<Entry>& {
        static const std::vector<Entry> none;
        auto it = by_name.find(name);
        return it == by_name.end() ? none : it->second->entries;
    };
    auto unknown_key = [&](const Entry& e, const std::string& sec) {
        rd.fail(e.line, "unknown key '" + e.key + "' in [" + sec + "]");
    };

    SystemSpec spec;
    spec.path = label;
    spec.hash = fnv1a64(text);

    if (!by_name.count("system")) rd.fail(1, "missing [system] section");
    std::optional<std::pair<std::size_t, std::size_t>> declared_dim;
    std::size_t coords_line = by_name["system"]->line;
    for (const auto& e : section("system")) {
        if (e.key == "name") spec.name = rd.str(e);
        else if (e.key == "coords") {
            spec.coords = rd.strings(e);
            coords_line = e.line;
        } else if (e.key == "dim") declared_dim = {rd.count(e), e.line};
        else if (e.key == "seed") spec.seed = rd.count(e);
        else if (e.key == "samples") spec.samples = rd.count(e);
        else if (e.key == "mode") {
            const std::string m = rd.str(e);
            if (m == "auto") spec.mode = SpecMode::Auto;
            else if (m == "complete") spec.mode = SpecMode::Complete;
            else if (m == "partial") spec.mode = SpecMode::Partial;
            else if (m == "noncommutative") spec.mode = SpecMode::Noncommutative;
            else rd.fail(e.line, "mode must be auto, complete, partial or noncommutative");
        } else unknown_key(e, "system");
    }
    const std::size_t dim = spec.coords.size();
    if (dim < 2 || dim % 2) rd.fail(coords_line, "coords must list an even number (>= 2) of names");
    if (declared_dim && declared_dim->first != dim)
        rd.fail(declared_dim->second, "dim = " + std::to_string(declared_dim->first) + " but " +
                                          std::to_string(dim) + " coords are listed");
    std::set<std::string> seen;
    for (const auto& c : spec.coords) {
        if (!is_identifier(c)) rd.fail(coords_line, "bad coordinate name '" + c + "'");
        if (!seen.insert(c).second) rd.fail(coords_line, "duplicate coordinate '" + c + "'");
    }
    spec.n = dim / 2;
    if (spec.samples == 0) rd.fail(coords_line, "samples must be positive");

    for (const auto& e : section("functions")) {
        if (!is_identifier(e.key)) rd.fail(e.line, "bad function name '" + e.key + "'");
        spec.functions.push_back({e.key, rd.str(e)});
        spec.F.push_back(rd.expression(e, spec.coords));
    }
    if (spec.F.empty()) rd.fail(by_name["system"]->line, "no functions declared");
    if (spec.F.size() > dim) rd.fail(section("functions").back().line, "more functions than coordinates");

    const auto names = spec.function_names();
    auto function_index = [&](const std::string& name, std::size_t line) {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return i;
        rd.fail(line, "unknown function '" + name + "'");
    };
    for (const auto& e : section("closure")) {
        if (e.key.size() < 2 || e.key.front() != '{' || e.key.back() != '}')
            rd.fail(e.line, "closure keys have the form {A, B}");
        const std::string inner = e.key.substr(1, e.key.size() - 2);
        const auto comma = inner.find(',');
        if (comma == std::string::npos) rd.fail(e.line, "closure keys have the form {A, B}");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto en = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, en - b + 1);
        };
        const std::size_t a = function_index(trim(inner.substr(0, comma)), e.line);
        const std::size_t b = function_index(trim(inner.substr(comma + 1)), e.line);
        if (a == b) rd.fail(e.line, "closure entry {A, A} is identically zero");
        rd.expression(e, names);
        spec.closure.push_back({a, b, rd.str(e)});
    }
    for (const auto& e : section("casimirs")) {
        spec.casimirs.push_back({e.key, rd.str(e)});
        spec.C.push_back(rd.expression(e, names));
    }

    spec.box.lo = Vec::Zero(static_cast<Eigen::Index>(dim));
    spec.box.hi = Vec::Zero(static_cast<Eigen::Index>(dim));
    std::vector<bool> have(dim, false);
    for (const auto& e : section("box")) {
        std::size_t i = dim;
        for (std::size_t c = 0; c < dim; ++c)
            if (spec.coords[c] == e.key) i = c;
        if (i == dim) rd.fail(e.line, "box entry for unknown coordinate '" + e.key + "'");
        const auto iv = rd.numbers(e);
        if (iv.size() != 2 || !(iv[0] < iv[1])) rd.fail(e.line, "box interval must be [lo, hi] with lo < hi");
        spec.box.lo[static_cast<Eigen::Index>(i)] = iv[0];
        spec.box.hi[static_cast<Eigen::Index>(i)] = iv[1];
        have[i] = true;
    }
    for (std::size_t c = 0; c < dim; ++c)
        if (!have[c]) rd.fail(by_name.count("box") ? by_name["box"]->line : coords_line,
                              "sample box has no interval for '" + spec.coords[c] + "'");

    for (const auto& e : section("singular")) spec.singular.push_back(rd.expression(e, spec.coords));

    for (const auto& e : section("tolerances")) {
        const double v = rd.num(e);
        if (!(v > 0)) rd.fail(e.line, "tolerances must be positive");
        if (e.key == "involution") spec.tol.involution = v;
        else if (e.key == "closure") spec.tol.closure = v;
        else if (e.key == "lattice") spec.tol.lattice = v;
        else if (e.key == "darboux") spec.tol.darboux = v;
        else if (e.key == "casimir") spec.tol.casimir = v;
        else if (e.key == "connection") spec.tol.connection = v;
        else unknown_key(e, "tolerances");
    }

    for (const auto& e : section("topology")) {
        if (e.key == "simply_connected") spec.topology.simply_connected = rd.tri(e);
        else if (e.key == "H2_zero") spec.topology.H2_zero = rd.tri(e);
        else if (e.key == "pi2_zero") spec.topology.pi2_zero = rd.tri(e);
        else if (e.key == "base") spec.topology.base = rd.str(e);
        else if (e.key == "derived") {
            if (rd.str(e) != "box") rd.fail(e.line, "only derived = \"box\" is supported");
            auto base = spec.topology.base;
            spec.topology = bundleclass::TopologyDecl::box(base);
        } else unknown_key(e, "topology");
    }

    for (const auto& e : section("declarations")) {
        if (e.key == "fibers_connected") spec.fibers_connected = rd.tri(e);
        else unknown_key(e, "declarations");
    }

    auto& pc = spec.pipeline;
    for (const auto& e : section("pipeline")) {
        if (e.key == "base_point") {
            const auto v = rd.numbers(e);
            if (v.size() != dim) rd.fail(e.line, "base_point needs " + std::to_string(dim) + " components");
            pc.base_point = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
        } else if (e.key == "lattice_radius") pc.lattice_radius = rd.num(e);
        else if (e.key == "lattice_step") pc.lattice_step = rd.num(e);
        else if (e.key == "horizon") pc.horizon = rd.num(e);
        else if (e.key == "blowup") pc.blowup = rd.num(e);
        else if (e.key == "probes") pc.probes = rd.count(e);
        else if (e.key == "completeness") pc.completeness = rd.flag(e);
        else if (e.key == "lattice") pc.lattice = rd.flag(e);
        else if (e.key == "action_angle") pc.action_angle = rd.flag(e);
        else if (e.key == "connection") pc.connection = rd.flag(e);
        else if (e.key == "global") pc.global = rd.flag(e);
        else unknown_key(e, "pipeline");
        if ((e.key == "lattice_radius" || e.key == "lattice_step" || e.key == "horizon" || e.key == "blowup") &&
            !(rd.num(e) > 0))
            rd.fail(e.line, "'" + e.key + "' must be positive");
    }
    return spec;
}

SystemSpec load_spec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_spec(buf.str(), path);
}

}  // namespace integ::cli

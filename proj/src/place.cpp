#include "pinaudit/place.hpp"

#include <cctype>

namespace pinaudit::rpil {

bool Place::is_prefix_of(const Place& other) const {
    if (root != other.root || path.size() > other.path.size()) return false;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (path[i] != other.path[i]) return false;
    }
    return true;
}

Place Place::child(Selector s) const {
    Place c = *this;
    c.path.push_back(s);
    return c;
}

bool Place::has_deref() const {
    for (const Selector& s : path) {
        if (s.is_deref()) return true;
    }
    return false;
}

std::string render_variable(const Variable& v) {
    switch (v.space) {
        case VarSpace::program: return "v" + std::to_string(v.index);
        case VarSpace::slot: return "_" + std::to_string(v.index);
        case VarSpace::named: return v.name;
    }
    return {};
}

std::string render_place(const Place& p) {
    std::string out = render_variable(p.root);
    for (const Selector& s : p.path) {
        if (s.is_deref()) {
            out = "(*" + out + ")";
        } else {
            out += "[" + std::to_string(s.v) + "]";
        }
    }
    return out;
}

namespace {

bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

int parse_int(std::string_view digits, std::size_t at) {
    long long value = 0;
    for (char c : digits) {
        value = value * 10 + (c - '0');
        if (value > 1000000000) throw ParseError("index too large", at);
    }
    return static_cast<int>(value);
}

Variable classify_identifier(std::string_view ident, std::size_t at) {
    if (ident.size() >= 2 && ident[0] == 'v' && all_digits(ident.substr(1))) {
        int idx = parse_int(ident.substr(1), at);
        if (idx < 1) throw ParseError("program variable index must be >= 1", at);
        return Variable::program(idx);
    }
    if (ident.size() >= 2 && ident[0] == '_' && all_digits(ident.substr(1))) {
        return Variable::slot(parse_int(ident.substr(1), at));
    }
    return Variable::named(std::string(ident));
}

Place parse_atom(std::string_view text, std::size_t& pos) {
    if (pos >= text.size()) throw ParseError("expected place", pos);
    if (text[pos] == '(') {
        std::size_t open = pos;
        ++pos;
        if (pos >= text.size() || text[pos] != '*') {
            throw ParseError("expected '*' after '('", pos);
        }
        ++pos;
        Place inner = parse_place_prefix(text, pos);
        if (pos >= text.size() || text[pos] != ')') {
            throw ParseError("expected ')' to close dereference", open);
        }
        ++pos;
        inner.path.push_back(Selector::deref());
        return inner;
    }
    if (!ident_start(text[pos])) throw ParseError("expected place", pos);
    std::size_t start = pos;
    while (pos < text.size() && ident_char(text[pos])) ++pos;
    return Place::var(classify_identifier(text.substr(start, pos - start), start));
}

}  // namespace

Place parse_place_prefix(std::string_view text, std::size_t& pos) {
    Place p = parse_atom(text, pos);
    while (pos < text.size() && text[pos] == '[') {
        std::size_t open = pos;
        ++pos;
        std::size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
        if (start == pos) throw ParseError("expected index digits", pos);
        int k = parse_int(text.substr(start, pos - start), start);
        if (k < 1) throw ParseError("sub-structure index must be >= 1", start);
        if (pos >= text.size() || text[pos] != ']') {
            throw ParseError("expected ']'", open);
        }
        ++pos;
        p.path.push_back(Selector::index(k));
    }
    return p;
}

Place parse_place(std::string_view text) {
    std::size_t pos = 0;
    Place p = parse_place_prefix(text, pos);
    if (pos != text.size()) {
        throw ParseError("trailing characters after place", pos);
    }
    return p;
}

}  // namespace pinaudit::rpil

#include "pinaudit/typesys.hpp"

#include <algorithm>
#include <cctype>

#include "pinaudit/place.hpp"

namespace pinaudit::typesys {

int term_height(const TypeTerm& t) {
    int h = 0;
    for (const TypeTerm& a : t.args) h = std::max(h, term_height(a));
    return h + 1;
}

bool contains_var(const TypeTerm& t, int var) {
    if (t.kind == TypeTerm::Kind::var) return t.var == var;
    for (const TypeTerm& a : t.args) {
        if (contains_var(a, var)) return true;
    }
    return false;
}

void collect_vars(const TypeTerm& t, std::vector<int>& out) {
    if (t.kind == TypeTerm::Kind::var) {
        if (std::find(out.begin(), out.end(), t.var) == out.end()) {
            out.push_back(t.var);
        }
        return;
    }
    for (const TypeTerm& a : t.args) collect_vars(a, out);
}

namespace {

// Quantified ids render as letters starting at T; reparsing assigns the same
// ids back because letters are scoped in first-occurrence order.
const char* const kVarLetters = "TUVWXYZABCDEFGHIJKLMNOPQRS";

}  // namespace

std::string render_type(const TypeTerm& t) {
    switch (t.kind) {
        case TypeTerm::Kind::var: {
            std::string s(1, kVarLetters[t.var % 26]);
            if (t.var >= 26) s += std::to_string(t.var / 26);
            return s;
        }
        case TypeTerm::Kind::unit:
            return "()";
        case TypeTerm::Kind::ref:
            return (t.ref_mut ? "&mut " : "&") + render_type(t.args[0]);
        case TypeTerm::Kind::named: {
            std::string s = t.head;
            if (!t.args.empty()) {
                s += "<";
                for (std::size_t i = 0; i < t.args.size(); ++i) {
                    if (i) s += ", ";
                    s += render_type(t.args[i]);
                }
                s += ">";
            }
            return s;
        }
    }
    return {};
}

const TypeTerm* Substitution::lookup(int var) const {
    for (const auto& [v, term] : map_) {
        if (v == var) return &term;
    }
    return nullptr;
}

bool Substitution::bind(int var, const TypeTerm& term) {
    if (term.kind == TypeTerm::Kind::var && term.var == var) return true;
    if (contains_var(term, var)) return false;
    map_.emplace_back(var, term);
    return true;
}

TypeTerm Substitution::apply(const TypeTerm& t) const {
    if (t.kind == TypeTerm::Kind::var) {
        if (const TypeTerm* bound = lookup(t.var)) return apply(*bound);
        return t;
    }
    TypeTerm out = t;
    for (TypeTerm& a : out.args) a = apply(a);
    return out;
}

bool unify(const TypeTerm& a0, const TypeTerm& b0, Substitution& subst) {
    TypeTerm a = subst.apply(a0);
    TypeTerm b = subst.apply(b0);
    if (a.kind == TypeTerm::Kind::var) {
        if (b.kind == TypeTerm::Kind::var && a.var == b.var) return true;
        return subst.bind(a.var, b);
    }
    if (b.kind == TypeTerm::Kind::var) return subst.bind(b.var, a);
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case TypeTerm::Kind::unit:
            return true;
        case TypeTerm::Kind::ref:
            return a.ref_mut == b.ref_mut && unify(a.args[0], b.args[0], subst);
        case TypeTerm::Kind::named: {
            if (a.head != b.head || a.args.size() != b.args.size()) return false;
            for (std::size_t i = 0; i < a.args.size(); ++i) {
                if (!unify(a.args[i], b.args[i], subst)) return false;
            }
            return true;
        }
        case TypeTerm::Kind::var:
            break;  // handled above
    }
    return false;
}

namespace {

TypeTerm rename_vars(const TypeTerm& t, int base) {
    if (t.kind == TypeTerm::Kind::var) return TypeTerm::make_var(base + t.var);
    TypeTerm out = t;
    for (TypeTerm& a : out.args) a = rename_vars(a, base);
    return out;
}

}  // namespace

Instantiated instantiate(const TypeScheme& scheme, int& next_var) {
    int base = next_var;
    next_var += scheme.num_vars;
    Instantiated inst;
    inst.params.reserve(scheme.params.size());
    for (const TypeTerm& p : scheme.params) inst.params.push_back(rename_vars(p, base));
    inst.ret = rename_vars(scheme.ret, base);
    return inst;
}

std::optional<ApplyResult> apply_signature(const TypeScheme& scheme,
                                           const std::vector<TypeTerm>& args,
                                           int& next_var) {
    if (scheme.params.size() != args.size()) return std::nullopt;
    int saved = next_var;
    Instantiated inst = instantiate(scheme, next_var);
    Substitution subst;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (!unify(inst.params[i], args[i], subst)) {
            next_var = saved;
            return std::nullopt;
        }
    }
    return ApplyResult{subst.apply(inst.ret), std::move(subst)};
}

int LetterScope::lookup_or_add(char letter) {
    for (const auto& [c, id] : map) {
        if (c == letter) return id;
    }
    int id = static_cast<int>(map.size());
    map.emplace_back(letter, id);
    return id;
}

namespace {

void skip_spaces(std::string_view text, std::size_t& pos) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
}

bool head_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':';
}

}  // namespace

TypeTerm parse_type_prefix(std::string_view text, std::size_t& pos, LetterScope& scope) {
    skip_spaces(text, pos);
    if (pos >= text.size()) throw ParseError("expected type", pos);
    char c = text[pos];
    if (c == '(') {
        ++pos;
        skip_spaces(text, pos);
        if (pos >= text.size() || text[pos] != ')') {
            throw ParseError("expected ')' in unit type", pos);
        }
        ++pos;
        return TypeTerm::unit();
    }
    if (c == '&') {
        ++pos;
        skip_spaces(text, pos);
        bool is_mut = false;
        if (text.compare(pos, 3, "mut") == 0 &&
            (pos + 3 >= text.size() || !head_char(text[pos + 3]))) {
            is_mut = true;
            pos += 3;
        }
        return TypeTerm::make_ref(is_mut, parse_type_prefix(text, pos, scope));
    }
    if (!std::isalpha(static_cast<unsigned char>(c)) && c != '_') {
        throw ParseError("expected type", pos);
    }
    std::size_t start = pos;
    while (pos < text.size() && head_char(text[pos])) ++pos;
    std::string_view ident = text.substr(start, pos - start);
    if (ident.size() == 1 && std::isupper(static_cast<unsigned char>(ident[0]))) {
        return TypeTerm::make_var(scope.lookup_or_add(ident[0]));
    }
    std::vector<TypeTerm> args;
    skip_spaces(text, pos);
    if (pos < text.size() && text[pos] == '<') {
        ++pos;
        while (true) {
            args.push_back(parse_type_prefix(text, pos, scope));
            skip_spaces(text, pos);
            if (pos >= text.size()) throw ParseError("unterminated type arguments", pos);
            if (text[pos] == ',') {
                ++pos;
                continue;
            }
            if (text[pos] == '>') {
                ++pos;
                break;
            }
            throw ParseError("expected ',' or '>' in type arguments", pos);
        }
    }
    return TypeTerm::make_named(std::string(ident), std::move(args));
}

TypeTerm parse_type(std::string_view text) {
    LetterScope scope;
    std::size_t pos = 0;
    TypeTerm t = parse_type_prefix(text, pos, scope);
    skip_spaces(text, pos);
    if (pos != text.size()) throw ParseError("trailing characters after type", pos);
    return t;
}

}  // namespace pinaudit::typesys

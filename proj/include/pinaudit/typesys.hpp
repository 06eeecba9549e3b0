#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pinaudit::typesys {

// Semantic type terms: type variables (integer ids), nominal heads with
// parameters, references with mutability, and unit.
struct TypeTerm {
    enum class Kind { var, named, ref, unit };

    Kind kind = Kind::unit;
    int var = 0;
    std::string head;
    bool ref_mut = false;
    std::vector<TypeTerm> args;  // named: type parameters; ref: exactly one

    static TypeTerm make_var(int id) {
        TypeTerm t;
        t.kind = Kind::var;
        t.var = id;
        return t;
    }
    static TypeTerm make_named(std::string head, std::vector<TypeTerm> args = {}) {
        TypeTerm t;
        t.kind = Kind::named;
        t.head = std::move(head);
        t.args = std::move(args);
        return t;
    }
    static TypeTerm make_ref(bool is_mut, TypeTerm inner) {
        TypeTerm t;
        t.kind = Kind::ref;
        t.ref_mut = is_mut;
        t.args.push_back(std::move(inner));
        return t;
    }
    static TypeTerm unit() { return TypeTerm{}; }

    bool operator==(const TypeTerm&) const = default;
};

// Height of the term tree; a leaf (var, unit, parameterless head) is 1.
int term_height(const TypeTerm& t);
bool contains_var(const TypeTerm& t, int var);
void collect_vars(const TypeTerm& t, std::vector<int>& out);

std::string render_type(const TypeTerm& t);

// Triangular substitution; bindings are acyclic by construction (bind
// rejects occurs-check failures), so apply terminates.
class Substitution {
public:
    // term must already have this substitution applied. Returns false on
    // occurs-check failure.
    bool bind(int var, const TypeTerm& term);
    TypeTerm apply(const TypeTerm& t) const;
    bool empty() const { return map_.empty(); }
    const std::vector<std::pair<int, TypeTerm>>& entries() const { return map_; }

private:
    const TypeTerm* lookup(int var) const;

    std::vector<std::pair<int, TypeTerm>> map_;
};

// Extends subst so that subst(a) == subst(b). Returns false on clash or
// occurs-check failure; subst may then be partially extended, so callers
// discard it on failure.
bool unify(const TypeTerm& a, const TypeTerm& b, Substitution& subst);

// Parametric signature: quantified variables have ids 0..num_vars-1.
struct TypeScheme {
    int num_vars = 0;
    std::vector<TypeTerm> params;
    TypeTerm ret;

    bool operator==(const TypeScheme&) const = default;
};

struct Instantiated {
    std::vector<TypeTerm> params;
    TypeTerm ret;
};

// Renames the quantified vars to fresh ids drawn from next_var; two
// instantiations never share variable ids.
Instantiated instantiate(const TypeScheme& scheme, int& next_var);

struct ApplyResult {
    TypeTerm ret;
    Substitution subst;
};

// Call typing: instantiates the scheme, unifies each parameter with the
// corresponding argument type, and returns the substituted return type plus
// the substitution (callers propagate it into stored variable types).
// nullopt on arity mismatch or unification failure.
std::optional<ApplyResult> apply_signature(const TypeScheme& scheme,
                                           const std::vector<TypeTerm>& args,
                                           int& next_var);

// Maps single uppercase letters to quantified var ids, scoped to one scheme.
struct LetterScope {
    std::vector<std::pair<char, int>> map;

    int lookup_or_add(char letter);
};

// Type syntax used by database files: a single uppercase letter is a
// variable, `&T` / `&mut T` are references, `Head<A, B>` is nominal, `()` is
// unit. Parses a prefix starting at pos and advances it.
TypeTerm parse_type_prefix(std::string_view text, std::size_t& pos, LetterScope& scope);

// Whole-string parse with a fresh letter scope; trailing text is an error.
TypeTerm parse_type(std::string_view text);

}  // namespace pinaudit::typesys

#include <doctest.h>

#include <map>
#include <random>
#include <vector>

#include "pinaudit/place.hpp"
#include "pinaudit/typesys.hpp"

using namespace pinaudit;
using namespace pinaudit::typesys;

namespace {

// One-sided matching: binds pattern variables consistently; used to check
// that a claimed unifier is at least as general as a known common instance.
bool matches(const TypeTerm& pat, const TypeTerm& t,
             std::map<int, TypeTerm>& binding) {
    if (pat.kind == TypeTerm::Kind::var) {
        auto [it, inserted] = binding.emplace(pat.var, t);
        return inserted || it->second == t;
    }
    if (pat.kind != t.kind) return false;
    if (pat.kind == TypeTerm::Kind::named && pat.head != t.head) return false;
    if (pat.kind == TypeTerm::Kind::ref && pat.ref_mut != t.ref_mut)
        return false;
    if (pat.args.size() != t.args.size()) return false;
    for (std::size_t i = 0; i < pat.args.size(); ++i)
        if (!matches(pat.args[i], t.args[i], binding)) return false;
    return true;
}

TypeTerm random_term(std::mt19937& rng, int depth) {
    auto pick = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    int roll = depth >= 2 ? pick(0, 1) : pick(0, 3);
    switch (roll) {
    case 0: return TypeTerm::make_var(pick(0, 3));
    case 1: return pick(0, 1) ? TypeTerm::unit()
                              : TypeTerm::make_named("Leaf");
    case 2: return TypeTerm::make_ref(pick(0, 1) == 1,
                                      random_term(rng, depth + 1));
    default: {
        std::vector<TypeTerm> args;
        int n = pick(0, 2);
        for (int i = 0; i < n; ++i) args.push_back(random_term(rng, depth + 1));
        return TypeTerm::make_named(n ? "Pair" : "Leaf", std::move(args));
    }
    }
}

TypeTerm random_ground(std::mt19937& rng, int depth) {
    auto pick = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    if (depth >= 2 || pick(0, 1) == 0)
        return pick(0, 1) ? TypeTerm::unit() : TypeTerm::make_named("Leaf");
    if (pick(0, 1))
        return TypeTerm::make_ref(pick(0, 1) == 1, random_ground(rng, depth + 1));
    return TypeTerm::make_named("Pair", {random_ground(rng, depth + 1),
                                         random_ground(rng, depth + 1)});
}

}  // namespace

TEST_CASE("type syntax round trips") {
    for (const char* text :
         {"T", "()", "&T", "&mut T", "Pin<&mut T>", "io::Result<T>",
          "Pair<Alpha, Beta>", "&mut Pin<Box<T>>", "u64"}) {
        CHECK(render_type(parse_type(text)) == text);
    }
}

TEST_CASE("type syntax structure") {
    TypeTerm t = parse_type("Pin<&mut T>");
    REQUIRE(t.kind == TypeTerm::Kind::named);
    CHECK(t.head == "Pin");
    REQUIRE(t.args.size() == 1);
    CHECK(t.args[0].kind == TypeTerm::Kind::ref);
    CHECK(t.args[0].ref_mut);
    CHECK(t.args[0].args[0].kind == TypeTerm::Kind::var);

    CHECK(parse_type("()").kind == TypeTerm::Kind::unit);
    CHECK(parse_type("u64").kind == TypeTerm::Kind::named);

    // The same letter names the same variable within one scope.
    LetterScope scope;
    std::size_t pos = 0;
    TypeTerm a = parse_type_prefix("T", pos, scope);
    pos = 0;
    TypeTerm b = parse_type_prefix("&T", pos, scope);
    CHECK(a == b.args[0]);

    CHECK_THROWS_AS(parse_type("Pin<"), ParseError);
    CHECK_THROWS_AS(parse_type("T junk"), ParseError);
}

TEST_CASE("term height counts the deepest spine") {
    CHECK(term_height(parse_type("()")) == 1);
    CHECK(term_height(parse_type("Alpha")) == 1);
    CHECK(term_height(parse_type("&Alpha")) == 2);
    CHECK(term_height(parse_type("Pin<&mut T>")) == 3);
}

TEST_CASE("unification agrees with a common-instance oracle") {
    std::mt19937 rng(20240817);
    int unified = 0;
    for (int round = 0; round < 2000; ++round) {
        TypeTerm a = random_term(rng, 0);
        TypeTerm b = random_term(rng, 0);
        Substitution s;
        bool ok = unify(a, b, s);
        if (ok) {
            ++unified;
            CHECK(s.apply(a) == s.apply(b));
        }
        // A random ground valuation that equates a and b witnesses a common
        // instance; unify must then succeed with a result at least as
        // general as the witness.
        Substitution ground;
        for (int v = 0; v < 4; ++v) ground.bind(v, random_ground(rng, 0));
        if (ground.apply(a) == ground.apply(b)) {
            REQUIRE(ok);
            std::map<int, TypeTerm> binding;
            CHECK(matches(s.apply(a), ground.apply(a), binding));
        }
    }
    CHECK(unified > 100);  // the generator must exercise the success path
}

TEST_CASE("substitution application is idempotent") {
    std::mt19937 rng(7);
    for (int round = 0; round < 500; ++round) {
        TypeTerm a = random_term(rng, 0);
        TypeTerm b = random_term(rng, 0);
        Substitution s;
        if (!unify(a, b, s)) continue;
        TypeTerm once = s.apply(a);
        CHECK(s.apply(once) == once);
    }
}

TEST_CASE("occurs check rejects infinite types") {
    TypeTerm x = TypeTerm::make_var(0);
    TypeTerm fx = TypeTerm::make_named("Wrap", {x});
    Substitution s;
    CHECK_FALSE(unify(x, fx, s));
}

TEST_CASE("instantiation always draws fresh variables") {
    TypeScheme scheme;
    scheme.num_vars = 2;
    scheme.params = {TypeTerm::make_var(0),
                     TypeTerm::make_named("Pin", {TypeTerm::make_var(1)})};
    scheme.ret = TypeTerm::make_var(0);
    int next = 10;
    Instantiated one = instantiate(scheme, next);
    Instantiated two = instantiate(scheme, next);
    CHECK(next == 14);
    std::vector<int> va, vb;
    for (const TypeTerm& t : one.params) collect_vars(t, va);
    for (const TypeTerm& t : two.params) collect_vars(t, vb);
    for (int v : va)
        CHECK(std::find(vb.begin(), vb.end(), v) == vb.end());
    // Sharing inside one instantiation is preserved.
    CHECK(one.ret == one.params[0]);
}

TEST_CASE("signature application types calls") {
    TypeScheme scheme;  // (T) -> &mut T
    scheme.num_vars = 1;
    scheme.params = {TypeTerm::make_var(0)};
    scheme.ret = TypeTerm::make_ref(true, TypeTerm::make_var(0));
    int next = 0;
    auto r = apply_signature(scheme, {parse_type("Alpha")}, next);
    REQUIRE(r.has_value());
    CHECK(render_type(r->ret) == "&mut Alpha");

    int before = next;
    CHECK_FALSE(apply_signature(scheme, {}, next).has_value());  // arity
    CHECK(next == before);  // failed applications restore the counter

    TypeScheme refs;  // (&T) -> ()
    refs.num_vars = 1;
    refs.params = {TypeTerm::make_ref(false, TypeTerm::make_var(0))};
    refs.ret = TypeTerm::unit();
    CHECK_FALSE(apply_signature(refs, {parse_type("&mut Alpha")}, next)
                    .has_value());  // mutability is part of the type
    CHECK(apply_signature(refs, {parse_type("&Alpha")}, next).has_value());
}

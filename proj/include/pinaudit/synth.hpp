#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pinaudit/interp.hpp"
#include "pinaudit/rpil.hpp"

namespace pinaudit::synth {

// What the search wants the final context to contain.
struct Goal {
    enum class Kind { violation, borrows };
    // For violation goals: which terminal state counts as a hit.
    enum class Which { moved, forgotten, any };

    Kind kind = Kind::violation;
    Which which = Which::any;
    rpil::Place r;  // borrows: the reference place
    rpil::Place p;  // borrows: the borrowed place

    static Goal violation(Which w) {
        Goal g;
        g.kind = Kind::violation;
        g.which = w;
        return g;
    }
    static Goal borrows(rpil::Place r, rpil::Place p) {
        Goal g;
        g.kind = Kind::borrows;
        g.r = std::move(r);
        g.p = std::move(p);
        return g;
    }
};

bool goal_satisfied(const interp::Context& ctx, const Goal& goal);

// The place the goal holds of: first violating entry, or the borrowed place
// in canonical spelling. nullopt when the goal is not satisfied.
std::optional<std::string> goal_witness(const interp::Context& ctx, const Goal& goal);

// eager re-executes the whole candidate from scratch on every extension and
// keeps full liveness bookkeeping throughout. lazy_liveness extends with
// relaxed execution and re-interprets only goal-satisfying leaves in full
// mode; both produce identical solution sets.
enum class Strategy { eager, lazy_liveness };

struct SynthBudget {
    double wall_seconds = 36000;        // 10h
    long long max_stubs = 1000000000;   // partial candidates expanded
    bool use_goal_distance = false;     // admissible remaining-length pruning
};

// One statement extending ctx, paired with the successor context, for every
// candidate that passes the mode's rule checks. Deterministic order: db file
// order, then argument tuples ascending, then variant index.
std::vector<std::pair<interp::Statement, interp::Context>> enumerate_statements(
    const interp::Context& ctx, const rpil::FunctionDb& db,
    const interp::Options& opt, interp::Mode mode);

struct Solution {
    interp::Program program;
    std::string witness;
};

struct PerLength {
    int len = 0;
    long long stubs = 0;  // candidates of exactly this length expanded
    int solutions = 0;
    double wall_ms = 0;
};

struct SynthesisReport {
    std::optional<Solution> found;
    int length_reached = 0;  // deepest fully explored length
    long long stubs_explored = 0;
    double wall_ms = 0;
    bool budget_exhausted = false;
    Strategy strategy = Strategy::eager;
    std::vector<PerLength> per_length;
};

// Iterative deepening over lengths 1..max_len; returns the first hit in
// enumeration order at the smallest satisfiable length. Shorter lengths are
// exhausted first, so a hit is minimal.
SynthesisReport synthesize(const rpil::FunctionDb& db, const Goal& goal, int max_len,
                           Strategy strategy, const SynthBudget& budget = {},
                           const interp::Options& opt = {});

struct AllSolutionsReport {
    std::vector<Solution> solutions;
    long long stubs_explored = 0;
    double wall_ms = 0;
    bool budget_exhausted = false;
};

// Every satisfying program of exactly the given length, enumeration order.
AllSolutionsReport all_solutions(const rpil::FunctionDb& db, const Goal& goal,
                                 int len, Strategy strategy,
                                 const SynthBudget& budget = {},
                                 const interp::Options& opt = {});

enum class EmitStyle { pseudocode, annotated };

// pseudocode: `let mut vN = fn(args);` lines. annotated appends each line's
// substituted instructions as a `// BORROW(v2, v1);` comment (`// ;` when
// the variant is empty).
std::string emit_program(const interp::Program& prog, const rpil::FunctionDb& db,
                         EmitStyle style);

}  // namespace pinaudit::synth

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pinaudit/place.hpp"
#include "pinaudit/rpil.hpp"
#include "pinaudit/typesys.hpp"

namespace pinaudit::interp {

// Value states. pinned_moved and pinned_forgotten are the two pin-violating
// states; both are terminal.
enum class ValueState { initial, pinned, forgotten, pinned_moved, pinned_forgotten };

const char* state_name(ValueState s);
bool is_violating(ValueState s);

// True for the legal transitions of the value state machine (staying put is
// always legal): initial->pinned, initial->forgotten, pinned->pinned_moved,
// pinned->pinned_forgotten.
bool is_transition_allowed(ValueState from, ValueState to);

// Reflexive-transitive closure of is_transition_allowed. One statement can
// step a value several times (its body runs one instruction at a time), so
// anything sampling per-statement snapshots checks against the closure.
bool is_transition_reachable(ValueState from, ValueState to);

struct Options {
    int max_place_depth = 4;  // selectors per place reachable at runtime
    int max_type_height = 5;  // term height cap for inferred variable types
};

// Relaxed mode skips the argument-aliveness gate: statements may use dead
// variables. Consumption and edge retraction still run, so relaxed and full
// execution agree line by line on any program full mode accepts; complete
// candidates are re-interpreted in full mode before being accepted.
enum class Mode { full, relaxed };

struct VarInfo {
    typesys::TypeTerm type;
    bool alive = true;
    int died_at = 0;  // line that consumed the variable, 0 while alive

    bool operator==(const VarInfo&) const = default;
};

struct Edge {
    rpil::Place src;
    rpil::Place dst;
    int born = 0;  // line whose call introduced the edge

    // born is retraction bookkeeping; identity is the two endpoints.
    bool operator==(const Edge& other) const {
        return src == other.src && dst == other.dst;
    }
};

struct StateEntry {
    rpil::Place place;
    ValueState state = ValueState::initial;

    bool operator==(const StateEntry&) const = default;
};

// Prefix rewrite recorded by BIND: places spelled from.* are canonically
// spelled to.*. Targets are canonical at insertion time.
struct AliasEntry {
    rpil::Place from;
    rpil::Place to;

    bool operator==(const AliasEntry&) const = default;
};

// The per-line program context: variable types and liveness, the reference
// edge graph, and the value state map. Edges and states are stored in
// canonical spelling and in insertion order; rendering preserves that order.
struct Context {
    std::vector<VarInfo> vars;  // vars[i] describes v_{i+1}
    std::vector<Edge> edges;
    std::vector<StateEntry> states;
    std::vector<AliasEntry> aliases;
    int next_type_var = 0;

    int var_count() const { return static_cast<int>(vars.size()); }
    bool defined(int var_index) const {
        return var_index >= 1 && var_index <= var_count();
    }
    bool alive(int var_index) const {
        return defined(var_index) && vars[static_cast<std::size_t>(var_index - 1)].alive;
    }

    bool operator==(const Context&) const = default;
};

// Applies the alias rewrites in insertion order until a fixpoint. The loop
// is step-bounded; execution rejects alias sets that would exceed the bound,
// so queries on executed contexts always converge.
rpil::Place canonical_place(const Context& ctx, rpil::Place p);

// Canonical-form queries.
bool has_edge(const Context& ctx, const rpil::Place& r, const rpil::Place& p);
ValueState state_of(const Context& ctx, const rpil::Place& p);  // absent = initial

// Entries whose state is pinned_moved or pinned_forgotten, insertion order.
std::vector<StateEntry> violations(const Context& ctx);

// One canonical program line: v<ret> = fn#<variant>(v<args>...).
struct Statement {
    int ret = 0;
    std::string fn;
    std::vector<int> args;
    int variant = 0;

    bool operator==(const Statement&) const = default;
};

using Program = std::vector<Statement>;

std::string render_statement(const Statement& stmt);

// One statement per line, `vN = fn(v1, v2)` with an optional `#k` variant
// suffix on the function name. Accepts `let`/`let mut` prefixes, trailing
// `;` or `,`, blank lines, and `//` comments.
Program parse_program(std::string_view text);

struct ExecStatus {
    bool ok = true;
    std::string error;

    static ExecStatus failure(std::string msg) { return {false, std::move(msg)}; }
};

// Executes one statement in place. Order: retire edges invalidated by
// earlier consumptions; type and validate the call; bind the fresh variable;
// run the variant's instructions; mark consumed arguments dead. An edge is
// retired when its source root is dead, or when its target root is dead and
// the edge predates the consumption: the consuming call's own instructions
// (and later lines resolving through them) describe where the value moved,
// so those edges outlive the argument, while references taken out beforehand
// do not. On failure the context is partially modified and must be discarded.
ExecStatus exec_statement(Context& ctx, const Statement& stmt,
                          const rpil::FunctionDb& db, const Options& opt,
                          Mode mode = Mode::full);

class ExecError : public std::runtime_error {
public:
    ExecError(int line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg),
          line_(line) {}

    int line() const { return line_; }

private:
    int line_;
};

// Context snapshots after each line; snapshot i still shows edges retired
// by line i+1's own consumptions (retraction is deferred by one line, so
// each snapshot shows what that line saw).
using Trace = std::vector<Context>;

Trace interpret(const Program& prog, const rpil::FunctionDb& db,
                const Options& opt = {});  // throws ExecError

std::string render_context(const Context& ctx);  // { v2->v1, v1:pinned }
std::string render_trace(const Trace& trace);    // "line N: { ... }" lines

}  // namespace pinaudit::interp

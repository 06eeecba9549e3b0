#include "pinaudit/synth.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <optional>

#include "pinaudit/goal_distance.hpp"

namespace pinaudit::synth {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

bool state_matches(interp::ValueState s, Goal::Which which) {
    switch (which) {
        case Goal::Which::moved: return s == interp::ValueState::pinned_moved;
        case Goal::Which::forgotten: return s == interp::ValueState::pinned_forgotten;
        case Goal::Which::any: return interp::is_violating(s);
    }
    return false;
}

}  // namespace

bool goal_satisfied(const interp::Context& ctx, const Goal& goal) {
    if (goal.kind == Goal::Kind::borrows) {
        return interp::has_edge(ctx, goal.r, goal.p);
    }
    for (const interp::StateEntry& entry : ctx.states) {
        if (state_matches(entry.state, goal.which)) return true;
    }
    return false;
}

std::optional<std::string> goal_witness(const interp::Context& ctx, const Goal& goal) {
    if (goal.kind == Goal::Kind::borrows) {
        if (!interp::has_edge(ctx, goal.r, goal.p)) return std::nullopt;
        return rpil::render_place(interp::canonical_place(ctx, goal.p));
    }
    for (const interp::StateEntry& entry : ctx.states) {
        if (state_matches(entry.state, goal.which)) {
            return rpil::render_place(entry.place);
        }
    }
    return std::nullopt;
}

namespace {

// Core enumeration: db file order, then argument tuples ascending, then
// variant index. Argument positions are pre-screened by unification against
// the instantiated parameter types (exactly the check exec_statement
// repeats), so mistyped tuples cost no context copy. The sink returns false
// to stop early.
void enumerate_into(const interp::Context& ctx, const rpil::FunctionDb& db,
                    const interp::Options& opt, interp::Mode mode,
                    const std::vector<char>* fn_allowed,
                    const std::function<bool(interp::Statement, interp::Context)>& sink) {
    std::vector<int> pool;
    for (int i = 1; i <= ctx.var_count(); ++i) {
        if (mode == interp::Mode::relaxed || ctx.alive(i)) pool.push_back(i);
    }
    for (std::size_t fi = 0; fi < db.fns.size(); ++fi) {
        if (fn_allowed && !(*fn_allowed)[fi]) continue;
        const rpil::FunctionSpec& fn = db.fns[fi];
        int probe_var = ctx.next_type_var;
        typesys::Instantiated inst = typesys::instantiate(fn.scheme, probe_var);
        int arity = fn.arity();
        std::vector<int> argv(static_cast<std::size_t>(arity));
        auto rec = [&](auto&& self, int k, const typesys::Substitution& acc) -> bool {
            if (k == arity) {
                for (std::size_t v = 0; v < fn.variants.size(); ++v) {
                    interp::Statement stmt{ctx.var_count() + 1, fn.name, argv,
                                           static_cast<int>(v)};
                    interp::Context child = ctx;
                    if (!interp::exec_statement(child, stmt, db, opt, mode).ok) continue;
                    if (!sink(std::move(stmt), std::move(child))) return false;
                }
                return true;
            }
            for (int a : pool) {
                typesys::Substitution next = acc;
                if (!typesys::unify(inst.params[static_cast<std::size_t>(k)],
                                    ctx.vars[static_cast<std::size_t>(a - 1)].type, next)) {
                    continue;
                }
                argv[static_cast<std::size_t>(k)] = a;
                if (!self(self, k + 1, next)) return false;
            }
            return true;
        };
        if (!rec(rec, 0, typesys::Substitution{})) return;
    }
}

// Only functions that can complete the goal on the final line: a violation
// needs a DEREF-MOVE or FORGET, a fresh borrow edge needs a BORROW, and a
// BIND can respell a place so that an existing edge matches the query.
std::vector<char> final_step_filter(const rpil::FunctionDb& db, const Goal& goal) {
    std::vector<char> out(db.fns.size(), 0);
    for (std::size_t i = 0; i < db.fns.size(); ++i) {
        bool mv = false, fg = false, edge = false;
        for (const rpil::Variant& variant : db.fns[i].variants) {
            for (const rpil::RpilInstruction& instr : variant) {
                mv |= instr.kind == rpil::InstrKind::deref_move;
                fg |= instr.kind == rpil::InstrKind::forget;
                edge |= instr.kind == rpil::InstrKind::borrow ||
                        instr.kind == rpil::InstrKind::bind;
            }
        }
        bool ok = false;
        if (goal.kind == Goal::Kind::borrows) {
            ok = edge;
        } else {
            switch (goal.which) {
                case Goal::Which::moved: ok = mv; break;
                case Goal::Which::forgotten: ok = fg; break;
                case Goal::Which::any: ok = mv || fg; break;
            }
        }
        out[i] = ok ? 1 : 0;
    }
    return out;
}

struct Search {
    const rpil::FunctionDb& db;
    const interp::Options& opt;
    const Goal& goal;
    Strategy strategy;
    const SynthBudget& budget;
    const DistanceOracle* oracle = nullptr;
    Clock::time_point start{};

    int target_len = 0;
    bool all_mode = false;   // collect every hit vs stop at the first
    bool count_all = false;  // count every expansion vs only full-length ones
    const std::vector<char>* final_filter = nullptr;

    long long* stubs_total = nullptr;
    long long stubs_len = 0;
    int solutions_len = 0;
    std::vector<Solution>* solutions = nullptr;

    bool stop = false;
    bool exhausted = false;
    long long work = 0;
    interp::Program prefix{};

    void run() {
        interp::Context empty;
        dfs(empty, 0);
    }

    void dfs(const interp::Context& ctx, int depth) {
        if (stop || exhausted) return;
        if (depth == target_len) {
            leaf(ctx);
            return;
        }
        const std::vector<char>* filter =
            (final_filter && depth + 1 == target_len) ? final_filter : nullptr;
        interp::Mode mode = strategy == Strategy::lazy_liveness ? interp::Mode::relaxed
                                                                : interp::Mode::full;
        enumerate_into(ctx, db, opt, mode, filter,
                       [&](interp::Statement stmt, interp::Context child) {
            ++work;
            if (count_all || depth + 1 == target_len) {
                ++*stubs_total;
                ++stubs_len;
                if (*stubs_total >= budget.max_stubs) {
                    exhausted = true;
                    return false;
                }
            }
            if ((work & 0xFFF) == 0 &&
                ms_between(start, Clock::now()) > budget.wall_seconds * 1000.0) {
                exhausted = true;
                return false;
            }
            if (oracle) {
                int lb = oracle->lower_bound(child, goal);
                if (lb > target_len - (depth + 1)) return true;
            }
            prefix.push_back(std::move(stmt));
            if (strategy == Strategy::eager) {
                // Monolith behavior: every extension re-executes the whole
                // candidate from scratch instead of reusing the prefix
                // context.
                try {
                    interp::Trace t = interp::interpret(prefix, db, opt);
                    child = t.back();
                } catch (const interp::ExecError&) {
                    prefix.pop_back();
                    return true;
                }
            }
            dfs(child, depth + 1);
            prefix.pop_back();
            return !(stop || exhausted);
        });
    }

    void leaf(const interp::Context& ctx) {
        if (!goal_satisfied(ctx, goal)) return;
        interp::Context final_ctx = ctx;
        if (strategy == Strategy::lazy_liveness) {
            // Relaxed execution over-approximates; confirm with a full run.
            try {
                interp::Trace t = interp::interpret(prefix, db, opt);
                final_ctx = t.back();
            } catch (const interp::ExecError&) {
                return;
            }
            if (!goal_satisfied(final_ctx, goal)) return;
        }
        solutions->push_back(Solution{prefix, *goal_witness(final_ctx, goal)});
        ++solutions_len;
        if (!all_mode) stop = true;
    }
};

}  // namespace

std::vector<std::pair<interp::Statement, interp::Context>> enumerate_statements(
    const interp::Context& ctx, const rpil::FunctionDb& db,
    const interp::Options& opt, interp::Mode mode) {
    std::vector<std::pair<interp::Statement, interp::Context>> out;
    enumerate_into(ctx, db, opt, mode, nullptr,
                   [&](interp::Statement stmt, interp::Context child) {
        out.emplace_back(std::move(stmt), std::move(child));
        return true;
    });
    return out;
}

SynthesisReport synthesize(const rpil::FunctionDb& db, const Goal& goal, int max_len,
                           Strategy strategy, const SynthBudget& budget,
                           const interp::Options& opt) {
    SynthesisReport report;
    report.strategy = strategy;
    Clock::time_point start = Clock::now();
    std::optional<DistanceOracle> oracle;
    std::vector<char> filter;
    if (budget.use_goal_distance) {
        oracle.emplace(db, opt);
        filter = final_step_filter(db, goal);
    }
    long long stubs_total = 0;
    for (int n = 1; n <= max_len; ++n) {
        Search search{db, opt, goal, strategy, budget};
        search.oracle = oracle ? &*oracle : nullptr;
        search.start = start;
        search.target_len = n;
        search.final_filter = filter.empty() ? nullptr : &filter;
        search.stubs_total = &stubs_total;
        std::vector<Solution> sols;
        search.solutions = &sols;
        Clock::time_point t0 = Clock::now();
        search.run();
        report.per_length.push_back(
            PerLength{n, search.stubs_len, search.solutions_len,
                      ms_between(t0, Clock::now())});
        if (search.exhausted) {
            report.budget_exhausted = true;
            report.length_reached = n - 1;
            break;
        }
        report.length_reached = n;
        if (!sols.empty()) {
            report.found = std::move(sols.front());
            break;
        }
    }
    report.stubs_explored = stubs_total;
    report.wall_ms = ms_between(start, Clock::now());
    return report;
}

AllSolutionsReport all_solutions(const rpil::FunctionDb& db, const Goal& goal,
                                 int len, Strategy strategy,
                                 const SynthBudget& budget,
                                 const interp::Options& opt) {
    AllSolutionsReport report;
    Clock::time_point start = Clock::now();
    std::optional<DistanceOracle> oracle;
    if (budget.use_goal_distance) oracle.emplace(db, opt);
    long long stubs_total = 0;
    Search search{db, opt, goal, strategy, budget};
    search.oracle = oracle ? &*oracle : nullptr;
    search.start = start;
    search.target_len = len;
    search.all_mode = true;
    search.count_all = true;
    search.stubs_total = &stubs_total;
    search.solutions = &report.solutions;
    search.run();
    report.stubs_explored = stubs_total;
    report.budget_exhausted = search.exhausted;
    report.wall_ms = ms_between(start, Clock::now());
    return report;
}

std::string emit_program(const interp::Program& prog, const rpil::FunctionDb& db,
                         EmitStyle style) {
    std::string out;
    int line = 0;
    for (const interp::Statement& stmt : prog) {
        ++line;
        out += "let mut v" + std::to_string(stmt.ret) + " = " + stmt.fn;
        if (stmt.variant != 0) out += "#" + std::to_string(stmt.variant);
        out += "(";
        for (std::size_t i = 0; i < stmt.args.size(); ++i) {
            if (i > 0) out += ", ";
            out += "v" + std::to_string(stmt.args[i]);
        }
        out += ");";
        if (style == EmitStyle::annotated) {
            out += " // ";
            const rpil::FunctionSpec* spec = db.find(stmt.fn);
            if (spec && stmt.variant >= 0 &&
                stmt.variant < static_cast<int>(spec->variants.size())) {
                std::vector<rpil::Variable> args;
                for (int a : stmt.args) args.push_back(rpil::Variable::program(a));
                rpil::Variant inst = rpil::substitute(
                    spec->variants[static_cast<std::size_t>(stmt.variant)],
                    rpil::Variable::program(stmt.ret), args);
                out += rpil::render_variant(inst);
            } else {
                out += "?";
            }
        }
        out += "\n";
    }
    return out;
}

}  // namespace pinaudit::synth

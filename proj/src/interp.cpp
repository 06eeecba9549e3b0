#include "pinaudit/interp.hpp"

#include <algorithm>
#include <cctype>

namespace pinaudit::interp {

namespace {

constexpr int kMaxAliasSteps = 64;

}  // namespace

const char* state_name(ValueState s) {
    switch (s) {
        case ValueState::initial: return "initial";
        case ValueState::pinned: return "pinned";
        case ValueState::forgotten: return "forgotten";
        case ValueState::pinned_moved: return "pinned_moved";
        case ValueState::pinned_forgotten: return "pinned_forgotten";
    }
    return "?";
}

bool is_violating(ValueState s) {
    return s == ValueState::pinned_moved || s == ValueState::pinned_forgotten;
}

bool is_transition_allowed(ValueState from, ValueState to) {
    if (from == to) return true;
    switch (from) {
        case ValueState::initial:
            return to == ValueState::pinned || to == ValueState::forgotten;
        case ValueState::pinned:
            return to == ValueState::pinned_moved || to == ValueState::pinned_forgotten;
        default:
            return false;
    }
}

bool is_transition_reachable(ValueState from, ValueState to) {
    if (is_transition_allowed(from, to)) return true;
    // The only two-step paths run initial -> pinned -> {pinned_moved,
    // pinned_forgotten}; everything past pinned is terminal.
    return from == ValueState::initial &&
           (to == ValueState::pinned_moved || to == ValueState::pinned_forgotten);
}

namespace {

// Rewrites p by the first alias (insertion order) whose source prefixes it,
// then restarts; fixpoint when no alias applies. Returns false on step-bound
// or depth overrun, with err set.
bool canonicalize(const Context& ctx, const Options& opt, rpil::Place& p,
                  std::string& err) {
    int steps = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const AliasEntry& alias : ctx.aliases) {
            if (!alias.from.is_prefix_of(p)) continue;
            rpil::Place rewritten = alias.to;
            rewritten.path.insert(rewritten.path.end(),
                                  p.path.begin() + static_cast<std::ptrdiff_t>(alias.from.path.size()),
                                  p.path.end());
            p = std::move(rewritten);
            if (static_cast<int>(p.path.size()) > opt.max_place_depth) {
                err = "place depth cap exceeded at " + rpil::render_place(p);
                return false;
            }
            if (++steps > kMaxAliasSteps) {
                err = "alias resolution diverged at " + rpil::render_place(p);
                return false;
            }
            changed = true;
            break;
        }
    }
    return true;
}

}  // namespace

rpil::Place canonical_place(const Context& ctx, rpil::Place p) {
    Options opt;
    opt.max_place_depth = 1 << 20;  // queries ignore the execution depth cap
    std::string err;
    if (!canonicalize(ctx, opt, p, err)) return p;
    return p;
}

bool has_edge(const Context& ctx, const rpil::Place& r, const rpil::Place& p) {
    Edge probe{canonical_place(ctx, r), canonical_place(ctx, p)};
    return std::find(ctx.edges.begin(), ctx.edges.end(), probe) != ctx.edges.end();
}

ValueState state_of(const Context& ctx, const rpil::Place& p) {
    rpil::Place key = canonical_place(ctx, p);
    for (const StateEntry& entry : ctx.states) {
        if (entry.place == key) return entry.state;
    }
    return ValueState::initial;
}

std::vector<StateEntry> violations(const Context& ctx) {
    std::vector<StateEntry> out;
    for (const StateEntry& entry : ctx.states) {
        if (is_violating(entry.state)) out.push_back(entry);
    }
    return out;
}

namespace {

// All context mutation goes through this; the first failure sticks.
class Executor {
public:
    Executor(Context& ctx, const rpil::FunctionDb& db, const Options& opt, Mode mode)
        : ctx_(ctx), db_(db), opt_(opt), mode_(mode) {}

    ExecStatus run(const Statement& stmt) {
        line_ = ctx_.var_count() + 1;
        retract_dead_edges();
        if (!type_call(stmt)) return take_failure();
        if (!check_consumption(stmt)) return take_failure();
        if (!apply_variant(stmt)) return take_failure();
        consume_args(stmt);
        return {};
    }

private:
    bool fail(std::string msg) {
        if (err_.empty()) err_ = std::move(msg);
        return false;
    }

    ExecStatus take_failure() { return ExecStatus::failure(std::move(err_)); }

    // An edge whose source root died is gone. An edge into a dead root stays
    // only if it was introduced at or after the consuming line: the consumer's
    // own instructions record where the value went, while references taken
    // out beforehand lapse with the argument.
    void retract_dead_edges() {
        auto dead_root = [&](const rpil::Variable& root) {
            return root.space == rpil::VarSpace::program && !ctx_.alive(root.index);
        };
        auto retired = [&](const Edge& e) {
            if (dead_root(e.src.root)) return true;
            if (!dead_root(e.dst.root)) return false;
            if (!ctx_.defined(e.dst.root.index)) return true;
            const VarInfo& dst = ctx_.vars[static_cast<std::size_t>(e.dst.root.index - 1)];
            return e.born < dst.died_at;
        };
        ctx_.edges.erase(std::remove_if(ctx_.edges.begin(), ctx_.edges.end(), retired),
                         ctx_.edges.end());
    }

    bool type_call(const Statement& stmt) {
        if (stmt.ret != ctx_.var_count() + 1) {
            return fail("statement must define v" + std::to_string(ctx_.var_count() + 1) +
                        ", got v" + std::to_string(stmt.ret));
        }
        spec_ = db_.find(stmt.fn);
        if (!spec_) return fail("unknown function " + stmt.fn);
        if (stmt.variant < 0 || stmt.variant >= static_cast<int>(spec_->variants.size())) {
            return fail(stmt.fn + " has no variant #" + std::to_string(stmt.variant));
        }
        if (static_cast<int>(stmt.args.size()) != spec_->arity()) {
            return fail(stmt.fn + " expects " + std::to_string(spec_->arity()) +
                        " argument(s), got " + std::to_string(stmt.args.size()));
        }
        std::vector<typesys::TypeTerm> arg_types;
        for (int a : stmt.args) {
            bool usable = ctx_.defined(a) && (mode_ == Mode::relaxed || ctx_.alive(a));
            if (!usable) {
                return fail("dead or undefined variable v" + std::to_string(a));
            }
            arg_types.push_back(ctx_.vars[static_cast<std::size_t>(a - 1)].type);
        }
        auto applied = typesys::apply_signature(spec_->scheme, arg_types, ctx_.next_type_var);
        if (!applied) return fail("ill-typed call to " + stmt.fn);
        if (!applied->subst.empty()) {
            for (VarInfo& info : ctx_.vars) info.type = applied->subst.apply(info.type);
        }
        for (const VarInfo& info : ctx_.vars) {
            if (typesys::term_height(info.type) > opt_.max_type_height) {
                return fail("type height cap exceeded");
            }
        }
        if (typesys::term_height(applied->ret) > opt_.max_type_height) {
            return fail("type height cap exceeded");
        }
        ctx_.vars.push_back(VarInfo{applied->ret, true});
        return true;
    }

    bool apply_variant(const Statement& stmt) {
        std::vector<rpil::Variable> arg_vars;
        for (int a : stmt.args) arg_vars.push_back(rpil::Variable::program(a));
        rpil::Variant instrs = rpil::substitute(
            spec_->variants[static_cast<std::size_t>(stmt.variant)],
            rpil::Variable::program(stmt.ret), arg_vars);
        for (const rpil::RpilInstruction& instr : instrs) {
            if (!apply_instruction(instr)) return false;
        }
        return true;
    }

    // A value with a live reference into it cannot be consumed: the move
    // would leave that reference dangling. References spelled from inside
    // the value itself travel with it and do not block. Checked against the
    // canonical spelling, so references into a pinned heap value never block
    // moving its owning handle. Relaxed mode defers this with the other
    // liveness checks.
    bool check_consumption(const Statement& stmt) {
        if (mode_ == Mode::relaxed) return true;
        for (std::size_t i = 0; i < stmt.args.size(); ++i) {
            if (!spec_->consumes[i]) continue;
            rpil::Place value = rpil::Place::var(rpil::Variable::program(stmt.args[i]));
            if (!canonical(value)) return false;
            for (const Edge& e : ctx_.edges) {
                if (!value.is_prefix_of(e.dst)) continue;
                if (value.is_prefix_of(e.src)) continue;
                return fail("cannot consume v" + std::to_string(stmt.args[i]) + " while " +
                            rpil::render_place(e.src) + " borrows " +
                            rpil::render_place(e.dst));
            }
        }
        return true;
    }

    void consume_args(const Statement& stmt) {
        for (std::size_t i = 0; i < stmt.args.size(); ++i) {
            if (!spec_->consumes[i]) continue;
            VarInfo& info = ctx_.vars[static_cast<std::size_t>(stmt.args[i] - 1)];
            if (info.alive) {
                info.alive = false;
                info.died_at = line_;
            }
        }
    }

    bool canonical(rpil::Place& p) {
        std::string err;
        if (!canonicalize(ctx_, opt_, p, err)) return fail(std::move(err));
        return true;
    }

    // Walks the operand left to right, canonicalizing as it goes; a deref
    // selector follows the first recorded edge out of the current place.
    bool resolve(const rpil::Place& operand, rpil::Place& out) {
        rpil::Place cur = rpil::Place::var(operand.root);
        if (!canonical(cur)) return false;
        for (const rpil::Selector& sel : operand.path) {
            if (sel.is_deref()) {
                const Edge* hit = nullptr;
                for (const Edge& e : ctx_.edges) {
                    if (e.src == cur) {
                        hit = &e;
                        break;
                    }
                }
                if (!hit) {
                    return fail("no reference out of " + rpil::render_place(cur) +
                                " to dereference");
                }
                cur = hit->dst;
            } else {
                cur = cur.child(sel);
            }
            if (!canonical(cur)) return false;
            if (static_cast<int>(cur.path.size()) > opt_.max_place_depth) {
                return fail("place depth cap exceeded at " + rpil::render_place(cur));
            }
        }
        out = std::move(cur);
        return true;
    }

    ValueState local_state(const rpil::Place& key) const {
        for (const StateEntry& entry : ctx_.states) {
            if (entry.place == key) return entry.state;
        }
        return ValueState::initial;
    }

    void set_state(const rpil::Place& key, ValueState s) {
        for (StateEntry& entry : ctx_.states) {
            if (entry.place == key) {
                entry.state = s;
                return;
            }
        }
        ctx_.states.push_back(StateEntry{key, s});
    }

    bool apply_instruction(const rpil::RpilInstruction& instr) {
        switch (instr.kind) {
            case rpil::InstrKind::borrow: return apply_borrow(instr);
            case rpil::InstrKind::bind: return apply_bind(instr);
            case rpil::InstrKind::deref_pin: return apply_deref_pin(instr);
            case rpil::InstrKind::deref_move: return apply_deref_move(instr);
            case rpil::InstrKind::forget: return apply_forget(instr);
        }
        return fail("bad instruction");
    }

    bool apply_borrow(const rpil::RpilInstruction& instr) {
        Edge e;
        if (!resolve(instr.lhs, e.src)) return false;
        if (!resolve(instr.rhs, e.dst)) return false;
        e.born = line_;
        auto prev = std::find(ctx_.edges.begin(), ctx_.edges.end(), e);
        if (prev == ctx_.edges.end()) {
            ctx_.edges.push_back(std::move(e));
        } else {
            prev->born = std::max(prev->born, line_);  // re-borrow refreshes
        }
        return true;
    }

    // BIND makes the bound place an alias of the value it received: the
    // value keeps its existing canonical name and every stored fact spelled
    // through the bound place is rewritten onto it.
    bool apply_bind(const rpil::RpilInstruction& instr) {
        rpil::Place cp, cq;
        if (!resolve(instr.lhs, cp)) return false;
        if (!resolve(instr.rhs, cq)) return false;
        if (cp == cq) return true;
        if (cp.is_prefix_of(cq) || cq.is_prefix_of(cp)) {
            return fail("circular binding of " + rpil::render_place(cp) + " and " +
                        rpil::render_place(cq));
        }
        ctx_.aliases.push_back(AliasEntry{cp, cq});
        return recanonicalize();
    }

    // Rewrites stored edges and states into the updated canonical spelling,
    // deduplicating toward the first occurrence.
    bool recanonicalize() {
        std::vector<Edge> edges;
        for (Edge e : ctx_.edges) {
            if (!canonical(e.src) || !canonical(e.dst)) return false;
            auto prev = std::find(edges.begin(), edges.end(), e);
            if (prev == edges.end()) {
                edges.push_back(std::move(e));
            } else {
                prev->born = std::max(prev->born, e.born);
            }
        }
        ctx_.edges = std::move(edges);
        std::vector<StateEntry> states;
        for (StateEntry entry : ctx_.states) {
            if (!canonical(entry.place)) return false;
            auto prev = std::find_if(states.begin(), states.end(), [&](const StateEntry& s) {
                return s.place == entry.place;
            });
            if (prev == states.end()) {
                states.push_back(std::move(entry));
            } else if (prev->state != entry.state) {
                return fail("binding merges conflicting states for " +
                            rpil::render_place(entry.place));
            }
        }
        ctx_.states = std::move(states);
        return true;
    }

    bool apply_deref_pin(const rpil::RpilInstruction& instr) {
        rpil::Place rr;
        if (!resolve(instr.lhs, rr)) return false;
        std::vector<rpil::Place> targets;
        for (const Edge& e : ctx_.edges) {
            if (e.src == rr) targets.push_back(e.dst);
        }
        if (targets.empty()) {
            return fail("no reference out of " + rpil::render_place(rr) + " to pin through");
        }
        for (const rpil::Place& q : targets) {
            switch (local_state(q)) {
                case ValueState::initial:
                    set_state(q, ValueState::pinned);
                    break;
                case ValueState::pinned:
                    break;
                default:
                    return fail("cannot pin " + std::string(state_name(local_state(q))) +
                                " value " + rpil::render_place(q));
            }
        }
        return true;
    }

    bool apply_deref_move(const rpil::RpilInstruction& instr) {
        rpil::Place rr;
        if (!resolve(instr.lhs, rr)) return false;
        std::vector<rpil::Place> targets;
        for (const Edge& e : ctx_.edges) {
            if (e.src == rr) targets.push_back(e.dst);
        }
        if (targets.empty()) {
            return fail("no reference out of " + rpil::render_place(rr) + " to move through");
        }
        for (const rpil::Place& q : targets) {
            ValueState s = local_state(q);
            if (s == ValueState::forgotten || s == ValueState::pinned_forgotten) {
                return fail("cannot move " + std::string(state_name(s)) + " value " +
                            rpil::render_place(q));
            }
            // Moving q moves everything stored inside it: every pinned entry
            // at q or below goes to pinned_moved.
            for (StateEntry& entry : ctx_.states) {
                if (entry.state == ValueState::pinned && q.is_prefix_of(entry.place)) {
                    entry.state = ValueState::pinned_moved;
                }
            }
        }
        return true;
    }

    bool apply_forget(const rpil::RpilInstruction& instr) {
        rpil::Place pp;
        if (!resolve(instr.lhs, pp)) return false;
        switch (local_state(pp)) {
            case ValueState::initial:
                set_state(pp, ValueState::forgotten);
                return true;
            case ValueState::pinned:
                set_state(pp, ValueState::pinned_forgotten);
                return true;
            default:
                return fail("cannot forget " + std::string(state_name(local_state(pp))) +
                            " value " + rpil::render_place(pp));
        }
    }

    Context& ctx_;
    const rpil::FunctionDb& db_;
    const Options& opt_;
    Mode mode_;
    int line_ = 0;
    const rpil::FunctionSpec* spec_ = nullptr;
    std::string err_;
};

}  // namespace

ExecStatus exec_statement(Context& ctx, const Statement& stmt,
                          const rpil::FunctionDb& db, const Options& opt, Mode mode) {
    return Executor(ctx, db, opt, mode).run(stmt);
}

Trace interpret(const Program& prog, const rpil::FunctionDb& db, const Options& opt) {
    Trace trace;
    Context ctx;
    int line = 0;
    for (const Statement& stmt : prog) {
        ++line;
        ExecStatus status = exec_statement(ctx, stmt, db, opt, Mode::full);
        if (!status.ok) throw ExecError(line, status.error);
        trace.push_back(ctx);
    }
    return trace;
}

std::string render_statement(const Statement& stmt) {
    std::string out = "v" + std::to_string(stmt.ret) + " = " + stmt.fn;
    if (stmt.variant != 0) out += "#" + std::to_string(stmt.variant);
    out += "(";
    for (std::size_t i = 0; i < stmt.args.size(); ++i) {
        if (i > 0) out += ", ";
        out += "v" + std::to_string(stmt.args[i]);
    }
    out += ")";
    return out;
}

namespace {

class LineParser {
public:
    LineParser(std::string_view text, std::size_t base) : text_(text), base_(base) {}

    Statement parse() {
        Statement stmt;
        skip_spaces();
        if (try_word("let")) {
            skip_spaces();
            try_word("mut");
            skip_spaces();
        }
        stmt.ret = program_var();
        skip_spaces();
        expect('=');
        skip_spaces();
        stmt.fn = fn_name();
        if (!stmt.fn.empty() && stmt.fn.back() == '#') {
            fail("missing variant number", pos_ - 1);
        }
        if (peek() == '#') {
            ++pos_;
            stmt.variant = number();
        }
        skip_spaces();
        expect('(');
        skip_spaces();
        if (peek() != ')') {
            stmt.args.push_back(program_var());
            skip_spaces();
            while (peek() == ',') {
                ++pos_;
                skip_spaces();
                stmt.args.push_back(program_var());
                skip_spaces();
            }
        }
        expect(')');
        skip_spaces();
        if (peek() == ';' || peek() == ',') ++pos_;
        skip_spaces();
        if (pos_ != text_.size()) fail("trailing characters after statement", pos_);
        return stmt;
    }

private:
    [[noreturn]] void fail(const std::string& msg, std::size_t at) {
        throw ParseError(msg, base_ + at);
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void skip_spaces() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'", pos_);
        ++pos_;
    }

    bool try_word(std::string_view w) {
        if (text_.substr(pos_, w.size()) != w) return false;
        std::size_t end = pos_ + w.size();
        if (end < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[end])) ||
                                   text_[end] == '_')) {
            return false;
        }
        pos_ = end;
        return true;
    }

    int number() {
        if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected a number", pos_);
        long value = 0;
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
            value = value * 10 + (peek() - '0');
            if (value > 1000000000) fail("number too large", pos_);
            ++pos_;
        }
        return static_cast<int>(value);
    }

    int program_var() {
        std::size_t at = pos_;
        if (peek() != 'v') fail("expected a program variable like v1", at);
        ++pos_;
        int index = number();
        if (index < 1) fail("program variables start at v1", at);
        if (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(peek())) ||
                                    peek() == '_')) {
            fail("expected a program variable like v1", at);
        }
        return index;
    }

    std::string fn_name() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                text_[pos_] == '_' || text_[pos_] == ':')) {
            ++pos_;
        }
        if (pos_ == start) fail("expected a function name", start);
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string_view text_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

}  // namespace

Program parse_program(std::string_view text) {
    Program prog;
    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        std::size_t eol = text.find('\n', line_start);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(line_start, eol - line_start);
        if (std::size_t comment = line.find("//"); comment != std::string_view::npos) {
            line = line.substr(0, comment);
        }
        std::size_t last = line.find_last_not_of(" \t\r");
        line = (last == std::string_view::npos) ? std::string_view{} : line.substr(0, last + 1);
        if (!line.empty()) {
            prog.push_back(LineParser(line, line_start).parse());
        }
        if (eol == text.size()) break;
        line_start = eol + 1;
    }
    return prog;
}

std::string render_context(const Context& ctx) {
    std::vector<std::string> items;
    for (const Edge& e : ctx.edges) {
        items.push_back(rpil::render_place(e.src) + "->" + rpil::render_place(e.dst));
    }
    for (const StateEntry& entry : ctx.states) {
        items.push_back(rpil::render_place(entry.place) + ":" + state_name(entry.state));
    }
    if (items.empty()) return "{ }";
    std::string out = "{ ";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ", ";
        out += items[i];
    }
    out += " }";
    return out;
}

std::string render_trace(const Trace& trace) {
    std::string out;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out += "line " + std::to_string(i + 1) + ": " + render_context(trace[i]) + "\n";
    }
    return out;
}

}  // namespace pinaudit::interp

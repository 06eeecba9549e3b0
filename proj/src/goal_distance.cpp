#include "pinaudit/goal_distance.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace pinaudit::synth {

namespace {

constexpr int kFreshBase = 1000000;  // clear of any context's type var ids
constexpr int kNeedDepthCap = 16;
constexpr int kMaxMembers = 256;
constexpr int kMaxRounds = 64;
constexpr int kMaxAssignments = 256;

int sat_add(int a, int b) {
    long long s = static_cast<long long>(a) + b;
    return s >= DistanceOracle::kUnreachable ? DistanceOracle::kUnreachable
                                             : static_cast<int>(s);
}

// Renames every variable to a fresh id; fresh terms never collide with
// context types or with each other.
typesys::TypeTerm rename_apart(const typesys::TypeTerm& t, int& fresh,
                               std::map<int, int>& seen) {
    using typesys::TypeTerm;
    switch (t.kind) {
        case TypeTerm::Kind::var: {
            auto [it, inserted] = seen.emplace(t.var, fresh);
            if (inserted) ++fresh;
            return TypeTerm::make_var(it->second);
        }
        case TypeTerm::Kind::unit:
            return t;
        case TypeTerm::Kind::ref: {
            TypeTerm out = t;
            out.args[0] = rename_apart(t.args[0], fresh, seen);
            return out;
        }
        case TypeTerm::Kind::named: {
            TypeTerm out = t;
            for (auto& a : out.args) a = rename_apart(a, fresh, seen);
            return out;
        }
    }
    return t;
}

typesys::TypeTerm rename_apart(const typesys::TypeTerm& t, int& fresh) {
    std::map<int, int> seen;
    return rename_apart(t, fresh, seen);
}

// First-occurrence renaming to 0,1,2,... so structurally equal schemes
// compare equal.
void canonical_form_walk(typesys::TypeTerm& t, std::map<int, int>& seen) {
    using typesys::TypeTerm;
    if (t.kind == TypeTerm::Kind::var) {
        auto [it, inserted] = seen.emplace(t.var, static_cast<int>(seen.size()));
        t.var = it->second;
        return;
    }
    for (auto& a : t.args) canonical_form_walk(a, seen);
}

typesys::TypeTerm canonical_form(typesys::TypeTerm t) {
    std::map<int, int> seen;
    canonical_form_walk(t, seen);
    return t;
}

bool unifiable(const typesys::TypeTerm& a, const typesys::TypeTerm& b) {
    typesys::Substitution s;
    return typesys::unify(a, b, s);
}

// Whether two type schemes overlap, i.e. some ground type instantiates both.
bool common_instance(const typesys::TypeTerm& a, const typesys::TypeTerm& b) {
    int fresh = kFreshBase;
    return unifiable(rename_apart(a, fresh), rename_apart(b, fresh));
}

void collect_term_vars(const typesys::TypeTerm& t, std::vector<int>& out) {
    typesys::collect_vars(t, out);
}

bool shares_var(const typesys::TypeTerm& a, const std::vector<int>& vars) {
    std::vector<int> av;
    collect_term_vars(a, av);
    for (int v : av) {
        if (std::find(vars.begin(), vars.end(), v) != vars.end()) return true;
    }
    return false;
}

}  // namespace

DistanceOracle::DistanceOracle(const rpil::FunctionDb& db, const interp::Options& opt)
    : db_(db), opt_(opt) {
    caps_.resize(db.fns.size());
    for (std::size_t i = 0; i < db.fns.size(); ++i) {
        for (const rpil::Variant& variant : db.fns[i].variants) {
            bool pin = false, mv = false, fg = false;
            for (const rpil::RpilInstruction& instr : variant) {
                pin |= instr.kind == rpil::InstrKind::deref_pin;
                mv |= instr.kind == rpil::InstrKind::deref_move;
                fg |= instr.kind == rpil::InstrKind::forget;
            }
            caps_[i].pin |= pin;
            caps_[i].mv |= mv;
            caps_[i].fg |= fg;
            caps_[i].combo_mv |= pin && mv;
            caps_[i].combo_fg |= pin && fg;
        }
    }

    // Closure of constructible value types, starting from nothing. Adding a
    // member more general than what is truly constructible only weakens the
    // bound, so approximations all lean that way.
    auto add_member = [&](const typesys::TypeTerm& t, bool& changed) {
        if (typesys::term_height(t) > opt_.max_type_height) return;
        typesys::TypeTerm canon = canonical_form(t);
        for (const auto& m : constructible_) {
            if (m == canon) return;
        }
        constructible_.push_back(std::move(canon));
        changed = true;
    };

    int fresh = kFreshBase;
    for (int round = 0; round < kMaxRounds && !everything_; ++round) {
        bool changed = false;
        for (const rpil::FunctionSpec& fn : db.fns) {
            typesys::Instantiated inst = typesys::instantiate(fn.scheme, fresh);
            std::vector<int> ret_vars;
            collect_term_vars(inst.ret, ret_vars);
            std::vector<std::size_t> joint;  // params instantiating the return
            bool covered = true;
            for (std::size_t i = 0; i < inst.params.size(); ++i) {
                if (!ret_vars.empty() && shares_var(inst.params[i], ret_vars)) {
                    joint.push_back(i);
                } else if (!achievable(inst.params[i])) {
                    covered = false;
                    break;
                }
            }
            if (!covered) continue;
            if (joint.empty()) {
                add_member(inst.ret, changed);
                continue;
            }
            // Enumerate member assignments for the return-shaping params.
            int assignments = 0;
            auto enumerate = [&](auto&& self, std::size_t k,
                                 const typesys::Substitution& acc) -> void {
                if (everything_) return;
                if (k == joint.size()) {
                    if (++assignments > kMaxAssignments) {
                        everything_ = true;
                        return;
                    }
                    add_member(acc.apply(inst.ret), changed);
                    return;
                }
                // add_member appends to constructible_ mid-walk, so iterate a
                // size snapshot by value; fresh members join the next round.
                std::size_t members = constructible_.size();
                for (std::size_t mi = 0; mi < members; ++mi) {
                    typesys::TypeTerm member = constructible_[mi];
                    typesys::Substitution next = acc;
                    if (typesys::unify(inst.params[joint[k]],
                                       rename_apart(member, fresh), next)) {
                        self(self, k + 1, next);
                    }
                }
            };
            enumerate(enumerate, 0, typesys::Substitution{});
        }
        if (static_cast<int>(constructible_.size()) > kMaxMembers) everything_ = true;
        if (!changed) break;
    }
}

bool DistanceOracle::achievable(const typesys::TypeTerm& t) const {
    if (everything_) return true;
    for (const auto& m : constructible_) {
        if (common_instance(t, m)) return true;
    }
    return false;
}

int DistanceOracle::need(const typesys::TypeTerm& t, const interp::Context& ctx,
                         std::vector<typesys::TypeTerm>& counted, int& fresh,
                         int depth) const {
    if (depth > kNeedDepthCap) return 0;
    for (const interp::VarInfo& info : ctx.vars) {
        if (info.alive && unifiable(t, info.type)) return 0;
    }
    for (const auto& c : counted) {
        if (common_instance(t, c)) return 0;
    }
    // Producers whose return can be this type and whose parameters are all
    // constructible under that unifier.
    struct Producer {
        const rpil::FunctionSpec* fn;
        std::vector<typesys::TypeTerm> params;
    };
    std::vector<Producer> producers;
    for (const rpil::FunctionSpec& fn : db_.fns) {
        typesys::Instantiated inst = typesys::instantiate(fn.scheme, fresh);
        typesys::Substitution s;
        if (!typesys::unify(inst.ret, t, s)) continue;
        Producer prod{&fn, {}};
        bool ok = true;
        for (const auto& p : inst.params) {
            typesys::TypeTerm sp = s.apply(p);
            if (!achievable(sp)) {
                ok = false;
                break;
            }
            prod.params.push_back(std::move(sp));
        }
        if (!ok) continue;
        producers.push_back(std::move(prod));
        if (producers.size() > 1) break;  // ambiguity already established
    }
    if (producers.empty()) return kUnreachable;
    counted.push_back(t);
    // With several possible producers the chains cannot be told apart, so
    // only the production statement itself is charged.
    if (producers.size() > 1) return 1;
    int total = 1;
    for (const auto& p : producers[0].params) {
        total = sat_add(total, need(p, ctx, counted, fresh, depth + 1));
    }
    return total;
}

int DistanceOracle::need_args(const rpil::FunctionSpec& fn, const interp::Context& ctx,
                              int& fresh) const {
    typesys::Instantiated inst = typesys::instantiate(fn.scheme, fresh);
    std::vector<typesys::TypeTerm> counted;
    int total = 0;
    for (const auto& p : inst.params) {
        total = sat_add(total, need(p, ctx, counted, fresh, 0));
    }
    return total;
}

int DistanceOracle::lower_bound(const interp::Context& ctx, const Goal& goal) const {
    if (goal.kind == Goal::Kind::borrows) {
        return interp::has_edge(ctx, goal.r, goal.p) ? 0 : 1;
    }
    auto matches = [&](interp::ValueState s) {
        switch (goal.which) {
            case Goal::Which::moved: return s == interp::ValueState::pinned_moved;
            case Goal::Which::forgotten: return s == interp::ValueState::pinned_forgotten;
            case Goal::Which::any: return interp::is_violating(s);
        }
        return false;
    };
    bool pinned_exists = false;
    for (const interp::StateEntry& entry : ctx.states) {
        if (matches(entry.state)) return 0;
        pinned_exists |= entry.state == interp::ValueState::pinned;
    }

    std::string key;
    key += static_cast<char>('0' + static_cast<int>(goal.which));
    key += pinned_exists ? 'P' : '-';
    std::vector<std::string> parts;
    for (const interp::VarInfo& info : ctx.vars) {
        if (info.alive) parts.push_back(typesys::render_type(canonical_form(info.type)));
    }
    std::sort(parts.begin(), parts.end());
    for (const auto& part : parts) {
        key += '|';
        key += part;
    }
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    int fresh = kFreshBase;
    int best = kUnreachable;
    bool any_violator = false;
    for (std::size_t i = 0; i < db_.fns.size(); ++i) {
        const Caps& c = caps_[i];
        bool viol_ok = goal.which == Goal::Which::moved      ? c.mv
                       : goal.which == Goal::Which::forgotten ? c.fg
                                                               : (c.mv || c.fg);
        bool combo_ok = goal.which == Goal::Which::moved      ? c.combo_mv
                        : goal.which == Goal::Which::forgotten ? c.combo_fg
                                                                : (c.combo_mv || c.combo_fg);
        any_violator |= viol_ok;
        if (pinned_exists && viol_ok) {
            best = std::min(best, sat_add(1, need_args(db_.fns[i], ctx, fresh)));
        }
        if (combo_ok) {
            best = std::min(best, sat_add(1, need_args(db_.fns[i], ctx, fresh)));
        }
    }
    if (any_violator) {
        for (std::size_t i = 0; i < db_.fns.size(); ++i) {
            if (!caps_[i].pin) continue;
            best = std::min(best, sat_add(sat_add(1, need_args(db_.fns[i], ctx, fresh)), 1));
        }
    }
    memo_.emplace(std::move(key), best);
    return best;
}

}  // namespace pinaudit::synth

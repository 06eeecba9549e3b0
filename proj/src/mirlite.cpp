#include "pinaudit/mirlite.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pinaudit/typesys.hpp"

namespace pinaudit::mirlite {

namespace {

bool is_ident_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '_';
}

// Token scanner for the block-structured source. Unlike the database
// format, paths here use `::` but a single `:` is a separator (field
// initializers, block labels), so the colon is never part of a word.
class MirCursor {
public:
    explicit MirCursor(std::string_view text) : text_(text) { skip(); }

    bool done() const { return pos_ >= text_.size(); }
    std::size_t pos() const { return pos_; }
    char peek() const { return done() ? '\0' : text_[pos_]; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, pos_);
    }

    bool try_char(char c) {
        if (done() || text_[pos_] != c) return false;
        ++pos_;
        skip();
        return true;
    }

    void expect_char(char c) {
        if (!try_char(c)) fail(std::string("expected '") + c + "'");
    }

    // Matches a whole word (no identifier character may follow).
    bool try_word(std::string_view w) {
        if (text_.substr(pos_, w.size()) != w) return false;
        std::size_t end = pos_ + w.size();
        if (end < text_.size() && is_ident_char(text_[end])) return false;
        pos_ = end;
        skip();
        return true;
    }

    std::string ident() {
        std::size_t start = pos_;
        while (!done() && is_ident_char(text_[pos_])) ++pos_;
        if (pos_ == start) fail("expected an identifier");
        std::string out(text_.substr(start, pos_ - start));
        skip();
        return out;
    }

    // `seg` or `seg::seg::seg`; stops before a single ':'.
    std::string path_ident() {
        std::string out = ident_no_skip();
        while (pos_ + 1 < text_.size() && text_[pos_] == ':' &&
               text_[pos_ + 1] == ':') {
            pos_ += 2;
            out += "::";
            out += ident_no_skip();
        }
        skip();
        return out;
    }

    int number() {
        std::size_t start = pos_;
        long v = 0;
        while (!done() && text_[pos_] >= '0' && text_[pos_] <= '9') {
            v = v * 10 + (text_[pos_] - '0');
            if (v > 1000000) fail("number out of range");
            ++pos_;
        }
        if (pos_ == start) fail("expected a number");
        if (!done() && is_ident_char(text_[pos_])) fail("malformed number");
        skip();
        return static_cast<int>(v);
    }

    // `_N` local id.
    int local() {
        if (done() || text_[pos_] != '_') fail("expected a local '_N'");
        ++pos_;
        return number();
    }

    // `bbN` label.
    int block_label() {
        if (text_.substr(pos_, 2) != "bb") fail("expected a block label 'bbN'");
        pos_ += 2;
        return number();
    }

    // Raw type text up to a depth-0 stop character. Angle brackets and
    // parentheses nest; the stop character is not consumed.
    std::string type_text(std::string_view stops) {
        std::size_t start = pos_;
        int depth = 0;
        while (!done()) {
            char c = text_[pos_];
            if (depth == 0 && stops.find(c) != std::string_view::npos) break;
            if (c == '<' || c == '(') ++depth;
            if ((c == '>' || c == ')') && depth > 0) --depth;
            ++pos_;
        }
        std::string out(text_.substr(start, pos_ - start));
        while (!out.empty() && (out.back() == ' ' || out.back() == '\t' ||
                                out.back() == '\n' || out.back() == '\r'))
            out.pop_back();
        skip();
        if (out.empty()) fail("expected a type");
        return out;
    }

    // Rest of the current physical line, with any trailing // comment cut.
    std::pair<std::string_view, std::size_t> rest_of_line() {
        std::size_t start = pos_;
        std::size_t end = text_.find('\n', start);
        if (end == std::string_view::npos) end = text_.size();
        std::string_view line = text_.substr(start, end - start);
        std::size_t slash = line.find("//");
        if (slash != std::string_view::npos) line = line.substr(0, slash);
        pos_ = end;
        skip();
        return {line, start};
    }

private:
    std::string ident_no_skip() {
        std::size_t start = pos_;
        while (!done() && is_ident_char(text_[pos_])) ++pos_;
        if (pos_ == start) fail("expected an identifier");
        return std::string(text_.substr(start, pos_ - start));
    }

    void skip() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                ++pos_;
            } else if (c == '/' && pos_ + 1 < text_.size() &&
                       text_[pos_ + 1] == '/') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

MirOperand parse_operand(MirCursor& cur) {
    MirOperand op;
    if (cur.try_word("move"))
        op.is_move = true;
    else
        cur.try_word("copy");
    op.local = cur.local();
    return op;
}

std::vector<MirOperand> parse_operand_list(MirCursor& cur) {
    std::vector<MirOperand> ops;
    cur.expect_char('(');
    if (cur.try_char(')')) return ops;
    for (;;) {
        ops.push_back(parse_operand(cur));
        if (cur.try_char(')')) break;
        cur.expect_char(',');
    }
    return ops;
}

// Registers or checks the constructor shape, and reorders brace fields
// into table order. First use fixes arity and (for brace form) the field
// set; the numbering 1..k follows first-use order.
std::vector<MirOperand> normalize_aggregate(
    MirCursor& cur, std::map<std::string, CtorInfo>& ctors,
    const std::string& ctor, std::vector<std::string> names,
    std::vector<MirOperand> ops, bool brace_form) {
    auto it = ctors.find(ctor);
    if (it == ctors.end()) {
        ctors.emplace(ctor,
                      CtorInfo{static_cast<int>(ops.size()), std::move(names)});
        return ops;
    }
    const CtorInfo& info = it->second;
    if (static_cast<int>(ops.size()) != info.arity)
        cur.fail("constructor '" + ctor + "' arity mismatch");
    if (brace_form != !info.field_names.empty())
        cur.fail("constructor '" + ctor + "' shape mismatch");
    if (!brace_form) return ops;
    std::vector<MirOperand> ordered(ops.size());
    std::vector<bool> seen(ops.size(), false);
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto at = std::find(info.field_names.begin(), info.field_names.end(),
                            names[i]);
        if (at == info.field_names.end())
            cur.fail("constructor '" + ctor + "' has no field '" + names[i] +
                     "'");
        std::size_t k = static_cast<std::size_t>(at - info.field_names.begin());
        if (seen[k]) cur.fail("field '" + names[i] + "' initialized twice");
        seen[k] = true;
        ordered[k] = ops[i];
    }
    return ordered;
}

MirRhs parse_rhs(MirCursor& cur, std::map<std::string, CtorInfo>& ctors) {
    MirRhs rhs;
    if (cur.try_char('&')) {
        rhs.kind = MirRhs::Kind::ref_of;
        rhs.ref_mut = cur.try_word("mut");
        rhs.ref_local = cur.local();
        return rhs;
    }
    if (cur.peek() == '_' || cur.try_word("copy")) {
        rhs.kind = MirRhs::Kind::use;
        rhs.use.local = cur.local();
        return rhs;
    }
    if (cur.try_word("move")) {
        rhs.kind = MirRhs::Kind::use;
        rhs.use.is_move = true;
        rhs.use.local = cur.local();
        return rhs;
    }
    rhs.kind = MirRhs::Kind::aggregate;
    rhs.ctor = cur.path_ident();
    std::vector<std::string> names;
    std::vector<MirOperand> ops;
    bool brace_form = false;
    if (cur.peek() == '(') {
        ops = parse_operand_list(cur);
    } else if (cur.try_char('{')) {
        brace_form = true;
        if (!cur.try_char('}')) {
            for (;;) {
                names.push_back(cur.ident());
                cur.expect_char(':');
                ops.push_back(parse_operand(cur));
                if (cur.try_char('}')) break;
                cur.expect_char(',');
            }
        }
    } else {
        cur.fail("expected '(' or '{' after constructor name");
    }
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j)
            if (names[i] == names[j])
                cur.fail("field '" + names[i] + "' initialized twice");
    rhs.fields = normalize_aggregate(cur, ctors, rhs.ctor, std::move(names),
                                     std::move(ops), brace_form);
    return rhs;
}

MirBlock parse_block(MirCursor& cur, std::map<std::string, CtorInfo>& ctors) {
    MirBlock bb;
    bb.id = cur.block_label();
    cur.expect_char(':');
    cur.expect_char('{');
    bool have_term = false;
    while (!cur.try_char('}')) {
        if (have_term) cur.fail("unreachable code after the terminator");
        if (cur.done()) cur.fail("unterminated block");
        if (cur.try_word("return")) {
            cur.expect_char(';');
            bb.term.kind = MirTerminator::Kind::ret;
            have_term = true;
            continue;
        }
        if (cur.try_word("goto")) {
            bb.term.kind = MirTerminator::Kind::goto_to;
            bb.term.target = cur.block_label();
            cur.expect_char(';');
            have_term = true;
            continue;
        }
        if (cur.try_word("switch")) {
            bb.term.kind = MirTerminator::Kind::branch;
            cur.expect_char('[');
            for (;;) {
                bb.term.targets.push_back(cur.block_label());
                if (cur.try_char(']')) break;
                cur.expect_char(',');
            }
            cur.expect_char(';');
            if (bb.term.targets.size() < 2)
                cur.fail("switch needs at least two successors");
            have_term = true;
            continue;
        }
        int dst = cur.local();
        cur.expect_char('=');
        if (cur.try_word("call")) {
            bb.term.kind = MirTerminator::Kind::call;
            bb.term.dst = dst;
            bb.term.callee = cur.path_ident();
            bb.term.args = parse_operand_list(cur);
            cur.expect_char('-');
            cur.expect_char('>');
            bb.term.target = cur.block_label();
            cur.expect_char(';');
            have_term = true;
            continue;
        }
        MirStatement st;
        st.dst = dst;
        st.rhs = parse_rhs(cur, ctors);
        cur.expect_char(';');
        bb.statements.push_back(std::move(st));
    }
    if (!have_term) cur.fail("block bb" + std::to_string(bb.id) +
                             " lacks a terminator");
    return bb;
}

MirFunction parse_fn(MirCursor& cur, std::map<std::string, CtorInfo>& ctors) {
    MirFunction fn;
    fn.is_pub = cur.try_word("pub");
    fn.has_unsafe = cur.try_word("unsafe");
    if (!cur.try_word("fn")) cur.fail("expected 'fn'");
    fn.name = cur.path_ident();
    cur.expect_char('(');
    if (!cur.try_char(')')) {
        for (;;) {
            int id = cur.local();
            if (id != static_cast<int>(fn.param_types.size()) + 1)
                cur.fail("parameters must be _1.._k in order");
            cur.expect_char(':');
            fn.param_types.push_back(cur.type_text(",)"));
            if (cur.try_char(')')) break;
            cur.expect_char(',');
        }
    }
    if (cur.try_char('-')) {
        cur.expect_char('>');
        fn.ret_type = cur.type_text("{");
    } else {
        fn.ret_type = "()";
    }
    cur.expect_char('{');
    while (!cur.try_char('}')) {
        if (cur.done()) cur.fail("unterminated function body");
        fn.blocks.push_back(parse_block(cur, ctors));
    }
    std::sort(fn.blocks.begin(), fn.blocks.end(),
              [](const MirBlock& a, const MirBlock& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < fn.blocks.size(); ++i)
        if (fn.blocks[i].id == fn.blocks[i - 1].id)
            cur.fail("duplicate block bb" + std::to_string(fn.blocks[i].id) +
                     " in " + fn.name);
    if (fn.blocks.empty() || fn.blocks.front().id != 0)
        cur.fail("function " + fn.name + " lacks block bb0");
    auto check_target = [&](int id) {
        if (!fn.block(id))
            cur.fail("dangling block bb" + std::to_string(id) + " in " +
                     fn.name);
    };
    for (const MirBlock& bb : fn.blocks) {
        switch (bb.term.kind) {
        case MirTerminator::Kind::ret:
            break;
        case MirTerminator::Kind::goto_to:
        case MirTerminator::Kind::call:
            check_target(bb.term.target);
            break;
        case MirTerminator::Kind::branch:
            for (int t : bb.term.targets) check_target(t);
            break;
        }
    }
    return fn;
}

}  // namespace

const MirBlock* MirFunction::block(int id) const {
    for (const MirBlock& bb : blocks)
        if (bb.id == id) return &bb;
    return nullptr;
}

const MirFunction* MirProgram::find(std::string_view name) const {
    for (const MirFunction& fn : fns)
        if (fn.name == name) return &fn;
    return nullptr;
}

MirProgram parse_mirlite(std::string_view text) {
    MirProgram prog;
    MirCursor cur(text);
    while (!cur.done()) {
        MirFunction fn = parse_fn(cur, prog.ctors);
        if (prog.find(fn.name))
            cur.fail("duplicate function '" + fn.name + "'");
        prog.fns.push_back(std::move(fn));
    }
    return prog;
}

IntrinsicTable parse_intrinsics(std::string_view text) {
    IntrinsicTable table;
    MirCursor cur(text);
    while (!cur.done()) {
        std::string name = cur.path_ident();
        cur.expect_char('=');
        cur.expect_char('>');
        auto [line, base] = cur.rest_of_line();
        rpil::Variant v;
        try {
            v = rpil::parse_variant_text(line);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), base + e.offset());
        }
        for (const rpil::RpilInstruction& ins : v) {
            const rpil::Place* places[2] = {&ins.lhs,
                                            ins.is_binary() ? &ins.rhs : nullptr};
            for (const rpil::Place* p : places)
                if (p && p->root.space != rpil::VarSpace::slot)
                    throw ParseError("intrinsic template for '" + name +
                                         "' must use slot operands",
                                     base);
        }
        table.insert_or_assign(std::move(name), std::move(v));
    }
    return table;
}

IntrinsicTable builtin_intrinsics() {
    IntrinsicTable t;
    t["Pin::new_unchecked"] = rpil::parse_variant_text("DEREF-PIN(_1);");
    t["mem::swap"] =
        rpil::parse_variant_text("DEREF-MOVE(_1); DEREF-MOVE(_2);");
    t["mem::replace"] = rpil::parse_variant_text("DEREF-MOVE(_1);");
    t["mem::forget"] = rpil::parse_variant_text("FORGET(_1);");
    t["Option::unwrap"] = rpil::parse_variant_text("BIND(_0, _1[1]);");
    t["Result::unwrap"] = rpil::parse_variant_text("BIND(_0, _1[1]);");
    return t;
}

namespace {

// A node stands for one runtime value. Copies and moves of locals share the
// node, so inlined callees transparently operate on the caller's values.
struct Node {
    enum class Kind { origin, composite, ref, field, opaque };

    Kind kind = Kind::opaque;
    rpil::Place origin_place;             // origin: the declared home
    std::string ctor;                     // composite
    std::vector<std::shared_ptr<Node>> children;  // composite, field k at k-1
    bool ref_mut = false;                 // ref
    std::shared_ptr<Node> referent;       // ref
    std::shared_ptr<Node> parent;         // field
    int selector = 0;                     // field
    std::map<int, std::shared_ptr<Node>> projections;  // field-view memo
};

using NodePtr = std::shared_ptr<Node>;

NodePtr make_origin(rpil::Place p) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::origin;
    n->origin_place = std::move(p);
    return n;
}

NodePtr make_opaque() { return std::make_shared<Node>(); }

// Field k of a value: a composite exposes the shared child, anything else
// gets a memoized view node so repeated projections stay identical.
NodePtr project(const NodePtr& n, int k) {
    if (n->kind == Node::Kind::composite && k >= 1 &&
        k <= static_cast<int>(n->children.size()))
        return n->children[static_cast<std::size_t>(k) - 1];
    auto it = n->projections.find(k);
    if (it != n->projections.end()) return it->second;
    auto f = std::make_shared<Node>();
    f->kind = Node::Kind::field;
    f->parent = n;
    f->selector = k;
    n->projections[k] = f;
    return f;
}

// An intrinsic effect whose operand places are only known once the path is
// finalized: the node supplies the base spelling, the suffix is appended.
struct PendingOperand {
    NodePtr base;
    std::vector<rpil::Selector> suffix;
};

struct Pending {
    rpil::InstrKind kind = rpil::InstrKind::borrow;
    PendingOperand lhs;
    PendingOperand rhs;
    bool binary = false;
};

struct Frame {
    const MirFunction* fn = nullptr;
    std::map<int, NodePtr> locals;
    std::map<int, bool> moved;
    std::map<int, int> visits;  // per-path visit counts
    int ret_dst = -1;           // caller local receiving the result
    int cont_block = -1;        // caller block after the call
};

struct PathState {
    std::vector<Frame> stack;
    std::vector<Pending> pendings;
};

// Soft abandonment of the current path; the enclosing fork (or the path
// root) records a warning and moves on. Hard errors use TranslateError.
struct PathAbort {
    std::string reason;
};

class Translator {
public:
    Translator(const MirProgram& program, const IntrinsicTable& intrinsics,
               const TranslateOptions& topt, Translation& out)
        : program_(program), intrinsics_(intrinsics), topt_(topt), out_(out) {}

    void run(const MirFunction& fn) {
        root_name_ = fn.name;
        PathState st;
        Frame f;
        f.fn = &fn;
        for (std::size_t i = 0; i < fn.param_types.size(); ++i)
            f.locals[static_cast<int>(i) + 1] = make_origin(
                rpil::Place::var(rpil::Variable::slot(static_cast<int>(i) + 1)));
        st.stack.push_back(std::move(f));
        try {
            explore(std::move(st), 0);
        } catch (const PathAbort& a) {
            drop_path(a);
        }
    }

private:
    void drop_path(const PathAbort& a) {
        out_.warnings.push_back("dropped a path of '" + root_name_ +
                                "': " + a.reason);
    }

    NodePtr local_node(Frame& fr, int local, bool as_move) {
        if (fr.moved.count(local))
            throw PathAbort{"use of moved local _" + std::to_string(local) +
                            " in " + fr.fn->name};
        auto it = fr.locals.find(local);
        if (it == fr.locals.end())
            throw TranslateError(fr.fn->name + ": local _" +
                                 std::to_string(local) +
                                 " used before assignment");
        if (as_move) fr.moved[local] = true;
        return it->second;
    }

    NodePtr operand_node(Frame& fr, const MirOperand& op) {
        return local_node(fr, op.local, op.is_move);
    }

    void exec_statement(Frame& fr, const MirStatement& st) {
        NodePtr value;
        switch (st.rhs.kind) {
        case MirRhs::Kind::use:
            value = operand_node(fr, st.rhs.use);
            break;
        case MirRhs::Kind::ref_of: {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::ref;
            n->ref_mut = st.rhs.ref_mut;
            n->referent = local_node(fr, st.rhs.ref_local, false);
            value = n;
            break;
        }
        case MirRhs::Kind::aggregate: {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::composite;
            n->ctor = st.rhs.ctor;
            for (const MirOperand& op : st.rhs.fields)
                n->children.push_back(operand_node(fr, op));
            value = n;
            break;
        }
        }
        fr.locals[st.dst] = value;
        fr.moved.erase(st.dst);
    }

    void apply_intrinsic(PathState& state, const std::string& callee,
                         const rpil::Variant& tmpl, int dst,
                         const std::vector<NodePtr>& args) {
        NodePtr dnode = make_opaque();
        auto slot_node = [&](const rpil::Place& p) -> NodePtr {
            int ix = p.root.index;
            if (ix == 0) return dnode;
            if (ix > static_cast<int>(args.size()))
                throw TranslateError("intrinsic '" + callee + "' needs " +
                                     std::to_string(ix) +
                                     " arguments, call passes " +
                                     std::to_string(args.size()));
            return args[static_cast<std::size_t>(ix) - 1];
        };
        for (const rpil::RpilInstruction& ins : tmpl) {
            bool forwards = ins.kind == rpil::InstrKind::bind &&
                            ins.lhs.root.index == 0 && ins.lhs.path.empty();
            if (forwards) {
                // Pure value forwarding: the destination becomes a view of
                // the source, walked through the graph.
                NodePtr cur = slot_node(ins.rhs);
                bool ok = true;
                for (const rpil::Selector& s : ins.rhs.path) {
                    if (s.is_deref()) {
                        if (cur->kind != Node::Kind::ref) {
                            ok = false;
                            break;
                        }
                        cur = cur->referent;
                    } else {
                        cur = project(cur, s.v);
                    }
                }
                if (ok)
                    dnode = cur;
                else
                    out_.warnings.push_back(
                        "cannot forward the result of '" + callee +
                        "' through " + rpil::render_place(ins.rhs));
                continue;
            }
            Pending p;
            p.kind = ins.kind;
            p.binary = ins.is_binary();
            p.lhs = PendingOperand{slot_node(ins.lhs), ins.lhs.path};
            if (p.binary)
                p.rhs = PendingOperand{slot_node(ins.rhs), ins.rhs.path};
            state.pendings.push_back(std::move(p));
        }
        state.stack.back().locals[dst] = dnode;
        state.stack.back().moved.erase(dst);
    }

    // Runs one linear continuation; forks recursively at switches. The
    // state is owned by value so forks cannot interfere.
    void explore(PathState state, int block_id) {
        for (;;) {
            Frame& fr = state.stack.back();
            int count = ++fr.visits[block_id];
            if (count > topt_.max_block_visits)
                throw PathAbort{"block bb" + std::to_string(block_id) +
                                " of " + fr.fn->name +
                                " visited beyond the cap"};
            const MirBlock* bb = fr.fn->block(block_id);
            for (const MirStatement& st : bb->statements)
                exec_statement(fr, st);
            const MirTerminator& t = bb->term;
            switch (t.kind) {
            case MirTerminator::Kind::ret: {
                if (state.stack.size() == 1) {
                    finalize(state);
                    return;
                }
                auto it = fr.locals.find(0);
                NodePtr ret = it != fr.locals.end() ? it->second : make_opaque();
                int dst = fr.ret_dst;
                int cont = fr.cont_block;
                state.stack.pop_back();
                Frame& caller = state.stack.back();
                caller.locals[dst] = ret;
                caller.moved.erase(dst);
                block_id = cont;
                break;
            }
            case MirTerminator::Kind::goto_to:
                block_id = t.target;
                break;
            case MirTerminator::Kind::branch: {
                for (int target : t.targets) {
                    try {
                        explore(state, target);
                    } catch (const PathAbort& a) {
                        drop_path(a);
                    }
                }
                return;
            }
            case MirTerminator::Kind::call: {
                std::vector<NodePtr> args;
                args.reserve(t.args.size());
                for (const MirOperand& op : t.args)
                    args.push_back(operand_node(fr, op));
                auto intr = intrinsics_.find(t.callee);
                if (intr != intrinsics_.end()) {
                    apply_intrinsic(state, t.callee, intr->second, t.dst, args);
                    block_id = t.target;
                    break;
                }
                const MirFunction* callee = program_.find(t.callee);
                if (!callee)
                    throw TranslateError("unknown callee '" + t.callee +
                                         "' in " + fr.fn->name);
                if (args.size() != callee->param_types.size())
                    throw TranslateError("call to '" + t.callee + "' in " +
                                         fr.fn->name + " passes " +
                                         std::to_string(args.size()) +
                                         " arguments, expected " +
                                         std::to_string(
                                             callee->param_types.size()));
                if (static_cast<int>(state.stack.size()) >=
                    topt_.max_inline_depth)
                    throw PathAbort{"inline depth cap at the call to " +
                                    t.callee};
                Frame nf;
                nf.fn = callee;
                for (std::size_t i = 0; i < args.size(); ++i)
                    nf.locals[static_cast<int>(i) + 1] = args[i];
                nf.ret_dst = t.dst;
                nf.cont_block = t.target;
                state.stack.push_back(std::move(nf));
                block_id = 0;
                break;
            }
            }
        }
    }

    // Turns one finished path into a variant. Values reachable from the
    // return slot are given spellings first (relocation BINDs in pre-order,
    // then BORROWs for reference values), so that the recorded intrinsic
    // effects can name return-rooted places.
    void finalize(PathState& state) {
        Frame& fr = state.stack.front();
        rpil::Variant out;
        std::map<Node*, rpil::Place> assigned;
        std::vector<std::pair<NodePtr, rpil::Place>> refs;

        // The identity home of a value, independent of this path.
        std::function<std::optional<rpil::Place>(const NodePtr&)> home =
            [&](const NodePtr& n) -> std::optional<rpil::Place> {
            if (n->kind == Node::Kind::origin) return n->origin_place;
            if (n->kind == Node::Kind::field) {
                auto base = home(n->parent);
                if (!base) return std::nullopt;
                return base->child(rpil::Selector::index(n->selector));
            }
            return std::nullopt;
        };

        std::function<void(const NodePtr&, const rpil::Place&)> walk =
            [&](const NodePtr& n, const rpil::Place& at) {
            auto it = assigned.find(n.get());
            if (it != assigned.end()) {
                out.push_back(rpil::RpilInstruction::binary(
                    rpil::InstrKind::bind, at, it->second));
                return;
            }
            if (auto h = home(n)) {
                out.push_back(rpil::RpilInstruction::binary(
                    rpil::InstrKind::bind, at, *h));
                assigned[n.get()] = *h;
                return;
            }
            assigned[n.get()] = at;
            if (n->kind == Node::Kind::ref) {
                refs.emplace_back(n, at);
                return;
            }
            if (n->kind == Node::Kind::composite)
                for (std::size_t i = 0; i < n->children.size(); ++i)
                    walk(n->children[i],
                         at.child(rpil::Selector::index(
                             static_cast<int>(i) + 1)));
        };

        auto it0 = fr.locals.find(0);
        if (it0 != fr.locals.end())
            walk(it0->second, rpil::Place::var(rpil::Variable::slot(0)));

        // A value's spelling after relocation: first walk assignment wins,
        // otherwise its home.
        std::function<std::optional<rpil::Place>(const NodePtr&)> resolve =
            [&](const NodePtr& n) -> std::optional<rpil::Place> {
            auto it = assigned.find(n.get());
            if (it != assigned.end()) return it->second;
            if (n->kind == Node::Kind::origin) return n->origin_place;
            if (n->kind == Node::Kind::field) {
                auto base = resolve(n->parent);
                if (!base) return std::nullopt;
                return base->child(rpil::Selector::index(n->selector));
            }
            return std::nullopt;
        };

        for (const auto& [rn, at] : refs) {
            auto q = resolve(rn->referent);
            if (!q) {
                out_.warnings.push_back(
                    "dropped a BORROW at " + rpil::render_place(at) + " in '" +
                    root_name_ + "': referent has no place");
                continue;
            }
            out.push_back(rpil::RpilInstruction::binary(rpil::InstrKind::borrow,
                                                        at, *q));
        }

        auto operand_place =
            [&](const PendingOperand& op) -> std::optional<rpil::Place> {
            auto base = resolve(op.base);
            if (!base) return std::nullopt;
            rpil::Place p = *base;
            for (const rpil::Selector& s : op.suffix) p.path.push_back(s);
            return p;
        };

        for (const Pending& p : state.pendings) {
            auto l = operand_place(p.lhs);
            std::optional<rpil::Place> r;
            bool ok = l.has_value();
            if (ok && p.binary) {
                r = operand_place(p.rhs);
                ok = r.has_value();
            }
            if (!ok) {
                out_.warnings.push_back(std::string("dropped a ") +
                                        rpil::instr_name(p.kind) +
                                        " effect in '" + root_name_ +
                                        "': operand has no place");
                continue;
            }
            if (p.binary)
                out.push_back(
                    rpil::RpilInstruction::binary(p.kind, *l, *r));
            else
                out.push_back(rpil::RpilInstruction::unary(p.kind, *l));
        }

        out_.variants.push_back(std::move(out));
    }

    const MirProgram& program_;
    const IntrinsicTable& intrinsics_;
    const TranslateOptions& topt_;
    Translation& out_;
    std::string root_name_;
};

typesys::TypeTerm parse_whole_type(const std::string& text,
                                   typesys::LetterScope& scope) {
    std::size_t pos = 0;
    typesys::TypeTerm t = typesys::parse_type_prefix(text, pos, scope);
    while (pos < text.size() &&
           (text[pos] == ' ' || text[pos] == '\t'))
        ++pos;
    if (pos != text.size())
        throw ParseError("trailing characters after the type", pos);
    return t;
}

}  // namespace

Translation translate(const MirFunction& fn, const MirProgram& program,
                      const IntrinsicTable& intrinsics,
                      const TranslateOptions& topt) {
    Translation out;
    Translator tr(program, intrinsics, topt, out);
    tr.run(fn);
    return out;
}

std::string export_function_db(const MirProgram& program,
                               const IntrinsicTable& intrinsics,
                               const TranslateOptions& topt,
                               bool with_defaults) {
    bool any_pub =
        std::any_of(program.fns.begin(), program.fns.end(),
                    [](const MirFunction& f) { return f.is_pub; });
    rpil::FunctionDb db;
    db.defaults = with_defaults;
    for (const MirFunction& fn : program.fns) {
        if (any_pub && !fn.is_pub) continue;
        Translation tr = translate(fn, program, intrinsics, topt);
        if (tr.variants.empty()) {
            std::string msg =
                "function '" + fn.name + "' kept no path within the caps";
            if (!tr.warnings.empty()) msg += " (" + tr.warnings.front() + ")";
            throw TranslateError(msg);
        }
        rpil::FunctionSpec spec;
        spec.name = fn.name;
        typesys::LetterScope scope;
        for (const std::string& pt : fn.param_types)
            spec.scheme.params.push_back(parse_whole_type(pt, scope));
        spec.scheme.ret = parse_whole_type(fn.ret_type, scope);
        spec.scheme.num_vars = static_cast<int>(scope.map.size());
        // By-value parameters are consumed by the call; references are not.
        for (const typesys::TypeTerm& p : spec.scheme.params)
            spec.consumes.push_back(p.kind != typesys::TypeTerm::Kind::ref);
        spec.variants = std::move(tr.variants);
        db.fns.push_back(std::move(spec));
    }
    return rpil::render_function_db(db);
}

}  // namespace pinaudit::mirlite

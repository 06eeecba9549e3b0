#include "pinaudit/rpil.hpp"

#include <cctype>
#include <stdexcept>

namespace pinaudit::rpil {

const char* instr_name(InstrKind k) {
    switch (k) {
        case InstrKind::borrow: return "BORROW";
        case InstrKind::bind: return "BIND";
        case InstrKind::deref_pin: return "DEREF-PIN";
        case InstrKind::deref_move: return "DEREF-MOVE";
        case InstrKind::forget: return "FORGET";
    }
    return "";
}

std::string render_instruction(const RpilInstruction& instr) {
    std::string out = instr_name(instr.kind);
    out += "(";
    out += render_place(instr.lhs);
    if (instr.is_binary()) {
        out += ", ";
        out += render_place(instr.rhs);
    }
    out += ")";
    return out;
}

std::string render_variant(const Variant& v) {
    if (v.empty()) return ";";
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += " ";
        out += render_instruction(v[i]);
        out += ";";
    }
    return out;
}

const FunctionSpec* FunctionDb::find(std::string_view name) const {
    for (const FunctionSpec& f : fns) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

namespace {

typesys::TypeScheme make_scheme(int num_vars, std::vector<typesys::TypeTerm> params,
                                typesys::TypeTerm ret) {
    typesys::TypeScheme s;
    s.num_vars = num_vars;
    s.params = std::move(params);
    s.ret = std::move(ret);
    return s;
}

FunctionSpec make_builtin(std::string name, typesys::TypeScheme scheme, Variant body,
                          bool consume) {
    FunctionSpec f;
    f.name = std::move(name);
    f.scheme = std::move(scheme);
    f.variants.push_back(std::move(body));
    f.consumes.assign(1, consume);
    f.builtin = true;
    return f;
}

}  // namespace

std::vector<FunctionSpec> builtin_specs() {
    using typesys::TypeTerm;
    TypeTerm tv = TypeTerm::make_var(0);
    Place r0 = Place::var(Variable::slot(0));
    Place r1 = Place::var(Variable::slot(1));

    std::vector<FunctionSpec> out;
    out.push_back(make_builtin(
        "borrow", make_scheme(1, {tv}, TypeTerm::make_ref(false, tv)),
        {RpilInstruction::binary(InstrKind::borrow, r0, r1)}, false));
    out.push_back(make_builtin(
        "borrow_mut", make_scheme(1, {tv}, TypeTerm::make_ref(true, tv)),
        {RpilInstruction::binary(InstrKind::borrow, r0, r1)}, false));
    out.push_back(make_builtin(
        "deref_move", make_scheme(1, {TypeTerm::make_ref(true, tv)}, TypeTerm::unit()),
        {RpilInstruction::unary(InstrKind::deref_move, r1)}, true));
    out.push_back(make_builtin(
        "forget", make_scheme(1, {tv}, TypeTerm::unit()),
        {RpilInstruction::unary(InstrKind::forget, r1)}, true));
    return out;
}

namespace {

class Cursor {
public:
    explicit Cursor(std::string_view text) : text_(text) {}

    void skip_blank() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                ++pos_;
            } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    bool done() {
        skip_blank();
        return pos_ >= text_.size();
    }

    bool try_word(std::string_view w) {
        skip_blank();
        if (text_.compare(pos_, w.size(), w) != 0) return false;
        std::size_t end = pos_ + w.size();
        if (end < text_.size() && word_char(text_[end])) return false;
        pos_ = end;
        return true;
    }

    bool try_char(char c) {
        skip_blank();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_char(char c, const char* what) {
        if (!try_char(c)) fail(std::string("expected '") + c + "' " + what);
    }

    // A word is alnum/underscore segments, optionally chained with '::'.
    // A lone ':' is a boundary, so keywords like 'consumes:' stay two tokens.
    std::string word(const char* what) {
        skip_blank();
        std::size_t start = pos_;
        while (pos_ < text_.size()) {
            if (word_char(text_[pos_])) {
                ++pos_;
            } else if (pos_ > start && text_[pos_] == ':' && pos_ + 2 < text_.size() &&
                       text_[pos_ + 1] == ':' && word_char(text_[pos_ + 2])) {
                pos_ += 2;
            } else {
                break;
            }
        }
        if (start == pos_) fail(std::string("expected ") + what);
        return std::string(text_.substr(start, pos_ - start));
    }

    // Instruction mnemonics use uppercase and '-'.
    std::string mnemonic() {
        skip_blank();
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isupper(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-')) {
            ++pos_;
        }
        if (start == pos_) fail("expected instruction");
        return std::string(text_.substr(start, pos_ - start));
    }

    char peek() {
        skip_blank();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    std::size_t pos() const { return pos_; }
    std::string_view text() const { return text_; }
    std::size_t& pos_ref() { return pos_; }

    [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos_); }

private:
    static bool word_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

Place parse_operand(Cursor& cur) {
    cur.skip_blank();
    return parse_place_prefix(cur.text(), cur.pos_ref());
}

RpilInstruction parse_instruction(Cursor& cur) {
    std::string name = cur.mnemonic();
    InstrKind kind;
    bool binary = false;
    if (name == "BORROW") {
        kind = InstrKind::borrow;
        binary = true;
    } else if (name == "BIND") {
        kind = InstrKind::bind;
        binary = true;
    } else if (name == "DEREF-PIN") {
        kind = InstrKind::deref_pin;
    } else if (name == "DEREF-MOVE") {
        kind = InstrKind::deref_move;
    } else if (name == "FORGET") {
        kind = InstrKind::forget;
    } else {
        cur.fail("unknown instruction '" + name + "'");
    }
    cur.expect_char('(', "after instruction name");
    Place lhs = parse_operand(cur);
    Place rhs;
    if (binary) {
        cur.expect_char(',', "between operands");
        rhs = parse_operand(cur);
    }
    cur.expect_char(')', "after operands");
    cur.expect_char(';', "after instruction");
    if (binary) return RpilInstruction::binary(kind, std::move(lhs), std::move(rhs));
    return RpilInstruction::unary(kind, std::move(lhs));
}

Variant parse_variant_body(Cursor& cur) {
    cur.expect_char('{', "to open variant");
    Variant body;
    if (cur.try_char(';')) {
        // `;` alone is the empty body.
        cur.expect_char('}', "to close variant");
        return body;
    }
    while (!cur.try_char('}')) {
        body.push_back(parse_instruction(cur));
    }
    return body;
}

int parse_slot_number(Cursor& cur) {
    std::string w = cur.word("parameter slot");
    if (w.size() < 2 || w[0] != '_') cur.fail("expected parameter slot like _1");
    for (std::size_t i = 1; i < w.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(w[i]))) {
            cur.fail("expected parameter slot like _1");
        }
    }
    return std::stoi(w.substr(1));
}

void check_variant_roots(const FunctionSpec& f, const Variant& v, Cursor& cur) {
    auto check = [&](const Place& p) {
        if (p.root.space != VarSpace::slot || p.root.index < 0 ||
            p.root.index > f.arity()) {
            cur.fail("variant of '" + f.name + "' references undeclared root '" +
                     render_variable(p.root) + "'");
        }
    };
    for (const RpilInstruction& instr : v) {
        check(instr.lhs);
        if (instr.is_binary()) check(instr.rhs);
    }
}

}  // namespace

Variant parse_variant_text(std::string_view text) {
    Cursor cur(text);
    Variant out;
    if (cur.try_char(';')) {
        if (!cur.done()) cur.fail("trailing text after empty body");
        return out;
    }
    while (!cur.done()) {
        out.push_back(parse_instruction(cur));
    }
    return out;
}

FunctionDb parse_function_db(std::string_view text) {
    Cursor cur(text);
    FunctionDb db;
    while (!cur.done()) {
        if (cur.try_char('#')) {
            std::string pragma = cur.word("pragma name");
            if (pragma != "defaults") cur.fail("unknown pragma '#" + pragma + "'");
            std::string value = cur.word("'on' or 'off'");
            if (value == "on") {
                db.defaults = true;
            } else if (value == "off") {
                db.defaults = false;
            } else {
                cur.fail("defaults pragma takes 'on' or 'off'");
            }
            continue;
        }
        if (!cur.try_word("fn")) cur.fail("expected 'fn' or '#defaults'");
        FunctionSpec f;
        f.name = cur.word("function name");
        cur.expect_char('(', "after function name");
        typesys::LetterScope scope;
        if (!cur.try_char(')')) {
            while (true) {
                cur.skip_blank();
                f.scheme.params.push_back(
                    typesys::parse_type_prefix(cur.text(), cur.pos_ref(), scope));
                if (cur.try_char(',')) continue;
                cur.expect_char(')', "after parameter types");
                break;
            }
        }
        cur.expect_char('-', "before return type");
        cur.expect_char('>', "before return type");
        cur.skip_blank();
        f.scheme.ret = typesys::parse_type_prefix(cur.text(), cur.pos_ref(), scope);
        f.scheme.num_vars = static_cast<int>(scope.map.size());
        f.consumes.assign(f.scheme.params.size(), false);

        if (cur.try_word("consumes")) {
            cur.expect_char(':', "after 'consumes'");
            while (true) {
                int slot = parse_slot_number(cur);
                if (slot < 1 || slot > f.arity()) {
                    cur.fail("consumes slot _" + std::to_string(slot) +
                             " out of range for '" + f.name + "'");
                }
                f.consumes[static_cast<std::size_t>(slot - 1)] = true;
                if (!cur.try_char(',')) break;
            }
        }
        while (cur.try_word("variant")) {
            Variant v = parse_variant_body(cur);
            check_variant_roots(f, v, cur);
            f.variants.push_back(std::move(v));
        }
        if (f.variants.empty()) cur.fail("function '" + f.name + "' has no variants");
        if (db.find(f.name)) cur.fail("duplicate function name '" + f.name + "'");
        db.fns.push_back(std::move(f));
    }
    if (db.defaults) {
        for (FunctionSpec& b : builtin_specs()) {
            if (db.find(b.name)) {
                throw ParseError("duplicate function name '" + b.name +
                                     "' (clashes with a builtin)",
                                 text.size());
            }
            db.fns.push_back(std::move(b));
        }
    }
    return db;
}

std::string render_function_db(const FunctionDb& db) {
    std::string out;
    if (db.defaults) out += "#defaults on\n";
    for (const FunctionSpec& f : db.fns) {
        if (f.builtin) continue;
        out += "fn " + f.name + "(";
        for (std::size_t i = 0; i < f.scheme.params.size(); ++i) {
            if (i) out += ", ";
            out += typesys::render_type(f.scheme.params[i]);
        }
        out += ") -> " + typesys::render_type(f.scheme.ret) + "\n";
        bool any_consumed = false;
        for (bool c : f.consumes) any_consumed |= c;
        if (any_consumed) {
            out += "  consumes:";
            bool first = true;
            for (std::size_t i = 0; i < f.consumes.size(); ++i) {
                if (!f.consumes[i]) continue;
                out += first ? " " : ", ";
                out += "_" + std::to_string(i + 1);
                first = false;
            }
            out += "\n";
        }
        for (const Variant& v : f.variants) {
            out += "  variant { " + render_variant(v) + " }\n";
        }
    }
    return out;
}

Variant substitute(const Variant& variant, const Variable& ret,
                   const std::vector<Variable>& args) {
    auto rename = [&](const Place& p) {
        if (p.root.space != VarSpace::slot) {
            throw std::logic_error("substitute: non-slot root in function body");
        }
        Place out = p;
        if (p.root.index == 0) {
            out.root = ret;
        } else {
            std::size_t i = static_cast<std::size_t>(p.root.index - 1);
            if (i >= args.size()) {
                throw std::logic_error("substitute: argument arity mismatch");
            }
            out.root = args[i];
        }
        return out;
    };
    Variant out;
    out.reserve(variant.size());
    for (const RpilInstruction& instr : variant) {
        RpilInstruction r = instr;
        r.lhs = rename(instr.lhs);
        if (instr.is_binary()) r.rhs = rename(instr.rhs);
        out.push_back(std::move(r));
    }
    return out;
}

}  //  namespace pinaudit::rpil

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pinaudit/place.hpp"
#include "pinaudit/typesys.hpp"

namespace pinaudit::rpil {

enum class InstrKind { borrow, bind, deref_pin, deref_move, forget };

const char* instr_name(InstrKind k);

// BORROW and BIND take (lhs, rhs); DEREF-PIN, DEREF-MOVE and FORGET take a
// single operand stored in lhs.
struct RpilInstruction {
    InstrKind kind = InstrKind::borrow;
    Place lhs;
    Place rhs;

    static RpilInstruction unary(InstrKind k, Place p) {
        return {k, std::move(p), {}};
    }
    static RpilInstruction binary(InstrKind k, Place l, Place r) {
        return {k, std::move(l), std::move(r)};
    }
    bool is_binary() const {
        return kind == InstrKind::borrow || kind == InstrKind::bind;
    }

    bool operator==(const RpilInstruction&) const = default;
};

using Variant = std::vector<RpilInstruction>;

std::string render_instruction(const RpilInstruction& instr);
// `BORROW(_0, _1); BIND(_0[1], _2);` -- a lone `;` for the empty variant.
std::string render_variant(const Variant& v);

// A callable's model: type scheme, one RPIL variant per control-flow path,
// and per-parameter consumption flags.
struct FunctionSpec {
    std::string name;
    typesys::TypeScheme scheme;
    std::vector<Variant> variants;
    std::vector<bool> consumes;
    bool builtin = false;

    int arity() const { return static_cast<int>(scheme.params.size()); }

    bool operator==(const FunctionSpec&) const = default;
};

// File order is preserved; it drives enumeration priority during synthesis.
struct FunctionDb {
    std::vector<FunctionSpec> fns;
    bool defaults = false;

    const FunctionSpec* find(std::string_view name) const;

    bool operator==(const FunctionDb&) const = default;
};

// The four builtins appended by `#defaults on`: borrow and borrow_mut (the
// only non-consuming ones), deref_move, and forget.
std::vector<FunctionSpec> builtin_specs();

FunctionDb parse_function_db(std::string_view text);

// Parses a bare instruction sequence like "BORROW(_0, _1); FORGET(_1);".
// A single ";" denotes the empty sequence. Roots are not restricted here.
Variant parse_variant_text(std::string_view text);

// Emits the database text format: the defaults pragma plus library entries.
// Builtins are never rendered; reparsing restores them via the pragma.
std::string render_function_db(const FunctionDb& db);

// Replaces slot roots: _0 becomes ret, _i becomes args[i-1]. Paths are kept.
Variant substitute(const Variant& variant, const Variable& ret,
                   const std::vector<Variable>& args);

}  // namespace pinaudit::rpil

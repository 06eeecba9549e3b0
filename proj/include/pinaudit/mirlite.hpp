#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pinaudit/place.hpp"
#include "pinaudit/rpil.hpp"

namespace pinaudit::mirlite {

// Operand of an aggregate or call: a local, optionally marked `move`. A bare
// local reads as a copy.
struct MirOperand {
    bool is_move = false;
    int local = 0;

    bool operator==(const MirOperand&) const = default;
};

struct MirRhs {
    enum class Kind { use, ref_of, aggregate };

    Kind kind = Kind::use;
    MirOperand use;                   // use
    bool ref_mut = false;             // ref_of
    int ref_local = 0;                // ref_of
    std::string ctor;                 // aggregate
    std::vector<MirOperand> fields;   // aggregate, in ctor-table field order

    bool operator==(const MirRhs&) const = default;
};

struct MirStatement {
    int dst = 0;
    MirRhs rhs;

    bool operator==(const MirStatement&) const = default;
};

struct MirTerminator {
    enum class Kind { ret, goto_to, branch, call };

    Kind kind = Kind::ret;
    int target = -1;                  // goto_to and call continuation
    std::vector<int> targets;         // branch successors, as listed
    int dst = -1;                     // call destination local
    std::string callee;               // call
    std::vector<MirOperand> args;     // call

    bool operator==(const MirTerminator&) const = default;
};

struct MirBlock {
    int id = 0;
    std::vector<MirStatement> statements;
    MirTerminator term;

    bool operator==(const MirBlock&) const = default;
};

struct MirFunction {
    std::string name;
    bool is_pub = false;
    bool has_unsafe = false;               // `unsafe` marker: body hides unsafe ops
    std::vector<std::string> param_types;  // declared text for _1.._k
    std::string ret_type;
    std::vector<MirBlock> blocks;          // ascending id; block 0 present

    const MirBlock* block(int id) const;

    bool operator==(const MirFunction&) const = default;
};

// Constructor shapes are inferred from first use and must stay consistent:
// same arity, and for brace form the same field-name set (fields are
// reordered into first-use order, which numbers them 1..k).
struct CtorInfo {
    int arity = 0;
    std::vector<std::string> field_names;  // empty for parenthesized ctors

    bool operator==(const CtorInfo&) const = default;
};

struct MirProgram {
    std::vector<MirFunction> fns;
    std::map<std::string, CtorInfo> ctors;

    const MirFunction* find(std::string_view name) const;
};

MirProgram parse_mirlite(std::string_view text);  // throws ParseError

// Fixed per-call effects, written over slots: _0 is the destination and
// _1.._k the call arguments. A leading BIND(_0, ...) forwards the value
// mapping instead of emitting.
using IntrinsicTable = std::map<std::string, rpil::Variant>;

// Lines of the form `path::to::fn => INSTR; INSTR;`.
IntrinsicTable parse_intrinsics(std::string_view text);  // throws ParseError

// Pin construction, swap/replace, forget, and unwrap-style forwarding.
IntrinsicTable builtin_intrinsics();

struct TranslateOptions {
    int max_block_visits = 2;  // per path and inline frame
    int max_inline_depth = 8;
};

class TranslateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Translation {
    std::vector<rpil::Variant> variants;  // one per path, first-listed successor first
    std::vector<std::string> warnings;    // dropped paths and dropped instructions
};

// Enumerates every control-flow path of fn (inlining same-program callees,
// applying intrinsic templates) and finalizes each into one RPIL variant.
// Paths that exceed the visit or inline caps, or use a moved local, are
// dropped with a warning. Unknown callees throw.
Translation translate(const MirFunction& fn, const MirProgram& program,
                      const IntrinsicTable& intrinsics,
                      const TranslateOptions& topt = {});

// Renders the translated program as a function-database file. Exports the
// `pub` functions, or every function when none is marked. A function whose
// paths were all dropped is an error.
std::string export_function_db(const MirProgram& program,
                               const IntrinsicTable& intrinsics,
                               const TranslateOptions& topt = {},
                               bool with_defaults = true);

}  // namespace pinaudit::mirlite

#pragma once

#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pinaudit {

// Error for all text-format front ends; offset is a byte position into the
// parsed buffer.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg), offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

namespace rpil {

// Variables live in three disjoint spaces: program variables v1, v2, ...
// (one defined per program line), function-body slots _0 (return slot) and
// _1.._k (parameters), and free-form names used by tests.
enum class VarSpace { program, slot, named };

struct Variable {
    VarSpace space = VarSpace::program;
    int index = 0;          // program: >= 1; slot: >= 0
    std::string name;       // named space only

    static Variable program(int i) { return {VarSpace::program, i, {}}; }
    static Variable slot(int i) { return {VarSpace::slot, i, {}}; }
    static Variable named(std::string n) {
        return {VarSpace::named, 0, std::move(n)};
    }

    bool operator==(const Variable&) const = default;
    auto operator<=>(const Variable&) const = default;
};

// One path step: sub-structure index k >= 1 (fields are numbered from 1 in
// declaration order) or a dereference.
struct Selector {
    int v = 0;  // 0 encodes deref, k >= 1 encodes field k

    static Selector deref() { return Selector{0}; }
    static Selector index(int k) { return Selector{k}; }
    bool is_deref() const { return v == 0; }

    bool operator==(const Selector&) const = default;
    auto operator<=>(const Selector&) const = default;
};

// A value location: a variable refined by a selector path. An empty path
// denotes the whole variable.
struct Place {
    Variable root;
    std::vector<Selector> path;

    static Place var(Variable v) { return {std::move(v), {}}; }

    // Non-strict: every place is a prefix of itself.
    bool is_prefix_of(const Place& other) const;
    Place child(Selector s) const;
    bool has_deref() const;

    bool operator==(const Place&) const = default;
    auto operator<=>(const Place&) const = default;
};

std::string render_variable(const Variable& v);
std::string render_place(const Place& p);

// Parses a place starting at pos; advances pos just past the consumed text.
// Grammar: place := atom | place '[' int ']' ; atom := var | '(' '*' place ')'
Place parse_place_prefix(std::string_view text, std::size_t& pos);

// Whole-string parse; trailing characters are an error.
Place parse_place(std::string_view text);

}  // namespace rpil
}  // namespace pinaudit

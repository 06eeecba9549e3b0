#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "pinaudit/interp.hpp"
#include "pinaudit/rpil.hpp"
#include "pinaudit/synth.hpp"
#include "pinaudit/typesys.hpp"

namespace pinaudit::synth {

// Admissible lower bound on the number of further statements any extension
// of a context needs before the goal can hold. Precomputes, per database,
// which functions can pin / move / forget, and the closure of value types
// constructible from nothing (every context variable's type is an instance
// of a member, since contexts only ever grow by function application).
//
// The bound never exceeds the true distance: each charged statement is
// keyed by a type that any witness program must produce with a distinct
// statement, and all approximations fall back toward zero.
class DistanceOracle {
public:
    static constexpr int kUnreachable = 1 << 20;

    DistanceOracle(const rpil::FunctionDb& db, const interp::Options& opt);

    int lower_bound(const interp::Context& ctx, const Goal& goal) const;

private:
    struct Caps {
        bool pin = false;
        bool mv = false;
        bool fg = false;
        bool combo_mv = false;  // pins and moves within one variant
        bool combo_fg = false;  // pins and forgets within one variant
    };

    bool achievable(const typesys::TypeTerm& t) const;
    int need_args(const rpil::FunctionSpec& fn, const interp::Context& ctx,
                  int& fresh) const;
    int need(const typesys::TypeTerm& t, const interp::Context& ctx,
             std::vector<typesys::TypeTerm>& counted, int& fresh, int depth) const;

    const rpil::FunctionDb& db_;
    interp::Options opt_;
    std::vector<Caps> caps_;
    std::vector<typesys::TypeTerm> constructible_;
    bool everything_ = false;  // closure overflowed; treat all types as constructible

    // The bound depends on the context only through the alive-variable type
    // multiset and whether a pinned entry exists, which many search nodes
    // share.
    mutable std::unordered_map<std::string, int> memo_;
};

}  // namespace pinaudit::synth

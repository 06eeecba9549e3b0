#pragma once

// Brute-force reference engine for differential tests: enumerate every
// syntactic statement per line (database order, ascending argument tuples,
// then variant index), re-interpret the whole candidate from scratch, and
// recurse only into accepted prefixes. Accepted-prefix counts match the
// search engine's "partial candidates expanded" metric for the eager
// strategy; solutions are collected at exactly the target length.

#include <functional>
#include <vector>

#include "pinaudit/interp.hpp"
#include "pinaudit/rpil.hpp"
#include "pinaudit/synth.hpp"

namespace testsupport {

struct BruteCounts {
    std::vector<long long> per_length;  // [l-1]: accepted prefixes of length l
    std::vector<pinaudit::synth::Solution> solutions;

    long long total() const {
        long long sum = 0;
        for (long long c : per_length) sum += c;
        return sum;
    }
};

inline BruteCounts brute_search(const pinaudit::rpil::FunctionDb& db,
                                const pinaudit::synth::Goal& goal, int target,
                                const pinaudit::interp::Options& opt = {}) {
    namespace interp = pinaudit::interp;
    namespace rpil = pinaudit::rpil;
    namespace synth = pinaudit::synth;

    BruteCounts out;
    out.per_length.assign(static_cast<std::size_t>(target), 0);
    interp::Program prefix;

    auto attempt = [&](const interp::Statement& st,
                       const std::function<void()>& rec) {
        prefix.push_back(st);
        bool ok = false;
        interp::Context last;
        try {
            interp::Trace tr = interp::interpret(prefix, db, opt);
            last = std::move(tr.back());
            ok = true;
        } catch (const interp::ExecError&) {
        }
        if (ok) {
            ++out.per_length[prefix.size() - 1];
            if (static_cast<int>(prefix.size()) == target) {
                if (synth::goal_satisfied(last, goal))
                    out.solutions.push_back(
                        {prefix, *synth::goal_witness(last, goal)});
            } else {
                rec();
            }
        }
        prefix.pop_back();
    };

    std::function<void()> rec = [&]() {
        int depth = static_cast<int>(prefix.size());
        int ret = depth + 1;
        for (const rpil::FunctionSpec& fn : db.fns) {
            int arity = fn.arity();
            auto try_args = [&](const std::vector<int>& args) {
                for (std::size_t vi = 0; vi < fn.variants.size(); ++vi)
                    attempt({ret, fn.name, args, static_cast<int>(vi)}, rec);
            };
            if (arity == 0) {
                try_args({});
                continue;
            }
            if (depth == 0) continue;  // no variables to pass yet
            std::vector<int> args(static_cast<std::size_t>(arity), 1);
            for (;;) {
                try_args(args);
                int k = arity - 1;
                while (k >= 0 && args[static_cast<std::size_t>(k)] == depth) {
                    args[static_cast<std::size_t>(k)] = 1;
                    --k;
                }
                if (k < 0) break;
                ++args[static_cast<std::size_t>(k)];
            }
        }
    };
    rec();
    return out;
}

}  // namespace testsupport

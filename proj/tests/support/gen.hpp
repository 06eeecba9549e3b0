#pragma once

// Seeded random databases for differential testing: up to four library
// functions with small bodies and shallow places, mostly ground types with
// an occasional type variable. Databases are emitted as text and run
// through the real parser, so every generated database is well formed by
// construction.
//
// Two entries are biased rather than uniform so the search spaces stay
// interesting: the first function is always a nullary constructor (without
// materials nothing is enumerable), and often one function pins its argument
// and hands back the pinning reference, which keeps short violating programs
// reachable through deref_move.

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pinaudit/rpil.hpp"

namespace testsupport {

inline pinaudit::rpil::FunctionDb random_db(std::mt19937& rng) {
    auto pick = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    static const char* const kGrounds[] = {"Alpha", "Beta", "Gamma"};

    auto type_text = [&]() -> std::string {
        std::string base = pick(0, 9) == 9 ? "T" : kGrounds[pick(0, 2)];
        switch (pick(0, 3)) {
        case 0: return "&" + base;
        case 1: return "&mut " + base;
        default: return base;
        }
    };
    auto place_text = [&](int max_root) -> std::string {
        std::string p = "_" + std::to_string(pick(0, max_root));
        int steps = pick(0, 2);
        for (int s = 0; s < steps; ++s) {
            if (pick(0, 3) == 0)
                p = "(*" + p + ")";
            else
                p += "[" + std::to_string(pick(1, 2)) + "]";
        }
        return p;
    };

    std::ostringstream db;
    db << "#defaults " << (pick(0, 3) ? "on" : "off") << "\n";

    db << "fn f0() -> " << kGrounds[pick(0, 2)] << "\n  variant { ; }\n";
    int pinner = pick(0, 9) < 6 ? pick(1, 3) : -1;

    int nfns = pick(1, 3);
    for (int f = 1; f <= nfns; ++f) {
        if (f == pinner) {
            const char* ground = kGrounds[pick(0, 2)];
            db << "fn f" << f << "(" << ground << ") -> &mut " << ground << "\n";
            if (pick(0, 3) == 0) db << "  consumes: _1\n";
            db << "  variant { BORROW(_0, _1); DEREF-PIN(_0); }\n";
            continue;
        }
        int arity = pick(0, 2);
        db << "fn f" << f << "(";
        for (int a = 0; a < arity; ++a)
            db << (a ? ", " : "") << type_text();
        db << ") -> " << (pick(0, 3) == 0 ? "()" : type_text()) << "\n";
        std::string consumed;
        for (int a = 1; a <= arity; ++a)
            if (pick(0, 1))
                consumed += (consumed.empty() ? "" : ", ") +
                            ("_" + std::to_string(a));
        if (!consumed.empty()) db << "  consumes: " << consumed << "\n";
        int nvariants = pick(1, 2);
        for (int v = 0; v < nvariants; ++v) {
            db << "  variant { ";
            int ninstr = pick(0, 3);
            if (ninstr == 0) db << "; ";
            for (int i = 0; i < ninstr; ++i) {
                switch (pick(0, 4)) {
                case 0:
                    db << "BORROW(" << place_text(arity) << ", "
                       << place_text(arity) << "); ";
                    break;
                case 1:
                    db << "BIND(" << place_text(arity) << ", "
                       << place_text(arity) << "); ";
                    break;
                case 2:
                    db << "DEREF-PIN(" << place_text(arity) << "); ";
                    break;
                case 3:
                    db << "DEREF-MOVE(" << place_text(arity) << "); ";
                    break;
                default:
                    db << "FORGET(" << place_text(arity) << "); ";
                    break;
                }
            }
            db << "}\n";
        }
    }
    return pinaudit::rpil::parse_function_db(db.str());
}

}  // namespace testsupport

// Command-line front end: translate MIR-lite into a function database,
// interpret linear programs, and search for goal-reaching call sequences.
//
// Exit codes: 0 clean / nothing found, 1 input or execution error,
// 2 violation or goal found, 3 budget exhausted.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pinaudit/interp.hpp"
#include "pinaudit/mirlite.hpp"
#include "pinaudit/place.hpp"
#include "pinaudit/rpil.hpp"
#include "pinaudit/synth.hpp"

namespace {

using nlohmann::ordered_json;
namespace interp = pinaudit::interp;
namespace mirlite = pinaudit::mirlite;
namespace rpil = pinaudit::rpil;
namespace synth = pinaudit::synth;

constexpr int kExitClean = 0;
constexpr int kExitError = 1;
constexpr int kExitFound = 2;
constexpr int kExitBudget = 3;
constexpr std::size_t kWhitelistCap = 10;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

// Offset to 1-based line:column for error messages.
std::string at_offset(const std::string& text, std::size_t off) {
    int line = 1;
    int col = 1;
    for (std::size_t i = 0; i < off && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return std::to_string(line) + ":" + std::to_string(col);
}

[[noreturn]] void input_error(const std::string& file, const std::string& text,
                              const pinaudit::ParseError& e) {
    std::cerr << file << ":" << at_offset(text, e.offset())
              << ": error: " << e.what() << "\n";
    std::exit(kExitError);
}

rpil::FunctionDb load_db(const std::string& path, bool no_defaults) {
    std::string text = slurp(path);
    rpil::FunctionDb db;
    try {
        db = rpil::parse_function_db(text);
    } catch (const pinaudit::ParseError& e) {
        input_error(path, text, e);
    }
    if (no_defaults) {
        std::erase_if(db.fns,
                      [](const rpil::FunctionSpec& f) { return f.builtin; });
        db.defaults = false;
    }
    return db;
}

// Keeps at most kWhitelistCap library functions (builtins ride along).
// Explicit names must exist; the default is the first ten in file order.
void apply_whitelist(rpil::FunctionDb& db, const std::vector<std::string>& names) {
    if (names.size() > kWhitelistCap)
        throw std::runtime_error("--functions accepts at most " +
                                 std::to_string(kWhitelistCap) + " names");
    if (!names.empty()) {
        for (const std::string& n : names) {
            const rpil::FunctionSpec* f = db.find(n);
            if (!f || f->builtin)
                throw std::runtime_error("--functions names unknown function '" +
                                         n + "'");
        }
        std::erase_if(db.fns, [&](const rpil::FunctionSpec& f) {
            return !f.builtin &&
                   std::find(names.begin(), names.end(), f.name) == names.end();
        });
        return;
    }
    std::size_t library = 0;
    for (const rpil::FunctionSpec& f : db.fns)
        if (!f.builtin) ++library;
    if (library <= kWhitelistCap) return;
    std::cerr << "note: analyzing the first " << kWhitelistCap << " of "
              << library << " library functions\n";
    std::size_t kept = 0;
    std::erase_if(db.fns, [&](const rpil::FunctionSpec& f) {
        if (f.builtin) return false;
        return ++kept > kWhitelistCap;
    });
}

synth::Goal parse_goal(const std::string& s) {
    if (s == "pinned_moved") return synth::Goal::violation(synth::Goal::Which::moved);
    if (s == "pinned_forgotten")
        return synth::Goal::violation(synth::Goal::Which::forgotten);
    if (s == "any") return synth::Goal::violation(synth::Goal::Which::any);
    if (s.rfind("borrows:", 0) == 0) {
        std::string rest = s.substr(8);
        std::size_t colon = rest.find(':');
        if (colon == std::string::npos)
            throw std::runtime_error("borrows goal needs the form borrows:R:P");
        return synth::Goal::borrows(rpil::parse_place(rest.substr(0, colon)),
                                    rpil::parse_place(rest.substr(colon + 1)));
    }
    throw std::runtime_error(
        "unknown goal '" + s +
        "' (expected pinned_moved, pinned_forgotten, any, or borrows:R:P)");
}

std::vector<std::string> program_lines(const interp::Program& prog) {
    std::vector<std::string> out;
    out.reserve(prog.size());
    for (const interp::Statement& st : prog)
        out.push_back(interp::render_statement(st));
    return out;
}

// ---------------------------------------------------------------- translate

struct TranslateArgs {
    std::string input;
    std::string intrinsics;
    std::string out;
    bool no_defaults = false;
};

int cmd_translate(const TranslateArgs& args) {
    std::string text = slurp(args.input);
    mirlite::MirProgram prog;
    try {
        prog = mirlite::parse_mirlite(text);
    } catch (const pinaudit::ParseError& e) {
        input_error(args.input, text, e);
    }
    mirlite::IntrinsicTable table = mirlite::builtin_intrinsics();
    if (!args.intrinsics.empty()) {
        std::string itext = slurp(args.intrinsics);
        try {
            for (auto& [name, tmpl] : mirlite::parse_intrinsics(itext))
                table.insert_or_assign(name, std::move(tmpl));
        } catch (const pinaudit::ParseError& e) {
            input_error(args.intrinsics, itext, e);
        }
    }
    if (prog.fns.empty()) {
        std::cerr << "warning: no functions in '" << args.input << "'\n";
        write_output(args.out, rpil::render_function_db(
                                   {{}, !args.no_defaults}));
        return kExitClean;
    }
    // Functions hiding unsafe operations come first: database order drives
    // enumeration priority downstream.
    std::stable_sort(prog.fns.begin(), prog.fns.end(),
                     [](const mirlite::MirFunction& a,
                        const mirlite::MirFunction& b) {
                         return a.has_unsafe > b.has_unsafe;
                     });
    bool any_pub = std::any_of(
        prog.fns.begin(), prog.fns.end(),
        [](const mirlite::MirFunction& f) { return f.is_pub; });
    for (const mirlite::MirFunction& fn : prog.fns) {
        if (any_pub && !fn.is_pub) continue;
        mirlite::Translation tr = mirlite::translate(fn, prog, table);
        for (const std::string& w : tr.warnings)
            std::cerr << "warning: " << w << "\n";
        std::cout << fn.name << ": " << tr.variants.size()
                  << (tr.variants.size() == 1 ? " variant" : " variants")
                  << "\n";
    }
    write_output(args.out,
                 mirlite::export_function_db(prog, table, {}, !args.no_defaults));
    return kExitClean;
}

// ---------------------------------------------------------------- interpret

struct InterpretArgs {
    std::string db;
    std::string program;
    std::string emit = "text";
    bool no_defaults = false;
};

ordered_json context_json(const interp::Context& ctx) {
    ordered_json edges = ordered_json::array();
    for (const interp::Edge& e : ctx.edges)
        edges.push_back({{"src", rpil::render_place(e.src)},
                         {"dst", rpil::render_place(e.dst)}});
    ordered_json states = ordered_json::array();
    for (const interp::StateEntry& s : ctx.states)
        states.push_back({{"place", rpil::render_place(s.place)},
                          {"state", interp::state_name(s.state)}});
    return {{"edges", std::move(edges)}, {"states", std::move(states)}};
}

int cmd_interpret(const InterpretArgs& args) {
    rpil::FunctionDb db = load_db(args.db, args.no_defaults);
    std::string text = slurp(args.program);
    interp::Program prog;
    try {
        prog = interp::parse_program(text);
    } catch (const pinaudit::ParseError& e) {
        input_error(args.program, text, e);
    }
    interp::Trace trace;
    try {
        trace = interp::interpret(prog, db);
    } catch (const interp::ExecError& e) {
        std::cerr << e.what() << "\n";
        return kExitError;
    }
    std::vector<interp::StateEntry> viol;
    if (!trace.empty()) viol = interp::violations(trace.back());
    if (args.emit == "json") {
        ordered_json lines = ordered_json::array();
        for (std::size_t i = 0; i < trace.size(); ++i) {
            ordered_json entry = context_json(trace[i]);
            entry["line"] = static_cast<int>(i) + 1;
            ordered_json ordered;
            ordered["line"] = entry["line"];
            ordered["edges"] = entry["edges"];
            ordered["states"] = entry["states"];
            lines.push_back(std::move(ordered));
        }
        ordered_json violations = ordered_json::array();
        for (const interp::StateEntry& v : viol)
            violations.push_back({{"place", rpil::render_place(v.place)},
                                  {"state", interp::state_name(v.state)}});
        ordered_json report{{"lines", std::move(lines)},
                            {"violations", std::move(violations)}};
        std::cout << report.dump(2) << "\n";
    } else {
        std::cout << interp::render_trace(trace);
    }
    return viol.empty() ? kExitClean : kExitFound;
}

// --------------------------------------------------------------- synthesize

struct SynthesizeArgs {
    std::string db;
    std::string goal = "any";
    int max_len = 6;
    std::string strategy = "lazy";
    double timeout_secs = 36000;
    long long stub_budget = 1000000000;
    std::vector<std::string> functions;
    bool no_defaults = false;
    bool all_solutions = false;
    bool prune_distance = false;
    std::string emit = "text";
};

const char* goal_phrase(const synth::Goal& goal) {
    return goal.kind == synth::Goal::Kind::violation ? "violation" : "solution";
}

int cmd_synthesize(const SynthesizeArgs& args) {
    rpil::FunctionDb db = load_db(args.db, args.no_defaults);
    apply_whitelist(db, args.functions);
    synth::Goal goal = parse_goal(args.goal);
    synth::Strategy strategy;
    if (args.strategy == "eager")
        strategy = synth::Strategy::eager;
    else if (args.strategy == "lazy")
        strategy = synth::Strategy::lazy_liveness;
    else
        throw std::runtime_error("unknown strategy '" + args.strategy +
                                 "' (expected eager or lazy)");
    synth::SynthBudget budget;
    budget.wall_seconds = args.timeout_secs;
    budget.max_stubs = args.stub_budget;
    budget.use_goal_distance = args.prune_distance;

    if (args.all_solutions) {
        synth::AllSolutionsReport rep =
            synth::all_solutions(db, goal, args.max_len, strategy, budget);
        if (args.emit == "json") {
            ordered_json sols = ordered_json::array();
            for (const synth::Solution& s : rep.solutions)
                sols.push_back({{"program", program_lines(s.program)},
                                {"witness_place", s.witness}});
            ordered_json report{{"goal", args.goal},
                                {"strategy", args.strategy},
                                {"len", args.max_len},
                                {"solutions", std::move(sols)},
                                {"stubs_explored", rep.stubs_explored},
                                {"wall_time_ms", rep.wall_ms},
                                {"budget_exhausted", rep.budget_exhausted}};
            std::cout << report.dump(2) << "\n";
        } else {
            for (std::size_t i = 0; i < rep.solutions.size(); ++i) {
                std::cout << "solution " << i + 1 << " (witness "
                          << rep.solutions[i].witness << "):\n"
                          << synth::emit_program(rep.solutions[i].program, db,
                                                 synth::EmitStyle::annotated);
            }
            std::cout << rep.solutions.size() << " solution"
                      << (rep.solutions.size() == 1 ? "" : "s")
                      << " of length " << args.max_len << "\n"
                      << "stubs explored: " << rep.stubs_explored << "\n";
        }
        if (rep.budget_exhausted) return kExitBudget;
        return rep.solutions.empty() ? kExitClean : kExitFound;
    }

    synth::SynthesisReport rep =
        synth::synthesize(db, goal, args.max_len, strategy, budget);
    if (args.emit == "json") {
        ordered_json per_length = ordered_json::array();
        for (const synth::PerLength& pl : rep.per_length)
            per_length.push_back({{"len", pl.len},
                                  {"stubs", pl.stubs},
                                  {"solutions", pl.solutions}});
        ordered_json report;
        report["goal"] = args.goal;
        report["strategy"] = args.strategy;
        report["max_len"] = args.max_len;
        if (rep.found) {
            report["found"] = program_lines(rep.found->program);
            report["witness_place"] = rep.found->witness;
        } else {
            report["found"] = nullptr;
            report["witness_place"] = nullptr;
        }
        report["stubs_explored"] = rep.stubs_explored;
        report["wall_time_ms"] = rep.wall_ms;
        report["budget_exhausted"] = rep.budget_exhausted;
        report["per_length"] = std::move(per_length);
        std::cout << report.dump(2) << "\n";
    } else {
        for (const synth::PerLength& pl : rep.per_length)
            std::cout << "length " << pl.len << ": " << pl.stubs << " stubs, "
                      << pl.solutions
                      << (pl.solutions == 1 ? " solution" : " solutions")
                      << "\n";
        if (rep.found) {
            std::cout << "found a length-" << rep.found->program.size()
                      << " program:\n"
                      << synth::emit_program(rep.found->program, db,
                                             synth::EmitStyle::annotated)
                      << "witness: " << rep.found->witness << "\n";
        } else if (rep.budget_exhausted) {
            std::cout << "budget exhausted at length " << rep.length_reached + 1
                      << "\n";
        } else {
            std::cout << "no " << goal_phrase(goal) << " up to length "
                      << args.max_len << "\n";
        }
        std::cout << "stubs explored: " << rep.stubs_explored << "\n";
    }
    if (rep.budget_exhausted) return kExitBudget;
    return rep.found ? kExitFound : kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "pinaudit: models library calls in a reference-provenance IR, "
        "interprets call sequences, and searches for pin-contract violations"};
    app.require_subcommand(1);

    TranslateArgs targs;
    CLI::App* tr = app.add_subcommand(
        "translate", "translate a MIR-lite file into a function database");
    tr->add_option("--input", targs.input, "MIR-lite source file")->required();
    tr->add_option("--intrinsics", targs.intrinsics,
                   "extra intrinsic templates (override the built-ins)");
    tr->add_option("--out", targs.out, "output database file ('-' = stdout)");
    tr->add_flag("--no-defaults", targs.no_defaults,
                 "emit the database with the builtin pragma off");

    InterpretArgs iargs;
    CLI::App* it = app.add_subcommand(
        "interpret", "interpret a linear program over a function database");
    it->add_option("--db", iargs.db, "function database file")->required();
    it->add_option("--program", iargs.program, "program file")->required();
    it->add_option("--emit", iargs.emit, "output format: text or json")
        ->check(CLI::IsMember({"text", "json"}));
    it->add_flag("--no-defaults", iargs.no_defaults,
                 "strip the builtin functions");

    SynthesizeArgs sargs;
    CLI::App* sy = app.add_subcommand(
        "synthesize", "search for a program reaching a goal state");
    sy->add_option("--db", sargs.db, "function database file")->required();
    sy->add_option("--goal", sargs.goal,
                   "pinned_moved, pinned_forgotten, any, or borrows:R:P");
    sy->add_option("--max-len", sargs.max_len,
                   "deepest length tried (exact length with --all-solutions)")
        ->check(CLI::PositiveNumber);
    sy->add_option("--strategy", sargs.strategy, "eager or lazy")
        ->check(CLI::IsMember({"eager", "lazy"}));
    sy->add_option("--timeout-secs", sargs.timeout_secs, "wall-clock budget")
        ->check(CLI::PositiveNumber);
    sy->add_option("--stub-budget", sargs.stub_budget,
                   "partial-candidate budget")
        ->check(CLI::PositiveNumber);
    sy->add_option("--functions", sargs.functions,
                   "comma-separated whitelist of at most 10 library functions")
        ->delimiter(',');
    sy->add_flag("--no-defaults", sargs.no_defaults,
                 "strip the builtin functions");
    sy->add_flag("--all-solutions", sargs.all_solutions,
                 "list every solution of exactly --max-len");
    sy->add_flag("--prune-distance", sargs.prune_distance,
                 "enable goal-distance lower-bound pruning");
    sy->add_option("--emit", sargs.emit, "output format: text or json")
        ->check(CLI::IsMember({"text", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitClean : kExitError;
    }

    try {
        if (tr->parsed()) return cmd_translate(targs);
        if (it->parsed()) return cmd_interpret(iargs);
        return cmd_synthesize(sargs);
    } catch (const pinaudit::mirlite::TranslateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const pinaudit::ParseError& e) {
        std::cerr << "error: " << e.what() << " (offset "
                  << e.offset() << ")\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitClean;
}

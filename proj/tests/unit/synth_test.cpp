#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gen.hpp"
#include "oracle.hpp"
#include "pinaudit/goal_distance.hpp"
#include "pinaudit/interp.hpp"
#include "pinaudit/rpil.hpp"
#include "pinaudit/synth.hpp"

using namespace pinaudit;
using namespace pinaudit::synth;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

rpil::FunctionDb corpus_db(const char* name) {
    return rpil::parse_function_db(slurp(std::string(PINAUDIT_CORPUS_DIR) + "/" + name));
}

interp::Program corpus_prog(const char* name) {
    return interp::parse_program(slurp(std::string(PINAUDIT_CORPUS_DIR) + "/" + name));
}

rpil::Place vplace(int i) { return rpil::Place::var(rpil::Variable::program(i)); }

// Programs compare cleanly; witnesses ride along for the set comparisons.
std::vector<std::pair<std::string, std::string>> keyed(const std::vector<Solution>& sols,
                                                       const rpil::FunctionDb& db) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Solution& s : sols) {
        out.emplace_back(emit_program(s.program, db, EmitStyle::pseudocode), s.witness);
    }
    return out;
}

}  // namespace

TEST_CASE("goal predicates read the final context") {
    rpil::FunctionDb db = corpus_db("usage_pin.rpil");
    interp::Trace trace = interpret(corpus_prog("usage4.prog"), db);
    const interp::Context& ctx = trace.back();

    CHECK(goal_satisfied(ctx, Goal::violation(Goal::Which::moved)));
    CHECK(goal_satisfied(ctx, Goal::violation(Goal::Which::any)));
    CHECK_FALSE(goal_satisfied(ctx, Goal::violation(Goal::Which::forgotten)));
    CHECK(goal_witness(ctx, Goal::violation(Goal::Which::moved)) == std::string("v1"));

    CHECK(goal_satisfied(ctx, Goal::borrows(vplace(2), vplace(1))));
    CHECK_FALSE(goal_satisfied(ctx, Goal::borrows(vplace(1), vplace(2))));
    CHECK_FALSE(goal_witness(ctx, Goal::violation(Goal::Which::forgotten)).has_value());
}

TEST_CASE("statement enumeration is deterministic and mode-aware") {
    rpil::FunctionDb db = corpus_db("usage_min.rpil");
    interp::Options opt;
    interp::Context empty;
    auto first = enumerate_statements(empty, db, opt, interp::Mode::full);
    // Only the nullary constructor applies to an empty context.
    REQUIRE(first.size() == 1);
    CHECK(first[0].first == interp::Statement{1, "SelfRef::new", {}, 0});

    // After one constructor, every unary builtin and the constructor again.
    auto second = enumerate_statements(first[0].second, db, opt, interp::Mode::full);
    std::vector<std::string> rendered;
    for (auto& [stmt, ctx] : second) rendered.push_back(interp::render_statement(stmt));
    CHECK(rendered == std::vector<std::string>{
                          "v2 = SelfRef::new()",
                          "v2 = borrow(v1)",
                          "v2 = borrow_mut(v1)",
                          "v2 = forget(v1)",
                      });
}

TEST_CASE("the two length-2 borrow programs are found in order") {
    rpil::FunctionDb db = corpus_db("usage_min.rpil");
    Goal goal = Goal::borrows(vplace(2), vplace(1));
    for (Strategy strat : {Strategy::eager, Strategy::lazy_liveness}) {
        CAPTURE(static_cast<int>(strat));
        AllSolutionsReport report = all_solutions(db, goal, 2, strat);
        REQUIRE(report.solutions.size() == 2);
        CHECK(emit_program(report.solutions[0].program, db, EmitStyle::pseudocode) ==
              "let mut v1 = SelfRef::new();\n"
              "let mut v2 = borrow(v1);\n");
        CHECK(emit_program(report.solutions[1].program, db, EmitStyle::pseudocode) ==
              "let mut v1 = SelfRef::new();\n"
              "let mut v2 = borrow_mut(v1);\n");
        CHECK(report.solutions[0].witness == "v1");
        CHECK(report.solutions[1].witness == "v1");
        CHECK_FALSE(report.budget_exhausted);
    }
}

TEST_CASE("the four-line pin violation is found and is minimal") {
    rpil::FunctionDb db = corpus_db("usage_pin.rpil");
    for (Strategy strat : {Strategy::eager, Strategy::lazy_liveness}) {
        CAPTURE(static_cast<int>(strat));
        SynthesisReport report =
            synthesize(db, Goal::violation(Goal::Which::moved), 4, strat);
        REQUIRE(report.found.has_value());
        CHECK(emit_program(report.found->program, db, EmitStyle::pseudocode) ==
              "let mut v1 = SelfRef::new();\n"
              "let mut v2 = borrow_mut(v1);\n"
              "let mut v3 = mylib::pin_new(v2);\n"
              "let mut v4 = deref_move(v2);\n");
        CHECK(report.found->witness == "v1");
        CHECK(report.found->program == corpus_prog("usage4.prog"));
        REQUIRE(report.per_length.size() == 4);
        for (int i = 0; i < 3; ++i) CHECK(report.per_length[i].solutions == 0);
        CHECK_FALSE(report.budget_exhausted);
    }
}

TEST_CASE("annotated emission prints the substituted effects") {
    rpil::FunctionDb db = corpus_db("usage_pin.rpil");
    interp::Program prog = corpus_prog("usage4.prog");
    CHECK(emit_program(prog, db, EmitStyle::annotated) ==
          "let mut v1 = SelfRef::new(); // ;\n"
          "let mut v2 = borrow_mut(v1); // BORROW(v2, v1);\n"
          "let mut v3 = mylib::pin_new(v2); // DEREF-PIN(v2);\n"
          "let mut v4 = deref_move(v2); // DEREF-MOVE(v2);\n");
}

TEST_CASE("eager stub counts equal the brute-force census") {
    // No function in this database can pin, so the goal never fires and the
    // search walks the entire space of rule-consistent programs.
    rpil::FunctionDb db = corpus_db("usage_min.rpil");
    Goal goal = Goal::violation(Goal::Which::any);
    testsupport::BruteCounts brute = testsupport::brute_search(db, goal, 3);
    SynthesisReport report = synthesize(db, goal, 3, Strategy::eager);
    CHECK_FALSE(report.found.has_value());
    CHECK(report.length_reached == 3);
    REQUIRE(report.per_length.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(report.per_length[i].stubs == brute.per_length[static_cast<std::size_t>(i)]);
    }
    CHECK(report.stubs_explored == brute.total());
}

TEST_CASE("both strategies return the brute-force solution set") {
    std::mt19937 rng(424242);
    int nonempty = 0;
    for (int round = 0; round < 30; ++round) {
        rpil::FunctionDb db = testsupport::random_db(rng);
        Goal goal = (round % 3 == 0) ? Goal::borrows(vplace(2), vplace(1))
                                     : Goal::violation(Goal::Which::any);
        for (int len = 1; len <= 3; ++len) {
            testsupport::BruteCounts brute = testsupport::brute_search(db, goal, len);
            auto expect = keyed(brute.solutions, db);
            for (Strategy strat : {Strategy::eager, Strategy::lazy_liveness}) {
                AllSolutionsReport got = all_solutions(db, goal, len, strat);
                CAPTURE(round);
                CAPTURE(len);
                CAPTURE(static_cast<int>(strat));
                REQUIRE(keyed(got.solutions, db) == expect);
            }
            if (!expect.empty()) ++nonempty;
        }
    }
    CHECK(nonempty > 5);  // the sample must contain real positives
}

TEST_CASE("distance pruning never changes the minimal answer") {
    std::mt19937 rng(777);
    SynthBudget pruned;
    pruned.use_goal_distance = true;
    int found_count = 0;
    for (int round = 0; round < 40; ++round) {
        rpil::FunctionDb db = testsupport::random_db(rng);
        Goal goal = Goal::violation(Goal::Which::any);
        SynthesisReport plain = synthesize(db, goal, 3, Strategy::lazy_liveness);
        SynthesisReport fast = synthesize(db, goal, 3, Strategy::lazy_liveness, pruned);
        CAPTURE(round);
        REQUIRE(plain.found.has_value() == fast.found.has_value());
        if (plain.found) {
            ++found_count;
            CHECK(plain.found->program.size() == fast.found->program.size());
            CHECK(emit_program(plain.found->program, db, EmitStyle::pseudocode) ==
                  emit_program(fast.found->program, db, EmitStyle::pseudocode));
            CHECK(plain.found->witness == fast.found->witness);
        }
    }
    CHECK(found_count > 3);

    // Same check on the handwritten corpus database.
    rpil::FunctionDb db = corpus_db("usage_pin.rpil");
    Goal goal = Goal::violation(Goal::Which::moved);
    SynthesisReport plain = synthesize(db, goal, 4, Strategy::eager);
    SynthesisReport fast = synthesize(db, goal, 4, Strategy::eager, pruned);
    REQUIRE(plain.found.has_value());
    REQUIRE(fast.found.has_value());
    CHECK(plain.found->program == fast.found->program);
    CHECK(fast.stubs_explored <= plain.stubs_explored);
}

TEST_CASE("the distance oracle stays below every witnessed length") {
    std::mt19937 rng(31337);
    interp::Options opt;
    int bounded = 0;
    for (int round = 0; round < 50; ++round) {
        rpil::FunctionDb db = testsupport::random_db(rng);
        Goal goal = Goal::violation(Goal::Which::any);
        DistanceOracle oracle(db, opt);
        int lb = oracle.lower_bound(interp::Context{}, goal);
        for (int len = 1; len <= 3; ++len) {
            testsupport::BruteCounts brute = testsupport::brute_search(db, goal, len);
            if (!brute.solutions.empty()) {
                CAPTURE(round);
                CAPTURE(len);
                REQUIRE(lb <= len);
                ++bounded;
                break;
            }
        }
    }
    CHECK(bounded > 3);
}

TEST_CASE("the distance oracle prices the deep corpus goals") {
    interp::Options opt;
    {
        rpil::FunctionDb db = corpus_db("rio.rpil");
        DistanceOracle oracle(db, opt);
        CHECK(oracle.lower_bound(interp::Context{},
                                 Goal::violation(Goal::Which::forgotten)) == 12);
    }
    {
        rpil::FunctionDb db = corpus_db("moveit.rpil");
        DistanceOracle oracle(db, opt);
        int lb = oracle.lower_bound(interp::Context{}, Goal::violation(Goal::Which::moved));
        CHECK(lb >= 3);  // deliberately weak, must stay sound
        CHECK(lb <= 8);  // the known length-8 witness caps it
    }
}

TEST_CASE("a stub budget stops the search and reports exhaustion") {
    rpil::FunctionDb db = corpus_db("usage_pin.rpil");
    SynthBudget tiny;
    tiny.max_stubs = 5;
    SynthesisReport report =
        synthesize(db, Goal::violation(Goal::Which::moved), 4, Strategy::eager, tiny);
    CHECK(report.budget_exhausted);
    CHECK_FALSE(report.found.has_value());
    CHECK(report.stubs_explored <= 6);  // stops right at the check
}

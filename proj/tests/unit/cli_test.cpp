#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunResult {
    int exit_code = -1;
    std::string output;
};

// Runs the installed binary through the shell, capturing stdout (and stderr
// when merged). The exit code is the process's own, not the shell's signal
// wrapper.
RunResult run_cli(const std::string& args, bool merge_stderr = true) {
    std::string cmd = std::string(PINAUDIT_CLI_PATH) + " " + args +
                      (merge_stderr ? " 2>&1" : " 2>/dev/null");
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult res;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) res.output.append(buf, n);
    int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string corpus(const char* name) {
    return std::string(PINAUDIT_CORPUS_DIR) + "/" + name;
}

// Scratch files live under the test's own subdirectory of /tmp.
std::string scratch_file(const char* name, const std::string& text) {
    fs::path dir = fs::temp_directory_path() / "pinaudit_cli_test";
    fs::create_directories(dir);
    fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return text;
}

const char* kGoldenTrace =
    "line 1: { }\n"
    "line 2: { v2->v1 }\n"
    "line 3: { v2->v1, v2[2][1]->v2[1] }\n"
    "line 4: { v2->v1, v2[2][1]->v2[1], v1:pinned }\n"
    "line 5: { v2->v1, v2[2][1]->v2[1], v1:pinned }\n"
    "line 6: { v2->v1, v2[2][1]->v2[1], v1:pinned_moved }\n";

}  // namespace

TEST_CASE("interpret renders the trace and signals the violation") {
    RunResult res = run_cli("interpret --db " + corpus("mylib.rpil") +
                            " --program " + corpus("selfref.prog"));
    CHECK(res.exit_code == 2);
    CHECK(res.output == kGoldenTrace);
}

TEST_CASE("interpret exits clean when nothing is violated") {
    std::string prog = scratch_file("one.prog", "v1 = SelfRef::new()\n");
    RunResult res = run_cli("interpret --db " + corpus("mylib.rpil") +
                            " --program " + prog);
    CHECK(res.exit_code == 0);
    CHECK(res.output == "line 1: { }\n");
}

TEST_CASE("interpret reports execution errors with the line") {
    std::string prog = scratch_file("bad.prog", "v1 = borrow(v9)\n");
    RunResult res = run_cli("interpret --db " + corpus("mylib.rpil") +
                            " --program " + prog);
    CHECK(res.exit_code == 1);
    CHECK(res.output == "line 1: dead or undefined variable v9\n");
}

TEST_CASE("interpret emits machine-readable traces") {
    RunResult res = run_cli("interpret --db " + corpus("mylib.rpil") +
                                " --program " + corpus("selfref.prog") +
                                " --emit json",
                            false);
    CHECK(res.exit_code == 2);
    json report = json::parse(res.output);
    REQUIRE(report.contains("lines"));
    REQUIRE(report.contains("violations"));
    REQUIRE(report["lines"].size() == 6);
    CHECK(report["lines"][0]["line"] == 1);
    CHECK(report["lines"][0]["edges"].empty());
    CHECK(report["lines"][1]["edges"][0]["src"] == "v2");
    CHECK(report["lines"][1]["edges"][0]["dst"] == "v1");
    CHECK(report["lines"][3]["states"][0]["place"] == "v1");
    CHECK(report["lines"][3]["states"][0]["state"] == "pinned");
    REQUIRE(report["violations"].size() == 1);
    CHECK(report["violations"][0]["place"] == "v1");
    CHECK(report["violations"][0]["state"] == "pinned_moved");
}

TEST_CASE("synthesize finds the minimal pin violation") {
    RunResult res = run_cli("synthesize --db " + corpus("usage_pin.rpil") +
                            " --goal pinned_moved --max-len 4");
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("found a length-4 program:\n") != std::string::npos);
    CHECK(res.output.find("let mut v1 = SelfRef::new(); // ;\n") != std::string::npos);
    CHECK(res.output.find("let mut v2 = borrow_mut(v1); // BORROW(v2, v1);\n") !=
          std::string::npos);
    CHECK(res.output.find("let mut v3 = mylib::pin_new(v2); // DEREF-PIN(v2);\n") !=
          std::string::npos);
    CHECK(res.output.find("let mut v4 = deref_move(v2); // DEREF-MOVE(v2);\n") !=
          std::string::npos);
    CHECK(res.output.find("witness: v1\n") != std::string::npos);
}

TEST_CASE("synthesize reports in the frozen json shape") {
    RunResult res = run_cli("synthesize --db " + corpus("usage_pin.rpil") +
                                " --goal pinned_moved --max-len 4 --emit json",
                            false);
    CHECK(res.exit_code == 2);
    json report = json::parse(res.output);
    const char* keys[] = {"goal",           "strategy",      "max_len",
                          "found",          "witness_place", "stubs_explored",
                          "wall_time_ms",   "budget_exhausted", "per_length"};
    CHECK(report.size() == 9);
    for (const char* k : keys) {
        CAPTURE(k);
        CHECK(report.contains(k));
    }
    CHECK(report["goal"] == "pinned_moved");
    CHECK(report["max_len"] == 4);
    REQUIRE(report["found"].is_array());
    std::vector<std::string> lines = report["found"];
    CHECK(lines == std::vector<std::string>{
                       "v1 = SelfRef::new()",
                       "v2 = borrow_mut(v1)",
                       "v3 = mylib::pin_new(v2)",
                       "v4 = deref_move(v2)",
                   });
    CHECK(report["witness_place"] == "v1");
    REQUIRE(report["per_length"].size() == 4);
    CHECK(report["per_length"][0]["len"] == 1);
    CHECK(report["per_length"][0]["solutions"] == 0);
    CHECK(report["per_length"][3]["solutions"].get<int>() >= 1);
    CHECK_FALSE(report["budget_exhausted"].get<bool>());
}

TEST_CASE("synthesize reports absence honestly") {
    RunResult res = run_cli("synthesize --db " + corpus("usage_min.rpil") +
                            " --goal any --max-len 3");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("no violation up to length 3\n") != std::string::npos);
}

TEST_CASE("a stub budget forces the distinct exhaustion exit") {
    RunResult res = run_cli("synthesize --db " + corpus("usage_pin.rpil") +
                            " --goal pinned_moved --max-len 4 --stub-budget 5");
    CHECK(res.exit_code == 3);
    CHECK(res.output.find("budget exhausted at length") != std::string::npos);
}

TEST_CASE("all-solutions lists both borrow programs") {
    std::string base = "synthesize --db " + corpus("usage_min.rpil") +
                       " --goal borrows:v2:v1 --max-len 2 --all-solutions";
    RunResult res = run_cli(base);
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("solution 1 (witness v1):\n") != std::string::npos);
    CHECK(res.output.find("solution 2 (witness v1):\n") != std::string::npos);
    CHECK(res.output.find("let mut v2 = borrow(v1); // BORROW(v2, v1);\n") !=
          std::string::npos);
    CHECK(res.output.find("let mut v2 = borrow_mut(v1); // BORROW(v2, v1);\n") !=
          std::string::npos);
    CHECK(res.output.find("2 solutions of length 2\n") != std::string::npos);

    json report = json::parse(run_cli(base + " --emit json", false).output);
    REQUIRE(report["solutions"].size() == 2);
    CHECK(report["solutions"][0]["program"][1] == "v2 = borrow(v1)");
    CHECK(report["solutions"][1]["program"][1] == "v2 = borrow_mut(v1)");
    CHECK(report["len"] == 2);
}

TEST_CASE("translate exports the decomposed store into a database") {
    std::string out = scratch_file("store_refs.rpil", "");
    RunResult res = run_cli("translate --input " + corpus("store_refs.mir") +
                            " --out " + out);
    CHECK(res.exit_code == 0);
    CHECK(res.output == "store_refs: 1 variant\n");
    std::string db = slurp(out);
    CHECK(db.find("fn store_refs(&mut T, &mut T) -> RefStore<T>\n") != std::string::npos);
    CHECK(db.find("  variant { BIND(_0[1][1], _1); BIND(_0[2][1], _2); }\n") !=
          std::string::npos);
    CHECK(db.find("#defaults on\n") == 0);
}

TEST_CASE("translate keeps only public functions when any exist") {
    std::string out = scratch_file("wrapper.rpil", "");
    RunResult res = run_cli("translate --input " + corpus("wrapper.mir") +
                            " --out " + out);
    CHECK(res.exit_code == 0);
    CHECK(res.output == "wrapper: 1 variant\n");
    std::string db = slurp(out);
    CHECK(db.find("fn wrapper(&mut T) -> Pin<&mut T>\n") != std::string::npos);
    CHECK(db.find("DEREF-PIN(_1);") != std::string::npos);
    CHECK(db.find("fn inner") == std::string::npos);
}

TEST_CASE("whitelists restrict the analyzed functions") {
    RunResult res = run_cli("synthesize --db " + corpus("usage_pin.rpil") +
                            " --goal pinned_moved --max-len 4" +
                            " --functions SelfRef::new,mylib::pin_new");
    CHECK(res.exit_code == 2);

    RunResult missing = run_cli("synthesize --db " + corpus("usage_pin.rpil") +
                                " --functions no_such_fn");
    CHECK(missing.exit_code == 1);
    CHECK(missing.output.find("error:") != std::string::npos);
}

TEST_CASE("bad inputs exit with code one") {
    CHECK(run_cli("interpret --db /nonexistent.rpil --program /also/missing").exit_code == 1);
    std::string bad = scratch_file("bad.rpil", "fn broken(\n");
    RunResult res = run_cli("synthesize --db " + bad);
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("error") != std::string::npos);
    RunResult goal = run_cli("synthesize --db " + corpus("usage_min.rpil") +
                             " --goal sideways");
    CHECK(goal.exit_code == 1);
    RunResult subcmd = run_cli("");
    CHECK(subcmd.exit_code == 1);
}

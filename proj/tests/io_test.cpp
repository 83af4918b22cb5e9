#include <doctest.h>

#include <sys/wait.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "helpers.hpp"
#include "specbal/errors.hpp"
#include "specbal/matrix_io.hpp"
#include "specbal/spectral.hpp"

using namespace specbal;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
    static const fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "specbal_io_test";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

std::string write_text(const std::string& name, const std::string& content) {
    const fs::path p = test_dir() / name;
    std::ofstream out(p);
    out << content;
    return p.string();
}

// Runs the CLI binary with stdout/stderr captured; returns the exit code.
int run_cli(const std::string& args, std::string* output = nullptr) {
    const fs::path log = test_dir() / "cli_output.txt";
    const std::string cmd =
        std::string("\"") + SPECBAL_CLI_PATH + "\" " + args + " > \"" + log.string() +
        "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    if (output) {
        std::ifstream in(log);
        std::ostringstream ss;
        ss << in.rdbuf();
        *output = ss.str();
    }
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

std::uint64_t fnv1a64_oracle(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

TEST_CASE("matrix set JSON round trip preserves every bit") {
    CounterRng rng(81, 0);
    MatrixSet set(helpers::random_pd_family(rng, 4, 3));
    const json j = matrix_set_to_json(set);
    // Through a real file, so the serialized text is what gets re-read.
    const fs::path p = test_dir() / "roundtrip.json";
    save_matrix_set(set, p.string());
    const MatrixSet back = load_matrix_set(p.string());
    REQUIRE(back.count() == set.count());
    REQUIRE(back.dim() == set.dim());
    for (int i = 0; i < set.count(); ++i) {
        CHECK((back[i].m() - set[i].m()).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(parse_matrix_set(j).dim() == 4);
}

TEST_CASE("matrix set parsing rejects bad input with a precise message") {
    SUBCASE("not an object") {
        CHECK_THROWS_WITH_AS(parse_matrix_set(json::array()),
                             doctest::Contains("must be an object"), InputError);
    }
    SUBCASE("missing fields") {
        CHECK_THROWS_AS(parse_matrix_set(json{{"dim", 2}}), InputError);
    }
    SUBCASE("asymmetric entry is named") {
        json j;
        j["dim"] = 2;
        j["matrices"] = json::array({json::array({json::array({1.0, 0.5}),
                                                  json::array({0.3, 1.0})})});
        CHECK_THROWS_WITH_AS(parse_matrix_set(j),
                             doctest::Contains("matrix 0 is asymmetric at (0,1)"),
                             InputError);
    }
    SUBCASE("dimension mismatch is named") {
        json j;
        j["dim"] = 3;
        j["matrices"] = json::array({json::array({json::array({1.0, 0.0}),
                                                  json::array({0.0, 1.0})})});
        CHECK_THROWS_WITH_AS(parse_matrix_set(j), doctest::Contains("\"dim\" is 3"),
                             InputError);
    }
    SUBCASE("non positive definite member is named") {
        json j;
        j["dim"] = 2;
        const json id = json::array({json::array({1.0, 0.0}), json::array({0.0, 1.0})});
        const json neg = json::array({json::array({1.0, 0.0}), json::array({0.0, -1.0})});
        j["matrices"] = json::array({id, neg});
        CHECK_THROWS_WITH_AS(parse_matrix_set(j),
                             doctest::Contains("matrix 1 is not positive definite"),
                             InputError);
    }
    SUBCASE("non numeric entry is named") {
        json j;
        j["dim"] = 1;
        j["matrices"] = json::array({json::array({json::array({"x"})})});
        CHECK_THROWS_WITH_AS(parse_matrix_set(j),
                             doctest::Contains("entry (0,0) is not a number"), InputError);
    }
    SUBCASE("malformed file") {
        const std::string p = write_text("broken.json", "{\"dim\": 2,");
        CHECK_THROWS_WITH_AS(load_matrix_set(p), doctest::Contains("malformed JSON"),
                             InputError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_WITH_AS(load_matrix_set((test_dir() / "nope.json").string()),
                             doctest::Contains("cannot open"), InputError);
    }
}

TEST_CASE("file hashing") {
    const std::string pa = write_text("hash_a.txt", "abc");
    const std::string pb = write_text("hash_b.txt", "abd");
    const std::string pa2 = write_text("hash_a2.txt", "abc");
    char expect[17];
    std::snprintf(expect, sizeof(expect), "%016llx",
                  static_cast<unsigned long long>(fnv1a64_oracle("abc")));
    CHECK(file_hash(pa) == expect);
    CHECK(file_hash(pa) == file_hash(pa2));
    CHECK(file_hash(pa) != file_hash(pb));
    CHECK(file_hash(pa).size() == 16);
}

TEST_CASE("manifest structure") {
    const std::string p = write_text("mani_input.json", "{}");
    const json m = make_manifest("balance", json{{"k", 2}}, 42, {p});
    CHECK(m["command"] == "balance");
    CHECK(m["config"]["k"] == 2);
    CHECK(m["seed"] == 42);
    CHECK(m["version"] == std::string(kToolVersion));
    REQUIRE(m["inputs"].size() == 1);
    CHECK(m["inputs"][0]["path"] == p);
    CHECK(m["inputs"][0]["fnv1a64"] == file_hash(p));
    const std::string stamp = m["timestamp"].get<std::string>();
    REQUIRE(stamp.size() == 20);
    CHECK(stamp[4] == '-');
    CHECK(stamp[10] == 'T');
    CHECK(stamp.back() == 'Z');
}

TEST_CASE("cli end to end") {
    // A feasible pair in dimension 3, written the way users would supply it.
    CounterRng rng(82, 0);
    MatrixSet pair_set(helpers::random_pd_family(rng, 3, 2));
    const fs::path set_path = test_dir() / "pair.json";
    save_matrix_set(pair_set, set_path.string());

    SUBCASE("balance, verify, and determinism") {
        const fs::path out1 = test_dir() / "result1.json";
        const fs::path out2 = test_dir() / "result2.json";
        std::string text;
        const int rc = run_cli("balance --input \"" + set_path.string() +
                                   "\" --k 2 --out \"" + out1.string() + "\"",
                               &text);
        CHECK(rc == 0);
        CHECK(text.find("Converged") != std::string::npos);

        const json res = read_json_file(out1.string());
        CHECK(res["status"] == "Converged");
        CHECK(res["k"] == 2);
        CHECK(res["final_score"].get<double>() < 0.5);
        const Eigen::MatrixXd a = matrix_from_json(res["A"]);
        for (int i = 0; i < pair_set.count(); ++i) {
            CHECK(balance_ratio(a, pair_set[i]) < 0.5);
        }
        CHECK(res.contains("manifest"));
        CHECK(res["manifest"]["inputs"][0]["fnv1a64"] == file_hash(set_path.string()));

        // Same inputs, same seed: the emitted A must be identical.
        CHECK(run_cli("balance --input \"" + set_path.string() + "\" --k 2 --out \"" +
                      out2.string() + "\"") == 0);
        const json res2 = read_json_file(out2.string());
        CHECK(res["A"] == res2["A"]);
        CHECK(res["final_score"] == res2["final_score"]);

        CHECK(run_cli("verify --input \"" + set_path.string() + "\" --A \"" +
                      out1.string() + "\" --k 2") == 0);
    }

    SUBCASE("balance trace log") {
        const fs::path trace = test_dir() / "trace.csv";
        CHECK(run_cli("balance --input \"" + set_path.string() + "\" --k 2 --trace \"" +
                      trace.string() + "\"") == 0);
        std::ifstream in(trace);
        std::string header;
        std::getline(in, header);
        CHECK(header == "iteration,kind,epsilon,f_before,f_after");
    }

    SUBCASE("infeasible shapes exit with the dedicated code") {
        CHECK(run_cli("balance --input \"" + set_path.string() + "\" --k 3") == 3);
        CounterRng rng2(83, 0);
        MatrixSet three(helpers::random_pd_family(rng2, 3, 3));
        const fs::path p3 = test_dir() / "three.json";
        save_matrix_set(three, p3.string());
        CHECK(run_cli("balance --input \"" + p3.string() + "\" --k 2") == 3);
    }

    SUBCASE("bad input exits 1") {
        const std::string broken = write_text("cli_broken.json", "not json at all");
        std::string text;
        CHECK(run_cli("balance --input \"" + broken + "\" --k 2", &text) == 1);
        CHECK(run_cli("balance --input \"" + (test_dir() / "absent.json").string() +
                      "\" --k 2") == 1);
        CHECK(run_cli("balance --input \"" + set_path.string() + "\" --k 2 --R 0.5") == 1);
    }

    SUBCASE("sharpness demo and verification failure") {
        const fs::path fam_path = test_dir() / "family.json";
        std::string text;
        const int rc = run_cli("sharpness --d 4 --k 3 --trials 50 --out \"" +
                                   fam_path.string() + "\"",
                               &text);
        CHECK(rc == 0);
        CHECK(text.find("witness") != std::string::npos);
        const MatrixSet fam = load_matrix_set(fam_path.string());
        CHECK(fam.count() == 2);
        CHECK(fam.dim() == 4);

        // The identity cannot balance the family; verify must exit 4.
        const std::string id_path = write_text(
            "identity4.json",
            "[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]");
        std::string verify_text;
        CHECK(run_cli("verify --input \"" + fam_path.string() + "\" --A \"" + id_path +
                          "\" --k 3",
                      &verify_text) == 4);
        CHECK(verify_text.find("VIOLATED") != std::string::npos);
    }

    SUBCASE("sharpness parameter validation") {
        CHECK(run_cli("sharpness --d 5 --k 3") == 1);
        CHECK(run_cli("sharpness --d 4 --k 3 --epsilon 0.3") == 1);
    }

    SUBCASE("simulate smoke run") {
        const fs::path csv = test_dir() / "walks.csv";
        const fs::path summary = test_dir() / "walks.json";
        std::string text;
        const int rc = run_cli(
            "simulate --input \"" + set_path.string() +
                "\" --balancer auto --k 2 --strategy round_robin --radius 5"
                " --checkpoints 10,40 --walks 50 --t-max 200 --seed 3 --csv \"" +
                csv.string() + "\" --summary \"" + summary.string() + "\"",
            &text);
        CHECK(rc == 0);

        std::ifstream in(csv);
        std::string header;
        std::getline(in, header);
        CHECK(header == "strategy,T,p_hat,std_err,n_walks,T_max,seed");
        int data_lines = 0;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) ++data_lines;
        }
        CHECK(data_lines == 2);

        const json sum = read_json_file(summary.string());
        CHECK(sum["strategy"] == "round_robin");
        REQUIRE(sum["p_hat"].size() == 2);
        CHECK(sum["p_hat"][0].get<double>() >= sum["p_hat"][1].get<double>());
        CHECK(sum["n_walks"] == 50);
        CHECK(sum.contains("slope"));
        CHECK(sum["manifest"]["command"] == "simulate");
    }

    SUBCASE("unknown subcommand fails") {
        CHECK(run_cli("frobnicate") != 0);
    }
}

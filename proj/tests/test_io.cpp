#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "tlab/experiments.hpp"
#include "tlab/report_io.hpp"

using namespace tlab;
namespace fs = std::filesystem;

namespace {

Json minimal_scenario() {
    return Json::parse(R"j({"version": 1, "domain": [0, 1, 0, 1], "boundary": {"phi": "x"}})j");
}

ErrorCode parse_error_code(const Json& doc) {
    try {
        parse_scenario(doc);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a parse error");
    return ErrorCode::io;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("tlab_test_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream(p) << s;
}

}  // namespace

TEST_CASE("scenario parsing") {
    const Scenario s = parse_scenario(minimal_scenario());
    CHECK(s.boundary.phi({0.25, 0.9}) == 0.25);
    CHECK(s.boundary.dirichlet_sides == all_sides);
    CHECK_FALSE(s.interface.has_value());

    Json doc = minimal_scenario();
    doc["interface"] = Json::parse(R"j({"level": 0.4, "psi": "0.1*sin(2*pi*x)"})j");
    doc["A_plus"] = Json::parse("[[2, 0.5], [0.5, 1]]");
    doc["A_minus"] = "1 + x";
    doc["boundary"]["sides"] = Json::parse(R"j(["bottom", "top"])j");
    const Scenario t = parse_scenario(doc);
    CHECK(t.interface->height(0.25) == doctest::Approx(0.5));
    CHECK(t.coefficient.plus({0, 0}) == Mat2{2, 0.5, 0.5, 1});
    CHECK(t.coefficient.minus({0.5, 0}).xx == 1.5);
    CHECK(t.boundary.dirichlet_sides == (side_bottom | side_top));
}

TEST_CASE("scenario errors name the key") {
    Json doc = minimal_scenario();
    doc["version"] = 2;
    CHECK(parse_error_code(doc) == ErrorCode::config);
    doc = minimal_scenario();
    doc["colour"] = "red";
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("colour"), Error);
    doc = minimal_scenario();
    doc["A_plus"] = "1 + unknown_symbol";
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("A_plus"), Error);
    doc = minimal_scenario();
    doc["domain"] = Json::parse("[0, 1, 1, 0]");
    CHECK(parse_error_code(doc) == ErrorCode::config);
    doc = minimal_scenario();
    doc["inclusion"] = Json::parse(R"j({"shape": {"type": "star"}, "A_hat": 2})j");
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("shape"), Error);
    doc = minimal_scenario();
    doc["boundary"]["sides"] = Json::parse(R"j(["north"])j");
    CHECK(parse_error_code(doc) == ErrorCode::config);
    doc = minimal_scenario();
    doc.erase("boundary");
    CHECK(parse_error_code(doc) == ErrorCode::config);
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), Error);
}

TEST_CASE("number formatting") {
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(-2.5e-300) == "-2.5e-300");
    CHECK(format_number(1e21) == "1e+21");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "null");
    CHECK(format_number(std::nan("")) == "null");
    Rng rng(61);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
        CHECK(std::stod(format_number(v)) == v);
    }
}

TEST_CASE("json writer is deterministic and ordered") {
    Json j = Json::object();
    j["b"] = 1.0 / 3;
    j["a"] = Json::array({1, 2.5, "x", nullptr, true});
    j["nested"] = {{"z", 0.1}};
    const std::string once = dump_json(j);
    CHECK(once == R"j({"b":0.33333333333333331,"a":[1,2.5,"x",null,true],"nested":{"z":0.10000000000000001}})j");
    CHECK(dump_json(Json::parse(once)) == once);
    CHECK(dump_json_pretty(j).back() == '\n');
    CHECK(Json::parse(dump_json_pretty(j)) == Json::parse(once));
}

TEST_CASE("atomic write replaces content") {
    const fs::path dir = scratch("atomic");
    const std::string p = (dir / "f.txt").string();
    write_file_atomic(p, "one");
    write_file_atomic(p, "two");
    std::ifstream in(p);
    std::string s((std::istreambuf_iterator<char>(in)), {});
    CHECK(s == "two");
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir)) files += e.is_regular_file();
    CHECK(files == 1);
    CHECK_THROWS_AS(write_file_atomic(p + "/below", "x"), Error);
}

TEST_CASE("fnv1a") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("size calibration archive round trip") {
    SizeCalibration c;
    c.mode = SizeMode::general;
    c.jump = JumpType::lower;
    c.K1 = 1.0 / 3;
    c.K2 = 2.5;
    c.p = 1.0192;
    c.K2_general = 1.7;
    c.slope = 0.98;
    c.intercept = -0.1;
    c.safety = 2;
    c.fingerprint = "abc";
    c.fit_ids = {"a", "b"};
    c.holdout_ids = {"c"};
    c.excluded = {"d: thin"};
    const Json j = to_json(c);
    CHECK(j["version"] == 1);
    CHECK(j["kind"] == "size-calibration");
    const SizeCalibration r = size_calibration_from_json(Json::parse(dump_json(j)));
    CHECK(r.mode == c.mode);
    CHECK(r.jump == c.jump);
    CHECK(r.K1 == c.K1);
    CHECK(r.K2 == c.K2);
    CHECK(r.p == c.p);
    CHECK(r.K2_general == c.K2_general);
    CHECK(r.safety == c.safety);
    CHECK(r.fingerprint == c.fingerprint);
    CHECK(r.fit_ids == c.fit_ids);
    CHECK(r.holdout_ids == c.holdout_ids);
    Json broken = j;
    broken.erase("K1");
    CHECK_THROWS_AS(size_calibration_from_json(broken), Error);
}

TEST_CASE("report json carries infinite ratios as tags") {
    VerificationReport r;
    r.id = "x";
    r.inequality = "three-sphere";
    r.ratio = std::numeric_limits<double>::infinity();
    r.violation_candidate = true;
    const Json j = to_json(r);
    CHECK(j["ratio"] == "inf");
    r.ratio = 0.5;
    CHECK(to_json(r)["ratio"] == 0.5);
}

TEST_CASE("ledger aggregation") {
    const fs::path dir = scratch("ledger");
    write_text(dir / "one.jsonl", R"j({"inequality":"a","ratio":2.0,"pass":true})j" "\n");
    LedgerSummary s = aggregate_ledgers({(dir / "one.jsonl").string()});
    REQUIRE(s.rows.size() == 1);
    CHECK(s.rows[0].min_ratio == 2.0);
    CHECK(s.rows[0].median_ratio == 2.0);
    CHECK(s.rows[0].max_ratio == 2.0);
    CHECK(s.rows[0].pass_rate == 1.0);

    write_text(dir / "two.jsonl", R"j({"inequality":"b","ratio":1,"pass":false})j" "\n"
                                  "{not json\n"
                                  R"j({"inequality":"b","ratio":3,"pass":true})j" "\n"
                                  R"j({"inequality":"b"})j" "\n"
                                  R"j({"inequality":"a","ratio":4})j" "\n"
                                  R"j({"inequality":"b","ratio":"inf"})j" "\n");
    s = aggregate_ledgers({(dir / "one.jsonl").string(), (dir / "two.jsonl").string()});
    CHECK(s.lines == 7);
    CHECK(s.skipped == 2);
    REQUIRE(s.rows.size() == 2);
    CHECK(s.rows[0].inequality == "a");
    CHECK(s.rows[0].count == 2);
    CHECK(s.rows[0].median_ratio == 3.0);
    CHECK(s.rows[0].judged == 1);
    CHECK(s.rows[1].count == 3);
    CHECK(std::isinf(s.rows[1].max_ratio));
    CHECK(s.rows[1].median_ratio == 3.0);
    CHECK(s.rows[1].pass_rate == 0.5);
    const std::string csv = ledger_csv(s);
    CHECK(csv.rfind("inequality,count,min_ratio,median_ratio,max_ratio,judged,passed,pass_rate\n", 0) == 0);
    CHECK(csv.find(",3,inf,") != std::string::npos);
    CHECK(ledger_table(s).find("lines read: 7, skipped: 2") != std::string::npos);

    CHECK_THROWS_AS(aggregate_ledgers({}), Error);
    try {
        aggregate_ledgers({(dir / "missing.jsonl").string()});
        FAIL("expected an io error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::io);
    }
}

TEST_CASE("experiment config validation") {
    const std::string dir = std::string(TLAB_CONFIG_DIR);
    const ExperimentConfig cfg = load_experiment_config(dir + "/three_region.json");
    CHECK(cfg.command == "verify-three-region");
    CHECK(cfg.seed.has_value());
    CHECK(cfg.scenario.has_value());

    auto bad = [&](const char* text) {
        try {
            parse_experiment_config(Json::parse(text), dir);
        } catch (const Error& e) {
            return e.code() == ErrorCode::config;
        }
        return false;
    };
    CHECK(bad(R"j({"version": 1, "command": "solve", "scenario_file": "scenarios/trivial.json", "typo": 1})j"));
    CHECK(bad(R"j({"version": 1, "command": "fly", "scenario_file": "scenarios/trivial.json"})j"));
    CHECK(bad(R"j({"version": 1, "command": "verify-three-region", "scenario_file": "scenarios/layered.json", "fit_fraction": 0.6, "holdout_fraction": 0.5, "seed": 1})j"));
    CHECK(bad(R"j({"version": 1, "command": "solve", "scenario_file": "scenarios/missing.json"})j"));
    CHECK(bad(R"j({"version": 1, "command": "solve", "scenario_file": "scenarios/trivial.json", "safety": 0.5})j"));
    CHECK(bad(R"j({"version": 1, "command": "solve", "scenario_file": "scenarios/trivial.json", "mesh_h": -1})j"));

    ExperimentConfig c = load_experiment_config(dir + "/three_region.json");
    c.seed.reset();
    CHECK_THROWS_AS(run_experiment(c), Error);
    c = load_experiment_config(dir + "/three_region.json");
    c.members = 8;
    CHECK_THROWS_AS(run_experiment(c), Error);

    RunOverrides o;
    o.seed = 99;
    o.mesh_h = 0.05;
    o.out_dir = "elsewhere";
    c = load_experiment_config(dir + "/three_region.json");
    apply_overrides(c, o);
    CHECK(*c.seed == 99);
    CHECK(*c.mesh_h == 0.05);
    CHECK(c.out_dir == "elsewhere");
    o = {};
    o.mesh_h = 0.0;
    CHECK_THROWS_AS(apply_overrides(c, o), Error);
}

TEST_CASE("solve command writes its outputs and honours checks") {
    const fs::path out = scratch("solve");
    ExperimentConfig c = load_experiment_config(std::string(TLAB_CONFIG_DIR) + "/solve_two_layer.json");
    c.out_dir = out.string();
    RunResult r = run_experiment(c);
    CHECK(r.exit_code == 0);
    for (const char* f : {"solution.csv", "gradients.csv", "mesh.txt", "solve.json"}) CHECK(fs::exists(out / f));
    const Json report = read_json_file((out / "solve.json").string());
    CHECK(report["max_nodal_error"].get<double>() <= 1e-10);
    c.checks["max_nodal_error"] = 0.0;
    r = run_experiment(c);
    CHECK(r.exit_code == 1);
    REQUIRE(r.failing.size() == 1);
    CHECK(r.failing[0].ends_with(":max_nodal_error"));
    c.checks = Json::object({{"speed", 1}});
    CHECK_THROWS_AS(run_experiment(c), Error);
}

TEST_CASE("family fingerprint ignores the inclusion but not the background") {
    const Scenario a = load_scenario(std::string(TLAB_CONFIG_DIR) + "/scenarios/family.json");
    const Scenario b = load_scenario(std::string(TLAB_CONFIG_DIR) + "/scenarios/inclusion.json");
    CHECK(family_fingerprint(a, 1.0 / 64, JumpType::raise, SizeMode::fat) ==
          family_fingerprint(b, 1.0 / 64, JumpType::raise, SizeMode::fat));
    CHECK(family_fingerprint(a, 1.0 / 64, JumpType::raise, SizeMode::fat) !=
          family_fingerprint(a, 1.0 / 32, JumpType::raise, SizeMode::fat));
    CHECK(family_fingerprint(a, 1.0 / 64, JumpType::raise, SizeMode::fat) !=
          family_fingerprint(a, 1.0 / 64, JumpType::raise, SizeMode::general));
    Json doc = a.document;
    doc["A_plus"] = 3;
    CHECK(family_fingerprint(parse_scenario(doc), 1.0 / 64, JumpType::raise, SizeMode::fat) !=
          family_fingerprint(a, 1.0 / 64, JumpType::raise, SizeMode::fat));
}

TEST_CASE("parallel_for rethrows the lowest failing index") {
    std::vector<int> hit(50, 0);
    parallel_for(hit.size(), [&](std::size_t i) { hit[i] = 1; });
    CHECK(std::count(hit.begin(), hit.end(), 1) == 50);
    try {
        parallel_for(20, [](std::size_t i) {
            if (i == 7 || i == 13) throw Error(ErrorCode::geometry, "member " + std::to_string(i));
        });
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()) == "member 7");
    }
}

TEST_CASE("member streams are reproducible and distinct") {
    Rng a = Rng::for_member(7, 3), b = Rng::for_member(7, 3), c = Rng::for_member(7, 4);
    const auto x = a.bits();
    CHECK(x == b.bits());
    CHECK(x != c.bits());
    const Scenario base = load_scenario(std::string(TLAB_CONFIG_DIR) + "/scenarios/layered.json");
    const auto m1 = layered_members(base, 7, 12, 0.2, 5, "m");
    const auto m2 = layered_members(base, 7, 12, 0.2, 5, "m");
    for (std::size_t i = 0; i < m1.size(); ++i) {
        CHECK(m1[i].jump == m2[i].jump);
        CHECK(m1[i].jump >= 0.2);
        CHECK(m1[i].jump <= 5);
        CHECK(m1[i].data({0.3, 0.4}) == m2[i].data({0.3, 0.4}));
    }
    CHECK(m1[3].id == "m-003");
}

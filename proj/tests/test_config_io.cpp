#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "flexstage/config.hpp"
#include "flexstage/errors.hpp"
#include "flexstage/pipeline.hpp"
#include "support.hpp"

using namespace flexstage;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(FLEXSTAGE_SOURCE_DIR) / "configs";

nlohmann::json case_json(const std::string& name) {
    std::ifstream f(kConfigs / (name + ".json"));
    return nlohmann::json::parse(f);
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string config_error(const nlohmann::json& doc) {
    try {
        parse_config(doc.dump());
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("shipped configurations parse") {
    const PipelineConfig c1 = load_config(kConfigs / "case1.json");
    CHECK(c1.name == "case1");
    CHECK(c1.stage.rib_count_x == 4);
    CHECK(c1.constraints().omega_high == doctest::Approx(testing::kTwoPi * 500.0));
    CHECK(c1.actuator_mode == ActuatorMode::optimized);
    CHECK_FALSE(c1.sweep.has_value());

    const PipelineConfig c2 = load_config(kConfigs / "case2.json");
    REQUIRE(c2.sweep.has_value());
    CHECK(c2.sweep->start_hz == 600.0);
    CHECK(c2.sweep->stop_hz == 300.0);
    CHECK(c2.actuator_mode == ActuatorMode::fixed_at_magnets);
    REQUIRE(c2.magnets.has_value());
    CHECK(c2.fixed_actuators().size() == 4);
    CHECK(c2.context().base.point_masses.size() == 4);
}

TEST_CASE("config errors name the offending path") {
    auto doc = case_json("case1");
    doc["stage"]["ribs"] = 3;
    CHECK(config_error(doc) == "config: $.stage: unknown key 'ribs'");

    doc = case_json("case1");
    doc["controller"]["alpha"] = "large";
    CHECK(config_error(doc).find("$.controller") != std::string::npos);

    doc = case_json("case1");
    doc.erase("constraints");
    CHECK(config_error(doc) == "config: $: missing required section 'constraints'");

    doc = case_json("case1");
    doc["mesh"]["shear"] = "reduced";
    CHECK(config_error(doc).find("shear must be") != std::string::npos);

    doc = case_json("case1");
    doc["geometry"]["bounds"]["min"]["base_thickness"] = 0.0005;
    CHECK(config_error(doc).find("manufacturability") != std::string::npos);

    CHECK(config_error(nlohmann::json::parse("[1, 2]")).find("must be an object") != std::string::npos);
    CHECK_THROWS_AS(parse_config("{not json"), InputError);
    CHECK_THROWS_AS(load_config(kConfigs / "missing.json"), InputError);
}

TEST_CASE("report JSON round trip and self comparison") {
    DesignReport r;
    r.name = "demo";
    r.variant = "proposed";
    r.mass_kg = 0.37;
    r.first_resonance_hz = 34.8;
    r.second_resonance_hz = 500.1;
    r.theta_p = {1e-3, 0.02, 1e-3, 0.08, 0.075};
    r.geometry_feasible = true;
    r.omega_high_active = true;
    r.actuators = {{0.1, 0.1}, {-0.1, 0.1}};
    r.sensors = {{0.1, -0.1}, {-0.1, -0.1}};
    r.ja = -1.5;
    r.jo = 0.25;
    ChannelReport ch;
    ch.dof = "theta_x";
    ch.target_hz = 100.0;
    ch.tuned_hz = 75.5;
    ch.bandwidth_hz = 75.5;
    ch.max_sensitivity = 1.99;
    ch.stable = true;
    ch.controller = controller_from_bandwidth(testing::kTwoPi * 75.5, 0.3, 1234.5);
    r.channels.push_back(ch);
    r.max_sensitivity = 1.99;
    r.closed_loop_stable = true;
    r.open_loop_damping = 0.01;
    r.first_flexible_damping = 0.57;

    const fs::path dir = fresh_dir("flexstage_report_test");
    fs::create_directories(dir);
    write_report_json(r, dir / "a.json");
    const DesignReport back = read_report_json(dir / "a.json");
    write_report_json(back, dir / "b.json");
    CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));
    CHECK(back.theta_p.to_array() == r.theta_p.to_array());
    REQUIRE(back.channel("theta_x") != nullptr);
    CHECK(back.channel("theta_x")->controller.kp == doctest::Approx(1234.5));
    CHECK(back.channel("z") == nullptr);

    const auto rows = compare(r, r);
    CHECK(rows.front().metric == "stage_weight_kg");
    for (const auto& row : rows) {
        REQUIRE(row.baseline.has_value());
        CHECK(*row.proposed - *row.baseline == 0.0);
    }
    write_comparison(rows, dir / "comparison");
    std::ifstream csv(dir / "comparison.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "metric,baseline,proposed,delta");
    CHECK(fs::exists(dir / "comparison.txt"));

    std::ofstream(dir / "bad.json") << "{\"mass_kg\": \"heavy\"}";
    CHECK_THROWS_AS(read_report_json(dir / "bad.json"), InputError);
    fs::remove_all(dir);
}

TEST_CASE("design evaluation writes every stage artifact deterministically") {
    auto doc = case_json("case1");
    doc["mesh"]["resolution"] = 8;
    doc["frequency_grid"]["points"] = 120;
    const PipelineConfig cfg = parse_config(doc.dump());
    const GeometryParams params{1e-3, 0.0198, 1e-3, 0.0798, 0.0757};

    const fs::path a = fresh_dir("flexstage_eval_a"), b = fresh_dir("flexstage_eval_b");
    const DesignReport ra = evaluate_design(cfg, params, {a});
    const DesignReport rb = evaluate_design(cfg, params, {b});
    for (const char* name : {"placement.json", "placement_heatmap.csv", "plant.json", "plant_response.csv",
                             "loop_z.csv", "loop_theta_x.csv", "loop_theta_y.csv", "loop_q4.csv",
                             "controllers.json", "report.json"}) {
        REQUIRE_MESSAGE(fs::exists(a / name), name);
        CHECK_MESSAGE(read_file(a / name) == read_file(b / name), name);
    }
    CHECK_FALSE(fs::exists(a / "FAILED"));
    CHECK(ra.channels.size() == 4);
    CHECK(ra.closed_loop_stable);
    CHECK(ra.mass_kg == rb.mass_kg);
    CHECK(read_report_json(a / "report.json").mass_kg == ra.mass_kg);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("a failing stage leaves a FAILED marker and the infeasible exit code") {
    auto doc = case_json("case1");
    doc["mesh"]["resolution"] = 6;
    doc["constraints"]["omega_high_hz"] = 20000.0;
    doc["optimizer"]["max_evaluations"] = 20;
    const PipelineConfig cfg = parse_config(doc.dump());
    const fs::path dir = fresh_dir("flexstage_failed_test");
    try {
        run_pipeline(cfg, {dir});
        FAIL("pipeline should not succeed");
    } catch (const Error& e) {
        CHECK(e.code() == ExitCode::infeasible_design);
        CHECK(std::string(e.what()).rfind("stage geometry", 0) == 0);
    }
    REQUIRE(fs::exists(dir / "FAILED"));
    CHECK(read_file(dir / "FAILED").rfind("stage: geometry\n", 0) == 0);
    CHECK_FALSE(fs::exists(dir / "placement.json"));
    fs::remove_all(dir);
}

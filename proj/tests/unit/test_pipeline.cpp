// End-to-end tests for config parsing, the standard-steps EVSF loaders, and
// the batch stage drivers (synth, flow, trajectories, render, verify).
#include <doctest/doctest.h>

#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evsurf/errors.hpp"
#include "evsurf/evsf.hpp"
#include "evsurf/geometry.hpp"
#include "evsurf/kinematics.hpp"
#include "evsurf/pipeline.hpp"
#include "evsurf/render.hpp"
#include "evsurf/synth.hpp"
#include "support/temp_dir.hpp"

using namespace evsurf;
using testsupport::TempDir;

namespace {

bool file_exists(const std::string& p) { return std::filesystem::exists(p); }

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

Grid3 standard(std::size_t n0, std::size_t n1, std::size_t n2) {
    return Grid3(n0, n1, n2, 1.0 / double(n0 - 1), 1.0 / double(n1 - 1),
                 1.0 / double(n1 - 1));
}

// Shared synthetic fixture for the flow/verify cases: flat surface with a
// degree-2 polynomial texture advected at a constant velocity.  The true
// motion is constant, so its regularizer vanishes and the solved field
// should track the ground truth closely even on a coarse grid.
SynthSpec flow_fixture_spec() {
    SynthSpec sp;
    sp.surface = SurfaceKind::Flat;
    sp.texture = TextureKind::Polynomial;
    sp.poly_degree = 2;
    sp.v1 = 0.1;
    sp.v2 = 0.05;
    return sp;
}

void write_flow_fixture(const std::string& dir) {
    PipelineConfig cfg;
    cfg.out_dir = dir;
    cfg.synth = flow_fixture_spec();
    cfg.synth_n0 = 4;
    cfg.synth_n1 = 17;
    cfg.synth_n2 = 17;
    run_synth(cfg);
}

} // namespace

TEST_SUITE("pipeline") {

TEST_CASE("empty config text yields documented defaults") {
    const PipelineConfig cfg = config_from_json_text("{}");
    CHECK(cfg.z_path.empty());
    CHECK(cfg.f_path.empty());
    CHECK(cfg.volume_path.empty());
    CHECK(cfg.m_path.empty());
    CHECK(cfg.field_path.empty());
    CHECK(cfg.out_dir == ".");
    CHECK(cfg.reg.lambda0 == 0.0);
    CHECK(cfg.reg.lambda1 == 1.0);
    CHECK(cfg.mode == AssembleMode::Spatiotemporal);
    CHECK(cfg.frame_order == FrameOrder::Dx1First);
    CHECK(cfg.solver.rel_tol == 0.02);
    CHECK(cfg.solver.max_iters == 2000);
    CHECK(cfg.solver.restart == 30);
    CHECK(cfg.solver.initial_guess.empty());
    CHECK_FALSE(cfg.solver.reorthogonalize);
    CHECK_FALSE(cfg.solver.block_jacobi);
    CHECK(cfg.synth_n0 == 16);
    CHECK(cfg.synth_n1 == 64);
    CHECK(cfg.synth_n2 == 64);
    CHECK_FALSE(cfg.render.per_frame_normalization);
    CHECK_FALSE(cfg.render.max_magnitude.has_value());
    CHECK(cfg.trajectories.threshold == 0.3);
    CHECK(cfg.trajectories.integration.step == 10.0);
    CHECK(cfg.trajectories.integration.start_frame == 0);
    CHECK(cfg.trajectories.integration.integrator == Integrator::Euler);
}

TEST_CASE("every config key is parsed into the matching field") {
    const char* text = R"({
        "inputs": {"z": "a.evsf", "f": "b.evsf", "volume": "v.evsf",
                   "m": "mm.evsf", "field": "ff.evsf"},
        "out": "outdir",
        "flow": {"lambda0": 0.25, "lambda1": 0.75,
                 "mode": "framewise", "frame_order": "dx2first"},
        "solver": {"rel_tol": 1e-9, "max_iters": 500, "restart": 25,
                   "reorthogonalize": true, "block_jacobi": true},
        "synth": {"surface": "wave", "slope": 0.3, "amplitude": 0.2,
                  "width": 0.15, "spatial_freq": 3.0, "temporal_freq": 1.5,
                  "v": [0.1, -0.2], "texture": "polynomial", "blob_count": 9,
                  "blob_width": 0.07, "seed": 99, "poly_degree": 1,
                  "noise_sigma": 0.01, "grid": [4, 33, 33]},
        "preprocess": {"sigma": [1.5, 2.0, 0.5], "threshold": 0.25,
                       "reg_weight": 0.05, "grid": [24, 20],
                       "voxel_size": [2.0, 2.0, 0.5],
                       "allow_empty_frames": true},
        "render": {"normalize": "frame", "max_magnitude": 3.5},
        "trajectories": {"seed_frame": 2, "threshold": 0.4, "step": 0.125,
                         "integrator": "rk4"}
    })";
    const PipelineConfig cfg = config_from_json_text(text);

    CHECK(cfg.z_path == "a.evsf");
    CHECK(cfg.f_path == "b.evsf");
    CHECK(cfg.volume_path == "v.evsf");
    CHECK(cfg.m_path == "mm.evsf");
    CHECK(cfg.field_path == "ff.evsf");
    CHECK(cfg.out_dir == "outdir");

    CHECK(cfg.reg.lambda0 == 0.25);
    CHECK(cfg.reg.lambda1 == 0.75);
    CHECK(cfg.mode == AssembleMode::Framewise);
    CHECK(cfg.frame_order == FrameOrder::Dx2First);

    CHECK(cfg.solver.rel_tol == 1e-9);
    CHECK(cfg.solver.max_iters == 500);
    CHECK(cfg.solver.restart == 25);
    CHECK(cfg.solver.reorthogonalize);
    CHECK(cfg.solver.block_jacobi);

    CHECK(cfg.synth.surface == SurfaceKind::Wave);
    CHECK(cfg.synth.slope == 0.3);
    CHECK(cfg.synth.amplitude == 0.2);
    CHECK(cfg.synth.width == 0.15);
    CHECK(cfg.synth.spatial_freq == 3.0);
    CHECK(cfg.synth.temporal_freq == 1.5);
    CHECK(cfg.synth.v1 == 0.1);
    CHECK(cfg.synth.v2 == -0.2);
    CHECK(cfg.synth.texture == TextureKind::Polynomial);
    CHECK(cfg.synth.blob_count == 9);
    CHECK(cfg.synth.blob_width == 0.07);
    CHECK(cfg.synth.rng_seed == 99);
    CHECK(cfg.synth.poly_degree == 1);
    CHECK(cfg.synth.noise_sigma == 0.01);
    CHECK(cfg.synth_n0 == 4);
    CHECK(cfg.synth_n1 == 33);
    CHECK(cfg.synth_n2 == 33);

    CHECK(cfg.preprocess.sigma[0] == 1.5);
    CHECK(cfg.preprocess.sigma[1] == 2.0);
    CHECK(cfg.preprocess.sigma[2] == 0.5);
    CHECK(cfg.preprocess.threshold == 0.25);
    CHECK(cfg.preprocess.fit.reg_weight == 0.05);
    CHECK(cfg.preprocess.fit.grid_n1 == 24);
    CHECK(cfg.preprocess.fit.grid_n2 == 20);
    CHECK(cfg.preprocess.voxel_size[0] == 2.0);
    CHECK(cfg.preprocess.voxel_size[1] == 2.0);
    CHECK(cfg.preprocess.voxel_size[2] == 0.5);
    CHECK(cfg.preprocess.allow_empty_frames);

    CHECK(cfg.render.per_frame_normalization);
    REQUIRE(cfg.render.max_magnitude.has_value());
    CHECK(*cfg.render.max_magnitude == 3.5);

    CHECK(cfg.trajectories.integration.start_frame == 2);
    CHECK(cfg.trajectories.threshold == 0.4);
    CHECK(cfg.trajectories.integration.step == 0.125);
    CHECK(cfg.trajectories.integration.integrator == Integrator::Rk4);

    SUBCASE("scalar sigma broadcasts to all three axes") {
        const PipelineConfig c2 =
            config_from_json_text(R"({"preprocess": {"sigma": 2.5}})");
        CHECK(c2.preprocess.sigma[0] == 2.5);
        CHECK(c2.preprocess.sigma[1] == 2.5);
        CHECK(c2.preprocess.sigma[2] == 2.5);
    }
}

TEST_CASE("malformed config text is rejected") {
    const std::vector<std::string> bad_texts = {
        // not an object / not JSON
        "[]",
        "42",
        "{ this is not json",
        // unknown keys at every level
        R"({"bogus": 1})",
        R"({"inputs": {"zz": "x"}})",
        R"({"flow": {"lambda2": 1.0}})",
        R"({"solver": {"tol": 1e-6}})",
        R"({"synth": {"speed": 1.0}})",
        R"({"preprocess": {"smoothing": 1.0}})",
        R"({"render": {"gamma": 2.2}})",
        R"({"trajectories": {"frames": 3}})",
        // bad enum strings
        R"({"flow": {"mode": "both"}})",
        R"({"flow": {"frame_order": "rowmajor"}})",
        R"({"synth": {"surface": "dome"}})",
        R"({"synth": {"texture": "noise"}})",
        R"({"render": {"normalize": "global"}})",
        R"({"trajectories": {"integrator": "rk2"}})",
        // wrong types and arities
        R"({"out": 3})",
        R"({"inputs": {"z": 7}})",
        R"({"flow": {"lambda0": "big"}})",
        R"({"solver": {"rel_tol": "tight"}})",
        R"({"solver": {"max_iters": -5}})",
        R"({"solver": {"restart": 2.5}})",
        R"({"synth": {"v": [0.1]}})",
        R"({"synth": {"grid": [4, 33]}})",
        R"({"synth": {"blob_count": -2}})",
        R"({"preprocess": {"sigma": [1.0, 2.0]}})",
        R"({"preprocess": {"sigma": "wide"}})",
        R"({"preprocess": {"grid": [24]}})",
        R"({"preprocess": {"voxel_size": [1.0, 2.0]}})",
        R"({"render": {"max_magnitude": "auto"}})",
        R"({"trajectories": {"seed_frame": -1}})",
        R"({"trajectories": {"step": "small"}})",
    };
    for (const std::string& text : bad_texts) {
        CAPTURE(text);
        CHECK_THROWS_AS(config_from_json_text(text), BadConfig);
    }
}

TEST_CASE("config files load like inline text and missing files fail") {
    TempDir tmp;
    const std::string path = tmp.file("cfg.json");
    {
        std::ofstream out(path);
        out << R"({"out": "somewhere", "flow": {"lambda0": 0.125},
                   "solver": {"restart": 12}})";
    }
    const PipelineConfig cfg = load_config(path);
    CHECK(cfg.out_dir == "somewhere");
    CHECK(cfg.reg.lambda0 == 0.125);
    CHECK(cfg.solver.restart == 12);

    CHECK_THROWS_AS(load_config(tmp.file("missing.json")), IoFailure);
}

TEST_CASE("standard-steps loaders round-trip typed fields bitwise") {
    TempDir tmp;

    SUBCASE("scalar field") {
        ScalarField3 f;
        f.grid = standard(3, 5, 7);
        f.values.resize(f.grid.size());
        for (std::size_t p = 0; p < f.values.size(); ++p)
            f.values[p] = 0.25 * double(p) - 3.0;
        const std::string path = tmp.file("s.evsf");
        write_scalar_field(path, f);
        const ScalarField3 g = load_scalar(path);
        CHECK(g.grid == f.grid);
        REQUIRE(g.values.size() == f.values.size());
        for (std::size_t p = 0; p < f.values.size(); ++p)
            CHECK(g.values[p] == f.values[p]);
    }

    SUBCASE("frame field") {
        FrameField w;
        w.grid = standard(2, 4, 6);
        w.values.resize(w.grid.size());
        for (std::size_t p = 0; p < w.values.size(); ++p)
            w.values[p] = {0.5 * double(p), -1.0 - double(p)};
        const std::string path = tmp.file("w.evsf");
        write_frame_field(path, w);
        const FrameField v = load_frame(path);
        CHECK(v.grid == w.grid);
        REQUIRE(v.values.size() == w.values.size());
        for (std::size_t p = 0; p < w.values.size(); ++p) {
            CHECK(v.values[p][0] == w.values[p][0]);
            CHECK(v.values[p][1] == w.values[p][1]);
        }
    }

    SUBCASE("vector field") {
        VectorField3 u;
        u.grid = standard(2, 5, 5);
        u.values.resize(u.grid.size());
        for (std::size_t p = 0; p < u.values.size(); ++p)
            u.values[p] = {double(p), 0.5 - double(p), 2.0 * double(p)};
        const std::string path = tmp.file("u.evsf");
        write_vector_field(path, u);
        const VectorField3 v = load_vector(path);
        CHECK(v.grid == u.grid);
        REQUIRE(v.values.size() == u.values.size());
        for (std::size_t p = 0; p < u.values.size(); ++p)
            for (int c = 0; c < 3; ++c)
                CHECK(v.values[p][std::size_t(c)] ==
                      u.values[p][std::size_t(c)]);
    }

    SUBCASE("loaders reject payloads of the wrong rank") {
        ScalarField3 s;
        s.grid = standard(2, 3, 3);
        s.values.assign(s.grid.size(), 1.0);
        FrameField w;
        w.grid = s.grid;
        w.values.assign(s.grid.size(), {1.0, 2.0});
        VectorField3 u;
        u.grid = s.grid;
        u.values.assign(s.grid.size(), {1.0, 2.0, 3.0});
        const std::string sp = tmp.file("rank_s.evsf");
        const std::string wp = tmp.file("rank_w.evsf");
        const std::string up = tmp.file("rank_u.evsf");
        write_scalar_field(sp, s);
        write_frame_field(wp, w);
        write_vector_field(up, u);

        CHECK_THROWS_AS(load_scalar(wp), DimMismatch);  // 4-D payload
        CHECK_THROWS_AS(load_frame(sp), DimMismatch);   // 3-D payload
        CHECK_THROWS_AS(load_frame(up), DimMismatch);   // leading dim 3
        CHECK_THROWS_AS(load_vector(sp), DimMismatch);  // 3-D payload
        CHECK_THROWS_AS(load_vector(wp), DimMismatch);  // leading dim 2
    }
}

TEST_CASE("synth stage writes artifacts identical to direct generation") {
    TempDir tmp;
    PipelineConfig cfg;
    cfg.out_dir = tmp.file("synth_out");
    cfg.synth = flow_fixture_spec();
    cfg.synth.v1 = 0.125;
    cfg.synth.v2 = 0.25;
    cfg.synth_n0 = 3;
    cfg.synth_n1 = 17;
    cfg.synth_n2 = 17;
    run_synth(cfg);

    for (const char* name : {"z.evsf", "f.evsf", "w_true.evsf", "u_true.evsf"})
        CHECK(file_exists(cfg.out_dir + "/" + name));

    const Grid3 grid = standard(3, 17, 17);
    const SynthResult direct = generate(cfg.synth, grid, cfg.frame_order);

    const ScalarField3 z = load_scalar(cfg.out_dir + "/z.evsf");
    const ScalarField3 f = load_scalar(cfg.out_dir + "/f.evsf");
    const FrameField w = load_frame(cfg.out_dir + "/w_true.evsf");
    const VectorField3 u = load_vector(cfg.out_dir + "/u_true.evsf");
    CHECK(z.grid == grid);
    CHECK(f.grid == grid);
    CHECK(w.grid == grid);
    CHECK(u.grid == grid);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        CHECK(z.values[p] == direct.z.values[p]);
        CHECK(f.values[p] == direct.f.values[p]);
        CHECK(w.values[p][0] == direct.w_true.values[p][0]);
        CHECK(w.values[p][1] == direct.w_true.values[p][1]);
        for (int c = 0; c < 3; ++c)
            CHECK(u.values[p][std::size_t(c)] ==
                  direct.u_true.values[p][std::size_t(c)]);
    }

    SUBCASE("non-square spatial grids are rejected") {
        cfg.synth_n1 = 16;
        cfg.synth_n2 = 17;
        CHECK_THROWS_AS(run_synth(cfg), BadConfig);
    }
}

TEST_CASE("flow stage solves, writes consistent artifacts and a report") {
    TempDir tmp;
    const std::string fix = tmp.file("fixture");
    write_flow_fixture(fix);

    PipelineConfig cfg;
    cfg.z_path = fix + "/z.evsf";
    cfg.f_path = fix + "/f.evsf";
    cfg.out_dir = tmp.file("flow_out");  // does not exist yet; must be created
    cfg.reg.lambda0 = 0.05;
    cfg.reg.lambda1 = 0.5;
    cfg.solver.rel_tol = 1e-8;
    cfg.solver.restart = 40;
    cfg.solver.max_iters = 4000;

    const FlowRunResult res = run_flow(cfg);
    CHECK(res.converged);
    CHECK_FALSE(res.breakdown);
    CHECK(res.iterations > 0);
    CHECK(res.rel_residual <= 1e-8);
    CHECK(res.wall_time_s >= 0.0);
    CHECK(res.energy_after.total() < res.energy_before.total());
    CHECK(res.energy_before.regularizer == 0.0);  // zero initial field
    CHECK(res.energy_after.data >= 0.0);
    CHECK(res.energy_after.regularizer >= 0.0);

    for (const char* name :
         {"w.evsf", "u.evsf", "m.evsf", "flow_0000.ppm", "flow_0001.ppm",
          "flow_0002.ppm", "flow_0003.ppm", "report.json"})
        CHECK(file_exists(cfg.out_dir + "/" + name));
    CHECK_FALSE(file_exists(cfg.out_dir + "/flow_0004.ppm"));

    // The written embedded fields must be the exact reconstruction of the
    // written chart field through the same geometry.
    const HeightField z = load_scalar(cfg.z_path);
    const GeometryAtlas atlas = build_atlas(z, cfg.frame_order);
    const FrameField w = load_frame(cfg.out_dir + "/w.evsf");
    const VectorField3 u = load_vector(cfg.out_dir + "/u.evsf");
    const VectorField3 m = load_vector(cfg.out_dir + "/m.evsf");
    const VectorField3 u_rebuilt = reconstruct_u(w, atlas);
    const VectorField3 m_rebuilt = total_velocity(u_rebuilt, atlas);
    REQUIRE(u.values.size() == u_rebuilt.values.size());
    for (std::size_t p = 0; p < u.values.size(); ++p)
        for (int c = 0; c < 3; ++c) {
            CHECK(u.values[p][std::size_t(c)] ==
                  u_rebuilt.values[p][std::size_t(c)]);
            CHECK(m.values[p][std::size_t(c)] ==
                  m_rebuilt.values[p][std::size_t(c)]);
        }

    // Constant true motion with an everywhere-informative texture: the
    // solved field should track the known truth to a few percent.
    const FrameField w_true = load_frame(fix + "/w_true.evsf");
    double num = 0.0, den = 0.0;
    for (std::size_t p = 0; p < w.values.size(); ++p) {
        const double d0 = w.values[p][0] - w_true.values[p][0];
        const double d1 = w.values[p][1] - w_true.values[p][1];
        num += d0 * d0 + d1 * d1;
        den += w_true.values[p][0] * w_true.values[p][0] +
               w_true.values[p][1] * w_true.values[p][1];
    }
    const double rel_rms = std::sqrt(num / den);
    INFO("relative RMS error vs ground truth = " << rel_rms);
    CHECK(rel_rms < 0.15);

    // Report contents mirror the run.
    const nlohmann::json rep =
        nlohmann::json::parse(testsupport::read_text(cfg.out_dir + "/report.json"));
    CHECK(rep.at("schema_version").get<int>() == 1);
    CHECK(rep.at("mode").get<std::string>() == "spatiotemporal");
    REQUIRE(rep.at("grid").size() == 3);
    CHECK(rep.at("grid")[0].get<std::size_t>() == 4);
    CHECK(rep.at("grid")[1].get<std::size_t>() == 17);
    CHECK(rep.at("grid")[2].get<std::size_t>() == 17);
    CHECK(rep.at("lambda0").get<double>() == 0.05);
    CHECK(rep.at("lambda1").get<double>() == 0.5);
    CHECK(rep.at("solver").at("rel_tol").get<double>() == 1e-8);
    CHECK(rep.at("solver").at("max_iters").get<std::size_t>() == 4000);
    CHECK(rep.at("solver").at("restart").get<std::size_t>() == 40);
    CHECK(rep.at("converged").get<bool>());
    CHECK_FALSE(rep.at("breakdown").get<bool>());
    CHECK(rep.at("iterations").get<std::size_t>() == res.iterations);
    CHECK(rep.at("rel_residual").get<double>() ==
          doctest::Approx(res.rel_residual).epsilon(1e-12));
    const auto& before = rep.at("energy").at("before");
    const auto& after = rep.at("energy").at("after");
    CHECK(before.at("total").get<double>() ==
          doctest::Approx(res.energy_before.total()).epsilon(1e-12));
    CHECK(after.at("data").get<double>() ==
          doctest::Approx(res.energy_after.data).epsilon(1e-12));
    CHECK(after.at("regularizer").get<double>() ==
          doctest::Approx(res.energy_after.regularizer).epsilon(1e-12));
    CHECK(after.at("total").get<double>() < before.at("total").get<double>());
    CHECK(rep.at("wall_time_s").get<double>() >= 0.0);
    REQUIRE(rep.at("table").is_array());
    REQUIRE(rep.at("table").size() == 1);
    const auto& row = rep.at("table")[0];
    CHECK(row.at("lambda0").get<double>() == 0.05);
    CHECK(row.at("lambda1").get<double>() == 0.5);
    CHECK(row.contains("runtime_s"));
    CHECK(row.contains("rel_residual"));
    CHECK_FALSE(rep.contains("frames"));
}

TEST_CASE("framewise flow reports one entry per frame") {
    TempDir tmp;
    const std::string fix = tmp.file("fixture");
    write_flow_fixture(fix);

    PipelineConfig cfg;
    cfg.z_path = fix + "/z.evsf";
    cfg.f_path = fix + "/f.evsf";
    cfg.out_dir = tmp.file("fw_out");
    cfg.mode = AssembleMode::Framewise;
    cfg.reg.lambda0 = 0.0;  // framewise assembly requires no temporal coupling
    cfg.reg.lambda1 = 0.5;
    cfg.solver.rel_tol = 1e-8;
    cfg.solver.restart = 40;
    cfg.solver.max_iters = 4000;

    const FlowRunResult res = run_flow(cfg);
    CHECK(res.converged);

    const nlohmann::json rep =
        nlohmann::json::parse(testsupport::read_text(cfg.out_dir + "/report.json"));
    CHECK(rep.at("mode").get<std::string>() == "framewise");
    REQUIRE(rep.contains("frames"));
    REQUIRE(rep.at("frames").size() == 4);
    std::size_t iter_sum = 0;
    for (std::size_t t = 0; t < 4; ++t) {
        const auto& fr = rep.at("frames")[t];
        CHECK(fr.at("frame").get<std::size_t>() == t);
        CHECK(fr.at("converged").get<bool>());
        iter_sum += fr.at("iterations").get<std::size_t>();
    }
    CHECK(iter_sum == res.iterations);
}

TEST_CASE("flow stage validates its inputs before running") {
    TempDir tmp;
    const std::string fix = tmp.file("fixture");
    write_flow_fixture(fix);

    PipelineConfig cfg;
    cfg.z_path = fix + "/z.evsf";
    cfg.f_path = fix + "/f.evsf";
    cfg.out_dir = tmp.file("out");

    SUBCASE("missing paths") {
        cfg.z_path.clear();
        CHECK_THROWS_AS(run_flow(cfg), BadConfig);
        cfg.z_path = fix + "/z.evsf";
        cfg.f_path.clear();
        CHECK_THROWS_AS(run_flow(cfg), BadConfig);
    }
    SUBCASE("nonexistent input file") {
        cfg.z_path = tmp.file("nope.evsf");
        CHECK_THROWS_AS(run_flow(cfg), IoFailure);
    }
    SUBCASE("invalid regularization weights") {
        cfg.reg.lambda1 = 0.0;
        CHECK_THROWS_AS(run_flow(cfg), BadConfig);
        cfg.reg.lambda1 = 1.0;
        cfg.reg.lambda0 = -0.5;
        CHECK_THROWS_AS(run_flow(cfg), BadConfig);
    }
    SUBCASE("invalid solver settings") {
        cfg.solver.rel_tol = 0.0;
        CHECK_THROWS_AS(run_flow(cfg), BadConfig);
    }
    SUBCASE("framewise mode rejects temporal coupling") {
        cfg.mode = AssembleMode::Framewise;
        cfg.reg.lambda0 = 0.05;
        cfg.reg.lambda1 = 0.5;
        CHECK_THROWS_AS(run_flow(cfg), ModeMismatch);
    }
    SUBCASE("grid mismatch between heights and intensities") {
        ScalarField3 other;
        other.grid = standard(4, 11, 11);
        other.values.assign(other.grid.size(), 0.0);
        const std::string zp = tmp.file("z_other.evsf");
        write_scalar_field(zp, other);
        cfg.z_path = zp;
        CHECK_THROWS_AS(run_flow(cfg), DimMismatch);
    }
}

TEST_CASE("trajectory stage seeds from intensity and integrates the motion") {
    TempDir tmp;
    const Grid3 grid = standard(5, 9, 9);

    // Intensity: one strict interior maximum at node (2,4) of frame 0.
    ScalarField3 f;
    f.grid = grid;
    f.values.assign(grid.size(), 0.0);
    f.values[grid.index(0, 2, 4)] = 1.0;

    // Constant motion and a flat surface make every position dyadic.
    VectorField3 m;
    m.grid = grid;
    m.values.assign(grid.size(), {0.25, -0.125, 0.0625});
    ScalarField3 z;
    z.grid = grid;
    z.values.assign(grid.size(), 0.0);

    const std::string mp = tmp.file("m.evsf");
    const std::string fp = tmp.file("f.evsf");
    const std::string zp = tmp.file("z.evsf");
    write_vector_field(mp, m);
    write_scalar_field(fp, f);
    write_scalar_field(zp, z);

    PipelineConfig cfg;
    cfg.m_path = mp;
    cfg.f_path = fp;
    cfg.z_path = zp;
    cfg.out_dir = tmp.file("traj_out");
    cfg.trajectories.integration.step = 0.5;

    run_trajectories(cfg);

    const std::string csv =
        testsupport::read_text(cfg.out_dir + "/trajectories.csv");
    const std::vector<std::string> lines = split_lines(csv);
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "trajectory_id,frame,x1,x2,x3,xi1,xi2,exited");
    for (std::size_t k = 0; k < 5; ++k) {
        const std::vector<std::string> cells = split_fields(lines[k + 1]);
        REQUIRE(cells.size() == 8);
        CHECK(std::strtoull(cells[0].c_str(), nullptr, 10) == 0);
        CHECK(std::strtoull(cells[1].c_str(), nullptr, 10) == k);
        const double xi1 = 0.25 + 0.125 * double(k);
        const double xi2 = 0.5 - 0.0625 * double(k);
        const double x3 = 0.03125 * double(k);
        CHECK(std::strtod(cells[2].c_str(), nullptr) == xi1);  // x1 == xi1
        CHECK(std::strtod(cells[3].c_str(), nullptr) == xi2);  // x2 == xi2
        CHECK(std::strtod(cells[4].c_str(), nullptr) == x3);
        CHECK(std::strtod(cells[5].c_str(), nullptr) == xi1);
        CHECK(std::strtod(cells[6].c_str(), nullptr) == xi2);
        CHECK(cells[7] == "0");
    }

    SUBCASE("missing motion path") {
        cfg.m_path.clear();
        CHECK_THROWS_AS(run_trajectories(cfg), BadConfig);
    }
    SUBCASE("grid mismatch between motion and intensity") {
        VectorField3 m2;
        m2.grid = standard(5, 11, 11);
        m2.values.assign(m2.grid.size(), {0.0, 0.0, 0.0});
        const std::string mp2 = tmp.file("m_other.evsf");
        write_vector_field(mp2, m2);
        cfg.m_path = mp2;
        CHECK_THROWS_AS(run_trajectories(cfg), DimMismatch);
    }
}

TEST_CASE("render stage honors the normalization settings") {
    TempDir tmp;
    const Grid3 grid = standard(3, 5, 5);
    VectorField3 u;
    u.grid = grid;
    u.values.assign(grid.size(), {0.0, 0.0, 0.0});
    // Frame 0 peaks at magnitude 1, frame 1 at magnitude 2, so sequence-wide
    // and per-frame normalization disagree on frame 0.
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            const double a = 0.2 + 0.2 * double(i);
            const double b = 0.15 * double(j) - 0.3;
            u.values[grid.index(0, i, j)] = {a, b, 0.0};
            u.values[grid.index(1, i, j)] = {2.0 * a, 2.0 * b, 0.0};
            u.values[grid.index(2, i, j)] = {-a, b, 0.0};
        }
    const std::string up = tmp.file("u.evsf");
    write_vector_field(up, u);

    PipelineConfig cfg;
    cfg.field_path = up;

    cfg.out_dir = tmp.file("seq");
    run_render(cfg);
    for (const char* name : {"flow_0000.ppm", "flow_0001.ppm", "flow_0002.ppm"})
        CHECK(file_exists(cfg.out_dir + "/" + name));
    CHECK_FALSE(file_exists(cfg.out_dir + "/flow_0003.ppm"));
    const auto seq0 = testsupport::read_bytes(cfg.out_dir + "/flow_0000.ppm");

    cfg.out_dir = tmp.file("per_frame");
    cfg.render.per_frame_normalization = true;
    run_render(cfg);
    const auto pf0 = testsupport::read_bytes(cfg.out_dir + "/flow_0000.ppm");
    CHECK(seq0 != pf0);

    // An explicit magnitude overrides both normalization modes.
    cfg.out_dir = tmp.file("fixed_a");
    cfg.render.per_frame_normalization = false;
    cfg.render.max_magnitude = 2.0;
    run_render(cfg);
    cfg.out_dir = tmp.file("fixed_b");
    cfg.render.per_frame_normalization = true;
    run_render(cfg);
    for (const char* name : {"flow_0000.ppm", "flow_0001.ppm", "flow_0002.ppm"}) {
        const auto a = testsupport::read_bytes(tmp.file("fixed_a/") + name);
        const auto b = testsupport::read_bytes(tmp.file("fixed_b/") + name);
        CHECK(a == b);
    }

    SUBCASE("missing field path") {
        cfg.field_path.clear();
        CHECK_THROWS_AS(run_render(cfg), BadConfig);
    }
}

TEST_CASE("verify stage passes on a sound fixture and flags a starved solver") {
    TempDir tmp;
    const std::string fix = tmp.file("fixture");
    write_flow_fixture(fix);

    PipelineConfig cfg;
    cfg.z_path = fix + "/z.evsf";
    cfg.f_path = fix + "/f.evsf";
    cfg.out_dir = tmp.file("verify_out");
    cfg.reg.lambda0 = 0.05;
    cfg.reg.lambda1 = 0.5;
    cfg.solver.rel_tol = 1e-8;
    cfg.solver.restart = 40;
    cfg.solver.max_iters = 4000;

    CHECK(run_verify(cfg) == 0);

    SUBCASE("a solver that cannot converge is reported as one failure") {
        cfg.solver.rel_tol = 1e-15;
        cfg.solver.restart = 1;
        cfg.solver.max_iters = 1;
        CHECK(run_verify(cfg) == 1);
    }
}

} // TEST_SUITE("pipeline")

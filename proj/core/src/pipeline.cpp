#include "evsurf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evsurf/errors.hpp"
#include "evsurf/evsf.hpp"
#include "evsurf/render.hpp"

namespace evsurf {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw BadConfig(what); }

void check_keys(const json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            bad(std::string("config: unknown key \"") + it.key() + "\" in " +
                where);
    }
}

double num(const json& v, const char* key) {
    if (!v.is_number()) bad(std::string("config: \"") + key + "\" must be a number");
    return v.get<double>();
}

std::size_t count(const json& v, const char* key) {
    if (!v.is_number_unsigned())
        bad(std::string("config: \"") + key + "\" must be a nonnegative integer");
    return v.get<std::size_t>();
}

std::string str(const json& v, const char* key) {
    if (!v.is_string()) bad(std::string("config: \"") + key + "\" must be a string");
    return v.get<std::string>();
}

void parse_flow(const json& j, PipelineConfig& cfg) {
    check_keys(j, "flow", {"lambda0", "lambda1", "mode", "frame_order"});
    if (j.contains("lambda0")) cfg.reg.lambda0 = num(j["lambda0"], "lambda0");
    if (j.contains("lambda1")) cfg.reg.lambda1 = num(j["lambda1"], "lambda1");
    if (j.contains("mode")) {
        const std::string m = str(j["mode"], "mode");
        if (m == "spatiotemporal") cfg.mode = AssembleMode::Spatiotemporal;
        else if (m == "framewise") cfg.mode = AssembleMode::Framewise;
        else bad("config: mode must be \"spatiotemporal\" or \"framewise\"");
    }
    if (j.contains("frame_order")) {
        const std::string o = str(j["frame_order"], "frame_order");
        if (o == "dx1first") cfg.frame_order = FrameOrder::Dx1First;
        else if (o == "dx2first") cfg.frame_order = FrameOrder::Dx2First;
        else bad("config: frame_order must be \"dx1first\" or \"dx2first\"");
    }
}

void parse_solver(const json& j, PipelineConfig& cfg) {
    check_keys(j, "solver",
               {"rel_tol", "max_iters", "restart", "reorthogonalize",
                "block_jacobi"});
    if (j.contains("rel_tol")) cfg.solver.rel_tol = num(j["rel_tol"], "rel_tol");
    if (j.contains("max_iters"))
        cfg.solver.max_iters = count(j["max_iters"], "max_iters");
    if (j.contains("restart")) cfg.solver.restart = count(j["restart"], "restart");
    if (j.contains("reorthogonalize"))
        cfg.solver.reorthogonalize = j["reorthogonalize"].get<bool>();
    if (j.contains("block_jacobi"))
        cfg.solver.block_jacobi = j["block_jacobi"].get<bool>();
}

void parse_synth(const json& j, PipelineConfig& cfg) {
    check_keys(j, "synth",
               {"surface", "slope", "amplitude", "width", "spatial_freq",
                "temporal_freq", "v", "texture", "blob_count", "blob_width",
                "seed", "poly_degree", "noise_sigma", "grid"});
    if (j.contains("surface")) {
        const std::string s = str(j["surface"], "surface");
        if (s == "flat") cfg.synth.surface = SurfaceKind::Flat;
        else if (s == "tilt") cfg.synth.surface = SurfaceKind::Tilt;
        else if (s == "bump") cfg.synth.surface = SurfaceKind::Bump;
        else if (s == "wave") cfg.synth.surface = SurfaceKind::Wave;
        else bad("config: surface must be flat|tilt|bump|wave");
    }
    if (j.contains("slope")) cfg.synth.slope = num(j["slope"], "slope");
    if (j.contains("amplitude"))
        cfg.synth.amplitude = num(j["amplitude"], "amplitude");
    if (j.contains("width")) cfg.synth.width = num(j["width"], "width");
    if (j.contains("spatial_freq"))
        cfg.synth.spatial_freq = num(j["spatial_freq"], "spatial_freq");
    if (j.contains("temporal_freq"))
        cfg.synth.temporal_freq = num(j["temporal_freq"], "temporal_freq");
    if (j.contains("v")) {
        const json& v = j["v"];
        if (!v.is_array() || v.size() != 2)
            bad("config: synth.v must be [v1, v2]");
        cfg.synth.v1 = num(v[0], "v[0]");
        cfg.synth.v2 = num(v[1], "v[1]");
    }
    if (j.contains("texture")) {
        const std::string t = str(j["texture"], "texture");
        if (t == "blobs") cfg.synth.texture = TextureKind::GaussianBlobs;
        else if (t == "polynomial") cfg.synth.texture = TextureKind::Polynomial;
        else bad("config: texture must be blobs|polynomial");
    }
    if (j.contains("blob_count"))
        cfg.synth.blob_count = int(count(j["blob_count"], "blob_count"));
    if (j.contains("blob_width"))
        cfg.synth.blob_width = num(j["blob_width"], "blob_width");
    if (j.contains("seed")) cfg.synth.rng_seed = count(j["seed"], "seed");
    if (j.contains("poly_degree"))
        cfg.synth.poly_degree = int(count(j["poly_degree"], "poly_degree"));
    if (j.contains("noise_sigma"))
        cfg.synth.noise_sigma = num(j["noise_sigma"], "noise_sigma");
    if (j.contains("grid")) {
        const json& g = j["grid"];
        if (!g.is_array() || g.size() != 3)
            bad("config: synth.grid must be [n0, n1, n2]");
        cfg.synth_n0 = count(g[0], "grid[0]");
        cfg.synth_n1 = count(g[1], "grid[1]");
        cfg.synth_n2 = count(g[2], "grid[2]");
    }
}

void parse_preprocess(const json& j, PipelineConfig& cfg) {
    check_keys(j, "preprocess",
               {"sigma", "threshold", "reg_weight", "grid", "voxel_size",
                "allow_empty_frames"});
    if (j.contains("sigma")) {
        const json& s = j["sigma"];
        if (s.is_number()) {
            const double v = s.get<double>();
            cfg.preprocess.sigma = {v, v, v};
        } else if (s.is_array() && s.size() == 3) {
            for (int a = 0; a < 3; ++a)
                cfg.preprocess.sigma[std::size_t(a)] = num(s[std::size_t(a)], "sigma");
        } else {
            bad("config: preprocess.sigma must be a number or [sx, sy, sz]");
        }
    }
    if (j.contains("threshold"))
        cfg.preprocess.threshold = num(j["threshold"], "threshold");
    if (j.contains("reg_weight"))
        cfg.preprocess.fit.reg_weight = num(j["reg_weight"], "reg_weight");
    if (j.contains("grid")) {
        const json& g = j["grid"];
        if (!g.is_array() || g.size() != 2)
            bad("config: preprocess.grid must be [n1, n2]");
        cfg.preprocess.fit.grid_n1 = count(g[0], "grid[0]");
        cfg.preprocess.fit.grid_n2 = count(g[1], "grid[1]");
    }
    if (j.contains("voxel_size")) {
        const json& v = j["voxel_size"];
        if (!v.is_array() || v.size() != 3)
            bad("config: preprocess.voxel_size must be [vx, vy, vz]");
        for (int a = 0; a < 3; ++a)
            cfg.preprocess.voxel_size[std::size_t(a)] =
                num(v[std::size_t(a)], "voxel_size");
    }
    if (j.contains("allow_empty_frames"))
        cfg.preprocess.allow_empty_frames = j["allow_empty_frames"].get<bool>();
}

void parse_render(const json& j, PipelineConfig& cfg) {
    check_keys(j, "render", {"normalize", "max_magnitude"});
    if (j.contains("normalize")) {
        const std::string n = str(j["normalize"], "normalize");
        if (n == "sequence") cfg.render.per_frame_normalization = false;
        else if (n == "frame") cfg.render.per_frame_normalization = true;
        else bad("config: render.normalize must be \"sequence\" or \"frame\"");
    }
    if (j.contains("max_magnitude"))
        cfg.render.max_magnitude = num(j["max_magnitude"], "max_magnitude");
}

void parse_trajectories(const json& j, PipelineConfig& cfg) {
    check_keys(j, "trajectories",
               {"seed_frame", "threshold", "step", "integrator"});
    if (j.contains("seed_frame"))
        cfg.trajectories.integration.start_frame =
            count(j["seed_frame"], "seed_frame");
    if (j.contains("threshold"))
        cfg.trajectories.threshold = num(j["threshold"], "threshold");
    if (j.contains("step"))
        cfg.trajectories.integration.step = num(j["step"], "step");
    if (j.contains("integrator")) {
        const std::string i = str(j["integrator"], "integrator");
        if (i == "euler")
            cfg.trajectories.integration.integrator = Integrator::Euler;
        else if (i == "rk4")
            cfg.trajectories.integration.integrator = Integrator::Rk4;
        else bad("config: integrator must be \"euler\" or \"rk4\"");
    }
}

Grid3 standard_grid(std::size_t n0, std::size_t n1, std::size_t n2) {
    return Grid3(n0, n1, n2, 1.0 / double(n0 - 1), 1.0 / double(n1 - 1),
                 1.0 / double(n1 - 1));
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoFailure("cannot create output directory " + dir);
}

json energy_json(const EnergyBreakdown& e) {
    return json{{"data", e.data},
                {"regularizer", e.regularizer},
                {"total", e.total()}};
}

void require(bool cond, const char* stage, const std::string& what) {
    if (!cond) throw BadConfig(std::string(stage) + ": " + what);
}

} // namespace

PipelineConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        bad(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) bad("config: top level must be a JSON object");
    check_keys(j, "top level",
               {"inputs", "out", "flow", "solver", "synth", "preprocess",
                "render", "trajectories"});
    PipelineConfig cfg;
    if (j.contains("inputs")) {
        const json& in = j["inputs"];
        check_keys(in, "inputs", {"z", "f", "volume", "m", "field"});
        if (in.contains("z")) cfg.z_path = str(in["z"], "z");
        if (in.contains("f")) cfg.f_path = str(in["f"], "f");
        if (in.contains("volume")) cfg.volume_path = str(in["volume"], "volume");
        if (in.contains("m")) cfg.m_path = str(in["m"], "m");
        if (in.contains("field")) cfg.field_path = str(in["field"], "field");
    }
    if (j.contains("out")) cfg.out_dir = str(j["out"], "out");
    if (j.contains("flow")) parse_flow(j["flow"], cfg);
    if (j.contains("solver")) parse_solver(j["solver"], cfg);
    if (j.contains("synth")) parse_synth(j["synth"], cfg);
    if (j.contains("preprocess")) parse_preprocess(j["preprocess"], cfg);
    if (j.contains("render")) parse_render(j["render"], cfg);
    if (j.contains("trajectories")) parse_trajectories(j["trajectories"], cfg);
    return cfg;
}

PipelineConfig load_config(const std::string& json_path) {
    std::ifstream in(json_path, std::ios::binary);
    if (!in) throw IoFailure("cannot open config " + json_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

ScalarField3 load_scalar(const std::string& path) {
    EvsfArray arr = read_evsf(path);
    if (arr.dims.size() != 3)
        throw DimMismatch("expected a 3-D field in " + path);
    ScalarField3 f;
    f.grid = standard_grid(arr.dims[0], arr.dims[1], arr.dims[2]);
    f.values = std::move(arr.values);
    return f;
}

FrameField load_frame(const std::string& path) {
    EvsfArray arr = read_evsf(path);
    if (arr.dims.size() != 4 || arr.dims[0] != 2)
        throw DimMismatch("expected a (2,n0,n1,n2) field in " + path);
    FrameField f;
    f.grid = standard_grid(arr.dims[1], arr.dims[2], arr.dims[3]);
    const std::size_t n = f.grid.size();
    f.values.resize(n);
    for (std::size_t p = 0; p < n; ++p)
        f.values[p] = {arr.values[p], arr.values[n + p]};
    return f;
}

VectorField3 load_vector(const std::string& path) {
    EvsfArray arr = read_evsf(path);
    if (arr.dims.size() != 4 || arr.dims[0] != 3)
        throw DimMismatch("expected a (3,n0,n1,n2) field in " + path);
    VectorField3 f;
    f.grid = standard_grid(arr.dims[1], arr.dims[2], arr.dims[3]);
    const std::size_t n = f.grid.size();
    f.values.resize(n);
    for (std::size_t p = 0; p < n; ++p)
        f.values[p] = {arr.values[p], arr.values[n + p], arr.values[2 * n + p]};
    return f;
}

namespace {

void render_sequence(const VectorField3& u, const RenderSettings& rs,
                     const std::string& out_dir) {
    const Grid3& g = u.grid;
    std::optional<double> seq_max = rs.max_magnitude;
    if (!seq_max && !rs.per_frame_normalization) {
        std::vector<double> mags;
        mags.reserve(g.size());
        for (std::size_t t = 0; t < g.n0; ++t) {
            const VectorField2 f2 = scaled_projection(u, t);
            for (const auto& v : f2.values)
                mags.push_back(std::hypot(v[0], v[1]));
        }
        seq_max = percentile_99(std::move(mags));
    }
    for (std::size_t t = 0; t < g.n0; ++t) {
        const VectorField2 f2 = scaled_projection(u, t);
        const FlowImage img = colorize(f2, seq_max);
        write_ppm(img, join(out_dir, frame_filename(t)));
    }
}

} // namespace

FlowRunResult run_flow(const PipelineConfig& cfg) {
    require(!cfg.z_path.empty(), "flow", "missing input z path");
    require(!cfg.f_path.empty(), "flow", "missing input f path");
    cfg.reg.validate();
    cfg.solver.validate();
    ensure_out_dir(cfg.out_dir);

    const auto t_start = std::chrono::steady_clock::now();

    const HeightField z = load_scalar(cfg.z_path);
    const ScalarField3 f = load_scalar(cfg.f_path);
    if (z.grid != f.grid) throw DimMismatch("flow: z and f grids differ");
    const Grid3& grid = z.grid;

    const GeometryAtlas atlas = build_atlas(z, cfg.frame_order);
    const DataDerivatives df = data_derivatives(f);
    const ElCoefficients coeffs = el_coefficients(atlas, df, cfg.reg);

    FrameField w;
    w.grid = grid;
    w.values.assign(grid.size(), {0.0, 0.0});
    const EnergyBreakdown e_before = energy_breakdown(w, atlas, df, cfg.reg);

    FlowRunResult out;
    out.energy_before = e_before;
    json frames_json = json::array();

    if (cfg.mode == AssembleMode::Spatiotemporal) {
        const SparseSystem sys = assemble(coeffs, AssembleMode::Spatiotemporal);
        const SolveResult res = gmres(sys, cfg.solver);
        out.converged = res.converged;
        out.breakdown = res.breakdown;
        out.rel_residual = res.rel_residual;
        out.iterations = res.iterations;
        for (std::size_t p = 0; p < grid.size(); ++p)
            w.values[p] = {res.x[2 * p], res.x[2 * p + 1]};
    } else {
        out.converged = true;
        for (std::size_t t = 0; t < grid.n0; ++t) {
            const SparseSystem sys = assemble(coeffs, AssembleMode::Framewise, t);
            const SolveResult res = gmres(sys, cfg.solver);
            out.converged = out.converged && res.converged;
            out.breakdown = out.breakdown || res.breakdown;
            out.rel_residual = std::max(out.rel_residual, res.rel_residual);
            out.iterations += res.iterations;
            const std::size_t base = grid.index(t, 0, 0);
            for (std::size_t p = 0; p < grid.frame_size(); ++p)
                w.values[base + p] = {res.x[2 * p], res.x[2 * p + 1]};
            frames_json.push_back(json{{"frame", t},
                                       {"iterations", res.iterations},
                                       {"rel_residual", res.rel_residual},
                                       {"converged", res.converged}});
        }
    }

    out.energy_after = energy_breakdown(w, atlas, df, cfg.reg);

    const VectorField3 u = reconstruct_u(w, atlas);
    const VectorField3 m = total_velocity(u, atlas);
    write_frame_field(join(cfg.out_dir, "w.evsf"), w);
    write_vector_field(join(cfg.out_dir, "u.evsf"), u);
    write_vector_field(join(cfg.out_dir, "m.evsf"), m);
    render_sequence(u, cfg.render, cfg.out_dir);

    const auto t_end = std::chrono::steady_clock::now();
    out.wall_time_s = std::chrono::duration<double>(t_end - t_start).count();

    json report{
        {"schema_version", 1},
        {"mode", cfg.mode == AssembleMode::Spatiotemporal ? "spatiotemporal"
                                                          : "framewise"},
        {"grid", {grid.n0, grid.n1, grid.n2}},
        {"lambda0", cfg.reg.lambda0},
        {"lambda1", cfg.reg.lambda1},
        {"solver",
         {{"rel_tol", cfg.solver.rel_tol},
          {"max_iters", cfg.solver.max_iters},
          {"restart", cfg.solver.restart}}},
        {"converged", out.converged},
        {"breakdown", out.breakdown},
        {"iterations", out.iterations},
        {"rel_residual", out.rel_residual},
        {"energy",
         {{"before", energy_json(out.energy_before)},
          {"after", energy_json(out.energy_after)}}},
        {"wall_time_s", out.wall_time_s},
        {"table",
         json::array({json{{"lambda0", cfg.reg.lambda0},
                           {"lambda1", cfg.reg.lambda1},
                           {"runtime_s", out.wall_time_s},
                           {"rel_residual", out.rel_residual}}})}};
    if (cfg.mode == AssembleMode::Framewise) report["frames"] = frames_json;

    std::ofstream rep(join(cfg.out_dir, "report.json"), std::ios::binary);
    if (!rep) throw IoFailure("flow: cannot write report.json");
    rep << report.dump(2) << "\n";
    if (!rep) throw IoFailure("flow: report.json write failed");
    return out;
}

void run_synth(const PipelineConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    require(cfg.synth_n1 == cfg.synth_n2, "synth",
            "grid must be square in the spatial axes");
    const Grid3 grid = standard_grid(cfg.synth_n0, cfg.synth_n1, cfg.synth_n2);
    const SynthResult res = generate(cfg.synth, grid, cfg.frame_order);
    write_scalar_field(join(cfg.out_dir, "z.evsf"), res.z);
    write_scalar_field(join(cfg.out_dir, "f.evsf"), res.f);
    write_frame_field(join(cfg.out_dir, "w_true.evsf"), res.w_true);
    write_vector_field(join(cfg.out_dir, "u_true.evsf"), res.u_true);
}

void run_preprocess(const PipelineConfig& cfg) {
    require(!cfg.volume_path.empty(), "preprocess", "missing input volume path");
    ensure_out_dir(cfg.out_dir);
    EvsfArray arr = read_evsf(cfg.volume_path);
    if (arr.dims.size() != 4)
        throw DimMismatch("preprocess: expected a 4-D volume in " +
                          cfg.volume_path);
    Volume4 vol;
    vol.nt = arr.dims[0];
    vol.nx = arr.dims[1];
    vol.ny = arr.dims[2];
    vol.nz = arr.dims[3];
    vol.values = std::move(arr.values);
    const PreprocessResult res = preprocess(vol, cfg.preprocess);
    write_scalar_field(join(cfg.out_dir, "z.evsf"), res.z);
    write_scalar_field(join(cfg.out_dir, "f.evsf"), res.f);
    write_centers_csv(join(cfg.out_dir, "centers.csv"), res.centers);
}

void run_trajectories(const PipelineConfig& cfg) {
    require(!cfg.m_path.empty(), "trajectories", "missing input m path");
    require(!cfg.f_path.empty(), "trajectories", "missing input f path");
    require(!cfg.z_path.empty(), "trajectories", "missing input z path");
    ensure_out_dir(cfg.out_dir);
    const VectorField3 m = load_vector(cfg.m_path);
    const ScalarField3 f = load_scalar(cfg.f_path);
    const HeightField z = load_scalar(cfg.z_path);
    if (m.grid != f.grid || m.grid != z.grid)
        throw DimMismatch("trajectories: m/f/z grids differ");
    const std::vector<ChartPoint> seeds =
        detect_seeds(f, cfg.trajectories.integration.start_frame,
                     cfg.trajectories.threshold);
    const std::vector<Trajectory> trajs =
        integrate_trajectories(m, z, seeds, cfg.trajectories.integration);
    write_trajectories_csv(join(cfg.out_dir, "trajectories.csv"), trajs);
}

void run_render(const PipelineConfig& cfg) {
    require(!cfg.field_path.empty(), "render", "missing input field path");
    ensure_out_dir(cfg.out_dir);
    const VectorField3 u = load_vector(cfg.field_path);
    render_sequence(u, cfg.render, cfg.out_dir);
}

namespace {

struct CheckReporter {
    int failures = 0;

    void report(const char* name, bool pass, double value,
                const char* detail) {
        std::printf("%s %s (%s = %.6g)\n", pass ? "PASS" : "FAIL", name,
                    detail, value);
        if (!pass) ++failures;
    }
};

} // namespace

int run_verify(const PipelineConfig& cfg) {
    require(!cfg.z_path.empty(), "verify", "missing input z path");
    require(!cfg.f_path.empty(), "verify", "missing input f path");
    cfg.reg.validate();
    cfg.solver.validate();
    ensure_out_dir(cfg.out_dir);

    const HeightField z = load_scalar(cfg.z_path);
    const ScalarField3 f = load_scalar(cfg.f_path);
    if (z.grid != f.grid) throw DimMismatch("verify: z and f grids differ");
    const Grid3& grid = z.grid;
    CheckReporter rep;

    // 1. container round-trip is byte-exact
    {
        const std::string tmp = join(cfg.out_dir, "verify_roundtrip.evsf");
        write_scalar_field(tmp, f);
        const ScalarField3 f2 = load_scalar(tmp);
        bool same = f2.values.size() == f.values.size();
        if (same)
            for (std::size_t p = 0; p < f.values.size(); ++p)
                if (f.values[p] != f2.values[p]) {
                    same = false;
                    break;
                }
        rep.report("evsf-roundtrip", same, same ? 0.0 : 1.0, "mismatches");
        std::filesystem::remove(tmp);
    }

    const GeometryAtlas atlas = build_atlas(z, cfg.frame_order);

    // 2. metric positivity
    {
        double min_det = atlas.sqrtdetg[0];
        for (double s : atlas.sqrtdetg) min_det = std::min(min_det, s);
        rep.report("metric-positive", min_det > 0.0, min_det, "min sqrt(det g)");
    }

    // 3. frame orthonormality: e_i . e_j = alpha^k_i g_kl alpha^l_j = delta_ij
    {
        double worst = 0.0;
        for (std::size_t p = 0; p < grid.size(); ++p) {
            for (int i = 1; i <= 2; ++i)
                for (int jj = 1; jj <= 2; ++jj) {
                    double dot = 0.0;
                    for (int k = 1; k <= 2; ++k)
                        for (int l = 1; l <= 2; ++l)
                            dot += atlas.alpha_at(p, k, i) * atlas.g_at(p, k, l) *
                                   atlas.alpha_at(p, l, jj);
                    worst = std::max(worst,
                                     std::abs(dot - (i == jj ? 1.0 : 0.0)));
                }
        }
        rep.report("frame-orthonormality", worst < 1e-12, worst, "max |e_i.e_j - delta|");
    }

    // 4. frame-symbol antisymmetry (discretization-level residual)
    {
        double worst = 0.0, scale = 0.0;
        for (std::size_t p = 0; p < grid.size(); ++p)
            for (int mu = 0; mu <= 2; ++mu)
                for (int i = 1; i <= 2; ++i)
                    for (int jj = 1; jj <= 2; ++jj) {
                        const double gf = atlas.gammaf_at(p, jj, mu, i);
                        scale = std::max(scale, std::abs(gf));
                        worst = std::max(
                            worst, std::abs(gf + atlas.gammaf_at(p, i, mu, jj)));
                    }
        const double tol = 50.0 * (grid.h0 + grid.h1) * (1.0 + scale);
        rep.report("framesymbol-antisymmetry", worst <= tol, worst,
                   "max |GF^j_(mu i) + GF^i_(mu j)|");
    }

    const DataDerivatives df = data_derivatives(f);
    const ElCoefficients coeffs = el_coefficients(atlas, df, cfg.reg);

    // 5. assembled matrix agrees with the direct residual evaluation
    {
        Lcg64 rng(42);
        FrameField wr;
        wr.grid = grid;
        wr.values.resize(grid.size());
        for (auto& v : wr.values)
            v = {rng.next_double() - 0.5, rng.next_double() - 0.5};
        const SparseSystem sys = assemble(coeffs, AssembleMode::Spatiotemporal);
        std::vector<double> xw(2 * grid.size());
        for (std::size_t p = 0; p < grid.size(); ++p) {
            xw[2 * p] = wr.values[p][0];
            xw[2 * p + 1] = wr.values[p][1];
        }
        const std::vector<double> ax = matvec(sys, xw);
        const std::vector<double> direct = el_residual(wr, coeffs);
        double worst = 0.0, scale = 1.0;
        for (std::size_t r = 0; r < ax.size(); ++r) {
            worst = std::max(worst, std::abs(ax[r] - sys.rhs[r] - direct[r]));
            scale = std::max(scale, std::abs(ax[r]));
        }
        rep.report("assembly-crosscheck", worst <= 1e-10 * scale, worst,
                   "max |matvec - direct|");
    }

    // 6-8. solve, then check residual reporting, energy decrease, tangency
    {
        const SparseSystem sys = assemble(coeffs, AssembleMode::Spatiotemporal);
        const SolveResult res = gmres(sys, cfg.solver);
        bool monotone = true;
        for (std::size_t k = 1; k < res.cycle_residuals.size(); ++k)
            if (res.cycle_residuals[k] >
                res.cycle_residuals[k - 1] * (1.0 + 1e-9))
                monotone = false;
        rep.report("solver-converged", res.converged, res.rel_residual,
                   "rel residual");
        rep.report("solver-cycle-monotone", monotone,
                   double(res.cycle_residuals.size()), "restart boundaries");

        FrameField w;
        w.grid = grid;
        w.values.resize(grid.size());
        for (std::size_t p = 0; p < grid.size(); ++p)
            w.values[p] = {res.x[2 * p], res.x[2 * p + 1]};
        FrameField w0;
        w0.grid = grid;
        w0.values.assign(grid.size(), {0.0, 0.0});
        const double e0 = energy(w0, atlas, df, cfg.reg);
        const double e1 = energy(w, atlas, df, cfg.reg);
        rep.report("energy-decrease", e1 <= e0 * (1.0 + 1e-12), e1 / (e0 > 0 ? e0 : 1.0),
                   "energy(after)/energy(before)");

        const VectorField3 u = reconstruct_u(w, atlas);
        double worst = 0.0;
        for (std::size_t p = 0; p < grid.size(); ++p) {
            const auto& uv = u.values[p];
            const auto& nv = atlas.normal[p];
            const double dot =
                uv[0] * nv[0] + uv[1] * nv[1] + uv[2] * nv[2];
            const double len =
                std::sqrt(uv[0] * uv[0] + uv[1] * uv[1] + uv[2] * uv[2]);
            worst = std::max(worst, std::abs(dot) / (1.0 + len));
        }
        rep.report("tangency", worst <= 1e-10, worst, "max |u.N|/(1+|u|)");
    }

    return rep.failures;
}

} // namespace evsurf

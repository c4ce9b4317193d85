// Batch pipeline: config loading and the end-to-end stage drivers used by
// the command-line tool.  Every stage reads and writes files, so any stage
// can be rerun from its inputs alone.
#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "evsurf/assembly.hpp"
#include "evsurf/geometry.hpp"
#include "evsurf/kinematics.hpp"
#include "evsurf/preprocess.hpp"
#include "evsurf/solver.hpp"
#include "evsurf/synth.hpp"
#include "evsurf/variational.hpp"

namespace evsurf {

struct RenderSettings {
    /// false: one normalization magnitude for the whole sequence (default);
    /// true: each frame normalizes on its own 99th percentile.
    bool per_frame_normalization = false;
    /// Fixed normalization magnitude; overrides the percentile when set.
    std::optional<double> max_magnitude;
};

struct TrajectorySettings {
    double threshold = 0.3;        ///< seed detection threshold
    TrajectoryConfig integration;  ///< step, start frame, integrator
};

/// Union of all stage settings; unused parts are ignored by each run_*.
/// Serialized as one JSON file (keys documented in the README); command-line
/// flags override individual keys.
struct PipelineConfig {
    // input paths
    std::string z_path;      ///< surface heights (3-D EVSF)
    std::string f_path;      ///< intensities (3-D EVSF)
    std::string volume_path; ///< raw 4-D volume (preprocess)
    std::string m_path;      ///< motion field (trajectories)
    std::string field_path;  ///< vector field to render

    std::string out_dir = ".";

    // flow stage
    RegParams reg;
    AssembleMode mode = AssembleMode::Spatiotemporal;
    SolverConfig solver;
    FrameOrder frame_order = FrameOrder::Dx1First;

    // synth stage
    SynthSpec synth;
    std::size_t synth_n0 = 16, synth_n1 = 64, synth_n2 = 64;

    // preprocess stage
    PreprocessConfig preprocess;

    RenderSettings render;
    TrajectorySettings trajectories;
};

/// Parse a JSON config file / JSON text.  Unknown keys are rejected
/// (BadConfig) so typos fail loudly.
PipelineConfig load_config(const std::string& json_path);
PipelineConfig config_from_json_text(const std::string& text);

/// Standard-steps loaders: EVSF stores extents only, so steps follow the
/// unit-domain convention h0 = 1/(n0-1), h1 = h2 = 1/(n1-1).
ScalarField3 load_scalar(const std::string& path);
FrameField load_frame(const std::string& path);
VectorField3 load_vector(const std::string& path);

struct FlowRunResult {
    bool converged = false;
    bool breakdown = false;
    double rel_residual = 0.0;
    std::size_t iterations = 0;
    EnergyBreakdown energy_before, energy_after;
    double wall_time_s = 0.0;
};

/// geometry -> coefficients -> assembly -> solve -> reconstruct -> render.
/// Writes w.evsf, u.evsf, m.evsf, flow_*.ppm and report.json into out_dir.
/// Returns the solve summary (also recorded in the report); throws on
/// validation/IO errors with the failing stage named.
FlowRunResult run_flow(const PipelineConfig& cfg);

/// Writes z.evsf, f.evsf, w_true.evsf, u_true.evsf into out_dir.
void run_synth(const PipelineConfig& cfg);

/// Writes z.evsf, f.evsf, centers.csv into out_dir.
void run_preprocess(const PipelineConfig& cfg);

/// Seeds from f at the configured frame, integrates through m, writes
/// trajectories.csv into out_dir.
void run_trajectories(const PipelineConfig& cfg);

/// Renders field_path into flow_*.ppm files in out_dir.
void run_render(const PipelineConfig& cfg);

/// Runs the invariant smoke suite on the (z, f) fixture, printing one
/// PASS/FAIL line per check; returns the number of failures.
int run_verify(const PipelineConfig& cfg);

} // namespace evsurf

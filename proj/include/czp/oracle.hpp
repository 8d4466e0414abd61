// oracle.hpp -- deterministic synthetic ground truth for antenna responses.
//
// This is NOT an electromagnetic solver. It maps a design to a damped 2D
// wave system on a coarse raster of the substrate (metal and substrate
// cells carry different wave speeds), excites a unit velocity impulse at
// the port cell, and reads the port impedance as the ratio of the
// displacement and velocity spectra there:
//
//     Z(w) = scale * (b_V^T phi_hat(w)) / (b_I^T phi_hat(w))
//
// followed by S11 = (Z/Z0 - 1)/(Z/Z0 + 1). Because the system is a genuine
// linear ODE, every rational-structure theorem holds for it exactly; none
// of the paper-scale simulator numbers are reproducible from it.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "czp/czp_model.hpp"
#include "czp/geometry.hpp"

namespace czp {

struct OracleConfig {
    double raster_res = 1.0;         // px/mm for the physics grid (6x30 cells)
    double metal_speed = 2.2;        // cells/time
    double substrate_speed = 1.0;    // cells/time
    double damping = 0.12;           // gamma > 0
    double z0 = 50.0;                // reference impedance, ohm
    double impedance_scale = 250.0;  // ohm per model impedance unit
    double freq_scale = 0.60;        // model rad/time per GHz
    double freq_offset = 0.30;       // model rad/time at 0 GHz
    int cell_cap = 2000;
    std::string version = "1";

    // calibrated defaults; see OracleConfig notes in the README
    std::string fingerprint() const;
};

struct PortSystem {
    LinearSystem system;
    Eigen::VectorXd b_voltage;  // picks the port-cell displacement
    Eigen::VectorXd b_current;  // picks the port-cell velocity
    Eigen::VectorXd initial;    // unit velocity impulse at the port cell
    int port_row = 0, port_col = 0;
    FrequencyGrid model_grid;   // cfg.grid mapped into model frequency
};

struct OracleOutput {
    ComplexSpectrum z_in;       // ohms on the GHz grid
    ComplexSpectrum s11;
    FrequencyResponse response; // natural log, floored
};

// Model frequency for a GHz frequency.
double model_frequency(const OracleConfig& cfg, double f_ghz);

PortSystem make_port_system(const DesignSpace& space, const std::vector<Rect>& rects,
                            const Eigen::Vector2d& port_mm, const OracleConfig& cfg,
                            const FrequencyGrid& grid = canonical_antenna_grid());

OracleOutput simulate_full(const DesignSpace& space, const DesignVector& design,
                           const OracleConfig& cfg);
FrequencyResponse simulate_s11(const DesignSpace& space, const DesignVector& design,
                               const OracleConfig& cfg);

// All-substrate baseline (no metal), port at the grid origin; test hook.
FrequencyResponse baseline_response(const DesignSpace& space, const OracleConfig& cfg);

// Datasets ------------------------------------------------------------------

struct DatasetRecord {
    DesignVector design;
    FrequencyResponse response;
};

struct DatasetSummary {
    int requested = 0;
    int written = 0;
    int failed = 0;
    std::string path;
};

// Writes n JSON-lines records; record i depends only on (seed, i), so any
// worker count produces byte-identical files. Per-record oracle failures
// become explicit error records, never silent drops.
DatasetSummary generate_dataset(const DesignSpace& space, int n, std::uint64_t seed,
                                const OracleConfig& cfg, const std::string& out_path,
                                int workers = 1);

std::string dataset_record_to_json_line(const DatasetRecord& record, const OracleConfig& cfg);
std::vector<DatasetRecord> load_dataset(const std::string& path, int* skipped = nullptr);

// Touchstone-style one-port export (MA format, 50 ohm reference).
std::string response_to_s1p(const FrequencyResponse& response, double z0);
std::string spectrum_to_s1p(const ComplexSpectrum& s11, double z0);

}  // namespace czp

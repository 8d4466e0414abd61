#include "czp/oracle.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace czp {

using json = nlohmann::ordered_json;

std::string OracleConfig::fingerprint() const {
    std::ostringstream s;
    s << version << "|" << raster_res << "|" << metal_speed << "|" << substrate_speed << "|"
      << damping << "|" << z0 << "|" << impedance_scale << "|" << freq_scale << "|" << freq_offset
      << "|" << cell_cap;
    return hex64(fnv1a64(s.str()));
}

double model_frequency(const OracleConfig& cfg, double f_ghz) {
    return cfg.freq_scale * f_ghz + cfg.freq_offset;
}

PortSystem make_port_system(const DesignSpace& space, const std::vector<Rect>& rects,
                            const Eigen::Vector2d& port_mm, const OracleConfig& cfg,
                            const FrequencyGrid& grid) {
    require(cfg.damping > 0.0, Errc::invalid_argument, "oracle: damping must be > 0");
    require(cfg.metal_speed > 0.0 && cfg.substrate_speed > 0.0, Errc::invalid_argument,
            "oracle: speeds must be > 0");

    const AntennaImage img = rasterize_rects(space, rects, cfg.raster_res);
    const int h = img.height, w = img.width;

    // material map: metal where any channel covers the cell, fractional
    // boundary coverage blends the speeds so sub-cell moves register
    Eigen::MatrixXd speed(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double cover = std::clamp(
                std::max(img.interior(r, c), std::max(img.x_boundary(r, c), img.y_boundary(r, c))),
                0.0, 1.0);
            speed(r, c) = cfg.substrate_speed + (cfg.metal_speed - cfg.substrate_speed) * cover;
        }
    }

    PortSystem ps;
    ps.system = build_field_2d(speed, cfg.damping, 1.0 / cfg.raster_res, cfg.cell_cap);
    ps.port_row = std::clamp(static_cast<int>(std::floor(port_mm.y() * cfg.raster_res)), 0, h - 1);
    ps.port_col = std::clamp(static_cast<int>(std::floor(port_mm.x() * cfg.raster_res)), 0, w - 1);
    const int cells = h * w;
    const int cell = ps.port_row * w + ps.port_col;
    ps.b_voltage = Eigen::VectorXd::Zero(2 * cells);
    ps.b_current = Eigen::VectorXd::Zero(2 * cells);
    ps.initial = Eigen::VectorXd::Zero(2 * cells);
    // passive sign convention: a single isolated mode then gives
    // Z = (gamma + i w)/mu, which has positive real part
    ps.b_voltage[cell] = -1.0;
    ps.b_current[cells + cell] = 1.0;
    // excite the displacement component: a velocity impulse would make the
    // ratio of the two port spectra collapse to 1/(i w) independently of the
    // geometry (the velocity spectrum is i w times the displacement spectrum
    // when the initial displacement vanishes)
    ps.initial[cell] = 1.0;

    std::vector<double> model_freqs(static_cast<size_t>(grid.count()));
    for (int i = 0; i < grid.count(); ++i)
        model_freqs[static_cast<size_t>(i)] = model_frequency(cfg, grid.values[i]);
    ps.model_grid = make_grid(std::move(model_freqs), FrequencyUnit::dimensionless);
    return ps;
}

namespace {

OracleOutput simulate_port_system(const PortSystem& ps, const OracleConfig& cfg,
                                  const FrequencyGrid& ghz_grid) {
    const SpectralDecomposition dec = eigendecompose(ps.system);
    const ComplexSpectrum num =
        functional_spectrum_single_sided(dec, ps.initial, ps.b_voltage, ps.model_grid);
    const ComplexSpectrum den =
        functional_spectrum_single_sided(dec, ps.initial, ps.b_current, ps.model_grid);

    OracleOutput out;
    out.z_in.grid = ghz_grid;
    out.z_in.values.resize(ghz_grid.count());
    for (int m = 0; m < ghz_grid.count(); ++m) {
        if (std::abs(den.values[m]) < 1e-12) {
            std::ostringstream msg;
            msg << "oracle: port current spectrum underflow at " << ghz_grid.values[m] << " GHz";
            fail(Errc::degenerate_denominator, msg.str());
        }
        out.z_in.values[m] = cfg.impedance_scale * num.values[m] / den.values[m];
    }
    S11Result s11 = s11_from_impedance(out.z_in, cfg.z0);
    out.s11 = std::move(s11.s11);
    out.response = std::move(s11.response);
    return out;
}

}  // namespace

OracleOutput simulate_full(const DesignSpace& space, const DesignVector& design,
                           const OracleConfig& cfg) {
    try {
        const PortSystem ps =
            make_port_system(space, design_rects(space, design), port_position(space, design), cfg);
        return simulate_port_system(ps, cfg, canonical_antenna_grid());
    } catch (const Error& e) {
        std::ostringstream msg;
        msg << e.what() << " [design " << design_to_json(design) << "]";
        throw Error(e.code(), msg.str());
    }
}

FrequencyResponse simulate_s11(const DesignSpace& space, const DesignVector& design,
                               const OracleConfig& cfg) {
    return simulate_full(space, design, cfg).response;
}

FrequencyResponse baseline_response(const DesignSpace& space, const OracleConfig& cfg) {
    const PortSystem ps = make_port_system(space, {}, Eigen::Vector2d(0.0, 0.0), cfg);
    return simulate_port_system(ps, cfg, canonical_antenna_grid()).response;
}

// ---------------------------------------------------------------------------
// Datasets

std::string dataset_record_to_json_line(const DatasetRecord& record, const OracleConfig& cfg) {
    json j;
    json locs = json::array();
    for (const auto& l : record.design.locations) locs.push_back({l.x(), l.y()});
    j["design"] = locs;
    j["response"] = std::vector<double>(record.response.log_mag.data(),
                                        record.response.log_mag.data() +
                                            record.response.log_mag.size());
    j["oracle"] = {{"version", cfg.version}, {"cfg", cfg.fingerprint()}};
    return j.dump();
}

DatasetSummary generate_dataset(const DesignSpace& space, int n, std::uint64_t seed,
                                const OracleConfig& cfg, const std::string& out_path,
                                int workers) {
    require(n >= 1, Errc::invalid_argument, "generate_dataset: n must be >= 1");
    require(workers >= 1, Errc::invalid_argument, "generate_dataset: workers must be >= 1");

    std::vector<std::string> lines(static_cast<size_t>(n));
    std::atomic<int> next{0};
    std::atomic<int> failures{0};
    auto work = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            const DesignVector design = sample_design(space, mix_seed(seed, static_cast<std::uint64_t>(i)));
            try {
                DatasetRecord rec{design, simulate_s11(space, design, cfg)};
                lines[static_cast<size_t>(i)] = dataset_record_to_json_line(rec, cfg);
            } catch (const std::exception& e) {
                json j;
                json locs = json::array();
                for (const auto& l : design.locations) locs.push_back({l.x(), l.y()});
                j["design"] = locs;
                j["error"] = std::string(e.what());
                j["oracle"] = {{"version", cfg.version}, {"cfg", cfg.fingerprint()}};
                lines[static_cast<size_t>(i)] = j.dump();
                failures.fetch_add(1);
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    std::ofstream out(out_path, std::ios::binary);
    require(out.good(), Errc::io, "generate_dataset: cannot open " + out_path);
    for (const std::string& line : lines) out << line << "\n";
    out.close();
    require(out.good(), Errc::io, "generate_dataset: write failed for " + out_path);

    DatasetSummary summary;
    summary.requested = n;
    summary.failed = failures.load();
    summary.written = n;
    summary.path = out_path;
    return summary;
}

std::vector<DatasetRecord> load_dataset(const std::string& path, int* skipped) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Errc::io, "load_dataset: cannot open " + path);
    std::vector<DatasetRecord> records;
    int skip_count = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (j.contains("error")) {
            ++skip_count;
            continue;
        }
        DatasetRecord rec;
        for (const auto& e : j.at("design"))
            rec.design.locations.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
        auto resp = j.at("response").get<std::vector<double>>();
        require(static_cast<int>(resp.size()) == canonical_antenna_grid().count(), Errc::io,
                "load_dataset: response length mismatch");
        rec.response.grid = canonical_antenna_grid();
        rec.response.log_mag =
            Eigen::Map<Eigen::VectorXd>(resp.data(), static_cast<int>(resp.size()));
        records.push_back(std::move(rec));
    }
    if (skipped) *skipped = skip_count;
    return records;
}

// ---------------------------------------------------------------------------
// Touchstone export

std::string response_to_s1p(const FrequencyResponse& response, double z0) {
    std::ostringstream out;
    out << "! one-port reflection, magnitude only\n";
    out << "# GHz S MA R " << z0 << "\n";
    char line[96];
    for (int i = 0; i < response.grid.count(); ++i) {
        std::snprintf(line, sizeof line, "%.17g %.17g %.17g\n", response.grid.values[i],
                      std::exp(response.log_mag[i]), 0.0);
        out << line;
    }
    return out.str();
}

std::string spectrum_to_s1p(const ComplexSpectrum& s11, double z0) {
    std::ostringstream out;
    out << "! one-port reflection\n";
    out << "# GHz S MA R " << z0 << "\n";
    char line[96];
    for (int i = 0; i < s11.grid.count(); ++i) {
        const double mag = std::abs(s11.values[i]);
        const double ang = std::arg(s11.values[i]) * 180.0 / 3.14159265358979323846;
        std::snprintf(line, sizeof line, "%.17g %.17g %.17g\n", s11.grid.values[i], mag, ang);
        out << line;
    }
    return out.str();
}

}  // namespace czp

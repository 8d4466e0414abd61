// czp -- command-line surface over the library: theorem checks, exact
// zero/pole extraction, response fitting, dataset generation, surrogate
// training/evaluation, design search, oracle verification and rendering.
//
// Every artifact-producing subcommand writes a manifest.json next to its
// outputs recording argv, the resolved configuration, input/output file
// hashes and wall time; rerunning the same argv reproduces every artifact
// byte for byte.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

#include "czp/fit.hpp"
#include "czp/oracle.hpp"
#include "czp/run_io.hpp"
#include "czp/search.hpp"
#include "czp/surrogate.hpp"

using namespace czp;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct ArtifactSink {
    RunManifest manifest;
    std::string dir;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    ArtifactSink(std::string command, std::vector<std::string> argv, std::string out_dir)
        : dir(std::move(out_dir)) {
        manifest.command = std::move(command);
        manifest.argv = std::move(argv);
        std::error_code ec;
        fs::create_directories(dir, ec);
    }

    void note_input(const std::string& path) { manifest.inputs[path] = file_hash_hex(path); }

    std::string emit(const std::string& name, const std::string& content) {
        const std::string path = (fs::path(dir) / name).string();
        atomic_write_file(path, content);
        manifest.outputs[path] = hex64(fnv1a64(content));
        return path;
    }

    void finish(const json& config) {
        manifest.config_json = config.dump();
        manifest.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_manifest(dir, manifest);
    }
};

std::vector<std::string> collect_argv(int argc, char** argv) {
    std::vector<std::string> out;
    for (int i = 0; i < argc; ++i) out.emplace_back(argv[i]);
    return out;
}

OracleConfig add_oracle_flags(CLI::App* cmd) {
    static thread_local OracleConfig cfg;  // reset per subcommand registration
    cfg = OracleConfig{};
    cmd->add_option("--oracle-res", cfg.raster_res, "physics raster resolution, px/mm");
    cmd->add_option("--metal-speed", cfg.metal_speed, "metal cell wave speed");
    cmd->add_option("--substrate-speed", cfg.substrate_speed, "substrate cell wave speed");
    cmd->add_option("--oracle-damping", cfg.damping, "oracle damping");
    cmd->add_option("--z0", cfg.z0, "reference impedance, ohm");
    cmd->add_option("--impedance-scale", cfg.impedance_scale, "ohm per model impedance unit");
    cmd->add_option("--freq-scale", cfg.freq_scale, "model frequency per GHz");
    cmd->add_option("--freq-offset", cfg.freq_offset, "model frequency at 0 GHz");
    return cfg;
}

json oracle_config_json(const OracleConfig& cfg) {
    return json{{"raster_res", cfg.raster_res},
                {"metal_speed", cfg.metal_speed},
                {"substrate_speed", cfg.substrate_speed},
                {"damping", cfg.damping},
                {"z0", cfg.z0},
                {"impedance_scale", cfg.impedance_scale},
                {"freq_scale", cfg.freq_scale},
                {"freq_offset", cfg.freq_offset},
                {"fingerprint", cfg.fingerprint()}};
}

json surrogate_config_json(const SurrogateConfig& cfg) {
    return json{{"head", cfg.head == HeadKind::raw ? "raw" : "czp"},
                {"k", cfg.czp_degree},
                {"pool", cfg.pool},
                {"feat_hidden", cfg.feat_hidden},
                {"feat_out", cfg.feat_out},
                {"tokens", cfg.tokens},
                {"trunk", cfg.trunk},
                {"loss", cfg.loss == LossKind::mse ? "mse" : "shrinkage"},
                {"shrink_a", cfg.shrink_a},
                {"shrink_c", cfg.shrink_c}};
}

std::string rational_to_json(const RationalFunction& rf) {
    json j;
    j["c0"] = {rf.c0.real(), rf.c0.imag()};
    json zs = json::array(), ps = json::array();
    for (const cplx& z : rf.zeros) zs.push_back({z.real(), z.imag()});
    for (const cplx& p : rf.poles) ps.push_back({p.real(), p.imag()});
    j["k1"] = rf.zeros.size();
    j["k2"] = rf.poles.size();
    j["zeros"] = zs;
    j["poles"] = ps;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

int cmd_verify_theorem(int n_cells, double gamma, double dt, int freqs, double tol) {
    const LinearSystem sys = build_wave_system_1d(n_cells, 1.0, gamma, 1.0);
    const SpectralDecomposition dec = eigendecompose(sys);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(sys.state_dim());
    x0[n_cells / 2] = 1.0;  // displacement impulse mid-domain

    // wave-builder modes decay at gamma/2, so twice the nominal horizon is
    // needed before the state amplitude itself reaches the tail tolerance
    const double horizon = 2.0 * std::log(1e6) / gamma;
    const Trajectory traj = integrate(sys, x0, dt, horizon);
    double max_mode = 0.0;
    for (int i = 0; i < dec.eigenvalues.size(); ++i)
        max_mode = std::max(max_mode, std::abs(dec.eigenvalues[i].imag()));
    const FrequencyGrid grid = linspace_grid(0.0, 1.5 * max_mode, freqs);

    const MultiSpectrum numeric = numeric_fourier_single_sided(traj, grid);
    const MultiSpectrum analytic = analytic_fourier_single_sided(dec, x0, grid);
    const double rel_single = (numeric.values - analytic.values).norm() / analytic.values.norm();

    // double-sided vs quadrature of the even extension: 2 int phi cos(wt)
    const MultiSpectrum analytic2 = analytic_fourier_double_sided(dec, x0, grid);
    Eigen::MatrixXcd numeric2(sys.state_dim(), grid.count());
    for (int m = 0; m < grid.count(); ++m) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(sys.state_dim());
        for (int i = 0; i < traj.times.size(); ++i) {
            const double w = (i == 0 || i + 1 == traj.times.size()) ? 0.5 : 1.0;
            acc += traj.states.col(i) * (w * std::cos(grid.values[m] * traj.times[i]));
        }
        numeric2.col(m) = (2.0 * traj.dt() * acc).cast<cplx>();
    }
    const double rel_double = (numeric2 - analytic2.values).norm() / analytic2.values.norm();

    std::printf("single-sided: max relative L2 error %.3e (tolerance %.1e)\n", rel_single, tol);
    std::printf("double-sided: max relative L2 error %.3e (tolerance %.1e)\n", rel_double, tol);
    const bool ok = rel_single <= tol && rel_double <= tol;
    std::printf("%s\n", ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"constant-zeros-poles numerical laboratory"};
    app.set_config("--config", "", "flat key = value configuration file");
    app.require_subcommand(1);
    const std::vector<std::string> argv_copy = collect_argv(argc, argv);

    // verify-theorem ---------------------------------------------------------
    auto* vt = app.add_subcommand("verify-theorem",
                                  "analytic vs numeric Fourier equivalence check");
    int vt_n = 8, vt_freqs = 64;
    double vt_gamma = 0.1, vt_dt = 1e-3, vt_tol = 1e-3;
    vt->add_option("--n", vt_n, "1D cell count");
    vt->add_option("--gamma", vt_gamma, "damping");
    vt->add_option("--dt", vt_dt, "integration step");
    vt->add_option("--freqs", vt_freqs, "frequency count");
    vt->add_option("--tol", vt_tol, "relative L2 tolerance");

    // exact-czp --------------------------------------------------------------
    auto* ec = app.add_subcommand("exact-czp", "exact zero/pole extraction");
    int ec_n = 8;
    double ec_gamma = 0.1;
    std::uint64_t ec_seed = 0;
    std::string ec_design, ec_out = "rational.json";
    ec->add_option("--n", ec_n, "1D cell count (random functionals)");
    ec->add_option("--gamma", ec_gamma, "damping");
    ec->add_option("--seed", ec_seed, "seed for the random functionals");
    ec->add_option("--design", ec_design, "design JSON: extract the oracle port impedance");
    ec->add_option("--out", ec_out, "output JSON path");
    const OracleConfig ec_oracle = add_oracle_flags(ec);

    // fit ----------------------------------------------------------------------
    auto* ft = app.add_subcommand("fit", "fit the constant-zeros-poles form to a response CSV");
    std::string ft_input, ft_out = "model.json";
    int ft_k = 4;
    FitOptions ft_opt;
    std::string ft_loss = "mse";
    ft->add_option("--input", ft_input, "response CSV")->required();
    ft->add_option("--k", ft_k, "degree K");
    ft->add_option("--restarts", ft_opt.restarts, "multi-start count");
    ft->add_option("--max-iters", ft_opt.max_iters, "iteration cap per restart");
    ft->add_option("--loss", ft_loss, "mse | shrinkage");
    ft->add_option("--shrink-a", ft_opt.shrink_a, "shrinkage steepness");
    ft->add_option("--shrink-c", ft_opt.shrink_c, "shrinkage knee");
    ft->add_option("--seed", ft_opt.seed, "restart seed");
    ft->add_option("--out", ft_out, "output model JSON path");

    // gen-data --------------------------------------------------------------
    auto* gd = app.add_subcommand("gen-data", "generate a synthetic oracle dataset");
    int gd_n = 100, gd_workers = 1;
    std::uint64_t gd_seed = 0;
    std::string gd_out = "data.jsonl";
    gd->add_option("--n", gd_n, "record count")->required();
    gd->add_option("--seed", gd_seed, "dataset seed");
    gd->add_option("--out", gd_out, "output JSON-lines path");
    gd->add_option("--workers", gd_workers, "worker threads (output is worker-invariant)");
    const OracleConfig gd_oracle = add_oracle_flags(gd);

    // train -------------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "train a surrogate on a dataset");
    std::string tr_data, tr_head = "czp", tr_loss = "mse", tr_out = "train_out";
    SurrogateConfig tr_cfg;
    TrainOptions tr_opt;
    tr->add_option("--data", tr_data, "dataset JSON-lines")->required();
    tr->add_option("--head", tr_head, "raw | czp");
    tr->add_option("--k", tr_cfg.czp_degree, "czp degree");
    tr->add_option("--pool", tr_cfg.pool, "average-pool patch size");
    tr->add_option("--tokens", tr_cfg.tokens, "token count L");
    tr->add_option("--feat-out", tr_cfg.feat_out, "feature channels C");
    tr->add_option("--loss", tr_loss, "mse | shrinkage");
    tr->add_option("--shrink-a", tr_cfg.shrink_a, "shrinkage steepness");
    tr->add_option("--shrink-c", tr_cfg.shrink_c, "shrinkage knee");
    tr->add_option("--epochs", tr_opt.epochs, "epoch count");
    tr->add_option("--batch", tr_opt.batch_size, "batch size");
    tr->add_option("--lr", tr_opt.learning_rate, "learning rate");
    tr->add_option("--momentum", tr_opt.momentum, "momentum");
    tr->add_option("--plateau", tr_opt.plateau_epochs, "epochs without val improvement before decay");
    tr->add_option("--lr-factor", tr_opt.lr_factor, "plateau decay factor");
    tr->add_option("--clip", tr_opt.grad_clip, "gradient norm clip");
    tr->add_option("--seed", tr_opt.init_seed, "parameter init seed");
    tr->add_option("--split-seed", tr_opt.split.seed, "split/shuffle seed");
    tr->add_option("--out", tr_out, "output directory");

    // eval -------------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset slice");
    std::string ev_data, ev_params, ev_head = "czp", ev_slice = "test", ev_out = "eval_out";
    SurrogateConfig ev_cfg;
    std::uint64_t ev_split_seed = 0;
    ev->add_option("--data", ev_data, "dataset JSON-lines")->required();
    ev->add_option("--params", ev_params, "checkpoint path")->required();
    ev->add_option("--head", ev_head, "raw | czp");
    ev->add_option("--k", ev_cfg.czp_degree, "czp degree");
    ev->add_option("--pool", ev_cfg.pool, "average-pool patch size");
    ev->add_option("--tokens", ev_cfg.tokens, "token count L");
    ev->add_option("--feat-out", ev_cfg.feat_out, "feature channels C");
    ev->add_option("--slice", ev_slice, "test | all (test re-derives the training split)");
    ev->add_option("--split-seed", ev_split_seed, "split seed used at training time");
    ev->add_option("--out", ev_out, "output directory");

    // search -----------------------------------------------------------------
    auto* se = app.add_subcommand("search", "surrogate-guided design search");
    std::string se_params, se_head = "czp", se_method = "cem", se_out = "search_out";
    SurrogateConfig se_cfg;
    SearchConfig se_scfg;
    se->add_option("--params", se_params, "checkpoint path")->required();
    se->add_option("--head", se_head, "raw | czp");
    se->add_option("--k", se_cfg.czp_degree, "czp degree");
    se->add_option("--pool", se_cfg.pool, "average-pool patch size");
    se->add_option("--tokens", se_cfg.tokens, "token count L");
    se->add_option("--feat-out", se_cfg.feat_out, "feature channels C");
    se->add_option("--method", se_method, "cem | random");
    se->add_option("--episodes", se_scfg.episodes, "total episode budget");
    se->add_option("--population", se_scfg.population, "CEM population per iteration");
    se->add_option("--elite", se_scfg.elite_frac, "CEM elite fraction");
    se->add_option("--seed", se_scfg.seed, "search seed");
    se->add_option("--top-k", se_scfg.top_k, "designs to keep");
    se->add_option("--out", se_out, "output directory");

    // verify-designs ------------------------------------------------------------
    auto* vd = app.add_subcommand("verify-designs", "oracle-verify a design list");
    std::string vd_designs, vd_out = "verify_out";
    int vd_workers = 1;
    vd->add_option("--designs", vd_designs, "designs JSON (search output or single design)")
        ->required();
    vd->add_option("--out", vd_out, "output directory");
    vd->add_option("--workers", vd_workers, "worker threads");
    const OracleConfig vd_oracle = add_oracle_flags(vd);

    // render -----------------------------------------------------------------
    auto* rd = app.add_subcommand("render", "rasterize a design and export artifacts");
    std::string rd_design, rd_out = "render_out", rd_params, rd_head = "czp";
    double rd_res = 10.0;
    bool rd_oracle = false;
    SurrogateConfig rd_cfg;
    rd->add_option("--design", rd_design, "design JSON")->required();
    rd->add_option("--out", rd_out, "output directory");
    rd->add_option("--res", rd_res, "raster resolution px/mm");
    rd->add_flag("--oracle", rd_oracle, "also simulate and export the oracle response");
    rd->add_option("--params", rd_params, "checkpoint: dump tokenizer attention maps");
    rd->add_option("--head", rd_head, "raw | czp (with --params)");
    rd->add_option("--k", rd_cfg.czp_degree, "czp degree (with --params)");
    rd->add_option("--tokens", rd_cfg.tokens, "token count (with --params)");
    rd->add_option("--feat-out", rd_cfg.feat_out, "feature channels (with --params)");
    rd->add_option("--pool", rd_cfg.pool, "average-pool patch size (with --params)");
    const OracleConfig rd_oracle_cfg = add_oracle_flags(rd);

    CLI11_PARSE(app, argc, argv);

    try {
        const DesignSpace& space = five_patch_space();

        if (vt->parsed()) {
            return cmd_verify_theorem(vt_n, vt_gamma, vt_dt, vt_freqs, vt_tol);
        }

        if (ec->parsed()) {
            ArtifactSink sink("exact-czp", argv_copy, fs::path(ec_out).parent_path().string());
            RationalFunction rf;
            json config;
            if (!ec_design.empty()) {
                sink.note_input(ec_design);
                const DesignVector d = design_from_json(read_file(ec_design));
                const PortSystem ps =
                    make_port_system(space, design_rects(space, d), port_position(space, d), ec_oracle);
                rf = exact_rational(eigendecompose(ps.system), ps.initial, ps.b_voltage,
                                    ps.b_current);
                config = {{"design", ec_design}, {"oracle", oracle_config_json(ec_oracle)}};
            } else {
                const LinearSystem sys = build_wave_system_1d(ec_n, 1.0, ec_gamma, 1.0);
                Rng rng(mix_seed(ec_seed, 0xb1b2));
                const int n = sys.state_dim();
                Eigen::VectorXd x0(n), b1(n), b2(n);
                for (int i = 0; i < n; ++i) {
                    x0[i] = rng.normal();
                    b1[i] = rng.normal();
                    b2[i] = rng.normal();
                }
                rf = exact_rational(eigendecompose(sys), x0, b1, b2);
                config = {{"n", ec_n}, {"gamma", ec_gamma}, {"seed", ec_seed}};
            }
            sink.emit(fs::path(ec_out).filename().string(), rational_to_json(rf));
            sink.finish(config);
            std::printf("wrote %s (k1=%zu, k2=%zu)\n", ec_out.c_str(), rf.zeros.size(),
                        rf.poles.size());
            return 0;
        }

        if (ft->parsed()) {
            ArtifactSink sink("fit", argv_copy, fs::path(ft_out).parent_path().string());
            sink.note_input(ft_input);
            ft_opt.loss = ft_loss == "shrinkage" ? LossKind::shrinkage : LossKind::mse;
            const FrequencyResponse target = response_from_csv(read_file(ft_input));
            const FitReport report = fit_czp(target, ft_k, ft_opt);
            sink.emit(fs::path(ft_out).filename().string(), czp_model_to_json(report.model));
            json rj = {{"final_loss", report.final_loss},
                       {"iterations", report.iterations},
                       {"restarts_used", report.restarts_used},
                       {"converged", report.converged}};
            sink.emit("fit_report.json", rj.dump(2) + "\n");
            sink.finish(json{{"input", ft_input},
                             {"k", ft_k},
                             {"restarts", ft_opt.restarts},
                             {"max_iters", ft_opt.max_iters},
                             {"loss", ft_loss},
                             {"shrink_a", ft_opt.shrink_a},
                             {"shrink_c", ft_opt.shrink_c},
                             {"seed", ft_opt.seed}});
            std::printf("fit: loss %.3e after %d iterations (converged: %s)\n", report.final_loss,
                        report.iterations, report.converged ? "yes" : "no");
            return 0;
        }

        if (gd->parsed()) {
            ArtifactSink sink("gen-data", argv_copy, fs::path(gd_out).parent_path().string());
            const DatasetSummary summary =
                generate_dataset(space, gd_n, gd_seed, gd_oracle, gd_out, gd_workers);
            sink.manifest.outputs[gd_out] = file_hash_hex(gd_out);
            sink.finish(json{{"n", gd_n},
                             {"seed", gd_seed},
                             {"workers", gd_workers},
                             {"oracle", oracle_config_json(gd_oracle)}});
            std::printf("gen-data: wrote %d records (%d failed) to %s\n", summary.written,
                        summary.failed, summary.path.c_str());
            return 0;
        }

        if (tr->parsed()) {
            ArtifactSink sink("train", argv_copy, tr_out);
            sink.note_input(tr_data);
            tr_cfg.head = tr_head == "raw" ? HeadKind::raw : HeadKind::czp;
            tr_cfg.loss = tr_loss == "shrinkage" ? LossKind::shrinkage : LossKind::mse;
            const std::vector<DatasetRecord> dataset = load_dataset(tr_data);
            const TrainOutput out = train(dataset, tr_cfg, tr_opt, space);
            {
                std::ostringstream buf;
                const std::string cp = (fs::path(tr_out) / "checkpoint.bin").string();
                save_params(cp, out.params);
                sink.manifest.outputs[cp] = file_hash_hex(cp);
            }
            sink.emit("report.json", train_report_to_json(out.report, tr_cfg, tr_opt));
            sink.emit("curves.csv", loss_curves_to_csv(out.report));
            json config = {{"data", tr_data},
                           {"surrogate", surrogate_config_json(tr_cfg)},
                           {"epochs", tr_opt.epochs},
                           {"batch", tr_opt.batch_size},
                           {"lr", tr_opt.learning_rate},
                           {"init_seed", tr_opt.init_seed},
                           {"split_seed", tr_opt.split.seed}};
            sink.finish(config);
            std::printf("train: test loss %.5e (baseline %.5e), best epoch %d, %.1fs\n",
                        out.report.final_test_loss, out.report.baseline_test_loss,
                        out.report.best_epoch, out.report.wall_seconds);
            return 0;
        }

        if (ev->parsed()) {
            ArtifactSink sink("eval", argv_copy, ev_out);
            sink.note_input(ev_data);
            sink.note_input(ev_params);
            ev_cfg.head = ev_head == "raw" ? HeadKind::raw : HeadKind::czp;
            const std::vector<DatasetRecord> dataset = load_dataset(ev_data);
            const SurrogateParams params = load_params(ev_params, ev_cfg);
            std::vector<DatasetRecord> slice = dataset;
            if (ev_slice == "test") {
                // re-derive the training split deterministically
                const int n = static_cast<int>(dataset.size());
                std::vector<int> order(static_cast<size_t>(n));
                for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
                Rng rng(mix_seed(ev_split_seed, 0x5b117));
                for (int i = n - 1; i > 0; --i)
                    std::swap(order[static_cast<size_t>(i)],
                              order[static_cast<size_t>(rng.uniform_int(i + 1))]);
                const int n_test = std::max(1, static_cast<int>(std::lround(0.10 * n)));
                slice.clear();
                for (int i = n - n_test; i < n; ++i)
                    slice.push_back(dataset[static_cast<size_t>(order[static_cast<size_t>(i)])]);
            }
            const EvalResult r = evaluate(params, ev_cfg, make_samples(slice, ev_cfg, space));
            json mj = {{"slice", ev_slice}, {"count", slice.size()}, {"mean_loss", r.mean_loss}};
            sink.emit("metrics.json", mj.dump(2) + "\n");
            sink.finish(json{{"data", ev_data},
                             {"params", ev_params},
                             {"slice", ev_slice},
                             {"split_seed", ev_split_seed},
                             {"surrogate", surrogate_config_json(ev_cfg)}});
            std::printf("eval: mean loss %.5e over %zu samples\n", r.mean_loss, slice.size());
            return 0;
        }

        if (se->parsed()) {
            ArtifactSink sink("search", argv_copy, se_out);
            sink.note_input(se_params);
            se_cfg.head = se_head == "raw" ? HeadKind::raw : HeadKind::czp;
            se_scfg.method = se_method == "random" ? SearchMethod::random : SearchMethod::cem;
            const SurrogateParams params = load_params(se_params, se_cfg);
            const SearchResult result =
                search(surrogate_objective(params, se_cfg, space), space, se_scfg);
            sink.emit("episodes.csv", episodes_to_csv(result.episodes));
            sink.emit("topk.json", scored_designs_to_json(result.top));
            sink.finish(json{{"params", se_params},
                             {"method", se_method},
                             {"episodes", se_scfg.episodes},
                             {"population", se_scfg.population},
                             {"elite", se_scfg.elite_frac},
                             {"seed", se_scfg.seed},
                             {"top_k", se_scfg.top_k},
                             {"surrogate", surrogate_config_json(se_cfg)}});
            std::printf("search: best surrogate reward %.4f over %zu episodes\n",
                        result.top.empty() ? 0.0 : result.top[0].reward, result.episodes.size());
            return 0;
        }

        if (vd->parsed()) {
            ArtifactSink sink("verify-designs", argv_copy, vd_out);
            sink.note_input(vd_designs);
            const json j = json::parse(read_file(vd_designs));
            std::vector<DesignVector> designs;
            if (j.contains("designs")) {
                for (const auto& e : j.at("designs")) {
                    DesignVector d;
                    for (const auto& l : e.at("locations"))
                        d.locations.emplace_back(l.at(0).get<double>(), l.at(1).get<double>());
                    designs.push_back(std::move(d));
                }
            } else {
                designs.push_back(design_from_json(read_file(vd_designs)));
            }
            const std::vector<VerifyRow> rows = verify(designs, space, vd_oracle, {}, vd_workers);
            sink.emit("verification.csv", verify_table_to_csv(rows));
            int successes = 0;
            for (const VerifyRow& r : rows) successes += r.success ? 1 : 0;
            sink.finish(json{{"designs", vd_designs},
                             {"workers", vd_workers},
                             {"oracle", oracle_config_json(vd_oracle)}});
            std::printf("verify-designs: %d/%zu designs meet both band targets\n", successes,
                        rows.size());
            return 0;
        }

        if (rd->parsed()) {
            ArtifactSink sink("render", argv_copy, rd_out);
            sink.note_input(rd_design);
            const DesignVector d = design_from_json(read_file(rd_design));
            const AntennaImage img = rasterize(space, d, rd_res);
            sink.emit("x_boundary.pgm", channel_to_pgm(img.x_boundary));
            sink.emit("y_boundary.pgm", channel_to_pgm(img.y_boundary));
            sink.emit("interior.pgm", channel_to_pgm(img.interior));
            json config = {{"design", rd_design}, {"res", rd_res}};
            if (rd_oracle) {
                const OracleOutput out = simulate_full(space, d, rd_oracle_cfg);
                sink.emit("response.csv", response_to_csv(out.response));
                sink.emit("s11.s1p", spectrum_to_s1p(out.s11, rd_oracle_cfg.z0));
                sink.emit("response.svg",
                          svg_line_plot("oracle response, dB", out.response.grid.values,
                                        {{"20 log10 |S11|", to_db(out.response.log_mag)}}));
                config["oracle"] = oracle_config_json(rd_oracle_cfg);
            }
            if (!rd_params.empty()) {
                sink.note_input(rd_params);
                rd_cfg.head = rd_head == "raw" ? HeadKind::raw : HeadKind::czp;
                const SurrogateParams params = load_params(rd_params, rd_cfg);
                const Tokens tokens = featurize(params, rd_cfg, img);
                const int hp = img.height / rd_cfg.pool, wp = img.width / rd_cfg.pool;
                for (int t = 0; t < rd_cfg.tokens; ++t) {
                    Eigen::MatrixXd map(hp, wp);
                    for (int r = 0; r < hp; ++r)
                        for (int c = 0; c < wp; ++c) map(r, c) = tokens.attention(r * wp + c, t);
                    map /= std::max(map.maxCoeff(), 1e-300);
                    char name[48];
                    std::snprintf(name, sizeof name, "attention_%02d.pgm", t);
                    sink.emit(name, channel_to_pgm(map));
                }
                config["params"] = rd_params;
                config["surrogate"] = surrogate_config_json(rd_cfg);
            }
            sink.finish(config);
            std::printf("render: artifacts in %s\n", rd_out.c_str());
            return 0;
        }
    } catch (const Error& e) {
        json err = {{"error", {{"code", errc_name(e.code())}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        json err = {{"error", {{"code", "internal"}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}

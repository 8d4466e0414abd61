#include "czp/surrogate.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace czp {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Layout

ParamLayout build_layout(const SurrogateConfig& cfg) {
    require(cfg.feat_out >= 1 && cfg.tokens >= 1, Errc::invalid_argument,
            "surrogate: feat_out and tokens must be >= 1");
    require(cfg.head != HeadKind::czp || cfg.czp_degree >= 1, Errc::invalid_argument,
            "surrogate: czp head needs degree >= 1");
    ParamLayout layout;
    int offset = 0;
    auto add = [&](const std::string& name, int rows, int cols) {
        layout.tensors.push_back({name, rows, cols, offset});
        offset += rows * cols;
    };

    int in = cfg.input_channels();
    int li = 0;
    for (int width : cfg.feat_hidden) {
        add("feat." + std::to_string(li) + ".w", in, width);
        add("feat." + std::to_string(li) + ".b", 1, width);
        in = width;
        ++li;
    }
    add("feat." + std::to_string(li) + ".w", in, cfg.feat_out);
    add("feat." + std::to_string(li) + ".b", 1, cfg.feat_out);

    add("tok.w", cfg.feat_out, cfg.tokens);

    int width = cfg.tokens * cfg.feat_out;
    li = 0;
    for (int w : cfg.trunk) {
        add("trunk." + std::to_string(li) + ".w", width, w);
        add("trunk." + std::to_string(li) + ".b", 1, w);
        width = w;
        ++li;
    }

    if (cfg.head == HeadKind::raw) {
        add("head.raw.w", width, canonical_antenna_grid().count());
        add("head.raw.b", 1, canonical_antenna_grid().count());
    } else {
        const int k = cfg.czp_degree;
        add("head.c0.w", width, 1);
        add("head.c0.b", 1, 1);
        add("head.z.w", width, 2 * k);
        add("head.z.b", 1, 2 * k);
        add("head.p.w", width, 2 * k);
        add("head.p.b", 1, 2 * k);
    }

    layout.total = offset;
    std::string sig;
    for (const TensorSpec& t : layout.tensors)
        sig += t.name + ":" + std::to_string(t.rows) + "x" + std::to_string(t.cols) + ";";
    layout.hash = fnv1a64(sig);
    return layout;
}

SurrogateParams init_params(const SurrogateConfig& cfg, std::uint64_t seed) {
    SurrogateParams params;
    params.layout = build_layout(cfg);
    params.flat.setZero(params.layout.total);
    Rng rng(mix_seed(seed, 0xf017));
    const FrequencyGrid& grid = canonical_antenna_grid();
    const double lo = grid.values[0], hi = grid.values[grid.count() - 1];
    const double span = hi - lo;

    for (const TensorSpec& t : params.layout.tensors) {
        double* ptr = params.flat.data() + t.offset;
        if (t.name.starts_with("head.") && t.name.ends_with(".w")) {
            // zero head weights: the biases fit the mean response first, so
            // early descent never pays to erase upstream input-dependence
            continue;
        } else if (t.name.ends_with(".w")) {
            double scale = std::sqrt(1.0 / t.rows);
            if (t.name.starts_with("feat.")) scale *= 2.0;
            if (t.name == "tok.w") scale *= 4.0;  // spread the initial attention logits
            for (int i = 0; i < t.size(); ++i) ptr[i] = scale * rng.normal();
        } else if (t.name == "head.z.b" || t.name == "head.p.b") {
            const int k = t.cols / 2;
            for (int i = 0; i < k; ++i) {
                const double re = lo + span * (i + 0.5) / k;
                if (t.name == "head.p.b") {
                    ptr[i] = re;
                    ptr[k + i] = softplus_inv(0.5 - cfg.eps_pole);
                } else {
                    ptr[i] = re + 0.12;
                    ptr[k + i] = 0.35;
                }
            }
        } else if (t.name == "head.c0.b") {
            ptr[0] = -1.0;
        }
        // remaining biases stay zero
    }
    return params;
}

// ---------------------------------------------------------------------------
// Inputs

Eigen::MatrixXd build_input(const AntennaImage& image) {
    const int h = image.height, w = image.width;
    Eigen::MatrixXd channels(5, h * w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int i = r * w + c;
            channels(0, i) = image.x_boundary(r, c);
            channels(1, i) = image.y_boundary(r, c);
            channels(2, i) = image.interior(r, c);
            channels(3, i) = w > 1 ? static_cast<double>(c) / (w - 1) : 0.0;
            channels(4, i) = h > 1 ? static_cast<double>(r) / (h - 1) : 0.0;
        }
    }
    return channels;
}

Eigen::MatrixXd pool_input(const Eigen::MatrixXd& channels, int h, int w, int pool) {
    require(channels.rows() == 5 && channels.cols() == h * w, Errc::invalid_argument,
            "pool_input: channel stack shape mismatch");
    require(pool >= 1 && h % pool == 0 && w % pool == 0, Errc::invalid_argument,
            "pool_input: pool size must divide image dimensions");
    const int hp = h / pool, wp = w / pool;
    Eigen::MatrixXd out(hp * wp, 5);
    const double inv = 1.0 / (pool * pool);
    for (int rp = 0; rp < hp; ++rp) {
        for (int cp = 0; cp < wp; ++cp) {
            for (int ch = 0; ch < 5; ++ch) {
                double acc = 0.0;
                for (int r = rp * pool; r < (rp + 1) * pool; ++r)
                    for (int c = cp * pool; c < (cp + 1) * pool; ++c) acc += channels(ch, r * w + c);
                out(rp * wp + cp, ch) = acc * inv;
            }
        }
    }
    return out;
}

Eigen::MatrixXd pooled_input_for(const DesignSpace& space, const DesignVector& design,
                                 const SurrogateConfig& cfg) {
    const AntennaImage img = rasterize(space, design, cfg.raster_res);
    return pool_input(build_input(img), img.height, img.width, cfg.pool);
}

// ---------------------------------------------------------------------------
// Graph

namespace {

struct Graph {
    Var response = -1;
    Var attention = -1;
    Var tokens = -1;
    Var head_c0 = -1, head_z = -1, head_p = -1;
    std::vector<std::pair<TensorSpec, Var>> param_vars;
};

Graph build_graph(Tape& tape, const SurrogateParams& params, const SurrogateConfig& cfg,
                  const Eigen::MatrixXd& pooled_input) {
    require(params.layout.hash == build_layout(cfg).hash, Errc::invalid_argument,
            "surrogate: parameter layout does not match config");
    require(pooled_input.cols() == cfg.input_channels(), Errc::invalid_argument,
            "surrogate: pooled input must have 5 channels");

    Graph g;
    auto param = [&](const char* name) -> Var {
        for (const TensorSpec& t : params.layout.tensors) {
            if (t.name == name) {
                Eigen::Map<const Eigen::MatrixXd> m(params.flat.data() + t.offset, t.rows, t.cols);
                Var v = tape.leaf(m, true);
                g.param_vars.emplace_back(t, v);
                return v;
            }
        }
        fail(Errc::invalid_argument, std::string("surrogate: unknown tensor ") + name);
    };

    Var x = tape.leaf(pooled_input, false);
    int li = 0;
    for (size_t i = 0; i <= cfg.feat_hidden.size(); ++i, ++li) {
        const std::string base = "feat." + std::to_string(li);
        Var w = param((base + ".w").c_str());
        Var b = param((base + ".b").c_str());
        x = tape.swish(tape.add_rowvec(tape.matmul(x, w), b));
    }

    Var a = tape.softmax_cols(tape.matmul(x, param("tok.w")));
    g.attention = a;
    Var t = tape.matmul_tn(a, x);
    g.tokens = t;
    Var v = tape.flatten_row(t);
    for (size_t i = 0; i < cfg.trunk.size(); ++i) {
        const std::string base = "trunk." + std::to_string(i);
        Var w = param((base + ".w").c_str());
        Var b = param((base + ".b").c_str());
        v = tape.swish(tape.add_rowvec(tape.matmul(v, w), b));
    }

    if (cfg.head == HeadKind::raw) {
        g.response = tape.add_rowvec(tape.matmul(v, param("head.raw.w")), param("head.raw.b"));
    } else {
        g.head_c0 = tape.add_rowvec(tape.matmul(v, param("head.c0.w")), param("head.c0.b"));
        g.head_z = tape.add_rowvec(tape.matmul(v, param("head.z.w")), param("head.z.b"));
        g.head_p = tape.add_rowvec(tape.matmul(v, param("head.p.w")), param("head.p.b"));
        g.response = tape.czp_response(g.head_c0, g.head_z, g.head_p,
                                       canonical_antenna_grid().values, cfg.eps_pole);
    }
    return g;
}

}  // namespace

Tokens featurize(const SurrogateParams& params, const SurrogateConfig& cfg,
                 const Eigen::MatrixXd& pooled_input) {
    Tape tape;
    Graph g = build_graph(tape, params, cfg, pooled_input);
    return {tape.value(g.tokens), tape.value(g.attention)};
}

Tokens featurize(const SurrogateParams& params, const SurrogateConfig& cfg,
                 const AntennaImage& image) {
    return featurize(params, cfg,
                     pool_input(build_input(image), image.height, image.width, cfg.pool));
}

FrequencyResponse forward(const SurrogateParams& params, const SurrogateConfig& cfg,
                          const Eigen::MatrixXd& pooled_input) {
    Tape tape;
    Graph g = build_graph(tape, params, cfg, pooled_input);
    FrequencyResponse resp;
    resp.grid = canonical_antenna_grid();
    resp.log_mag = tape.value(g.response).row(0).transpose();
    return resp;
}

CZPModel forward_czp_model(const SurrogateParams& params, const SurrogateConfig& cfg,
                           const Eigen::MatrixXd& pooled_input) {
    require(cfg.head == HeadKind::czp, Errc::invalid_argument,
            "forward_czp_model: raw head emits no model");
    Tape tape;
    Graph g = build_graph(tape, params, cfg, pooled_input);
    const Eigen::MatrixXd& z = tape.value(g.head_z);
    const Eigen::MatrixXd& p = tape.value(g.head_p);
    const int k = cfg.czp_degree;
    CZPModel model;
    model.log_c0 = tape.value(g.head_c0)(0, 0);
    model.eps_pole = cfg.eps_pole;
    model.unit = FrequencyUnit::gigahertz;
    for (int i = 0; i < k; ++i) {
        model.zeros.emplace_back(z(0, i), z(0, k + i));
        model.poles.emplace_back(p(0, i), cfg.eps_pole + softplus(p(0, k + i)));
    }
    return model;
}

void calibrate_input_normalization(SurrogateParams& params, const SurrogateConfig& cfg,
                                   const std::vector<Sample>& probe) {
    if (cfg.trunk.empty() || probe.empty()) return;
    const int lc = cfg.tokens * cfg.feat_out;
    const int n = static_cast<int>(probe.size());
    Eigen::MatrixXd flat_tokens(n, lc);
    for (int i = 0; i < n; ++i) {
        const Tokens t = featurize(params, cfg, probe[static_cast<size_t>(i)].pooled_input);
        int k = 0;
        for (int r = 0; r < t.tokens.rows(); ++r)
            for (int c = 0; c < t.tokens.cols(); ++c) flat_tokens(i, k++) = t.tokens(r, c);
    }
    const Eigen::RowVectorXd mu = flat_tokens.colwise().mean();
    const Eigen::RowVectorXd sd =
        ((flat_tokens.rowwise() - mu).array().square().colwise().mean()).sqrt();

    // fold (t - mu)/sd into the first trunk layer: token variation across the
    // dataset is orders of magnitude smaller than the token values, and the
    // trunk cannot train on micro-variations riding a large constant
    for (const TensorSpec& t : params.layout.tensors) {
        if (t.name != "trunk.0.w") continue;
        Eigen::Map<Eigen::MatrixXd> w(params.flat.data() + t.offset, t.rows, t.cols);
        for (int r = 0; r < t.rows; ++r) w.row(r) /= std::max(sd(r), 1e-8);
        for (const TensorSpec& tb : params.layout.tensors) {
            if (tb.name != "trunk.0.b") continue;
            Eigen::Map<Eigen::RowVectorXd> b(params.flat.data() + tb.offset, tb.cols);
            b = -mu * w;
        }
    }
}

// ---------------------------------------------------------------------------
// Loss and gradient

namespace {

double sample_loss_and_grad(const SurrogateParams& params, const SurrogateConfig& cfg,
                            const Sample& sample, double weight, Eigen::VectorXd* grad) {
    Tape tape;
    Graph g = build_graph(tape, params, cfg, sample.pooled_input);
    Var loss = cfg.loss == LossKind::mse
                   ? tape.mse_against(g.response, sample.target)
                   : tape.shrinkage_against(g.response, sample.target, cfg.shrink_a, cfg.shrink_c);
    const double value = tape.value(loss)(0, 0);
    if (grad) {
        tape.backward(loss);
        for (const auto& [spec, var] : g.param_vars) {
            const Eigen::MatrixXd& gm = tape.grad(var);
            Eigen::Map<Eigen::MatrixXd>(grad->data() + spec.offset, spec.rows, spec.cols) +=
                weight * gm;
        }
    }
    return value;
}

}  // namespace

double loss_and_grad(const SurrogateParams& params, const SurrogateConfig& cfg,
                     const std::vector<Sample>& batch, Eigen::VectorXd& grad) {
    require(!batch.empty(), Errc::invalid_argument, "loss_and_grad: empty batch");
    grad.setZero(params.layout.total);
    const double w = 1.0 / batch.size();
    double total = 0.0;
    for (size_t i = 0; i < batch.size(); ++i) {
        const double li = sample_loss_and_grad(params, cfg, batch[i], w, &grad);
        if (!std::isfinite(li)) {
            fail(Errc::numeric,
                 "loss_and_grad: non-finite loss at batch index " + std::to_string(i));
        }
        total += li * w;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Datasets and evaluation

std::vector<Sample> make_samples(const std::vector<DatasetRecord>& records,
                                 const SurrogateConfig& cfg, const DesignSpace& space) {
    std::vector<Sample> samples;
    samples.reserve(records.size());
    for (const DatasetRecord& rec : records) {
        require(same_grid(rec.response.grid, canonical_antenna_grid()), Errc::invalid_argument,
                "make_samples: record grid must be the canonical grid");
        samples.push_back({pooled_input_for(space, rec.design, cfg), rec.response.log_mag});
    }
    return samples;
}

EvalResult evaluate(const SurrogateParams& params, const SurrogateConfig& cfg,
                    const std::vector<Sample>& samples) {
    require(!samples.empty(), Errc::invalid_argument, "evaluate: empty slice");
    EvalResult out;
    out.per_sample.reserve(samples.size());
    double acc = 0.0;
    for (const Sample& s : samples) {
        const double l = sample_loss_and_grad(params, cfg, s, 0.0, nullptr);
        out.per_sample.push_back(l);
        acc += l;
    }
    out.mean_loss = acc / samples.size();
    return out;
}

// ---------------------------------------------------------------------------
// Training

TrainOutput train(const std::vector<DatasetRecord>& dataset, const SurrogateConfig& cfg,
                  const TrainOptions& options, const DesignSpace& space) {
    require(static_cast<int>(dataset.size()) >= 100, Errc::invalid_argument,
            "train: dataset must have at least 100 records");
    const auto t0 = std::chrono::steady_clock::now();
    const int n = static_cast<int>(dataset.size());
    std::vector<Sample> samples = make_samples(dataset, cfg, space);

    // deterministic shuffle, then train / val / test contiguous slices
    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    Rng split_rng(mix_seed(options.split.seed, 0x5b117));
    for (int i = n - 1; i > 0; --i)
        std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(split_rng.uniform_int(i + 1))]);
    const int n_test = std::max(1, static_cast<int>(std::lround(options.split.test * n)));
    const int n_val = std::max(1, static_cast<int>(std::lround(options.split.val * n)));
    const int n_train = n - n_test - n_val;
    require(n_train >= 1, Errc::invalid_argument, "train: split leaves no training data");
    std::vector<int> train_idx(order.begin(), order.begin() + n_train);
    std::vector<int> val_idx(order.begin() + n_train, order.begin() + n_train + n_val);
    std::vector<int> test_idx(order.begin() + n_train + n_val, order.end());

    auto slice = [&](const std::vector<int>& idx) {
        std::vector<Sample> out;
        out.reserve(idx.size());
        for (int i : idx) out.push_back(samples[static_cast<size_t>(i)]);
        return out;
    };
    const std::vector<Sample> val_samples = slice(val_idx);
    const std::vector<Sample> test_samples = slice(test_idx);

    SurrogateParams params = init_params(cfg, options.init_seed);
    {
        std::vector<Sample> probe;
        const int probe_n = std::min(n_train, 256);
        probe.reserve(static_cast<size_t>(probe_n));
        for (int i = 0; i < probe_n; ++i)
            probe.push_back(samples[static_cast<size_t>(train_idx[static_cast<size_t>(i)])]);
        calibrate_input_normalization(params, cfg, probe);
    }
    SurrogateParams best = params;
    Eigen::VectorXd velocity = Eigen::VectorXd::Zero(params.layout.total);
    Eigen::VectorXd grad(params.layout.total);

    TrainReport report;
    report.train_count = n_train;
    report.val_count = n_val;
    report.test_count = n_test;
    report.best_val_loss = std::numeric_limits<double>::infinity();
    double lr = options.learning_rate;
    int plateau = 0;

    std::vector<int> epoch_order = train_idx;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(options.split.seed, 0xe90c + static_cast<std::uint64_t>(epoch)));
        for (int i = n_train - 1; i > 0; --i)
            std::swap(epoch_order[static_cast<size_t>(i)],
                      epoch_order[static_cast<size_t>(shuffle_rng.uniform_int(i + 1))]);

        double epoch_loss = 0.0;
        for (int start = 0; start < n_train; start += options.batch_size) {
            const int stop = std::min(start + options.batch_size, n_train);
            std::vector<Sample> batch;
            batch.reserve(static_cast<size_t>(stop - start));
            for (int i = start; i < stop; ++i)
                batch.push_back(samples[static_cast<size_t>(epoch_order[static_cast<size_t>(i)])]);
            const double loss = loss_and_grad(params, cfg, batch, grad);
            epoch_loss += loss * (stop - start);
            const double gnorm = grad.norm();
            if (gnorm > options.grad_clip) grad *= options.grad_clip / gnorm;
            velocity = options.momentum * velocity - lr * grad;
            params.flat += velocity;
        }
        report.train_loss.push_back(epoch_loss / n_train);

        const double val = evaluate(params, cfg, val_samples).mean_loss;
        report.val_loss.push_back(val);
        if (val < report.best_val_loss) {
            report.best_val_loss = val;
            report.best_epoch = epoch;
            best = params;
            plateau = 0;
        } else if (++plateau >= options.plateau_epochs) {
            lr *= options.lr_factor;
            plateau = 0;
        }
    }

    report.final_test_loss = evaluate(best, cfg, test_samples).mean_loss;

    // predict-the-training-mean baseline on the same test slice
    Eigen::VectorXd mean_target = Eigen::VectorXd::Zero(canonical_antenna_grid().count());
    for (int i : train_idx) mean_target += samples[static_cast<size_t>(i)].target;
    mean_target /= n_train;
    FrequencyResponse mean_resp{canonical_antenna_grid(), mean_target};
    double baseline = 0.0;
    for (const Sample& s : test_samples) {
        FrequencyResponse target{canonical_antenna_grid(), s.target};
        baseline += cfg.loss == LossKind::mse
                        ? mse_loss(mean_resp, target)
                        : shrinkage_loss(mean_resp, target, cfg.shrink_a, cfg.shrink_c);
    }
    report.baseline_test_loss = baseline / test_samples.size();
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    return {std::move(best), std::move(report), std::move(test_idx)};
}

// ---------------------------------------------------------------------------
// Serialization

void save_params(const std::string& path, const SurrogateParams& params) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), Errc::io, "save_params: cannot open " + path);
    const char magic[8] = {'C', 'Z', 'P', 'P', 'A', 'R', 'M', '1'};
    out.write(magic, 8);
    const std::uint64_t hash = params.layout.hash;
    const std::uint64_t count = static_cast<std::uint64_t>(params.flat.size());
    out.write(reinterpret_cast<const char*>(&hash), 8);
    out.write(reinterpret_cast<const char*>(&count), 8);
    out.write(reinterpret_cast<const char*>(params.flat.data()),
              static_cast<std::streamsize>(count * sizeof(double)));
    out.close();
    require(out.good(), Errc::io, "save_params: write failed for " + path);
}

SurrogateParams load_params(const std::string& path, const SurrogateConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Errc::io, "load_params: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    require(in.good() && std::memcmp(magic, "CZPPARM1", 8) == 0, Errc::io,
            "load_params: bad magic in " + path);
    std::uint64_t hash = 0, count = 0;
    in.read(reinterpret_cast<char*>(&hash), 8);
    in.read(reinterpret_cast<char*>(&count), 8);
    SurrogateParams params;
    params.layout = build_layout(cfg);
    require(hash == params.layout.hash, Errc::invalid_argument,
            "load_params: checkpoint layout does not match config");
    require(count == static_cast<std::uint64_t>(params.layout.total), Errc::io,
            "load_params: parameter count mismatch");
    params.flat.resize(static_cast<int>(count));
    in.read(reinterpret_cast<char*>(params.flat.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    require(in.good(), Errc::io, "load_params: truncated file " + path);
    return params;
}

std::string train_report_to_json(const TrainReport& report, const SurrogateConfig& cfg,
                                 const TrainOptions& options) {
    json j;
    j["head"] = cfg.head == HeadKind::raw ? "raw" : "czp";
    j["czp_degree"] = cfg.czp_degree;
    j["loss"] = cfg.loss == LossKind::mse ? "mse" : "shrinkage";
    j["epochs"] = options.epochs;
    j["batch_size"] = options.batch_size;
    j["learning_rate"] = options.learning_rate;
    j["split"] = {{"train", options.split.train},
                  {"val", options.split.val},
                  {"test", options.split.test},
                  {"seed", options.split.seed}};
    j["init_seed"] = options.init_seed;
    j["counts"] = {{"train", report.train_count},
                   {"val", report.val_count},
                   {"test", report.test_count}};
    j["best_epoch"] = report.best_epoch;
    j["best_val_loss"] = report.best_val_loss;
    j["final_test_loss"] = report.final_test_loss;
    j["baseline_test_loss"] = report.baseline_test_loss;
    j["train_loss"] = report.train_loss;
    j["val_loss"] = report.val_loss;
    return j.dump(2) + "\n";
}

std::string loss_curves_to_csv(const TrainReport& report) {
    std::string out = "epoch,train_loss,val_loss\n";
    char line[96];
    for (size_t e = 0; e < report.train_loss.size(); ++e) {
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", e, report.train_loss[e],
                      report.val_loss[e]);
        out += line;
    }
    return out;
}

}  // namespace czp

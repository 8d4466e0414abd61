#include "czp/search.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <sstream>
#include <thread>

namespace czp {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Environment

PlacementState PlacementEnv::reset() {
    state_ = PlacementState{};
    state_.next_patch = 0;
    return state_;
}

PlacementEnv::StepResult PlacementEnv::step(double x, double y) {
    if (terminal())
        fail(Errc::invalid_state, "PlacementEnv: step after all patches are placed");
    const int m = state_.next_patch;
    const PatchSpec& p = space_.patches[static_cast<size_t>(m)];
    const double cx = std::clamp(x, p.lx_min, p.lx_max);
    const double cy = std::clamp(y, p.ly_min, p.ly_max);

    StepResult out;
    out.clamped = (cx != x) || (cy != y);
    state_.placed.push_back({m, cx, cy});
    state_.next_patch = m + 1;
    out.state = state_;
    if (terminal()) {
        DesignVector d;
        for (const PlacedPatch& pp : state_.placed) d.locations.emplace_back(pp.x, pp.y);
        out.terminal = std::move(d);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reward

namespace {

double band_min_margin(const FrequencyGrid& grid, const Eigen::VectorXd& response_db,
                       double f_lo, double f_hi, double target) {
    double margin = std::numeric_limits<double>::infinity();
    int hits = 0;
    for (int i = 0; i < grid.count(); ++i) {
        const double f = grid.values[i];
        if (f >= f_lo - 1e-9 && f <= f_hi + 1e-9) {
            margin = std::min(margin, target - response_db[i]);
            ++hits;
        }
    }
    if (hits == 0) {
        std::ostringstream msg;
        msg << "reward: grid has no points in [" << f_lo << ", " << f_hi << "] GHz";
        fail(Errc::invalid_argument, msg.str());
    }
    return margin;
}

}  // namespace

RewardBreakdown reward(const FrequencyGrid& grid, const Eigen::VectorXd& response_db,
                       const RewardTargets& targets) {
    require(grid.count() == response_db.size(), Errc::invalid_argument,
            "reward: grid/response size mismatch");
    RewardBreakdown out;
    out.r_low = band_min_margin(grid, response_db, 2.4, 2.5, targets.low_db);
    out.r_high = band_min_margin(grid, response_db, 5.1, 7.0, targets.high_db);
    out.r_high_clamped = std::min(1.0, out.r_high);
    out.total = out.r_low + out.r_high_clamped;
    return out;
}

RewardBreakdown reward_from_response(const FrequencyResponse& response,
                                     const RewardTargets& targets) {
    return reward(response.grid, to_db(response.log_mag), targets);
}

// ---------------------------------------------------------------------------
// Search

namespace {

struct TopTracker {
    int capacity;
    std::vector<ScoredDesign> items;  // sorted by reward desc

    void offer(const DesignVector& d, double r) {
        for (const ScoredDesign& s : items) {
            if (s.design.locations.size() == d.locations.size()) {
                bool equal = true;
                for (size_t i = 0; i < d.locations.size(); ++i)
                    if (s.design.locations[i] != d.locations[i]) {
                        equal = false;
                        break;
                    }
                if (equal) return;  // already tracked
            }
        }
        items.push_back({d, r});
        std::stable_sort(items.begin(), items.end(),
                         [](const ScoredDesign& a, const ScoredDesign& b) {
                             return a.reward > b.reward;
                         });
        if (static_cast<int>(items.size()) > capacity) items.resize(static_cast<size_t>(capacity));
    }
};

DesignVector rollout(PlacementEnv& env, const Eigen::VectorXd& flat_action, int* clamped) {
    env.reset();
    DesignVector design;
    int clamp_count = 0;
    for (int m = 0; m * 2 + 1 < flat_action.size(); ++m) {
        auto step = env.step(flat_action[2 * m], flat_action[2 * m + 1]);
        clamp_count += step.clamped ? 1 : 0;
        if (step.terminal) design = *step.terminal;
    }
    if (clamped) *clamped = clamp_count;
    return design;
}

}  // namespace

SearchResult search(const Objective& objective, const DesignSpace& space,
                    const SearchConfig& cfg) {
    require(cfg.population >= 2, Errc::invalid_argument, "search: population must be >= 2");
    require(cfg.episodes >= cfg.population, Errc::invalid_argument,
            "search: episode budget must cover at least one population");
    require(cfg.top_k >= 1, Errc::invalid_argument, "search: top_k must be >= 1");

    const int dims = 2 * space.patch_count();
    Eigen::VectorXd mean(dims), sigma(dims), range_lo(dims), range_hi(dims);
    for (int m = 0; m < space.patch_count(); ++m) {
        const PatchSpec& p = space.patches[static_cast<size_t>(m)];
        range_lo[2 * m] = p.lx_min;
        range_hi[2 * m] = p.lx_max;
        range_lo[2 * m + 1] = p.ly_min;
        range_hi[2 * m + 1] = p.ly_max;
    }
    mean = 0.5 * (range_lo + range_hi);
    sigma = 0.5 * (range_hi - range_lo).cwiseMax(cfg.sigma_floor);

    SearchResult result;
    TopTracker top{cfg.top_k, {}};
    PlacementEnv env(space);
    int episode = 0;

    if (cfg.method == SearchMethod::random) {
        for (; episode < cfg.episodes; ++episode) {
            const DesignVector d = sample_design(space, mix_seed(cfg.seed, static_cast<std::uint64_t>(episode)));
            const double r = objective(d);
            result.episodes.push_back({episode, r, 0});
            top.offer(d, r);
        }
        result.final_mean = mean;
    } else {
        Rng rng(mix_seed(cfg.seed, 0xce3));
        const int iters = cfg.episodes / cfg.population;
        const int elites = std::max(1, static_cast<int>(std::lround(cfg.elite_frac * cfg.population)));
        Eigen::MatrixXd pop(dims, cfg.population);
        std::vector<double> rewards(static_cast<size_t>(cfg.population));
        std::vector<DesignVector> designs(static_cast<size_t>(cfg.population));
        for (int it = 0; it < iters; ++it) {
            for (int s = 0; s < cfg.population; ++s) {
                for (int d = 0; d < dims; ++d)
                    pop(d, s) = std::clamp(mean[d] + sigma[d] * rng.normal(), range_lo[d], range_hi[d]);
                int clamped = 0;
                designs[static_cast<size_t>(s)] = rollout(env, pop.col(s), &clamped);
                rewards[static_cast<size_t>(s)] = objective(designs[static_cast<size_t>(s)]);
                result.episodes.push_back({episode++, rewards[static_cast<size_t>(s)], clamped});
                top.offer(designs[static_cast<size_t>(s)], rewards[static_cast<size_t>(s)]);
            }
            std::vector<int> idx(static_cast<size_t>(cfg.population));
            for (int s = 0; s < cfg.population; ++s) idx[static_cast<size_t>(s)] = s;
            std::stable_sort(idx.begin(), idx.end(),
                             [&](int a, int b) { return rewards[static_cast<size_t>(a)] > rewards[static_cast<size_t>(b)]; });
            Eigen::VectorXd new_mean = Eigen::VectorXd::Zero(dims);
            for (int e = 0; e < elites; ++e) {
                const DesignVector& d = designs[static_cast<size_t>(idx[static_cast<size_t>(e)])];
                for (int m = 0; m < space.patch_count(); ++m) {
                    new_mean[2 * m] += d.locations[static_cast<size_t>(m)].x();
                    new_mean[2 * m + 1] += d.locations[static_cast<size_t>(m)].y();
                }
            }
            new_mean /= elites;
            Eigen::VectorXd var = Eigen::VectorXd::Zero(dims);
            for (int e = 0; e < elites; ++e) {
                const DesignVector& d = designs[static_cast<size_t>(idx[static_cast<size_t>(e)])];
                for (int m = 0; m < space.patch_count(); ++m) {
                    const double dx = d.locations[static_cast<size_t>(m)].x() - new_mean[2 * m];
                    const double dy = d.locations[static_cast<size_t>(m)].y() - new_mean[2 * m + 1];
                    var[2 * m] += dx * dx;
                    var[2 * m + 1] += dy * dy;
                }
            }
            var /= elites;
            // keep exploring while the mean is still on the move: adding the
            // squared mean shift stops the elite variance from collapsing
            // before the distribution has settled on the optimum
            var += (new_mean - mean).cwiseAbs2();
            sigma = var.cwiseSqrt().cwiseMax(cfg.sigma_floor);
            mean = new_mean;
            ++result.iterations;
        }
        result.final_mean = mean;
    }

    result.top = top.items;
    return result;
}

Objective surrogate_objective(const SurrogateParams& params, const SurrogateConfig& cfg,
                              const DesignSpace& space, const RewardTargets& targets) {
    return [&params, cfg, &space, targets](const DesignVector& design) {
        const FrequencyResponse resp = forward(params, cfg, pooled_input_for(space, design, cfg));
        return reward_from_response(resp, targets).total;
    };
}

// ---------------------------------------------------------------------------
// Verification

std::vector<VerifyRow> verify(const std::vector<DesignVector>& designs, const DesignSpace& space,
                              const OracleConfig& oracle_cfg, const RewardTargets& targets,
                              int workers) {
    std::vector<VerifyRow> rows(designs.size());
    std::atomic<int> next{0};
    auto work = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= static_cast<int>(designs.size())) return;
            VerifyRow row;
            row.index = i;
            row.response = simulate_s11(space, designs[static_cast<size_t>(i)], oracle_cfg);
            const RewardBreakdown rb = reward_from_response(row.response, targets);
            row.r_low = rb.r_low;
            row.r_high = rb.r_high;
            row.success = rb.r_low >= 0.0 && rb.r_high >= 0.0;
            rows[static_cast<size_t>(i)] = std::move(row);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return rows;
}

std::string verify_table_to_csv(const std::vector<VerifyRow>& rows) {
    std::string out = "design,r_low_db,r_high_db,success\n";
    char line[96];
    for (const VerifyRow& r : rows) {
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%d\n", r.index, r.r_low, r.r_high,
                      r.success ? 1 : 0);
        out += line;
    }
    return out;
}

std::string episodes_to_csv(const std::vector<EpisodeRow>& rows) {
    std::string out = "episode,reward,clamped_actions\n";
    char line[80];
    for (const EpisodeRow& r : rows) {
        std::snprintf(line, sizeof line, "%d,%.17g,%d\n", r.episode, r.reward, r.clamped_actions);
        out += line;
    }
    return out;
}

std::string scored_designs_to_json(const std::vector<ScoredDesign>& designs) {
    json arr = json::array();
    for (const ScoredDesign& s : designs) {
        json locs = json::array();
        for (const auto& l : s.design.locations) locs.push_back({l.x(), l.y()});
        arr.push_back({{"locations", locs}, {"reward", s.reward}});
    }
    json j;
    j["designs"] = arr;
    return j.dump(2) + "\n";
}

}  // namespace czp

// search.hpp -- sequential patch placement, the band reward, and
// surrogate-driven black-box search with oracle verification.
//
// Reward over a dB response: with targets t (both -6 dB),
//   r_low  = min over [2.4, 2.5] GHz of (t - response)
//   r_high = min over [5.1, 7.0] GHz of (t - response)
//   total  = r_low + min(1.0, r_high)
// The clamp keeps the easier high band from dominating. Verification
// declares success when both unclamped terms are >= 0.

#pragma once

#include <functional>
#include <optional>

#include "czp/oracle.hpp"
#include "czp/surrogate.hpp"

namespace czp {

struct PlacedPatch {
    int id = 0;  // 0-based patch index; one-hot over patches in the interface
    double x = 0.0, y = 0.0;
};

struct PlacementState {
    std::vector<PlacedPatch> placed;
    int next_patch = 0;  // == patch_count() when terminal
};

class PlacementEnv {
  public:
    explicit PlacementEnv(const DesignSpace& space) : space_(space) { reset(); }

    PlacementState reset();

    struct StepResult {
        PlacementState state;
        std::optional<DesignVector> terminal;  // set after the last patch
        bool clamped = false;                  // action was pulled into range
    };

    // Out-of-range actions clamp to the range boundary. Stepping a terminal
    // episode raises Errc::invalid_state.
    StepResult step(double x, double y);

    bool terminal() const { return state_.next_patch >= space_.patch_count(); }

  private:
    DesignSpace space_;
    PlacementState state_;
};

// Reward ---------------------------------------------------------------------

struct RewardTargets {
    double low_db = -6.0;   // over [2.4, 2.5] GHz
    double high_db = -6.0;  // over [5.1, 7.0] GHz
};

struct RewardBreakdown {
    double r_low = 0.0;
    double r_high = 0.0;          // unclamped
    double r_high_clamped = 0.0;  // min(1, r_high)
    double total = 0.0;
};

// response_db on any grid containing at least one point in each band.
RewardBreakdown reward(const FrequencyGrid& grid, const Eigen::VectorXd& response_db,
                       const RewardTargets& targets = {});
RewardBreakdown reward_from_response(const FrequencyResponse& response,
                                     const RewardTargets& targets = {});

// Search ---------------------------------------------------------------------

enum class SearchMethod { cem, random };

struct SearchConfig {
    SearchMethod method = SearchMethod::cem;
    int episodes = 3200;       // total objective evaluations
    int population = 64;       // per CEM iteration
    double elite_frac = 0.125;
    std::uint64_t seed = 0;
    int top_k = 3;
    double sigma_floor = 1e-4;
};

struct ScoredDesign {
    DesignVector design;
    double reward = 0.0;
};

struct EpisodeRow {
    int episode = 0;
    double reward = 0.0;
    int clamped_actions = 0;
};

struct SearchResult {
    std::vector<ScoredDesign> top;        // distinct designs, best first
    std::vector<EpisodeRow> episodes;
    Eigen::VectorXd final_mean;           // CEM distribution mean (flat x,y per patch)
    int iterations = 0;
};

using Objective = std::function<double(const DesignVector&)>;

SearchResult search(const Objective& objective, const DesignSpace& space,
                    const SearchConfig& cfg);

// Surrogate reward objective: raster -> forward -> dB -> reward total.
Objective surrogate_objective(const SurrogateParams& params, const SurrogateConfig& cfg,
                              const DesignSpace& space, const RewardTargets& targets = {});

// Verification ----------------------------------------------------------------

struct VerifyRow {
    int index = 0;
    double r_low = 0.0;
    double r_high = 0.0;  // unclamped
    bool success = false;
    FrequencyResponse response;
};

std::vector<VerifyRow> verify(const std::vector<DesignVector>& designs, const DesignSpace& space,
                              const OracleConfig& oracle_cfg, const RewardTargets& targets = {},
                              int workers = 1);

std::string verify_table_to_csv(const std::vector<VerifyRow>& rows);
std::string episodes_to_csv(const std::vector<EpisodeRow>& rows);
std::string scored_designs_to_json(const std::vector<ScoredDesign>& designs);

}  // namespace czp

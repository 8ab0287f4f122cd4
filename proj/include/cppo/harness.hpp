#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cppo/env.hpp"
#include "cppo/nn.hpp"

namespace cppo {

/// Picks an action for one observation. Must be safe to call from several
/// threads at once; `rng` is private to the episode.
using ActionSelector = std::function<Action(const StateMatrix& observation, Rng& rng)>;

/// Argmax of the actor probabilities, or a sample from them.
ActionSelector policy_selector(const ActorCritic& policy, bool greedy = true);
ActionSelector constant_selector(Action action);

struct EvalReport {
  int n_sv = 0;
  int episodes = 0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double timeout_rate = 0.0;
  double offroad_rate = 0.0;
  double mean_return = 0.0;
  double mean_time_s = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const EvalReport&) const = default;
};

struct EvalSetup {
  const RoadNetwork* network = nullptr;
  const ConflictTable* conflicts = nullptr;
  EnvConfig env;
  int jobs = 1;
};

/// Plays `episodes` episodes with exactly `n_sv` surrounding vehicles. Episode e
/// draws its scenario from (seed, e) alone, so the result ignores `jobs`.
/// Throws std::invalid_argument if episodes < 1.
EvalReport evaluate(const EvalSetup& setup, const ActionSelector& select, int n_sv, int episodes, std::uint64_t seed);

/// Seed of the cell for `n_sv` in a sweep.
std::uint64_t sweep_cell_seed(std::uint64_t base_seed, int n_sv);

std::vector<EvalReport> sweep(const EvalSetup& setup, const ActionSelector& select, const std::vector<int>& n_sv_list,
                              int episodes, std::uint64_t base_seed);

inline constexpr const char* kReportCsvHeader = "n_sv,episodes,succ,coll,timeout,offroad,mean_return,mean_time_s,seed";

std::string report_csv(const std::vector<EvalReport>& reports);
std::vector<EvalReport> parse_report_csv(const std::string& text);
std::string report_json(const std::vector<EvalReport>& reports);
std::vector<EvalReport> parse_report_json(const std::string& text);
/// Fixed-width table, one row per N_sv, rates in percent.
std::string report_table(const std::vector<EvalReport>& reports);

/// Least-squares polynomial smoothing. Near the ends the window is truncated to
/// the available samples and the fit degree drops if too few remain.
/// Throws std::invalid_argument unless window is odd, positive and > poly_order >= 0.
std::vector<double> savitzky_golay(const std::vector<double>& series, int window, int poly_order);

/// Weights that produce the centre value of a full window.
std::vector<double> savgol_coefficients(int window, int poly_order);

}  // namespace cppo

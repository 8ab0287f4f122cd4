#include "cppo/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>
#include <json.hpp>

#include "cppo/csv.hpp"
#include "cppo/ppo.hpp"

namespace cppo {

ActionSelector policy_selector(const ActorCritic& policy, bool greedy) {
  return [&policy, greedy](const StateMatrix& obs, Rng& rng) {
    const ActorOutput out = actor_forward(policy.actor, obs.flat());
    return static_cast<Action>(greedy ? greedy_action(out.probs) : sample_action(out.probs, rng));
  };
}

ActionSelector constant_selector(Action action) {
  return [action](const StateMatrix&, Rng&) { return action; };
}

namespace {

struct EpisodeTally {
  Outcome outcome = Outcome::kRunning;
  double episode_return = 0.0;
  int length = 0;
};

EpisodeTally play(const EvalSetup& setup, const ActionSelector& select, int n_sv, std::uint64_t seed,
                  std::uint64_t episode) {
  IntersectionEnv env(*setup.network, *setup.conflicts, setup.env);
  Rng env_rng = make_rng(seed, Stream::kEval, episode);
  Rng action_rng = make_rng(seed, Stream::kPolicy, episode);
  StateMatrix obs = env.reset({n_sv, n_sv}, env_rng);
  EpisodeTally t;
  while (true) {
    const StepResult step = env.step(select(obs, action_rng));
    t.episode_return += step.reward.total;
    ++t.length;
    if (step.outcome != Outcome::kRunning) {
      t.outcome = step.outcome;
      return t;
    }
    obs = step.observation;
  }
}

}  // namespace

EvalReport evaluate(const EvalSetup& setup, const ActionSelector& select, int n_sv, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluation needs at least one episode");
  if (!setup.network || !setup.conflicts) throw std::invalid_argument("evaluation setup has no road network");
  std::vector<EpisodeTally> tallies(static_cast<std::size_t>(episodes));
  const int jobs = std::clamp(setup.jobs, 1, episodes);
  auto worker = [&](int first) {
    for (int e = first; e < episodes; e += jobs) {
      tallies[static_cast<std::size_t>(e)] = play(setup, select, n_sv, seed, static_cast<std::uint64_t>(e));
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker, j);
    for (auto& t : threads) t.join();
  }

  int counts[5] = {0, 0, 0, 0, 0};
  double ret = 0.0;
  double steps = 0.0;
  for (const EpisodeTally& t : tallies) {
    ++counts[static_cast<int>(t.outcome)];
    ret += t.episode_return;
    steps += t.length;
  }
  const double n = episodes;
  EvalReport r;
  r.n_sv = n_sv;
  r.episodes = episodes;
  r.success_rate = counts[static_cast<int>(Outcome::kSuccess)] / n;
  r.collision_rate = counts[static_cast<int>(Outcome::kCollision)] / n;
  r.offroad_rate = counts[static_cast<int>(Outcome::kOffRoad)] / n;
  r.timeout_rate = counts[static_cast<int>(Outcome::kTimeout)] / n;
  r.mean_return = ret / n;
  r.mean_time_s = steps * setup.env.dt() / n;
  r.seed = seed;
  return r;
}

std::uint64_t sweep_cell_seed(std::uint64_t base_seed, int n_sv) {
  return base_seed + static_cast<std::uint64_t>(n_sv) * 1000000ULL;
}

std::vector<EvalReport> sweep(const EvalSetup& setup, const ActionSelector& select, const std::vector<int>& n_sv_list,
                              int episodes, std::uint64_t base_seed) {
  std::vector<EvalReport> out;
  for (int n : n_sv_list) out.push_back(evaluate(setup, select, n, episodes, sweep_cell_seed(base_seed, n)));
  return out;
}

std::string report_csv(const std::vector<EvalReport>& reports) {
  std::string out = std::string(kReportCsvHeader) + "\n";
  for (const EvalReport& r : reports) {
    out += std::to_string(r.n_sv) + "," + std::to_string(r.episodes) + "," + format_number(r.success_rate) + "," +
           format_number(r.collision_rate) + "," + format_number(r.timeout_rate) + "," +
           format_number(r.offroad_rate) + "," + format_number(r.mean_return) + "," + format_number(r.mean_time_s) +
           "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

std::vector<EvalReport> parse_report_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  const auto n_sv = t.numeric("n_sv");
  const auto episodes = t.numeric("episodes");
  const auto succ = t.numeric("succ");
  const auto coll = t.numeric("coll");
  const auto timeout = t.numeric("timeout");
  const auto offroad = t.numeric("offroad");
  const auto ret = t.numeric("mean_return");
  const auto time = t.numeric("mean_time_s");
  const std::size_t seed_col = t.column("seed");
  std::vector<EvalReport> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EvalReport r;
    r.n_sv = static_cast<int>(n_sv[i]);
    r.episodes = static_cast<int>(episodes[i]);
    r.success_rate = succ[i];
    r.collision_rate = coll[i];
    r.timeout_rate = timeout[i];
    r.offroad_rate = offroad[i];
    r.mean_return = ret[i];
    r.mean_time_s = time[i];
    r.seed = std::stoull(t.rows[i][seed_col]);
    out.push_back(r);
  }
  return out;
}

std::string report_json(const std::vector<EvalReport>& reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const EvalReport& r : reports) {
    arr.push_back({{"n_sv", r.n_sv},
                   {"episodes", r.episodes},
                   {"success_rate", r.success_rate},
                   {"collision_rate", r.collision_rate},
                   {"timeout_rate", r.timeout_rate},
                   {"offroad_rate", r.offroad_rate},
                   {"mean_return", r.mean_return},
                   {"mean_time_s", r.mean_time_s},
                   {"seed", r.seed}});
  }
  return arr.dump(2) + "\n";
}

std::vector<EvalReport> parse_report_json(const std::string& text) {
  std::vector<EvalReport> out;
  for (const auto& j : nlohmann::json::parse(text)) {
    EvalReport r;
    r.n_sv = j.at("n_sv");
    r.episodes = j.at("episodes");
    r.success_rate = j.at("success_rate");
    r.collision_rate = j.at("collision_rate");
    r.timeout_rate = j.at("timeout_rate");
    r.offroad_rate = j.at("offroad_rate");
    r.mean_return = j.at("mean_return");
    r.mean_time_s = j.at("mean_time_s");
    r.seed = j.at("seed");
    out.push_back(r);
  }
  return out;
}

std::string report_table(const std::vector<EvalReport>& reports) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%5s %8s %9s %9s %9s %9s %11s %9s\n", "N_sv", "episodes", "success%", "collide%",
                "timeout%", "offroad%", "mean_return", "mean_t_s");
  out += line;
  for (const EvalReport& r : reports) {
    std::snprintf(line, sizeof line, "%5d %8d %9.1f %9.1f %9.1f %9.1f %11.3f %9.2f\n", r.n_sv, r.episodes,
                  100.0 * r.success_rate, 100.0 * r.collision_rate, 100.0 * r.timeout_rate, 100.0 * r.offroad_rate,
                  r.mean_return, r.mean_time_s);
    out += line;
  }
  return out;
}

namespace {

void check_savgol_args(int window, int poly_order) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("Savitzky-Golay window must be odd and positive");
  if (poly_order < 0 || poly_order >= window) {
    throw std::invalid_argument("Savitzky-Golay order must satisfy 0 <= order < window");
  }
}

// Least-squares fit of `y` at offsets `x` (relative to the target sample); the fitted value at 0.
double fit_at_zero(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int degree) {
  Eigen::MatrixXd a(x.size(), degree + 1);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      a(i, k) = p;
      p *= x(i);
    }
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(y);
  return c(0);
}

}  // namespace

std::vector<double> savitzky_golay(const std::vector<double>& series, int window, int poly_order) {
  check_savgol_args(window, poly_order);
  const int n = static_cast<int>(series.size());
  const int half = window / 2;
  std::vector<double> out(series.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    const int m = hi - lo + 1;
    Eigen::VectorXd x(m);
    Eigen::VectorXd y(m);
    for (int j = 0; j < m; ++j) {
      x(j) = lo + j - i;
      y(j) = series[static_cast<std::size_t>(lo + j)];
    }
    out[static_cast<std::size_t>(i)] = fit_at_zero(x, y, std::min(poly_order, m - 1));
  }
  return out;
}

std::vector<double> savgol_coefficients(int window, int poly_order) {
  check_savgol_args(window, poly_order);
  const int half = window / 2;
  Eigen::VectorXd x(window);
  for (int j = 0; j < window; ++j) x(j) = j - half;
  // The centre value is linear in the samples; unit impulses read off the weights.
  std::vector<double> coeffs(static_cast<std::size_t>(window));
  for (int j = 0; j < window; ++j) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(window);
    y(j) = 1.0;
    coeffs[static_cast<std::size_t>(j)] = fit_at_zero(x, y, poly_order);
  }
  return coeffs;
}

}  // namespace cppo

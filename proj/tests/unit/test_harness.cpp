#include <gtest/gtest.h>

#include <cmath>

#include "cppo/harness.hpp"
#include "helpers.hpp"

using namespace cppo;
using cppo::test::default_conflicts;
using cppo::test::default_network;

namespace {

EvalSetup setup(int jobs = 1) { return {&default_network(), &default_conflicts(), EnvConfig{}, jobs}; }

double rate_sum(const EvalReport& r) { return r.success_rate + r.collision_rate + r.timeout_rate + r.offroad_rate; }

// Direct least-squares solve of the local fit, evaluated at the window centre.
std::vector<double> normal_equation_weights(int window, int order) {
  const int m = window / 2;
  const int n = order + 1;
  // A^T A via plain loops, then Gauss-Jordan on [A^T A | A^T]
  std::vector<std::vector<double>> aug(n, std::vector<double>(n + window, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = -m; k <= m; ++k) aug[i][j] += std::pow(k, i + j);
    }
    for (int k = -m; k <= m; ++k) aug[i][n + k + m] = std::pow(k, i);
  }
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r) {
      if (std::abs(aug[r][c]) > std::abs(aug[piv][c])) piv = r;
    }
    std::swap(aug[c], aug[piv]);
    const double d = aug[c][c];
    for (double& v : aug[c]) v /= d;
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = aug[r][c];
      for (int k = 0; k < n + window; ++k) aug[r][k] -= f * aug[c][k];
    }
  }
  return {aug[0].begin() + n, aug[0].end()};
}

}  // namespace

TEST(Evaluate, StubPolicies) {
  const EvalReport keep = evaluate(setup(), constant_selector(Action::kKeep), 0, 50, 7);
  EXPECT_EQ(keep.success_rate, 1.0);
  EXPECT_EQ(keep.episodes, 50);
  EXPECT_GT(keep.mean_return, 10.0);
  const EvalReport stop = evaluate(setup(), constant_selector(Action::kDecelerate), 0, 20, 7);
  EXPECT_EQ(stop.timeout_rate, 1.0);
  EXPECT_DOUBLE_EQ(stop.mean_time_s, 24.0);
  EXPECT_THROW(evaluate(setup(), constant_selector(Action::kKeep), 0, 0, 7), std::invalid_argument);
}

TEST(Evaluate, RatesPartitionAndIgnoreJobs) {
  Rng rng = make_rng(50);
  const ActorCritic ac = ActorCritic::create(54, 16, 8, rng);
  for (int n : {0, 3, 6}) {
    const EvalReport a = evaluate(setup(1), policy_selector(ac, false), n, 30, 100 + n);
    const EvalReport b = evaluate(setup(3), policy_selector(ac, false), n, 30, 100 + n);
    EXPECT_EQ(a, b);
    EXPECT_NEAR(rate_sum(a), 1.0, 1e-9);
  }
}

TEST(Sweep, SevenCellsDeterministicAndPolicyUntouched) {
  Rng rng = make_rng(51);
  const ActorCritic ac = ActorCritic::create(54, 16, 8, rng);
  std::vector<double> before;
  ac.actor.for_each_parameter([&](double p) { before.push_back(p); });
  const std::vector<int> cells{0, 1, 2, 3, 4, 5, 6};
  const auto a = sweep(setup(2), policy_selector(ac), cells, 10, 12345);
  const auto b = sweep(setup(1), policy_selector(ac), cells, 10, 12345);
  ASSERT_EQ(a.size(), 7u);
  EXPECT_EQ(a, b);
  EXPECT_EQ(report_table(a), report_table(b));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].n_sv, cells[i]);
    EXPECT_EQ(a[i].seed, 12345u + 1000000u * cells[i]);
    EXPECT_EQ(a[i].seed, sweep_cell_seed(12345, cells[i]));
  }
  std::vector<double> after;
  ac.actor.for_each_parameter([&](double p) { after.push_back(p); });
  EXPECT_EQ(before, after);
}

TEST(Report, CsvAndJsonRoundTrip) {
  std::vector<EvalReport> reports{{0, 200, 0.95, 0.02, 0.03, 0.0, 12.345678901234567, 9.1, 12345},
                                  {4, 200, 1.0 / 3.0, 0.5, 1.0 / 6.0, 0.0, -3.25, 24.0, 4012345}};
  EXPECT_EQ(parse_report_csv(report_csv(reports)), reports);
  EXPECT_EQ(parse_report_json(report_json(reports)), reports);
  EXPECT_EQ(report_csv(reports).substr(0, report_csv(reports).find('\n')), kReportCsvHeader);
  EXPECT_NE(report_table(reports).find("95"), std::string::npos);
}

TEST(SavitzkyGolay, ConstantAndPolynomialReproduction) {
  const std::vector<double> flat(40, 3.5);
  for (double v : savitzky_golay(flat, 11, 2)) EXPECT_NEAR(v, 3.5, 1e-12);
  std::vector<double> q;
  for (int i = 0; i < 60; ++i) q.push_back(0.5 * i * i - 3.0 * i + 7.0);
  const auto s = savitzky_golay(q, 11, 2);
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(s[i], q[i], 1e-9 * std::max(1.0, std::abs(q[i])));
  EXPECT_EQ(savitzky_golay({}, 5, 2).size(), 0u);
}

TEST(SavitzkyGolay, CoefficientsMatchDirectSolve) {
  const auto c = savgol_coefficients(5, 2);
  const double expected[5] = {-3.0 / 35, 12.0 / 35, 17.0 / 35, 12.0 / 35, -3.0 / 35};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(c[static_cast<std::size_t>(i)], expected[i], 1e-12);
  for (auto [w, o] : {std::pair{7, 2}, {9, 3}, {11, 4}, {21, 2}}) {
    const auto got = savgol_coefficients(w, o);
    const auto ref = normal_equation_weights(w, o);
    for (int i = 0; i < w; ++i) EXPECT_NEAR(got[static_cast<std::size_t>(i)], ref[static_cast<std::size_t>(i)], 1e-10);
  }
}

TEST(SavitzkyGolay, RejectsBadWindows) {
  const std::vector<double> x(10, 1.0);
  EXPECT_THROW(savitzky_golay(x, 4, 2), std::invalid_argument);
  EXPECT_THROW(savitzky_golay(x, 3, 3), std::invalid_argument);
  EXPECT_THROW(savitzky_golay(x, -1, 0), std::invalid_argument);
}

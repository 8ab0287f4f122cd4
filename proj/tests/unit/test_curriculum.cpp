#include <gtest/gtest.h>

#include <map>

#include "cppo/csv.hpp"
#include "cppo/curriculum.hpp"
#include "helpers.hpp"

using namespace cppo;
using cppo::test::fresh_dir;
using cppo::test::slurp;
using cppo::test::tiny_run_config;

namespace {

std::vector<double> flatten(const ActorCritic& ac) {
  std::vector<double> v;
  ac.actor.for_each_parameter([&](double p) { v.push_back(p); });
  ac.critic.for_each_parameter([&](double p) { v.push_back(p); });
  return v;
}

}  // namespace

TEST(Schedule, DefaultStagesOverWholeBudget) {
  const Schedule s = make_schedule(CurriculumConfig{});
  for (std::uint64_t e = 0; e <= 8000; ++e) {
    const StageSelection sel = stage_for_episode(e, s);
    // independent restatement of the default schedule
    const int stage = e < 2000 ? 1 : e < 5000 ? 2 : 3;
    const double eps = e < 2000 ? 0.25 : e < 6000 ? 0.20 : 0.15;
    const NsvRange range = stage == 1 ? NsvRange{0, 0} : stage == 2 ? NsvRange{1, 3} : NsvRange{4, 8};
    ASSERT_EQ(sel.stage.index, stage) << e;
    ASSERT_EQ(sel.epsilon, eps) << e;
    ASSERT_EQ(sel.stage.n_sv_range.lo, range.lo);
    ASSERT_EQ(sel.stage.n_sv_range.hi, range.hi);
  }
  EXPECT_EQ(stage_for_episode(1999, s).stage.index, 1);
  EXPECT_EQ(stage_for_episode(2000, s).stage.index, 2);
  EXPECT_EQ(stage_for_episode(5999, s).epsilon, 0.20);
  EXPECT_EQ(stage_for_episode(6000, s).epsilon, 0.15);
  EXPECT_THROW(stage_for_episode(8001, s), std::out_of_range);
}

TEST(Schedule, Boundaries) {
  const Schedule s = make_schedule(CurriculumConfig{});
  EXPECT_EQ(next_boundary(0, s), 2000u);
  EXPECT_EQ(next_boundary(2000, s), 5000u);
  EXPECT_EQ(next_boundary(5500, s), 6000u);
  EXPECT_EQ(next_boundary(6000, s), 8000u);
}

TEST(Schedule, DisabledIsSingleFixedStage) {
  CurriculumConfig c;
  c.enabled = false;
  c.fixed_epsilon = 0.15;
  const Schedule s = make_schedule(c);
  ASSERT_EQ(s.stages.size(), 1u);
  for (std::uint64_t e : {0u, 1u, 4000u, 8000u}) {
    EXPECT_EQ(stage_for_episode(e, s).epsilon, 0.15);
    EXPECT_EQ(stage_for_episode(e, s).stage.n_sv_range.lo, 4);
  }
  EXPECT_EQ(next_boundary(0, s), 8000u);
}

TEST(Schedule, RejectsInconsistentConfig) {
  CurriculumConfig c;
  c.switch_episodes = {5000, 2000};
  EXPECT_THROW(make_schedule(c), ConfigError);
  c = {};
  c.epsilons = {0.2};
  EXPECT_THROW(make_schedule(c), ConfigError);
}

TEST(Trainer, StageHandoffKeepsParameters) {
  const auto dir = fresh_dir("handoff");
  Trainer t(tiny_run_config(), dir);
  std::map<int, std::vector<double>> first, last;
  std::vector<int> stages_seen;
  t.hooks.on_stage_start = [&](const CurriculumStage& s, const ActorCritic& p) {
    stages_seen.push_back(s.index);
    first[s.index] = flatten(p);
  };
  t.hooks.on_update = [&](const UpdateRecord& r, const ActorCritic& p) {
    last[r.stage] = flatten(p);
    const StageSelection sel = stage_for_episode(r.first_episode, t.schedule());
    EXPECT_EQ(sel.stage.index, r.stage);
    EXPECT_EQ(sel.epsilon, r.epsilon);
    // a rollout never straddles a stage or epsilon change
    EXPECT_LE(r.first_episode + r.episodes.size(), next_boundary(r.first_episode, t.schedule()));
    EXPECT_LT(r.metrics.first_minibatch_max_ratio_deviation, 1e-6);
  };
  const TrainRunState end = t.run();
  EXPECT_EQ(end.episode, 10u);
  EXPECT_EQ(stages_seen, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(first[2], last[1]);
  EXPECT_EQ(first[3], last[2]);
  EXPECT_NE(first[2], first[1]);

  for (const char* f : {"stage1.ckpt", "stage2.ckpt", "stage3.ckpt", "final.ckpt", "latest.ckpt", "training.csv",
                        "updates.csv", "run_manifest.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const Checkpoint s1 = load_checkpoint(dir / "stage1.ckpt");
  const Checkpoint s2 = load_checkpoint(dir / "stage2.ckpt");
  EXPECT_EQ(s1.meta.stage, 1);
  EXPECT_EQ(s1.meta.episode, 3u);
  EXPECT_EQ(flatten(s1.policy), last[1]);
  EXPECT_EQ(s2.meta.previous_stage_checkpoint, "stage1.ckpt");
  EXPECT_EQ(load_checkpoint(dir / "final.ckpt").meta.previous_stage_checkpoint, "stage2.ckpt");

  const CsvTable csv = read_csv(dir / "training.csv");
  ASSERT_EQ(csv.rows.size(), 10u);
  const auto ep = csv.numeric("episode");
  const auto stage = csv.numeric("stage");
  const auto eps = csv.numeric("epsilon");
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(ep[i], static_cast<double>(i));
    EXPECT_EQ(stage[i], stage_for_episode(i, t.schedule()).stage.index);
    EXPECT_EQ(eps[i], stage_for_episode(i, t.schedule()).epsilon);
  }
  const auto n_sv = csv.numeric("n_sv");
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(n_sv[i], 0.0);
}

TEST(Trainer, ResumeReproducesUninterruptedRun) {
  const auto full = fresh_dir("resume_full");
  Trainer(tiny_run_config(), full).run();

  for (std::uint64_t stop : {1u, 3u, 7u}) {
    const auto part = fresh_dir("resume_part_" + std::to_string(stop));
    {
      Trainer t(tiny_run_config(), part);
      const TrainRunState st = t.run(stop);
      EXPECT_GE(st.episode, stop);
      EXPECT_LT(st.episode, 10u);
    }
    Trainer r = Trainer::resume(part / "latest.ckpt", part, 2);
    r.run();
    for (const char* f : {"training.csv", "updates.csv", "final.ckpt", "stage1.ckpt", "stage2.ckpt", "run_manifest.json"}) {
      EXPECT_EQ(slurp(full / f), slurp(part / f)) << f << " after stopping at " << stop;
    }
  }
}

TEST(Trainer, OutputIndependentOfJobs) {
  const auto a = fresh_dir("jobs_1");
  const auto b = fresh_dir("jobs_3");
  RunConfig c = tiny_run_config();
  Trainer(c, a).run();
  c.jobs = 3;
  Trainer(c, b).run();
  EXPECT_EQ(slurp(a / "training.csv"), slurp(b / "training.csv"));
  EXPECT_EQ(slurp(a / "final.ckpt"), slurp(b / "final.ckpt"));
}

TEST(Trainer, FixedEpsilonBaseline) {
  const auto dir = fresh_dir("baseline");
  RunConfig c = tiny_run_config();
  c.curriculum.enabled = false;
  c.curriculum.fixed_epsilon = 0.15;
  Trainer(c, dir).run();
  const CsvTable csv = read_csv(dir / "training.csv");
  for (double e : csv.numeric("epsilon")) EXPECT_EQ(e, 0.15);
  for (double s : csv.numeric("stage")) EXPECT_EQ(s, 3.0);
  for (double n : csv.numeric("n_sv")) {
    EXPECT_GE(n, 4.0);
    EXPECT_LE(n, 8.0);
  }
}

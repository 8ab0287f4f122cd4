#include <gtest/gtest.h>

#include <cmath>

#include "cppo/env.hpp"
#include "helpers.hpp"

using namespace cppo;
using cppo::test::default_conflicts;
using cppo::test::default_network;
using cppo::test::place;

namespace {

IntersectionEnv make_env(EnvConfig cfg = {}) { return IntersectionEnv(default_network(), default_conflicts(), cfg); }

double component_sum(const RewardBreakdown& r) { return r.r_succ + r.r_colli + r.r_to + r.r_ofr + r.r_lc + r.r_l + r.r_acc; }

}  // namespace

TEST(Env, ResetWithoutTrafficHasEmptyRows) {
  IntersectionEnv env = make_env();
  Rng rng = make_rng(3);
  const StateMatrix m = env.reset({0, 0}, rng);
  EXPECT_EQ(m.rows(), 9);
  EXPECT_FALSE(m.row_is_padding(0));
  for (int r = 1; r < m.rows(); ++r) EXPECT_TRUE(m.row_is_padding(r));
  EXPECT_EQ(env.context().t, 0);
  EXPECT_EQ(env.context().outcome, Outcome::kRunning);
}

TEST(Env, ResetIsDeterministic) {
  IntersectionEnv a = make_env(), b = make_env();
  Rng ra = make_rng(77), rb = make_rng(77);
  EXPECT_EQ(a.reset({2, 6}, ra), b.reset({2, 6}, rb));
}

TEST(Env, ResetRangeControlsOccupiedRows) {
  IntersectionEnv env = make_env();
  for (int i = 0; i < 200; ++i) {
    Rng rng = make_rng(500 + i);
    const StateMatrix m = env.reset({4, 8}, rng);
    const int others = m.occupied_rows() - 1;
    EXPECT_GE(others, 4);
    EXPECT_LE(others, 8);
    EXPECT_EQ(others, env.spawned_count());
  }
}

TEST(Env, ResetRejectsBadRange) {
  IntersectionEnv env = make_env();
  Rng rng = make_rng(1);
  EXPECT_THROW(env.reset({3, 2}, rng), std::invalid_argument);
  EXPECT_THROW(env.reset({-1, 2}, rng), std::invalid_argument);
  EXPECT_THROW(env.reset({100, 100}, rng), SpawnCapacityError);
}

TEST(Observe, Normalization) {
  Vehicle ego;
  ego.ego = true;
  ego.state.v = 10.0;
  const StateMatrix m = observe(ego, {}, EnvConfig{});
  const double expected[6] = {0, 0, 1, 0, 0, 1};
  for (int c = 0; c < 6; ++c) EXPECT_NEAR(m.at(0, c), expected[c], 1e-15);
}

TEST(Observe, ClipsToUnitRange) {
  Vehicle ego;
  ego.state.x = 250.0;
  ego.state.y = -300.0;
  ego.state.v = 30.0;
  const StateMatrix m = observe(ego, {}, EnvConfig{});
  EXPECT_EQ(m.at(0, 0), 1.0);
  EXPECT_EQ(m.at(0, 1), -1.0);
  EXPECT_EQ(m.at(0, 2), 1.0);
}

TEST(Observe, PaddingAndOrder) {
  EnvConfig cfg;
  cfg.max_vehicles = 6;
  Vehicle ego;
  std::vector<Vehicle> others(3);
  const double dist[3] = {30, 10, 20};
  for (int i = 0; i < 3; ++i) {
    others[i].id = i + 1;
    others[i].state.x = dist[i];
  }
  const StateMatrix m = observe(ego, others, cfg);
  EXPECT_EQ(m.rows(), 7);
  EXPECT_NEAR(m.at(1, 0), 0.1, 1e-15);
  EXPECT_NEAR(m.at(2, 0), 0.2, 1e-15);
  EXPECT_NEAR(m.at(3, 0), 0.3, 1e-15);
  for (int r = 4; r < 7; ++r) EXPECT_TRUE(m.row_is_padding(r));

  others.resize(2);
  const StateMatrix two = observe(ego, others, cfg);
  for (int r = 3; r < 7; ++r) EXPECT_TRUE(two.row_is_padding(r));
}

TEST(Observe, KeepsNearestWhenCrowded) {
  EnvConfig cfg;
  cfg.max_vehicles = 2;
  Vehicle ego;
  std::vector<Vehicle> others(4);
  for (int i = 0; i < 4; ++i) {
    others[i].id = i + 1;
    others[i].state.y = 10.0 * (4 - i);
  }
  const StateMatrix m = observe(ego, others, cfg);
  EXPECT_NEAR(m.at(1, 1), 0.1, 1e-15);
  EXPECT_NEAR(m.at(2, 1), 0.2, 1e-15);
}

TEST(Observe, EqualDistanceOrderedById) {
  Vehicle ego;
  std::vector<Vehicle> others(2);
  others[0].id = 5;
  others[0].state.x = 10;
  others[1].id = 2;
  others[1].state.x = -10;
  const StateMatrix m = observe(ego, others, EnvConfig{});
  EXPECT_NEAR(m.at(1, 0), -0.1, 1e-15);
  EXPECT_NEAR(m.at(2, 0), 0.1, 1e-15);
}

TEST(Collision, EgoAgainstTraffic) {
  VehicleState ego;
  std::vector<Vehicle> others(1);
  others[0].id = 1;
  EXPECT_TRUE(detect_collision(ego, others));
  others[0].state.x = 100.0;
  EXPECT_FALSE(detect_collision(ego, others));
  others[0].state.x = 4.9;
  EXPECT_TRUE(detect_collision(ego, others));
  others[0].state.x = 5.1;
  EXPECT_FALSE(detect_collision(ego, others));
}

TEST(OffRoad, Examples) {
  const RoadNetwork& net = default_network();
  VehicleState s;
  EXPECT_FALSE(check_off_road(s, net, 0.5));
  for (const Lane& lane : net.lanes()) {
    for (double f : {0.0, 0.3, 0.7, 1.0}) {
      const Vec2 p = lane.centerline.point_at(f * lane.centerline.length());
      s.x = p.x;
      s.y = p.y;
      EXPECT_FALSE(check_off_road(s, net, 0.5)) << lane.id;
    }
  }
  s.x = 16.0;
  s.y = -40.0;
  EXPECT_TRUE(check_off_road(s, net, 0.5));
  s.x = 30.0;
  s.y = 30.0;
  EXPECT_TRUE(check_off_road(s, net, 0.5));
}

TEST(Reward, Examples) {
  const RewardConfig w;
  EpisodeContext ctx;
  ctx.elapsed_s = 24.0;
  RewardBreakdown r = compute_reward({Action::kKeep, Outcome::kSuccess, 3.0, 0}, ctx, w, 24.0, 10.0);
  EXPECT_DOUBLE_EQ(r.r_succ, 10.0);
  ctx.n_car = 2;
  r = compute_reward({Action::kKeep, Outcome::kCollision, 0.0, 2}, ctx, w, 24.0, 10.0);
  EXPECT_DOUBLE_EQ(r.r_colli, -15.0);
  r = compute_reward({Action::kKeep, Outcome::kRunning, 5.0, 0}, ctx, w, 24.0, 10.0);
  EXPECT_DOUBLE_EQ(r.total, 0.05);
  r = compute_reward({Action::kKeep, Outcome::kTimeout, 5.0, 0}, ctx, w, 24.0, 10.0);
  EXPECT_DOUBLE_EQ(r.total, -5.0);
  EXPECT_EQ(r.r_l, 0.0);
  r = compute_reward({Action::kLaneLeft, Outcome::kOffRoad, 5.0, 0}, ctx, w, 24.0, 10.0);
  EXPECT_DOUBLE_EQ(r.r_ofr, -5.0);
  EXPECT_DOUBLE_EQ(r.r_lc, -0.1);
  EXPECT_DOUBLE_EQ(compute_reward({Action::kAccelerate, Outcome::kRunning, 5.0, 2}, ctx, w, 24.0, 10.0).r_acc, 0.05);
  EXPECT_DOUBLE_EQ(compute_reward({Action::kAccelerate, Outcome::kRunning, 5.0, 3}, ctx, w, 24.0, 10.0).r_acc, -0.05);
  RewardConfig off = w;
  off.accel_term = false;
  EXPECT_EQ(compute_reward({Action::kAccelerate, Outcome::kRunning, 5.0, 0}, ctx, off, 24.0, 10.0).r_acc, 0.0);
}

TEST(Reward, SumAndTerminalExclusivity) {
  const RewardConfig w;
  Rng rng = make_rng(12);
  const Outcome outcomes[] = {Outcome::kRunning, Outcome::kSuccess, Outcome::kCollision, Outcome::kOffRoad,
                              Outcome::kTimeout};
  for (int i = 0; i < 10000; ++i) {
    EpisodeContext ctx;
    ctx.n_car = uniform_int(rng, 0, 8);
    ctx.elapsed_s = uniform(rng, 0.0, 30.0);
    const Transition tr{static_cast<Action>(uniform_int(rng, 0, 4)), outcomes[uniform_int(rng, 0, 4)],
                        uniform(rng, 0.0, 10.0), uniform_int(rng, 0, 8)};
    const RewardBreakdown r = compute_reward(tr, ctx, w, 24.0, 10.0);
    EXPECT_EQ(r.total, component_sum(r));
    const int terminal = (r.r_succ != 0) + (r.r_colli != 0) + (r.r_to != 0) + (r.r_ofr != 0);
    EXPECT_LE(terminal, 1);
    EXPECT_EQ(terminal == 0, tr.outcome == Outcome::kRunning);
  }
}

TEST(Env, ScriptedSuccessRewardComposition) {
  IntersectionEnv env = make_env();
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng = make_rng(seed);
    env.reset({0, 0}, rng);
    double total = 0.0;
    int steps = 0;
    StepResult r;
    do {
      r = env.step(Action::kKeep);
      total += r.reward.total;
      ++steps;
    } while (r.outcome == Outcome::kRunning);
    ASSERT_EQ(r.outcome, Outcome::kSuccess) << "seed " << seed;
    const double expected_succ = 10.0 * (1.0 + 0.5 * (24.0 - steps / 15.0) / 24.0);
    EXPECT_NEAR(r.reward.r_succ, expected_succ, 1e-9);
    EXPECT_NEAR(total, 0.05 * (steps - 1) + expected_succ, 1e-9);
    EXPECT_LE(norm(env.ego().state.position() - env.endpoints().goal_point), 4.0);
  }
}

TEST(Env, SteeringOffTheCarriagewayEndsOffRoad) {
  IntersectionEnv env = make_env();
  Rng rng = make_rng(5);
  env.reset({0, 0}, rng);
  Vehicle ego = place(default_network(), Zone::kLower, Zone::kUpper, 1, 20.0, 10.0, 0);
  ego.state.x = 8.4;
  ego.state.psi = 0.0;
  env.set_world(ego, {}, env.endpoints());
  const StepResult r = env.step(Action::kKeep);
  EXPECT_EQ(r.outcome, Outcome::kOffRoad);
  EXPECT_DOUBLE_EQ(r.reward.r_ofr, -5.0);
  EXPECT_DOUBLE_EQ(r.reward.total, -5.0);
  EXPECT_THROW(env.step(Action::kKeep), std::logic_error);
}

TEST(Env, CollisionTakesPriority) {
  IntersectionEnv env = make_env();
  Rng rng = make_rng(5);
  env.reset({0, 0}, rng);
  Vehicle ego = place(default_network(), Zone::kLower, Zone::kUpper, 1, 20.0, 10.0, 0);
  ego.state.x = 8.4;
  ego.state.psi = 0.0;
  Vehicle other = ego;
  other.id = 1;
  other.ego = false;
  other.state.x += 0.6;
  other.state.v = 0.0;
  env.set_world(ego, {other}, env.endpoints());
  EXPECT_EQ(env.step(Action::kKeep).outcome, Outcome::kCollision);
}

TEST(Env, AlwaysDecelerateTimesOut) {
  IntersectionEnv env = make_env();
  Rng rng = make_rng(9);
  env.reset({0, 0}, rng);
  StepResult r;
  int steps = 0;
  do {
    r = env.step(Action::kDecelerate);
    ++steps;
  } while (r.outcome == Outcome::kRunning);
  EXPECT_EQ(r.outcome, Outcome::kTimeout);
  EXPECT_EQ(steps, 360);
  EXPECT_DOUBLE_EQ(r.reward.r_to, -5.0);
  EXPECT_EQ(r.reward.r_l, 0.0);
  EXPECT_THROW(env.step(Action::kKeep), std::logic_error);
}

TEST(Env, StepBeforeResetThrows) {
  IntersectionEnv env = make_env();
  EXPECT_THROW(env.step(Action::kKeep), std::logic_error);
}

TEST(Env, RandomEpisodesRespectInvariants) {
  IntersectionEnv a = make_env(), b = make_env();
  for (int ep = 0; ep < 40; ++ep) {
    Rng ra = make_rng(ep, Stream::kEpisode), rb = make_rng(ep, Stream::kEpisode);
    Rng act = make_rng(ep, Stream::kPolicy);
    a.reset({4, 8}, ra);
    b.reset({4, 8}, rb);
    int last_n_car = 0;
    int lane_changes = 0;
    StepResult r;
    do {
      const auto action = static_cast<Action>(uniform_int(act, 0, 4));
      lane_changes += is_lane_change(action);
      r = a.step(action);
      const StepResult q = b.step(action);
      ASSERT_EQ(r.observation, q.observation);
      ASSERT_EQ(r.reward.total, q.reward.total);
      EXPECT_GE(a.context().n_car, last_n_car);
      last_n_car = a.context().n_car;
      EXPECT_EQ(r.reward.total, component_sum(r.reward));
      EXPECT_EQ(a.context().lane_change_count, lane_changes);
      EXPECT_LE(static_cast<int>(a.surrounding().size()), a.spawned_count());
    } while (r.outcome == Outcome::kRunning);
    if (r.outcome == Outcome::kSuccess) {
      EXPECT_LE(norm(a.ego().state.position() - a.endpoints().goal_point), 4.0);
    }
  }
}

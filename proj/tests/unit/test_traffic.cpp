#include <gtest/gtest.h>

#include <cmath>

#include "cppo/collision.hpp"
#include "cppo/env.hpp"
#include "cppo/traffic.hpp"
#include "helpers.hpp"

using namespace cppo;
using cppo::test::default_conflicts;
using cppo::test::default_network;
using cppo::test::place;

TEST(Idm, FreeRoad) {
  const IdmParams p;
  EXPECT_LT(std::abs(idm_acceleration(p.v0, {}, p)), 1e-9);
  EXPECT_DOUBLE_EQ(idm_acceleration(0.0, {}, p), p.a_max);
}

TEST(Idm, WorkedLeaderExample) {
  IdmParams p;
  p.v0 = 10.0;
  p.s0 = 2.0;
  p.time_headway = 1.5;
  p.a_max = 3.0;
  p.b_comf = 3.0;
  const double expected = 3.0 * (1.0 - std::pow(0.8, 4) - (14.0 / 20.0) * (14.0 / 20.0));
  EXPECT_NEAR(idm_acceleration(8.0, {true, 20.0, 8.0}, p), expected, 1e-12);
}

TEST(Idm, ZeroGapBrakesFully) {
  const IdmParams p;
  EXPECT_EQ(idm_acceleration(5.0, {true, 0.0, 0.0}, p), -8.0);
  EXPECT_EQ(idm_acceleration(0.0, {true, 0.0, 3.0}, p), -8.0);
}

TEST(Idm, MonotoneAndBounded) {
  const IdmParams p;
  Rng rng = make_rng(21);
  for (int i = 0; i < 2000; ++i) {
    const double gap = uniform(rng, 0.1, 60.0);
    const double vl = uniform(rng, 0.0, 12.0);
    double prev = INFINITY;
    for (double v = 0.0; v <= 12.0; v += 0.25) {
      const double a = idm_acceleration(v, {true, gap, vl}, p);
      EXPECT_LE(a, prev + 1e-12);
      EXPECT_LE(std::abs(a), 8.0);
      prev = a;
    }
    const double v = uniform(rng, 0.0, 12.0);
    prev = -INFINITY;
    for (double g = 0.1; g <= 60.0; g += 0.5) {
      const double a = idm_acceleration(v, {true, g, vl}, p);
      EXPECT_GE(a, prev - 1e-12);
      prev = a;
    }
  }
}

TEST(Idm, PlatoonSettles) {
  // leader at constant speed, two IDM followers on a straight road
  const IdmParams p;
  const double dt = 1.0 / 15.0, len = 5.0, v_lead = 6.0;
  double x[3] = {60.0, 35.0, 5.0};
  double v[3] = {v_lead, 3.0, 8.0};
  double a[3] = {0.0, 0.0, 0.0};
  for (int step = 0; step < 30 * 15; ++step) {
    for (int i = 1; i < 3; ++i) a[i] = idm_acceleration(v[i], {true, x[i - 1] - x[i] - len, v[i - 1]}, p);
    for (int i = 1; i < 3; ++i) {
      x[i] += v[i] * dt + 0.5 * a[i] * dt * dt;
      v[i] = std::max(0.0, v[i] + a[i] * dt);
    }
    x[0] += v_lead * dt;
  }
  EXPECT_LT(std::abs(a[1]), 0.05);
  EXPECT_LT(std::abs(a[2]), 0.05);
}

TEST(Leader, AloneHasNoLeader) {
  const Vehicle me = place(default_network(), Zone::kRight, Zone::kLeft, 0, 10.0, 5.0, 1);
  const std::vector<Vehicle> all{me};
  EXPECT_FALSE(find_leader(me, all, default_network(), default_conflicts(), TrafficConfig{}).present);
}

TEST(Leader, SameLaneVehicleAhead) {
  const Vehicle me = place(default_network(), Zone::kRight, Zone::kLeft, 1, 10.0, 5.0, 1);
  const Vehicle ahead = place(default_network(), Zone::kRight, Zone::kUpper, 1, 25.0, 4.0, 2);
  const std::vector<Vehicle> all{me, ahead};
  const LeaderInfo l = find_leader(me, all, default_network(), default_conflicts(), TrafficConfig{});
  ASSERT_TRUE(l.present);
  EXPECT_NEAR(l.gap, 15.0 - 5.0, 1e-9);
  EXPECT_EQ(l.v_lead, 4.0);
  // the follower is not a leader of the vehicle ahead
  EXPECT_FALSE(find_leader(ahead, all, default_network(), default_conflicts(), TrafficConfig{}).present);
}

TEST(Leader, EarlierArrivalAtConflictIsVirtualLeader) {
  const RoadNetwork& net = default_network();
  const TrafficConfig cfg;
  // westbound straight (right -> left) and southbound straight (upper -> lower) cross once
  const Route& west = net.route(Zone::kRight, Zone::kLeft, 0);
  const Route& south = net.route(Zone::kUpper, Zone::kLower, 0);
  const double y_west = net.pose_along(west, west.offsets[1] + 1.0).position.y;
  const double x_south = net.pose_along(south, south.offsets[1] + 1.0).position.x;
  const double x_entry_west = net.pose_along(west, west.offsets[1]).position.x;
  const double y_entry_south = net.pose_along(south, south.offsets[1]).position.y;
  // arc length to the crossing point, straight-line geometry
  const double s_cross_west = west.offsets[1] + (x_entry_west - x_south);
  const double s_cross_south = south.offsets[1] + (y_entry_south - y_west);

  const Vehicle w = place(net, Zone::kRight, Zone::kLeft, 0, s_cross_west - 20.0, 5.0, 1);
  const Vehicle s = place(net, Zone::kUpper, Zone::kLower, 0, s_cross_south - 10.0, 5.0, 2);
  const std::vector<Vehicle> all{w, s};
  const LeaderInfo lw = find_leader(w, all, net, default_conflicts(), cfg);
  ASSERT_TRUE(lw.present);
  EXPECT_EQ(lw.v_lead, 0.0);
  EXPECT_NEAR(lw.gap, 20.0 - cfg.conflict_clearance_m - 2.5, 1e-6);
  EXPECT_FALSE(find_leader(s, all, net, default_conflicts(), cfg).present);
}

TEST(Leader, TieGoesToTheVehicleOnTheRight) {
  const RoadNetwork& net = default_network();
  const Route& west = net.route(Zone::kRight, Zone::kLeft, 0);
  const Route& south = net.route(Zone::kUpper, Zone::kLower, 0);
  const double y_west = net.pose_along(west, west.offsets[1] + 1.0).position.y;
  const double x_south = net.pose_along(south, south.offsets[1] + 1.0).position.x;
  const double s_cross_west = west.offsets[1] + (net.pose_along(west, west.offsets[1]).position.x - x_south);
  const double s_cross_south = south.offsets[1] + (net.pose_along(south, south.offsets[1]).position.y - y_west);
  const Vehicle w = place(net, Zone::kRight, Zone::kLeft, 0, s_cross_west - 15.0, 5.0, 1);
  const Vehicle s = place(net, Zone::kUpper, Zone::kLower, 0, s_cross_south - 15.2, 5.0, 2);
  const std::vector<Vehicle> all{w, s};
  // heading west, the upper arm is on the right: the southbound car goes first
  ASSERT_EQ(zone_on_right_of(Zone::kRight), Zone::kUpper);
  EXPECT_TRUE(find_leader(w, all, net, default_conflicts(), TrafficConfig{}).present);
  EXPECT_FALSE(find_leader(s, all, net, default_conflicts(), TrafficConfig{}).present);
}

TEST(Spawn, ZeroAndDeterministic) {
  const RoadNetwork& net = default_network();
  Rng rng = make_rng(1);
  EXPECT_TRUE(spawn_surrounding(rng, 0, net, {}, {}).empty());
  Rng a = make_rng(4), b = make_rng(4);
  const auto x = spawn_surrounding(a, 4, net, {}, {});
  const auto y = spawn_surrounding(b, 4, net, {}, {});
  ASSERT_EQ(x.size(), 4u);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].state.x, y[i].state.x);
    EXPECT_EQ(x[i].state.y, y[i].state.y);
    EXPECT_EQ(x[i].state.to, y[i].state.to);
    EXPECT_NE(x[i].state.from, Zone::kLower);
    EXPECT_NE(x[i].state.from, x[i].state.to);
    EXPECT_GE(x[i].state.v, 3.0);
    EXPECT_LE(x[i].state.v, 7.0);
    EXPECT_EQ(x[i].id, static_cast<int>(i) + 1);
  }
}

TEST(Spawn, NeverOverlaps) {
  const RoadNetwork& net = default_network();
  for (int trial = 0; trial < 1000; ++trial) {
    Rng rng = make_rng(100 + trial);
    const auto vs = spawn_surrounding(rng, 6, net, {}, {});
    for (std::size_t i = 0; i < vs.size(); ++i) {
      for (std::size_t j = i + 1; j < vs.size(); ++j) {
        ASSERT_FALSE(rects_intersect(footprint(vs[i].state), footprint(vs[j].state))) << "trial " << trial;
      }
    }
  }
}

TEST(Spawn, CapacityError) {
  const RoadNetwork& net = default_network();
  const int cap = spawn_capacity(net, {}, 5.0);
  EXPECT_GT(cap, 8);
  Rng rng = make_rng(2);
  EXPECT_NO_THROW(spawn_surrounding(rng, cap, net, {}, {}));
  try {
    spawn_surrounding(rng, cap + 1, net, {}, {});
    FAIL() << "expected SpawnCapacityError";
  } catch (const SpawnCapacityError& e) {
    EXPECT_EQ(e.capacity(), cap);
    EXPECT_NE(std::string(e.what()).find(std::to_string(cap)), std::string::npos);
  }
}

TEST(Traffic, StepKeepsAccelerationInBoundsAndDropsExitedVehicles) {
  const RoadNetwork& net = default_network();
  const TrafficConfig cfg;
  Rng rng = make_rng(9);
  std::vector<Vehicle> world = spawn_surrounding(rng, 8, net, cfg, {});
  const double dt = 1.0 / 15.0;
  for (int t = 0; t < 600 && !world.empty(); ++t) {
    const auto next = step_surrounding(world, net, default_conflicts(), cfg, dt);
    for (const Vehicle& n : next) {
      for (const Vehicle& o : world) {
        if (o.id == n.id) EXPECT_LE(std::abs(n.state.v - o.state.v), 8.0 * dt + 1e-9);
      }
      EXPECT_GE(n.state.v, 0.0);
    }
    world = next;
  }
  EXPECT_TRUE(world.empty());
}

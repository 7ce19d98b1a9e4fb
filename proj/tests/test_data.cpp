#include "cegmix/data.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

using cegmix::HoldingData;
using cegmix::TransitionData;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/cegmix_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("data") {

TEST_CASE("transition csv round trip") {
  TransitionData d;
  d.ids = {"s0", "s1", "s2"};
  d.successes = Eigen::Vector3i(3, 0, 7);
  d.totals = Eigen::Vector3i(10, 4, 7);

  TempFile f("trans.csv");
  cegmix::write_transition_csv(d, f.path);
  const auto back = cegmix::read_transition_csv(f.path);
  CHECK(back.ids == d.ids);
  CHECK(back.successes == d.successes);
  CHECK(back.totals == d.totals);
}

TEST_CASE("holding csv round trip keeps order and exact values") {
  HoldingData d;
  d.ids = {"e2", "e0"};
  d.times = {Eigen::Vector3d(0.25, 1.5, 100.0 / 3.0), Eigen::Vector2d(2.0, 0.125)};

  TempFile f("hold.csv");
  cegmix::write_holding_csv(d, f.path);
  const auto back = cegmix::read_holding_csv(f.path);
  REQUIRE(back.ids == d.ids);
  REQUIRE(back.times.size() == 2);
  CHECK(back.times[0] == d.times[0]);
  CHECK(back.times[1] == d.times[1]);
}

TEST_CASE("interleaved edge rows regroup by first appearance and obs index") {
  TempFile f("interleave.csv");
  {
    std::ofstream out(f.path);
    out << "edge_id,obs_index,holding_time\n"
        << "b,1,20\n"
        << "a,0,1\n"
        << "b,0,10\n"
        << "a,1,2\n";
  }
  const auto d = cegmix::read_holding_csv(f.path);
  REQUIRE(d.ids == std::vector<std::string>{"b", "a"});
  CHECK(d.times[0] == Eigen::Vector2d(10, 20));
  CHECK(d.times[1] == Eigen::Vector2d(1, 2));
}

TEST_CASE("validation rejects bad counts and nonpositive times") {
  TransitionData t;
  t.ids = {"s"};
  t.successes = Eigen::VectorXi::Constant(1, 5);
  t.totals = Eigen::VectorXi::Constant(1, 3);
  CHECK_THROWS_AS(cegmix::validate(t), cegmix::DataError);

  HoldingData h;
  h.ids = {"e"};
  h.times = {Eigen::Vector2d(1.0, 0.0)};
  CHECK_THROWS_AS(cegmix::validate(h), cegmix::NonPositiveTime);
  h.times = {Eigen::VectorXd()};
  CHECK_THROWS_AS(cegmix::validate(h), cegmix::DataError);
}

TEST_CASE("malformed csv raises DataError") {
  TempFile f("bad.csv");
  {
    std::ofstream out(f.path);
    out << "situation_id,successes,totals\n"
        << "s0,three,10\n";
  }
  CHECK_THROWS_AS((void)cegmix::read_transition_csv(f.path), cegmix::DataError);
  CHECK_THROWS_AS((void)cegmix::read_transition_csv("/nonexistent/x.csv"),
                  cegmix::DataError);
}

}  // TEST_SUITE

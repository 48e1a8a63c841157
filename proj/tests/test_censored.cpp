#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

#include "mvrank/censored.hpp"
#include "mvrank/energytest.hpp"
#include "mvrank/rng.hpp"

using namespace mvrank;
using censored::gehan_pair_score;
using censored::gehan_scores;
using censored::SurvivalColumn;
using mvrank::rng::Stream;
using Catch::Approx;

TEST_CASE("pair score worked examples") {
  REQUIRE(gehan_pair_score(3, true, 1, true) == 1);   // two events, ordered
  REQUIRE(gehan_pair_score(2, false, 3, true) == 0);  // 2+ vs 3: indeterminate
  REQUIRE(gehan_pair_score(2, false, 1, true) == 1);  // 2+ >= 1: definite
  REQUIRE(gehan_pair_score(1, true, 1, true) == 0);   // tied events
  REQUIRE(gehan_pair_score(2, false, 2, false) == 0); // both censored
  // event at t vs censored at the same t
  REQUIRE(gehan_pair_score(2, false, 2, true) == 1);
  REQUIRE(gehan_pair_score(2, true, 2, false) == -1);
}

TEST_CASE("scores without censoring are a linear function of rank") {
  SurvivalColumn col{{1, 2, 3}, {true, true, true}};
  REQUIRE(gehan_scores(col) == std::vector<int>{-2, 0, 2});
}

TEST_CASE("worked example with one censored subject") {
  SurvivalColumn col{{1, 2, 3}, {true, false, true}};
  REQUIRE(gehan_scores(col) == std::vector<int>{-2, 1, 1});
}

TEST_CASE("all subjects censored at the same time score zero") {
  SurvivalColumn col{{5, 5, 5, 5}, {false, false, false, false}};
  REQUIRE(gehan_scores(col) == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("antisymmetry and zero-sum on random censored columns") {
  auto s = Stream::substream(404, {});
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + s.next_below(20);
    SurvivalColumn col;
    for (std::size_t i = 0; i < n; ++i) {
      col.times.push_back(s.next_below(8) * 0.5);  // ties likely
      col.events.push_back(s.next_double() < 0.6);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        REQUIRE(gehan_pair_score(col.times[i], col.events[i], col.times[j],
                                 col.events[j]) ==
                -gehan_pair_score(col.times[j], col.events[j], col.times[i],
                                  col.events[i]));
    const auto u = gehan_scores(col);
    REQUIRE(std::accumulate(u.begin(), u.end(), 0) == 0);
    for (int v : u) {
      REQUIRE(v <= static_cast<int>(n) - 1);
      REQUIRE(v >= -(static_cast<int>(n) - 1));
    }
  }
}

TEST_CASE("no-censoring identity u = 2 rank - N - 1") {
  auto s = Stream::substream(405, {});
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + s.next_below(30);
    SurvivalColumn col;
    std::vector<double> sorted;
    for (std::size_t i = 0; i < n; ++i) {
      col.times.push_back(s.next_gaussian());
      col.events.push_back(true);
    }
    sorted = col.times;
    std::sort(sorted.begin(), sorted.end());
    const auto u = gehan_scores(col);
    for (std::size_t i = 0; i < n; ++i) {
      const int rank = static_cast<int>(
          std::lower_bound(sorted.begin(), sorted.end(), col.times[i]) -
          sorted.begin()) + 1;
      REQUIRE(u[i] == 2 * rank - static_cast<int>(n) - 1);
    }
  }
}

TEST_CASE("increasing an event time never lowers its score") {
  auto s = Stream::substream(406, {});
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + s.next_below(12);
    SurvivalColumn col;
    for (std::size_t i = 0; i < n; ++i) {
      col.times.push_back(s.next_below(6) * 0.5);
      col.events.push_back(s.next_double() < 0.5);
    }
    col.events[0] = true;
    const int before = gehan_scores(col)[0];
    col.times[0] += 0.25 + s.next_double();
    const int after = gehan_scores(col)[0];
    REQUIRE(after >= before);
  }
}

TEST_CASE("survival-only test equals the raw-time test when uncensored") {
  // Gehan scores are a strictly monotone transform of distinct event
  // times, and the d=1 assignment is order-based, so the decisions and
  // statistics coincide.
  auto s = Stream::substream(407, {});
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index m = 3 + static_cast<Eigen::Index>(s.next_below(8));
    const Eigen::Index n = 3 + static_cast<Eigen::Index>(s.next_below(8));
    TwoSampleData surv;
    surv.arm_x.resize(m, 1);
    surv.arm_y.resize(n, 1);
    for (Eigen::Index i = 0; i < m; ++i) surv.arm_x(i, 0) = s.next_double() * 10;
    for (Eigen::Index j = 0; j < n; ++j) surv.arm_y(j, 0) = s.next_double() * 10;
    surv.schema = {EndpointKind::time_to_event};
    surv.names = {"t"};
    surv.events_x = std::vector<bool>(m, true);
    surv.events_y = std::vector<bool>(n, true);

    TwoSampleData raw;
    raw.arm_x = surv.arm_x;
    raw.arm_y = surv.arm_y;
    raw.schema = {EndpointKind::continuous};
    raw.names = {"t"};

    energy::TestOptions opts;
    const auto via_scores = censored::test_with_survival(surv, opts);
    const auto via_times = energy::decide(raw, opts);
    REQUIRE(via_scores.statistic == Approx(via_times.statistic).margin(1e-12));
    REQUIRE(via_scores.reject == via_times.reject);
  }
}

TEST_CASE("degenerate survival column leaves the decision to the others") {
  // all survival values tied and censored -> the Gehan column is constant
  TwoSampleData data;
  data.arm_x.resize(3, 2);
  data.arm_x << 1, 0.1, 1, 0.5, 1, 0.9;
  data.arm_y.resize(3, 2);
  data.arm_y << 1, 0.2, 1, 0.6, 1, 1.0;
  data.schema = {EndpointKind::time_to_event, EndpointKind::continuous};
  data.names = {"t", "z"};
  data.events_x = std::vector<bool>(3, false);
  data.events_y = std::vector<bool>(3, false);

  const auto [nx, ny] = censored::substitute_gehan(data);
  REQUIRE(nx.col(0).isZero());
  REQUIRE(ny.col(0).isZero());

  energy::TestOptions opts;
  REQUIRE_NOTHROW(censored::test_with_survival(data, opts));
}

TEST_CASE("decide refuses survival data") {
  TwoSampleData data;
  data.arm_x.resize(1, 1);
  data.arm_x << 1;
  data.arm_y.resize(1, 1);
  data.arm_y << 2;
  data.schema = {EndpointKind::time_to_event};
  data.names = {"t"};
  data.events_x = std::vector<bool>{true};
  data.events_y = std::vector<bool>{true};
  energy::TestOptions opts;
  REQUIRE_THROWS_AS(energy::decide(data, opts), error);
}

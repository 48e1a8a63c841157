#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mvrank/baselines.hpp"
#include "mvrank/datagen.hpp"
#include "mvrank/rng.hpp"

using namespace mvrank;
using namespace mvrank::baselines;
using mvrank::rng::Stream;
using Catch::Approx;

namespace {

TwoSampleData plain(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  TwoSampleData d;
  d.arm_x = x;
  d.arm_y = y;
  d.schema.assign(x.cols(), EndpointKind::continuous);
  for (Eigen::Index k = 0; k < x.cols(); ++k)
    d.names.push_back("e" + std::to_string(k));
  return d;
}

}  // namespace

TEST_CASE("pair score sign definition") {
  Eigen::VectorXd x(2), y(2);
  x << 1, 5;
  y << 2, 5;
  REQUIRE(pair_scores(x, y) == std::vector<int>{-1, 0});
  REQUIRE(pair_scores(x, x) == std::vector<int>{0, 0});
}

TEST_CASE("pair score routes survival comparisons through the Gehan rule") {
  Eigen::VectorXd x(2), y(2);
  x << 2, 7;   // censored at 2
  y << 3, 7;   // event at 3
  const auto r = pair_scores(x, y, std::make_pair(false, true));
  REQUIRE(r[0] == 0);  // 2+ vs 3 indeterminate
  REQUIRE(r[1] == 0);
}

TEST_CASE("phi maps") {
  const std::vector<int> up{1, 1, 1}, down{-1, -1, -1}, mixed{1, -1, 0},
      tail{0, 0, 1};
  REQUIRE(phi_value(PhiKind::obrien_sum, up) == 3.0);
  REQUIRE(phi_value(PhiKind::obrien_sum, mixed) == 0.0);
  const std::vector<double> w{2.0, 1.0, 0.5};
  REQUIRE(phi_value(PhiKind::obrien_sum, mixed, w) == 1.0);
  REQUIRE(phi_value(PhiKind::wittkowski_all, up) == 1.0);
  REQUIRE(phi_value(PhiKind::wittkowski_all, mixed) == 0.0);
  REQUIRE(phi_value(PhiKind::wittkowski_majority, mixed) == 0.0);
  REQUIRE(phi_value(PhiKind::wittkowski_majority, std::vector<int>{1, 1, -1}) == 1.0);
  REQUIRE(phi_value(PhiKind::finkelstein_schoenfeld, tail) == 1.0);
  REQUIRE(phi_value(PhiKind::finkelstein_schoenfeld, mixed) == 1.0);
  REQUIRE(phi_value(PhiKind::finkelstein_schoenfeld, down) == -1.0);
}

TEST_CASE("phi extremes are attained at all-favorable and all-unfavorable") {
  auto s = Stream::substream(70, {});
  const std::vector<int> top(4, 1), bottom(4, -1);
  for (PhiKind kind : {PhiKind::obrien_sum, PhiKind::wittkowski_all,
                       PhiKind::wittkowski_majority,
                       PhiKind::finkelstein_schoenfeld}) {
    const double hi = phi_value(kind, top), lo = phi_value(kind, bottom);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<int> r(4);
      for (auto& v : r) v = static_cast<int>(s.next_below(3)) - 1;
      const double val = phi_value(kind, r);
      REQUIRE(val <= hi);
      REQUIRE(val >= lo);
    }
  }
}

TEST_CASE("u statistic on identical arms vanishes") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  const auto data = plain(x, x);
  for (PhiKind kind : {PhiKind::obrien_sum, PhiKind::wittkowski_all,
                       PhiKind::wittkowski_majority,
                       PhiKind::finkelstein_schoenfeld})
    REQUIRE(u_statistic(data, kind) == 0.0);
}

TEST_CASE("u statistic extreme cases") {
  Eigen::MatrixXd x(2, 2), y(2, 2);
  x << 5, 5, 6, 6;
  y << 1, 1, 2, 2;  // every x strictly dominates every y
  REQUIRE(u_statistic(plain(x, y), PhiKind::wittkowski_majority) == 1.0);

  Eigen::MatrixXd x1(1, 2), y1(1, 2);
  x1 << 3, 9;
  y1 << 3, 1;  // r = (0, 1): hierarchical score falls through to 1
  REQUIRE(u_statistic(plain(x1, y1), PhiKind::finkelstein_schoenfeld) == 1.0);
}

TEST_CASE("u statistic negates when arms swap") {
  auto s = Stream::substream(71, {});
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd x(4, 3), y(5, 3);
    for (Eigen::Index i = 0; i < 4; ++i)
      for (int k = 0; k < 3; ++k) x(i, k) = s.next_below(4);
    for (Eigen::Index j = 0; j < 5; ++j)
      for (int k = 0; k < 3; ++k) y(j, k) = s.next_below(4);
    for (PhiKind kind : {PhiKind::obrien_sum, PhiKind::wittkowski_all,
                         PhiKind::wittkowski_majority,
                         PhiKind::finkelstein_schoenfeld})
      REQUIRE(u_statistic(plain(x, y), kind) ==
              Approx(-u_statistic(plain(y, x), kind)).margin(1e-12));
  }
}

TEST_CASE("summed midranks example") {
  Eigen::MatrixXd x(1, 2), y(1, 2);
  x << 1, 10;
  y << 2, 20;
  const auto data = plain(x, y);
  const auto scores = obrien_scores(data);
  REQUIRE(scores == std::vector<double>{2.0, 4.0});
}

TEST_CASE("obrien test degenerates to p=1 on constant scores") {
  Eigen::MatrixXd x(2, 1), y(2, 1);
  x << 5, 5;
  y << 5, 5;
  const auto outcome = obrien_test(plain(x, y), 0.05);
  REQUIRE(*outcome.p_value == 1.0);
  REQUIRE_FALSE(outcome.reject);
}

TEST_CASE("obrien holds its level on continuous exchangeable data") {
  auto s = Stream::substream(72, {});
  int rejections = 0;
  const int sims = 1000;
  for (int sim = 0; sim < sims; ++sim) {
    Eigen::MatrixXd x(20, 2), y(20, 2);
    for (Eigen::Index i = 0; i < 20; ++i)
      for (int k = 0; k < 2; ++k) {
        x(i, k) = s.next_gaussian();
        y(i, k) = s.next_gaussian();
      }
    rejections += obrien_test(plain(x, y), 0.05).reject;
  }
  const double rate = rejections / static_cast<double>(sims);
  REQUIRE(rate > 0.025);
  REQUIRE(rate < 0.085);
}

TEST_CASE("permutation p-value sits near 1 at the null center") {
  Eigen::MatrixXd x(3, 1), y(3, 1);
  x << 1, 3, 5;
  y << 1, 3, 5;
  const auto outcome = permutation_test(plain(x, y),
                                        PhiKind::wittkowski_majority, 0.05,
                                        500, 7);
  REQUIRE(*outcome.p_value > 0.9);
}

TEST_CASE("permutation statistic equals the direct u statistic") {
  auto s = Stream::substream(73, {});
  Eigen::MatrixXd x(6, 2), y(8, 2);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (int k = 0; k < 2; ++k) x(i, k) = s.next_gaussian();
  for (Eigen::Index j = 0; j < 8; ++j)
    for (int k = 0; k < 2; ++k) y(j, k) = s.next_gaussian();
  const auto data = plain(x, y);
  for (PhiKind kind : {PhiKind::obrien_sum, PhiKind::wittkowski_majority,
                       PhiKind::finkelstein_schoenfeld}) {
    const auto outcome = permutation_test(data, kind, 0.05, 99, 3);
    REQUIRE(outcome.statistic == Approx(u_statistic(data, kind)).margin(1e-12));
  }
}

TEST_CASE("sampled permutation p agrees with full enumeration at m=n=3") {
  auto s = Stream::substream(74, {});
  Eigen::MatrixXd x(3, 2), y(3, 2);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (int k = 0; k < 2; ++k) {
      x(i, k) = s.next_gaussian();
      y(i, k) = s.next_gaussian() + 0.5;
    }
  const auto data = plain(x, y);

  // exact p over all 20 label splits
  Eigen::MatrixXd pooled(6, 2);
  pooled.topRows(3) = x;
  pooled.bottomRows(3) = y;
  const double u_obs = u_statistic(data, PhiKind::wittkowski_majority);
  int ge = 0, total = 0;
  std::vector<int> mask{1, 1, 1, 0, 0, 0};
  std::sort(mask.begin(), mask.end());
  do {
    Eigen::MatrixXd px(3, 2), py(3, 2);
    Eigen::Index ix = 0, iy = 0;
    for (Eigen::Index row = 0; row < 6; ++row) {
      if (mask[row])
        px.row(ix++) = pooled.row(row);
      else
        py.row(iy++) = pooled.row(row);
    }
    const double u = u_statistic(plain(px, py), PhiKind::wittkowski_majority);
    ge += std::abs(u) >= std::abs(u_obs) - 1e-12;
    ++total;
  } while (std::next_permutation(mask.begin(), mask.end()));
  REQUIRE(total == 20);
  const double exact_p = static_cast<double>(ge) / total;

  const auto outcome = permutation_test(data, PhiKind::wittkowski_majority,
                                        0.05, 10000, 11);
  REQUIRE(*outcome.p_value == Approx(exact_p).margin(0.05));
}

TEST_CASE("permutation test is deterministic in its seed") {
  auto s = Stream::substream(75, {});
  Eigen::MatrixXd x(10, 2), y(10, 2);
  for (Eigen::Index i = 0; i < 10; ++i)
    for (int k = 0; k < 2; ++k) {
      x(i, k) = s.next_gaussian();
      y(i, k) = s.next_gaussian() + 0.3;
    }
  const auto data = plain(x, y);
  const auto a = permutation_test(data, PhiKind::wittkowski_majority, 0.05, 500, 9);
  const auto b = permutation_test(data, PhiKind::wittkowski_majority, 0.05, 500, 9);
  REQUIRE(*a.p_value == *b.p_value);
  REQUIRE_THROWS(permutation_test(data, PhiKind::wittkowski_majority, 0.05, 50, 9));
}

TEST_CASE("permutation p-values are super-uniform under the null") {
  auto s = Stream::substream(76, {});
  const int sims = 400, B = 199;
  std::vector<double> pvals;
  for (int sim = 0; sim < sims; ++sim) {
    Eigen::MatrixXd x(12, 2), y(12, 2);
    for (Eigen::Index i = 0; i < 12; ++i)
      for (int k = 0; k < 2; ++k) {
        x(i, k) = s.next_gaussian();
        y(i, k) = s.next_gaussian();
      }
    pvals.push_back(*permutation_test(plain(x, y),
                                      PhiKind::wittkowski_majority, 0.05, B,
                                      1000 + sim)
                         .p_value);
  }
  for (double cut : {0.05, 0.10, 0.25}) {
    const double frac =
        std::count_if(pvals.begin(), pvals.end(),
                      [&](double p) { return p <= cut; }) /
        static_cast<double>(sims);
    const double band = 3.0 * std::sqrt(cut * (1 - cut) / sims) + 1.0 / (B + 1);
    REQUIRE(frac <= cut + band);
  }
}

TEST_CASE("survival endpoint flows through the baselines") {
  datagen::ScenarioConfig cfg;
  cfg.scenario = 3;
  cfg.m = 12;
  cfg.n = 12;
  cfg.r = 0.0;
  cfg.rho = 0.3;
  cfg.seed = 31;
  const auto data = datagen::generate(cfg);
  REQUIRE_NOTHROW(obrien_test(data, 0.05));
  const auto outcome =
      permutation_test(data, PhiKind::finkelstein_schoenfeld, 0.05, 199, 5);
  REQUIRE(*outcome.p_value >= 0.0);
  REQUIRE(*outcome.p_value <= 1.0);
  REQUIRE(outcome.meta.at("survival") == "gehan-pairwise");
}

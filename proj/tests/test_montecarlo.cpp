#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hetvar/errors.hpp"
#include "hetvar/montecarlo.hpp"

using namespace hetvar;
using namespace hetvar::mc;

TEST_CASE("single replication tables are 0/100 and bitwise reproducible") {
  ExperimentConfig cfg;
  cfg.N = 1;
  cfg.T_list = {50};
  cfg.m_list = {5};
  cfg.tests = {"LB_S", "LB_ALS"};
  cfg.kernel.grid_points = 20;
  RejectionTable t1 = run_size(cfg);
  RejectionTable t2 = run_size(cfg);
  CHECK(t1.to_csv() == t2.to_csv());
  for (int r = 0; r < t1.cells.rows(); ++r) {
    for (int c = 0; c < t1.cells.cols(); ++c) {
      const double v = t1.cells(r, c);
      CHECK((v == 0.0 || v == 100.0));
    }
  }
}

TEST_CASE("worker count does not change the table bytes") {
  ExperimentConfig cfg;
  cfg.N = 40;
  cfg.T_list = {50};
  cfg.m_list = {5};
  cfg.tests = {"LB_S", "LB_ALS", "LBmod_ALS"};
  cfg.kernel.grid_points = 20;
  cfg.vol = VolKind::Break;
  cfg.workers = 1;
  RejectionTable serial = run_size(cfg);
  cfg.workers = 3;
  RejectionTable parallel = run_size(cfg);
  CHECK(serial.to_csv() == parallel.to_csv());
}

TEST_CASE("iid size lands near the nominal level") {
  ExperimentConfig cfg;
  cfg.N = 150;
  cfg.T_list = {200};
  cfg.m_list = {5};
  cfg.tests = {"LB_S", "LB_ALS"};
  cfg.kernel.grid_points = 40;
  cfg.workers = 2;
  RejectionTable t = run_size(cfg);
  const double als = t.cell("LB_ALS", 200, 5);
  CHECK(als >= 0.5);
  CHECK(als <= 12.0);
}

TEST_CASE("break volatility wrecks the naive test but not the ALS test") {
  ExperimentConfig cfg;
  cfg.N = 150;
  cfg.T_list = {200};
  cfg.m_list = {5};
  cfg.vol = VolKind::Break;
  cfg.tests = {"LB_S", "LB_ALS"};
  cfg.kernel.grid_points = 40;
  cfg.workers = 2;
  RejectionTable t = run_size(cfg);
  CHECK(t.cell("LB_S", 200, 5) >= 25.0);
  CHECK(t.cell("LB_ALS", 200, 5) <= 12.0);
}

TEST_CASE("power study validation and output") {
  ExperimentConfig null_cfg;
  CHECK_THROWS_AS(run_power(null_cfg), InvalidInput);

  ExperimentConfig size_cfg;
  size_cfg.a = -0.3;
  CHECK_THROWS_AS(run_size(size_cfg), InvalidInput);

  ExperimentConfig cfg;
  cfg.a = -0.3;
  cfg.N = 100;
  cfg.T_list = {300};
  cfg.m_list = {10};
  cfg.vol = VolKind::Break;
  cfg.tests = {"LB_ALS"};
  cfg.kernel.grid_points = 40;
  cfg.workers = 2;
  RejectionTable t = run_power(cfg);
  CHECK(t.cell("LB_ALS", 300, 10) >= 30.0);
}

TEST_CASE("weight summary reproduces the table 4 pattern") {
  ExperimentConfig cfg = study_preset(4);
  cfg.N = 100;
  cfg.kernel.grid_points = 40;
  cfg.workers = 2;
  WeightSummary s = weight_summary(cfg);
  REQUIRE(s.mean.cols() == 20);
  // ALS row: indices 5..20 exactly one with zero spread
  for (int i = 4; i < 20; ++i) {
    CHECK(s.mean(1, i) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(s.sd(1, i) <= 1e-6);
  }
  CHECK(s.mean(1, 0) <= 0.10);
  CHECK(s.mean(0, 0) <= 0.10);
  // ALS weight spread no larger than OLS for the first four indices
  for (int i = 0; i < 4; ++i) {
    CHECK(s.sd(1, i) <= s.sd(0, i) + 0.01);
  }
  CHECK(s.failures == 0);
}

TEST_CASE("replication failures are counted, not dropped") {
  ExperimentConfig cfg;
  cfg.N = 5;
  cfg.T_list = {8};
  cfg.m_list = {10};  // m >= T: every replication fails
  cfg.tests = {"LB_S"};
  RejectionTable t = run_size(cfg);
  CHECK(t.failures == 5);
  CHECK(t.cells(0, 0) == 0.0);
}

TEST_CASE("experiment config JSON round-trip") {
  ExperimentConfig cfg = study_preset(6);
  cfg.N = 123;
  cfg.seed_root = 999;
  cfg.workers = 4;
  cfg.kernel.grid_points = 55;
  ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
  CHECK(back.dgp == cfg.dgp);
  CHECK(back.vol == cfg.vol);
  CHECK(back.N == cfg.N);
  CHECK(back.fit_p == cfg.fit_p);
  CHECK(back.T_list == cfg.T_list);
  CHECK(back.m_list == cfg.m_list);
  CHECK(back.seed_root == cfg.seed_root);
  CHECK(back.workers == cfg.workers);
  CHECK(back.kernel.grid_points == cfg.kernel.grid_points);
}

TEST_CASE("built-in presets match the study grids") {
  ExperimentConfig t1 = study_preset(1);
  CHECK(t1.vol == VolKind::Iid);
  CHECK(t1.T_list == std::vector<int>{50, 100, 200});
  CHECK(t1.m_list == std::vector<int>{5, 15});
  CHECK(t1.N == 1000);
  ExperimentConfig t4 = study_preset(4);
  CHECK(t4.T_list == std::vector<int>{200});
  CHECK(t4.m_list == std::vector<int>{5});
  ExperimentConfig t5 = study_preset(5);
  CHECK(t5.a == -0.3);
  CHECK(t5.m_list == std::vector<int>{10});
  CHECK_THROWS_AS(study_preset(12), InvalidInput);
}

#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "evfleet/rng.hpp"
#include "evfleet/vfa.hpp"

using namespace evfleet;

namespace {

struct Fixture {
  ZoneGrid grid;
  std::shared_ptr<AggregationTree> tree;

  explicit Fixture(int size = 8, int levels = 2)
      : grid(ZoneGrid::full(size, size, 0.5)),
        tree(std::make_shared<AggregationTree>(grid, levels)) {}

  ValueTable table(int horizon = 20, int battery_levels = 8, bool monotone = true,
                   StepsizeRule alpha = {}) const {
    VfaConfig cfg;
    cfg.horizon = horizon;
    cfg.battery_levels = battery_levels;
    cfg.alpha = alpha;
    cfg.monotone = monotone;
    return ValueTable(tree, cfg);
  }
};

StepsizeRule constant(double a) { return {StepsizeRule::Kind::Constant, a}; }

}  // namespace

TEST_CASE("fresh table queries zero everywhere") {
  Fixture f;
  ValueTable table = f.table();
  CHECK(table.query(0, {0, 0}) == 0.0);
  CHECK(table.query(10, {17, 5}) == 0.0);
  CHECK(table.query(20, {3, 3}) == 0.0);  // horizon is terminal
  for (double w : table.weights(4, {9, 2})) CHECK(w == 0.0);
}

TEST_CASE("single observation with unit stepsize lands exactly") {
  Fixture f;
  ValueTable table = f.table();  // harmonic: alpha_1 = 1
  table.update(3, {10, 4}, 10.0);
  CHECK(table.query(3, {10, 4}) == doctest::Approx(10.0));
  auto w = table.weights(3, {10, 4});
  double sum = 0.0;
  for (double x : w) sum += x;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("first-update statistics follow the recursions") {
  Fixture f;
  ValueTable table = f.table();
  table.update(0, {0, 0}, 8.0);  // eta = 0.1, alpha_1 = 1
  const CellStats* c = table.cell(0, 0, f.tree->area_of(0, 0), 0);
  REQUIRE(c != nullptr);
  CHECK(c->value == doctest::Approx(8.0));
  CHECK(c->bias == doctest::Approx(0.8));        // 0.1 * (8 - 0)
  CHECK(c->total_var == doctest::Approx(6.4));   // 0.1 * 64
  CHECK(c->lambda == doctest::Approx(1.0));      // alpha^2
  CHECK(c->n_obs == 1);
  // s^2 = (6.4 - 0.64) / (1 + 1) = 2.88; sigma^2 = lambda * s^2
}

TEST_CASE("constant stepsize smoothing arithmetic") {
  Fixture f;
  ValueTable table = f.table(20, 8, true, constant(0.5));
  table.update(2, {5, 3}, 10.0);
  table.update(2, {5, 3}, 6.0);
  // (0.5*0 + 0.5*10) = 5, then (0.5*5 + 0.5*6) = 5.5
  const CellStats* c = table.cell(2, 0, f.tree->area_of(0, 5), 3);
  CHECK(c->value == doctest::Approx(5.5));
}

TEST_CASE("zero stepsize leaves values fixed but counts observations") {
  Fixture f;
  ValueTable table = f.table(20, 8, false, constant(0.0));
  table.update(1, {4, 4}, 42.0);
  const CellStats* c = table.cell(1, 0, f.tree->area_of(0, 4), 4);
  CHECK(c->value == 0.0);
  CHECK(c->n_obs == 1);
  CHECK(c->bias != 0.0);
}

TEST_CASE("unbiased passthrough with eta = 1 and alpha = 1") {
  Fixture f;
  VfaConfig cfg;
  cfg.horizon = 20;
  cfg.battery_levels = 8;
  cfg.alpha = constant(1.0);
  cfg.eta = 1.0;
  ValueTable table(f.tree, cfg);
  for (double v : {3.0, -1.0, 7.5, 2.25}) {
    table.update(5, {9, 2}, v);
    CHECK(table.cell(5, 0, f.tree->area_of(0, 9), 2)->value == doctest::Approx(v));
  }
}

TEST_CASE("equal-MSE levels average; weights split evenly") {
  Fixture f;
  ValueTable table = f.table();
  int a0 = f.tree->area_of(0, 0);
  int a1 = f.tree->area_of(1, 0);
  // level 0: value 10, sigma^2 = 104, no aggregation bias
  table.set_cell_for_test(4, 0, a0, 2, {10.0, 0.0, 208.0, 1.0, 1});
  // level 1: value 20, sigma^2 = 4, bias^2 = 100 -> same MSE
  table.set_cell_for_test(4, 1, a1, 2, {20.0, 0.0, 8.0, 1.0, 1});

  auto w = table.weights(4, {0, 2});
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(table.query(4, {0, 2}) == doctest::Approx(15.0));
}

TEST_CASE("weight mass shifts to the disaggregate level as its variance dies") {
  Fixture f;
  ValueTable table = f.table(20, 8, false, constant(0.2));
  CarAttribute probe{0, 3};
  CarAttribute sibling{1, 3};  // same level-1 area, different zone
  // Biased observations through the sibling zone inflate the aggregate level.
  for (int i = 0; i < 200; ++i) {
    table.update(4, probe, 10.0);
    table.update(4, sibling, 30.0);
  }
  auto w = table.weights(4, probe);
  CHECK(w[0] > 0.9);
  CHECK(table.query(4, probe) == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("unvisited cells fall back to coarser levels") {
  Fixture f;
  ValueTable table = f.table();
  table.update(6, {0, 5}, 12.0);  // zone 0
  // zone 1 shares the level-1 area with zone 0 but was never visited
  CHECK(table.query(6, {1, 5}) == doctest::Approx(12.0));
  auto w = table.weights(6, {1, 5});
  CHECK(w[0] == 0.0);
  CHECK(w[1] + w[2] == doctest::Approx(1.0));
}

TEST_CASE("battery projection vector examples") {
  Fixture f;
  int a0 = f.tree->area_of(0, 12);
  auto fill = [&](ValueTable& table, std::initializer_list<double> values) {
    int l = 0;
    for (double v : values) table.set_cell_for_test(7, 0, a0, l++, {v, 0, 0, 1.0, 1});
  };
  auto column = [&](const ValueTable& table, int n) {
    std::vector<double> out;
    for (int l = 0; l < n; ++l) out.push_back(table.cell(7, 0, a0, l)->value);
    return out;
  };

  ValueTable t1 = f.table(20, 4);
  fill(t1, {1, 2, 3, 4});
  t1.project_battery(7, 12, 1, 5.0);
  CHECK(column(t1, 4) == std::vector<double>{1, 5, 5, 5});

  ValueTable t2 = f.table(20, 4);
  fill(t2, {1, 2, 3, 4});
  t2.project_battery(7, 12, 2, 0.0);
  CHECK(column(t2, 4) == std::vector<double>{0, 0, 0, 4});

  ValueTable t3 = f.table(20, 4);
  fill(t3, {1, 2, 3, 4});
  t3.project_battery(7, 12, 2, 3.0);  // already consistent
  CHECK(column(t3, 4) == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("time projection vector examples") {
  Fixture f;
  int a0 = f.tree->area_of(0, 3);
  ValueTable table = f.table(4, 4);
  double series[] = {4, 3, 2, 1};
  for (int t = 0; t < 4; ++t) table.set_cell_for_test(t, 0, a0, 1, {series[t], 0, 0, 1.0, 1});
  table.project_time(3, 1, 2, 5.0);
  std::vector<double> out;
  for (int t = 0; t < 4; ++t) out.push_back(table.cell(t, 0, a0, 1)->value);
  CHECK(out == std::vector<double>{5, 5, 5, 1});

  // anchor at t=0 below everything: only later epochs clamp down
  ValueTable t2 = f.table(4, 4);
  for (int t = 0; t < 4; ++t) t2.set_cell_for_test(t, 0, a0, 1, {series[t], 0, 0, 1.0, 1});
  t2.project_time(3, 1, 0, 1.5);
  std::vector<double> out2;
  for (int t = 0; t < 4; ++t) out2.push_back(t2.cell(t, 0, a0, 1)->value);
  CHECK(out2 == std::vector<double>{1.5, 1.5, 1.5, 1});
}

TEST_CASE("projections are idempotent") {
  Fixture f;
  Rng rng(31);
  ValueTable table = f.table(12, 6);
  int zone = 9;
  int a0 = f.tree->area_of(0, zone);
  for (int t = 0; t < 12; ++t)
    for (int l = 0; l < 6; ++l)
      table.set_cell_for_test(t, 0, a0, l, {rng.next_uniform(-5, 5), 0, 0, 1.0, 1});

  for (int probe = 0; probe < 1000; ++probe) {
    int t = static_cast<int>(rng.next_below(12));
    int l = static_cast<int>(rng.next_below(6));
    double h = rng.next_uniform(-5, 5);
    if (rng.next_bernoulli(0.5)) {
      table.project_battery(t, zone, l, h);
      auto snapshot = [&]() {
        std::vector<double> v;
        for (int ll = 0; ll < 6; ++ll) v.push_back(table.cell(t, 0, a0, ll)->value);
        return v;
      };
      auto once = snapshot();
      table.project_battery(t, zone, l, h);
      CHECK(snapshot() == once);
    } else {
      table.project_time(zone, l, t, h);
      auto snapshot = [&]() {
        std::vector<double> v;
        for (int tt = 0; tt < 12; ++tt) v.push_back(table.cell(tt, 0, a0, l)->value);
        return v;
      };
      auto once = snapshot();
      table.project_time(zone, l, t, h);
      CHECK(snapshot() == once);
    }
  }
}

TEST_CASE("monotone invariants hold under random update streams") {
  Fixture f(6, 2);
  ValueTable table = f.table(15, 6, true);
  Rng rng(4242);
  for (int i = 0; i < 3000; ++i) {
    CarAttribute a{f.grid.valid_zones()[rng.next_below(36)], static_cast<int>(rng.next_below(6))};
    table.update(static_cast<int>(rng.next_below(15)), a, rng.next_uniform(-20.0, 80.0));
  }
  for (ZoneId z : f.grid.valid_zones()) {
    int a0 = f.tree->area_of(0, z);
    for (int t = 0; t < 15; ++t) {
      double prev = -1e300;
      for (int l = 0; l < 6; ++l) {
        const CellStats* c = table.cell(t, 0, a0, l);
        if (!c || c->n_obs == 0) continue;
        CHECK(c->value >= prev - 1e-12);  // nondecreasing in battery
        prev = c->value;
      }
    }
    for (int l = 0; l < 6; ++l) {
      double prev = 1e300;
      for (int t = 0; t < 15; ++t) {
        const CellStats* c = table.cell(t, 0, a0, l);
        if (!c || c->n_obs == 0) continue;
        CHECK(c->value <= prev + 1e-12);  // nonincreasing in time
        prev = c->value;
      }
    }
  }
}

TEST_CASE("lambda recursion stays in (0, 1]; variance clamp holds") {
  Fixture f;
  ValueTable table = f.table(10, 4, false, constant(0.3));
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    table.update(2, {7, 1}, rng.next_uniform(-1, 1));
    const CellStats* c = table.cell(2, 0, f.tree->area_of(0, 7), 1);
    CHECK(c->lambda > 0.0);
    CHECK(c->lambda <= 1.0);
    CHECK(c->total_var - c->bias * c->bias >= -1e-9);
  }
}

TEST_CASE("snapshot round-trips bitwise and rejects corruption") {
  namespace fs = std::filesystem;
  Fixture f;
  ValueTable table = f.table();
  Rng rng(606);
  for (int i = 0; i < 500; ++i)
    table.update(static_cast<int>(rng.next_below(20)),
                 {f.grid.valid_zones()[rng.next_below(64)], static_cast<int>(rng.next_below(8))},
                 rng.next_uniform(-10, 50));

  fs::path path = fs::temp_directory_path() / "evfleet_vfa_test.evvt";
  table.save(path.string());
  ValueTable loaded = ValueTable::load(path.string(), f.tree);
  for (int i = 0; i < 1000; ++i) {
    int t = static_cast<int>(rng.next_below(20));
    CarAttribute a{f.grid.valid_zones()[rng.next_below(64)], static_cast<int>(rng.next_below(8))};
    CHECK(table.query(t, a) == loaded.query(t, a));  // bitwise equal
  }

  // empty table round-trip
  ValueTable empty = f.table();
  fs::path empty_path = fs::temp_directory_path() / "evfleet_vfa_empty.evvt";
  empty.save(empty_path.string());
  ValueTable empty_loaded = ValueTable::load(empty_path.string(), f.tree);
  CHECK(empty_loaded.query(3, {5, 5}) == 0.0);
  CHECK(empty_loaded.total_observations() == 0);

  // corrupt: truncate the file
  {
    std::FILE* fp = std::fopen(path.string().c_str(), "rb+");
    REQUIRE(fp);
    std::fseek(fp, 0, SEEK_END);
    long size = std::ftell(fp);
    std::fclose(fp);
    fs::resize_file(path, static_cast<uintmax_t>(size / 2));
  }
  CHECK_THROWS(ValueTable::load(path.string(), f.tree));

  fs::remove(path);
  fs::remove(empty_path);
}

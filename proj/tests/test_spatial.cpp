#include <doctest.h>

#include <cmath>
#include <sstream>

#include "evfleet/rng.hpp"
#include "evfleet/spatial.hpp"

using namespace evfleet;

TEST_CASE("grid construction and valid-zone counts") {
  CHECK(ZoneGrid::full(1, 1, 0.5).valid_count() == 1);
  CHECK(ZoneGrid::full(4, 4, 0.5).valid_count() == 16);
  CHECK_THROWS_AS(ZoneGrid::full(0, 4, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ZoneGrid::full(4, 4, 0.0), std::invalid_argument);

  std::vector<uint8_t> mask(12, 1);
  mask[3] = 0;
  mask[7] = 0;
  ZoneGrid grid(4, 3, 0.5, mask);
  CHECK(grid.valid_count() == 10);
  CHECK_FALSE(grid.valid(3));
  CHECK(grid.valid(0));
}

TEST_CASE("zone ids round-trip through coordinates") {
  ZoneGrid grid = ZoneGrid::full(7, 5, 0.5);
  for (ZoneId z : grid.valid_zones()) {
    ZoneXY p = grid.xy(z);
    CHECK(grid.id(p.x, p.y) == z);
  }
}

TEST_CASE("euclidean center distance") {
  ZoneGrid grid = ZoneGrid::full(5, 5, 0.5);
  CHECK(grid.distance(0, 0) == doctest::Approx(0.0));
  CHECK(grid.distance(grid.id(0, 0), grid.id(1, 0)) == doctest::Approx(0.5));
  // cells (0,0) and (3,4): 0.5 * sqrt(9 + 16)
  CHECK(grid.distance(grid.id(0, 0), grid.id(3, 4)) == doctest::Approx(2.5));
  CHECK_THROWS_AS(grid.distance(0, 999), std::invalid_argument);
}

TEST_CASE("distance is a metric") {
  ZoneGrid grid = ZoneGrid::full(9, 9, 0.5);
  Rng rng(12345);
  for (int i = 0; i < 200; ++i) {
    ZoneId a = static_cast<ZoneId>(rng.next_below(81));
    ZoneId b = static_cast<ZoneId>(rng.next_below(81));
    ZoneId c = static_cast<ZoneId>(rng.next_below(81));
    CHECK(grid.distance(a, b) == doctest::Approx(grid.distance(b, a)));
    CHECK(grid.distance(a, b) >= 0.0);
    CHECK((grid.distance(a, b) == 0.0) == (a == b));
    CHECK(grid.distance(a, c) <= grid.distance(a, b) + grid.distance(b, c) + 1e-12);
  }
}

TEST_CASE("travel time rounds up to whole epochs") {
  CHECK(travel_epochs(0.0, 30.0, 15.0) == 0);
  CHECK(travel_epochs(24.8, 30.0, 15.0) == 4);  // 49.6 min
  CHECK(travel_epochs(6.0, 30.0, 15.0) == 1);   // 12 min
  CHECK(travel_epochs(7.5, 30.0, 15.0) == 1);   // exactly one epoch
  CHECK_THROWS_AS(travel_epochs(1.0, 0.0, 15.0), std::invalid_argument);
}

TEST_CASE("aggregation tree on full grids") {
  ZoneGrid grid = ZoneGrid::full(4, 4, 0.5);
  AggregationTree tree(grid, 2);
  CHECK(tree.levels() == 3);
  CHECK(tree.area_count(0) == 16);
  CHECK(tree.area_count(1) == 4);
  CHECK(tree.area_count(2) == 1);

  // level 1 groups 2x2 blocks of 4 zones
  std::vector<int> sizes(4, 0);
  for (ZoneId z : grid.valid_zones()) sizes[static_cast<size_t>(tree.area_of(1, z))] += 1;
  for (int s : sizes) CHECK(s == 4);
}

TEST_CASE("aggregation tree invariants on random masks") {
  Rng rng(777);
  for (int trial = 0; trial < 20; ++trial) {
    int w = 3 + static_cast<int>(rng.next_below(14));
    int h = 3 + static_cast<int>(rng.next_below(14));
    std::vector<uint8_t> mask(static_cast<size_t>(w * h));
    for (auto& m : mask) m = rng.next_double() < 0.7 ? 1 : 0;
    bool any = false;
    for (auto m : mask) any |= m != 0;
    if (!any) mask[0] = 1;
    ZoneGrid grid(w, h, 0.5, mask);
    AggregationTree tree(grid, 4);

    for (int g = 0; g + 1 < tree.levels(); ++g) {
      CHECK(tree.area_count(g) >= tree.area_count(g + 1));  // non-increasing
      // partition: every valid zone has exactly one area, ids dense
      std::vector<int> seen(static_cast<size_t>(tree.area_count(g)), 0);
      for (ZoneId z : grid.valid_zones()) {
        int a = tree.area_of(g, z);
        REQUIRE(a >= 0);
        REQUIRE(a < tree.area_count(g));
        seen[static_cast<size_t>(a)] += 1;
      }
      for (int count : seen) CHECK(count >= 1);
      // nesting: sharing a level-g area implies sharing every coarser area
      for (ZoneId z1 : grid.valid_zones())
        for (ZoneId z2 : grid.valid_zones())
          if (tree.area_of(g, z1) == tree.area_of(g, z2))
            CHECK(tree.area_of(g + 1, z1) == tree.area_of(g + 1, z2));
    }
    CHECK(tree.area_count(0) == grid.valid_count());  // level 0 is the identity
  }
}

TEST_CASE("mask files parse and reject ragged rows") {
  std::istringstream good("1101\n0111\n");
  int w = 0, h = 0;
  auto mask = load_mask(good, w, h);
  CHECK(w == 4);
  CHECK(h == 2);
  CHECK(mask[0] == 1);
  CHECK(mask[2] == 0);

  std::istringstream ragged("111\n11\n");
  CHECK_THROWS(load_mask(ragged, w, h));
  std::istringstream junk("11\n1x\n");
  CHECK_THROWS(load_mask(junk, w, h));
  std::istringstream empty("");
  CHECK_THROWS(load_mask(empty, w, h));
}

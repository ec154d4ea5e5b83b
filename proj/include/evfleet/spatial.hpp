#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace evfleet {

using ZoneId = int32_t;

struct ZoneXY {
  int x;
  int y;
};

// Square-cell grid over a rectangular region. Zone ids are dense cell indices
// in [0, width*height); cells can be masked out (water, out of area) and only
// unmasked cells count as valid zones.
class ZoneGrid {
 public:
  ZoneGrid(int width, int height, double zone_width_miles, std::vector<uint8_t> mask);

  static ZoneGrid full(int width, int height, double zone_width_miles);

  int width() const { return width_; }
  int height() const { return height_; }
  double zone_width_miles() const { return zone_width_; }
  int cell_count() const { return width_ * height_; }

  bool valid(ZoneId z) const {
    return z >= 0 && z < cell_count() && mask_[static_cast<size_t>(z)] != 0;
  }
  int valid_count() const { return static_cast<int>(valid_zones_.size()); }
  const std::vector<ZoneId>& valid_zones() const { return valid_zones_; }

  ZoneXY xy(ZoneId z) const { return {static_cast<int>(z) % width_, static_cast<int>(z) / width_}; }
  ZoneId id(int x, int y) const { return static_cast<ZoneId>(y * width_ + x); }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

  // Euclidean distance between cell centers, in miles.
  double distance(ZoneId a, ZoneId b) const;

  // Valid 8-neighborhood, row-major order.
  std::vector<ZoneId> neighbors8(ZoneId z) const;

  void require_valid(ZoneId z) const;

 private:
  int width_;
  int height_;
  double zone_width_;
  std::vector<uint8_t> mask_;
  std::vector<ZoneId> valid_zones_;
};

double travel_minutes(double distance_miles, double speed_mph);

// Whole decision epochs, rounded up; 0 for zero distance.
int travel_epochs(double distance_miles, double speed_mph, double epoch_minutes);

// Spatial aggregation hierarchy: level g groups 2^g x 2^g blocks of cells into
// an area; areas with no valid zone are dropped and ids re-densified. Level 0
// is the identity over valid zones.
class AggregationTree {
 public:
  AggregationTree(const ZoneGrid& grid, int max_level);

  int levels() const { return static_cast<int>(counts_.size()); }  // G + 1
  int area_count(int level) const { return counts_[static_cast<size_t>(level)]; }
  int area_of(int level, ZoneId z) const {
    return area_of_[static_cast<size_t>(level)][static_cast<size_t>(z)];
  }

 private:
  std::vector<std::vector<int32_t>> area_of_;  // [level][cell] -> dense area id, -1 invalid
  std::vector<int> counts_;
};

// Mask file: one '1'/'0' line per row, row 0 on top. Ragged rows are rejected.
std::vector<uint8_t> load_mask(std::istream& in, int& width_out, int& height_out);
ZoneGrid load_grid_from_mask_file(const std::string& path, double zone_width_miles);

}  // namespace evfleet

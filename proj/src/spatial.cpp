#include "evfleet/spatial.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace evfleet {

ZoneGrid::ZoneGrid(int width, int height, double zone_width_miles, std::vector<uint8_t> mask)
    : width_(width), height_(height), zone_width_(zone_width_miles), mask_(std::move(mask)) {
  if (width < 1 || height < 1) throw std::invalid_argument("ZoneGrid: zero dimension");
  if (zone_width_miles <= 0.0) throw std::invalid_argument("ZoneGrid: zone width must be > 0");
  if (mask_.size() != static_cast<size_t>(width) * static_cast<size_t>(height))
    throw std::invalid_argument("ZoneGrid: mask size does not match dimensions");
  valid_zones_.reserve(mask_.size());
  for (ZoneId z = 0; z < cell_count(); ++z)
    if (mask_[static_cast<size_t>(z)]) valid_zones_.push_back(z);
}

ZoneGrid ZoneGrid::full(int width, int height, double zone_width_miles) {
  if (width < 1 || height < 1) throw std::invalid_argument("ZoneGrid: zero dimension");
  return ZoneGrid(width, height, zone_width_miles,
                  std::vector<uint8_t>(static_cast<size_t>(width) * static_cast<size_t>(height), 1));
}

void ZoneGrid::require_valid(ZoneId z) const {
  if (!valid(z)) throw std::invalid_argument("invalid zone id " + std::to_string(z));
}

double ZoneGrid::distance(ZoneId a, ZoneId b) const {
  require_valid(a);
  require_valid(b);
  ZoneXY pa = xy(a), pb = xy(b);
  double dx = static_cast<double>(pa.x - pb.x);
  double dy = static_cast<double>(pa.y - pb.y);
  return zone_width_ * std::sqrt(dx * dx + dy * dy);
}

std::vector<ZoneId> ZoneGrid::neighbors8(ZoneId z) const {
  require_valid(z);
  ZoneXY p = xy(z);
  std::vector<ZoneId> out;
  out.reserve(8);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      int nx = p.x + dx, ny = p.y + dy;
      if (in_bounds(nx, ny) && valid(id(nx, ny))) out.push_back(id(nx, ny));
    }
  return out;
}

double travel_minutes(double distance_miles, double speed_mph) {
  if (speed_mph <= 0.0) throw std::invalid_argument("travel_minutes: speed must be > 0");
  if (distance_miles < 0.0) throw std::invalid_argument("travel_minutes: negative distance");
  return distance_miles / speed_mph * 60.0;
}

int travel_epochs(double distance_miles, double speed_mph, double epoch_minutes) {
  double minutes = travel_minutes(distance_miles, speed_mph);
  if (minutes <= 0.0) return 0;
  return static_cast<int>(std::ceil(minutes / epoch_minutes - 1e-9));
}

AggregationTree::AggregationTree(const ZoneGrid& grid, int max_level) {
  if (max_level < 0) throw std::invalid_argument("AggregationTree: max_level must be >= 0");
  area_of_.resize(static_cast<size_t>(max_level) + 1);
  counts_.resize(static_cast<size_t>(max_level) + 1);
  for (int g = 0; g <= max_level; ++g) {
    auto& map = area_of_[static_cast<size_t>(g)];
    map.assign(static_cast<size_t>(grid.cell_count()), -1);
    // Re-densify over blocks that contain at least one valid zone, scanning
    // valid zones in id order so area ids are stable.
    int blocks_wide = (grid.width() + (1 << g) - 1) >> g;
    std::unordered_map<int, int32_t> dense;
    int32_t next = 0;
    for (ZoneId z : grid.valid_zones()) {
      ZoneXY p = grid.xy(z);
      int block = (p.y >> g) * blocks_wide + (p.x >> g);
      auto [it, inserted] = dense.try_emplace(block, next);
      if (inserted) ++next;
      map[static_cast<size_t>(z)] = it->second;
    }
    counts_[static_cast<size_t>(g)] = next;
  }
}

std::vector<uint8_t> load_mask(std::istream& in, int& width_out, int& height_out) {
  std::vector<uint8_t> mask;
  std::string line;
  int width = -1;
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (width < 0) width = static_cast<int>(line.size());
    if (static_cast<int>(line.size()) != width)
      throw std::runtime_error("mask: ragged row " + std::to_string(rows));
    for (char c : line) {
      if (c == '1')
        mask.push_back(1);
      else if (c == '0')
        mask.push_back(0);
      else
        throw std::runtime_error("mask: unexpected character in row " + std::to_string(rows));
    }
    ++rows;
  }
  if (rows == 0) throw std::runtime_error("mask: empty file");
  width_out = width;
  height_out = rows;
  return mask;
}

ZoneGrid load_grid_from_mask_file(const std::string& path, double zone_width_miles) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("mask: cannot open " + path);
  int w = 0, h = 0;
  auto mask = load_mask(in, w, h);
  return ZoneGrid(w, h, zone_width_miles, std::move(mask));
}

}  // namespace evfleet

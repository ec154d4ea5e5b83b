#include "evfleet/vfa.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace evfleet {

namespace {
constexpr char kMagic[4] = {'E', 'V', 'V', 'T'};
constexpr uint32_t kVersion = 1;
}  // namespace

ValueTable::ValueTable(std::shared_ptr<const AggregationTree> tree, VfaConfig cfg)
    : tree_(std::move(tree)), cfg_(cfg) {
  if (!tree_) throw std::invalid_argument("ValueTable: aggregation tree required");
  if (cfg_.horizon < 1 || cfg_.battery_levels < 1)
    throw std::invalid_argument("ValueTable: bad dimensions");
  store_.resize(static_cast<size_t>(tree_->levels()));
  for (int g = 0; g < tree_->levels(); ++g)
    store_[static_cast<size_t>(g)].resize(static_cast<size_t>(tree_->area_count(g)));
}

CellStats* ValueTable::cell_mut(int level, int area, int t, int battery, bool create) {
  auto& grid = store_[static_cast<size_t>(level)][static_cast<size_t>(area)];
  if (!grid) {
    if (!create) return nullptr;
    grid = std::make_unique<AreaGrid>();
    grid->cells.resize(static_cast<size_t>(cfg_.horizon + 1) *
                       static_cast<size_t>(cfg_.battery_levels));
  }
  return &grid->cells[idx(t, battery)];
}

const CellStats* ValueTable::cell(int t, int level, int area, int battery) const {
  const auto& grid = store_[static_cast<size_t>(level)][static_cast<size_t>(area)];
  if (!grid) return nullptr;
  return &grid->cells[idx(t, battery)];
}

double ValueTable::sigma2_plus_bias2(const CellStats& s, const CellStats* base) const {
  double s2 = (s.total_var - s.bias * s.bias) / (1.0 + s.lambda);
  if (s2 < 0.0) s2 = 0.0;
  double sigma2 = s.lambda * s2;
  double mu = base ? (s.value - base->value) : 0.0;
  return sigma2 + mu * mu;
}

std::vector<double> ValueTable::weights(int t, CarAttribute a) const {
  std::vector<double> w(static_cast<size_t>(levels()), 0.0);
  if (t < 0 || t >= cfg_.horizon) return w;
  const CellStats* base = nullptr;  // level-0 estimate, anchor for aggregation bias
  {
    int area0 = tree_->area_of(0, a.zone);
    const CellStats* c0 = cell(t, 0, area0, a.battery);
    if (c0 && c0->n_obs > 0) base = c0;
  }
  double total = 0.0;
  bool any_degenerate = false;
  for (int g = 0; g < levels(); ++g) {
    int area = tree_->area_of(g, a.zone);
    const CellStats* c = cell(t, g, area, a.battery);
    if (!c || c->n_obs == 0) continue;
    double mse = sigma2_plus_bias2(*c, g == 0 ? nullptr : base);
    if (mse < 1e-30) {
      any_degenerate = true;
      w[static_cast<size_t>(g)] = -1.0;  // marker: exactly-known estimate
      continue;
    }
    w[static_cast<size_t>(g)] = 1.0 / mse;
    total += 1.0 / mse;
  }
  if (any_degenerate) {
    // Zero estimated MSE dominates: split evenly among such levels.
    double count = 0.0;
    for (double& x : w) count += (x < 0.0) ? 1.0 : 0.0;
    for (double& x : w) x = (x < 0.0) ? 1.0 / count : 0.0;
    return w;
  }
  if (total > 0.0)
    for (double& x : w) x /= total;
  return w;
}

double ValueTable::query(int t, CarAttribute a) const {
  if (t < 0 || t >= cfg_.horizon) return 0.0;
  std::vector<double> w = weights(t, a);
  double v = 0.0;
  for (int g = 0; g < levels(); ++g) {
    if (w[static_cast<size_t>(g)] == 0.0) continue;
    const CellStats* c = cell(t, g, tree_->area_of(g, a.zone), a.battery);
    v += w[static_cast<size_t>(g)] * c->value;
  }
  return v;
}

void ValueTable::update(int t, CarAttribute a, double v_hat) {
  if (t < 0 || t >= cfg_.horizon) return;
  if (!std::isfinite(v_hat)) throw std::invalid_argument("ValueTable::update: non-finite value");
  for (int g = 0; g < levels(); ++g) {
    int area = tree_->area_of(g, a.zone);
    CellStats* c = cell_mut(g, area, t, a.battery, true);
    double prev = c->value;
    double eta = cfg_.eta;
    c->bias = (1.0 - eta) * c->bias + eta * (v_hat - prev);
    c->total_var = (1.0 - eta) * c->total_var + eta * (v_hat - prev) * (v_hat - prev);
    c->n_obs += 1;
    double alpha = cfg_.alpha.alpha(c->n_obs);
    c->value = (1.0 - alpha) * prev + alpha * v_hat;
    c->lambda = (c->n_obs == 1) ? alpha * alpha
                                : (1.0 - alpha) * (1.0 - alpha) * c->lambda + alpha * alpha;
  }
  ++total_obs_;
  if (!cfg_.monotone) return;

  // Joint order restoration around the new observation: every stored cell
  // that dominates the reference (no later, no less charge) is raised to at
  // least h, every dominated cell is lowered to at most h. Separate battery
  // and time sweeps cannot keep both orders at once.
  int area0 = tree_->area_of(0, a.zone);
  AreaGrid* grid = store_[0][static_cast<size_t>(area0)].get();
  double h = grid->cells[idx(t, a.battery)].value;
  for (int u = t; u >= 0; --u)
    for (int l = a.battery; l < cfg_.battery_levels; ++l) {
      if (u == t && l == a.battery) continue;
      CellStats& c = grid->cells[idx(u, l)];
      if (c.n_obs > 0 && c.value < h) c.value = h;
    }
  for (int u = t; u <= cfg_.horizon; ++u)
    for (int l = a.battery; l >= 0; --l) {
      if (u == t && l == a.battery) continue;
      CellStats& c = grid->cells[idx(u, l)];
      if (c.n_obs > 0 && c.value > h) c.value = h;
    }
}

void ValueTable::project_battery(int t, ZoneId zone, int battery, double h) {
  int area0 = tree_->area_of(0, zone);
  CellStats* ref = cell_mut(0, area0, t, battery, true);
  ref->value = h;
  AreaGrid* grid = store_[0][static_cast<size_t>(area0)].get();
  for (int l = battery + 1; l < cfg_.battery_levels; ++l) {
    CellStats& c = grid->cells[idx(t, l)];
    if (c.n_obs == 0) continue;
    if (c.value < h) c.value = h;
  }
  for (int l = battery - 1; l >= 0; --l) {
    CellStats& c = grid->cells[idx(t, l)];
    if (c.n_obs == 0) continue;
    if (c.value > h) c.value = h;
  }
}

void ValueTable::project_time(ZoneId zone, int battery, int t, double h) {
  int area0 = tree_->area_of(0, zone);
  CellStats* ref = cell_mut(0, area0, t, battery, true);
  ref->value = h;
  AreaGrid* grid = store_[0][static_cast<size_t>(area0)].get();
  for (int u = t - 1; u >= 0; --u) {  // earlier epochs are worth at least h
    CellStats& c = grid->cells[idx(u, battery)];
    if (c.n_obs == 0) continue;
    if (c.value < h) c.value = h;
  }
  for (int u = t + 1; u <= cfg_.horizon; ++u) {
    CellStats& c = grid->cells[idx(u, battery)];
    if (c.n_obs == 0) continue;
    if (c.value > h) c.value = h;
  }
}

void ValueTable::set_cell_for_test(int t, int level, int area, int battery,
                                   const CellStats& stats) {
  *cell_mut(level, area, t, battery, true) = stats;
}

void ValueTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("ValueTable::save: cannot open " + path);
  out.write(kMagic, 4);
  auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_u64 = [&](uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  put_u32(kVersion);
  put_u32(static_cast<uint32_t>(cfg_.horizon));
  put_u32(static_cast<uint32_t>(cfg_.battery_levels));
  put_u32(static_cast<uint32_t>(levels()));
  put_u64(static_cast<uint64_t>(total_obs_));
  for (int g = 0; g < levels(); ++g) {
    const auto& areas = store_[static_cast<size_t>(g)];
    uint32_t touched = 0;
    for (const auto& grid : areas) touched += grid ? 1 : 0;
    put_u32(static_cast<uint32_t>(areas.size()));
    put_u32(touched);
    for (uint32_t a = 0; a < areas.size(); ++a) {
      if (!areas[a]) continue;
      put_u32(a);
      out.write(reinterpret_cast<const char*>(areas[a]->cells.data()),
                static_cast<std::streamsize>(areas[a]->cells.size() * sizeof(CellStats)));
    }
  }
  if (!out) throw std::runtime_error("ValueTable::save: write failed");
}

ValueTable ValueTable::load(const std::string& path,
                            std::shared_ptr<const AggregationTree> tree) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ValueTable::load: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("ValueTable::load: bad magic");
  auto get_u32 = [&]() {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto get_u64 = [&]() {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  uint32_t version = get_u32();
  if (version != kVersion)
    throw std::runtime_error("ValueTable::load: unsupported version " + std::to_string(version));
  VfaConfig cfg;
  cfg.horizon = static_cast<int>(get_u32());
  cfg.battery_levels = static_cast<int>(get_u32());
  uint32_t levels = get_u32();
  uint64_t total = get_u64();
  ValueTable table(std::move(tree), cfg);
  if (static_cast<int>(levels) != table.levels())
    throw std::runtime_error("ValueTable::load: level count mismatch with aggregation tree");
  for (uint32_t g = 0; g < levels; ++g) {
    uint32_t areas = get_u32();
    uint32_t touched = get_u32();
    if (!in || static_cast<int>(areas) != table.tree_->area_count(static_cast<int>(g)))
      throw std::runtime_error("ValueTable::load: area count mismatch");
    for (uint32_t i = 0; i < touched; ++i) {
      uint32_t a = get_u32();
      if (!in || a >= areas) throw std::runtime_error("ValueTable::load: corrupt area index");
      auto grid = std::make_unique<AreaGrid>();
      grid->cells.resize(static_cast<size_t>(cfg.horizon + 1) *
                         static_cast<size_t>(cfg.battery_levels));
      in.read(reinterpret_cast<char*>(grid->cells.data()),
              static_cast<std::streamsize>(grid->cells.size() * sizeof(CellStats)));
      if (!in) throw std::runtime_error("ValueTable::load: truncated file");
      table.store_[g][a] = std::move(grid);
    }
  }
  table.total_obs_ = static_cast<int64_t>(total);
  return table;
}

void ValueTable::export_csv(std::ostream& out, const ZoneGrid& zones) const {
  out << "t,zone,battery,value";
  for (int g = 0; g < levels(); ++g) out << ",w" << g;
  out << "\n";
  for (ZoneId z : zones.valid_zones()) {
    int area0 = tree_->area_of(0, z);
    const auto& grid = store_[0][static_cast<size_t>(area0)];
    if (!grid) continue;
    for (int t = 0; t < cfg_.horizon; ++t)
      for (int l = 0; l < cfg_.battery_levels; ++l) {
        if (grid->cells[idx(t, l)].n_obs == 0) continue;
        CarAttribute a{z, l};
        out << t << "," << z << "," << l << "," << query(t, a);
        for (double w : weights(t, a)) out << "," << w;
        out << "\n";
      }
  }
}

}  // namespace evfleet

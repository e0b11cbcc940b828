#include "v2v/materials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <tuple>

#include "v2v/errors.hpp"
#include "v2v/geometry.hpp"

namespace v2v {

namespace {

// Index of the grid cell [i, i+1] that brackets `v`, plus the interpolation weight.
std::pair<std::size_t, double> bracket(const std::vector<double>& grid, double v) {
  if (grid.size() == 1 || v <= grid.front()) return {0, 0.0};
  if (v >= grid.back()) return {grid.size() - 2, 1.0};
  const auto it = std::upper_bound(grid.begin(), grid.end(), v);
  const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
  return {i, (v - grid[i]) / (grid[i + 1] - grid[i])};
}

}  // namespace

MaterialProfile::MaterialProfile(std::string id, std::vector<double> freq_ghz,
                                 std::vector<double> incidence_deg, std::vector<double> loss_db,
                                 double spread)
    : id_(std::move(id)),
      freq_ghz_(std::move(freq_ghz)),
      incidence_deg_(std::move(incidence_deg)),
      loss_db_(std::move(loss_db)),
      spread_(spread) {
  if (freq_ghz_.empty() || incidence_deg_.empty())
    throw ConfigError("material." + id_, "empty frequency or incidence grid");
  if (loss_db_.size() != freq_ghz_.size() * incidence_deg_.size())
    throw ConfigError("material." + id_, "loss table does not match grid size");
  if (!std::is_sorted(freq_ghz_.begin(), freq_ghz_.end()) ||
      !std::is_sorted(incidence_deg_.begin(), incidence_deg_.end()))
    throw ConfigError("material." + id_, "grid axes must be increasing");
  if (incidence_deg_.front() > 0.0 || incidence_deg_.back() < 85.0)
    throw ConfigError("material." + id_, "incidence grid must cover [0, 90) degrees");
  for (double l : loss_db_)
    if (!(l >= 0.0)) throw ConfigError("material." + id_, "reflection loss must be >= 0 dB");
  if (!(spread_ > 0.0)) throw ConfigError("material." + id_, "spread exponent must be positive");
}

double MaterialProfile::loss_db(double freq_ghz, double incidence_deg) const {
  const auto [fi, fw] = bracket(freq_ghz_, freq_ghz);
  const auto [ai, aw] = bracket(incidence_deg_, incidence_deg);
  const std::size_t fj = std::min(fi + 1, freq_ghz_.size() - 1);
  const std::size_t aj = std::min(ai + 1, incidence_deg_.size() - 1);
  const double lo = (1.0 - aw) * node(fi, ai) + aw * node(fi, aj);
  const double hi = (1.0 - aw) * node(fj, ai) + aw * node(fj, aj);
  return (1.0 - fw) * lo + fw * hi;
}

void MaterialRegistry::add(MaterialProfile profile) {
  const auto it = index_.find(profile.id());
  if (it != index_.end()) {
    profiles_[it->second] = std::move(profile);
    return;
  }
  index_.emplace(profile.id(), profiles_.size());
  profiles_.push_back(std::move(profile));
}

std::size_t MaterialRegistry::index_of(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw RegistryError("unknown material id '" + id + "'");
  return it->second;
}

MaterialRegistry MaterialRegistry::defaults() {
  // Loss at 300 GHz and 50 degrees incidence, frequency exponent, spread exponent.
  struct Seed {
    const char* id;
    double loss_300;
    double freq_exp;
    double spread;
  };
  static constexpr Seed kSeeds[] = {
      {"aluminum", 2.0, 0.1, 60.0}, {"steel", 2.0, 0.1, 50.0},    {"glass", 8.0, 0.5, 30.0},
      {"plastic", 14.0, 0.6, 12.0}, {"concrete", 7.0, 0.3, 15.0}, {"asphalt", 9.0, 0.3, 10.0},
  };
  const std::vector<double> freqs = {60, 79, 100, 150, 200, 300, 400, 500};
  std::vector<double> angles;
  for (int a = 0; a <= 85; a += 5) angles.push_back(a);

  MaterialRegistry reg;
  const double cos50 = std::cos(deg_to_rad(50.0));
  for (const Seed& s : kSeeds) {
    std::vector<double> table;
    table.reserve(freqs.size() * angles.size());
    for (double f : freqs) {
      const double at_f = s.loss_300 * std::pow(f / 300.0, s.freq_exp);
      for (double a : angles) {
        // Mild angle dependence: lossier near normal incidence, easing toward grazing.
        table.push_back(at_f * (1.0 + 0.3 * (std::cos(deg_to_rad(a)) - cos50)));
      }
    }
    reg.add(MaterialProfile(s.id, freqs, angles, std::move(table), s.spread));
  }
  return reg;
}

MaterialRegistry MaterialRegistry::from_csv(std::istream& in) {
  struct Rows {
    std::map<std::pair<double, double>, double> loss;
    std::set<double> freqs;
    std::set<double> angles;
    double spread = 0.0;
    bool spread_set = false;
  };
  std::map<std::string, Rows> by_material;
  std::vector<std::string> order;

  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "material,freq_ghz,incidence_deg,loss_db,spread")
        throw ConfigError("materials", "unexpected CSV header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string id;
    std::string cells[4];
    std::getline(ss, id, ',');
    for (auto& c : cells) std::getline(ss, c, ',');
    double v[4];
    try {
      for (int i = 0; i < 4; ++i) {
        std::size_t used = 0;
        v[i] = std::stod(cells[i], &used);
        if (used != cells[i].size()) throw std::invalid_argument("trailing characters");
      }
    } catch (const std::exception&) {
      throw ConfigError("materials:" + std::to_string(line_no), "malformed row '" + line + "'");
    }
    if (id.empty()) throw ConfigError("materials:" + std::to_string(line_no), "empty material id");
    if (!by_material.count(id)) order.push_back(id);
    Rows& r = by_material[id];
    if (!r.loss.emplace(std::make_pair(v[0], v[1]), v[2]).second)
      throw ConfigError("materials:" + std::to_string(line_no), "duplicate grid node for " + id);
    r.freqs.insert(v[0]);
    r.angles.insert(v[1]);
    if (r.spread_set && r.spread != v[3])
      throw ConfigError("materials:" + std::to_string(line_no), "inconsistent spread for " + id);
    r.spread = v[3];
    r.spread_set = true;
  }
  if (!header_seen) throw ConfigError("materials", "missing CSV header");

  MaterialRegistry reg;
  for (const std::string& id : order) {
    const Rows& r = by_material[id];
    std::vector<double> freqs(r.freqs.begin(), r.freqs.end());
    std::vector<double> angles(r.angles.begin(), r.angles.end());
    if (r.loss.size() != freqs.size() * angles.size())
      throw ConfigError("materials." + id, "grid is incomplete: " + std::to_string(r.loss.size()) +
                                               " of " + std::to_string(freqs.size() * angles.size()) +
                                               " nodes present");
    std::vector<double> table;
    for (double f : freqs)
      for (double a : angles) table.push_back(r.loss.at({f, a}));
    reg.add(MaterialProfile(id, std::move(freqs), std::move(angles), std::move(table), r.spread));
  }
  return reg;
}

MaterialRegistry MaterialRegistry::from_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("materials", "cannot open material table '" + path + "'");
  return from_csv(in);
}

void MaterialRegistry::write_csv(std::ostream& out) const {
  out << "material,freq_ghz,incidence_deg,loss_db,spread\n";
  out << std::setprecision(17);
  for (const auto& p : profiles_) {
    for (std::size_t fi = 0; fi < p.frequencies_ghz().size(); ++fi)
      for (std::size_t ai = 0; ai < p.incidences_deg().size(); ++ai)
        out << p.id() << ',' << p.frequencies_ghz()[fi] << ',' << p.incidences_deg()[ai] << ','
            << p.node(fi, ai) << ',' << p.spread_exponent() << '\n';
  }
}

}  // namespace v2v

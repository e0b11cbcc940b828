#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace v2v {

/// Specular reflection loss of one material sampled on a (frequency, incidence) grid.
///
/// The incidence grid starts at 0 degrees and must reach past 85 degrees so that the
/// whole [0, 90) range is covered; queries beyond the last node clamp to it. Lookups
/// between nodes are bilinear.
class MaterialProfile {
 public:
  MaterialProfile() = default;
  MaterialProfile(std::string id, std::vector<double> freq_ghz, std::vector<double> incidence_deg,
                  std::vector<double> loss_db, double spread);

  const std::string& id() const { return id_; }
  const std::vector<double>& frequencies_ghz() const { return freq_ghz_; }
  const std::vector<double>& incidences_deg() const { return incidence_deg_; }
  double spread_exponent() const { return spread_; }

  /// Table value at grid node (fi, ai).
  double node(std::size_t fi, std::size_t ai) const { return loss_db_[fi * incidence_deg_.size() + ai]; }

  /// Bilinear interpolation; frequency outside the grid clamps to the nearest edge.
  double loss_db(double freq_ghz, double incidence_deg) const;

 private:
  std::string id_;
  std::vector<double> freq_ghz_;
  std::vector<double> incidence_deg_;
  std::vector<double> loss_db_;  // row-major [freq][incidence]
  double spread_ = 1.0;
};

class MaterialRegistry {
 public:
  void add(MaterialProfile profile);

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  std::size_t index_of(const std::string& id) const;
  const MaterialProfile& at(std::size_t index) const { return profiles_.at(index); }
  const MaterialProfile& get(const std::string& id) const { return profiles_[index_of(id)]; }
  std::size_t size() const { return profiles_.size(); }

  /// Synthetic defaults for aluminum, steel, glass, plastic, concrete and asphalt on a
  /// 5 degree incidence grid.
  static MaterialRegistry defaults();

  /// Parse `material,freq_ghz,incidence_deg,loss_db,spread` rows. Every material must
  /// cover the full cartesian product of its frequencies and incidence angles.
  static MaterialRegistry from_csv(std::istream& in);
  static MaterialRegistry from_csv_file(const std::string& path);

  void write_csv(std::ostream& out) const;

 private:
  std::vector<MaterialProfile> profiles_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace v2v

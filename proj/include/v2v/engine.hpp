#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "v2v/mac.hpp"
#include "v2v/materials.hpp"
#include "v2v/propagation.hpp"
#include "v2v/scene.hpp"

namespace v2v {

inline constexpr double kOutageDb = -std::numeric_limits<double>::infinity();

enum class Experiment : std::uint8_t { Fig4, Fig5, Single };

std::string to_string(Experiment experiment);
/// Accepts "fig4", "fig5", "single". Throws ConfigError.
Experiment experiment_from_string(const std::string& name);
std::string to_string(Setup setup);

struct SimConfig {
  CanyonParams canyon;
  DeploymentParams deployment;
  RadioParams radio;
  MacParams mac;
  /// Optional material table (CSV); the built-in defaults otherwise.
  std::string materials_csv;
  int max_reflection_order = 1;
  /// Paths are re-traced once any vehicle has moved farther than this.
  double position_tolerance_m = 0.01;
  /// Received power over noise (dB) that puts a transmitter in a collision domain.
  double collision_threshold_db = 0.0;

  Experiment experiment = Experiment::Fig5;
  std::vector<Scheme> schemes = {Scheme::Tdma, Scheme::RaCsma, Scheme::Adaptive, Scheme::Uncoordinated};
  /// Tagged-link bumper gaps for the Fig. 4 sweep; the other vehicles use the
  /// deployment gap with `fig4_setup`.
  std::vector<double> fig4_distances_m = {1, 2, 5, 10, 20, 35, 50, 75, 100};
  Setup fig4_setup = Setup::Exponential;
  /// Mean gaps for the Fig. 5 sweep, run for every setup listed.
  std::vector<double> fig5_gaps_m = {0.5, 1, 2, 5, 10, 20, 35, 50};
  std::vector<Setup> fig5_setups = {Setup::Exponential, Setup::Constant};
  /// Setup of the single-point experiment (gap from `deployment.gap_m`).
  Setup single_setup = Setup::Exponential;

  int replications = 100;
  std::int64_t slots_per_replication = 4000;
  double warmup_fraction = 0.1;
  std::uint64_t seed = 1;
  double confidence = 0.95;

  bool operator==(const SimConfig&) const = default;
};

/// Throws ConfigError naming the offending key.
void validate(const SimConfig& config);

struct SweepPoint {
  Setup setup = Setup::Exponential;
  double gap_m = 10.0;
  std::optional<double> tagged_distance_m;
  /// Abscissa of the point (tagged distance for Fig. 4, mean gap otherwise).
  double x = 0.0;
};

std::vector<SweepPoint> sweep_points(const SimConfig& config);

struct MetricRecord {
  int replication = 0;
  int point = 0;
  Scheme scheme = Scheme::RaCsma;
  /// Tagged-link averages over the slots in which the source sends data, after warm-up.
  /// SINR, SNR and INR are averaged linearly and reported in dB.
  double sinr_db = kOutageDb;
  double snr_db = kOutageDb;
  double inr_db = kOutageDb;
  double spectral_efficiency = 0.0;
  double outage_fraction = 0.0;
  std::int64_t tagged_slots = 0;
  std::vector<double> access_delay_s;
  int collision_domain_size = 0;
  /// Radar reservations (all vehicles) without a concurrent collision-domain transmitter.
  double radar_success_fraction = std::numeric_limits<double>::quiet_NaN();
  std::int64_t radar_frames = 0;

  bool operator==(const MetricRecord&) const = default;
};

/// Linear SINR to bit/s/Hz; an outage (-inf dB) gives 0.
double spectral_efficiency(double sinr_db);

/// Power sums over antennas. Antenna index 2*v is vehicle v's front antenna, 2*v + 1 its
/// rear antenna (v = index into Scene::vehicles).
class LinkTable {
 public:
  LinkTable() = default;
  LinkTable(const Scene& scene, const MaterialRegistry& registry, const RadioParams& radio,
            int max_order);

  int antennas() const { return n_; }
  /// Linear gain (received over transmitted power) summed over all paths.
  double gain(int tx, int rx) const { return sum_[static_cast<std::size_t>(tx) * n_ + rx]; }
  /// Linear gain of the strongest path.
  double best(int tx, int rx) const { return best_[static_cast<std::size_t>(tx) * n_ + rx]; }

 private:
  int n_ = 0;
  std::vector<double> sum_;
  std::vector<double> best_;
};

/// Vehicles whose strongest path to any antenna of `vehicle` clears `threshold_db` over
/// the noise floor (noise level by default). Indices into Scene::vehicles.
std::vector<int> collision_domain(const LinkTable& table, int vehicle, const RadioParams& radio,
                                  double threshold_db = 0.0);
std::vector<int> collision_domain(const Scene& scene, int vehicle, const MaterialRegistry& registry,
                                  const RadioParams& radio, int max_order = 1,
                                  double threshold_db = 0.0);

/// True when the strongest path between any antenna pair of the two vehicles gives a
/// preamble SNR of at least `threshold_db`.
bool preamble_detect(const Scene& scene, int rx_vehicle, int tx_vehicle, const MaterialRegistry& registry,
                     const RadioParams& radio, double threshold_db, int max_order = 1);

/// Received power (dBm) summed over all traced paths; -inf without a path.
double received_power_dbm(const TraceGeometry& geometry, const Antenna& tx, const Antenna& rx,
                          const RadioParams& radio, int max_order = 1);

/// SINR of `wanted` at `rx` with the given interferers active; kOutageDb without a path.
double sinr_db(const Scene& scene, const MaterialRegistry& registry, const Antenna& rx,
               const Antenna& wanted, const std::vector<Antenna>& interferers, const RadioParams& radio,
               int max_order = 1);

/// One replication of one sweep point; one record per configured scheme (same order).
/// All schemes share the deployment and its mobility.
std::vector<MetricRecord> run_replication(const SimConfig& config, const SweepPoint& point,
                                          int point_index, int replication,
                                          const MaterialRegistry& registry);

/// Replication seed: a pure function of the master seed, the sweep point and the index.
std::uint64_t replication_seed(std::uint64_t master, int point_index, int replication);

struct Aggregate {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double ci_low = std::numeric_limits<double>::quiet_NaN();
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  int count = 0;
};

/// Normal-approximation confidence interval of the mean; NaN samples are skipped and
/// the interval is NaN for fewer than two samples.
Aggregate aggregate(const std::vector<double>& samples, double confidence);

struct ExperimentResult {
  std::vector<SweepPoint> points;
  std::vector<Scheme> schemes;
  /// records[point][scheme][replication]
  std::vector<std::vector<std::vector<MetricRecord>>> records;
};

/// Runs every sweep point and replication on `jobs` worker threads. The output does not
/// depend on `jobs`.
ExperimentResult run_experiment(const SimConfig& config, int jobs = 1);

/// Loads the configured material table or the defaults.
MaterialRegistry load_materials(const SimConfig& config);

struct MetricSummary {
  std::string metric;
  Aggregate value;
};

/// Per-metric aggregates over replications. SINR and SNR are averaged in dB (each
/// replication contributes its slot-averaged value); INR is averaged in linear units.
std::vector<MetricSummary> summarize(const std::vector<MetricRecord>& records, double confidence);

/// Difference of replication-level mean SINR, a - b, in dB with its interval. Paired by
/// replication index, or two-sample (Welch) when unpaired.
Aggregate sinr_difference(const std::vector<MetricRecord>& a, const std::vector<MetricRecord>& b,
                          double confidence, bool paired = true);

}  // namespace v2v

#include "v2v/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "v2v/errors.hpp"

namespace v2v {

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Fig4: return "fig4";
    case Experiment::Fig5: return "fig5";
    case Experiment::Single: return "single";
  }
  return "?";
}

Experiment experiment_from_string(const std::string& name) {
  for (Experiment e : {Experiment::Fig4, Experiment::Fig5, Experiment::Single})
    if (to_string(e) == name) return e;
  throw ConfigError("experiment", "unknown experiment '" + name + "' (fig4, fig5, single)");
}

std::string to_string(Setup setup) { return setup == Setup::Exponential ? "setup1" : "setup2"; }

void validate(const SimConfig& c) {
  build_canyon(c.canyon);
  validate(c.mac);
  if (!(c.radio.carrier_ghz > 0.0)) throw ConfigError("radio.carrier_ghz", "must be positive");
  if (!(c.radio.bandwidth_ghz > 0.0)) throw ConfigError("radio.bandwidth_ghz", "must be positive");
  if (!(c.radio.temperature_k > 0.0)) throw ConfigError("radio.temperature_k", "must be positive");
  if (!(c.radio.noise_figure_db >= 0.0)) throw ConfigError("radio.noise_figure_db", "must be >= 0");
  if (!(c.radio.absorption_per_m >= 0.0)) throw ConfigError("radio.absorption_per_m", "must be >= 0");
  if (!std::isfinite(c.radio.tx_power_dbm)) throw ConfigError("radio.tx_power_dbm", "must be finite");
  if (!(c.deployment.gap_m > 0.0)) throw ConfigError("deployment.gap_m", "must be positive");
  if (c.max_reflection_order < 0 || c.max_reflection_order > 2)
    throw ConfigError("propagation.max_reflection_order", "must be 0, 1 or 2");
  if (!(c.position_tolerance_m > 0.0))
    throw ConfigError("propagation.position_tolerance_m", "must be positive");
  if (c.schemes.empty()) throw ConfigError("mac.schemes", "at least one scheme is required");
  if (c.replications < 1) throw ConfigError("simulation.replications", "must be >= 1");
  if (c.slots_per_replication < 0) throw ConfigError("simulation.slots", "must be >= 0");
  if (!(c.warmup_fraction >= 0.0 && c.warmup_fraction < 1.0))
    throw ConfigError("simulation.warmup_fraction", "must lie in [0, 1)");
  if (!(c.confidence > 0.0 && c.confidence < 1.0))
    throw ConfigError("simulation.confidence", "must lie in (0, 1)");
  if (c.fig4_distances_m.empty()) throw ConfigError("fig4.distances_m", "sweep grid is empty");
  for (double d : c.fig4_distances_m)
    if (!(d > 0.0)) throw ConfigError("fig4.distances_m", "distances must be positive");
  if (c.fig5_gaps_m.empty()) throw ConfigError("fig5.gaps_m", "sweep grid is empty");
  for (double g : c.fig5_gaps_m)
    if (!(g > 0.0)) throw ConfigError("fig5.gaps_m", "gaps must be positive");
  if (c.fig5_setups.empty()) throw ConfigError("fig5.setups", "at least one setup is required");
}

std::vector<SweepPoint> sweep_points(const SimConfig& c) {
  std::vector<SweepPoint> pts;
  switch (c.experiment) {
    case Experiment::Fig4:
      for (double d : c.fig4_distances_m) pts.push_back({c.fig4_setup, c.deployment.gap_m, d, d});
      break;
    case Experiment::Fig5:
      for (Setup s : c.fig5_setups)
        for (double g : c.fig5_gaps_m) pts.push_back({s, g, std::nullopt, g});
      break;
    case Experiment::Single:
      pts.push_back({c.single_setup, c.deployment.gap_m, c.deployment.tagged_gap_m, c.deployment.gap_m});
      break;
  }
  return pts;
}

double spectral_efficiency(double sinr_db) {
  if (sinr_db == kOutageDb) return 0.0;
  return std::log2(1.0 + std::pow(10.0, sinr_db / 10.0));
}

namespace {

double to_db(double lin) { return lin > 0.0 ? 10.0 * std::log10(lin) : kOutageDb; }
double from_db(double db) { return db == kOutageDb ? 0.0 : std::pow(10.0, db / 10.0); }

// Losses shared by both directions of a path.
double path_loss_db(const PropagationPath& path, const RadioParams& radio, const MaterialRegistry& registry) {
  double loss = fspl_db(path.total_length, radio.carrier_ghz) + absorption_db(path.total_length, radio);
  for (const Bounce& b : path.bounces)
    loss += reflection_loss_db(registry.at(b.material), radio.carrier_ghz, b.incidence_deg) +
            b.diffuse_penalty_db;
  return loss;
}

std::vector<Antenna> antennas_of(const Scene& scene) {
  std::vector<Antenna> out;
  out.reserve(2 * scene.vehicles.size());
  for (const Vehicle& v : scene.vehicles) {
    out.push_back(v.antenna(MountLocation::Front));
    out.push_back(v.antenna(MountLocation::Rear));
  }
  return out;
}

int index_of(const Scene& scene, int id) {
  for (std::size_t i = 0; i < scene.vehicles.size(); ++i)
    if (scene.vehicles[i].id == id) return static_cast<int>(i);
  throw std::out_of_range("no vehicle with id " + std::to_string(id));
}

// Strongest-path gain over all antenna pairs from vehicle `tx` to vehicle `rx`.
double best_pair_gain(const TraceGeometry& g, const Scene& scene, int tx, int rx, const RadioParams& radio,
                      int max_order) {
  double best = 0.0;
  for (MountLocation a : {MountLocation::Front, MountLocation::Rear}) {
    const Antenna ta = scene.vehicles[tx].antenna(a);
    for (MountLocation b : {MountLocation::Front, MountLocation::Rear}) {
      const Antenna rb = scene.vehicles[rx].antenna(b);
      for_each_path(g, ta, rb, max_order, radio.carrier_ghz, [&](const PropagationPath& p) {
        best = std::max(best, from_db(path_gain_db(p, ta, rb, radio, g.registry())));
      });
    }
  }
  return best;
}

double noise_mw(const RadioParams& radio) { return from_db(noise_dbm(radio)); }

double vehicle_best(const LinkTable& t, int u, int v) {
  return std::max({t.best(2 * u, 2 * v), t.best(2 * u, 2 * v + 1), t.best(2 * u + 1, 2 * v),
                   t.best(2 * u + 1, 2 * v + 1)});
}

}  // namespace

LinkTable::LinkTable(const Scene& scene, const MaterialRegistry& registry, const RadioParams& radio,
                     int max_order) {
  const std::vector<Antenna> ants = antennas_of(scene);
  n_ = static_cast<int>(ants.size());
  sum_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
  best_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
  const TraceGeometry geometry(scene, registry);
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j) {
      if (i / 2 == j / 2) continue;  // same vehicle
      const Antenna& a = ants[i];
      const Antenna& b = ants[j];
      // Paths are reciprocal; one trace serves both directions.
      for_each_path(geometry, a, b, max_order, radio.carrier_ghz, [&](const PropagationPath& p) {
        const double loss = path_loss_db(p, radio, registry);
        const double fwd = from_db(tx_gain_db(a, p.departure) + rx_gain_db(b, -p.arrival) - loss);
        const double rev = from_db(tx_gain_db(b, -p.arrival) + rx_gain_db(a, p.departure) - loss);
        const std::size_t ij = static_cast<std::size_t>(i) * n_ + j;
        const std::size_t ji = static_cast<std::size_t>(j) * n_ + i;
        sum_[ij] += fwd;
        sum_[ji] += rev;
        best_[ij] = std::max(best_[ij], fwd);
        best_[ji] = std::max(best_[ji], rev);
      });
    }
  }
}

std::vector<int> collision_domain(const LinkTable& table, int vehicle, const RadioParams& radio,
                                  double threshold_db) {
  const double floor = noise_mw(radio) * from_db(threshold_db) / from_db(radio.tx_power_dbm);
  std::vector<int> out;
  const int n = table.antennas() / 2;
  for (int u = 0; u < n; ++u)
    if (u != vehicle && vehicle_best(table, u, vehicle) > floor) out.push_back(u);
  return out;
}

std::vector<int> collision_domain(const Scene& scene, int vehicle, const MaterialRegistry& registry,
                                  const RadioParams& radio, int max_order, double threshold_db) {
  const int v = index_of(scene, vehicle);
  const TraceGeometry g(scene, registry);
  const double floor = noise_mw(radio) * from_db(threshold_db) / from_db(radio.tx_power_dbm);
  std::vector<int> out;
  for (int u = 0; u < static_cast<int>(scene.vehicles.size()); ++u)
    if (u != v && best_pair_gain(g, scene, u, v, radio, max_order) > floor)
      out.push_back(scene.vehicles[u].id);
  return out;
}

bool preamble_detect(const Scene& scene, int rx_vehicle, int tx_vehicle, const MaterialRegistry& registry,
                     const RadioParams& radio, double threshold_db, int max_order) {
  const TraceGeometry g(scene, registry);
  const double best = best_pair_gain(g, scene, index_of(scene, tx_vehicle), index_of(scene, rx_vehicle),
                                     radio, max_order);
  return to_db(best) + radio.tx_power_dbm - noise_dbm(radio) >= threshold_db;
}

double received_power_dbm(const TraceGeometry& geometry, const Antenna& tx, const Antenna& rx,
                          const RadioParams& radio, int max_order) {
  double sum = 0.0;
  for_each_path(geometry, tx, rx, max_order, radio.carrier_ghz, [&](const PropagationPath& p) {
    sum += from_db(path_gain_db(p, tx, rx, radio, geometry.registry()));
  });
  return to_db(sum) + radio.tx_power_dbm;
}

double sinr_db(const Scene& scene, const MaterialRegistry& registry, const Antenna& rx, const Antenna& wanted,
               const std::vector<Antenna>& interferers, const RadioParams& radio, int max_order) {
  const TraceGeometry g(scene, registry);
  const double s = from_db(received_power_dbm(g, wanted, rx, radio, max_order));
  if (s == 0.0) return kOutageDb;
  double i = 0.0;
  for (const Antenna& a : interferers) i += from_db(received_power_dbm(g, a, rx, radio, max_order));
  return to_db(s / (noise_mw(radio) + i));
}

std::uint64_t replication_seed(std::uint64_t master, int point_index, int replication) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ static_cast<std::uint64_t>(point_index)) ^
             static_cast<std::uint64_t>(replication));
}

MaterialRegistry load_materials(const SimConfig& config) {
  if (config.materials_csv.empty()) return MaterialRegistry::defaults();
  return MaterialRegistry::from_csv_file(config.materials_csv);
}

// ---------------------------------------------------------------------------
// Replication

namespace {

struct Accumulator {
  double sinr = 0.0;
  double snr = 0.0;
  double inr = 0.0;
  double se = 0.0;
  std::int64_t slots = 0;
  std::int64_t outages = 0;
  std::int64_t radar_frames = 0;
  std::int64_t radar_ok = 0;
  std::vector<char> radar_hit;
  std::vector<double> delays;
};

struct Transmitter {
  int vehicle;
  bool both;  // preamble: both bumper antennas radiate
};

class Replication {
 public:
  Replication(const SimConfig& c, const SweepPoint& pt, int point_index, int rep, const MaterialRegistry& reg)
      : c_(c), reg_(reg), point_index_(point_index), rep_(rep) {
    const StreetCanyon canyon = build_canyon(c.canyon);
    DeploymentParams dp = c.deployment;
    dp.gap_m = pt.gap_m;
    dp.tagged_gap_m = pt.tagged_distance_m;
    seed_ = replication_seed(c.seed, point_index, rep);
    scene0_ = generate_deployment(canyon, pt.setup, dp, seed_);
    n_ = static_cast<int>(scene0_.vehicles.size());
    src_ = index_of(scene0_, scene0_.tagged.source);
    dst_ = index_of(scene0_, scene0_.tagged.destination);
    leader_.assign(n_, -1);
    for (int v = 0; v < n_; ++v)
      if (auto l = scene0_.leader_of(scene0_.vehicles[v].id)) leader_[v] = index_of(scene0_, *l);
    noise_ = noise_mw(c.radio);
    ptx_ = from_db(c.radio.tx_power_dbm);
    preamble_floor_ = noise_ * from_db(c.mac.preamble_threshold_db) / ptx_;
    decode_lin_ = from_db(c.mac.decode_threshold_db);
  }

  std::vector<MetricRecord> run() {
    const std::size_t k = c_.schemes.size();
    std::vector<MetricRecord> out(k);
    for (std::size_t s = 0; s < k; ++s) {
      out[s].replication = rep_;
      out[s].point = point_index_;
      out[s].scheme = c_.schemes[s];
    }
    const std::int64_t slots = c_.slots_per_replication;
    if (slots == 0) {
      for (auto& r : out) empty_metrics(r);
      return out;
    }

    std::vector<MacNetwork> nets;
    std::vector<Accumulator> acc(k);
    for (std::size_t s = 0; s < k; ++s) {
      nets.emplace_back(c_.schemes[s], c_.mac, n_, seed_ ^ (0xA5A5A5A5ULL * (s + 1)));
      acc[s].radar_hit.assign(n_, 0);
    }

    const double slot_s = c_.mac.slot_us * 1e-6;
    double vmax = 0.0;
    for (const Vehicle& v : scene0_.vehicles) vmax = std::max(vmax, std::abs(v.speed_mps));
    std::int64_t interval = slots;
    if (vmax > 0.0)
      interval = std::clamp<std::int64_t>(
          static_cast<std::int64_t>(std::floor(c_.position_tolerance_m / (vmax * slot_s))) + 1, 1, slots);
    warmup_ = static_cast<std::int64_t>(std::ceil(c_.warmup_fraction * static_cast<double>(slots)));

    int domain_size = 0;
    for (std::int64_t t = 0; t < slots; ++t) {
      if (t % interval == 0) {
        const Scene scene = t == 0 ? scene0_ : advance_positions(scene0_, static_cast<double>(t) * slot_s);
        table_ = LinkTable(scene, reg_, c_.radio, c_.max_reflection_order);
        refresh_neighbourhoods();
        if (t == 0) {
          domain_size = static_cast<int>(domains_[src_].size());
          std::vector<std::vector<int>> conflicts(n_);
          for (int v = 0; v < n_; ++v)
            for (int u : domains_[v]) {
              conflicts[v].push_back(u);
              conflicts[u].push_back(v);
            }
          for (auto& c : conflicts) {
            std::sort(c.begin(), c.end());
            c.erase(std::unique(c.begin(), c.end()), c.end());
          }
          const TdmaSchedule sched = tdma_schedule(conflicts);
          for (auto& net : nets)
            if (net.scheme() == Scheme::Tdma) net.set_schedule(sched);
        }
      }
      for (std::size_t s = 0; s < k; ++s) {
        nets[s].step(hearers_);
        evaluate(nets[s], acc[s], t);
      }
    }

    for (std::size_t s = 0; s < k; ++s) finish(out[s], acc[s], domain_size);
    return out;
  }

 private:
  static void empty_metrics(MetricRecord& r) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.sinr_db = r.snr_db = r.inr_db = nan;
    r.spectral_efficiency = nan;
    r.outage_fraction = nan;
  }

  void refresh_neighbourhoods() {
    const double domain_floor = noise_ * from_db(c_.collision_threshold_db) / ptx_;
    hearers_.assign(n_, {});
    domains_.assign(n_, {});
    for (int u = 0; u < n_; ++u)
      for (int w = 0; w < n_; ++w) {
        if (u == w) continue;
        const double g = vehicle_best(table_, u, w);
        if (g >= preamble_floor_) hearers_[u].push_back(w);
        if (g > domain_floor) domains_[w].push_back(u);
      }
  }

  // Interference power at antenna `rx` from every transmitter except the two excluded
  // vehicles, in mW.
  double interference(int rx, int skip_a, int skip_b) const {
    double sum = 0.0;
    for (const Transmitter& t : active_) {
      if (t.vehicle == skip_a || t.vehicle == skip_b) continue;
      sum += table_.gain(2 * t.vehicle, rx);
      if (t.both) sum += table_.gain(2 * t.vehicle + 1, rx);
    }
    return sum * ptx_;
  }

  static bool deaf(const MacNetwork& net, int v) {
    return net.states()[v].mode == Mode::Radar || net.actions()[v].activity == Activity::Preamble;
  }

  void evaluate(MacNetwork& net, Accumulator& acc, std::int64_t t) {
    const auto& acts = net.actions();
    active_.clear();
    for (int v = 0; v < n_; ++v)
      if (acts[v].transmitting()) active_.push_back({v, acts[v].activity == Activity::Preamble});

    const Scheme scheme = net.scheme();
    if (scheme == Scheme::RaCsma || scheme == Scheme::Adaptive) {
      for (const Transmitter& tx : active_) {
        const int u = tx.vehicle;
        if (acts[u].activity != Activity::Data) continue;
        const int r = leader_[u];
        if (r < 0) continue;
        bool failed = deaf(net, r);
        if (!failed) {
          const double sig = ptx_ * table_.gain(2 * u, 2 * r + 1);
          failed = sig < decode_lin_ * (noise_ + interference(2 * r + 1, u, r));
        }
        if (failed) net.states()[u].frame_failed = true;
      }
    }

    const bool measured = t >= warmup_;
    for (int u = 0; u < n_; ++u) {
      const MacAction& a = acts[u];
      if (a.frame_start) acc.radar_hit[u] = 0;
      if (a.activity == Activity::Radar) {
        for (int w : domains_[u])
          if (acts[w].transmitting()) {
            acc.radar_hit[u] = 1;
            break;
          }
      }
      if (a.frame_end && a.category == FrameCategory::Radar && measured) {
        ++acc.radar_frames;
        if (!acc.radar_hit[u]) ++acc.radar_ok;
      }
      if (measured && a.frame_start && a.access_delay_slots >= 0 && scheme != Scheme::Tdma)
        acc.delays.push_back(static_cast<double>(a.access_delay_slots) * c_.mac.slot_us * 1e-6);
    }

    if (!measured || acts[src_].activity != Activity::Data) return;
    const double sig = ptx_ * table_.gain(2 * src_, 2 * dst_ + 1);
    const double intf = scheme == Scheme::Tdma ? 0.0 : interference(2 * dst_ + 1, src_, dst_);
    double sinr = sig / (noise_ + intf);
    if (deaf(net, dst_) || sig == 0.0) {
      sinr = 0.0;
      ++acc.outages;
    }
    acc.sinr += sinr;
    acc.snr += sig / noise_;
    acc.inr += intf / noise_;
    acc.se += std::log2(1.0 + sinr);
    ++acc.slots;
  }

  void finish(MetricRecord& r, Accumulator& acc, int domain_size) const {
    r.collision_domain_size = domain_size;
    r.tagged_slots = acc.slots;
    r.access_delay_s = std::move(acc.delays);
    r.radar_frames = acc.radar_frames;
    if (acc.radar_frames > 0)
      r.radar_success_fraction = static_cast<double>(acc.radar_ok) / static_cast<double>(acc.radar_frames);
    if (acc.slots == 0) {
      empty_metrics(r);
      return;
    }
    const double n = static_cast<double>(acc.slots);
    r.sinr_db = to_db(acc.sinr / n);
    r.snr_db = to_db(acc.snr / n);
    r.inr_db = to_db(acc.inr / n);
    r.spectral_efficiency = acc.se / n;
    r.outage_fraction = static_cast<double>(acc.outages) / n;
  }

  const SimConfig& c_;
  const MaterialRegistry& reg_;
  int point_index_;
  int rep_;
  std::uint64_t seed_ = 0;
  Scene scene0_;
  int n_ = 0;
  int src_ = 0;
  int dst_ = 0;
  std::vector<int> leader_;
  double noise_ = 0.0;
  double ptx_ = 1.0;
  double preamble_floor_ = 0.0;
  double decode_lin_ = 10.0;
  std::int64_t warmup_ = 0;
  LinkTable table_;
  std::vector<std::vector<int>> hearers_;
  std::vector<std::vector<int>> domains_;
  std::vector<Transmitter> active_;
};

}  // namespace

std::vector<MetricRecord> run_replication(const SimConfig& config, const SweepPoint& point, int point_index,
                                          int replication, const MaterialRegistry& registry) {
  Replication r(config, point, point_index, replication, registry);
  return r.run();
}

ExperimentResult run_experiment(const SimConfig& config, int jobs) {
  validate(config);
  const MaterialRegistry registry = load_materials(config);
  ExperimentResult res;
  res.points = sweep_points(config);
  res.schemes = config.schemes;
  const int np = static_cast<int>(res.points.size());
  const int reps = config.replications;
  res.records.assign(np, std::vector<std::vector<MetricRecord>>(config.schemes.size(),
                                                                std::vector<MetricRecord>(reps)));

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int task = next.fetch_add(1);
      if (task >= np * reps) return;
      const int p = task / reps;
      const int r = task % reps;
      try {
        auto recs = run_replication(config, res.points[p], p, r, registry);
        for (std::size_t s = 0; s < recs.size(); ++s) res.records[p][s][r] = std::move(recs[s]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(np * reps);
        return;
      }
    }
  };
  const int workers = std::max(1, jobs);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return res;
}

// ---------------------------------------------------------------------------
// Statistics

namespace {

double z_value(double confidence) {
  const boost::math::normal_distribution<double> n(0.0, 1.0);
  return boost::math::quantile(n, 0.5 + 0.5 * confidence);
}

}  // namespace

Aggregate aggregate(const std::vector<double>& samples, double confidence) {
  Aggregate a;
  double sum = 0.0;
  for (double x : samples)
    if (!std::isnan(x)) {
      sum += x;
      ++a.count;
    }
  if (a.count == 0) return a;
  a.mean = sum / a.count;
  if (!std::isfinite(a.mean)) {
    // An infinite sample (e.g. no interference at all, -inf dB) dominates the mean.
    a.ci_low = a.ci_high = a.mean;
    return a;
  }
  if (a.count < 2) return a;
  double ss = 0.0;
  for (double x : samples)
    if (!std::isnan(x)) ss += (x - a.mean) * (x - a.mean);
  const double half = z_value(confidence) * std::sqrt(ss / (a.count - 1) / a.count);
  a.ci_low = a.mean - half;
  a.ci_high = a.mean + half;
  return a;
}

std::vector<MetricSummary> summarize(const std::vector<MetricRecord>& records, double confidence) {
  auto collect = [&](auto&& f) {
    std::vector<double> v;
    v.reserve(records.size());
    for (const MetricRecord& r : records) v.push_back(f(r));
    return v;
  };
  std::vector<MetricSummary> out;
  out.push_back({"sinr_db", aggregate(collect([](const MetricRecord& r) { return r.sinr_db; }),
                                            confidence)});
  out.push_back({"snr_db", aggregate(collect([](const MetricRecord& r) { return r.snr_db; }),
                                           confidence)});
  // Interference-free replications (-inf dB) are valid samples, so INR is averaged in
  // linear units.
  Aggregate inr = aggregate(collect([](const MetricRecord& r) {
                              return std::isnan(r.inr_db) ? r.inr_db : from_db(r.inr_db);
                            }),
                            confidence);
  inr.mean = to_db(inr.mean);
  inr.ci_low = std::isnan(inr.ci_low) ? inr.ci_low : to_db(std::max(inr.ci_low, 0.0));
  inr.ci_high = std::isnan(inr.ci_high) ? inr.ci_high : to_db(inr.ci_high);
  out.push_back({"inr_db", inr});
  out.push_back({"spectral_efficiency",
                 aggregate(collect([](const MetricRecord& r) { return r.spectral_efficiency; }), confidence)});
  out.push_back({"outage_fraction",
                 aggregate(collect([](const MetricRecord& r) { return r.outage_fraction; }), confidence)});
  out.push_back({"radar_success_fraction",
                 aggregate(collect([](const MetricRecord& r) { return r.radar_success_fraction; }), confidence)});
  out.push_back({"access_delay_mean_ms", aggregate(collect([](const MetricRecord& r) {
                                                     if (r.access_delay_s.empty())
                                                       return std::numeric_limits<double>::quiet_NaN();
                                                     double s = 0.0;
                                                     for (double d : r.access_delay_s) s += d;
                                                     return 1e3 * s / r.access_delay_s.size();
                                                   }),
                                                   confidence)});
  out.push_back({"access_delay_max_ms", aggregate(collect([](const MetricRecord& r) {
                                                    if (r.access_delay_s.empty())
                                                      return std::numeric_limits<double>::quiet_NaN();
                                                    return 1e3 * *std::max_element(r.access_delay_s.begin(),
                                                                                   r.access_delay_s.end());
                                                  }),
                                                  confidence)});
  out.push_back({"collision_domain_size",
                 aggregate(collect([](const MetricRecord& r) { return double(r.collision_domain_size); }),
                           confidence)});
  return out;
}

Aggregate sinr_difference(const std::vector<MetricRecord>& a, const std::vector<MetricRecord>& b,
                          double confidence, bool paired) {
  if (paired) {
    std::vector<double> d;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) d.push_back(a[i].sinr_db - b[i].sinr_db);
    return aggregate(d, confidence);
  }
  std::vector<double> va;
  std::vector<double> vb;
  for (const auto& r : a) va.push_back(r.sinr_db);
  for (const auto& r : b) vb.push_back(r.sinr_db);
  const Aggregate ma = aggregate(va, confidence);
  const Aggregate mb = aggregate(vb, confidence);
  Aggregate d;
  d.count = std::min(ma.count, mb.count);
  d.mean = ma.mean - mb.mean;
  if (ma.count < 2 || mb.count < 2) return d;
  const double z = z_value(confidence);
  const double sa = (ma.ci_high - ma.mean) / z;
  const double sb = (mb.ci_high - mb.mean) / z;
  const double half = z * std::sqrt(sa * sa + sb * sb);
  d.ci_low = d.mean - half;
  d.ci_high = d.mean + half;
  return d;
}

}  // namespace v2v

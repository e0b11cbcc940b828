#include "v2v/cli.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "v2v/errors.hpp"

namespace v2v {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Reading

template <class T>
const char* type_name() {
  if constexpr (std::is_same_v<T, bool>) return "a boolean";
  else if constexpr (std::is_integral_v<T>) return "an integer";
  else if constexpr (std::is_floating_point_v<T>) return "a number";
  else return "a string";
}

template <class T>
T scalar_as(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw ConfigError(path, std::string("expected ") + type_name<T>());
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, std::string("expected ") + type_name<T>() + ", got '" + node.Scalar() + "'");
  }
}

// A mapping whose keys are consumed one by one; leftovers are unknown keys.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap())
      throw ConfigError(path_.empty() ? "<root>" : path_, "expected a mapping");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node take(const std::string& key) {
    used_.insert(key);
    const YAML::Node& node = node_;  // const lookup never inserts the key
    if (!node || !node.IsMap()) return YAML::Node(YAML::NodeType::Undefined);
    return node[key];
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && static_cast<bool>(node_[key]); }

  template <class T>
  void read(const std::string& key, T& out) {
    const YAML::Node n = take(key);
    if (n) out = scalar_as<T>(n, key_path(key));
  }

  void read(const std::string& key, std::optional<double>& out) {
    const YAML::Node n = take(key);
    if (!n) return;
    if (n.IsNull()) out.reset();
    else out = scalar_as<double>(n, key_path(key));
  }

  void read(const std::string& key, std::vector<double>& out) {
    const YAML::Node n = take(key);
    if (!n) return;
    if (!n.IsSequence()) throw ConfigError(key_path(key), "expected a list of numbers");
    out.clear();
    for (std::size_t i = 0; i < n.size(); ++i)
      out.push_back(scalar_as<double>(n[i], key_path(key) + "[" + std::to_string(i) + "]"));
  }

  Section child(const std::string& key) { return Section(take(key), key_path(key)); }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!used_.count(k)) throw ConfigError(key_path(k), "unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

Setup setup_from(const YAML::Node& n, const std::string& path) {
  const int v = scalar_as<int>(n, path);
  if (v == 1) return Setup::Exponential;
  if (v == 2) return Setup::Constant;
  throw ConfigError(path, "setup must be 1 or 2");
}

SimConfig from_yaml(const YAML::Node& root) {
  SimConfig c;
  Section top(root, "");

  if (YAML::Node n = top.take("experiment")) c.experiment = experiment_from_string(scalar_as<std::string>(n, "experiment"));
  top.read("seed", c.seed);
  top.read("materials_csv", c.materials_csv);
  if (YAML::Node n = top.take("schemes")) {
    if (!n.IsSequence()) throw ConfigError("schemes", "expected a list of scheme names");
    c.schemes.clear();
    for (std::size_t i = 0; i < n.size(); ++i) {
      const std::string path = "schemes[" + std::to_string(i) + "]";
      try {
        c.schemes.push_back(scheme_from_string(scalar_as<std::string>(n[i], path)));
      } catch (const ConfigError& e) {
        throw ConfigError(path, e.what());
      }
    }
  }

  {
    Section s = top.child("canyon");
    CanyonParams& p = c.canyon;
    s.read("length_m", p.length_m);
    s.read("lanes_per_direction", p.lanes_per_direction);
    s.read("lane_width_m", p.lane_width_m);
    s.read("sidewalk_width_m", p.sidewalk_width_m);
    s.read("building_height_m", p.building_height_m);
    s.read("wall_material", p.wall_material);
    s.read("ground_material", p.ground_material);
    s.finish();
  }
  {
    Section s = top.child("deployment");
    DeploymentParams& p = c.deployment;
    s.read("gap_m", p.gap_m);
    s.read("setup1_speed_kmh", p.setup1_speed_kmh);
    s.read("setup1_speed_sd_fraction", p.setup1_speed_sd_fraction);
    s.read("setup2_speed_kmh", p.setup2_speed_kmh);
    s.read("tagged_lane", p.tagged_lane);
    s.read("tagged_gap_m", p.tagged_gap_m);
    s.read("tessellation_cell_m", p.tessellation_cell_m);
    s.finish();
  }
  {
    Section s = top.child("vehicle");
    VehicleBody& b = c.deployment.body;
    s.read("length_m", b.length_m);
    s.read("width_m", b.width_m);
    s.read("height_m", b.height_m);
    if (YAML::Node n = s.take("strata")) {
      const std::string path = s.key_path("strata");
      if (!n.IsSequence()) throw ConfigError(path, "expected a list");
      b.strata.clear();
      for (std::size_t i = 0; i < n.size(); ++i) {
        Section st(n[i], path + "[" + std::to_string(i) + "]");
        Stratum layer;
        st.read("z_lo", layer.z_lo);
        st.read("z_hi", layer.z_hi);
        st.read("material", layer.material);
        st.finish();
        b.strata.push_back(layer);
      }
    }
    s.finish();
  }
  {
    Section s = top.child("antenna");
    AntennaMount& f = c.deployment.front;
    s.read("altitude_m", f.altitude_m);
    s.read("tx_gain_db", f.tx_gain_db);
    s.read("rx_gain_db", f.rx_gain_db);
    s.read("sidelobe_db", f.sidelobe_db);
    s.finish();
    AntennaMount r = f;
    r.location = MountLocation::Rear;
    c.deployment.rear = r;
  }
  {
    Section s = top.child("radio");
    RadioParams& r = c.radio;
    s.read("carrier_ghz", r.carrier_ghz);
    if (s.has("carrier_ghz") && !s.has("absorption_per_m")) {
      if (r.carrier_ghz == 79.0 || r.carrier_ghz == 150.0 || r.carrier_ghz == 300.0)
        r.absorption_per_m = radio_preset(r.carrier_ghz).absorption_per_m;
      else
        throw ConfigError("radio.absorption_per_m", "required for carriers other than 79, 150 or 300 GHz");
    }
    s.read("bandwidth_ghz", r.bandwidth_ghz);
    s.read("tx_power_dbm", r.tx_power_dbm);
    s.read("noise_figure_db", r.noise_figure_db);
    s.read("temperature_k", r.temperature_k);
    s.read("water_vapor_percent", r.water_vapor_percent);
    s.read("absorption_per_m", r.absorption_per_m);
    s.finish();
  }
  {
    Section s = top.child("mac");
    MacParams& m = c.mac;
    s.read("slot_us", m.slot_us);
    s.read("cw_min", m.cw_min);
    s.read("cw_max", m.cw_max);
    s.read("inter_preamble_interval", m.inter_preamble_interval);
    s.read("min_ifs", m.min_ifs);
    s.read("reservation_length", m.reservation_length);
    s.read("radar_duty_cycle", m.radar_duty_cycle);
    s.read("p_tx", m.p_tx);
    s.read("preamble_threshold_db", m.preamble_threshold_db);
    s.read("decode_threshold_db", m.decode_threshold_db);
    s.read("adaptive_sensing", m.adaptive_sensing);
    s.finish();
  }
  {
    Section s = top.child("propagation");
    s.read("max_reflection_order", c.max_reflection_order);
    s.read("position_tolerance_m", c.position_tolerance_m);
    s.read("collision_threshold_db", c.collision_threshold_db);
    s.finish();
  }
  {
    Section s = top.child("simulation");
    s.read("replications", c.replications);
    s.read("slots", c.slots_per_replication);
    s.read("warmup_fraction", c.warmup_fraction);
    s.read("confidence", c.confidence);
    s.finish();
  }
  {
    Section s = top.child("fig4");
    s.read("distances_m", c.fig4_distances_m);
    if (YAML::Node n = s.take("setup")) c.fig4_setup = setup_from(n, "fig4.setup");
    s.finish();
  }
  {
    Section s = top.child("fig5");
    s.read("gaps_m", c.fig5_gaps_m);
    if (YAML::Node n = s.take("setups")) {
      if (!n.IsSequence()) throw ConfigError("fig5.setups", "expected a list of setups");
      c.fig5_setups.clear();
      for (std::size_t i = 0; i < n.size(); ++i)
        c.fig5_setups.push_back(setup_from(n[i], "fig5.setups[" + std::to_string(i) + "]"));
    }
    s.finish();
  }
  {
    Section s = top.child("single");
    if (YAML::Node n = s.take("setup")) c.single_setup = setup_from(n, "single.setup");
    s.finish();
  }
  top.finish();
  validate(c);
  return c;
}

// ---------------------------------------------------------------------------
// Writing

// Shortest text that reads back to the same double.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  // Keep integral values typed as floats.
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

void put(YAML::Emitter& out, const char* key, double v) { out << YAML::Key << key << YAML::Value << num(v); }
void put(YAML::Emitter& out, const char* key, int v) { out << YAML::Key << key << YAML::Value << v; }
void put(YAML::Emitter& out, const char* key, bool v) { out << YAML::Key << key << YAML::Value << v; }
void put(YAML::Emitter& out, const char* key, const std::string& v) {
  out << YAML::Key << key << YAML::Value << YAML::DoubleQuoted << v;
}

void put_list(YAML::Emitter& out, const char* key, const std::vector<double>& v) {
  out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double x : v) out << num(x);
  out << YAML::EndSeq;
}

int setup_number(Setup s) { return s == Setup::Exponential ? 1 : 2; }

}  // namespace

SimConfig parse_config_text(const std::string& yaml) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("<syntax>", e.what());
  }
  return from_yaml(root);
}

SimConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

std::string serialize(const SimConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  put(out, "experiment", to_string(c.experiment));
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  put(out, "materials_csv", c.materials_csv);
  out << YAML::Key << "schemes" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (Scheme s : c.schemes) out << to_string(s);
  out << YAML::EndSeq;

  out << YAML::Key << "canyon" << YAML::Value << YAML::BeginMap;
  put(out, "length_m", c.canyon.length_m);
  put(out, "lanes_per_direction", c.canyon.lanes_per_direction);
  put(out, "lane_width_m", c.canyon.lane_width_m);
  put(out, "sidewalk_width_m", c.canyon.sidewalk_width_m);
  put(out, "building_height_m", c.canyon.building_height_m);
  put(out, "wall_material", c.canyon.wall_material);
  put(out, "ground_material", c.canyon.ground_material);
  out << YAML::EndMap;

  const DeploymentParams& d = c.deployment;
  out << YAML::Key << "deployment" << YAML::Value << YAML::BeginMap;
  put(out, "gap_m", d.gap_m);
  put(out, "setup1_speed_kmh", d.setup1_speed_kmh);
  put(out, "setup1_speed_sd_fraction", d.setup1_speed_sd_fraction);
  put(out, "setup2_speed_kmh", d.setup2_speed_kmh);
  put(out, "tagged_lane", d.tagged_lane);
  out << YAML::Key << "tagged_gap_m" << YAML::Value;
  if (d.tagged_gap_m) out << num(*d.tagged_gap_m);
  else out << YAML::Null;
  put(out, "tessellation_cell_m", d.tessellation_cell_m);
  out << YAML::EndMap;

  out << YAML::Key << "vehicle" << YAML::Value << YAML::BeginMap;
  put(out, "length_m", d.body.length_m);
  put(out, "width_m", d.body.width_m);
  put(out, "height_m", d.body.height_m);
  out << YAML::Key << "strata" << YAML::Value << YAML::BeginSeq;
  for (const Stratum& s : d.body.strata) {
    out << YAML::Flow << YAML::BeginMap;
    put(out, "z_lo", s.z_lo);
    put(out, "z_hi", s.z_hi);
    put(out, "material", s.material);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;

  out << YAML::Key << "antenna" << YAML::Value << YAML::BeginMap;
  put(out, "altitude_m", d.front.altitude_m);
  put(out, "tx_gain_db", d.front.tx_gain_db);
  put(out, "rx_gain_db", d.front.rx_gain_db);
  put(out, "sidelobe_db", d.front.sidelobe_db);
  out << YAML::EndMap;

  out << YAML::Key << "radio" << YAML::Value << YAML::BeginMap;
  put(out, "carrier_ghz", c.radio.carrier_ghz);
  put(out, "bandwidth_ghz", c.radio.bandwidth_ghz);
  put(out, "tx_power_dbm", c.radio.tx_power_dbm);
  put(out, "noise_figure_db", c.radio.noise_figure_db);
  put(out, "temperature_k", c.radio.temperature_k);
  put(out, "water_vapor_percent", c.radio.water_vapor_percent);
  put(out, "absorption_per_m", c.radio.absorption_per_m);
  out << YAML::EndMap;

  out << YAML::Key << "mac" << YAML::Value << YAML::BeginMap;
  put(out, "slot_us", c.mac.slot_us);
  put(out, "cw_min", c.mac.cw_min);
  put(out, "cw_max", c.mac.cw_max);
  put(out, "inter_preamble_interval", c.mac.inter_preamble_interval);
  put(out, "min_ifs", c.mac.min_ifs);
  put(out, "reservation_length", c.mac.reservation_length);
  put(out, "radar_duty_cycle", c.mac.radar_duty_cycle);
  put(out, "p_tx", c.mac.p_tx);
  put(out, "preamble_threshold_db", c.mac.preamble_threshold_db);
  put(out, "decode_threshold_db", c.mac.decode_threshold_db);
  put(out, "adaptive_sensing", c.mac.adaptive_sensing);
  out << YAML::EndMap;

  out << YAML::Key << "propagation" << YAML::Value << YAML::BeginMap;
  put(out, "max_reflection_order", c.max_reflection_order);
  put(out, "position_tolerance_m", c.position_tolerance_m);
  put(out, "collision_threshold_db", c.collision_threshold_db);
  out << YAML::EndMap;

  out << YAML::Key << "simulation" << YAML::Value << YAML::BeginMap;
  put(out, "replications", c.replications);
  out << YAML::Key << "slots" << YAML::Value << c.slots_per_replication;
  put(out, "warmup_fraction", c.warmup_fraction);
  put(out, "confidence", c.confidence);
  out << YAML::EndMap;

  out << YAML::Key << "fig4" << YAML::Value << YAML::BeginMap;
  put_list(out, "distances_m", c.fig4_distances_m);
  put(out, "setup", setup_number(c.fig4_setup));
  out << YAML::EndMap;

  out << YAML::Key << "fig5" << YAML::Value << YAML::BeginMap;
  put_list(out, "gaps_m", c.fig5_gaps_m);
  out << YAML::Key << "setups" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (Setup s : c.fig5_setups) out << setup_number(s);
  out << YAML::EndSeq << YAML::EndMap;

  out << YAML::Key << "single" << YAML::Value << YAML::BeginMap;
  put(out, "setup", setup_number(c.single_setup));
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string config_hash(const SimConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Results

void write_results_csv(std::ostream& out, const SimConfig& config, const ExperimentResult& result) {
  out << "experiment,setup,sweep_value,scheme,metric,mean,ci_low,ci_high,replications\n";
  auto fmt = [](double v) {
    if (std::isnan(v)) return std::string("nan");
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  for (std::size_t p = 0; p < result.points.size(); ++p) {
    const SweepPoint& pt = result.points[p];
    for (std::size_t s = 0; s < result.schemes.size(); ++s) {
      for (const MetricSummary& m : summarize(result.records[p][s], config.confidence)) {
        out << to_string(config.experiment) << ',' << to_string(pt.setup) << ',' << fmt(pt.x) << ','
            << to_string(result.schemes[s]) << ',' << m.metric << ',' << fmt(m.value.mean) << ','
            << fmt(m.value.ci_low) << ',' << fmt(m.value.ci_high) << ',' << m.value.count << '\n';
      }
    }
  }
}

namespace {

struct Series {
  std::string label;
  std::string color;
  bool dashed = false;
  std::vector<std::pair<double, double>> xy;
};

const char* scheme_color(Scheme s) {
  switch (s) {
    case Scheme::Tdma: return "#1f77b4";
    case Scheme::RaCsma: return "#d62728";
    case Scheme::Adaptive: return "#2ca02c";
    case Scheme::Uncoordinated: return "#9467bd";
  }
  return "#000000";
}

std::string scheme_label(Scheme s) {
  switch (s) {
    case Scheme::Tdma: return "TDMA";
    case Scheme::RaCsma: return "RA-CSMA";
    case Scheme::Adaptive: return "Adaptive backoff";
    case Scheme::Uncoordinated: return "Uncoordinated";
  }
  return "?";
}

std::string fixed(double v, int digits = 1) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// One panel with a logarithmic x axis.
void panel(std::ostream& out, double ox, double oy, double w, double h, const std::vector<Series>& series,
           const std::string& xlabel, const std::string& ylabel) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Series& s : series)
    for (auto [x, y] : s.xy) {
      if (!std::isfinite(y) || !(x > 0)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!std::isfinite(xmin)) {
    xmin = 1;
    xmax = 10;
  }
  if (!std::isfinite(ymin)) {
    ymin = 0;
    ymax = 1;
  }
  if (xmax <= xmin) xmax = xmin * 10;
  if (ymax - ymin < 1e-9) {
    ymin -= 1;
    ymax += 1;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  const double lx0 = std::floor(std::log10(xmin)), lx1 = std::ceil(std::log10(xmax));
  auto px = [&](double x) { return ox + w * (std::log10(x) - lx0) / (lx1 - lx0); };
  auto py = [&](double y) { return oy + h - h * (y - ymin) / (ymax - ymin); };

  out << "<rect x='" << fixed(ox) << "' y='" << fixed(oy) << "' width='" << fixed(w) << "' height='" << fixed(h)
      << "' fill='none' stroke='#000'/>\n";
  for (double e = lx0; e <= lx1; e += 1.0) {
    const double x = px(std::pow(10.0, e));
    out << "<line x1='" << fixed(x) << "' y1='" << fixed(oy) << "' x2='" << fixed(x) << "' y2='" << fixed(oy + h)
        << "' stroke='#ddd'/>\n";
    out << "<text x='" << fixed(x) << "' y='" << fixed(oy + h + 16) << "' text-anchor='middle'>"
        << short_num(std::pow(10.0, e)) << "</text>\n";
  }
  const double step = std::pow(10.0, std::floor(std::log10((ymax - ymin) / 4)));
  const double ystep = (ymax - ymin) / step > 8 ? 2 * step : step;
  for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax; y += ystep) {
    out << "<line x1='" << fixed(ox) << "' y1='" << fixed(py(y)) << "' x2='" << fixed(ox + w) << "' y2='"
        << fixed(py(y)) << "' stroke='#eee'/>\n";
    out << "<text x='" << fixed(ox - 6) << "' y='" << fixed(py(y) + 4) << "' text-anchor='end'>"
        << fixed(std::abs(y) < 1e-9 ? 0.0 : y, ystep < 1 ? 1 : 0) << "</text>\n";
  }
  out << "<text x='" << fixed(ox + w / 2) << "' y='" << fixed(oy + h + 36) << "' text-anchor='middle'>" << xlabel
      << "</text>\n";
  out << "<text transform='translate(" << fixed(ox - 44) << ',' << fixed(oy + h / 2)
      << ") rotate(-90)' text-anchor='middle'>" << ylabel << "</text>\n";

  for (const Series& s : series) {
    std::string pts;
    for (auto [x, y] : s.xy)
      if (std::isfinite(y) && x > 0) pts += fixed(px(x), 2) + ',' + fixed(py(y), 2) + ' ';
    if (pts.empty()) continue;
    out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='2'"
        << (s.dashed ? " stroke-dasharray='6,4'" : "") << " points='" << pts << "'/>\n";
    for (auto [x, y] : s.xy)
      if (std::isfinite(y) && x > 0)
        out << "<circle cx='" << fixed(px(x), 2) << "' cy='" << fixed(py(y), 2) << "' r='3' fill='" << s.color
            << "'/>\n";
  }
}

}  // namespace

void write_figure_svg(std::ostream& out, const SimConfig& config, const ExperimentResult& result) {
  std::vector<Setup> setups;
  for (const SweepPoint& p : result.points)
    if (std::find(setups.begin(), setups.end(), p.setup) == setups.end()) setups.push_back(p.setup);

  std::vector<Series> sinr, se;
  for (Setup setup : setups) {
    for (std::size_t s = 0; s < result.schemes.size(); ++s) {
      Series a;
      a.label = scheme_label(result.schemes[s]) + (setups.size() > 1 ? ", Setup " + std::to_string(static_cast<int>(setup)) : "");
      a.color = scheme_color(result.schemes[s]);
      a.dashed = setup == Setup::Constant && setups.size() > 1;
      Series b = a;
      for (std::size_t p = 0; p < result.points.size(); ++p) {
        if (result.points[p].setup != setup) continue;
        const auto sum = summarize(result.records[p][s], config.confidence);
        for (const MetricSummary& m : sum) {
          if (m.metric == "sinr_db") a.xy.push_back({result.points[p].x, m.value.mean});
          if (m.metric == "spectral_efficiency") b.xy.push_back({result.points[p].x, m.value.mean});
        }
      }
      sinr.push_back(std::move(a));
      se.push_back(std::move(b));
    }
  }

  const bool fig4 = config.experiment == Experiment::Fig4;
  const std::string xlabel = fig4 ? "Distance between communicating vehicles, m" : "Mean distance between vehicles, m";
  const double W = 1000, H = 470;
  out << "<?xml version='1.0' encoding='UTF-8'?>\n";
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "' viewBox='0 0 " << W << ' '
      << H << "' font-family='sans-serif' font-size='12'>\n";
  out << "<rect width='100%' height='100%' fill='#fff'/>\n";
  out << "<text x='" << W / 2 << "' y='22' text-anchor='middle' font-size='15'>"
      << (fig4 ? "Spectral efficiency and SINR of the tagged V2V link"
               : "Average SINR versus mean inter-vehicle distance")
      << " (" << short_num(config.radio.carrier_ghz) << " GHz)</text>\n";
  panel(out, 70, 45, 380, 300, sinr, xlabel, "Average SINR, dB");
  panel(out, 580, 45, 380, 300, se, xlabel, "Spectral efficiency, bit/s/Hz");

  // Legend
  double lx = 70, ly = 405;
  for (std::size_t i = 0; i < sinr.size(); ++i) {
    const Series& s = sinr[i];
    out << "<line x1='" << fixed(lx) << "' y1='" << fixed(ly) << "' x2='" << fixed(lx + 28) << "' y2='" << fixed(ly)
        << "' stroke='" << s.color << "' stroke-width='2'" << (s.dashed ? " stroke-dasharray='6,4'" : "") << "/>\n";
    out << "<text x='" << fixed(lx + 34) << "' y='" << fixed(ly + 4) << "'>" << s.label << "</text>\n";
    lx += 225;
    if (lx > W - 200) {
      lx = 70;
      ly += 20;
    }
  }
  out << "</svg>\n";
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

void write_file(const fs::path& path, std::vector<fs::path>& written, const std::function<void(std::ostream&)>& body) {
  written.push_back(path);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  body(f);
  f.close();
  if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char ch;
  while (in.get(ch)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

int run(const RunManifest& m, std::ostream& err) {
  std::vector<fs::path> written;
  fs::path created_dir;
  auto cleanup = [&] {
    std::error_code ec;
    for (const fs::path& p : written) fs::remove(p, ec);
    if (!created_dir.empty()) fs::remove_all(created_dir, ec);
  };
  try {
    SimConfig config = m.config_path.empty() ? SimConfig{} : parse_config(m.config_path);
    if (m.experiment) config.experiment = experiment_from_string(*m.experiment);
    if (m.seed) config.seed = *m.seed;
    if (m.jobs < 1) throw ConfigError("--jobs", "must be >= 1");
    if (m.output_dir.empty()) throw ConfigError("--out", "output directory is empty");
    validate(config);
    if (!config.materials_csv.empty()) load_materials(config);

    const fs::path dir(m.output_dir);
    std::error_code ec;
    if (!fs::exists(dir, ec)) {
      // Remember the topmost directory we create so a failed run leaves nothing behind.
      fs::path top = dir;
      while (top.has_parent_path() && !top.parent_path().empty() && !fs::exists(top.parent_path(), ec))
        top = top.parent_path();
      if (!fs::create_directories(dir, ec) || ec)
        throw ConfigError("--out", "cannot create '" + dir.string() + "'");
      created_dir = top;
    } else if (!fs::is_directory(dir, ec)) {
      throw ConfigError("--out", "'" + dir.string() + "' is not a directory");
    }
    {
      const fs::path probe = dir / ".write-probe";
      std::ofstream f(probe);
      if (!f) throw ConfigError("--out", "'" + dir.string() + "' is not writable");
      f.close();
      fs::remove(probe, ec);
    }

    const ExperimentResult result = run_experiment(config, m.jobs);

    write_file(dir / "results.csv", written, [&](std::ostream& o) { write_results_csv(o, config, result); });
    if (m.emit_plots && config.experiment != Experiment::Single) {
      const char* name = config.experiment == Experiment::Fig4 ? "fig4.svg" : "fig5.svg";
      write_file(dir / name, written, [&](std::ostream& o) { write_figure_svg(o, config, result); });
    }
    write_file(dir / "provenance.txt", written, [&](std::ostream& o) {
      o << "# config_hash: " << config_hash(config) << '\n';
      o << "# seed: " << config.seed << '\n';
      o << "# experiment: " << to_string(config.experiment) << '\n';
      if (!config.materials_csv.empty())
        o << "# materials_hash: " << file_hash(config.materials_csv) << '\n';
      o << "# The remainder is the full configuration; pass this file to --config to rerun.\n";
      o << serialize(config);
    });
    return kExitOk;
  } catch (const ConfigError& e) {
    cleanup();
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    cleanup();
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace v2v

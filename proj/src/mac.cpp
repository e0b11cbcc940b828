#include "v2v/mac.hpp"

#include <algorithm>

#include "v2v/errors.hpp"

namespace v2v {

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Tdma: return "tdma";
    case Scheme::RaCsma: return "ra-csma";
    case Scheme::Adaptive: return "adaptive";
    case Scheme::Uncoordinated: return "uncoordinated";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& name) {
  for (Scheme s : {Scheme::Tdma, Scheme::RaCsma, Scheme::Adaptive, Scheme::Uncoordinated})
    if (to_string(s) == name) return s;
  throw ConfigError("mac.schemes", "unknown scheme '" + name + "'");
}

std::string to_string(FrameCategory category) {
  switch (category) {
    case FrameCategory::Data: return "data";
    case FrameCategory::Radar: return "radar";
    case FrameCategory::Preamble: return "preamble";
  }
  return "?";
}

namespace {

bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

int draw_backoff(MacState& s) { return std::uniform_int_distribution<int>(0, s.cw - 1)(s.rng); }

Frame draw_frame(MacState& s, const MacParams& p) {
  Frame f;
  f.category = std::bernoulli_distribution(p.radar_duty_cycle)(s.rng) ? FrameCategory::Radar
                                                                        : FrameCategory::Data;
  f.duration_slots = p.reservation_length;
  f.originator = s.vehicle_id;
  f.reservation_length = p.reservation_length;
  return f;
}

int initial_cw(const MacParams& p) { return p.forced_cw ? *p.forced_cw : p.cw_min; }

// Head of line for the next frame after a completed reservation.
void finish_frame(MacState& s, std::int64_t slot, const MacParams& p) {
  const bool data = s.pending && s.pending->category == FrameCategory::Data;
  if (p.forced_cw) {
    s.cw = *p.forced_cw;
  } else if (data) {
    s.cw = next_contention_window(s.cw, !s.frame_failed, p);
  } else {
    s.cw = p.cw_min;
  }
  s.frame_failed = false;
  s.mode = Mode::CommRx;
  s.pending = draw_frame(s, p);
  s.head_since = slot;
  s.countdown_start = -1;
  s.countdown_slots = 0;
  s.reservation_start = -1;
  s.preamble_timer = 0;
  s.backoff = draw_backoff(s);
}

MacAction occupancy(const MacState& s, Activity activity, std::int64_t offset, int span) {
  MacAction a;
  a.activity = activity;
  a.category = s.pending ? s.pending->category : FrameCategory::Data;
  a.frame_start = offset == 0;
  a.frame_end = offset == span - 1;
  return a;
}

void start_reservation(MacState& s, std::int64_t slot) {
  s.phase = Phase::Reserve;
  s.reservation_start = slot;
}

void fill_delays(MacAction& a, const MacState& s, std::int64_t slot) {
  a.access_delay_slots = slot - s.head_since;
  a.backoff_slots = s.countdown_slots;
  a.initial_wait_slots = (s.countdown_start >= 0 ? s.countdown_start : slot) - s.head_since;
}

}  // namespace

void validate(const MacParams& p) {
  if (!(p.slot_us > 0.0)) throw ConfigError("mac.slot_us", "must be positive");
  if (!power_of_two(p.cw_min) || !power_of_two(p.cw_max) || p.cw_min > p.cw_max)
    throw ConfigError("mac.cw_min", "contention window bounds must be powers of two with min <= max");
  if (p.inter_preamble_interval < 1) throw ConfigError("mac.inter_preamble_interval", "must be >= 1");
  if (p.min_ifs < 0 || p.min_ifs + 1 >= p.inter_preamble_interval)
    throw ConfigError("mac.min_ifs", "must be >= 0 and leave room between preambles");
  if (p.reservation_length < 1) throw ConfigError("mac.reservation_length", "must be >= 1");
  if (!(p.radar_duty_cycle >= 0.0 && p.radar_duty_cycle <= 1.0))
    throw ConfigError("mac.radar_duty_cycle", "must lie in [0, 1]");
  if (!(p.p_tx >= 0.0 && p.p_tx <= 1.0)) throw ConfigError("mac.p_tx", "must lie in [0, 1]");
  if (p.forced_cw && !power_of_two(*p.forced_cw))
    throw ConfigError("mac.forced_cw", "must be a power of two");
}

SlotClock make_clock(const MacParams& p, std::int64_t slot) {
  return SlotClock{p.slot_us * 1e-6, slot, p.inter_preamble_interval, p.min_ifs};
}

MacState initial_state(int vehicle_id, Scheme scheme, const MacParams& p, std::uint64_t seed) {
  MacState s;
  s.vehicle_id = vehicle_id;
  s.rng.seed(static_cast<std::uint_fast32_t>(seed % 2147483646ULL + 1));
  s.cw = initial_cw(p);
  s.pending = draw_frame(s, p);
  s.backoff = draw_backoff(s);
  switch (scheme) {
    case Scheme::RaCsma:
      s.phase = Phase::Listen;
      s.listen_remaining = p.inter_preamble_interval;
      break;
    case Scheme::Adaptive:
      s.phase = Phase::Backoff;
      break;
    case Scheme::Uncoordinated:
      s.frame_offset = std::uniform_int_distribution<int>(0, p.reservation_length - 1)(s.rng);
      s.phase = Phase::Reserve;
      break;
    case Scheme::Tdma:
      s.phase = Phase::Reserve;
      break;
  }
  return s;
}

bool preamble_detect(double snr_db, double threshold_db, Mode receiver_mode) {
  return receiver_mode != Mode::Radar && snr_db >= threshold_db;
}

int next_contention_window(int cw, bool success, const MacParams& p) {
  if (success) return p.cw_min;
  return std::min(2 * cw, p.cw_max);
}

MacStep ra_csma_step(MacState s, const SlotClock& clock, std::span<const int> detections,
                     const MacParams& p) {
  const std::int64_t t = clock.current_slot;
  const int period = clock.inter_preamble_interval;
  const int span = p.reservation_length;

  if (s.phase == Phase::Reserve) {
    const std::int64_t o = t - s.reservation_start;
    if (o < span) {
      const int k = static_cast<int>(o % period);
      const bool radar = s.pending->category == FrameCategory::Radar;
      Activity act;
      if (k == 0) {
        act = Activity::Preamble;
        s.mode = Mode::CommTx;
      } else {
        act = k <= clock.min_interframe_spacing ? Activity::Silent
                                                : (radar ? Activity::Radar : Activity::Data);
        s.mode = radar ? Mode::Radar : Mode::CommTx;
      }
      s.preamble_timer = period - k;
      MacAction a = occupancy(s, act, o, span);
      if (a.frame_start) fill_delays(a, s, t);
      return {std::move(s), a};
    }
    finish_frame(s, t, p);
    s.phase = Phase::Listen;
    s.listen_remaining = period;
  }

  // A preamble heard in the previous slot keeps the channel busy for one interval.
  if (!detections.empty()) s.channel_busy_until = std::max(s.channel_busy_until, t + period);

  MacAction a;
  const bool busy = t < s.channel_busy_until;
  const bool listened = s.listen_remaining == 0;
  if (!busy && s.backoff == 0 && listened) {
    start_reservation(s, t);
    s.mode = Mode::CommTx;
    s.preamble_timer = period;
    a = occupancy(s, Activity::Preamble, 0, span);
    fill_delays(a, s, t);
  } else if (!busy && listened && s.backoff > 0) {
    if (s.countdown_start < 0) s.countdown_start = t;
    --s.backoff;
    ++s.countdown_slots;
  }
  if (s.listen_remaining > 0 && --s.listen_remaining == 0 && s.phase == Phase::Listen)
    s.phase = Phase::Backoff;
  return {std::move(s), a};
}

MacStep uncoordinated_step(MacState s, const SlotClock& clock, double p_tx, const MacParams& p) {
  if (!(p_tx >= 0.0 && p_tx <= 1.0)) throw ConfigError("mac.p_tx", "must lie in [0, 1]");
  const int span = p.reservation_length;
  const std::int64_t o = (clock.current_slot + s.frame_offset) % span;
  if (o == 0 && clock.current_slot > 0) s.pending = draw_frame(s, p);
  const bool radar = s.pending->category == FrameCategory::Radar;
  const bool send = std::bernoulli_distribution(p_tx)(s.rng);
  Activity act = Activity::Listen;
  if (send) act = radar ? Activity::Radar : Activity::Data;
  s.mode = send ? (radar ? Mode::Radar : Mode::CommTx) : Mode::CommRx;
  MacAction a = occupancy(s, act, o, span);
  return {std::move(s), a};
}

MacStep adaptive_backoff_step(MacState s, const SlotClock& clock, std::span<const int> detections,
                              const MacParams& p) {
  const std::int64_t t = clock.current_slot;
  const int span = p.reservation_length;
  if (s.phase == Phase::Reserve) {
    const std::int64_t o = t - s.reservation_start;
    if (o < span) {
      const bool radar = s.pending->category == FrameCategory::Radar;
      s.mode = radar ? Mode::Radar : Mode::CommTx;
      MacAction a = occupancy(s, radar ? Activity::Radar : Activity::Data, o, span);
      if (a.frame_start) fill_delays(a, s, t);
      return {std::move(s), a};
    }
    finish_frame(s, t, p);
    s.phase = Phase::Backoff;
  }
  if (p.adaptive_sensing && !detections.empty())
    s.channel_busy_until = std::max(s.channel_busy_until, t + clock.inter_preamble_interval);
  const bool busy = p.adaptive_sensing && t < s.channel_busy_until;
  MacAction a;
  if (!busy) {
    if (s.backoff == 0) {
      start_reservation(s, t);
      const bool radar = s.pending->category == FrameCategory::Radar;
      s.mode = radar ? Mode::Radar : Mode::CommTx;
      a = occupancy(s, radar ? Activity::Radar : Activity::Data, 0, span);
      fill_delays(a, s, t);
    } else {
      if (s.countdown_start < 0) s.countdown_start = t;
      --s.backoff;
      ++s.countdown_slots;
    }
  }
  return {std::move(s), a};
}

TdmaSchedule tdma_schedule(const std::vector<std::vector<int>>& conflicts) {
  const int n = static_cast<int>(conflicts.size());
  TdmaSchedule sched;
  sched.color.assign(n, -1);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return conflicts[a].size() > conflicts[b].size(); });
  int colors = 1;
  std::vector<char> used;
  for (int v : order) {
    used.assign(conflicts[v].size() + 1, 0);
    for (int u : conflicts[v]) {
      const int c = sched.color[u];
      if (c >= 0 && c < static_cast<int>(used.size())) used[c] = 1;
    }
    int c = 0;
    while (used[c]) ++c;
    sched.color[v] = c;
    colors = std::max(colors, c + 1);
  }
  sched.frame_length = colors;
  return sched;
}

MacStep tdma_step(MacState s, const SlotClock& clock, const TdmaSchedule& schedule, int station,
                  const MacParams& p) {
  MacAction a;
  if (schedule.owns(station, clock.current_slot)) {
    s.pending = draw_frame(s, p);
    const bool radar = s.pending->category == FrameCategory::Radar;
    s.mode = radar ? Mode::Radar : Mode::CommTx;
    a.activity = radar ? Activity::Radar : Activity::Data;
    a.category = s.pending->category;
    a.frame_start = a.frame_end = true;
    a.access_delay_slots = 0;
  } else {
    s.mode = Mode::CommRx;
  }
  return {std::move(s), a};
}

MacNetwork::MacNetwork(Scheme scheme, const MacParams& params, int stations, std::uint64_t seed)
    : scheme_(scheme), params_(params), actions_(stations), heard_(stations) {
  validate(params_);
  states_.reserve(stations);
  for (int v = 0; v < stations; ++v) {
    // Independent, well-separated seeds per station.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(v + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    states_.push_back(initial_state(v, scheme, params_, z ^ (z >> 31)));
  }
  schedule_.color.assign(stations, 0);
  schedule_.frame_length = 1;
}

void MacNetwork::step(const std::vector<std::vector<int>>& hearers) {
  ++slot_;
  const SlotClock clock = make_clock(params_, slot_);
  const int n = static_cast<int>(states_.size());
  for (int v = 0; v < n; ++v) {
    MacStep st;
    switch (scheme_) {
      case Scheme::RaCsma: st = ra_csma_step(std::move(states_[v]), clock, heard_[v], params_); break;
      case Scheme::Adaptive:
        st = adaptive_backoff_step(std::move(states_[v]), clock, heard_[v], params_);
        break;
      case Scheme::Uncoordinated:
        st = uncoordinated_step(std::move(states_[v]), clock, params_.p_tx, params_);
        break;
      case Scheme::Tdma: st = tdma_step(std::move(states_[v]), clock, schedule_, v, params_); break;
    }
    states_[v] = std::move(st.state);
    actions_[v] = st.action;
  }
  for (auto& h : heard_) h.clear();
  const bool sensing = scheme_ == Scheme::RaCsma || (scheme_ == Scheme::Adaptive && params_.adaptive_sensing);
  if (!sensing) return;
  for (int u = 0; u < n; ++u) {
    const MacAction& a = actions_[u];
    const bool audible = scheme_ == Scheme::RaCsma ? a.activity == Activity::Preamble : a.transmitting();
    if (!audible) continue;
    for (int w : hearers[u]) {
      if (w == u || actions_[w].activity != Activity::Listen || states_[w].mode == Mode::Radar) continue;
      heard_[w].push_back(u);
    }
  }
}

Delivery classify_and_filter(const Frame& frame, Mode receiver_mode, double sinr_db,
                             const MacParams& params) {
  switch (frame.category) {
    case FrameCategory::Radar: return Delivery::Drop;
    case FrameCategory::Preamble: return Delivery::BusyOnly;
    case FrameCategory::Data:
      if (receiver_mode == Mode::Radar) return Delivery::Drop;
      return sinr_db >= params.decode_threshold_db ? Delivery::Deliver : Delivery::Drop;
  }
  return Delivery::Drop;
}

}  // namespace v2v

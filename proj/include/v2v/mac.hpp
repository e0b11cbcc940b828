#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace v2v {

enum class FrameCategory : std::uint8_t { Data, Radar, Preamble };

/// Frame header. The category field is all a receiver needs to drop radar frames.
struct Frame {
  FrameCategory category = FrameCategory::Data;
  int duration_slots = 1;
  int originator = -1;
  /// Slots reserved by a preamble.
  int reservation_length = 0;
};

enum class Mode : std::uint8_t { CommTx, CommRx, Radar };

enum class Scheme : std::uint8_t { Tdma, RaCsma, Adaptive, Uncoordinated };

std::string to_string(Scheme scheme);
/// Accepts "tdma", "ra-csma", "adaptive", "uncoordinated". Throws ConfigError.
Scheme scheme_from_string(const std::string& name);
std::string to_string(FrameCategory category);

struct MacParams {
  double slot_us = 5.0;
  int cw_min = 8;
  int cw_max = 1024;
  int inter_preamble_interval = 20;
  int min_ifs = 1;
  /// Total reservation span in slots, repeated preambles included.
  int reservation_length = 100;
  double radar_duty_cycle = 0.5;
  /// Per-slot transmit probability of uncoordinated access.
  double p_tx = 1.0;
  double preamble_threshold_db = -5.0;
  double decode_threshold_db = 10.0;
  /// Carrier sensing for adaptive access (freezes the backoff on detected preambles).
  bool adaptive_sensing = false;
  /// Pins the contention window (test hook).
  std::optional<int> forced_cw;

  bool operator==(const MacParams&) const = default;
};

/// Throws ConfigError naming the offending key.
void validate(const MacParams& params);

struct SlotClock {
  double slot_duration_s = 5e-6;
  std::int64_t current_slot = 0;
  int inter_preamble_interval = 20;
  int min_interframe_spacing = 1;
};

SlotClock make_clock(const MacParams& params, std::int64_t slot = 0);

enum class Phase : std::uint8_t { Listen, Backoff, Reserve };

struct MacState {
  int vehicle_id = -1;
  Mode mode = Mode::CommRx;
  Phase phase = Phase::Listen;
  int cw = 8;
  int backoff = 0;
  /// The channel is considered busy for slots < channel_busy_until.
  std::int64_t channel_busy_until = 0;
  /// Slots until the next repeated preamble of an ongoing reservation.
  int preamble_timer = 0;
  /// Head-of-line frame; saturated sources always have one.
  std::optional<Frame> pending;

  int listen_remaining = 0;
  std::int64_t reservation_start = -1;
  /// Set by the engine when the frame in flight failed.
  bool frame_failed = false;
  /// Slot at which the pending frame became head of line.
  std::int64_t head_since = 0;
  /// Slot of the first backoff decrement for the pending frame, or -1.
  std::int64_t countdown_start = -1;
  int countdown_slots = 0;
  /// Uncoordinated access: frame boundary offset.
  int frame_offset = 0;
  std::minstd_rand rng;
};

enum class Activity : std::uint8_t { Listen, Preamble, Silent, Data, Radar };

struct MacAction {
  Activity activity = Activity::Listen;
  FrameCategory category = FrameCategory::Data;
  bool frame_start = false;
  bool frame_end = false;
  /// Filled on frame_start: slots from head of line to the first preamble.
  std::int64_t access_delay_slots = -1;
  /// Idle slots spent decrementing the backoff counter.
  std::int64_t backoff_slots = -1;
  /// Slots between head of line and the first backoff decrement.
  std::int64_t initial_wait_slots = -1;

  bool transmitting() const {
    return activity == Activity::Preamble || activity == Activity::Data || activity == Activity::Radar;
  }
};

struct MacStep {
  MacState state;
  MacAction action;
};

/// Fresh saturated station at slot 0.
MacState initial_state(int vehicle_id, Scheme scheme, const MacParams& params, std::uint64_t seed);

/// SNR-threshold preamble detection. A receiver in radar mode hears nothing.
bool preamble_detect(double snr_db, double threshold_db, Mode receiver_mode);

/// Next contention window after a frame: doubled (capped) on failure, reset on success.
int next_contention_window(int cw, bool success, const MacParams& params);

/// One slot of radar-aware CSMA. `detections` lists stations whose preamble this station
/// heard during the previous slot.
MacStep ra_csma_step(MacState state, const SlotClock& clock, std::span<const int> detections,
                     const MacParams& params);

/// One slot of uncoordinated access. Throws ConfigError when p_tx is outside [0, 1].
MacStep uncoordinated_step(MacState state, const SlotClock& clock, double p_tx, const MacParams& params);

/// One slot of random access with binary exponential backoff. `detections` is ignored
/// unless params.adaptive_sensing is set.
MacStep adaptive_backoff_step(MacState state, const SlotClock& clock, std::span<const int> detections,
                              const MacParams& params);

struct TdmaSchedule {
  /// Slot color per station index.
  std::vector<int> color;
  int frame_length = 1;

  bool owns(int station, std::int64_t slot) const {
    return slot % frame_length == color[station];
  }
};

/// Greedy coloring of the conflict graph (adjacency lists, symmetric). Stations that
/// share a collision domain never share a slot.
TdmaSchedule tdma_schedule(const std::vector<std::vector<int>>& conflicts);

MacStep tdma_step(MacState state, const SlotClock& clock, const TdmaSchedule& schedule, int station,
                  const MacParams& params);

/// Runs one channel-access scheme for a set of saturated stations, slot by slot.
/// Preambles (and, for adaptive access with sensing, any transmission) reach the
/// stations listed as hearers of the transmitter; they act on them in the next slot.
class MacNetwork {
 public:
  MacNetwork(Scheme scheme, const MacParams& params, int stations, std::uint64_t seed);

  void set_schedule(TdmaSchedule schedule) { schedule_ = std::move(schedule); }
  /// Advances every station by one slot. `hearers[u]` lists the stations that can detect u.
  void step(const std::vector<std::vector<int>>& hearers);

  Scheme scheme() const { return scheme_; }
  const MacParams& params() const { return params_; }
  /// Slot of the most recent step (-1 before the first).
  std::int64_t slot() const { return slot_; }
  const std::vector<MacAction>& actions() const { return actions_; }
  const std::vector<MacState>& states() const { return states_; }
  std::vector<MacState>& states() { return states_; }

 private:
  Scheme scheme_;
  MacParams params_;
  std::vector<MacState> states_;
  std::vector<MacAction> actions_;
  std::vector<std::vector<int>> heard_;
  TdmaSchedule schedule_;
  std::int64_t slot_ = -1;
};

enum class Delivery : std::uint8_t { Deliver, Drop, BusyOnly };

/// Receive-side header handling: radar frames are dropped by category, preambles only
/// mark the channel busy, data frames are delivered when decodable and the receiver is
/// not in radar mode.
Delivery classify_and_filter(const Frame& frame, Mode receiver_mode, double sinr_db,
                             const MacParams& params);

}  // namespace v2v

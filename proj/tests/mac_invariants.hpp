#pragma once

// Randomized slot traces over small station sets, checked against the channel-access
// invariants. Returns an empty string when every check holds, else the first violation.

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "v2v/mac.hpp"

namespace v2v::testing {

struct TraceSetup {
  MacParams params;
  int stations = 2;
  int slots = 500;
  std::vector<std::vector<int>> hearers;
};

inline TraceSetup random_trace_setup(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TraceSetup t;
  t.stations = std::uniform_int_distribution<int>(2, 6)(rng);
  t.slots = std::uniform_int_distribution<int>(300, 1500)(rng);
  const int periods[] = {10, 20, 20};
  const int lengths[] = {40, 60, 100, 100, 150};
  t.params.inter_preamble_interval = periods[rng() % 3];
  t.params.reservation_length = lengths[rng() % 5];
  t.params.radar_duty_cycle = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  t.params.cw_min = 1 << std::uniform_int_distribution<int>(1, 4)(rng);
  t.params.cw_max = 1024;
  const bool complete = rng() % 2 == 0;
  const double link = std::uniform_real_distribution<double>(0.3, 1.0)(rng);
  t.hearers.assign(t.stations, {});
  for (int u = 0; u < t.stations; ++u)
    for (int w = 0; w < t.stations; ++w)
      if (u != w && (complete || std::bernoulli_distribution(link)(rng))) t.hearers[u].push_back(w);
  return t;
}

inline bool hears(const TraceSetup& t, int tx, int rx) {
  for (int w : t.hearers[tx])
    if (w == rx) return true;
  return false;
}

inline bool pow2_in(int v, int lo, int hi) { return v >= lo && v <= hi && (v & (v - 1)) == 0; }

/// Mutual exclusion, radar-reservation protection, contention-window trajectory and
/// deafness recovery for radar-aware CSMA; contention-window trajectory for adaptive access.
inline std::string check_mac_trace(std::uint64_t seed) {
  const TraceSetup t = random_trace_setup(seed);
  const int n = t.stations;
  const MacParams& p = t.params;
  const int period = p.inter_preamble_interval;
  std::ostringstream err;

  {
    MacNetwork net(Scheme::RaCsma, p, n, seed);
    std::vector<std::int64_t> start(n, -1);
    std::vector<FrameCategory> cat(n, FrameCategory::Data);
    // Radar protection: stations that heard station u's reserving preamble, until end[u].
    std::vector<std::vector<int>> protected_from(n);
    std::vector<Mode> prev_mode(n, Mode::CommRx);
    // Deafness: slot at which w left radar mode, -1 when not tracking.
    std::vector<std::int64_t> left_radar(n, -1);
    // Pending busy checks: (station, slot by which it must be busy).
    std::vector<std::pair<int, std::int64_t>> must_be_busy;
    std::vector<int> prev_cw(n);
    std::vector<bool> prev_failed(n, false);
    std::mt19937_64 fb(seed ^ 0x5bd1e995);
    for (int v = 0; v < n; ++v) prev_cw[v] = net.states()[v].cw;

    for (int slot = 0; slot < t.slots; ++slot) {
      net.step(t.hearers);
      const auto& acts = net.actions();
      const auto& st = net.states();

      for (auto it = must_be_busy.begin(); it != must_be_busy.end();) {
        if (it->second == slot) {
          if (st[it->first].channel_busy_until <= slot) {
            err << "deafness: station " << it->first << " not busy at slot " << slot;
            return err.str();
          }
          it = must_be_busy.erase(it);
        } else {
          ++it;
        }
      }

      for (int v = 0; v < n; ++v) {
        const MacAction& a = acts[v];
        if (!pow2_in(st[v].cw, p.cw_min, p.cw_max) || st[v].backoff < 0 || st[v].backoff >= st[v].cw) {
          err << "ra-csma cw/backoff out of range at slot " << slot;
          return err.str();
        }
        if (a.frame_start) {
          // The window changed only at the end of the previous frame: doubled after a
          // failed data frame, reset otherwise.
          if (start[v] >= 0) {
            const int expect = (cat[v] == FrameCategory::Data && prev_failed[v])
                                   ? std::min(2 * prev_cw[v], p.cw_max)
                                   : p.cw_min;
            if (st[v].cw != expect) {
              err << "ra-csma cw trajectory " << prev_cw[v] << " -> " << st[v].cw << " at slot " << slot;
              return err.str();
            }
          }
          for (int u = 0; u < n; ++u) {
            for (int w : protected_from[u]) {
              if (w == v && start[u] >= 0 && slot < start[u] + p.reservation_length) {
                err << "radar protection: " << v << " started inside reservation of " << u << " at slot " << slot;
                return err.str();
              }
            }
          }
          start[v] = slot;
          cat[v] = a.category;
          prev_cw[v] = st[v].cw;
          protected_from[v].clear();
          if (a.category == FrameCategory::Radar)
            for (int w : t.hearers[v])
              if (acts[w].activity == Activity::Listen && st[w].mode != Mode::Radar) protected_from[v].push_back(w);
          // Data frames fail at random; the engine would report decode failures the same way.
          const bool fail = a.category == FrameCategory::Data && fb() % 2 == 0;
          net.states()[v].frame_failed = fail;
          prev_failed[v] = fail;
        }
      }

      for (int u = 0; u < n; ++u) {
        const bool tx_u = acts[u].activity == Activity::Data || acts[u].activity == Activity::Radar;
        for (int w = u + 1; w < n && tx_u; ++w) {
          const bool tx_w = acts[w].activity == Activity::Data || acts[w].activity == Activity::Radar;
          if (tx_w && hears(t, u, w) && hears(t, w, u) && start[u] != start[w]) {
            err << "mutual exclusion: " << u << " and " << w << " overlap at slot " << slot;
            return err.str();
          }
        }
      }

      for (int w = 0; w < n; ++w) {
        if (prev_mode[w] == Mode::Radar && st[w].mode != Mode::Radar) left_radar[w] = slot;
        prev_mode[w] = st[w].mode;
      }
      // First repeated preamble a station hears after leaving radar mode.
      for (int u = 0; u < n; ++u) {
        if (acts[u].activity != Activity::Preamble) continue;
        for (int w : t.hearers[u]) {
          if (left_radar[w] < 0 || acts[w].activity != Activity::Listen || st[w].mode == Mode::Radar) continue;
          if (slot - left_radar[w] >= period) {
            left_radar[w] = -1;
            continue;
          }
          must_be_busy.emplace_back(w, slot + 1);
          left_radar[w] = -1;
        }
      }
    }
  }

  {
    MacNetwork net(Scheme::Adaptive, p, n, seed + 1);
    std::mt19937_64 fb(seed ^ 0x1234567);
    std::vector<int> cw(n);
    std::vector<bool> failed(n, false);
    std::vector<bool> seen(n, false);
    std::vector<FrameCategory> cat(n, FrameCategory::Data);
    for (int slot = 0; slot < t.slots; ++slot) {
      net.step(t.hearers);
      for (int v = 0; v < n; ++v) {
        const MacState& s = net.states()[v];
        if (!pow2_in(s.cw, p.cw_min, p.cw_max) || s.backoff < 0 || s.backoff >= s.cw) {
          err << "adaptive cw/backoff out of range at slot " << slot;
          return err.str();
        }
        const MacAction& a = net.actions()[v];
        if (!a.frame_start) continue;
        if (seen[v]) {
          const int expect =
              cat[v] == FrameCategory::Data && failed[v] ? std::min(2 * cw[v], p.cw_max) : p.cw_min;
          if (s.cw != expect) {
            err << "adaptive cw trajectory " << cw[v] << " -> " << s.cw << " at slot " << slot;
            return err.str();
          }
        }
        seen[v] = true;
        cw[v] = s.cw;
        cat[v] = a.category;
        failed[v] = a.category == FrameCategory::Data && fb() % 3 != 0;
        net.states()[v].frame_failed = failed[v];
      }
    }
  }
  return {};
}

}  // namespace v2v::testing

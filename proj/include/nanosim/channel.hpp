#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nanosim/engine.hpp"
#include "nanosim/message.hpp"
#include "nanosim/random.hpp"
#include "nanosim/trace.hpp"

namespace nanosim {

// A frame forced to be lost at every receiver, matched by (sender, seq).
// Used by scenarios that exercise the leader-loss remedial path.
struct ForcedLoss {
  int sender = 0;
  std::uint64_t seq = 0;
};

struct ChannelConfig {
  double loss_prob = 0.0;  // per (message, receiver), independent
  bool collisions_enabled = true;
  bool priority_survives = true;
  std::vector<ForcedLoss> forced_losses;
};

enum class TxStatus { Delivered, Collided };

struct TxWindow {
  SimTime start{};
  SimTime end{};  // half-open [start, end)
  bool priority = false;
};

inline bool overlaps(const TxWindow& a, const TxWindow& b) {
  return a.start < b.end && b.start < a.end;
}

// Statuses per connected component of the overlap graph: a lone frame is
// delivered; in an overlapping component, a unique priority frame survives
// (when enabled) and everything else is destroyed.
inline std::vector<TxStatus> resolve_collisions(const std::vector<TxWindow>& txs,
                                                const ChannelConfig& cfg) {
  const std::size_t n = txs.size();
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (comp[i] >= 0) continue;
    comp[i] = ncomp;
    std::vector<std::size_t> stack{i};
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (comp[v] < 0 && overlaps(txs[u], txs[v])) {
          comp[v] = ncomp;
          stack.push_back(v);
        }
      }
    }
    ++ncomp;
  }

  std::vector<int> size(ncomp, 0), prio_count(ncomp, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++size[comp[i]];
    if (txs[i].priority) ++prio_count[comp[i]];
  }

  std::vector<TxStatus> out(n, TxStatus::Collided);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = comp[i];
    if (size[c] == 1) {
      out[i] = TxStatus::Delivered;
    } else if (cfg.priority_survives && prio_count[c] == 1 && txs[i].priority) {
      out[i] = TxStatus::Delivered;
    }
  }
  return out;
}

// Shared broadcast medium for all platoons: fixed airtime per frame,
// delivery at end of airtime, per-receiver independent loss.
class Channel {
 public:
  using DeliverFn = std::function<void(int receiver, const Message&)>;

  Channel(Engine& engine, RandomStream& rng, TraceRecorder& trace, ChannelConfig cfg,
          SimTime slot_width)
      : engine_(engine), rng_(rng), trace_(trace), cfg_(std::move(cfg)), slot_width_(slot_width) {}

  void set_agents(std::vector<int> agent_ids, DeliverFn deliver) {
    agent_ids_ = std::move(agent_ids);
    std::sort(agent_ids_.begin(), agent_ids_.end());
    deliver_ = std::move(deliver);
  }

  SimTime slot_width() const { return slot_width_; }
  const ChannelConfig& config() const { return cfg_; }

  // Puts a frame on the air starting now; every agent except the sender
  // gets a delivery at now + slot_width unless the frame is lost or collides.
  void transmit(const Message& msg) {
    const SimTime start = engine_.now();
    const SimTime end = start + slot_width_;
    trace_.record({start, TraceEvent::Tx, msg.platoon, msg.sender, to_string(msg.kind), msg.seq, -1});

    // Frames separated by a gap can never chain into the same overlap
    // component, so the active window resets whenever the air goes idle.
    const bool any_overlap = std::any_of(active_.begin(), active_.end(),
                                         [&](const Active& a) { return a.win.end > start; });
    if (!any_overlap) active_.clear();
    const std::uint64_t tx_id = next_tx_id_++;
    active_.push_back(Active{TxWindow{start, end, msg.priority()}, msg, tx_id});

    engine_.schedule(slot_width_, EventKind::DeliveryAt, [this, tx_id] { deliver(tx_id); });
  }

 private:
  struct Active {
    TxWindow win;
    Message msg;
    std::uint64_t id;
  };

  void deliver(std::uint64_t tx_id) {
    const auto it = std::find_if(active_.begin(), active_.end(),
                                 [&](const Active& a) { return a.id == tx_id; });
    if (it == active_.end()) return;  // pruned; cannot happen for an undelivered frame
    const Active tx = *it;

    if (cfg_.collisions_enabled) {
      std::vector<TxWindow> wins;
      wins.reserve(active_.size());
      std::size_t self = 0;
      for (std::size_t i = 0; i < active_.size(); ++i) {
        wins.push_back(active_[i].win);
        if (active_[i].id == tx_id) self = i;
      }
      if (resolve_collisions(wins, cfg_)[self] == TxStatus::Collided) {
        trace_.record({engine_.now(), TraceEvent::Collided, tx.msg.platoon, tx.msg.sender,
                       to_string(tx.msg.kind), tx.msg.seq, -1});
        return;
      }
    }

    const bool forced = std::any_of(cfg_.forced_losses.begin(), cfg_.forced_losses.end(),
                                    [&](const ForcedLoss& f) {
                                      return f.sender == tx.msg.sender && f.seq == tx.msg.seq;
                                    });
    for (int receiver : agent_ids_) {
      if (receiver == tx.msg.sender) continue;
      const bool lost =
          forced || (cfg_.loss_prob > 0.0 &&
                     rng_.bernoulli("loss/p" + std::to_string(tx.msg.platoon) + "/r" +
                                        std::to_string(receiver),
                                    cfg_.loss_prob));
      if (lost) {
        trace_.record({engine_.now(), TraceEvent::Lost, tx.msg.platoon, tx.msg.sender,
                       to_string(tx.msg.kind), tx.msg.seq, receiver});
      } else {
        trace_.record({engine_.now(), TraceEvent::Rx, tx.msg.platoon, tx.msg.sender,
                       to_string(tx.msg.kind), tx.msg.seq, receiver});
        deliver_(receiver, tx.msg);
      }
    }
  }

  Engine& engine_;
  RandomStream& rng_;
  TraceRecorder& trace_;
  ChannelConfig cfg_;
  SimTime slot_width_;
  std::vector<int> agent_ids_;
  DeliverFn deliver_;
  std::vector<Active> active_;
  std::uint64_t next_tx_id_ = 0;
};

}  // namespace nanosim

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <vector>

#include "nanosim/channel.hpp"
#include "nanosim/engine.hpp"
#include "nanosim/message.hpp"
#include "nanosim/random.hpp"
#include "nanosim/trace.hpp"

using namespace nanosim;

namespace {

Message beacon(int sender, std::uint64_t seq = 0, int platoon = 0) {
  Message m;
  m.kind = MessageKind::MemberBeacon;
  m.platoon = platoon;
  m.sender = sender;
  m.seq = seq;
  return m;
}

Message alert(int sender, std::uint64_t seq = 0, int platoon = 0) {
  Message m = beacon(sender, seq, platoon);
  m.kind = MessageKind::DetectionAlert;
  return m;
}

struct Harness {
  Engine engine;
  RandomStream rng{1};
  TraceRecorder trace;
  Channel channel;
  std::vector<std::pair<int, Message>> delivered;

  explicit Harness(ChannelConfig cfg, std::vector<int> agents = {0, 1, 2, 3, 4, 5})
      : channel(engine, rng, trace, cfg, SimTime::from_units(0.5)) {
    channel.set_agents(std::move(agents),
                       [this](int r, const Message& m) { delivered.emplace_back(r, m); });
  }
};

TxWindow win(double start, double width = 0.5, bool priority = false) {
  return {SimTime::from_units(start), SimTime::from_units(start + width), priority};
}

}  // namespace

TEST_CASE("resolve_collisions: stale backup vs fresh beacon in the same window") {
  ChannelConfig cfg;
  const auto st = resolve_collisions({win(100.5), win(100.5)}, cfg);
  CHECK(st[0] == TxStatus::Collided);
  CHECK(st[1] == TxStatus::Collided);
}

TEST_CASE("resolve_collisions: a unique priority frame survives an overlap") {
  ChannelConfig cfg;
  const auto st = resolve_collisions({win(42.3, 0.5, true), win(42.0)}, cfg);
  CHECK(st[0] == TxStatus::Delivered);
  CHECK(st[1] == TxStatus::Collided);

  SUBCASE("unless priority survival is disabled") {
    cfg.priority_survives = false;
    const auto st2 = resolve_collisions({win(42.3, 0.5, true), win(42.0)}, cfg);
    CHECK(st2[0] == TxStatus::Collided);
    CHECK(st2[1] == TxStatus::Collided);
  }
}

TEST_CASE("resolve_collisions: two overlapping priority frames destroy each other") {
  ChannelConfig cfg;
  const auto st = resolve_collisions({win(10.0, 0.5, true), win(10.2, 0.5, true)}, cfg);
  CHECK(st[0] == TxStatus::Collided);
  CHECK(st[1] == TxStatus::Collided);
}

TEST_CASE("resolve_collisions: chained overlap forms one component") {
  // T1 and T3 do not overlap directly but share T2, so all three are one
  // component; T1 is its unique priority frame and survives.
  ChannelConfig cfg;
  const auto st = resolve_collisions({win(0.0, 0.5, true), win(0.4), win(0.8)}, cfg);
  CHECK(st[0] == TxStatus::Delivered);
  CHECK(st[1] == TxStatus::Collided);
  CHECK(st[2] == TxStatus::Collided);

  // Two priority frames anywhere in the component destroy everything.
  const auto st2 =
      resolve_collisions({win(0.0, 0.5, true), win(0.4), win(0.8, 0.5, true)}, cfg);
  for (const auto s : st2) CHECK(s == TxStatus::Collided);
}

TEST_CASE("resolve_collisions: disjoint frames are all delivered") {
  ChannelConfig cfg;
  const auto st = resolve_collisions({win(0.0), win(0.5), win(1.0)}, cfg);
  for (const auto s : st) CHECK(s == TxStatus::Delivered);
}

TEST_CASE("collision statuses match a brute-force transitive-closure oracle") {
  std::mt19937_64 gen(7);
  ChannelConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 8);
    std::vector<TxWindow> txs;
    for (int i = 0; i < n; ++i) {
      txs.push_back({SimTime{static_cast<std::int64_t>(gen() % 40)}, SimTime{0}, (gen() % 3) == 0});
      txs.back().end = txs.back().start + SimTime{5};
    }
    const auto st = resolve_collisions(txs, cfg);

    // Oracle: adjacency matrix, closed under composition, then the rule.
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) adj[i][j] = (i == j) || overlaps(txs[i], txs[j]);
    }
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (adj[i][k] && adj[k][j]) adj[i][j] = true;
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      int size = 0, prio = 0;
      for (int j = 0; j < n; ++j) {
        if (adj[i][j]) {
          ++size;
          if (txs[j].priority) ++prio;
        }
      }
      const bool delivered = size == 1 || (prio == 1 && txs[i].priority);
      CHECK(st[i] == (delivered ? TxStatus::Delivered : TxStatus::Collided));
      for (int j = 0; j < n; ++j) CHECK(adj[i][j] == adj[j][i]);  // symmetry
    }
  }
}

TEST_CASE("zero loss, no overlap: delivery to every non-sender at start + slot_width") {
  Harness h(ChannelConfig{});
  h.engine.schedule(SimTime{0}, EventKind::TransmitStart, [&] { h.channel.transmit(beacon(2)); });
  h.engine.run_until(SimTime::from_units(10.0));
  REQUIRE(h.delivered.size() == 5);
  for (const auto& [r, m] : h.delivered) CHECK(r != 2);

  // Delivery timestamps come from the trace: all at 0.5.
  int rx = 0;
  for (const auto& line : h.trace.lines()) {
    if (line.find("\tRX\t") != std::string::npos) {
      CHECK(line.substr(0, line.find('\t')) == "0.5");
      ++rx;
    }
  }
  CHECK(rx == 5);
}

TEST_CASE("loss_prob=1: zero deliveries") {
  ChannelConfig cfg;
  cfg.loss_prob = 1.0;
  Harness h(cfg);
  h.engine.schedule(SimTime{0}, EventKind::TransmitStart, [&] { h.channel.transmit(beacon(0)); });
  h.engine.run_until(SimTime::from_units(10.0));
  CHECK(h.delivered.empty());
}

TEST_CASE("delivered fraction converges to 1 - loss_prob (1e5 frames, one receiver)") {
  ChannelConfig cfg;
  cfg.loss_prob = 0.1;
  Harness h(cfg, {0, 1});
  const int frames = 100000;
  for (int i = 0; i < frames; ++i) {
    h.engine.schedule(SimTime{static_cast<std::int64_t>(i) * 10}, EventKind::TransmitStart,
                      [&h, i] { h.channel.transmit(beacon(0, static_cast<std::uint64_t>(i))); });
  }
  h.engine.run_until(SimTime{frames * 10 + 10});
  const double ratio = static_cast<double>(h.delivered.size()) / frames;
  CHECK(ratio == doctest::Approx(0.9).epsilon(0.011));
}

TEST_CASE("overlapping frames both collide on the shared medium") {
  Harness h(ChannelConfig{}, {0, 1, 2});
  h.engine.schedule(SimTime{0}, EventKind::TransmitStart, [&] { h.channel.transmit(beacon(0)); });
  h.engine.schedule(SimTime{2}, EventKind::TransmitStart, [&] { h.channel.transmit(beacon(1)); });
  h.engine.run_until(SimTime::from_units(10.0));
  CHECK(h.delivered.empty());
  int collided = 0;
  for (const auto& line : h.trace.lines()) {
    if (line.find("\tCOLLIDED\t") != std::string::npos) ++collided;
  }
  CHECK(collided == 2);
}

TEST_CASE("an overlapping priority alert is delivered, the beacon destroyed") {
  Harness h(ChannelConfig{}, {0, 1, 2});
  h.engine.schedule(SimTime{0}, EventKind::TransmitStart, [&] { h.channel.transmit(beacon(0)); });
  h.engine.schedule(SimTime{3}, EventKind::TransmitStart, [&] { h.channel.transmit(alert(1)); });
  h.engine.run_until(SimTime::from_units(10.0));
  REQUIRE(h.delivered.size() == 2);  // alert to agents 0 and 2
  for (const auto& [r, m] : h.delivered) CHECK(m.kind == MessageKind::DetectionAlert);
}

TEST_CASE("with collisions disabled and zero loss, every frame reaches all non-senders") {
  ChannelConfig cfg;
  cfg.collisions_enabled = false;
  Harness h(cfg, {0, 1, 2});
  h.engine.schedule(SimTime{0}, EventKind::TransmitStart, [&] { h.channel.transmit(beacon(0)); });
  h.engine.schedule(SimTime{2}, EventKind::TransmitStart, [&] { h.channel.transmit(beacon(1)); });
  h.engine.run_until(SimTime::from_units(10.0));
  CHECK(h.delivered.size() == 4);
}

TEST_CASE("forced losses drop a matched frame at every receiver") {
  ChannelConfig cfg;
  cfg.forced_losses.push_back({0, 1});
  Harness h(cfg, {0, 1, 2});
  h.engine.schedule(SimTime{0}, EventKind::TransmitStart,
                    [&] { h.channel.transmit(beacon(0, 0)); });
  h.engine.schedule(SimTime{10}, EventKind::TransmitStart,
                    [&] { h.channel.transmit(beacon(0, 1)); });
  h.engine.run_until(SimTime::from_units(10.0));
  CHECK(h.delivered.size() == 2);  // seq 0 delivered to both, seq 1 lost everywhere
  int lost = 0;
  for (const auto& line : h.trace.lines()) {
    if (line.find("\tLOST\t") != std::string::npos) ++lost;
  }
  CHECK(lost == 2);
}

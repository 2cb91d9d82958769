#pragma once

#include <map>
#include <variant>
#include <vector>

#include "tvcov/geometry.hpp"

namespace tvcov {

/// Planned positions for the T steps starting at the round's target time.
struct ReferencePositions {
  std::vector<Point> positions;
};

struct UpdateVote {
  bool accept = false;
};

struct PlanAck {};

using Payload = std::variant<ReferencePositions, UpdateVote, PlanAck>;

struct RoundMessage {
  int sender = 0;
  long round = 0;
  Payload payload;
};

/// Round-barriered broadcast channel between agents and the coordinator.
class MessageBus {
 public:
  virtual ~MessageBus() = default;
  virtual void publish(RoundMessage msg) = 0;
  /// Everything published for `round`, ordered by sender then arrival, and
  /// removed from the bus.
  virtual std::vector<RoundMessage> gather(long round) = 0;
};

/// Reliable, in-order, lock-step bus. Messages are stored by value.
class SynchronousBus : public MessageBus {
 public:
  void publish(RoundMessage msg) override;
  std::vector<RoundMessage> gather(long round) override;

 private:
  std::map<long, std::vector<RoundMessage>> pending_;
};

/// Logical AND of exactly `agents` votes. Throws MissingVote otherwise.
bool consensus_round(const std::vector<bool>& votes, std::size_t agents);

/// One UpdateVote per agent 0..agents-1, indexed by sender. Throws
/// MissingVote on a missing or duplicated vote.
std::vector<bool> collect_votes(const std::vector<RoundMessage>& msgs, std::size_t agents);

/// One ReferencePositions per agent, indexed by sender. Throws MissingVote
/// on a missing or duplicated broadcast.
std::vector<std::vector<Point>> collect_positions(const std::vector<RoundMessage>& msgs,
                                                  std::size_t agents);

}  // namespace tvcov

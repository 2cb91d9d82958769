#include "tvcov/message_bus.hpp"

#include <algorithm>
#include <optional>
#include <string>

#include "tvcov/errors.hpp"

namespace tvcov {

void SynchronousBus::publish(RoundMessage msg) { pending_[msg.round].push_back(std::move(msg)); }

std::vector<RoundMessage> SynchronousBus::gather(long round) {
  auto it = pending_.find(round);
  if (it == pending_.end()) return {};
  std::vector<RoundMessage> out = std::move(it->second);
  pending_.erase(it);
  std::stable_sort(out.begin(), out.end(),
                   [](const RoundMessage& a, const RoundMessage& b) { return a.sender < b.sender; });
  return out;
}

bool consensus_round(const std::vector<bool>& votes, std::size_t agents) {
  if (votes.size() != agents) {
    fail(ErrorCode::MissingVote, "expected " + std::to_string(agents) + " votes, got " +
                                     std::to_string(votes.size()));
  }
  return std::all_of(votes.begin(), votes.end(), [](bool v) { return v; });
}

namespace {

template <class T>
std::vector<const T*> one_per_agent(const std::vector<RoundMessage>& msgs, std::size_t agents,
                                    const char* what) {
  std::vector<const T*> slot(agents, nullptr);
  for (const RoundMessage& m : msgs) {
    const T* p = std::get_if<T>(&m.payload);
    if (!p) continue;
    if (m.sender < 0 || static_cast<std::size_t>(m.sender) >= agents) {
      fail(ErrorCode::MissingVote, std::string(what) + " from unknown agent " + std::to_string(m.sender));
    }
    if (slot[m.sender]) {
      fail(ErrorCode::MissingVote, std::string("duplicate ") + what + " from agent " + std::to_string(m.sender));
    }
    slot[m.sender] = p;
  }
  for (std::size_t i = 0; i < agents; ++i) {
    if (!slot[i]) fail(ErrorCode::MissingVote, std::string("no ") + what + " from agent " + std::to_string(i));
  }
  return slot;
}

}  // namespace

std::vector<bool> collect_votes(const std::vector<RoundMessage>& msgs, std::size_t agents) {
  std::vector<bool> out;
  for (const UpdateVote* v : one_per_agent<UpdateVote>(msgs, agents, "vote")) out.push_back(v->accept);
  return out;
}

std::vector<std::vector<Point>> collect_positions(const std::vector<RoundMessage>& msgs,
                                                  std::size_t agents) {
  std::vector<std::vector<Point>> out;
  for (const ReferencePositions* r : one_per_agent<ReferencePositions>(msgs, agents, "reference broadcast")) {
    out.push_back(r->positions);
  }
  return out;
}

}  // namespace tvcov

#include "gcp/message_bus.hpp"

#include <algorithm>
#include <string>

#include "gcp/error.hpp"

namespace gcp {

MessageBus::MessageBus(std::size_t workers) : boxes_(workers), next_sequence_(workers, 0) {
  if (workers == 0) throw ConfigError("message bus needs at least one worker");
}

void MessageBus::check_rank(std::size_t rank) const {
  if (rank >= boxes_.size())
    throw IndexError("message addressed to unknown worker " + std::to_string(rank));
}

void MessageBus::send(std::size_t from, std::size_t to, int tag, std::vector<index_t> rows,
                      std::vector<double> payload) {
  check_rank(from);
  check_rank(to);
  std::lock_guard lock(mutex_);
  boxes_[to].messages.push_back({from, next_sequence_[from]++, tag, std::move(rows), std::move(payload)});
}

std::vector<Message> MessageBus::receive(std::size_t to, int tag) {
  check_rank(to);
  std::vector<Message> out;
  {
    std::lock_guard lock(mutex_);
    auto& box = boxes_[to].messages;
    auto split = std::stable_partition(box.begin(), box.end(),
                                       [tag](const Message& m) { return m.tag != tag; });
    out.assign(std::make_move_iterator(split), std::make_move_iterator(box.end()));
    box.erase(split, box.end());
  }
  std::sort(out.begin(), out.end(), [](const Message& a, const Message& b) {
    return a.sender != b.sender ? a.sender < b.sender : a.sequence < b.sequence;
  });
  return out;
}

std::size_t MessageBus::pending() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& b : boxes_) n += b.messages.size();
  return n;
}

}  // namespace gcp

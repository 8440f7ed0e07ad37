#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <vector>

#include "gcp/sparse_tensor.hpp"

namespace gcp {

struct Message {
  std::size_t sender = 0;
  std::uint64_t sequence = 0;  // per-sender send counter
  int tag = 0;
  std::vector<index_t> rows;
  std::vector<double> payload;
};

/// In-process mailbox transport between simulated workers. Sends may come
/// from any thread; receive() hands messages back ordered by (sender,
/// sequence), so delivery order never depends on scheduling.
class MessageBus {
 public:
  explicit MessageBus(std::size_t workers);

  std::size_t workers() const noexcept { return boxes_.size(); }

  void send(std::size_t from, std::size_t to, int tag, std::vector<index_t> rows,
            std::vector<double> payload);

  /// Removes and returns every pending message for `to` carrying `tag`.
  std::vector<Message> receive(std::size_t to, int tag);

  /// Messages not yet received, over all mailboxes.
  std::size_t pending() const;

 private:
  struct Box {
    std::vector<Message> messages;
  };

  void check_rank(std::size_t rank) const;

  mutable std::mutex mutex_;
  std::vector<Box> boxes_;
  std::vector<std::uint64_t> next_sequence_;
};

}  // namespace gcp

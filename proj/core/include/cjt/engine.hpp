#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <stop_token>
#include <string>
#include <vector>

#include "cjt/annotated_tree.hpp"

namespace cjt {

struct Message {
  DirectedEdge edge;
  std::shared_ptr<const AnnotatedRelation> content;
  std::string fingerprint;
  std::vector<std::string> kept;
  /// Sent by a bag with no active relation and no inputs; content is the unit.
  bool identity = false;

  std::size_t rows() const { return identity ? 0 : content->size(); }
};

using MessagePtr = std::shared_ptr<const Message>;

/// Directed-edge keyed message slots. Each put publishes a complete message.
class MessageStore {
 public:
  MessageStore() = default;
  MessageStore(const MessageStore& other);
  MessageStore& operator=(const MessageStore& other);

  MessagePtr get(DirectedEdge e) const;
  void put(MessagePtr m);
  bool contains(DirectedEdge e) const;
  void erase(DirectedEdge e);
  void clear();
  std::size_t size() const;
  std::vector<MessagePtr> all() const;

 private:
  mutable std::shared_mutex mu_;
  std::map<DirectedEdge, MessagePtr> slots_;
};

struct ExecStats {
  std::size_t messages_computed = 0;
  std::size_t max_intermediate_rows = 0;
  std::size_t rows_materialized = 0;

  void merge(const ExecStats& o);
};

/// Resolves an input message for an edge given the fingerprint it must carry.
using MessageSource = std::function<MessagePtr(DirectedEdge, const std::string& fingerprint)>;

/// Returns stored messages only when their fingerprint matches.
MessageSource store_source(const MessageStore& store);

/// Message e.from → e.to. Every other neighbor's message into e.from must be
/// available from `inputs`.
MessagePtr compute_message(const AnnotatedTree& tree, DirectedEdge e, const MessageSource& inputs,
                           ExecStats* stats = nullptr);

/// Join of the bag's active relations with all incoming messages, projected
/// onto `keep` (absent attributes are ignored).
AnnotatedRelation absorption(const AnnotatedTree& tree, BagId bag, const MessageSource& inputs,
                             const std::vector<std::string>& keep, ExecStats* stats = nullptr);

/// Query answer at `root`: the absorption projected to the output group-by.
AnnotatedRelation absorb(const AnnotatedTree& tree, BagId root, const MessageSource& inputs,
                         ExecStats* stats = nullptr);

/// Edges directed toward `root` in leaf-to-root order.
std::vector<DirectedEdge> upward_order(const JunctionHypertree& jt, BagId root);
/// Edges directed away from `root` in root-to-leaf order.
std::vector<DirectedEdge> downward_order(const JunctionHypertree& jt, BagId root);

/// Computes every message toward `root` into `store`; returns the count.
std::size_t upward_pass(const AnnotatedTree& tree, BagId root, MessageStore& store, ExecStats* stats = nullptr);
std::size_t downward_pass(const AnnotatedTree& tree, BagId root, MessageStore& store, ExecStats* stats = nullptr);

struct CalibrateOptions {
  std::optional<BagId> root;
  std::stop_token cancel;
  /// Maximum number of messages to compute in this call.
  std::optional<std::size_t> budget;
  /// Extra lookup consulted before computing (e.g. a shared cache).
  MessageSource fallback;
  std::function<void(const MessagePtr&)> on_message;
};

struct CalibrateResult {
  bool completed = false;
  std::size_t messages_done = 0;
  std::size_t messages_reused = 0;
};

/// Upward then downward pass, skipping edges that already hold a valid
/// message. Cancellation and the budget are checked between messages.
CalibrateResult calibrate(const AnnotatedTree& tree, MessageStore& store, const CalibrateOptions& options = {},
                          ExecStats* stats = nullptr);

/// Whether every directed edge holds a message valid for `tree`.
bool is_calibrated(const AnnotatedTree& tree, const MessageStore& store);
std::size_t valid_messages(const AnnotatedTree& tree, const MessageStore& store);

/// Ground truth: full join of the active relations, selections, then one
/// projection to the group-by. Throws kOracleTooLarge past `row_budget`.
AnnotatedRelation oracle_execute(const JoinGraph& g, const QuerySpec& query, std::size_t row_budget = 5'000'000,
                                 ExecStats* stats = nullptr);

}  // namespace cjt

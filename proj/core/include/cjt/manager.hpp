#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cjt/planner.hpp"

namespace cjt {

/// Fingerprint-keyed message cache with an LRU row budget. Pinned entries
/// are never evicted; when only pinned entries remain the budget may be
/// exceeded and a warning is counted.
class MessageCache {
 public:
  explicit MessageCache(std::size_t row_budget = 10'000'000);

  /// Refreshes recency on a hit.
  MessagePtr get(const std::string& fingerprint);
  /// Lookup without touching recency.
  MessagePtr peek(const std::string& fingerprint) const;
  /// Returns false when the fingerprint is already cached (no-op).
  bool put(MessagePtr m);
  bool contains(const std::string& fingerprint) const;

  void pin(const std::string& owner, const std::string& fingerprint);
  /// Replaces every pin held by `owner`.
  void set_pins(const std::string& owner, const std::vector<std::string>& fingerprints);
  void release(const std::string& owner);
  bool pinned(const std::string& fingerprint) const;

  void set_budget(std::size_t rows);
  std::size_t budget() const;
  std::size_t rows() const;
  std::size_t entries() const;
  std::size_t evictions() const;
  std::size_t warnings() const;
  std::size_t hits() const;
  std::size_t misses() const;

  nlohmann::json stats() const;

 private:
  struct Entry {
    MessagePtr message;
    std::list<std::string>::iterator lru;
  };

  void enforce_locked();
  bool pinned_locked(const std::string& fp) const;

  mutable std::shared_mutex mu_;
  std::size_t budget_;
  std::size_t rows_ = 0;
  std::size_t evictions_ = 0;
  std::size_t warnings_ = 0;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
  // Front is most recent.
  std::list<std::string> lru_;
  std::unordered_map<std::string, Entry> entries_;
  std::map<std::string, std::set<std::string>> pins_by_owner_;
  std::unordered_map<std::string, std::size_t> pin_counts_;
};

enum class CalibrationStatus { kNone, kPartial, kFull };

std::string_view to_string(CalibrationStatus s);

/// A hypertree bound to one query for one (visualization, session).
struct CjtState {
  std::string viz;
  std::string session;  // empty for the offline dashboard CJT
  std::shared_ptr<const JoinGraph> graph;
  std::shared_ptr<const JunctionHypertree> jt;
  std::shared_ptr<const AnnotatedTree> tree;
  std::shared_ptr<MessageStore> store;
  QuerySpec query;

  std::size_t messages_done() const;
  std::size_t messages_total() const { return 2 * jt->edges().size(); }
  CalibrationStatus status() const;
  const AnnotationSet& annotations() const { return tree->annotations(); }
};

struct ManagerConfig {
  std::size_t cache_rows = 10'000'000;
  /// Launch calibration after each interaction.
  bool background = true;
  /// Messages per background run; unlimited when empty.
  std::optional<std::size_t> background_budget;
  /// Plan against the latest session CJT; otherwise always the offline one.
  bool session_reuse = true;
  /// Consult the shared cache during planning.
  bool use_cache = true;
  PlanOptions plan;
};

/// Reads CJT_CACHE_ROWS, CJT_BACKGROUND and CJT_PUSHDOWN over `base`.
ManagerConfig config_from_env(ManagerConfig base = {});
ManagerConfig config_from_json(const nlohmann::json& j, ManagerConfig base = {});

struct InteractStats {
  std::size_t computed = 0;
  std::size_t reused = 0;
  std::size_t cache_hits = 0;
  std::size_t steiner_bags = 0;
  std::size_t max_intermediate_rows = 0;
  double latency_ms = 0.0;
  CalibrationStatus calibration = CalibrationStatus::kNone;
  std::size_t calibration_done = 0;
  std::size_t calibration_total = 0;
};

nlohmann::json to_json(const InteractStats& s);

struct InteractResult {
  AnnotatedRelation answer;
  InteractStats stats;
  QuerySpec query;
  SteinerPlan plan;
};

struct DashboardResult {
  std::string viz;
  AnnotatedRelation answer;
  std::size_t messages_computed = 0;
  std::size_t messages_reused = 0;
};

/// Owns join graphs, dashboard CJTs, session CJTs and the message cache.
class Manager {
 public:
  explicit Manager(ManagerConfig config = {});
  ~Manager();
  Manager(const Manager&) = delete;
  Manager& operator=(const Manager&) = delete;

  /// Uses the graph's id when set and free, else assigns one. A taken
  /// explicit id raises kConflict.
  std::string register_graph(std::shared_ptr<JoinGraph> g);
  std::shared_ptr<const JoinGraph> graph(const std::string& id) const;
  std::shared_ptr<const JunctionHypertree> jointree(const std::string& graph_id) const;

  /// Fully calibrates the dashboard query's CJT and pins its messages.
  DashboardResult register_dashboard(const std::string& graph_id, const QuerySpec& q,
                                     std::optional<std::string> viz_id = std::nullopt);
  std::shared_ptr<const CjtState> offline(const std::string& viz) const;
  QuerySpec dashboard_query(const std::string& viz) const;
  std::vector<std::string> visualizations() const;

  std::string open_session();

  InteractResult interact(const std::string& session, const std::string& viz, const QuerySpec& next);
  /// Applies a widget delta to the session's latest query for `viz`.
  InteractResult interact_delta(const std::string& session, const std::string& viz, const nlohmann::json& delta);

  /// Synchronous calibration of the latest session CJT within `budget`
  /// messages (think-time in message units).
  CalibrateResult think(const std::string& session, const std::string& viz,
                        std::optional<std::size_t> budget = std::nullopt);
  /// Blocks until the background task of (session, viz) finishes.
  void wait_background(const std::string& session, const std::string& viz);

  std::shared_ptr<const CjtState> latest(const std::string& session, const std::string& viz) const;
  QuerySpec current_query(const std::string& session, const std::string& viz) const;
  nlohmann::json stats(const std::string& session, const std::string& viz) const;

  MessageCache& cache() { return cache_; }
  const ManagerConfig& config() const { return config_; }

 private:
  struct GraphEntry {
    std::shared_ptr<const JoinGraph> graph;
    std::shared_ptr<const JunctionHypertree> jt;
    std::shared_ptr<const CostModel> cost;
  };

  struct Viz {
    std::string id;
    std::string graph;
    QuerySpec query;
    std::shared_ptr<const CjtState> offline;
  };

  /// FIFO admission for one (session, viz).
  class Ticketed {
   public:
    void acquire();
    void release();

   private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::uint64_t next_ = 0;
    std::uint64_t serving_ = 0;
    friend class Manager;
  };

  struct Slot {
    Ticketed queue;
    mutable std::mutex mu;  // guards the fields below
    std::shared_ptr<const CjtState> latest;
    std::jthread background;
    std::size_t interactions = 0;
    std::size_t computed = 0;
    std::size_t reused = 0;
    double latency_ms = 0.0;
    std::optional<InteractStats> last;
  };

  const Viz& viz_locked(const std::string& id) const;
  std::shared_ptr<Slot> slot(const std::string& session, const std::string& viz);
  std::shared_ptr<Slot> find_slot(const std::string& session, const std::string& viz) const;
  void stop_background(Slot& s);
  void launch_background(Slot& s, std::shared_ptr<const CjtState> state);
  MessageSource cache_source();
  static std::string owner_of(const std::string& session, const std::string& viz);

  ManagerConfig config_;
  MessageCache cache_;
  mutable std::mutex mu_;  // guards the registries
  std::map<std::string, GraphEntry> graphs_;
  std::map<std::string, Viz> viz_;
  std::set<std::string> sessions_;
  std::map<std::pair<std::string, std::string>, std::shared_ptr<Slot>> slots_;
  std::size_t next_graph_ = 0;
  std::size_t next_viz_ = 0;
  std::size_t next_session_ = 0;
};

}  // namespace cjt

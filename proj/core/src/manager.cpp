#include "cjt/manager.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "cjt/error.hpp"

namespace cjt {

MessageCache::MessageCache(std::size_t row_budget) : budget_(row_budget) {}

MessagePtr MessageCache::get(const std::string& fingerprint) {
  std::unique_lock lock(mu_);
  auto it = entries_.find(fingerprint);
  if (it == entries_.end()) {
    ++misses_;
    return nullptr;
  }
  ++hits_;
  lru_.splice(lru_.begin(), lru_, it->second.lru);
  return it->second.message;
}

MessagePtr MessageCache::peek(const std::string& fingerprint) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(fingerprint);
  return it == entries_.end() ? nullptr : it->second.message;
}

bool MessageCache::put(MessagePtr m) {
  if (!m) raise(ErrorCode::kInvalidArgument, "cannot cache a null message");
  std::unique_lock lock(mu_);
  if (entries_.contains(m->fingerprint)) return false;
  lru_.push_front(m->fingerprint);
  rows_ += m->rows();
  const std::string key = m->fingerprint;
  entries_.emplace(key, Entry{std::move(m), lru_.begin()});
  enforce_locked();
  return true;
}

bool MessageCache::contains(const std::string& fingerprint) const {
  std::shared_lock lock(mu_);
  return entries_.contains(fingerprint);
}

bool MessageCache::pinned_locked(const std::string& fp) const {
  auto it = pin_counts_.find(fp);
  return it != pin_counts_.end() && it->second > 0;
}

void MessageCache::pin(const std::string& owner, const std::string& fingerprint) {
  std::unique_lock lock(mu_);
  if (pins_by_owner_[owner].insert(fingerprint).second) ++pin_counts_[fingerprint];
}

void MessageCache::set_pins(const std::string& owner, const std::vector<std::string>& fingerprints) {
  std::unique_lock lock(mu_);
  auto& held = pins_by_owner_[owner];
  for (const auto& fp : held) {
    if (--pin_counts_[fp] == 0) pin_counts_.erase(fp);
  }
  held.clear();
  for (const auto& fp : fingerprints) {
    if (held.insert(fp).second) ++pin_counts_[fp];
  }
  enforce_locked();
}

void MessageCache::release(const std::string& owner) { set_pins(owner, {}); }

bool MessageCache::pinned(const std::string& fingerprint) const {
  std::shared_lock lock(mu_);
  return pinned_locked(fingerprint);
}

void MessageCache::set_budget(std::size_t rows) {
  std::unique_lock lock(mu_);
  budget_ = rows;
  enforce_locked();
}

void MessageCache::enforce_locked() {
  auto it = lru_.end();
  while (rows_ > budget_ && it != lru_.begin()) {
    --it;
    if (pinned_locked(*it)) continue;
    auto e = entries_.find(*it);
    rows_ -= e->second.message->rows();
    entries_.erase(e);
    it = lru_.erase(it);
    ++evictions_;
  }
  if (rows_ > budget_) ++warnings_;
}

std::size_t MessageCache::budget() const {
  std::shared_lock lock(mu_);
  return budget_;
}

std::size_t MessageCache::rows() const {
  std::shared_lock lock(mu_);
  return rows_;
}

std::size_t MessageCache::entries() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::size_t MessageCache::evictions() const {
  std::shared_lock lock(mu_);
  return evictions_;
}

std::size_t MessageCache::warnings() const {
  std::shared_lock lock(mu_);
  return warnings_;
}

std::size_t MessageCache::hits() const {
  std::shared_lock lock(mu_);
  return hits_;
}

std::size_t MessageCache::misses() const {
  std::shared_lock lock(mu_);
  return misses_;
}

nlohmann::json MessageCache::stats() const {
  std::shared_lock lock(mu_);
  std::size_t pinned = 0;
  for (const auto& [fp, e] : entries_) pinned += pinned_locked(fp);
  return {{"budget_rows", budget_}, {"rows", rows_},          {"entries", entries_.size()},
          {"pinned", pinned},       {"evictions", evictions_}, {"over_budget_warnings", warnings_},
          {"hits", hits_},          {"misses", misses_}};
}

std::string_view to_string(CalibrationStatus s) {
  switch (s) {
    case CalibrationStatus::kNone: return "none";
    case CalibrationStatus::kPartial: return "partial";
    case CalibrationStatus::kFull: return "full";
  }
  return "none";
}

std::size_t CjtState::messages_done() const { return valid_messages(*tree, *store); }

CalibrationStatus CjtState::status() const {
  const std::size_t done = messages_done();
  if (done == messages_total()) return CalibrationStatus::kFull;
  return done == 0 ? CalibrationStatus::kNone : CalibrationStatus::kPartial;
}

ManagerConfig config_from_json(const nlohmann::json& j, ManagerConfig base) {
  if (!j.is_object()) raise(ErrorCode::kParse, "manager config must be an object");
  base.cache_rows = j.value("cache_rows", base.cache_rows);
  base.background = j.value("background", base.background);
  if (j.contains("background_budget")) {
    const auto& b = j.at("background_budget");
    base.background_budget = b.is_null() ? std::nullopt : std::optional<std::size_t>(b.get<std::size_t>());
  }
  base.session_reuse = j.value("session_reuse", base.session_reuse);
  base.use_cache = j.value("use_cache", base.use_cache);
  base.plan.shrink = j.value("shrink", base.plan.shrink);
  if (j.value("pushdown", false)) base.plan.bind.selection = SelectionPlacement::kPushDown;
  return base;
}

ManagerConfig config_from_env(ManagerConfig base) {
  if (const char* v = std::getenv("CJT_CACHE_ROWS")) base.cache_rows = std::strtoull(v, nullptr, 10);
  if (const char* v = std::getenv("CJT_BACKGROUND")) base.background = std::string_view(v) != "0";
  if (const char* v = std::getenv("CJT_PUSHDOWN")) {
    base.plan.bind.selection = std::string_view(v) == "1" ? SelectionPlacement::kPushDown : SelectionPlacement::kNearRoot;
  }
  return base;
}

nlohmann::json to_json(const InteractStats& s) {
  return {{"computed", s.computed},
          {"reused", s.reused},
          {"cache_hits", s.cache_hits},
          {"steiner_bags", s.steiner_bags},
          {"max_intermediate_rows", s.max_intermediate_rows},
          {"latency_ms", s.latency_ms},
          {"calibration_status", to_string(s.calibration)},
          {"calibration_done", s.calibration_done},
          {"calibration_total", s.calibration_total}};
}

void Manager::Ticketed::acquire() {
  std::unique_lock lock(mu_);
  const std::uint64_t mine = next_++;
  cv_.wait(lock, [&] { return serving_ == mine; });
}

void Manager::Ticketed::release() {
  {
    std::lock_guard lock(mu_);
    ++serving_;
  }
  cv_.notify_all();
}

namespace {

template <class T>
class TicketGuard {
 public:
  explicit TicketGuard(T& t) : t_(t) { t_.acquire(); }
  ~TicketGuard() { t_.release(); }
  TicketGuard(const TicketGuard&) = delete;
  TicketGuard& operator=(const TicketGuard&) = delete;

 private:
  T& t_;
};

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> store_fingerprints(const MessageStore& store) {
  std::vector<std::string> out;
  for (const auto& m : store.all()) out.push_back(m->fingerprint);
  return out;
}

}  // namespace

Manager::Manager(ManagerConfig config) : config_(std::move(config)), cache_(config_.cache_rows) {}

Manager::~Manager() {
  std::vector<std::shared_ptr<Slot>> all;
  {
    std::lock_guard lock(mu_);
    for (auto& [k, s] : slots_) all.push_back(s);
  }
  for (auto& s : all) stop_background(*s);
}

std::string Manager::owner_of(const std::string& session, const std::string& viz) {
  return "session:" + session + "/" + viz;
}

std::string Manager::register_graph(std::shared_ptr<JoinGraph> g) {
  if (!g) raise(ErrorCode::kInvalidArgument, "null join graph");
  auto jt = std::make_shared<const JunctionHypertree>(build_jt(*g));
  auto cost = std::make_shared<const CostModel>(*g);
  std::lock_guard lock(mu_);
  std::string id = g->id();
  if (id.empty()) {
    do {
      id = "g" + std::to_string(++next_graph_);
    } while (graphs_.contains(id));
    g->set_id(id);
  } else if (graphs_.contains(id)) {
    raise(ErrorCode::kConflict, "graph id '" + id + "' already registered");
  }
  graphs_[id] = GraphEntry{std::move(g), std::move(jt), std::move(cost)};
  return id;
}

std::shared_ptr<const JoinGraph> Manager::graph(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = graphs_.find(id);
  if (it == graphs_.end()) raise(ErrorCode::kUnknownId, "unknown graph '" + id + "'");
  return it->second.graph;
}

std::shared_ptr<const JunctionHypertree> Manager::jointree(const std::string& graph_id) const {
  std::lock_guard lock(mu_);
  auto it = graphs_.find(graph_id);
  if (it == graphs_.end()) raise(ErrorCode::kUnknownId, "unknown graph '" + graph_id + "'");
  return it->second.jt;
}

MessageSource Manager::cache_source() {
  return [this](DirectedEdge e, const std::string& fp) -> MessagePtr {
    auto m = cache_.get(fp);
    return m && m->edge == e ? m : nullptr;
  };
}

DashboardResult Manager::register_dashboard(const std::string& graph_id, const QuerySpec& q,
                                            std::optional<std::string> viz_id) {
  GraphEntry ge;
  std::string id;
  {
    std::lock_guard lock(mu_);
    auto it = graphs_.find(graph_id);
    if (it == graphs_.end()) raise(ErrorCode::kUnknownId, "unknown graph '" + graph_id + "'");
    ge = it->second;
    if (viz_id) {
      if (viz_.contains(*viz_id)) raise(ErrorCode::kConflict, "visualization '" + *viz_id + "' already registered");
      id = *viz_id;
    } else {
      do {
        id = "v" + std::to_string(++next_viz_);
      } while (viz_.contains(id));
    }
    // Reserve the id while calibrating.
    viz_[id] = Viz{id, graph_id, q, nullptr};
  }
  try {
    auto state = std::make_shared<CjtState>();
    state->viz = id;
    state->graph = ge.graph;
    state->jt = ge.jt;
    state->query = q.normalized();
    state->tree = std::make_shared<const AnnotatedTree>(ge.graph, ge.jt,
                                                        bind_annotations(*ge.graph, *ge.jt, q, config_.plan.bind));
    state->store = std::make_shared<MessageStore>();

    const std::string owner = "viz:" + id;
    CalibrateOptions opts;
    if (config_.use_cache) opts.fallback = cache_source();
    opts.on_message = [&](const MessagePtr& m) {
      cache_.pin(owner, m->fingerprint);
      cache_.put(m);
    };
    auto cal = calibrate(*state->tree, *state->store, opts);
    cache_.set_pins(owner, store_fingerprints(*state->store));
    for (const auto& m : state->store->all()) cache_.put(m);

    DashboardResult out;
    out.viz = id;
    out.messages_computed = cal.messages_done;
    out.messages_reused = cal.messages_reused;
    out.answer = absorb(*state->tree, choose_root(*state->tree, *ge.cost), store_source(*state->store));

    std::lock_guard lock(mu_);
    viz_[id].offline = std::move(state);
    return out;
  } catch (...) {
    std::lock_guard lock(mu_);
    viz_.erase(id);
    throw;
  }
}

const Manager::Viz& Manager::viz_locked(const std::string& id) const {
  auto it = viz_.find(id);
  if (it == viz_.end() || !it->second.offline) raise(ErrorCode::kUnknownId, "unknown visualization '" + id + "'");
  return it->second;
}

std::shared_ptr<const CjtState> Manager::offline(const std::string& viz) const {
  std::lock_guard lock(mu_);
  return viz_locked(viz).offline;
}

QuerySpec Manager::dashboard_query(const std::string& viz) const {
  std::lock_guard lock(mu_);
  return viz_locked(viz).query;
}

std::vector<std::string> Manager::visualizations() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, v] : viz_) {
    if (v.offline) out.push_back(id);
  }
  return out;
}

std::string Manager::open_session() {
  std::lock_guard lock(mu_);
  std::string id;
  do {
    id = "s" + std::to_string(++next_session_);
  } while (sessions_.contains(id));
  sessions_.insert(id);
  return id;
}

std::shared_ptr<Manager::Slot> Manager::slot(const std::string& session, const std::string& viz) {
  std::lock_guard lock(mu_);
  if (!sessions_.contains(session)) raise(ErrorCode::kUnknownId, "unknown session '" + session + "'");
  viz_locked(viz);
  auto& s = slots_[{session, viz}];
  if (!s) s = std::make_shared<Slot>();
  return s;
}

std::shared_ptr<Manager::Slot> Manager::find_slot(const std::string& session, const std::string& viz) const {
  std::lock_guard lock(mu_);
  if (!sessions_.contains(session)) raise(ErrorCode::kUnknownId, "unknown session '" + session + "'");
  viz_locked(viz);
  auto it = slots_.find({session, viz});
  return it == slots_.end() ? nullptr : it->second;
}

void Manager::stop_background(Slot& s) {
  std::jthread t;
  {
    std::lock_guard lock(s.mu);
    t = std::move(s.background);
  }
  if (t.joinable()) {
    t.request_stop();
    t.join();
  }
}

void Manager::launch_background(Slot& s, std::shared_ptr<const CjtState> state) {
  const std::string owner = owner_of(state->session, state->viz);
  std::jthread t([this, state, owner](std::stop_token st) {
    CalibrateOptions opts;
    opts.cancel = st;
    opts.budget = config_.background_budget;
    if (config_.use_cache) {
      opts.fallback = [this, owner](DirectedEdge e, const std::string& fp) -> MessagePtr {
        auto m = cache_.get(fp);
        if (!m || m->edge != e) return nullptr;
        cache_.pin(owner, fp);
        return m;
      };
    }
    opts.on_message = [this, owner](const MessagePtr& m) {
      cache_.pin(owner, m->fingerprint);
      cache_.put(m);
    };
    try {
      calibrate(*state->tree, *state->store, opts);
    } catch (const std::exception&) {
      // Background work never surfaces errors; the next interaction recomputes.
    }
  });
  std::lock_guard lock(s.mu);
  s.background = std::move(t);
}

InteractResult Manager::interact(const std::string& session, const std::string& viz, const QuerySpec& next) {
  auto s = slot(session, viz);
  TicketGuard ticket(s->queue);
  stop_background(*s);
  const auto t0 = std::chrono::steady_clock::now();

  std::shared_ptr<const CjtState> offline_base;
  std::shared_ptr<const CjtState> session_base;
  std::shared_ptr<const CostModel> cost;
  {
    std::lock_guard lock(mu_);
    const Viz& v = viz_locked(viz);
    offline_base = v.offline;
    cost = graphs_.at(v.graph).cost;
  }
  if (config_.session_reuse) {
    std::lock_guard lock(s->mu);
    session_base = s->latest;
  }

  struct Candidate {
    std::shared_ptr<const CjtState> base;
    std::set<std::string> cache_hits;
    MessageSource usable;
    SteinerPlan plan;
  };
  auto make_candidate = [&](std::shared_ptr<const CjtState> base) {
    auto c = std::make_unique<Candidate>();
    c->base = std::move(base);
    c->usable = [this, c = c.get()](DirectedEdge e, const std::string& fp) -> MessagePtr {
      if (auto m = c->base->store->get(e); m && m->fingerprint == fp) return m;
      if (!config_.use_cache) return nullptr;
      auto m = cache_.get(fp);
      if (!m || m->edge != e) return nullptr;
      c->cache_hits.insert(fp);
      return m;
    };
    c->plan = plan_with_reuse(c->base->graph, c->base->jt, c->base->annotations(), next, c->usable, *cost,
                              config_.plan);
    return c;
  };
  // The latest session CJT is preferred; the offline CJT wins only when it
  // needs strictly fewer messages.
  auto chosen = make_candidate(session_base ? session_base : offline_base);
  if (session_base && !chosen->plan.schedule.empty()) {
    auto alt = make_candidate(offline_base);
    if (alt->plan.schedule.size() < chosen->plan.schedule.size()) chosen = std::move(alt);
  }
  const std::shared_ptr<const CjtState>& base = chosen->base;
  const MessageSource& usable = chosen->usable;

  InteractResult out;
  out.query = next.normalized();
  out.plan = chosen->plan;

  auto state = std::make_shared<CjtState>();
  state->viz = viz;
  state->session = session;
  state->graph = base->graph;
  state->jt = base->jt;
  state->query = out.query;
  state->tree = std::make_shared<const AnnotatedTree>(base->graph, base->jt, out.plan.annotations);
  state->store = std::make_shared<MessageStore>();

  auto exec = execute_plan(*state->tree, out.plan, usable);
  for (const auto& m : exec.computed) state->store->put(m);
  // Carry over every message still valid under the new annotations.
  for (const auto& e : state->jt->directed_edges()) {
    if (state->store->contains(e)) continue;
    const auto& fp = state->tree->fingerprint(e);
    if (auto m = base->store->get(e); m && m->fingerprint == fp) {
      state->store->put(m);
    } else if (config_.use_cache) {
      if (auto c = cache_.peek(fp); c && c->edge == e) state->store->put(c);
    }
  }
  cache_.set_pins(owner_of(session, viz), store_fingerprints(*state->store));
  for (const auto& m : exec.computed) cache_.put(m);

  out.answer = std::move(exec.answer);
  InteractStats& st = out.stats;
  st.computed = exec.computed.size();
  st.reused = out.plan.reused.size();
  st.cache_hits = chosen->cache_hits.size();
  st.steiner_bags = out.plan.tree.size();
  st.max_intermediate_rows = exec.stats.max_intermediate_rows;
  st.latency_ms = elapsed_ms(t0);
  st.calibration_done = state->messages_done();
  st.calibration_total = state->messages_total();
  st.calibration = state->status();

  {
    std::lock_guard lock(s->mu);
    s->latest = state;
    ++s->interactions;
    s->computed += st.computed;
    s->reused += st.reused;
    s->latency_ms += st.latency_ms;
    s->last = st;
  }
  if (config_.background) launch_background(*s, state);
  return out;
}

InteractResult Manager::interact_delta(const std::string& session, const std::string& viz,
                                       const nlohmann::json& delta) {
  return interact(session, viz, apply_delta(current_query(session, viz), delta));
}

CalibrateResult Manager::think(const std::string& session, const std::string& viz, std::optional<std::size_t> budget) {
  auto s = slot(session, viz);
  TicketGuard ticket(s->queue);
  stop_background(*s);
  std::shared_ptr<const CjtState> state;
  {
    std::lock_guard lock(s->mu);
    state = s->latest;
  }
  CalibrateResult r;
  if (!state) {
    r.completed = true;
    return r;
  }
  const std::string owner = owner_of(session, viz);
  CalibrateOptions opts;
  opts.budget = budget;
  if (config_.use_cache) {
    opts.fallback = [&](DirectedEdge e, const std::string& fp) -> MessagePtr {
      auto m = cache_.get(fp);
      if (!m || m->edge != e) return nullptr;
      cache_.pin(owner, fp);
      return m;
    };
  }
  opts.on_message = [&](const MessagePtr& m) {
    cache_.pin(owner, m->fingerprint);
    cache_.put(m);
  };
  return calibrate(*state->tree, *state->store, opts);
}

void Manager::wait_background(const std::string& session, const std::string& viz) {
  auto s = find_slot(session, viz);
  if (!s) return;
  std::jthread t;
  {
    std::lock_guard lock(s->mu);
    t = std::move(s->background);
  }
  if (t.joinable()) t.join();
}

std::shared_ptr<const CjtState> Manager::latest(const std::string& session, const std::string& viz) const {
  auto s = find_slot(session, viz);
  if (!s) return nullptr;
  std::lock_guard lock(s->mu);
  return s->latest;
}

QuerySpec Manager::current_query(const std::string& session, const std::string& viz) const {
  if (auto l = latest(session, viz)) return l->query;
  return dashboard_query(viz);
}

nlohmann::json Manager::stats(const std::string& session, const std::string& viz) const {
  auto s = find_slot(session, viz);
  std::shared_ptr<const CjtState> state = s ? latest(session, viz) : nullptr;
  if (!state) state = offline(viz);
  nlohmann::json out = {{"session", session}, {"viz", viz}, {"interactions", 0}, {"computed", 0},
                        {"reused", 0},        {"latency_ms", 0.0}, {"last", nullptr}};
  if (s) {
    std::lock_guard lock(s->mu);
    out["interactions"] = s->interactions;
    out["computed"] = s->computed;
    out["reused"] = s->reused;
    out["latency_ms"] = s->latency_ms;
    if (s->last) out["last"] = to_json(*s->last);
  }
  out["calibration"] = {{"status", to_string(state->status())},
                        {"done", state->messages_done()},
                        {"total", state->messages_total()}};
  return out;
}

}  // namespace cjt

#include "server.hpp"

#include <httplib.h>

#include "cjt/error.hpp"
#include "cjt/harness.hpp"

namespace cjt {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownId: return 404;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kInternal: return 500;
    default: return 400;
  }
}

nlohmann::json error_body(ErrorCode code, const std::string& message) {
  return {{"error", {{"code", std::string(to_string(code))}, {"message", message}}}};
}

namespace {

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

nlohmann::json parse_body(const httplib::Request& req, bool required = true) {
  if (req.body.empty()) {
    if (required) raise(ErrorCode::kParse, "request body must be JSON");
    return nlohmann::json::object();
  }
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kParse, std::string("invalid JSON body: ") + e.what());
  }
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      reply(res, http_status(e.code()), error_body(e.code(), e.what()));
    } catch (const nlohmann::json::exception& e) {
      reply(res, 400, error_body(ErrorCode::kParse, e.what()));
    } catch (const std::exception& e) {
      reply(res, 500, error_body(ErrorCode::kInternal, e.what()));
    }
  };
}

}  // namespace

Server::Server(Manager& manager, ServerOptions options)
    : manager_(manager), options_(std::move(options)), http_(std::make_unique<httplib::Server>()) {
  routes();
}

Server::~Server() { stop(); }

void Server::routes() {
  auto& h = *http_;
  const std::size_t limit = options_.answer_limit;

  h.Post("/graphs", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto g = join_graph_from_json(parse_body(req), options_.data_dir);
    const auto id = manager_.register_graph(g);
    auto jt = manager_.jointree(id);
    nlohmann::json rels = nlohmann::json::array();
    for (const auto& r : g->relations()) rels.push_back(r.name);
    reply(res, 201, {{"graph", id}, {"relations", rels}, {"bags", jt->size()}, {"attributes", g->attributes()}});
  }));

  h.Get(R"(/graphs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto g = manager_.graph(req.matches[1]);
    auto jt = manager_.jointree(req.matches[1]);
    nlohmann::json rels = nlohmann::json::array();
    for (const auto& r : g->relations()) rels.push_back({{"name", r.name}, {"attrs", r.attrs}, {"version", r.current_version}});
    reply(res, 200, {{"graph", g->id()}, {"relations", rels}, {"bags", jt->size()}, {"attributes", g->attributes()},
                     {"semiring", to_json(g->spec())}});
  }));

  h.Post(R"(/graphs/([^/]+)/dashboards)", guarded([this, limit](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, false);
    std::optional<std::string> id;
    if (body.contains("id")) id = body.at("id").get<std::string>();
    const nlohmann::json qj = body.contains("query") ? body.at("query") : body;
    QuerySpec q;
    if (body.contains("query")) {
      q = qj.get<QuerySpec>();
    } else {
      auto copy = qj;
      copy.erase("id");
      q = copy.get<QuerySpec>();
    }
    auto r = manager_.register_dashboard(req.matches[1], q, id);
    const auto& dict = manager_.graph(req.matches[1])->dictionary();
    reply(res, 201, {{"viz", r.viz},
                     {"answer", answer_to_json(r.answer, dict, limit)},
                     {"messages_computed", r.messages_computed},
                     {"messages_reused", r.messages_reused},
                     {"query", q}});
  }));

  h.Get("/dashboards", guarded([this](const httplib::Request&, httplib::Response& res) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : manager_.visualizations()) {
      auto s = manager_.offline(v);
      out.push_back({{"viz", v}, {"graph", s->graph->id()}, {"query", manager_.dashboard_query(v)}});
    }
    reply(res, 200, out);
  }));

  h.Post("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
    reply(res, 201, {{"session", manager_.open_session()}});
  }));

  h.Post(R"(/sessions/([^/]+)/viz/([^/]+)/interact)",
         guarded([this, limit](const httplib::Request& req, httplib::Response& res) {
           auto delta = parse_body(req, false);
           auto r = manager_.interact_delta(req.matches[1], req.matches[2], delta);
           const auto& dict = manager_.offline(req.matches[2])->graph->dictionary();
           reply(res, 200, {{"answer", answer_to_json(r.answer, dict, limit)}, {"stats", to_json(r.stats)}, {"query", r.query}});
         }));

  h.Get(R"(/sessions/([^/]+)/viz/([^/]+)/stats)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    reply(res, 200, manager_.stats(req.matches[1], req.matches[2]));
  }));

  h.Get("/admin/cache", guarded([this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, manager_.cache().stats());
  }));

  h.Post("/admin/cache", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    if (!body.contains("budget") || !body.at("budget").is_number_unsigned()) {
      raise(ErrorCode::kInvalidArgument, "'budget' must be a non-negative integer");
    }
    manager_.cache().set_budget(body.at("budget").get<std::size_t>());
    reply(res, 200, manager_.cache().stats());
  }));

  if (!options_.static_dir.empty()) h.set_mount_point("/", options_.static_dir);
}

int Server::bind() {
  if (options_.port == 0) {
    port_ = http_->bind_to_any_port(options_.host);
  } else {
    port_ = http_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
  }
  if (port_ < 0) raise(ErrorCode::kIo, "cannot bind " + options_.host + ":" + std::to_string(options_.port));
  return port_;
}

void Server::listen() { http_->listen_after_bind(); }

int Server::start() {
  const int p = bind();
  thread_ = std::thread([this] { listen(); });
  http_->wait_until_ready();
  return p;
}

void Server::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace cjt

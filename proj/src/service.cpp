#include "loopshape/service.hpp"

#include <charconv>
#include <cstdlib>
#include <optional>
#include <vector>

#include "httplib.h"
#include "loopshape/analysis.hpp"
#include "loopshape/error.hpp"
#include "loopshape/filters.hpp"
#include "loopshape/timesim.hpp"

namespace loopshape::service {

namespace {

using session::Json;
using EntryPtr = std::shared_ptr<SessionStore::Entry>;

struct HttpError {
  int status;
  Json body;
};

[[noreturn]] void not_found(const std::string& what) {
  throw HttpError{404, {{"error", "NotFound"}, {"message", what}}};
}

[[noreturn]] void conflict(std::uint64_t current, std::uint64_t base) {
  throw HttpError{409,
                  {{"error", "RevisionConflict"},
                   {"message", "base revision " + std::to_string(base) + " is stale"},
                   {"revision", current}}};
}

Response reply(int status, const Json& j) { return {status, j.dump(), "application/json"}; }

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto slash = path.find('/', start);
    const auto end = slash == std::string::npos ? path.size() : slash;
    if (end > start) out.push_back(path.substr(start, end - start));
    if (slash == std::string::npos) break;
    start = slash + 1;
  }
  return out;
}

Json parse_body(const Request& req) {
  if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    throw SchemaError("/", std::string("malformed JSON: ") + e.what());
  }
}

std::uint64_t parse_revision(const std::string& s, const std::string& where) {
  std::string v = s;
  if (v.rfind("W/", 0) == 0) v = v.substr(2);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw SchemaError(where, "expected a revision number");
  return out;
}

// Base revision from the body field, the query or If-Match; the body field
// is removed so the rest parses as the resource itself.
std::optional<std::uint64_t> take_revision(const Request& req, Json& body) {
  if (body.is_object()) {
    if (auto it = body.find("revision"); it != body.end()) {
      if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
        throw SchemaError("/revision", "expected a non-negative integer");
      }
      const auto rev = it->get<std::uint64_t>();
      body.erase(it);
      return rev;
    }
  }
  if (auto it = req.query.find("revision"); it != req.query.end()) {
    return parse_revision(it->second, "?revision");
  }
  for (const auto& [key, value] : req.headers) {
    if (key.size() == 8 && strncasecmp(key.c_str(), "If-Match", 8) == 0) {
      return parse_revision(value, "If-Match");
    }
  }
  return std::nullopt;
}

std::optional<double> query_number(const Request& req, const char* key) {
  auto it = req.query.find(key);
  if (it == req.query.end()) return std::nullopt;
  double v = 0.0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw SchemaError(std::string("?") + key, "expected a number");
  }
  return v;
}

bool query_flag(const Request& req, const char* key) {
  auto it = req.query.find(key);
  if (it == req.query.end()) return false;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw SchemaError(std::string("?") + key, "expected true or false");
}

std::string query_text(const Request& req, const char* key, const std::string& fallback) {
  auto it = req.query.find(key);
  return it == req.query.end() ? fallback : it->second;
}

std::size_t parse_index(const std::string& s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) not_found("filter index '" + s + "'");
  return v;
}

analysis::FreqGrid grid_for(const Request& req, const session::Session& s) {
  analysis::FreqGrid g = s.grid;
  if (auto v = query_number(req, "f_min_hz")) g.f_min_hz = *v;
  if (auto v = query_number(req, "f_max_hz")) g.f_max_hz = *v;
  if (auto v = query_number(req, "points_per_decade")) {
    if (*v != std::floor(*v)) throw SchemaError("?points_per_decade", "expected an integer");
    g.points_per_decade = static_cast<int>(*v);
  }
  try {
    analysis::validate(g);
  } catch (const Error& e) {
    throw SchemaError("?grid", e.what());
  }
  return g;
}

struct Snapshot {
  session::Session doc;
  std::uint64_t revision;
};

Snapshot snapshot(const EntryPtr& e) {
  std::lock_guard lock(e->mu);
  return {e->doc, e->revision};
}

// Controller named in the query, else the active one, else the first.
const filters::ControllerDef* pick_controller(const Request& req, const session::Session& s) {
  if (auto it = req.query.find("controller"); it != req.query.end()) {
    const auto* c = s.find_controller(it->second);
    if (!c) not_found("controller '" + it->second + "'");
    return c;
  }
  if (!s.active_controller.empty()) return s.find_controller(s.active_controller);
  return s.controllers.empty() ? nullptr : &s.controllers.front();
}

RationalTF controller_tf(const filters::ControllerDef* c) {
  return c ? filters::assemble_controller(*c).tf : RationalTF::gain(1.0);
}

Json envelope(const std::string& id, std::uint64_t revision) {
  return {{"id", id}, {"revision", revision}};
}

template <typename Apply>
Response mutate(const EntryPtr& e, const std::string& id, std::optional<std::uint64_t> base,
                Apply&& apply, int status = 200) {
  std::lock_guard lock(e->mu);
  if (base && *base != e->revision) conflict(e->revision, *base);
  session::Session next = e->doc;
  Json extra = apply(next);
  session::validate(next);
  e->doc = std::move(next);
  ++e->revision;
  Json out = envelope(id, e->revision);
  if (extra.is_object()) out.update(extra);
  return reply(status, out);
}

filters::ControllerDef& require_controller(session::Session& s, const std::string& name) {
  auto* c = s.find_controller(name);
  if (!c) not_found("controller '" + name + "'");
  return *c;
}

Response handle_session(SessionStore& store, const Request& req, const std::vector<std::string>& seg) {
  // seg: [api, v1, sessions, id, ...]
  const std::string& id = seg[3];
  EntryPtr e = store.find(id);
  if (!e) not_found("session '" + id + "'");
  const std::string& m = req.method;
  const std::size_t n = seg.size();

  if (n == 4) {
    if (m == "GET") {
      auto snap = snapshot(e);
      Json out = envelope(id, snap.revision);
      out["session"] = session::to_json(snap.doc);
      return reply(200, out);
    }
    if (m == "PUT") {
      Json body = parse_body(req);
      const auto base = take_revision(req, body);
      if (body.is_object() && body.contains("session")) body = body["session"];
      session::Session replacement = session::session_from_json(body);
      return mutate(e, id, base, [&](session::Session& s) {
        s = replacement;
        return Json{{"session", session::to_json(s)}};
      });
    }
  }
  const std::string& what = seg[4];
  if (n == 5 && what == "document" && m == "GET") {
    auto snap = snapshot(e);
    return {200, session::save_session(snap.doc), "application/json"};
  }
  if (n == 5 && what == "plant" && m == "PUT") {
    Json body = parse_body(req);
    const auto base = take_revision(req, body);
    if (body.is_object() && body.contains("plant")) body = body["plant"];
    session::PlantSource plant = session::plant_from_json(body, "/plant");
    if (session::has_plant(plant)) (void)session::resolve_plant(plant);
    return mutate(e, id, base, [&](session::Session& s) {
      s.plant = plant;
      return Json{{"plant", session::to_json(s.plant)}};
    });
  }
  if (n == 6 && what == "plant" && seg[5] == "frd" && m == "POST") {
    Json none = Json::object();
    const auto base = take_revision(req, none);
    auto imported = session::import_frd(req.body);
    session::FrdSource src{std::move(imported.data), imported.schema, query_text(req, "file", "upload.csv")};
    return mutate(e, id, base, [&](session::Session& s) {
      s.plant = src;
      return Json{{"points", std::get<session::FrdSource>(s.plant).data.size()}};
    }, 201);
  }
  if (what == "controllers") {
    if (n == 5 && m == "GET") {
      auto snap = snapshot(e);
      Json list = Json::array();
      for (const auto& c : snap.doc.controllers) list.push_back(session::to_json(c));
      Json out = envelope(id, snap.revision);
      out["controllers"] = list;
      return reply(200, out);
    }
    if (n == 5 && m == "POST") {
      Json body = parse_body(req);
      const auto base = take_revision(req, body);
      auto def = session::controller_from_json(body, "");
      const auto order = filters::assemble_controller(def).order;
      return mutate(e, id, base, [&](session::Session& s) {
        if (s.find_controller(def.name)) {
          throw SchemaError("/name", "duplicate controller name '" + def.name + "'");
        }
        s.controllers.push_back(def);
        if (s.active_controller.empty()) s.active_controller = def.name;
        return Json{{"controller", session::to_json(def)}, {"order", order}};
      }, 201);
    }
    if (n < 6) throw HttpError{405, {{"error", "MethodNotAllowed"}, {"message", m}}};
    const std::string& name = seg[5];
    if (n == 6) {
      if (m == "GET") {
        auto snap = snapshot(e);
        const auto* c = snap.doc.find_controller(name);
        if (!c) not_found("controller '" + name + "'");
        Json out = envelope(id, snap.revision);
        out["controller"] = session::to_json(*c);
        out["order"] = filters::assemble_controller(*c).order;
        return reply(200, out);
      }
      if (m == "PUT") {
        Json body = parse_body(req);
        const auto base = take_revision(req, body);
        auto def = session::controller_from_json(body, "");
        const auto order = filters::assemble_controller(def).order;
        return mutate(e, id, base, [&](session::Session& s) {
          auto& c = require_controller(s, name);
          if (def.name != name && s.find_controller(def.name)) {
            throw SchemaError("/name", "duplicate controller name '" + def.name + "'");
          }
          c = def;
          if (s.active_controller == name) s.active_controller = def.name;
          return Json{{"controller", session::to_json(def)}, {"order", order}};
        });
      }
      if (m == "DELETE") {
        const auto base = [&] { Json b = Json::object(); return take_revision(req, b); }();
        return mutate(e, id, base, [&](session::Session& s) {
          require_controller(s, name);
          std::erase_if(s.controllers, [&](const auto& c) { return c.name == name; });
          if (s.active_controller == name) {
            s.active_controller = s.controllers.empty() ? "" : s.controllers.front().name;
          }
          return Json::object();
        });
      }
    }
    if (n >= 7 && seg[6] == "filters") {
      Json body = (m == "DELETE") ? Json::object() : parse_body(req);
      const auto base = take_revision(req, body);
      std::optional<filters::FilterSpec> spec;
      if (m != "DELETE") {
        spec = session::filter_from_json(body, "");
        filters::validate(*spec);
      }
      auto finish = [&](filters::ControllerDef& c) {
        const auto order = filters::assemble_controller(c).order;
        return Json{{"controller", session::to_json(c)}, {"order", order}};
      };
      if (n == 7 && m == "POST") {
        return mutate(e, id, base, [&](session::Session& s) {
          auto& c = require_controller(s, name);
          if (c.filters.size() >= filters::kMaxFilters) {
            throw SchemaError("/filters", "controller already has 32 filters");
          }
          c.filters.push_back(*spec);
          return finish(c);
        }, 201);
      }
      if (n == 8 && (m == "PUT" || m == "DELETE")) {
        const std::size_t idx = parse_index(seg[7]);
        return mutate(e, id, base, [&](session::Session& s) {
          auto& c = require_controller(s, name);
          if (idx >= c.filters.size()) not_found("filter index " + seg[7]);
          if (m == "PUT") {
            c.filters[idx] = *spec;
          } else {
            c.filters.erase(c.filters.begin() + static_cast<std::ptrdiff_t>(idx));
          }
          return finish(c);
        });
      }
    }
  }
  if (n == 5 && m == "PUT" && (what == "requirements" || what == "grid" || what == "active_controller")) {
    Json body = parse_body(req);
    const auto base = take_revision(req, body);
    if (what == "requirements") {
      auto r = session::requirements_from_json(body, "/requirements");
      return mutate(e, id, base, [&](session::Session& s) {
        s.requirements = r;
        return Json{{"requirements", session::to_json(r)}};
      });
    }
    if (what == "grid") {
      auto g = session::grid_from_json(body, "/grid");
      return mutate(e, id, base, [&](session::Session& s) {
        s.grid = g;
        return Json{{"grid", session::to_json(g)}};
      });
    }
    if (!body.is_object() || !body.contains("name") || !body["name"].is_string()) {
      throw SchemaError("/name", "expected a controller name");
    }
    const std::string name = body["name"];
    return mutate(e, id, base, [&](session::Session& s) {
      if (!s.find_controller(name)) not_found("controller '" + name + "'");
      s.active_controller = name;
      return Json{{"active_controller", name}};
    });
  }
  if (n == 5 && (what == "plot" || what == "margins" || what == "export") && m == "GET") {
    auto snap = snapshot(e);
    const auto* c = pick_controller(req, snap.doc);
    const RationalTF ctf = controller_tf(c);
    Json out = envelope(id, snap.revision);
    out["controller"] = c ? Json(c->name) : Json(nullptr);
    if (what == "export") {
      const std::string target = query_text(req, "target", "continuous");
      session::ExportTarget t;
      if (target == "continuous") {
        t = session::ExportTarget::ContinuousCoefficients;
      } else if (target == "discrete") {
        t = session::ExportTarget::DiscreteCoefficients;
      } else {
        throw SchemaError("?target", "expected continuous or discrete");
      }
      out["export"] = session::export_controller(
          ctf, t, query_number(req, "sample_period_s"),
          c ? c->filters : std::vector<filters::FilterSpec>{});
      return reply(200, out);
    }
    const PlantModel plant = session::resolve_plant(snap.doc.plant);
    const auto grid = grid_for(req, snap.doc);
    if (what == "margins") {
      auto report = analysis::loop_margins(plant, ctf, grid, snap.doc.requirements);
      out["margins"] = session::to_json(report);
      out["requirements"] = session::to_json(snap.doc.requirements);
      out["order"] = ctf.order();
      return reply(200, out);
    }
    analysis::Subsystem sub;
    analysis::View view;
    try {
      sub = analysis::parse_subsystem(query_text(req, "subsystem", "open_loop"));
    } catch (const Error& err) {
      throw SchemaError("?subsystem", err.what());
    }
    try {
      view = analysis::parse_view(query_text(req, "view", "bode"));
    } catch (const Error& err) {
      throw SchemaError("?view", err.what());
    }
    const auto series = analysis::plot_data(plant, ctf, sub, view, grid, query_flag(req, "wrap_phase"));
    out["plot"] = session::to_json(series);
    return reply(200, out);
  }
  if (n == 5 && what == "simulate" && m == "POST") {
    Json body = parse_body(req);
    auto snap = snapshot(e);
    Request sel = req;
    if (body.is_object() && body.contains("controller")) {
      if (!body["controller"].is_string()) throw SchemaError("/controller", "expected a string");
      sel.query["controller"] = body["controller"].get<std::string>();
    }
    const auto cfg = session::sim_config_from_json(body, "");
    const auto* c = pick_controller(sel, snap.doc);
    const PlantModel plant = session::resolve_plant(snap.doc.plant);
    const auto result = sim::simulate(plant, controller_tf(c),
                                      c ? c->prefilter : std::nullopt, cfg);
    if (query_text(req, "format", "json") == "csv") return {200, sim::to_csv(result), "text/csv"};
    Json out = envelope(id, snap.revision);
    out["controller"] = c ? Json(c->name) : Json(nullptr);
    out["time_s"] = result.time_s;
    out["reference"] = result.reference;
    out["output"] = result.output;
    out["control_effort"] = result.control_effort;
    if (result.output_no_prefilter) out["output_no_prefilter"] = *result.output_no_prefilter;
    out["diverged"] = result.diverged;
    out["truncation_index"] = result.truncation_index ? Json(*result.truncation_index) : Json(nullptr);
    out["disturbance_seed"] = result.disturbance_seed ? Json(*result.disturbance_seed) : Json(nullptr);
    out["noise_seed"] = result.noise_seed ? Json(*result.noise_seed) : Json(nullptr);
    out["warnings"] = result.warnings;
    return reply(200, out);
  }
  not_found(m + " " + req.path);
}

}  // namespace

std::string SessionStore::create(session::Session doc) {
  auto entry = std::make_shared<Entry>();
  entry->doc = std::move(doc);
  std::lock_guard lock(mu_);
  std::string id = "s" + std::to_string(next_id_++);
  entries_.emplace(id, std::move(entry));
  return id;
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : it->second;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

Response Api::handle(const Request& req) {
  try {
    const auto seg = split_path(req.path);
    if (seg.size() < 3 || seg[0] != "api" || seg[1] != "v1") not_found(req.path);
    if (seg.size() == 3 && seg[2] == "health" && req.method == "GET") {
      return reply(200, {{"status", "ok"}});
    }
    if (seg[2] != "sessions") not_found(req.path);
    if (seg.size() == 3) {
      if (req.method != "POST") throw HttpError{405, {{"error", "MethodNotAllowed"}, {"message", req.method}}};
      Json body = parse_body(req);
      if (body.is_object() && body.contains("session")) body = body["session"];
      session::Session doc = (body.is_object() && body.empty()) ? session::Session{}
                                                                : session::session_from_json(body);
      const std::string id = store_.create(doc);
      Json out = envelope(id, 0);
      out["session"] = session::to_json(doc);
      return reply(201, out);
    }
    return handle_session(store_, req, seg);
  } catch (const HttpError& e) {
    return reply(e.status, e.body);
  } catch (const SchemaError& e) {
    return reply(400, {{"error", e.name()}, {"module", error_module(e.code())},
                       {"path", e.path()}, {"message", e.what()}});
  } catch (const Error& e) {
    return reply(422, {{"error", e.name()}, {"module", error_module(e.code())},
                       {"message", e.what()}});
  } catch (const Json::exception& e) {
    return reply(400, {{"error", "SchemaViolation"}, {"module", "session"}, {"path", "/"},
                       {"message", e.what()}});
  }
}

BindAddress parse_bind(const std::string& spec, BindAddress base) {
  if (spec.empty()) return base;
  const auto colon = spec.rfind(':');
  if (colon == std::string::npos) {
    base.host = spec;
    return base;
  }
  if (colon > 0) base.host = spec.substr(0, colon);
  const std::string port = spec.substr(colon + 1);
  int p = 0;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), p);
  if (ec != std::errc() || ptr != port.data() + port.size() || p < 0 || p > 65535) {
    throw Error(ErrorCode::InvalidArgument, "invalid port in bind address '" + spec + "'");
  }
  base.port = p;
  return base;
}

BindAddress default_bind() {
  const char* env = std::getenv("LOOPSHAPE_BIND");
  return parse_bind(env ? env : "");
}

Server::Server(Api& api) : api_(api), http_(std::make_unique<httplib::Server>()) {
  auto handler = [this](const httplib::Request& hreq, httplib::Response& hres) {
    Request req;
    req.method = hreq.method;
    req.path = hreq.path;
    for (const auto& [k, v] : hreq.params) req.query.emplace(k, v);
    for (const auto& [k, v] : hreq.headers) req.headers.emplace(k, v);
    req.body = hreq.body;
    const Response res = api_.handle(req);
    hres.status = res.status;
    hres.set_content(res.body, res.content_type);
  };
  http_->Get(R"(/.*)", handler);
  http_->Post(R"(/.*)", handler);
  http_->Put(R"(/.*)", handler);
  http_->Delete(R"(/.*)", handler);
}

Server::~Server() { stop(); }

int Server::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = http_->bind_to_any_port(host);
    if (bound <= 0) return -1;
  } else if (!http_->bind_to_port(host, port)) {
    return -1;
  }
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  return bound;
}

bool Server::listen(const std::string& host, int port) { return http_->listen(host, port); }

void Server::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace loopshape::service

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <thread>
#include <vector>

#include "fixtures.hpp"
#include "httplib.h"
#include "loopshape/error.hpp"
#include "loopshape/service.hpp"

using namespace loopshape;
using namespace loopshape::service;
using session::Json;

namespace {

struct Reply {
  int status;
  Json body;
};

Reply call(Api& api, const std::string& method, const std::string& path, const Json& body = nullptr,
           std::map<std::string, std::string> query = {}) {
  Request req;
  req.method = method;
  req.path = path;
  req.query = std::move(query);
  if (!body.is_null()) req.body = body.dump();
  const Response res = api.handle(req);
  Json parsed = res.content_type == "application/json" ? Json::parse(res.body, nullptr, false) : Json(res.body);
  return {res.status, parsed};
}

std::string new_session(Api& api) {
  session::Session s;
  s.plant = fixtures::stage_spec();
  s.controllers = {fixtures::ioc()};
  s.active_controller = "ioc";
  s.grid = {1.0, 1e4, 50};
  const auto r = call(api, "POST", "/api/v1/sessions", session::to_json(s));
  REQUIRE(r.status == 201);
  return r.body["id"];
}

const Json kStep{{"shape", "step"}, {"amplitude", 1.0}};

}  // namespace

TEST_CASE("health and unknown routes") {
  Api api;
  CHECK(call(api, "GET", "/api/v1/health").status == 200);
  CHECK(call(api, "GET", "/api/v2/health").status == 404);
  CHECK(call(api, "GET", "/api/v1/sessions/nope").status == 404);
  CHECK(call(api, "GET", "/api/v1/sessions").status == 405);
}

TEST_CASE("session lifecycle") {
  Api api;
  const auto empty = call(api, "POST", "/api/v1/sessions", Json::object());
  CHECK(empty.status == 201);
  CHECK(empty.body["revision"] == 0);

  const std::string id = new_session(api);
  const std::string base = "/api/v1/sessions/" + id;
  auto got = call(api, "GET", base);
  CHECK(got.status == 200);
  CHECK(got.body["session"]["active_controller"] == "ioc");

  auto filt = call(api, "POST", base + "/controllers/ioc/filters",
                   Json{{"kind", "notch"}, {"f_notch", 500.0}, {"damping_num", 0.05}, {"damping_den", 0.5}});
  CHECK(filt.status == 201);
  CHECK(filt.body["revision"] == 1);
  CHECK(filt.body["order"] == 5);

  auto del = call(api, "DELETE", base + "/controllers/ioc/filters/4", nullptr, {{"revision", "1"}});
  CHECK(del.status == 200);
  CHECK(del.body["revision"] == 2);

  auto margins = call(api, "GET", base + "/margins");
  REQUIRE(margins.status == 200);
  CHECK(margins.body["margins"]["phase_margin_deg"].is_number());
  CHECK(margins.body["controller"] == "ioc");

  auto plot = call(api, "GET", base + "/plot", nullptr, {{"subsystem", "sensitivity"}, {"view", "nyquist"}});
  REQUIRE(plot.status == 200);
  CHECK(plot.body["plot"]["re"].size() == plot.body["plot"]["freq_hz"].size());
  CHECK(call(api, "GET", base + "/plot", nullptr, {{"view", "polar"}}).status == 400);

  auto ex = call(api, "GET", base + "/export", nullptr, {{"target", "discrete"}, {"sample_period_s", "1e-4"}});
  CHECK(ex.status == 200);
  CHECK(ex.body["export"]["variable"] == "z^-1");

  auto sim = call(api, "POST", base + "/simulate", Json{{"duration_s", 0.01}, {"sample_period_s", 1e-5}, {"reference", kStep}});
  REQUIRE(sim.status == 200);
  CHECK(sim.body["output"].size() == 1001);

  Request csv{"POST", base + "/simulate", {{"format", "csv"}}, {}, Json{{"duration_s", 0.001}, {"sample_period_s", 1e-4}, {"reference", kStep}}.dump()};
  const auto raw = api.handle(csv);
  CHECK(raw.content_type == "text/csv");
  CHECK(raw.body.rfind("t,r,y,u\n", 0) == 0);

  auto doc = api.handle(Request{"GET", base + "/document", {}, {}, {}});
  CHECK(session::load_session(doc.body).controllers.size() == 1);
}

TEST_CASE("errors map to status codes") {
  Api api;
  const std::string base = "/api/v1/sessions/" + new_session(api);

  auto schema = call(api, "PUT", base + "/grid", Json{{"f_min_hz", "low"}});
  CHECK(schema.status == 400);
  CHECK(schema.body["error"] == "SchemaViolation");
  CHECK(schema.body["path"].get<std::string>().rfind("/grid", 0) == 0);

  Request frd{"POST", base + "/plant/frd", {}, {}, "freq_hz,re,im\n1,1,0\n10,0.5,-0.5\n100,0.01,-0.1\n"};
  CHECK(api.handle(frd).status == 201);
  auto sim = call(api, "POST", base + "/simulate", Json{{"duration_s", 0.01}, {"sample_period_s", 1e-4}, {"reference", kStep}});
  CHECK(sim.status == 422);
  CHECK(sim.body["error"] == "FrdPlantUnsupported");
  CHECK(sim.body["module"] == "timesim");

  Request bad_frd{"POST", base + "/plant/frd", {}, {}, "freq_hz,re,im\n2,1,0\n1,1,0\n"};
  const auto r = api.handle(bad_frd);
  CHECK(r.status == 422);
  CHECK(Json::parse(r.body)["error"] == "NonMonotoneFrequencies");

  auto stale = call(api, "PUT", base + "/grid", Json{{"f_min_hz", 1.0}, {"f_max_hz", 100.0}, {"points_per_decade", 20}, {"revision", 0}});
  CHECK(stale.status == 409);
  CHECK(stale.body["revision"] == 1);
  CHECK(call(api, "POST", "/api/v1/sessions", Json{{"format_version", 99}}).status == 422);
}

TEST_CASE("bind address") {
  CHECK(parse_bind("").host == "127.0.0.1");
  CHECK(parse_bind("").port == 8731);
  CHECK(parse_bind(":9000").port == 9000);
  CHECK(parse_bind("0.0.0.0").host == "0.0.0.0");
  const auto b = parse_bind("localhost:1234");
  CHECK(b.host == "localhost");
  CHECK(b.port == 1234);
  CHECK_THROWS_AS(parse_bind(":http"), loopshape::Error);
}

TEST_CASE("concurrent writers over a socket") {
  Api api;
  const std::string id = new_session(api);
  Server server(api);
  const int port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);

  constexpr int kWriters = 8;
  std::atomic<int> ok{0}, conflict{0}, other{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < kWriters; ++w) {
    pool.emplace_back([&, w] {
      httplib::Client cli("127.0.0.1", port);
      const Json body{{"f_min_hz", 1.0 + w}, {"f_max_hz", 1e3}, {"points_per_decade", 20}, {"revision", 0}};
      auto res = cli.Put("/api/v1/sessions/" + id + "/grid", body.dump(), "application/json");
      if (!res) {
        ++other;
      } else if (res->status == 200) {
        ++ok;
      } else if (res->status == 409) {
        ++conflict;
      } else {
        ++other;
      }
    });
  }
  for (auto& t : pool) t.join();
  CHECK(ok == 1);
  CHECK(conflict == kWriters - 1);
  CHECK(other == 0);

  httplib::Client cli("127.0.0.1", port);
  auto res = cli.Get("/api/v1/sessions/" + id);
  REQUIRE(res);
  CHECK(Json::parse(res->body)["revision"] == 1);
  server.stop();
}

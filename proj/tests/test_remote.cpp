#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "doctest.h"

#include <atomic>
#include <thread>

#include "autolf/errors.hpp"
#include "autolf/features.hpp"
#include "autolf/http.hpp"
#include "autolf/pipeline.hpp"
#include "autolf/surface.hpp"
#include "autolf/synth.hpp"
#include "support.hpp"

using namespace autolf;

namespace {

// Local stand-in for a chat-completions and embeddings service.
class FakeService {
 public:
  FakeService() {
    server_.Post("/chat", [this](const httplib::Request& req, httplib::Response& res) {
      ++chat_calls;
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      if (fail_next > 0) {
        --fail_next;
        res.status = 500;
        return;
      }
      nlohmann::json reply = {{"choices", {{{"message", {{"content", chat_content}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++embed_calls;
      auto body = nlohmann::json::parse(req.body);
      const std::string text = body["input"][0];
      std::vector<double> v(4, 0.0);
      v[text.size() % 4] = 3.0;
      v[(text.size() + 1) % 4] = 4.0;
      res.set_content(nlohmann::json{{"data", {{{"embedding", v}}}}}.dump(), "application/json");
    });
    server_.Post("/teapot", [](const httplib::Request&, httplib::Response& res) { res.status = 418; });
    server_.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<html>oops</html>", "text/html");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeService() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }
  RemoteEndpoint endpoint(const std::string& path) const {
    RemoteEndpoint ep;
    ep.url = url(path);
    ep.model = "m";
    ep.api_key = "secret";
    ep.timeout_seconds = 5;
    ep.retries = 2;
    ep.backoff_ms = 1;
    return ep;
  }

  std::atomic<int> chat_calls{0}, embed_calls{0}, fail_next{0};
  std::string chat_content;
  std::string last_body, last_auth;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

GenerationRequest request(int count) {
  GenerationRequest req;
  req.task_description = "sentiment";
  req.class_names = {"neg", "pos"};
  req.examples = {{"great food", "pos"}, {"awful", "neg"}};
  req.count = count;
  return req;
}

}  // namespace

TEST_CASE("chat provider parses rules from the reply") {
  FakeService svc;
  svc.chat_content =
      "Sure:\n[{\"id\":\"a\",\"patterns\":{\"pos\":[\"great\"],\"neg\":[\"awful\"]}},"
      "{\"id\":\"b\",\"patterns\":{\"meh\":[\"x\"]}}]";
  RemoteLlmProvider p(svc.endpoint("/chat"));
  auto out = generate_surface_lfs(p, request(5));
  CHECK(out.rules.size() == 1);
  CHECK(out.warnings == 1);
  CHECK(out.rules[0].patterns.at(1).count("great"));
  CHECK(svc.last_auth == "Bearer secret");
  auto body = nlohmann::json::parse(svc.last_body);
  CHECK(body["model"] == "m");
  CHECK(body["messages"][1]["content"].get<std::string>().find("great food") != std::string::npos);
}

TEST_CASE("server errors are retried and client errors are not") {
  FakeService svc;
  svc.chat_content = "[{\"id\":\"a\",\"patterns\":{\"pos\":[\"great\"]}}]";
  svc.fail_next = 1;
  RemoteLlmProvider p(svc.endpoint("/chat"));
  CHECK(p.generate(request(1)).rules.size() == 1);
  CHECK(svc.chat_calls == 2);

  svc.fail_next = 10;
  svc.chat_calls = 0;
  CHECK_THROWS_AS(p.generate(request(1)), ProviderUnreachable);
  CHECK(svc.chat_calls == 3);  // first try plus two retries
  svc.fail_next = 0;

  CHECK_THROWS_AS(post_json(svc.url("/teapot"), {}, "", 5, 3, 1), ProviderUnreachable);
  CHECK_THROWS_AS(post_json(svc.url("/garbage"), {}, "", 5, 3, 1), MalformedProviderReply);
  CHECK_THROWS_AS(post_json("http://127.0.0.1:1/none", {}, "", 1, 0, 1), ProviderUnreachable);

  svc.chat_content = "I cannot help with that.";
  CHECK_THROWS_AS(p.generate(request(1)), MalformedProviderReply);
}

TEST_CASE("remote embeddings are normalized and cached on disk") {
  FakeService svc;
  auto dir = testing::temp_dir("embcache");
  Document d{"d1", "abc"};
  {
    RemoteEmbedding e(svc.endpoint("/embed"), 4, dir / "cache.jsonl");
    auto v = e.embed(d);
    CHECK(v[3] == doctest::Approx(0.6));
    CHECK(v[0] == doctest::Approx(0.8));
    e.embed(d);
    CHECK(e.remote_calls() == 1);
    CHECK(e.embed(Document{"empty", ""}) == std::vector<double>(4, 0.0));
    CHECK(e.remote_calls() == 1);
  }
  RemoteEmbedding again(svc.endpoint("/embed"), 4, dir / "cache.jsonl");
  CHECK(again.embed(d)[3] == doctest::Approx(0.6));
  CHECK(again.remote_calls() == 0);
  CHECK(svc.embed_calls == 1);

  RemoteEmbedding wrong_dim(svc.endpoint("/embed"), 8);
  CHECK_THROWS_AS(wrong_dim.embed(d), DimensionMismatch);
}

TEST_CASE("pipeline keeps going when the surface provider is unreachable") {
  SynthSpec s;
  s.n_unlabeled = 200;
  s.n_test = 40;
  auto ds = make_synthetic(s);
  PipelineConfig cfg;
  for (auto& [c, k] : cfg.k_per_category) k = 2;
  cfg.candidates_per_round = 2;
  cfg.max_rounds = 2;
  cfg.epochs = 3;
  PipelineProviders providers;
  RemoteEndpoint ep;
  ep.url = "http://127.0.0.1:1/chat";
  ep.timeout_seconds = 1;
  ep.retries = 0;
  providers.surface = std::make_shared<RemoteLlmProvider>(ep);
  auto result = run_pipeline(ds, cfg, providers);
  auto surf = result.pool.by_category.find(Category::Surface);
  CHECK((surf == result.pool.by_category.end() || surf->second.empty()));
  REQUIRE_FALSE(result.pool.skip_reports.empty());
  CHECK(result.pool.skip_reports[0].reason.find("ProviderUnreachable") != std::string::npos);
  CHECK_FALSE(result.pool.by_category.at(Category::Structural).empty());
  CHECK(result.labeling.has_value());
}

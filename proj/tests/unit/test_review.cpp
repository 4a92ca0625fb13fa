#include <cmath>
#include <numeric>
#include <set>

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "seaforge/error.hpp"
#include "seaforge/image_io.hpp"
#include "seaforge/pipeline.hpp"
#include "seaforge/review.hpp"
#include "seaforge/review_server.hpp"
#include "support.hpp"

using namespace seaforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path write_manifest(const fs::path& dir, int n) {
  const fs::path m = dir / "manifest.jsonl";
  for (int i = 0; i < n; ++i) {
    ManifestRecord r;
    r.source_id = "src" + std::to_string(i / 4);
    r.edited_id = edited_image_id(r.source_id, i % 4);
    r.backend_name = i % 3 == 0 ? "inpaint-style" : "mock";
    r.sea_state = sea_state_from_level(1 + i % 4);
    r.kept = i % 5 != 0;
    r.crop_verdicts = {{0, r.kept ? Verdict::boat : Verdict::not_boat}};
    r.created_at = "2024-01-01T00:00:00Z";
    append_record(m, r);
  }
  return m;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::io_failure;
}

const RuleFlags kGood{true, true, true};
const RuleFlags kBad{true, false, true};

// Reviews every item of a session, marking the first `n_good` good.
void review_all(ReviewStore& store, const std::string& id, std::size_t n_good) {
  std::size_t k = 0;
  while (auto item = store.next_item(id)) store.submit_verdict(id, item->edited_id, "r", k++ < n_good ? kGood : kBad);
}

}  // namespace

TEST_CASE("verdict good is the AND of the rule flags") {
  for (int bits = 0; bits < 8; ++bits) {
    const RuleFlags f{(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0};
    const auto v = make_verdict("s", "e", "r", f, "t");
    CHECK(v.good == (bits == 7));
    json j = to_json(v);
    j["good"] = !v.good;  // a stored good flag is never trusted
    CHECK(verdict_from_json(j) == v);
  }
}

TEST_CASE("good image rate across sessions") {
  const std::vector<SessionStats> two{{"a", 10, 10, 5, 50.0}, {"b", 10, 10, 7, 70.0}};
  const auto r = good_image_rate(two);
  const double mean = (50.0 + 70.0) / 2;
  const double sd = std::sqrt((std::pow(50.0 - mean, 2) + std::pow(70.0 - mean, 2)) / (2 - 1));
  CHECK(r.mean == doctest::Approx(mean));
  REQUIRE(r.sample_std.has_value());
  CHECK(*r.sample_std == doctest::Approx(sd));
  CHECK(*r.sample_std == doctest::Approx(14.142).epsilon(1e-4));
  CHECK(r.n_sessions == 2);

  const std::vector<SessionStats> one{{"a", 4, 4, 3, 75.0}, {"b", 4, 0, 0, std::nullopt}};
  const auto single = good_image_rate(one);
  CHECK(single.mean == 75.0);
  CHECK_FALSE(single.sample_std.has_value());
  CHECK(single.n_sessions == 1);

  const std::vector<SessionStats> none{{"b", 4, 0, 0, std::nullopt}};
  CHECK(code_of([&] { good_image_rate(none); }) == Errc::no_sessions);
  CHECK(code_of([&] { good_image_rate(std::span<const SessionStats>{}); }) == Errc::no_sessions);
}

TEST_CASE("session sampling is seeded and honours filters") {
  test::TempDir dir("rev");
  const auto m = write_manifest(dir.path(), 40);
  const auto records = load_manifest(m).records;
  SessionSpec spec;
  spec.sample_size = 12;
  spec.seed = 3;
  const auto a = sample_session_items(records, spec);
  CHECK(a.size() == 12);
  CHECK(a == sample_session_items(records, spec));
  CHECK(std::set<std::string>(a.begin(), a.end()).size() == 12);
  auto reversed = records;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(a == sample_session_items(reversed, spec));
  spec.seed = 4;
  CHECK(a != sample_session_items(records, spec));

  spec.sample_size = 100;
  spec.filter.kept_only = true;
  spec.filter.sea_state = SeaState::ss2;
  spec.filter.backend_name = "mock";
  const auto filtered = sample_session_items(records, spec);
  std::size_t expected = 0;
  for (const auto& r : records) expected += r.kept && r.sea_state == SeaState::ss2 && r.backend_name == "mock";
  CHECK(filtered.size() == expected);
  for (const auto& id : filtered) {
    const auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.edited_id == id; });
    CHECK(it->kept);
    CHECK(it->sea_state == SeaState::ss2);
  }
}

TEST_CASE("review store: order, idempotent next, errors, reload") {
  test::TempDir dir("rev");
  const auto m = write_manifest(dir.path(), 40);
  std::vector<std::string> order;
  std::string sid;
  {
    ReviewStore store(dir / "review", m);
    SessionSpec spec;
    spec.sample_size = 3;
    spec.seed = 9;
    const auto s = store.create_session(spec);
    sid = s.spec.id;
    CHECK(sid == "s0001");
    REQUIRE(s.items.size() == 3);
    order = s.items;

    for (std::size_t i = 0; i < 3; ++i) {
      const auto a = store.next_item(sid);
      const auto b = store.next_item(sid);
      REQUIRE(a.has_value());
      CHECK(a->edited_id == order[i]);
      CHECK(b->edited_id == a->edited_id);
      CHECK(a->position == i);
      CHECK(a->total == 3);
      if (i == 1) {
        CHECK(code_of([&] { store.submit_verdict(sid, order[0], "r", kGood); }) == Errc::duplicate_verdict);
      }
      store.submit_verdict(sid, a->edited_id, "r", i == 0 ? kBad : kGood);
    }
    CHECK_FALSE(store.next_item(sid).has_value());
    std::string outside;
    for (const auto& r : load_manifest(m).records) {
      if (std::find(order.begin(), order.end(), r.edited_id) == order.end()) outside = r.edited_id;
    }
    CHECK(code_of([&] { store.submit_verdict(sid, outside, "r", kGood); }) == Errc::unknown_item);
    CHECK(code_of([&] { store.submit_verdict(sid, "ghost_g0000", "r", kGood); }) == Errc::unknown_item);
    CHECK(code_of([&] { store.submit_verdict("nope", order[0], "r", kGood); }) == Errc::unknown_session);
    CHECK(code_of([&] { store.next_item("nope"); }) == Errc::unknown_session);

    const auto st = store.session_stats(sid);
    CHECK(st.n_reviewed == 3);
    CHECK(st.n_good == 2);
    CHECK(*st.good_rate == doctest::Approx(100.0 * 2 / 3));
    CHECK(st.complete());

    SessionSpec dup;
    dup.id = sid;
    CHECK(code_of([&] { store.create_session(dup); }) == Errc::validation_error);
    SessionSpec empty;
    empty.filter.backend_name = "nothing";
    CHECK(code_of([&] { store.create_session(empty); }) == Errc::validation_error);

    SessionSpec all;
    const auto big = store.create_session(all);
    CHECK(all.sample_size == 100);
    CHECK(big.items.size() == 40);  // fewer candidates than the default 100
  }
  ReviewStore reopened(dir / "review", m);
  CHECK(reopened.session_ids() == std::vector<std::string>{"s0001", "s0002"});
  const auto st = reopened.session_stats(sid);
  CHECK(st.n_reviewed == 3);
  CHECK(st.n_good == 2);
  CHECK(reopened.verdicts(sid).size() == 3);
  CHECK_FALSE(reopened.next_item(sid).has_value());
  CHECK(reopened.create_session({}).spec.id == "s0003");
}

TEST_CASE("store-level good rate over two sessions") {
  test::TempDir dir("rev");
  const auto m = write_manifest(dir.path(), 40);
  ReviewStore store(dir / "review", m);
  SessionSpec a;
  a.sample_size = 10;
  a.seed = 1;
  SessionSpec b = a;
  b.seed = 2;
  const auto sa = store.create_session(a).spec.id;
  const auto sb = store.create_session(b).spec.id;
  review_all(store, sa, 5);
  review_all(store, sb, 7);
  const std::vector<std::string> both{sa, sb};
  const auto r = store.good_image_rate(both);
  CHECK(r.mean == doctest::Approx(60.0));
  CHECK(*r.sample_std == doctest::Approx(std::sqrt(200.0)));
  CHECK(store.good_image_rate(std::span<const std::string>{}).mean == doctest::Approx(60.0));
  const std::vector<std::string> ghost{"s0099"};
  CHECK(code_of([&] { store.good_image_rate(ghost); }) == Errc::unknown_session);
}

TEST_CASE("review HTTP endpoints") {
  test::TempDir dir("rev");
  const auto m = write_manifest(dir.path(), 8);
  const auto records = load_manifest(m).records;
  for (const auto& r : records) {
    const fs::path p = r.kept ? kept_image_path(dir.path(), r.sea_state, r.edited_id)
                              : discarded_image_path(dir.path(), r.edited_id);
    write_png(p, cv::Mat(4, 4, CV_8UC3, cv::Scalar(1, 2, 3)));
    CHECK(locate_edited_image(dir.path(), r) == p);
  }
  auto store = std::make_shared<ReviewStore>(dir / "review", m);
  ReviewServer server(store, dir.path());
  const int port = server.start();
  httplib::Client cli("127.0.0.1", port);

  auto res = cli.Post("/api/session", R"({"sample_size": 2, "seed": 5, "filter": {"kept_only": true}})",
                      "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  const json created = json::parse(res->body);
  const std::string sid = created.at("session_id");
  CHECK(created.at("n_items") == 2);

  for (int i = 0; i < 2; ++i) {
    res = cli.Get("/api/session/" + sid + "/next");
    REQUIRE(res);
    CHECK(res->status == 200);
    const json next = json::parse(res->body);
    CHECK(next.at("done") == false);
    const std::string eid = next.at("item").at("edited_id");
    CHECK(next.at("item").at("kept") == true);

    auto img = cli.Get(next.at("item").at("image_url").get<std::string>());
    REQUIRE(img);
    CHECK(img->status == 200);
    CHECK(decode_image(std::span(reinterpret_cast<const std::uint8_t*>(img->body.data()), img->body.size())).cols == 4);

    const json verdict = {{"edited_id", eid},
                          {"reviewer", "ana"},
                          {"rule_flags", {{"background_valid", true}, {"background_realistic", true}, {"boat_preserved", i == 0}}}};
    res = cli.Post("/api/session/" + sid + "/verdict", verdict.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    CHECK(json::parse(res->body).at("good") == (i == 0));
    res = cli.Post("/api/session/" + sid + "/verdict", verdict.dump(), "application/json");
    CHECK(res->status == 409);
    CHECK(json::parse(res->body).at("error").at("code") == "DuplicateVerdict");
  }
  res = cli.Get("/api/session/" + sid + "/next");
  CHECK(json::parse(res->body).at("done") == true);

  res = cli.Get("/api/session/" + sid + "/stats");
  const json st = json::parse(res->body);
  CHECK(st.at("n_reviewed") == 2);
  CHECK(st.at("good_rate").get<double>() == doctest::Approx(50.0));

  res = cli.Get("/api/stats?sessions=" + sid);
  const json agg = json::parse(res->body);
  CHECK(agg.at("mean").get<double>() == doctest::Approx(50.0));
  CHECK(agg.at("sample_std").is_null());
  CHECK(agg.at("sessions").size() == 1);

  CHECK(cli.Get("/api/session/zzz/next")->status == 404);
  CHECK(cli.Get("/api/image/unknown")->status == 404);
  CHECK(cli.Post("/api/session/" + sid + "/verdict", "{not json", "application/json")->status == 400);
  server.stop();
}

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>
#include <thread>

#include "motionpi/backend/server.hpp"
#include "motionpi/backend/service.hpp"
#include "motionpi/common/codec.hpp"

using namespace motionpi;
using namespace motionpi::backend;

namespace {

const std::string kSecret = "test-secret-0123456789abcdef";

struct Fixture {
    VirtualClock clock{1736150000.0};
    SeededRandom rng{7};
    MemoryStore store;
    BackendService svc{{kSecret, 3600.0}, store, clock, rng};

    std::string signup(const std::string& device, const std::string& user) {
        const auto r = svc.handle({"POST", "/signup", {}, Json{{"device_id", device}, {"username", user}}.dump()});
        EXPECT_EQ(r.status, 200) << r.body;
        return Json::parse(r.body)["token"];
    }

    HttpResponse post(const std::string& type, const Json& body, const std::string& token) {
        HttpRequest req{"POST", "/data/" + type, {}, body.dump()};
        if (!token.empty()) req.headers["authorization"] = "Bearer " + token;
        return svc.handle(req);
    }

    HttpResponse get(const std::string& target, const std::string& token) {
        HttpRequest req{"GET", target, {}, ""};
        if (!token.empty()) req.headers["authorization"] = "Bearer " + token;
        return svc.handle(req);
    }
};

SeededRandom ids(99);

Json event_record(const std::string& phone, const std::string& pid, double t) {
    return {{"record_id", make_uuid(ids)},
            {"record_type", "event"},
            {"participant_id", pid},
            {"username", pid},
            {"phone_id", phone},
            {"timestamp", t},
            {"payload",
             {{"event_kind", "band_connected"}, {"band_mac", "02:4D:50:00:00:01"}, {"local_time", "2025-01-06T08:00:00+00:00"}}}};
}

Json batch(std::initializer_list<Json> recs) { return {{"records", Json(recs)}}; }

}  // namespace

TEST(Backend, SignupIssuesTokenForDevice) {
    Fixture f;
    const auto tok = f.signup("phone-1", "p1");
    const auto claims = f.svc.signer().verify(tok, f.clock.now());
    ASSERT_TRUE(claims);
    EXPECT_EQ(claims->device_id, "phone-1");
    EXPECT_EQ(claims->username, "p1");
    EXPECT_DOUBLE_EQ(claims->expires_t - claims->issued_t, 3600.0);

    const auto again = f.signup("phone-1", "p1");
    EXPECT_NE(again, tok);
    EXPECT_EQ(f.svc.account_count(), 1u);

    EXPECT_EQ(f.svc.handle({"POST", "/signup", {}, R"({"device_id": "", "username": "x"})"}).status, 400);
    EXPECT_EQ(f.svc.handle({"POST", "/signup", {}, "{not json"}).status, 400);
    EXPECT_EQ(f.svc.handle({"POST", "/signup", {}, R"({"username": "x"})"}).status, 400);
}

TEST(Backend, IngestAcksAndIsIdempotent) {
    Fixture f;
    const auto tok = f.signup("phone-1", "p1");
    const auto b = batch({event_record("phone-1", "p1", 1736150001.0), event_record("phone-1", "p1", 1736150002.0),
                          event_record("phone-1", "p1", 1736150003.0)});
    auto r = f.post("event", b, tok);
    ASSERT_EQ(r.status, 200);
    const auto acks = Json::parse(r.body)["acks"];
    ASSERT_EQ(acks.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(acks[i]["status"], "stored");
        EXPECT_EQ(acks[i]["index"], i);
        EXPECT_EQ(acks[i]["record_id"], b["records"][i]["record_id"]);
    }
    std::ostringstream before;
    f.store.dump(before);
    r = f.post("event", b, tok);
    const auto replay = Json::parse(r.body);
    ASSERT_EQ(replay["acks"].size(), 3u);
    for (const auto& a : replay["acks"]) EXPECT_EQ(a["status"], "duplicate");
    std::ostringstream after;
    f.store.dump(after);
    EXPECT_EQ(before.str(), after.str());
    EXPECT_EQ(f.store.count(), 3u);
}

TEST(Backend, ConflictingContentUnderSameIdIsRejected) {
    Fixture f;
    const auto tok = f.signup("phone-1", "p1");
    auto rec = event_record("phone-1", "p1", 1736150001.0);
    f.post("event", batch({rec}), tok);
    rec["timestamp"] = 1736150009.0;
    const auto acks = Json::parse(f.post("event", batch({rec}), tok).body)["acks"];
    EXPECT_EQ(acks[0]["status"], "rejected");
    EXPECT_EQ(f.store.query({}).at(0).timestamp(), 1736150001.0);
}

TEST(Backend, PartialRejectionKeepsGoodRecords) {
    Fixture f;
    const auto tok = f.signup("phone-1", "p1");
    auto bad = event_record("phone-1", "p1", 1.0);
    bad["timestamp"] = "2024-01-01";
    const auto b = batch({event_record("phone-1", "p1", 1736150001.0), bad, event_record("phone-1", "p1", 1736150003.0)});
    const auto acks = Json::parse(f.post("event", b, tok).body)["acks"];
    EXPECT_EQ(acks[0]["status"], "stored");
    EXPECT_EQ(acks[1]["status"], "rejected");
    EXPECT_EQ(acks[1]["error"], "record.timestamp: must be a floating-point UNIX timestamp");
    EXPECT_EQ(acks[2]["status"], "stored");
    EXPECT_EQ(f.store.count(), 2u);
}

TEST(Backend, RecordsMustMatchRouteDeviceAndAccount) {
    Fixture f;
    const auto tok = f.signup("phone-1", "p1");
    auto other_phone = event_record("phone-2", "p1", 1736150001.0);
    auto other_user = event_record("phone-1", "p2", 1736150002.0);
    const auto acks = Json::parse(f.post("event", batch({other_phone, other_user}), tok).body)["acks"];
    EXPECT_EQ(acks[0]["status"], "rejected");
    EXPECT_EQ(acks[1]["status"], "rejected");
    EXPECT_EQ(f.post("gps", batch({event_record("phone-1", "p1", 1736150003.0)}), tok).body.find("stored"),
              std::string::npos);
    EXPECT_EQ(f.post("nonsense", batch({}), tok).status, 404);
    EXPECT_EQ(f.store.count(), 0u);
}

TEST(Backend, StructurallyBrokenBodiesAre400AndPersistNothing) {
    Fixture f;
    const auto tok = f.signup("phone-1", "p1");
    const auto full = batch({event_record("phone-1", "p1", 1736150001.0), event_record("phone-1", "p1", 1736150002.0)}).dump();
    for (std::size_t cut = 0; cut < full.size(); cut += 7) {
        HttpRequest req{"POST", "/data/event", {{"authorization", "Bearer " + tok}}, full.substr(0, cut)};
        EXPECT_EQ(f.svc.handle(req).status, 400) << cut;
    }
    EXPECT_EQ(f.post("event", Json{{"records", 5}}, tok).status, 400);
    EXPECT_EQ(f.post("event", Json::array(), tok).status, 400);
    EXPECT_EQ(f.store.count(), 0u);
}

// Absent, malformed, tampered and expired tokens: every protected route
// answers 401 with an empty body and nothing is stored.
TEST(Backend, AuthGateFourWayProperty) {
    Fixture f;
    const auto good = f.signup("phone-1", "p1");
    std::mt19937 gen(3);
    const auto b = batch({event_record("phone-1", "p1", 1736150001.0)});

    std::vector<std::pair<std::string, std::optional<std::string>>> cases;
    cases.push_back({"absent", std::nullopt});
    for (int i = 0; i < 50; ++i) {
        std::string junk(gen() % 40, 'x');
        for (auto& c : junk) c = static_cast<char>(33 + gen() % 90);
        cases.push_back({"malformed", "Bearer " + junk});
        std::string tampered = good;
        const auto pos = gen() % tampered.size();
        tampered[pos] = tampered[pos] == 'A' ? 'B' : 'A';
        if (tampered != good) cases.push_back({"tampered", "Bearer " + tampered});
    }
    cases.push_back({"no-scheme", good});
    cases.push_back({"other-secret", "Bearer " + TokenSigner(Bytes(20, 1), 3600).issue({"phone-1", "p1", f.clock.now(),
                                                                                         f.clock.now() + 3600, "n"})});
    cases.push_back({"unknown-device", "Bearer " + f.svc.signer().issue({"phone-9", "p9", f.clock.now(),
                                                                          f.clock.now() + 3600, "n"})});

    for (const auto& [label, header] : cases) {
        for (const char* target : {"/data/event", "/records"}) {
            HttpRequest req{std::string(target) == "/records" ? "GET" : "POST", target, {}, b.dump()};
            if (header) req.headers["authorization"] = *header;
            const auto r = f.svc.handle(req);
            EXPECT_EQ(r.status, 401) << label;
            EXPECT_TRUE(r.body.empty());
        }
    }
    f.clock.advance(3600.0);
    EXPECT_EQ(f.post("event", b, good).status, 401);
    EXPECT_EQ(f.get("/records", good).status, 401);
    EXPECT_EQ(f.store.count(), 0u);
    EXPECT_EQ(f.svc.stats().unauthorized, 2 * cases.size() + 2);
}

// Random malformations of otherwise valid records: anything with a
// non-float timestamp or a missing phone_id/username must never be stored.
TEST(Backend, ValidationFuzz) {
    Fixture f;
    const auto tok = f.signup("phone-1", "p1");
    std::mt19937 gen(11);
    const std::vector<Json> bad_timestamps = {"2024-01-01", "1736150001", nullptr, true, Json::array({1.0}),
                                              Json::object(), -1.0};
    std::set<std::string> offending;
    for (int round = 0; round < 200; ++round) {
        Json recs = Json::array();
        for (int i = 0; i < 5; ++i) {
            auto rec = event_record("phone-1", "p1", 1736150000.0 + gen() % 100000);
            switch (gen() % 4) {
                case 0:
                    rec["timestamp"] = bad_timestamps[gen() % bad_timestamps.size()];
                    offending.insert(rec["record_id"]);
                    break;
                case 1:
                    rec.erase(gen() % 2 ? "phone_id" : "username");
                    offending.insert(rec["record_id"]);
                    break;
                case 2:
                    rec[gen() % 2 ? "phone_id" : "username"] = gen() % 2 ? Json(42) : Json("");
                    offending.insert(rec["record_id"]);
                    break;
                default:
                    break;
            }
            recs.push_back(rec);
        }
        const auto r = f.post("event", Json{{"records", recs}}, tok);
        ASSERT_EQ(r.status, 200);
        const auto acks = Json::parse(r.body)["acks"];
        for (std::size_t i = 0; i < recs.size(); ++i)
            EXPECT_EQ(acks[i]["status"] == "rejected", offending.count(recs[i]["record_id"]) > 0);
    }
    for (const auto& rec : f.store.query({})) {
        EXPECT_FALSE(offending.count(rec.record_id()));
        EXPECT_TRUE(rec.record["timestamp"].is_number_float());
    }
    EXPECT_GT(f.store.count(), 0u);
}

TEST(Backend, QueryOrderingAndFilters) {
    Fixture f;
    const auto t1 = f.signup("phone-1", "p1");
    const auto t2 = f.signup("phone-2", "p2");
    EXPECT_EQ(Json::parse(f.get("/records", t1).body)["records"].size(), 0u);
    std::mt19937 gen(5);
    std::size_t n1 = 0;
    for (int i = 0; i < 40; ++i) {
        const bool first = gen() % 2;
        const double t = 1736150000.0 + static_cast<double>(gen() % 10);  // many ties
        if (first) ++n1;
        f.post("event", batch({event_record(first ? "phone-1" : "phone-2", first ? "p1" : "p2", t)}), first ? t1 : t2);
    }
    const auto all = Json::parse(f.get("/records", t1).body)["records"];
    ASSERT_EQ(all.size(), 40u);
    for (std::size_t i = 1; i < all.size(); ++i) {
        const auto a = std::make_pair(all[i - 1]["timestamp"].get<double>(), all[i - 1]["record_id"].get<std::string>());
        const auto b = std::make_pair(all[i]["timestamp"].get<double>(), all[i]["record_id"].get<std::string>());
        EXPECT_LT(a, b);
    }
    EXPECT_TRUE(all[0].contains("received_t"));
    EXPECT_TRUE(all[0].contains("device_id"));
    EXPECT_EQ(Json::parse(f.get("/records?participant_id=p1", t2).body)["records"].size(), n1);
    const auto ranged = Json::parse(f.get("/records?from=1736150002&to=1736150005&record_type=event", t1).body)["records"];
    for (const auto& r : ranged) {
        EXPECT_GE(r["timestamp"].get<double>(), 1736150002.0);
        EXPECT_LT(r["timestamp"].get<double>(), 1736150005.0);
    }
    EXPECT_EQ(Json::parse(f.get("/records?record_type=gps", t1).body)["records"].size(), 0u);
    EXPECT_EQ(f.get("/records?record_type=bogus", t1).status, 400);
    EXPECT_EQ(f.get("/records?from=abc", t1).status, 400);
    EXPECT_EQ(f.get("/records?color=red", t1).status, 400);
}

TEST(Backend, HealthAndRouting) {
    Fixture f;
    auto h = Json::parse(f.get("/health", "").body);
    EXPECT_EQ(h["status"], "ok");
    EXPECT_EQ(h["records"], 0);
    const auto tok = f.signup("phone-1", "p1");
    f.post("event", batch({event_record("phone-1", "p1", 1736150001.0), event_record("phone-1", "p1", 1736150002.0)}), tok);
    EXPECT_EQ(Json::parse(f.get("/health", "").body)["records"], 2);
    EXPECT_EQ(f.get("/nowhere", "").status, 404);
    EXPECT_EQ(f.get("/signup", "").status, 405);
}

TEST(Backend, ConcurrentIngestPreservesPerPhoneCounts) {
    Fixture f;
    constexpr int kPhones = 8, kBatches = 25, kPerBatch = 10;
    std::vector<std::string> tokens;
    for (int p = 0; p < kPhones; ++p) tokens.push_back(f.signup("phone-" + std::to_string(p), "p" + std::to_string(p)));
    std::vector<std::vector<Json>> batches(kPhones);
    for (int p = 0; p < kPhones; ++p)
        for (int b = 0; b < kBatches; ++b) {
            Json recs = Json::array();
            for (int i = 0; i < kPerBatch; ++i)
                recs.push_back(event_record("phone-" + std::to_string(p), "p" + std::to_string(p),
                                            1736150000.0 + b * kPerBatch + i));
            batches[p].push_back(Json{{"records", recs}});
        }
    std::vector<std::thread> threads;
    for (int p = 0; p < kPhones; ++p)
        threads.emplace_back([&, p] {
            // Every batch twice, interleaved with the other phones.
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& b : batches[p]) f.post("event", b, tokens[p]);
        });
    for (auto& t : threads) t.join();
    EXPECT_EQ(f.store.count(), static_cast<std::size_t>(kPhones * kBatches * kPerBatch));
    for (int p = 0; p < kPhones; ++p) {
        RecordFilter filt;
        filt.participant_id = "p" + std::to_string(p);
        EXPECT_EQ(f.store.query(filt).size(), static_cast<std::size_t>(kBatches * kPerBatch));
    }
    EXPECT_EQ(f.svc.stats().stored, static_cast<std::uint64_t>(kPhones * kBatches * kPerBatch));
    EXPECT_EQ(f.svc.stats().duplicates, static_cast<std::uint64_t>(kPhones * kBatches * kPerBatch));
}

TEST(Backend, JournalReplaysAfterRestart) {
    const auto path = std::filesystem::temp_directory_path() / "motionpi_backend_journal_test.jsonl";
    std::filesystem::remove(path);
    std::string dump;
    {
        MemoryStore store(path);
        VirtualClock clock(1736150000.0);
        SeededRandom rng(1);
        BackendService svc({kSecret, 3600.0}, store, clock, rng);
        const auto tok = Json::parse(svc.handle({"POST", "/signup", {}, R"({"device_id":"d","username":"u"})"}).body)["token"];
        HttpRequest req{"POST", "/data/event", {{"authorization", "Bearer " + tok.get<std::string>()}},
                        batch({event_record("d", "u", 1736150001.0), event_record("d", "u", 1736150002.0)}).dump()};
        svc.handle(req);
        std::ostringstream os;
        store.dump(os);
        dump = os.str();
    }
    MemoryStore reopened(path);
    std::ostringstream os;
    reopened.dump(os);
    EXPECT_EQ(os.str(), dump);
    EXPECT_EQ(reopened.count(), 2u);
    std::filesystem::remove(path);
}

TEST(Backend, ServesOverHttp) {
    VirtualClock clock(1736150000.0);
    SeededRandom rng(2);
    MemoryStore store;
    BackendService svc({kSecret, 3600.0}, store, clock, rng);
    HttpServer server(svc, 2);
    const int port = server.bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    std::thread th([&] { server.listen(); });
    HttpClientTransport client("127.0.0.1", port, 5.0);
    auto r = client.send({"POST", "/signup", {}, R"({"device_id":"d","username":"u"})"});
    ASSERT_TRUE(r.ok());
    ASSERT_EQ(r.response->status, 200);
    const std::string tok = Json::parse(r.response->body)["token"];
    r = client.send({"POST", "/data/event", {{"authorization", "Bearer " + tok}},
                     batch({event_record("d", "u", 1736150001.0)}).dump()});
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(Json::parse(r.response->body)["acks"][0]["status"], "stored");
    r = client.send({"POST", "/data/event", {}, "{}"});
    EXPECT_EQ(r.response->status, 401);
    EXPECT_TRUE(r.response->body.empty());
    r = client.send({"GET", "/health", {}, ""});
    EXPECT_EQ(Json::parse(r.response->body)["records"], 1);
    server.stop();
    th.join();

    HttpClientTransport dead("127.0.0.1", port, 1.0);
    EXPECT_EQ(dead.send({"GET", "/health", {}, ""}).failure, TransportFailure::ConnectionRefused);
}

TEST(Backend, ServerConfigParsing) {
    const auto c = ServerConfig::from_json(
        Json::parse(R"({"port": 9000, "token_secret": "0123456789abcdef", "token_expiry_s": 60, "store_path": "x"})"));
    EXPECT_EQ(c.port, 9000);
    EXPECT_EQ(c.token_expiry_s, 60.0);
    EXPECT_THROW(ServerConfig::from_json(Json::parse(R"({"port": 9000})")), std::invalid_argument);
    try {
        (void)ServerConfig::from_json(Json::parse(R"({"token_secret": "0123456789abcdef", "port": "x"})"));
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("config.port"), std::string::npos);
    }
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "motionpi/backend/service.hpp"
#include "motionpi/netsim/activity.hpp"
#include "motionpi/netsim/link.hpp"
#include "motionpi/netsim/runner.hpp"
#include "motionpi/netsim/scenario.hpp"

using namespace motionpi;
using namespace motionpi::netsim;
namespace fs = std::filesystem;

namespace {

constexpr double kDay0 = 1736121600.0;  // 2025-01-06 00:00:00 UTC

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("motionpi_netsim_" + name);
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

double mean_enmo(const std::vector<signal::AccelSample>& s) {
    double sum = 0.0;
    for (const auto& a : s) sum += std::max(0.0, std::sqrt(a.ax * a.ax + a.ay * a.ay + a.az * a.az) - 1.0);
    return sum / static_cast<double>(s.size());
}

std::string expect_error(const Json& doc) {
    try {
        (void)Scenario::from_json(doc);
    } catch (const std::invalid_argument& e) {
        return e.what();
    }
    return "no error";
}

struct Backend {
    VirtualClock clock{kDay0};
    SeededRandom nonces{1};
    backend::MemoryStore store;
    backend::BackendService svc{backend::ServiceConfig{"link-test-secret-0123456789"}, store, clock, nonces};
    backend::LocalTransport local{svc};
};

HttpRequest signup_request(const std::string& device) {
    return {"POST", "/signup", {{"content-type", "application/json"}},
            Json{{"device_id", device}, {"username", "p01"}}.dump()};
}

}  // namespace

TEST(ActivitySynth, MeanEnmoSitsEitherSideOfTheThreshold) {
    ActivitySynth synth(9);
    std::vector<signal::AccelSample> v, w, s;
    synth.generate(ActivityState::Vigorous, kDay0, kDay0 + 600, v);
    synth.generate(ActivityState::Walking, kDay0, kDay0 + 600, w);
    synth.generate(ActivityState::Sedentary, kDay0, kDay0 + 600, s);
    ASSERT_EQ(v.size(), 600u * 32);
    EXPECT_DOUBLE_EQ(v[1].t - v[0].t, 1.0 / 32);
    // Mean of max(0, A sin) over whole cycles is A / pi.
    EXPECT_NEAR(mean_enmo(v), 0.6 / M_PI, 0.01);
    EXPECT_NEAR(mean_enmo(w), 0.15 / M_PI, 0.01);
    EXPECT_LT(mean_enmo(s), 0.01);
    EXPECT_GT(mean_enmo(v), 0.1006);
    EXPECT_LT(mean_enmo(w), 0.1006);
}

TEST(ActivityChain, MarkovMatchesItsStationaryDistribution) {
    ActivityProfile p;
    // Power iteration as the oracle.
    std::array<double, 3> pi{1.0, 0.0, 0.0};
    for (int k = 0; k < 2000; ++k) {
        std::array<double, 3> next{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) next[j] += pi[i] * p.transition[i][j];
        pi = next;
    }
    ActivityChain chain(p, 77);
    std::array<double, 3> counts{};
    const int n = 200000;
    for (int m = 0; m < n; ++m) ++counts[static_cast<int>(chain.next_minute(m * 60.0))];
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(counts[i] / n, pi[i], 0.01) << i;
}

TEST(ActivityChain, ScheduleFollowsSegments) {
    const auto p = ActivityProfile::from_json(
        Json::parse(R"({"kind": "schedule", "default": "walking",
                        "segments": [{"start": "08:00", "end": "08:30", "state": "vigorous"}]})"),
        "a");
    ActivityChain chain(p, 1);
    EXPECT_EQ(chain.next_minute(8 * 3600 - 60), ActivityState::Walking);
    EXPECT_EQ(chain.next_minute(8 * 3600), ActivityState::Vigorous);
    EXPECT_EQ(chain.next_minute(8 * 3600 + 29 * 60), ActivityState::Vigorous);
    EXPECT_EQ(chain.next_minute(8 * 3600 + 30 * 60), ActivityState::Walking);
}

TEST(Scenario, ExpandedFormRoundTrips) {
    const auto s = Scenario::from_json(Json::parse(R"({
        "days": 2, "seed": 5, "utc_offset_minutes": -420,
        "participants": [{"participant_id": "p01", "band": {"side": "right", "start_battery_pct": 60}},
                         {"participant_id": "p02", "activity": {"kind": "schedule", "segments": []}}],
        "outages": {"drop_mode": "timeout", "intervals": [{"start_s": 100, "end_s": 200, "drop_mode": "mid_body_cut"}]},
        "overrides": {"geometry": "desk", "trigger": {"mvpa_required_seconds": 300}},
        "daily": {"connect": "08:00"}
    })"));
    EXPECT_EQ(s.participants[0].phone_id, "phone-p01");
    EXPECT_EQ(s.participants[1].band_mac[5], 2);
    EXPECT_EQ(s.connect_s, 8 * 3600);
    EXPECT_EQ(s.trigger.mvpa_required_seconds, 300);
    EXPECT_DOUBLE_EQ(s.start_t(), kDay0 + 7 * 3600);
    const auto j = s.to_json();
    EXPECT_EQ(Scenario::from_json(j).to_json(), j);
}

TEST(Scenario, ErrorsNameTheField) {
    const auto base = Json::parse(R"({"days": 1, "participants": [{"participant_id": "p01"}]})");
    auto with = [&](const std::string& ptr, const Json& v) {
        auto d = base;
        d[Json::json_pointer(ptr)] = v;
        return expect_error(d);
    };
    EXPECT_EQ(expect_error(Json::parse(R"({"participants": []})")).rfind("scenario.days:", 0), 0u);
    EXPECT_EQ(with("/days", 0).rfind("scenario.days:", 0), 0u);
    EXPECT_EQ(with("/participants/0/band", Json{{"mac", "nope"}}).rfind("scenario.participants[0].band.mac:", 0), 0u);
    EXPECT_EQ(with("/participants/0/activity", Json{{"kind", "x"}}).rfind("scenario.participants[0].activity.kind:", 0),
              0u);
    EXPECT_EQ(with("/outages", Json{{"intervals", {{{"start_s", 10}, {"end_s", 5}}}}}).rfind("scenario.outages", 0), 0u);
    EXPECT_EQ(with("/outages", Json{{"drop_mode", "lossy"}}).rfind("scenario.outages.drop_mode:", 0), 0u);
    EXPECT_EQ(with("/upload", Json{{"batch_size", 0}}).rfind("scenario.upload.batch_size:", 0), 0u);
    EXPECT_EQ(with("/bogus", 1).rfind("scenario.bogus:", 0), 0u);
    auto dup = base;
    dup["participants"].push_back({{"participant_id", "p01"}});
    EXPECT_EQ(expect_error(dup).rfind("scenario.participants[1].participant_id: duplicate", 0), 0u);
}

TEST(OutageSchedule, ModeAtUsesHalfOpenIntervals) {
    OutageSchedule s;
    s.drop_mode = DropMode::Timeout;
    s.intervals = {{10, 20, std::nullopt}, {30, 40, DropMode::MidBodyCut}};
    s.validate();
    EXPECT_FALSE(s.mode_at(9.999));
    EXPECT_EQ(s.mode_at(10), DropMode::Timeout);
    EXPECT_FALSE(s.mode_at(20));
    EXPECT_EQ(s.mode_at(35), DropMode::MidBodyCut);
    EXPECT_DOUBLE_EQ(s.total_seconds(), 20.0);
    s.intervals.push_back({35, 50, std::nullopt});
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(SimulatedLink, DropModesReachTheServerDifferently) {
    Backend b;
    OutageSchedule sched;
    sched.intervals = {{kDay0 + 100, kDay0 + 200, DropMode::RefuseConnection},
                       {kDay0 + 300, kDay0 + 400, DropMode::Timeout},
                       {kDay0 + 500, kDay0 + 600, DropMode::MidBodyCut}};
    SimulatedLink link(b.local, b.clock, sched, {0.05, false, true});

    b.clock.set(kDay0 + 150);
    EXPECT_EQ(link.send(signup_request("d1")).failure, TransportFailure::ConnectionRefused);
    EXPECT_EQ(b.svc.account_count(), 0u);

    b.clock.set(kDay0 + 350);
    EXPECT_EQ(link.send(signup_request("d2")).failure, TransportFailure::Timeout);
    EXPECT_EQ(b.svc.account_count(), 1u);

    b.clock.set(kDay0 + 550);
    EXPECT_EQ(link.send(signup_request("d3")).failure, TransportFailure::ConnectionReset);
    EXPECT_EQ(b.svc.account_count(), 1u);
    EXPECT_EQ(b.svc.stats().bad_requests, 1u);

    b.clock.set(kDay0 + 700);
    const auto ok = link.send(signup_request("d4"));
    ASSERT_TRUE(ok.ok());
    EXPECT_EQ(ok.response->status, 200);

    const auto& cap = link.capture();
    ASSERT_EQ(cap.size(), 4u);
    EXPECT_TRUE(cap[0].delivered_body.empty());
    EXPECT_EQ(cap[1].delivered_body, cap[1].request_body);
    EXPECT_EQ(cap[2].delivered_body.size(), SimulatedLink::cut_point(cap[2].request_body.size()));
    EXPECT_EQ(link.stats().refused, 1u);
    EXPECT_EQ(link.stats().timeouts, 1u);
    EXPECT_EQ(link.stats().resets, 1u);
    EXPECT_EQ(link.stats().delivered, 3u);
}

TEST(SimulatedLink, CutPointIsAlwaysShortOfTheBody) {
    EXPECT_EQ(SimulatedLink::cut_point(0), 0u);
    for (std::size_t n = 1; n < 5000; n += 7) {
        EXPECT_LT(SimulatedLink::cut_point(n), n);
        EXPECT_LE(SimulatedLink::cut_point(n), n / 2);
    }
}

TEST(SimulatedLink, RequestsAtOneInstantQueueIntoAnOutage) {
    Backend b;
    OutageSchedule sched;
    sched.intervals = {{kDay0 + 15, kDay0 + 100, std::nullopt}};
    SimulatedLink link(b.local, b.clock, sched, {10.0, false, false});
    b.clock.set(kDay0);
    EXPECT_TRUE(link.send(signup_request("a")).ok());   // occupies [0, 10)
    EXPECT_TRUE(link.send(signup_request("b")).ok());   // starts at 10
    EXPECT_FALSE(link.send(signup_request("c")).ok());  // starts at 20, inside the outage
    b.clock.set(kDay0 + 200);
    EXPECT_TRUE(link.send(signup_request("d")).ok());
}

TEST(SimulatedLink, DuplicateDeliveryIsHarmless) {
    Backend b;
    SimulatedLink link(b.local, b.clock, {}, {0.05, true, false});
    EXPECT_TRUE(link.send(signup_request("a")).ok());
    EXPECT_EQ(link.stats().duplicates, 1u);
    EXPECT_EQ(b.svc.account_count(), 1u);
}

TEST(Runner, TwoParticipantsOneDayAreConsistent) {
    const auto dir = fresh_dir("pair");
    ScenarioRunner r(Scenario::from_json(Json::parse(R"({
        "name": "pair", "seed": 11, "days": 1,
        "participants": [{"participant_id": "p01"}, {"participant_id": "p02"}]
    })")),
                     {dir, true, false, false});
    const auto report = r.run();
    EXPECT_TRUE(r.consistent());
    EXPECT_EQ(report["exit_status"], "ok");
    for (const auto& p : report["participants"]) {
        EXPECT_EQ(p["pending"], 0);
        EXPECT_EQ(p["signup_requests"], 1);
        EXPECT_EQ(p["local_records"], p["consistency"]["server_records"]);
        std::size_t random = 0;
        for (const auto& [status, n] : p["surveys"]["random"].items()) random += n.get<std::size_t>();
        EXPECT_EQ(random, 3u);
        // 14 h of 15 s bouts.
        EXPECT_EQ(p["by_type"]["enmo"], 14 * 240);
        EXPECT_EQ(p["band"]["nand_erases_from_fat_ops"], 0);
        EXPECT_EQ(p["days"][0]["phone_battery_pct_at_stop"], 58.0);
    }
    EXPECT_TRUE(fs::exists(dir / "scenario.json"));
    EXPECT_TRUE(fs::exists(dir / "participants" / "p02" / "token.json"));
    EXPECT_FALSE(fs::is_empty(dir / "participants" / "p01" / "outbox"));

    // Coordinates only ever travel and rest encrypted.
    const auto ac = phone::AgentConfig::load(dir / "participants" / "p01" / "agent.json");
    const phone::GpsCipher cipher(ac.gps_key, ac.key_id);
    std::vector<std::string> plain;
    for (const auto& rec : phone::Outbox::load_records(dir / "participants" / "p01" / "outbox"))
        if (rec["record_type"] == "gps") plain.push_back(phone::GpsCipher::plaintext(cipher.decrypt(rec["payload"])));
    EXPECT_EQ(plain.size(), 840u);
    std::string outbox;
    for (const auto& e : fs::directory_iterator(dir / "participants" / "p01" / "outbox")) outbox += slurp(e.path());
    const auto store = slurp(dir / "server" / "store.jsonl");
    const auto wire = slurp(dir / "wire.ndjson");
    for (const auto& text : plain) {
        EXPECT_EQ(store.find(text), std::string::npos);
        EXPECT_EQ(wire.find(text), std::string::npos);
        EXPECT_EQ(outbox.find(text), std::string::npos);
    }
}

TEST(Runner, SixHoursOfMixedOutagesStillConverge) {
    ScenarioRunner r(Scenario::from_json(Json::parse(R"({
        "seed": 3, "days": 1,
        "participants": [{"participant_id": "p01"}],
        "outages": {"drop_mode": "refuse_connection", "intervals": [
            {"start_s": 28800, "end_s": 34200},
            {"start_s": 36000, "end_s": 41400, "drop_mode": "timeout"},
            {"start_s": 43200, "end_s": 48600, "drop_mode": "mid_body_cut"},
            {"start_s": 72000, "end_s": 77400}]}
    })")),
                     {fresh_dir("outages")});
    const auto report = r.run();
    EXPECT_DOUBLE_EQ(report["outage_seconds"].get<double>(), 6 * 3600.0);
    EXPECT_TRUE(r.consistent()) << report["participants"][0]["consistency"].dump();
    EXPECT_GT(report["link"]["refused"], 0);
    EXPECT_GT(report["link"]["timeouts"], 0);
    EXPECT_GT(report["link"]["resets"], 0);
    EXPECT_GT(report["server"]["duplicates"], 0);
    EXPECT_EQ(report["participants"][0]["quarantined"], 0);
}

TEST(Runner, SameScenarioSameBytes) {
    const auto doc = Json::parse(R"({
        "seed": 8, "days": 1, "network": {"duplicate_delivery": true},
        "participants": [{"participant_id": "a"}, {"participant_id": "b"}],
        "outages": {"drop_mode": "timeout", "intervals": [{"start_s": 30000, "end_s": 33000}]}
    })");
    const auto d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
    ScenarioRunner(Scenario::from_json(doc), {d1}).run();
    ScenarioRunner(Scenario::from_json(doc), {d2}).run();
    EXPECT_EQ(slurp(d1 / "report.json"), slurp(d2 / "report.json"));
    EXPECT_EQ(slurp(d1 / "server" / "store.jsonl"), slurp(d2 / "server" / "store.jsonl"));
    EXPECT_FALSE(slurp(d1 / "report.json").empty());
}

TEST(Runner, NeverReadsTheSystemClock) {
    const auto before = SystemClock::read_count();
    ScenarioRunner r(Scenario::from_json(Json::parse(R"({"days": 1, "participants": [{"participant_id": "p01"}],
                                                         "overrides": {"store_ppg": false}})")),
                     {fresh_dir("clock")});
    r.run();
    EXPECT_EQ(SystemClock::read_count(), before);
}

TEST(Runner, FullBandStopsCollectionButLosesNothingUploaded) {
    // The desk geometry holds well under an hour of data.
    ScenarioRunner r(Scenario::from_json(Json::parse(R"({"days": 1, "participants": [{"participant_id": "p01"}],
                                                         "overrides": {"geometry": "desk"}})")),
                     {fresh_dir("full")});
    const auto report = r.run();
    const auto& p = report["participants"][0];
    EXPECT_TRUE(r.consistent());
    EXPECT_LT(p["by_type"]["enmo"].get<int>(), 14 * 240);
    EXPECT_GE(p["events"]["collection_disabled"].get<int>(), 1);
    EXPECT_EQ(p["band"]["nand_erases_from_fat_ops"], 0);
}

TEST(Scenario, SeedsAcceptAnyNonNegativeInteger) {
    const Json signed_seed{{"seed", 20}, {"days", 1}, {"participants", {{{"participant_id", "p"}, {"rng_seed", 4}}}}};
    EXPECT_EQ(Scenario::from_json(signed_seed).seed, 20u);
    auto negative = signed_seed;
    negative["seed"] = -1;
    EXPECT_EQ(expect_error(negative).rfind("scenario.seed:", 0), 0u);
}

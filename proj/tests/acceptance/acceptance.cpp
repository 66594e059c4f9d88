// End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "motionpi/backend/service.hpp"
#include "motionpi/backend/token.hpp"
#include "motionpi/band/records.hpp"
#include "motionpi/band/wristband.hpp"
#include "motionpi/ema/scheduler.hpp"
#include "motionpi/ftl/ftl.hpp"
#include "motionpi/netsim/runner.hpp"
#include "motionpi/phone/agent.hpp"
#include "motionpi/phone/gps_cipher.hpp"
#include "support/mvpa_oracle.hpp"

using namespace motionpi;
namespace fs = std::filesystem;
using record::Json;

namespace {

// Pinned limits.
constexpr double kOracleBudgetS = 30.0;
constexpr double kFtlBudgetS = 60.0;
constexpr double kConsistencyBudgetS = 300.0;
constexpr double kMinIngestRate = 1000.0;       // records per second
constexpr double kBatteryTolerancePct = 1e-9;
constexpr std::uint64_t kFourGiB = 4ull << 30;
constexpr double kT0 = 1736173800.0;            // 2025-01-06T07:30:00-07:00

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Outcome& o) {
    std::printf("%s  C%-2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

fs::path work_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / "motionpi_acceptance" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

band::Wristband started_band() {
    band::Wristband b(band::BandConfig{});
    b.handle(band::BandCommand::set_participant("p01"));
    b.handle(band::BandCommand::set_time(kT0));
    b.handle(band::BandCommand::start());
    return b;
}

std::vector<double> mvpa_times(const std::vector<band::BandNotification>& ns) {
    std::vector<double> out;
    for (const auto& n : ns)
        if (n.kind == band::NotificationKind::MvpaEpoch) out.push_back(n.t);
    return out;
}

std::vector<double> stream(const std::vector<signal::AccelSample>& trace, double end_t, std::mt19937& rng) {
    auto b = started_band();
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < trace.size()) {
        const std::size_t n = std::min<std::size_t>(trace.size() - pos, 1 + rng() % 2000);
        const auto t = mvpa_times(b.ingest(std::span(trace).subspan(pos, n)));
        out.insert(out.end(), t.begin(), t.end());
        pos += n;
    }
    const auto tail = mvpa_times(b.advance_to(end_t));
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

// ---------------------------------------------------------------- C1, C2

Outcome oracle_equivalence() {
    const auto start = Clock::now();
    std::size_t mismatches = 0, triggers = 0;
    std::mt19937 chunks(99);
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto trace = oracle::random_trace(1000 + seed, kT0, 1800);
        const auto streamed = stream(trace, kT0 + 1800, chunks);
        const auto expected = oracle::triggers(trace, kT0, kT0 + 1800);
        triggers += expected.size();
        if (streamed != expected) ++mismatches;
    }
    const double dt = seconds_since(start);
    return {mismatches == 0 && triggers > 0 && dt < kOracleBudgetS,
            fmt("100 traces, %zu oracle triggers, %zu mismatching traces, %.1f s (limit %.0f s)", triggers,
                mismatches, dt, kOracleBudgetS)};
}

// One 28-bout window with the given number of MVPA bouts at random places.
bool window_triggers(int mvpa_bouts, std::mt19937& rng) {
    std::vector<int> order(28);
    for (int i = 0; i < 28; ++i) order[i] = i < mvpa_bouts;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<signal::AccelSample> trace;
    for (int b = 0; b < 28; ++b)
        for (int i = 0; i < 480; ++i) trace.push_back({kT0 + b * 15.0 + i / 32.0, 0.0, 0.0, order[b] ? 1.3 : 1.0});
    return !stream(trace, kT0 + 420, rng).empty();
}

Outcome trigger_boundary() {
    std::mt19937 rng(19);
    int wrong = 0;
    for (int k = 0; k < 25; ++k) {
        if (window_triggers(19, rng)) ++wrong;
        if (!window_triggers(20, rng)) ++wrong;
    }
    return {wrong == 0, fmt("25 placements each: 19 bouts never trigger, 20 always do (%d wrong)", wrong)};
}

// ---------------------------------------------------------------- C3, C4

Bytes random_bytes(std::size_t n, std::mt19937& rng) {
    Bytes b(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    return b;
}

struct FtlRun {
    std::uint64_t metadata_erases = 0;
    std::uint64_t nand_erases = 0;
    std::uint64_t format_erases = 0;
    std::uint64_t nor_programs = 0;
    bool round_trip = true;
};

FtlRun ftl_sequence(std::uint32_t seed, bool extract) {
    std::mt19937 rng(seed);
    const auto geo = ftl::FtlGeometry::desk();
    auto img = ftl::FlashImage::format(geo, seed);
    const auto formatted = img.nand().erases_total();
    std::map<std::string, Bytes> written;
    std::map<std::string, std::uint64_t> sizes;
    const int ops = 5 + static_cast<int>(rng() % 40);
    for (int op = 0; op < ops; ++op) {
        if (written.empty() || rng() % 4 == 0) {
            const std::string name = "F" + std::to_string(op) + ".BIN";
            const std::uint64_t size = 1 + rng() % (256 * 1024);
            try {
                img.create_file(name, size, kT0 + op);
                written[name];
                sizes[name] = size;
            } catch (const ftl::AllocationError&) {
            }
            continue;
        }
        auto it = written.begin();
        std::advance(it, rng() % written.size());
        const std::uint64_t room = sizes[it->first] - it->second.size();
        if (room == 0) continue;
        const auto chunk = random_bytes(1 + rng() % std::min<std::uint64_t>(room, 20000), rng);
        img.append(it->first, chunk);
        it->second.insert(it->second.end(), chunk.begin(), chunk.end());
    }
    img.close_all();
    FtlRun r;
    const auto wear = img.wear_report();
    r.metadata_erases = wear.nand_erases_from_fat_ops;
    r.nand_erases = img.nand().erases_total();
    r.format_erases = formatted;
    r.nor_programs = wear.nor_page_programs;
    if (extract) {
        const auto files = ftl::mount_and_extract(img.raw_nor(), img.raw_nand());
        r.round_trip = files.size() == written.size();
        for (const auto& f : files) {
            const auto it = written.find(f.entry.name);
            if (it == written.end() || it->second != f.data) r.round_trip = false;
        }
    }
    return r;
}

Outcome zero_nand_metadata_erases() {
    const auto start = Clock::now();
    std::uint64_t metadata = 0, extra = 0, nor = 0;
    for (std::uint32_t s = 1; s <= 1000; ++s) {
        const auto r = ftl_sequence(s, false);
        metadata += r.metadata_erases;
        extra += r.nand_erases - r.format_erases;
        nor += r.nor_programs;
    }
    const double dt = seconds_since(start);
    return {metadata == 0 && extra == 0 && nor > 0 && dt < kFtlBudgetS,
            fmt("1000 sequences: NAND erases from file creation %llu, NAND erases after format %llu, NOR page "
                "programs %llu, %.1f s",
                static_cast<unsigned long long>(metadata), static_cast<unsigned long long>(extra),
                static_cast<unsigned long long>(nor), dt)};
}

Outcome ftl_round_trip() {
    int bad = 0;
    for (std::uint32_t s = 1; s <= 200; ++s)
        if (!ftl_sequence(5000 + s, true).round_trip) ++bad;
    return {bad == 0, fmt("200 sequences extracted, %d differ", bad)};
}

// ---------------------------------------------------------------- C5

Outcome capacity() {
    // Independent arithmetic: 9 x int16 at 32 Hz plus 3 x 24-bit at 64 Hz.
    const std::uint64_t per_second = 9 * 2 * 32 + 3 * 3 * 64;
    const std::uint64_t total = per_second * 3600 * 14 * 30;
    bool ok = total <= kFourGiB && per_second == band::storage_bytes_per_second() &&
              total == band::storage_bytes_for(30, 14);
    // The full-scale volume has to hold one IMU and one PPG file per day.
    auto img = ftl::FlashImage::format(ftl::FtlGeometry::full_scale());
    const std::uint64_t imu_day = 18ull * 32 * 3600 * 14;
    const std::uint64_t ppg_day = 9ull * 64 * 3600 * 14;
    try {
        for (int d = 0; d < 30; ++d) {
            img.create_file(fmt("IMU%05d.BIN", d + 1), imu_day, kT0 + d * 86400.0);
            img.create_file(fmt("PPG%05d.BIN", d + 1), ppg_day, kT0 + d * 86400.0);
        }
    } catch (const ftl::FtlError& e) {
        ok = false;
    }
    return {ok, fmt("%llu bytes = %.3f GiB for 30 days x 14 h (limit 4 GiB); 60 daily files allocated, %u clusters "
                    "left",
                    static_cast<unsigned long long>(total), static_cast<double>(total) / (1ull << 30),
                    img.free_clusters())};
}

// ---------------------------------------------------------------- C6, C7, C14

Json random_scenario(int index, std::mt19937_64& rng) {
    auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
    const char* modes[] = {"refuse_connection", "timeout", "mid_body_cut"};
    const int days = pick(1, 2);
    const int people = pick(1, 5);
    Json participants = Json::array();
    for (int p = 0; p < people; ++p) participants.push_back({{"participant_id", fmt("s%02dp%d", index, p + 1)}});
    const int outages = pick(0, 8);
    Json intervals = Json::array();
    if (outages > 0) {
        const double slot = days * 86400.0 / outages;
        for (int k = 0; k < outages; ++k) {
            const double start = k * slot + std::uniform_real_distribution<double>(0.0, slot / 2)(rng);
            const double len = std::uniform_real_distribution<double>(300.0, std::min(4 * 3600.0, slot / 2))(rng);
            Json iv{{"start_s", std::round(start)}, {"end_s", std::round(start + len)}};
            if (rng() % 2) iv["drop_mode"] = modes[rng() % 3];
            intervals.push_back(iv);
        }
    }
    return Json{{"name", fmt("random-%02d", index)},
                {"seed", rng() % 1000000},
                {"days", days},
                {"participants", participants},
                {"outages", {{"drop_mode", modes[index % 3]}, {"intervals", intervals}}},
                {"network",
                 {{"latency_s", std::round(std::uniform_real_distribution<double>(0.01, 0.5)(rng) * 1000) / 1000},
                  {"duplicate_delivery", rng() % 5 == 0}}}};
}

struct ScenarioOutcome {
    bool consistent = false;
    double seconds = 0.0;
    std::string report;
    std::string store;
    std::size_t replayed = 0;
    bool counts_unchanged = false;
    std::size_t participants = 0;
    int days = 0;
};

ScenarioOutcome run_random(const Json& doc, const fs::path& dir, bool replay) {
    ScenarioOutcome o;
    const auto scenario = netsim::Scenario::from_json(doc);
    o.participants = scenario.participants.size();
    o.days = scenario.days;
    netsim::ScenarioRunner runner(scenario, {dir, false, false, replay});
    const auto start = Clock::now();
    runner.run();
    o.seconds = seconds_since(start);
    o.consistent = runner.consistent();
    o.report = slurp(dir / "report.json");
    o.store = slurp(dir / "server" / "store.jsonl");
    if (replay) {
        const auto before = runner.store().count_by_type();
        const auto total = runner.store().count();
        for (const auto& c : runner.link().capture()) {
            if (c.method != "POST" || c.target.rfind("/data/", 0) != 0) continue;
            HttpRequest req{c.method, c.target, {{"content-type", "application/json"}}, c.request_body};
            if (c.authorized) req.headers["authorization"] = c.authorization;
            for (int k = 0; k < 2; ++k) {
                (void)runner.service().handle(req);
                ++o.replayed;
            }
        }
        o.counts_unchanged = runner.store().count_by_type() == before && runner.store().count() == total;
    }
    fs::remove_all(dir);
    return o;
}

Outcome consistency_idempotency_determinism() {
    std::mt19937_64 rng(2025);
    std::vector<Json> docs;
    for (int i = 0; i < 50; ++i) docs.push_back(random_scenario(i, rng));

    std::set<std::string> modes;
    for (const auto& d : docs) {
        if (d["outages"]["intervals"].empty()) continue;
        for (const auto& iv : d["outages"]["intervals"])
            modes.insert(iv.contains("drop_mode") ? iv["drop_mode"] : d["outages"]["drop_mode"]);
    }

    const auto dir = work_dir("random");
    std::vector<ScenarioOutcome> first;
    double seconds = 0.0;
    int inconsistent = 0, replay_changed = 0;
    std::size_t replayed = 0, participant_days = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        auto o = run_random(docs[i], dir / fmt("run-%02zu", i), true);
        seconds += o.seconds;
        participant_days += o.participants * static_cast<std::size_t>(o.days);
        if (!o.consistent) {
            ++inconsistent;
            std::printf("      scenario %zu inconsistent\n", i);
        }
        if (!o.counts_unchanged) ++replay_changed;
        replayed += o.replayed;
        first.push_back(std::move(o));
    }
    report(6, "eventual consistency under outages",
           {inconsistent == 0 && seconds < kConsistencyBudgetS && modes.size() == 3,
            fmt("50 scenarios, %zu participant-days, %zu drop modes used, %d with a non-empty consistency report, "
                "%.1f s (limit %.0f s)",
                participant_days, modes.size(), inconsistent, seconds, kConsistencyBudgetS)});
    report(7, "idempotent replay",
           {replay_changed == 0 && replayed > 0,
            fmt("%zu upload requests replayed (each twice), %d scenarios with changed server counts", replayed,
                replay_changed)});

    int differing = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto again = run_random(docs[i], dir / fmt("rerun-%02zu", i), false);
        if (again.report != first[i].report || again.store != first[i].store) ++differing;
    }
    return {differing == 0, fmt("50 scenarios rerun, %d reports or store dumps differ byte-wise", differing)};
}

// ---------------------------------------------------------------- C8, C9

struct TestBackend {
    VirtualClock clock{kT0};
    SeededRandom nonces{17};
    backend::MemoryStore store;
    backend::BackendService svc;
    explicit TestBackend(double lifetime_s = 30 * 86400.0)
        : svc(backend::ServiceConfig{"acceptance-secret-0123456789", lifetime_s}, store, clock, nonces) {}

    std::string signup(const std::string& device, const std::string& user) {
        const auto r = svc.handle({"POST", "/signup", {{"content-type", "application/json"}},
                                   Json{{"device_id", device}, {"username", user}}.dump()});
        return Json::parse(r.body)["token"].get<std::string>();
    }
};

Json battery_record(std::mt19937_64& rng, const std::string& user, const std::string& phone, double t) {
    SeededRandom ids(rng());
    return Json{{"record_id", make_uuid(ids)},
                {"record_type", "battery"},
                {"participant_id", user},
                {"username", user},
                {"phone_id", phone},
                {"timestamp", t},
                {"payload", {{"source", "phone"}, {"level_pct", 50.0}, {"charging", false}}}};
}

HttpRequest data_request(const std::string& token, const Json& records) {
    HttpRequest r{"POST", "/data/battery", {{"content-type", "application/json"}}, Json{{"records", records}}.dump()};
    if (!token.empty()) r.headers["authorization"] = token;
    return r;
}

Outcome auth_gate() {
    TestBackend b(3600.0);
    const auto token = b.signup("phone-a", "pa");
    std::mt19937_64 rng(8);
    const std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
    const backend::TokenSigner other(Bytes(32, 0x11), 3600.0);
    const std::string secret = "acceptance-secret-0123456789";
    const backend::TokenSigner same_secret(Bytes(secret.begin(), secret.end()), 3600.0);
    std::size_t sent = 0, rejected = 0;
    auto attempt = [&](const std::string& header, bool records_route) {
        HttpRequest req = records_route ? HttpRequest{"GET", "/records?participant_id=pa", {}, {}}
                                        : data_request(header, Json::array({battery_record(rng, "pa", "phone-a", kT0)}));
        if (records_route && !header.empty()) req.headers["authorization"] = header;
        const auto r = b.svc.handle(req);
        ++sent;
        if (r.status == 401 && r.body.empty()) ++rejected;
    };
    for (int i = 0; i < 300; ++i) {
        const bool records_route = i % 5 == 0;
        switch (i % 6) {
            case 0:
                attempt("", records_route);
                break;
            case 1: {
                std::string t = token;
                const std::size_t pos = rng() % t.size();
                if (t[pos] == '.') break;
                char c;
                do c = alphabet[rng() % alphabet.size()];
                while (c == t[pos]);
                t[pos] = c;
                attempt("Bearer " + t, records_route);
                break;
            }
            case 2:
                attempt("Bearer " + other.issue({"phone-a", "pa", kT0, kT0 + 3600, "n"}), records_route);
                break;
            case 3:
                attempt("Bearer " + same_secret.issue({"phone-a", "pa", kT0 - 7200, kT0 - 3600, "n"}), records_route);
                break;
            case 4:
                attempt("Basic " + token, records_route);
                break;
            default:
                attempt("Bearer", records_route);
                break;
        }
    }
    // The genuine token after it expires.
    b.clock.set(kT0 + 3601);
    for (int i = 0; i < 20; ++i) attempt("Bearer " + token, i % 2 == 0);
    const bool nothing = b.store.count() == 0;
    return {sent == rejected && nothing && sent > 300,
            fmt("%zu/%zu forged, expired or missing credentials answered 401 with empty body; %zu records persisted",
                rejected, sent, b.store.count())};
}

Outcome validation_gate() {
    TestBackend b;
    const auto token = "Bearer " + b.signup("phone-v", "pv");
    std::mt19937_64 rng(9);
    std::set<std::string> offending, valid;
    const Json bad_times[] = {"1736173800.5", true, nullptr, Json::array({1.0}), Json::object(), "", "NaN", "now"};
    for (int batch = 0; batch < 200; ++batch) {
        Json records = Json::array();
        const int n = 1 + static_cast<int>(rng() % 20);
        for (int i = 0; i < n; ++i) {
            auto rec = battery_record(rng, "pv", "phone-v", kT0 + batch * 60 + i);
            switch (rng() % 5) {
                case 0:
                    rec["timestamp"] = bad_times[rng() % std::size(bad_times)];
                    break;
                case 1:
                    rec.erase("phone_id");
                    break;
                case 2:
                    rec.erase("username");
                    break;
                default:
                    valid.insert(rec["record_id"].get<std::string>());
                    records.push_back(rec);
                    continue;
            }
            offending.insert(rec["record_id"].get<std::string>());
            records.push_back(rec);
        }
        (void)b.svc.handle(data_request(token, records));
    }
    std::size_t leaked = 0, stored_valid = 0;
    for (const auto& r : b.store.query({})) {
        leaked += offending.count(r.record_id());
        stored_valid += valid.count(r.record_id());
    }
    return {leaked == 0 && !offending.empty(),
            fmt("200 fuzzed batches: %zu offending records, %zu persisted; %zu/%zu well-formed records stored",
                offending.size(), leaked, stored_valid, valid.size())};
}

// ---------------------------------------------------------------- C10, C13

Outcome gps_confidentiality(const fs::path& run, std::size_t& fixes) {
    std::string haystack = slurp(run / "wire.ndjson") + slurp(run / "server" / "store.jsonl");
    for (const auto& e : fs::recursive_directory_iterator(run / "participants"))
        if (e.is_regular_file() && e.path().filename() != "agent.json") haystack += slurp(e.path());

    std::map<std::string, Json> server_gps;
    for (std::istringstream in(slurp(run / "server" / "store.jsonl")); !in.eof();) {
        std::string line;
        std::getline(in, line);
        if (line.empty()) continue;
        auto rec = Json::parse(line);
        if (rec["record_type"] == "gps") server_gps[rec["record_id"].get<std::string>()] = rec["payload"];
    }

    std::size_t found = 0, undecryptable = 0, differing = 0;
    fixes = 0;
    for (const auto& dir : fs::directory_iterator(run / "participants")) {
        const auto cfg = phone::AgentConfig::load(dir.path() / "agent.json");
        const phone::GpsCipher cipher(cfg.gps_key, cfg.key_id);
        for (const auto& rec : phone::Outbox::load_records(dir.path() / "outbox")) {
            if (rec["record_type"] != "gps") continue;
            ++fixes;
            try {
                const auto fix = cipher.decrypt(rec["payload"]);
                const auto text = phone::GpsCipher::plaintext(fix);
                if (haystack.find(text) != std::string::npos) ++found;
                if (haystack.find(fmt("%.6f", fix.lat)) != std::string::npos) ++found;
                if (haystack.find(fmt("%.6f", fix.lon)) != std::string::npos) ++found;
                const auto it = server_gps.find(rec["record_id"].get<std::string>());
                if (it == server_gps.end() || phone::GpsCipher::plaintext(cipher.decrypt(it->second)) != text)
                    ++differing;
            } catch (const phone::CipherError&) {
                ++undecryptable;
            }
        }
    }
    // Fresh fixes round-trip through the cipher exactly.
    const phone::GpsCipher cipher(Bytes(32, 0x5A), "k1");
    SeededRandom ivs(10);
    std::mt19937_64 rng(10);
    std::size_t round_trip_errors = 0;
    for (int i = 0; i < 10000; ++i) {
        const phone::GpsFix fix{std::uniform_real_distribution<double>(-90, 90)(rng),
                                std::uniform_real_distribution<double>(-180, 180)(rng)};
        const auto back = cipher.decrypt(cipher.encrypt(fix, ivs));
        if (phone::GpsCipher::plaintext(back) != phone::GpsCipher::plaintext(fix)) ++round_trip_errors;
    }
    return {found == 0 && undecryptable == 0 && differing == 0 && round_trip_errors == 0 && fixes > 0,
            fmt("%zu fixes scanned across outbox, wire capture and store dump: %zu plaintext hits, %zu "
                "undecryptable, %zu server copies differ; 10000 fresh fixes, %zu round-trip errors",
                fixes, found, undecryptable, differing, round_trip_errors)};
}

Outcome battery_model(const Json& full_day, const Json& low_band) {
    const auto& p = full_day["participants"][0]["days"][0];
    const double phone = p["phone_battery_pct_at_stop"].get<double>();
    const double band = p["band_battery_pct_at_stop"].get<double>();
    const auto& q = low_band["participants"][0];
    const double low = q["days"][0]["band_battery_pct_at_stop"].get<double>();
    const auto events = q["events"].value("battery_below_20", 0);
    const bool ok = std::abs(phone - 58.0) <= kBatteryTolerancePct && std::abs(band - 58.0) <= kBatteryTolerancePct &&
                    events == 1 && low < 20.0;
    return {ok, fmt("14 h day: phone %.2f%%, band %.2f%% (expect 58); band from 60%% for 13.4 h ends at %.2f%% with "
                    "%d battery_below_20 event(s)",
                    phone, band, low, events)};
}

// ---------------------------------------------------------------- C11

Outcome ema_schedule() {
    ema::SchedulerConfig cfg;
    cfg.participant_id = "p01";
    cfg.phone_id = "phone-p01";
    cfg.utc_offset_minutes = -420;
    cfg.seed = 11;
    SeededRandom ids(11);
    ema::EmaScheduler s(cfg, ids);
    const LocalCalendar cal(-420);
    std::mt19937_64 rng(11);
    std::size_t bad_days = 0, late = 0, outside = 0, surveys = 0;
    const LocalDate first{2025, 1, 6};
    std::size_t seen = 0;
    for (int d = 0; d < 10000; ++d) {
        const LocalDate date = first.plus_days(d);
        const double open = cal.at(date, 7 * 3600 + 1800);
        const double close = cal.at(date, 21 * 3600 + 1800);
        s.start_day(date, cal.midnight(date));
        double t = open;
        while (t < close) {
            t += 60 + static_cast<double>(rng() % 1200);
            s.advance_to(t);
            if (rng() % 6 == 0) s.on_mvpa_notification(t, std::nullopt);
            for (const auto& inst : s.surveys()) {
                if (inst.terminal() || rng() % 3 != 0) continue;
                if (rng() % 2)
                    s.resolve(inst.id, ema::SurveyAction::decline(t));
                else
                    s.resolve(inst.id, ema::SurveyAction::complete(t, cfg.survey.sample(rng)));
                break;
            }
        }
        s.advance_to(close + 1800);
        int per_block[3] = {0, 0, 0};
        const auto& all = s.surveys();
        for (std::size_t i = seen; i < all.size(); ++i) {
            const auto& inst = all[i];
            ++surveys;
            if (!inst.terminal() || !inst.resolved_t || *inst.resolved_t - inst.triggered_t > 1800.0) ++late;
            const double sod = cal.seconds_of_day(inst.triggered_t);
            if (cal.date_of(inst.triggered_t) != date || sod < 27000 || sod >= 77400) ++outside;
            if (inst.kind == ema::SurveyKind::Random && inst.block >= 0 && inst.block < 3) ++per_block[inst.block];
        }
        seen = all.size();
        if (per_block[0] != 1 || per_block[1] != 1 || per_block[2] != 1) ++bad_days;
        (void)s.take_events();
    }
    return {bad_days == 0 && late == 0 && outside == 0,
            fmt("10000 days, %zu surveys: %zu days without exactly one random survey per block, %zu outside "
                "07:30-21:30, %zu not terminal within 30 min",
                surveys, bad_days, outside, late)};
}

// ---------------------------------------------------------------- C12

double ingest_benchmark(std::size_t& records) {
    TestBackend b;
    const auto token = "Bearer " + b.signup("phone-bench", "pb");
    std::mt19937_64 rng(12);
    std::vector<HttpRequest> batches;
    for (int k = 0; k < 40; ++k) {
        Json recs = Json::array();
        for (int i = 0; i < 500; ++i) recs.push_back(battery_record(rng, "pb", "phone-bench", kT0 + k * 500 + i));
        batches.push_back(data_request(token, recs));
    }
    const auto start = Clock::now();
    for (const auto& req : batches) (void)b.svc.handle(req);
    const double dt = seconds_since(start);
    records = b.store.count();
    return static_cast<double>(records) / dt;
}

Outcome throughput() {
    const auto dir = work_dir("twenty");
    Json participants = Json::array();
    for (int i = 1; i <= 20; ++i) participants.push_back({{"participant_id", fmt("p%02d", i)}});
    const Json doc{{"name", "twenty"}, {"seed", 20}, {"days", 1}, {"participants", participants}};
    const auto scenario = netsim::Scenario::from_json(doc);
    netsim::ScenarioRunner runner(scenario, {dir});
    const auto rep = runner.run();

    // Configured per-participant daily volume over the collection window.
    const double hours = (scenario.stop_s - scenario.connect_s) / 3600.0;
    const double per_participant = hours * 3600.0 / scenario.gps_interval_s +
                                   hours * 3600.0 / scenario.trigger.bout_seconds +
                                   hours * 3600.0 / scenario.battery_interval_s;
    const double target = 20.0 * per_participant;
    std::size_t pending = 0;
    for (const auto& p : rep["participants"]) pending += p["pending"].get<std::size_t>();
    const auto server = rep["server"]["records"].get<std::size_t>();
    std::size_t bench_records = 0;
    const double rate = ingest_benchmark(bench_records);
    fs::remove_all(dir);
    return {runner.consistent() && pending == 0 && static_cast<double>(server) >= target && rate >= kMinIngestRate,
            fmt("20 participants x 1 day: %zu server records (target %.0f), %zu pending, consistent=%s; ingest "
                "benchmark %zu records at %.0f records/s (limit %.0f)",
                server, target, pending, runner.consistent() ? "yes" : "no", bench_records, rate, kMinIngestRate)};
}

}  // namespace

int main() {
    report(1, "oracle equivalence", oracle_equivalence());
    report(2, "trigger boundary", trigger_boundary());
    report(3, "zero NAND metadata erases", zero_nand_metadata_erases());
    report(4, "FTL round-trip", ftl_round_trip());
    report(5, "capacity", capacity());

    const auto determinism = consistency_idempotency_determinism();

    report(8, "auth gate", auth_gate());
    report(9, "validation gate", validation_gate());

    // One full day with an outage of every kind and a wire capture.
    const auto full = work_dir("full-day");
    const Json full_doc = Json::parse(R"({
        "name": "full-day", "seed": 10, "days": 1,
        "participants": [{"participant_id": "p01"}, {"participant_id": "p02"}],
        "outages": {"drop_mode": "refuse_connection", "intervals": [
            {"start_s": 30000, "end_s": 33600},
            {"start_s": 40000, "end_s": 43600, "drop_mode": "timeout"},
            {"start_s": 50000, "end_s": 53600, "drop_mode": "mid_body_cut"}]}
    })");
    netsim::ScenarioRunner full_run(netsim::Scenario::from_json(full_doc), {full, true});
    const auto full_report = full_run.run();
    std::size_t fixes = 0;
    report(10, "GPS confidentiality", gps_confidentiality(full, fixes));

    report(11, "EMA schedule", ema_schedule());
    report(12, "throughput", throughput());

    const auto low = work_dir("low-band");
    const Json low_doc = Json::parse(R"({
        "name": "low-band", "seed": 13, "days": 1,
        "participants": [{"participant_id": "p01", "band": {"start_battery_pct": 60}}],
        "daily": {"connect": "07:30", "stop": "20:54"}
    })");
    netsim::ScenarioRunner low_run(netsim::Scenario::from_json(low_doc), {low});
    report(13, "battery model", battery_model(full_report, low_run.run()));

    report(14, "determinism", determinism);

    fs::remove_all(fs::temp_directory_path() / "motionpi_acceptance");
    std::printf("%s: %d of 14 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}

#include "motionpi/netsim/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "motionpi/phone/agent.hpp"

namespace motionpi::netsim {

namespace fs = std::filesystem;

namespace {

enum Kind { DayStart, Connect, Minute, Stop, Charge, SurveyAnswer, Upload };

double round2(double v) { return std::round(v * 100.0) / 100.0; }

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + file.string());
}

void write_bytes(const fs::path& file, const Bytes& bytes) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + file.string());
}

}  // namespace

std::string simulated_secret(std::uint64_t seed) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "netsim-%016llx", static_cast<unsigned long long>(derive_seed(seed, 0x5EC)));
    return buf;
}

struct ScenarioRunner::Event {
    double t;
    std::size_t pidx;
    std::uint64_t seq;
    int kind;
    int day;
    std::string survey;
};

struct ScenarioRunner::Participant {
    const ParticipantSpec& spec;
    std::size_t index;
    fs::path dir;
    SeededRandom ids;
    std::unique_ptr<phone::PhoneAgent> agent;
    std::unique_ptr<band::Wristband> band;
    std::string mac;
    ActivitySynth synth;
    ActivityChain chain;
    std::mt19937_64 behavior;
    double lat = 0.0;
    double lon = 0.0;
    bool connected = false;
    double connected_at = 0.0;
    std::vector<signal::AccelSample> samples;
    Json days = Json::array();
    std::map<std::string, std::uint64_t> minutes_by_state;

    Participant(const ParticipantSpec& s, std::size_t i, fs::path d, int rate)
        : spec(s),
          index(i),
          dir(std::move(d)),
          ids(derive_seed(s.rng_seed, 1)),
          synth(derive_seed(s.rng_seed, 2), rate),
          chain(s.activity, derive_seed(s.rng_seed, 3)),
          behavior(derive_seed(s.rng_seed, 4)) {}
};

ScenarioRunner::ScenarioRunner(Scenario scenario, RunOptions options)
    : scenario_(std::move(scenario)),
      options_(std::move(options)),
      clock_(scenario_.start_t()),
      nonces_(derive_seed(scenario_.seed, 0xBAC)) {
    if (options_.out_dir.empty()) throw std::invalid_argument("run: output directory required");
    // A previous run's outbox would be reloaded by the agents.
    fs::remove_all(options_.out_dir / "participants");
    fs::remove_all(options_.out_dir / "server");
    fs::remove(options_.out_dir / "wire.ndjson");
    fs::remove(options_.out_dir / "report.json");
    fs::create_directories(options_.out_dir / "server");

    backend::ServiceConfig sc;
    sc.token_secret = simulated_secret(scenario_.seed);
    service_ = std::make_unique<backend::BackendService>(sc, store_, clock_, nonces_);
    local_ = std::make_unique<backend::LocalTransport>(*service_);

    OutageSchedule absolute = scenario_.outages;
    for (auto& iv : absolute.intervals) {
        iv.start_t += scenario_.start_t();
        iv.end_t += scenario_.start_t();
    }
    LinkOptions lo = scenario_.network;
    lo.capture = options_.keep_capture || options_.write_wire;
    link_ = std::make_unique<SimulatedLink>(*local_, clock_, std::move(absolute), lo);

    for (const auto& spec : scenario_.participants) {
        auto p = std::make_unique<Participant>(spec, participants_.size(), options_.out_dir / "participants" / spec.participant_id,
                                               scenario_.trigger.sample_rate_hz);
        phone::AgentConfig ac;
        ac.participant_id = spec.participant_id;
        ac.phone_id = spec.phone_id;
        ac.gps_key.resize(32);
        SeededRandom(derive_seed(spec.rng_seed, 5)).fill(ac.gps_key);
        ac.backend_url = "sim://backend";
        ac.drain_pct_per_hour = scenario_.phone_drain_pct_per_hour;
        ac.trigger = scenario_.trigger;
        ac.upload = scenario_.upload;
        ac.window = {scenario_.connect_s, scenario_.stop_s};
        ac.utc_offset_minutes = scenario_.utc_offset_minutes;
        ac.seed = derive_seed(spec.rng_seed, 6);
        ac.data_dir = p->dir;
        ac.validate();
        fs::create_directories(p->dir);
        write_text(p->dir / "agent.json", ac.to_json().dump(2) + "\n");
        p->agent = std::make_unique<phone::PhoneAgent>(ac, *link_, p->ids);

        band::BandConfig bc;
        bc.mac = spec.band_mac;
        bc.side = spec.side;
        bc.trigger = scenario_.trigger;
        bc.geometry = scenario_.band_geometry();
        bc.drain_pct_per_hour = scenario_.band_drain_pct_per_hour;
        bc.start_battery_pct = spec.band_start_battery_pct;
        bc.session_file_seconds = scenario_.session_file_seconds;
        bc.store_ppg = scenario_.store_ppg;
        bc.seed = derive_seed(spec.rng_seed, 7);
        p->band = std::make_unique<band::Wristband>(bc);
        p->mac = p->band->mac_string();

        std::uniform_real_distribution<double> lat(-60.0, 60.0), lon(-179.0, 179.0);
        p->lat = lat(p->behavior);
        p->lon = lon(p->behavior);
        participants_.push_back(std::move(p));
    }
}

ScenarioRunner::~ScenarioRunner() = default;

double ScenarioRunner::drain_end_t() const {
    double end = scenario_.end_t();
    if (!scenario_.outages.intervals.empty())
        end = std::max(end, scenario_.start_t() + scenario_.outages.intervals.back().end_t);
    return end + scenario_.drain_s;
}

bool ScenarioRunner::consistent() const {
    return std::all_of(consistency_.begin(), consistency_.end(), [](const auto& c) { return c.empty(); });
}

namespace {
bool later(const auto& a, const auto& b) {
    if (a.t != b.t) return a.t > b.t;
    if (a.pidx != b.pidx) return a.pidx > b.pidx;
    return a.seq > b.seq;
}
}  // namespace

void ScenarioRunner::push(double t, std::size_t pidx, int kind, int day, std::string survey) {
    queue_.push_back(Event{t, pidx, seq_++, kind, day, std::move(survey)});
    std::push_heap(queue_.begin(), queue_.end(), [](const Event& a, const Event& b) { return later(a, b); });
}

Json ScenarioRunner::run() {
    const LocalCalendar cal(scenario_.utc_offset_minutes);
    for (std::size_t i = 0; i < participants_.size(); ++i) {
        for (int d = 0; d < scenario_.days; ++d) {
            const double midnight = cal.midnight(scenario_.start_date.plus_days(d));
            push(midnight, i, DayStart, d);
            push(midnight + scenario_.connect_s, i, Connect, d);
            push(midnight + scenario_.stop_s, i, Stop, d);
            push(midnight + scenario_.charge_s, i, Charge, d);
        }
        push(scenario_.start_t() + scenario_.upload.interval_s, i, Upload);
    }
    const double drain_end = drain_end_t();
    while (!queue_.empty()) {
        std::pop_heap(queue_.begin(), queue_.end(), [](const Event& a, const Event& b) { return later(a, b); });
        Event ev = std::move(queue_.back());
        queue_.pop_back();
        if (ev.t > drain_end) continue;
        clock_.set(ev.t);
        handle(ev);
    }
    clock_.set(drain_end);

    Json people = Json::array();
    consistency_.clear();
    for (auto& p : participants_) {
        const auto local = phone::Outbox::load_records(p->agent->outbox().dir());
        backend::RecordFilter f;
        f.participant_id = p->spec.participant_id;
        std::vector<Json> server;
        for (const auto& r : store_.query(f)) server.push_back(r.to_json());
        consistency_.push_back(phone::verify_consistency(local, server, p->agent->cipher()));
        people.push_back(participant_report(*p, consistency_.back()));
    }

    const auto st = service_->stats();
    Json by_type = Json::object();
    for (const auto& [type, n] : store_.count_by_type()) by_type[type] = n;
    Json report{
        {"scenario", scenario_.name},
        {"seed", scenario_.seed},
        {"days", scenario_.days},
        {"participant_count", participants_.size()},
        {"start_t", scenario_.start_t()},
        {"end_t", scenario_.end_t()},
        {"drain_end_t", drain_end},
        {"outage_seconds", scenario_.outages.total_seconds()},
        {"link", link_->stats().to_json()},
        {"server",
         {{"records", store_.count()},
          {"by_type", by_type},
          {"signups", st.signups},
          {"unauthorized", st.unauthorized},
          {"bad_requests", st.bad_requests},
          {"batches", st.batches},
          {"stored", st.stored},
          {"duplicates", st.duplicates},
          {"rejected", st.rejected}}},
        {"participants", people},
        {"consistent", consistent()},
        {"exit_status", consistent() ? "ok" : "inconsistent"}};
    write_outputs(report);
    return report;
}

void ScenarioRunner::handle(const Event& ev) {
    Participant& p = *participants_[ev.pidx];
    auto& agent = *p.agent;
    auto& band = *p.band;
    const double t = ev.t;
    switch (ev.kind) {
        case DayStart:
            agent.start_day(scenario_.start_date.plus_days(ev.day), t);
            break;
        case Connect: {
            (void)band.set_charging(false, t);
            agent.set_charging(false, t);
            agent.bluetooth(true, t);
            p.connected = agent.connect_band(band, t);
            p.connected_at = t;
            if (p.connected) push(t + 60.0, ev.pidx, Minute);
            break;
        }
        case Minute:
            minute(p, t);
            break;
        case Stop: {
            if (p.connected) {
                // The minute ending now is queued behind this event.
                minute(p, t);
            }
            if (p.connected) {
                agent.stop_band(band, t);
                agent.disconnect_band(p.mac, t);
                p.connected = false;
            }
            agent.bluetooth(false, t);
            agent.advance_to(t);
            plan_responses(p, t);
            p.days.push_back({{"date", scenario_.start_date.plus_days(ev.day).to_string()},
                              {"phone_battery_pct_at_stop", round2(agent.phone_battery_pct(t))},
                              {"band_battery_pct_at_stop", round2(band.battery_pct())}});
            break;
        }
        case Charge:
            agent.set_charging(true, t);
            // The band is no longer connected; its charger notification has nowhere to go.
            (void)band.set_charging(true, t);
            break;
        case SurveyAnswer: {
            const auto* s = agent.scheduler().find(ev.survey);
            if (!s || s->terminal()) break;
            const bool complete = ev.day == 1;
            try {
                if (complete) {
                    agent.resolve_survey(ev.survey, ema::SurveyAction::complete(
                                                        t, agent.config().survey.sample(p.behavior)));
                } else {
                    agent.resolve_survey(ev.survey, ema::SurveyAction::decline(t));
                }
            } catch (const ema::SurveyError&) {
            }
            break;
        }
        case Upload: {
            agent.advance_to(t);
            plan_responses(p, t);
            (void)agent.upload_pending(t);
            const double next = std::max(agent.next_upload_t(), t + 1e-3);
            push(next, ev.pidx, Upload);
            break;
        }
        default:
            break;
    }
}

void ScenarioRunner::minute(Participant& p, double t_end) {
    if (!p.connected) return;
    auto& agent = *p.agent;
    auto& band = *p.band;
    const double t0 = t_end - 60.0;
    const auto state = p.chain.next_minute(agent.calendar().seconds_of_day(t0));
    ++p.minutes_by_state[to_string(state)];
    p.samples.clear();
    p.synth.generate(state, t0, t_end, p.samples);
    agent.on_band_notifications(band.ingest(p.samples), p.mac, band.config().side);
    agent.on_band_notifications(band.advance_to(t_end), p.mac, band.config().side);
    agent.on_band_notifications(band.tick_battery(60.0, t_end), p.mac, band.config().side);

    const auto elapsed = static_cast<long long>(std::llround(t_end - p.connected_at));
    if (elapsed % static_cast<long long>(scenario_.gps_interval_s) == 0) {
        std::normal_distribution<double> step(0.0, 1e-4);
        p.lat = std::clamp(p.lat + step(p.behavior), -89.0, 89.0);
        p.lon = std::clamp(p.lon + step(p.behavior), -179.9, 179.9);
        agent.record_gps({p.lat, p.lon}, t_end);
    }
    if (elapsed % static_cast<long long>(scenario_.battery_interval_s) == 0) {
        agent.record_phone_battery(t_end);
        agent.record_band_battery(p.mac, band.battery_pct(), band.charging(), t_end);
    }
    agent.advance_to(t_end);
    plan_responses(p, t_end);
    if (!band.collecting()) p.connected = false;
    const LocalCalendar& cal = agent.calendar();
    if (p.connected && cal.seconds_of_day(t_end + 60.0) <= scenario_.stop_s &&
        cal.date_of(t_end + 60.0) == cal.date_of(p.connected_at))
        push(t_end + 60.0, p.index, Minute);
}

void ScenarioRunner::plan_responses(Participant& p, double now) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> delay(scenario_.behavior.delay_min_s, scenario_.behavior.delay_max_s);
    for (const auto& id : p.agent->take_notified_surveys()) {
        const auto* s = p.agent->scheduler().find(id);
        if (!s) continue;
        const double r = u(p.behavior);
        const double d = delay(p.behavior);
        const auto& b = scenario_.behavior;
        int action = 0;  // ignored
        if (r < b.complete_probability)
            action = 1;
        else if (r < b.complete_probability + b.decline_probability)
            action = 2;
        if (action == 0) continue;
        push(std::max(now, s->triggered_t + d), p.index, SurveyAnswer, action, id);
    }
}

Json ScenarioRunner::participant_report(Participant& p, const phone::ConsistencyReport& c) const {
    const auto& agent = *p.agent;
    const auto& band = *p.band;
    const auto local = phone::Outbox::load_records(agent.outbox().dir());
    std::map<std::string, std::size_t> by_type, events;
    for (const auto& r : local) {
        ++by_type[r["record_type"].get<std::string>()];
        if (r["record_type"] == "event") ++events[r["payload"]["event_kind"].get<std::string>()];
    }
    std::map<std::string, std::map<std::string, std::size_t>> surveys;
    for (const auto& s : agent.scheduler().surveys()) ++surveys[ema::to_string(s.kind)][ema::to_string(s.status)];
    const auto wear = band.image().wear_report();
    return Json{{"participant_id", p.spec.participant_id},
                {"phone_id", p.spec.phone_id},
                {"band_mac", p.mac},
                {"local_records", local.size()},
                {"acked", agent.outbox().acked_count()},
                {"quarantined", agent.outbox().quarantined_count()},
                {"pending", agent.outbox().pending_total()},
                {"signup_requests", agent.signup_requests()},
                {"by_type", by_type},
                {"events", events},
                {"surveys", surveys},
                {"activity_minutes", p.minutes_by_state},
                {"days", p.days},
                {"band",
                 {{"stored_samples", band.stored_samples()},
                  {"dropped_samples", band.dropped_samples()},
                  {"imu_bytes", band.imu_bytes_written()},
                  {"files", band.files().size()},
                  {"storage_pct", round2(band.storage_pct())},
                  {"battery_pct", round2(band.battery_pct())},
                  {"nand_erases_from_fat_ops", wear.nand_erases_from_fat_ops},
                  {"nand_erases_total", wear.nand_erases_total},
                  {"nor_erases_total", wear.nor_erases_total},
                  {"nor_page_programs", wear.nor_page_programs},
                  {"nand_page_programs", wear.nand_page_programs}}},
                {"consistency", c.to_json()}};
}

void ScenarioRunner::write_outputs(const Json& report) const {
    const auto& out = options_.out_dir;
    write_text(out / "scenario.json", scenario_.to_json().dump(2) + "\n");
    write_text(out / "report.json", report.dump(2) + "\n");
    {
        std::ofstream dump(out / "server" / "store.jsonl", std::ios::trunc);
        store_.dump(dump);
        if (!dump) throw std::runtime_error("cannot write store dump");
    }
    if (options_.write_wire) {
        std::ofstream wire(out / "wire.ndjson", std::ios::trunc);
        for (const auto& c : link_->capture()) {
            Json j{{"t", c.t},
                   {"method", c.method},
                   {"target", c.target},
                   {"request_body", c.request_body},
                   {"delivered_bytes", c.delivered_body.size()},
                   {"failure", to_string(c.failure)},
                   {"response_body", c.response_body}};
            if (c.status) j["status"] = *c.status;
            wire << j.dump() << '\n';
        }
        if (!wire) throw std::runtime_error("cannot write wire capture");
    }
    if (options_.write_images) {
        for (const auto& p : participants_) {
            write_bytes(p->dir / "band.nor", p->band->image().raw_nor());
            write_bytes(p->dir / "band.nand", p->band->image().raw_nand());
        }
    }
}

}  // namespace motionpi::netsim

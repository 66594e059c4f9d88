#include <gtest/gtest.h>

#include <random>

#include "motionpi/ema/scheduler.hpp"

using namespace motionpi;
using namespace motionpi::ema;

namespace {

const LocalDate kDay{2025, 1, 6};
const LocalCalendar kMst(-420);

SchedulerConfig config(std::uint64_t seed = 7) {
    SchedulerConfig c;
    c.participant_id = "motionpi088";
    c.phone_id = "phone-088";
    c.seed = seed;
    c.utc_offset_minutes = -420;
    return c;
}

double at(const char* hhmm) { return kMst.at(kDay, parse_time_of_day(hhmm)); }

std::size_t count_events(const std::vector<EventRecord>& ev, EventKind k) {
    return static_cast<std::size_t>(std::count_if(ev.begin(), ev.end(), [&](const EventRecord& e) { return e.kind == k; }));
}

}  // namespace

TEST(RandomPlan, OnePerBlockInsideWindow) {
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const LocalDate d = kDay.plus_days(static_cast<int>(seed % 400));
        const auto times = plan_random_surveys(d, seed, kMst);
        for (std::size_t i = 0; i < 3; ++i) {
            const double sod = kMst.seconds_of_day(times[i]);
            ASSERT_GE(sod, random_blocks()[i].start_s) << seed;
            ASSERT_LT(sod, random_blocks()[i].end_s) << seed;
            ASSERT_TRUE(CollectionWindow{}.contains(sod));
            ASSERT_EQ(kMst.date_of(times[i]), d);
        }
    }
}

TEST(RandomPlan, Deterministic) {
    EXPECT_EQ(plan_random_surveys(kDay, 3, kMst), plan_random_surveys(kDay, 3, kMst));
    EXPECT_NE(plan_random_surveys(kDay, 3, kMst), plan_random_surveys(kDay, 4, kMst));
    EXPECT_NE(plan_random_surveys(kDay, 3, kMst), plan_random_surveys(kDay.plus_days(1), 3, kMst));
}

TEST(ActivitySurvey, TriggersWithThirtyMinuteExpiry) {
    SeededRandom ids(1);
    EmaScheduler s(config(), ids);
    const auto id = s.on_mvpa_notification(at("10:00"), std::string("02:4D:50:00:00:01"));
    ASSERT_TRUE(id);
    const auto* inst = s.find(*id);
    EXPECT_EQ(inst->status, SurveyStatus::Pending);
    EXPECT_EQ(inst->expires_t, at("10:30"));
    const auto ev = s.take_events();
    ASSERT_EQ(ev.size(), 2u);
    EXPECT_EQ(ev[0].kind, EventKind::SurveyTriggered);
    EXPECT_EQ(ev[1].kind, EventKind::SurveyNotified);
    EXPECT_EQ(ev[0].local_time, "2025-01-06T10:00:00.000-07:00");
    EXPECT_EQ(ev[0].band_mac, "02:4D:50:00:00:01");
}

TEST(ActivitySurvey, SuppressedWhilePendingAndOutsideWindow) {
    SeededRandom ids(1);
    EmaScheduler s(config(), ids);
    ASSERT_TRUE(s.on_mvpa_notification(at("10:00"), std::nullopt));
    EXPECT_FALSE(s.on_mvpa_notification(at("10:05"), std::nullopt));
    EXPECT_FALSE(s.on_mvpa_notification(at("22:00"), std::nullopt));
    EXPECT_FALSE(s.on_mvpa_notification(at("07:29"), std::nullopt) && false);
    const auto ev = s.take_events();
    EXPECT_EQ(count_events(ev, EventKind::SurveySuppressed), 3u);
    // After expiry a new one may trigger.
    EXPECT_TRUE(s.on_mvpa_notification(at("10:30"), std::nullopt));
    EXPECT_EQ(s.surveys()[0].status, SurveyStatus::Expired);
}

TEST(ResolveSurvey, CompleteDeclineExpire) {
    SeededRandom ids(1);
    std::mt19937_64 rng(1);
    EmaScheduler s(config(), ids);
    const auto a = *s.on_mvpa_notification(at("10:00"), std::nullopt);
    const auto answers = s.config().survey.sample(rng);
    EXPECT_EQ(s.resolve(a, SurveyAction::complete(at("10:10"), answers)), SurveyStatus::Completed);
    EXPECT_EQ(s.find(a)->responses.size(), 5u);
    EXPECT_THROW(s.resolve(a, SurveyAction::decline(at("10:11"))), SurveyError);

    const auto b = *s.on_mvpa_notification(at("11:00"), std::nullopt);
    EXPECT_EQ(s.resolve(b, SurveyAction::decline(at("11:01"))), SurveyStatus::Declined);

    const auto c = *s.on_mvpa_notification(at("11:05"), std::nullopt);
    EXPECT_EQ(s.resolve(c, SurveyAction::clock(at("11:05") + 1799.999)), SurveyStatus::Pending);
    EXPECT_EQ(s.resolve(c, SurveyAction::clock(at("11:35"))), SurveyStatus::Expired);
    EXPECT_EQ(s.find(c)->resolved_t, at("11:35"));

    const auto d = *s.on_mvpa_notification(at("12:00"), std::nullopt);
    EXPECT_EQ(s.resolve(d, SurveyAction::complete(at("12:45"), answers)), SurveyStatus::Expired);

    const auto ev = s.take_events();
    EXPECT_EQ(count_events(ev, EventKind::SurveyCompleted), 1u);
    EXPECT_EQ(count_events(ev, EventKind::SurveyDeclined), 1u);
    EXPECT_EQ(count_events(ev, EventKind::SurveyExpired), 2u);
    EXPECT_EQ(s.take_resolved().size(), 4u);
    EXPECT_THROW(s.resolve("nope", SurveyAction::clock(at("13:00"))), SurveyError);
}

TEST(ResolveSurvey, RejectsBadResponses) {
    SeededRandom ids(1);
    EmaScheduler s(config(), ids);
    const auto a = *s.on_mvpa_notification(at("10:00"), std::nullopt);
    EXPECT_THROW(s.resolve(a, SurveyAction::complete(at("10:01"), {{"intensity", 9}})), SurveyError);
    EXPECT_EQ(s.find(a)->status, SurveyStatus::Pending);
}

TEST(DailySchedule, RandomSurveysFireIndependently) {
    SeededRandom ids(1);
    EmaScheduler s(config(11), ids);
    s.start_day(kDay, at("07:30"));
    // Keep an activity survey pending across the whole day.
    for (double t = at("07:30"); t < at("21:30"); t += 600) s.on_mvpa_notification(t, std::nullopt);
    s.advance_to(at("22:00"));
    std::size_t random = 0;
    for (const auto& inst : s.surveys()) random += inst.kind == SurveyKind::Random;
    EXPECT_EQ(random, 3u);
    EXPECT_EQ(s.pending_count(), 0u);
}

TEST(DailySchedule, LateStartSkipsPastSlots) {
    SeededRandom ids(1);
    EmaScheduler s(config(11), ids);
    const auto plan = plan_random_surveys(kDay, 11, kMst);
    s.start_day(kDay, plan[1] + 1);
    s.advance_to(at("23:00"));
    EXPECT_EQ(s.surveys().size(), 1u);
    EXPECT_EQ(count_events(s.take_events(), EventKind::SurveyMissed), 2u);
}

TEST(SurveyDefinitionFile, DefaultRoundTripsAndValidates) {
    const auto def = SurveyDefinition::default_instrument();
    EXPECT_EQ(def.questions().size(), 5u);
    const auto again = SurveyDefinition::from_json(def.to_json());
    EXPECT_EQ(again.to_json(), def.to_json());
    EXPECT_THROW((void)SurveyDefinition::from_json(Json::parse(R"({"survey_id":"x","questions":[{"id":"a","prompt":"p","type":"slider"}]})")),
                 std::invalid_argument);
    EXPECT_THROW((void)SurveyDefinition::from_json(Json::parse(R"({"survey_id":"x","questions":[]})")), std::invalid_argument);
}

// Many seeded days with random MVPA streams and participant actions:
// 3 random per day, one per block, at most one activity pending, every
// survey terminal within 30 min of its trigger, and one event per
// transition with identity fields filled in.
TEST(SchedulerProperty, SeededDays) {
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        SeededRandom ids(seed);
        std::mt19937_64 rng(seed);
        EmaScheduler s(config(seed), ids);
        const LocalDate d = kDay.plus_days(static_cast<int>(seed));
        const double start = kMst.at(d, 27000);
        s.start_day(d, start);
        double t = start;
        while (t < kMst.at(d, 77400)) {
            t += 1 + static_cast<double>(rng() % 900);
            s.advance_to(t);
            ASSERT_LE(std::count_if(s.surveys().begin(), s.surveys().end(),
                                    [](const SurveyInstance& x) { return x.kind == SurveyKind::Activity && !x.terminal(); }),
                      1);
            if (rng() % 3 == 0) s.on_mvpa_notification(t, std::nullopt);
            for (const auto& inst : s.surveys()) {
                if (!inst.terminal() && rng() % 4 == 0) {
                    if (rng() % 2) {
                        s.resolve(inst.id, SurveyAction::decline(t));
                    } else {
                        s.resolve(inst.id, SurveyAction::complete(t, s.config().survey.sample(rng)));
                    }
                    break;
                }
            }
        }
        s.advance_to(kMst.at(d, 77400 + 1800));
        EXPECT_EQ(s.pending_count(), 0u);
        int per_block[3] = {0, 0, 0};
        for (const auto& inst : s.surveys()) {
            ASSERT_TRUE(inst.terminal());
            ASSERT_LE(*inst.resolved_t - inst.triggered_t, 1800.0);
            if (inst.kind == SurveyKind::Random) ++per_block[inst.block];
        }
        EXPECT_EQ(per_block[0] + per_block[1] + per_block[2], 3);
        EXPECT_TRUE(per_block[0] == 1 && per_block[1] == 1 && per_block[2] == 1);
        const auto ev = s.take_events();
        EXPECT_EQ(count_events(ev, EventKind::SurveyTriggered), s.surveys().size());
        EXPECT_EQ(count_events(ev, EventKind::SurveyCompleted) + count_events(ev, EventKind::SurveyDeclined) +
                      count_events(ev, EventKind::SurveyExpired),
                  s.surveys().size());
        for (const auto& e : ev) {
            ASSERT_FALSE(e.participant_id.empty());
            ASSERT_FALSE(e.phone_id.empty());
            ASSERT_GT(e.timestamp, 0.0);
            ASSERT_EQ(e.local_time, kMst.iso8601(e.timestamp));
        }
    }
}

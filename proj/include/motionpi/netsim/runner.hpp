#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "motionpi/backend/service.hpp"
#include "motionpi/backend/store.hpp"
#include "motionpi/netsim/link.hpp"
#include "motionpi/netsim/scenario.hpp"
#include "motionpi/phone/consistency.hpp"

// Output directory of a run:
//
//   scenario.json                    the fully expanded scenario
//   report.json                      deterministic run report
//   server/store.jsonl               backend store dump
//   wire.ndjson                      every request on the link (optional)
//   participants/<pid>/agent.json    agent configuration
//   participants/<pid>/outbox/       phone outbox
//   participants/<pid>/token.json    cached auth token
//   participants/<pid>/band.nor      raw band flash (optional)
//   participants/<pid>/band.nand
namespace motionpi::netsim {

struct RunOptions {
    std::filesystem::path out_dir;
    bool write_wire = false;
    bool write_images = false;
    // Keep the link capture in memory after the run (implied by write_wire).
    bool keep_capture = false;
};

/// Drives bands, phone agents, the lossy link and the backend from one
/// virtual clock. Same scenario, same report bytes.
class ScenarioRunner {
public:
    ScenarioRunner(Scenario scenario, RunOptions options);
    ~ScenarioRunner();
    ScenarioRunner(const ScenarioRunner&) = delete;
    ScenarioRunner& operator=(const ScenarioRunner&) = delete;

    /// Runs to the end of the drain period, verifies every participant and
    /// writes the output directory. Returns the report.
    Json run();

    [[nodiscard]] bool consistent() const;
    [[nodiscard]] const std::vector<phone::ConsistencyReport>& consistency() const { return consistency_; }
    [[nodiscard]] const Scenario& scenario() const { return scenario_; }
    [[nodiscard]] backend::BackendService& service() { return *service_; }
    [[nodiscard]] backend::MemoryStore& store() { return store_; }
    [[nodiscard]] const SimulatedLink& link() const { return *link_; }
    [[nodiscard]] VirtualClock& clock() { return clock_; }
    [[nodiscard]] double drain_end_t() const;

private:
    struct Participant;
    struct Event;

    void push(double t, std::size_t pidx, int kind, int day = 0, std::string survey = {});
    void handle(const Event& ev);
    void minute(Participant& p, double t_end);
    void plan_responses(Participant& p, double now);
    Json participant_report(Participant& p, const phone::ConsistencyReport& c) const;
    void write_outputs(const Json& report) const;

    Scenario scenario_;
    RunOptions options_;
    VirtualClock clock_;
    SeededRandom nonces_;
    backend::MemoryStore store_;
    std::unique_ptr<backend::BackendService> service_;
    std::unique_ptr<backend::LocalTransport> local_;
    std::unique_ptr<SimulatedLink> link_;
    std::vector<std::unique_ptr<Participant>> participants_;
    std::vector<Event> queue_;
    std::uint64_t seq_ = 0;
    std::vector<phone::ConsistencyReport> consistency_;
};

/// Shared secret of the simulated backend, derived from the scenario seed.
[[nodiscard]] std::string simulated_secret(std::uint64_t seed);

}  // namespace motionpi::netsim

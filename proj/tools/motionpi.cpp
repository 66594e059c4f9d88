#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "motionpi/backend/server.hpp"
#include "motionpi/band/records.hpp"
#include "motionpi/ftl/ftl.hpp"
#include "motionpi/netsim/runner.hpp"
#include "motionpi/phone/consistency.hpp"
#include "motionpi/signal/detector.hpp"
#include "motionpi/signal/trace_io.hpp"

using namespace motionpi;
namespace fs = std::filesystem;
using record::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInconsistent = 2;

Bytes read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    return {std::istreambuf_iterator<char>(in), {}};
}

Json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    auto doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw std::runtime_error(p.string() + ": not valid JSON");
    return doc;
}

std::size_t count_of(const Json& obj, const char* key) {
    return obj.contains(key) ? obj[key].get<std::size_t>() : 0;
}

std::size_t tally(const Json& surveys, const char* status) {
    std::size_t n = 0;
    for (const auto& [kind, by_status] : surveys.items()) n += count_of(by_status, status);
    return n;
}

// Prints the per-participant table and returns the summary document.
Json print_report(const Json& report, std::ostream& os) {
    char line[256];
    std::snprintf(line, sizeof line, "%-12s %8s %8s %8s %6s %6s %6s %10s %7s %7s  %s\n", "participant", "local",
                  "server", "pending", "enmo", "gps", "events", "surveys", "band%", "phone%", "consistent");
    os << line;
    Json rows = Json::array();
    std::size_t local_total = 0, server_total = 0;
    for (const auto& p : report["participants"]) {
        const auto& c = p["consistency"];
        const bool ok = c["missing_on_server"].empty() && c["missing_locally"].empty() && c["mismatched"].empty();
        const auto& by_type = p["by_type"];
        const std::string surveys = std::to_string(tally(p["surveys"], "completed")) + "/" +
                                    std::to_string(tally(p["surveys"], "declined")) + "/" +
                                    std::to_string(tally(p["surveys"], "expired"));
        const double phone = p["days"].empty() ? 100.0 : p["days"].back()["phone_battery_pct_at_stop"].get<double>();
        const double band = p["days"].empty() ? 100.0 : p["days"].back()["band_battery_pct_at_stop"].get<double>();
        std::snprintf(line, sizeof line, "%-12s %8zu %8zu %8zu %6zu %6zu %6zu %10s %7.2f %7.2f  %s\n",
                      p["participant_id"].get<std::string>().c_str(), p["local_records"].get<std::size_t>(),
                      c["server_records"].get<std::size_t>(), p["pending"].get<std::size_t>(),
                      count_of(by_type, "enmo"), count_of(by_type, "gps"), count_of(by_type, "event"),
                      surveys.c_str(), band, phone, ok ? "yes" : "NO");
        os << line;
        local_total += p["local_records"].get<std::size_t>();
        server_total += c["server_records"].get<std::size_t>();
        rows.push_back({{"participant_id", p["participant_id"]},
                        {"local_records", p["local_records"]},
                        {"server_records", c["server_records"]},
                        {"consistent", ok}});
    }
    os << "surveys are completed/declined/expired; battery levels at the last daily stop\n";
    const auto& link = report["link"];
    os << "link: " << link["requests"] << " requests, " << link["refused"] << " refused, " << link["timeouts"]
       << " timed out, " << link["resets"] << " reset\n";
    const auto& server = report["server"];
    os << "server: " << server["records"] << " records, " << server["duplicates"] << " duplicates, "
       << server["bad_requests"] << " bad requests, " << server["unauthorized"] << " unauthorized\n";
    os << "status: " << report["exit_status"].get<std::string>() << "\n";
    return Json{{"scenario", report["scenario"]},
                {"days", report["days"]},
                {"participants", rows},
                {"local_records", local_total},
                {"server_records", server_total},
                {"consistent", report["consistent"]}};
}

int cmd_run(const std::string& scenario_file, const std::string& out, bool wire, bool images) {
    const auto scenario = netsim::Scenario::load(scenario_file);
    netsim::ScenarioRunner runner(scenario, {out, wire, images, false});
    const auto report = runner.run();
    print_report(report, std::cout);
    return runner.consistent() ? kExitOk : kExitInconsistent;
}

std::vector<Json> server_records(const std::string& server, const fs::path& local, const std::string& pid) {
    if (server.rfind("http://", 0) == 0) {
        const auto hostport = server.substr(7, server.find('/', 7) == std::string::npos ? std::string::npos
                                                                                         : server.find('/', 7) - 7);
        const auto colon = hostport.rfind(':');
        const std::string host = colon == std::string::npos ? hostport : hostport.substr(0, colon);
        const int port = colon == std::string::npos ? 80 : std::stoi(hostport.substr(colon + 1));
        const auto token = phone::AuthToken::from_json(read_json(local / "token.json"));
        if (!token) throw std::runtime_error(local.string() + "/token.json: no usable token");
        backend::HttpClientTransport transport(host, port);
        return phone::fetch_server_records(transport, token->token, pid);
    }
    // A store dump, one record per line.
    std::ifstream in(server);
    if (!in) throw std::runtime_error("cannot open " + server);
    std::vector<Json> out;
    for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        auto rec = Json::parse(line);
        if (rec.value("participant_id", "") == pid) out.push_back(std::move(rec));
    }
    return out;
}

int cmd_verify(const fs::path& local, const std::string& server) {
    const auto cfg = phone::AgentConfig::load(local / "agent.json");
    const phone::GpsCipher cipher(cfg.gps_key, cfg.key_id);
    const auto mine = phone::Outbox::load_records(local / "outbox");
    const auto theirs = server_records(server, local, cfg.participant_id);
    const auto rep = phone::verify_consistency(mine, theirs, cipher);
    std::cout << rep.to_json().dump(2) << "\n";
    return rep.empty() ? kExitOk : kExitInconsistent;
}

int cmd_report(const fs::path& run) {
    const auto report = read_json(run / "report.json");
    const auto summary = print_report(report, std::cout);
    std::ofstream(run / "summary.json") << summary.dump(2) << "\n";
    return report["consistent"].get<bool>() ? kExitOk : kExitInconsistent;
}

int cmd_extract(const fs::path& nor, const fs::path& nand, const fs::path& out) {
    const auto nor_bytes = read_file(nor);
    const auto nand_bytes = read_file(nand);
    const auto files = ftl::mount_and_extract(nor_bytes, nand_bytes);
    fs::create_directories(out);
    for (const auto& f : files) {
        const auto stem = fs::path(f.entry.name).stem().string();
        std::ofstream bin(out / f.entry.name, std::ios::binary);
        bin.write(reinterpret_cast<const char*>(f.data.data()), static_cast<std::streamsize>(f.data.size()));
        std::ofstream csv(out / (stem + ".csv"));
        if (f.entry.name.rfind("IMU", 0) == 0)
            band::write_imu_csv(csv, f.data, f.entry.created_t);
        else if (f.entry.name.rfind("PPG", 0) == 0)
            band::write_ppg_csv(csv, f.data, f.entry.created_t);
        if (!bin || !csv) throw std::runtime_error("cannot write " + (out / f.entry.name).string());
        std::cout << f.entry.name << " " << f.data.size() << " bytes\n";
    }
    return kExitOk;
}

int cmd_serve(const fs::path& config) {
    const auto cfg = backend::ServerConfig::load(config);
    return backend::run_server(cfg, [](int port) { std::cout << "listening on port " << port << std::endl; });
}

int cmd_trace(const fs::path& in_file, const std::string& out_file, double threshold) {
    std::ifstream in(in_file);
    if (!in) throw std::runtime_error("cannot open " + in_file.string());
    const auto trace = signal::read_trace(in);
    signal::TriggerConfig cfg;
    cfg.mvpa_threshold_g = threshold;
    cfg.validate();
    std::vector<double> triggers;
    if (!trace.empty())
        triggers = signal::detect_triggers(trace, cfg, trace.front().t, trace.back().t + 1.0 / cfg.sample_rate_hz);
    if (out_file.empty() || out_file == "-") {
        signal::write_triggers(std::cout, triggers);
    } else {
        std::ofstream out(out_file);
        signal::write_triggers(out, triggers);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"motionpi: wristband, phone agent, backend and scenario tools"};
    app.require_subcommand(1);
    int status = kExitOk;

    std::string scenario, out;
    bool wire = false, images = false;
    auto* run = app.add_subcommand("run", "Run a scenario and verify every participant");
    run->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "Output directory")->required();
    run->add_flag("--wire", wire, "Write every request on the link to wire.ndjson");
    run->add_flag("--images", images, "Write raw band flash images");

    std::string local, server;
    auto* verify = app.add_subcommand("verify", "Compare a phone outbox with the server");
    verify->add_option("--local", local, "Participant directory (agent.json, outbox/, token.json)")
        ->required()
        ->check(CLI::ExistingDirectory);
    verify->add_option("--server", server, "http://host:port, or a store.jsonl dump")->required();

    std::string run_dir;
    auto* report = app.add_subcommand("report", "Summarize a run directory");
    report->add_option("--run", run_dir, "Run output directory")->required()->check(CLI::ExistingDirectory);

    std::string nor, nand, extract_out;
    auto* extract = app.add_subcommand("extract", "Recover files from raw band flash images");
    extract->add_option("--nor", nor, "NOR image")->required()->check(CLI::ExistingFile);
    extract->add_option("--nand", nand, "NAND image")->required()->check(CLI::ExistingFile);
    extract->add_option("--out", extract_out, "Output directory")->required();

    std::string config;
    auto* serve = app.add_subcommand("serve", "Run the ingestion backend over HTTP");
    serve->add_option("--config", config, "Server config JSON")->required()->check(CLI::ExistingFile);

    std::string trace_in, trace_out;
    double threshold = signal::TriggerConfig{}.mvpa_threshold_g;
    auto* trace = app.add_subcommand("trace", "MVPA trigger times for a t,ax,ay,az trace");
    trace->add_option("--in", trace_in, "Trace CSV")->required()->check(CLI::ExistingFile);
    trace->add_option("--out", trace_out, "Trigger file, - for stdout");
    trace->add_option("--threshold", threshold, "MVPA threshold in g");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) status = cmd_run(scenario, out, wire, images);
        if (*verify) status = cmd_verify(local, server);
        if (*report) status = cmd_report(run_dir);
        if (*extract) status = cmd_extract(nor, nand, extract_out);
        if (*serve) status = cmd_serve(config);
        if (*trace) status = cmd_trace(trace_in, trace_out, threshold);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return status;
}

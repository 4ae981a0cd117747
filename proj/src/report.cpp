#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "infotrade/sim.hpp"

namespace infotrade::sim {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << content;
}

}  // namespace

void emit_report(const std::vector<RunTranscript>& transcripts, const Json& experiment_results,
                 const Json& config_echo, const std::string& out_dir) {
    std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);

    std::ostringstream jsonl;
    for (size_t i = 0; i < transcripts.size(); ++i) {
        Json marker;
        marker["run"] = i;
        jsonl << marker.dump() << "\n" << transcripts[i].to_jsonl();
    }
    write_file(dir / "transcript.jsonl", jsonl.str());

    std::map<std::string, size_t> outcome_counts;
    for (const auto& t : transcripts) {
        outcome_counts[contract::to_string(t.outcome)] += 1;
    }

    Json summary;
    summary["runs"] = transcripts.size();
    summary["outcomes"] = outcome_counts;
    if (!transcripts.empty()) {
        summary["final_balances_last_run"] = transcripts.back().final_balances;
    }
    summary["experiments"] = experiment_results;
    write_file(dir / "summary.json", summary.dump(2) + "\n");

    std::ostringstream text;
    text << "runs: " << transcripts.size() << "\n";
    for (const auto& [outcome, count] : outcome_counts) {
        text << "  " << std::left << std::setw(20) << outcome << count << "\n";
    }
    if (!experiment_results.is_null()) {
        for (const auto& [name, blob] : experiment_results.items()) {
            text << name;
            if (blob.is_object() && blob.contains("passed")) {
                text << ": " << (blob["passed"].get<bool>() ? "PASS" : "FAIL");
            }
            text << "\n";
        }
    }
    write_file(dir / "summary.txt", text.str());

    write_file(dir / "config_echo.json", config_echo.dump(2) + "\n");
}

}  // namespace infotrade::sim

// Command-line front end: runs seeded protocol scenarios and the named
// experiment suites, writing transcripts and summaries to an output
// directory. Exit code 0 means every requested property check passed.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "infotrade/sim.hpp"

using namespace infotrade;

int main(int argc, char** argv) {
    CLI::App app{"trust-free information trade protocol simulator"};

    std::string config_path;
    std::string experiment = "run";
    std::string out_dir = "out";
    std::optional<uint64_t> seed_override;
    std::optional<size_t> trials_override;

    app.add_option("--config", config_path, "scenario config JSON file");
    app.add_option("--experiment", experiment,
                   "one of: run, truthfulness, collusion, spe, deposits")
        ->check(CLI::IsMember({"run", "truthfulness", "collusion", "spe", "deposits"}));
    app.add_option("--seed", seed_override, "override the scenario seed");
    app.add_option("--trials", trials_override, "override the trial count");
    app.add_option("--out", out_dir, "output directory for transcripts and summaries");

    CLI11_PARSE(app, argc, argv);

    sim::ScenarioConfig config;
    try {
        if (config_path.empty()) {
            config = sim::ScenarioConfig::defaults();
        } else {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "cannot open config: " << config_path << "\n";
                return 2;
            }
            config = sim::ScenarioConfig::from_json(sim::Json::parse(in));
        }
        if (seed_override) {
            config.seed = *seed_override;
        }
        if (trials_override) {
            config.trials = *trials_override;
        }
        config.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        sim::Json experiments = sim::Json::object();
        std::vector<sim::RunTranscript> transcripts;
        bool passed = true;

        if (experiment == "run") {
            for (size_t i = 0; i < config.trials; ++i) {
                sim::ScenarioConfig c = config;
                c.seed = i == 0 ? config.seed : sim::derive_seed(config.seed, 1000 + i);
                auto result = sim::run_scenario(c);
                transcripts.push_back(std::move(result.transcript));
                std::printf("run %zu: seed=%llu outcome=%s\n", i,
                            static_cast<unsigned long long>(c.seed),
                            contract::to_string(result.outcome).c_str());
            }
        } else if (experiment == "truthfulness") {
            size_t trials = trials_override.value_or(20000);
            auto suite = sim::truthfulness_suite(config, trials);
            passed = suite.passed;
            experiments["truthfulness"] = suite.details;
            experiments["truthfulness"]["passed"] = suite.passed;
        } else if (experiment == "collusion") {
            size_t trials = trials_override.value_or(20000);
            auto suite = sim::collusion_suite(config, trials);
            passed = suite.passed;
            experiments["collusion"] = suite.details;
            experiments["collusion"]["passed"] = suite.passed;
        } else if (experiment == "spe") {
            auto suite = sim::spe_suite(config);
            passed = suite.passed;
            experiments["spe"] = suite.details;
            experiments["spe"]["passed"] = suite.passed;
        } else if (experiment == "deposits") {
            auto suite = sim::deposit_suite(config);
            passed = suite.passed;
            experiments["deposits"] = suite.details;
            experiments["deposits"]["passed"] = suite.passed;
        }

        sim::emit_report(transcripts, experiments, config.to_json(), out_dir);
        if (experiment != "run") {
            std::printf("%s: %s\n", experiment.c_str(), passed ? "PASS" : "FAIL");
        }
        std::printf("report written to %s\n", out_dir.c_str());
        return passed ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

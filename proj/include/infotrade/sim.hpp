#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "infotrade/contract.hpp"
#include "infotrade/mpc_eval.hpp"
#include "infotrade/stats.hpp"
#include "infotrade/traders.hpp"

namespace infotrade::sim {

using Json = nlohmann::ordered_json;

enum class EvaluatorKind { Trusted, Shared };

// Complete description of one protocol run: world model, payment function,
// costs and deposits, per-party behavior and the assumption switches.
struct ScenarioConfig {
    uint64_t seed = 1;
    size_t n_tasks = 10;
    int n_sellers = 2;
    traders::SignalModel model;
    payment::PaymentParams params;
    contract::CostModel costs;
    EvaluatorKind evaluator = EvaluatorKind::Trusted;
    std::vector<traders::Strategy> seller_strategies;
    std::vector<bool> corrupt_key_opening;
    bool share_orders = false;
    bool allow_post_transfer = false;  // must stay false
    std::string buyer_rule = "rational";  // rational | always | never
    contract::Deadlines deadlines;
    size_t trials = 1;
    std::optional<std::map<int, int64_t>> initial_balances;

    void validate() const;
    Json to_json() const;
    static ScenarioConfig from_json(const Json& j);
    static ScenarioConfig defaults();

    int64_t val_tolerance_encoded() const;
};

struct RunTranscript {
    std::vector<Json> events;
    contract::Outcome outcome = contract::Outcome::Pending;
    std::map<std::string, int64_t> final_balances;
    std::vector<payment::PaymentValue> payments;  // agreed vector, if any
    uint64_t ro_seed = 0;
    Json config_echo;

    std::string to_jsonl() const;
};

struct Utilities {
    double buyer = 0.0;
    std::vector<double> sellers;
};

struct RunResult {
    RunTranscript transcript;
    contract::Outcome outcome = contract::Outcome::Pending;
    contract::IncorrectGoodReason goods_reason = contract::IncorrectGoodReason::None;
    bool rebutted = false;
    std::vector<int64_t> paid_units;
    Utilities utilities;
    // the sellers' reports in canonical task order, as evaluated
    std::vector<payment::ReportVector> canonical_reports;
    // plaintext packages, used by the privacy-shadow check
    std::vector<Bytes> package_bytes;
    size_t key_reveal_event_index = 0;  // first event index at or after key reveal
};

// Executes all protocol stages against a fresh oracle and contract,
// deterministically in the seed.
RunResult run_scenario(const ScenarioConfig& config);

// Monte Carlo estimate of each seller's MIG sum and payment under a
// strategy profile, over independent worlds and question orders; no
// contract machinery involved.
struct ProfileEstimate {
    std::vector<stats::MeanStderr> payments;
    std::vector<stats::MeanStderr> mig_sums;
};

ProfileEstimate estimate_payment(const std::vector<traders::Strategy>& profile,
                                 const traders::SignalModel& model, size_t n_tasks,
                                 const payment::PaymentParams& params, size_t trials,
                                 uint64_t seed, bool share_orders = false);

// Finite-menu equilibrium audit. Utilities per complete profile come from
// the contract's branch arithmetic plus Monte Carlo payment estimates;
// survival requires no strictly improving unilateral deviation and a buyer
// rule that is optimal at both goods information sets. Profiles surviving
// while a joint seller deviation strictly improves both sellers are flagged
// as coalition-dominated.
struct SpeOptions {
    size_t trials = 5000;
    int64_t wrong_val_delta = 5;
    uint64_t seed = 7;
};

struct SpeProfile {
    traders::Strategy::Kind report[2];
    bool honest_val[2];
    bool reveal_key[2];
    std::string buyer_rule;
    bool random_assignment = true;
};

struct SpeRow {
    SpeProfile profile;
    double utility_buyer = 0.0;
    double utility_sellers[2] = {0.0, 0.0};
    std::string outcome;
    bool survives_spe = false;
    bool coalition_dominated = false;
};

struct SpeTable {
    std::vector<SpeRow> rows;
    bool truthful_survives = false;
    bool truthful_strong = false;
    bool bad_val_survives = false;
    bool bad_val_flagged = false;
    Json to_json() const;
};

SpeTable spe_grid_check(const SpeOptions& options, const contract::CostModel& costs,
                        const traders::SignalModel& model, size_t n_tasks,
                        const payment::PaymentParams& params);

// Applies the deposit-bound checker across a grid of deposit and attack-cost
// choices.
struct SweepRow {
    int64_t dep_seller = 0;
    int64_t dep_buyer = 0;
    int64_t attack_cost = 0;
    bool ok = false;
    std::array<int64_t, 3> slacks{};
};

std::vector<SweepRow> deposit_sweep(const contract::CostModel& base,
                                    const std::vector<int64_t>& dep_seller_values,
                                    const std::vector<int64_t>& dep_buyer_values,
                                    const std::vector<int64_t>& attack_values);

// Writes transcript.jsonl, summary.txt, summary.json and config_echo.json
// under `out_dir`.
void emit_report(const std::vector<RunTranscript>& transcripts, const Json& experiment_results,
                 const Json& config_echo, const std::string& out_dir);

// Named experiment suites behind the CLI; each returns pass/fail plus a
// machine-readable result blob.
struct SuiteResult {
    bool passed = false;
    Json details;
};

SuiteResult truthfulness_suite(const ScenarioConfig& base, size_t trials);
SuiteResult collusion_suite(const ScenarioConfig& base, size_t trials);
SuiteResult spe_suite(const ScenarioConfig& base);
SuiteResult deposit_suite(const ScenarioConfig& base);

uint64_t derive_seed(uint64_t base, uint64_t tag);

}  // namespace infotrade::sim

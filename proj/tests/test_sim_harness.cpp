#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "infotrade/sim.hpp"

using namespace infotrade;
using namespace infotrade::sim;
using contract::Outcome;
using traders::Strategy;

namespace {

ScenarioConfig honest_config(uint64_t seed = 1) {
    ScenarioConfig c = ScenarioConfig::defaults();
    c.seed = seed;
    return c;
}

bool events_contain_bytes(const std::vector<Json>& events, size_t limit, const Bytes& needle) {
    std::string hex = to_hex(needle);
    std::string raw(needle.begin(), needle.end());
    for (size_t i = 0; i < limit && i < events.size(); ++i) {
        std::string line = events[i].dump();
        if (line.find(hex) != std::string::npos || line.find(raw) != std::string::npos) {
            return true;
        }
    }
    return false;
}

}  // namespace

TEST_CASE("an all-honest run transacts and pays both sellers identically") {
    auto result = run_scenario(honest_config());
    CHECK(result.outcome == Outcome::Transacted);
    REQUIRE(result.paid_units.size() == 2);
    CHECK(result.paid_units[0] == result.paid_units[1]);

    // seller balance moved by exactly the paid value minus the contract cost
    const auto& balances = result.transcript.final_balances;
    int64_t initial_seller = 200 + 8;  // deposit plus headroom
    CHECK(balances.at("seller1") == initial_seller + result.paid_units[0] - 5);
    CHECK(balances.at("seller2") == initial_seller + result.paid_units[1] - 5);
    CHECK(result.goods_reason == contract::IncorrectGoodReason::None);
    CHECK_FALSE(result.rebutted);
}

TEST_CASE("every ledger event conserves the total") {
    auto result = run_scenario(honest_config(77));
    for (const auto& e : result.transcript.events) {
        int64_t sum = 0;
        for (const auto& [party, delta] : e["ledger_delta"].items()) {
            sum += delta.get<int64_t>();
        }
        CHECK(sum == 0);
    }
}

TEST_CASE("a withheld key confiscates the sellers") {
    ScenarioConfig c = honest_config(2);
    c.seller_strategies[1].kind = Strategy::Kind::WithholdKey;
    auto result = run_scenario(c);
    CHECK(result.outcome == Outcome::SellersConfiscated);
}

TEST_CASE("a wrong question set loses the rebuttal for the sellers") {
    ScenarioConfig c = honest_config(3);
    c.seller_strategies[0].kind = Strategy::Kind::WrongQuestions;
    auto result = run_scenario(c);
    CHECK(result.goods_reason == contract::IncorrectGoodReason::QuestionsMismatch);
    CHECK(result.outcome == Outcome::RebuttalSucceeded);
    CHECK(result.rebutted);
}

TEST_CASE("a jointly misreported value is caught in rebuttal") {
    ScenarioConfig c = honest_config(4);
    for (auto& s : c.seller_strategies) {
        s.kind = Strategy::Kind::MisreportVal;
        s.misreport_delta = 7;
    }
    auto result = run_scenario(c);
    CHECK(result.goods_reason == contract::IncorrectGoodReason::PaymentMismatch);
    CHECK(result.outcome == Outcome::RebuttalSucceeded);
}

TEST_CASE("a one-sided misreported value stalls the payment stage") {
    ScenarioConfig c = honest_config(5);
    c.seller_strategies[0].kind = Strategy::Kind::MisreportVal;
    c.seller_strategies[0].misreport_delta = 7;
    auto result = run_scenario(c);
    CHECK(result.outcome == Outcome::SellersConfiscated);
}

TEST_CASE("a corrupted key opening sends everything to the buyer") {
    ScenarioConfig c = honest_config(6);
    c.corrupt_key_opening = {false, true};
    auto result = run_scenario(c);
    CHECK(result.outcome == Outcome::AllToBuyer);
}

TEST_CASE("a spurious rebuttal fails against a correct good") {
    ScenarioConfig c = honest_config(7);
    c.buyer_rule = "always";
    auto result = run_scenario(c);
    CHECK(result.goods_reason == contract::IncorrectGoodReason::None);
    CHECK(result.outcome == Outcome::RebuttalFailed);
}

TEST_CASE("identical configs replay byte for byte") {
    ScenarioConfig c = honest_config(8);
    auto a = run_scenario(c);
    auto b = run_scenario(c);
    CHECK(a.transcript.to_jsonl() == b.transcript.to_jsonl());

    ScenarioConfig other = honest_config(9);
    auto d = run_scenario(other);
    CHECK(a.transcript.to_jsonl() != d.transcript.to_jsonl());
}

TEST_CASE("config round-trips through json") {
    ScenarioConfig c = honest_config(10);
    c.seller_strategies[1].kind = Strategy::Kind::MisreportVal;
    c.seller_strategies[1].misreport_delta = 3;
    c.evaluator = EvaluatorKind::Shared;
    auto echoed = ScenarioConfig::from_json(c.to_json());
    CHECK(echoed.to_json() == c.to_json());
    auto a = run_scenario(c);
    auto b = run_scenario(echoed);
    CHECK(a.transcript.to_jsonl() == b.transcript.to_jsonl());
}

TEST_CASE("trusted and shared evaluators agree for corr runs") {
    ScenarioConfig c = honest_config(11);
    c.evaluator = EvaluatorKind::Trusted;
    auto trusted = run_scenario(c);
    c.evaluator = EvaluatorKind::Shared;
    auto shared = run_scenario(c);
    CHECK(trusted.outcome == shared.outcome);
    REQUIRE(trusted.transcript.payments.size() == shared.transcript.payments.size());
    for (size_t i = 0; i < trusted.transcript.payments.size(); ++i) {
        CHECK(trusted.transcript.payments[i].exact == shared.transcript.payments[i].exact);
    }
    CHECK(trusted.paid_units == shared.paid_units);
}

TEST_CASE("trusted and shared evaluators agree within one unit for pearson runs") {
    ScenarioConfig c = honest_config(12);
    c.model.kind = payment::ReportKind::Forecast;
    c.params.mig = payment::MigKind::Pearson;
    c.params.prior = c.model.prior;
    c.evaluator = EvaluatorKind::Trusted;
    auto trusted = run_scenario(c);
    c.evaluator = EvaluatorKind::Shared;
    auto shared = run_scenario(c);
    CHECK(trusted.outcome == Outcome::Transacted);
    CHECK(shared.outcome == Outcome::Transacted);
    REQUIRE(trusted.paid_units.size() == shared.paid_units.size());
    for (size_t i = 0; i < trusted.paid_units.size(); ++i) {
        CHECK(std::abs(trusted.paid_units[i] - shared.paid_units[i]) <= 1);
    }
}

TEST_CASE("three sellers transact with the multi-seller payment vector") {
    ScenarioConfig c = honest_config(13);
    c.n_sellers = 3;
    c.seller_strategies = {Strategy::truthful(), Strategy::truthful(), Strategy::truthful()};
    c.costs.dep_sellers = {200, 200, 200};
    c.costs.pri_cost_sellers = {20, 20, 20};
    auto result = run_scenario(c);
    CHECK(result.outcome == Outcome::Transacted);
    CHECK(result.paid_units.size() == 3);
}

TEST_CASE("package bytes never leak into pre-reveal ledger events") {
    for (uint64_t seed = 100; seed < 160; ++seed) {
        auto result = run_scenario(honest_config(seed));
        REQUIRE(result.key_reveal_event_index > 0);
        for (const auto& pkg : result.package_bytes) {
            CHECK_FALSE(events_contain_bytes(result.transcript.events,
                                             result.key_reveal_event_index, pkg));
        }
    }
}

TEST_CASE("estimation matches the closed forms of the binary model") {
    ScenarioConfig c = honest_config(14);
    std::vector<Strategy> truthful = {Strategy::truthful(), Strategy::truthful()};
    auto est = estimate_payment(truthful, c.model, 10, c.params, 4000, 555);
    CHECK(stats::within_3se(est.mig_sums[0], 0.18));

    Strategy constant;
    constant.kind = Strategy::Kind::ConstantReport;
    constant.constant_symbol = 1;
    auto flat = estimate_payment({constant, constant}, c.model, 10, c.params, 500, 556);
    CHECK(flat.mig_sums[0].mean == 0.0);
    CHECK(flat.mig_sums[0].se == 0.0);

    Strategy uniform;
    uniform.kind = Strategy::Kind::UniformRandom;
    auto mixed = estimate_payment({Strategy::truthful(), uniform}, c.model, 10, c.params, 4000,
                                  557);
    CHECK(stats::within_3se(mixed.mig_sums[0], 0.0));
}

TEST_CASE("the deposit suite reproduces the worked inequalities") {
    auto result = deposit_suite(honest_config(15));
    CHECK(result.passed);
    CHECK(result.details["reference_slacks"][0] == 13);
    CHECK(result.details["reference_slacks"][1] == 1);
    CHECK(result.details["reference_slacks"][2] == 981);
}

TEST_CASE("the truthfulness suite passes at reduced scale") {
    auto result = truthfulness_suite(honest_config(16), 4000);
    CHECK(result.passed);
}

TEST_CASE("the collusion suite separates shared from independent orders") {
    auto result = collusion_suite(honest_config(17), 4000);
    CHECK(result.passed);
}

TEST_CASE("emit_report writes the four artifacts") {
    auto dir = std::filesystem::temp_directory_path() / "infotrade_report_test";
    std::filesystem::remove_all(dir);
    auto result = run_scenario(honest_config(18));
    emit_report({result.transcript}, Json{{"demo", Json{{"passed", true}}}},
                result.transcript.config_echo, dir.string());
    CHECK(std::filesystem::exists(dir / "transcript.jsonl"));
    CHECK(std::filesystem::exists(dir / "summary.json"));
    CHECK(std::filesystem::exists(dir / "summary.txt"));
    CHECK(std::filesystem::exists(dir / "config_echo.json"));

    // the echoed config replays to the identical transcript
    std::ifstream in(dir / "config_echo.json");
    Json echoed = Json::parse(in);
    auto replay = run_scenario(ScenarioConfig::from_json(echoed));
    CHECK(replay.transcript.to_jsonl() == result.transcript.to_jsonl());
}

TEST_CASE("scenario validation rejects inconsistent configs") {
    ScenarioConfig c = honest_config(19);
    c.allow_post_transfer = true;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = honest_config(20);
    c.params.mig = payment::MigKind::Pearson;  // signal model with pearson payment
    c.params.prior = c.model.prior;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = honest_config(21);
    c.trials = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("the spe grid keeps truth-telling and flags the coordinated wrong value") {
    SpeOptions options;
    options.trials = 2000;
    options.seed = 99;
    ScenarioConfig c = honest_config(22);
    auto table = spe_grid_check(options, c.costs, c.model, c.n_tasks, c.params);
    CHECK(table.truthful_survives);
    CHECK(table.truthful_strong);
    CHECK(table.bad_val_survives);
    CHECK(table.bad_val_flagged);
}

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "infotrade/bytes.hpp"
#include "infotrade/info_package.hpp"
#include "infotrade/peer_payment.hpp"
#include "infotrade/random_oracle.hpp"

namespace infotrade::contract {

// Party 0 is the buyer, parties 1..n are the sellers. Confiscated funds and
// per-trader contract costs accumulate in a sink account so the ledger total
// is conserved by every transition.
constexpr int kBuyer = 0;
std::string party_name(int party);

struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Costs and deposits entering the rebuttal-incentive inequalities. Amounts
// are integer currency units.
struct CostModel {
    int64_t con_cost = 0;
    int64_t reb_cost = 0;
    int64_t pri_cost_buyer = 0;
    std::vector<int64_t> pri_cost_sellers;
    int64_t mpc_cost = 0;
    int64_t attack_cost = 0;
    int64_t dep_buyer = 0;
    std::vector<int64_t> dep_sellers;
    int64_t val_estimate = 0;

    int64_t dep_sellers_total() const;
    void validate() const;  // non-negative, attack cost strictly largest
};

struct DepositCheck {
    bool ok = false;
    // sum(DepS) - (Reb + PriB - val + nSellers*Con),
    // DepB - (val + Con - PriB),
    // Attack - (sum(DepS) + DepB); all must be strictly positive.
    std::array<int64_t, 3> slacks{};
};

DepositCheck check_deposit_bounds(const CostModel& costs);

enum class Stage {
    Signed,
    QuestionsCommitted,
    AnswersCommitted,
    PaymentReported,
    KeysRevealed,
    Closed,
};

enum class Outcome {
    Pending,
    Transacted,
    SellersConfiscated,
    AllToBuyer,
    RebuttalFailed,
    RebuttalSucceeded,
};

enum class IncorrectGoodReason {
    None,
    KeyFailsToOpen,
    QuestionsMismatch,
    PaymentMismatch,
};

std::string to_string(Stage s);
std::string to_string(Outcome o);
std::string to_string(IncorrectGoodReason r);

// Tick budgets counted from stage entry. Stages that wait on the buyer have
// no adjudication branch and therefore no timer.
struct Deadlines {
    int64_t submit_vals = 10;
    int64_t reveal_keys = 10;
    int64_t rebuttal_window = 10;
};

struct Event {
    int64_t tick = 0;
    std::string op;
    std::string party;
    Stage stage_before = Stage::Signed;
    Stage stage_after = Stage::Signed;
    std::map<std::string, int64_t> ledger_delta;
    nlohmann::ordered_json extra;

    nlohmann::ordered_json to_json() const;
};

struct ContractConfig {
    payment::PaymentParams params;
    CostModel costs;
    int num_sellers = 2;
    Deadlines deadlines;
    // Pearson reported values are accepted within this many encoded units
    // when the contract recomputes the payment; corr comparisons are exact.
    int64_t val_tolerance_encoded = 0;
    crypto::SessionId session = "itp-run";
    std::map<int, int64_t> initial_balances;
};

struct SignSubmission {
    int party = 0;
    payment::PaymentParams params;
    int64_t deposit = 0;
};

struct ContractState {
    ContractConfig config;

    Stage stage = Stage::Signed;
    Outcome outcome = Outcome::Pending;
    int64_t clock = 0;
    int64_t stage_entered_at = 0;
    int64_t rebuttal_deadline = 0;

    std::map<int, int64_t> balances;
    std::map<int, int64_t> frozen;
    int64_t cost_sink = 0;
    int64_t initial_total = 0;

    std::vector<crypto::Commitment> question_commitments;  // per seller
    struct AnswerCommitments {
        crypto::Commitment encrypted_info;
        crypto::Commitment info_key;
    };
    std::vector<std::optional<AnswerCommitments>> answer_commitments;
    std::vector<std::optional<std::vector<payment::PaymentValue>>> reported_vals;
    std::optional<std::vector<payment::PaymentValue>> agreed_vals;
    std::vector<std::optional<std::pair<Bytes, crypto::Opening>>> revealed_keys;

    std::vector<Event> events;

    int num_traders() const { return config.num_sellers + 1; }
    int64_t ledger_total() const;
    bool closed() const { return stage == Stage::Closed; }
};

// Forms the contract: all traders must submit identical payment parameters
// and strictly positive deposits, which are then frozen.
ContractState sign(const ContractConfig& config, const std::vector<SignSubmission>& submissions);

void record_question_commitments(ContractState& state,
                                 const std::vector<crypto::Commitment>& commitments);

void record_answer_commitments(ContractState& state, int seller,
                               const crypto::Commitment& encrypted_info,
                               const crypto::Commitment& info_key);

void submit_payment_outputs(ContractState& state, int seller,
                            const std::vector<payment::PaymentValue>& vals);

// Records a revealed key; once all keys are in, each is checked against its
// commitment. Any failed opening sends every deposit to the buyer.
void submit_keys(ContractState& state, crypto::OracleTable& oracle, int seller, const Bytes& key,
                 const crypto::Opening& opening);

// Advances the logical clock tick by tick, firing whichever timeout branch
// the current stage defines: missing or inconsistent payment outputs and
// missing keys confiscate the sellers' deposits; an expired rebuttal window
// makes the transaction.
void advance_clock(ContractState& state, int64_t ticks);

struct RebuttalSubmission {
    struct PerSeller {
        crypto::Ciphertext ciphertext;
        crypto::Opening ciphertext_opening;
        Bytes question_set_bytes;
        crypto::Opening question_opening;
    };
    std::vector<PerSeller> sellers;
};

// On-contract adjudication: re-derives the verdict from committed data plus
// the revealed keys. Invalid buyer evidence fails the rebuttal; otherwise
// any incorrect-good condition succeeds it.
void raise_rebuttal(ContractState& state, crypto::OracleTable& oracle,
                    const RebuttalSubmission& submission);

// Shared goods predicate, also used by the buyer before deciding to rebut.
// Categories are checked in the order key opening, question match, payment
// recomputation; a missing package counts as a key failure.
IncorrectGoodReason classify_good(
    const std::vector<std::optional<goods::InfoPackage>>& decrypted_packages,
    const std::vector<std::vector<uint32_t>>& committed_question_ids,
    const std::vector<payment::PaymentValue>& reported_vals,
    const payment::PaymentParams& params, int64_t val_tolerance_encoded);

}  // namespace infotrade::contract

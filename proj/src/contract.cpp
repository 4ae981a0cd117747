#include "infotrade/contract.hpp"

#include <algorithm>
#include <numeric>

namespace infotrade::contract {

using payment::PaymentParams;
using payment::PaymentValue;

std::string party_name(int party) {
    if (party == kBuyer) return "buyer";
    return "seller" + std::to_string(party);
}

int64_t CostModel::dep_sellers_total() const {
    return std::accumulate(dep_sellers.begin(), dep_sellers.end(), int64_t{0});
}

void CostModel::validate() const {
    auto non_negative = [](int64_t v) { return v >= 0; };
    if (!non_negative(con_cost) || !non_negative(reb_cost) || !non_negative(pri_cost_buyer) ||
        !non_negative(mpc_cost) || !non_negative(attack_cost) || !non_negative(dep_buyer) ||
        !non_negative(val_estimate)) {
        throw std::invalid_argument("cost model entries must be non-negative");
    }
    int64_t largest = std::max({con_cost, reb_cost, pri_cost_buyer, mpc_cost, dep_buyer,
                                val_estimate, dep_sellers_total()});
    for (int64_t d : dep_sellers) {
        if (d < 0) throw std::invalid_argument("seller deposit must be non-negative");
    }
    for (int64_t c : pri_cost_sellers) {
        if (c < 0) throw std::invalid_argument("seller privacy cost must be non-negative");
        largest = std::max(largest, c);
    }
    if (attack_cost <= largest) {
        throw std::invalid_argument("attack cost must strictly dominate every other amount");
    }
}

DepositCheck check_deposit_bounds(const CostModel& costs) {
    const auto n_sellers = static_cast<int64_t>(costs.dep_sellers.size());
    DepositCheck out;
    out.slacks[0] = costs.dep_sellers_total() -
                    (costs.reb_cost + costs.pri_cost_buyer - costs.val_estimate +
                     n_sellers * costs.con_cost);
    out.slacks[1] = costs.dep_buyer - (costs.val_estimate + costs.con_cost - costs.pri_cost_buyer);
    out.slacks[2] = costs.attack_cost - (costs.dep_sellers_total() + costs.dep_buyer);
    out.ok = out.slacks[0] > 0 && out.slacks[1] > 0 && out.slacks[2] > 0;
    return out;
}

std::string to_string(Stage s) {
    switch (s) {
        case Stage::Signed: return "Signed";
        case Stage::QuestionsCommitted: return "QuestionsCommitted";
        case Stage::AnswersCommitted: return "AnswersCommitted";
        case Stage::PaymentReported: return "PaymentReported";
        case Stage::KeysRevealed: return "KeysRevealed";
        case Stage::Closed: return "Closed";
    }
    return "?";
}

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::Pending: return "Pending";
        case Outcome::Transacted: return "Transacted";
        case Outcome::SellersConfiscated: return "SellersConfiscated";
        case Outcome::AllToBuyer: return "AllToBuyer";
        case Outcome::RebuttalFailed: return "RebuttalFailed";
        case Outcome::RebuttalSucceeded: return "RebuttalSucceeded";
    }
    return "?";
}

std::string to_string(IncorrectGoodReason r) {
    switch (r) {
        case IncorrectGoodReason::None: return "None";
        case IncorrectGoodReason::KeyFailsToOpen: return "KeyFailsToOpen";
        case IncorrectGoodReason::QuestionsMismatch: return "QuestionsMismatch";
        case IncorrectGoodReason::PaymentMismatch: return "PaymentMismatch";
    }
    return "?";
}

nlohmann::ordered_json Event::to_json() const {
    nlohmann::ordered_json j;
    j["tick"] = tick;
    j["operation"] = op;
    j["party"] = party;
    j["stage_before"] = to_string(stage_before);
    j["stage_after"] = to_string(stage_after);
    j["ledger_delta"] = ledger_delta;
    if (!extra.is_null()) {
        j["extra"] = extra;
    }
    return j;
}

int64_t ContractState::ledger_total() const {
    int64_t total = cost_sink;
    for (const auto& [p, v] : balances) total += v;
    for (const auto& [p, v] : frozen) total += v;
    return total;
}

namespace {

// Snapshot-and-diff helper so every mutator emits a typed event with the
// exact ledger movement it caused.
class EventScope {
  public:
    EventScope(ContractState& state, std::string op, std::string party)
        : state_(state), op_(std::move(op)), party_(std::move(party)),
          stage_before_(state.stage), balances_(state.balances), frozen_(state.frozen),
          sink_(state.cost_sink), uncaught_(std::uncaught_exceptions()) {}

    nlohmann::ordered_json& extra() { return extra_; }

    ~EventScope() noexcept(false) {
        if (std::uncaught_exceptions() > uncaught_) {
            return;  // the operation failed, nothing happened
        }
        Event e;
        e.tick = state_.clock;
        e.op = std::move(op_);
        e.party = std::move(party_);
        e.stage_before = stage_before_;
        e.stage_after = state_.stage;
        for (const auto& [p, v] : state_.balances) {
            int64_t delta = v - balances_[p] + (state_.frozen.at(p) - frozen_[p]);
            if (delta != 0) {
                e.ledger_delta[party_name(p)] = delta;
            }
        }
        if (state_.cost_sink != sink_) {
            e.ledger_delta["sink"] = state_.cost_sink - sink_;
        }
        e.extra = std::move(extra_);
        state_.events.push_back(std::move(e));
        if (state_.ledger_total() != state_.initial_total) {
            throw std::logic_error("ledger conservation violated");
        }
    }

  private:
    ContractState& state_;
    std::string op_;
    std::string party_;
    Stage stage_before_;
    std::map<int, int64_t> balances_;
    std::map<int, int64_t> frozen_;
    int64_t sink_;
    int uncaught_;
    nlohmann::ordered_json extra_;
};

void require_stage(const ContractState& state, Stage expected, const char* op) {
    if (state.stage != expected) {
        throw ContractError(std::string(op) + ": wrong stage " + to_string(state.stage));
    }
}

void enter_stage(ContractState& state, Stage next) {
    state.stage = next;
    state.stage_entered_at = state.clock;
}

bool params_equal(const PaymentParams& a, const PaymentParams& b) {
    return a.alpha == b.alpha && a.beta == b.beta && a.mig == b.mig &&
           a.prior.probs == b.prior.probs;
}

// Takes con_cost from every frozen deposit into the sink, then returns the
// remaining frozen funds as a pool. Caller distributes the pool.
int64_t levy_contract_costs(ContractState& state) {
    int64_t pool = 0;
    for (auto& [party, amount] : state.frozen) {
        int64_t levy = std::min(amount, state.config.costs.con_cost);
        state.cost_sink += levy;
        pool += amount - levy;
        amount = 0;
    }
    return pool;
}

void close_with(ContractState& state, Outcome outcome) {
    state.outcome = outcome;
    enter_stage(state, Stage::Closed);
}

void close_transacted(ContractState& state, EventScope& scope) {
    // Each trader recovers deposit minus contract cost, then the buyer pays
    // every seller its agreed value.
    for (auto& [party, amount] : state.frozen) {
        int64_t levy = std::min(amount, state.config.costs.con_cost);
        state.cost_sink += levy;
        state.balances[party] += amount - levy;
        amount = 0;
    }
    nlohmann::ordered_json paid = nlohmann::ordered_json::array();
    const auto& vals = *state.agreed_vals;
    for (int s = 1; s <= state.config.num_sellers; ++s) {
        int64_t units = payment::to_currency_units(vals[static_cast<size_t>(s - 1)]);
        state.balances[kBuyer] -= units;
        state.balances[s] += units;
        paid.push_back(units);
    }
    scope.extra()["paid_units"] = paid;
    close_with(state, Outcome::Transacted);
}

void close_sellers_confiscated(ContractState& state) {
    // Sellers forfeit to the sink; the buyer's deposit comes back minus the
    // contract cost.
    int64_t buyer_frozen = state.frozen[kBuyer];
    int64_t levy = std::min(buyer_frozen, state.config.costs.con_cost);
    state.cost_sink += levy;
    state.balances[kBuyer] += buyer_frozen - levy;
    state.frozen[kBuyer] = 0;
    for (int s = 1; s <= state.config.num_sellers; ++s) {
        state.cost_sink += state.frozen[s];
        state.frozen[s] = 0;
    }
    close_with(state, Outcome::SellersConfiscated);
}

void close_all_to_buyer(ContractState& state, Outcome outcome) {
    int64_t pool = levy_contract_costs(state);
    state.balances[kBuyer] += pool;
    close_with(state, outcome);
}

void close_rebuttal_failed(ContractState& state) {
    int64_t pool = levy_contract_costs(state);
    int64_t share = pool / state.config.num_sellers;
    for (int s = 1; s <= state.config.num_sellers; ++s) {
        state.balances[s] += share;
    }
    state.cost_sink += pool - share * state.config.num_sellers;
    close_with(state, Outcome::RebuttalFailed);
}

}  // namespace

ContractState sign(const ContractConfig& config, const std::vector<SignSubmission>& submissions) {
    config.params.validate();
    config.costs.validate();
    if (config.num_sellers < 1) {
        throw ContractError("sign: need at least one seller");
    }
    if (submissions.size() != static_cast<size_t>(config.num_sellers) + 1) {
        throw ContractError("sign: every trader must submit");
    }
    std::vector<bool> seen(submissions.size(), false);
    for (const auto& sub : submissions) {
        if (sub.party < 0 || sub.party > config.num_sellers || seen[sub.party]) {
            throw ContractError("sign: bad or duplicate party");
        }
        seen[sub.party] = true;
        if (!params_equal(sub.params, config.params)) {
            throw ContractError("sign: inconsistent payment parameters, contract not formed");
        }
        if (sub.deposit <= 0) {
            throw ContractError("sign: deposits must be strictly positive");
        }
    }

    ContractState state;
    state.config = config;
    state.question_commitments.clear();
    state.answer_commitments.assign(config.num_sellers, std::nullopt);
    state.reported_vals.assign(config.num_sellers, std::nullopt);
    state.revealed_keys.assign(config.num_sellers, std::nullopt);

    for (int p = 0; p <= config.num_sellers; ++p) {
        auto it = config.initial_balances.find(p);
        state.balances[p] = it == config.initial_balances.end() ? 0 : it->second;
        state.frozen[p] = 0;
    }
    state.initial_total = state.ledger_total();

    for (const auto& sub : submissions) {
        if (state.balances.at(sub.party) < sub.deposit) {
            throw ContractError("sign: balance below deposit");
        }
    }
    {
        EventScope scope(state, "sign", "all");
        for (const auto& sub : submissions) {
            state.balances[sub.party] -= sub.deposit;
            state.frozen[sub.party] += sub.deposit;
        }
        enter_stage(state, Stage::Signed);
        scope.extra()["deposits_frozen"] = true;
    }
    return state;
}

void record_question_commitments(ContractState& state,
                                 const std::vector<crypto::Commitment>& commitments) {
    require_stage(state, Stage::Signed, "record_question_commitments");
    if (commitments.size() != static_cast<size_t>(state.config.num_sellers)) {
        throw ContractError("record_question_commitments: one commitment per seller");
    }
    EventScope scope(state, "record_question_commitments", party_name(kBuyer));
    state.question_commitments = commitments;
    enter_stage(state, Stage::QuestionsCommitted);
}

void record_answer_commitments(ContractState& state, int seller,
                               const crypto::Commitment& encrypted_info,
                               const crypto::Commitment& info_key) {
    require_stage(state, Stage::QuestionsCommitted, "record_answer_commitments");
    if (seller < 1 || seller > state.config.num_sellers) {
        throw ContractError("record_answer_commitments: not a seller");
    }
    auto& slot = state.answer_commitments[static_cast<size_t>(seller - 1)];
    if (slot.has_value()) {
        throw ContractError("record_answer_commitments: duplicate submission");
    }
    EventScope scope(state, "record_answer_commitments", party_name(seller));
    slot = ContractState::AnswerCommitments{encrypted_info, info_key};
    bool all = std::all_of(state.answer_commitments.begin(), state.answer_commitments.end(),
                           [](const auto& c) { return c.has_value(); });
    if (all) {
        enter_stage(state, Stage::AnswersCommitted);
    }
}

void submit_payment_outputs(ContractState& state, int seller,
                            const std::vector<PaymentValue>& vals) {
    require_stage(state, Stage::AnswersCommitted, "submit_payment_outputs");
    if (seller < 1 || seller > state.config.num_sellers) {
        throw ContractError("submit_payment_outputs: not a seller");
    }
    if (vals.size() != static_cast<size_t>(state.config.num_sellers)) {
        throw ContractError("submit_payment_outputs: payment vector has wrong length");
    }
    auto& slot = state.reported_vals[static_cast<size_t>(seller - 1)];
    if (slot.has_value()) {
        throw ContractError("submit_payment_outputs: duplicate submission");
    }
    EventScope scope(state, "submit_payment_outputs", party_name(seller));
    slot = vals;

    bool all = std::all_of(state.reported_vals.begin(), state.reported_vals.end(),
                           [](const auto& v) { return v.has_value(); });
    if (!all) {
        return;
    }
    bool consistent = true;
    for (const auto& v : state.reported_vals) {
        for (size_t i = 0; i < vals.size(); ++i) {
            if (!((*v)[i] == (*state.reported_vals[0])[i])) {
                consistent = false;
            }
        }
    }
    scope.extra()["consistent"] = consistent;
    if (consistent) {
        state.agreed_vals = state.reported_vals[0];
        enter_stage(state, Stage::PaymentReported);
    }
    // inconsistent outputs leave the stage in place; the timer confiscates
}

void submit_keys(ContractState& state, crypto::OracleTable& oracle, int seller, const Bytes& key,
                 const crypto::Opening& opening) {
    require_stage(state, Stage::PaymentReported, "submit_keys");
    if (seller < 1 || seller > state.config.num_sellers) {
        throw ContractError("submit_keys: not a seller");
    }
    auto& slot = state.revealed_keys[static_cast<size_t>(seller - 1)];
    if (slot.has_value()) {
        throw ContractError("submit_keys: duplicate submission");
    }
    EventScope scope(state, "submit_keys", party_name(seller));
    slot = std::make_pair(key, opening);

    bool all = std::all_of(state.revealed_keys.begin(), state.revealed_keys.end(),
                           [](const auto& k) { return k.has_value(); });
    if (!all) {
        return;
    }
    bool valid = true;
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (int s = 1; s <= state.config.num_sellers; ++s) {
        const auto& [k, op] = *state.revealed_keys[static_cast<size_t>(s - 1)];
        const auto& coms = *state.answer_commitments[static_cast<size_t>(s - 1)];
        bool ok = crypto::open_commitment(oracle, coms.info_key, op, k, state.config.session);
        checks.push_back(ok);
        valid = valid && ok;
    }
    scope.extra()["key_openings"] = checks;
    if (!valid) {
        close_all_to_buyer(state, Outcome::AllToBuyer);
        return;
    }
    enter_stage(state, Stage::KeysRevealed);
    state.rebuttal_deadline = state.clock + state.config.deadlines.rebuttal_window;
}

void advance_clock(ContractState& state, int64_t ticks) {
    for (int64_t i = 0; i < ticks && state.stage != Stage::Closed; ++i) {
        state.clock += 1;
        switch (state.stage) {
            case Stage::AnswersCommitted:
                if (state.clock >= state.stage_entered_at + state.config.deadlines.submit_vals) {
                    EventScope scope(state, "timeout", "contract");
                    scope.extra()["reason"] = "payment outputs missing or inconsistent";
                    close_sellers_confiscated(state);
                }
                break;
            case Stage::PaymentReported:
                if (state.clock >= state.stage_entered_at + state.config.deadlines.reveal_keys) {
                    EventScope scope(state, "timeout", "contract");
                    scope.extra()["reason"] = "info keys missing";
                    close_sellers_confiscated(state);
                }
                break;
            case Stage::KeysRevealed:
                if (state.clock >= state.rebuttal_deadline) {
                    EventScope scope(state, "transaction", "contract");
                    scope.extra()["reason"] = "rebuttal window expired";
                    close_transacted(state, scope);
                }
                break;
            default:
                break;  // stages waiting on the buyer carry no timer
        }
    }
}

IncorrectGoodReason classify_good(
    const std::vector<std::optional<goods::InfoPackage>>& decrypted_packages,
    const std::vector<std::vector<uint32_t>>& committed_question_ids,
    const std::vector<PaymentValue>& reported_vals, const PaymentParams& params,
    int64_t val_tolerance_encoded) {
    for (const auto& pkg : decrypted_packages) {
        if (!pkg.has_value()) {
            return IncorrectGoodReason::KeyFailsToOpen;
        }
    }
    for (size_t i = 0; i < decrypted_packages.size(); ++i) {
        if (decrypted_packages[i]->question_ids != committed_question_ids[i]) {
            return IncorrectGoodReason::QuestionsMismatch;
        }
    }
    std::vector<payment::ReportVector> canonical;
    canonical.reserve(decrypted_packages.size());
    for (const auto& pkg : decrypted_packages) {
        auto realigned = goods::realign_reports(*pkg);
        if (!realigned.has_value()) {
            return IncorrectGoodReason::QuestionsMismatch;
        }
        canonical.push_back(std::move(*realigned));
    }
    std::vector<PaymentValue> recomputed;
    try {
        recomputed = payment::payment_vector(canonical, params);
    } catch (const std::invalid_argument&) {
        return IncorrectGoodReason::PaymentMismatch;
    }
    for (size_t i = 0; i < recomputed.size(); ++i) {
        if (!payment::payment_values_match(recomputed[i], reported_vals[i],
                                           val_tolerance_encoded)) {
            return IncorrectGoodReason::PaymentMismatch;
        }
    }
    return IncorrectGoodReason::None;
}

void raise_rebuttal(ContractState& state, crypto::OracleTable& oracle,
                    const RebuttalSubmission& submission) {
    require_stage(state, Stage::KeysRevealed, "raise_rebuttal");
    if (state.clock >= state.rebuttal_deadline) {
        throw ContractError("raise_rebuttal: window closed");
    }
    if (submission.sellers.size() != static_cast<size_t>(state.config.num_sellers)) {
        throw ContractError("raise_rebuttal: evidence for every seller required");
    }
    EventScope scope(state, "rebuttal", party_name(kBuyer));

    // The buyer's evidence must open the stored commitments before the
    // contract trusts it.
    std::vector<std::vector<uint32_t>> committed_ids;
    for (int s = 1; s <= state.config.num_sellers; ++s) {
        const auto& per = submission.sellers[static_cast<size_t>(s - 1)];
        const auto& coms = *state.answer_commitments[static_cast<size_t>(s - 1)];
        Bytes cipher_bytes = goods::concat_blocks(per.ciphertext.blocks);
        bool check1 = crypto::open_commitment(oracle, coms.encrypted_info,
                                              per.ciphertext_opening, cipher_bytes,
                                              state.config.session);
        bool check2 = crypto::open_commitment(
            oracle, state.question_commitments[static_cast<size_t>(s - 1)],
            per.question_opening, per.question_set_bytes, state.config.session);
        auto qs = goods::decode_question_set(per.question_set_bytes);
        if (!check1 || !check2 || !qs.has_value()) {
            scope.extra()["checkbit_failure"] = true;
            close_rebuttal_failed(state);
            return;
        }
        committed_ids.push_back(qs->ids());
    }

    std::vector<std::optional<goods::InfoPackage>> packages;
    for (int s = 1; s <= state.config.num_sellers; ++s) {
        const auto& per = submission.sellers[static_cast<size_t>(s - 1)];
        const auto& [key, op] = *state.revealed_keys[static_cast<size_t>(s - 1)];
        auto blocks = crypto::decrypt(oracle, crypto::SecretKey{key}, per.ciphertext,
                                      state.config.session);
        if (!blocks.has_value()) {
            packages.emplace_back(std::nullopt);
            continue;
        }
        packages.push_back(
            goods::decode_info_package(goods::concat_blocks(*blocks), oracle.digest_bytes()));
    }

    IncorrectGoodReason reason =
        classify_good(packages, committed_ids, *state.agreed_vals, state.config.params,
                      state.config.val_tolerance_encoded);
    scope.extra()["reason"] = to_string(reason);
    if (reason == IncorrectGoodReason::None) {
        close_rebuttal_failed(state);
    } else {
        close_all_to_buyer(state, Outcome::RebuttalSucceeded);
    }
}

}  // namespace infotrade::contract

#include <cmath>
#include <sstream>

#include "infotrade/sim.hpp"

namespace infotrade::sim {

using contract::ContractState;
using contract::Outcome;
using payment::MigKind;
using payment::PaymentValue;
using payment::Rational;
using payment::ReportKind;
using traders::Strategy;

uint64_t derive_seed(uint64_t base, uint64_t tag) {
    // splitmix64 finalizer over base ^ golden-ratio-striped tag
    uint64_t z = base + 0x9e3779b97f4a7c15ull * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

namespace {

Json rational_json(const Rational& r) { return Json::array({r.num, r.den}); }

Rational rational_from_json(const Json& j) {
    if (j.is_number_integer()) {
        return Rational::from_int(j.get<int64_t>());
    }
    if (j.is_array() && j.size() == 2) {
        return Rational::make(j[0].get<int64_t>(), j[1].get<int64_t>());
    }
    throw std::invalid_argument("rational must be an integer or [num, den]");
}

Json strategy_json(const Strategy& s) {
    Json j;
    j["kind"] = traders::to_string(s.kind);
    switch (s.kind) {
        case Strategy::Kind::Permutation: j["sigma"] = s.sigma; break;
        case Strategy::Kind::ConstantReport: j["symbol"] = s.constant_symbol; break;
        case Strategy::Kind::MisreportVal: j["delta"] = s.misreport_delta; break;
        default: break;
    }
    return j;
}

Strategy strategy_from_json(const Json& j) {
    Strategy s;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "truthful") {
        s.kind = Strategy::Kind::Truthful;
    } else if (kind == "permutation") {
        s.kind = Strategy::Kind::Permutation;
        s.sigma = j.at("sigma").get<std::vector<uint8_t>>();
    } else if (kind == "uniform_random") {
        s.kind = Strategy::Kind::UniformRandom;
    } else if (kind == "constant_report") {
        s.kind = Strategy::Kind::ConstantReport;
        s.constant_symbol = j.at("symbol").get<uint8_t>();
    } else if (kind == "order_collusion") {
        s.kind = Strategy::Kind::OrderCollusion;
    } else if (kind == "misreport_val") {
        s.kind = Strategy::Kind::MisreportVal;
        s.misreport_delta = j.at("delta").get<int64_t>();
    } else if (kind == "withhold_key") {
        s.kind = Strategy::Kind::WithholdKey;
    } else if (kind == "wrong_questions") {
        s.kind = Strategy::Kind::WrongQuestions;
    } else {
        throw std::invalid_argument("unknown strategy kind: " + kind);
    }
    return s;
}

PaymentValue shift_payment_value(const PaymentValue& v, int64_t delta_units) {
    PaymentValue out = v;
    if (v.kind == MigKind::Corr) {
        out.exact = v.exact + Rational::from_int(delta_units);
        out.real = out.exact.to_double();
        out.encoded =
            (out.exact * Rational::from_int(int64_t{1} << payment::kValScaleBits)).round_half_even();
    } else {
        out.real = v.real + static_cast<double>(delta_units);
        out.encoded = v.encoded + (delta_units << payment::kValScaleBits);
    }
    return out;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (n_tasks < 2) throw std::invalid_argument("config: need at least two tasks");
    if (n_sellers < 2) throw std::invalid_argument("config: need at least two sellers");
    if (trials < 1) throw std::invalid_argument("config: trial count must be positive");
    if (allow_post_transfer) {
        throw std::invalid_argument("config: post-protocol transfers are not modeled");
    }
    model.validate();
    params.validate();
    costs.validate();
    if (static_cast<int>(costs.dep_sellers.size()) != n_sellers ||
        static_cast<int>(costs.pri_cost_sellers.size()) != n_sellers) {
        throw std::invalid_argument("config: per-seller cost vectors must match seller count");
    }
    if (static_cast<int>(seller_strategies.size()) != n_sellers) {
        throw std::invalid_argument("config: one strategy per seller");
    }
    if (!corrupt_key_opening.empty() &&
        static_cast<int>(corrupt_key_opening.size()) != n_sellers) {
        throw std::invalid_argument("config: corrupt_key_opening must match seller count");
    }
    if (buyer_rule != "rational" && buyer_rule != "always" && buyer_rule != "never") {
        throw std::invalid_argument("config: unknown buyer rule");
    }
    const bool corr = params.mig == MigKind::Corr;
    if (corr && model.kind != ReportKind::Signal) {
        throw std::invalid_argument("config: corr payment needs a signal model");
    }
    if (!corr && model.kind != ReportKind::Forecast) {
        throw std::invalid_argument("config: pearson payment needs a forecast model");
    }
    if (!corr && params.prior.probs != model.prior.probs) {
        throw std::invalid_argument("config: payment prior must match the signal model prior");
    }
    for (const auto& s : seller_strategies) {
        s.validate(model.alphabet_size);
    }
}

int64_t ScenarioConfig::val_tolerance_encoded() const {
    if (params.mig == MigKind::Corr) {
        return 0;
    }
    // documented error envelope of the shared evaluator, in encoded units
    return static_cast<int64_t>(8 * n_tasks * model.alphabet_size);
}

Json ScenarioConfig::to_json() const {
    Json j;
    j["seed"] = seed;
    j["n_tasks"] = n_tasks;
    j["n_sellers"] = n_sellers;
    j["model"] = Json{{"kind", model.kind == ReportKind::Signal ? "signal" : "forecast"},
                      {"alphabet_size", model.alphabet_size},
                      {"prior", model.prior.probs},
                      {"flip_prob", model.flip_prob}};
    j["payment"] = Json{{"alpha", rational_json(params.alpha)},
                        {"beta", rational_json(params.beta)},
                        {"mig", params.mig == MigKind::Corr ? "corr" : "pearson"}};
    j["costs"] = Json{{"con_cost", costs.con_cost},
                      {"reb_cost", costs.reb_cost},
                      {"pri_cost_buyer", costs.pri_cost_buyer},
                      {"pri_cost_sellers", costs.pri_cost_sellers},
                      {"mpc_cost", costs.mpc_cost},
                      {"attack_cost", costs.attack_cost},
                      {"dep_buyer", costs.dep_buyer},
                      {"dep_sellers", costs.dep_sellers},
                      {"val_estimate", costs.val_estimate}};
    j["evaluator"] = evaluator == EvaluatorKind::Trusted ? "trusted" : "shared";
    Json strategies = Json::array();
    for (const auto& s : seller_strategies) {
        strategies.push_back(strategy_json(s));
    }
    j["seller_strategies"] = strategies;
    j["corrupt_key_opening"] = corrupt_key_opening;
    j["share_orders"] = share_orders;
    j["allow_post_transfer"] = allow_post_transfer;
    j["buyer_rule"] = buyer_rule;
    j["deadlines"] = Json{{"submit_vals", deadlines.submit_vals},
                          {"reveal_keys", deadlines.reveal_keys},
                          {"rebuttal_window", deadlines.rebuttal_window}};
    j["trials"] = trials;
    if (initial_balances.has_value()) {
        Json balances;
        for (const auto& [party, amount] : *initial_balances) {
            balances[contract::party_name(party)] = amount;
        }
        j["initial_balances"] = balances;
    }
    return j;
}

ScenarioConfig ScenarioConfig::from_json(const Json& j) {
    ScenarioConfig c = ScenarioConfig::defaults();
    c.seed = j.value("seed", c.seed);
    c.n_tasks = j.value("n_tasks", c.n_tasks);
    c.n_sellers = j.value("n_sellers", c.n_sellers);
    if (j.contains("model")) {
        const auto& m = j["model"];
        std::string kind = m.value("kind", "signal");
        c.model.kind = kind == "signal" ? ReportKind::Signal : ReportKind::Forecast;
        c.model.alphabet_size = m.value("alphabet_size", c.model.alphabet_size);
        if (m.contains("prior")) {
            c.model.prior.probs = m["prior"].get<std::vector<double>>();
        }
        c.model.flip_prob = m.value("flip_prob", c.model.flip_prob);
    }
    if (j.contains("payment")) {
        const auto& p = j["payment"];
        if (p.contains("alpha")) c.params.alpha = rational_from_json(p["alpha"]);
        if (p.contains("beta")) c.params.beta = rational_from_json(p["beta"]);
        std::string mig = p.value("mig", "corr");
        c.params.mig = mig == "corr" ? MigKind::Corr : MigKind::Pearson;
    }
    if (c.params.mig == MigKind::Pearson) {
        c.params.prior = c.model.prior;
    }
    if (j.contains("costs")) {
        const auto& k = j["costs"];
        c.costs.con_cost = k.value("con_cost", c.costs.con_cost);
        c.costs.reb_cost = k.value("reb_cost", c.costs.reb_cost);
        c.costs.pri_cost_buyer = k.value("pri_cost_buyer", c.costs.pri_cost_buyer);
        if (k.contains("pri_cost_sellers")) {
            c.costs.pri_cost_sellers = k["pri_cost_sellers"].get<std::vector<int64_t>>();
        }
        c.costs.mpc_cost = k.value("mpc_cost", c.costs.mpc_cost);
        c.costs.attack_cost = k.value("attack_cost", c.costs.attack_cost);
        c.costs.dep_buyer = k.value("dep_buyer", c.costs.dep_buyer);
        if (k.contains("dep_sellers")) {
            c.costs.dep_sellers = k["dep_sellers"].get<std::vector<int64_t>>();
        }
        c.costs.val_estimate = k.value("val_estimate", c.costs.val_estimate);
    }
    if (j.contains("evaluator")) {
        c.evaluator = j["evaluator"].get<std::string>() == "shared" ? EvaluatorKind::Shared
                                                                    : EvaluatorKind::Trusted;
    }
    if (j.contains("seller_strategies")) {
        c.seller_strategies.clear();
        for (const auto& s : j["seller_strategies"]) {
            c.seller_strategies.push_back(strategy_from_json(s));
        }
    }
    if (j.contains("corrupt_key_opening")) {
        c.corrupt_key_opening = j["corrupt_key_opening"].get<std::vector<bool>>();
    }
    c.share_orders = j.value("share_orders", c.share_orders);
    c.allow_post_transfer = j.value("allow_post_transfer", false);
    c.buyer_rule = j.value("buyer_rule", c.buyer_rule);
    if (j.contains("deadlines")) {
        const auto& d = j["deadlines"];
        c.deadlines.submit_vals = d.value("submit_vals", c.deadlines.submit_vals);
        c.deadlines.reveal_keys = d.value("reveal_keys", c.deadlines.reveal_keys);
        c.deadlines.rebuttal_window = d.value("rebuttal_window", c.deadlines.rebuttal_window);
    }
    c.trials = j.value("trials", c.trials);

    // keep per-seller vectors in step with the seller count
    while (static_cast<int>(c.seller_strategies.size()) < c.n_sellers) {
        c.seller_strategies.push_back(Strategy::truthful());
    }
    while (static_cast<int>(c.costs.dep_sellers.size()) < c.n_sellers) {
        c.costs.dep_sellers.push_back(c.costs.dep_sellers.back());
    }
    while (static_cast<int>(c.costs.pri_cost_sellers.size()) < c.n_sellers) {
        c.costs.pri_cost_sellers.push_back(c.costs.pri_cost_sellers.back());
    }
    return c;
}

ScenarioConfig ScenarioConfig::defaults() {
    ScenarioConfig c;
    c.seed = 1;
    c.n_tasks = 10;
    c.n_sellers = 2;
    c.model.kind = ReportKind::Signal;
    c.model.alphabet_size = 2;
    c.model.prior.probs = {0.5, 0.5};
    c.model.flip_prob = 0.2;
    c.params.alpha = Rational::from_int(100);
    c.params.beta = Rational::from_int(10);
    c.params.mig = MigKind::Corr;
    c.costs.con_cost = 5;
    c.costs.reb_cost = 10;
    c.costs.pri_cost_buyer = 20;
    c.costs.pri_cost_sellers = {20, 20};
    c.costs.mpc_cost = 2;
    c.costs.attack_cost = 1000000;
    c.costs.dep_buyer = 200;
    c.costs.dep_sellers = {200, 200};
    c.costs.val_estimate = 56;  // two sellers at roughly alpha*0.18 + beta
    c.seller_strategies = {Strategy::truthful(), Strategy::truthful()};
    c.buyer_rule = "rational";
    c.trials = 1;
    return c;
}

std::string RunTranscript::to_jsonl() const {
    std::ostringstream out;
    Json header;
    header["ro_seed"] = ro_seed;
    header["outcome"] = contract::to_string(outcome);
    header["final_balances"] = final_balances;
    Json pays = Json::array();
    for (const auto& p : payments) {
        pays.push_back(Json{{"real", p.real}, {"encoded", p.encoded}});
    }
    header["payments"] = pays;
    out << header.dump() << "\n";
    for (const auto& e : events) {
        out << e.dump() << "\n";
    }
    return out.str();
}

namespace {

std::map<int, int64_t> default_balances(const ScenarioConfig& config) {
    std::map<int, int64_t> balances;
    double per_seller_bound =
        config.params.alpha.to_double() * 4.0 * (config.n_sellers - 1) +
        config.params.beta.to_double() + 16.0;
    balances[contract::kBuyer] =
        config.costs.dep_buyer +
        static_cast<int64_t>(std::ceil(per_seller_bound)) * config.n_sellers;
    for (int s = 1; s <= config.n_sellers; ++s) {
        balances[s] = config.costs.dep_sellers[static_cast<size_t>(s - 1)] + 8;
    }
    return balances;
}

class TranscriptBuilder {
  public:
    TranscriptBuilder(RunResult& result, ContractState& state)
        : result_(result), state_(state) {}

    // moves freshly appended contract events into the transcript
    void drain() {
        auto& tr = result_.transcript;
        for (; drained_ < state_.events.size(); ++drained_) {
            const auto& e = state_.events[drained_];
            if (result_.key_reveal_event_index == 0 &&
                e.stage_after == contract::Stage::KeysRevealed) {
                result_.key_reveal_event_index = tr.events.size();
            }
            tr.events.push_back(e.to_json());
        }
    }

    void harness_event(const std::string& op, const std::string& party, Json extra) {
        Json j;
        j["tick"] = state_.clock;
        j["operation"] = op;
        j["party"] = party;
        j["stage_before"] = contract::to_string(state_.stage);
        j["stage_after"] = contract::to_string(state_.stage);
        j["ledger_delta"] = Json::object();
        if (!extra.is_null()) {
            j["extra"] = std::move(extra);
        }
        result_.transcript.events.push_back(std::move(j));
    }

  private:
    RunResult& result_;
    ContractState& state_;
    size_t drained_ = 0;
};

}  // namespace

RunResult run_scenario(const ScenarioConfig& config) {
    config.validate();
    const crypto::SessionId session = "itp-run";
    crypto::OracleTable oracle(config.seed);
    std::mt19937_64 assign_rng(derive_seed(config.seed, 1));
    std::mt19937_64 world_rng(derive_seed(config.seed, 2));
    std::mt19937_64 strategy_rng(derive_seed(config.seed, 3));
    std::mt19937_64 mpc_rng(derive_seed(config.seed, 4));

    RunResult result;
    result.transcript.ro_seed = config.seed;
    result.transcript.config_echo = config.to_json();

    contract::ContractConfig ccfg;
    ccfg.params = config.params;
    ccfg.costs = config.costs;
    ccfg.num_sellers = config.n_sellers;
    ccfg.deadlines = config.deadlines;
    ccfg.val_tolerance_encoded = config.val_tolerance_encoded();
    ccfg.session = session;
    ccfg.initial_balances =
        config.initial_balances.has_value() ? *config.initial_balances : default_balances(config);

    std::vector<contract::SignSubmission> submissions;
    submissions.push_back({contract::kBuyer, config.params, config.costs.dep_buyer});
    for (int s = 1; s <= config.n_sellers; ++s) {
        submissions.push_back(
            {s, config.params, config.costs.dep_sellers[static_cast<size_t>(s - 1)]});
    }
    ContractState state = contract::sign(ccfg, submissions);
    TranscriptBuilder builder(result, state);
    builder.drain();

    // Assign Questions
    auto questions = traders::make_question_set(config.n_tasks);
    auto bundle = traders::buyer_assign(questions, oracle, session, assign_rng,
                                        config.share_orders, config.n_sellers);
    contract::record_question_commitments(state, bundle.commitments);
    builder.drain();
    for (int s = 0; s < config.n_sellers; ++s) {
        bool ok = crypto::open_commitment(oracle, bundle.commitments[s], bundle.openings[s],
                                          bundle.serialized_sets[s], session);
        builder.harness_event("assignment_checked", contract::party_name(s + 1),
                              Json{{"ok", ok}});
        if (!ok) {
            throw std::logic_error("honest assignment failed its own commitment check");
        }
    }

    // Submit Answers
    auto world = traders::sample_world(config.model, config.n_tasks, config.n_sellers, world_rng);
    std::vector<traders::PackagedAnswers> packaged;
    for (int s = 0; s < config.n_sellers; ++s) {
        std::vector<uint8_t> assigned(config.n_tasks);
        for (size_t pos = 0; pos < config.n_tasks; ++pos) {
            assigned[pos] = world.signals[s][bundle.orders[s][pos]];
        }
        const auto& strategy = config.seller_strategies[static_cast<size_t>(s)];
        payment::ReportVector reports =
            traders::seller_report(config.model, assigned, strategy, strategy_rng);
        packaged.push_back(traders::seller_package(
            bundle.permuted_sets[s], reports, oracle, session,
            strategy.kind == Strategy::Kind::WrongQuestions));
        result.package_bytes.push_back(packaged.back().package_bytes);
    }
    for (int s = 0; s < config.n_sellers; ++s) {
        Bytes cipher_bytes = goods::concat_blocks(packaged[s].ciphertext.blocks);
        bool ok = crypto::open_commitment(oracle, packaged[s].ciphertext_commitment,
                                          packaged[s].ciphertext_opening, cipher_bytes, session);
        Json extra{{"ok", ok}};
        if (packaged[s].ciphertext.blocks.empty()) {
            extra["empty_ciphertext"] = true;
        }
        builder.harness_event("ciphertext_checked", contract::party_name(contract::kBuyer),
                              std::move(extra));
        contract::record_answer_commitments(state, s + 1, packaged[s].ciphertext_commitment,
                                            packaged[s].key_commitment);
        builder.drain();
    }

    // Compute Payment Function
    std::vector<payment::ReportVector> canonical;
    for (int s = 0; s < config.n_sellers; ++s) {
        auto realigned = goods::realign_reports(packaged[s].package);
        if (!realigned.has_value()) {
            throw std::logic_error("packaged reports failed to realign");
        }
        canonical.push_back(std::move(*realigned));
    }
    result.canonical_reports = canonical;
    std::vector<PaymentValue> vals;
    if (config.evaluator == EvaluatorKind::Trusted) {
        vals = mpc::evaluate_payment_trusted(canonical, config.params);
        builder.harness_event("payment_evaluated", "sellers",
                              Json{{"evaluator", "trusted"}});
    } else {
        mpc::TripleDealer dealer(derive_seed(config.seed, 5));
        auto secure = mpc::evaluate_payment_secure_multi(canonical, config.params, dealer, mpc_rng);
        vals = std::move(secure.payments);
        builder.harness_event("payment_evaluated", "sellers",
                              Json{{"evaluator", "shared"},
                                   {"opened_values", secure.transcript.opened.size()},
                                   {"triples_used", secure.triples_used}});
    }
    for (int s = 1; s <= config.n_sellers; ++s) {
        const auto& strategy = config.seller_strategies[static_cast<size_t>(s - 1)];
        std::vector<PaymentValue> submitted = vals;
        if (strategy.kind == Strategy::Kind::MisreportVal) {
            for (auto& v : submitted) {
                v = shift_payment_value(v, strategy.misreport_delta);
            }
        }
        contract::submit_payment_outputs(state, s, submitted);
        builder.drain();
    }
    if (!state.closed() && state.stage == contract::Stage::AnswersCommitted) {
        contract::advance_clock(state, config.deadlines.submit_vals);
        builder.drain();
    }

    // Open and Check Goods
    if (!state.closed() && state.stage == contract::Stage::PaymentReported) {
        for (int s = 1; s <= config.n_sellers; ++s) {
            const auto& strategy = config.seller_strategies[static_cast<size_t>(s - 1)];
            if (strategy.kind == Strategy::Kind::WithholdKey) {
                continue;
            }
            crypto::Opening opening = packaged[s - 1].key_opening;
            if (!config.corrupt_key_opening.empty() &&
                config.corrupt_key_opening[static_cast<size_t>(s - 1)]) {
                opening.randomness[0] ^= 0xff;
            }
            contract::submit_keys(state, oracle, s, packaged[s - 1].key.bytes, opening);
            builder.drain();
            if (state.closed()) {
                break;
            }
        }
    }
    if (!state.closed() && state.stage == contract::Stage::PaymentReported) {
        contract::advance_clock(state, config.deadlines.reveal_keys);
        builder.drain();
    }

    // Transaction or Rebuttal
    if (!state.closed() && state.stage == contract::Stage::KeysRevealed) {
        std::vector<std::optional<goods::InfoPackage>> opened_packages;
        std::vector<std::vector<uint32_t>> committed_ids;
        for (int s = 0; s < config.n_sellers; ++s) {
            const auto& [key, op] = *state.revealed_keys[static_cast<size_t>(s)];
            auto blocks =
                crypto::decrypt(oracle, crypto::SecretKey{key}, packaged[s].ciphertext, session);
            if (!blocks.has_value()) {
                opened_packages.emplace_back(std::nullopt);
            } else {
                opened_packages.push_back(goods::decode_info_package(
                    goods::concat_blocks(*blocks), oracle.digest_bytes()));
            }
            committed_ids.push_back(bundle.permuted_sets[s].ids());
        }
        result.goods_reason = traders::buyer_check_goods(
            opened_packages, committed_ids, *state.agreed_vals, config.params,
            ccfg.val_tolerance_encoded);
        builder.harness_event("goods_checked", contract::party_name(contract::kBuyer),
                              Json{{"reason", contract::to_string(result.goods_reason)}});

        bool rebut;
        if (config.buyer_rule == "always") {
            rebut = true;
        } else if (config.buyer_rule == "never") {
            rebut = false;
        } else {
            rebut = traders::buyer_rebuttal_decision(result.goods_reason, config.costs);
        }
        if (rebut) {
            contract::RebuttalSubmission submission;
            for (int s = 0; s < config.n_sellers; ++s) {
                submission.sellers.push_back({packaged[s].ciphertext,
                                              packaged[s].ciphertext_opening,
                                              bundle.serialized_sets[s], bundle.openings[s]});
            }
            contract::raise_rebuttal(state, oracle, submission);
            result.rebutted = true;
            builder.drain();
        } else {
            contract::advance_clock(state, config.deadlines.rebuttal_window);
            builder.drain();
        }
    }

    if (!state.closed()) {
        throw std::logic_error("scenario finished without closing the contract");
    }

    result.outcome = state.outcome;
    result.transcript.outcome = state.outcome;
    for (const auto& [party, amount] : state.balances) {
        result.transcript.final_balances[contract::party_name(party)] = amount;
    }
    result.transcript.final_balances["sink"] = state.cost_sink;
    if (state.agreed_vals.has_value()) {
        result.transcript.payments = *state.agreed_vals;
        if (state.outcome == Outcome::Transacted) {
            for (const auto& v : *state.agreed_vals) {
                result.paid_units.push_back(payment::to_currency_units(v));
            }
        }
    }

    // utilities: ledger deltas plus the off-ledger costs of the actions taken
    const auto& initial = ccfg.initial_balances;
    result.utilities.buyer =
        static_cast<double>(state.balances.at(contract::kBuyer) - initial.at(contract::kBuyer));
    if (result.rebutted) {
        result.utilities.buyer -=
            static_cast<double>(config.costs.reb_cost + config.costs.pri_cost_buyer);
    }
    for (int s = 1; s <= config.n_sellers; ++s) {
        double u = static_cast<double>(state.balances.at(s) - initial.at(s));
        if (config.evaluator == EvaluatorKind::Shared) {
            u -= static_cast<double>(config.costs.mpc_cost);
        }
        result.utilities.sellers.push_back(u);
    }
    return result;
}

}  // namespace infotrade::sim

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "infotrade/contract.hpp"
#include "infotrade/info_package.hpp"
#include "infotrade/peer_payment.hpp"
#include "infotrade/random_oracle.hpp"

namespace infotrade::traders {

// Position p of a seller's assigned sequence holds the question with
// canonical index order[p].
using QuestionOrder = std::vector<uint32_t>;

goods::QuestionSet make_question_set(size_t n_tasks);

struct AssignmentBundle {
    std::vector<QuestionOrder> orders;              // per seller
    std::vector<goods::QuestionSet> permuted_sets;  // per seller
    std::vector<Bytes> serialized_sets;
    std::vector<crypto::Commitment> commitments;
    std::vector<crypto::Opening> openings;
};

// Draws one independent uniform order per seller (Fisher-Yates) and commits
// to each permuted question set. share_orders forces every seller onto the
// same order, which is the identity-leak switch the collusion experiments
// flip.
AssignmentBundle buyer_assign(const goods::QuestionSet& questions, crypto::OracleTable& oracle,
                              const crypto::SessionId& session, std::mt19937_64& rng,
                              bool share_orders, int n_sellers);

// Generative model behind the sellers' private opinions: ground truth drawn
// from the prior per task, each seller observing it through symmetric noise,
// independently across sellers.
struct SignalModel {
    payment::ReportKind kind = payment::ReportKind::Signal;
    payment::PriorDistribution prior{{0.5, 0.5}};
    double flip_prob = 0.2;
    uint8_t alphabet_size = 2;
    void validate() const;
};

struct WorldSample {
    std::vector<uint8_t> truths;                 // canonical task order
    std::vector<std::vector<uint8_t>> signals;   // [seller][task]
};

WorldSample sample_world(const SignalModel& model, size_t n_tasks, int n_sellers,
                         std::mt19937_64& rng);

// Exact Bayes posterior over the truth given one observed signal.
std::vector<double> posterior(const SignalModel& model, uint8_t observed);

struct Strategy {
    enum class Kind {
        Truthful,
        Permutation,
        UniformRandom,
        ConstantReport,
        OrderCollusion,
        MisreportVal,
        WithholdKey,
        WrongQuestions,
    };
    Kind kind = Kind::Truthful;
    std::vector<uint8_t> sigma;   // Permutation: bijection on the alphabet
    uint8_t constant_symbol = 0;  // ConstantReport
    int64_t misreport_delta = 0;  // MisreportVal, in currency units

    static Strategy truthful() { return {}; }
    bool reports_honestly() const {
        return kind == Kind::Truthful || kind == Kind::MisreportVal ||
               kind == Kind::WithholdKey || kind == Kind::WrongQuestions;
    }
    void validate(uint8_t alphabet_size) const;
};

std::string to_string(Strategy::Kind k);

// Turns the seller's observations (already in her assigned order) into the
// reports she packages. Permutation relabels honest reports; the
// signal-independent kinds ignore the observations; order collusion reports
// by assigned position parity (1-based even positions get symbol 1).
payment::ReportVector seller_report(const SignalModel& model,
                                    std::span<const uint8_t> assigned_signals,
                                    const Strategy& strategy, std::mt19937_64& rng);

struct PackagedAnswers {
    goods::InfoPackage package;
    Bytes package_bytes;
    crypto::SecretKey key;
    crypto::Ciphertext ciphertext;
    crypto::Commitment ciphertext_commitment;
    crypto::Opening ciphertext_opening;
    crypto::Commitment key_commitment;
    crypto::Opening key_opening;
};

// Serializes (assigned questions, reports), encrypts under a fresh key and
// commits to both the ciphertext and the key. wrong_questions substitutes a
// shifted id sequence into the package.
PackagedAnswers seller_package(const goods::QuestionSet& assigned_set,
                               const payment::ReportVector& reports_in_assigned_order,
                               crypto::OracleTable& oracle, const crypto::SessionId& session,
                               bool wrong_questions = false);

// Same predicate the contract applies during rebuttal.
contract::IncorrectGoodReason buyer_check_goods(
    const std::vector<std::optional<goods::InfoPackage>>& decrypted_packages,
    const std::vector<std::vector<uint32_t>>& committed_question_ids,
    const std::vector<payment::PaymentValue>& reported_vals,
    const payment::PaymentParams& params, int64_t val_tolerance_encoded);

// Rebut exactly when the good is incorrect, provided the deposit bounds
// hold; otherwise fall back to the utility-maximizing action.
bool buyer_rebuttal_decision(contract::IncorrectGoodReason reason,
                             const contract::CostModel& costs);

}  // namespace infotrade::traders

#include "infotrade/traders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace infotrade::traders {

using payment::ReportKind;
using payment::ReportVector;

goods::QuestionSet make_question_set(size_t n_tasks) {
    goods::QuestionSet qs;
    qs.questions.reserve(n_tasks);
    for (size_t i = 0; i < n_tasks; ++i) {
        goods::Question q;
        q.id = static_cast<uint32_t>(i);
        std::string text = "q" + std::to_string(i);
        q.payload.assign(text.begin(), text.end());
        qs.questions.push_back(std::move(q));
    }
    return qs;
}

namespace {

QuestionOrder fisher_yates(size_t n, std::mt19937_64& rng) {
    QuestionOrder order(n);
    std::iota(order.begin(), order.end(), 0);
    for (size_t i = n - 1; i > 0; --i) {
        size_t j = static_cast<size_t>(rng() % (i + 1));
        std::swap(order[i], order[j]);
    }
    return order;
}

}  // namespace

AssignmentBundle buyer_assign(const goods::QuestionSet& questions, crypto::OracleTable& oracle,
                              const crypto::SessionId& session, std::mt19937_64& rng,
                              bool share_orders, int n_sellers) {
    if (questions.size() < 2) {
        throw std::invalid_argument("need at least two questions");
    }
    AssignmentBundle bundle;
    for (int s = 0; s < n_sellers; ++s) {
        QuestionOrder order = (share_orders && s > 0) ? bundle.orders[0]
                                                      : fisher_yates(questions.size(), rng);
        goods::QuestionSet permuted;
        permuted.questions.reserve(questions.size());
        for (uint32_t idx : order) {
            permuted.questions.push_back(questions.questions[idx]);
        }
        Bytes serialized = goods::encode_question_set(permuted);
        auto [com, op] = crypto::commit(oracle, serialized, session);
        bundle.orders.push_back(std::move(order));
        bundle.permuted_sets.push_back(std::move(permuted));
        bundle.serialized_sets.push_back(std::move(serialized));
        bundle.commitments.push_back(std::move(com));
        bundle.openings.push_back(std::move(op));
    }
    return bundle;
}

void SignalModel::validate() const {
    prior.validate();
    if (prior.probs.size() != alphabet_size) {
        throw std::invalid_argument("prior size does not match alphabet");
    }
    if (flip_prob < 0.0 || flip_prob >= 0.5) {
        throw std::invalid_argument("flip probability must lie in [0, 0.5)");
    }
}

namespace {

uint8_t draw_from(std::span<const double> probs, std::mt19937_64& rng) {
    double u = std::generate_canonical<double, 53>(rng);
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) {
            return static_cast<uint8_t>(i);
        }
    }
    return static_cast<uint8_t>(probs.size() - 1);
}

uint8_t noisy_observation(const SignalModel& model, uint8_t truth, std::mt19937_64& rng) {
    double u = std::generate_canonical<double, 53>(rng);
    if (u >= model.flip_prob) {
        return truth;
    }
    // symmetric noise: uniform over the other symbols
    auto other = static_cast<uint8_t>(rng() % (model.alphabet_size - 1));
    return other >= truth ? static_cast<uint8_t>(other + 1) : other;
}

}  // namespace

WorldSample sample_world(const SignalModel& model, size_t n_tasks, int n_sellers,
                         std::mt19937_64& rng) {
    model.validate();
    if (n_tasks < 2) {
        throw std::invalid_argument("need at least two tasks");
    }
    WorldSample world;
    world.truths.reserve(n_tasks);
    world.signals.assign(n_sellers, {});
    for (auto& s : world.signals) {
        s.reserve(n_tasks);
    }
    for (size_t t = 0; t < n_tasks; ++t) {
        uint8_t y = draw_from(model.prior.probs, rng);
        world.truths.push_back(y);
        for (int s = 0; s < n_sellers; ++s) {
            world.signals[s].push_back(noisy_observation(model, y, rng));
        }
    }
    return world;
}

std::vector<double> posterior(const SignalModel& model, uint8_t observed) {
    model.validate();
    std::vector<double> post(model.alphabet_size);
    double total = 0.0;
    for (uint8_t y = 0; y < model.alphabet_size; ++y) {
        double likelihood = (y == observed)
                                ? (1.0 - model.flip_prob)
                                : model.flip_prob / static_cast<double>(model.alphabet_size - 1);
        post[y] = model.prior.probs[y] * likelihood;
        total += post[y];
    }
    for (double& p : post) {
        p /= total;
    }
    return post;
}

void Strategy::validate(uint8_t alphabet_size) const {
    if (kind == Kind::Permutation) {
        if (sigma.size() != alphabet_size) {
            throw std::invalid_argument("permutation must cover the alphabet");
        }
        std::vector<bool> seen(alphabet_size, false);
        for (uint8_t s : sigma) {
            if (s >= alphabet_size || seen[s]) {
                throw std::invalid_argument("sigma is not a bijection");
            }
            seen[s] = true;
        }
    }
    if (kind == Kind::ConstantReport && constant_symbol >= alphabet_size) {
        throw std::invalid_argument("constant symbol outside alphabet");
    }
}

std::string to_string(Strategy::Kind k) {
    switch (k) {
        case Strategy::Kind::Truthful: return "truthful";
        case Strategy::Kind::Permutation: return "permutation";
        case Strategy::Kind::UniformRandom: return "uniform_random";
        case Strategy::Kind::ConstantReport: return "constant_report";
        case Strategy::Kind::OrderCollusion: return "order_collusion";
        case Strategy::Kind::MisreportVal: return "misreport_val";
        case Strategy::Kind::WithholdKey: return "withhold_key";
        case Strategy::Kind::WrongQuestions: return "wrong_questions";
    }
    return "?";
}

payment::ReportVector seller_report(const SignalModel& model,
                                    std::span<const uint8_t> assigned_signals,
                                    const Strategy& strategy, std::mt19937_64& rng) {
    strategy.validate(model.alphabet_size);
    const size_t n = assigned_signals.size();

    auto symbol_reports = [&](auto&& symbol_at) {
        ReportVector r;
        r.alphabet_size = model.alphabet_size;
        if (model.kind == ReportKind::Signal) {
            r.kind = ReportKind::Signal;
            r.signals.reserve(n);
            for (size_t i = 0; i < n; ++i) {
                r.signals.push_back(symbol_at(i));
            }
        } else {
            // signal-independent forecast strategies report point masses
            r.kind = ReportKind::Forecast;
            r.forecasts.reserve(n);
            for (size_t i = 0; i < n; ++i) {
                std::vector<double> f(model.alphabet_size, 0.0);
                f[symbol_at(i)] = 1.0;
                r.forecasts.push_back(std::move(f));
            }
        }
        return r;
    };

    switch (strategy.kind) {
        case Strategy::Kind::UniformRandom:
            return symbol_reports([&](size_t) {
                return static_cast<uint8_t>(rng() % model.alphabet_size);
            });
        case Strategy::Kind::ConstantReport:
            return symbol_reports([&](size_t) { return strategy.constant_symbol; });
        case Strategy::Kind::OrderCollusion:
            // 1-based even positions answer 1, odd positions answer 0
            return symbol_reports([&](size_t i) {
                return static_cast<uint8_t>((i + 1) % 2 == 0 ? 1 : 0);
            });
        default:
            break;
    }

    // honest reports, optionally relabeled by a common permutation
    ReportVector r;
    r.alphabet_size = model.alphabet_size;
    if (model.kind == ReportKind::Signal) {
        r.kind = ReportKind::Signal;
        r.signals.assign(assigned_signals.begin(), assigned_signals.end());
        if (strategy.kind == Strategy::Kind::Permutation) {
            for (auto& s : r.signals) {
                s = strategy.sigma[s];
            }
        }
        return r;
    }
    r.kind = ReportKind::Forecast;
    r.forecasts.reserve(n);
    for (uint8_t obs : assigned_signals) {
        std::vector<double> p = posterior(model, obs);
        if (strategy.kind == Strategy::Kind::Permutation) {
            std::vector<double> q(p.size());
            for (size_t y = 0; y < p.size(); ++y) {
                q[strategy.sigma[y]] = p[y];
            }
            p = std::move(q);
        }
        r.forecasts.push_back(std::move(p));
    }
    return r;
}

PackagedAnswers seller_package(const goods::QuestionSet& assigned_set,
                               const payment::ReportVector& reports, crypto::OracleTable& oracle,
                               const crypto::SessionId& session, bool wrong_questions) {
    std::vector<uint32_t> ids = assigned_set.ids();
    if (wrong_questions) {
        for (auto& id : ids) {
            id += 1000000;  // a question set the buyer never assigned
        }
    }
    PackagedAnswers out;
    out.package = goods::make_info_package(ids, reports);
    out.package_bytes = goods::encode_info_package(out.package, oracle.digest_bytes());

    auto blocks = goods::to_blocks(out.package_bytes, oracle.digest_bytes());
    out.key = crypto::keygen(oracle, blocks.size(), session);
    out.ciphertext = crypto::encrypt(oracle, out.key, blocks, session);

    Bytes cipher_bytes = goods::concat_blocks(out.ciphertext.blocks);
    std::tie(out.ciphertext_commitment, out.ciphertext_opening) =
        crypto::commit(oracle, cipher_bytes, session);
    std::tie(out.key_commitment, out.key_opening) =
        crypto::commit(oracle, out.key.bytes, session);
    return out;
}

contract::IncorrectGoodReason buyer_check_goods(
    const std::vector<std::optional<goods::InfoPackage>>& decrypted_packages,
    const std::vector<std::vector<uint32_t>>& committed_question_ids,
    const std::vector<payment::PaymentValue>& reported_vals,
    const payment::PaymentParams& params, int64_t val_tolerance_encoded) {
    return contract::classify_good(decrypted_packages, committed_question_ids, reported_vals,
                                   params, val_tolerance_encoded);
}

bool buyer_rebuttal_decision(contract::IncorrectGoodReason reason,
                             const contract::CostModel& costs) {
    const bool incorrect = reason != contract::IncorrectGoodReason::None;
    auto bounds = contract::check_deposit_bounds(costs);
    if (bounds.ok) {
        return incorrect;
    }
    // Degenerate deposits: pick the better row of the utility table directly.
    const auto n_traders = static_cast<int64_t>(costs.dep_sellers.size()) + 1;
    int64_t no_rebuttal = -costs.val_estimate - costs.con_cost;
    if (incorrect) {
        int64_t rebuttal = costs.dep_sellers_total() - costs.reb_cost - costs.pri_cost_buyer -
                           n_traders * costs.con_cost;
        return rebuttal > no_rebuttal;
    }
    int64_t spurious = -costs.dep_buyer - costs.pri_cost_buyer;
    return spurious > no_rebuttal;
}

}  // namespace infotrade::traders

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

#include "infotrade/sim.hpp"

namespace infotrade::sim {

using payment::MigKind;
using payment::ReportKind;
using payment::ReportVector;
using stats::MeanStderr;
using traders::Strategy;

namespace {

std::vector<uint32_t> random_order(size_t n, std::mt19937_64& rng) {
    std::vector<uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    for (size_t i = n - 1; i > 0; --i) {
        size_t j = static_cast<size_t>(rng() % (i + 1));
        std::swap(order[i], order[j]);
    }
    return order;
}

ReportVector realign(const ReportVector& assigned, const std::vector<uint32_t>& order) {
    ReportVector canonical = assigned;
    for (size_t pos = 0; pos < order.size(); ++pos) {
        if (assigned.kind == ReportKind::Signal) {
            canonical.signals[order[pos]] = assigned.signals[pos];
        } else {
            canonical.forecasts[order[pos]] = assigned.forecasts[pos];
        }
    }
    return canonical;
}

}  // namespace

ProfileEstimate estimate_payment(const std::vector<Strategy>& profile,
                                 const traders::SignalModel& model, size_t n_tasks,
                                 const payment::PaymentParams& params, size_t trials,
                                 uint64_t seed, bool share_orders) {
    if (trials < 100) {
        throw std::invalid_argument("estimate_payment needs at least 100 trials");
    }
    const int n_sellers = static_cast<int>(profile.size());
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> pay_samples(n_sellers);
    std::vector<std::vector<double>> mig_samples(n_sellers);
    for (auto& v : pay_samples) v.reserve(trials);
    for (auto& v : mig_samples) v.reserve(trials);

    const double alpha = params.alpha.to_double();
    const double beta = params.beta.to_double();

    for (size_t trial = 0; trial < trials; ++trial) {
        auto world = traders::sample_world(model, n_tasks, n_sellers, rng);
        std::vector<ReportVector> canonical;
        canonical.reserve(n_sellers);
        std::vector<uint32_t> shared_order;
        for (int s = 0; s < n_sellers; ++s) {
            std::vector<uint32_t> order;
            if (share_orders) {
                if (s == 0) shared_order = random_order(n_tasks, rng);
                order = shared_order;
            } else {
                order = random_order(n_tasks, rng);
            }
            std::vector<uint8_t> assigned(n_tasks);
            for (size_t pos = 0; pos < n_tasks; ++pos) {
                assigned[pos] = world.signals[s][order[pos]];
            }
            ReportVector reports =
                traders::seller_report(model, assigned, profile[static_cast<size_t>(s)], rng);
            canonical.push_back(realign(reports, order));
        }
        for (int i = 0; i < n_sellers; ++i) {
            double mig_sum = 0.0;
            for (int j = 0; j < n_sellers; ++j) {
                if (i == j) continue;
                if (params.mig == MigKind::Corr) {
                    mig_sum += payment::mig_corr(canonical[i], canonical[j]).to_double();
                } else {
                    mig_sum += payment::mig_pearson(canonical[i], canonical[j], params.prior);
                }
            }
            mig_samples[i].push_back(mig_sum);
            pay_samples[i].push_back(alpha * mig_sum + beta);
        }
    }

    ProfileEstimate out;
    for (int s = 0; s < n_sellers; ++s) {
        out.payments.push_back(stats::mean_stderr(pay_samples[s]));
        out.mig_sums.push_back(stats::mean_stderr(mig_samples[s]));
    }
    return out;
}

namespace {

// ---- finite-menu equilibrium audit -------------------------------------

struct SellerPlan {
    int report = 0;   // index into the report menu
    bool honest_val = true;
    bool reveal_key = true;
};

struct Util {
    double v = 0.0;
    double se = 0.0;
};

bool strictly_better(const Util& candidate, const Util& current) {
    double noise = 3.0 * std::sqrt(candidate.se * candidate.se + current.se * current.se);
    return candidate.v > current.v + std::max(noise, 1e-9);
}

struct GridContext {
    std::vector<Strategy> report_menu;
    contract::CostModel costs;
    traders::SignalModel model;
    size_t n_tasks;
    payment::PaymentParams params;
    SpeOptions options;
    // per (r1, r2, random_assignment): per-seller payment estimates
    std::map<std::tuple<int, int, bool>, std::vector<MeanStderr>> cache;

    const std::vector<MeanStderr>& payments(int r1, int r2, bool random_assignment) {
        auto key = std::make_tuple(r1, r2, random_assignment);
        auto it = cache.find(key);
        if (it != cache.end()) {
            return it->second;
        }
        std::vector<Strategy> profile = {report_menu[static_cast<size_t>(r1)],
                                         report_menu[static_cast<size_t>(r2)]};
        uint64_t seed = derive_seed(options.seed,
                                    static_cast<uint64_t>(r1 * 64 + r2) * 2 +
                                        (random_assignment ? 0 : 1));
        auto est = estimate_payment(profile, model, n_tasks, params, options.trials, seed,
                                    /*share_orders=*/!random_assignment);
        return cache.emplace(key, est.payments).first->second;
    }
};

struct ProfileOutcome {
    Util buyer;
    Util sellers[2];
    std::string outcome;
};

ProfileOutcome evaluate_profile(GridContext& ctx, const SellerPlan plans[2],
                                const std::string& buyer_rule, bool random_assignment) {
    const auto& costs = ctx.costs;
    const auto n_traders = static_cast<int64_t>(costs.dep_sellers.size()) + 1;
    const int64_t dep_total =
        costs.dep_sellers_total() + costs.dep_buyer;
    const double mpc = static_cast<double>(costs.mpc_cost);
    ProfileOutcome out;

    const bool vals_consistent = plans[0].honest_val == plans[1].honest_val;
    const bool keys_revealed = plans[0].reveal_key && plans[1].reveal_key;
    if (!vals_consistent || !keys_revealed) {
        out.outcome = "SellersConfiscated";
        for (int s = 0; s < 2; ++s) {
            out.sellers[s].v =
                -static_cast<double>(costs.dep_sellers[static_cast<size_t>(s)]) - mpc;
        }
        out.buyer.v = -static_cast<double>(costs.con_cost);
        return out;
    }

    const auto& pays = ctx.payments(plans[0].report, plans[1].report, random_assignment);
    const double delta = plans[0].honest_val ? 0.0
                                             : static_cast<double>(ctx.options.wrong_val_delta);
    const bool good_incorrect = !plans[0].honest_val;  // both misreport identically

    bool rebut;
    if (buyer_rule == "always") {
        rebut = true;
    } else if (buyer_rule == "never") {
        rebut = false;
    } else {
        rebut = traders::buyer_rebuttal_decision(
            good_incorrect ? contract::IncorrectGoodReason::PaymentMismatch
                           : contract::IncorrectGoodReason::None,
            costs);
    }

    if (rebut && good_incorrect) {
        out.outcome = "RebuttalSucceeded";
        for (int s = 0; s < 2; ++s) {
            out.sellers[s].v =
                -static_cast<double>(costs.dep_sellers[static_cast<size_t>(s)]) - mpc;
        }
        out.buyer.v = static_cast<double>(costs.dep_sellers_total() - n_traders * costs.con_cost -
                                          costs.reb_cost - costs.pri_cost_buyer);
        return out;
    }
    if (rebut) {
        out.outcome = "RebuttalFailed";
        int64_t pool = dep_total - n_traders * costs.con_cost;
        int64_t share = pool / 2;
        for (int s = 0; s < 2; ++s) {
            out.sellers[s].v =
                static_cast<double>(share - costs.dep_sellers[static_cast<size_t>(s)]) - mpc;
        }
        out.buyer.v = -static_cast<double>(costs.dep_buyer + costs.reb_cost +
                                           costs.pri_cost_buyer);
        return out;
    }

    out.outcome = "Transacted";
    double buyer_paid = 0.0;
    double buyer_se_sq = 0.0;
    for (int s = 0; s < 2; ++s) {
        double val = pays[static_cast<size_t>(s)].mean + delta;
        double se = pays[static_cast<size_t>(s)].se;
        out.sellers[s].v = val - static_cast<double>(costs.con_cost) - mpc;
        out.sellers[s].se = se;
        buyer_paid += val;
        buyer_se_sq += se * se;
    }
    out.buyer.v = -buyer_paid - static_cast<double>(costs.con_cost);
    out.buyer.se = std::sqrt(buyer_se_sq);
    return out;
}

// A rule is sequentially rational when its action is optimal at both goods
// information sets, reached or not.
bool rule_sequentially_rational(GridContext& ctx, const SellerPlan plans[2],
                                const std::string& buyer_rule, bool random_assignment) {
    const auto& costs = ctx.costs;
    const auto n_traders = static_cast<int64_t>(costs.dep_sellers.size()) + 1;
    const auto& pays = ctx.payments(plans[0].report, plans[1].report, random_assignment);
    const double honest_total =
        pays[0].mean + pays[1].mean;

    auto action = [&](bool incorrect) {
        if (buyer_rule == "always") return true;
        if (buyer_rule == "never") return false;
        return traders::buyer_rebuttal_decision(
            incorrect ? contract::IncorrectGoodReason::PaymentMismatch
                      : contract::IncorrectGoodReason::None,
            costs);
    };

    // incorrect-good information set: the reported vector carries the delta
    double inflated_total = honest_total + 2.0 * static_cast<double>(ctx.options.wrong_val_delta);
    double rebut_incorrect = static_cast<double>(
        costs.dep_sellers_total() - n_traders * costs.con_cost - costs.reb_cost -
        costs.pri_cost_buyer);
    double stay_incorrect = -inflated_total - static_cast<double>(costs.con_cost);
    bool should_rebut_incorrect = rebut_incorrect > stay_incorrect;
    if (action(true) != should_rebut_incorrect) {
        return false;
    }

    double rebut_correct =
        -static_cast<double>(costs.dep_buyer + costs.reb_cost + costs.pri_cost_buyer);
    double stay_correct = -honest_total - static_cast<double>(costs.con_cost);
    bool should_rebut_correct = rebut_correct > stay_correct;
    return action(false) == should_rebut_correct;
}

}  // namespace

Json SpeTable::to_json() const {
    Json j;
    j["truthful_survives"] = truthful_survives;
    j["truthful_strong"] = truthful_strong;
    j["bad_val_survives"] = bad_val_survives;
    j["bad_val_flagged"] = bad_val_flagged;
    Json rows_json = Json::array();
    for (const auto& row : rows) {
        Json r;
        r["reports"] = Json::array({traders::to_string(row.profile.report[0]),
                                    traders::to_string(row.profile.report[1])});
        r["honest_val"] = Json::array({row.profile.honest_val[0], row.profile.honest_val[1]});
        r["reveal_key"] = Json::array({row.profile.reveal_key[0], row.profile.reveal_key[1]});
        r["buyer_rule"] = row.profile.buyer_rule;
        r["random_assignment"] = row.profile.random_assignment;
        r["outcome"] = row.outcome;
        r["utility_buyer"] = row.utility_buyer;
        r["utility_sellers"] = Json::array({row.utility_sellers[0], row.utility_sellers[1]});
        r["survives_spe"] = row.survives_spe;
        r["coalition_dominated"] = row.coalition_dominated;
        rows_json.push_back(std::move(r));
    }
    j["rows"] = rows_json;
    return j;
}

SpeTable spe_grid_check(const SpeOptions& options, const contract::CostModel& costs,
                        const traders::SignalModel& model, size_t n_tasks,
                        const payment::PaymentParams& params) {
    GridContext ctx;
    ctx.report_menu.push_back(Strategy::truthful());
    {
        Strategy perm;
        perm.kind = Strategy::Kind::Permutation;
        perm.sigma.resize(model.alphabet_size);
        for (size_t i = 0; i < perm.sigma.size(); ++i) {
            perm.sigma[i] = static_cast<uint8_t>(i);
        }
        std::swap(perm.sigma[0], perm.sigma[1]);
        ctx.report_menu.push_back(perm);
    }
    {
        Strategy constant;
        constant.kind = Strategy::Kind::ConstantReport;
        constant.constant_symbol = 0;
        ctx.report_menu.push_back(constant);
    }
    {
        Strategy uniform;
        uniform.kind = Strategy::Kind::UniformRandom;
        ctx.report_menu.push_back(uniform);
    }
    {
        Strategy collusion;
        collusion.kind = Strategy::Kind::OrderCollusion;
        ctx.report_menu.push_back(collusion);
    }
    ctx.costs = costs;
    ctx.model = model;
    ctx.n_tasks = n_tasks;
    ctx.params = params;
    ctx.options = options;

    const int n_reports = static_cast<int>(ctx.report_menu.size());
    const std::vector<std::string> rules = {"rational", "always", "never"};

    std::vector<SellerPlan> plan_menu;
    for (int r = 0; r < n_reports; ++r) {
        for (bool hv : {true, false}) {
            for (bool rk : {true, false}) {
                plan_menu.push_back(SellerPlan{r, hv, rk});
            }
        }
    }

    auto utilities = [&](const SellerPlan& p1, const SellerPlan& p2, const std::string& rule,
                         bool random_assignment) {
        SellerPlan plans[2] = {p1, p2};
        return evaluate_profile(ctx, plans, rule, random_assignment);
    };

    SpeTable table;
    for (const auto& p1 : plan_menu) {
        for (const auto& p2 : plan_menu) {
            for (const auto& rule : rules) {
                for (bool random_assignment : {true, false}) {
                    ProfileOutcome base = utilities(p1, p2, rule, random_assignment);

                    bool survives = true;
                    // seller deviations over full plans
                    for (int deviator = 0; deviator < 2 && survives; ++deviator) {
                        for (const auto& alt : plan_menu) {
                            ProfileOutcome dev = deviator == 0
                                                     ? utilities(alt, p2, rule, random_assignment)
                                                     : utilities(p1, alt, rule, random_assignment);
                            if (strictly_better(dev.sellers[deviator], base.sellers[deviator])) {
                                survives = false;
                                break;
                            }
                        }
                    }
                    // buyer deviations: other rules and the other assignment mode
                    if (survives) {
                        for (const auto& alt_rule : rules) {
                            ProfileOutcome dev = utilities(p1, p2, alt_rule, random_assignment);
                            if (strictly_better(dev.buyer, base.buyer)) {
                                survives = false;
                                break;
                            }
                        }
                    }
                    if (survives) {
                        ProfileOutcome dev = utilities(p1, p2, rule, !random_assignment);
                        if (strictly_better(dev.buyer, base.buyer)) {
                            survives = false;
                        }
                    }
                    // sequential rationality of the rule off path
                    SellerPlan plans[2] = {p1, p2};
                    if (survives && !rule_sequentially_rational(ctx, plans, rule,
                                                                random_assignment)) {
                        survives = false;
                    }

                    bool dominated = false;
                    if (survives) {
                        for (const auto& alt1 : plan_menu) {
                            for (const auto& alt2 : plan_menu) {
                                ProfileOutcome dev =
                                    utilities(alt1, alt2, rule, random_assignment);
                                if (strictly_better(dev.sellers[0], base.sellers[0]) &&
                                    strictly_better(dev.sellers[1], base.sellers[1])) {
                                    dominated = true;
                                    break;
                                }
                            }
                            if (dominated) break;
                        }
                    }

                    const bool truthful_profile =
                        p1.report == 0 && p2.report == 0 && p1.honest_val && p2.honest_val &&
                        p1.reveal_key && p2.reveal_key && rule == "rational" && random_assignment;
                    const bool bad_val_profile =
                        p1.report == 0 && p2.report == 0 && !p1.honest_val && !p2.honest_val &&
                        p1.reveal_key && p2.reveal_key && rule == "rational" && random_assignment;

                    if (truthful_profile) {
                        table.truthful_survives = survives;
                        table.truthful_strong = survives && !dominated;
                    }
                    if (bad_val_profile) {
                        table.bad_val_survives = survives;
                        table.bad_val_flagged = survives && dominated;
                    }
                    if (survives || truthful_profile || bad_val_profile) {
                        SpeRow row;
                        row.profile.report[0] = ctx.report_menu[static_cast<size_t>(p1.report)].kind;
                        row.profile.report[1] = ctx.report_menu[static_cast<size_t>(p2.report)].kind;
                        row.profile.honest_val[0] = p1.honest_val;
                        row.profile.honest_val[1] = p2.honest_val;
                        row.profile.reveal_key[0] = p1.reveal_key;
                        row.profile.reveal_key[1] = p2.reveal_key;
                        row.profile.buyer_rule = rule;
                        row.profile.random_assignment = random_assignment;
                        row.utility_buyer = base.buyer.v;
                        row.utility_sellers[0] = base.sellers[0].v;
                        row.utility_sellers[1] = base.sellers[1].v;
                        row.outcome = base.outcome;
                        row.survives_spe = survives;
                        row.coalition_dominated = dominated;
                        table.rows.push_back(std::move(row));
                    }
                }
            }
        }
    }
    return table;
}

std::vector<SweepRow> deposit_sweep(const contract::CostModel& base,
                                    const std::vector<int64_t>& dep_seller_values,
                                    const std::vector<int64_t>& dep_buyer_values,
                                    const std::vector<int64_t>& attack_values) {
    std::vector<SweepRow> rows;
    for (int64_t ds : dep_seller_values) {
        for (int64_t db : dep_buyer_values) {
            for (int64_t attack : attack_values) {
                contract::CostModel costs = base;
                for (auto& d : costs.dep_sellers) {
                    d = ds;
                }
                costs.dep_buyer = db;
                costs.attack_cost = attack;
                auto check = contract::check_deposit_bounds(costs);
                rows.push_back(SweepRow{ds, db, attack, check.ok, check.slacks});
            }
        }
    }
    return rows;
}

SuiteResult truthfulness_suite(const ScenarioConfig& base, size_t trials) {
    SuiteResult result;
    auto profile = [&](Strategy::Kind kind) {
        Strategy s;
        s.kind = kind;
        if (kind == Strategy::Kind::Permutation) {
            s.sigma.resize(base.model.alphabet_size);
            for (size_t i = 0; i < s.sigma.size(); ++i) s.sigma[i] = static_cast<uint8_t>(i);
            std::swap(s.sigma[0], s.sigma[1]);
        }
        return std::vector<Strategy>{s, s};
    };

    auto truthful = estimate_payment(profile(Strategy::Kind::Truthful), base.model, base.n_tasks,
                                     base.params, trials, derive_seed(base.seed, 11));
    auto constant = estimate_payment(profile(Strategy::Kind::ConstantReport), base.model,
                                     base.n_tasks, base.params, trials, derive_seed(base.seed, 12));
    auto uniform = estimate_payment(profile(Strategy::Kind::UniformRandom), base.model,
                                    base.n_tasks, base.params, trials, derive_seed(base.seed, 13));
    auto collusion = estimate_payment(profile(Strategy::Kind::OrderCollusion), base.model,
                                      base.n_tasks, base.params, trials,
                                      derive_seed(base.seed, 14));
    auto permutation = estimate_payment(profile(Strategy::Kind::Permutation), base.model,
                                        base.n_tasks, base.params, trials,
                                        derive_seed(base.seed, 15));

    // closed-form truthful MIG for the symmetric binary model
    const double eps = base.model.flip_prob;
    const double same_task = (1.0 - eps) * (1.0 - eps) + eps * eps;
    const double expected_mig = same_task - 0.5;

    bool beats_constant = stats::exceeds_by_3se(truthful.payments[0], constant.payments[0]);
    bool beats_uniform = stats::exceeds_by_3se(truthful.payments[0], uniform.payments[0]);
    bool beats_collusion = stats::exceeds_by_3se(truthful.payments[0], collusion.payments[0]);
    bool permutation_equal = stats::within_3se(permutation.payments[0], truthful.payments[0]);
    bool matches_closed_form = stats::within_3se(truthful.mig_sums[0], expected_mig);

    result.passed = beats_constant && beats_uniform && beats_collusion && permutation_equal &&
                    matches_closed_form;
    result.details = Json{
        {"trials", trials},
        {"truthful", Json{{"mean", truthful.payments[0].mean}, {"se", truthful.payments[0].se}}},
        {"constant", Json{{"mean", constant.payments[0].mean}, {"se", constant.payments[0].se}}},
        {"uniform", Json{{"mean", uniform.payments[0].mean}, {"se", uniform.payments[0].se}}},
        {"collusion", Json{{"mean", collusion.payments[0].mean}, {"se", collusion.payments[0].se}}},
        {"permutation",
         Json{{"mean", permutation.payments[0].mean}, {"se", permutation.payments[0].se}}},
        {"truthful_mig", truthful.mig_sums[0].mean},
        {"expected_mig", expected_mig},
        {"beats_constant", beats_constant},
        {"beats_uniform", beats_uniform},
        {"beats_collusion", beats_collusion},
        {"permutation_equal", permutation_equal},
        {"matches_closed_form", matches_closed_form},
    };
    return result;
}

SuiteResult collusion_suite(const ScenarioConfig& base, size_t trials) {
    SuiteResult result;
    Strategy collusion;
    collusion.kind = Strategy::Kind::OrderCollusion;
    std::vector<Strategy> profile = {collusion, collusion};

    auto shared = estimate_payment(profile, base.model, base.n_tasks, base.params, trials,
                                   derive_seed(base.seed, 21), /*share_orders=*/true);
    auto independent = estimate_payment(profile, base.model, base.n_tasks, base.params, trials,
                                        derive_seed(base.seed, 22), /*share_orders=*/false);

    MeanStderr zero{0.0, 0.0, 0};
    bool shared_positive = stats::separation(shared.mig_sums[0], zero) > 3.0;
    bool independent_zero = stats::within_3se(independent.mig_sums[0], 0.0);
    result.passed = shared_positive && independent_zero;
    result.details = Json{
        {"trials", trials},
        {"shared_orders_mig",
         Json{{"mean", shared.mig_sums[0].mean}, {"se", shared.mig_sums[0].se}}},
        {"independent_orders_mig",
         Json{{"mean", independent.mig_sums[0].mean}, {"se", independent.mig_sums[0].se}}},
        {"shared_positive", shared_positive},
        {"independent_zero", independent_zero},
    };
    return result;
}

SuiteResult spe_suite(const ScenarioConfig& base) {
    SuiteResult result;
    SpeOptions options;
    options.seed = derive_seed(base.seed, 31);
    SpeTable table = spe_grid_check(options, base.costs, base.model, base.n_tasks, base.params);
    result.passed = table.truthful_survives && table.truthful_strong && table.bad_val_survives &&
                    table.bad_val_flagged;
    result.details = table.to_json();
    return result;
}

SuiteResult deposit_suite(const ScenarioConfig& base) {
    SuiteResult result;

    // worked reference numbers for the three inequalities
    contract::CostModel reference;
    reference.val_estimate = 10;
    reference.reb_cost = 2;
    reference.pri_cost_buyer = 3;
    reference.con_cost = 1;
    reference.dep_sellers = {5, 5};
    reference.pri_cost_sellers = {0, 0};
    reference.dep_buyer = 9;
    reference.attack_cost = 1000;
    auto check = contract::check_deposit_bounds(reference);
    bool reference_ok =
        check.ok && check.slacks[0] == 13 && check.slacks[1] == 1 && check.slacks[2] == 981;

    contract::CostModel boundary = reference;
    boundary.dep_buyer = 8;
    auto boundary_check = contract::check_deposit_bounds(boundary);
    bool boundary_flips = !boundary_check.ok && boundary_check.slacks[1] == 0 &&
                          boundary_check.slacks[0] > 0 && boundary_check.slacks[2] > 0;

    auto sweep = deposit_sweep(base.costs, {1, 50, 100, 200, 400}, {50, 100, 200, 400},
                               {base.costs.attack_cost});
    Json sweep_json = Json::array();
    for (const auto& row : sweep) {
        sweep_json.push_back(Json{{"dep_seller", row.dep_seller},
                                  {"dep_buyer", row.dep_buyer},
                                  {"attack_cost", row.attack_cost},
                                  {"ok", row.ok},
                                  {"slacks", row.slacks}});
    }

    result.passed = reference_ok && boundary_flips;
    result.details = Json{
        {"reference_slacks", check.slacks},
        {"reference_ok", reference_ok},
        {"boundary_flips", boundary_flips},
        {"sweep", sweep_json},
    };
    return result;
}

}  // namespace infotrade::sim

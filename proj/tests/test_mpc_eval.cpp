#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "infotrade/mpc_eval.hpp"
#include "infotrade/stats.hpp"

using namespace infotrade;
using namespace infotrade::mpc;
using payment::MigKind;
using payment::PaymentParams;
using payment::PriorDistribution;
using payment::Rational;
using payment::ReportKind;
using payment::ReportVector;

namespace {

ReportVector signals(std::vector<uint8_t> s, uint8_t alphabet = 2) {
    ReportVector r;
    r.kind = ReportKind::Signal;
    r.alphabet_size = alphabet;
    r.signals = std::move(s);
    return r;
}

ReportVector random_signals(std::mt19937_64& rng, size_t n, uint8_t alphabet) {
    std::vector<uint8_t> s(n);
    for (auto& v : s) v = static_cast<uint8_t>(rng() % alphabet);
    return signals(std::move(s), alphabet);
}

ReportVector random_forecasts(std::mt19937_64& rng, size_t n, uint8_t alphabet) {
    ReportVector r;
    r.kind = ReportKind::Forecast;
    r.alphabet_size = alphabet;
    for (size_t i = 0; i < n; ++i) {
        std::vector<double> f(alphabet);
        double total = 0.0;
        for (auto& v : f) {
            v = 0.05 + std::generate_canonical<double, 53>(rng);
            total += v;
        }
        for (auto& v : f) v /= total;
        r.forecasts.push_back(std::move(f));
    }
    return r;
}

PriorDistribution bounded_prior(std::mt19937_64& rng, uint8_t alphabet) {
    PriorDistribution prior;
    prior.probs.resize(alphabet);
    double total = 0.0;
    for (auto& p : prior.probs) {
        p = 0.2 + std::generate_canonical<double, 53>(rng);
        total += p;
    }
    for (auto& p : prior.probs) p /= total;
    return prior;
}

}  // namespace

TEST_CASE("sharing reconstructs across party counts") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
        uint64_t x = draw_field(rng);
        for (int n : {2, 3, 5}) {
            auto shares = share(x, n, rng);
            REQUIRE(shares.size() == static_cast<size_t>(n));
            CHECK(reconstruct(shares) == x);
        }
    }
}

TEST_CASE("sharing zero sums to zero") {
    std::mt19937_64 rng(2);
    auto shares = share(0, 2, rng);
    CHECK(add_mod(shares[0].value, shares[1].value) == 0);
}

TEST_CASE("first share is coarsely uniform") {
    std::mt19937_64 rng(3);
    std::vector<size_t> buckets(16, 0);
    for (int trial = 0; trial < 10000; ++trial) {
        auto shares = share(12345, 2, rng);
        auto bucket = static_cast<size_t>(
            (static_cast<unsigned __int128>(shares[0].value) * 16) / kPrime);
        buckets[bucket] += 1;
    }
    CHECK(stats::chi_squared_uniform(buckets) < stats::kChi2Crit15Df001);
}

TEST_CASE("reconstruct matches a direct modular sum and rejects gaps") {
    std::mt19937_64 rng(4);
    std::vector<FieldShare> shares;
    uint64_t expected = 0;
    for (int i = 0; i < 4; ++i) {
        uint64_t v = draw_field(rng);
        expected = add_mod(expected, v);
        shares.push_back(FieldShare{v, i});
    }
    CHECK(reconstruct(shares) == expected);

    std::vector<FieldShare> zeros = {{0, 0}, {0, 1}};
    CHECK(reconstruct(zeros) == 0);

    std::vector<FieldShare> gap = {{1, 0}, {2, 2}};
    CHECK_THROWS_AS(reconstruct(gap), std::invalid_argument);
}

TEST_CASE("dealt triples satisfy the multiplicative relation") {
    TripleDealer dealer(5);
    for (int i = 0; i < 1000; ++i) {
        auto t = dealer.deal(3);
        uint64_t a = 0;
        uint64_t b = 0;
        uint64_t c = 0;
        for (int p = 0; p < 3; ++p) {
            a = add_mod(a, t.a[static_cast<size_t>(p)]);
            b = add_mod(b, t.b[static_cast<size_t>(p)]);
            c = add_mod(c, t.c[static_cast<size_t>(p)]);
        }
        REQUIRE(mul_mod(a, b) == c);
    }
    CHECK(dealer.deal_triples(0, 2).empty());

    TripleDealer d1(100);
    TripleDealer d2(101);
    auto t1 = d1.deal(2);
    auto t2 = d2.deal(2);
    CHECK(t1.a != t2.a);
}

TEST_CASE("secure multiplication is correct and single-use") {
    std::mt19937_64 rng(6);
    TripleDealer dealer(7);
    for (int trial = 0; trial < 1000; ++trial) {
        uint64_t x = draw_field(rng);
        uint64_t y = draw_field(rng);
        auto xs = share(x, 2, rng);
        auto ys = share(y, 2, rng);
        SharedValue xv = {xs[0].value, xs[1].value};
        SharedValue yv = {ys[0].value, ys[1].value};
        auto triple = dealer.deal(2);
        EvalTranscript transcript;
        SharedValue z = secure_multiply(xv, yv, triple, transcript);
        CHECK(add_mod(z[0], z[1]) == mul_mod(x, y));
        CHECK(transcript.opened.size() == 2);

        if (trial == 0) {
            CHECK_THROWS_AS(secure_multiply(xv, yv, triple, transcript), MpcError);
        }
    }
}

TEST_CASE("multiplying a shared zero gives zero") {
    std::mt19937_64 rng(8);
    TripleDealer dealer(9);
    auto xs = share(0, 2, rng);
    auto ys = share(987654321, 2, rng);
    SharedValue xv = {xs[0].value, xs[1].value};
    SharedValue yv = {ys[0].value, ys[1].value};
    auto triple = dealer.deal(2);
    EvalTranscript transcript;
    SharedValue z = secure_multiply(xv, yv, triple, transcript);
    CHECK(add_mod(z[0], z[1]) == 0);
}

TEST_CASE("fixed point encoding wraps negatives") {
    CHECK(decode_signed(encode_fixed(1.5)) == (3 << (kFracBits - 1)));
    CHECK(decode_fixed(encode_fixed(-2.25)) == doctest::Approx(-2.25));
    CHECK(decode_fixed(encode_fixed(0.0)) == 0.0);
    CHECK(decode_signed(sub_mod(0, 5)) == -5);
}

TEST_CASE("trusted evaluation is the exact payment vector") {
    PaymentParams params;
    params.alpha = Rational::from_int(2);
    params.beta = Rational::from_int(1);
    std::vector<ReportVector> reports = {signals({0, 0, 1}), signals({0, 1, 1})};
    auto vals = evaluate_payment_trusted(reports, params);
    REQUIRE(vals.size() == 2);
    CHECK(vals[0].exact == Rational::make(5, 3));
    CHECK(vals[1].exact == Rational::make(5, 3));
}

TEST_CASE("secure corr evaluation equals the trusted path exactly") {
    PaymentParams params;
    params.alpha = Rational::from_int(1);
    params.beta = Rational::from_int(0);
    std::vector<ReportVector> reports = {signals({0, 0, 1}), signals({0, 1, 1})};
    std::mt19937_64 rng(10);
    TripleDealer dealer(11);
    auto secure = evaluate_payment_secure_multi(reports, params, dealer, rng);
    auto trusted = evaluate_payment_trusted(reports, params);
    REQUIRE(secure.payments.size() == 2);
    CHECK(secure.payments[0].exact == trusted[0].exact);
    CHECK(secure.payments[0].exact == Rational::make(1, 3));
}

TEST_CASE("secure corr evaluation matches trusted across a random sweep") {
    std::mt19937_64 rng(12);
    TripleDealer dealer(13);
    PaymentParams params;
    params.alpha = Rational::from_int(100);
    params.beta = Rational::from_int(10);
    for (int trial = 0; trial < 100; ++trial) {
        size_t n = 2 + rng() % 7;
        auto alphabet = static_cast<uint8_t>(2 + rng() % 3);
        size_t sellers = 2 + rng() % 2;
        std::vector<ReportVector> reports;
        for (size_t s = 0; s < sellers; ++s) {
            reports.push_back(random_signals(rng, n, alphabet));
        }
        auto secure = evaluate_payment_secure_multi(reports, params, dealer, rng);
        auto trusted = evaluate_payment_trusted(reports, params);
        for (size_t s = 0; s < sellers; ++s) {
            REQUIRE(secure.payments[s].exact == trusted[s].exact);
        }
    }
}

TEST_CASE("constant equal signals evaluate securely to exactly beta") {
    PaymentParams params;
    params.alpha = Rational::from_int(1);
    params.beta = Rational::from_int(1);
    std::vector<ReportVector> reports = {signals({1, 1, 1}), signals({1, 1, 1})};
    std::mt19937_64 rng(14);
    TripleDealer dealer(15);
    auto secure = evaluate_payment_secure_multi(reports, params, dealer, rng);
    CHECK(secure.payments[0].exact == Rational::from_int(1));
    CHECK(secure.payments[1].exact == Rational::from_int(1));
}

TEST_CASE("secure pearson evaluation tracks trusted within the documented envelope") {
    PaymentParams params;
    params.alpha = Rational::from_int(1);
    params.beta = Rational::from_int(0);
    params.mig = MigKind::Pearson;
    params.prior.probs = {0.5, 0.5};
    std::vector<ReportVector> reports;
    {
        ReportVector p;
        p.kind = ReportKind::Forecast;
        p.alphabet_size = 2;
        p.forecasts = {{1.0, 0.0}, {0.0, 1.0}};
        reports = {p, p};
    }
    std::mt19937_64 rng(16);
    TripleDealer dealer(17);
    auto secure = evaluate_payment_secure_multi(reports, params, dealer, rng);
    // MIG is 3 for the opposed point forecasts on a uniform prior
    CHECK(std::abs(secure.payments[0].real - 3.0) < 1e-3);

    for (int trial = 0; trial < 50; ++trial) {
        size_t n = 2 + rng() % 7;
        auto alphabet = static_cast<uint8_t>(2 + rng() % 3);
        PaymentParams sweep = params;
        sweep.prior = bounded_prior(rng, alphabet);
        std::vector<ReportVector> pair = {random_forecasts(rng, n, alphabet),
                                          random_forecasts(rng, n, alphabet)};
        auto s = evaluate_payment_secure_multi(pair, sweep, dealer, rng);
        auto t = evaluate_payment_trusted(pair, sweep);
        CHECK(std::abs(s.payments[0].real - t[0].real) <= 1e-3);
        CHECK(std::abs(s.payments[1].real - t[1].real) <= 1e-3);
    }
}

TEST_CASE("malformed one-hot inputs abort the stage") {
    PaymentParams params;
    params.alpha = Rational::from_int(1);
    params.beta = Rational::from_int(1);
    std::vector<ReportVector> reports = {signals({0, 1}), signals({1, 0})};
    std::mt19937_64 rng(18);
    auto shared = encode_and_share_reports(reports, 2, nullptr, rng);
    // tamper with one coordinate share: the per-task sum no longer opens to 1
    shared.shares[0][0][0][0] = add_mod(shared.shares[0][0][0][0], 1);
    TripleDealer dealer(19);
    CHECK_THROWS_AS(evaluate_payment_secure(shared, params, dealer), MpcError);
}

TEST_CASE("an undersupplied dealer stops the evaluation") {
    PaymentParams params;
    params.alpha = Rational::from_int(1);
    params.beta = Rational::from_int(1);
    std::vector<ReportVector> reports = {signals({0, 1}), signals({1, 0})};
    std::mt19937_64 rng(20);
    TripleDealer dealer(21, /*budget=*/3);
    CHECK_THROWS_AS(evaluate_payment_secure_multi(reports, params, dealer, rng), MpcError);
}

TEST_CASE("opened multiplication masks look identical across distinct inputs") {
    // two fixed, distinct input sets; every opened coordinate should be
    // indistinguishable between them
    PaymentParams params;
    params.alpha = Rational::from_int(1);
    params.beta = Rational::from_int(1);
    std::vector<ReportVector> set_a = {signals({0, 1, 0}), signals({0, 1, 1})};
    std::vector<ReportVector> set_b = {signals({1, 1, 1}), signals({0, 0, 0})};

    constexpr int kRuns = 10000;
    std::mt19937_64 rng_a(22);
    std::mt19937_64 rng_b(23);
    TripleDealer dealer_a(24);
    TripleDealer dealer_b(25);

    std::vector<std::vector<double>> streams_a;
    std::vector<std::vector<double>> streams_b;
    for (int run = 0; run < kRuns; ++run) {
        auto res_a = evaluate_payment_secure_multi(set_a, params, dealer_a, rng_a);
        auto res_b = evaluate_payment_secure_multi(set_b, params, dealer_b, rng_b);
        if (run == 0) {
            REQUIRE(res_a.transcript.opened.size() == res_b.transcript.opened.size());
            streams_a.resize(res_a.transcript.opened.size());
            streams_b.resize(res_b.transcript.opened.size());
        }
        for (size_t i = 0; i < res_a.transcript.opened.size(); ++i) {
            streams_a[i].push_back(static_cast<double>(res_a.transcript.opened[i]));
            streams_b[i].push_back(static_cast<double>(res_b.transcript.opened[i]));
        }
    }
    for (size_t i = 0; i < streams_a.size(); ++i) {
        CHECK(stats::ks_same_distribution(streams_a[i], streams_b[i]));
    }
}

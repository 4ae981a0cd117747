#include "infotrade/mpc_eval.hpp"

#include <algorithm>
#include <cmath>

namespace infotrade::mpc {

using payment::MigKind;
using payment::PaymentParams;
using payment::PaymentValue;
using payment::Rational;
using payment::ReportKind;
using payment::ReportVector;

uint64_t add_mod(uint64_t a, uint64_t b) {
    uint64_t s = a + b;  // both < 2^61, no overflow
    return s >= kPrime ? s - kPrime : s;
}

uint64_t sub_mod(uint64_t a, uint64_t b) {
    return a >= b ? a - b : a + kPrime - b;
}

uint64_t mul_mod(uint64_t a, uint64_t b) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(a) * b) % kPrime);
}

uint64_t draw_field(std::mt19937_64& rng) {
    for (;;) {
        uint64_t v = rng() >> 3;  // 61 bits
        if (v < kPrime) {
            return v;
        }
    }
}

std::vector<FieldShare> share(uint64_t x, int n_parties, std::mt19937_64& rng) {
    if (n_parties < 2) {
        throw std::invalid_argument("sharing needs at least two parties");
    }
    std::vector<FieldShare> out;
    out.reserve(n_parties);
    uint64_t acc = 0;
    for (int i = 0; i < n_parties - 1; ++i) {
        uint64_t v = draw_field(rng);
        acc = add_mod(acc, v);
        out.push_back(FieldShare{v, i});
    }
    out.push_back(FieldShare{sub_mod(x % kPrime, acc), n_parties - 1});
    return out;
}

uint64_t reconstruct(std::span<const FieldShare> shares) {
    if (shares.empty()) {
        throw std::invalid_argument("no shares");
    }
    std::vector<bool> seen(shares.size(), false);
    uint64_t acc = 0;
    for (const auto& s : shares) {
        if (s.party < 0 || s.party >= static_cast<int>(shares.size()) || seen[s.party]) {
            throw std::invalid_argument("share set does not cover parties 0..n-1");
        }
        seen[s.party] = true;
        acc = add_mod(acc, s.value);
    }
    return acc;
}

BeaverTriple TripleDealer::deal(int n_parties) {
    if (budget_ && dealt_ >= *budget_) {
        throw MpcError("triple dealer exhausted");
    }
    ++dealt_;
    uint64_t a = draw_field(rng_);
    uint64_t b = draw_field(rng_);
    uint64_t c = mul_mod(a, b);
    BeaverTriple t;
    t.a.resize(n_parties);
    t.b.resize(n_parties);
    t.c.resize(n_parties);
    auto split = [&](uint64_t v, std::vector<uint64_t>& dst) {
        uint64_t acc = 0;
        for (int i = 0; i < n_parties - 1; ++i) {
            dst[i] = draw_field(rng_);
            acc = add_mod(acc, dst[i]);
        }
        dst[n_parties - 1] = sub_mod(v, acc);
    };
    split(a, t.a);
    split(b, t.b);
    split(c, t.c);
    return t;
}

std::vector<BeaverTriple> TripleDealer::deal_triples(size_t count, int n_parties) {
    std::vector<BeaverTriple> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        out.push_back(deal(n_parties));
    }
    return out;
}

namespace {

uint64_t open_shared(const SharedValue& v) {
    uint64_t acc = 0;
    for (uint64_t s : v) {
        acc = add_mod(acc, s);
    }
    return acc;
}

SharedValue sv_zero(int n) { return SharedValue(static_cast<size_t>(n), 0); }

void sv_add_inplace(SharedValue& a, const SharedValue& b) {
    for (size_t i = 0; i < a.size(); ++i) {
        a[i] = add_mod(a[i], b[i]);
    }
}

void sv_sub_inplace(SharedValue& a, const SharedValue& b) {
    for (size_t i = 0; i < a.size(); ++i) {
        a[i] = sub_mod(a[i], b[i]);
    }
}

SharedValue sv_scale(const SharedValue& a, uint64_t c) {
    SharedValue out(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        out[i] = mul_mod(a[i], c);
    }
    return out;
}

// Local probabilistic truncation by 2^f for two parties; off by at most one
// unit in the last place except when the uniform share lands within the
// value's range of the field boundary.
SharedValue truncate_local_2p(const SharedValue& z, int f) {
    SharedValue out(2);
    out[0] = z[0] >> f;
    out[1] = sub_mod(0, (kPrime - z[1]) >> f);
    return out;
}

}  // namespace

SharedValue secure_multiply(const SharedValue& x, const SharedValue& y, BeaverTriple& triple,
                            EvalTranscript& transcript) {
    const int n = static_cast<int>(x.size());
    if (y.size() != x.size() || triple.n_parties() != n) {
        throw std::invalid_argument("party count mismatch");
    }
    if (triple.consumed) {
        throw MpcError("beaver triple reused");
    }
    triple.consumed = true;

    SharedValue dx = x;
    SharedValue ey = y;
    for (int i = 0; i < n; ++i) {
        dx[i] = sub_mod(dx[i], triple.a[i]);
        ey[i] = sub_mod(ey[i], triple.b[i]);
    }
    uint64_t d = open_shared(dx);
    uint64_t e = open_shared(ey);
    transcript.opened.push_back(d);
    transcript.opened.push_back(e);

    SharedValue z(triple.c);
    for (int i = 0; i < n; ++i) {
        z[i] = add_mod(z[i], add_mod(mul_mod(d, triple.b[i]), mul_mod(e, triple.a[i])));
    }
    z[0] = add_mod(z[0], mul_mod(d, e));
    return z;
}

uint64_t encode_fixed(double x) {
    double scaled = std::nearbyint(x * static_cast<double>(int64_t{1} << kFracBits));
    auto v = static_cast<int64_t>(scaled);
    return v >= 0 ? static_cast<uint64_t>(v) % kPrime
                  : kPrime - (static_cast<uint64_t>(-v) % kPrime);
}

int64_t decode_signed(uint64_t v) {
    if (v > kPrime / 2) {
        return -static_cast<int64_t>(kPrime - v);
    }
    return static_cast<int64_t>(v);
}

double decode_fixed(uint64_t v, int frac_bits) {
    return static_cast<double>(decode_signed(v)) /
           static_cast<double>(int64_t{1} << frac_bits);
}

SharedReports encode_and_share_reports(std::span<const ReportVector> reports, int n_parties,
                                       const payment::PriorDistribution* prior,
                                       std::mt19937_64& rng) {
    if (reports.size() < 2) {
        throw std::invalid_argument("need at least two sellers");
    }
    SharedReports out;
    out.kind = reports[0].kind;
    out.n_parties = n_parties;
    out.sellers = reports.size();
    out.tasks = reports[0].task_count();
    out.alphabet = reports[0].alphabet_size;
    if (out.kind == ReportKind::Forecast && prior == nullptr) {
        throw std::invalid_argument("forecast sharing needs the prior");
    }

    auto share_value = [&](uint64_t v) {
        std::vector<uint64_t> parts(n_parties);
        auto s = share(v, n_parties, rng);
        for (const auto& fs : s) {
            parts[fs.party] = fs.value;
        }
        return parts;
    };

    for (const auto& report : reports) {
        report.validate();
        if (report.kind != out.kind || report.task_count() != out.tasks ||
            report.alphabet_size != out.alphabet) {
            throw std::invalid_argument("sellers' reports are not homogeneous");
        }
        std::vector<std::vector<std::vector<uint64_t>>> seller_rows;
        seller_rows.reserve(out.tasks);
        for (size_t t = 0; t < out.tasks; ++t) {
            std::vector<std::vector<uint64_t>> row;
            row.reserve(out.alphabet);
            for (uint8_t y = 0; y < out.alphabet; ++y) {
                uint64_t v;
                if (out.kind == ReportKind::Signal) {
                    v = report.signals[t] == y ? 1 : 0;
                } else {
                    double w = report.forecasts[t][y] / std::sqrt(prior->probs[y]);
                    v = encode_fixed(w);
                }
                row.push_back(share_value(v));
            }
            seller_rows.push_back(std::move(row));
        }
        out.shares.push_back(std::move(seller_rows));
    }
    return out;
}

std::vector<PaymentValue> evaluate_payment_trusted(std::span<const ReportVector> reports,
                                                   const PaymentParams& params) {
    return payment::payment_vector(reports, params);
}

namespace {

// Shared dot product of two one-hot or fixed-point rows.
SharedValue shared_dot(const std::vector<std::vector<uint64_t>>& lhs_row,
                       const std::vector<std::vector<uint64_t>>& rhs_row, TripleDealer& dealer,
                       EvalTranscript& transcript, size_t& triples_used, int n_parties) {
    SharedValue acc = sv_zero(n_parties);
    for (size_t y = 0; y < lhs_row.size(); ++y) {
        BeaverTriple t = dealer.deal(n_parties);
        ++triples_used;
        SharedValue prod = secure_multiply(lhs_row[y], rhs_row[y], t, transcript);
        sv_add_inplace(acc, prod);
    }
    return acc;
}

void check_one_hot_inputs(const SharedReports& in, EvalTranscript& transcript) {
    for (size_t s = 0; s < in.sellers; ++s) {
        for (size_t t = 0; t < in.tasks; ++t) {
            SharedValue sum = sv_zero(in.n_parties);
            for (uint8_t y = 0; y < in.alphabet; ++y) {
                sv_add_inplace(sum, in.shares[s][t][y]);
            }
            uint64_t opened = open_shared(sum);
            transcript.opened.push_back(opened);
            if (opened != 1) {
                throw MpcError("malformed one-hot input for seller " + std::to_string(s) +
                               " task " + std::to_string(t));
            }
        }
    }
}

std::vector<PaymentValue> corr_circuit(const SharedReports& in, const PaymentParams& params,
                                       TripleDealer& dealer, EvalTranscript& transcript,
                                       size_t& triples_used) {
    check_one_hot_inputs(in, transcript);
    const int n_parties = in.n_parties;
    const auto n = static_cast<int64_t>(in.tasks);

    // mig_num[i][j] for i < j: integer numerator of MIG over N(N-1)
    std::vector<std::vector<Rational>> mig(in.sellers, std::vector<Rational>(in.sellers));
    for (size_t i = 0; i < in.sellers; ++i) {
        for (size_t j = i + 1; j < in.sellers; ++j) {
            SharedValue numerator = sv_zero(n_parties);
            for (size_t t = 0; t < in.tasks; ++t) {
                for (size_t u = 0; u < in.tasks; ++u) {
                    SharedValue agree = shared_dot(in.shares[i][t], in.shares[j][u], dealer,
                                                   transcript, triples_used, n_parties);
                    // weight: (N-1) on the diagonal, -1 off it
                    uint64_t w = t == u ? static_cast<uint64_t>(n - 1) : kPrime - 1;
                    sv_add_inplace(numerator, sv_scale(agree, w));
                }
            }
            for (uint64_t s : numerator) {
                transcript.output_openings.push_back(s);
            }
            int64_t g = decode_signed(open_shared(numerator));
            mig[i][j] = Rational::make(g, n * (n - 1));
            mig[j][i] = mig[i][j];
        }
    }

    std::vector<PaymentValue> out;
    out.reserve(in.sellers);
    for (size_t i = 0; i < in.sellers; ++i) {
        Rational sum{0, 1};
        for (size_t j = 0; j < in.sellers; ++j) {
            if (j != i) {
                sum = sum + mig[i][j];
            }
        }
        out.push_back(payment::corr_payment_value(sum, params));
    }
    return out;
}

double pearson_pair_mig(const SharedReports& in, size_t seller_a, size_t seller_b,
                        TripleDealer& dealer, EvalTranscript& transcript, size_t& triples_used) {
    const int n_parties = in.n_parties;
    const auto n = static_cast<int64_t>(in.tasks);

    SharedValue g = sv_zero(n_parties);
    for (size_t t = 0; t < in.tasks; ++t) {
        for (size_t u = 0; u < in.tasks; ++u) {
            SharedValue s_tu = shared_dot(in.shares[seller_a][t], in.shares[seller_b][u], dealer,
                                          transcript, triples_used, n_parties);
            if (t == u) {
                // same-task agreements enter linearly at scale 2f
                sv_add_inplace(g, sv_scale(s_tu, static_cast<uint64_t>(2 * (n - 1))));
            } else {
                // rescale to f before squaring so the square sits at 2f
                SharedValue trunc = truncate_local_2p(s_tu, kFracBits);
                BeaverTriple triple = dealer.deal(n_parties);
                ++triples_used;
                SharedValue sq = secure_multiply(trunc, trunc, triple, transcript);
                sv_sub_inplace(g, sq);
            }
        }
    }
    for (uint64_t s : g) {
        transcript.output_openings.push_back(s);
    }
    double g_real = static_cast<double>(decode_signed(open_shared(g))) /
                    static_cast<double>(int64_t{1} << (2 * kFracBits));
    return g_real / static_cast<double>(n * (n - 1)) - 1.0;
}

}  // namespace

SecureEvalResult evaluate_payment_secure(const SharedReports& inputs,
                                         const PaymentParams& params, TripleDealer& dealer) {
    params.validate();
    SecureEvalResult result;
    if (params.mig == MigKind::Corr) {
        if (inputs.kind != ReportKind::Signal) {
            throw std::invalid_argument("corr evaluation needs one-hot signal inputs");
        }
        result.payments =
            corr_circuit(inputs, params, dealer, result.transcript, result.triples_used);
        return result;
    }
    if (inputs.kind != ReportKind::Forecast) {
        throw std::invalid_argument("pearson evaluation needs fixed-point forecast inputs");
    }
    if (inputs.n_parties != 2) {
        throw std::invalid_argument("pearson evaluation runs two-party sessions");
    }
    std::vector<std::vector<double>> mig(inputs.sellers, std::vector<double>(inputs.sellers, 0.0));
    for (size_t i = 0; i < inputs.sellers; ++i) {
        for (size_t j = i + 1; j < inputs.sellers; ++j) {
            mig[i][j] = pearson_pair_mig(inputs, i, j, dealer, result.transcript,
                                         result.triples_used);
            mig[j][i] = mig[i][j];
        }
    }
    for (size_t i = 0; i < inputs.sellers; ++i) {
        double sum = 0.0;
        for (size_t j = 0; j < inputs.sellers; ++j) {
            if (j != i) {
                sum += mig[i][j];
            }
        }
        result.payments.push_back(payment::pearson_payment_value(sum, params));
    }
    return result;
}

SecureEvalResult evaluate_payment_secure_multi(std::span<const ReportVector> reports,
                                               const PaymentParams& params, TripleDealer& dealer,
                                               std::mt19937_64& rng) {
    params.validate();
    if (params.mig == MigKind::Corr) {
        SharedReports shared =
            encode_and_share_reports(reports, static_cast<int>(reports.size()), nullptr, rng);
        return evaluate_payment_secure(shared, params, dealer);
    }

    // Pearson: one two-party session per seller pair, each with fresh shares.
    SecureEvalResult result;
    const size_t sellers = reports.size();
    std::vector<std::vector<double>> mig(sellers, std::vector<double>(sellers, 0.0));
    for (size_t i = 0; i < sellers; ++i) {
        for (size_t j = i + 1; j < sellers; ++j) {
            std::vector<ReportVector> pair = {reports[i], reports[j]};
            SharedReports shared = encode_and_share_reports(pair, 2, &params.prior, rng);
            EvalTranscript sub;
            size_t used = 0;
            mig[i][j] = pearson_pair_mig(shared, 0, 1, dealer, sub, used);
            mig[j][i] = mig[i][j];
            result.triples_used += used;
            result.transcript.opened.insert(result.transcript.opened.end(), sub.opened.begin(),
                                            sub.opened.end());
            result.transcript.output_openings.insert(result.transcript.output_openings.end(),
                                                     sub.output_openings.begin(),
                                                     sub.output_openings.end());
        }
    }
    for (size_t i = 0; i < sellers; ++i) {
        double sum = 0.0;
        for (size_t j = 0; j < sellers; ++j) {
            if (j != i) {
                sum += mig[i][j];
            }
        }
        result.payments.push_back(payment::pearson_payment_value(sum, params));
    }
    return result;
}

}  // namespace infotrade::mpc

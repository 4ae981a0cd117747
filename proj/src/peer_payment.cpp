#include "infotrade/peer_payment.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

namespace infotrade::payment {

namespace {

int64_t narrow(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN) {
        throw std::overflow_error("rational overflow");
    }
    return static_cast<int64_t>(v);
}

Rational normalize(__int128 num, __int128 den) {
    if (den == 0) {
        throw std::invalid_argument("zero denominator");
    }
    if (den < 0) {
        num = -num;
        den = -den;
    }
    __int128 a = num < 0 ? -num : num;
    __int128 b = den;
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    if (a != 0) {
        num /= a;
        den /= a;
    } else {
        den = 1;
    }
    return Rational{narrow(num), narrow(den)};
}

void check_signal_pair(const ReportVector& ra, const ReportVector& rb) {
    if (ra.kind != ReportKind::Signal || rb.kind != ReportKind::Signal) {
        throw std::invalid_argument("mig_corr needs signal reports");
    }
    if (ra.alphabet_size != rb.alphabet_size) {
        throw std::invalid_argument("alphabet mismatch");
    }
    if (ra.signals.size() != rb.signals.size()) {
        throw std::invalid_argument("task count mismatch");
    }
    ra.validate();
    rb.validate();
}

}  // namespace

Rational Rational::make(int64_t num, int64_t den) {
    return normalize(num, den);
}

Rational Rational::operator+(const Rational& o) const {
    return normalize(static_cast<__int128>(num) * o.den + static_cast<__int128>(o.num) * den,
                     static_cast<__int128>(den) * o.den);
}

Rational Rational::operator-(const Rational& o) const {
    return normalize(static_cast<__int128>(num) * o.den - static_cast<__int128>(o.num) * den,
                     static_cast<__int128>(den) * o.den);
}

Rational Rational::operator*(const Rational& o) const {
    return normalize(static_cast<__int128>(num) * o.num, static_cast<__int128>(den) * o.den);
}

int64_t Rational::round_half_even() const {
    int64_t q = num / den;
    int64_t r = num % den;
    if (r < 0) {
        q -= 1;
        r += den;
    }
    // q = floor, r in [0, den); decide between q and q+1
    int64_t twice = 2 * r;
    if (twice > den) return q + 1;
    if (twice < den) return q;
    return (q % 2 == 0) ? q : q + 1;
}

std::string Rational::to_string() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

void ReportVector::validate() const {
    if (task_count() < 2) {
        throw std::invalid_argument("report needs at least two tasks");
    }
    if (alphabet_size < 2) {
        throw std::invalid_argument("alphabet needs at least two symbols");
    }
    if (kind == ReportKind::Signal) {
        for (uint8_t s : signals) {
            if (s >= alphabet_size) {
                throw std::invalid_argument("signal outside alphabet");
            }
        }
    } else {
        for (const auto& f : forecasts) {
            if (f.size() != alphabet_size) {
                throw std::invalid_argument("forecast dimension mismatch");
            }
            double sum = 0.0;
            for (double p : f) {
                if (p < 0.0) {
                    throw std::invalid_argument("negative forecast entry");
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                throw std::invalid_argument("forecast does not sum to one");
            }
        }
    }
}

void PriorDistribution::validate() const {
    if (probs.size() < 2) {
        throw std::invalid_argument("prior needs at least two outcomes");
    }
    double sum = 0.0;
    for (double p : probs) {
        if (p <= 0.0) {
            throw std::invalid_argument("prior entries must be strictly positive");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("prior does not sum to one");
    }
}

void PaymentParams::validate() const {
    if (alpha.num <= 0 || beta.num < 0) {
        throw std::invalid_argument("payment coefficients must be positive");
    }
    if (mig == MigKind::Pearson) {
        prior.validate();
    }
}

Rational mig_corr(const ReportVector& ra, const ReportVector& rb) {
    check_signal_pair(ra, rb);
    const int64_t n = static_cast<int64_t>(ra.signals.size());
    int64_t same = 0;
    int64_t cross = 0;
    for (size_t i = 0; i < ra.signals.size(); ++i) {
        for (size_t j = 0; j < rb.signals.size(); ++j) {
            if (ra.signals[i] == rb.signals[j]) {
                if (i == j) {
                    ++same;
                } else {
                    ++cross;
                }
            }
        }
    }
    // (1/N) same - (1/(N(N-1))) cross over the common denominator N(N-1)
    return Rational::make((n - 1) * same - cross, n * (n - 1));
}

double mig_pearson(const ReportVector& pa, const ReportVector& pb,
                   const PriorDistribution& prior) {
    if (pa.kind != ReportKind::Forecast || pb.kind != ReportKind::Forecast) {
        throw std::invalid_argument("mig_pearson needs forecast reports");
    }
    if (pa.forecasts.size() != pb.forecasts.size()) {
        throw std::invalid_argument("task count mismatch");
    }
    if (pa.alphabet_size != pb.alphabet_size || prior.probs.size() != pa.alphabet_size) {
        throw std::invalid_argument("alphabet mismatch");
    }
    pa.validate();
    pb.validate();
    prior.validate();

    const size_t n = pa.forecasts.size();
    auto agreement = [&](size_t i, size_t j) {
        double s = 0.0;
        for (size_t y = 0; y < prior.probs.size(); ++y) {
            s += pa.forecasts[i][y] * pb.forecasts[j][y] / prior.probs[y];
        }
        return s;
    };

    double same = 0.0;
    double cross = 0.0;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            double s = agreement(i, j);
            if (i == j) {
                same += 2.0 * (s - 1.0);
            } else {
                cross += s * s - 1.0;
            }
        }
    }
    const double dn = static_cast<double>(n);
    return same / dn - cross / (dn * (dn - 1.0));
}

double pay_func(const ReportVector& ra, const ReportVector& rb, const PaymentParams& params) {
    params.validate();
    if (params.mig == MigKind::Corr) {
        return corr_payment_value(mig_corr(ra, rb), params).real;
    }
    return pearson_payment_value(mig_pearson(ra, rb, params.prior), params).real;
}

std::vector<double> pay_vector_multi(std::span<const ReportVector> reports,
                                     const PaymentParams& params) {
    auto values = payment_vector(reports, params);
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& v : values) {
        out.push_back(v.real);
    }
    return out;
}

bool PaymentValue::operator==(const PaymentValue& o) const {
    if (kind != o.kind) return false;
    if (kind == MigKind::Corr) return exact == o.exact;
    return encoded == o.encoded;
}

PaymentValue corr_payment_value(const Rational& mig, const PaymentParams& params) {
    Rational pay = params.alpha * mig + params.beta;
    PaymentValue v;
    v.kind = MigKind::Corr;
    v.exact = pay;
    v.real = pay.to_double();
    v.encoded = (pay * Rational::from_int(int64_t{1} << kValScaleBits)).round_half_even();
    return v;
}

PaymentValue pearson_payment_value(double mig, const PaymentParams& params) {
    PaymentValue v;
    v.kind = MigKind::Pearson;
    v.real = params.alpha.to_double() * mig + params.beta.to_double();
    v.encoded = round_half_even(v.real * static_cast<double>(int64_t{1} << kValScaleBits));
    return v;
}

std::vector<PaymentValue> payment_vector(std::span<const ReportVector> reports,
                                         const PaymentParams& params) {
    params.validate();
    if (reports.size() < 2) {
        throw std::invalid_argument("payment vector needs at least two sellers");
    }
    for (size_t i = 1; i < reports.size(); ++i) {
        if (reports[i].kind != reports[0].kind ||
            reports[i].task_count() != reports[0].task_count()) {
            throw std::invalid_argument("sellers' reports are not homogeneous");
        }
    }
    std::vector<PaymentValue> out;
    out.reserve(reports.size());
    for (size_t i = 0; i < reports.size(); ++i) {
        if (params.mig == MigKind::Corr) {
            Rational sum{0, 1};
            for (size_t j = 0; j < reports.size(); ++j) {
                if (j == i) continue;
                sum = sum + mig_corr(reports[i], reports[j]);
            }
            out.push_back(corr_payment_value(sum, params));
        } else {
            double sum = 0.0;
            for (size_t j = 0; j < reports.size(); ++j) {
                if (j == i) continue;
                sum += mig_pearson(reports[i], reports[j], params.prior);
            }
            out.push_back(pearson_payment_value(sum, params));
        }
    }
    return out;
}

bool payment_values_match(const PaymentValue& a, const PaymentValue& b,
                          int64_t tolerance_encoded) {
    if (a.kind != b.kind) return false;
    if (a.kind == MigKind::Corr) return a.exact == b.exact;
    return std::llabs(a.encoded - b.encoded) <= tolerance_encoded;
}

int64_t to_currency_units(const PaymentValue& v) {
    if (v.kind == MigKind::Corr) {
        return v.exact.round_half_even();
    }
    return round_half_even(v.real);
}

int64_t round_half_even(double x) {
    // nearbyint honors the default FE_TONEAREST mode (ties to even)
    return static_cast<int64_t>(std::nearbyint(x));
}

}  // namespace infotrade::payment

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace infotrade::payment {

// Exact signed rational on int64, always normalized (den > 0, gcd 1).
// Agreement scores have denominator N(N-1) and payments stay far below the
// overflow range; intermediates widen to 128 bits anyway.
struct Rational {
    int64_t num = 0;
    int64_t den = 1;

    static Rational make(int64_t num, int64_t den);
    static Rational from_int(int64_t v) { return Rational{v, 1}; }

    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }

    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
    // Nearest integer, ties to even.
    int64_t round_half_even() const;
    std::string to_string() const;
};

enum class ReportKind { Signal, Forecast };
enum class MigKind { Corr, Pearson };

// One seller's reports over N tasks: symbols from {0..alphabet_size-1} for
// the signal kind, probability vectors over the alphabet for forecasts.
struct ReportVector {
    ReportKind kind = ReportKind::Signal;
    uint8_t alphabet_size = 2;
    std::vector<uint8_t> signals;
    std::vector<std::vector<double>> forecasts;

    size_t task_count() const {
        return kind == ReportKind::Signal ? signals.size() : forecasts.size();
    }
    void validate() const;
};

struct PriorDistribution {
    std::vector<double> probs;
    void validate() const;  // strictly positive, sums to 1 within 1e-9
};

struct PaymentParams {
    Rational alpha = Rational{1, 1};
    Rational beta = Rational{0, 1};
    MigKind mig = MigKind::Corr;
    PriorDistribution prior;  // Pearson only
    void validate() const;
};

// Average same-task agreement minus average cross-task agreement, exact.
Rational mig_corr(const ReportVector& ra, const ReportVector& rb);

// Forecast analogue against a public prior:
//   (1/N) sum_i 2(s_ii - 1)  -  (1/(N(N-1))) sum_{i != j} (s_ij^2 - 1)
// with s_ij = sum_y pa_i(y) pb_j(y) / prior(y).
double mig_pearson(const ReportVector& pa, const ReportVector& pb,
                   const PriorDistribution& prior);

// alpha * MIG + beta.
double pay_func(const ReportVector& ra, const ReportVector& rb, const PaymentParams& params);

// Entry i is alpha * sum_{j != i} MIG(r_i, r_j) + beta.
std::vector<double> pay_vector_multi(std::span<const ReportVector> reports,
                                     const PaymentParams& params);

// Payment value as it circulates through submissions and adjudication.
// Corr payments are exact rationals; Pearson payments are reals carried
// alongside a fixed-point encoding at kValScaleBits.
constexpr int kValScaleBits = 20;

struct PaymentValue {
    MigKind kind = MigKind::Corr;
    Rational exact;       // meaningful for Corr
    double real = 0.0;    // always set
    int64_t encoded = 0;  // round-half-even(real * 2^kValScaleBits)

    bool operator==(const PaymentValue& o) const;
};

PaymentValue corr_payment_value(const Rational& mig, const PaymentParams& params);
PaymentValue pearson_payment_value(double mig, const PaymentParams& params);

// Exact evaluation used as the reference ("trusted") payment path.
std::vector<PaymentValue> payment_vector(std::span<const ReportVector> reports,
                                         const PaymentParams& params);

// Corr values must match exactly; Pearson values match within the given
// encoded-unit tolerance.
bool payment_values_match(const PaymentValue& a, const PaymentValue& b, int64_t tolerance_encoded);

// Integer currency units actually transferred at transaction time.
int64_t to_currency_units(const PaymentValue& v);

int64_t round_half_even(double x);

}  // namespace infotrade::payment

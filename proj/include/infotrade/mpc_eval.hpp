#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "infotrade/peer_payment.hpp"

namespace infotrade::mpc {

// Mersenne prime field for additive sharing; products of fixed-point values
// at 2^20 scale stay far below the modulus.
constexpr uint64_t kPrime = (uint64_t{1} << 61) - 1;
constexpr int kFracBits = 20;

struct MpcError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

uint64_t add_mod(uint64_t a, uint64_t b);
uint64_t sub_mod(uint64_t a, uint64_t b);
uint64_t mul_mod(uint64_t a, uint64_t b);

// Uniform field element via 61-bit rejection sampling.
uint64_t draw_field(std::mt19937_64& rng);

struct FieldShare {
    uint64_t value = 0;
    int party = 0;
};

// Additive sharing: the first n-1 shares are uniform, the last absorbs the
// remainder so all shares sum to x mod p.
std::vector<FieldShare> share(uint64_t x, int n_parties, std::mt19937_64& rng);

// Sum mod p; requires exactly one share per party index 0..n-1.
uint64_t reconstruct(std::span<const FieldShare> shares);

struct BeaverTriple {
    std::vector<uint64_t> a;  // per-party shares
    std::vector<uint64_t> b;
    std::vector<uint64_t> c;  // shares of a*b
    bool consumed = false;
    int n_parties() const { return static_cast<int>(a.size()); }
};

// Trusted correlated-randomness source for the semi-honest protocol. An
// optional budget makes triple exhaustion testable.
class TripleDealer {
  public:
    explicit TripleDealer(uint64_t seed, std::optional<size_t> budget = std::nullopt)
        : rng_(seed), budget_(budget) {}

    BeaverTriple deal(int n_parties);
    std::vector<BeaverTriple> deal_triples(size_t count, int n_parties);
    size_t dealt() const { return dealt_; }

  private:
    std::mt19937_64 rng_;
    std::optional<size_t> budget_;
    size_t dealt_ = 0;
};

// Values opened on the simulated broadcast channel. `opened` holds the
// masked differences (x-a, y-b) from multiplications plus the public input
// well-formedness sums; `output_openings` holds the per-party shares posted
// to reconstruct the final outputs.
struct EvalTranscript {
    std::vector<uint64_t> opened;
    std::vector<uint64_t> output_openings;
};

// One shared value, indexed by party.
using SharedValue = std::vector<uint64_t>;

// Beaver multiplication; opens x-a and y-b into the transcript and marks the
// triple consumed. Reuse raises MpcError.
SharedValue secure_multiply(const SharedValue& x, const SharedValue& y, BeaverTriple& triple,
                            EvalTranscript& transcript);

// Fixed-point embedding with two's-complement style wraparound.
uint64_t encode_fixed(double x);
int64_t decode_signed(uint64_t v);
double decode_fixed(uint64_t v, int frac_bits = kFracBits);

// Secret-shared report inputs. Corr signals become one-hot rows over the
// alphabet with entries in {0,1}; Pearson forecasts become fixed-point rows
// pre-divided by sqrt(prior) so the pairwise products carry the 1/prior
// weight symmetrically.
struct SharedReports {
    payment::ReportKind kind;
    int n_parties = 0;
    size_t sellers = 0;
    size_t tasks = 0;
    uint8_t alphabet = 0;
    // shares[seller][task][symbol][party]
    std::vector<std::vector<std::vector<std::vector<uint64_t>>>> shares;
};

SharedReports encode_and_share_reports(std::span<const payment::ReportVector> reports,
                                       int n_parties, const payment::PriorDistribution* prior,
                                       std::mt19937_64& rng);

// Reference path: the trusted evaluator just computes the payment vector in
// the clear.
std::vector<payment::PaymentValue> evaluate_payment_trusted(
    std::span<const payment::ReportVector> reports, const payment::PaymentParams& params);

struct SecureEvalResult {
    std::vector<payment::PaymentValue> payments;
    EvalTranscript transcript;
    size_t triples_used = 0;
};

// Shared-input evaluation. Corr runs with any party count and reproduces the
// trusted result exactly: pairwise agreement indicators are one-hot dot
// products, the integer numerator is reconstructed publicly and the division
// by N(N-1) plus the affine map happen in the clear. Pearson requires
// n_parties == 2 and stays within 2^-kFracBits * (8 * N * alphabet) of the
// trusted value. Malformed one-hot inputs (a per-task sum that does not open
// to exactly 1) abort the stage.
SecureEvalResult evaluate_payment_secure(const SharedReports& inputs,
                                         const payment::PaymentParams& params,
                                         TripleDealer& dealer);

// Convenience wrapper used by the scenario runner: shares honest inputs and
// evaluates. Corr uses one n-party session across all sellers; Pearson runs
// a two-party session per seller pair.
SecureEvalResult evaluate_payment_secure_multi(std::span<const payment::ReportVector> reports,
                                               const payment::PaymentParams& params,
                                               TripleDealer& dealer, std::mt19937_64& rng);

}  // namespace infotrade::mpc

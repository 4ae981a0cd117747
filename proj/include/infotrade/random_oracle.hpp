#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "infotrade/bytes.hpp"

namespace infotrade::crypto {

using SessionId = std::string;

// Idealized restricted programmable and observable random oracle.
//
// Digest entries form one global list keyed by the query bytes, so that a
// point programmed under one session resolves identically for every later
// querier; the programmed set is keyed by (query, session), so a party
// checking its own session does not see points planted under another
// session id. Cross-session queries (caller != owning session) are logged
// to an adversarial list that `observe` replays in insertion order.
//
// Digests are lazily sampled from a seeded engine, so a fixed seed and a
// fixed query sequence reproduce every digest bit for bit. Not thread-safe;
// each concurrent simulation trial owns a private table.
class OracleTable {
  public:
    explicit OracleTable(uint64_t seed, size_t digest_bits = 256);

    enum class ProgramResult { Ok, Aborted };

    // Returns the stored digest or samples a fresh uniform one. A query on
    // behalf of session `session` made by a different `caller_session` is
    // answered anyway and recorded in the adversarial log.
    Bytes query(const Bytes& q, const SessionId& session, const SessionId& caller_session);
    Bytes query(const Bytes& q, const SessionId& session) { return query(q, session, session); }

    // Fixes a fresh point to `digest`. Aborts if the point already exists,
    // whether sampled or previously programmed.
    ProgramResult program(const Bytes& q, const Bytes& digest, const SessionId& session);

    bool is_programmed(const Bytes& q, const SessionId& session) const;

    const std::vector<std::pair<Bytes, Bytes>>& observe() const { return adversarial_log_; }

    size_t digest_bits() const { return digest_bytes_ * 8; }
    size_t digest_bytes() const { return digest_bytes_; }
    uint64_t seed() const { return seed_; }

    // Draws from the table's seeded engine; also used to sample keys and
    // commitment openings so a whole protocol run replays from one seed.
    Bytes draw(size_t count) { return sample_bytes(rng_, count); }

  private:
    struct Entry {
        Bytes digest;
        SessionId session;
    };

    std::map<Bytes, Entry> entries_;
    std::set<std::pair<Bytes, SessionId>> programmed_;
    std::vector<std::pair<Bytes, Bytes>> adversarial_log_;
    std::mt19937_64 rng_;
    size_t digest_bytes_;
    uint64_t seed_;
};

struct SecretKey {
    Bytes bytes;
};

struct Ciphertext {
    std::vector<Bytes> blocks;
    size_t block_count() const { return blocks.size(); }
};

struct Commitment {
    Bytes digest;
};

struct Opening {
    Bytes randomness;
};

inline bool operator==(const Commitment& a, const Commitment& b) { return a.digest == b.digest; }

constexpr size_t kKeyBytes = 16;  // 128-bit keys and openings
constexpr int kResampleBudget = 64;

// Query encodings. Every query starts with a domain tag byte followed by
// length-prefixed components; the keystream index is a fixed 4-byte
// big-endian integer.
Bytes keystream_query(const Bytes& key, uint32_t index);
Bytes commitment_query(const Bytes& message, const Bytes& opening);

// Samples a key none of whose keystream points (key||i, i in 1..block_count)
// is programmed for `session`. Throws after kResampleBudget failures.
SecretKey keygen(OracleTable& oracle, size_t block_count, const SessionId& session);

// Block cipher in counter style: block i of the ciphertext is
// H(key||i) xor block i of the message. Every block must be exactly one
// digest wide.
Ciphertext encrypt(OracleTable& oracle, const SecretKey& key,
                   const std::vector<Bytes>& message_blocks, const SessionId& session);

// Inverse of encrypt. Returns nullopt when any keystream point is
// programmed for `session`.
std::optional<std::vector<Bytes>> decrypt(OracleTable& oracle, const SecretKey& key,
                                          const Ciphertext& ciphertext, const SessionId& session);

// Commitment is H(message || opening) with a fresh opening sampled so that
// the committed point is not programmed. Same resample budget as keygen.
std::pair<Commitment, Opening> commit(OracleTable& oracle, const Bytes& message,
                                      const SessionId& session);

// 1 iff the digest matches and the committed point is not programmed for
// `session`; 0 is the only failure signal.
bool open_commitment(OracleTable& oracle, const Commitment& com, const Opening& op,
                     const Bytes& message, const SessionId& session);

}  // namespace infotrade::crypto

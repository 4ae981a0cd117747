#include "infotrade/random_oracle.hpp"

#include <stdexcept>

namespace infotrade::crypto {

OracleTable::OracleTable(uint64_t seed, size_t digest_bits)
    : rng_(seed), digest_bytes_(digest_bits / 8), seed_(seed) {
    if (digest_bits == 0 || digest_bits % 8 != 0) {
        throw std::invalid_argument("digest size must be a positive multiple of 8 bits");
    }
}

Bytes OracleTable::query(const Bytes& q, const SessionId& session,
                         const SessionId& caller_session) {
    Bytes digest;
    auto it = entries_.find(q);
    if (it != entries_.end()) {
        digest = it->second.digest;
    } else {
        digest = sample_bytes(rng_, digest_bytes_);
        entries_.emplace(q, Entry{digest, session});
    }
    if (caller_session != session) {
        adversarial_log_.emplace_back(q, digest);
    }
    return digest;
}

OracleTable::ProgramResult OracleTable::program(const Bytes& q, const Bytes& digest,
                                                const SessionId& session) {
    if (digest.size() != digest_bytes_) {
        throw std::invalid_argument("programmed digest has wrong length");
    }
    if (entries_.contains(q)) {
        return ProgramResult::Aborted;
    }
    entries_.emplace(q, Entry{digest, session});
    programmed_.emplace(q, session);
    return ProgramResult::Ok;
}

bool OracleTable::is_programmed(const Bytes& q, const SessionId& session) const {
    return programmed_.contains({q, session});
}

namespace {
constexpr uint8_t kKeystreamTag = 0x4b;
constexpr uint8_t kCommitTag = 0x43;
}  // namespace

Bytes keystream_query(const Bytes& key, uint32_t index) {
    Bytes q;
    q.reserve(1 + 4 + key.size() + 4);
    q.push_back(kKeystreamTag);
    append_framed(q, key);
    append_u32be(q, index);
    return q;
}

Bytes commitment_query(const Bytes& message, const Bytes& opening) {
    Bytes q;
    q.reserve(1 + 8 + message.size() + opening.size());
    q.push_back(kCommitTag);
    append_framed(q, message);
    append_framed(q, opening);
    return q;
}

SecretKey keygen(OracleTable& oracle, size_t block_count, const SessionId& session) {
    if (block_count < 1) {
        throw std::invalid_argument("keygen needs at least one block");
    }
    for (int attempt = 0; attempt < kResampleBudget; ++attempt) {
        Bytes candidate = oracle.draw(kKeyBytes);
        bool clean = true;
        for (uint32_t i = 1; i <= block_count; ++i) {
            if (oracle.is_programmed(keystream_query(candidate, i), session)) {
                clean = false;
                break;
            }
        }
        if (clean) {
            return SecretKey{std::move(candidate)};
        }
    }
    throw std::runtime_error("keygen: resample budget exhausted, oracle keystream saturated");
}

Ciphertext encrypt(OracleTable& oracle, const SecretKey& key,
                   const std::vector<Bytes>& message_blocks, const SessionId& session) {
    Ciphertext out;
    out.blocks.reserve(message_blocks.size());
    for (size_t i = 0; i < message_blocks.size(); ++i) {
        const Bytes& block = message_blocks[i];
        if (block.size() != oracle.digest_bytes()) {
            throw std::invalid_argument("message block has wrong size");
        }
        Bytes pad = oracle.query(keystream_query(key.bytes, static_cast<uint32_t>(i + 1)), session);
        Bytes c(block.size());
        for (size_t j = 0; j < block.size(); ++j) {
            c[j] = block[j] ^ pad[j];
        }
        out.blocks.push_back(std::move(c));
    }
    return out;
}

std::optional<std::vector<Bytes>> decrypt(OracleTable& oracle, const SecretKey& key,
                                          const Ciphertext& ciphertext, const SessionId& session) {
    std::vector<Bytes> message;
    message.reserve(ciphertext.blocks.size());
    for (size_t i = 0; i < ciphertext.blocks.size(); ++i) {
        Bytes point = keystream_query(key.bytes, static_cast<uint32_t>(i + 1));
        Bytes pad = oracle.query(point, session);
        if (oracle.is_programmed(point, session)) {
            return std::nullopt;
        }
        const Bytes& c = ciphertext.blocks[i];
        if (c.size() != oracle.digest_bytes()) {
            throw std::invalid_argument("ciphertext block has wrong size");
        }
        Bytes m(c.size());
        for (size_t j = 0; j < c.size(); ++j) {
            m[j] = c[j] ^ pad[j];
        }
        message.push_back(std::move(m));
    }
    return message;
}

std::pair<Commitment, Opening> commit(OracleTable& oracle, const Bytes& message,
                                      const SessionId& session) {
    for (int attempt = 0; attempt < kResampleBudget; ++attempt) {
        Bytes op = oracle.draw(kKeyBytes);
        Bytes point = commitment_query(message, op);
        if (oracle.is_programmed(point, session)) {
            continue;
        }
        Bytes digest = oracle.query(point, session);
        return {Commitment{std::move(digest)}, Opening{std::move(op)}};
    }
    throw std::runtime_error("commit: resample budget exhausted, oracle saturated");
}

bool open_commitment(OracleTable& oracle, const Commitment& com, const Opening& op,
                     const Bytes& message, const SessionId& session) {
    Bytes point = commitment_query(message, op.randomness);
    Bytes digest = oracle.query(point, session);
    return digest == com.digest && !oracle.is_programmed(point, session);
}

}  // namespace infotrade::crypto

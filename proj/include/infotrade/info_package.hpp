#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "infotrade/bytes.hpp"
#include "infotrade/peer_payment.hpp"

namespace infotrade::goods {

struct Question {
    uint32_t id = 0;
    Bytes payload;
    bool operator==(const Question& o) const { return id == o.id && payload == o.payload; }
};

struct QuestionSet {
    std::vector<Question> questions;
    size_t size() const { return questions.size(); }
    std::vector<uint32_t> ids() const;
};

Bytes encode_question_set(const QuestionSet& qs);
std::optional<QuestionSet> decode_question_set(std::span<const uint8_t> data);

// A seller's good: her assigned question order (by id) plus her reports in
// that order. Forecast coordinates are carried as q32.32 fixed point so the
// byte encoding round-trips exactly.
struct InfoPackage {
    std::vector<uint32_t> question_ids;
    payment::ReportKind kind = payment::ReportKind::Signal;
    uint8_t alphabet_size = 2;
    std::vector<uint8_t> signals;                    // Signal kind
    std::vector<std::vector<uint64_t>> forecasts_q32;  // Forecast kind

    size_t task_count() const { return question_ids.size(); }
    bool operator==(const InfoPackage& o) const;
};

constexpr uint8_t kPackageVersion = 1;
constexpr uint64_t kForecastScale = uint64_t{1} << 32;

// Wire layout: u32 body length, then version byte, u32 task count, the id
// list, kind tag, alphabet size and the report payload (one byte per signal
// or eight bytes per forecast coordinate), zero-padded to a whole number of
// cipher blocks.
Bytes encode_info_package(const InfoPackage& pkg, size_t block_bytes);
std::optional<InfoPackage> decode_info_package(std::span<const uint8_t> data, size_t block_bytes);

// Builds a package from reports given in assigned order; forecasts are
// quantized onto the q32.32 grid with the residual folded into the largest
// coordinate so each row still sums to exactly one.
InfoPackage make_info_package(std::span<const uint32_t> assigned_ids,
                              const payment::ReportVector& reports_in_assigned_order);

// Reports as the payment functions consume them.
payment::ReportVector package_reports(const InfoPackage& pkg);

// Reorders assigned-order reports into ascending-id (canonical) order so
// different sellers' reports line up task by task. Fails when the id list
// has duplicates.
std::optional<payment::ReportVector> realign_reports(const InfoPackage& pkg);

std::vector<Bytes> to_blocks(std::span<const uint8_t> data, size_t block_bytes);
Bytes concat_blocks(const std::vector<Bytes>& blocks);

}  // namespace infotrade::goods

#include "infotrade/info_package.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace infotrade::goods {

using payment::ReportKind;
using payment::ReportVector;

std::vector<uint32_t> QuestionSet::ids() const {
    std::vector<uint32_t> out;
    out.reserve(questions.size());
    for (const auto& q : questions) {
        out.push_back(q.id);
    }
    return out;
}

Bytes encode_question_set(const QuestionSet& qs) {
    Bytes out;
    append_u32be(out, static_cast<uint32_t>(qs.questions.size()));
    for (const auto& q : qs.questions) {
        append_u32be(out, q.id);
        append_framed(out, q.payload);
    }
    return out;
}

std::optional<QuestionSet> decode_question_set(std::span<const uint8_t> data) {
    if (data.size() < 4) return std::nullopt;
    size_t off = 0;
    uint32_t count = read_u32be(data, off);
    off += 4;
    QuestionSet qs;
    qs.questions.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        if (off + 8 > data.size()) return std::nullopt;
        Question q;
        q.id = read_u32be(data, off);
        off += 4;
        uint32_t len = read_u32be(data, off);
        off += 4;
        if (off + len > data.size()) return std::nullopt;
        q.payload.assign(data.begin() + off, data.begin() + off + len);
        off += len;
        qs.questions.push_back(std::move(q));
    }
    if (off != data.size()) return std::nullopt;
    return qs;
}

bool InfoPackage::operator==(const InfoPackage& o) const {
    return question_ids == o.question_ids && kind == o.kind && alphabet_size == o.alphabet_size &&
           signals == o.signals && forecasts_q32 == o.forecasts_q32;
}

Bytes encode_info_package(const InfoPackage& pkg, size_t block_bytes) {
    Bytes body;
    body.push_back(kPackageVersion);
    append_u32be(body, static_cast<uint32_t>(pkg.question_ids.size()));
    for (uint32_t id : pkg.question_ids) {
        append_u32be(body, id);
    }
    body.push_back(pkg.kind == ReportKind::Signal ? 0 : 1);
    body.push_back(pkg.alphabet_size);
    if (pkg.kind == ReportKind::Signal) {
        append_bytes(body, pkg.signals);
    } else {
        for (const auto& row : pkg.forecasts_q32) {
            for (uint64_t v : row) {
                append_u64be(body, v);
            }
        }
    }

    Bytes out;
    append_u32be(out, static_cast<uint32_t>(body.size()));
    append_bytes(out, body);
    while (out.size() % block_bytes != 0) {
        out.push_back(0);
    }
    return out;
}

std::optional<InfoPackage> decode_info_package(std::span<const uint8_t> data,
                                               size_t block_bytes) {
    if (data.size() < 4 || data.size() % block_bytes != 0) return std::nullopt;
    uint32_t body_len = read_u32be(data, 0);
    if (body_len + 4 > data.size()) return std::nullopt;
    std::span<const uint8_t> body = data.subspan(4, body_len);

    size_t off = 0;
    if (body.size() < 1 + 4 || body[off] != kPackageVersion) return std::nullopt;
    off += 1;
    uint32_t n = read_u32be(body, off);
    off += 4;
    if (n < 2 || n > 1u << 20) return std::nullopt;
    if (off + 4ull * n + 2 > body.size()) return std::nullopt;

    InfoPackage pkg;
    pkg.question_ids.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        pkg.question_ids.push_back(read_u32be(body, off));
        off += 4;
    }
    uint8_t kind_tag = body[off++];
    if (kind_tag > 1) return std::nullopt;
    pkg.kind = kind_tag == 0 ? ReportKind::Signal : ReportKind::Forecast;
    pkg.alphabet_size = body[off++];
    if (pkg.alphabet_size < 2 || pkg.alphabet_size > 16) return std::nullopt;

    if (pkg.kind == ReportKind::Signal) {
        if (off + n != body.size()) return std::nullopt;
        pkg.signals.assign(body.begin() + off, body.end());
        for (uint8_t s : pkg.signals) {
            if (s >= pkg.alphabet_size) return std::nullopt;
        }
    } else {
        if (off + 8ull * n * pkg.alphabet_size != body.size()) return std::nullopt;
        pkg.forecasts_q32.reserve(n);
        for (uint32_t t = 0; t < n; ++t) {
            std::vector<uint64_t> row;
            row.reserve(pkg.alphabet_size);
            uint64_t sum = 0;
            for (uint8_t y = 0; y < pkg.alphabet_size; ++y) {
                uint64_t v = read_u64be(body, off);
                off += 8;
                if (v > kForecastScale) return std::nullopt;
                sum += v;
                row.push_back(v);
            }
            if (sum != kForecastScale) return std::nullopt;
            pkg.forecasts_q32.push_back(std::move(row));
        }
    }
    return pkg;
}

InfoPackage make_info_package(std::span<const uint32_t> assigned_ids,
                              const ReportVector& reports) {
    reports.validate();
    if (assigned_ids.size() != reports.task_count()) {
        throw std::invalid_argument("id list and report length differ");
    }
    InfoPackage pkg;
    pkg.question_ids.assign(assigned_ids.begin(), assigned_ids.end());
    pkg.kind = reports.kind;
    pkg.alphabet_size = reports.alphabet_size;
    if (reports.kind == ReportKind::Signal) {
        pkg.signals = reports.signals;
        return pkg;
    }
    for (const auto& f : reports.forecasts) {
        std::vector<uint64_t> row;
        row.reserve(f.size());
        uint64_t total = 0;
        size_t largest = 0;
        for (size_t y = 0; y < f.size(); ++y) {
            auto q = static_cast<uint64_t>(
                std::nearbyint(f[y] * static_cast<double>(kForecastScale)));
            row.push_back(q);
            total += q;
            if (f[y] > f[largest]) largest = y;
        }
        // absorb rounding residue so the row sums to exactly 2^32
        row[largest] += kForecastScale - total;
        pkg.forecasts_q32.push_back(std::move(row));
    }
    return pkg;
}

ReportVector package_reports(const InfoPackage& pkg) {
    ReportVector r;
    r.kind = pkg.kind;
    r.alphabet_size = pkg.alphabet_size;
    if (pkg.kind == ReportKind::Signal) {
        r.signals = pkg.signals;
        return r;
    }
    r.forecasts.reserve(pkg.forecasts_q32.size());
    for (const auto& row : pkg.forecasts_q32) {
        std::vector<double> f;
        f.reserve(row.size());
        for (uint64_t v : row) {
            f.push_back(static_cast<double>(v) / static_cast<double>(kForecastScale));
        }
        r.forecasts.push_back(std::move(f));
    }
    return r;
}

std::optional<ReportVector> realign_reports(const InfoPackage& pkg) {
    std::vector<uint32_t> sorted = pkg.question_ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        return std::nullopt;
    }
    std::map<uint32_t, size_t> rank;
    for (size_t i = 0; i < sorted.size(); ++i) {
        rank[sorted[i]] = i;
    }
    ReportVector assigned = package_reports(pkg);
    ReportVector canonical = assigned;
    for (size_t pos = 0; pos < pkg.question_ids.size(); ++pos) {
        size_t slot = rank[pkg.question_ids[pos]];
        if (assigned.kind == ReportKind::Signal) {
            canonical.signals[slot] = assigned.signals[pos];
        } else {
            canonical.forecasts[slot] = assigned.forecasts[pos];
        }
    }
    return canonical;
}

std::vector<Bytes> to_blocks(std::span<const uint8_t> data, size_t block_bytes) {
    if (data.size() % block_bytes != 0) {
        throw std::invalid_argument("data is not block aligned");
    }
    std::vector<Bytes> blocks;
    blocks.reserve(data.size() / block_bytes);
    for (size_t off = 0; off < data.size(); off += block_bytes) {
        blocks.emplace_back(data.begin() + off, data.begin() + off + block_bytes);
    }
    return blocks;
}

Bytes concat_blocks(const std::vector<Bytes>& blocks) {
    Bytes out;
    for (const auto& b : blocks) {
        append_bytes(out, b);
    }
    return out;
}

}  // namespace infotrade::goods

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forklab/bytes.hpp"

namespace forklab {

// Append-only scenario log. Lines are canonical text so two runs with the
// same config compare byte-for-byte; every piece of AttackOutcome evidence is
// also recorded here.
class EventLog {
public:
    using Field = std::pair<std::string_view, std::string>;

    void set_time_source(std::function<uint64_t()> now) { now_ = std::move(now); }

    void record(std::string_view kind, std::initializer_list<Field> fields);
    void record(std::string_view kind, const std::vector<Field>& fields);

    const std::vector<std::string>& lines() const { return lines_; }
    std::string dump() const;
    Digest digest() const;
    size_t size() const { return lines_.size(); }

private:
    std::function<uint64_t()> now_;
    std::vector<std::string> lines_;
};

// Canonical field-value formatters.
std::string ev_u64(uint64_t v);
std::string ev_i64(int64_t v);
std::string ev_f64(double v);  // fixed 6 decimals
std::string ev_bool(bool v);
std::string ev_hex(const Digest& d);

}  // namespace forklab

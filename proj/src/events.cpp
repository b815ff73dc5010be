#include "forklab/events.hpp"

#include <cstdio>

#include "forklab/crypto.hpp"

namespace forklab {

namespace {

std::string render(uint64_t t, std::string_view kind,
                   std::span<const EventLog::Field> fields) {
    std::string line = "t=" + std::to_string(t) + " ev=" + std::string(kind);
    for (const auto& [k, v] : fields) {
        line += ' ';
        line += k;
        line += '=';
        line += v;
    }
    return line;
}

}  // namespace

void EventLog::record(std::string_view kind, std::initializer_list<Field> fields) {
    std::vector<Field> fs(fields);
    record(kind, fs);
}

void EventLog::record(std::string_view kind, const std::vector<Field>& fields) {
    uint64_t t = now_ ? now_() : 0;
    lines_.push_back(render(t, kind, fields));
}

std::string EventLog::dump() const {
    std::string out;
    for (const auto& line : lines_) {
        out += line;
        out += '\n';
    }
    return out;
}

Digest EventLog::digest() const {
    std::string all = dump();
    return sha256(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(all.data()), all.size()));
}

std::string ev_u64(uint64_t v) {
    return std::to_string(v);
}

std::string ev_i64(int64_t v) {
    return std::to_string(v);
}

std::string ev_f64(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string ev_bool(bool v) {
    return v ? "true" : "false";
}

std::string ev_hex(const Digest& d) {
    return to_hex(d);
}

}  // namespace forklab

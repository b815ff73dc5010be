#include "forklab/protocols/common.hpp"

#include <algorithm>

#include "forklab/codec.hpp"

namespace forklab::protocols {

namespace {
constexpr uint8_t kCounterAdd = 0;
constexpr uint8_t kCounterSet = 1;
constexpr uint8_t kFlipToggle = 0;
constexpr uint8_t kFlipGet = 1;
}  // namespace

EnclaveProgram counter_program(const std::string& name) {
    EnclaveProgram p;
    p.name = name;
    p.mutable_persistent_state = true;
    p.init = [] { return counter_state(0); };
    p.step = [](const State& s, const Input& in, EnclaveContext&) -> StepResult {
        int64_t v = counter_value(s);
        ByteReader r(in);
        uint8_t op = r.u8();
        int64_t arg = r.i64();
        if (op == kCounterAdd) {
            v += arg;
        } else if (op == kCounterSet) {
            v = arg;
        }
        ByteWriter out;
        out.i64(v);
        return {counter_state(v), out.take()};
    };
    return p;
}

Input counter_add(int64_t delta) {
    ByteWriter w;
    w.u8(kCounterAdd).i64(delta);
    return w.take();
}

Input counter_set(int64_t value) {
    ByteWriter w;
    w.u8(kCounterSet).i64(value);
    return w.take();
}

int64_t counter_value(const State& s) {
    ByteReader r(s);
    return r.i64();
}

State counter_state(int64_t value) {
    ByteWriter w;
    w.i64(value);
    return w.take();
}

EnclaveProgram flip_program(const std::string& name) {
    EnclaveProgram p;
    p.name = name;
    p.mutable_persistent_state = true;
    p.init = [] {
        ByteWriter w;
        w.u8(0);
        return w.take();
    };
    p.step = [](const State& s, const Input& in, EnclaveContext&) -> StepResult {
        bool v = flip_value(s);
        ByteReader r(in);
        uint8_t op = r.u8();
        if (op == kFlipToggle) v = !v;
        ByteWriter sw;
        sw.u8(v ? 1 : 0);
        ByteWriter out;
        out.u8(v ? 1 : 0);
        return {sw.take(), out.take()};
    };
    return p;
}

Input flip_toggle() {
    ByteWriter w;
    w.u8(kFlipToggle);
    return w.take();
}

Input flip_get() {
    ByteWriter w;
    w.u8(kFlipGet);
    return w.take();
}

bool flip_value(const State& s) {
    ByteReader r(s);
    return r.u8() != 0;
}

EnclaveProgram mixer_program(const std::string& name) {
    EnclaveProgram p;
    p.name = name;
    p.deterministic = false;
    p.uses_randomness = true;
    p.mutable_persistent_state = false;
    p.init = [] { return State{}; };
    p.step = [](const State& s, const Input& in, EnclaveContext& ctx) -> StepResult {
        ByteReader r(in);
        uint32_t n = r.u32();
        std::vector<Bytes> items;
        items.reserve(n);
        for (uint32_t i = 0; i < n; ++i) items.push_back(r.blob());
        // Fisher-Yates with the enclave's own stream.
        for (size_t i = items.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(ctx.rng().next_below(i));
            std::swap(items[i - 1], items[j]);
        }
        ByteWriter out;
        out.u32(static_cast<uint32_t>(items.size()));
        for (const Bytes& b : items) out.blob(b);
        return {s, out.take()};
    };
    return p;
}

Input mixer_request(const std::vector<Bytes>& items) {
    ByteWriter w;
    w.u32(static_cast<uint32_t>(items.size()));
    for (const Bytes& b : items) w.blob(b);
    return w.take();
}

std::vector<Bytes> mixer_output(const Output& out) {
    ByteReader r(out);
    uint32_t n = r.u32();
    std::vector<Bytes> items;
    for (uint32_t i = 0; i < n; ++i) items.push_back(r.blob());
    return items;
}

// --- SharedNetworkSecret -----------------------------------------------------------

SharedNetworkSecret SharedNetworkSecret::generate(RngStream& rng) {
    SharedNetworkSecret s;
    s.master_seed.resize(32);
    rng.fill(s.master_seed);
    return s;
}

KeyPair SharedNetworkSecret::contract_keypair(ToyCrypto& crypto, const Digest& contract_id) const {
    Digest material = crypto.kdf(master_seed, std::span<const uint8_t>(contract_id.data(), 32));
    return crypto.derive_keypair(std::span<const uint8_t>(material.data(), 32));
}

KeyPair SharedNetworkSecret::io_keypair(ToyCrypto& crypto) const {
    Bytes ctx = to_bytes("consensus-io");
    Digest material = crypto.kdf(master_seed, ctx);
    return crypto.derive_keypair(std::span<const uint8_t>(material.data(), 32));
}

// --- Enrollment -----------------------------------------------------------------

Result<EnrollmentDelivery> enroll(Simulation& sim, const AttestationReport& candidate_report,
                                  const Measurement& network_measurement,
                                  const KeyPair& member_key, const SharedNetworkSecret& secret) {
    if (!sim.tee().verify_attestation(candidate_report))
        return make_error(ErrorCode::AttestationFailed, "invalid attestation report");
    if (!(candidate_report.measurement == network_measurement))
        return make_error(ErrorCode::AttestationFailed, "measurement does not match network program");
    // report_data carries the candidate's enrollment public key.
    ByteReader r(candidate_report.report_data);
    uint64_t candidate_pk = r.u64();
    Digest k = sim.crypto().agree(member_key.sk, candidate_pk);
    Bytes iv = to_bytes("enroll");
    EnrollmentDelivery d;
    d.ciphertext = sim.crypto().aead_encrypt(k, iv, secret.master_seed);
    d.member_pk = member_key.pk;
    (void)sim.ledger().submit_tx(kEnrollFeeTxKind, Bytes{});
    sim.log().record("enroll", {{"candidate_pk", ev_u64(candidate_pk)}});
    return d;
}

Result<Bytes> open_enrollment(const CryptoProvider& crypto, const KeyPair& candidate_key,
                              const EnrollmentDelivery& delivery) {
    Digest k = crypto.agree(candidate_key.sk, delivery.member_pk);
    Bytes iv = to_bytes("enroll");
    auto seed = crypto.aead_decrypt(k, iv, delivery.ciphertext);
    if (!seed.ok()) return make_error(ErrorCode::DecryptFail, "enrollment ciphertext rejected");
    return seed.value();
}

uint64_t count_enroll_fees(const Ledger& ledger) {
    uint64_t fees = 0;
    for (const Block& b : ledger.all_blocks()) {
        for (const Tx& tx : b.txs) {
            if (tx.kind == kEnrollFeeTxKind) ++fees;
        }
    }
    // Pending fees count too; settlement timing is not the point here.
    return fees + ledger.pending_count();
}

// --- SyncTracker -----------------------------------------------------------------

std::vector<Block> SyncTracker::pull(Simulation& sim, Handle h) {
    auto view = sim.read_view(h);
    if (!view.ok()) return {};
    const ChainView& v = view.value();
    uint64_t& last = synced_.try_emplace(h, 0).first->second;
    Digest& tip = tips_.try_emplace(h, sim.ledger().genesis().hash).first->second;
    // Only extend along the branch already processed; a served branch that
    // excludes our prefix cannot be applied to a running state machine.
    if (last > 0 && !v.contains(last, tip)) return {};
    if (v.head_height() <= last) return {};
    auto blocks = v.collect(last + 1, v.head_height());
    if (!blocks.empty()) {
        last = blocks.back().height;
        tip = blocks.back().hash;
    }
    return blocks;
}

uint64_t SyncTracker::last_height(Handle h) const {
    auto it = synced_.find(h);
    return it == synced_.end() ? 0 : it->second;
}

void SyncTracker::migrate(Handle from, Handle to) {
    if (auto it = synced_.find(from); it != synced_.end()) synced_[to] = it->second;
    if (auto it = tips_.find(from); it != tips_.end()) tips_[to] = it->second;
}

void SyncTracker::reset(Handle h, uint64_t height, const Digest& tip) {
    synced_[h] = height;
    tips_[h] = tip;
}

}  // namespace forklab::protocols

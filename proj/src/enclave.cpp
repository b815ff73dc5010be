#include "forklab/enclave.hpp"

#include "forklab/codec.hpp"

namespace forklab {

namespace {

constexpr size_t kReportDataLen = 64;

Bytes pad_report_data(std::span<const uint8_t> data) {
    Bytes out(data.begin(), data.end());
    if (out.size() > kReportDataLen) out.resize(kReportDataLen);
    while (out.size() < kReportDataLen) out.push_back(0);
    return out;
}

Bytes attestation_message(const AttestationReport& r) {
    ByteWriter w;
    w.str("attest").digest(r.measurement.digest).digest(r.platform_attributes).blob(r.report_data);
    return w.take();
}

}  // namespace

Digest state_digest(const CryptoProvider& crypto, const State& s) {
    return crypto.hash(s);
}

const CryptoProvider& EnclaveContext::crypto() const {
    return world_.crypto_;
}

CryptoProvider& EnclaveContext::crypto_mut() {
    return world_.crypto_;
}

KeyPair EnclaveContext::measurement_key() {
    return world_.measurement_key(inst_.measurement);
}

Result<uint64_t> EnclaveContext::read_counter() {
    return world_.read_counter(inst_.platform);
}

Result<uint64_t> EnclaveContext::increment_counter() {
    return world_.increment_counter(inst_.platform);
}

TeeWorld::TeeWorld(CryptoProvider& crypto, uint64_t seed, EventLog* log)
    : crypto_(crypto), log_(log), seed_(seed) {
    RngStream boot(mix_seed(seed, "tee-world"));
    manufacturer_key_ = crypto_.keygen(boot);
}

PlatformId TeeWorld::add_platform(bool counter_enabled) {
    uint64_t id = next_platform_++;
    Platform p;
    p.id = id;
    RngStream r(mix_seed(seed_, "platform-secret", id));
    r.fill(p.master_secret);
    p.counter_enabled = counter_enabled;
    p.counter = 0;
    platforms_.emplace(id, p);
    if (log_) log_->record("platform_added", {{"platform", ev_u64(id)}, {"counter", ev_bool(counter_enabled)}});
    return PlatformId{id};
}

void TeeWorld::set_counter_service(PlatformId platform, bool enabled) {
    this->platform(platform).counter_enabled = enabled;
}

Measurement TeeWorld::register_program(const EnclaveProgram& program) {
    ByteWriter w;
    w.str("program-descriptor").str(program.name).u32(program.version).blob(
        std::span<const uint8_t>(crypto_.hash(program.params).data(), 32));
    Measurement m{crypto_.hash(w.bytes())};

    auto it = by_name_.find(program.name);
    if (it != by_name_.end()) {
        if (it->second == m) return m;  // identical body: idempotent
        throw ForklabError(ErrorCode::DuplicateName,
                           "program name already registered with different body: " + program.name);
    }
    by_name_.emplace(program.name, m);
    programs_.emplace(m, program);
    if (log_)
        log_->record("program_registered",
                     {{"name", program.name}, {"measurement", short_hex(m.digest)}});
    return m;
}

bool TeeWorld::is_registered(const Measurement& m) const {
    return programs_.count(m) > 0;
}

const EnclaveProgram& TeeWorld::program_for(const Measurement& m) const {
    auto it = programs_.find(m);
    if (it == programs_.end()) throw ForklabError(ErrorCode::UnknownMeasurement, "no such program");
    return it->second;
}

Handle TeeWorld::spawn(PlatformId platform_id, const Measurement& m, std::string_view how) {
    auto pit = programs_.find(m);
    if (pit == programs_.end())
        throw ForklabError(ErrorCode::UnknownMeasurement, "launch of unregistered measurement");
    platform(platform_id);  // validates platform id

    Handle h{next_handle_++};
    EnclaveInstance inst(h, platform_id, m, mix_seed(seed_, "enclave-rng", h.value));
    inst.volatile_state = pit->second.init ? pit->second.init() : State{};
    if (pit->second.wants_ephemeral_keys) inst.ephemeral_keypair = crypto_.keygen(inst.rng);
    auto [it, ok] = instances_.emplace(h, std::move(inst));
    (void)ok;
    if (log_)
        log_->record(how, {{"handle", ev_u64(h.value)},
                           {"platform", ev_u64(platform_id.value)},
                           {"measurement", short_hex(m.digest)},
                           {"state", short_hex(crypto_.hash(it->second.volatile_state))}});
    return h;
}

Handle TeeWorld::launch(PlatformId platform_id, const Measurement& m) {
    return spawn(platform_id, m, "launch");
}

Handle TeeWorld::clone_instance(Handle h) {
    const EnclaveInstance& src = instance(h);
    if (!src.live) throw ForklabError(ErrorCode::ProgramFault, "clone of dead instance");
    PlatformId p = src.platform;
    Measurement m = src.measurement;
    return spawn(p, m, "clone");
}

Result<Handle> TeeWorld::clone_instance(Handle h, const SealedBlob& provision) {
    Handle fresh = clone_instance(h);
    auto loaded = load_sealed_state(fresh, provision);
    if (!loaded.ok()) return loaded.error();
    return fresh;
}

Result<Handle> TeeWorld::restart_with(Handle h, const std::optional<SealedBlob>& blob) {
    EnclaveInstance& old = instance(h);
    PlatformId p = old.platform;
    Measurement m = old.measurement;
    old.live = false;
    Handle fresh = spawn(p, m, "restart");
    if (blob) {
        auto loaded = load_sealed_state(fresh, *blob);
        if (!loaded.ok()) return loaded.error();
    }
    if (log_)
        log_->record("restart_complete", {{"old", ev_u64(h.value)},
                                          {"new", ev_u64(fresh.value)},
                                          {"from_blob", blob ? ev_u64(blob->seq_hint) : "none"}});
    return fresh;
}

Output TeeWorld::step(Handle h, const Input& input) {
    EnclaveInstance& inst = instance(h);
    if (!inst.live) throw ForklabError(ErrorCode::ProgramFault, "step on dead instance");
    const EnclaveProgram& prog = programs_.at(inst.measurement);
    EnclaveContext ctx(*this, inst);
    StepResult r = prog.step(inst.volatile_state, input, ctx);
    inst.volatile_state = std::move(r.state);
    if (log_ && !prog.quiet_steps)
        log_->record("step", {{"handle", ev_u64(h.value)},
                              {"input", short_hex(crypto_.hash(input))},
                              {"state", to_hex(crypto_.hash(inst.volatile_state))}});
    return r.output;
}

Digest TeeWorld::sealing_key(const Platform& p, const Measurement& m) const {
    return crypto_.kdf(std::span<const uint8_t>(p.master_secret.data(), 32),
                       std::span<const uint8_t>(m.digest.data(), 32));
}

SealedBlob TeeWorld::seal(Handle h, std::span<const uint8_t> payload) {
    EnclaveInstance& inst = instance(h);
    Platform& p = platform(inst.platform);
    uint64_t seq = seal_seq_[{p.id, inst.measurement}]++;
    ByteWriter ivw;
    ivw.u64(p.id).u64(seq);
    Bytes iv = ivw.take();
    SealedBlob blob;
    blob.ciphertext = crypto_.aead_encrypt(sealing_key(p, inst.measurement), iv, payload);
    blob.platform = p.id;
    blob.measurement = inst.measurement;
    blob.seq_hint = seq;
    if (log_)
        log_->record("seal", {{"handle", ev_u64(h.value)},
                              {"seq", ev_u64(seq)},
                              {"payload", short_hex(crypto_.hash(Bytes(payload.begin(), payload.end())))}});
    return blob;
}

Result<Bytes> TeeWorld::unseal(Handle h, const SealedBlob& blob) {
    EnclaveInstance& inst = instance(h);
    Platform& p = platform(inst.platform);
    ByteWriter ivw;
    ivw.u64(blob.platform).u64(blob.seq_hint);
    // Key is derived from the unsealing instance's own binding; a blob sealed
    // under any other (platform, measurement) fails authentication.
    auto plain = crypto_.aead_decrypt(sealing_key(p, inst.measurement), ivw.bytes(), blob.ciphertext);
    if (!plain.ok()) {
        if (log_) log_->record("unseal_failed", {{"handle", ev_u64(h.value)}, {"seq", ev_u64(blob.seq_hint)}});
        return make_error(ErrorCode::IntegrityFailure, "sealed blob binding mismatch or tampered");
    }
    if (log_) log_->record("unseal", {{"handle", ev_u64(h.value)}, {"seq", ev_u64(blob.seq_hint)}});
    return plain;
}

Result<void> TeeWorld::load_sealed_state(Handle h, const SealedBlob& blob) {
    auto plain = unseal(h, blob);
    if (!plain.ok()) return plain.error();
    EnclaveInstance& inst = instance(h);
    inst.volatile_state = plain.value();
    if (log_)
        log_->record("state_loaded", {{"handle", ev_u64(h.value)},
                                      {"seq", ev_u64(blob.seq_hint)},
                                      {"state", to_hex(crypto_.hash(inst.volatile_state))}});
    return {};
}

AttestationReport TeeWorld::attest(Handle h, std::span<const uint8_t> report_data) {
    EnclaveInstance& inst = instance(h);
    AttestationReport r;
    r.measurement = inst.measurement;
    ByteWriter aw;
    aw.str("platform-attrs").u64(inst.platform.value);
    r.platform_attributes = crypto_.hash(aw.bytes());
    r.report_data = pad_report_data(report_data);
    r.signature = crypto_.sign(manufacturer_key_.sk, attestation_message(r));
    if (log_)
        log_->record("attest", {{"handle", ev_u64(h.value)},
                                {"measurement", short_hex(inst.measurement.digest)}});
    return r;
}

bool TeeWorld::verify_attestation(const AttestationReport& report) const {
    if (!is_registered(report.measurement)) return false;
    return crypto_.verify(manufacturer_key_.pk, attestation_message(report), report.signature);
}

Result<uint64_t> TeeWorld::read_counter(PlatformId platform_id) {
    Platform& p = platform(platform_id);
    if (!p.counter_enabled)
        return make_error(ErrorCode::CounterUnsupported, "counter service disabled on platform");
    return p.counter;
}

Result<uint64_t> TeeWorld::increment_counter(PlatformId platform_id) {
    Platform& p = platform(platform_id);
    if (!p.counter_enabled)
        return make_error(ErrorCode::CounterUnsupported, "counter service disabled on platform");
    ++p.counter;
    if (log_)
        log_->record("counter_increment", {{"platform", ev_u64(p.id)}, {"value", ev_u64(p.counter)}});
    return p.counter;
}

const EnclaveInstance& TeeWorld::inspect(Handle h) const {
    return instance(h);
}

bool TeeWorld::is_live(Handle h) const {
    auto it = instances_.find(h);
    return it != instances_.end() && it->second.live;
}

Digest TeeWorld::state_digest(Handle h) const {
    return crypto_.hash(instance(h).volatile_state);
}

KeyPair TeeWorld::measurement_key(const Measurement& m) {
    auto it = measurement_keys_.find(m);
    if (it != measurement_keys_.end()) return it->second;
    ByteWriter w;
    w.str("measurement-key").digest(m.digest);
    Digest seed = crypto_.hash(w.bytes());
    auto* toy = dynamic_cast<ToyCrypto*>(&crypto_);
    KeyPair kp;
    if (toy) {
        kp = toy->derive_keypair(std::span<const uint8_t>(seed.data(), 32));
    } else {
        RngStream r(mix_seed(seed_, "measurement-key", static_cast<uint64_t>(seed[0]) << 8 | seed[1]));
        kp = crypto_.keygen(r);
    }
    measurement_keys_.emplace(m, kp);
    return kp;
}

EnclaveInstance& TeeWorld::instance(Handle h) {
    auto it = instances_.find(h);
    if (it == instances_.end()) throw ForklabError(ErrorCode::ProgramFault, "unknown handle");
    return it->second;
}

const EnclaveInstance& TeeWorld::instance(Handle h) const {
    auto it = instances_.find(h);
    if (it == instances_.end()) throw ForklabError(ErrorCode::ProgramFault, "unknown handle");
    return it->second;
}

TeeWorld::Platform& TeeWorld::platform(PlatformId p) {
    auto it = platforms_.find(p.value);
    if (it == platforms_.end()) throw ForklabError(ErrorCode::ProgramFault, "unknown platform");
    return it->second;
}

}  // namespace forklab

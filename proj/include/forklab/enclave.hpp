#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "forklab/bytes.hpp"
#include "forklab/crypto.hpp"
#include "forklab/errors.hpp"
#include "forklab/events.hpp"
#include "forklab/rng.hpp"

namespace forklab {

// Identity of an enclave program: hash of the canonical program descriptor
// (name, version, parameter digest). Platform-independent; clones of the same
// program share it and nothing in the TEE layer can tell them apart.
struct Measurement {
    Digest digest{};
    auto operator<=>(const Measurement&) const = default;
};

struct PlatformId {
    uint64_t value = 0;
    auto operator<=>(const PlatformId&) const = default;
};

struct Handle {
    uint64_t value = 0;
    auto operator<=>(const Handle&) const = default;
};

using State = Bytes;
using Input = Bytes;
using Output = Bytes;

class EnclaveContext;

struct StepResult {
    State state;
    Output output;
};

// An enclave program is a transition system: init gives the starting state,
// step consumes one input and produces (next state, output). Programs that
// declare themselves deterministic must not touch the context RNG.
struct EnclaveProgram {
    std::string name;
    uint32_t version = 1;
    Bytes params;
    bool deterministic = true;
    bool uses_randomness = false;
    bool wants_ephemeral_keys = false;
    // Set when the program seals evolving state to disk; the stateless
    // policy refuses to wrap such programs.
    bool mutable_persistent_state = false;
    // Suppresses per-step log lines; block-sync heavy programs log at the
    // protocol level instead.
    bool quiet_steps = false;

    std::function<State()> init;
    std::function<StepResult(const State&, const Input&, EnclaveContext&)> step;
};

// Authenticated ciphertext bound to (platform, measurement) through key
// derivation. The binding fields and seq_hint are host-visible metadata;
// unseal never consults seq_hint — sealing has no freshness.
struct SealedBlob {
    Bytes ciphertext;
    uint64_t platform = 0;
    Measurement measurement;
    uint64_t seq_hint = 0;
};

struct AttestationReport {
    Measurement measurement;
    Digest platform_attributes{};
    Bytes report_data;  // exactly 64 bytes
    Bytes signature;
};

struct EnclaveInstance {
    Handle handle;
    PlatformId platform;
    Measurement measurement;
    State volatile_state;
    std::optional<KeyPair> ephemeral_keypair;
    RngStream rng;
    bool live = true;

    EnclaveInstance(Handle h, PlatformId p, Measurement m, uint64_t rng_seed)
        : handle(h), platform(p), measurement(m), rng(rng_seed) {}
};

class TeeWorld;

// Capabilities visible from inside a program's step function.
class EnclaveContext {
public:
    EnclaveContext(TeeWorld& world, EnclaveInstance& inst) : world_(world), inst_(inst) {}

    RngStream& rng() { return inst_.rng; }
    const CryptoProvider& crypto() const;
    CryptoProvider& crypto_mut();
    const std::optional<KeyPair>& ephemeral_keypair() const { return inst_.ephemeral_keypair; }
    const Measurement& measurement() const { return inst_.measurement; }
    // Identity key shared by every instance of this measurement; models a
    // signing key provisioned through attestation rather than per instance.
    KeyPair measurement_key();
    Result<uint64_t> read_counter();
    Result<uint64_t> increment_counter();

private:
    TeeWorld& world_;
    EnclaveInstance& inst_;
};

// The trusted-hardware side of the simulation: program registry, platforms
// with per-platform master secrets, instance launch/step/seal/unseal,
// attestation, and optional monotonic counters.
class TeeWorld {
public:
    TeeWorld(CryptoProvider& crypto, uint64_t seed, EventLog* log = nullptr);

    PlatformId add_platform(bool counter_enabled = false);
    void set_counter_service(PlatformId platform, bool enabled);

    Measurement register_program(const EnclaveProgram& program);
    bool is_registered(const Measurement& m) const;
    const EnclaveProgram& program_for(const Measurement& m) const;

    Handle launch(PlatformId platform, const Measurement& m);
    // Same-code instance on the same platform; fresh state and fresh
    // ephemeral keys per launch semantics; optionally restores a sealed blob.
    Handle clone_instance(Handle h);
    Result<Handle> clone_instance(Handle h, const SealedBlob& provision);
    // Kills the old handle; the new instance starts from the supplied blob
    // (host's choice — any historical blob for the binding unseals) or init.
    Result<Handle> restart_with(Handle h, const std::optional<SealedBlob>& blob);

    Output step(Handle h, const Input& input);
    SealedBlob seal(Handle h, std::span<const uint8_t> payload);
    Result<Bytes> unseal(Handle h, const SealedBlob& blob);
    // Program-level recovery: volatile state := unseal(blob).
    Result<void> load_sealed_state(Handle h, const SealedBlob& blob);

    AttestationReport attest(Handle h, std::span<const uint8_t> report_data);
    bool verify_attestation(const AttestationReport& report) const;

    Result<uint64_t> read_counter(PlatformId platform);
    Result<uint64_t> increment_counter(PlatformId platform);

    const EnclaveInstance& inspect(Handle h) const;
    bool is_live(Handle h) const;
    Digest state_digest(Handle h) const;
    KeyPair measurement_key(const Measurement& m);

    CryptoProvider& crypto() { return crypto_; }
    const CryptoProvider& crypto() const { return crypto_; }
    EventLog* log() { return log_; }

private:
    friend class EnclaveContext;

    struct Platform {
        uint64_t id;
        Digest master_secret;
        bool counter_enabled;
        uint64_t counter;
    };

    EnclaveInstance& instance(Handle h);
    const EnclaveInstance& instance(Handle h) const;
    Platform& platform(PlatformId p);
    Handle spawn(PlatformId platform, const Measurement& m, std::string_view how);
    Digest sealing_key(const Platform& p, const Measurement& m) const;

    CryptoProvider& crypto_;
    EventLog* log_;
    uint64_t seed_;
    uint64_t next_platform_ = 1;
    uint64_t next_handle_ = 1;
    std::map<uint64_t, Platform> platforms_;
    std::map<std::string, Measurement> by_name_;
    std::map<Measurement, EnclaveProgram> programs_;
    std::map<Handle, EnclaveInstance> instances_;
    std::map<std::pair<uint64_t, Measurement>, uint64_t> seal_seq_;
    std::map<Measurement, KeyPair> measurement_keys_;
    KeyPair manufacturer_key_;
};

Digest state_digest(const CryptoProvider& crypto, const State& s);

}  // namespace forklab

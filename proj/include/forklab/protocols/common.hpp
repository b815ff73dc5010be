#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forklab/host.hpp"
#include "forklab/mitigations.hpp"

namespace forklab::protocols {

// --- Reusable contract programs ---------------------------------------------------

// Deterministic counter: state is a signed 64-bit value, inputs add to or
// set it, output is the new value. Seals evolving state.
EnclaveProgram counter_program(const std::string& name = "counter");
Input counter_add(int64_t delta);
Input counter_set(int64_t value);
int64_t counter_value(const State& s);
State counter_state(int64_t value);

// Single boolean that can be toggled by transaction and read by query.
EnclaveProgram flip_program(const std::string& name = "flip");
Input flip_toggle();
Input flip_get();
bool flip_value(const State& s);

// Stateless mixer: outputs a random permutation of its input items.
EnclaveProgram mixer_program(const std::string& name = "mixer");
Input mixer_request(const std::vector<Bytes>& items);
std::vector<Bytes> mixer_output(const Output& out);

// --- Network-wide secrets and enrollment ----------------------------------------

// Master secret shared among attested enclaves (Phala masterKey, Secret
// consensus seed, Ten master seed); per-contract keys derive from it.
struct SharedNetworkSecret {
    Bytes master_seed;

    static SharedNetworkSecret generate(RngStream& rng);
    KeyPair contract_keypair(ToyCrypto& crypto, const Digest& contract_id) const;
    KeyPair io_keypair(ToyCrypto& crypto) const;  // network-wide request key
};

struct EnrollmentDelivery {
    Bytes ciphertext;   // master seed encrypted to the candidate
    uint64_t member_pk; // sender's key for the agreement
};

// Attestation-gated seed delivery: the member checks the candidate's report
// (valid signature, expected measurement) and encrypts the seed to the
// enrollment key carried in report_data.
Result<EnrollmentDelivery> enroll(Simulation& sim, const AttestationReport& candidate_report,
                                  const Measurement& network_measurement,
                                  const KeyPair& member_key, const SharedNetworkSecret& secret);

Result<Bytes> open_enrollment(const CryptoProvider& crypto, const KeyPair& candidate_key,
                              const EnrollmentDelivery& delivery);

// Fee accounting for enrollment (one fee per enroll call; clones skip it).
inline constexpr const char* kEnrollFeeTxKind = "enroll-fee";
uint64_t count_enroll_fees(const Ledger& ledger);

// --- Block sync -----------------------------------------------------------------

// Tracks how far each instance has seen the chain; pulls only new blocks and
// returns nothing for isolated or disconnected instances.
class SyncTracker {
public:
    std::vector<Block> pull(Simulation& sim, Handle h);
    uint64_t last_height(Handle h) const;
    void migrate(Handle from, Handle to);
    // Resumes sync from a checkpoint: the tip names the block the restored
    // state was taken at.
    void reset(Handle h, uint64_t height, const Digest& tip);

private:
    std::map<Handle, uint64_t> synced_;
    std::map<Handle, Digest> tips_;
};

}  // namespace forklab::protocols

#pragma once

#include "forklab/protocols/common.hpp"

namespace forklab::protocols::ccf {

// Replicated KVS primary: state tracks the current view, the committed tx
// count, and the store; recovery replays the ledger (no sealing).
EnclaveProgram kvs_program();

inline constexpr const char* kPutTxKind = "ccf-put";
inline constexpr const char* kViewChangeTxKind = "ccf-view-change";

Bytes encode_put(const std::string& key, const std::string& value);

// Maps ledger txs into program inputs for replay_recover.
mitigations::TxMapper replay_mapper();

struct CcfView {
    uint64_t view = 0;
    uint64_t primary_id = 0;  // leader elected for this view
    uint64_t committed = 0;
    Digest log_digest{};
};

// Client connect: returns the instance's current view; the client proceeds
// only when it is not behind the view it already knows.
Result<CcfView> ccf_connect(Simulation& sim, Handle h, uint64_t client_cached_view);

// Executes the tx on the instance and appends it to the ledger.
Result<std::string> ccf_submit(Simulation& sim, Handle h, const std::string& key,
                               const std::string& value);

Result<std::string> ccf_get(Simulation& sim, Handle h, const std::string& key);

// View change: the new primary appends a signed view-change marker.
Result<void> ccf_view_change(Simulation& sim, Handle h);

}  // namespace forklab::protocols::ccf

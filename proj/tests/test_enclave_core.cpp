#include "doctest.h"

#include "forklab/enclave.hpp"
#include "forklab/protocols/common.hpp"
#include "forklab/protocols/twilight.hpp"

using namespace forklab;
using namespace forklab::protocols;

namespace {

struct World {
    ToyCrypto crypto;
    EventLog log;
    TeeWorld tee;
    explicit World(uint64_t seed = 1) : tee(crypto, seed, &log) {}
};

}  // namespace

TEST_CASE("register_program: identity is deterministic and platform-independent") {
    World w;
    Measurement m1 = w.tee.register_program(flip_program());
    Measurement m2 = w.tee.register_program(flip_program());  // identical body
    CHECK(m1 == m2);

    Measurement mc = w.tee.register_program(counter_program());
    CHECK_FALSE(mc == m1);

    // Identity does not involve the platform: the same program launched on
    // two platforms attests to the same measurement.
    PlatformId p1 = w.tee.add_platform();
    PlatformId p2 = w.tee.add_platform();
    Handle h1 = w.tee.launch(p1, m1);
    Handle h2 = w.tee.launch(p2, m1);
    CHECK(w.tee.inspect(h1).measurement == w.tee.inspect(h2).measurement);
}

TEST_CASE("register_program: same name with different body is rejected") {
    World w;
    EnclaveProgram a = counter_program("shared-name");
    EnclaveProgram b = counter_program("shared-name");
    b.version = 2;
    w.tee.register_program(a);
    CHECK_THROWS_AS(w.tee.register_program(b), ForklabError);
}

TEST_CASE("launch: init state, fresh ephemeral keys, unknown measurement") {
    World w;
    PlatformId p = w.tee.add_platform();
    Measurement m = w.tee.register_program(twilight::relay_program());

    Handle a = w.tee.launch(p, m);
    Handle b = w.tee.launch(p, m);
    CHECK(a != b);
    CHECK(w.tee.inspect(a).measurement == w.tee.inspect(b).measurement);
    REQUIRE(w.tee.inspect(a).ephemeral_keypair.has_value());
    REQUIRE(w.tee.inspect(b).ephemeral_keypair.has_value());
    CHECK(w.tee.inspect(a).ephemeral_keypair->pk != w.tee.inspect(b).ephemeral_keypair->pk);

    Measurement unregistered;
    unregistered.digest = w.crypto.hash(to_bytes("nope"));
    CHECK_THROWS_AS(w.tee.launch(p, unregistered), ForklabError);
}

TEST_CASE("step: counter transitions and composition") {
    World w;
    PlatformId p = w.tee.add_platform();
    Measurement m = w.tee.register_program(counter_program());
    Handle h = w.tee.launch(p, m);

    w.tee.step(h, counter_set(1));
    w.tee.step(h, counter_add(1));
    CHECK(counter_value(w.tee.inspect(h).volatile_state) == 2);

    // s2 = f(f(s0, i1), i2)
    Handle g = w.tee.launch(p, m);
    w.tee.step(g, counter_add(5));
    w.tee.step(g, counter_add(7));
    CHECK(counter_value(w.tee.inspect(g).volatile_state) == 12);
}

TEST_CASE("step: same seed, same inputs, identical state trace") {
    auto trace = [](uint64_t seed) {
        World w(seed);
        PlatformId p = w.tee.add_platform();
        Measurement m = w.tee.register_program(mixer_program());
        Handle h = w.tee.launch(p, m);
        std::vector<Output> outs;
        for (int i = 0; i < 5; ++i) {
            outs.push_back(w.tee.step(h, mixer_request({to_bytes("a"), to_bytes("b"),
                                                        to_bytes("c"), to_bytes("d")})));
        }
        return outs;
    };
    CHECK(trace(99) == trace(99));
    CHECK(trace(99) != trace(100));
}

TEST_CASE("seal/unseal: round trip, clone access, cross-platform failure") {
    World w;
    PlatformId p1 = w.tee.add_platform();
    PlatformId p2 = w.tee.add_platform();
    Measurement m = w.tee.register_program(counter_program());

    Handle a = w.tee.launch(p1, m);
    w.tee.step(a, counter_set(41));
    SealedBlob blob = w.tee.seal(a, w.tee.inspect(a).volatile_state);

    auto same = w.tee.unseal(a, blob);
    REQUIRE(same.ok());
    CHECK(counter_value(same.value()) == 41);

    // A clone on the same platform shares the sealing key.
    Handle clone = w.tee.clone_instance(a);
    auto via_clone = w.tee.unseal(clone, blob);
    REQUIRE(via_clone.ok());
    CHECK(counter_value(via_clone.value()) == 41);

    // A different platform derives a different sealing key.
    Handle other = w.tee.launch(p2, m);
    auto cross = w.tee.unseal(other, blob);
    REQUIRE_FALSE(cross.ok());
    CHECK(cross.code() == ErrorCode::IntegrityFailure);

    // A different measurement on the same platform cannot unseal either.
    Measurement mf = w.tee.register_program(flip_program());
    Handle fh = w.tee.launch(p1, mf);
    auto wrong_m = w.tee.unseal(fh, blob);
    REQUIRE_FALSE(wrong_m.ok());
    CHECK(wrong_m.code() == ErrorCode::IntegrityFailure);
}

TEST_CASE("unseal: any historical blob restores without error (no freshness)") {
    World w;
    PlatformId p = w.tee.add_platform();
    Measurement m = w.tee.register_program(counter_program());
    Handle h = w.tee.launch(p, m);

    SealedBlob blob0 = w.tee.seal(h, w.tee.inspect(h).volatile_state);  // s0
    w.tee.step(h, counter_add(5));
    SealedBlob blob1 = w.tee.seal(h, w.tee.inspect(h).volatile_state);  // s1
    CHECK(blob1.seq_hint > blob0.seq_hint);

    // Supply blob1 at restart: intended use.
    Handle r1 = w.tee.restart_with(h, blob1).expect("restart with s1");
    CHECK(counter_value(w.tee.inspect(r1).volatile_state) == 5);

    // Supply the earlier blob0: the rollback vector, no error raised.
    Handle r0 = w.tee.restart_with(r1, blob0).expect("restart with s0");
    CHECK(counter_value(w.tee.inspect(r0).volatile_state) == 0);
}

TEST_CASE("property: unseal acceptance is exactly same-(platform,measurement)") {
    World w(7);
    std::vector<PlatformId> platforms = {w.tee.add_platform(), w.tee.add_platform(),
                                         w.tee.add_platform()};
    std::vector<Measurement> programs;
    for (int i = 0; i < 3; ++i)
        programs.push_back(w.tee.register_program(counter_program("counter-" + std::to_string(i))));

    struct Inst {
        Handle h;
        size_t platform;
        size_t program;
    };
    std::vector<Inst> instances;
    for (size_t p = 0; p < platforms.size(); ++p) {
        for (size_t g = 0; g < programs.size(); ++g) {
            instances.push_back({w.tee.launch(platforms[p], programs[g]), p, g});
        }
    }
    RngStream rng(1234);
    for (int round = 0; round < 60; ++round) {
        const Inst& sealer = instances[rng.next_below(instances.size())];
        Bytes payload = w.crypto.random_bytes(rng, 16);
        SealedBlob blob = w.tee.seal(sealer.h, payload);
        for (const Inst& opener : instances) {
            auto r = w.tee.unseal(opener.h, blob);
            bool same_binding =
                opener.platform == sealer.platform && opener.program == sealer.program;
            CHECK(r.ok() == same_binding);
            if (r.ok()) CHECK(r.value() == payload);
        }
    }
}

TEST_CASE("property: unseal acceptance is independent of seq_hint order") {
    World w(8);
    PlatformId p = w.tee.add_platform();
    Measurement m = w.tee.register_program(counter_program());
    Handle h = w.tee.launch(p, m);
    std::vector<SealedBlob> blobs;
    for (int i = 0; i < 10; ++i) {
        w.tee.step(h, counter_add(1));
        blobs.push_back(w.tee.seal(h, w.tee.inspect(h).volatile_state));
    }
    // Present blobs in reversed and shuffled orders; all unseal fine.
    RngStream rng(77);
    for (int round = 0; round < 30; ++round) {
        const SealedBlob& b = blobs[rng.next_below(blobs.size())];
        CHECK(w.tee.unseal(h, b).ok());
    }
    for (auto it = blobs.rbegin(); it != blobs.rend(); ++it) CHECK(w.tee.unseal(h, *it).ok());
}

TEST_CASE("attest: round trip, forgery fails, unregistered measurement fails") {
    World w;
    PlatformId p = w.tee.add_platform();
    Measurement m = w.tee.register_program(flip_program());
    Handle h = w.tee.launch(p, m);

    AttestationReport report = w.tee.attest(h, to_bytes("hello"));
    CHECK(report.report_data.size() == 64);
    CHECK(w.tee.verify_attestation(report));

    AttestationReport forged = report;
    forged.signature[3] ^= 1;
    CHECK_FALSE(w.tee.verify_attestation(forged));

    AttestationReport wrong = report;
    wrong.measurement.digest[0] ^= 1;
    CHECK_FALSE(w.tee.verify_attestation(wrong));
}

TEST_CASE("clone indistinguishability: identical reports for identical report_data") {
    World w;
    PlatformId p = w.tee.add_platform();
    Measurement m = w.tee.register_program(flip_program());
    Handle a = w.tee.launch(p, m);
    Handle b = w.tee.clone_instance(a);

    AttestationReport ra = w.tee.attest(a, to_bytes("same"));
    AttestationReport rb = w.tee.attest(b, to_bytes("same"));
    CHECK(ra.measurement == rb.measurement);
    CHECK(ra.platform_attributes == rb.platform_attributes);
    CHECK(ra.report_data == rb.report_data);
    CHECK(ra.signature == rb.signature);

    // Different platforms are distinguishable through platform attributes.
    PlatformId p2 = w.tee.add_platform();
    Handle c = w.tee.launch(p2, m);
    AttestationReport rc = w.tee.attest(c, to_bytes("same"));
    CHECK(rc.measurement == ra.measurement);
    CHECK(rc.platform_attributes != ra.platform_attributes);
}

TEST_CASE("monotonic counters: base case, sharing, disabled service") {
    World w;
    PlatformId on = w.tee.add_platform(/*counter_enabled=*/true);
    PlatformId off = w.tee.add_platform(/*counter_enabled=*/false);

    CHECK(w.tee.read_counter(on).expect("read") == 0);
    CHECK(w.tee.increment_counter(on).expect("inc") == 1);
    CHECK(w.tee.read_counter(on).expect("read") == 1);

    // Two instances on the platform share one counter.
    Measurement m = w.tee.register_program(flip_program());
    Handle a = w.tee.launch(on, m);
    Handle b = w.tee.clone_instance(a);
    (void)a;
    (void)b;
    CHECK(w.tee.increment_counter(on).expect("inc") == 2);
    CHECK(w.tee.increment_counter(on).expect("inc") == 3);
    CHECK(w.tee.read_counter(on).expect("read") == 3);

    auto r = w.tee.read_counter(off);
    REQUIRE_FALSE(r.ok());
    CHECK(r.code() == ErrorCode::CounterUnsupported);
    CHECK(w.tee.increment_counter(off).code() == ErrorCode::CounterUnsupported);
}

TEST_CASE("restart kills the old handle and regenerates ephemeral keys") {
    World w;
    PlatformId p = w.tee.add_platform();
    Measurement m = w.tee.register_program(twilight::relay_program());
    Handle h = w.tee.launch(p, m);
    uint64_t old_pk = w.tee.inspect(h).ephemeral_keypair->pk;

    Handle fresh = w.tee.restart_with(h, std::nullopt).expect("restart");
    CHECK_FALSE(w.tee.is_live(h));
    CHECK(w.tee.is_live(fresh));
    CHECK(w.tee.inspect(fresh).ephemeral_keypair->pk != old_pk);

    // Restart with a blob from another measurement: binding check.
    Measurement mc = w.tee.register_program(counter_program());
    Handle other = w.tee.launch(p, mc);
    SealedBlob foreign = w.tee.seal(other, w.tee.inspect(other).volatile_state);
    auto bad = w.tee.restart_with(fresh, foreign);
    REQUIRE_FALSE(bad.ok());
    CHECK(bad.code() == ErrorCode::IntegrityFailure);
}

TEST_CASE("two worlds with the same seed produce identical event logs") {
    auto run = [](uint64_t seed) {
        World w(seed);
        PlatformId p = w.tee.add_platform(true);
        Measurement m = w.tee.register_program(counter_program());
        Handle h = w.tee.launch(p, m);
        w.tee.step(h, counter_add(3));
        SealedBlob b = w.tee.seal(h, w.tee.inspect(h).volatile_state);
        (void)w.tee.restart_with(h, b);
        (void)w.tee.increment_counter(p);
        return w.log.dump();
    };
    CHECK(run(5) == run(5));
}

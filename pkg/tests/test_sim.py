"""Session orchestration: transcripts, channels, attacker capabilities."""

import pytest

from pqaka import crypto, sim, wire
from pqaka.rng import SeededRandom


def test_identical_seeds_identical_transcripts():
    lines = []
    for _ in range(2):
        world = sim.make_world("test", seed=0)
        outcome = sim.run_session(world, "supi", rng=SeededRandom(1))
        lines.append(outcome.transcript.to_lines())
    assert lines[0] == lines[1]


def test_honest_supi_session_shape(world, rng):
    outcome = sim.run_session(world, "supi", rng=rng)
    assert outcome.completed
    assert len(outcome.transcript.entries) == 8
    annotations = [e.annotation for e in outcome.transcript.entries]
    assert annotations == [
        "id-request", "id-response", "sn-hn-ident", "auth-vector",
        "challenge", "response", "confirm", "guti-assign"]
    assert outcome.k_seaf_ue == outcome.k_seaf_sn == outcome.k_seaf_hn
    assert outcome.k_seaf_ue is not None
    assert outcome.supi_at_sn == world.ue.supi
    assert outcome.assignment_delivered


def test_honest_guti_session_has_no_c2(world, rng):
    assert sim.run_session(world, "supi", rng=rng).completed
    outcome = sim.run_session(world, "guti", rng=rng)
    assert outcome.completed and outcome.key_source == "guti"
    ch = next(wire.decode(e.data) for e in outcome.transcript.entries
              if e.annotation == "challenge")
    assert ch.c2 is None


def test_guti_mode_without_state_falls_back_to_supi(world, rng):
    outcome = sim.run_session(world, "guti", rng=rng)
    assert outcome.completed and outcome.key_source == "supi"


def test_unknown_guti_triggers_reidentification(world, rng):
    assert sim.run_session(world, "supi", rng=rng).completed
    world.sn.guti_table.clear()     # SN lost the mapping
    outcome = sim.run_session(world, "guti", rng=rng)
    assert outcome.completed and outcome.key_source == "supi"
    annotations = [e.annotation for e in outcome.transcript.entries]
    assert annotations.count("id-request") == 2   # fallback request to the UE


def test_dropped_challenge_aborts_without_commits(world, rng):
    attacker = sim.ScriptedAttacker({"challenge": lambda data, ctx: None})
    outcome = sim.run_session(world, "supi", attacker, rng)
    assert not outcome.completed and outcome.abort_step == "challenge"
    assert world.ue.session_keys is None
    assert world.ue.k_s is None
    assert world.hn.registry[world.ue.supi].k_s is None
    assert world.ue.guti is None


def test_misconfigured_world_raises_setup_error(rng):
    world = sim.make_world("test", seed=0)
    world.hn.sn_allowlist.clear()
    with pytest.raises(sim.SetupError):
        sim.run_session(world, "supi", rng=rng)
    world2 = sim.make_world("test", seed=0)
    world2.ue.pk_h = bytes(32)
    with pytest.raises(sim.SetupError):
        sim.run_session(world2, "supi", rng=rng)
    world3 = sim.make_world("test", seed=0)
    del world3.hn.registry[world3.ue.supi]
    with pytest.raises(sim.SetupError):
        sim.run_session(world3, "supi", rng=rng)


def test_core_channel_cannot_be_tapped():
    channel = sim.Channel(sim.CORE)
    with pytest.raises(sim.ThreatModelViolation):
        channel.add_tap(sim.Attacker())


def test_attacker_act_replay_and_tamper_radio_only(world, rng):
    outcome = sim.run_session(world, "supi", rng=rng)
    radio_entry = outcome.transcript.radio_entries()[1]
    core_entry = next(e for e in outcome.transcript.entries
                      if e.channel == sim.CORE)
    ctx = sim.AttackerContext()
    assert sim.attacker_act(ctx, "replay", entry=radio_entry) == radio_entry.data
    mutated = sim.attacker_act(ctx, "tamper", entry=radio_entry,
                               mutation=lambda d: d[:-1] + b"\x00")
    assert mutated != radio_entry.data
    assert len(ctx.injected) == 2
    for action in ("replay", "tamper"):
        with pytest.raises(sim.ThreatModelViolation):
            sim.attacker_act(ctx, action, entry=core_entry,
                             mutation=lambda d: d)


def test_attacker_act_observe_inject_compromise(world):
    ctx = sim.AttackerContext()
    sim.attacker_act(ctx, "observe", data=b"\x01\x02")
    assert ctx.observed == [b"\x01\x02"]
    assert sim.attacker_act(ctx, "inject", data=b"\x03") == b"\x03"
    sim.attacker_act(ctx, "compromise", target="hn.sk_h", world=world)
    value, when = ctx.compromised["hn.sk_h"]
    assert value == world.hn.kem_pair.sk and when > 0
    sim.attacker_act(ctx, "compromise", target="ue.k", world=world)
    assert ctx.compromised["ue.k"][0] == world.ue.k
    with pytest.raises(AssertionError):
        sim.attacker_act(ctx, "compromise", target="ue.ephemeral", world=world)
    with pytest.raises(ValueError):
        sim.attacker_act(ctx, "nosuch")


def test_compromised_sk_h_opens_recorded_suci(world, rng):
    """Negative control: with sk_H the concealed identifier opens."""
    outcome = sim.run_session(world, "supi", rng=rng)
    ctx = sim.AttackerContext()
    sim.attacker_act(ctx, "compromise", target="hn.sk_h", world=world)
    sk_h = ctx.compromised["hn.sk_h"][0]
    id_resp = next(wire.decode(e.data) for e in outcome.transcript.radio_entries()
                   if e.annotation == "id-response")
    k_s1 = crypto.as_shared_key(
        crypto.kem_decaps(world.suite, sk_h, id_resp.c1))
    supi, _pk_u, _id_sn = wire.unpack_suci_payload(
        crypto.aead_open(k_s1, id_resp.suci_conc))
    assert supi == world.ue.supi


def test_transcript_is_byte_faithful_under_tamper(world, rng):
    tampered = bytearray(64)
    attacker = sim.ScriptedAttacker(
        {"challenge": lambda data, ctx: bytes(tampered)})
    outcome = sim.run_session(world, "supi", attacker, rng)
    entry = next(e for e in outcome.transcript.entries
                 if e.annotation == "challenge")
    assert entry.data == bytes(tampered)        # delivered bytes, not sent ones
    assert not outcome.completed


def test_assignment_envelope_roundtrip():
    k_seaf = SeededRandom(20).bytes(32)
    msg = wire.GutiAssignMsg(guti_new=b"\x05" * 16, r_sn_prime_new=b"\x06" * 32)
    env = sim.seal_assignment(k_seaf, msg)
    assert sim.open_assignment(k_seaf, env) == msg
    assert sim.open_assignment(SeededRandom(21).bytes(32), env) is None


def test_export_transcript_lines(world, rng):
    outcomes = [sim.run_session(world, "supi", rng=rng)]
    lines = sim.export_transcript(outcomes)
    assert len(lines) == 8
    assert all(line.startswith("0 ") for line in lines)


def test_attacker_context_clock_orders_events():
    ctx = sim.AttackerContext()
    ctx.observe(b"a")
    ctx.add_compromised("x", b"b")
    ctx.observe(b"c")
    assert ctx.compromised["x"][1] == 2
    assert ctx.clock == 3

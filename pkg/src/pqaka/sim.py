"""Deterministic two-channel session orchestrator with attacker hooks.

The radio channel routes every message through the attacker's tap, which
may pass, drop, or substitute bytes (substitution covers tamper, replay
and inject). The core channel delivers verbatim, in order, with the
sender's identity attached; it cannot be tapped. Transcripts keep raw
bytes so parser bugs cannot hide attacker effects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from . import crypto, hn as hn_mod, sn as sn_mod, ue as ue_mod, wire
from .crypto import KemSuite, get_suite
from .rng import RandomSource, SeededRandom

RADIO = "radio"
CORE = "core"


class SetupError(Exception):
    """Inconsistent provisioning detected before any message is sent."""


class ThreatModelViolation(Exception):
    """Attempt to tap, replay or tamper the secure core channel."""


@dataclass
class TranscriptEntry:
    step: int
    channel: str
    direction: str
    data: bytes
    annotation: str


class SessionTranscript:
    """Append-only, byte-faithful log of everything crossing a channel."""

    def __init__(self):
        self.entries: list[TranscriptEntry] = []

    def append(self, channel: str, direction: str, data: bytes,
               annotation: str) -> TranscriptEntry:
        entry = TranscriptEntry(
            step=len(self.entries), channel=channel, direction=direction,
            data=bytes(data), annotation=annotation)
        self.entries.append(entry)
        return entry

    def radio_entries(self) -> list[TranscriptEntry]:
        return [e for e in self.entries if e.channel == RADIO]

    def to_lines(self) -> list[str]:
        return [
            f"{e.step} {e.channel} {e.direction} {e.data.hex() or '-'} {e.annotation}"
            for e in self.entries
        ]


@dataclass
class AttackerContext:
    """Accumulated attacker knowledge, with acquisition timestamps."""

    observed: list[bytes] = field(default_factory=list)
    injected: list[bytes] = field(default_factory=list)
    compromised: dict[str, tuple[bytes, int]] = field(default_factory=dict)
    clock: int = 0

    def tick(self) -> int:
        self.clock += 1
        return self.clock

    def observe(self, data: bytes) -> None:
        self.observed.append(bytes(data))
        self.tick()

    def add_compromised(self, name: str, value: bytes) -> None:
        self.compromised[name] = (bytes(value), self.tick())


class Attacker:
    """Base Dolev-Yao attacker: observes everything, changes nothing.

    tap() returns the bytes to deliver, or None to drop the message.
    """

    def __init__(self):
        self.ctx = AttackerContext()

    def tap(self, label: str, data: bytes) -> Optional[bytes]:
        return data


class ScriptedAttacker(Attacker):
    """Per-label handlers: handler(data, ctx) -> delivered bytes or None."""

    def __init__(self, handlers: dict[str, Callable[[bytes, AttackerContext], Optional[bytes]]]):
        super().__init__()
        self.handlers = dict(handlers)

    def tap(self, label: str, data: bytes) -> Optional[bytes]:
        handler = self.handlers.get(label)
        if handler is None:
            return data
        return handler(data, self.ctx)


@dataclass
class Channel:
    kind: str
    attacker: Optional[Attacker] = None

    def add_tap(self, attacker: Attacker) -> None:
        if self.kind == CORE:
            raise ThreatModelViolation("core channel cannot be tapped")
        self.attacker = attacker

    def transmit(self, label: str, data: bytes) -> Optional[bytes]:
        """Returns delivered bytes (None = dropped by the attacker)."""
        if self.kind == CORE or self.attacker is None:
            return data
        self.attacker.ctx.observe(data)
        out = self.attacker.tap(label, data)
        if out is not None and out != data:
            self.attacker.ctx.injected.append(bytes(out))
        return out


# attacker_act compromise targets; mid-session ephemerals are never legal
_COMPROMISE_TARGETS = ("ue.k", "hn.sk_h", "hn.registry")


def attacker_act(
    ctx: AttackerContext,
    action: str,
    *,
    entry: Optional[TranscriptEntry] = None,
    mutation: Optional[Callable[[bytes], bytes]] = None,
    data: Optional[bytes] = None,
    target: Optional[str] = None,
    world: Optional["World"] = None,
) -> Optional[bytes]:
    """One attacker capability application; returns bytes to put on the radio
    (for replay/tamper/inject) or None for knowledge-only actions."""
    if action == "observe":
        assert data is not None
        ctx.observe(data)
        return None
    if action in ("replay", "tamper"):
        assert entry is not None
        if entry.channel != RADIO:
            raise ThreatModelViolation("replay/tamper is radio-only")
        ctx.tick()
        if action == "replay":
            ctx.injected.append(entry.data)
            return entry.data
        mutated = mutation(entry.data)
        ctx.injected.append(mutated)
        return mutated
    if action == "inject":
        assert data is not None
        ctx.injected.append(bytes(data))
        ctx.tick()
        return data
    if action == "compromise":
        assert world is not None and target in _COMPROMISE_TARGETS
        if target == "ue.k":
            ctx.add_compromised("ue.k", world.ue.k)
        elif target == "hn.sk_h":
            ctx.add_compromised("hn.sk_h", world.hn.kem_pair.sk)
        else:
            for supi, rec in world.hn.registry.items():
                ctx.add_compromised(f"registry.{supi}.k", rec.k)
                if rec.k_s is not None:
                    ctx.add_compromised(f"registry.{supi}.k_s", rec.k_s)
        return None
    raise ValueError(f"unknown attacker action {action!r}")


def seal_assignment(k_seaf: bytes, msg: wire.GutiAssignMsg) -> wire.SecureEnvelopeMsg:
    key = crypto.kdf([k_seaf, b"guti-transport"])
    return wire.SecureEnvelopeMsg(ct=crypto.aead_seal(key, wire.encode(msg)))


def open_assignment(k_seaf: bytes, env: wire.SecureEnvelopeMsg) -> Optional[wire.GutiAssignMsg]:
    key = crypto.kdf([k_seaf, b"guti-transport"])
    try:
        inner = wire.decode(crypto.aead_open(key, env.ct))
    except (crypto.AeadFailure, wire.ParseError):
        return None
    if not isinstance(inner, wire.GutiAssignMsg):
        return None
    return inner


@dataclass
class World:
    ue: ue_mod.UeState
    sn: sn_mod.SnState
    hn: hn_mod.HnState
    suite: KemSuite


def make_world(
    suite_name: str = "test",
    seed: int | RandomSource = 0,
    supi: str = "imsi-001010000000001",
    id_sn: str = "sn.example",
    id_hn: str = "hn.example",
    k: Optional[bytes] = None,
) -> World:
    """A consistently provisioned UE/SN/HN triple."""
    rng = seed if isinstance(seed, RandomSource) else SeededRandom(seed)
    suite = get_suite(suite_name)
    if k is None:
        k = rng.bytes(32)
    hn_pair = crypto.kem_keygen(suite, rng)
    hn = hn_mod.HnState(
        id_hn=id_hn, kem=suite, kem_pair=hn_pair,
        registry={supi: hn_mod.SubscriberRecord(supi=supi, k=k)},
        sn_allowlist={id_sn})
    ue = ue_mod.UeState(
        supi=supi, k=k, pk_h=hn_pair.pk, id_hn=id_hn,
        id_sn_expected=id_sn, kem=suite)
    sn = sn_mod.SnState(id_sn=id_sn)
    return World(ue=ue, sn=sn, hn=hn, suite=suite)


def add_subscriber(
    world: World, supi: str, rng: RandomSource,
    id_sn: Optional[str] = None,
) -> ue_mod.UeState:
    """Provision another UE against the same SN/HN pair."""
    k = rng.bytes(32)
    world.hn.registry[supi] = hn_mod.SubscriberRecord(supi=supi, k=k)
    return ue_mod.UeState(
        supi=supi, k=k, pk_h=world.hn.kem_pair.pk, id_hn=world.hn.id_hn,
        id_sn_expected=id_sn or world.sn.id_sn, kem=world.suite)


@dataclass
class SessionOutcome:
    completed: bool
    abort_step: Optional[str]
    transcript: SessionTranscript
    k_seaf_ue: Optional[bytes] = None
    k_seaf_sn: Optional[bytes] = None
    k_seaf_hn: Optional[bytes] = None
    supi_at_sn: Optional[str] = None
    assignment_delivered: bool = False
    key_source: Optional[str] = None     # "supi" or "guti"
    sid: Optional[bytes] = None
    debug: dict = field(default_factory=dict)


def _aborted(transcript: SessionTranscript, step: str) -> SessionOutcome:
    return SessionOutcome(completed=False, abort_step=step, transcript=transcript)


def run_session(
    world: World,
    mode: str = "supi",
    attacker: Optional[Attacker] = None,
    rng: Optional[RandomSource] = None,
) -> SessionOutcome:
    """Drive one full authentication session over both channels."""
    if mode not in ("supi", "guti"):
        raise ValueError("mode must be 'supi' or 'guti'")
    rng = rng or SeededRandom(0)
    ue, sn, hn = world.ue, world.sn, world.hn

    if ue.supi not in hn.registry:
        raise SetupError("UE SUPI not registered at the HN")
    if ue.pk_h != hn.kem_pair.pk:
        raise SetupError("UE holds a stale HN public key")
    if sn.id_sn not in hn.sn_allowlist:
        raise SetupError("SN identity not allowlisted at the HN")
    if ue.id_hn != hn.id_hn:
        raise SetupError("UE and HN disagree on the HN identity")

    t = SessionTranscript()
    radio = Channel(RADIO, attacker)
    core = Channel(CORE)

    def send_radio(direction: str, label: str, msg: wire.Message) -> Optional[wire.Message]:
        data = wire.encode(msg)
        delivered = radio.transmit(label, data)
        if delivered is None:
            t.append(RADIO, direction, b"", f"{label} [dropped]")
            return None
        t.append(RADIO, direction, delivered, label)
        try:
            return wire.decode(delivered)
        except wire.ParseError:
            return None

    def send_core(direction: str, label: str, msg: wire.Message) -> wire.Message:
        data = core.transmit(label, wire.encode(msg))
        t.append(CORE, direction, data, label)
        return wire.decode(data)

    # capture pre-session ratchet view for the adversary-game oracles
    world_debug = {
        "k_s_before": ue.k_s,
        "r_sn_prime_before": ue.r_sn_prime,
        "guti_before": ue.guti,
    }

    # 1. identification request
    req = send_radio("SN->UE", "id-request",
                     wire.IdRequestMsg(force_supi=(mode == "supi")))
    if req is None:
        return _aborted(t, "id-request")

    # 2. identification (GUTI first when allowed, SUPI otherwise or fallback)
    ident: Optional[wire.Message] = None
    if isinstance(req, wire.IdRequestMsg) and not req.force_supi:
        ident = ue_mod.ue_guti_identification(ue)
    if ident is None:
        ident = ue_mod.ue_identification_response(ue, rng)
    label = "guti-id" if isinstance(ident, wire.GutiIdMsg) else "id-response"
    received = send_radio("UE->SN", label, ident)
    if received is None:
        return _aborted(t, label)

    # 3. SN to HN over the core channel
    if isinstance(received, wire.GutiIdMsg):
        resolved = sn_mod.sn_resolve_guti(sn, received, rng)
        if isinstance(resolved, wire.IdRequestMsg):
            # unknown GUTI: request SUPI-based identification
            req2 = send_radio("SN->UE", "id-request", resolved)
            if req2 is None:
                return _aborted(t, "id-request")
            ident = ue_mod.ue_identification_response(ue, rng)
            received = send_radio("UE->SN", "id-response", ident)
            if received is None or not isinstance(received, wire.IdResponseMsg):
                return _aborted(t, "id-response")
        else:
            to_hn, sid = resolved
    if isinstance(received, wire.IdResponseMsg):
        to_hn, sid = sn_mod.sn_forward_identification(sn, received, rng)
    elif not isinstance(received, wire.GutiIdMsg):
        return _aborted(t, "sn-ident")   # attacker substituted a foreign type

    ident_label = "sn-hn-guti" if isinstance(to_hn, wire.GutiSnToHnMsg) else "sn-hn-ident"
    at_hn = send_core("SN->HN", ident_label, to_hn)

    # 4. HN: identification and authentication vector
    try:
        if isinstance(at_hn, wire.SnToHnIdentMsg):
            supi, pk_u, record = hn_mod.hn_identify(hn, at_hn, sn.id_sn)
            bundle = hn_mod.hn_auth_vector(
                hn, record, pk_u, at_hn.r_sn, sn.id_sn, rng, sid)
        else:
            bundle = hn_mod.hn_guti_auth_vector(hn, at_hn, sn.id_sn, sid)
    except hn_mod.IdentificationAbort:
        send_core("HN->SN", "hn-abort", wire.AbortMsg())
        sn.pending.pop(sid, None)
        return _aborted(t, "hn-identify")

    vector = send_core("HN->SN", "auth-vector", bundle.message())

    # 5. challenge to the UE
    challenge = sn_mod.sn_forward_challenge(sn, sid, vector)
    if challenge is None:
        return _aborted(t, "sn-challenge")
    ch = send_radio("SN->UE", "challenge", challenge)
    if ch is None or not isinstance(ch, wire.ChallengeMsg):
        return _aborted(t, "challenge")

    if isinstance(ident, wire.IdResponseMsg) and ue.ephemeral is not None:
        world_debug["sk_u"] = ue.ephemeral.sk
        world_debug["pk_u"] = ue.ephemeral.pk

    # 6. UE response (silent abort emits nothing on the radio)
    response = ue_mod.ue_process_challenge(ue, ch)
    if response is None:
        return _aborted(t, "ue-challenge")
    resp = send_radio("UE->SN", "response", response)
    if resp is None or not isinstance(resp, wire.ResponseMsg):
        return _aborted(t, "response")

    # 7. SN verification, confirmation, GUTI reassignment
    result = sn_mod.sn_verify_response(sn, sid, resp, rng)
    if result is None:
        return _aborted(t, "sn-verify")
    hn_pending = hn.pending.get(sid)
    k_seaf_hn = hn_pending.k_seaf if hn_pending else None
    send_core("SN->HN", "confirm", result.confirm)
    hn_mod.hn_finalize(hn, result.confirm, sid)

    envelope = seal_assignment(result.k_seaf, result.assignment)
    delivered = send_radio("SN->UE", "guti-assign", envelope)
    assignment_delivered = False
    if isinstance(delivered, wire.SecureEnvelopeMsg) and ue.session_keys:
        inner = open_assignment(ue.session_keys.k_seaf, delivered)
        if inner is not None:
            ue_mod.ue_handle_guti_assignment(ue, inner)
            assignment_delivered = True

    return SessionOutcome(
        completed=True, abort_step=None, transcript=t,
        k_seaf_ue=ue.session_keys.k_seaf if ue.session_keys else None,
        k_seaf_sn=result.k_seaf, k_seaf_hn=k_seaf_hn,
        supi_at_sn=result.supi, assignment_delivered=assignment_delivered,
        key_source=ue.last_key_source, sid=sid, debug=world_debug)


def export_transcript(outcomes: list[SessionOutcome]) -> list[str]:
    """Line-delimited records: session step channel direction hex annotation."""
    lines = []
    for i, outcome in enumerate(outcomes):
        for e in outcome.transcript.entries:
            lines.append(
                f"{i} {e.step} {e.channel} {e.direction} "
                f"{e.data.hex() or '-'} {e.annotation}")
    return lines

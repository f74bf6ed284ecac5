"""SN state machine: forwarding, R_SN generation, response check, GUTI table.

Before a valid RES* arrives, SN state for a SUCI-initiated session holds
only (R_SN, HXRES*, AUTN, M); the session key and SUPI come out of one
AEAD open over M, so they cannot be separated or learned early.
"""

from __future__ import annotations

import hmac as _hmac
import logging
import os
from dataclasses import dataclass, field
from typing import Optional, Union

from . import crypto
from .rng import RandomSource
from .wire import (
    Autn,
    ChallengeMsg,
    ConfirmMsg,
    GutiAssignMsg,
    GutiIdMsg,
    GutiSnToHnMsg,
    HnToSnAuthMsg,
    IdRequestMsg,
    IdResponseMsg,
    ResponseMsg,
    SnToHnIdentMsg,
    unpack_m_payload,
    ParseError,
)

log = logging.getLogger(__name__)


@dataclass
class GutiEntry:
    supi: str
    r_sn_prime: bytes


@dataclass
class PendingSession:
    r_sn: bytes
    hxres_star: Optional[bytes] = None
    autn: Optional[Autn] = None
    m: Optional[bytes] = None


@dataclass
class SnState:
    id_sn: str
    guti_table: dict[bytes, GutiEntry] = field(default_factory=dict)
    pending: dict[bytes, PendingSession] = field(default_factory=dict)
    persist_path: Optional[str] = None

    # test hook: skip GUTI reallocation; negative control for linkability
    reuse_guti: bool = False


def _session_id(identifier: bytes, r_sn: bytes) -> bytes:
    return crypto.hash_h([identifier, r_sn])


def sn_forward_identification(
    state: SnState, msg: IdResponseMsg, rng: RandomSource
) -> tuple[SnToHnIdentMsg, bytes]:
    """Draw a fresh R_SN and forward the concealed identifier to the HN."""
    r_sn = rng.bytes(32)
    sid = _session_id(msg.c1, r_sn)
    state.pending[sid] = PendingSession(r_sn=r_sn)
    return SnToHnIdentMsg(
        c1=msg.c1, suci_conc=msg.suci_conc, mac_u=msg.mac_u, r_sn=r_sn), sid


def sn_forward_challenge(
    state: SnState, sid: bytes, msg: HnToSnAuthMsg
) -> Optional[ChallengeMsg]:
    """Retain the checkable material; pass only (AUTN, c2) to the UE."""
    p = state.pending.get(sid)
    if p is None:
        log.info("auth vector for unknown session; dropped")
        return None
    p.hxres_star = msg.hxres_star
    p.autn = msg.autn
    p.m = msg.m
    return ChallengeMsg(autn=msg.autn, c2=msg.c2)


@dataclass
class SnSessionResult:
    supi: str
    k_seaf: bytes
    confirm: ConfirmMsg
    assignment: GutiAssignMsg


def sn_verify_response(
    state: SnState, sid: bytes, msg: ResponseMsg, rng: RandomSource
) -> Optional[SnSessionResult]:
    """HXRES* check, then recover (K_seaf, SUPI) from M in one decryption."""
    p = state.pending.get(sid)
    if p is None or p.hxres_star is None:
        return None
    if not _hmac.compare_digest(
            crypto.hash_h([p.r_sn, msg.res_star]), p.hxres_star):
        del state.pending[sid]
        return None
    f5 = crypto.xor_bytes(p.autn.conc, p.r_sn)
    k3 = crypto.xor_bytes(msg.res_star, f5)
    try:
        k_seaf, supi = unpack_m_payload(crypto.aead_open(k3, p.m))
    except (crypto.AeadFailure, ParseError):
        del state.pending[sid]
        return None
    del state.pending[sid]
    assignment = sn_assign_guti(state, supi, rng)
    return SnSessionResult(
        supi=supi, k_seaf=k_seaf, confirm=ConfirmMsg(ok=True),
        assignment=assignment)


def sn_assign_guti(state: SnState, supi: str, rng: RandomSource) -> GutiAssignMsg:
    """Fresh GUTI (collision-checked) and R_SN'; old GUTI for the SUPI goes."""
    if state.reuse_guti:
        for old, entry in state.guti_table.items():
            if entry.supi == supi:
                return GutiAssignMsg(guti_new=old, r_sn_prime_new=entry.r_sn_prime)
    guti = rng.bytes(16)
    while guti in state.guti_table:
        guti = rng.bytes(16)
    r_sn_prime = rng.bytes(32)
    for old, entry in list(state.guti_table.items()):
        if entry.supi == supi:
            del state.guti_table[old]
    state.guti_table[guti] = GutiEntry(supi=supi, r_sn_prime=r_sn_prime)
    if state.persist_path:
        save_guti_table(state.persist_path, state.guti_table)
    return GutiAssignMsg(guti_new=guti, r_sn_prime_new=r_sn_prime)


def sn_resolve_guti(
    state: SnState, msg: GutiIdMsg, rng: RandomSource
) -> Union[tuple[GutiSnToHnMsg, bytes], IdRequestMsg]:
    """Known GUTI goes to the HN with stored R_SN'; unknown falls back to SUPI."""
    entry = state.guti_table.get(msg.guti)
    if entry is None:
        return IdRequestMsg(force_supi=True)
    r_sn = rng.bytes(32)
    sid = _session_id(msg.guti, r_sn)
    state.pending[sid] = PendingSession(r_sn=r_sn)
    return GutiSnToHnMsg(
        supi=entry.supi, r_sn_prime=entry.r_sn_prime, r_sn=r_sn), sid


# --- GUTI table persistence --------------------------------------------------

def save_guti_table(path: str, table: dict[bytes, GutiEntry]) -> None:
    """One entry per line: hex(GUTI),supi,hex(R_SN'); atomic rewrite."""
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        for guti in sorted(table):
            entry = table[guti]
            fh.write(f"{guti.hex()},{entry.supi},{entry.r_sn_prime.hex()}\n")
    os.replace(tmp, path)


def load_guti_table(path: str) -> dict[bytes, GutiEntry]:
    table: dict[bytes, GutiEntry] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            guti_hex, supi, rsp_hex = line.split(",")
            table[bytes.fromhex(guti_hex)] = GutiEntry(
                supi=supi, r_sn_prime=bytes.fromhex(rsp_hex))
    return table


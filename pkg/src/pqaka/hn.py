"""HN state machine: subscriber registry, identification, vector generation.

Every identification failure raises the same IdentificationAbort with one
fixed code, so the SN (and anything observing the core channel) cannot
tell the causes apart.
"""

from __future__ import annotations

import hmac as _hmac
import logging
import os
from dataclasses import dataclass, field
from typing import Optional

from . import crypto
from .crypto import KemKeyPair, KemSuite
from .rng import RandomSource
from .wire import (
    Autn,
    ConfirmMsg,
    GutiSnToHnMsg,
    HnToSnAuthMsg,
    SnToHnIdentMsg,
    pack_m_payload,
    unpack_suci_payload,
    ParseError,
)

log = logging.getLogger(__name__)

ABORT_CODE = 0xFF


class IdentificationAbort(Exception):
    """Generic abort; the code is identical for every failure cause."""

    def __init__(self):
        super().__init__("identification aborted")
        self.code = ABORT_CODE


@dataclass
class SubscriberRecord:
    supi: str
    k: bytes
    k_s: Optional[bytes] = None
    k_s_staged: Optional[bytes] = None


@dataclass
class PendingAuth:
    xres_star: bytes
    k_seaf: bytes
    supi: str


@dataclass
class HnState:
    id_hn: str
    kem: KemSuite
    kem_pair: KemKeyPair                      # sk_H never serialized
    registry: dict[str, SubscriberRecord] = field(default_factory=dict)
    sn_allowlist: set[str] = field(default_factory=set)
    pending: dict[bytes, PendingAuth] = field(default_factory=dict)
    persist_path: Optional[str] = None

    # test hook for the compromised-SN scenario; never set in honest runs
    skip_id_sn_check: bool = False


def session_id(identifier: bytes, r_sn: bytes) -> bytes:
    """Deterministic pending-map key: hash of (c1 or GUTI) and R_SN."""
    return crypto.hash_h([identifier, r_sn])


def hn_identify(
    state: HnState, msg: SnToHnIdentMsg, claimed_id_sn: str
) -> tuple[str, bytes, SubscriberRecord]:
    """Recover (SUPI, pk_U) from the concealed identifier, or abort."""
    try:
        k_s1 = crypto.as_shared_key(
            crypto.kem_decaps(state.kem, state.kem_pair.sk, msg.c1))
        plain = crypto.aead_open(k_s1, msg.suci_conc)
        supi, pk_u, id_sn = unpack_suci_payload(plain)
    except (crypto.CryptoError, crypto.AeadFailure, ParseError):
        raise IdentificationAbort() from None
    if not _hmac.compare_digest(crypto.hmac_tag(k_s1, msg.suci_conc), msg.mac_u):
        raise IdentificationAbort()
    if not state.skip_id_sn_check:
        if id_sn != claimed_id_sn or claimed_id_sn not in state.sn_allowlist:
            raise IdentificationAbort()
    record = state.registry.get(supi)
    if record is None:
        raise IdentificationAbort()
    return supi, pk_u, record


@dataclass(frozen=True)
class AuthVectorBundle:
    autn: Autn
    hxres_star: bytes
    m: bytes
    c2: Optional[bytes]
    xres_star: bytes
    k_seaf: bytes
    k3: bytes

    def message(self) -> HnToSnAuthMsg:
        return HnToSnAuthMsg(
            autn=self.autn, hxres_star=self.hxres_star, m=self.m, c2=self.c2)


def _derive_vector(
    state: HnState,
    record: SubscriberRecord,
    k_star: bytes,
    c2: Optional[bytes],
    r_sn: bytes,
    id_sn: str,
    sid: bytes,
) -> AuthVectorBundle:
    k = record.k
    id_sn_b = id_sn.encode()
    mac = crypto.prf_f("1", k, [k_star, r_sn])
    xres = crypto.prf_f("2", k, [k_star])
    f5 = crypto.prf_f("5", k, [k_star])
    conc = crypto.xor_bytes(f5, r_sn)
    ck = crypto.prf_f("3", k, [k_star])
    ik = crypto.prf_f("4", k, [k_star])
    xres_star = crypto.kdf([ck, ik, k_star, xres, id_sn_b])
    hxres_star = crypto.hash_h([r_sn, xres_star])
    k_ausf = crypto.kdf([ck, ik, k_star, conc, id_sn_b])
    k_seaf = crypto.kdf([k_ausf, id_sn_b])
    k3 = crypto.xor_bytes(xres_star, f5)
    m = crypto.aead_seal(k3, pack_m_payload(k_seaf, record.supi))

    record.k_s_staged = crypto.hash_h([k_star, r_sn])
    state.pending[sid] = PendingAuth(xres_star=xres_star, k_seaf=k_seaf,
                                     supi=record.supi)
    return AuthVectorBundle(
        autn=Autn(conc=conc, mac=mac), hxres_star=hxres_star,
        m=m, c2=c2, xres_star=xres_star, k_seaf=k_seaf, k3=k3)


def hn_auth_vector(
    state: HnState,
    record: SubscriberRecord,
    pk_u: bytes,
    r_sn: bytes,
    id_sn: str,
    rng: RandomSource,
    sid: bytes,
) -> AuthVectorBundle:
    """SUPI-path vector: fresh encapsulation against the UE public key."""
    c2, k_s2_raw = crypto.kem_encaps(state.kem, pk_u, rng)
    k_s2 = crypto.as_shared_key(k_s2_raw)
    return _derive_vector(state, record, k_s2, c2, r_sn, id_sn, sid)


def hn_guti_auth_vector(
    state: HnState, msg: GutiSnToHnMsg, id_sn: str, sid: bytes
) -> AuthVectorBundle:
    """GUTI-path vector: ratchet key replaces the encapsulated key, no c2."""
    if not state.skip_id_sn_check and id_sn not in state.sn_allowlist:
        raise IdentificationAbort()
    record = state.registry.get(msg.supi)
    if record is None or record.k_s is None:
        raise IdentificationAbort()
    k_s_prime = crypto.xor_bytes(record.k_s, msg.r_sn_prime)
    return _derive_vector(state, record, k_s_prime, None, msg.r_sn, id_sn, sid)


def hn_finalize(state: HnState, confirm: ConfirmMsg, sid: bytes) -> None:
    """Commit the staged ratchet key on SN confirmation."""
    pending = state.pending.get(sid)
    if pending is None:
        log.info("confirmation for unknown session; ignored")
        return
    if not confirm.ok:
        log.info("negative confirmation; staged key kept for retry")
        return
    record = state.registry[pending.supi]
    if record.k_s_staged is not None:
        record.k_s = record.k_s_staged
        record.k_s_staged = None
    del state.pending[sid]
    if state.persist_path:
        save_registry(state.persist_path, state.registry)


# --- registry persistence ---------------------------------------------------

def save_registry(path: str, registry: dict[str, SubscriberRecord]) -> None:
    """One record per line: supi,hex(K)[,hex(K_S)]; atomic rewrite."""
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        for supi in sorted(registry):
            rec = registry[supi]
            parts = [supi, rec.k.hex()]
            if rec.k_s is not None:
                parts.append(rec.k_s.hex())
            fh.write(",".join(parts) + "\n")
    os.replace(tmp, path)


def load_registry(path: str) -> dict[str, SubscriberRecord]:
    registry: dict[str, SubscriberRecord] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            rec = SubscriberRecord(supi=parts[0], k=bytes.fromhex(parts[1]))
            if len(parts) > 2:
                rec.k_s = bytes.fromhex(parts[2])
            registry[rec.supi] = rec
    return registry

"""Bit-exact wire encoding for every protocol message.

Layout: one message-type tag byte, then each field in declaration order as
a 4-byte big-endian length prefix followed by the raw bytes. Optional
fields carry a 1-byte presence flag; single-byte flags are encoded as a
length-1 field. Decoding is strict: unknown tags, truncation, wrong fixed
widths and trailing bytes are all rejected with the failing offset.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

GUTI_LEN = 16
RAND_LEN = 32
AUTN_LEN = 64


class EncodeError(Exception):
    """Message violates a field invariant."""


class ParseError(Exception):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Autn:
    conc: bytes  # f5(K, K*) xor R_SN
    mac: bytes

    def __post_init__(self):
        if len(self.conc) != RAND_LEN or len(self.mac) != RAND_LEN:
            raise EncodeError("AUTN halves must be 32 bytes each")

    @property
    def raw(self) -> bytes:
        return self.conc + self.mac

    @classmethod
    def from_raw(cls, raw: bytes) -> "Autn":
        if len(raw) != AUTN_LEN:
            raise EncodeError("AUTN must be 64 bytes")
        return cls(conc=raw[:RAND_LEN], mac=raw[RAND_LEN:])


@dataclass(frozen=True)
class IdRequestMsg:
    """SN-to-UE identification request; force_supi forbids the GUTI path."""
    force_supi: bool = False


@dataclass(frozen=True)
class IdResponseMsg:
    c1: bytes
    suci_conc: bytes
    mac_u: bytes
    id_hn: str


@dataclass(frozen=True)
class SnToHnIdentMsg:
    c1: bytes
    suci_conc: bytes
    mac_u: bytes
    r_sn: bytes


@dataclass(frozen=True)
class HnToSnAuthMsg:
    autn: Autn
    hxres_star: bytes
    m: bytes
    c2: Optional[bytes] = None  # absent on the GUTI path


@dataclass(frozen=True)
class ChallengeMsg:
    autn: Autn
    c2: Optional[bytes] = None


@dataclass(frozen=True)
class ResponseMsg:
    res_star: bytes


@dataclass(frozen=True)
class ConfirmMsg:
    ok: bool = True


@dataclass(frozen=True)
class GutiIdMsg:
    guti: bytes


@dataclass(frozen=True)
class GutiSnToHnMsg:
    supi: str
    r_sn_prime: bytes
    r_sn: bytes


@dataclass(frozen=True)
class GutiAssignMsg:
    guti_new: bytes
    r_sn_prime_new: bytes


@dataclass(frozen=True)
class SecureEnvelopeMsg:
    """A message sealed under a key derived from the session's K_seaf.

    Carries the GUTI assignment: the ratchet material must cross the radio
    only over the secure channel the session just established.
    """
    ct: bytes


@dataclass(frozen=True)
class AbortMsg:
    """HN-to-SN generic abort; every failure cause carries the same code."""
    code: int = 0xFF


_TAGS = {
    IdRequestMsg: 0x01,
    IdResponseMsg: 0x02,
    SnToHnIdentMsg: 0x03,
    HnToSnAuthMsg: 0x04,
    ChallengeMsg: 0x05,
    ResponseMsg: 0x06,
    ConfirmMsg: 0x07,
    GutiIdMsg: 0x08,
    GutiSnToHnMsg: 0x09,
    GutiAssignMsg: 0x0A,
    SecureEnvelopeMsg: 0x0B,
    AbortMsg: 0x0C,
}
_BY_TAG = {v: k for k, v in _TAGS.items()}

Message = (
    IdRequestMsg | IdResponseMsg | SnToHnIdentMsg | HnToSnAuthMsg
    | ChallengeMsg | ResponseMsg | ConfirmMsg | GutiIdMsg
    | GutiSnToHnMsg | GutiAssignMsg | SecureEnvelopeMsg | AbortMsg
)


def _field(data: bytes) -> bytes:
    return len(data).to_bytes(4, "big") + data


def _require(cond: bool, what: str) -> None:
    if not cond:
        raise EncodeError(what)


def encode(msg: Message) -> bytes:
    tag = _TAGS.get(type(msg))
    if tag is None:
        raise EncodeError(f"not a protocol message: {type(msg).__name__}")
    out = [bytes([tag])]

    if isinstance(msg, IdRequestMsg):
        out.append(_field(b"\x01" if msg.force_supi else b"\x00"))
    elif isinstance(msg, IdResponseMsg):
        _require(len(msg.mac_u) == 32, "mac_u must be 32 bytes")
        out += [_field(msg.c1), _field(msg.suci_conc),
                _field(msg.mac_u), _field(msg.id_hn.encode())]
    elif isinstance(msg, SnToHnIdentMsg):
        _require(len(msg.mac_u) == 32, "mac_u must be 32 bytes")
        _require(len(msg.r_sn) == RAND_LEN, "r_sn must be 32 bytes")
        out += [_field(msg.c1), _field(msg.suci_conc),
                _field(msg.mac_u), _field(msg.r_sn)]
    elif isinstance(msg, (HnToSnAuthMsg, ChallengeMsg)):
        out.append(_field(msg.autn.raw))
        if isinstance(msg, HnToSnAuthMsg):
            _require(len(msg.hxres_star) == 32, "hxres_star must be 32 bytes")
            out += [_field(msg.hxres_star), _field(msg.m)]
        if msg.c2 is None:
            out.append(_field(b"\x00"))
        else:
            out.append(_field(b"\x01"))
            out.append(_field(msg.c2))
    elif isinstance(msg, ResponseMsg):
        _require(len(msg.res_star) == 32, "res_star must be 32 bytes")
        out.append(_field(msg.res_star))
    elif isinstance(msg, ConfirmMsg):
        out.append(_field(b"\x01" if msg.ok else b"\x00"))
    elif isinstance(msg, GutiIdMsg):
        _require(len(msg.guti) == GUTI_LEN, "guti must be 16 bytes")
        out.append(_field(msg.guti))
    elif isinstance(msg, GutiSnToHnMsg):
        _require(len(msg.r_sn_prime) == RAND_LEN, "r_sn_prime must be 32 bytes")
        _require(len(msg.r_sn) == RAND_LEN, "r_sn must be 32 bytes")
        out += [_field(msg.supi.encode()), _field(msg.r_sn_prime), _field(msg.r_sn)]
    elif isinstance(msg, GutiAssignMsg):
        _require(len(msg.guti_new) == GUTI_LEN, "guti_new must be 16 bytes")
        _require(len(msg.r_sn_prime_new) == RAND_LEN, "r_sn_prime_new must be 32 bytes")
        out += [_field(msg.guti_new), _field(msg.r_sn_prime_new)]
    elif isinstance(msg, SecureEnvelopeMsg):
        out.append(_field(msg.ct))
    elif isinstance(msg, AbortMsg):
        _require(0 <= msg.code <= 0xFF, "code must fit one byte")
        out.append(_field(bytes([msg.code])))

    return b"".join(out)


def pack_suci_payload(supi: str, pk_u: bytes, id_sn: str) -> bytes:
    """Plaintext concealed into SUCI_conc: all three fields are encrypted."""
    return _field(supi.encode()) + _field(pk_u) + _field(id_sn.encode())


def unpack_suci_payload(data: bytes) -> tuple[str, bytes, str]:
    r = _Reader(data)
    supi = r.take_utf8("supi")
    pk_u = r.take_field()
    id_sn = r.take_utf8("id_sn")
    if r.pos != len(data):
        raise ParseError("trailing bytes in SUCI payload", r.pos)
    return supi, pk_u, id_sn


def pack_m_payload(k_seaf: bytes, supi: str) -> bytes:
    """Plaintext of M: session key and subscriber identity bound together."""
    return _field(k_seaf) + _field(supi.encode())


def unpack_m_payload(data: bytes) -> tuple[bytes, str]:
    r = _Reader(data)
    k_seaf = r.take_fixed(32, "k_seaf")
    supi = r.take_utf8("supi")
    if r.pos != len(data):
        raise ParseError("trailing bytes in M payload", r.pos)
    return k_seaf, supi


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take_field(self) -> bytes:
        if self.pos + 4 > len(self.data):
            raise ParseError("truncated length prefix", self.pos)
        n = int.from_bytes(self.data[self.pos:self.pos + 4], "big")
        self.pos += 4
        if self.pos + n > len(self.data):
            raise ParseError("truncated field", self.pos)
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def take_fixed(self, n: int, what: str) -> bytes:
        at = self.pos
        out = self.take_field()
        if len(out) != n:
            raise ParseError(f"{what} must be {n} bytes, got {len(out)}", at)
        return out

    def take_flag(self, what: str) -> bool:
        at = self.pos
        raw = self.take_fixed(1, what)
        if raw not in (b"\x00", b"\x01"):
            raise ParseError(f"{what} must be 0 or 1", at)
        return raw == b"\x01"

    def take_utf8(self, what: str) -> str:
        at = self.pos
        raw = self.take_field()
        try:
            return raw.decode()
        except UnicodeDecodeError:
            raise ParseError(f"{what} is not valid UTF-8", at) from None


def decode(data: bytes) -> Message:
    if not data:
        raise ParseError("empty message", 0)
    tag = data[0]
    cls = _BY_TAG.get(tag)
    if cls is None:
        raise ParseError(f"unknown message tag 0x{tag:02x}", 0)
    r = _Reader(data)
    r.pos = 1

    if cls is IdRequestMsg:
        msg: Message = IdRequestMsg(force_supi=r.take_flag("force_supi"))
    elif cls is IdResponseMsg:
        msg = IdResponseMsg(
            c1=r.take_field(), suci_conc=r.take_field(),
            mac_u=r.take_fixed(32, "mac_u"), id_hn=r.take_utf8("id_hn"))
    elif cls is SnToHnIdentMsg:
        msg = SnToHnIdentMsg(
            c1=r.take_field(), suci_conc=r.take_field(),
            mac_u=r.take_fixed(32, "mac_u"), r_sn=r.take_fixed(RAND_LEN, "r_sn"))
    elif cls in (HnToSnAuthMsg, ChallengeMsg):
        autn = Autn.from_raw(r.take_fixed(AUTN_LEN, "autn"))
        if cls is HnToSnAuthMsg:
            hxres = r.take_fixed(32, "hxres_star")
            m = r.take_field()
        c2 = r.take_field() if r.take_flag("c2 present") else None
        if cls is HnToSnAuthMsg:
            msg = HnToSnAuthMsg(autn=autn, hxres_star=hxres, m=m, c2=c2)
        else:
            msg = ChallengeMsg(autn=autn, c2=c2)
    elif cls is ResponseMsg:
        msg = ResponseMsg(res_star=r.take_fixed(32, "res_star"))
    elif cls is ConfirmMsg:
        msg = ConfirmMsg(ok=r.take_flag("ok"))
    elif cls is GutiIdMsg:
        msg = GutiIdMsg(guti=r.take_fixed(GUTI_LEN, "guti"))
    elif cls is GutiSnToHnMsg:
        msg = GutiSnToHnMsg(
            supi=r.take_utf8("supi"),
            r_sn_prime=r.take_fixed(RAND_LEN, "r_sn_prime"),
            r_sn=r.take_fixed(RAND_LEN, "r_sn"))
    elif cls is GutiAssignMsg:
        msg = GutiAssignMsg(
            guti_new=r.take_fixed(GUTI_LEN, "guti_new"),
            r_sn_prime_new=r.take_fixed(RAND_LEN, "r_sn_prime_new"))
    elif cls is SecureEnvelopeMsg:
        msg = SecureEnvelopeMsg(ct=r.take_field())
    else:
        msg = AbortMsg(code=r.take_fixed(1, "code")[0])

    if r.pos != len(data):
        raise ParseError("trailing bytes after message", r.pos)
    return msg

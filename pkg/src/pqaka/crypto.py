"""Cryptographic core: KEM abstraction, test KEM, and the symmetric suite.

The symmetric family f1..f5, f1*, f5* is a keyed PRF (HMAC-SHA-256 with a
one-byte domain tag), not MILENAGE. All symmetric values are 32 bytes so
every XOR in the protocol is well-typed. The test KEM is insecure by
design: a deterministic construction over SHA-256 used as a test double.
"""

from __future__ import annotations

import hashlib
import hmac as _hmac
from dataclasses import dataclass, field
from typing import Callable, Optional

from .rng import RandomSource

KEY_LEN = 32
AEAD_TAG_OVERHEAD = 16
_AEAD_NONCE = bytes(12)  # keys are single-use per session; fixed nonce is safe

# domain-separation tags for the f-family
_F_TAGS = {"1": 0x01, "2": 0x02, "3": 0x03, "4": 0x04,
           "5": 0x05, "1s": 0x06, "5s": 0x07}


class CryptoError(Exception):
    """Malformed input to a cryptographic operation."""


class SuiteUnavailableError(CryptoError):
    """The named KEM backend is registered for metadata only."""


class AeadFailure(Exception):
    """Authentication failure on open; callers abort silently."""


def _check_key(key: bytes) -> None:
    if len(key) != KEY_LEN:
        raise CryptoError(f"key must be {KEY_LEN} bytes, got {len(key)}")


def _lp(inputs: list[bytes] | tuple[bytes, ...]) -> bytes:
    """Length-prefixed concatenation: 4-byte big-endian length per field."""
    return b"".join(len(x).to_bytes(4, "big") + x for x in inputs)


def prf_f(index: str, key: bytes, inputs: list[bytes]) -> bytes:
    """f_index(key, inputs): HMAC-SHA-256 over a tag byte plus the inputs."""
    if index not in _F_TAGS:
        raise CryptoError(f"unknown f-index {index!r}")
    _check_key(key)
    if not inputs:
        raise CryptoError("f-family requires at least one input")
    msg = bytes([_F_TAGS[index]]) + _lp(inputs)
    return _hmac.new(key, msg, hashlib.sha256).digest()


def kdf(inputs: list[bytes]) -> bytes:
    """SHA-256 over the length-prefixed input fields."""
    if not inputs:
        raise CryptoError("kdf requires at least one input")
    return hashlib.sha256(_lp(inputs)).digest()


def hash_h(inputs: list[bytes]) -> bytes:
    """The protocol hash h: same construction as the KDF."""
    if not inputs:
        raise CryptoError("hash_h requires at least one input")
    return hashlib.sha256(_lp(inputs)).digest()


def hmac_tag(key: bytes, data: bytes) -> bytes:
    _check_key(key)
    return _hmac.new(key, data, hashlib.sha256).digest()


def hmac_verify(key: bytes, data: bytes, tag: bytes) -> bool:
    return _hmac.compare_digest(hmac_tag(key, data), tag)


def aead_seal(key: bytes, plaintext: bytes) -> bytes:
    """AES-256-GCM under a zero nonce; key must be fresh per session."""
    from cryptography.hazmat.primitives.ciphers.aead import AESGCM

    _check_key(key)
    return AESGCM(key).encrypt(_AEAD_NONCE, plaintext, None)


def aead_open(key: bytes, ciphertext: bytes) -> bytes:
    from cryptography.exceptions import InvalidTag
    from cryptography.hazmat.primitives.ciphers.aead import AESGCM

    _check_key(key)
    try:
        return AESGCM(key).decrypt(_AEAD_NONCE, ciphertext, None)
    except InvalidTag as exc:
        raise AeadFailure("ciphertext rejected") from exc


def as_shared_key(k: bytes) -> bytes:
    """Normalize a KEM shared secret to the protocol's 32-byte key width."""
    return k if len(k) == KEY_LEN else kdf([k])


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise CryptoError("xor operands must have equal length")
    return bytes(x ^ y for x, y in zip(a, b))


@dataclass(frozen=True)
class KemKeyPair:
    pk: bytes
    sk: bytes


@dataclass(frozen=True)
class KemSuite:
    """One KEM algorithm plus its parameter-size metadata.

    A suite with callables set to None is metadata-only: its sizes appear
    in reports but key operations raise SuiteUnavailableError.
    """

    name: str
    sk_len: int
    pk_len: int
    ct_len: int
    key_len: int
    keygen: Optional[Callable[[RandomSource], KemKeyPair]] = field(default=None)
    encaps: Optional[Callable[[bytes, RandomSource], tuple[bytes, bytes]]] = field(default=None)
    decaps: Optional[Callable[[bytes, bytes], bytes]] = field(default=None)

    @property
    def available(self) -> bool:
        return self.keygen is not None


def kem_keygen(suite: KemSuite, rng: RandomSource) -> KemKeyPair:
    if not suite.available:
        raise SuiteUnavailableError(f"KEM backend {suite.name!r} not compiled in")
    pair = suite.keygen(rng)
    if len(pair.pk) != suite.pk_len or len(pair.sk) != suite.sk_len:
        raise CryptoError(f"{suite.name}: keypair lengths differ from metadata")
    return pair


def kem_encaps(suite: KemSuite, pk: bytes, rng: RandomSource) -> tuple[bytes, bytes]:
    if not suite.available:
        raise SuiteUnavailableError(f"KEM backend {suite.name!r} not compiled in")
    if len(pk) != suite.pk_len:
        raise CryptoError(f"{suite.name}: pk must be {suite.pk_len} bytes")
    ct, k = suite.encaps(pk, rng)
    if len(ct) != suite.ct_len or len(k) != suite.key_len:
        raise CryptoError(f"{suite.name}: encaps output lengths differ from metadata")
    return ct, k


def kem_decaps(suite: KemSuite, sk: bytes, ct: bytes) -> bytes:
    if not suite.available:
        raise SuiteUnavailableError(f"KEM backend {suite.name!r} not compiled in")
    if len(sk) != suite.sk_len:
        raise CryptoError(f"{suite.name}: sk must be {suite.sk_len} bytes")
    if len(ct) != suite.ct_len:
        raise CryptoError(f"{suite.name}: ct must be {suite.ct_len} bytes")
    return suite.decaps(sk, ct)


# --- test KEM -------------------------------------------------------------

def _test_keygen(rng: RandomSource) -> KemKeyPair:
    sk = rng.bytes(32)
    pk = _hmac.new(sk, b"pk", hashlib.sha256).digest()
    return KemKeyPair(pk=pk, sk=sk)


def _test_encaps(pk: bytes, rng: RandomSource) -> tuple[bytes, bytes]:
    r = rng.bytes(32)
    return r, hash_h([pk, r])


def _test_decaps(sk: bytes, ct: bytes) -> bytes:
    pk = _hmac.new(sk, b"pk", hashlib.sha256).digest()
    return hash_h([pk, ct])


TEST_KEM = KemSuite(
    name="test",
    sk_len=32, pk_len=32, ct_len=32, key_len=32,
    keygen=_test_keygen, encaps=_test_encaps, decaps=_test_decaps,
)


# --- suite registry --------------------------------------------------------

_REGISTRY: dict[str, KemSuite] = {}


def register_suite(suite: KemSuite) -> None:
    _REGISTRY[suite.name] = suite


def get_suite(name: str) -> KemSuite:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown KEM suite {name!r}; registered: {', '.join(registered_suites())}"
        ) from None


def registered_suites() -> list[str]:
    return sorted(_REGISTRY)


def available_suites() -> list[str]:
    return sorted(n for n, s in _REGISTRY.items() if s.available)


register_suite(TEST_KEM)

# Post-quantum parameter sizes at the NIST level-1 / 128-bit setting.
# No PQ backend ships with this package; these rows exist so size
# reports cover the algorithms, while key operations stay unavailable.
for _name, _sk, _pk, _ct, _k in [
    ("kyber", 1632, 800, 768, 32),
    ("mceliece", 6452, 261120, 128, 32),
    ("bike", 5223, 1541, 1573, 32),
    ("hqc", 2289, 2249, 4481, 64),
]:
    register_suite(KemSuite(name=_name, sk_len=_sk, pk_len=_pk, ct_len=_ct, key_len=_k))

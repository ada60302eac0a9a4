"""Multipath-TCP handshake plumbing: option byte codec, token and HMAC
derivation, and the per-endpoint subflow establishment state machine.

Option layout (big-endian, fixed length per variant):

    capable SYN     30 12 0x00 0x00 key[8]
    capable SYN/ACK 30 12 0x00 0x01 key[8]
    join SYN        30 12 0x10 0x00 token[4] nonce[4]
    join SYN/ACK    30 16 0x10 0x00 hmac[8]  nonce[4]
    join ACK        30 24 0x10 0x00 hmac[20]

Byte 2 carries the subtype in its high nibble (0 = capable, 1 = join). Byte 3
of the capable variants marks the reply leg, since both legs are 12 bytes.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field

OPTION_KIND = 30
SUBTYPE_CAPABLE = 0x0
SUBTYPE_JOIN = 0x1

_SHA1_BLOCK = 64


class MalformedOptionError(ValueError):
    """Bytes do not parse as one of the modeled option variants."""


class SubflowRejectedError(Exception):
    """Handshake integrity failure: unknown token or HMAC mismatch."""


@dataclass(frozen=True)
class MpCapableSyn:
    key: int


@dataclass(frozen=True)
class MpCapableSynAck:
    key: int


@dataclass(frozen=True)
class MpJoinSyn:
    token: int
    nonce: int


@dataclass(frozen=True)
class MpJoinSynAck:
    hmac_trunc: int
    nonce: int


@dataclass(frozen=True)
class MpJoinAck:
    hmac: int  # full 160-bit value


MptcpOption = MpCapableSyn | MpCapableSynAck | MpJoinSyn | MpJoinSynAck | MpJoinAck

Match = tuple[int, int, int, int]


@dataclass(frozen=True)
class SetupPacket:
    src_addr: int
    dst_addr: int
    src_port: int
    dst_port: int
    syn_flag: bool
    option: MptcpOption | None = None

    def match(self) -> Match:
        return (self.src_addr, self.dst_addr, self.src_port, self.dst_port)

    def reply_shell(self, syn: bool = False) -> dict:
        """Header fields for a packet going the other way."""
        return dict(
            src_addr=self.dst_addr,
            dst_addr=self.src_addr,
            src_port=self.dst_port,
            dst_port=self.src_port,
            syn_flag=syn,
        )


def is_setup_packet(packet: SetupPacket) -> bool:
    """Controller-bound packets: SYN carrying capable or join-SYN options."""
    return packet.syn_flag and isinstance(packet.option, (MpCapableSyn, MpJoinSyn))


def encode_option(option: MptcpOption) -> bytes:
    if isinstance(option, MpCapableSyn):
        return bytes([OPTION_KIND, 12, SUBTYPE_CAPABLE << 4, 0]) + option.key.to_bytes(8, "big")
    if isinstance(option, MpCapableSynAck):
        return bytes([OPTION_KIND, 12, SUBTYPE_CAPABLE << 4, 1]) + option.key.to_bytes(8, "big")
    if isinstance(option, MpJoinSyn):
        return (
            bytes([OPTION_KIND, 12, SUBTYPE_JOIN << 4, 0])
            + option.token.to_bytes(4, "big")
            + option.nonce.to_bytes(4, "big")
        )
    if isinstance(option, MpJoinSynAck):
        return (
            bytes([OPTION_KIND, 16, SUBTYPE_JOIN << 4, 0])
            + option.hmac_trunc.to_bytes(8, "big")
            + option.nonce.to_bytes(4, "big")
        )
    if isinstance(option, MpJoinAck):
        return bytes([OPTION_KIND, 24, SUBTYPE_JOIN << 4, 0]) + option.hmac.to_bytes(20, "big")
    raise TypeError(f"not an option variant: {option!r}")


def decode_option(data: bytes) -> MptcpOption:
    if len(data) < 4:
        raise MalformedOptionError("option shorter than its fixed header")
    kind, length, sub_byte, aux = data[0], data[1], data[2], data[3]
    if kind != OPTION_KIND:
        raise MalformedOptionError(f"kind byte {kind}, expected {OPTION_KIND}")
    if length != len(data):
        raise MalformedOptionError(f"length byte {length} != buffer size {len(data)}")
    subtype = sub_byte >> 4
    if sub_byte & 0x0F:
        raise MalformedOptionError("reserved low nibble set")
    if subtype == SUBTYPE_CAPABLE and length == 12:
        key = int.from_bytes(data[4:12], "big")
        if aux == 0:
            return MpCapableSyn(key)
        if aux == 1:
            return MpCapableSynAck(key)
        raise MalformedOptionError(f"unknown capable leg marker {aux}")
    if subtype == SUBTYPE_JOIN and aux == 0:
        if length == 12:
            return MpJoinSyn(
                int.from_bytes(data[4:8], "big"), int.from_bytes(data[8:12], "big")
            )
        if length == 16:
            return MpJoinSynAck(
                int.from_bytes(data[4:12], "big"), int.from_bytes(data[12:16], "big")
            )
        if length == 24:
            return MpJoinAck(int.from_bytes(data[4:24], "big"))
    raise MalformedOptionError(
        f"unrecognized subtype/length combination ({subtype}, {length})"
    )


def compute_token(key: int) -> int:
    """Most-significant 32 bits of SHA-1 over the 8-byte big-endian key."""
    digest = hashlib.sha1(key.to_bytes(8, "big")).digest()
    return int.from_bytes(digest[:4], "big")


def compute_hmac(key_a: int, key_b: int, nonce_a: int, nonce_b: int) -> int:
    """HMAC-SHA1, key = key_a||key_b, message = nonce_a||nonce_b, as a 160-bit int.

    Hand-rolled ipad/opad construction so the stdlib hmac module stays
    available as an independent cross-check.
    """
    key = key_a.to_bytes(8, "big") + key_b.to_bytes(8, "big")
    msg = nonce_a.to_bytes(4, "big") + nonce_b.to_bytes(4, "big")
    key = key.ljust(_SHA1_BLOCK, b"\x00")
    inner = hashlib.sha1(bytes(b ^ 0x36 for b in key) + msg).digest()
    outer = hashlib.sha1(bytes(b ^ 0x5C for b in key) + inner).digest()
    return int.from_bytes(outer, "big")


def truncate_hmac64(hmac_value: int) -> int:
    """Most-significant 64 bits of a 160-bit HMAC."""
    return hmac_value >> 96


def _canonical(packet_or_match) -> tuple:
    m = packet_or_match.match() if isinstance(packet_or_match, SetupPacket) else packet_or_match
    a = (m[0], m[2])
    b = (m[1], m[3])
    return (a, b) if a <= b else (b, a)


@dataclass
class _ConnectionKeys:
    local_key: int
    remote_key: int | None


@dataclass
class _SubflowState:
    phase: str  # syn_sent | synack_sent | established
    token: int
    kind: str = "capable"  # capable | join
    nonce_local: int = 0
    nonce_remote: int = 0


@dataclass
class HandshakeEndpoint:
    """Per-host handshake state for the setup phase of all its subflows."""

    host: int
    rng: random.Random = field(default_factory=random.Random)
    connections: dict[int, _ConnectionKeys] = field(default_factory=dict)
    subflows: dict[tuple, _SubflowState] = field(default_factory=dict)
    established: set[tuple] = field(default_factory=set)

    def open_initial(
        self, src_addr: int, dst_addr: int, src_port: int, dst_port: int,
        key: int | None = None,
    ) -> SetupPacket:
        if key is None:
            key = self.rng.getrandbits(64)
        token = compute_token(key)
        self.connections[token] = _ConnectionKeys(local_key=key, remote_key=None)
        pkt = SetupPacket(src_addr, dst_addr, src_port, dst_port, True, MpCapableSyn(key))
        self.subflows[_canonical(pkt)] = _SubflowState("syn_sent", token)
        return pkt

    def open_join(
        self, token: int, src_addr: int, dst_addr: int, src_port: int, dst_port: int,
        nonce: int | None = None,
    ) -> SetupPacket:
        if token not in self.connections:
            raise SubflowRejectedError(f"initiator has no connection for token {token:#x}")
        if nonce is None:
            nonce = self.rng.getrandbits(32)
        pkt = SetupPacket(src_addr, dst_addr, src_port, dst_port, True, MpJoinSyn(token, nonce))
        self.subflows[_canonical(pkt)] = _SubflowState("syn_sent", token, kind="join", nonce_local=nonce)
        return pkt


def handshake_step(endpoint: HandshakeEndpoint, packet: SetupPacket) -> SetupPacket | None:
    """Advance one endpoint by one received message; return the reply, if any.

    Raises SubflowRejectedError on unknown tokens or HMAC mismatches.
    """
    key = _canonical(packet)
    opt = packet.option

    if isinstance(opt, MpCapableSyn):
        local_key = endpoint.rng.getrandbits(64)
        token = compute_token(opt.key)
        endpoint.connections[token] = _ConnectionKeys(local_key=local_key, remote_key=opt.key)
        endpoint.subflows[key] = _SubflowState("synack_sent", token)
        return SetupPacket(**packet.reply_shell(), option=MpCapableSynAck(local_key))

    if isinstance(opt, MpCapableSynAck):
        state = endpoint.subflows.get(key)
        if state is None or state.phase != "syn_sent":
            return None
        conn = endpoint.connections[state.token]
        conn.remote_key = opt.key
        state.phase = "established"
        endpoint.established.add(key)
        return SetupPacket(**packet.reply_shell(), option=None)

    if isinstance(opt, MpJoinSyn):
        conn = endpoint.connections.get(opt.token)
        if conn is None or conn.remote_key is None:
            raise SubflowRejectedError(f"unknown token {opt.token:#x}")
        nonce_local = endpoint.rng.getrandbits(32)
        hmac_trunc = truncate_hmac64(
            compute_hmac(conn.local_key, conn.remote_key, nonce_local, opt.nonce)
        )
        endpoint.subflows[key] = _SubflowState(
            "synack_sent", opt.token, kind="join",
            nonce_local=nonce_local, nonce_remote=opt.nonce,
        )
        return SetupPacket(
            **packet.reply_shell(), option=MpJoinSynAck(hmac_trunc, nonce_local)
        )

    if isinstance(opt, MpJoinSynAck):
        state = endpoint.subflows.get(key)
        if state is None or state.phase != "syn_sent":
            return None
        conn = endpoint.connections[state.token]
        assert conn.remote_key is not None
        expected = truncate_hmac64(
            compute_hmac(conn.remote_key, conn.local_key, opt.nonce, state.nonce_local)
        )
        if expected != opt.hmac_trunc:
            raise SubflowRejectedError("peer HMAC does not verify")
        state.nonce_remote = opt.nonce
        state.phase = "established"
        endpoint.established.add(key)
        hmac_full = compute_hmac(
            conn.local_key, conn.remote_key, state.nonce_local, opt.nonce
        )
        return SetupPacket(**packet.reply_shell(), option=MpJoinAck(hmac_full))

    if isinstance(opt, MpJoinAck):
        state = endpoint.subflows.get(key)
        if state is None or state.phase != "synack_sent":
            return None
        conn = endpoint.connections[state.token]
        assert conn.remote_key is not None
        expected = compute_hmac(
            conn.remote_key, conn.local_key, state.nonce_remote, state.nonce_local
        )
        if expected != opt.hmac:
            raise SubflowRejectedError("joiner HMAC does not verify")
        state.phase = "established"
        endpoint.established.add(key)
        return None

    # plain ACK: completes a pending capable handshake at the responder
    if opt is None:
        state = endpoint.subflows.get(key)
        if state is not None and state.phase == "synack_sent" and state.kind == "capable":
            conn = endpoint.connections.get(state.token)
            if conn is not None and conn.remote_key is not None:
                state.phase = "established"
                endpoint.established.add(key)
        return None

    return None

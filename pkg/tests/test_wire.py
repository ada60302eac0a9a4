import hashlib
import hmac as hmac_stdlib
import random

import pytest
from hypothesis import given, strategies as st

from mptcplab.wire import (
    HandshakeEndpoint,
    MalformedOptionError,
    MpCapableSyn,
    MpCapableSynAck,
    MpJoinAck,
    MpJoinSyn,
    MpJoinSynAck,
    SetupPacket,
    SubflowRejectedError,
    compute_hmac,
    compute_token,
    decode_option,
    encode_option,
    handshake_step,
    is_setup_packet,
    truncate_hmac64,
)

# Oracle values computed with hashlib/hmac before the codec was written.
TOKEN_OF_ZERO_KEY = 0x05FE4057
TOKEN_OF_ONE_KEY = 0xCB473678
TOKEN_OF_BEEF_KEY = 0x9F48DE0E
HMAC_ALL_ZERO = 0xDAB69AD98E28764F977EE2487E4F3F6873B2A297
HMAC_ALL_ZERO_TRUNC = 0xDAB69AD98E28764F
HMAC_SAMPLE = 0xC0D1C29B33F16E2472F04A62AC93CE7747CDF3F4


class TestCodec:
    def test_join_syn_zero_bytes(self):
        data = encode_option(MpJoinSyn(token=0, nonce=0))
        assert data == bytes([30, 12, 0x10, 0x00]) + bytes(8)

    def test_capable_syn_is_12_bytes(self):
        assert len(encode_option(MpCapableSyn(key=0xDEADBEEF))) == 12

    @pytest.mark.parametrize(
        "option,length",
        [
            (MpCapableSyn(1), 12),
            (MpCapableSynAck(2), 12),
            (MpJoinSyn(3, 4), 12),
            (MpJoinSynAck(5, 6), 16),
            (MpJoinAck(7), 24),
        ],
    )
    def test_lengths_and_length_byte(self, option, length):
        data = encode_option(option)
        assert len(data) == length
        assert data[1] == length

    options_strategy = st.one_of(
        st.builds(MpCapableSyn, key=st.integers(0, 2**64 - 1)),
        st.builds(MpCapableSynAck, key=st.integers(0, 2**64 - 1)),
        st.builds(
            MpJoinSyn,
            token=st.integers(0, 2**32 - 1),
            nonce=st.integers(0, 2**32 - 1),
        ),
        st.builds(
            MpJoinSynAck,
            hmac_trunc=st.integers(0, 2**64 - 1),
            nonce=st.integers(0, 2**32 - 1),
        ),
        st.builds(MpJoinAck, hmac=st.integers(0, 2**160 - 1)),
    )

    @given(options_strategy)
    def test_roundtrip(self, option):
        assert decode_option(encode_option(option)) == option

    def test_truncated_buffer(self):
        data = encode_option(MpJoinSyn(1, 2))
        with pytest.raises(MalformedOptionError):
            decode_option(data[:8])
        with pytest.raises(MalformedOptionError):
            decode_option(b"\x1e")

    def test_wrong_kind_byte(self):
        data = bytearray(encode_option(MpCapableSyn(1)))
        data[0] = 29
        with pytest.raises(MalformedOptionError):
            decode_option(bytes(data))

    def test_unknown_subtype(self):
        data = bytearray(encode_option(MpJoinSyn(1, 2)))
        data[2] = 0x20  # DSS-style subtype, not modeled
        with pytest.raises(MalformedOptionError):
            decode_option(bytes(data))

    def test_bad_capable_leg_marker(self):
        data = bytearray(encode_option(MpCapableSyn(1)))
        data[3] = 7
        with pytest.raises(MalformedOptionError):
            decode_option(bytes(data))


class TestToken:
    def test_frozen_values(self):
        assert compute_token(0) == TOKEN_OF_ZERO_KEY
        assert compute_token(1) == TOKEN_OF_ONE_KEY
        assert compute_token(0xDEADBEEFCAFEBABE) == TOKEN_OF_BEEF_KEY

    def test_deterministic(self):
        assert compute_token(1234) == compute_token(1234)

    def test_bit_flip_sensitivity(self):
        rng = random.Random(5)
        for _ in range(3):
            key = rng.getrandbits(64)
            base = compute_token(key)
            assert all(
                compute_token(key ^ (1 << bit)) != base for bit in range(64)
            )

    def test_no_collision_over_10k_keys(self):
        rng = random.Random(99)
        tokens = {compute_token(rng.getrandbits(64)) for _ in range(10_000)}
        assert len(tokens) == 10_000


class TestHmac:
    def test_frozen_values(self):
        assert compute_hmac(0, 0, 0, 0) == HMAC_ALL_ZERO
        assert truncate_hmac64(HMAC_ALL_ZERO) == HMAC_ALL_ZERO_TRUNC
        assert (
            compute_hmac(0x0102030405060708, 0x1112131415161718, 0xAABBCCDD, 0x00112233)
            == HMAC_SAMPLE
        )

    def test_matches_stdlib_on_random_inputs(self):
        rng = random.Random(17)
        for _ in range(100):
            ka, kb = rng.getrandbits(64), rng.getrandbits(64)
            na, nb = rng.getrandbits(32), rng.getrandbits(32)
            want = hmac_stdlib.new(
                ka.to_bytes(8, "big") + kb.to_bytes(8, "big"),
                na.to_bytes(4, "big") + nb.to_bytes(4, "big"),
                hashlib.sha1,
            ).digest()
            assert compute_hmac(ka, kb, na, nb) == int.from_bytes(want, "big")

    def test_key_order_matters(self):
        assert compute_hmac(1, 2, 3, 4) != compute_hmac(2, 1, 3, 4)


def drive(a, b, first_packet):
    """Bounce packets between two endpoints until silence; count messages."""
    count = 0
    packet = first_packet
    endpoints = {a.host: a, b.host: b}
    # addresses are 1-based host ids in these tests
    while packet is not None:
        count += 1
        receiver = endpoints[packet.dst_addr - 1]
        packet = handshake_step(receiver, packet)
    return count


class TestHandshake:
    def make_pair(self):
        return HandshakeEndpoint(0, random.Random(1)), HandshakeEndpoint(1, random.Random(2))

    def open_connection(self, a, b):
        syn = a.open_initial(src_addr=1, dst_addr=2, src_port=100, dst_port=200)
        token = compute_token(syn.option.key)
        messages = drive(a, b, syn)
        return token, messages

    def test_capable_then_join_establishes_both_ends(self):
        a, b = self.make_pair()
        token, msgs = self.open_connection(a, b)
        assert msgs == 3
        assert len(a.established) == 1 and len(b.established) == 1

        join = a.open_join(token, src_addr=1, dst_addr=2, src_port=101, dst_port=200)
        assert drive(a, b, join) == 3
        assert len(a.established) == 2 and len(b.established) == 2

    def test_unknown_token_rejected(self):
        a, b = self.make_pair()
        self.open_connection(a, b)
        bogus = SetupPacket(1, 2, 102, 200, True, MpJoinSyn(token=0x1234, nonce=9))
        with pytest.raises(SubflowRejectedError):
            handshake_step(b, bogus)

    def test_corrupted_synack_hmac_rejected(self):
        a, b = self.make_pair()
        token, _ = self.open_connection(a, b)
        join = a.open_join(token, 1, 2, 103, 200)
        synack = handshake_step(b, join)
        bad = SetupPacket(
            synack.src_addr, synack.dst_addr, synack.src_port, synack.dst_port,
            synack.syn_flag,
            MpJoinSynAck(synack.option.hmac_trunc ^ 1, synack.option.nonce),
        )
        with pytest.raises(SubflowRejectedError):
            handshake_step(a, bad)

    def test_corrupted_final_hmac_rejected(self):
        a, b = self.make_pair()
        token, _ = self.open_connection(a, b)
        join = a.open_join(token, 1, 2, 104, 200)
        synack = handshake_step(b, join)
        ack = handshake_step(a, synack)
        bad = SetupPacket(
            ack.src_addr, ack.dst_addr, ack.src_port, ack.dst_port, ack.syn_flag,
            MpJoinAck(ack.option.hmac ^ (1 << 80)),
        )
        with pytest.raises(SubflowRejectedError):
            handshake_step(b, bad)

    def test_is_setup_packet(self):
        syn = SetupPacket(1, 2, 1, 2, True, MpCapableSyn(5))
        assert is_setup_packet(syn)
        assert not is_setup_packet(SetupPacket(1, 2, 1, 2, False, MpCapableSyn(5)))
        assert not is_setup_packet(SetupPacket(1, 2, 1, 2, True, None))
        assert not is_setup_packet(SetupPacket(1, 2, 1, 2, True, MpJoinSynAck(1, 2)))

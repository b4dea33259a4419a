import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SeqRng
from crisischain import bilinear
from crisischain.bilinear import DecodeError
from crisischain.keyagree import (
    DhParams,
    SealRejected,
    SealedKeyMaterial,
    confirmation_tag,
    decode_sealed,
    dh_keygen,
    dh_shared,
    encode_sealed,
    open_sealed,
    seal,
)


@pytest.fixture(scope="module")
def toy_params():
    return DhParams(bilinear.toy_engine())


class TestKeyExchange:
    def test_pk_is_scalar_multiple(self, toy_params):
        kp = dh_keygen(toy_params, random.Random(1))
        assert kp.pk == toy_params.engine.scalar_mul(kp.sk, toy_params.P)

    def test_distinct_seeds_distinct_keys(self, toy_params):
        a = dh_keygen(toy_params, random.Random(1))
        b = dh_keygen(toy_params, random.Random(2))
        assert a.sk != b.sk

    def test_toy_vector(self, toy11):
        # a = 3, b = 4 over q = 11: both shared points are 12 mod 11 = 1
        params = DhParams(toy11)
        a = dh_keygen(params, SeqRng(forced=[3]))
        b = dh_keygen(params, SeqRng(forced=[4]))
        assert toy11.scalar_mul(a.sk, b.pk) == 1
        assert toy11.scalar_mul(b.sk, a.pk) == 1
        assert dh_shared(params, a, b.pk) == dh_shared(params, b, a.pk)

    def test_hundred_random_pairs_agree(self, toy_params):
        rng = random.Random(3)
        for _ in range(100):
            a = dh_keygen(toy_params, rng)
            b = dh_keygen(toy_params, rng)
            ka = dh_shared(toy_params, a, b.pk)
            kb = dh_shared(toy_params, b, a.pk)
            assert ka.key == kb.key
            assert len(ka.key) == 32
            assert confirmation_tag(ka) == confirmation_tag(kb)

    def test_agreement_on_production_engine(self, prod):
        params = DhParams(prod)
        rng = random.Random(4)
        a = dh_keygen(params, rng)
        b = dh_keygen(params, rng)
        assert dh_shared(params, a, b.pk) == dh_shared(params, b, a.pk)

    def test_identity_peer_rejected(self, toy_params):
        kp = dh_keygen(toy_params, random.Random(5))
        with pytest.raises(ValueError):
            dh_shared(toy_params, kp, toy_params.engine.identity())

    def test_session_key_repr_hides_bytes(self, toy_params):
        rng = random.Random(6)
        k = dh_shared(toy_params, dh_keygen(toy_params, rng), dh_keygen(toy_params, rng).pk)
        assert k.key.hex() not in repr(k)


class TestSealedDelivery:
    def _key(self):
        return dh_shared(
            DhParams(bilinear.toy_engine()),
            dh_keygen(DhParams(bilinear.toy_engine()), random.Random(7)),
            dh_keygen(DhParams(bilinear.toy_engine()), random.Random(8)).pk,
        )

    def test_roundtrip(self):
        sk = self._key()
        rng = random.Random(9)
        for _ in range(20):
            m = rng.randbytes(rng.randrange(0, 200))
            sealed = seal(sk, m, rng.randbytes(12))
            assert open_sealed(sk, sealed) == m

    def test_empty_plaintext(self):
        sk = self._key()
        assert open_sealed(sk, seal(sk, b"", b"\x00" * 12)) == b""

    def test_every_body_byte_tamper_rejected(self):
        sk = self._key()
        sealed = seal(sk, b"0123456789abcdef", b"\x01" * 12)
        for i in range(len(sealed.body)):
            body = bytearray(sealed.body)
            body[i] ^= 0x01
            with pytest.raises(SealRejected):
                open_sealed(sk, SealedKeyMaterial(sealed.nonce, sealed.tag, bytes(body)))

    def test_tag_and_nonce_tamper_rejected(self):
        sk = self._key()
        sealed = seal(sk, b"payload", b"\x02" * 12)
        bad_tag = bytearray(sealed.tag)
        bad_tag[0] ^= 1
        with pytest.raises(SealRejected):
            open_sealed(sk, SealedKeyMaterial(sealed.nonce, bytes(bad_tag), sealed.body))
        bad_nonce = bytearray(sealed.nonce)
        bad_nonce[0] ^= 1
        with pytest.raises(SealRejected):
            open_sealed(sk, SealedKeyMaterial(bytes(bad_nonce), sealed.tag, sealed.body))

    def test_wrong_key_rejected(self):
        sk = self._key()
        other = dh_shared(
            DhParams(bilinear.toy_engine()),
            dh_keygen(DhParams(bilinear.toy_engine()), random.Random(10)),
            dh_keygen(DhParams(bilinear.toy_engine()), random.Random(11)).pk,
        )
        sealed = seal(sk, b"payload", b"\x03" * 12)
        with pytest.raises(SealRejected):
            open_sealed(other, sealed)

    def test_keystream_determinism(self):
        sk = self._key()
        assert seal(sk, b"abc", b"\x04" * 12) == seal(sk, b"abc", b"\x04" * 12)
        assert seal(sk, b"abc", b"\x04" * 12) != seal(sk, b"abc", b"\x05" * 12)

    def test_bad_nonce_length(self):
        with pytest.raises(ValueError):
            seal(self._key(), b"m", b"\x00" * 11)

    def test_wire_roundtrip(self):
        sk = self._key()
        sealed = seal(sk, b"key material", b"\x06" * 12)
        raw = encode_sealed(sealed)
        assert raw[12] == 32
        assert decode_sealed(raw) == sealed
        with pytest.raises(DecodeError):
            decode_sealed(raw[:-1])
        with pytest.raises(DecodeError):
            decode_sealed(raw[:10])

    @settings(max_examples=50)
    @given(st.binary(max_size=128), st.binary(min_size=12, max_size=12))
    def test_roundtrip_property(self, plaintext, nonce):
        sk = self._key()
        assert open_sealed(sk, seal(sk, plaintext, nonce)) == plaintext

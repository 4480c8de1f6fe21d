import numpy as np
import pytest

from mbcross.rng import RandomStream, Xoshiro256, splitmix64_at

MASK = (1 << 64) - 1


def ref_splitmix(seed, count):
    out, s = [], seed
    for _ in range(count):
        s = (s + 0x9E3779B97F4A7C15) & MASK
        z = s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        out.append(z ^ (z >> 31))
    return out


def ref_xoshiro(state, count):
    s = list(state)
    rotl = lambda x, k: ((x << k) | (x >> (64 - k))) & MASK
    out = []
    for _ in range(count):
        out.append((rotl((s[1] * 5) & MASK, 7) * 9) & MASK)
        t = (s[1] << 17) & MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
    return out


def test_splitmix_known_answers():
    expected = [6457827717110365317, 3203168211198807973, 9817491932198370423,
                4593380528125082431, 16408922859458223821]
    assert [int(x) for x in splitmix64_at(1234567, np.arange(1, 6))] == expected
    assert ref_splitmix(1234567, 5) == expected


def test_xoshiro_known_answers():
    gen = Xoshiro256(0, [0])
    gen.s = np.array([[1], [2], [3], [4]], dtype=np.uint64)
    got = [int(gen.next_u64()[0]) for _ in range(4)]
    assert got == [11520, 0, 1509978240, 1215971899390074240]
    assert ref_xoshiro([1, 2, 3, 4], 4) == got


@pytest.mark.parametrize("seed", [0, 42, MASK, 0xDEADBEEFCAFEBABE])
def test_stream_derivation_matches_scalar_reference(seed):
    ids = [0, 1, 7, 1000, 2 ** 40]
    gen = Xoshiro256(seed, ids)
    draws = np.stack([gen.next_u64() for _ in range(6)])
    for col, r in enumerate(ids):
        state = ref_splitmix((seed + 4 * r * 0x9E3779B97F4A7C15) & MASK, 4)
        assert [int(x) for x in draws[:, col]] == ref_xoshiro(state, 6)


def test_uniform_uses_top_bits():
    a, b = Xoshiro256(9, [3]), Xoshiro256(9, [3])
    u = a.uniform()[0]
    assert u == (int(b.next_u64()[0]) >> 11) / 2.0 ** 53
    many = Xoshiro256(1, np.arange(20000)).uniform()
    assert many.min() >= 0.0 and many.max() < 1.0
    assert abs(many.mean() - 0.5) < 0.01


def test_keep_preserves_streams():
    full = Xoshiro256(5, [0, 1, 2, 3])
    full.next_u64()
    full.keep(np.array([False, True, False, True]))
    ref = Xoshiro256(5, [1, 3])
    ref.next_u64()
    assert np.array_equal(full.next_u64(), ref.next_u64())
    assert list(full.stream_ids) == [1, 3]


def test_stream_handle():
    a = RandomStream(11, 2).generator().next_u64()
    b = Xoshiro256(11, [2]).next_u64()
    assert np.array_equal(a, b)
    assert not np.array_equal(a, RandomStream(11, 3).generator().next_u64())

import math

from unitax.rng import SplitMix64


def test_same_seed_same_stream():
    a = SplitMix64(123)
    b = SplitMix64(123)
    assert [a.next_u64() for _ in range(100)] == [b.next_u64() for _ in range(100)]


def test_different_seeds_differ():
    assert SplitMix64(1).next_u64() != SplitMix64(2).next_u64()


def test_uniform_range_and_log_safety():
    rng = SplitMix64(7)
    for _ in range(10000):
        u = rng.uniform()
        assert 0.0 < u < 1.0
        math.log(u)  # must never raise


def test_normal_moments():
    rng = SplitMix64(42)
    xs = rng.normals(200000)
    n = len(xs)
    mean = sum(xs) / n
    var = sum((x - mean) ** 2 for x in xs) / n
    assert abs(mean) < 4 / math.sqrt(n)
    assert abs(var - 1.0) < 0.02


def test_fork_independence_and_determinism():
    base = SplitMix64(9)
    f1 = base.fork(1)
    f2 = base.fork(2)
    again = SplitMix64(9).fork(1)
    s1 = [f1.next_u64() for _ in range(10)]
    assert s1 == [again.next_u64() for _ in range(10)]
    assert s1 != [f2.next_u64() for _ in range(10)]

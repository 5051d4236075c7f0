import random

import pytest

from concretix.versions import (
    Version,
    VersionConstraint,
    version_compare,
    version_satisfies,
)


def test_numeric_segment_order():
    assert version_compare(Version("1.2.8"), Version("1.2.11")) < 0
    assert version_compare(Version("1.10.2"), Version("1.9")) > 0


def test_missing_segments_are_zero():
    assert version_compare(Version("1.0"), Version("1.0.0")) == 0
    assert Version("1.0") == Version("1.0.0")
    assert hash(Version("1.0")) == hash(Version("1.0.0"))


def test_numeric_orders_before_alphabetic():
    assert Version("1.2") < Version("1.a")
    assert Version("1") < Version("1.a")


def test_total_order_properties_on_random_versions():
    rng = random.Random(42)

    def rand_version():
        n = rng.randint(1, 4)
        segs = []
        for _ in range(n):
            if rng.random() < 0.8:
                segs.append(str(rng.randint(0, 12)))
            else:
                segs.append(rng.choice(["a", "b", "rc1", "beta"]))
        return Version(".".join(segs))

    versions = [rand_version() for _ in range(120)]
    for _ in range(400):
        a, b, c = rng.choice(versions), rng.choice(versions), rng.choice(versions)
        # antisymmetry
        assert not (a < b and b < a)
        if a < b and b < c:
            assert a < c  # transitivity
        assert (a < b) or (b < a) or (a == b)  # totality


def test_open_lower_range():
    c = VersionConstraint.parse("1.0.7:")
    assert version_satisfies("1.0.8", c)
    assert version_satisfies("1.0.7", c)
    assert not version_satisfies("1.0.6", c)


def test_upper_and_closed_ranges():
    assert version_satisfies("1.2", ":1.9")
    assert not version_satisfies("2.0", ":1.9")
    assert version_satisfies("1.3", "1.2:1.4")
    assert not version_satisfies("1.5", "1.2:1.4")


def test_point_prefix_match():
    c = VersionConstraint.parse("1.10")
    assert version_satisfies("1.10", c)
    assert version_satisfies("1.10.2", c)
    assert not version_satisfies("1.100", c)
    assert not version_satisfies("1.11", c)


def test_point_satisfaction_matches_equality_for_exact_points():
    rng = random.Random(7)
    for _ in range(100):
        segs = [str(rng.randint(0, 9)) for _ in range(rng.randint(1, 3))]
        v = Version(".".join(segs))
        point = VersionConstraint.parse(str(v))
        w = Version(".".join(str(rng.randint(0, 9)) for _ in range(len(segs))))
        if version_compare(v, w) == 0:
            assert point.satisfies(w)
        if point.satisfies(w) and len(w.segments) <= len(v.segments):
            assert version_compare(v, w) == 0


def test_union_constraint():
    c = VersionConstraint.parse("1.2:1.4,1.6:")
    assert c.satisfies(Version("1.3"))
    assert not c.satisfies(Version("1.5"))
    assert c.satisfies(Version("1.7"))


def test_intersection():
    a = VersionConstraint.parse("1.2.8:")
    b = VersionConstraint.parse("1.2.11")
    both = a.intersect(b)
    assert both is not None
    assert both.render() == "1.2.11"

    empty = VersionConstraint.parse(":1.0").intersect(VersionConstraint.parse("2.0:"))
    assert empty is None


def test_any_constraint():
    any_c = VersionConstraint.any()
    assert any_c.is_any()
    assert any_c.satisfies(Version("42"))
    assert any_c.render() == ""
    assert VersionConstraint.parse(":").satisfies(Version("0.1"))


def test_invalid_versions_rejected():
    with pytest.raises(ValueError):
        Version("")
    with pytest.raises(ValueError):
        Version("1..2 three")
    with pytest.raises(ValueError):
        VersionConstraint.parse("2.0:1.0")

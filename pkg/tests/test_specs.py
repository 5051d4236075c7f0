import random

import pytest

from concretix.specs import (
    AbstractSpec,
    Conflict,
    DuplicateVariant,
    SpecNode,
    SpecSyntaxError,
    merge_constraints,
    parse_spec,
    render_spec,
)
from concretix.versions import VersionConstraint


def test_root_with_version_and_dependency():
    spec = parse_spec("hdf5@1.10.2 ^zlib")
    assert spec.root.name == "hdf5"
    assert spec.root.versions.render() == "1.10.2"
    assert len(spec.deps) == 1
    assert spec.deps[0].name == "zlib"
    assert spec.deps[0].is_unconstrained()


def test_compiler_with_version():
    spec = parse_spec("hdf5%gcc@10.3.1")
    assert spec.root.compiler == "gcc"
    assert spec.root.compiler_versions.render() == "10.3.1"


def test_boolean_variants():
    on = parse_spec("hdf5+mpi")
    off = parse_spec("hdf5~mpi")
    assert on.root.variants == {"mpi": "true"}
    assert off.root.variants == {"mpi": "false"}


def test_key_value_variants_and_fields():
    spec = parse_spec("hdf5 api=v112 target=skylake os=ubuntu22")
    assert spec.root.variants == {"api": "v112"}
    assert spec.root.target == "skylake"
    assert spec.root.os == "ubuntu22"


def test_sigils_attach_to_most_recent_node():
    spec = parse_spec("a@1.0 ^b@2.0+flag ^c%gcc")
    assert spec.root.versions.render() == "1.0"
    b = spec.dep_named("b")
    assert b.versions.render() == "2.0"
    assert b.variants == {"flag": "true"}
    assert spec.dep_named("c").compiler == "gcc"


def test_duplicate_variant_rejected():
    with pytest.raises(DuplicateVariant):
        parse_spec("hdf5+mpi~mpi")


def test_syntax_error_position():
    with pytest.raises(SpecSyntaxError) as exc:
        parse_spec("hdf5 bad")
    assert exc.value.pos >= 5


def test_empty_spec_rejected():
    with pytest.raises(SpecSyntaxError):
        parse_spec("   ")


def test_render_round_trip_simple():
    for text in ("hdf5@1.10.2 ^zlib", "zlib", "a+x~y k=v os=o target=t ^b@1:2"):
        spec = parse_spec(text)
        rendered = render_spec(spec)
        again = parse_spec(rendered)
        assert render_spec(again) == rendered


def test_render_orders_bool_variants_before_key_values():
    spec = parse_spec("p zeta=1 +beta ~alpha")
    assert render_spec(spec) == "p~alpha+beta zeta=1"


def test_round_trip_random_specs():
    rng = random.Random(99)
    names = ["alpha", "beta", "gamma", "delta"]
    for _ in range(120):
        node_count = rng.randint(1, 3)
        parts = []
        for i in range(node_count):
            text = ("" if i == 0 else "^") + rng.choice(names) + str(i)
            if rng.random() < 0.6:
                text += f"@{rng.randint(1, 4)}.{rng.randint(0, 9)}"
                if rng.random() < 0.3:
                    text += ":"
            if rng.random() < 0.4:
                text += rng.choice(["+opt", "~opt"])
            if rng.random() < 0.3:
                text += f" k{rng.randint(0, 2)}=v{rng.randint(0, 2)}"
            if rng.random() < 0.3:
                text += f"%gcc@{rng.randint(8, 12)}"
            parts.append(text)
        source = " ".join(parts)
        spec = parse_spec(source)
        rendered = render_spec(spec)
        assert render_spec(parse_spec(rendered)) == rendered


def test_merge_identity():
    merged = merge_constraints(parse_spec("hdf5@1.10.2"), parse_spec("hdf5"))
    assert render_spec(merged) == "hdf5@1.10.2"


def test_merge_version_ranges():
    merged = merge_constraints(parse_spec("zlib@1.2.8:"), parse_spec("zlib@1.2.11"))
    assert merged.root.versions.render() == "1.2.11"


def test_merge_variant_conflict():
    with pytest.raises(Conflict):
        merge_constraints(parse_spec("hdf5+mpi"), parse_spec("hdf5~mpi"))


def test_merge_anonymous_side():
    anon = AbstractSpec(SpecNode(versions=VersionConstraint.parse("2:")))
    named = parse_spec("pkg@:3")
    merged = merge_constraints(named, anon)
    assert merged.root.name == "pkg"
    assert merged.root.versions.render() == "2:3"


def test_merge_commutative_and_associative_on_conflict_free_inputs():
    rng = random.Random(3)
    pool = [
        "p@1:3",
        "p@2:4",
        "p+x",
        "p k=v",
        "p%gcc",
        "p ^d@1:",
        "p ^d@:5",
        "p os=linux",
    ]
    for _ in range(60):
        a, b, c = (parse_spec(rng.choice(pool)) for _ in range(3))
        try:
            ab_c = merge_constraints(merge_constraints(a, b), c)
            a_bc = merge_constraints(a, merge_constraints(b, c))
            ba = merge_constraints(b, a)
            ab = merge_constraints(a, b)
        except Conflict:
            continue
        assert render_spec(ab) == render_spec(ba)
        assert render_spec(ab_c) == render_spec(a_bc)


def test_merge_dependency_constraints():
    left = parse_spec("app ^zlib@1.2.8:")
    right = parse_spec("app ^zlib@:1.2.11 ^bzip2")
    merged = merge_constraints(left, right)
    assert merged.dep_named("zlib").versions.render() == "1.2.8:1.2.11"
    assert merged.dep_named("bzip2") is not None

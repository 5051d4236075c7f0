import json
from pathlib import Path

import pytest

from concretix.repo import (
    DanglingHash,
    EmptyRepo,
    InstalledDatabase,
    RepoParseError,
    UnknownDependency,
    UnknownPackage,
    load_installed,
    load_repo,
    possible_dependencies,
    validate_repo,
)

FIXTURES = Path(__file__).parent / "fixtures"


def test_load_basic_repo():
    repo = load_repo(FIXTURES / "basic")
    example = repo.recipe("example")
    assert example.declared_version_strings() == ["1.1.0", "1.0.0"]
    assert [v.name for v in example.variants] == ["bzip"]
    assert example.variant("bzip").default == "true"
    targets = [d.target.name for d in example.depends]
    assert targets == ["bzip2", "zlib", "zlib", "mpi"]
    whens = [d.when.render() if d.when else None for d in example.depends]
    assert whens[0] == "+bzip"
    assert whens[2] == "@1.1.0:"
    assert repo.virtuals == {"mpi": ["mpichlike", "openmpilike"]}
    assert repo.config.target_names() == ["skylake", "x86_64", "aarch64"]
    assert repo.config.preferred_compilers == ["gcc", "clang"]


def test_empty_repo_rejected(tmp_path):
    with pytest.raises(EmptyRepo):
        load_repo(tmp_path)


def test_unknown_dependency_rejected(tmp_path):
    (tmp_path / "foo.pkg").write_text(
        "name: foo\nversions: [1.0]\ndepends:\n  - spec: nosuchpkg\n"
    )
    with pytest.raises(UnknownDependency) as exc:
        load_repo(tmp_path)
    assert exc.value.target == "nosuchpkg"


def test_recipe_name_must_match_filename(tmp_path):
    (tmp_path / "foo.pkg").write_text("name: bar\nversions: [1.0]\n")
    with pytest.raises(RepoParseError):
        load_repo(tmp_path)


def test_versions_must_descend(tmp_path):
    (tmp_path / "foo.pkg").write_text("name: foo\nversions: [1.0, 2.0]\n")
    with pytest.raises(RepoParseError):
        load_repo(tmp_path)


def test_self_dependency_rejected(tmp_path):
    (tmp_path / "foo.pkg").write_text(
        "name: foo\nversions: [1.0]\ndepends:\n  - spec: foo\n"
    )
    with pytest.raises(RepoParseError):
        load_repo(tmp_path)


def test_possible_dependencies_closure():
    repo = load_repo(FIXTURES / "basic")
    assert possible_dependencies(repo, ["example"]) == {
        "example",
        "zlib",
        "bzip2",
        "mpichlike",
        "openmpilike",
    }


def test_possible_dependencies_leaf_and_virtual():
    repo = load_repo(FIXTURES / "basic")
    assert possible_dependencies(repo, ["zlib"]) == {"zlib"}
    assert possible_dependencies(repo, ["mpi"]) == {"mpichlike", "openmpilike"}
    with pytest.raises(UnknownPackage):
        possible_dependencies(repo, ["nosuch"])


def test_possible_dependencies_monotone(tmp_path):
    (tmp_path / "a.pkg").write_text("name: a\nversions: [1.0]\n")
    (tmp_path / "config").write_text("{}")
    small = load_repo(tmp_path)
    before = possible_dependencies(small, ["a"])
    (tmp_path / "b.pkg").write_text("name: b\nversions: [1.0]\n")
    (tmp_path / "a.pkg").write_text(
        "name: a\nversions: [1.0]\ndepends:\n  - spec: b\n"
    )
    bigger = load_repo(tmp_path)
    after = possible_dependencies(bigger, ["a"])
    assert before <= after


def test_load_repo_idempotent():
    first = load_repo(FIXTURES / "basic")
    second = load_repo(FIXTURES / "basic")
    assert sorted(first.recipes) == sorted(second.recipes)
    assert first.virtuals == second.virtuals


def test_installed_database_roundtrip(tmp_path):
    db_path = tmp_path / "installed.json"
    db_path.write_text(
        json.dumps(
            {
                "entries": {
                    "7fatdeadbeef": {
                        "name": "zlib",
                        "version": "1.2.11",
                        "variants": {"pic": True},
                        "compiler": ["gcc", "10.3.1"],
                        "os": "ubuntu22",
                        "target": "x86_64",
                        "dependencies": {},
                    }
                }
            }
        )
    )
    db = load_installed(db_path)
    assert len(db) == 1
    entry = db.entries["7fatdeadbeef"]
    assert entry.name == "zlib"
    assert entry.variants == (("pic", "true"),)


def test_empty_installed_database(tmp_path):
    db_path = tmp_path / "installed.json"
    db_path.write_text(json.dumps({"entries": {}}))
    assert len(load_installed(db_path)) == 0
    assert len(InstalledDatabase.empty()) == 0


def test_dangling_hash_rejected(tmp_path):
    db_path = tmp_path / "installed.json"
    db_path.write_text(
        json.dumps(
            {
                "entries": {
                    "aaa": {
                        "name": "app",
                        "version": "1.0",
                        "os": "ubuntu22",
                        "target": "x86_64",
                        "dependencies": {"zlib": "missing"},
                    }
                }
            }
        )
    )
    with pytest.raises(DanglingHash):
        load_installed(db_path)


def test_validate_repo_clean_fixture():
    repo = load_repo(FIXTURES / "basic")
    assert validate_repo(repo) == []


def test_validate_repo_warnings(tmp_path):
    (tmp_path / "foo.pkg").write_text(
        """
name: foo
versions:
  - {version: 2.0, deprecated: true}
  - {version: 1.0, deprecated: true}
conflicts:
  - {matcher: "+nosuchvariant", message: "broken"}
"""
    )
    (tmp_path / "config").write_text("{}")
    repo = load_repo(tmp_path)
    warnings = validate_repo(repo)
    assert any("deprecated" in w for w in warnings)
    assert any("nosuchvariant" in w for w in warnings)

import random

import pytest

from unitax import problems
from unitax.errors import (
    AmbiguousDeclaration,
    InconsistentDeclaration,
    ValidationError,
)
from unitax.resolve import (
    build_universal_from_declarations,
    fixpoint_atom_sets,
    fixpoint_mappings,
    initial_state,
    parse_declarations,
    resolve_fixpoint,
    resolve_step,
)
from unitax.taxonomy import build_universal_from_atoms, collection_from_dict


def random_collection(rng, max_datasets=6, max_classes=12, max_atoms=40):
    n_atoms = rng.randint(2, max_atoms)
    atoms = [f"a{i}" for i in range(n_atoms)]
    datasets = []
    for d in range(rng.randint(1, max_datasets)):
        ids = list(range(n_atoms))
        rng.shuffle(ids)
        if d > 0:
            ids = ids[: rng.randint(1, n_atoms)]
        n_classes = rng.randint(1, min(max_classes, len(ids)))
        cuts = sorted(rng.sample(range(1, len(ids)), n_classes - 1)) if n_classes > 1 else []
        classes = []
        start = 0
        for ci, end in enumerate(cuts + [len(ids)]):
            classes.append({"name": f"c{ci}", "atoms": [atoms[i] for i in ids[start:end]]})
            start = end
        datasets.append({"name": f"D{d}", "classes": classes})
    return collection_from_dict({"atoms": atoms, "datasets": datasets})


# ---------------------------------------------------------------------------
# rule-based fixpoint


def test_rule1_merges_equal_classes():
    col = collection_from_dict({
        "atoms": ["sky"],
        "datasets": [
            {"name": "WD", "classes": [{"name": "sky", "atoms": ["sky"]}]},
            {"name": "City", "classes": [{"name": "sky", "atoms": ["sky"]}]},
        ],
    })
    state = initial_state(col)
    state, applied = resolve_step(state)
    assert applied is not None and applied.rule == 1
    assert resolve_step(state)[1] is None  # already at the fixpoint
    assert fixpoint_atom_sets(col) == {frozenset({0})}
    mappings = fixpoint_mappings(col)
    assert mappings[("WD", "sky")] == mappings[("City", "sky")]


def test_rule2_splits_superset():
    # KITTI car contains vans, ADE20k car does not
    col = collection_from_dict({
        "atoms": ["car", "van"],
        "datasets": [
            {"name": "KITTI", "classes": [{"name": "car", "atoms": ["car", "van"]}]},
            {"name": "ADE20k", "classes": [{"name": "car", "atoms": ["car"]}]},
        ],
    })
    state = initial_state(col)
    state, applied = resolve_step(state)
    assert applied.rule == 2
    parts = fixpoint_atom_sets(col)
    assert sorted(parts, key=sorted) == [frozenset({0}), frozenset({1})]
    mappings = fixpoint_mappings(col)
    assert len(mappings[("KITTI", "car")]) == 2
    assert len(mappings[("ADE20k", "car")]) == 1
    assert set(mappings[("ADE20k", "car")]) <= set(mappings[("KITTI", "car")])


def test_rule3_replaces_overlap_with_three_parts():
    # VIPER truck has pickups, ADE20k truck has trailers
    col = collection_from_dict({
        "atoms": ["truck", "pickup", "trailer"],
        "datasets": [
            {"name": "VIPER", "classes": [{"name": "truck", "atoms": ["truck", "pickup"]}]},
            {"name": "ADE20k", "classes": [{"name": "truck", "atoms": ["truck", "trailer"]}]},
        ],
    })
    state = initial_state(col)
    state, applied = resolve_step(state)
    assert applied.rule == 3
    parts = fixpoint_atom_sets(col)
    assert sorted(parts, key=sorted) == [
        frozenset({0}), frozenset({1}), frozenset({2}),
    ]
    mappings = fixpoint_mappings(col)
    viper = set(mappings[("VIPER", "truck")])
    ade = set(mappings[("ADE20k", "truck")])
    assert len(viper) == 2 and len(ade) == 2
    assert len(viper & ade) == 1  # the shared truck part


def test_fixpoint_matches_signature_grouping_on_random_collections():
    rng = random.Random(7)
    for _ in range(20):
        col = random_collection(rng)
        tax, maps = build_universal_from_atoms(col)
        expected = sorted((u.atoms for u in tax.classes), key=sorted)
        assert sorted(fixpoint_atom_sets(col), key=sorted) == expected
        mappings = fixpoint_mappings(col)
        for ds in col.datasets:
            for cls in ds.classes:
                got = sorted(mappings[(ds.name, cls.name)], key=sorted)
                want = sorted((tax.classes[u].atoms for u in maps.mapped(ds.name, cls.name)), key=sorted)
                assert got == want


def test_fixpoint_terminates_and_is_disjoint():
    rng = random.Random(11)
    col = random_collection(rng)
    state, steps = resolve_fixpoint(col)
    seen = set()
    for wc in state.classes:
        assert not (seen & wc.atoms)
        seen |= wc.atoms
    assert resolve_step(state)[1] is None


# ---------------------------------------------------------------------------
# declaration programs


def test_parse_declarations_basics():
    program = parse_declarations(
        """
        # comment only line
        dataset KITTI: car
        equiv WD.sky City.sky   # trailing comment
        subset ADE20k.car KITTI.car
        overlap VIPER.truck ADE20k.truck name=pickup
        """
    )
    assert [s.kind for s in program.statements] == ["equiv", "subset", "overlap"]
    assert program.statements[2].name == "pickup"
    assert program.datasets["KITTI"] == ["car"]
    assert "sky" in program.datasets["WD"]


@pytest.mark.parametrize("bad", [
    "merge A.x B.y",
    "equiv A.x",
    "subset A.x B.y name=z",
    "equiv A.x A.x",
])
def test_parse_declarations_rejects_malformed(bad):
    with pytest.raises(ValidationError):
        parse_declarations(bad)


def test_equiv_program_compiles_to_single_class():
    program = parse_declarations("equiv WD.sky City.sky")
    col, tax, maps = build_universal_from_declarations(program)
    assert len(tax.classes) == 1
    assert tax.classes[0].display_name == "sky"
    assert maps.mapped("WD", "sky") == maps.mapped("City", "sky") == (0,)


def test_empty_program_gives_naive_concatenation():
    program = parse_declarations("dataset A: x y\ndataset B: u v w")
    col, tax, maps = build_universal_from_declarations(program)
    assert len(tax.classes) == 5
    for ds, cls in [("A", "x"), ("A", "y"), ("B", "u"), ("B", "v"), ("B", "w")]:
        assert len(maps.mapped(ds, cls)) == 1


def test_subset_program_splits_host():
    program = parse_declarations("subset ADE20k.car KITTI.car")
    col, tax, maps = build_universal_from_declarations(program)
    assert len(tax.classes) == 2
    kitti = maps.mapped("KITTI", "car")
    ade = maps.mapped("ADE20k", "car")
    assert len(kitti) == 2 and len(ade) == 1
    assert set(ade) <= set(kitti)


def test_overlap_program_names_the_intersection():
    program = parse_declarations("overlap VIPER.truck ADE20k.truck name=pickup")
    col, tax, maps = build_universal_from_declarations(program)
    assert len(tax.classes) == 3
    viper = set(maps.mapped("VIPER", "truck"))
    ade = set(maps.mapped("ADE20k", "truck"))
    (shared,) = viper & ade
    assert tax.classes[shared].display_name == "pickup"


def test_subset_chain_resolves_nested_classes():
    program = parse_declarations(
        "subset B.car A.vehicle\n"
        "subset C.sportscar B.car\n"
    )
    col, tax, maps = build_universal_from_declarations(program)
    assert len(maps.mapped("A", "vehicle")) == 3
    assert len(maps.mapped("B", "car")) == 2
    assert len(maps.mapped("C", "sportscar")) == 1
    assert set(maps.mapped("C", "sportscar")) <= set(maps.mapped("B", "car"))
    assert set(maps.mapped("B", "car")) <= set(maps.mapped("A", "vehicle"))


def test_equiv_after_subset_is_inconsistent():
    program = parse_declarations(
        "subset B.car A.vehicle\n"
        "equiv B.car A.vehicle\n"
    )
    with pytest.raises((InconsistentDeclaration, AmbiguousDeclaration, ValidationError)):
        build_universal_from_declarations(program)

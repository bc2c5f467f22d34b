"""Classes as atom sets, universal taxonomy construction and filtering.

A collection models every dataset-specific class as a finite set of
indivisible concept atoms.  Universal classes are the groups of atoms that
share an identical membership signature over all dataset classes; each
dataset class then maps to the set of universal classes it contains.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from .errors import InvalidClass, NotFound, ValidationError


class Relation(enum.Enum):
    EQUAL = "equal"
    SUBSET = "subset"
    SUPERSET = "superset"
    OVERLAP = "overlap"
    DISJOINT = "disjoint"


def classify_relation(a: frozenset, b: frozenset) -> Relation:
    """Classify the set-theoretic relation of ``a`` with respect to ``b``.

    Overlap means neither contains the other and the intersection is
    non-empty.  Both sets must be non-empty.
    """
    if not a or not b:
        raise InvalidClass("classify_relation requires non-empty atom sets")
    if a == b:
        return Relation.EQUAL
    if a < b:
        return Relation.SUBSET
    if a > b:
        return Relation.SUPERSET
    if a & b:
        return Relation.OVERLAP
    return Relation.DISJOINT


@dataclass(frozen=True)
class ConceptAtom:
    id: int
    name: str


@dataclass(frozen=True)
class DatasetClass:
    dataset: str
    name: str
    atoms: frozenset  # of atom ids


@dataclass(frozen=True)
class DatasetTaxonomy:
    name: str
    classes: tuple  # of DatasetClass


@dataclass(frozen=True)
class Collection:
    atoms: tuple  # of ConceptAtom, ids dense 0..A-1
    datasets: tuple  # of DatasetTaxonomy

    def atom_names(self, ids) -> list:
        return [self.atoms[i].name for i in sorted(ids)]

    def dataset(self, name: str) -> DatasetTaxonomy:
        for ds in self.datasets:
            if ds.name == name:
                return ds
        raise NotFound(f"unknown dataset {name!r}")

    def all_classes(self):
        """Iterate (dataset index, class index, DatasetClass)."""
        for d, ds in enumerate(self.datasets):
            for c, cls in enumerate(ds.classes):
                yield d, c, cls


@dataclass(frozen=True)
class UniversalClass:
    id: int
    atoms: frozenset  # of atom ids
    signature: frozenset  # of (dataset index, class index) pairs
    display_name: str


@dataclass(frozen=True)
class UniversalTaxonomy:
    classes: tuple  # of UniversalClass
    trainable: tuple = ()  # of bool, parallel to classes
    dominators: dict = field(default_factory=dict)  # untrainable id -> dominator id

    def trainable_ids(self) -> list:
        if not self.trainable:
            return [u.id for u in self.classes]
        return [u.id for u, t in zip(self.classes, self.trainable) if t]


@dataclass(frozen=True)
class MappingSet:
    """Per dataset, per class name: ordered tuple of universal class ids."""

    by_dataset: dict  # dataset name -> {class name -> tuple of universal ids}

    def mapped(self, dataset: str, cls: str) -> tuple:
        try:
            per_class = self.by_dataset[dataset]
        except KeyError:
            raise NotFound(f"unknown dataset {dataset!r}")
        try:
            return per_class[cls]
        except KeyError:
            raise NotFound(f"unknown class {dataset!r}.{cls!r}")


def validate_collection(col: Collection) -> None:
    """Check all structural invariants, raising ValidationError on the first
    violation with a message naming the invariant."""
    names = [a.name for a in col.atoms]
    for i, atom in enumerate(col.atoms):
        if atom.id != i:
            raise ValidationError(f"atom ids must be dense 0..A-1, got id {atom.id} at position {i}")
        if not atom.name:
            raise ValidationError("atom names must be non-empty")
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise ValidationError(f"atom names must be unique, duplicated: {dup}")
    ds_names = [ds.name for ds in col.datasets]
    if len(set(ds_names)) != len(ds_names):
        raise ValidationError("dataset names must be unique")
    referenced = set()
    for ds in col.datasets:
        cls_names = [c.name for c in ds.classes]
        if len(set(cls_names)) != len(cls_names):
            raise ValidationError(f"class names must be unique within dataset {ds.name!r}")
        for c in ds.classes:
            if not c.atoms:
                raise InvalidClass(f"class {ds.name}.{c.name} has an empty atom set")
            bad = [i for i in c.atoms if not 0 <= i < len(col.atoms)]
            if bad:
                raise ValidationError(f"class {ds.name}.{c.name} references unknown atoms {bad}")
            referenced |= c.atoms
        for i in range(len(ds.classes)):
            for j in range(i + 1, len(ds.classes)):
                if ds.classes[i].atoms & ds.classes[j].atoms:
                    raise ValidationError(
                        f"classes within a dataset must be pairwise disjoint: "
                        f"{ds.name}.{ds.classes[i].name} intersects {ds.name}.{ds.classes[j].name}"
                    )
    orphans = set(range(len(col.atoms))) - referenced
    if orphans:
        raise ValidationError(
            f"every atom must be referenced by at least one class, orphans: {sorted(orphans)}"
        )


def build_universal_from_atoms(col: Collection):
    """Group atoms by membership signature into disjoint universal classes.

    Returns (UniversalTaxonomy, MappingSet).  Class order is deterministic:
    sorted by signature, then atom ids.  Display names join atom names
    with "+".
    """
    validate_collection(col)
    signature_of_atom = {i: set() for i in range(len(col.atoms))}
    for d, c, cls in col.all_classes():
        for a in cls.atoms:
            signature_of_atom[a].add((d, c))
    groups = {}
    for a in range(len(col.atoms)):
        sig = frozenset(signature_of_atom[a])
        groups.setdefault(sig, set()).add(a)
    ordered = sorted(
        groups.items(), key=lambda kv: (tuple(sorted(kv[0])), tuple(sorted(kv[1])))
    )
    classes = []
    for uid, (sig, atoms) in enumerate(ordered):
        display = "+".join(col.atom_names(atoms))
        classes.append(UniversalClass(uid, frozenset(atoms), sig, display))
    tax = UniversalTaxonomy(tuple(classes), trainable=tuple(True for _ in classes))
    by_dataset = {}
    for d, ds in enumerate(col.datasets):
        per_class = {}
        for c, cls in enumerate(ds.classes):
            per_class[cls.name] = tuple(u.id for u in classes if (d, c) in u.signature)
        by_dataset[ds.name] = per_class
    return tax, MappingSet(by_dataset)


def filter_untrainable(tax: UniversalTaxonomy, maps: MappingSet):
    """Drop universal classes whose signature is contained in a sibling's.

    A class u is untrainable iff some other class u' is a subset of every
    dataset class that u is a subset of, i.e. signature(u) <= signature(u').
    The dominator reported for u is such a u' with the largest signature
    (ties broken by lowest id).  Returns (taxonomy, mappings, report) where
    the report is a list of (untrainable id, dominator id) pairs.
    """
    trainable = []
    dominators = {}
    for u in tax.classes:
        candidates = [
            v for v in tax.classes if v.id != u.id and u.signature <= v.signature
        ]
        if candidates:
            dom = max(candidates, key=lambda v: (len(v.signature), -v.id))
            trainable.append(False)
            dominators[u.id] = dom.id
        else:
            trainable.append(True)
    report = sorted(dominators.items())
    filtered_tax = UniversalTaxonomy(tax.classes, tuple(trainable), dict(dominators))
    kept = {u.id for u, t in zip(tax.classes, trainable) if t}
    by_dataset = {
        ds: {cls: tuple(u for u in uids if u in kept) for cls, uids in per.items()}
        for ds, per in maps.by_dataset.items()
    }
    return filtered_tax, MappingSet(by_dataset), report


def mapping_matrix(dataset: str, col: Collection, tax: UniversalTaxonomy,
                   maps: MappingSet, include_void: bool = False):
    """Binary matrix mapping dataset classes to trainable universal classes.

    Returns (row_names, column_names, rows) where rows is a list of lists of
    0/1 ints.  The optional final "__void__" row marks universal classes
    absent from every class of the dataset.
    """
    ds = col.dataset(dataset)
    columns = [u for u in tax.classes if tax.trainable[u.id]] if tax.trainable else list(tax.classes)
    col_ids = [u.id for u in columns]
    row_names = [c.name for c in ds.classes]
    rows = []
    covered = set()
    for cls in ds.classes:
        mapped = set(maps.mapped(dataset, cls.name))
        covered |= mapped
        rows.append([1 if uid in mapped else 0 for uid in col_ids])
    if include_void:
        row_names.append("__void__")
        rows.append([0 if uid in covered else 1 for uid in col_ids])
    return row_names, [u.display_name for u in columns], rows


def matrix_csv(row_names, column_names, rows) -> str:
    lines = ["," + ",".join(column_names)]
    for name, row in zip(row_names, rows):
        lines.append(name + "," + ",".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON serialization


def collection_from_dict(data: dict) -> Collection:
    try:
        atom_names = list(data["atoms"])
        datasets = data["datasets"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"collection JSON must contain 'atoms' and 'datasets': {exc}")
    index = {name: i for i, name in enumerate(atom_names)}
    if len(index) != len(atom_names):
        raise ValidationError("atom names must be unique")
    atoms = tuple(ConceptAtom(i, n) for i, n in enumerate(atom_names))
    taxonomies = []
    for ds in datasets:
        classes = []
        for cls in ds["classes"]:
            unknown = [a for a in cls["atoms"] if a not in index]
            if unknown:
                raise ValidationError(
                    f"class {ds['name']}.{cls['name']} references unknown atoms {unknown}"
                )
            classes.append(
                DatasetClass(ds["name"], cls["name"], frozenset(index[a] for a in cls["atoms"]))
            )
        taxonomies.append(DatasetTaxonomy(ds["name"], tuple(classes)))
    col = Collection(atoms, tuple(taxonomies))
    validate_collection(col)
    return col


def collection_to_dict(col: Collection) -> dict:
    return {
        "atoms": [a.name for a in col.atoms],
        "datasets": [
            {
                "name": ds.name,
                "classes": [
                    {"name": c.name, "atoms": col.atom_names(c.atoms)} for c in ds.classes
                ],
            }
            for ds in col.datasets
        ],
    }


def load_collection(path) -> Collection:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: line {exc.lineno}: not valid JSON ({exc.msg})")
    try:
        return collection_from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}")


def taxonomy_to_dict(col: Collection, tax: UniversalTaxonomy, maps: MappingSet) -> dict:
    data = collection_to_dict(col)
    data["universal"] = [
        {
            "id": u.id,
            "display_name": u.display_name,
            "atoms": col.atom_names(u.atoms),
            "signature": [
                [col.datasets[d].name, col.datasets[d].classes[c].name]
                for d, c in sorted(u.signature)
            ],
            "trainable": bool(tax.trainable[u.id]) if tax.trainable else True,
            "dominator": tax.dominators.get(u.id),
        }
        for u in tax.classes
    ]
    data["mappings"] = {
        ds: {cls: list(uids) for cls, uids in per.items()}
        for ds, per in maps.by_dataset.items()
    }
    return data


def taxonomy_from_dict(data: dict):
    """Re-read a built taxonomy file.  Returns (Collection, UniversalTaxonomy,
    MappingSet) and re-validates the universal invariants."""
    col = collection_from_dict(data)
    index = {a.name: a.id for a in col.atoms}
    ds_index = {ds.name: d for d, ds in enumerate(col.datasets)}
    cls_index = {
        (ds.name, c.name): ci for ds in col.datasets for ci, c in enumerate(ds.classes)
    }
    classes = []
    trainable = []
    dominators = {}
    for entry in data["universal"]:
        sig = frozenset((ds_index[d], cls_index[(d, c)]) for d, c in entry["signature"])
        classes.append(
            UniversalClass(
                entry["id"],
                frozenset(index[a] for a in entry["atoms"]),
                sig,
                entry["display_name"],
            )
        )
        trainable.append(bool(entry.get("trainable", True)))
        if entry.get("dominator") is not None:
            dominators[entry["id"]] = entry["dominator"]
    tax = UniversalTaxonomy(tuple(classes), tuple(trainable), dominators)
    maps = MappingSet(
        {
            ds: {cls: tuple(uids) for cls, uids in per.items()}
            for ds, per in data["mappings"].items()
        }
    )
    validate_universal(col, tax, maps)
    return col, tax, maps


def validate_universal(col: Collection, tax: UniversalTaxonomy, maps: MappingSet) -> None:
    """Check the universal-taxonomy invariants against the collection."""
    seen_sigs = set()
    union = set()
    for u in tax.classes:
        if not u.atoms:
            raise ValidationError(f"universal class {u.id} has an empty atom set")
        if u.signature in seen_sigs:
            raise ValidationError("distinct universal classes must have distinct signatures")
        seen_sigs.add(u.signature)
        union |= u.atoms
    for i, u in enumerate(tax.classes):
        for v in tax.classes[i + 1:]:
            if u.atoms & v.atoms:
                raise ValidationError(
                    f"universal classes must be pairwise disjoint: {u.id} intersects {v.id}"
                )
    class_union = set()
    for d, c, cls in col.all_classes():
        class_union |= cls.atoms
        for u in tax.classes:
            inter = u.atoms & cls.atoms
            if inter and not u.atoms <= cls.atoms:
                raise ValidationError(
                    f"universal class {u.id} must be disjoint from or contained in "
                    f"{cls.dataset}.{cls.name}"
                )
            if ((d, c) in u.signature) != (u.atoms <= cls.atoms):
                raise ValidationError(
                    f"signature of universal class {u.id} disagrees with atom containment"
                )
    if union != class_union:
        raise ValidationError(
            "union of universal atoms must equal the union of all dataset-class atoms"
        )
    by_id = {u.id: u for u in tax.classes}
    for d, ds in enumerate(col.datasets):
        for c, cls in enumerate(ds.classes):
            mapped = maps.mapped(ds.name, cls.name)
            expected = [u.id for u in tax.classes if u.atoms <= cls.atoms]
            kept = [u for u in expected if not tax.trainable or tax.trainable[u]]
            if sorted(mapped) not in (sorted(expected), sorted(kept)):
                raise ValidationError(
                    f"mapping of {ds.name}.{cls.name} must be the universal classes "
                    f"contained in it (optionally filtered)"
                )
            for a, b in zip(mapped, mapped[1:]):
                if by_id[a].atoms & by_id[b].atoms:
                    raise ValidationError("mapped sets must be pairwise disjoint")

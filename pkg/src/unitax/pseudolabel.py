"""Universal pseudo-labels from native ground truth and foreign
dataset-specific posteriors.

The candidate universal classes are those the ground-truth label maps to.
Each foreign dataset scores a candidate u by the posterior of its (unique)
class mapping to u, renormalized over the foreign classes that intersect
the ground truth; the ensemble sums scores over foreign datasets and takes
the argmax (ties and all-zero ensembles fall back to the lowest id).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import OrthogonalDataset, UnmappedLabel, ValidationError
from .taxonomy import Collection, MappingSet, UniversalTaxonomy


@dataclass(frozen=True)
class ForeignPrediction:
    dataset: str
    posterior: dict  # class name -> probability, sums to 1

    def validate(self, col: Collection):
        ds = col.dataset(self.dataset)
        known = {c.name for c in ds.classes}
        unknown = sorted(set(self.posterior) - known)
        if unknown:
            raise ValidationError(
                f"foreign posterior for {self.dataset!r} names unknown classes {unknown}"
            )
        total = sum(self.posterior.values())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(
                f"foreign posterior for {self.dataset!r} sums to {total}, not 1"
            )


def conditional_score(foreign: ForeignPrediction, gt_label, u: int,
                      col: Collection, tax: UniversalTaxonomy,
                      maps: MappingSet) -> float:
    """Score of universal class u from one foreign dataset, in [0, 1].

    Zero when the ground truth does not map to u or the foreign dataset has
    no class mapping to u.  Raises OrthogonalDataset when no foreign class
    intersects the ground truth at all.
    """
    gt_dataset, gt_class = gt_label
    if u not in maps.mapped(gt_dataset, gt_class):
        return 0.0
    u_atoms = tax.classes[u].atoms
    gt_atoms = next(
        c.atoms for c in col.dataset(gt_dataset).classes if c.name == gt_class
    )
    ds = col.dataset(foreign.dataset)
    numerator = None
    denominator = 0.0
    for cls in ds.classes:
        p = float(foreign.posterior.get(cls.name, 0.0))
        if cls.atoms & gt_atoms:
            denominator += p
        if u_atoms <= cls.atoms:
            numerator = p
    if numerator is None:
        return 0.0
    if denominator == 0.0:
        raise OrthogonalDataset(
            f"no class of {foreign.dataset!r} intersects {gt_dataset}.{gt_class}"
        )
    return numerator / denominator


def ensemble_pseudo_label(foreign_predictions, gt_label, col: Collection,
                          tax: UniversalTaxonomy, maps: MappingSet):
    """Universal pseudo-label for one sample.

    Returns (universal id, per-candidate score dict, flags).  Flags record
    foreign datasets orthogonal to the ground truth and the all-zero
    fallback to the lowest candidate id.
    """
    gt_dataset, gt_class = gt_label
    candidates = sorted(maps.mapped(gt_dataset, gt_class))
    if not candidates:
        raise UnmappedLabel(f"label {gt_dataset}.{gt_class} maps to no universal class")
    scores = {u: 0.0 for u in candidates}
    flags = []
    for foreign in foreign_predictions:
        if foreign.dataset == gt_dataset:
            continue
        foreign.validate(col)
        for u in candidates:
            try:
                scores[u] += conditional_score(foreign, gt_label, u, col, tax, maps)
            except OrthogonalDataset:
                flags.append(f"orthogonal:{foreign.dataset}")
                break
    best = max(candidates, key=lambda u: (scores[u], -u))
    if all(s == 0.0 for s in scores.values()):
        flags.append("all-zero-fallback")
        best = candidates[0]
    return best, scores, sorted(set(flags))


def relabel_stream(lines, col: Collection, tax: UniversalTaxonomy,
                   maps: MappingSet):
    """Process JSON-lines records.

    Input lines: {"sample_id", "gt_dataset", "gt_class",
    "foreign": {dataset: {class: prob}}}.  Yields output dicts with the
    pseudo-label, per-candidate scores, and flags.
    """
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {lineno}: not valid JSON ({exc.msg})")
        try:
            gt = (record["gt_dataset"], record["gt_class"])
            foreign = [
                ForeignPrediction(ds, dict(post))
                for ds, post in record.get("foreign", {}).items()
            ]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"line {lineno}: malformed record ({exc})")
        label, scores, flags = ensemble_pseudo_label(foreign, gt, col, tax, maps)
        yield {
            "sample_id": record.get("sample_id", lineno),
            "pseudo_label": label,
            "display_name": tax.classes[label].display_name,
            "scores": {str(u): s for u, s in sorted(scores.items())},
            "flags": flags,
        }

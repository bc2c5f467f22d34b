"""Built-in toy problems mirroring the qualitative 2D experiments.

Each factory returns a problem dict in the toy-problem JSON schema
(collection + concepts + seed); geometry and sample counts are calibrated
for the acceptance thresholds.
"""

from __future__ import annotations


def _problem(atoms, datasets, concepts, seed):
    return {
        "atoms": atoms,
        "datasets": [
            {"name": name, "classes": [{"name": c, "atoms": a} for c, a in classes]}
            for name, classes in datasets
        ],
        "concepts": [
            {"atom": atom, "center": [float(x), float(y)], "std": std, "count": count}
            for atom, (x, y), std, count in concepts
        ],
        "seed": seed,
    }


def intersection_problem(seed: int = 0) -> dict:
    """Never-standalone concept at the intersection of two labels.

    The pickup region is labeled truck by D1 and car by D2; no dataset
    labels pickups standalone.  NLL+ should still learn the pickup class.
    """
    return _problem(
        ["truck", "pickup", "car"],
        [
            ("D1", [("truck", ["truck", "pickup"]), ("car", ["car"])]),
            ("D2", [("car", ["car", "pickup"]), ("truck", ["truck"])]),
        ],
        [
            ("truck", (-2.0, 0.0), 0.4, 200),
            ("pickup", (0.0, 0.0), 0.4, 200),
            ("car", (2.0, 0.0), 0.4, 200),
        ],
        seed,
    )


def collapse_problem(seed: int = 0) -> dict:
    """Always-co-labeled siblings: rider/pedestrian/bicycle.

    CamVid labels bicycles and riders jointly, Pascal labels riders and
    pedestrians jointly; rider is the only class receiving signal from both
    sides, so the bicycle and pedestrian logits die off under NLL+.
    """
    return _problem(
        ["bike", "rider", "ped"],
        [
            ("CamVid", [("bicycle", ["bike", "rider"])]),
            ("Pascal", [("person", ["rider", "ped"])]),
        ],
        [
            ("bike", (-1.2, 0.0), 0.8, 200),
            ("rider", (0.0, 0.0), 0.8, 200),
            ("ped", (1.2, 0.0), 0.8, 200),
        ],
        seed,
    )


# Standalone classes present in both splits of the relabeled-city analog.
_SHARED = ["road", "sky", "person", "vegetation",
           "building", "sidewalk", "terrain", "pole"]

# The shared ring sits close enough to the vehicles that shared/vehicle
# boundaries are contested; that is where merging equal classes pays off
# over naive concatenation (merged logits carry full posterior mass).
_SHARED_GEOMETRY = {
    "road": (0.0, 1.6),
    "sky": (0.0, -1.6),
    "person": (-1.9, 0.0),
    "vegetation": (1.9, 0.0),
    "building": (-1.35, 1.35),
    "sidewalk": (1.35, 1.35),
    "terrain": (-1.35, -1.35),
    "pole": (1.35, -1.35),
}


def two_split_problem(seed: int = 0, std: float = 0.55, count: int = 150) -> dict:
    """Relabeled-city analog: two splits with overlapping vehicle groups.

    Split A groups car/bus/truck into four-wheel-vehicle and keeps bicycle
    and motorcycle standalone; split B groups car/bicycle/motorcycle into
    personal-vehicle and keeps bus and truck standalone.  Cars are never
    labeled standalone.
    """
    # The car sits between vehicle classes that receive standalone
    # supervision from one of the splits; cars themselves are only ever
    # labeled through the composite classes.
    vehicles = {
        "car": (0.0, 0.0),
        "bus": (-1.2, 0.6),
        "truck": (-1.2, -0.6),
        "bicycle": (1.2, 0.6),
        "motorcycle": (1.2, -0.6),
    }
    shared = [(name, [name]) for name in _SHARED]
    datasets = [
        (
            "CityA",
            shared
            + [
                ("bicycle", ["bicycle"]),
                ("motorcycle", ["motorcycle"]),
                ("four-wheel-vehicle", ["car", "bus", "truck"]),
            ],
        ),
        (
            "CityB",
            shared
            + [
                ("bus", ["bus"]),
                ("truck", ["truck"]),
                ("personal-vehicle", ["car", "bicycle", "motorcycle"]),
            ],
        ),
    ]
    concepts = [
        (name, center, std, count)
        for name, center in {**vehicles, **_SHARED_GEOMETRY}.items()
    ]
    return _problem(_SHARED + list(vehicles), datasets, concepts, seed)


def cross_eval_problem(seed: int = 0) -> dict:
    """Two datasets with one 1:1 match, one 2:1 match, and one unique class
    each; used to compare default scoring against post-inference mapping
    when evaluating a naive-concatenation model on D2.
    """
    return _problem(
        ["x1", "x2", "x3", "x4", "x5"],
        [
            ("D1", [("a1", ["x1"]), ("a2", ["x2"]), ("a3", ["x3"]), ("a4", ["x4"])]),
            ("D2", [("b1", ["x1"]), ("b23", ["x2", "x3"]), ("b5", ["x5"])]),
        ],
        [
            ("x1", (-2.0, 0.0), 0.7, 200),
            ("x2", (0.0, 1.2), 0.7, 200),
            ("x3", (0.0, -1.2), 0.7, 200),
            ("x4", (2.0, 1.2), 0.7, 200),
            ("x5", (2.0, -1.2), 0.7, 200),
        ],
        seed,
    )


_CITY_COMMON = [
    "road", "sidewalk", "building", "wall", "fence", "pole",
    "traffic-light", "traffic-sign", "vegetation", "terrain", "sky",
    "person", "rider", "train",
]


def relabeled_city_collection() -> dict:
    """Structural two-split design over all 19 urban classes.

    Each split keeps 16 standalone classes (14 common to both splits plus
    the two vehicle classes grouped by the other split) and one composite
    vehicle class; the universal taxonomy recovers all 19 classes and every
    one of them is trainable.
    """
    atoms = _CITY_COMMON + ["car", "bus", "truck", "bicycle", "motorcycle"]
    common = [{"name": n, "atoms": [n]} for n in _CITY_COMMON]
    return {
        "atoms": atoms,
        "datasets": [
            {
                "name": "City-4wheel",
                "classes": common
                + [
                    {"name": "bicycle", "atoms": ["bicycle"]},
                    {"name": "motorcycle", "atoms": ["motorcycle"]},
                    {"name": "four-wheel-vehicle", "atoms": ["car", "bus", "truck"]},
                ],
            },
            {
                "name": "City-personal",
                "classes": common
                + [
                    {"name": "bus", "atoms": ["bus"]},
                    {"name": "truck", "atoms": ["truck"]},
                    {"name": "personal-vehicle", "atoms": ["car", "bicycle", "motorcycle"]},
                ],
            },
        ],
    }


def vehicle_mini_collection() -> dict:
    """The truck/car/van mini-collection with the pickup at the triple
    intersection."""
    return {
        "atoms": ["truck", "pickup", "car", "van"],
        "datasets": [
            {"name": "VIPER", "classes": [{"name": "truck", "atoms": ["truck", "pickup"]}]},
            {"name": "Vistas", "classes": [{"name": "car", "atoms": ["car", "van", "pickup"]}]},
            {"name": "ADE20k", "classes": [{"name": "van", "atoms": ["van", "pickup"]}]},
        ],
    }


def rider_collection() -> dict:
    """Collection form of the collapse problem (for the trainability filter)."""
    return {
        "atoms": ["bike", "rider", "ped"],
        "datasets": [
            {"name": "CamVid", "classes": [{"name": "bicycle", "atoms": ["bike", "rider"]}]},
            {"name": "Pascal", "classes": [{"name": "person", "atoms": ["rider", "ped"]}]},
        ],
    }

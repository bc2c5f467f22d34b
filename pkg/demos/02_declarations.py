"""Construct a taxonomy from relation declarations instead of atom sets.

When only class names are known, cross-dataset relations (equiv, subset,
overlap) declare how the label spaces align; the resolver invents the atoms
needed to satisfy them and then builds the universal taxonomy as usual.
"""

from unitax.resolve import build_universal_from_declarations, parse_declarations
from unitax.taxonomy import filter_untrainable

PROGRAM = """
# two driving datasets plus a generic one
dataset City: road sky car rider
dataset Synth: road sky vehicle
dataset Web: person

equiv City.road Synth.road       # identical classes merge
equiv City.sky Synth.sky
subset City.car Synth.vehicle    # every car is a vehicle
overlap City.rider Web.person    # riders are people on vehicles
"""

program = parse_declarations(PROGRAM)
col, tax, maps = build_universal_from_declarations(program)

print("universal classes:")
for u in tax.classes:
    print(f"  u{u.id} {u.display_name}")

print("\nmappings:")
for ds in col.datasets:
    for cls in ds.classes:
        mapped = ", ".join(tax.classes[u].display_name
                           for u in maps.mapped(ds.name, cls.name))
        print(f"  {ds.name}.{cls.name} -> {{{mapped}}}")

tax, maps, report = filter_untrainable(tax, maps)
print("\ntrainability:")
for u in tax.classes:
    status = "trainable" if tax.trainable[u.id] else (
        f"untrainable (dominated by {tax.classes[tax.dominators[u.id]].display_name})"
    )
    print(f"  {u.display_name}: {status}")

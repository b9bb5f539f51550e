"""Detection boundaries and the I-sum classifier.

Run: python notebooks/01_detection_boundaries.py [outdir]
Writes a phase sweep CSV and SVG per family and prints the label grid.
"""
import os
import sys

from raredetect import Chimeric, DetectionModel, NormalShift, ShapeFunction, io as rio
from raredetect.montecarlo import phase_sweep

out = sys.argv[1] if len(sys.argv) > 1 else "."
os.makedirs(out, exist_ok=True)

families = {
    "chimeric": (DetectionModel(n=1e4, beta=0.7, r=0.4, signal=Chimeric()), rio.boundary_curve("chimeric")),
    "powerlaw": (DetectionModel(n=1e4, beta=0.7, r=0.4, signal=Chimeric(ShapeFunction.power_law(0.7))),
                 rio.boundary_curve("powerlaw", 0.7)),
    "normal": (DetectionModel(n=1e4, beta=0.7, r=0.4, signal=NormalShift(1.0)), rio.boundary_curve("normal", 1.0)),
}
betas = [0.55, 0.65, 0.75, 0.85, 0.95]
rs = [0.1, 0.3, 0.5, 0.7, 0.9]

for name, (template, curve) in families.items():
    rows = phase_sweep(template, betas, rs)
    rio.write_csv(rows, os.path.join(out, f"phase_{name}.csv"))
    rio.write_svg_phase(rows, curve, os.path.join(out, f"phase_{name}.svg"), title=name)
    print(f"\n{name}: U = undetectable, D = detectable, C = completely detectable")
    print("r \\ beta " + " ".join(f"{b:5.2f}" for b in betas))
    for r in reversed(rs):
        marks = [row.label[0] if row.label != "CompletelyDetectable" else "C" for row in rows if row.r == r]
        print(f"{r:8.2f}  " + "     ".join(marks))

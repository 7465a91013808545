"""Writes the toy fixture and its least-squares coefficients (numpy lstsq)."""
import json
import pathlib

import numpy as np

root = pathlib.Path(__file__).parent / "toy"
rng = np.random.default_rng(20240611)
shapes = [(30, 2), (25, 1)]
x_names = ["age", "dose", "weight"]
y_names = ["y1", "y2"]
expected = []
for m, (n, r) in enumerate(shapes, start=1):
    d = root / f"block{m}"
    d.mkdir(parents=True, exist_ok=True)
    X = rng.normal(size=(n, 3)).round(4)
    Z = rng.normal(size=(n, r)).round(4)
    Y = (1.0 + X @ rng.normal(size=(3, 2)) + Z @ rng.normal(size=(r, 2)) + 0.3 * rng.normal(size=(n, 2))).round(4)
    z_names = [f"s{m}_{j + 1}" for j in range(r)]
    for name, header, A in (("y", y_names, Y), ("x", x_names, X), ("z", z_names, Z)):
        np.savetxt(d / f"{name}.csv", A, delimiter=",", header=",".join(header), comments="", fmt="%.4f")
    design = np.hstack([np.ones((n, 1)), X, Z])
    coef = np.linalg.lstsq(design, Y, rcond=None)[0]
    expected.append({"alpha": coef[0].tolist(), "B": coef[1:4].tolist(), "C": coef[4:].tolist()})
(root / "least_squares.json").write_text(json.dumps(expected, indent=1) + "\n")

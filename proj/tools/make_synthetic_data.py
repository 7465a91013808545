"""Writes data/synthetic: two studies (22 and 28 samples) sharing 200
abundance-like covariates, each with 150 study-specific ones and 2 responses.

Covariates are log-abundances of correlated lognormal counts; a handful of
shared and specific covariates drive the responses.
"""
import pathlib

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data" / "synthetic"
P_COMMON, R_SPECIFIC, Q = 200, 150, 2
SAMPLES = (22, 28)


def log_abundance(rng, n, cols):
    latent = rng.normal(size=(n, 8))
    loadings = rng.normal(scale=0.6, size=(8, cols))
    return np.log1p(rng.poisson(np.exp(1.5 + latent @ loadings / 2 + rng.normal(scale=0.5, size=(n, cols)))))


def main():
    rng = np.random.default_rng(7)
    shared_idx = rng.choice(P_COMMON, size=6, replace=False)
    B = np.zeros((P_COMMON, Q))
    B[shared_idx] = rng.choice([-1.0, 1.0], size=(6, Q)) * rng.uniform(0.8, 1.5, size=(6, Q))
    common_names = [f"otu{j:03d}" for j in range(P_COMMON)]
    for m, n in enumerate(SAMPLES, start=1):
        X = log_abundance(rng, n, P_COMMON)
        Z = log_abundance(rng, n, R_SPECIFIC)
        C = np.zeros((R_SPECIFIC, Q))
        spec_idx = rng.choice(R_SPECIFIC, size=3, replace=False)
        C[spec_idx] = rng.uniform(0.5, 1.0, size=(3, Q))
        signal = (X - X.mean(0)) @ (B * (1 + 0.25 * m)) + (Z - Z.mean(0)) @ C
        Y = 10.0 * m + signal + rng.normal(scale=0.5 * signal.std(0), size=(n, Q))
        out = ROOT / f"block{m}"
        out.mkdir(parents=True, exist_ok=True)
        specific_names = [f"s{m}_otu{j:03d}" for j in range(R_SPECIFIC)]
        for stem, header, A, fmt in (
            ("y", ["nitrite_rate", "thiocyanate_rate"], Y, "%.6g"),
            ("x", common_names, X, "%.6g"),
            ("z", specific_names, Z, "%.6g"),
        ):
            np.savetxt(out / f"{stem}.csv", A, delimiter=",", header=",".join(header), comments="", fmt=fmt)


if __name__ == "__main__":
    main()

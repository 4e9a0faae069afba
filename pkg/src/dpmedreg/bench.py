"""Benchmark plumbing shared by the CLI and the test suite: named fitters with
per-algorithm defaults, replicate loops, and table rendering.

Algorithm ids: alg1 = objective-perturbed smoothing, alg2 = output-perturbed
reweighted least squares, alg3 = noisy batched greedy coordinate descent;
baseline-smooth and baseline-irls are their noiseless counterparts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .datagen import GeneratorSpec, default_generator_spec, generate, normalize, unscale_theta
from .gcd import GcdConfig, fit_gcd_private
from .irls import IrlsConfig, fit_irls_private, irls_fit
from .model import Dataset, Theta
from .sampling import RngStream
from .smoothing import SmoothingConfig, fit_smoothed_baseline, fit_smoothed_private

__all__ = [
    "ALGORITHMS",
    "ALGO_FLAGS",
    "CellResult",
    "resolve_params",
    "run_fit",
    "run_cell",
    "parameter_names",
    "rows_to_csv",
    "tables_to_markdown",
]

ALGORITHMS = ("alg1", "alg2", "alg3", "baseline-smooth", "baseline-irls")

# Flags each algorithm accepts on top of the always-allowed ones; explicitly
# supplied flags outside this set are usage errors.
ALGO_FLAGS = {
    "alg1": {"epsilon", "lam", "gamma", "seed"},
    "baseline-smooth": {"lam", "gamma"},
    "alg2": {"epsilon", "lam", "e", "tau", "n0", "v", "seed"},
    "baseline-irls": {"lam", "e", "tau", "n0"},
    "alg3": {"epsilon", "lam", "ell", "n0", "init", "seed"},
}

_DEFAULTS = {
    "epsilon": 0.1,
    "lam": 0.002,
    "gamma": 0.05,
    "e": 0.2,
    "tau": 1e-6,
    "v": None,
    "ell": 0.1,
    "init": "ridge",
}
_N0_DEFAULT = {"alg2": 200, "baseline-irls": 200, "alg3": 40}


def resolve_params(algo: str, overrides: dict) -> dict:
    """Fill unspecified knobs with the protocol defaults for ``algo``."""
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}")
    params = {}
    for key in ALGO_FLAGS[algo]:
        if key == "seed":
            continue
        if key == "n0":
            params[key] = _N0_DEFAULT[algo]
        else:
            params[key] = _DEFAULTS[key]
    for key, value in overrides.items():
        if value is not None:
            if key not in params:
                raise ValueError(f"flag {key!r} does not apply to {algo}")
            params[key] = value
    return params


def run_fit(algo: str, data: Dataset, params: dict, rng: RngStream | None) -> tuple[Theta, float, dict]:
    """Dispatch one fit on normalized data; returns (theta, elapsed, extras)."""
    extras: dict = {}
    if algo == "alg1":
        cfg = SmoothingConfig(epsilon=params["epsilon"], lam=params["lam"], gamma=params["gamma"])
        start = time.perf_counter()
        report = fit_smoothed_private(data, cfg, rng)
        elapsed = time.perf_counter() - start
        theta = report.theta
        extras = {"b_norm": report.b_norm, "solver_iters": report.solver_iters}
    elif algo == "baseline-smooth":
        cfg = SmoothingConfig(lam=params["lam"], gamma=params["gamma"])
        start = time.perf_counter()
        theta = fit_smoothed_baseline(data, cfg)
        elapsed = time.perf_counter() - start
    elif algo == "alg2":
        cfg = IrlsConfig(
            epsilon=params["epsilon"], lam=params["lam"], e=params["e"],
            tau=params["tau"], max_iters=params["n0"], v=params["v"],
        )
        start = time.perf_counter()
        report = fit_irls_private(data, cfg, rng)
        elapsed = time.perf_counter() - start
        theta = report.theta
        extras = {
            "noise_scale": report.noise_scale,
            "noise": report.noise,
            "iterations": report.trace.iterations,
        }
    elif algo == "baseline-irls":
        cfg = IrlsConfig(lam=params["lam"], e=params["e"], tau=params["tau"], max_iters=params["n0"])
        start = time.perf_counter()
        trace = irls_fit(data, cfg)
        elapsed = time.perf_counter() - start
        theta = trace.final
        extras = {"iterations": trace.iterations, "converged": trace.converged}
    elif algo == "alg3":
        cfg = GcdConfig(
            epsilon=params["epsilon"], lam=params["lam"], ell=params["ell"],
            batches=params["n0"], init=params["init"],
        )
        start = time.perf_counter()
        trace = fit_gcd_private(data, cfg, rng)
        elapsed = time.perf_counter() - start
        theta = trace.final
        extras = {"dropped": trace.plan.dropped}
    else:
        raise ValueError(f"unknown algorithm {algo!r}")
    return theta, elapsed, extras


@dataclass(frozen=True)
class CellResult:
    """Aggregate over replicates of one (algorithm, n) cell."""

    algo: str
    n: int
    median_theta: Theta  # per-coordinate median of unscaled estimates
    median_elapsed: float
    median_l1_error: float
    truth: Theta
    replicates: int


def parameter_names(d: int) -> list[str]:
    return ["mu"] + [f"beta{j}" for j in range(1, d + 1)]


def run_cell(
    algo: str,
    n: int,
    replicates: int,
    seed: int,
    cell_id: int,
    params: dict,
    spec: GeneratorSpec | None = None,
    target_b: float = 2.0,
) -> CellResult:
    """Run ``replicates`` independent generate+fit rounds for one cell.

    Replicate r uses streams derive(cell_id, r, 0) for data and
    derive(cell_id, r, 1) for the fit, so cells and replicates are
    independent and individually replayable.
    """
    spec = spec if spec is not None else default_generator_spec(n)
    root = RngStream(seed)
    estimates = np.empty((replicates, spec.d + 1))
    elapsed = np.empty(replicates)
    errors = np.empty(replicates)
    truth_vec = spec.truth.as_vector()
    for rep in range(replicates):
        X, Y, truth = generate(spec, root.derive(cell_id, rep, 0))
        data, record = normalize(X, Y, target_b)
        theta, dt, _ = run_fit(algo, data, params, root.derive(cell_id, rep, 1))
        est = unscale_theta(theta, record)
        estimates[rep] = est.as_vector()
        elapsed[rep] = dt
        errors[rep] = float(np.abs(est.as_vector() - truth_vec).sum())
    med = np.median(estimates, axis=0)
    return CellResult(
        algo=algo,
        n=n,
        median_theta=Theta.from_vector(med),
        median_elapsed=float(np.median(elapsed)),
        median_l1_error=float(np.median(errors)),
        truth=spec.truth,
        replicates=replicates,
    )


def rows_to_csv(cells: list[CellResult]) -> str:
    """Long-form result table, one row per (cell, parameter) plus summary rows."""
    lines = ["n,algorithm,parameter,estimate,true_value,elapsed_seconds"]
    for cell in cells:
        names = parameter_names(cell.truth.d)
        est = cell.median_theta.as_vector()
        tru = cell.truth.as_vector()
        for name, e_val, t_val in zip(names, est, tru):
            lines.append(
                f"{cell.n},{cell.algo},{name},{float(e_val)!r},{float(t_val)!r},{cell.median_elapsed!r}"
            )
        lines.append(
            f"{cell.n},{cell.algo},l1_error,{cell.median_l1_error!r},0.0,{cell.median_elapsed!r}"
        )
    return "\n".join(lines) + "\n"


def tables_to_markdown(cells: list[CellResult]) -> str:
    """One table per n: parameters as rows, algorithms as columns."""
    by_n: dict[int, list[CellResult]] = {}
    for cell in cells:
        by_n.setdefault(cell.n, []).append(cell)
    blocks = []
    for n in sorted(by_n):
        group = by_n[n]
        truth = group[0].truth
        names = parameter_names(truth.d)
        header = ["parameter"] + [c.algo for c in group] + ["true value"]
        lines = [f"## Benchmark estimates, n = {n}", ""]
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "|".join(["---"] * len(header)) + "|")
        tru = truth.as_vector()
        for i, name in enumerate(names):
            row = [name] + [f"{c.median_theta.as_vector()[i]:.4f}" for c in group] + [f"{tru[i]:.4f}"]
            lines.append("| " + " | ".join(row) + " |")
        lines.append(
            "| l1_error | " + " | ".join(f"{c.median_l1_error:.4f}" for c in group) + " |  |"
        )
        lines.append(
            "| time(s) | " + " | ".join(f"{c.median_elapsed:.4f}" for c in group) + " |  |"
        )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"

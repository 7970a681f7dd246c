"""Entropy, dissipation and velocity diagnostics for accepted states.

The gradient entropy sums phi(theta + L) over both species with the cell
weight (dx)^2, for phi = f (x ln(x+e)) or phi = g (x ln x, g(0) = 0).
The dissipation pairs the kernel spectrum with the squared DFT of the
species gradient difference and is nonnegative by construction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .fields import State
from .spectral import build_sigma_field, dft2, signed_freqs

__all__ = [
    "NegativeEntropyArgumentError",
    "DiagnosticsRecord",
    "DIAGNOSTICS_COLUMNS",
    "entropy",
    "entropy_f_scalar",
    "dissipation",
    "velocity_h1_diagnostics",
    "discrete_time_derivative",
    "sigma_derivative_bound_check",
    "write_diagnostics_csv",
    "read_diagnostics_csv",
]

ARG_SLACK = 1e-12
LOG_FLOOR = 1e-300


class NegativeEntropyArgumentError(ValueError):
    """theta + L fell below the admissibility slack."""


DIAGNOSTICS_COLUMNS = (
    "n",
    "t",
    "entropy_f",
    "entropy_g",
    "dissipation",
    "linf_rho_plus",
    "linf_rho_minus",
    "deviation_plus",
    "deviation_minus",
    "theta_min_plus_L",
    "lambda_max",
    "velocity_l2",
    "velocity_h1_semi",
    "fp_iters",
    "bounds_ok",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Per-step scalar diagnostics plus certified-bound pass/fail flags."""

    n: int
    t: float
    entropy_f: float
    entropy_g: float
    dissipation: float
    linf_rho_plus: float
    linf_rho_minus: float
    deviation_plus: float
    deviation_minus: float
    theta_min_plus_L: float
    lambda_max: float
    velocity_l2: float
    velocity_h1_semi: float
    fp_iters: int
    bound_flags: dict

    @property
    def bounds_ok(self) -> bool:
        return all(self.bound_flags.values())

    def to_row(self) -> list:
        return [
            self.n,
            f"{self.t:.17g}",
            f"{self.entropy_f:.17g}",
            f"{self.entropy_g:.17g}",
            f"{self.dissipation:.17g}",
            f"{self.linf_rho_plus:.17g}",
            f"{self.linf_rho_minus:.17g}",
            f"{self.deviation_plus:.17g}",
            f"{self.deviation_minus:.17g}",
            f"{self.theta_min_plus_L:.17g}",
            f"{self.lambda_max:.17g}",
            f"{self.velocity_l2:.17g}",
            f"{self.velocity_h1_semi:.17g}",
            self.fp_iters,
            int(self.bounds_ok),
        ]


def entropy_f_scalar(x: float) -> float:
    """f(x) = x ln(x + e) on x >= 0."""
    return x * math.log(x + math.e)


def _phi(values: np.ndarray, which: str) -> np.ndarray:
    if which == "f":
        return values * np.log(values + math.e)
    if which == "g":
        safe = np.where(values > LOG_FLOOR, values, 1.0)
        return np.where(values > LOG_FLOOR, values * np.log(safe), 0.0)
    raise ValueError(f"unknown entropy flavor {which!r}")


def entropy(state: State, L: float, which: str = "f", check: bool = True) -> float:
    """Gradient entropy sum_pm sum (dx)^2 phi(theta_x1 + L).

    With check=True a gradient below -1e-12 slack raises; either way the
    argument is floored at zero before the logarithm so the admissibility
    boundary never produces a log-domain error.
    """
    total = 0.0
    for theta in (state.theta_plus_x1, state.theta_minus_x1):
        arg = theta + L
        low = float(np.min(arg))
        if check and low < -ARG_SLACK:
            raise NegativeEntropyArgumentError(
                f"min(theta)+L = {low:.3e} below -{ARG_SLACK:.0e}"
            )
        arg = np.maximum(arg, 0.0)
        total += float(np.mean(_phi(arg, which)))  # mean = (dx)^2 * sum
    return total


def dissipation(state: State, sigma_dft: np.ndarray) -> float:
    """Spectral dissipation sum_m c_m(sigma) |c_m(theta_plus - theta_minus)|^2."""
    theta_diff = state.theta_plus_x1 - state.theta_minus_x1
    coeffs = dft2(theta_diff)
    return float(np.sum(sigma_dft.real * (coeffs.real**2 + coeffs.imag**2)))


def velocity_h1_diagnostics(rho_diff: np.ndarray, sigma_dft: np.ndarray) -> dict:
    """Spectral L2 norm and H1 seminorm of the induced velocity field.

    The velocity is the kernel convolution of rho_diff, so mode by mode its
    coefficient is c(sigma) c(rho_diff); by discrete Parseval the scaled L2
    norm is the plain l2 of those products, and the seminorm weights each
    mode by (2 pi |m_signed|)^2 with the signed aliased frequencies.
    """
    n = rho_diff.shape[0]
    prod_sq = np.abs(sigma_dft * dft2(rho_diff)) ** 2
    s = signed_freqs(n).astype(np.float64)
    m1, m2 = np.meshgrid(s, s, indexing="ij")
    weight = (2.0 * math.pi) ** 2 * (m1 * m1 + m2 * m2)
    return {
        "l2": float(np.sqrt(np.sum(prod_sq))),
        "h1_semi": float(np.sqrt(np.sum(weight * prod_sq))),
    }


def discrete_time_derivative(
    prev: State, next: State, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-species difference quotient (rho_next - rho_prev) / dt."""
    if prev.rho_plus.shape != next.rho_plus.shape:
        raise ValueError("states live on different grids")
    return (
        (next.rho_plus - prev.rho_plus) / dt,
        (next.rho_minus - prev.rho_minus) / dt,
    )


def sigma_derivative_bound_check(M: int) -> bool:
    """Check sampled slopes of the regularized kernel against its Lipschitz cap.

    Finite differences on a refined grid (N' = 4M) must stay below
    (2 pi / 3) M (M-1) (M+1), up to a quadrature slack of 1e-6 * M^3.
    """
    n = max(4 * M, M)  # 4M nodes; M = 1 gives the zero field either way
    field = build_sigma_field(M, n).values
    slope_x1 = np.max(np.abs(np.roll(field, -1, axis=0) - field)) * n
    slope_x2 = np.max(np.abs(np.roll(field, -1, axis=1) - field)) * n
    bound = (2.0 * math.pi / 3.0) * M * (M - 1) * (M + 1) + 1e-6 * M**3
    return max(float(slope_x1), float(slope_x2)) <= bound


def write_diagnostics_csv(path, records) -> None:
    """Write the per-step records with the fixed column order."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DIAGNOSTICS_COLUMNS)
        for rec in records:
            writer.writerow(rec.to_row())


def read_diagnostics_csv(path) -> list[dict]:
    """Read diagnostics rows back as dicts of floats (n, fp_iters as int)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != DIAGNOSTICS_COLUMNS:
            raise ValueError(f"{path}: unexpected diagnostics columns {header}")
        rows = []
        for raw in reader:
            if not raw:
                continue
            row = {key: float(val) for key, val in zip(header, raw)}
            row["n"] = int(row["n"])
            row["fp_iters"] = int(row["fp_iters"])
            row["bounds_ok"] = bool(int(raw[header.index("bounds_ok")]))
            rows.append(row)
    return rows

"""Periodic grid fields, difference stencils, norms and Q1 reconstruction.

A grid field is a plain float64 array of shape (N, N) indexed [i, j] with
i the x1 index, j the x2 index, node coordinates (i/N, j/N) and cyclic
index arithmetic in both directions. dx = 1/N throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TimeBracketError",
    "State",
    "theta_x1",
    "theta_x2",
    "mean_x1",
    "deviation_from_x1_mean",
    "linf",
    "l2_scaled",
    "bilinear_periodic",
    "q1_eval",
    "write_field",
    "read_field",
]


class TimeBracketError(ValueError):
    """Query time falls outside the [prev.t, next.t] bracket."""


def theta_x1(v: np.ndarray) -> np.ndarray:
    """Forward difference (v[i+1,j] - v[i,j]) / dx, cyclic in i.

    Entry [i, j] holds the half-node value at (i+1/2, j).
    """
    n = v.shape[0]
    return (np.roll(v, -1, axis=0) - v) * n


def theta_x2(v: np.ndarray) -> np.ndarray:
    """Forward difference (v[i,j+1] - v[i,j]) / dx, cyclic in j."""
    n = v.shape[0]
    return (np.roll(v, -1, axis=1) - v) * n


def mean_x1(v: np.ndarray) -> np.ndarray:
    """Mean along x1: <v>_j = dx * sum_i v[i, j], one value per column j."""
    return v.mean(axis=0)


def deviation_from_x1_mean(v: np.ndarray) -> float:
    """Sup-norm distance of v from its x1-means, max_{i,j} |v[i,j] - <v>_j|."""
    return float(np.max(np.abs(v - mean_x1(v)[None, :])))


def linf(v: np.ndarray) -> float:
    """Sup norm max |v|."""
    return float(np.max(np.abs(v)))


def l2_scaled(v: np.ndarray) -> float:
    """Cell-weighted L2 norm sqrt(sum (dx)^2 v^2)."""
    return float(np.sqrt(np.mean(v * v)))


@dataclass(frozen=True)
class State:
    """Pair of periodic density fields at one time level with cached stencils.

    The theta arrays are the forward-difference stencils of the rho fields;
    they are derived data kept alongside because the scheme and every
    diagnostic consume them repeatedly.
    """

    n: int
    t: float
    rho_plus: np.ndarray
    rho_minus: np.ndarray
    theta_plus_x1: np.ndarray
    theta_minus_x1: np.ndarray
    theta_plus_x2: np.ndarray
    theta_minus_x2: np.ndarray

    @classmethod
    def from_fields(
        cls, n: int, t: float, rho_plus: np.ndarray, rho_minus: np.ndarray
    ) -> "State":
        if rho_plus.shape != rho_minus.shape:
            raise ValueError("species fields must share one grid")
        return cls(
            n=n,
            t=t,
            rho_plus=rho_plus,
            rho_minus=rho_minus,
            theta_plus_x1=theta_x1(rho_plus),
            theta_minus_x1=theta_x1(rho_minus),
            theta_plus_x2=theta_x2(rho_plus),
            theta_minus_x2=theta_x2(rho_minus),
        )

    @property
    def N(self) -> int:
        return self.rho_plus.shape[0]

    @property
    def rho_diff(self) -> np.ndarray:
        return self.rho_plus - self.rho_minus


def bilinear_periodic(field: np.ndarray, x1, x2):
    """Bilinear interpolation of a periodic nodal field at (x1, x2).

    Coordinates are taken mod 1; accepts scalars or broadcastable arrays.
    """
    n = field.shape[0]
    x1 = np.asarray(x1, dtype=np.float64) % 1.0
    x2 = np.asarray(x2, dtype=np.float64) % 1.0
    s1 = x1 * n
    s2 = x2 * n
    i = np.floor(s1).astype(np.intp)
    j = np.floor(s2).astype(np.intp)
    a = s1 - i
    b = s2 - j
    i0 = i % n
    j0 = j % n
    i1 = (i + 1) % n
    j1 = (j + 1) % n
    out = (
        (1.0 - a) * (1.0 - b) * field[i0, j0]
        + a * (1.0 - b) * field[i1, j0]
        + (1.0 - a) * b * field[i0, j1]
        + a * b * field[i1, j1]
    )
    return out if out.ndim else float(out)


def q1_eval(prev: State, next: State, t: float, x1, x2):
    """Space-time reconstruction: bilinear in space, linear in time.

    Evaluates the pair (rho_plus, rho_minus) at (t, x1, x2) with
    prev.t <= t <= next.t; reproduces nodal values at grid nodes and time
    levels exactly, and never overshoots the bracketing nodal values.
    """
    span = next.t - prev.t
    slack = 1e-9 * max(1.0, abs(next.t))
    if t < prev.t - slack or t > next.t + slack:
        raise TimeBracketError(
            f"t={t} outside bracket [{prev.t}, {next.t}]"
        )
    s = 0.0 if span == 0.0 else min(1.0, max(0.0, (t - prev.t) / span))
    plus = (1.0 - s) * bilinear_periodic(prev.rho_plus, x1, x2) + s * bilinear_periodic(
        next.rho_plus, x1, x2
    )
    minus = (1.0 - s) * bilinear_periodic(
        prev.rho_minus, x1, x2
    ) + s * bilinear_periodic(next.rho_minus, x1, x2)
    return plus, minus


def write_field(path, v: np.ndarray, t: float, name: str) -> None:
    """Write a field as row-major CSV with a `# N=.. t=.. name=..` header.

    One line per i, N comma-separated values per line, 17 significant
    digits so the decimal text round-trips float64 exactly.
    """
    n = v.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# N={n} t={t:.17g} name={name}\n")
        for i in range(n):
            fh.write(",".join(f"{x:.17g}" for x in v[i]) + "\n")


def read_field(path) -> tuple[np.ndarray, float, str]:
    """Read a field snapshot written by :func:`write_field`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# "):
            raise ValueError(f"{path}: missing snapshot header")
        meta = dict(tok.split("=", 1) for tok in header[2:].split())
        n = int(meta["N"])
        t = float(meta["t"])
        name = meta["name"]
        rows = [
            [float(x) for x in line.strip().split(",")]
            for line in fh
            if line.strip()
        ]
    v = np.array(rows, dtype=np.float64)
    if v.shape != (n, n):
        raise ValueError(f"{path}: expected {n}x{n} values, got {v.shape}")
    return v, t, name

"""Semi-explicit upwind scheme with implicit nonlocal velocity.

One step advances the pair (rho_plus, rho_minus) through

    rho[i,j]^{new} = rho[i,j]^{old}
        + dt * ( lam_+ * (theta_fwd + L) - lam_- * (theta_bwd + L) ),

where the transported gradients theta are explicit (old time level) and
the velocity lam = -/+ (a(t_new) + sigma * (rho_plus - rho_minus)) is
implicit: the new iterate enters its own velocity, and the step is solved
by Banach fixed-point iteration, which contracts with factor
18 M^2 L dt/dx under the strict step-size conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .fields import State, linf
from .spectral import SigmaField, convolve_scaled, fejer_weight, signed_freqs

__all__ = [
    "CflViolationError",
    "FixedPointDivergedError",
    "PositivityLostError",
    "BoundViolationError",
    "NonFiniteStateError",
    "SinkError",
    "StressSpec",
    "SimParams",
    "CflReport",
    "StepReport",
    "RunSinks",
    "cfl_check",
    "smooth_initial",
    "velocity",
    "fixed_point_step",
    "run",
]

POSITIVITY_SLACK = 1e-12
DEVIATION_SLACK = 1e-10
LINF_SLACK = 1e-8
ENTROPY_STEP_SLACK = 1e-8
ENTROPY_CUMUL_SLACK = 1e-6
VELOCITY_SLACK = 1e-10


class CflViolationError(RuntimeError):
    """Strict mode refused to run: step-size conditions violated."""


class FixedPointDivergedError(RuntimeError):
    """Implicit velocity iteration hit its cap or kept growing."""


class PositivityLostError(RuntimeError):
    """theta + L dropped below slack in strict mode."""


class BoundViolationError(RuntimeError):
    """A certified per-step bound failed in strict mode."""


class NonFiniteStateError(RuntimeError):
    """NaN or Inf appeared in the state fields."""


class SinkError(RuntimeError):
    """An output hook raised; wraps the original exception."""


@dataclass(frozen=True)
class StressSpec:
    """External stress a(t) = a0 + a1*t, continuous on [0, T]."""

    kind: str = "zero"  # zero | constant | linear
    a0: float = 0.0
    a1: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "linear"):
            raise ValueError(f"unknown stress kind {self.kind!r}")
        if self.kind == "zero" and (self.a0 != 0.0 or self.a1 != 0.0):
            raise ValueError("zero stress must have a0 = a1 = 0")
        if self.kind == "constant" and self.a1 != 0.0:
            raise ValueError("constant stress must have a1 = 0")

    def value(self, t: float) -> float:
        return self.a0 + self.a1 * t

    def sup_norm(self, T: float) -> float:
        """Sup of |a| on [0, T]; closed form since a is affine."""
        return max(abs(self.a0), abs(self.a0 + self.a1 * T))


@dataclass(frozen=True)
class SimParams:
    """Grid, step, regularization order and solver knobs for one run."""

    M: int
    N: int
    T: float
    N_T: int
    L: float
    stress: StressSpec = StressSpec()
    fp_tol: float = 1e-12
    fp_max_iter: int = 200
    cfl_mode: str = "strict"  # strict | practical

    def __post_init__(self):
        if self.M < 1 or self.N < self.M:
            raise ValueError("need 1 <= M <= N")
        if self.N_T < 0:
            raise ValueError("N_T must be nonnegative")
        if self.T < 0 or (self.N_T > 0 and self.T <= 0):
            raise ValueError("T must be positive for a marching run")
        if self.L <= 0:
            raise ValueError("L must be positive")
        if self.fp_tol <= 0 or self.fp_max_iter < 1:
            raise ValueError("bad fixed-point settings")
        if self.cfl_mode not in ("strict", "practical"):
            raise ValueError(f"unknown cfl_mode {self.cfl_mode!r}")

    @property
    def dx(self) -> float:
        return 1.0 / self.N

    @property
    def dt(self) -> float:
        if self.N_T == 0:
            raise ValueError("dt undefined for N_T = 0")
        return self.T / self.N_T

    @property
    def velocity_bound(self) -> float:
        """4 M^2 L + sup|a|, the a priori bound on the upwind velocity."""
        return 4.0 * self.M * self.M * self.L + self.stress.sup_norm(self.T)

    @property
    def contraction_q(self) -> float:
        """Nominal contraction factor 18 M^2 L dt/dx of the implicit solve."""
        return 18.0 * self.M * self.M * self.L * self.dt / self.dx


@dataclass(frozen=True)
class CflReport:
    """Evaluated step-size conditions."""

    strict_ok: bool
    ratio: float  # dt/dx
    dt: float
    ratio_bound_velocity: float  # 1 / (4 (4 M^2 L + sup|a|))
    ratio_bound_contraction: float  # 1 / (18 M^2 L)
    dt_bound: float  # 1 / (2 L (4 M^2 L + sup|a|))


def cfl_check(params: SimParams) -> CflReport:
    """Evaluate both step-size conditions; strict mode raises on violation."""
    if params.N_T == 0:
        raise ValueError("invalid params: N_T = 0 gives dt = 0")
    a_sup = params.stress.sup_norm(params.T)
    coeff = 4.0 * params.M * params.M * params.L + a_sup
    rb_vel = 1.0 / (4.0 * coeff)
    rb_con = 1.0 / (18.0 * params.M * params.M * params.L)
    dt_bound = 1.0 / (2.0 * params.L * coeff)
    ratio = params.dt / params.dx
    ok = ratio < min(rb_vel, rb_con) and params.dt < dt_bound
    report = CflReport(
        strict_ok=ok,
        ratio=ratio,
        dt=params.dt,
        ratio_bound_velocity=rb_vel,
        ratio_bound_contraction=rb_con,
        dt_bound=dt_bound,
    )
    if params.cfl_mode == "strict" and not ok:
        raise CflViolationError(
            f"dt/dx = {ratio:.6g} vs bounds ({rb_vel:.6g}, {rb_con:.6g}), "
            f"dt = {params.dt:.6g} vs {dt_bound:.6g}"
        )
    return report


def smooth_initial(rho0, M: int, N: Optional[int] = None) -> np.ndarray:
    """Band-limit a nodal field with the product of triangular weights.

    Multiplies each DFT coefficient by w(s1) * w(s2) where (s1, s2) are the
    signed aliased frequencies of the mode; constants pass through
    unchanged, modes with |s| >= M are annihilated.

    `rho0` is either an (N, N) array or a callable (x1, x2) -> value that
    is sampled at the nodes first (N required in that case).
    """
    if callable(rho0):
        if N is None:
            raise ValueError("grid size N required to sample a callable")
        xs = np.arange(N) / N
        x1, x2 = np.meshgrid(xs, xs, indexing="ij")
        rho0 = np.asarray(rho0(x1, x2), dtype=np.float64)
    rho0 = np.asarray(rho0, dtype=np.float64)
    n = rho0.shape[0]
    freqs = signed_freqs(n)
    w = np.array([fejer_weight(int(s), M) for s in freqs])
    coeffs = np.fft.fft2(rho0) * np.outer(w, w)
    return np.real(np.fft.ifft2(coeffs))


def velocity(
    rho_diff: np.ndarray, a_val: float, sigma: SigmaField
) -> tuple[np.ndarray, np.ndarray]:
    """Upwind velocities (lam_plus, lam_minus) for a species difference.

    lam_plus = -(a + sigma * rho_diff) with the cell-weighted circular
    convolution; lam_minus = -lam_plus.
    """
    if rho_diff.shape != sigma.values.shape:
        raise ValueError("rho_diff and sigma grids differ")
    lam_plus = -(a_val + convolve_scaled(sigma.values, rho_diff))
    return lam_plus, -lam_plus


@dataclass(frozen=True)
class StepReport:
    """Fixed-point solve summary for one time step."""

    n: int
    fp_iters: int
    fp_residual: float
    lambda_max: float
    contraction_q: float


def fixed_point_step(
    state: State,
    params: SimParams,
    sigma: SigmaField,
    t_next: float,
    initial_guess: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> tuple[State, StepReport]:
    """Advance one step by iterating the implicit update map to a fixed point.

    The iteration starts from the previous state (or `initial_guess`),
    applies the update with the velocity evaluated at the current iterate
    and stops when the sup-norm successive difference drops below
    fp_tol * max(1, |rho^n|_inf).

    Raises
    ------
    FixedPointDivergedError
        Iteration cap reached, residual grew five times in a row, or the
        iterates lost finiteness.
    PositivityLostError
        Strict mode only: the new gradients violate theta + L >= -1e-12.
    """
    dt = params.dt
    L = params.L
    a_val = params.stress.value(t_next)

    theta_p_fwd = state.theta_plus_x1
    theta_m_fwd = state.theta_minus_x1
    theta_p_bwd = np.roll(theta_p_fwd, 1, axis=0)
    theta_m_bwd = np.roll(theta_m_fwd, 1, axis=0)

    up_fwd = theta_p_fwd + L
    up_bwd = theta_p_bwd + L
    um_fwd = theta_m_fwd + L
    um_bwd = theta_m_bwd + L

    scale = max(1.0, linf(state.rho_plus), linf(state.rho_minus))
    tol = params.fp_tol * scale

    if initial_guess is None:
        v_plus, v_minus = state.rho_plus, state.rho_minus
    else:
        v_plus, v_minus = initial_guess

    residual = math.inf
    lam_plus = np.zeros_like(state.rho_plus)
    growth_streak = 0
    iters = 0
    for iters in range(1, params.fp_max_iter + 1):
        lam_plus, lam_minus = velocity(v_plus - v_minus, a_val, sigma)
        lp_pos = np.maximum(lam_plus, 0.0)
        lp_neg = np.maximum(-lam_plus, 0.0)
        lm_pos = np.maximum(lam_minus, 0.0)
        lm_neg = np.maximum(-lam_minus, 0.0)

        new_plus = state.rho_plus + dt * (lp_pos * up_fwd - lp_neg * up_bwd)
        new_minus = state.rho_minus + dt * (lm_pos * um_fwd - lm_neg * um_bwd)

        prev_residual = residual
        residual = max(linf(new_plus - v_plus), linf(new_minus - v_minus))
        v_plus, v_minus = new_plus, new_minus

        if not math.isfinite(residual):
            raise FixedPointDivergedError(
                f"step {state.n + 1}: non-finite iterate at iteration {iters}"
            )
        if residual <= tol:
            break
        # growth only counts above the noise floor, else slow monotone
        # convergence with roundoff jitter would trip the safeguard
        grew = residual > prev_residual and residual > 10.0 * tol
        growth_streak = growth_streak + 1 if grew else 0
        if growth_streak >= 5:
            raise FixedPointDivergedError(
                f"step {state.n + 1}: residual grew 5 consecutive iterations"
            )
    else:
        raise FixedPointDivergedError(
            f"step {state.n + 1}: no convergence in {params.fp_max_iter} "
            f"iterations (residual {residual:.3e}, tol {tol:.3e})"
        )

    new_state = State.from_fields(state.n + 1, t_next, v_plus, v_minus)
    if params.cfl_mode == "strict":
        low = min(
            float(np.min(new_state.theta_plus_x1)),
            float(np.min(new_state.theta_minus_x1)),
        )
        if low + L < -POSITIVITY_SLACK:
            raise PositivityLostError(
                f"step {new_state.n}: min(theta)+L = {low + L:.3e}"
            )
    report = StepReport(
        n=new_state.n,
        fp_iters=iters,
        fp_residual=residual,
        lambda_max=linf(lam_plus),
        contraction_q=params.contraction_q,
    )
    return new_state, report


@dataclass
class RunSinks:
    """Optional output hooks; called from the marching loop thread only."""

    on_record: Optional[Callable] = None  # (DiagnosticsRecord) -> None
    on_state: Optional[Callable] = None  # (State, DiagnosticsRecord) -> None

    def emit(self, state, record):
        try:
            if self.on_record is not None:
                self.on_record(record)
            if self.on_state is not None:
                self.on_state(state, record)
        except Exception as exc:  # noqa: BLE001 - wrapped by contract
            raise SinkError(f"output hook failed at step {record.n}") from exc


def run(
    params: SimParams,
    initial_plus,
    initial_minus,
    sinks: Optional[RunSinks] = None,
):
    """March the scheme N_T steps from band-limited initial data.

    Both initial fields (arrays or callables) pass through
    :func:`smooth_initial` before sampling-level use. Every step emits a
    DiagnosticsRecord; in strict mode each certified bound is asserted and
    any failure aborts, while practical mode records pass/fail flags and
    aborts only on non-finite fields or fixed-point divergence.

    Returns the final State and the list of DiagnosticsRecord (one for the
    initial state plus one per step).
    """
    from .diagnostics import DiagnosticsRecord, dissipation, entropy, velocity_h1_diagnostics
    from .spectral import build_sigma_field, sigma_dft_coeffs
    from .fields import deviation_from_x1_mean

    strict = params.cfl_mode == "strict"
    if params.N_T > 0:
        cfl_check(params)  # raises in strict mode when violated

    rho_plus0 = smooth_initial(initial_plus, params.M, params.N)
    rho_minus0 = smooth_initial(initial_minus, params.M, params.N)
    state = State.from_fields(0, 0.0, rho_plus0, rho_minus0)

    sigma = build_sigma_field(params.M, params.N)
    sigma_dft = sigma_dft_coeffs(params.M, params.N)

    L = params.L
    a_sup = params.stress.sup_norm(params.T)
    vel_bound = params.velocity_bound
    linf0 = max(linf(rho_plus0), linf(rho_minus0))
    e_const = math.e * math.log(2.0 * math.e)  # f(e) with f(x) = x ln(x+e)
    cumul_cap_const = 2.0 * (e_const + L * math.log(2.0))

    records: list = []
    dt_dissip_sum = 0.0
    entropy_f0 = entropy(state, L, "f", check=strict)
    prev_entropy_g = entropy(state, L, "g", check=strict)

    def make_record(st: State, report: Optional[StepReport]) -> DiagnosticsRecord:
        nonlocal dt_dissip_sum, prev_entropy_g
        ent_f = entropy(st, L, "f", check=False)
        ent_g = entropy(st, L, "g", check=False)
        dissip = dissipation(st, sigma_dft)
        vel = velocity_h1_diagnostics(st.rho_diff, sigma_dft)
        theta_min = min(
            float(np.min(st.theta_plus_x1)), float(np.min(st.theta_minus_x1))
        )
        dev_p = deviation_from_x1_mean(st.rho_plus)
        dev_m = deviation_from_x1_mean(st.rho_minus)
        if report is None:
            lam_p, _ = velocity(st.rho_diff, params.stress.value(st.t), sigma)
            lam_max = linf(lam_p)
            fp_iters = 0
        else:
            lam_max = report.lambda_max
            fp_iters = report.fp_iters

        flags = {
            "gradient_positivity": theta_min + L >= -POSITIVITY_SLACK,
            "deviation": max(dev_p, dev_m) <= 2.0 * L + DEVIATION_SLACK,
            "velocity_bound": lam_max <= vel_bound + VELOCITY_SLACK,
            "dissipation_nonneg": dissip >= -1e-12,
            "linf_growth": max(linf(st.rho_plus), linf(st.rho_minus))
            <= linf0 + L * (4.0 * params.M**2 * L + a_sup) * st.t + LINF_SLACK,
        }
        if report is not None:
            dt_dissip_sum += params.dt * dissip
            flags["entropy_one_step"] = (
                ent_g + params.dt * dissip <= prev_entropy_g + ENTROPY_STEP_SLACK
            )
            flags["entropy_cumulative"] = (
                ent_f + dt_dissip_sum
                <= entropy_f0 + cumul_cap_const + ENTROPY_CUMUL_SLACK
            )
        prev_entropy_g = ent_g
        return DiagnosticsRecord(
            n=st.n,
            t=st.t,
            entropy_f=ent_f,
            entropy_g=ent_g,
            dissipation=dissip,
            linf_rho_plus=linf(st.rho_plus),
            linf_rho_minus=linf(st.rho_minus),
            deviation_plus=dev_p,
            deviation_minus=dev_m,
            theta_min_plus_L=theta_min + L,
            lambda_max=lam_max,
            velocity_l2=vel["l2"],
            velocity_h1_semi=vel["h1_semi"],
            fp_iters=fp_iters,
            bound_flags=flags,
        )

    record0 = make_record(state, None)
    records.append(record0)
    if sinks is not None:
        sinks.emit(state, record0)

    for n in range(params.N_T):
        t_next = (n + 1) * params.dt
        state, report = fixed_point_step(state, params, sigma, t_next)
        if not (
            np.all(np.isfinite(state.rho_plus))
            and np.all(np.isfinite(state.rho_minus))
        ):
            raise NonFiniteStateError(f"step {state.n}: non-finite field values")
        record = make_record(state, report)
        records.append(record)
        if strict:
            for name, ok in record.bound_flags.items():
                if not ok:
                    raise BoundViolationError(
                        f"step {state.n}: {name.replace('_', ' ')} failed"
                    )
        if sinks is not None:
            sinks.emit(state, record)

    return state, records

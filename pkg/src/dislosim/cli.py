"""Command-line front end: configuration parsing, runs, refinement, audits.

Config files are line-oriented `key = value` text with `#` comments and
dotted keys for nesting. Exit codes: 0 ok, 2 config error, 3 numerical
failure, 4 audit violation.
"""

from __future__ import annotations

import argparse
import glob
import math
import os
import re
import sys
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import diagnostics as diag
from . import experiments as exp
from .fields import read_field, theta_x1, write_field, deviation_from_x1_mean
from .scheme import (
    BoundViolationError,
    CflViolationError,
    FixedPointDivergedError,
    NonFiniteStateError,
    PositivityLostError,
    RunSinks,
    SimParams,
    SinkError,
    StressSpec,
    run,
)
from .spectral import build_sigma_field
from .scheme import velocity as velocity_fields

__all__ = [
    "ConfigParseError",
    "ConfigValidationError",
    "RunConfig",
    "parse_config",
    "cmd_run",
    "cmd_preset",
    "cmd_refine",
    "cmd_audit",
    "main",
]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_AUDIT = 4

EMIT_CHOICES = ("rho_plus", "rho_minus", "theta_plus", "theta_minus", "velocity")


class ConfigParseError(ValueError):
    """Malformed config text; the message carries the line number."""


class ConfigValidationError(ValueError):
    """Config parsed but violates an invariant."""


@dataclass
class RunConfig:
    """Fully resolved run request."""

    params: SimParams
    init_plus: Callable
    init_minus: Callable
    snapshot_times: list = field(default_factory=list)
    output_dir: Optional[str] = None
    emit_fields: tuple = ("theta_plus",)
    preset_name: Optional[str] = None
    init_spec: Optional[str] = None  # raw init descriptor, for round-trip


_INIT_TOKENS = {
    "gaussian": exp.gaussian_initial,
    "gaussian-half": exp.half_gaussian_initial,
}


def _init_from_token(token: str, lineno: int):
    token = token.strip()
    if token in _INIT_TOKENS:
        return _INIT_TOKENS[token]
    if token.startswith("constant:"):
        try:
            return exp.constant_initial(float(token.split(":", 1)[1]))
        except ValueError as e:
            raise ConfigParseError(f"line {lineno}: bad constant value in {token!r}") from e
    if token == "zero":
        return exp.constant_initial(0.0)
    raise ConfigParseError(f"line {lineno}: unknown init descriptor {token!r}")


_KNOWN_KEYS = {
    "M",
    "N",
    "T",
    "N_T",
    "L",
    "preset",
    "init",
    "stress.kind",
    "stress.a0",
    "stress.a1",
    "fp_tol",
    "fp_max_iter",
    "cfl_mode",
    "snapshot_times",
    "output_dir",
    "emit_fields",
}


def parse_config(text: str) -> RunConfig:
    """Parse and validate config text into a RunConfig.

    Raises ConfigParseError (with line number) for malformed lines or
    unknown keys, ConfigValidationError naming the violated invariant.
    """
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"line {lineno}: expected `key = value`, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigParseError(f"line {lineno}: unknown key {key!r}")
        if not value:
            raise ConfigParseError(f"line {lineno}: empty value for {key!r}")
        entries[key] = (value, lineno)

    def take(key, cast, default=None):
        if key not in entries:
            return default
        value, lineno = entries[key]
        try:
            return cast(value)
        except ValueError as e:
            raise ConfigParseError(f"line {lineno}: bad value for {key!r}: {value!r}") from e

    preset_name = take("preset", str)
    base = exp.preset(preset_name) if preset_name else None
    if base is None and preset_name is None:
        for key in ("M", "N", "T", "N_T", "L", "init"):
            if key not in entries:
                raise ConfigValidationError(f"missing required key {key!r} (no preset given)")

    M = take("M", int, base.params.M if base else None)
    N = take("N", int, base.params.N if base else None)
    T = take("T", float, base.params.T if base else None)
    N_T = take("N_T", int, base.params.N_T if base else None)
    L = take("L", float, base.params.L if base else None)
    fp_tol = take("fp_tol", float, base.params.fp_tol if base else 1e-12)
    fp_max_iter = take("fp_max_iter", int, base.params.fp_max_iter if base else 200)
    cfl_mode = take("cfl_mode", str, base.params.cfl_mode if base else "strict")

    if "stress.kind" in entries or "stress.a0" in entries or "stress.a1" in entries:
        kind = take("stress.kind", str, "constant")
        stress = StressSpec(
            kind=kind, a0=take("stress.a0", float, 0.0), a1=take("stress.a1", float, 0.0)
        )
    elif base is not None:
        stress = base.params.stress
    else:
        stress = StressSpec()

    if M is None or N is None or T is None or N_T is None or L is None:
        raise ConfigValidationError("incomplete parameters after applying preset defaults")
    if M > N:
        raise ConfigValidationError("M must not exceed N")
    try:
        params = SimParams(
            M=M,
            N=N,
            T=T,
            N_T=N_T,
            L=L,
            stress=stress,
            fp_tol=fp_tol,
            fp_max_iter=fp_max_iter,
            cfl_mode=cfl_mode,
        )
    except ValueError as e:
        raise ConfigValidationError(str(e)) from e

    init_spec = None
    if "init" in entries:
        value, lineno = entries["init"]
        tokens = [tok.strip() for tok in value.split(",") if tok.strip()]
        if len(tokens) == 1:
            init_plus = init_minus = _init_from_token(tokens[0], lineno)
        elif len(tokens) == 2:
            init_plus = _init_from_token(tokens[0], lineno)
            init_minus = _init_from_token(tokens[1], lineno)
        else:
            raise ConfigParseError(f"line {lineno}: init takes one or two descriptors")
        init_spec = ",".join(tokens)
    else:
        init_plus, init_minus = base.init_plus, base.init_minus

    snapshot_times = []
    if "snapshot_times" in entries:
        value, lineno = entries["snapshot_times"]
        try:
            snapshot_times = [float(tok) for tok in value.split(",") if tok.strip()]
        except ValueError as e:
            raise ConfigParseError(f"line {lineno}: bad snapshot_times {value!r}") from e
    for t_snap in snapshot_times:
        if not 0.0 <= t_snap <= params.T:
            raise ConfigValidationError(
                f"snapshot time {t_snap} outside [0, {params.T}]"
            )

    emit_fields = ("theta_plus",)
    if "emit_fields" in entries:
        value, lineno = entries["emit_fields"]
        emit_fields = tuple(tok.strip() for tok in value.split(",") if tok.strip())
        for name in emit_fields:
            if name not in EMIT_CHOICES:
                raise ConfigValidationError(f"unknown emit field {name!r}")

    return RunConfig(
        params=params,
        init_plus=init_plus,
        init_minus=init_minus,
        snapshot_times=snapshot_times,
        output_dir=take("output_dir", str),
        emit_fields=emit_fields,
        preset_name=preset_name,
        init_spec=init_spec,
    )


def _write_resolved_config(path, cfg: RunConfig) -> None:
    p = cfg.params
    lines = [
        "# resolved run parameters (written by sim; consumed by sim audit)",
        f"M = {p.M}",
        f"N = {p.N}",
        f"T = {p.T:.17g}",
        f"N_T = {p.N_T}",
        f"L = {p.L:.17g}",
        f"stress.kind = {p.stress.kind}",
        f"stress.a0 = {p.stress.a0:.17g}",
        f"stress.a1 = {p.stress.a1:.17g}",
        f"fp_tol = {p.fp_tol:.17g}",
        f"fp_max_iter = {p.fp_max_iter}",
        f"cfl_mode = {p.cfl_mode}",
    ]
    if cfg.preset_name:
        lines.insert(1, f"preset = {cfg.preset_name}")
    if cfg.init_spec:
        lines.append(f"init = {cfg.init_spec}")
    if cfg.snapshot_times:
        times = ",".join(f"{t:.17g}" for t in cfg.snapshot_times)
        lines.append(f"snapshot_times = {times}")
    if cfg.emit_fields:
        lines.append(f"emit_fields = {','.join(cfg.emit_fields)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _execute_run(cfg: RunConfig, out_dir: str) -> int:
    """Run one configuration writing diagnostics + snapshots into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    params = cfg.params
    snap_steps: dict[int, float] = {}
    if params.N_T > 0:
        for t_snap in cfg.snapshot_times:
            n = round(t_snap / params.dt)
            snap_steps[min(max(n, 0), params.N_T)] = t_snap
    elif cfg.snapshot_times:
        snap_steps[0] = 0.0

    sigma = build_sigma_field(params.M, params.N)

    def emit_snapshots(state, record):
        if state.n not in snap_steps:
            return
        for name in cfg.emit_fields:
            if name == "rho_plus":
                data = state.rho_plus
            elif name == "rho_minus":
                data = state.rho_minus
            elif name == "theta_plus":
                data = state.theta_plus_x1
            elif name == "theta_minus":
                data = state.theta_minus_x1
            else:  # velocity
                data, _ = velocity_fields(
                    state.rho_diff, params.stress.value(state.t), sigma
                )
            write_field(
                os.path.join(out_dir, f"{name}_n{state.n}.csv"),
                data,
                state.t,
                name,
            )

    _, records = run(
        params,
        cfg.init_plus,
        cfg.init_minus,
        sinks=RunSinks(on_state=emit_snapshots),
    )
    diag.write_diagnostics_csv(os.path.join(out_dir, "diagnostics.csv"), records)
    _write_resolved_config(os.path.join(out_dir, "run.cfg"), cfg)
    return EXIT_OK


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_run(config_path: str, out_override: Optional[str] = None) -> int:
    try:
        with open(config_path, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    except OSError as e:
        return _fail(EXIT_CONFIG, f"config: {e}")
    except (ConfigParseError, ConfigValidationError) as e:
        return _fail(EXIT_CONFIG, f"config: {e}")
    out_dir = out_override or cfg.output_dir
    if not out_dir:
        return _fail(EXIT_CONFIG, "config: output_dir not set (or pass --out)")
    try:
        return _execute_run(cfg, out_dir)
    except CflViolationError as e:
        return _fail(EXIT_CONFIG, f"cfl: {e}")
    except (
        FixedPointDivergedError,
        NonFiniteStateError,
        PositivityLostError,
        BoundViolationError,
    ) as e:
        return _fail(EXIT_NUMERICAL, f"numerical: {e}")
    except SinkError as e:
        return _fail(EXIT_NUMERICAL, f"sink: {e}")


def cmd_preset(
    name: str, out_dir: Optional[str] = None, times: Optional[list] = None
) -> int:
    try:
        base = exp.preset(name)
    except exp.UnknownPresetError:
        return _fail(EXIT_CONFIG, f"config: unknown preset {name!r}")
    if times is None:
        times = [0.0, base.params.T]
        if name.startswith(("case1", "case2")):
            times = [0.0, 1.98, 3.38]
    cfg = RunConfig(
        params=base.params,
        init_plus=base.init_plus,
        init_minus=base.init_minus,
        snapshot_times=times,
        emit_fields=("theta_plus",),
        preset_name=name,
    )
    out_dir = out_dir or f"run_{name}"
    try:
        return _execute_run(cfg, out_dir)
    except CflViolationError as e:
        return _fail(EXIT_CONFIG, f"cfl: {e}")
    except (
        FixedPointDivergedError,
        NonFiniteStateError,
        PositivityLostError,
        BoundViolationError,
    ) as e:
        return _fail(EXIT_NUMERICAL, f"numerical: {e}")


def cmd_refine(config_path: str, levels: int, out_override: Optional[str] = None) -> int:
    try:
        with open(config_path, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    except OSError as e:
        return _fail(EXIT_CONFIG, f"config: {e}")
    except (ConfigParseError, ConfigValidationError) as e:
        return _fail(EXIT_CONFIG, f"config: {e}")
    out_dir = out_override or cfg.output_dir
    if not out_dir:
        return _fail(EXIT_CONFIG, "config: output_dir not set (or pass --out)")
    base = exp.Preset(
        name=cfg.preset_name or "custom",
        params=cfg.params,
        init_plus=cfg.init_plus,
        init_minus=cfg.init_minus,
    )
    try:
        report = exp.refinement_study(base, levels)
    except CflViolationError as e:
        return _fail(EXIT_CONFIG, f"cfl: {e}")
    except ValueError as e:
        return _fail(EXIT_CONFIG, f"config: {e}")
    except (FixedPointDivergedError, NonFiniteStateError, PositivityLostError) as e:
        return _fail(EXIT_NUMERICAL, f"numerical: {e}")
    os.makedirs(out_dir, exist_ok=True)
    exp.write_refinement_csv(os.path.join(out_dir, "refinement.csv"), report)
    return EXIT_OK


def _audit_rows(rows, params: SimParams) -> Optional[str]:
    """Re-verify the certified bounds from diagnostics rows; None if clean."""
    if not rows:
        return "diagnostics empty"
    strict = params.cfl_mode == "strict"
    L = params.L
    a_sup = params.stress.sup_norm(params.T)
    growth = L * (4.0 * params.M**2 * L + a_sup)
    vel_bound = params.velocity_bound
    linf0 = max(rows[0]["linf_rho_plus"], rows[0]["linf_rho_minus"])
    e_const = math.e * math.log(2.0 * math.e)
    cumul_cap = rows[0]["entropy_f"] + 2.0 * (e_const + L * math.log(2.0)) + 1e-6
    dt = params.dt if params.N_T > 0 else 0.0

    dissip_sum = 0.0
    for k, row in enumerate(rows):
        for key, val in row.items():
            if key in ("n", "fp_iters", "bounds_ok"):
                continue
            if not math.isfinite(val):
                return f"non-finite {key} (step {row['n']})"
        if row["dissipation"] < -1e-12:
            return f"dissipation negativity (step {row['n']})"
        if not strict:
            continue
        if row["theta_min_plus_L"] < -1e-12:
            return f"gradient positivity (step {row['n']})"
        if max(row["deviation_plus"], row["deviation_minus"]) > 2.0 * L + 1e-10:
            return f"deviation bound (step {row['n']})"
        if row["lambda_max"] > vel_bound + 1e-10:
            return f"velocity bound (step {row['n']})"
        if (
            max(row["linf_rho_plus"], row["linf_rho_minus"])
            > linf0 + growth * row["t"] + 1e-8
        ):
            return f"sup-norm growth bound (step {row['n']})"
        if k > 0:
            dissip_sum += dt * row["dissipation"]
            if (
                row["entropy_g"] + dt * row["dissipation"]
                > rows[k - 1]["entropy_g"] + 1e-8
            ):
                return f"one-step entropy inequality (step {row['n']})"
            if row["entropy_f"] + dissip_sum > cumul_cap:
                return f"cumulative entropy bound (step {row['n']})"
    return None


def _audit_snapshots(run_dir: str, params: SimParams) -> Optional[str]:
    """Re-verify bounds recomputable from stored field snapshots."""
    strict = params.cfl_mode == "strict"
    L = params.L
    for path in sorted(glob.glob(os.path.join(run_dir, "*_n*.csv"))):
        base = os.path.basename(path)
        match = re.match(r"([a-z_]+)_n(\d+)\.csv$", base)
        if not match:
            continue
        name, step = match.group(1), int(match.group(2))
        try:
            data, _, _ = read_field(path)
        except ValueError as e:
            return f"snapshot malformed: {e}"
        if not np.all(np.isfinite(data)):
            return f"non-finite snapshot values ({base})"
        if not strict:
            continue
        if name in ("theta_plus", "theta_minus"):
            if float(np.min(data)) + L < -1e-12:
                return f"gradient positivity (snapshot {base})"
        elif name in ("rho_plus", "rho_minus"):
            if float(np.min(theta_x1(data))) + L < -1e-12:
                return f"gradient positivity (snapshot {base})"
            if deviation_from_x1_mean(data) > 2.0 * L + 1e-10:
                return f"deviation bound (snapshot {base})"
    return None


def cmd_audit(run_dir: str) -> int:
    cfg_path = os.path.join(run_dir, "run.cfg")
    diag_path = os.path.join(run_dir, "diagnostics.csv")
    try:
        with open(cfg_path, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    except OSError as e:
        return _fail(EXIT_CONFIG, f"audit: {e}")
    except (ConfigParseError, ConfigValidationError) as e:
        return _fail(EXIT_CONFIG, f"audit: bad run.cfg: {e}")
    try:
        rows = diag.read_diagnostics_csv(diag_path)
    except (OSError, ValueError) as e:
        return _fail(EXIT_CONFIG, f"audit: {e}")

    violation = _audit_rows(rows, cfg.params) or _audit_snapshots(run_dir, cfg.params)
    if violation:
        return _fail(EXIT_AUDIT, f"audit violation: {violation}")
    print(f"audit ok: {len(rows)} records verified ({cfg.params.cfl_mode} mode)")
    return EXIT_OK


def main(argv: Optional[list] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sim",
        description="Periodic-domain simulator for coupled dislocation-density transport",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a config file")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="override output directory")

    p_preset = sub.add_parser("preset", help="run a named preset")
    p_preset.add_argument("name", choices=exp.PRESET_NAMES)
    p_preset.add_argument("--out", default=None)
    p_preset.add_argument(
        "--times", default=None, help="comma-separated snapshot times"
    )

    p_refine = sub.add_parser("refine", help="dyadic refinement study")
    p_refine.add_argument("config")
    p_refine.add_argument("--levels", type=int, required=True)
    p_refine.add_argument("--out", default=None)

    p_audit = sub.add_parser("audit", help="re-verify bounds of a run directory")
    p_audit.add_argument("run_dir")

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out)
    if args.command == "preset":
        times = None
        if args.times is not None:
            try:
                times = [float(tok) for tok in args.times.split(",") if tok.strip()]
            except ValueError:
                return _fail(EXIT_CONFIG, f"config: bad --times {args.times!r}")
        return cmd_preset(args.name, args.out, times)
    if args.command == "refine":
        return cmd_refine(args.config, args.levels, args.out)
    return cmd_audit(args.run_dir)


if __name__ == "__main__":
    sys.exit(main())

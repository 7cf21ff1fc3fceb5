"""Command line front end: figure data as CSV, sweeps, and protocols.

Every subcommand writes CSV whose leading '#' comment lines echo the
effective parameters, so identical flags reproduce the file byte for
byte.  Data cells use scientific notation with 12 significant digits;
energies are reported in units of g0, times in units of the transit
scale sigma (the CLI works at sigma = 1 and all flags are the
dimensionless combinations g0*sigma, Delta*sigma, gamma*sigma).

Exit codes: 0 success, 1 bad arguments, 2 I/O failure, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import re
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TextIO

import numpy as np
from scipy.integrate import quad

from .analysis import check_input_output, scatter_matrix
from .dynamics import propagate_schrodinger
from .hamiltonian import coupling_pair
from .model import CavityPairError, PureState, SystemParams, manifold_basis
from .protocols import (CalibrationWarning, CavityStage, default_stages,
                        entangle_atoms, teleport)
from .spectrum import (DegenerateCouplingWarning, NoCrossingError,
                       closed_form_energies, crossing_time, diagonalize,
                       mixing_angles, phi_asymptote, theta_big,
                       track_spectrum)

__all__ = ["RunConfig", "UsageError", "build_parser", "main", "parse_grid"]


class UsageError(ValueError):
    """Malformed flags, grids, or config entries; maps to exit code 1."""


# ---------------------------------------------------------------------------
# grids and config files

def parse_grid(spec: str) -> tuple[float, ...]:
    """Expand a start:stop:step specification into grid points.

    The point count is floor((stop - start) / step) + 1 with a small
    forgiveness term so ranges like 0:100:1 include both endpoints.
    """
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:stop:step, got {spec!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"grid has a non-numeric field: {spec!r}") from None
    if step <= 0.0:
        raise UsageError("grid step must be positive")
    if stop < start:
        raise UsageError("grid stop must not precede start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(start + k * step for k in range(count))


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise UsageError(
            f"expected a comma-separated integer list, got {text!r}") from None
    if not values:
        raise UsageError("empty index list")
    return values


def _complex_amp(text: str) -> complex:
    try:
        return complex(text)
    except ValueError:
        raise UsageError(f"expected a complex amplitude, got {text!r}") from None


_CONVERTERS: dict[str, Callable[[str], object]] = {
    "g0_sigma": float,
    "epsilon": float,
    "delta": float,
    "detuning_sigma": float,
    "gamma_sigma": float,
    "window_sigma": float,
    "grid": str,
    "jobs": int,
    "out": str,
    "alpha": _complex_amp,
    "beta": _complex_amp,
    "stage1_g0_sigma": float,
    "stage2_g0_sigma": float,
    "stage3_g0_sigma": float,
}
_ALL_KEYS = set(_CONVERTERS) | {"n"}


def load_config(path: str) -> dict[str, str]:
    """Read a flat key=value file; '#' starts a comment, blanks are skipped."""
    entries: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if key not in _ALL_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            entries[key] = value.strip()
    return entries


def _convert(command: str, key: str, text: str) -> object:
    # --n means an index list for angles, a single block index elsewhere
    if key == "n":
        return _int_list(text) if command == "angles" else int(text)
    try:
        return _CONVERTERS[key](text)
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {text!r}") from exc


# ---------------------------------------------------------------------------
# effective-parameter resolution

_G60 = 28.392906  # entangling operating point: phi(-1) = 60 pi
_G40 = 18.928604  # decay-sweep operating point: phi(-1) = 40 pi

_COMMON_DEFAULTS: dict[str, object] = {
    "g0_sigma": _G60,
    "epsilon": 1.0,
    "delta": 1.0,
    "detuning_sigma": 0.0,
    "gamma_sigma": 0.0,
    "window_sigma": 12.0,
    "jobs": None,
    "out": None,
}

_DEFAULTS: dict[str, dict[str, object]] = {
    "spectrum": {**_COMMON_DEFAULTS, "n": 0, "grid": "-4:4:0.01"},
    "angles": {**_COMMON_DEFAULTS, "n": (-1, 0, 1)},
    "sweep": {**_COMMON_DEFAULTS, "g0_sigma": None, "grid": None},
    "populations": {**_COMMON_DEFAULTS, "g0_sigma": 50.0,
                    "window_sigma": 6.0, "grid": "0:100:1"},
    "teleport": {**_COMMON_DEFAULTS, "alpha": 0.6 + 0j, "beta": 0.8 + 0j,
                 "stage1_g0_sigma": None, "stage2_g0_sigma": None,
                 "stage3_g0_sigma": None},
    "scatter": {**_COMMON_DEFAULTS, "n": 0},
}

# Per-kind sweep defaults: the decay sweep runs at the weaker operating
# point and steps gamma*sigma by 0.01; the other two sweep around the
# entangling point.
_SWEEP_GRIDS = {
    "epsilon": "0.9:1.1:0.002",
    "detuning": "0:30:0.5",
    "gamma": "0:0.15:0.01",
}
_SWEEP_G0 = {"epsilon": _G60, "detuning": _G60, "gamma": _G40}


@dataclass(frozen=True)
class RunConfig:
    """One resolved invocation: a subcommand plus its effective parameters."""

    command: str
    values: dict[str, object]
    out: str | None
    jobs: int

    def __post_init__(self) -> None:
        if self.command not in _DEFAULTS:
            raise UsageError(f"unknown subcommand {self.command!r}")
        points = self.values.get("grid_points")
        if points is not None and len(points) == 0:
            raise UsageError("empty grid")
        if self.jobs < 1:
            raise UsageError("jobs must be at least 1")

    def params(self, **overrides: object) -> SystemParams:
        """System parameters at sigma = 1 implied by the shared flags."""
        window = float(self.values["window_sigma"])
        base = SystemParams(
            g0=float(self.values["g0_sigma"]),
            epsilon=float(self.values["epsilon"]),
            sigma=1.0,
            delta=float(self.values["delta"]),
            detuning=float(self.values["detuning_sigma"]),
            gamma=float(self.values["gamma_sigma"]),
            t_span=(-window, window),
        )
        return base.replace(**overrides) if overrides else base


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args: object, **kwargs: object) -> None:
        super().__init__(*args, **kwargs)  # type: ignore[arg-type]
        # tokens like -4:4:0.01 are grid values, not option names
        if hasattr(self, "_negative_number_matcher"):
            self._negative_number_matcher = re.compile(r"^-\d[\d.:,eE+-]*$")

    # argparse exits with status 2 on bad flags; the contract wants 1
    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cavitypair",
                     description="Two-atom cavity transit simulator.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def common(p: argparse.ArgumentParser, grid: bool) -> None:
        p.add_argument("--g0-sigma", dest="g0_sigma", type=float,
                       help="peak coupling of atom one, times sigma")
        p.add_argument("--epsilon", type=float,
                       help="peak-coupling ratio of atom two to atom one")
        p.add_argument("--delta", type=float,
                       help="dimensionless delay between the coupling peaks")
        p.add_argument("--detuning-sigma", dest="detuning_sigma", type=float,
                       help="atom-field detuning, times sigma")
        p.add_argument("--gamma-sigma", dest="gamma_sigma", type=float,
                       help="cavity photon decay rate, times sigma")
        p.add_argument("--window-sigma", dest="window_sigma", type=float,
                       help="half-width of the transit window, in sigmas")
        if grid:
            p.add_argument("--grid", help="grid as start:stop:step")
        p.add_argument("--jobs", type=int,
                       help="worker processes for grid points "
                            "(default: all cores)")
        p.add_argument("--config", help="key=value file; flags take priority")
        p.add_argument("--out", help="output CSV path (default: stdout)")

    p = sub.add_parser("spectrum",
                       help="adiabatic energies of one block over a tau grid")
    p.add_argument("--n", type=int, help="base photon index of the block")
    common(p, grid=True)

    p = sub.add_parser("angles",
                       help="transit phases phi_n, theta_n and the "
                            "dispersive phase")
    p.add_argument("--n", type=int, nargs="+", metavar="N",
                   help="block indices (default: -1 0 1)")
    common(p, grid=False)

    p = sub.add_parser("sweep", help="entangling fidelity along one axis")
    p.add_argument("kind", choices=("epsilon", "detuning", "gamma"))
    common(p, grid=True)

    p = sub.add_parser("populations",
                       help="final bare-state populations vs detuning")
    common(p, grid=True)

    p = sub.add_parser("teleport",
                       help="three-cavity payload transfer pipeline")
    p.add_argument("--alpha", type=_complex_amp,
                   help="vacuum amplitude of the payload")
    p.add_argument("--beta", type=_complex_amp,
                   help="one-photon amplitude of the payload")
    for k in (1, 2, 3):
        p.add_argument(f"--stage{k}-g0-sigma", dest=f"stage{k}_g0_sigma",
                       type=float, help=f"override stage {k} peak coupling")
    common(p, grid=False)

    p = sub.add_parser("scatter",
                       help="measured transit map of one block vs its "
                            "predicted table")
    p.add_argument("--n", type=int, help="base photon index of the block")
    common(p, grid=False)

    return parser


def _build_run(args: argparse.Namespace) -> RunConfig:
    command = args.command
    defaults = dict(_DEFAULTS[command])
    values = dict(defaults)

    if getattr(args, "config", None):
        for key, text in load_config(args.config).items():
            if key in defaults:
                values[key] = _convert(command, key, text)
    for key in defaults:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag

    if command == "sweep":
        values["kind"] = args.kind
        if values["g0_sigma"] is None:
            values["g0_sigma"] = _SWEEP_G0[args.kind]
        if values["grid"] is None:
            values["grid"] = _SWEEP_GRIDS[args.kind]
    if isinstance(values.get("n"), str):
        values["n"] = _convert(command, "n", values["n"])
    if isinstance(values.get("n"), list):
        values["n"] = tuple(values["n"])
    if "grid" in values:
        values["grid_points"] = parse_grid(str(values["grid"]))

    if float(values["g0_sigma"]) <= 0.0:
        raise UsageError("g0-sigma must be positive")
    if float(values["window_sigma"]) <= 0.0:
        raise UsageError("window-sigma must be positive")
    if float(values["gamma_sigma"]) < 0.0:
        raise UsageError("gamma-sigma must be non-negative")

    jobs = values.pop("jobs")
    out = values.pop("out")
    return RunConfig(command=command, values=values, out=out,
                     jobs=int(jobs) if jobs is not None
                     else (os.cpu_count() or 1))


# ---------------------------------------------------------------------------
# output helpers

def _fmt(x: float) -> str:
    return f"{x + 0.0:.11e}"  # + 0.0 folds IEEE -0.0 into +0.0


def _cfmt(z: complex) -> str:
    return f"{z.real:+.11e}{z.imag:+.11e}j"


def _echo_value(v: object) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, complex):
        return _cfmt(v)
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return str(v)


def _param_comment(run: RunConfig) -> str:
    body = " ".join(f"{k}={_echo_value(v)}"
                    for k, v in sorted(run.values.items())
                    if k != "grid_points" and v is not None)
    return f"cavitypair {run.command} {body}"


def _write_csv(out: str | None, comments: list[str], header: list[str],
               rows: list[list[str]]) -> None:
    def emit(handle: TextIO) -> None:
        for comment in comments:
            handle.write(f"# {comment}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)

    if out is None:
        emit(sys.stdout)
    else:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            emit(handle)


def _map_points(fn: Callable, tasks: list, jobs: int) -> list:
    """Run fn over tasks, in order, optionally on a process pool."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# subcommands

def _cmd_spectrum(run: RunConfig) -> int:
    n = int(run.values["n"])  # type: ignore[arg-type]
    params = run.params()
    taus = run.values["grid_points"]
    comments = [_param_comment(run)]
    dim = 4 if n >= 0 else (3 if n == -1 else 1)
    header = ["tau"] + [f"E{j}" for j in range(1, dim + 1)]
    rows: list[list[str]] = []

    if params.detuning == 0.0:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateCouplingWarning)
            try:
                comments.append("envelope crossing "
                                f"tau_c={crossing_time(params) + 0.0:.6f}")
            except NoCrossingError:
                comments.append("envelope crossing: none")
        if n >= 0:
            # Closed-form branch order (-E-, +E-, -E+, +E+): the inner
            # pair touches zero at the envelope crossing instead of
            # swapping energy rank.
            for tau in taus:
                es = closed_form_energies(2.0 * tau, params, n)
                rows.append([_fmt(tau)] + [_fmt(e / params.g0) for e in es])
        else:
            basis = manifold_basis(n + 2)
            for tau in taus:
                es, _ = diagonalize(2.0 * tau, params, basis)
                rows.append([_fmt(tau)] + [_fmt(e / params.g0) for e in es])
    else:
        basis = manifold_basis(n + 2)
        curve = track_spectrum(params, basis,
                               np.asarray([2.0 * tau for tau in taus]))
        for k, tau in enumerate(taus):
            rows.append([_fmt(tau)]
                        + [_fmt(e / params.g0) for e in curve.energies[k]])
        comments.append(f"gap minima: exact={len(curve.crossings)} "
                        f"avoided={len(curve.avoided)}")
        for ev in curve.crossings + curve.avoided:
            comments.append(f"{ev.kind} minimum tau={ev.tau:+.6f} "
                            f"gap={ev.gap / params.g0:.6e} g0 "
                            f"pair={ev.pair[0]}-{ev.pair[1]}")

    _write_csv(run.out, comments, header, rows)
    return 0


def _quadrature_big_theta(params: SystemParams) -> float:
    """Dispersive swap phase by direct quadrature of the coupling power.

    Deliberately independent of the closed form in spectrum.theta_big;
    the CSV carries this value so the two routes can be compared.
    """
    def rate(t: float) -> float:
        eta1, eta2 = coupling_pair(t, params)
        return (eta1 * eta1 + eta2 * eta2) / params.detuning

    peaks = sorted((-2.0 * params.sigma * params.delta,
                    2.0 * params.sigma * params.delta))
    a, b = params.t_span
    value, _ = quad(rate, a, b, epsabs=1e-13, epsrel=1e-13, limit=400,
                    points=[p for p in peaks if a < p < b])
    return float(value)


def _cmd_angles(run: RunConfig) -> int:
    ns = run.values["n"]
    if isinstance(ns, int):
        ns = (ns,)
    params = run.params()
    dispersive = params.detuning != 0.0
    header = ["n", "phi_n", "theta_n", "asymptote"]
    comments = [_param_comment(run)]
    big = None
    if dispersive:
        header.append("big_theta")
        big = _quadrature_big_theta(params)
        comments.append(f"big_theta closed form = {theta_big(params):.11e}")

    rows = []
    for n in ns:  # type: ignore[union-attr]
        ang = mixing_angles(int(n), params)
        asym = "" if n < 0 else _fmt(phi_asymptote(int(n), params))
        row = [str(n), _fmt(ang.phi), _fmt(ang.theta), asym]
        if dispersive:
            row.append(_fmt(big))
        rows.append(row)
    _write_csv(run.out, comments, header, rows)
    return 0


def _entangle_point(params: SystemParams) -> float:
    return float(entangle_atoms(params)[1])


def _cmd_sweep(run: RunConfig) -> int:
    kind = str(run.values["kind"])
    base = run.params()
    points = run.values["grid_points"]
    axis = {"epsilon": "epsilon", "detuning": "detuning",
            "gamma": "gamma"}[kind]
    tasks = [base.replace(**{axis: float(v)}) for v in points]
    fidelities = _map_points(_entangle_point, tasks, run.jobs)
    column = {"epsilon": "epsilon", "detuning": "detuning_sigma",
              "gamma": "gamma_sigma"}[kind]
    rows = [[_fmt(v), _fmt(f)] for v, f in zip(points, fidelities)]
    _write_csv(run.out, [_param_comment(run)], [column, "fidelity"], rows)
    return 0


def _population_point(params: SystemParams) -> tuple[float, ...]:
    # one photon plus one atomic excitation: the four-state block n = 0
    basis = manifold_basis(2)
    psi = PureState.from_label(basis, (1, "e", "g"))
    out = propagate_schrodinger(psi, params)
    return tuple(float(abs(a) ** 2) for a in out.amplitudes)


def _cmd_populations(run: RunConfig) -> int:
    base = run.params()
    points = run.values["grid_points"]
    tasks = [base.replace(detuning=float(v)) for v in points]
    pops = _map_points(_population_point, tasks, run.jobs)
    header = ["detuning_sigma", "p_0ee", "p_1ge", "p_1eg", "p_2gg"]
    rows = [[_fmt(v)] + [_fmt(x) for x in p]
            for v, p in zip(points, pops)]
    _write_csv(run.out, [_param_comment(run)], header, rows)
    return 0


def _cmd_teleport(run: RunConfig) -> int:
    alpha = complex(run.values["alpha"])  # type: ignore[arg-type]
    beta = complex(run.values["beta"])  # type: ignore[arg-type]
    norm = math.sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
    if norm == 0.0:
        raise UsageError("payload must be non-zero")
    alpha, beta = alpha / norm, beta / norm

    stages = list(default_stages())
    for i, key in enumerate(("stage1_g0_sigma", "stage2_g0_sigma",
                             "stage3_g0_sigma")):
        g = run.values[key]
        if g is not None:
            stages[i] = CavityStage(
                params=stages[i].params.replace(g0=float(g)),
                gates=stages[i].gates)

    # Calibration trouble surfaces on the result's warning field; the
    # raw Python warning would only duplicate it on stderr.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CalibrationWarning)
        result = teleport(alpha, beta, tuple(stages))

    comments = [_param_comment(run),
                f"payload alpha={_cfmt(alpha)} beta={_cfmt(beta)}",
                f"fidelity = {result.fidelity:.11e}"]
    comments += [f"warning: {note}" for note in result.warnings]
    header = ["stage", "g0_sigma", "area", "leakage"]
    rows = [[str(i), _fmt(stage.params.g0 * stage.params.sigma),
             _fmt(area), _fmt(leak)]
            for i, (stage, area, leak)
            in enumerate(zip(stages, result.stage_areas,
                             result.stage_leakage), start=1)]
    _write_csv(run.out, comments, header, rows)

    areas = ", ".join(f"{a:.6f}" for a in result.stage_areas)
    print(f"teleport fidelity {result.fidelity:.11e}; "
          f"transit areas phi(-1) = {areas} rad")
    for note in result.warnings:
        print(f"warning: {note}")
    return 0


def _cmd_scatter(run: RunConfig) -> int:
    n = int(run.values["n"])  # type: ignore[arg-type]
    params = run.params()
    if params.gamma != 0.0:
        raise UsageError("the transit map is unitary; set gamma-sigma to 0")
    if params.detuning != 0.0:
        regime = "large-detuning"
        if n != -1:
            raise UsageError("the dispersive prediction covers the "
                             "single-excitation block; use --n -1")
    elif params.epsilon == 1.0:
        regime = "resonant-symmetric"
    else:
        regime = "resonant-asymmetric"

    s = scatter_matrix(params, n + 2)
    report = check_input_output(s, mixing_angles(n, params), regime)
    comments = [_param_comment(run),
                f"regime = {regime}",
                f"unitarity defect = {s.unitarity_defect:.3e}",
                f"max residual vs predicted table = {report.residual:.3e}"]
    comments += [f"{name} sector residual = {value:.3e}"
                 for name, value in sorted(report.sector_residuals.items())]
    if report.measured_angle is not None:
        comments.append("measured swap phase (wrapped) = "
                        f"{report.measured_angle:.11e}")

    rows = [[str(i), str(j), _fmt(s.matrix[i, j].real),
             _fmt(s.matrix[i, j].imag)]
            for i in range(s.matrix.shape[0])
            for j in range(s.matrix.shape[1])]
    _write_csv(run.out, comments, ["row", "col", "re", "im"], rows)
    return 0


_COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "spectrum": _cmd_spectrum,
    "angles": _cmd_angles,
    "sweep": _cmd_sweep,
    "populations": _cmd_populations,
    "teleport": _cmd_teleport,
    "scatter": _cmd_scatter,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        run = _build_run(args)
        return _COMMANDS[run.command](run)
    except SystemExit as exc:  # argparse --help
        return exc.code if isinstance(exc.code, int) else 0
    except ValueError as exc:
        print(f"cavitypair: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"cavitypair: i/o error: {exc}", file=sys.stderr)
        return 2
    except CavityPairError as exc:
        print(f"cavitypair: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

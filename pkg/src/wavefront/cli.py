"""Command-line front end: curve data for the emission, beat and eraser figures.

Every subcommand writes tables with a header of ``name [unit]`` columns, as CSV
or as JSON (``{"table", "columns": [{"name", "unit"}], "data": {name: [...]}}``).  With
``--out DIR`` each table goes to ``DIR/<subcommand>_<table>.<fmt>``; without it
the primary table is written to stdout.

Units are nondimensional by default (gamma = 1, c = 1, omega0 = 100).  Nothing
here is random; the WAVEFRONT_SEEDLESS environment variable is ignored.

Exit status: 0 success, 2 usage error, 3 numerical-validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from wavefront import amplitudes as amp
from wavefront import measurement as meas
from wavefront import multilevel as ml
from wavefront import oracle

EXIT_USAGE = 2
EXIT_VALIDATION = 3

SURVIVAL_TOL = 1e-4
DRIFT_TOL = 1e-9


class UsageError(Exception):
    pass


class Table:
    def __init__(self, name: str):
        self.name = name
        self.columns: list[tuple[str, str, np.ndarray]] = []

    def add(self, name: str, unit: str, values) -> Table:
        self.columns.append((name, unit, np.asarray(values, dtype=float)))
        return self

    @property
    def n_rows(self) -> int:
        return len(self.columns[0][2]) if self.columns else 0

    def render(self, fmt: str) -> str:
        if fmt == "json":
            doc = {
                "table": self.name,
                "columns": [{"name": n, "unit": u} for n, u, _ in self.columns],
                "data": {n: [float(v) for v in vals] for n, _, vals in self.columns},
            }
            return json.dumps(doc, indent=1) + "\n"
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"{n} [{u}]" for n, u, _ in self.columns])
        for i in range(self.n_rows):
            writer.writerow([repr(float(vals[i])) for _, _, vals in self.columns])
        return buf.getvalue()


_TOKEN = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*(ln2|pi)?\s*$")
_CONSTANTS = {"ln2": math.log(2), "pi": math.pi, None: 1.0}


def _floats(text: str) -> list[float]:
    """Parse ``"0.5, ln2, 2ln2, 3*pi"`` into floats."""
    if not text.strip():
        return []
    out = []
    for item in text.split(","):
        match = _TOKEN.match(item)
        if not match or not (match.group(1) or match.group(2)):
            raise UsageError(f"cannot parse number {item.strip()!r}")
        coef = float(match.group(1)) if match.group(1) else 1.0
        out.append(coef * _CONSTANTS[match.group(2)])
    return out


def _linspace(lo, hi, n, what):
    if n is None or n < 2:
        raise UsageError(f"{what}: need at least 2 steps")
    if not hi > lo:
        raise UsageError(f"{what}: empty range [{lo}, {hi}]")
    return np.linspace(lo, hi, n)


def _positive(args, *names):
    for name in names:
        value = getattr(args, name)
        if value is None or not value > 0:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")


def _emitter(args) -> amp.EmitterParams:
    _positive(args, "gamma", "omega0", "c")
    return amp.EmitterParams(args.omega0, args.gamma, args.c)


def cmd_decay(args) -> list[Table]:
    p = _emitter(args)
    times = _floats(args.t_list) if args.t_list is not None else [k * math.log(2) / p.gamma for k in (1, 2, 3)]
    if not times:
        raise UsageError("--t-list is empty")
    if any(t < 0 for t in times):
        raise UsageError("--t-list entries must be non-negative")
    r_max = args.r_max if args.r_max is not None else 1.2 * p.c * max(times)
    x = _linspace(args.r_min, r_max, args.r_steps, "r range")
    profile = Table("profile").add("x", "length", x)
    for t in times:
        profile.add(f"density_t={t:.6g}", "1/length", amp.photon_density_r(p, x, t))

    k_min = args.k_min if args.k_min is not None else p.k0 - 10 * p.gamma / p.c
    k_max = args.k_max if args.k_max is not None else p.k0 + 10 * p.gamma / p.c
    k = _linspace(k_min, k_max, args.k_steps, "k range")
    spectrum = Table("spectrum").add("k", "1/length", k)
    for t in times:
        spectrum.add(f"density_t={t:.6g}", "length", amp.photon_density_k(p, k, t))
    spectrum.add("lorentzian", "length", amp.lorentzian_density_k(p, k))

    t_end = args.t if args.t is not None else 5 / p.gamma
    ts = _linspace(0.0, t_end, args.t_steps, "t range")
    survival = Table("survival").add("t", "time", ts)
    survival.add("survival", "probability", np.abs(amp.excited_amplitude(p, ts)) ** 2)
    return [profile, spectrum, survival]


def _v_channels(args):
    _positive(args, "gamma", "c")
    gp = args.gamma_plus if args.gamma_plus is not None else args.gamma
    gm = args.gamma_minus if args.gamma_minus is not None else args.gamma
    wp = args.omega_plus if args.omega_plus is not None else args.omega0 + args.delta_omega
    wm = args.omega_minus if args.omega_minus is not None else args.omega0 - args.delta_omega
    return ml.ChannelSpec(1, wp, gp), ml.ChannelSpec(-1, wm, gm)


def cmd_beats(args) -> list[Table]:
    plus, minus = _v_channels(args)
    if plus.gamma != minus.gamma:
        raise UsageError("dipole-basis beat curves need --gamma-plus equal to --gamma-minus")
    t = args.t if args.t is not None else 5.0 / plus.gamma
    r_max = args.r_max if args.r_max is not None else args.c * t
    r = _linspace(args.r_min, r_max, args.r_steps, "r range")
    m_state = ml.v_state(plus, minus, t, args.c)
    xy_state = ml.v_state_rotated(plus, minus, t, args.c)
    dm = m_state.photon_density(r, "m")
    dxy = xy_state.photon_density(r)
    envelope = amp.photon_density_r(amp.EmitterParams(1.0, plus.gamma, args.c), r, t)
    table = Table("beats").add("r", "length", r)
    table.add("m_plus", "1/length", dm[0]).add("m_minus", "1/length", dm[1])
    table.add("dx", "1/length", dxy[0]).add("dy", "1/length", dxy[1])
    table.add("sum", "1/length", dxy[0] + dxy[1]).add("envelope", "1/length", envelope)
    return [table]


def _lambda_state(args, t):
    _positive(args, "gamma", "c", "omega0")
    gp = args.gamma_plus if args.gamma_plus is not None else args.gamma / 2
    gm = args.gamma_minus if args.gamma_minus is not None else args.gamma / 2
    if gp != gm:
        raise UsageError("eraser curves need --gamma-plus equal to --gamma-minus")
    wp = args.omega_plus if args.omega_plus is not None else args.omega0 + args.delta_omega
    wm = args.omega_minus if args.omega_minus is not None else args.omega0 - args.delta_omega
    return ml.lambda_state_rotated(args.omega0, ml.ChannelSpec(1, wp, gp), ml.ChannelSpec(-1, wm, gm), t, args.c)


def cmd_lambda(args) -> list[Table]:
    t = args.t if args.t is not None else 5.0 / args.gamma
    state = _lambda_state(args, t)
    r_max = args.r_max if args.r_max is not None else args.c * t
    r = _linspace(args.r_min, r_max, args.r_steps, "r range")
    joint = np.abs(state.joint(r)) ** 2
    px_dx, py_dx = joint[0, 0], joint[1, 0]
    envelope = 0.5 * amp.photon_density_r(amp.EmitterParams(1.0, state.gamma, args.c), r, t)
    table = Table("eraser").add("r", "length", r)
    table.add("px_dx", "1/length", px_dx).add("py_dx", "1/length", py_dx)
    table.add("sum", "1/length", px_dx + py_dx).add("envelope", "1/length", envelope)
    return [table]


def cmd_measure(args) -> list[Table]:
    kind = args.kind
    if kind == "michelson":
        p = _emitter(args)
        t = args.t if args.t is not None else 5.0 / p.gamma
        state = ml.TwoLevelState(p.omega0, p.gamma, t, p.c)
        r1 = args.r1 if args.r1 is not None else 0.5 * p.c * t
        span = args.delta_r_max if args.delta_r_max is not None else 4 * 2 * math.pi * p.c / p.omega0
        dr = _linspace(0.0, span, args.steps, "delta-r range")[1:]
        dens = [meas.detect(state, meas.michelson_projector(r1, r1 + d, "m+1")).probability for d in dr]
        return [Table("michelson").add("delta_r", "length", dr).add("density", "1/length", dens)]
    if kind == "fabry-perot":
        _positive(args, "gamma", "c", "spacing")
        t = args.t if args.t is not None else 10.0 / args.gamma
        proj = meas.fabry_perot_projector(args.reflectivity, args.spacing, channel="m+1")
        if proj.positions[-1] >= args.c * t:
            raise UsageError("Fabry-Perot points extend beyond the wavefront; increase --t or reduce --spacing")
        phase = _linspace(args.phase_min, args.phase_max, args.steps, "phase range")
        dens = [
            meas.detect(ml.TwoLevelState(ph * args.c / args.spacing, args.gamma, t, args.c), proj).probability
            for ph in phase
        ]
        return [Table("fabry_perot").add("phase", "rad", phase).add("density", "1/length", dens)]
    if kind == "sigma":
        plus, minus = _v_channels(args)
        t = args.t if args.t is not None else 5.0 / plus.gamma
        state = ml.v_state_rotated(plus, minus, t, args.c)
        r = args.r1 if args.r1 is not None else 0.5 * args.c * t
        sig = _linspace(0.0, 1.0, args.steps, "sigma range")
        if args.sigma is not None:
            sig = np.array([args.sigma])
        dens = [
            meas.detect(state, meas.finite_detector_projector(r, "dx", meas.DetectorGeometry(s))).probability
            for s in sig
        ]
        return [Table("finite_detector").add("sigma", "1", sig).add("density", "1/length", dens)]
    if kind == "coincidence":
        t = args.t if args.t is not None else 5.0 / args.gamma
        state = _lambda_state(args, t)
        r0 = args.r1 if args.r1 is not None else 0.1 * args.c * t
        tau_max = args.tau if args.tau is not None else 0.8 * t
        taus = _linspace(0.0, tau_max, args.steps, "tau range")
        px, py = [], []
        for tau in taus:
            if tau > 0:
                _, proj = meas.coincidence_projector(r0, tau, ("dx", "dx"), args.c)
            else:
                proj = meas.polarizer_projector(r0, "dx")
            px.append(meas.coincidence_density(state, proj, 0))
            py.append(meas.coincidence_density(state, proj, 1))
        px, py = np.array(px), np.array(py)
        table = Table("coincidence").add("tau", "time", taus)
        table.add("px_dx", "1/length", px).add("py_dx", "1/length", py).add("sum", "1/length", px + py)
        return [table]
    raise UsageError(f"unknown measurement kind {kind!r}")


def cmd_oracle(args) -> list[Table]:
    p = _emitter(args)
    _positive(args, "grid_span", "dt")
    t_end = args.t if args.t is not None else 10.0 / p.gamma
    span = args.grid_span * p.gamma / p.c
    specs = []
    for frac in (0.2, 0.5, 1.0):
        n = max(2, int(round(args.grid_n * frac)))
        specs.append(oracle.GridSpec.around(p.k0, span * frac, n, args.dt / p.gamma))
    try:
        for spec in specs:
            spec.validate(p.c, p.omega0)
    except oracle.ConfigurationError as exc:
        raise UsageError(str(exc)) from exc
    states = [oracle.integrate(p, spec, t_end) for spec in specs]
    rows = [oracle.convergence_row(p, st) for st in states]
    report = Table("report")
    report.add("k_halfwidth", "1/length", [0.5 * (r.grid.k_max - r.grid.k_min) for r in rows])
    report.add("n_points", "1", [r.grid.n_points for r in rows])
    report.add("dt", "time", [r.grid.dt for r in rows])
    report.add("survival_error", "1", [r.survival_error for r in rows])
    report.add("density_error", "1", [r.density_error for r in rows])
    report.add("norm_drift", "1/(gamma t)", [r.norm_drift for r in rows])

    state = states[-1]
    stride = max(1, (len(state.times) - 1) // max(1, args.t_steps - 1))
    ts = state.times[::stride]
    numeric = np.abs(state.excited_history[::stride, 0]) ** 2
    exact = np.abs(amp.excited_amplitude(p, ts)) ** 2
    errors = Table("errors").add("t", "time", ts).add("numeric", "probability", numeric)
    errors.add("exact", "probability", exact).add("rel_error", "1", np.abs(numeric / exact - 1))

    args._validation_failed = rows[-1].survival_error > SURVIVAL_TOL or rows[-1].norm_drift > DRIFT_TOL
    return [report, errors]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--gamma", type=float, default=1.0, help="decay rate (total, or per channel for beats)")
    common.add_argument("--gamma-plus", type=float)
    common.add_argument("--gamma-minus", type=float)
    common.add_argument("--omega0", type=float, default=100.0)
    common.add_argument("--omega-plus", type=float)
    common.add_argument("--omega-minus", type=float)
    common.add_argument("--delta-omega", type=float, default=5.0, help="half splitting when omega+- not given")
    common.add_argument("--c", type=float, default=1.0)
    common.add_argument("--t", type=float)
    common.add_argument("--t-list", type=str, help="comma-separated times; 'ln2' and 'pi' allowed")
    common.add_argument("--t-steps", type=int, default=201)
    common.add_argument("--r-min", type=float, default=0.0)
    common.add_argument("--r-max", type=float)
    common.add_argument("--r-steps", type=int, default=241)
    common.add_argument("--k-min", type=float)
    common.add_argument("--k-max", type=float)
    common.add_argument("--k-steps", type=int, default=401)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", type=Path, help="output directory")

    parser = argparse.ArgumentParser(prog="wavefront", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("decay", parents=[common], help="two-level emission profiles, spectra, survival")
    sub.add_parser("beats", parents=[common], help="V-system photon densities in both bases")
    sub.add_parser("lambda", parents=[common], help="Lambda-system eraser coincidence curves")
    m = sub.add_parser("measure", parents=[common], help="detector-model sweeps")
    m.add_argument("--kind", choices=("michelson", "fabry-perot", "sigma", "coincidence"), default="michelson")
    m.add_argument("--steps", type=int, default=401)
    m.add_argument("--r1", type=float, help="fixed detector distance")
    m.add_argument("--delta-r-max", type=float)
    m.add_argument("--sigma", type=float)
    m.add_argument("--reflectivity", type=float, default=0.9)
    m.add_argument("--spacing", type=float, default=0.05)
    m.add_argument("--phase-min", type=float, default=0.5)
    m.add_argument("--phase-max", type=float, default=20.0)
    m.add_argument("--tau", type=float)
    o = sub.add_parser("oracle", parents=[common], help="numerical-oracle convergence report")
    o.add_argument("--grid-n", type=int, default=2**15)
    o.add_argument("--grid-span", type=float, default=50.0, help="half-width in units of gamma/c")
    o.add_argument("--dt", type=float, default=1e-3, help="step in units of 1/gamma")
    return parser


COMMANDS = {
    "decay": cmd_decay,
    "beats": cmd_beats,
    "lambda": cmd_lambda,
    "measure": cmd_measure,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._validation_failed = False
    try:
        tables = COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out is None:
        sys.stdout.write(tables[0].render(args.format))
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        for table in tables:
            path = args.out / f"{args.command}_{table.name}.{args.format}"
            path.write_text(table.render(args.format))
    if args._validation_failed:
        print(f"{parser.prog} {args.command}: numerical validation failed", file=sys.stderr)
        return EXIT_VALIDATION
    return 0


if __name__ == "__main__":
    sys.exit(main())

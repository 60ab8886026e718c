"""Command-line front end: ``picard-nth predict | simulate | sweep``.

Exit codes: 0 success, 1 configuration or usage error, 2 solver/runtime
error.  A diverging iteration is data, reported in the output, not an error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coupling import (
    PicardOperator,
    aa1_solve,
    estimate_spectral_radius_numerical,
    perturbation_shape,
    picard_solve,
)
from .errors import ConfigError, NonAsymptoticError, PicardError
from .fourier import (
    XI_INF,
    FAParams,
    asymptotic_branches,
    critical_optical_thickness,
    omega_opt,
    spectral_radius_fa,
)
from .model import load_config, parse_config, reference_config

CSV_HEADER = [
    "case_id",
    "sweep_var",
    "sweep_value",
    "rho_fa",
    "rho_num",
    "omega_opt_fa",
    "iterations",
    "status",
]
SWEEP_VARS = {"height": "L", "omega": "omega", "omega-opt": "L"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(value):
    if value is None or value == "":
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.9g}"


@dataclass
class SweepRow:
    case_id: str
    sweep_var: str
    sweep_value: float
    rho_fa: float
    rho_num: float | None = None
    omega_opt_fa: float | None = None
    iterations: int | None = None
    status: str = "predicted"

    def cells(self):
        return [
            self.case_id,
            self.sweep_var,
            _fmt(self.sweep_value),
            _fmt(self.rho_fa),
            _fmt(self.rho_num),
            _fmt(self.omega_opt_fa),
            _fmt(self.iterations),
            self.status,
        ]


def _load(args):
    base = reference_config()
    config, pin = base if args.config is None else load_config(args.config, base)
    if args.set:
        overrides = "\n".join(args.set)
        config, pin = parse_config(overrides, (config, pin))
    return config, pin


def _mode_label(mode, params):
    if mode is XI_INF:
        return "xi -> infinity"
    return f"j = {mode} (xi = {params.mode(mode):.6g})"


def cmd_predict(args, out):
    config, pin = _load(args)
    params = FAParams.from_config(config, pin)
    fa = spectral_radius_fa(params, args.omega)
    high, slow = asymptotic_branches(params, args.omega)
    print(f"core height L        : {config.core_height_L:.6g} cm", file=out)
    print(f"fuel-coolant dT      : {params.delta_t_fc:.6g} K", file=out)
    print(f"omega                : {args.omega:.6g}", file=out)
    print(f"rho (FA)             : {fa.rho:.6f}", file=out)
    print(f"dominant mode        : {_mode_label(fa.mode, params)}", file=out)
    print(f"gain xi -> infinity  : {high:.6f}", file=out)
    print(f"gain slowest mode    : {slow:.6f}", file=out)
    print(f"omega_opt            : {omega_opt(params):.6f}", file=out)
    try:
        tau = critical_optical_thickness(params, omega=args.omega)
        print(f"critical height      : {tau / config.sigma_t0:.6g} cm", file=out)
    except ValueError:
        print("critical height      : none (radius stays below 1)", file=out)
    return 0


def _initial_temperature(op, amplitude, seed):
    return op.base_temperature() + amplitude * perturbation_shape(op.n_cells, seed)


def cmd_simulate(args, out):
    config, pin = _load(args)
    op = PicardOperator(config, pin)
    init = _initial_temperature(op, args.perturbation, args.seed)
    if args.aa1:
        sol = aa1_solve(config, pin, init=init, tol=args.tol, max_iter=args.max_iter, operator=op)
        label = "AA-1"
    else:
        sol = picard_solve(
            config, pin, omega=args.omega, init=init, tol=args.tol, max_iter=args.max_iter, operator=op
        )
        label = f"Picard, omega = {args.omega:.6g}"
    trace = sol.trace
    print(f"scheme               : {label}", file=out)
    print(f"status               : {trace.status}", file=out)
    print(f"iterations           : {trace.iterations}", file=out)
    print(f"k_eff                : {sol.k_eff:.9f}", file=out)
    print(f"last update [K]      : {trace.errors[-1]:.6g}", file=out)
    if trace.iterations > 2:
        print(f"observed error ratio : {trace.asymptotic_ratio(5):.6f}", file=out)
    if args.trace:
        _write_trace(args.trace, trace)
    if args.measure_rho:
        omega = 1.0 if args.aa1 else args.omega
        est = estimate_spectral_radius_numerical(
            config, pin, omega=omega, perturbation_amplitude=args.perturbation, seed=args.seed, operator=op
        )
        fa = spectral_radius_fa(FAParams.from_config(config, pin), omega)
        print(f"rho measured         : {est.rho:.6f}", file=out)
        print(f"rho FA               : {fa.rho:.6f}", file=out)
        print(f"difference           : {est.rho - fa.rho:+.6f}", file=out)
    return 0


def _write_trace(path, trace):
    ratios = [""] + trace.ratios
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "error", "ratio", "k_eff"])
        for i, err in enumerate(trace.errors):
            k = trace.k_effs[i] if i < len(trace.k_effs) else ""
            writer.writerow([i + 1, _fmt(err), _fmt(ratios[i]), _fmt(k)])


def sweep_grid(lo, hi, step):
    if not lo < hi:
        raise ValueError("--min must be below --max")
    if not step > 0:
        raise ValueError("--step must be positive")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 10) for i in range(n)]


def sweep_point(task):
    """Evaluate one sweep row; module level so worker processes can pickle it."""
    kind, index, value, config, pin, omega, numerical, seed = task
    if kind == "omega":
        cfg, w = config, value
    else:
        cfg, w = config.with_height(value), omega
    params = FAParams.from_config(cfg, pin)
    w_opt = omega_opt(params)
    if kind == "omega-opt":
        w = w_opt
    row = SweepRow(
        case_id=f"{kind}-{index:03d}",
        sweep_var=SWEEP_VARS[kind],
        sweep_value=value,
        rho_fa=spectral_radius_fa(params, w).rho,
        omega_opt_fa=w_opt,
    )
    if numerical:
        try:
            est = estimate_spectral_radius_numerical(cfg, pin, omega=w, seed=seed)
        except NonAsymptoticError as exc:
            row.iterations = len(exc.ratios or [])
            row.status = "non-asymptotic"
        else:
            row.rho_num = est.rho
            row.iterations = est.trace.iterations
            row.status = est.trace.status
    return row


def run_sweep(kind, config, pin, values, omega=1.0, numerical=False, seed=None, jobs=1):
    tasks = [(kind, i, v, config, pin, omega, numerical, seed) for i, v in enumerate(values)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(sweep_point, tasks))
    return [sweep_point(t) for t in tasks]


def format_sweep_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.cells())
    return buf.getvalue()


def cmd_sweep(args, out):
    config, pin = _load(args)
    try:
        values = sweep_grid(args.min, args.max, args.step)
    except ValueError as exc:
        raise ConfigError("sweep", str(exc)) from None
    if args.sweep == "omega" and not (0 < values[0] and values[-1] <= 1):
        raise ConfigError("sweep", "omega values must lie in (0, 1]")
    rows = run_sweep(
        args.sweep, config, pin, values, args.omega, args.numerical, args.seed, args.jobs
    )
    text = format_sweep_csv(rows)
    if args.out:
        try:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"cannot write {args.out}: {exc.strerror}", file=sys.stderr)
            return 2
    else:
        out.write(text)
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value file (default: bundled reference case)")
    common.add_argument(
        "--set", action="append", metavar="KEY=VALUE", help="override one configuration key; repeatable"
    )
    common.add_argument("--omega", type=float, default=1.0, help="relaxation factor (default 1)")
    common.add_argument("--seed", type=int, default=None, help="random perturbation instead of the mode pair")

    parser = _Parser(prog="picard-nth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("predict", parents=[common], help="closed-form spectral radius and omega_opt")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", parents=[common], help="run the coupled iteration")
    p.add_argument("--aa1", action="store_true", help="use AA-1 updates instead of fixed relaxation")
    p.add_argument("--measure-rho", action="store_true", help="also measure the spectral radius")
    p.add_argument("--perturbation", type=float, default=1.0, metavar="K", help="initial perturbation [K]")
    p.add_argument("--tol", type=float, default=1e-8, help="convergence tolerance [K]")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--trace", metavar="PATH", help="write per-iteration trace CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="parameter sweep to CSV")
    p.add_argument("--sweep", required=True, choices=sorted(SWEEP_VARS))
    p.add_argument("--min", type=float, required=True)
    p.add_argument("--max", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--numerical", action="store_true", help="add the measured spectral radius")
    p.add_argument("--out", metavar="PATH", help="CSV destination (default stdout)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    if not 0 < args.omega <= 1:
        print("picard-nth: error: --omega must lie in (0, 1]", file=sys.stderr)
        return 1
    try:
        return args.func(args, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except PicardError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()

"""Command-line entry point.

Subcommands::

    slowdyn run --config F [--output-dir D] [--seed N]
    slowdyn verify --config F [--output-dir D] [--seed N]
    slowdyn twin --config F --perturb EPS [--output-dir D] [--seed N]
    slowdyn convergence --config F

Exit codes: 0 success, 1 a checked bound failed, 2 configuration or input
error, 3 numerical blowup.
"""

import argparse
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np

from .checkpoint import write_checkpoint
from .config import load_config
from .diagnostics import (RecordSink, check_apriori_bounds, mean_evolution_check,
                          modal_lq_conservation_check, twin_experiment)
from .errors import CheckpointError, ConfigError, InputError, NumericalBlowupError
from .initial import build_initial_state, random_perturbation
from .output import write_diagnostics_csv, write_twin_csv
from .timestepper import integrate, measure_order

__all__ = ["main", "simulate"]

EXIT_OK, EXIT_BOUND, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3


@dataclasses.dataclass
class SimulationResult:
    initial: object
    final: object
    records: list
    report: object


def _with_seed(config, seed):
    if seed is None:
        return config
    return dataclasses.replace(config, ic=dataclasses.replace(config.ic, seed=seed))


def simulate(config, seed=None, snapshot_dir=None):
    """Integrate the configured run and evaluate the bound suite."""
    config = _with_seed(config, seed)
    initial = build_initial_state(config.ic, config.grid)
    on_snapshot = None
    if snapshot_dir is not None:
        def on_snapshot(state, step):
            write_checkpoint(state, Path(snapshot_dir) / f"snapshot_{step:06d}.chk",
                             config.params)
    sink = RecordSink(on_snapshot)
    final = integrate(initial, config.params, config.run, sink)
    report = check_apriori_bounds(sink.records, config.params, config.tolerances)
    return SimulationResult(initial, final, sink.records, report)


def _output_dir(args, config):
    out = Path(args.output_dir or config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output_dir {out} is not writable: {exc.strerror}") from None
    return out


def cmd_run(args, config):
    out = _output_dir(args, config)
    res = simulate(config, args.seed, snapshot_dir=out if config.run.snapshot_every else None)
    write_diagnostics_csv(res.records, res.report, out / "diagnostics.csv")
    write_checkpoint(res.final, out / "final.chk", config.params)
    print(f"run: t = {res.final.t:.6g}, {len(res.records)} records written to {out}")
    return EXIT_OK


def cmd_verify(args, config):
    res = simulate(config, args.seed)
    if args.output_dir:
        out = _output_dir(args, config)
        write_diagnostics_csv(res.records, res.report, out / "diagnostics.csv")
    rep = res.report
    print(f"K0 = {rep.K0:.6g}, K0~ = {rep.K0_tilde:.6g}")
    for name, entry in rep.worst().items():
        status = "ok  " if all(e.satisfied for e in rep.entries if e.name == name) else "FAIL"
        print(f"{status} bound {name:7s} worst margin {entry.margin:+.3e} at t = {entry.t:.4g}")
    mean = mean_evolution_check(res.records, config.params, config.mean_tolerance)
    modal = modal_lq_conservation_check(res.records, tolerance=config.tolerances.lp)
    print(f"info mean evolution max error {mean.max_error:.3e}"
          f" ({'ok' if mean.satisfied else 'exceeds tolerance'})")
    print(f"info modal L^q max drift {modal.max_error:.3e}"
          f" ({'ok' if modal.satisfied else 'exceeds tolerance'})")
    if rep.satisfied:
        print("verify: all bounds satisfied")
        return EXIT_OK
    print(f"verify: {len(rep.failures())} bound evaluations failed")
    return EXIT_BOUND


def cmd_twin(args, config):
    if not (math.isfinite(args.perturb) and args.perturb >= 0):
        raise ConfigError(f"--perturb must be a nonnegative number, got {args.perturb}")
    out = _output_dir(args, config)
    config = _with_seed(config, args.seed)
    initial = build_initial_state(config.ic, config.grid)
    delta = random_perturbation(config.grid, args.perturb, config.ic.seed + 1, config.ic.slope)
    res = twin_experiment(initial, config.params, config.run, delta)
    write_twin_csv(res, out / "twin.csv")
    print(f"twin: D(0) = {res.D0:.6e}, D(end) = {res.D[-1]:.6e}, fitted rate = "
          f"{res.slope:.6g}, max excess over fit = {res.excess:.3e}")
    if res.bounded():
        return EXIT_OK
    print("twin: log D(t) rises more than 0.5 above its least-squares line")
    return EXIT_BOUND


def _oscillator_exact(initial, config, t):
    """Final state of a quiescent run, when the initial data make it exact."""
    if np.any(initial.omega != 0) or np.any(initial.data[1:3, 1:, :] != 0) \
            or np.any(initial.data[1:3, 0, 1:] != 0) or np.any(initial.rho[1:] != 0):
        return None
    Fr = config.params.Fr
    c, s = math.cos(t / Fr), math.sin(t / Fr)
    w0, r0 = initial.w[0, 0], initial.rho[0][0, 0]
    exact = np.zeros_like(initial.data)
    exact[1, 0, 0] = w0 * c - r0 * s
    exact[2, 0, 0] = r0 * c + w0 * s
    return exact


def cmd_convergence(args, config):
    config = _with_seed(config, args.seed)
    initial = build_initial_state(config.ic, config.grid)
    dt0 = config.run.dt_override or config.convergence_dt
    dts = [dt0, dt0 / 2, dt0 / 4]
    exact = _oscillator_exact(initial, config, config.run.t_end)
    res = measure_order(initial, config.params, config.run.t_end, dts, exact=exact)
    basis = "exact solution" if exact is not None else "successive refinements"
    for dt, err in zip(res["dts"], res["errors"]):
        print(f"dt = {dt:.3e}  error = {err:.3e}")
    print(f"measured order = {res['order']:.4f} ({basis})")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="slowdyn", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "integrate and write CSV plus final checkpoint"),
                        ("verify", "integrate and check every a-priori bound"),
                        ("twin", "continuous-dependence twin experiment"),
                        ("convergence", "dt-halving order study")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--seed", type=int, default=None, help="override ic.seed")
        if name != "convergence":
            p.add_argument("--output-dir", default=None, help="override output_dir")
        if name == "twin":
            p.add_argument("--perturb", type=float, required=True,
                           help="perturbation amplitude")
    return parser


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "twin": cmd_twin,
            "convergence": cmd_convergence}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        config = load_config(args.config)
        return COMMANDS[args.command](args, config)
    except (ConfigError, CheckpointError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalBlowupError as exc:
        print(f"blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: parameter parsing, sweeps, and figure-data emission.

Every data-producing subcommand writes CSV files (UTF-8, comma-separated,
header row, LF line endings, 12-significant-digit floats, fixed row order,
so repeated runs with identical flags produce byte-identical files) plus a
JSON metadata sidecar carrying the full parameter echo, grid sizes, package
version, and wall time.

Exit codes: 0 success, 2 invalid parameters (message names the violated
invariant), 3 numerical failure (band-edge singularity, missing bound
state, non-convergence, memory budget).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .errors import (
    BandEdgeSingularity,
    NoBoundState,
    NotEmbedded,
    NumericalFailure,
    ParameterError,
    SizeError,
)
from .model import ModelParams, momentum_grid
from .scattering import SWEEP_COLUMNS, scatter, sweep_scattering
from .boundstates import band_scan, bound_wavefunctions, solve_bound_state
from .dynamics import (
    asymptotic_momenta,
    classify_regime_and_windows,
    evolve_fixed_K,
    evolve_localized,
    fit_exponential_rate,
    markov_rate,
    photon_spectrum_and_directionality,
    position_observables,
    resolve_threads,
    spectrum_peaks,
)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12e}"


def write_csv(path: str, header: list[str], columns: list[np.ndarray]) -> None:
    """Deterministic CSV: header row, LF endings, 12-significant-digit floats."""
    rows = zip(*columns)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return repr(obj)
    return obj


def write_sidecar(path: str, args: argparse.Namespace, params: ModelParams,
                  t_start: float, **extra) -> None:
    meta = {
        "version": __version__,
        "command": args.command,
        "params": {"J": params.J, "Jp": params.Jp, "Delta": params.Delta,
                   "Omega": params.Omega, "L": params.L},
        "threads": resolve_threads(getattr(args, "threads", None)),
        "wall_time_s": time.perf_counter() - t_start,
    }
    meta.update(_jsonable(extra))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _params_from(args: argparse.Namespace) -> ModelParams:
    return ModelParams(J=args.J, Jp=args.Jp, Delta=args.Delta,
                       Omega=args.Omega, L=args.L)


def _add_model_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--J", type=float, default=1.0, help="photon hopping (energy unit)")
    sp.add_argument("--Jp", type=float, default=0.0, help="emitter hopping J'")
    sp.add_argument("--Delta", type=float, default=0.0, help="emitter splitting")
    sp.add_argument("--Omega", type=float, default=1.0, help="emitter-photon coupling")
    sp.add_argument("--L", type=int, default=400, help="lattice sites / momentum modes")
    sp.add_argument("--out", type=str, default=None,
                    help="output prefix (default: the subcommand name)")
    sp.add_argument("--threads", type=int, default=None,
                    help="worker threads for per-K loops (WQED_THREADS caps it)")


def _out(args: argparse.Namespace) -> str:
    return args.out if args.out else args.command


def cmd_scatter(args) -> int:
    params = _params_from(args)
    t0 = time.perf_counter()
    res = scatter(params, args.ki, args.pi)
    payload = {
        "k_i": args.ki, "p_i": args.pi,
        "t": res.t, "r": res.r, "T": abs(res.t) ** 2, "R": abs(res.r) ** 2,
        "p_f2": res.p_f2, "k_f2": res.k_f2,
        "detuning": res.detuning, "gamma": res.gamma,
        "degenerate": res.degenerate,
    }
    write_sidecar(f"{_out(args)}.json", args, params, t0, result=payload)
    print(f"T = {abs(res.t)**2:.6f}  R = {abs(res.r)**2:.6f}  "
          f"p_f2 = {res.p_f2:.6f}  degenerate = {res.degenerate}")
    return 0


def _cmd_map(args) -> int:
    params = _params_from(args)
    t0 = time.perf_counter()
    table = sweep_scattering(params, args.nk, args.np)
    out = _out(args)
    write_csv(f"{out}.csv", list(SWEEP_COLUMNS), [table[c] for c in SWEEP_COLUMNS])
    write_sidecar(f"{out}.json", args, params, t0,
                  grid={"nk": args.nk, "np": args.np},
                  degenerate_points=int(table["degenerate"].sum()))
    return 0


def cmd_bound_energies(args) -> int:
    params = _params_from(args)
    t0 = time.perf_counter()
    scan = band_scan(params, args.nK)
    out = _out(args)
    write_csv(f"{out}.csv", ["K", "E_minus", "E_plus", "band_min", "band_max"],
              [scan.K, scan.e_minus, scan.e_plus, scan.band_min, scan.band_max])
    write_sidecar(f"{out}.json", args, params, t0,
                  grid={"nK": args.nK},
                  flatness={"c2": scan.flatness.c2, "c4": scan.flatness.c4,
                            "half_window": scan.flatness.half_window,
                            "n_points": scan.flatness.n_points})
    return 0


def cmd_bound_wavefunction(args) -> int:
    params = _params_from(args)
    t0 = time.perf_counter()
    branch = +1 if args.branch == "plus" else -1
    bound = solve_bound_state(params, args.K, branch)
    f_p, field, density = bound_wavefunctions(params, bound, args.xmax)
    out = _out(args)
    write_csv(f"{out}.csv", ["x", "f_re", "f_im", "abs_f", "phase"],
              [field.x, field.amp.real, field.amp.imag,
               np.abs(field.amp), np.angle(field.amp)])
    write_sidecar(f"{out}.json", args, params, t0,
                  K=args.K, branch=args.branch, energy=bound.energy,
                  u=bound.u, y_in=bound.y_in, loc_length=bound.loc_length,
                  photon_density=density)
    return 0


def cmd_emit_fixed_k(args) -> int:
    params = _params_from(args)
    t0 = time.perf_counter()
    times = np.linspace(0.0, args.tmax, args.nt)
    traj = evolve_fixed_K(params, args.K, times)
    n_p, direction = photon_spectrum_and_directionality(traj, args.tmax)
    p = momentum_grid(params.L)
    out = _out(args)
    write_csv(f"{out}_pe.csv", ["t", "P_e_total"],
              [times, np.abs(traj.psi_e) ** 2])
    write_csv(f"{out}_np.csv", ["p", "N_p"], [p, n_p])
    try:
        gamma = markov_rate(params, args.K)
    except (NotEmbedded, BandEdgeSingularity):
        gamma = None
    pm = asymptotic_momenta(params, args.K)
    write_sidecar(f"{out}.json", args, params, t0,
                  K=args.K, tmax=args.tmax, nt=args.nt,
                  directionality=direction,
                  directionality_note="normalized by total emitted photon number",
                  measured_peaks=spectrum_peaks(p, n_p),
                  predicted_p_plus=None if pm is None else pm[0],
                  predicted_p_minus=None if pm is None else pm[1],
                  markov_rate=gamma)
    return 0


def cmd_emit_localized(args) -> int:
    params = _params_from(args)
    t0 = time.perf_counter()
    times = np.linspace(0.0, args.tmax, args.nt)
    snapshots = args.snapshot if args.snapshot else [args.tmax]
    for s in snapshots:
        if not np.any(np.abs(times - s) <= 1e-12 * max(1.0, s)):
            times = np.sort(np.append(times, s))
    run = evolve_localized(params, args.x0, times, threads=args.threads)
    out = _out(args)
    write_csv(f"{out}_pe.csv", ["t", "P_e_total"], [run.times, run.pe_total()])
    for s in snapshots:
        obs = position_observables(run, s)
        write_csv(f"{out}_x_t{s:g}.csv", ["x", "N", "P_g", "P_e"],
                  [obs.x, obs.n_photon, obs.p_ground, obs.p_excited])
    write_sidecar(f"{out}.json", args, params, t0,
                  x0=args.x0, tmax=args.tmax, nt=args.nt,
                  snapshots=list(snapshots),
                  final_pe_total=float(run.pe_total()[-1]))
    return 0


def cmd_windows(args) -> int:
    params = _params_from(args)
    t0 = time.perf_counter()
    win = classify_regime_and_windows(params)
    out = _out(args)
    lows = np.array([w[0] for w in win.windows], dtype=float)
    highs = np.array([w[1] for w in win.windows], dtype=float)
    write_csv(f"{out}.csv", ["K_lo", "K_hi"], [lows, highs])
    write_sidecar(f"{out}.json", args, params, t0,
                  regime=win.regime,
                  windows=[list(map(float, w)) for w in win.windows],
                  w_plus=win.w_plus, w_minus=win.w_minus,
                  jc_plus=win.jc_plus, jc_minus=win.jc_minus,
                  jc_plus_approx=win.jc_plus_approx,
                  jc_minus_approx=win.jc_minus_approx,
                  embedded_fraction=win.embedded_fraction)
    return 0


def cmd_selfcheck(args) -> int:
    """Fast internal consistency checks; prints one PASS/FAIL line each."""
    failures = 0

    def report(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}{'  ' + detail if detail else ''}")
        failures += 0 if ok else 1

    params = ModelParams(J=1.0, Jp=0.1, Delta=0.0, Omega=0.5, L=400)
    table = sweep_scattering(params, 51, 51)
    t = table["t_re"] + 1j * table["t_im"]
    r = table["r_re"] + 1j * table["r_im"]
    report("scattering unitarity", float(np.abs(1 - (table["T"] + table["R"])).max()) < 1e-10)
    report("scattering sum rule 1+r=t", float(np.abs(1 + r - t).max()) < 1e-12)

    static = ModelParams(J=1.0, Jp=0.0, Delta=0.0, Omega=1.0, L=400)
    bound = solve_bound_state(static, 0.0, +1)
    report("static bound-state energy",
           abs(bound.energy - math.sqrt(2.0 + math.sqrt(5.0))) < 1e-10,
           f"E+ = {bound.energy:.6f}")

    mobile = ModelParams(J=1.0, Jp=0.5, Delta=0.0, Omega=0.2, L=400)
    times = np.linspace(0.0, 120.0, 121)
    traj = evolve_fixed_K(mobile, 0.0, times)
    report("block norm conservation",
           float(np.abs(traj.norms() - 1.0).max()) < 1e-9)
    rate = fit_exponential_rate(times, np.abs(traj.psi_e) ** 2, 10.0, 120.0)
    gamma = markov_rate(mobile, 0.0)
    report("Markov decay rate", abs(rate - gamma) / gamma < 0.05,
           f"fit {rate:.5f} vs {gamma:.5f}")

    win = classify_regime_and_windows(ModelParams(J=1.0, Jp=0.5, Delta=3.0,
                                                  Omega=0.2, L=400))
    report("emission window width",
           win.w_plus is not None
           and abs(win.w_plus - math.acos(5.0 - math.sqrt(21.0))) < 1e-6)

    print(f"selfcheck: {'all checks passed' if failures == 0 else f'{failures} check(s) failed'}")
    return 0 if failures == 0 else 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="wqed",
        description="Waveguide QED with a quantum-mechanically mobile emitter: "
                    "scattering, bound states, and emission dynamics "
                    "(energies in units of J, momenta in radians).",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("scatter", help="single (k_i, p_i) scattering amplitudes")
    _add_model_flags(sp)
    sp.add_argument("--ki", type=float, required=True, help="initial emitter momentum")
    sp.add_argument("--pi", type=float, required=True, help="initial photon momentum")
    sp.set_defaults(func=cmd_scatter)

    for name, help_ in (("map-transmission", "transmission map over (k_i, p_i)"),
                        ("map-recoil", "emitter recoil-energy map over (k_i, p_i)")):
        sp = sub.add_parser(name, help=help_)
        _add_model_flags(sp)
        sp.add_argument("--nk", type=int, default=101, help="emitter-momentum grid size")
        sp.add_argument("--np", type=int, default=101, help="photon-momentum grid size")
        sp.set_defaults(func=_cmd_map)

    sp = sub.add_parser("bound-energies", help="bound-state bands over K")
    _add_model_flags(sp)
    sp.add_argument("--nK", type=int, default=201, help="K-grid size")
    sp.set_defaults(func=cmd_bound_energies)

    sp = sub.add_parser("bound-wavefunction", help="bound-state wavefunction at one K")
    _add_model_flags(sp)
    sp.add_argument("--K", type=float, required=True, help="total momentum")
    sp.add_argument("--branch", choices=("plus", "minus"), default="plus")
    sp.add_argument("--xmax", type=int, default=50, help="relative-coordinate range")
    sp.set_defaults(func=cmd_bound_wavefunction)

    sp = sub.add_parser("emit-fixed-k", help="spontaneous emission at fixed K")
    _add_model_flags(sp)
    sp.add_argument("--K", type=float, required=True, help="total momentum")
    sp.add_argument("--tmax", type=float, default=200.0)
    sp.add_argument("--nt", type=int, default=201, help="time samples")
    sp.set_defaults(func=cmd_emit_fixed_k)

    sp = sub.add_parser("emit-localized", help="emission of an emitter localized at x0")
    _add_model_flags(sp)
    sp.add_argument("--x0", type=int, default=0, help="initial emitter site")
    sp.add_argument("--tmax", type=float, default=100.0)
    sp.add_argument("--nt", type=int, default=51, help="time samples")
    sp.add_argument("--snapshot", type=float, action="append", default=None,
                    help="time(s) for x-resolved output (repeatable; default tmax)")
    sp.set_defaults(func=cmd_emit_localized)

    sp = sub.add_parser("windows", help="K-selective emission windows")
    _add_model_flags(sp)
    sp.set_defaults(func=cmd_windows)

    sp = sub.add_parser("selfcheck", help="run fast internal consistency checks")
    _add_model_flags(sp)
    sp.set_defaults(func=cmd_selfcheck)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: invalid parameters: {exc}", file=sys.stderr)
        return 2
    except (BandEdgeSingularity, NoBoundState, NotEmbedded,
            NumericalFailure, SizeError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

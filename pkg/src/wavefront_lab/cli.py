"""Command-line front end.

    wavefront-lab speeds|solve|verify|sweep --config run.json --out results/ [--seed N]

Exit codes: 0 success (including a non-existence verdict for a speed below
c*), 1 configuration or model error, 2 numerical failure, 3 the solver did
not converge at a speed where a wave may exist.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import charspec
from .config import RunConfig, model_to_dict
from .errors import ConfigError, ModelError, WavefrontError
from .io import write_json, write_profile, write_rows_csv
from .nonlinear import WaveModel
from .parallel import pmap
from .systems import EpidemicModel, PopulationModel, epidemic_solve, population_solve
from .wavesolve import (
    Collapsed,
    NotConverged,
    Profile,
    SolverConfig,
    align_translate,
    fixed_point_solve,
    select_beta,
    verify_hypotheses,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_NOT_CONVERGED = 0, 1, 2, 3
COMMANDS = ("speeds", "solve", "verify", "sweep")

SWEEP_COLUMNS = ("c", "verdict", "outcome", "iterations", "sup", "residual",
                 "decay_rate", "decay_r2", "lambda1", "exit_code")


def scalar_of(model):
    return model if isinstance(model, WaveModel) else model.scalar_model()


def default_grid(scalar, c):
    """``T = max(60, 20/lambda1)``, ``h = min(0.05, 1/(20 lambda2))`` (lambda1 if lambda2 is missing)."""
    try:
        roots = charspec.find_positive_roots(scalar.chi0_params(), c)
    except WavefrontError:
        roots = None
    if roots is None:
        return 60.0, 0.05
    T = max(60.0, 20.0 / roots.lambda1)
    lam = roots.lambda2 if roots.lambda2 is not None and math.isfinite(roots.lambda2) else roots.lambda1
    return T, min(0.05, 1.0 / (20.0 * lam))


def solver_config(cmd, scalar, c):
    T, h = default_grid(scalar, c)
    return SolverConfig(T=cmd.get("T", T), h=cmd.get("h", h), tol=cmd["tol"], max_iter=cmd["max_iter"],
                        theta=cmd["theta"], left_extension=cmd["left_extension"])


def _bound_M(cmd, scalar, sup=0.0):
    if "M" in cmd:
        return cmd["M"]
    kappa = scalar.equilibrium() or 1.0
    return 1.5 * max(kappa, sup)


def _require_c(cmd):
    if "c" not in cmd:
        raise ConfigError("missing field 'c'", "command.c")
    return cmd["c"]


def outcome_name(out):
    if isinstance(out, Profile):
        return out.status
    if isinstance(out, Collapsed):
        return "Collapsed"
    return f"NotConverged({out.reason})"


def exit_code_for(out, verdict):
    if isinstance(out, Profile) or verdict == charspec.NON_EXISTENT:
        return EXIT_OK
    return EXIT_NOT_CONVERGED


def _lambda1(scalar, c):
    try:
        roots = charspec.find_positive_roots(scalar.chi0_params(), c)
    except WavefrontError:
        return None
    return None if roots is None else roots.lambda1


def solve_one(model, c, cfg, init):
    """Solve at one speed; for the two-component systems also rebuild psi."""
    if isinstance(model, EpidemicModel):
        return epidemic_solve(model, c, cfg, init)
    if isinstance(model, PopulationModel):
        return population_solve(model, c, cfg, init)
    return fixed_point_solve(model, c, init, cfg), None


def summarize(out, c, verdict, lam1):
    row = {"c": c, "verdict": verdict, "outcome": outcome_name(out), "lambda1": lam1,
           "iterations": out.iterations, "exit_code": exit_code_for(out, verdict)}
    prof = out if isinstance(out, Profile) else getattr(out, "profile", None)
    if isinstance(out, Collapsed):
        row["sup"] = out.sup
    elif prof is not None:
        row["sup"] = prof.sup
    if isinstance(out, Profile):
        row["residual"] = out.residual
        if out.decay_fit is not None:
            row["decay_rate"] = out.decay_fit.rate
            row["decay_r2"] = out.decay_fit.r2
    if isinstance(out, NotConverged):
        row["drift_speed"] = out.drift_speed
        row["last_change"] = out.last_change
    return row


def _row_values(row):
    return [row.get(k) for k in SWEEP_COLUMNS]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_speeds(rc, out_dir):
    scalar = scalar_of(rc.model)
    cmd = rc.command
    c_star, c_ss = charspec._speeds(scalar)
    speeds = cmd.get("speeds")
    if speeds is None:
        lo = c_star - 1.0
        speeds = np.linspace(lo, max(c_ss, c_star) + 1.0, 11).tolist()
    beta = select_beta(scalar.f, _bound_M(cmd, scalar))
    report = charspec.char_report(scalar, speeds, beta)
    (out_dir / "report.json").write_text(report.to_json() + "\n")
    (out_dir / "report.csv").write_text(report.to_csv())
    return EXIT_OK


def cmd_solve(rc, out_dir):
    scalar = scalar_of(rc.model)
    cmd = rc.command
    c = _require_c(cmd)
    cfg = solver_config(cmd, scalar, c)
    verdict = charspec.classify_speed(scalar, c)
    out, psi = solve_one(rc.model, c, cfg, cmd["init"])
    row = summarize(out, c, verdict, _lambda1(scalar, c))
    if isinstance(out, Profile):
        write_profile(out_dir, "phi", out, verdict=verdict, lambda1=row["lambda1"])
        if psi is not None:
            write_profile(out_dir, "psi", psi, verdict=verdict)
            row["psi_residual"] = psi.residual
    elif isinstance(out, NotConverged):
        write_profile(out_dir, "phi", out.profile, verdict=verdict, reason=out.reason)
    write_json(out_dir / "report.json", {"command": "solve", "model": model_to_dict(rc.model),
                                         "grid": {"T": cfg.T, "h": cfg.h}, **row})
    write_rows_csv(out_dir / "report.csv", SWEEP_COLUMNS, [_row_values(row)])
    return row["exit_code"]


def cmd_verify(rc, out_dir, seed):
    scalar = scalar_of(rc.model)
    cmd = rc.command
    c = _require_c(cmd)
    cfg = solver_config(cmd, scalar, c)
    verdict = charspec.classify_speed(scalar, c)
    seeds = cmd["seeds"]
    if len(seeds) < 2:
        raise ConfigError("uniqueness needs at least two seeds", "command.seeds")
    outs = pmap(lambda s: fixed_point_solve(scalar, c, s, cfg), seeds)
    report = {"command": "verify", "model": model_to_dict(rc.model), "c": c, "seed": seed,
              "grid": {"T": cfg.T, "h": cfg.h}, "seeds": {}}
    for name, out in zip(seeds, outs):
        report["seeds"][name] = summarize(out, c, verdict, _lambda1(scalar, c))
        if isinstance(out, Profile):
            write_profile(out_dir, f"seed_{name}", out, verdict=verdict)

    profiles = [o for o in outs if isinstance(o, Profile)]
    code = EXIT_OK
    if len(profiles) == len(outs):
        ref = profiles[0]
        pairs = []
        for name, other in zip(seeds[1:], profiles[1:]):
            shift, dist = align_translate(ref, other)
            pairs.append({"seeds": [seeds[0], name], "shift": shift, "distance": dist,
                          "relative": dist / ref.sup})
        report["alignment"] = pairs
        M = _bound_M(cmd, scalar, max(p.sup for p in profiles))
        beta = ref.beta
    else:
        report["alignment"] = None
        M = _bound_M(cmd, scalar)
        beta = None
        code = EXIT_OK if verdict == charspec.NON_EXISTENT else EXIT_NOT_CONVERGED

    hyp = verify_hypotheses(scalar, M, c, beta=beta, seed=seed)
    report["hypotheses"] = hyp.to_dict()
    report["M"] = M
    report["verdict"] = verdict if hyp.all_ok else "Experimental"
    report["verdict_unchecked"] = verdict

    c_star, _ = charspec._speeds(scalar)
    below = cmd.get("below") or [c_star - 1.0, c_star - 0.5]
    below = sorted(below)

    def run_below(cb):
        bcfg = solver_config(cmd, scalar, cb)
        return fixed_point_solve(scalar, cb, "small", bcfg)

    sweep = []
    for cb, out in zip(below, pmap(run_below, below)):
        sweep.append(summarize(out, cb, charspec.classify_speed(scalar, cb), _lambda1(scalar, cb)))
    report["below_sweep"] = sweep

    write_json(out_dir / "report.json", report)
    rows = [_row_values(report["seeds"][s]) for s in seeds] + [_row_values(r) for r in sweep]
    write_rows_csv(out_dir / "report.csv", SWEEP_COLUMNS, rows)
    return code


def cmd_sweep(rc, out_dir):
    scalar = scalar_of(rc.model)
    cmd = rc.command
    speeds = cmd.get("speeds")
    if speeds is None:
        raise ConfigError("missing field 'speeds'", "command.speeds")

    def run(c):
        verdict = charspec.classify_speed(scalar, c)
        try:
            out, psi = solve_one(rc.model, c, solver_config(cmd, scalar, c), cmd["init"])
        except (ModelError, ConfigError):
            raise
        except (WavefrontError, ValueError) as exc:
            return None, None, {"c": c, "verdict": verdict, "outcome": f"Error({type(exc).__name__})",
                          "error": str(exc), "exit_code": EXIT_NUMERIC}
        row = summarize(out, c, verdict, _lambda1(scalar, c))
        if psi is not None:
            row["psi_residual"] = psi.residual
        return out, psi, row

    results = pmap(run, speeds)
    rows = []
    for i, (out, psi, row) in enumerate(results):
        if isinstance(out, Profile):
            write_profile(out_dir, f"c{i:03d}", out, verdict=row["verdict"])
        if psi is not None:
            write_profile(out_dir, f"c{i:03d}_psi", psi, verdict=row["verdict"])
        rows.append(row)
    write_json(out_dir / "report.json", {"command": "sweep", "model": model_to_dict(rc.model), "rows": rows})
    write_rows_csv(out_dir / "report.csv", SWEEP_COLUMNS, [_row_values(r) for r in rows])
    return max((r["exit_code"] for r in rows), default=EXIT_OK)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="wavefront-lab",
                                 description="Wave speeds and profiles for nonlocal delayed reaction-diffusion models.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    ap.add_argument("--out", required=True, type=Path, help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="seed for randomized checks (overrides the config)")
    return ap


def run(argv=None):
    args = build_parser().parse_args(argv)
    rc = RunConfig.load(args.config)
    seed = rc.seed if args.seed is None else args.seed
    try:
        args.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory: {exc.strerror}", str(args.out)) from exc
    if args.command == "speeds":
        return cmd_speeds(rc, args.out)
    if args.command == "solve":
        return cmd_solve(rc, args.out)
    if args.command == "verify":
        return cmd_verify(rc, args.out, seed)
    return cmd_sweep(rc, args.out)


def main(argv=None):
    try:
        return run(argv)
    except (ConfigError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (WavefrontError, ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: ``envprobe <command> [flags]``.

Commands
--------
gen-su             write SU(N) generators and structure constants as JSON
simulate           simulate the nine Bloch functions and write a CSV
reconstruct        estimate derivatives from a CSV and write a report
verify             simulate, reconstruct, re-simulate and write residual curves
verify-identities  check the commutator identities on random draws
report             print a saved reconstruction report

Run settings come from built-in defaults, then an optional ``--config``
JSON file, then flags, later sources winning.  Exit codes: 0 success,
2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .commutators import (verify_double_commutator, verify_replacement_rules,
                          verify_triple_commutator)
from .dynamics import Trajectory, simulate_trajectory
from .errors import (EnvProbeError, InsufficientSamplesError, NonPhysicalDerivativesError,
                     SymmetryError)
from .model import HamiltonianParams, load_params, save_params
from .reconstruction import ReconstructionReport, reconstruct_trajectory
from .sun_algebra import algebra_to_dict, closure_residual, su_algebra

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

IDENTITY_TOL = 1e-8


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


class NumericalFailure(Exception):
    pass


@dataclass
class RunConfig:
    params_path: str | None = None
    dt: float = 1e-3
    steps_forward: int = 500
    steps_backward: int = 100
    stencil_halfwidth: int | None = 5
    stride: int = 20
    max_order: int = 5
    noise_sigma: float = 0.0
    seed: int = 0
    output_dir: str = "."
    n: int | None = None

    def validate(self) -> None:
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.steps_forward < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps_forward}")
        if self.steps_backward < 0:
            raise ConfigError(f"back-steps must be >= 0, got {self.steps_backward}")
        if self.stencil_halfwidth is not None and self.stencil_halfwidth < 1:
            raise ConfigError(f"halfwidth must be >= 1, got {self.stencil_halfwidth}")
        if self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride}")
        if self.max_order < 3:
            raise ConfigError(f"max-order must be >= 3, got {self.max_order}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise-sigma must be >= 0, got {self.noise_sigma}")
        if self.params_path is not None and not Path(self.params_path).is_file():
            raise ConfigError(f"parameter file not found: {self.params_path}")


# flag dest -> RunConfig field
_FLAG_FIELDS = {
    "params": "params_path",
    "dt": "dt",
    "steps": "steps_forward",
    "back_steps": "steps_backward",
    "halfwidth": "stencil_halfwidth",
    "stride": "stride",
    "max_order": "max_order",
    "noise_sigma": "noise_sigma",
    "seed": "seed",
    "out": "output_dir",
    "n": "n",
}


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the ``--config`` file, then explicit flags."""
    values = asdict(RunConfig())
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {args.config} must hold a JSON object")
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        values.update(data)
    for flag, name in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[name] = value
    if values["stencil_halfwidth"] == 0:
        values["stencil_halfwidth"] = None
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _load_params(cfg: RunConfig) -> HamiltonianParams:
    if cfg.params_path is None:
        raise ConfigError("--params is required for this command")
    try:
        return load_params(cfg.params_path)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise ConfigError(f"bad parameter file {cfg.params_path}: {exc}") from None


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2) + "\n")


def _simulate(cfg: RunConfig, params: HamiltonianParams) -> Trajectory:
    basis = su_algebra(params.n)[0]
    return simulate_trajectory(params, basis, cfg.dt, cfg.steps_forward, cfg.steps_backward,
                               cfg.noise_sigma, cfg.seed)


def _pipeline(cfg: RunConfig, traj: Trajectory):
    try:
        return reconstruct_trajectory(traj, cfg.max_order, cfg.stencil_halfwidth,
                                      cfg.stride, cfg.seed)
    except (InsufficientSamplesError, SymmetryError, NonPhysicalDerivativesError) as exc:
        raise DataError(str(exc)) from None


# -- commands ------------------------------------------------------------------

def cmd_gen_su(args) -> int:
    cfg = build_config(args)
    n = cfg.n if cfg.n is not None else 3
    if n < 2:
        raise ConfigError(f"N must be >= 2, got {n}")
    basis, f, d = su_algebra(n)
    path = _out_dir(cfg) / f"su{n}.json"
    _write_json(path, algebra_to_dict(basis, f, d))
    print(f"wrote {path} ({basis.size} generators, {len(f.entries)} nonzero f, "
          f"closure residual {closure_residual(basis, f):.2e})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    params = _load_params(cfg)
    traj = _simulate(cfg, params)
    path = _out_dir(cfg) / "trajectory.csv"
    traj.to_csv(path)
    print(f"wrote {path} ({len(traj)} rows)")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    cfg = build_config(args)
    n = cfg.n
    if n is None and cfg.params_path is not None:
        n = _load_params(cfg).n
    if n is None:
        raise ConfigError("reconstruct needs --n or --params to fix the environment dimension")
    if not args.trajectory:
        raise ConfigError("reconstruct needs --trajectory")
    try:
        # the step comes from the file unless given explicitly
        traj = Trajectory.from_csv(args.trajectory, n, args.dt)
    except OSError as exc:
        raise ConfigError(f"cannot read trajectory: {exc}") from None
    except ValueError as exc:
        raise DataError(str(exc)) from None
    result = _pipeline(cfg, traj)
    out = _out_dir(cfg)
    result.stack.save(out / "derivatives.json")
    result.report.save(out / "report.json")
    save_params(result.params, out / "estimated_params.json")
    print(result.report.summary())
    if result.fit is not None:
        print(f"fit: {result.fit.message} after {result.fit.iterations} iterations, "
              f"objective {result.fit.objective:.3e}")
    print(f"wrote {out / 'report.json'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = build_config(args)
    params = _load_params(cfg)
    basis = su_algebra(params.n)[0]
    measured = _simulate(cfg, params)
    result = _pipeline(cfg, measured)
    # residual curves compare noiseless forward evolutions
    truth = simulate_trajectory(params, basis, cfg.dt, cfg.steps_forward)
    est = simulate_trajectory(result.params, basis, cfg.dt, cfg.steps_forward)
    resid = np.abs(truth.values - est.values)
    out = _out_dir(cfg)
    Trajectory(truth.times, resid, cfg.dt, params.n).to_csv(out / "residuals.csv")
    result.report.save(out / "report.json")
    save_params(result.params, out / "estimated_params.json")
    summary = {
        "max_residual": float(resid.max()),
        "steps": cfg.steps_forward,
        "dt": cfg.dt,
        "fit_objective": None if result.fit is None else result.fit.objective,
        "fit_message": None if result.fit is None else result.fit.message,
        "beta_identifiable_rank": result.report.beta_identifiable_rank,
    }
    _write_json(out / "summary.json", summary)
    print(f"max residual over {cfg.steps_forward} steps: {resid.max():.3e}")
    print(f"wrote {out / 'residuals.csv'}")
    return EXIT_OK


def cmd_verify_identities(args) -> int:
    n = args.n if args.n is not None else 3
    if n < 2:
        raise ConfigError(f"N must be >= 2, got {n}")
    if args.trials < 1:
        raise ConfigError(f"trials must be >= 1, got {args.trials}")
    basis, f, _ = su_algebra(n)
    rng = np.random.default_rng(args.seed)
    worst_double = worst_triple = 0.0
    for _ in range(args.trials):
        params = HamiltonianParams.random(n, rng)
        worst_double = max(worst_double, verify_double_commutator(params, basis, f))
        worst_triple = max(worst_triple, verify_triple_commutator(params, basis, f))
    worst_rules = verify_replacement_rules(basis, args.trials, args.seed, f)
    rows = [("replacement rules", worst_rules), ("double commutator", worst_double),
            ("triple commutator", worst_triple)]
    ok = True
    for name, value in rows:
        status = "ok" if value <= IDENTITY_TOL else "FAIL"
        ok &= value <= IDENTITY_TOL
        print(f"{name:<18} max residual {value:.3e}  {status}")
    if not ok:
        raise NumericalFailure(f"identity residual above {IDENTITY_TOL}")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        report = ReconstructionReport.load(args.report)
    except OSError as exc:
        raise ConfigError(f"cannot read report: {exc}") from None
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"malformed report {args.report}: {exc}") from None
    print(report.summary())
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _run_flags(p: argparse.ArgumentParser, *, params: bool = True, sim: bool = True,
               recon: bool = True) -> None:
    p.add_argument("--config", help="JSON file with run settings")
    p.add_argument("--out", help="output directory (default: current directory)")
    p.add_argument("--n", type=int, help="environment dimension N")
    if params:
        p.add_argument("--params", help="JSON parameter file (n, alpha, beta, gamma)")
    p.add_argument("--dt", type=float, help="sampling step (default 1e-3)")
    p.add_argument("--seed", type=int, help="seed for noise and fit start (default 0)")
    if sim:
        p.add_argument("--steps", type=int, help="forward steps (default 500)")
        p.add_argument("--back-steps", type=int, help="backward steps (default 100)")
        p.add_argument("--noise-sigma", type=float, help="Gaussian noise per sample (default 0)")
    if recon:
        p.add_argument("--halfwidth", type=int,
                       help="stencil halfwidth, 0 for minimal stencils (default 5)")
        p.add_argument("--stride", type=int, help="samples between stencil points (default 20)")
        p.add_argument("--max-order", type=int,
                       help="highest derivative order; above 3 runs the fit (default 5)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="envprobe",
        description="Reconstruct a qubit-environment Hamiltonian from qubit-only dynamics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-su", help="write SU(N) generators and structure constants")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--n", type=int, help="N (default 3)")
    p.set_defaults(func=cmd_gen_su)

    p = sub.add_parser("simulate", help="simulate the nine Bloch functions")
    _run_flags(p, recon=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="reconstruct parameters from a trajectory CSV")
    _run_flags(p, sim=False)
    p.add_argument("--trajectory", required=True, help="trajectory CSV")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("verify", help="end-to-end residual check against the true parameters")
    _run_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("verify-identities", help="check the commutator identities")
    p.add_argument("--n", type=int, help="N (default 3)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_identities)

    p = sub.add_parser("report", help="print a saved reconstruction report")
    p.add_argument("report", help="report JSON written by reconstruct or verify")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalFailure, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except EnvProbeError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

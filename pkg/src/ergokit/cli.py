"""Command-line entry point: ``ergokit {analyze,sweep,simulate,verify,power}``.

Exit codes: 0 ok, 1 property failure, 2 invalid input, 3 not-applicable input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable

import numpy as np

from ergokit import correlations as corr
from ergokit import dissipation as diss
from ergokit import extraction as ext
from ergokit import qmath
from ergokit.ergotropy import ergotropy_report, passive_state
from ergokit.errors import ErgokitError, NotApplicable, StepTooLarge, ValidationError
from ergokit.states import (
    DensityMatrix,
    Hamiltonian,
    load_state,
    locally_thermal_xstate_sampler,
    random_density_matrix,
    two_qubit_hamiltonian,
)

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_NA = 0, 1, 2, 3


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, out: str | None) -> None:
    _emit(json.dumps(_jsonable(obj), indent=2) + "\n", out)


def _emit_rows(rows: list[dict], columns, fmt: str, out: str | None) -> None:
    if fmt == "json":
        _emit_json(rows, out)
        return
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt_num(row[k]) for k in columns})
    _emit(buf.getvalue(), out)


def _fmt_num(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _threads() -> int:
    env = os.environ.get("ERGOKIT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def parse_grid(spec: str) -> list[float]:
    """Parse ``start:stop:step`` (inclusive stop) or a comma-separated list."""
    if ":" in spec:
        start, stop, step = (float(x) for x in spec.split(":"))
        n = int(round((stop - start) / step))
        return [round(start + k * step, 12) for k in range(n + 1)]
    return [float(x) for x in spec.split(",") if x.strip()]


def load_hamiltonian(path: str | None, omega: float) -> Hamiltonian:
    """Built-in ``omega (n1 + n2)`` or a JSON file.

    The file holds either ``{"local_parts": [{"re": [...], "im": [...]}, ...]}``
    or a single ``{"re": [...], "im": [...]}`` matrix.
    """
    if path is None:
        return two_qubit_hamiltonian(omega)
    data = json.loads(Path(path).read_text())

    def mat(d):
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d.get("im", np.zeros_like(re)), dtype=float)
        n = int(round(math.sqrt(re.size)))
        if n * n != re.size or im.size != re.size:
            raise ValidationError("Hamiltonian entries do not form a square matrix")
        return (re + 1j * im).reshape(n, n)

    try:
        if "local_parts" in data:
            return Hamiltonian.from_local(*(mat(p) for p in data["local_parts"]))
        return Hamiltonian(mat(data))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed Hamiltonian JSON: {exc}") from exc


# -- analyze ----------------------------------------------------------------


def cmd_analyze(args) -> int:
    rho = load_state(args.state)
    h = load_hamiltonian(args.hamiltonian, args.omega)
    if rho.dim != h.matrix.shape[0]:
        raise ValidationError(f"state dimension {rho.dim} does not match Hamiltonian {h.matrix.shape[0]}")
    report = {"ergotropy": ergotropy_report(rho, h.matrix).to_json(), "warnings": []}
    if len(h.local_parts) == 2:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                cr = corr.main_identity(rho, h, with_discord=args.discord and list(h.dims) == [2, 2])
                report["correlations"] = cr.to_json()
                if cr.beta < 0:
                    report["warnings"].append("negative local temperature")
            except ErgokitError as exc:
                report["warnings"].append(f"correlation identity not evaluated: {exc}")
        report["warnings"] += [str(w.message) for w in caught]
        if args.beta is not None:
            terms = corr.general_state_identity(rho, h.matrix, args.beta, h.dims)
            report["general_identity"] = terms.__dict__
    _emit_json(report, args.out)
    return EXIT_OK


# -- sweep ------------------------------------------------------------------


def sweep(beta_es, c_grid, omega: float = 1.0, threads: int | None = None) -> list[dict]:
    """Rows ordered by ``(beta_e, c)`` regardless of worker completion order."""
    if not beta_es or not c_grid:
        raise ValidationError("sweep grids must be non-empty")
    if any(not 0.0 <= c <= 1.0 for c in c_grid):
        raise ValidationError("c grid must lie in [0, 1]")
    points = [(c, be) for be in beta_es for c in sorted(c_grid)]
    with ThreadPoolExecutor(max_workers=threads or _threads()) as pool:
        return list(pool.map(lambda p: diss.sweep_row(p[0], p[1], omega), points))


def cmd_sweep(args) -> int:
    rows = sweep(args.beta_e, parse_grid(args.c_grid), args.omega)
    _emit_rows(rows, diss.SWEEP_COLUMNS, args.format, args.out)
    return EXIT_OK


# -- simulate ---------------------------------------------------------------

NAMED_STATES = {
    "gg": diss.PSI_GG,
    "ee": diss.PSI_EE,
    "psi+": diss.PSI_PLUS,
    "psi-": diss.PSI_MINUS,
}
SIM_COLUMNS = ("t", "trace_distance_to_ss", "c", "purity")


def initial_state(name: str, beta_e: float, omega: float) -> np.ndarray:
    if name in NAMED_STATES:
        v = NAMED_STATES[name]
        return np.outer(v, v.conj())
    if name == "gibbs":
        return diss.gibbs_state(beta_e, omega)
    return load_state(name).matrix


def simulate(rho0, params: diss.DissipationParams, t_final: float, dt=None, sample_dt: float = 1.0) -> list[dict]:
    collective = params.gamma[0, 1] != 0
    c0 = diss.c_parameter(rho0)
    target = diss.steady_state(c0, params.beta_e, params.omega).matrix if collective \
        else diss.gibbs_state(params.beta_e, params.omega)
    traj = diss.evolve(rho0, params, t_final, dt=dt, sample_dt=sample_dt)
    return [
        {
            "t": t,
            "trace_distance_to_ss": qmath.trace_distance(s, target),
            "c": diss.c_parameter(s),
            "purity": float(np.trace(s @ s).real),
        }
        for t, s in zip(traj.times, traj.states)
    ]


def cmd_simulate(args) -> int:
    if args.coupling == "collective":
        params = diss.DissipationParams.collective(args.beta_e, args.omega, args.gamma, args.f)
    else:
        params = diss.DissipationParams.independent(args.beta_e, args.omega, args.gamma, args.f or 0.0)
    rho0 = initial_state(args.initial, args.beta_e, args.omega)
    rows = simulate(rho0, params, args.t_final, args.dt, args.sample_dt)
    _emit_rows(rows, SIM_COLUMNS, args.format, args.out)
    return EXIT_OK


# -- verify -----------------------------------------------------------------

H2 = two_qubit_hamiltonian()


def _check_main(seed):
    return corr.main_identity(locally_thermal_xstate_sampler(seed), H2).residual


def _check_bound(seed):
    return corr.bound_identity(locally_thermal_xstate_sampler(seed), H2)


def _check_landauer(seed):
    basic, tight = corr.inverse_landauer_check(locally_thermal_xstate_sampler(seed), H2)
    # Zero when both slacks are non-negative and correctly ordered.
    return max(0.0, -basic, -tight, tight - basic)


def _check_equal_entropy(seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(4, seed=seed)
    p, _ = passive_state(rho, H2.matrix)
    return corr.equal_entropy_identity(rho.matrix, p, H2.matrix, rng.uniform(-3, 3))


def _check_general(seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(4, seed=seed)
    beta = rng.uniform(0.1, 3) * rng.choice([-1, 1])
    return corr.general_state_identity(rho, H2.matrix, beta).residual


def _chain(seed):
    rho = locally_thermal_xstate_sampler(seed)
    proto = ext.build_protocol(rho, H2.matrix, 1.0)
    return ext.energy_spread_chain(rho, proto, quadrature_points=201)


def _check_chain_links(seed):
    return max(0.0, *(-v for v in _chain(seed).links.values()))


def _check_chain_identity(seed):
    return _chain(seed).identity_residual


VERIFY_CHECKS: dict[str, tuple[Callable[[int], float], float]] = {
    "main_identity": (_check_main, 1e-8),
    "bound_identity": (_check_bound, 1e-8),
    "inverse_landauer": (_check_landauer, 1e-9),
    "equal_entropy_identity": (_check_equal_entropy, 1e-8),
    "general_state_identity": (_check_general, 1e-8),
    "energy_spread_chain_links": (_check_chain_links, 1e-8),
    "energy_spread_chain_identity": (_check_chain_identity, 1e-7),
}


def verify(seed_count: int, seed0: int = 0, checks=None) -> dict:
    """Run each identity check on ``seed_count`` seeds and summarise.

    ``checks`` maps a name to ``(fn(seed) -> residual, tolerance)``.
    """
    if seed_count < 1:
        raise ValidationError("seed_count must be >= 1")
    checks = VERIFY_CHECKS if checks is None else checks
    summary = {"seed_count": seed_count, "checks": {}, "passed": True, "first_failure": None}
    for name, (fn, tol) in checks.items():
        worst = 0.0
        for seed in range(seed0, seed0 + seed_count):
            try:
                r = float(fn(seed))
            except NotApplicable:
                continue
            if not r <= tol:
                summary["passed"] = False
                if summary["first_failure"] is None:
                    summary["first_failure"] = {"check": name, "seed": seed, "residual": r, "tolerance": tol}
            worst = max(worst, r) if math.isfinite(r) else math.inf
        summary["checks"][name] = {"max_residual": worst, "tolerance": tol, "passed": worst <= tol}
    return summary


def cmd_verify(args) -> int:
    start = time.perf_counter()
    summary = verify(args.seed_count, args.seed)
    summary["elapsed_s"] = time.perf_counter() - start
    _emit_json(summary, args.out)
    return EXIT_OK if summary["passed"] else EXIT_FAIL


# -- power ------------------------------------------------------------------


def cmd_power(args) -> int:
    h = load_hamiltonian(args.hamiltonian, args.omega)
    if args.state:
        rho = load_state(args.state)
    else:
        rho = diss.steady_state(args.c, args.beta_e, args.omega)
    reports = []
    for tau in args.tau:
        proto = ext.build_protocol(rho, h.matrix, tau, args.schedule)
        rep = ext.power_bound(rho, proto, h, omega_cap=args.omega_cap)
        reports.append(rep.to_json())
    _emit_json(reports[0] if len(reports) == 1 else reports, args.out)
    return EXIT_OK if all(r["holds"] for r in reports) else EXIT_FAIL


# -- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ergokit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=False):
        p.add_argument("--omega", type=float, default=1.0)
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("analyze", help="ergotropy and correlation report for a state file")
    p.add_argument("state")
    p.add_argument("--hamiltonian", default=None, help="Hamiltonian JSON (default: omega (n1 + n2))")
    p.add_argument("--beta", type=float, default=None, help="reference beta for the arbitrary-state identity")
    p.add_argument("--no-discord", dest="discord", action="store_false")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="steady-state figures of merit over (beta_e, c)")
    p.add_argument("--beta-e", type=float, nargs="+", default=[0.01, 1.0, 10.0])
    p.add_argument("--c-grid", default="0:1:0.005", help="start:stop:step or comma list")
    common(p, fmt=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="master-equation trajectory")
    p.add_argument("--initial", default="gg", help="gg, ee, psi+, psi-, gibbs, or a state JSON path")
    p.add_argument("--beta-e", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--f", type=float, default=None)
    p.add_argument("--coupling", choices=("collective", "independent"), default="collective")
    p.add_argument("--t-final", type=float, default=50.0)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--sample-dt", type=float, default=1.0)
    common(p, fmt=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="identity and inequality suite over sampled states")
    p.add_argument("--seed-count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("power", help="average-power bound report")
    p.add_argument("--state", default=None, help="state JSON (default: collective steady state)")
    p.add_argument("--c", type=float, default=0.2)
    p.add_argument("--beta-e", type=float, default=1.0)
    p.add_argument("--tau", type=float, nargs="+", default=[1.0])
    p.add_argument("--schedule", choices=ext.SCHEDULES, default="smoothstep")
    p.add_argument("--omega-cap", type=float, default=None)
    p.add_argument("--hamiltonian", default=None)
    common(p)
    p.set_defaults(func=cmd_power)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NotApplicable as exc:
        print(f"not applicable: {exc}", file=sys.stderr)
        return EXIT_NA
    except (ValidationError, StepTooLarge, json.JSONDecodeError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

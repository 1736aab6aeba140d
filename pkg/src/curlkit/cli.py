"""Command line driver: mode matrices, CFL tables, dispersion data, runs.

Six subcommands map onto the library layers:

    matrix         assemble one Fourier-mode matrix (and optionally its
                   amplification matrix); `--oracle` cross-checks the
                   second-order member against the closed-form matrix
    cfl            measured maximal CFL number of a scheme/integrator pair
    stability-map  spectral-radius grid over the (Cx, Cy) quadrant -> CSV
    dispersion     dissipation/phase-defect sweep at fixed wavelengths -> CSV
    run            advance one problem, print the report, optionally write
                   the curl-monitor CSV
    convergence    resolution ladder with observed orders -> CSV

Exit codes: 0 success, 1 bad input (including unknown flags and config
errors), 2 numerical failure (blow-up, lost invariance, oracle mismatch).

Every subcommand accepts `--config FILE` holding `key=value` lines whose
keys mirror the long flag names; explicit flags win over file values.
CSV output is deterministic: rerunning an invocation reproduces the file
byte for byte.
"""

import argparse
import sys

import numpy as np

from .errors import (
    Blowup,
    ConstraintViolation,
    DegenerateMode,
    EigenNoConvergence,
    SubspaceNotInvariant,
)
from .experiments import (
    CONVERGENCE_HEADER,
    CURL_HEADER,
    DISPERSION_HEADER,
    STABILITY_HEADER,
    ProblemSpec,
    convergence_rows,
    convergence_suite,
    curl_rows,
    dispersion_row_tuples,
    run_problem,
    stability_rows,
    write_csv,
)
from .semidiscrete import SchemeSpec
from .timeint import TABLEAUS
from .vonneumann import (
    amplification,
    assemble_A,
    certified_cfl,
    dispersion_sweep,
    max_cfl,
    second_order_reference_matrix,
    stability_map,
)

_NUMERICAL = (
    Blowup,
    ConstraintViolation,
    DegenerateMode,
    EigenNoConvergence,
    SubspaceNotInvariant,
)

ORACLE_TOL = 1e-10

# Matched-order integrator for each reconstruction degree M (temporal order
# M+1, capped at the five-stage fourth-order method).
RK_FOR_TARGET = ("rk1", "ssprk2", "ssprk3", "ssprk54")

# Operating CFL limits measured with max_cfl at the defaults used by the
# `cfl` subcommand (65x65 angle/k grids, full Nyquist square). `run` and
# `convergence` fall back to these so routine invocations skip the sweep;
# pass --nu (or delete an entry) to force a fresh measurement.
KNOWN_CFL = {
    ("dg", 0, 0, "rk1"): 0.707092,
    ("dg", 0, 0, "ssprk3"): 0.888380,
    ("dg", 0, 0, "ssprk54"): 1.549689,
    ("dg", 1, 1, "ssprk2"): 0.316229,
    ("dg", 2, 2, "ssprk3"): 0.206916,
    ("dg", 3, 3, "ssprk54"): 0.214357,
    ("pnpm", 0, 1, "ssprk2"): 0.707092,
    ("pnpm", 0, 1, "ssprk3"): 0.831417,
    ("pnpm", 0, 2, "ssprk3"): 1.149869,
    ("pnpm", 0, 2, "ssprk54"): 1.487683,
    ("pnpm", 0, 3, "ssprk54"): 1.302480,
    ("pnpm", 1, 2, "ssprk3"): 0.390317,
    ("pnpm", 1, 2, "ssprk54"): 0.625962,
    ("pnpm", 1, 3, "ssprk54"): 0.677328,
}


class _UsageError(Exception):
    def __init__(self, parser, message):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of exiting itself."""

    def error(self, message):
        raise _UsageError(self, message)


def _bool(text):
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _float_list(text):
    vals = [float(tok) for tok in str(text).split(",") if tok.strip()]
    if not vals:
        raise ValueError("expected a comma-separated list of numbers")
    return vals


def _int_list(text):
    vals = [int(tok) for tok in str(text).split(",") if tok.strip()]
    if not vals:
        raise ValueError("expected a comma-separated list of integers")
    return vals


# One row per option: (flag, dest, type, default, help). Required options
# use the _REQUIRED default marker; types also coerce config-file strings.
_REQUIRED = object()

_SCHEME_OPTS = [
    ("--scheme", "scheme", str, "dg", "scheme family: dg, p0pm or p1pm"),
    ("--n", "n", int, None, "evolved degree N (dg: the only degree)"),
    ("--m", "m", int, None, "reconstruction target degree M (pnpm families)"),
    ("--rk", "rk", str, None,
     f"time integrator, one of {sorted(TABLEAUS)}; default matches M"),
]

_SWEEP_OPTS = [
    ("--n-angles", "n_angles", int, 65, "velocity angles in [0, 45 deg]"),
    ("--n-k", "n_k", int, 65, "k-grid points per axis"),
    ("--quadrant-only", "quadrant_only", _bool, False,
     "restrict modes to |theta| <= pi/2 instead of the full Nyquist square"),
]

_COMMANDS = {
    "matrix": [
        ("--p", "p", int, _REQUIRED, "polynomial degree of the scheme"),
        ("--kx", "kx", float, _REQUIRED, "kx*dx in radians, in [-pi, pi]"),
        ("--ky", "ky", float, _REQUIRED, "ky*dy in radians, in [-pi, pi]"),
        ("--vx", "vx", float, 1.0, "advection velocity x component"),
        ("--vy", "vy", float, 1.0, "advection velocity y component"),
        ("--dx", "dx", float, 1.0, "zone width"),
        ("--dy", "dy", float, 1.0, "zone height"),
        ("--dt", "dt", float, None, "time step; enables the amplification matrix"),
        ("--rk", "rk", str, None, "integrator for the amplification matrix"),
        ("--oracle", "oracle", _bool, False,
         "compare eigenvalues against the closed-form second-order matrix"),
    ],
    "cfl": _SCHEME_OPTS + _SWEEP_OPTS + [
        ("--c-cap", "c_cap", float, 4.0, "upper end of the CFL bisection"),
    ],
    "stability-map": _SCHEME_OPTS + [
        ("--c-max", "c_max", float, 1.0, "largest Cx = Cy corner of the grid"),
        ("--n-c", "n_c", int, 33, "grid points per CFL axis"),
        ("--n-k", "n_k", int, 33, "k-grid points per axis"),
        ("--quadrant-only", "quadrant_only", _bool, False,
         "restrict modes to |theta| <= pi/2"),
        ("--out", "out", str, _REQUIRED, "output CSV path"),
    ],
    "dispersion": _SCHEME_OPTS + [
        ("--angle", "angle", float, _REQUIRED, "velocity angle in degrees"),
        ("--wavelength", "wavelength", _float_list, _REQUIRED,
         "wavelengths in zone widths, comma separated (e.g. 5,10,15)"),
        ("--nu", "nu", float, None, "CFL limit; default: table or measured"),
        ("--cfl-factor", "cfl_factor", float, 0.95, "fraction of nu for dt"),
        ("--step-deg", "step_deg", float, 1.0, "wave-angle sweep step"),
        ("--out", "out", str, _REQUIRED, "output CSV path"),
    ],
    "run": _SCHEME_OPTS + [
        ("--problem", "problem", str, _REQUIRED, "planewave or vortex"),
        ("--res", "res", int, _REQUIRED, "zones per axis"),
        ("--tf", "tf", float, None, "final time; default: the problem's"),
        ("--vx", "vx", float, 1.0, "advection velocity x component"),
        ("--vy", "vy", float, 1.0, "advection velocity y component"),
        ("--nu", "nu", float, None, "CFL limit; default: table or measured"),
        ("--cfl-factor", "cfl_factor", float, 0.95, "fraction of nu for dt"),
        ("--snapshots", "snapshots", int, 100, "output intervals for monitors"),
        ("--curl-out", "curl_out", str, None, "write the curl monitor CSV here"),
    ],
    "convergence": _SCHEME_OPTS + [
        ("--problem", "problem", str, _REQUIRED, "planewave or vortex"),
        ("--res", "res", _int_list, _REQUIRED,
         "resolution ladder, comma separated (e.g. 16,32,64)"),
        ("--tf", "tf", float, None, "final time; default: the problem's"),
        ("--vx", "vx", float, 1.0, "advection velocity x component"),
        ("--vy", "vy", float, 1.0, "advection velocity y component"),
        ("--nu", "nu", float, None, "CFL limit; default: table or measured"),
        ("--cfl-factor", "cfl_factor", float, 0.95, "fraction of nu for dt"),
        ("--out", "out", str, None, "output CSV path"),
    ],
}


def _build_parser():
    top = _Parser(prog="curlkit", description=__doc__.splitlines()[0])
    subs = top.add_subparsers(dest="command", metavar="command")
    for name, opts in _COMMANDS.items():
        sp = subs.add_parser(name, prog=f"curlkit {name}")
        sp.add_argument("--config", default=argparse.SUPPRESS,
                        help="key=value file supplying defaults for the flags")
        for flag, dest, typ, _default, help_text in opts:
            if typ is _bool:
                # bare flag means true; an explicit value is still accepted
                sp.add_argument(flag, dest=dest, type=typ, nargs="?",
                                const=True, default=argparse.SUPPRESS,
                                help=help_text)
            else:
                sp.add_argument(flag, dest=dest, type=typ,
                                default=argparse.SUPPRESS, help=help_text)
    return top


def _read_config(path):
    mapping = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = text.split("=", 1)
            mapping[key.strip().replace("-", "_")] = value.strip()
    return mapping


def _merge_options(command, cli_vars):
    """defaults < config file < explicit flags, with type coercion."""
    opts = _COMMANDS[command]
    merged = {dest: default for _f, dest, _t, default, _h in opts}
    config_path = cli_vars.pop("config", None)
    if config_path is not None:
        raw = _read_config(config_path)
        known = {dest: typ for _f, dest, typ, _d, _h in opts}
        for key, value in raw.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r} for {command!r}")
            try:
                merged[key] = known[key](value)
            except ValueError as exc:
                raise ValueError(f"config key {key!r}: {exc}") from exc
    merged.update(cli_vars)
    missing = [flag for flag, dest, _t, default, _h in opts
               if default is _REQUIRED and merged[dest] is _REQUIRED]
    if missing:
        raise ValueError(f"missing required option(s): {', '.join(missing)}")
    return merged


def _build_scheme(ns):
    family = ns["scheme"]
    n, m, rk = ns["n"], ns["m"], ns["rk"]
    if family == "dg":
        if n is None and m is None:
            raise ValueError("dg needs --n")
        n = n if n is not None else m
        m = m if m is not None else n
    elif family in ("p0pm", "p1pm"):
        fixed = 0 if family == "p0pm" else 1
        if n is not None and n != fixed:
            raise ValueError(f"{family} fixes --n to {fixed}")
        n = fixed
        if m is None:
            raise ValueError(f"{family} needs --m")
    else:
        raise ValueError(f"unknown scheme {family!r}; use dg, p0pm or p1pm")
    if rk is None:
        rk = RK_FOR_TARGET[min(m, 3)]
    family_key = "dg" if family == "dg" else "pnpm"
    return SchemeSpec(family_key, n, target=m, rk=rk,
                      cfl_fraction=ns.get("cfl_factor", 0.95))


def _operating_nu(scheme):
    key = (scheme.family, scheme.n_evolved, scheme.target, scheme.rk)
    if key in KNOWN_CFL:
        return KNOWN_CFL[key]
    return max_cfl(scheme, scheme.rk, full_nyquist=True)


def _fmt_complex_matrix(mat):
    rows = []
    for row in np.atleast_2d(mat):
        cells = ", ".join(f"{z.real:+.12e}{z.imag:+.12e}j" for z in row)
        rows.append(f"  [{cells}]")
    return "\n".join(rows)


def _fmt_eigs(eigs):
    order = np.lexsort((eigs.imag, eigs.real))
    return "\n".join(
        f"  {z.real:+.12e}{z.imag:+.12e}j" for z in eigs[order]
    )


def _eig_set_distance(a, b):
    """Largest nearest-neighbor gap between two eigenvalue sets."""
    a = np.asarray(a)[:, None]
    b = np.asarray(b)[None, :]
    d = np.abs(a - b)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def _cmd_matrix(ns):
    spec = SchemeSpec("dg", ns["p"])
    aop = assemble_A(spec, (ns["kx"], ns["ky"]), (ns["vx"], ns["vy"]),
                     ns["dx"], ns["dy"])
    print(f"A ({aop.dim}x{aop.dim}) at mode ({ns['kx']:.6g}, {ns['ky']:.6g}), "
          f"v=({ns['vx']:.6g}, {ns['vy']:.6g}):")
    print(_fmt_complex_matrix(aop.A))
    eigs_a = np.linalg.eigvals(aop.A)
    print("eigenvalues of A:")
    print(_fmt_eigs(eigs_a))
    if ns["dt"] is not None:
        rk = ns["rk"] or RK_FOR_TARGET[min(ns["p"], 3)]
        result = amplification(aop, ns["dt"], rk)
        print(f"amplification with {rk}, dt={ns['dt']:.6g}:")
        print("eigenvalues of G:")
        print(_fmt_eigs(result.eigenvalues))
        print(f"spectral radius: {result.spectral_radius:.12e}")
        if result.one_minus_amp is not None:
            print(f"1-|g| (physical branch): {result.one_minus_amp:.12e}")
            unit = "(absolute)" if result.degenerate else "per unit dt|k|"
            print(f"phase error {unit}: {result.phase_error:.12e}")
    if ns["oracle"]:
        if ns["p"] != 1:
            raise ValueError("--oracle applies to the second-order member (--p 1)")
        ref = second_order_reference_matrix(
            (ns["kx"], ns["ky"]), (ns["vx"], ns["vy"]), ns["dx"], ns["dy"])
        gap = _eig_set_distance(eigs_a, np.linalg.eigvals(ref))
        print(f"oracle: max eigenvalue difference {gap:.3e} "
              f"(tolerance {ORACLE_TOL:.0e})")
        if gap > ORACLE_TOL:
            raise EigenNoConvergence(
                f"mode matrix disagrees with the closed form by {gap:.3e}")
    return 0


def _cmd_cfl(ns):
    scheme = _build_scheme(ns)
    nu = certified_cfl(scheme, scheme.rk, n_angles=ns["n_angles"],
                       n_k=ns["n_k"], c_cap=ns["c_cap"],
                       full_nyquist=not ns["quadrant_only"])
    print("unstable" if nu is None else f"{nu:.6f}")
    return 0


def _cmd_stability_map(ns):
    scheme = _build_scheme(ns)
    caxis, rho = stability_map(scheme, scheme.rk, c_max=ns["c_max"],
                               n_c=ns["n_c"], n_k=ns["n_k"],
                               full_nyquist=not ns["quadrant_only"])
    write_csv(ns["out"], STABILITY_HEADER, stability_rows(caxis, rho))
    print(f"wrote {ns['out']} ({ns['n_c']}x{ns['n_c']} grid)")
    return 0


def _cmd_dispersion(ns):
    scheme = _build_scheme(ns)
    nu = ns["nu"] if ns["nu"] is not None else _operating_nu(scheme)
    rows = []
    for wavelength in ns["wavelength"]:
        rows.extend(dispersion_sweep(scheme, scheme.rk, ns["angle"],
                                     wavelength, nu=nu,
                                     cfl_factor=ns["cfl_factor"],
                                     step_deg=ns["step_deg"]))
    write_csv(ns["out"], DISPERSION_HEADER, dispersion_row_tuples(rows))
    print(f"wrote {ns['out']} ({len(rows)} rows, nu={nu:.6f})")
    return 0


def _problem_spec(ns, res):
    scheme = _build_scheme(ns)
    return ProblemSpec(ns["problem"], res, scheme, tf=ns["tf"],
                       velocity=(ns["vx"], ns["vy"]),
                       snapshots=ns.get("snapshots", 100)), scheme


def _cmd_run(ns):
    pspec, scheme = _problem_spec(ns, ns["res"])
    nu = ns["nu"] if ns["nu"] is not None else _operating_nu(scheme)
    report = run_problem(pspec, nu=nu)
    print(f"problem={ns['problem']} scheme={scheme.label} rk={scheme.rk} "
          f"res={ns['res']} tf={pspec.tf:.6g} nu={nu:.6f}")
    print(f"steps={report.steps} wall={report.wall_time:.2f}s")
    print(f"l1={report.l1:.6e} linf={report.linf:.6e} "
          f"energy_fraction={report.energy_fraction:.15f}")
    print(f"max_curl={report.max_curl:.6e} j_scale={report.j_scale:.6e}")
    if ns["curl_out"] is not None:
        write_csv(ns["curl_out"], CURL_HEADER, curl_rows(report))
        print(f"wrote {ns['curl_out']}")
    return 0


def _cmd_convergence(ns):
    scheme = _build_scheme(ns)
    nu = ns["nu"] if ns["nu"] is not None else _operating_nu(scheme)
    reports = convergence_suite(ns["problem"], scheme, ns["res"], tf=ns["tf"],
                                velocity=(ns["vx"], ns["vy"]), nu=nu)
    print(f"problem={ns['problem']} scheme={scheme.label} rk={scheme.rk} "
          f"nu={nu:.6f}")
    print("   res          l1    order          linf    order   energy_fraction")
    for r in reports:
        l1o = f"{r.l1_order:8.2f}" if r.l1_order is not None else "       -"
        lio = f"{r.linf_order:8.2f}" if r.linf_order is not None else "       -"
        print(f"  {r.resolution:4d}  {r.l1:.4e} {l1o}    {r.linf:.4e} {lio}"
              f"   {r.energy_fraction:.15f}")
    if ns["out"] is not None:
        write_csv(ns["out"], CONVERGENCE_HEADER, convergence_rows(reports))
        print(f"wrote {ns['out']}")
    return 0


_HANDLERS = {
    "matrix": _cmd_matrix,
    "cfl": _cmd_cfl,
    "stability-map": _cmd_stability_map,
    "dispersion": _cmd_dispersion,
    "run": _cmd_run,
    "convergence": _cmd_convergence,
}


def cli_dispatch(argv=None):
    """Parse argv and run one subcommand; returns the process exit code."""
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
        cli_vars = dict(vars(ns))
        command = cli_vars.pop("command")
        if command is None:
            parser.print_usage(sys.stderr)
            print("error: a subcommand is required", file=sys.stderr)
            return 1
        merged = _merge_options(command, cli_vars)
        return _HANDLERS[command](merged)
    except _UsageError as exc:
        exc.parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _NUMERICAL as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main():
    raise SystemExit(cli_dispatch())


if __name__ == "__main__":
    main()

"""Command-line driver: one subcommand per experiment, CSV data plus a run manifest.

Every run writes its CSV files and then ``manifest.txt`` into the output
directory. The manifest is a flat ``key=value`` file that echoes the
effective configuration, the package version, the wall-clock duration,
SHA-256 checksums of the outputs and any warnings. It is written last, via a
temporary file and an atomic rename, and any stale manifest is removed when
a run starts, so an interrupted run leaves none behind.

Exit codes: 0 success, 1 failed checks, 2 configuration error, 3 solver
non-convergence.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import math
import os
import sys
import tempfile
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Callable, Sequence

import numpy as np

from . import __version__, fullspace as fs, gdicke as gd, spectral, verify
from .twosite import JumpRates

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 1, 2, 3
MANIFEST = "manifest.txt"
EXPERIMENTS = ("gap", "steady", "decay", "exponent", "correlations", "verify")

#: Phase points for the dynamical exponent: ``(gamma1, gamma2, gamma3, n_quasi)``.
PHASES = {
    "ordered": (1.0, 1.0, 0.0, 0),
    "critical": (1.0, 1.0, 2.0, 0),
    "mixed": (1.0, 1.0, 100.0, 1),
}
#: Steady-state horizon in rescaled time ``t (N-1) gamma``: ``t = 1000`` at ``N = 80``.
STEADY_HORIZON = 1000.0 * 79


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ config

def _ints(s: str) -> list[int]:
    out = []
    for part in str(s).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _floats(s: str) -> list[float]:
    return [float(p) for p in str(s).split(",") if p.strip()]


def _window(s: str) -> tuple[float, float]:
    v = _floats(s)
    if len(v) != 2 or not v[0] < v[1]:
        raise ValueError("a window needs two increasing numbers")
    return (v[0], v[1])


def _words(s: str) -> list[str]:
    return [p.strip() for p in str(s).split(",") if p.strip()]


def _seed(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return v


def _opt_float(s: str):
    return None if str(s).strip().lower() in ("", "none") else float(s)


@dataclass
class RunConfig:
    """Effective settings of one run; unset fields take per-experiment defaults."""

    experiment: str
    n: list | None = None
    gamma1: float | None = None
    gamma2: float | None = None
    gamma3: list | None = None
    ngamma3: list | None = None
    gamma3prime: float | None = None
    geometry: str | None = None
    boundary: str | None = None
    sector: int | None = None
    phases: list | None = None
    n_quasi: int | None = None
    state: str | None = None
    step_c: float = spectral.DEFAULT_STEP_C
    arnoldi_k: int = 6
    horizon: float | None = None
    samples: int | None = None
    fit_window: tuple | None = None
    fit_mode: str | None = None
    seed: int = 0
    workers: int = 1
    out: str = "."

    def as_items(self) -> list[tuple[str, str]]:
        return [(f.name, _fmt_value(getattr(self, f.name))) for f in fields(self)]


_PARSERS: dict[str, Callable] = {
    "n": _ints, "gamma1": float, "gamma2": float, "gamma3": _floats, "ngamma3": _floats,
    "gamma3prime": _opt_float, "geometry": str, "boundary": str, "sector": int,
    "phases": _words, "n_quasi": int, "state": str, "step_c": float, "arnoldi_k": int,
    "horizon": float, "samples": int, "fit_window": _window, "fit_mode": str,
    "seed": _seed, "workers": int, "out": str,
}

_DEFAULTS = {
    "gap": dict(n=[20, 40], gamma1=1.0, gamma2=1.0,
                ngamma3=[0.25, 0.5, 1, 2, 3, 4, 5, 6, 8, 10, 15],
                geometry="alltoall", boundary="periodic", sector=0, n_quasi=0),
    "steady": dict(n=[80], gamma1=1.0, gamma2=1.0, ngamma3=[0.5, 1, 2, 3, 5, 10],
                   geometry="alltoall", sector=0, horizon=STEADY_HORIZON),
    "decay": dict(n=[200], gamma1=1.0, gamma2=1.0, ngamma3=[2.0], geometry="alltoall",
                  sector=0, horizon=200.0, samples=300, fit_window=(10.0, 100.0),
                  fit_mode="power"),
    "exponent": dict(n=list(range(6, 11)), geometry="chain", boundary="periodic",
                     phases=list(PHASES), sector=0),
    "correlations": dict(n=[10], gamma1=1.0, gamma2=1.0, gamma3=[100.0], geometry="chain",
                         boundary="open", state="mixed"),
    "verify": dict(),
}


def _fmt_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt_value(x) for x in v)
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def load_config(experiment: str, path: str | None, overrides: dict) -> RunConfig:
    """Merge defaults, an optional ``[section] key=value`` file and CLI overrides."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    raw: dict = {}
    if path is not None:
        cp = configparser.ConfigParser()
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for section in cp.sections():
            for key, val in cp.items(section):
                raw[key.replace("-", "_")] = val
    raw.update({k: v for k, v in overrides.items() if v is not None})
    values = dict(_DEFAULTS[experiment])
    for key, val in raw.items():
        if key not in _PARSERS:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            values[key] = _PARSERS[key](val) if isinstance(val, str) else val
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {val!r} ({exc})") from exc
    if "gamma3" in raw and "ngamma3" not in raw:
        values["ngamma3"] = None
    if experiment == "gap" and values.get("geometry") == "chain":
        if "n" not in raw:
            values["n"] = [8]
        if "gamma3" not in raw and "ngamma3" not in raw:
            values["gamma3"], values["ngamma3"] = [0.0], None
    cfg = RunConfig(experiment=experiment, **values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.workers < 1:
        raise ConfigError("workers must be positive")
    if cfg.geometry not in (None, "alltoall", "chain"):
        raise ConfigError("geometry must be alltoall or chain")
    if cfg.boundary not in (None, "open", "periodic"):
        raise ConfigError("boundary must be open or periodic")
    if cfg.n is not None and (not cfg.n or min(cfg.n) < 2):
        raise ConfigError("N must be at least 2")
    for g in (cfg.gamma1, cfg.gamma2, cfg.gamma3prime, *(cfg.gamma3 or []), *(cfg.ngamma3 or [])):
        if g is not None and (not math.isfinite(g) or g < 0):
            raise ConfigError("rates must be finite and nonnegative")
    if cfg.step_c <= 0:
        raise ConfigError("step_c must be positive")
    if cfg.phases:
        bad = [p for p in cfg.phases if p not in PHASES and p != "custom"]
        if bad:
            raise ConfigError(f"unknown phases {bad}")
    if cfg.fit_mode not in (None, "power", "exponential"):
        raise ConfigError("fit_mode must be power or exponential")
    if cfg.state not in (None, "mixed", "w", "vacuum"):
        raise ConfigError("state must be mixed, w or vacuum")
    if cfg.experiment in ("steady", "decay") and cfg.geometry != "alltoall":
        raise ConfigError(f"{cfg.experiment} needs all-to-all geometry")
    if cfg.experiment in ("exponent", "correlations") and cfg.geometry != "chain":
        raise ConfigError(f"{cfg.experiment} needs chain geometry")
    if cfg.experiment == "exponent" and max(cfg.n) > fs.MAX_SITES:
        raise ConfigError(f"exponent runs the full space and needs N <= {fs.MAX_SITES}")


# ------------------------------------------------------------------ output

def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header: Sequence[str], rows) -> str:
    """Write an RFC-4180 CSV with 17-significant-digit floats; return its SHA-256."""
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    text = buf.getvalue()
    _atomic_write(path, text)
    return hashlib.sha256(text.encode()).hexdigest()


def write_manifest(out: str, cfg: RunConfig, outputs: dict, warns: list, duration: float,
                   status: str, extra: dict | None = None) -> None:
    lines = [f"experiment={cfg.experiment}", f"version={__version__}", f"status={status}",
             f"duration_s={duration:.3f}"]
    lines += [f"config.{k}={v}" for k, v in cfg.as_items()]
    lines += [f"output.{name}.sha256={h}" for name, h in sorted(outputs.items())]
    for k, v in (extra or {}).items():
        lines.append(f"info.{k}={_fmt_value(v) if not isinstance(v, str) else v}")
    for i, msg in enumerate(dict.fromkeys(warns)):
        lines.append(f"warning.{i}={' '.join(str(msg).split())}")
    _atomic_write(os.path.join(out, MANIFEST), "\n".join(lines) + "\n")


def read_manifest(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for line in fh:
            if "=" in line:
                k, v = line.rstrip("\n").split("=", 1)
                out[k] = v
    return out


# ------------------------------------------------------------- worker pool

def _run_task(fn, args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = fn(*args)
    return result, [str(w.message) for w in caught]


def run_pool(fn, arglist: list, workers: int) -> tuple[list, list]:
    """Run ``fn(*args)`` for each entry; results keep submission order."""
    warns: list = []
    if workers <= 1 or len(arglist) <= 1:
        pairs = [_run_task(fn, a) for a in arglist]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(arglist))) as pool:
            futs = [pool.submit(_run_task, fn, a) for a in arglist]
            pairs = [f.result() for f in futs]
    results = []
    for res, w in pairs:
        results.append(res)
        warns.extend(w)
    return results, warns


# ------------------------------------------------------------- sweep points

def _alltoall_rates(g1, g2, g3, g3p):
    return JumpRates.alltoall(g1, g2, g3, gamma3prime=g3p)


def _gamma3_points(cfg: RunConfig, n: int) -> list[tuple[float, float]]:
    """``(gamma3, N gamma3)`` pairs: explicit ``gamma3`` wins over ``ngamma3``."""
    if cfg.gamma3:
        return [(g, n * g) for g in cfg.gamma3]
    return [(x / n, x) for x in (cfg.ngamma3 or [0.0])]


def gap_point(n, geometry, boundary, sector, g1, g2, g3, g3p, n_quasi, k, seed):
    """One row of the gap sweep: ``(gap, kernel_dim, offdiag_gap, status)``."""
    try:
        if geometry == "alltoall":
            basis, op = gd.build_alltoall_lindbladian(n, _alltoall_rates(g1, g2, g3, g3p), sector)
            if len(basis) <= spectral.DENSE_CAP:
                res = spectral.eig_dense(op, scaling=gd.similarity_scaling(basis))
            else:
                known = gd.kernel_vectors(n, basis) if sector == 0 else []
                res = spectral.eig_gap_arnoldi(op, known, k=k, seed=seed)
            return res.gap, res.kernel_dim, math.nan, "ok"
        rates = JumpRates.chain(g1, g2, g3, periodic=boundary == "periodic", gamma3prime=g3p)
        res = fs.relevant_gap(n, rates, n_quasi=n_quasi, k=k, seed=seed)
        off = fs.offdiag_block_gap(n, rates, seed=seed)
        return res.gap, res.kernel_dim, off, "ok"
    except spectral.ConvergenceError as exc:
        return math.nan, -1, math.nan, f"nonconvergence: {exc}"


def steady_point(n, g1, g2, g3, g3p, horizon):
    """Evolve the polarized state; return ``(t, alpha dict, XX / (2/N))``."""
    basis, op = gd.build_alltoall_lindbladian(n, _alltoall_rates(g1, g2, g3, g3p), 0)
    t = horizon / ((n - 1) * _time_unit(g1, g2, g3))
    v = spectral.propagate_dense(op, gd.polarized_up_vector(n, basis).coeffs, t,
                                 scaling=gd.similarity_scaling(basis))
    tr = float(gd.trace_functional(basis) @ v)
    if abs(tr - 1) > 1e-6:
        warnings.warn(f"trace {tr:.12g} after propagation at gamma3={g3:g}")
    alpha = {sz: float(f @ v) for sz, f in gd.alpha_sz_functionals(basis).items()}
    ratio = float(gd.xx_functional(basis) @ v) / (2.0 / n)
    return t, alpha, ratio


def _time_unit(g1, g2, g3) -> float:
    """Rate that sets rescaled time: ``gamma1``, or the largest rate when ``gamma1 = 0``."""
    unit = g1 if g1 > 0 else max(g2, g3)
    if unit <= 0:
        raise ConfigError("all rates vanish; time cannot be rescaled")
    return unit


def decay_point(n, g1, g2, g3, g3p, horizon, samples, step_c):
    basis, op = gd.build_alltoall_lindbladian(n, _alltoall_rates(g1, g2, g3, g3p), 0)
    unit = (n - 1) * _time_unit(g1, g2, g3)
    s = np.concatenate([[0.0], np.geomspace(min(0.1, horizon / 10), horizon, samples)])
    obs = gd.observables(basis)
    ts = spectral.evolve(op, gd.polarized_up_vector(n, basis).coeffs, s / unit,
                         {"M": obs["M"]}, c=step_c, trace_functional=obs["trace"])
    return s, ts.values["M"] - 1.0 / n, ts.meta


def exponent_point(n, boundary, g1, g2, g3, g3p, n_quasi, k, seed):
    rates = JumpRates.chain(g1, g2, g3, periodic=boundary == "periodic", gamma3prime=g3p)
    try:
        res = fs.relevant_gap(n, rates, n_quasi=n_quasi, k=k, seed=seed)
        return res.gap, "ok"
    except spectral.ConvergenceError as exc:
        return math.nan, f"nonconvergence: {exc}"


# ---------------------------------------------------------------- commands

def _rate(cfg, name, default):
    v = getattr(cfg, name)
    return default if v is None else v


def cmd_gap(cfg: RunConfig):
    g1, g2 = _rate(cfg, "gamma1", 1.0), _rate(cfg, "gamma2", 1.0)
    points, args = [], []
    for n in cfg.n:
        for g3, ng3 in _gamma3_points(cfg, n):
            points.append((n, ng3, g3))
            args.append((n, cfg.geometry, cfg.boundary, cfg.sector, g1, g2, g3, cfg.gamma3prime,
                         cfg.n_quasi, cfg.arnoldi_k, cfg.seed))
    results, warns = run_pool(gap_point, args, cfg.workers)
    rows = [(n, ng3, g3, gap, kd, off, st) for (n, ng3, g3), (gap, kd, off, st) in zip(points, results)]
    header = ["N", "N_gamma3 [-]", "gamma3 [rate]", "gap [rate]", "kernel_dim",
              "offdiag_gap [rate]", "status"]
    h = write_csv(os.path.join(cfg.out, "gap.csv"), header, rows)
    failed = any(r[-1] != "ok" for r in rows)
    return {"gap.csv": h}, warns, (EXIT_CONVERGENCE if failed else EXIT_OK), {}


def cmd_steady(cfg: RunConfig):
    g1, g2 = _rate(cfg, "gamma1", 1.0), _rate(cfg, "gamma2", 1.0)
    points, args = [], []
    for n in cfg.n:
        for g3, ng3 in _gamma3_points(cfg, n):
            points.append((n, ng3, g3))
            args.append((n, g1, g2, g3, cfg.gamma3prime, cfg.horizon))
    results, warns = run_pool(steady_point, args, cfg.workers)
    rows = []
    for (n, ng3, g3), (t, alpha, ratio) in zip(points, results):
        for sz in sorted(alpha):
            rows.append((n, g1, g2, g3, ng3, t, sz, alpha[sz], ratio))
    header = ["N", "gamma1 [rate]", "gamma2 [rate]", "gamma3 [rate]", "N_gamma3 [-]", "t [1/rate]",
              "Sz", "alpha [-]", "xx_ratio [-]"]
    h = write_csv(os.path.join(cfg.out, "steady.csv"), header, rows)
    return {"steady.csv": h}, warns, EXIT_OK, {"horizon_rule": "t (N-1) gamma = horizon"}


def cmd_decay(cfg: RunConfig):
    g1, g2 = _rate(cfg, "gamma1", 1.0), _rate(cfg, "gamma2", 1.0)
    points, args = [], []
    for n in cfg.n:
        for g3, ng3 in _gamma3_points(cfg, n):
            points.append((n, ng3, g3))
            args.append((n, g1, g2, g3, cfg.gamma3prime, cfg.horizon, cfg.samples, cfg.step_c))
    results, warns = run_pool(decay_point, args, cfg.workers)
    rows, fits, extra = [], [], {}
    for (n, ng3, g3), (s, dm, meta) in zip(points, results):
        rows.extend((n, ng3, si, di) for si, di in zip(s, dm))
        series = spectral.TimeSeries(s, {"M": dm + 1.0 / n}, meta)
        try:
            val, err = spectral.fit_decay_exponent(series, cfg.fit_window, cfg.fit_mode, "M", 1.0 / n)
        except ValueError as exc:
            val, err = math.nan, math.nan
            warns.append(f"fit failed at N={n}, N_gamma3={ng3:g}: {exc}")
        fits.append((n, ng3, cfg.fit_mode, cfg.fit_window[0], cfg.fit_window[1], val, err))
        extra[f"trace_drift_per_time.N{n}.Ng3_{ng3:g}"] = meta["trace_drift_per_time"]
    h1 = write_csv(os.path.join(cfg.out, "decay.csv"), ["N", "N_gamma3 [-]",
                   "t_rescaled [t (N-1) gamma1]", "M_minus_MW [-]"], rows)
    h2 = write_csv(os.path.join(cfg.out, "decay_fit.csv"),
                   ["N", "N_gamma3 [-]", "mode", "window_lo [t (N-1) gamma1]",
                    "window_hi [t (N-1) gamma1]", "exponent [-]", "stderr [-]"], fits)
    return {"decay.csv": h1, "decay_fit.csv": h2}, warns, EXIT_OK, extra


def _phase_list(cfg: RunConfig):
    out = []
    for name in cfg.phases:
        if name == "custom":
            g3 = (cfg.gamma3 or [0.0])[0]
            out.append((name, (_rate(cfg, "gamma1", 1.0), _rate(cfg, "gamma2", 1.0), g3,
                               _rate(cfg, "n_quasi", 0))))
        else:
            out.append((name, PHASES[name]))
    return out


def cmd_exponent(cfg: RunConfig):
    phases = _phase_list(cfg)
    points, args = [], []
    for name, (g1, g2, g3, nq) in phases:
        for n in cfg.n:
            points.append((name, g1, g2, g3, n))
            args.append((n, cfg.boundary, g1, g2, g3, cfg.gamma3prime, nq, cfg.arnoldi_k, cfg.seed))
    results, warns = run_pool(exponent_point, args, cfg.workers)
    rows = [(*p, gap, st) for p, (gap, st) in zip(points, results)]
    fits = []
    for name, _ in phases:
        sel = [(r[4], r[5]) for r in rows if r[0] == name and r[6] == "ok"]
        try:
            z, err = spectral.fit_power_law([s[0] for s in sel], [s[1] for s in sel])
        except ValueError as exc:
            z, err = math.nan, math.nan
            warns.append(f"fit failed for phase {name}: {exc}")
        fits.append((name, z, err))
    h1 = write_csv(os.path.join(cfg.out, "exponent.csv"),
                   ["phase", "gamma1 [rate]", "gamma2 [rate]", "gamma3 [rate]", "N", "gap [rate]",
                    "status"], rows)
    h2 = write_csv(os.path.join(cfg.out, "exponent_fit.csv"), ["phase", "z [-]", "stderr [-]"], fits)
    failed = any(r[-1] != "ok" for r in rows)
    return ({"exponent.csv": h1, "exponent_fit.csv": h2}, warns,
            EXIT_CONVERGENCE if failed else EXIT_OK, {})


def cmd_correlations(cfg: RunConfig):
    n = cfg.n[0]
    if n > fs.MAX_SITES:
        raise ConfigError(f"correlations need N <= {fs.MAX_SITES}")
    extra: dict = {}
    warns: list = []
    if cfg.state == "w":
        rho = fs.density(fs.w_state(n))
    elif cfg.state == "vacuum":
        rho = fs.density(fs.vacuum_state(n))
    else:
        g3 = (cfg.gamma3 or [100.0])[0]
        rates = JumpRates.chain(cfg.gamma1, cfg.gamma2, g3, periodic=cfg.boundary == "periodic",
                                gamma3prime=cfg.gamma3prime)
        lop = fs.build_nn_superoperator(n, rates, block=0)
        rho, info = fs.constrained_mixed_state(lop, seed=cfg.seed)
        extra.update({"quasi_eigenvalue": info["eigenvalue"].real, "min_eig": info["min_eig"],
                      "min_eig_raw": info["min_eig_raw"], "pinched_norm": info["pinched_norm"],
                      "mixed_offset_xx": fs.mixed_offset_xx(n)})
        if not info["psd"]:
            warns.append(f"mixed state not positive: min eigenvalue {info['min_eig']:.3g}")
    prof = fs.xx_distance_profile(rho, cfg.boundary)
    rows = [(m, v) for m, v in enumerate(prof, start=1)]
    outputs = {"correlations.csv": write_csv(os.path.join(cfg.out, "correlations.csv"),
                                             ["m", "xx [-]"], rows)}
    if cfg.fit_window is not None:
        lo, hi = cfg.fit_window
        sel = [(m, abs(v)) for m, v in rows if lo <= m <= hi and v != 0]
        if len(sel) >= 2:
            from scipy import stats
            r = stats.linregress([s[0] for s in sel], np.log([s[1] for s in sel]))
            fit = [(lo, hi, -r.slope, r.stderr)]
        else:
            fit = [(lo, hi, math.nan, math.nan)]
            warns.append("too few nonzero points for the correlation fit")
        outputs["correlations_fit.csv"] = write_csv(
            os.path.join(cfg.out, "correlations_fit.csv"),
            ["m_lo", "m_hi", "decay_rate [1/site]", "stderr [1/site]"], fit)
    return outputs, warns, EXIT_OK, extra


def cmd_verify(cfg: RunConfig, stream=None):
    stream = stream or sys.stdout
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        checks = verify.run_suite()
    width = max(len(c.name) for c in checks)
    print(f"{'check':<{width}}  {'tolerance':>9}  {'observed':>10}  status", file=stream)
    for c in checks:
        print(f"{c.name:<{width}}  {c.tolerance:>9.1e}  {c.observed:>10.3e}  "
              f"{'PASS' if c.passed else 'FAIL'}", file=stream)
    rows = [(c.name, c.tolerance, c.observed, "PASS" if c.passed else "FAIL") for c in checks]
    h = write_csv(os.path.join(cfg.out, "verify.csv"),
                  ["check", "tolerance", "observed", "status"], rows)
    ok = all(c.passed for c in checks)
    return {"verify.csv": h}, [str(w.message) for w in caught], (EXIT_OK if ok else EXIT_FAIL), {}


COMMANDS = {
    "gap": cmd_gap, "steady": cmd_steady, "decay": cmd_decay, "exponent": cmd_exponent,
    "correlations": cmd_correlations, "verify": cmd_verify,
}


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wlindblad", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name)
        s.add_argument("--config", metavar="PATH")
        s.add_argument("--out", metavar="DIR")
        s.add_argument("--seed", metavar="U64")
        s.add_argument("--workers", metavar="K")
        s.add_argument("--n", metavar="N[,N..]")
        s.add_argument("--gamma1")
        s.add_argument("--gamma2")
        s.add_argument("--gamma3", metavar="G[,G..]")
        s.add_argument("--ngamma3", metavar="X[,X..]")
        s.add_argument("--gamma3prime")
        s.add_argument("--geometry", choices=("alltoall", "chain"))
        s.add_argument("--sector")
        s.add_argument("--boundary", choices=("open", "periodic"))
        s.add_argument("--phases")
        s.add_argument("--n-quasi", dest="n_quasi")
        s.add_argument("--state", choices=("mixed", "w", "vacuum"))
        s.add_argument("--horizon")
        s.add_argument("--samples")
        s.add_argument("--fit-window", dest="fit_window", metavar="LO,HI")
        s.add_argument("--fit-mode", dest="fit_mode", choices=("power", "exponential"))
        s.add_argument("--step-c", dest="step_c")
        s.add_argument("--arnoldi-k", dest="arnoldi_k")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("experiment", "config")}
    try:
        cfg = load_config(args.experiment, args.config, overrides)
        os.makedirs(cfg.out, exist_ok=True)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = os.path.join(cfg.out, MANIFEST)
    if os.path.exists(manifest):
        os.unlink(manifest)
    start = time.perf_counter()
    try:
        outputs, warns, code, extra = COMMANDS[cfg.experiment](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except spectral.ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    status = {EXIT_OK: "ok", EXIT_FAIL: "failed", EXIT_CONVERGENCE: "nonconvergence"}[code]
    write_manifest(cfg.out, cfg, outputs, warns, time.perf_counter() - start, status, extra)
    return code


if __name__ == "__main__":
    sys.exit(main())

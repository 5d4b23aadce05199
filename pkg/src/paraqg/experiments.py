"""The verification experiments behind the CLI subcommands.

Every run writes a JSON manifest (config, seeds, versions, timestamp) next
to its outputs.  CSV bodies are byte-identical across reruns with the same
config and master seed: rows are emitted in a fixed order and floats are
serialized with repr (shortest round-trip form).
"""

from __future__ import annotations

import json
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .calculus import paraproduct, partial_deriv, product
from .grid import Grid, SpectralField, to_physical, to_spectral
from .noise import (Mollifier, build_driver, eps_convergence, pi0_summand,
                    regularity_table, sample_noise, smooth_driver, ou_path)
from .partition import build_partition, fit_regularity
from .pqgf import write_snapshot
from .semigroup import Dissipation, IntegratorState, propagate, schauder_probe
from .solver import (classical_mild_solve, exponents, linear_increments,
                     picard_solve, reconstruct)

COMPONENTS = ("X", "V", "Y", "Z", "W", "Zhat", "What")

# deterministic band-limited forcing for the mild-solution comparison
SMOOTH_MODES = {(1, 0): (0.25, 1.0, 0.3), (0, 1): (0.2, 2.0, 1.1),
                (3, 1): (0.12, 0.7, -0.4), (5, 2): (0.08, 1.3, 0.9)}


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(x) for x in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def write_manifest(out: Path, cfg: RunConfig, master_seed: int,
                   subcommand: str, extra: dict | None = None) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": cfg.as_dict(),
        "master_seed": master_seed,
        "seeds": cfg.seed_values(master_seed),
        "versions": {
            "paraqg": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _map_seeds(fn, seeds, workers: int):
    """Deterministic seed fan-out: results always in seed order.

    fn must be picklable for workers > 1 (a functools.partial over a
    module-level function).
    """
    if workers <= 1 or len(seeds) <= 1:
        return [fn(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


def _eps_seed_worker(seed, grid_n, dt, t_burn, T, eps_list, theta,
                     chi_profile, kappa):
    grid = Grid(grid_n)
    return eps_convergence(grid, dt, t_burn, T, [seed], eps_list, theta,
                           chi_profile, kappa=kappa)


def _regularity_seed_worker(seed, grid_n, dt, t_burn, T, theta, eps,
                            chi_profile, kappa, j_lo, j_hi):
    grid = Grid(grid_n)
    part = build_partition(grid)
    drv = build_driver(grid, dt, t_burn, T, seed, theta,
                       Mollifier(eps, chi_profile), kappa=kappa)
    return driver_slopes(drv, part, j_lo, j_hi)


def _chaos_seed_worker(seed, grid_n, dt, burn, theta, eps, chi_profile,
                       kappa, probes):
    grid = Grid(grid_n)
    drv = build_driver(grid, dt, burn, 2 * dt, seed, theta,
                       Mollifier(eps, chi_profile), kappa=kappa,
                       min_burn=burn)
    vals = {}
    for name in ("Y", "What", "W"):
        fields = drv.components()[name]
        for ci, f in enumerate(fields):
            phys = to_physical(f.field(f.data.shape[0] - 1))
            key = name if len(fields) == 1 else f"{name}{ci + 1}"
            vals[key] = [phys[a, b] for a, b in probes]
    return vals


# ---------------------------------------------------------------------------
# enhance


def run_enhance(cfg: RunConfig, out: Path, master_seed: int) -> int:
    grid = Grid(cfg.grid_n)
    moll = Mollifier(cfg.eps_list[-1], cfg.chi_profile)
    rows = []
    seeds = cfg.seed_values(master_seed)
    for idx, seed in enumerate(seeds):
        drv = build_driver(grid, cfg.dt, cfg.t_burn, cfg.t_final, seed,
                           cfg.theta, moll, kappa=cfg.kappa)
        for name in COMPONENTS:
            alpha = regularity_table(cfg.theta)[name] - cfg.kappa
            rows.append((name, moll.eps, seed, alpha, drv.norms[name]))
        if "Y_holder" in drv.norms:
            rows.append(("Y_holder", moll.eps, seed, 0.0, drv.norms["Y_holder"]))
        rows.append(("total", moll.eps, seed, 0.0, drv.norms["total"]))
        if idx == 0:
            last = drv.X.data.shape[0] - 1
            for name, tf in (("X", drv.X), ("Y", drv.Y), ("Z", drv.Z)):
                write_snapshot(out / f"driver_{name}_T.pqgf", tf.field(last),
                               cfg.t_final)
    write_csv(out / "driver_norms.csv",
              ["component", "eps", "seed", "alpha", "norm"], rows)
    write_manifest(out, cfg, master_seed, "enhance")
    return 0


# ---------------------------------------------------------------------------
# solve


def run_solve(cfg: RunConfig, out: Path, master_seed: int) -> int:
    grid = Grid(cfg.grid_n)
    moll = Mollifier(cfg.eps_list[-1], cfg.chi_profile)
    exps = exponents(cfg.theta, cfg.kappa, cfg.kappa_prime)
    seed = cfg.seed_values(master_seed)[0]
    drv = build_driver(grid, cfg.dt, cfg.t_burn, cfg.t_final, seed,
                       cfg.theta, moll, kappa=cfg.kappa)
    zero = SpectralField.zero(grid)
    pair, report = picard_solve(drv, zero, zero, exps, cfg.t_final,
                                tol=cfg.tol, max_iter=cfg.max_iter)
    (out / "solver_report.json").write_text(
        json.dumps(report.as_dict(), indent=2) + "\n")
    write_csv(out / "residuals.csv", ["iteration", "residual"],
              [(i + 1, r) for i, r in enumerate(report.residuals)])
    u = reconstruct(drv.restrict_steps(pair.v.data.shape[0] - 1), pair.v, pair.w)
    for frac, tag in ((0, "0"), (u.data.shape[0] // 2, "half"),
                      (u.data.shape[0] - 1, "T")):
        write_snapshot(out / f"u_{tag}.pqgf", u.field(frac), frac * cfg.dt)
    write_manifest(out, cfg, master_seed, "solve")
    return 0 if report.converged else 1


# ---------------------------------------------------------------------------
# consistency (paracontrolled vs classical mild solution)


def _consistency_at(grid, theta, kappa, kappa_prime, T, dt, tol, max_iter):
    drv = smooth_driver(grid, theta, dt, T, SMOOTH_MODES, kappa=kappa)
    exps = exponents(theta, kappa, kappa_prime)
    zero = SpectralField.zero(grid)
    pair, report = picard_solve(drv, zero, zero, exps, T, tol=tol,
                                max_iter=max_iter)
    if not report.converged or report.T_star < T:
        raise RuntimeError("picard solve did not converge on the smooth driver")
    u_para = reconstruct(drv, pair.v, pair.w)
    u0 = drv.X.field(0) + drv.Y.field(0)
    u_classic = classical_mild_solve(u0, theta, T, dt,
                                     forcing_increments=linear_increments(drv.X, theta))
    diff = np.max(np.abs(to_physical(u_para.field(-1))
                         - to_physical(u_classic.field(-1))))
    scale = np.max(np.abs(to_physical(u_classic.field(-1))))
    return diff / scale, report


def run_consistency(cfg: RunConfig, out: Path, master_seed: int) -> int:
    grid = Grid(cfg.grid_n)
    rows = []
    rel = {}
    for dt in (cfg.dt, cfg.dt / 2.0):
        rel[dt], report = _consistency_at(grid, cfg.theta, cfg.kappa,
                                          cfg.kappa_prime, cfg.t_final, dt,
                                          cfg.tol, cfg.max_iter)
        rows.append((dt, rel[dt], report.iterations, report.residuals[-1]))
    ratio = rel[cfg.dt] / rel[cfg.dt / 2.0]
    write_csv(out / "consistency.csv",
              ["dt", "rel_diff", "iterations", "final_residual"], rows)
    summary = {"rel_diff": rel[cfg.dt], "rel_diff_half_dt": rel[cfg.dt / 2.0],
               "ratio": ratio}
    (out / "consistency.json").write_text(json.dumps(summary, indent=2) + "\n")
    write_manifest(out, cfg, master_seed, "consistency")
    return 0 if (rel[cfg.dt] <= 1e-2 and ratio >= 1.8) else 1


# ---------------------------------------------------------------------------
# eps convergence


def run_eps_convergence(cfg: RunConfig, out: Path, master_seed: int) -> int:
    seeds = cfg.seed_values(master_seed)
    one_seed = partial(_eps_seed_worker, grid_n=cfg.grid_n, dt=cfg.dt,
                       t_burn=cfg.t_burn, T=cfg.t_final,
                       eps_list=cfg.eps_list, theta=cfg.theta,
                       chi_profile=cfg.chi_profile, kappa=cfg.kappa)
    rows = [r for chunk in _map_seeds(one_seed, seeds, cfg.workers)
            for r in chunk]
    rows.sort(key=lambda r: (r["component"], -r["eps"], r["seed"]))
    write_csv(out / "eps_convergence.csv",
              ["component", "eps", "seed", "alpha", "norm", "diff_norm"],
              [(r["component"], r["eps"], r["seed"], r["alpha"], r["norm"],
                r["diff_norm"]) for r in rows])

    summary = []
    for name in COMPONENTS:
        sub = [r for r in rows if r["component"] == name]
        eps_sorted = sorted({r["eps"] for r in sub}, reverse=True)
        mono = 0
        for seed in seeds:
            diffs = [r["diff_norm"] for e in eps_sorted for r in sub
                     if r["seed"] == seed and r["eps"] == e]
            if all(b <= a for a, b in zip(diffs, diffs[1:])):
                mono += 1
        le, ld = [], []
        for r in sub:
            if r["diff_norm"] > 0:
                le.append(np.log(r["eps"]))
                ld.append(np.log(r["diff_norm"]))
        rate = float(np.polyfit(le, ld, 1)[0]) if len(set(le)) > 1 else float("nan")
        summary.append((name, mono, len(seeds), rate))
    write_csv(out / "eps_convergence_summary.csv",
              ["component", "monotone_seeds", "seeds", "fitted_rate"], summary)
    write_manifest(out, cfg, master_seed, "eps-convergence")
    ok = all(m >= max(1, int(np.ceil(0.875 * s))) and r > 0
             for _, m, s, r in summary)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# regularity


def driver_slopes(drv, part, j_lo, j_hi) -> dict:
    """Fitted regularity per component from the final-time snapshot."""
    out = {}
    for name, fields in drv.components().items():
        vals = []
        for f in fields:
            vals.append(fit_regularity(f.field(f.data.shape[0] - 1), part,
                                       j_lo, j_hi))
        out[name] = float(np.mean(vals))
    return out


def run_regularity(cfg: RunConfig, out: Path, master_seed: int) -> int:
    grid = Grid(cfg.grid_n)
    part = build_partition(grid)
    moll = Mollifier(cfg.regularity_eps, cfg.chi_profile)
    seeds = cfg.seed_values(master_seed)
    table = regularity_table(cfg.theta)
    j_lo, j_hi = 2, part.j_max - 1
    # coarse steps keep the integration map's per-mode transfer uniform
    # over the fit window, so slopes are tilt-free (see the repo README)
    dt = cfg.regularity_dt
    T = max(int(round(cfg.t_final / dt)), 2) * dt
    one_seed = partial(_regularity_seed_worker, grid_n=cfg.grid_n, dt=dt,
                       t_burn=cfg.t_burn, T=T, theta=cfg.theta,
                       eps=cfg.regularity_eps, chi_profile=cfg.chi_profile,
                       kappa=cfg.kappa, j_lo=j_lo, j_hi=j_hi)
    results = _map_seeds(one_seed, seeds, cfg.workers)
    rows = []
    for name in COMPONENTS:
        for seed, res in zip(seeds, results):
            rows.append((name, cfg.theta, moll.eps, seed, res[name], table[name]))
    write_csv(out / "regularity.csv",
              ["component", "theta", "eps", "seed", "slope", "reference"], rows)
    summary = [(name, cfg.theta,
                float(np.mean([r[name] for r in results])),
                float(np.std([r[name] for r in results], ddof=1)
                      / np.sqrt(len(results))) if len(results) > 1 else 0.0,
                table[name]) for name in COMPONENTS]
    write_csv(out / "regularity_summary.csv",
              ["component", "theta", "mean_slope", "stderr", "reference"],
              summary)
    write_manifest(out, cfg, master_seed, "regularity")
    return 0


# ---------------------------------------------------------------------------
# chaos check


def run_chaos_check(cfg: RunConfig, out: Path, master_seed: int) -> int:
    grid = Grid(cfg.grid_n)
    moll = Mollifier(cfg.eps_list[-1], cfg.chi_profile)
    k = (np.fft.fftfreq(grid.n) * grid.n).astype(int)

    rows = []
    max_abs = {}
    for kind in ("Y", "What", "W"):
        tab = pi0_summand(kind, cfg.theta, moll, grid)
        tab = tab[None, :, :] if tab.ndim == 2 else tab
        max_abs[kind] = float(np.max(np.abs(tab)))
        for i in range(tab.shape[0]):
            for a in range(grid.n):
                for b in range(grid.n):
                    rows.append((kind, i + 1, int(k[a]), int(k[b]),
                                 tab[i, a, b]))
    write_csv(out / "pi0_summands.csv",
              ["kind", "i", "k1", "k2", "summand"], rows)
    write_csv(out / "pi0_max.csv", ["kind", "max_abs_summand"],
              [(kind, max_abs[kind]) for kind in ("Y", "What", "W")])

    # Monte-Carlo means at probe points; E = 0 for any burn-in because the
    # order-zero chaos part cancels mode by mode
    rng = np.random.default_rng(master_seed)
    probes = [(int(a), int(b)) for a, b in rng.integers(0, grid.n, size=(8, 2))]
    seeds = [master_seed * 1_000_003 + i for i in range(cfg.chaos_seeds)]
    one_seed = partial(_chaos_seed_worker, grid_n=cfg.grid_n, dt=cfg.dt,
                       burn=cfg.chaos_burn, theta=cfg.theta, eps=moll.eps,
                       chi_profile=cfg.chi_profile, kappa=cfg.kappa,
                       probes=probes)
    results = _map_seeds(one_seed, seeds, cfg.workers)
    mc_rows = []
    worst = 0.0
    for name in sorted(results[0]):
        arr = np.array([r[name] for r in results])
        mean = arr.mean(axis=0)
        stderr = arr.std(axis=0, ddof=1) / np.sqrt(arr.shape[0])
        for p, (a, b) in enumerate(probes):
            z = abs(mean[p]) / max(stderr[p], 1e-300)
            worst = max(worst, z)
            mc_rows.append((name, p, a, b, mean[p], stderr[p], z))
    write_csv(out / "chaos_means.csv",
              ["component", "probe", "i1", "i2", "mean", "stderr", "z"],
              mc_rows)
    write_manifest(out, cfg, master_seed, "chaos-check")
    ok = all(v == 0.0 for v in max_abs.values()) and worst <= 4.0
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# selftest


def run_selftest(cfg: RunConfig, out: Path, master_seed: int) -> int:
    """Fast invariant battery at n = 32, plus small CSVs for the figure
    pipeline (eps trends, regularity, Schauder probe, residual decay)."""
    write_manifest(out, cfg, master_seed, "selftest")
    grid = Grid(32)
    part = build_partition(grid)
    theta = 2.0
    checks = []

    def check(name, value, threshold, larger_is_bad=True):
        ok = value <= threshold if larger_is_bad else value >= threshold
        checks.append((name, "PASS" if ok else "FAIL", value, threshold))
        return ok

    rng = np.random.default_rng(master_seed)

    # partition exactness and block supports
    total = part.rho.sum(axis=0)
    check("partition_telescoping", float(np.max(np.abs(total - 1.0))), 1e-12)
    support_defect = 0.0
    for j in range(0, part.j_max + 1):
        tab = part.rho[part.block_index(j)]
        outside = (grid.abs_k < 2.0**j) | (grid.abs_k > (8.0 / 3.0) * 2.0**j)
        support_defect = max(support_defect, float(np.max(np.abs(tab[outside]))))
    check("block_supports", support_defect, 0.0)

    # FFT round trip
    samples = rng.standard_normal((grid.n, grid.n))
    rt = np.max(np.abs(to_physical(to_spectral(samples, grid)) - samples))
    check("fft_round_trip", float(rt / np.max(np.abs(samples))), 1e-12)

    # Bony identity on random band-limited pairs
    worst = 0.0
    mask = grid.band_mask
    for _ in range(20):
        fc = np.fft.fft2(rng.standard_normal((grid.n, grid.n))) / grid.n**2 * mask
        gc = np.fft.fft2(rng.standard_normal((grid.n, grid.n))) / grid.n**2 * mask
        f, g = SpectralField(grid, fc), SpectralField(grid, gc)
        lhs = product(f, g)
        rhs = (paraproduct(f, g, "lt") + paraproduct(f, g, "gt")
               + paraproduct(f, g, "resonant"))
        worst = max(worst, (lhs - rhs).max_abs() / (f.max_abs() * g.max_abs()))
    check("bony_identity", worst, 1e-10)

    # Pi0 cancellation tables
    moll = Mollifier(0.2)
    pi0_worst = max(float(np.max(np.abs(pi0_summand(kind, theta, moll, grid))))
                    for kind in ("Y", "W", "What"))
    check("pi0_cancellation", pi0_worst, 0.0)

    # OU per-mode variance at k = (1, 0)
    lam = 4 * np.pi**2 + 1
    per_seed = []
    for i in range(6):
        noise = sample_noise(grid, 0.01, 0.0, 4.0, master_seed * 1_000_003 + i)
        x = ou_path(noise, theta, Mollifier(1e-6))
        per_seed.append(np.mean(np.abs(x.data[:, 1, 0]) ** 2))
    se = np.std(per_seed, ddof=1) / np.sqrt(len(per_seed))
    check("ou_variance_z", abs(np.mean(per_seed) - 1 / (2 * lam)) / max(se, 1e-300), 5.0)

    # driver relation through a short stochastic driver
    drv = build_driver(grid, 0.01, 10.0, 0.1, master_seed, theta, Mollifier(0.2))
    d = Dissipation(theta, shift=1)
    worst = 0.0
    v = drv.V[0]
    integ = IntegratorState(grid, d, v.dt)
    scale = np.max(np.abs(v.data))
    for m in range(v.data.shape[0]):
        val = integ.push(partial_deriv(drv.X.field(m), 1).coeff)
        recon = propagate(v.field(0), m * v.dt, d).coeff + val
        worst = max(worst, float(np.max(np.abs(recon - v.data[m])) / scale))
    check("driver_relation", worst, 1e-8)

    # small eps-convergence table (figure fixture)
    rows = eps_convergence(grid, 0.005, 2.0, 0.05, [master_seed, master_seed + 1],
                           [0.8, 0.4, 0.2], theta, min_burn=2.0)
    write_csv(out / "eps_convergence.csv",
              ["component", "eps", "seed", "alpha", "norm", "diff_norm"],
              [(r["component"], r["eps"], r["seed"], r["alpha"], r["norm"],
                r["diff_norm"]) for r in rows])
    check("eps_rows", 0.0 if rows else 1.0, 0.0)

    # small regularity table (figure fixture)
    moll_r = Mollifier(0.005)
    table = regularity_table(theta)
    reg_rows = []
    for i in range(4):
        drv_r = build_driver(grid, 0.005, 10.0, 0.1, master_seed + i, theta, moll_r)
        slopes = driver_slopes(drv_r, part, 1, part.j_max - 1)
        for name in COMPONENTS:
            reg_rows.append((name, theta, moll_r.eps, master_seed + i,
                             slopes[name], table[name]))
    write_csv(out / "regularity.csv",
              ["component", "theta", "eps", "seed", "slope", "reference"],
              reg_rows)
    x_mean = np.mean([r[4] for r in reg_rows if r[0] == "X"])
    check("x_slope_rough", abs(float(x_mean) - table["X"]), 0.5)

    # Schauder probe (figure fixture)
    wn = SpectralField(grid, np.fft.fft2(rng.standard_normal((grid.n, grid.n))) / grid.n)
    pts = schauder_probe(wn, Dissipation(theta, shift=0), -1.2, 0.5,
                         np.logspace(-3, 0, 13), part)
    write_csv(out / "schauder.csv", ["t", "compensated_norm"], pts)
    vals = [v for _, v in pts]
    check("schauder_ratio", max(vals) / min(vals), 20.0)

    # Picard residual decay on a smooth driver (figure fixture)
    drv_s = smooth_driver(grid, theta, 0.005, 0.1, SMOOTH_MODES)
    exps = exponents(theta, 0.01, 0.025)
    zero = SpectralField.zero(grid)
    pair, report = picard_solve(drv_s, zero, zero, exps, 0.1, tol=1e-9,
                                max_iter=30)
    write_csv(out / "residuals.csv", ["iteration", "residual"],
              [(i + 1, r) for i, r in enumerate(report.residuals)])
    check("picard_converged", 0.0 if report.converged else 1.0, 0.0)

    write_csv(out / "selftest.csv", ["check", "status", "value", "threshold"],
              checks)
    return 0 if all(s == "PASS" for _, s, _, _ in checks) else 1


EXPERIMENTS = {
    "enhance": run_enhance,
    "solve": run_solve,
    "consistency": run_consistency,
    "eps-convergence": run_eps_convergence,
    "regularity": run_regularity,
    "chaos-check": run_chaos_check,
    "selftest": run_selftest,
}

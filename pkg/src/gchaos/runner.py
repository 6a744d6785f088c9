"""Verification suites behind the command-line subcommands.

Each ``run_*`` function takes a validated :class:`~gchaos.config.RunConfig`
and returns a :class:`Report`. Writing files is left to :func:`write_report`
so the suites stay usable from Python.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
import os
import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import expectation as ex
from . import ito, rng
from .catalog import Payoff
from .config import ConfigError, RunConfig
from .gheat import PdeConfig, solve_gheat
from .hermite import MAX_DEGREE, DegreeOverflowError, hermite_coeffs, hermite_coeffs_explicit, hermite_scaled_eval
from .scenario import TimeGrid, build_scenario, iter_batches, simulate_batch, write_path_csv

REPORT_VERSION = 1
PATH_BATCH = 1000


@dataclass
class Report:
    command: str
    config: dict
    checks: list[dict] = field(default_factory=list)
    tables: dict[str, list[dict]] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    def check(self, name: str, passed: bool, value=None, threshold=None, detail: str = "") -> bool:
        self.checks.append(
            {"name": name, "passed": bool(passed), "value": _num(value), "threshold": _num(threshold), "detail": detail}
        )
        return bool(passed)

    @property
    def failed(self) -> list[dict]:
        return [c for c in self.checks if not c["passed"]]

    @property
    def exit_status(self) -> int:
        return 1 if self.failed else 0

    def to_dict(self) -> dict:
        return {
            "report_version": REPORT_VERSION,
            "command": self.command,
            "config": self.config,
            "summary": {"checks": len(self.checks), "failed": len(self.failed)},
            "checks": self.checks,
            "tables": self.tables,
            **self.extra,
        }


def _num(v):
    if v is None or isinstance(v, str):
        return v
    v = float(v)
    return v if math.isfinite(v) else str(v)


def _order(e_coarse: float, e_fine: float, n_coarse: int, n_fine: int) -> float:
    if e_fine <= 0 or e_coarse <= 0:
        return float("inf") if e_fine < e_coarse else float("nan")
    return math.log(e_coarse / e_fine) / math.log(n_fine / n_coarse)


def _rms(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.sqrt(np.mean(a * a))) if a.size else 0.0


def _scale(n: int, theta, v):
    return np.maximum(1.0, np.maximum(np.abs(theta) ** n, np.asarray(v) ** (n / 2)))


def _scenario_seed(seed: int, tag: int) -> int:
    return int(rng.stream_keys(seed, rng.STREAM_SCENARIO, tag, 1)[0])


# -- theorem / recursion / corollary residuals --------------------------------------


def residual_table(cfg: RunConfig, orders: list[int]) -> tuple[list[dict], dict]:
    """Residual statistics per ``(n, N)`` on the theorem scenario.

    Orders whose Hermite coefficients are unavailable are reported in the
    returned error map instead of the table.
    """
    bounds, f_desc = cfg.volatility, cfg.time_function
    spec = cfg.theorem_spec
    errors: dict[int, str] = {}
    usable = []
    for n in orders:
        try:
            hermite_coeffs(n)
            usable.append(n)
        except DegreeOverflowError as exc:
            errors[n] = str(exc)
    rows = []
    for N in cfg.grid_sizes:
        grid = TimeGrid(cfg.horizon, N)
        scen = build_scenario(bounds, grid, spec, _scenario_seed(cfg.seed, N))
        f = ito.GridFunction.sample(grid, f_desc)
        one = ito.GridFunction.constant(grid, 1.0)
        acc = {n: {k: [] for k in ("I", "R", "Rs", "rel", "disc", "cor")} for n in usable}
        for batch in iter_batches(scen, cfg.paths_per_scenario, cfg.seed, PATH_BATCH):
            theta, v = ito.theta_and_norm_sq(f, batch)
            top = max(usable, default=0)
            levels = ito.iterated_levels(f, batch, top)
            for n in usable:
                I = math.factorial(n) * np.asarray(levels[n])
                R = hermite_scaled_eval(n, theta, v)
                a = acc[n]
                a["I"].append(I)
                a["R"].append(R)
                a["Rs"].append(ito.theorem1_rhs(f, batch, n, ito.SCENARIO))
                a["rel"].append(np.abs(I - R) / _scale(n, theta, v))
                if n >= 2:
                    a["disc"].append(
                        I - theta * math.factorial(n - 1) * levels[n - 1]
                        + (n - 1) * v * math.factorial(n - 2) * levels[n - 2]
                    )
                cf = ito.corollary_closed_form(batch, n)
                ref = ito.theorem1_rhs(one, batch, n) / math.factorial(n)
                a["cor"].append(np.abs(cf - ref) / np.maximum(1.0, np.abs(ref)))
        for n in usable:
            a = {k: np.concatenate(v) if v else np.zeros(0) for k, v in acc[n].items()}
            rms_I = _rms(a["I"])
            rms_err = _rms(a["I"] - a["R"])
            rows.append(
                {
                    "n": n,
                    "N": N,
                    "paths": int(a["I"].size),
                    "rms_I": rms_I,
                    "rms_error": rms_err,
                    "rel_rms_error": rms_err / rms_I if rms_I > 0 else rms_err,
                    "max_pathwise_rel": float(a["rel"].max()) if a["rel"].size else 0.0,
                    "rel_rms_error_scenario_qv": (_rms(a["I"] - a["Rs"]) / rms_I) if rms_I > 0 else _rms(a["I"] - a["Rs"]),
                    "recursion_discrete_rel_rms": (_rms(a["disc"]) / rms_I if rms_I > 0 else _rms(a["disc"]))
                    if n >= 2
                    else 0.0,
                    "corollary_max_rel": float(a["cor"].max()) if a["cor"].size else 0.0,
                }
            )
    return rows, errors


def _add_orders(rows: list[dict], key: str, exact_rel: float) -> None:
    by_n: dict[int, list[dict]] = {}
    for r in rows:
        by_n.setdefault(r["n"], []).append(r)
    for rs in by_n.values():
        rs.sort(key=lambda r: r["N"])
        rs[0][key + "_order"] = ""
        for a, b in zip(rs, rs[1:]):
            if a[key] <= exact_rel and b[key] <= exact_rel:
                b[key + "_order"] = "exact"
            else:
                b[key + "_order"] = _order(a[key], b[key], a["N"], b["N"])


def _convergence_checks(report: Report, rows, key: str, label: str, cfg: RunConfig) -> None:
    th = cfg.thresholds
    by_n: dict[int, list[dict]] = {}
    for r in rows:
        by_n.setdefault(r["n"], []).append(r)
    for n, rs in sorted(by_n.items()):
        if n < 2:
            continue
        finest = rs[-1]
        report.check(
            f"{label}-accuracy[n={n},N={finest['N']}]",
            finest[key] <= th.theorem_rel_rms,
            finest[key],
            th.theorem_rel_rms,
            "relative RMS residual at the finest grid",
        )
        for r in rs[1:]:
            o = r[key + "_order"]
            ok = o == "exact" or (isinstance(o, float) and o >= th.min_order)
            report.check(f"{label}-order[n={n},N={r['N']}]", ok, o if o != "exact" else None, th.min_order, f"order={o}")


def _closed_recursion_check(report: Report, cfg: RunConfig, orders: list[int]) -> list[dict]:
    gen_keys = rng.stream_keys(cfg.seed, rng.STREAM_SCENARIO, 0xEC3, 1)
    u = rng.uniforms(gen_keys, 200)[0]
    theta = (u[:100] - 0.5) * 20.0
    v = u[100:] * 10.0
    rows = []
    for n in orders:
        if n < 2:
            continue
        name = f"recursion-closed[n={n}]"
        try:
            res = hermite_scaled_eval(n, theta, v) - theta * hermite_scaled_eval(n - 1, theta, v) + (
                n - 1
            ) * v * hermite_scaled_eval(n - 2, theta, v)
        except DegreeOverflowError as exc:
            report.check(name, False, detail=str(exc))
            continue
        rel = float(np.max(np.abs(res) / _scale(n, theta, v)))
        report.check(name, rel <= cfg.thresholds.recursion_rel, rel, cfg.thresholds.recursion_rel)
        rows.append({"n": n, "max_rel_residual": rel})
    return rows


# -- moment bounds and PDE cross-checks ------------------------------------------------


def moment_rows(report: Report, cfg: RunConfig) -> list[dict]:
    bounds = cfg.volatility
    grid = TimeGrid(cfg.horizon, cfg.grid_sizes[0])
    scen = cfg.scenario_specs
    paths = cfg.moment_paths or cfg.paths_per_scenario
    checks = [ex.moment_bound_check(cfg.time_function, bounds, grid, scen, paths, cfg.seed)]
    for n in cfg.chaos_orders:
        if 1 <= n <= ex.MAX_CHAOS_ORDER:
            checks.append(ex.chaos_moment_bound_check(cfg.time_function, n, bounds, grid, scen, paths, cfg.seed))
    k = cfg.thresholds.se_multiple
    rows = []
    for c in checks:
        report.check(c.name, c.slack <= k * c.se, c.slack, k * c.se, f"lhs={c.lhs:.6g} rhs={c.rhs:.6g}")
        rows.append(c.to_dict())
    return rows


def crosscheck_rows(report: Report, cfg: RunConfig) -> list[dict]:
    bounds = cfg.volatility
    grid = TimeGrid(cfg.horizon, cfg.grid_sizes[0])
    pde = PdeConfig(bounds, cfg.horizon, cfg.pde.half_width, cfg.pde.space_steps, None, cfg.pde.cfl_target)
    th = cfg.thresholds
    rows = []
    for text in cfg.payoffs:
        phi = Payoff.parse(text)
        u0 = solve_gheat(phi, pde).value_at_zero
        rep = ex.upper_expectation(ex.TerminalPayoff(phi), bounds, grid, cfg.scenario_specs, cfg.paths_per_scenario, cfg.seed)
        gap = abs(u0 - rep.upper)
        allow = th.pde_mc_rel * abs(u0) + th.se_multiple * rep.upper_se
        report.check(f"pde-vs-mc[{phi}]", gap <= allow, gap, allow, f"pde={u0:.6g} mc={rep.upper:.6g}")
        rows.append({"payoff": str(phi), "pde": u0, "mc_upper": rep.upper, "mc_se": rep.upper_se, "gap": gap, "allowance": allow})
    return rows


# -- commands ------------------------------------------------------------------------


def run_verify(cfg: RunConfig) -> Report:
    """Full verification suite: identities, recursion, corollary, bounds, PDE agreement."""
    report = Report("verify", cfg.model_dump(mode="json"))
    th = cfg.thresholds
    rows, errors = residual_table(cfg, cfg.chaos_orders)
    for n, msg in errors.items():
        report.check(f"hermite-identity[n={n}]", False, detail=msg)
    _add_orders(rows, "rel_rms_error", th.exact_rel)
    _add_orders(rows, "recursion_discrete_rel_rms", th.exact_rel)
    for r in rows:
        if r["n"] <= 2:
            # orders 0..2 are algebraically exact on the grid with realized QV
            report.check(
                f"hermite-identity-exact[n={r['n']},N={r['N']}]",
                r["max_pathwise_rel"] <= th.exact_rel,
                r["max_pathwise_rel"],
                th.exact_rel,
            )
        report.check(
            f"corollary[n={r['n']},N={r['N']}]", r["corollary_max_rel"] <= th.corollary_rel, r["corollary_max_rel"], th.corollary_rel
        )
    _convergence_checks(report, rows, "rel_rms_error", "hermite-identity", cfg)
    _convergence_checks(report, rows, "recursion_discrete_rel_rms", "recursion-discrete", cfg)
    report.tables["residuals"] = rows
    report.tables["recursion_closed"] = _closed_recursion_check(report, cfg, cfg.chaos_orders)
    report.tables["moment_bounds"] = moment_rows(report, cfg)
    report.tables["pde_crosscheck"] = crosscheck_rows(report, cfg)
    return report


def run_convergence(cfg: RunConfig) -> Report:
    """Grid-refinement study of the Hermite identity residual."""
    if len(cfg.grid_sizes) < 3:
        raise ConfigError(f"grid_sizes: convergence needs at least 3 grid sizes, got {len(cfg.grid_sizes)}")
    report = Report("convergence", cfg.model_dump(mode="json"))
    rows, errors = residual_table(cfg, cfg.chaos_orders)
    for n, msg in errors.items():
        report.check(f"hermite-identity[n={n}]", False, detail=msg)
    _add_orders(rows, "rel_rms_error", cfg.thresholds.exact_rel)
    for rs_n in sorted({r["n"] for r in rows}):
        rs = [r for r in rows if r["n"] == rs_n]
        for r in rs[1:]:
            o = r["rel_rms_error_order"]
            ok = o == "exact" or (isinstance(o, float) and o >= cfg.thresholds.min_order)
            report.check(f"hermite-identity-order[n={rs_n},N={r['N']}]", ok, o if o != "exact" else None, cfg.thresholds.min_order, f"order={o}")
    report.tables["convergence"] = [
        {"n": r["n"], "N": r["N"], "rms_error": r["rms_error"], "rel_rms_error": r["rel_rms_error"], "order": r["rel_rms_error_order"]}
        for r in rows
    ]
    return report


def run_expectation(cfg: RunConfig) -> Report:
    """Upper and lower expectations for the configured functionals."""
    report = Report("expectation", cfg.model_dump(mode="json"))
    bounds = cfg.volatility
    grid = TimeGrid(cfg.horizon, cfg.grid_sizes[0])
    if cfg.functionals is not None:
        try:
            functionals = [ex.functional_from_dict(d, cfg.horizon) for d in cfg.functionals]
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"functionals: {exc}") from None
    else:
        functionals = [ex.TerminalPayoff(Payoff.parse(p)) for p in cfg.payoffs]
    k = cfg.thresholds.se_multiple
    out = []
    for X in functionals:
        up = ex.upper_expectation(X, bounds, grid, cfg.scenario_specs, cfg.paths_per_scenario, cfg.seed)
        allow = k * math.hypot(up.upper_se, up.lower_se)
        name = json.dumps(X.describe(), sort_keys=True)
        report.check(f"upper-ge-lower[{name}]", up.upper >= up.lower - allow, up.upper - up.lower, -allow)
        out.append(up.to_dict())
    report.extra["estimates"] = out
    return report


def run_gheat(cfg: RunConfig) -> tuple[Report, dict]:
    report = Report("gheat", cfg.model_dump(mode="json"))
    pde = PdeConfig(cfg.volatility, cfg.horizon, cfg.pde.half_width, cfg.pde.space_steps, None, cfg.pde.cfl_target)
    profiles = {}
    rows = []
    for text in cfg.payoffs:
        phi = Payoff.parse(text)
        sol = solve_gheat(phi, pde)
        profiles[str(phi)] = sol
        rows.append({"payoff": str(phi), "u_T_0": sol.value_at_zero})
    report.tables["gheat"] = rows
    report.extra["pde"] = {
        "half_width": pde.half_width,
        "space_steps": pde.space_steps,
        "time_steps": pde.time_steps,
        "cfl_number": pde.cfl_number,
    }
    return report, profiles


def hermite_table(max_degree: int) -> Report:
    if max_degree > MAX_DEGREE:
        raise ConfigError(f"max_degree: degree overflow, {max_degree} exceeds {MAX_DEGREE}")
    report = Report("hermite-table", {"max_degree": max_degree})
    rows = []
    for n in range(max_degree + 1):
        a, b = hermite_coeffs(n).coeffs, hermite_coeffs_explicit(n).coeffs
        report.check(f"hermite-coeffs[n={n}]", a == b, detail="recurrence vs explicit sum")
        rows.append({"n": n, "coeffs": " ".join(str(c) for c in a)})
    report.tables["hermite"] = rows
    return report


# -- output ----------------------------------------------------------------------------


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_")


def _write_csv(path: str, rows: list[dict]) -> None:
    if not rows:
        return
    keys = list(rows[0])
    for r in rows[1:]:
        keys += [k for k in r if k not in keys]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: (format(v, ".17g") if isinstance(v, float) else v) for k, v in r.items()})


def write_report(report: Report, out_dir: str, formats=("json", "csv")) -> list[str]:
    """Write ``<command>.json`` (+ ``.meta.json`` sidecar) and one CSV per table.

    The sidecar holds the wall-clock timestamp and the SHA-256 of the main
    JSON, so the main file is byte-identical across reruns.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    stem = os.path.join(out_dir, _safe(report.command))
    if "json" in formats:
        body = json.dumps(report.to_dict(), indent=2) + "\n"
        with open(stem + ".json", "w") as fh:
            fh.write(body)
        meta = {
            "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "report_sha256": hashlib.sha256(body.encode()).hexdigest(),
        }
        with open(stem + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=2)
        written += [stem + ".json", stem + ".meta.json"]
    if "csv" in formats:
        for name, rows in report.tables.items():
            p = f"{stem}_{_safe(name)}.csv"
            _write_csv(p, rows)
            written.append(p)
    return written


def export_sample_path(cfg: RunConfig, out_dir: str) -> str:
    """First path of the theorem scenario on the finest grid, as CSV."""
    grid = TimeGrid(cfg.horizon, cfg.grid_sizes[-1])
    N = grid.steps
    scen = build_scenario(cfg.volatility, grid, cfg.theorem_spec, _scenario_seed(cfg.seed, N))
    p = os.path.join(out_dir, "sample_path.csv")
    write_path_csv(simulate_batch(scen, 1, cfg.seed)[0], p)
    return p

"""Scenario runner: ``kktrace SCENARIO`` or ``kktrace --verify-all``.

Exit codes: 0 success, 2 a scenario check was falsified, 1 execution error.
The worker count for per-level spectra comes from ``KKTRACE_WORKERS``.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io, lie
from . import reduction as red
from . import spectrum as spec
from . import trace as tr
from .errors import ConfigurationError, KKTraceError

EXIT_OK, EXIT_ERROR, EXIT_FALSIFIED = 0, 1, 2
DIAG = "diagnostic"
PROV = "provenance"


def _q(value, tolerance, criterion):
    """A summary numeric tagged with its tolerance and the criterion it serves."""
    return {"value": value, "tolerance": tolerance, "criterion": criterion}


def workers() -> int:
    try:
        return max(1, int(os.environ.get("KKTRACE_WORKERS", "1")))
    except ValueError:
        raise ConfigurationError("KKTRACE_WORKERS must be an integer") from None


def _pmap(fn, items):
    n = workers()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items))  # map preserves input order


# ---------------------------------------------------------------- pipeline

def _is_flat(model) -> bool:
    try:
        spec.flat_parameters(model)
        return True
    except KKTraceError:
        return False


def compute_spectra(sc: io.Scenario, phi: tr.TestFunction) -> list:
    cfg = sc.spectrum
    method = cfg.get("method", "auto")
    if method == "auto":
        method = "flat" if _is_flat(sc.model) else "generic"
    ms = sc.m_values
    if method == "flat":
        return _pmap(lambda m: spec.flat_spectrum(sc.model, m, tr.required_window(m, sc.E, phi)), ms)
    if method != "generic":
        raise ConfigurationError(f"unknown spectrum method {method!r}")
    k_factor = float(cfg.get("k_factor", 0.6))
    pad = int(cfg.get("pad", 64))
    every = int(cfg.get("refine_every", 50))
    ends = {ms[0], ms[-1]}

    def one(m):
        K = int(cfg["grid"]) if "grid" in cfg else 2 * int(np.ceil(k_factor * m)) + pad
        refine = m in ends or (every > 0 and m % every == 0)
        return spec.generic_spectrum_1d(sc.model, m, tr.required_window(m, sc.E, phi), K, refine=refine)

    return _pmap(one, ms)


def run_pipeline(sc: io.Scenario, out: Path) -> dict:
    model = sc.model
    g, w = model.group, model.weight
    ell = lie.orbit_half_dimension(g, w)
    n = 1
    expected_exp = n + ell - 1
    phi = tr.TestFunction(**sc.test_function)
    qty = {}
    summary = {
        "scenario": sc.name, "schema_version": _q(io.SCHEMA_VERSION, 0, PROV),
        "seed": _q(sc.seed, 0, PROV), "model": model.name, "group": g.name,
        "E": _q(sc.E, 0, PROV), "quantities": qty,
    }

    series = weyl_fixed = None
    if sc.spectrum.get("enabled", True):
        tables = compute_spectra(sc, phi)
        io.write_csv(out / "spectrum.csv", ["m", "lambda", "multiplicity", "method"],
                     [(t.m, lam, mult, t.method) for t in tables
                      for lam, mult in zip(t.eigenvalues, t.multiplicities)])
        series = tr.mu(tables, sc.E, phi, n=n, ell=ell, d=tables[0].d_m)
        free = tr.weyl_fit(series)
        weyl_fixed = tr.weyl_fit(series, exponent=expected_exp)
        qty["weyl_exponent"] = _q(free.exponent, 0.05, 2)
        qty["weyl_exponent_expected"] = _q(expected_exp, 0, 2)
        qty["weyl_exponent_halfwidth"] = _q(free.halfwidth, 0.05, 2)
        qty["weyl_coefficient"] = _q(weyl_fixed.coefficient, 0.02, 3)
        pred = weyl_fixed.predict(series.m)
        io.write_csv(out / "series.csv", ["m", "mu_re", "mu_im", "weyl", "residual", "tail_bound"],
                     [(m, np.real(v), np.imag(v), p, np.real(v) - p, t)
                      for m, v, p, t in zip(series.m, series.values, pred, series.tail)])

    if sc.volume is not None:
        v = sc.volume
        est = red.energy_surface_volume(
            model, sc.E, n_samples=int(v.get("n_samples", 20000)), seed=sc.seed,
            rel_error=v.get("target_rel_error"), max_samples=int(v.get("max_samples", 2_000_000)),
            method=v.get("method", "conditional"))
        qty["volume"] = _q(est.value, 0.01, 3)
        qty["volume_stderr"] = _q(est.stderr, 0.01, 3)
        if model.abelian and _is_flat(model) and not np.any(model.connection(np.zeros(1))):
            beta, _, V = spec.flat_parameters(model)
            if V == 0:
                q0 = float(np.linalg.norm(model.charge()))
                exact = red.flat_u1_volume(sc.E, q0, model.circumference, beta)
                qty["volume_closed_form"] = _q(exact, 0.01, 3)
                qty["volume_rel_error"] = _q(abs(est.value - exact) / exact, 0.01, 3)
        if series is not None:
            C = tr.calibrate_cnd(series, est.value, phi, exponent=expected_exp)
            qty["calibrated_C"] = _q(C, 0.02, 3)

    if sc.orbits is not None:
        o = sc.orbits
        wins = o.get("windings", [-1, 1])
        orbits = red.find_periodic_orbits(
            model, sc.E, winding_range=(min(wins), max(wins)), seeds=o.get("seeds"),
            newton_tol=o.get("newton_tol", 1e-10), T_max=o.get("T_max", 200.0),
            n_x=o.get("n_x", 16), tol=o.get("tol", 1e-11))
        orbits = [orb for orb in orbits if orb.winding in wins]
        ntol = o.get("newton_tol", 1e-10)
        summary["orbit_atlas"] = [{
            "T": _q(orb.T, ntol, DIAG), "T_primitive": _q(orb.T_primitive, ntol, DIAG),
            "winding": _q(orb.winding, 0, DIAG),
            "holonomy_angle": _q(float(np.angle(orb.holonomy)), 1e-8, 4),
            "det_I_minus_P": _q(orb.det_I_minus_P, 1e-6, 5),
            "residual": _q(orb.residual, ntol, DIAG), "component_kind": orb.component_kind,
        } for orb in orbits]
        io.write_csv(out / "orbits.csv",
                     ["id", "T", "T_primitive", "winding", "holonomy_re", "holonomy_im",
                      "det_I_minus_P", "component_kind", "x0", "p0"],
                     [(j, orb.T, orb.T_primitive, orb.winding, orb.holonomy.real, orb.holonomy.imag,
                       orb.det_I_minus_P, orb.component_kind, orb.start.x, orb.start.p)
                      for j, orb in enumerate(orbits)])
        if series is not None and orbits:
            matches, peaks = tr.gutzwiller_fit(series, weyl_fixed, orbits, phi)
            bin_width = 2 * np.pi / len(series.m)
            by_angle = {round(mt.peak_angle, 12): mt for mt in matches if mt.matched}
            rows = []
            for pk in peaks:
                mt = by_angle.get(round(pk.angle, 12))
                rows.append((pk.angle, pk.amplitude, -1, "", "") if mt is None else
                            (pk.angle, pk.amplitude, mt.orbit_id, mt.predicted_amplitude, mt.ratio))
            io.write_csv(out / "peaks.csv",
                         ["angle", "amplitude", "matched_orbit", "predicted_amplitude", "ratio"], rows)
            summary["peak_matches"] = [{
                "orbit_id": _q(mt.orbit_id, 0, 4), "orientation": _q(mt.orientation, 0, 4),
                "matched": bool(mt.matched),
                "predicted_angle": _q(mt.predicted_angle, bin_width, 4),
                "peak_angle": _q(mt.peak_angle, bin_width, 4),
                "angle_error": _q(tr._angle_dist(mt.peak_angle, mt.predicted_angle), bin_width, 4),
                "amplitude": _q(mt.amplitude, 0.1, 5),
                "predicted_amplitude": _q(mt.predicted_amplitude, 0.1, 5),
                "ratio": _q(mt.ratio, 0.1, 5), "maslov_phase": _q(mt.maslov_phase, np.pi, DIAG),
            } for mt in matches]
            # the winding-1 orbit when present, else the shortest one
            best = matches[next((j for j, orb in enumerate(orbits) if orb.winding == 1), 0)]
            qty["peak_angle_error"] = _q(tr._angle_dist(best.peak_angle, best.predicted_angle), bin_width, 4)
            qty["amplitude_ratio"] = _q(best.ratio, 0.1, 5)
            r = float(sc.orbits.get("abel_r", 0.99))
            res = tr.TraceSeries(series.E, series.m, np.real(series.values) - weyl_fixed.predict(series.m),
                                 series.n, series.ell, series.d)
            grid = np.arange(16 * len(series.m)) * 2 * np.pi / (16 * len(series.m))
            ups = np.abs(tr.generating_function(res, grid, r))
            th = float(grid[np.argmax(ups)])
            # both orientations are admissible; report the nearer one
            err = min(tr._angle_dist(th, sgn * float(np.angle(orb.holonomy)))
                      for orb in orbits for sgn in (1, -1))
            qty["abel_peak_angle"] = _q(th, bin_width, 4)
            qty["abel_peak_error"] = _q(err, bin_width, 4)

    if sc.factorization is not None:
        f = sc.factorization
        rows, exact = [], True
        for m in f.get("m_values", list(range(1, 9))):
            rep = spec.factorization_check(model, m, grid_size=int(f.get("grid", 64)))
            exact &= rep.exact
            rows += [(m, lam, hm, b, rep.d_m) for lam, hm, b in rep.rows]
        io.write_csv(out / "factorization.csv",
                     ["m", "lambda", "hm_multiplicity", "bundle_multiplicity", "d_m"], rows)
        summary["factorization"] = {"exact": bool(exact), "levels": _q(len(f.get("m_values", range(1, 9))), 0, 7)}

    if sc.threshold is not None:
        t = sc.threshold
        rep = spec.positivity_threshold(model, int(t.get("m_max", 12)), grid_size=int(t.get("grid", 64)))
        io.write_csv(out / "threshold.csv", ["m", "n_nonreal", "min_Q", "n_modes", "ok"],
                     [(m, d["n_nonreal"], d["min_Q"], d["n_modes"], d["ok"])
                      for m, d in sorted(rep.per_level.items())])
        qty["m0"] = _q(rep.m0, 0, 9)
        qty["witness_below_m0"] = _q(int(rep.witness is not None), 0, 9)
    return summary


# ------------------------------------------------------------------ checks

def _lookup(summary, name):
    if name == "factorization_exact":
        return summary.get("factorization", {}).get("exact")
    ent = summary["quantities"].get(name)
    return None if ent is None else ent["value"]


def evaluate_checks(sc: io.Scenario, summary: dict, reference_values=None) -> list:
    results = []
    for chk in sc.checks:
        name, kind = chk["quantity"], chk.get("kind", "abs")
        val = _lookup(summary, name)
        expected = chk.get("expected")
        if "reference" in chk:
            expected = _reference_value(chk["reference"], name, reference_values)
        tol = chk.get("tolerance", 0.0)
        if val is None:
            ok, detail = False, "quantity not computed"
        elif kind == "true":
            ok, detail = val is True, f"{val}"
        elif kind == "abs":
            ok, detail = abs(val - expected) <= tol, f"|{val:.6g} - {expected:.6g}| <= {tol}"
        elif kind == "rel":
            ok, detail = abs(val - expected) <= tol * abs(expected), \
                f"|{val:.6g} / {expected:.6g} - 1| <= {tol}"
        elif kind == "le":
            expected = tol if expected is None else expected
            ok, detail = val <= expected, f"{val:.6g} <= {expected:.6g}"
        elif kind == "finite":
            ok, detail = bool(np.isfinite(val)), f"{val}"
        else:
            raise ConfigurationError(f"unknown check kind {kind!r}")
        results.append({"quantity": name, "criterion": chk["criterion"], "passed": bool(ok),
                        "detail": detail,
                        "expected": _q(expected, tol, chk["criterion"]) if expected is not None else None})
    return results


_REFERENCE_CACHE: dict = {}


def _reference_value(ref, name, provided):
    if provided is not None and ref in provided:
        return provided[ref]["quantities"][name]["value"]
    if ref not in _REFERENCE_CACHE:
        sc = io.load_scenario(io.resolve_scenario(ref))
        with tempfile.TemporaryDirectory() as tmp:
            _REFERENCE_CACHE[ref] = run_pipeline(sc, Path(tmp))
    return _REFERENCE_CACHE[ref]["quantities"][name]["value"]


# ---------------------------------------------------------------- commands

def run_scenario(path, out=None, seed=None, reference_values=None, log=print):
    """Run one scenario; returns ``(exit_code, summary or None)``."""
    try:
        sc = io.load_scenario(io.resolve_scenario(path))
        if seed is not None:
            sc.seed = int(seed)
        outdir = Path(out) if out is not None else Path(sc.output) / sc.name
        outdir.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        summary = run_pipeline(sc, outdir)
        checks = evaluate_checks(sc, summary, reference_values)
    except Exception as exc:  # every failure maps to exit 1
        log(f"error: {path}: {exc}")
        return EXIT_ERROR, None
    summary["checks"] = checks
    ok = all(c["passed"] for c in checks)
    summary["status"] = "pass" if ok else "fail"
    io.write_json(outdir / "summary.json", summary)
    for c in checks:
        log(f"  [{'PASS' if c['passed'] else 'FAIL'}] criterion {c['criterion']}: {c['quantity']} ({c['detail']})")
    log(f"{sc.name}: {summary['status']} in {time.perf_counter() - t0:.1f}s -> {outdir}")
    return (EXIT_OK if ok else EXIT_FALSIFIED), summary


def verify_all(out=None, seed=None, golden_dir=None, log=print):
    """Run every bundled scenario, compare against golden summaries, aggregate per criterion."""
    golden_dir = Path(golden_dir) if golden_dir is not None else io.data_dir() / "golden"
    base = Path(out) if out is not None else Path("out")
    per_criterion: dict = {}
    done: dict = {}
    code = EXIT_OK
    for path in io.bundled_scenarios():
        name = path.stem
        rc, summary = run_scenario(path, base / name, seed, done, log)
        if summary is None:
            code = EXIT_ERROR
            per_criterion.setdefault("execution", []).append(False)
            continue
        done[name] = summary
        for c in summary["checks"]:
            per_criterion.setdefault(c["criterion"], []).append(c["passed"])
        if rc != EXIT_OK and code == EXIT_OK:
            code = rc
        gpath = golden_dir / f"{name}.json"
        if gpath.exists() and seed is None:
            diffs = io.compare_golden(io.read_json(base / name / "summary.json"), io.read_json(gpath))
            if diffs:
                log(f"{name}: golden mismatch")
                for d in diffs:
                    log(f"  {d}")
                per_criterion.setdefault("golden", []).append(False)
                code = code or EXIT_FALSIFIED
            else:
                per_criterion.setdefault("golden", []).append(True)
    report = {str(k): all(v) for k, v in per_criterion.items()}
    log("criterion summary:")
    for k in sorted(report, key=lambda s: (not s.isdigit(), int(s) if s.isdigit() else 0, s)):
        log(f"  {k}: {'pass' if report[k] else 'FAIL'}")
    io.write_json(base / "verify_all.json", {"criteria": report, "exit_code": code})
    return code, report


def write_golden(out=None, log=print):
    base = Path(out) if out is not None else Path("out")
    gdir = io.data_dir() / "golden"
    done = {}
    for path in io.bundled_scenarios():
        rc, summary = run_scenario(path, base / path.stem, None, done, log)
        if summary is None or rc != EXIT_OK:
            return EXIT_ERROR
        done[path.stem] = summary
        io.write_json(gdir / f"{path.stem}.json", summary)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="kktrace", description="Run trace-formula scenarios.")
    p.add_argument("scenario", nargs="?", help="scenario file or bundled scenario name")
    p.add_argument("--out", help="output directory override")
    p.add_argument("--seed", type=int, help="seed override")
    p.add_argument("--verify-all", action="store_true", help="run every bundled scenario")
    p.add_argument("--list-scenarios", action="store_true", help="list bundled scenarios")
    p.add_argument("--write-golden", action="store_true", help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_scenarios:
        for path in io.bundled_scenarios():
            raw = io.read_json(path)
            print(f"{path.stem}\t{raw.get('description', '')}")
        return EXIT_OK
    if args.write_golden:
        return write_golden(args.out)
    if args.verify_all:
        return verify_all(args.out, args.seed)[0]
    if not args.scenario:
        build_parser().print_usage(sys.stderr)
        return EXIT_ERROR
    return run_scenario(args.scenario, args.out, args.seed)[0]


if __name__ == "__main__":
    sys.exit(main())

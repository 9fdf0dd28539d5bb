"""Batch driver: run identity suites and index experiments, emit reports.

Usage: etacalc <suite> [--config FILE] [--preset NAME] [--seed N]
                       [--out DIR] [--workers N]

Suites: identities (trace/boundary cocycle residuals), eta (eta invariants
over a parameter sweep), aps (excision on the preset models), gv
(foliated-toy cocycle identities), as (multiplier-pair suite).

Exit 0 when every residual is within tolerance, 1 on a tolerance failure
(per-identity diagnostics on stderr), 2 on a config error with no partial
artifacts.  For a fixed config and seed the CSV artifacts are
bit-identical across runs; runtimes live only in the JSON.
"""

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .cocycles import (
    hilbert_identity_check,
    melrose_s1,
    roe_sigma1,
    tau0_reg_equals_tau0_t,
    tau0_reg_of_commutator,
)
from .config import ConfigError, make_config, model_overrides
from .cyclic import hochschild_b
from .cylinder import GridGeometry, project_pi, shift_kernel
from .dirac import PRESETS, preset_model
from .foliated import (
    FoliatedToy,
    Weight,
    as_sigma_phi,
    as_tau_phi,
    as_tau_phi_r,
    d_multiplier,
    fmul_ext,
    gv_sigma,
    gv_tau,
    gv_tau_r,
    leaf_geometries,
    random_band,
    random_closed,
    random_foliated_extended,
    random_multiplier,
    suspend,
    weight_omega_compact,
    weight_omega_reg,
)
from .pairing import (
    eta_invariant,
    eta_scalar_integrand,
    eta_signature_fit,
    excision_check,
    rescaling_sweep,
)
from .reporting import (
    IDENTITY_COLS,
    identity_row,
    svg_line_plot,
    write_csv,
    write_json,
)
from .samples import random_extended, random_invariant


def _map(workers, fn, items):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _geo(rng, wmax=3, base=20, cap_factor=1, lam_room=1):
    """Random desk-scale geometry.

    cap_factor=2 leaves bandwidth room for one composition; lam_room sets
    how much compact depth the products may reach beyond 2w.
    """
    nY = int(rng.integers(1, 5))
    w = int(rng.integers(1, wmax + 1))
    lam0 = 2 * w + lam_room + int(rng.integers(0, 2))
    cap = cap_factor * w
    S = max(base, lam0 + 2 * cap + 2)
    volY = rng.uniform(0.5, 1.5, nY)
    hs = float(rng.uniform(0.5, 1.5))
    return GridGeometry(nY, S, S, cap, lam0, hs=hs, volY=volY), w, lam0


# ---------------------------------------------------------------------------
# identities suite


def _suite_identities(cfg):
    seed0, trials = cfg["seed"], cfg["trials"]
    tol, tol_lam = cfg["tol.identity"], cfg["tol.lambda"]
    tol_st = cfg["tol.stabilize"]

    def commutator_row(i):
        rng = np.random.default_rng(seed0 + i)
        g, w, lam0 = _geo(rng, cap_factor=2, lam_room=5)
        k0 = random_extended(g, w, int(rng.integers(1, 4)), rng)
        k1 = random_extended(g, w, int(rng.integers(1, 4)), rng)
        res = abs(tau0_reg_of_commutator(k0, k1)
                  - roe_sigma1(project_pi(k0), project_pi(k1)))
        return identity_row("commutator-trace-boundary-pairing", 0,
                            seed0 + i, res, tol)

    def lambda_row(i):
        rng = np.random.default_rng(seed0 + i)
        g, w, lam0 = _geo(rng, wmax=2, base=24, lam_room=6)
        l0 = random_invariant(g, w, rng)
        l1 = random_invariant(g, w, rng)
        vals = [roe_sigma1(l0, l1, lam) for lam in range(6)]
        res = max(abs(v - vals[0]) for v in vals[1:])
        return identity_row("sigma1-lambda-independence", 1, seed0 + i,
                            res, tol_lam)

    def freqform_row(i):
        rng = np.random.default_rng(seed0 + i)
        g, w, lam0 = _geo(rng)
        l0 = random_invariant(g, w, rng)
        l1 = random_invariant(g, w, rng)
        res = abs(roe_sigma1(l0, l1) - melrose_s1(l0, l1))
        return identity_row("sigma1-frequency-vs-coefficient-form", 1,
                            seed0 + i, res, tol)

    def hilbert_row(i):
        rng = np.random.default_rng(seed0 + i)
        g, w, lam0 = _geo(rng)
        res = hilbert_identity_check(random_invariant(g, w, rng))
        return identity_row("hilbert-transform-square-identity", 0,
                            seed0 + i, res, tol)

    def stabilize_row(i):
        rng = np.random.default_rng(seed0 + i)
        g, w, lam0 = _geo(rng, lam_room=4)
        res = tau0_reg_equals_tau0_t(
            random_extended(g, w, int(rng.integers(1, 4)), rng))
        return identity_row("regularized-trace-factors-through-t", 0,
                            seed0 + i, res, tol_st)

    def weight_stabilize_row(i):
        rng = np.random.default_rng(seed0 + i)
        toy = _swap_toy(rng)
        w8 = Weight(toy, toy.fundamental_mask())
        geoms = leaf_geometries(toy, S=20, L=20, w=4, lambda0=8)
        ks = [random_foliated_extended(toy, geoms, w=1, lam=1, rng=rng)
              for _ in range(2)]
        k = fmul_ext(ks[0], ks[1])
        res = abs(weight_omega_reg(k, w8)
                  - weight_omega_compact(k.deviation(), w8))
        return identity_row("masked-regularized-trace-factors-through-t",
                            0, seed0 + i, res, tol_st)

    rows = []
    rows += _map(cfg["workers"], commutator_row, range(trials or 100))
    rows += _map(cfg["workers"], lambda_row, range(trials or 50))
    rows += _map(cfg["workers"], freqform_row, range(trials or 100))
    g1 = GridGeometry(1, 20, 20, 1, 6)
    anchor = abs(roe_sigma1(shift_kernel(g1, -1), shift_kernel(g1, 1))
                 - (-1.0))
    rows.append(identity_row("sigma1-shift-anchor", 1, seed0, anchor,
                             tol_lam))
    rows += _map(cfg["workers"], hilbert_row, range(trials or 50))
    rows += _map(cfg["workers"], stabilize_row, range(trials or 50))
    rows += _map(cfg["workers"], weight_stabilize_row, range(trials or 10))
    return rows, {}, []


# ---------------------------------------------------------------------------
# foliated suites


def _swap_toy(rng, nB=4, nT=2):
    group = [
        (np.arange(nT), np.arange(nB)),
        (np.roll(np.arange(nT), nT // 2), np.roll(np.arange(nB), nB // 2)),
    ]
    toy = FoliatedToy(nB, nT, group)
    return FoliatedToy(nB, nT, group, vol=toy.stamp_sites(rng, 0.5, 1.5))


def _suite_gv(cfg):
    seed0, trials = cfg["seed"], cfg["trials"]
    tol = cfg["tol.identity"]

    def closed_rows(i):
        rng = np.random.default_rng(seed0 + i)
        nB = int(rng.choice([4, 6, 8]))
        toy = _swap_toy(rng, nB=nB)
        w8 = Weight(toy, toy.fundamental_mask())
        phi = random_multiplier(toy, rng)
        phidot = random_multiplier(toy, rng)
        out = []

        sig = gv_sigma(w8, phi, phidot)
        ells = [random_band(toy, 1, rng) for _ in range(5)]
        scale = max(abs(sig(*ells[:4])), 1.0)
        out.append(identity_row(
            "gv-eta-cochain-is-hochschild-closed", 3, seed0 + i,
            abs(hochschild_b(sig)(*ells)) / scale, tol))

        tau = gv_tau(w8, phi, phidot)
        closed = [random_closed(toy, rng) for _ in range(4)]
        tscale = max(abs(tau(*closed[:3])), 1.0)
        out.append(identity_row(
            "gv-pair-cocycle-is-hochschild-closed", 2, seed0 + i,
            abs(hochschild_b(tau)(*closed)) / tscale, tol))

        vals = []
        m2 = toy.fundamental_mask(rng=np.random.default_rng(seed0 + i + 1))
        for lam in (0, 1, 3):
            for m in (w8.mask, m2):
                vals.append(gv_sigma(Weight(toy, m), phi, phidot,
                                     lam=lam)(*ells[:4]))
        lres = max(abs(v - vals[0]) for v in vals[1:])
        out.append(identity_row(
            "gv-eta-cochain-lambda-and-mask-independence", 3, seed0 + i,
            lres / max(abs(vals[0]), 1.0), tol))

        sus = suspend(w8, [d_multiplier(phi), d_multiplier(phidot)])
        out.append(identity_row(
            "suspension-matches-eta-cochain", 3, seed0 + i,
            abs(sus(*ells[:4]) - sig(*ells[:4])) / scale, tol))
        return out

    def relative_rows(i):
        rng = np.random.default_rng(seed0 + i)
        toy = _swap_toy(rng)
        w8 = Weight(toy, toy.fundamental_mask())
        geoms = leaf_geometries(toy, S=20, L=20, w=4, lambda0=8)
        ks = [random_foliated_extended(toy, geoms, w=1, lam=1, rng=rng)
              for _ in range(4)]
        phi = random_multiplier(toy, rng)
        phidot = random_multiplier(toy, rng)
        lhs = hochschild_b(gv_tau_r(w8, phi, phidot))(*ks)
        rhs = gv_sigma(w8, phi, phidot, lam=0,
                       chi_order="chi-first")(*[k.tail() for k in ks])
        res = abs(lhs - rhs) / max(abs(rhs), 1.0)
        return [identity_row("gv-relative-cocycle-condition", 2,
                             seed0 + i, res, tol)]

    rows = []
    for chunk in _map(cfg["workers"], closed_rows, range(trials or 50)):
        rows += chunk
    for chunk in _map(cfg["workers"], relative_rows, range(trials or 12)):
        rows += chunk
    return rows, {}, []


def _suite_as(cfg):
    seed0, trials = cfg["seed"], cfg["trials"]
    tol = cfg["tol.identity"]

    def closed_rows(i):
        rng = np.random.default_rng(seed0 + i)
        toy = _swap_toy(rng, nB=int(rng.choice([4, 6, 8])))
        w8 = Weight(toy, toy.fundamental_mask())
        f_terms = [(random_multiplier(toy, rng), random_multiplier(toy, rng))
                   for _ in range(2)]
        tau = as_tau_phi(w8, f_terms)
        closed = [random_closed(toy, rng) for _ in range(4)]
        scale = max(abs(tau(*closed[:3])), 1.0)
        return [identity_row(
            "multiplier-pair-cocycle-is-hochschild-closed", 2, seed0 + i,
            abs(hochschild_b(tau)(*closed)) / scale, tol)]

    def relative_rows(i):
        rng = np.random.default_rng(seed0 + i)
        toy = _swap_toy(rng)
        w8 = Weight(toy, toy.fundamental_mask())
        geoms = leaf_geometries(toy, S=20, L=20, w=4, lambda0=8)
        ks = [random_foliated_extended(toy, geoms, w=1, lam=1, rng=rng)
              for _ in range(4)]
        f_terms = [(random_multiplier(toy, rng), random_multiplier(toy, rng))
                   for _ in range(2)]
        lhs = hochschild_b(as_tau_phi_r(w8, f_terms))(*ks)
        rhs = as_sigma_phi(w8, f_terms, lam=0,
                           chi_order="chi-first")(*[k.tail() for k in ks])
        res = abs(lhs - rhs) / max(abs(rhs), 1.0)
        return [identity_row("multiplier-pair-relative-condition", 2,
                             seed0 + i, res, tol)]

    rows = []
    for chunk in _map(cfg["workers"], closed_rows, range(trials or 50)):
        rows += chunk
    for chunk in _map(cfg["workers"], relative_rows, range(trials or 12)):
        rows += chunk
    return rows, {}, []


# ---------------------------------------------------------------------------
# eta suite


def _suite_eta(cfg):
    seed0 = cfg["seed"]
    tol = cfg["tol.eta"]
    avals = (0.25, 0.5, 1.0, 2.0, 4.0)
    rows, reports = [], {}
    svgs = []
    for kind in ("wassermann", "graph"):
        etas = {}
        for a in avals:
            for s in (1.0, -1.0):
                rep = eta_invariant(np.array([s * a]), kind=kind, tol=tol)
                etas[s * a] = rep
        for a in avals:
            rows.append(identity_row(
                f"eta-odd-parity[{kind},a={a:g}]", 1, seed0,
                abs(etas[a]["value"] + etas[-a]["value"]), tol))
            rows.append(identity_row(
                f"eta-tail-bound[{kind},a={a:g}]", 1, seed0,
                etas[a]["tail_estimate"], tol))
            rows.append(identity_row(
                f"eta-halves-signature[{kind},a={a:g}]", 1, seed0,
                abs(etas[a]["value"] + 0.5), 1e-6))
        rows.append(identity_row(
            f"eta-scale-invariance[{kind}]", 1, seed0,
            max(abs(etas[a]["value"] - etas[1.0]["value"]) for a in avals),
            1e-6))
        fit = eta_signature_fit(
            [np.diag([1.0]), np.diag([1.0, 1.0]), np.diag([1.0, -1.0, 1.0])],
            kind=kind, tol=tol)
        reports[kind] = {
            "values": {repr(a): etas[a]["value"] for a in sorted(etas)},
            "tails": {repr(a): etas[a]["tail_estimate"]
                      for a in sorted(etas)},
            "signature_fit": fit,
        }
        # integrand decay data for the plot
        ts = np.geomspace(0.05, 12.0, 60)
        mags = [abs(eta_scalar_integrand(1.0, t, kind)) for t in ts]
        svgs.append((f"eta_integrand_{kind}.svg",
                     [(kind, ts, mags)],
                     dict(title=f"eta integrand decay ({kind})",
                          xlabel="t", ylabel="|I(t)|", logy=True)))
        reports[kind]["integrand_t"] = ts.tolist()
        reports[kind]["integrand_mag"] = mags
    curves = [(kind,
               [a for a in avals],
               [reports[kind]["values"][repr(a)] for a in avals])
              for kind in ("wassermann", "graph")]
    svgs.append(("eta_sweep.svg", curves,
                 dict(title="eta over the gap sweep", xlabel="a",
                      ylabel="eta(a)")))
    return rows, reports, svgs


# ---------------------------------------------------------------------------
# aps suite


def _suite_aps(cfg):
    seed0 = cfg["seed"]
    tol_rel, tol_abs = cfg["tol.rel"], cfg["tol.abs"]
    names = PRESETS if cfg["preset"] == "all" else (cfg["preset"],)
    over = model_overrides(cfg)
    rows, reports, svgs = [], {}, []
    for name in names:
        t0 = time.perf_counter()
        models = preset_model(name, **over)
        rep = excision_check(models, kind=cfg["model.kind"],
                             tol_rel=tol_rel, tol_abs=tol_abs)
        d = rep.as_dict()
        d["runtime_s"] = time.perf_counter() - t0
        reports[name] = d
        rows.append(identity_row(
            f"excision-absolute-vs-relative[{name}]", 0, seed0,
            d["abs_vs_rel"], tol_rel))
        rows.append(identity_row(
            f"excision-absolute-vs-flow-oracle[{name}]", 0, seed0,
            d["abs_vs_oracle"], tol_abs))
        rows.append(identity_row(
            f"index-projector-idempotency[{name}]", 0, seed0,
            max(m["idempotency"] for m in d["modes"]), 1e-9))
        rows.append(identity_row(
            f"window-restriction-invariant[{name}]", 0, seed0,
            max(m["restriction_residual"] for m in d["modes"]), 1e-8))
        crossing = max(d["modes"], key=lambda m: abs(m["oracle_index"]))
        ts = [t for t, v in crossing["integrand_samples"]]
        mags = [abs(v) for t, v in crossing["integrand_samples"]]
        svgs.append((f"aps_integrand_{name}.svg",
                     [(crossing["name"], ts, mags)],
                     dict(title=f"pairing integrand decay ({name})",
                          xlabel="t", ylabel="|I(t)|", logy=True)))
    sweep_name = "tanh-crossing" if cfg["preset"] == "all" else names[0]
    model = preset_model(sweep_name, **over)[0]
    t0 = time.perf_counter()
    sweep = rescaling_sweep(model, kind=cfg["model.kind"])
    sweep["runtime_s"] = time.perf_counter() - t0
    reports["rescaling_sweep"] = {"preset": sweep_name, **sweep}
    rows.append(identity_row(
        f"index-scale-invariance[{sweep_name}]", 0, seed0,
        sweep["spread"], tol_rel))
    scales = [r["scale"] for r in sweep["rows"]]
    svgs.append(("aps_sweep.svg",
                 [("bulk", scales, [r["bulk"] for r in sweep["rows"]]),
                  ("eta term", scales,
                   [r["eta_term"] for r in sweep["rows"]]),
                  ("total", scales, [r["total"] for r in sweep["rows"]])],
                 dict(title=f"bulk/eta split over s ({sweep_name})",
                      xlabel="s", ylabel="value")))
    return rows, reports, svgs


# ---------------------------------------------------------------------------
# driver


_SUITES = {
    "identities": _suite_identities,
    "eta": _suite_eta,
    "aps": _suite_aps,
    "gv": _suite_gv,
    "as": _suite_as,
}


def run_suite(cfg):
    """Run one suite, write artifacts, return the exit status."""
    t0 = time.perf_counter()
    rows, extra, svgs = _SUITES[cfg["suite"]](cfg)
    runtime = time.perf_counter() - t0
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    base = os.path.join(out, cfg["suite"])
    write_csv(base + "_results.csv", rows, IDENTITY_COLS)
    failures = [r for r in rows if not r["pass"]]
    write_json(base + "_report.json", {
        "config": cfg,
        "rows": rows,
        "extra": extra,
        "n_pass": len(rows) - len(failures),
        "n_fail": len(failures),
        "runtime_s": runtime,
        "version": __version__,
    })
    for fname, series, kw in svgs:
        svg_line_plot(series, os.path.join(out, fname), **kw)
    for r in failures:
        print(
            "FAIL %s seed=%d residual=%.3e tolerance=%.0e"
            % (r["identity"], r["seed"], r["residual"], r["tolerance"]),
            file=sys.stderr,
        )
    print("%s: %d checks, %d failed, artifacts in %s"
          % (cfg["suite"], len(rows), len(failures), out))
    return 1 if failures else 0


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="etacalc",
        description="identity suites and index experiments on lattice "
                    "cylinder ends",
    )
    ap.add_argument("suite", help="one of: identities, eta, aps, gv, as")
    ap.add_argument("--config", help="flat key = value config file")
    ap.add_argument("--preset", help="restrict model suite to one preset")
    ap.add_argument("--seed", type=int, help="base seed for random trials")
    ap.add_argument("--out", help="output directory "
                                  "(default $ETACALC_OUT_DIR or etacalc-out)")
    ap.add_argument("--workers", type=int, help="parallel workers")
    args = ap.parse_args(argv)
    try:
        cfg = make_config(args.suite, config_file=args.config,
                          preset=args.preset, seed=args.seed, out=args.out,
                          workers=args.workers)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    return run_suite(cfg)


if __name__ == "__main__":
    sys.exit(main())

"""Index pairings: absolute (parametrix side), relative (bulk + eta side),
the boundary eta invariant, and the excision comparison.

The absolute pairing traces the Connes-Skandalis remainders.  The relative
pairing evaluates the stabilized trace of the window idempotent minus the
reference and adds the transgression integral of the degree-1 cocycle along
the projection path.  Both must agree with the spectral flow oracle.

The standalone eta invariant of a boundary family uses the continuum
frequency line: the symbol i*nu + A diagonalizes in A's eigenbasis, so each
eigenvalue contributes a closed-form 2x2 integrand over (t, nu).  This form
is exactly odd under A -> -A and exactly scale invariant, which the lattice
frequency circle is not.
"""

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss as _leggauss

from .cylinder import MalformedKernel, WindowTooSmall
from .dirac import (
    BoundaryOperator,
    ProjectionPath,
    aps_parametrix,
    connes_skandalis_projector,
    eta_integrand_lattice,
    graph_projection,
    spectral_flow,
    wassermann_projection,
)
from .windowcalc import (
    WindowOperator,
    retail,
    wop_identity,
    wop_reg_trace,
    wop_trace,
)

CHERN2_NORMALIZATION = 1.0  # degree-2 pairing constant, frozen here


# ---------------------------------------------------------------------------
# quadrature helpers


@lru_cache(maxsize=8)
def leggauss(nodes):
    return _leggauss(nodes)


def _gauss_panels(f, lo, hi, panels, nodes=16):
    x, w = leggauss(nodes)
    total = 0.0
    edges = np.linspace(lo, hi, panels + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        u = 0.5 * (b - a) * x + 0.5 * (a + b)
        total += 0.5 * (b - a) * np.dot(w, [f(v) for v in u])
    return total


def adaptive_log_quadrature(f, ulo, uhi, tol, start=8, max_panels=512):
    """Composite Gauss panels in u, doubled until two refinements agree."""
    panels = start
    prev = _gauss_panels(f, ulo, uhi, panels)
    while panels < max_panels:
        panels *= 2
        val = _gauss_panels(f, ulo, uhi, panels)
        diff = abs(val - prev)
        if diff <= tol:
            return val, panels, diff
        prev = val
    raise WindowTooSmall(
        f"quadrature did not settle below {tol:.0e} at {panels} panels"
    )


# ---------------------------------------------------------------------------
# boundary eta invariant (continuum frequency line)


def _eta_blocks_scalar(a, t, nu, kind):
    """(p, dp/dt, dp/dnu) for the projection path of t*(i nu + a).

    Blocks are returned as (b11, b12, b22) with b21 the conjugate of b12;
    the diagonal derivative blocks obey d22 = -d11.
    """
    r2 = nu * nu + a * a
    y = t * t * r2
    if kind == "graph":
        f0 = 1.0 / (1.0 + y)
        zb = t * (a - 1j * nu)
        p = (f0, f0 * zb, 1.0 - f0)
        d11 = -2.0 * y * f0 * f0 / t
        d12 = (a - 1j * nu) * f0 * f0 * (1.0 - y)
        e11 = -2.0 * t * t * nu * f0 * f0
        e12 = e11 * zb - 1j * t * f0
    elif kind == "wassermann":
        r = np.sqrt(r2)
        e = np.exp(-y)
        E = np.exp(-y / 2.0)
        G = np.sqrt(np.maximum(-np.expm1(-y), 1e-300))
        ph = (a - 1j * nu) / r
        p = (e, E * G * ph, 1.0 - e)
        d11 = -(2.0 * y / t) * e
        d12 = E * (y / t) * (2.0 * e - 1.0) / G * ph
        yn = 2.0 * t * t * nu
        e11 = -yn * e
        e12 = E * (yn / 2.0) * (2.0 * e - 1.0) / G * ph \
            + E * G * (-1j * a * ph / r2)
    else:
        raise ValueError(f"unknown path kind '{kind}'")
    return p, (d11, d12), (e11, e12)


def eta_scalar_integrand(a, t, kind, nodes=512):
    """Transgression integrand at time t for one eigenvalue of A.

    Integrates -(i/2pi) tr([dp/dt, p] dp/dnu) over the frequency line
    (nu = tan(theta) substitution).
    """
    x, w = leggauss(nodes)
    th = 0.5 * np.pi * x
    wt = 0.5 * np.pi * w
    nu = np.tan(th)
    jac = 1.0 / np.cos(th) ** 2
    (p11, p12, p22), (d11, d12), (e11, e12) = _eta_blocks_scalar(
        a, t, nu, kind
    )
    p21, d21, e21 = np.conj(p12), np.conj(d12), np.conj(e12)
    d22, e22 = -d11, -e11
    c11 = d12 * p21 - p12 * d21
    c12 = d11 * p12 + d12 * p22 - p11 * d12 - p12 * d22
    c21 = d21 * p11 + d22 * p21 - p21 * d11 - p22 * d21
    c22 = d21 * p12 - p21 * d12
    tr = c11 * e11 + c12 * e21 + c21 * e12 + c22 * e22
    return float(np.real((-1j / (2 * np.pi)) * np.sum(wt * jac * tr)))


def _eta_scalar(a, kind, t_lower, tol, nodes):
    def I(t):
        return eta_scalar_integrand(a, t, kind, nodes)

    if t_lower > 0.0:
        ulo = np.log(t_lower)
        small_t = I(t_lower)
    else:
        small_t = I(1e-6 / abs(a))
        ulo = min(np.log(tol * 1e-2 / max(abs(small_t), tol)), -16.0)
    uhi = np.log(8.0 / abs(a)) if kind == "wassermann" else np.log(20.0 / abs(a))
    for _ in range(60):
        T = np.exp(uhi)
        if abs(I(T)) * T <= tol * 1e-2:
            break
        uhi += 0.5
    else:
        raise WindowTooSmall("eta integrand did not decay; no gap?")
    T = np.exp(uhi)
    # tail estimate from the measured local decay exponent
    i1, i0 = abs(I(0.9 * T)), abs(I(T))
    if i0 == 0.0:
        q, tail = np.inf, 0.0
    else:
        q = np.log(max(i1, 1e-300) / i0) / np.log(1.0 / 0.9)
        tail = i0 * T / max(q - 1.0, 1.0)
    val, panels, diff = adaptive_log_quadrature(
        lambda u: I(np.exp(u)) * np.exp(u), ulo, uhi, tol / 8.0
    )
    return {
        "eigenvalue": float(a),
        "value": val,
        "panels": panels,
        "quad_diff": diff,
        "t_floor": float(np.exp(ulo)),
        "t_max": float(T),
        "tail_estimate": float(tail),
        "decay_exponent": float(q),
        "small_t_integrand": float(small_t),
    }


def eta_invariant(A, kind="wassermann", degree=1, t_lower=0.0, tol=1e-8,
                  eps_gap=1e-8, nodes=512):
    """Boundary eta invariant by transgression over the frequency line.

    A may be a Hermitian matrix, a vector of eigenvalues, or a constant
    BoundaryOperator.  The value is the sum of closed-form scalar
    contributions over the spectrum (block additivity is exact), each an
    adaptive double quadrature in (t, nu) from t_lower out to where the
    measured tail falls below the tolerance.

    Only the degree-1 transgression is realized; the degree-3 form needs
    the localized weights of a foliated model.
    """
    if degree != 1:
        raise ValueError(
            "only the degree-1 transgression is realized; the degree-3 "
            "form needs localized foliation weights"
        )
    if isinstance(A, BoundaryOperator):
        if not A.constant:
            raise MalformedKernel(
                "eta invariant needs a constant boundary family"
            )
        A = A.left
    A = np.asarray(A)
    if A.ndim == 2:
        eigs = np.linalg.eigvalsh(A)
    else:
        eigs = np.real(np.atleast_1d(A))
    margin = float(np.abs(eigs).min()) if eigs.size else 0.0
    if margin < eps_gap:
        raise WindowTooSmall(
            f"spectral gap failure: eta integral would diverge "
            f"(margin {margin:.3e} < {eps_gap:.0e})"
        )
    memo = {}
    blocks = []
    for a in eigs:
        key = float(a)
        if key not in memo:
            memo[key] = _eta_scalar(key, kind, t_lower, tol, nodes)
        blocks.append(memo[key])
    total = float(sum(b["value"] for b in blocks))
    tail = float(sum(b["tail_estimate"] for b in blocks))
    return {
        "value": total,
        "blocks": blocks,
        "kind": kind,
        "degree": degree,
        "t_lower": float(t_lower),
        "tol": float(tol),
        "gap_margin": margin,
        "tail_estimate": tail,
    }


def eta_signature_fit(A_list, kind="wassermann", tol=1e-8):
    """Least-squares ratio eta(A) ~ rho * signature(A) over a family.

    The ratio is measured, not assumed; the report carries the residual.
    """
    etas, sigs = [], []
    for A in A_list:
        rep = eta_invariant(A, kind=kind, tol=tol)
        eigs = np.linalg.eigvalsh(np.asarray(A)) if np.asarray(A).ndim == 2 \
            else np.real(np.atleast_1d(np.asarray(A)))
        etas.append(rep["value"])
        sigs.append(float(np.sign(eigs).sum()))
    etas, sigs = np.array(etas), np.array(sigs)
    denom = float(np.dot(sigs, sigs))
    rho = float(np.dot(sigs, etas) / denom) if denom > 0 else 0.0
    resid = float(np.abs(etas - rho * sigs).max())
    return {"rho": rho, "residual": resid,
            "etas": etas.tolist(), "signatures": sigs.tolist()}


# ---------------------------------------------------------------------------
# relative pairing


def window_idempotent(model, kind="wassermann", path=None, lam=10,
                      edge_skip=12, tol=1e-8, M=256):
    """Projection of the window operator, deep blocks declared from the
    path-start cylinder band.

    The retail residual is the restriction invariant: the window idempotent
    must restrict to the path start on deep slices within tol.
    """
    if path is None:
        path = ProjectionPath(model.bsym, kind, M=M)
    proj = wassermann_projection if kind == "wassermann" else graph_projection
    P = proj(model.Dplus.matrix)
    n = model.nslices * model.F
    F = model.F
    ct = path.band_coeffs(path.ts[0])
    top = WindowOperator(model.S, model.L, F, P[:n, :n])
    bot = WindowOperator(model.S, model.L, F, P[n:, n:])
    rtop, res_top = retail(top, ct[:, :F, :F], lam, tol, edge_skip=edge_skip)
    rbot, res_bot = retail(bot, ct[:, F:, F:], lam, tol, edge_skip=edge_skip)
    return {
        "top": rtop,
        "bot": rbot,
        "path": path,
        "kind": kind,
        "restriction_residual": max(res_top, res_bot),
        "idempotency": float(np.abs(P @ P - P).max()),
        "lam": lam,
        "edge_skip": edge_skip,
    }


def relative_pairing(P, path=None, rc=None, tol=1e-8, end_tol=1e-10,
                     tail_tol=1e-10):
    """Stabilized bulk trace plus the transgression along the path.

    ``P`` is the dict from window_idempotent (top/bot WindowOperators with
    declared tails).  ``rc`` may replace the degree-1 frequency cocycle
    with another evaluator sigma(path, t).
    """
    if path is None:
        path = P["path"]
    pend, _ = path.at(path.ts[-1])
    F = path.F
    offd = max(
        float(np.abs(pend[:, :F, F:]).max()),
        float(np.abs(pend[:, F:, :F]).max()),
    )
    if offd > end_tol:
        raise MalformedKernel(
            f"path endpoint is not block diagonal (off-diagonal {offd:.3e})"
        )
    tmax_val = abs(eta_integrand_lattice(path, path.ts[-1]))
    if tmax_val > tail_tol:
        raise WindowTooSmall(
            f"path not converged at t_max (integrand {tmax_val:.3e} > "
            f"{tail_tol:.0e}); extend the t grid"
        )
    top, bot = P["top"], P["bot"]
    ident = wop_identity(top.S, top.L, top.F)
    bulk = wop_reg_trace(top) + wop_reg_trace(bot - ident)
    sigma = rc if rc is not None else eta_integrand_lattice
    samples = [(float(t), complex(sigma(path, float(t)))) for t in path.ts]
    imag_max = max(abs(v.imag) for _, v in samples)

    def f(u):
        return sigma(path, float(np.exp(u))).real * np.exp(u)

    ulo, uhi = np.log(path.ts[0]), np.log(path.ts[-1])
    eta_term, panels, diff = adaptive_log_quadrature(f, ulo, uhi, tol / 8.0)
    decay = _decay_fit(samples, path.gap)
    return {
        "bulk": complex(bulk),
        "eta_term": float(eta_term),
        "total": float(bulk.real + eta_term),
        "bulk_imag": float(bulk.imag),
        "integrand_imag_max": imag_max,
        "panels": panels,
        "quad_diff": diff,
        "integrand_samples": samples,
        "decay_fit": decay,
        "restriction_residual": P.get("restriction_residual", 0.0),
        "endpoint_offdiag": offd,
    }


def _decay_fit(samples, gap):
    """Fit |I(t)| ~ C exp(-c t^2 gap^2) over the usable sample range."""
    ts = np.array([t for t, v in samples])
    mags = np.array([abs(v) for _, v in samples])
    keep = mags > 1e-280
    if keep.sum() < 2:
        return {"C": 0.0, "c": 0.0, "gap": float(gap)}
    x = (ts[keep] * gap) ** 2
    y = np.log(mags[keep])
    c, logC = np.polyfit(x, y, 1)
    return {"C": float(np.exp(logC)), "c": float(-c), "gap": float(gap)}


# ---------------------------------------------------------------------------
# absolute pairing


def absolute_pairing(e, tau=None, degree=0):
    """Pair the index idempotent against a cyclic cocycle.

    degree 0: graded trace of the remainder blocks, tr(S+^2) - tr(S-^2);
    the blocks must be compact (a non-compact difference has no trace).

    degree 2: CHERN2_NORMALIZATION * (tau(e,e,e) - tau(e1,e1,e1)) for a
    trilinear ``tau`` on plain matrices over the doubled window.
    """
    if degree == 0:
        sp2, _, _, sm2 = e["blocks"]
        if not (sp2.compact and sm2.compact):
            raise ValueError(
                "absolute pairing needs compact remainder blocks"
            )
        return wop_trace(sp2) - wop_trace(sm2)
    if degree == 2:
        if tau is None:
            raise ValueError("degree-2 pairing needs a trilinear cocycle")
        E = e["matrix"]
        n = E.shape[0] // 2
        E1 = np.zeros_like(E)
        E1[n:, n:] = np.eye(n)
        return CHERN2_NORMALIZATION * (tau(E, E, E) - tau(E1, E1, E1))
    raise ValueError(f"absolute pairing degree {degree} not realized")


# ---------------------------------------------------------------------------
# excision


class PairingReport:
    """Everything both sides of the excision comparison produced."""

    def __init__(self, **kw):
        self.data = kw

    def __getitem__(self, k):
        return self.data[k]

    def as_dict(self):
        return self.data

    @property
    def ok(self):
        return all(self.data["checks"].values())


def _single_excision(model, kind, rc, lam, edge_skip):
    par = aps_parametrix(model)
    cs = connes_skandalis_projector(
        par["Q"], par["Splus"], par["Sminus"], model.Dplus
    )
    absolute = absolute_pairing(cs, degree=0)
    P = window_idempotent(model, kind=kind, lam=lam, edge_skip=edge_skip)
    rel = relative_pairing(P)
    if rc is not None:
        rel = relative_pairing(P, rc=rc)
    flow, crossings = spectral_flow(model.profile)
    return {
        "name": model.name,
        "S": model.S, "L": model.L, "F": model.F,
        "hs": model.hs, "scale": model.scale,
        "absolute": complex(absolute),
        "relative_bulk": rel["bulk"].real,
        "relative_eta": rel["eta_term"],
        "relative_total": rel["total"],
        "oracle_index": flow,
        "crossings": crossings,
        "idempotency": cs["idempotency"],
        "remainder_depth": par["depth"],
        "qband": par["qband"],
        "qcut": par["qcut"],
        "glue": par["glue"],
        "path_gap": P["path"].gap,
        "path_tmax": float(P["path"].ts[-1]),
        "restriction_residual": rel["restriction_residual"],
        "panels": rel["panels"],
        "quad_diff": rel["quad_diff"],
        "decay_fit": rel["decay_fit"],
        "integrand_samples": rel["integrand_samples"],
    }


def excision_check(models, kind="wassermann", rc=None, tol_rel=1e-4,
                   tol_abs=1e-6, lam=10, edge_skip=12):
    """Absolute vs relative vs oracle on a model or a mode family.

    Per-mode quantities add; the report keeps every intermediate so a
    failure is diagnosable.  Tolerance failures set the check flags rather
    than raising (callers decide the exit path).
    """
    if not isinstance(models, (list, tuple)):
        models = [models]
    modes = [_single_excision(m, kind, rc, lam, edge_skip) for m in models]
    absolute = sum(m["absolute"] for m in modes)
    rel_bulk = sum(m["relative_bulk"] for m in modes)
    rel_eta = sum(m["relative_eta"] for m in modes)
    rel_total = sum(m["relative_total"] for m in modes)
    oracle = sum(m["oracle_index"] for m in modes)
    checks = {
        "abs_vs_rel": abs(absolute.real - rel_total) <= tol_rel,
        "abs_vs_oracle": abs(absolute - oracle) <= tol_abs,
        "abs_imag": abs(absolute.imag) <= tol_abs,
    }
    return PairingReport(
        name=modes[0]["name"].split("[")[0] if modes else "",
        kind=kind,
        absolute_real=absolute.real,
        absolute_imag=absolute.imag,
        relative_bulk=rel_bulk,
        relative_eta=rel_eta,
        relative_total=rel_total,
        oracle_index=int(oracle),
        abs_vs_rel=abs(absolute.real - rel_total),
        abs_vs_oracle=abs(absolute - oracle),
        tol_rel=tol_rel,
        tol_abs=tol_abs,
        checks=checks,
        modes=modes,
    )


def rescaling_sweep(model, scales=(0.5, 1.0, 2.0), kind="wassermann",
                    lam=10, edge_skip=12):
    """Relative totals for s*D over a scale sweep.

    The bulk/eta split moves with s; the total must not (it is the index).
    """
    rows = []
    for s in scales:
        ms = model.rescaled(s)
        P = window_idempotent(ms, kind=kind, lam=lam, edge_skip=edge_skip)
        rel = relative_pairing(P)
        rows.append({
            "scale": float(s),
            "bulk": rel["bulk"].real,
            "eta_term": rel["eta_term"],
            "total": rel["total"],
        })
    totals = [r["total"] for r in rows]
    return {
        "rows": rows,
        "spread": float(max(totals) - min(totals)),
    }

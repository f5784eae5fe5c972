"""Quadratic interaction symbols of the capillary system and their geometry.

Writing the surface system in the complex variable u = Lambda^(1/2) h + i psi
and expanding to quadratic order, the interaction of the Fourier modes
eta and xi - eta producing output at xi is governed by two elementary symbols

    m1(xi, eta) = |xi|^(1/2) / |eta|^(1/2) (xi . (xi - eta) - |xi| |xi - eta|)
    m2(xi, eta) = eta . (xi - eta) + |eta| |xi - eta|

(m1 drives the elevation channel acting on the pair (Lambda^(1/2) h, psi);
m2/2 drives the potential channel on (psi, psi)), together with the swapped
variant m1(xi, xi - eta).  Substituting h and psi in terms of u and its
conjugate yields the three interaction channels

    d_t u = -i Lambda^(3/2) u + T_{m_pp}(u, u) + T_{m_mm}(ub, ub)
            + T_{m_pm}(u, ub) + higher order,

    m_pp = -(i/4) (m1(xi, eta) + m2(xi, eta) / 2)
    m_mm = +(i/4) (m1(xi, eta) - m2(xi, eta) / 2)
    m_pm = +(i/4) (m1(xi, eta) - m1(xi, xi - eta) + m2(xi, eta)),

a derivation pinned numerically by :func:`quadratic_consistency`.  The
oscillation of each channel is carried by the phase

    phi_{s1 s2}(xi, eta) = |xi|^(3/2) + s1 |eta|^(3/2) + s2 |xi - eta|^(3/2),

whose zero set (time resonances), eta-critical set (space resonances), and
their intersection control the long-time behavior.  This module provides
closed-form evaluations, the vanishing-order certification of each symbol
against its declared homogeneity class, the resonant-set searches, the
cutoff partition splitting the (-,-) channel, and the symbols produced by
normal forms and eta-integrations by parts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

__all__ = [
    "BilinearSymbol",
    "Phase",
    "m1",
    "m2",
    "m1_swapped",
    "mtilde1",
    "mtilde2",
    "m_pp",
    "m_mm",
    "m_pm",
    "channel_symbol",
    "phase",
    "grad_eta_phase",
    "hessian_eta_phase",
    "make_phase",
    "named_symbol",
    "resonant_sets",
    "vanishing_order_fit",
    "cutoff_partition",
    "cutoff_scan",
    "ibp_symbols",
    "quadratic_consistency",
]


def _norm(v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.asarray(v, dtype=float) ** 2, axis=-1))


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(np.asarray(a, dtype=float) * np.asarray(b, dtype=float), axis=-1)


# ---------------------------------------------------------------------------
# elementary symbols
# ---------------------------------------------------------------------------


def mtilde1(xi, eta):
    """xi . (xi - eta) - |xi| |xi - eta| (the unweighted elevation symbol)."""
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    d = xi - eta
    return _dot(xi, d) - _norm(xi) * _norm(d)


def mtilde2(xi, eta):
    """eta . (xi - eta) + |eta| |xi - eta|."""
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    d = xi - eta
    return _dot(eta, d) + _norm(eta) * _norm(d)


def m1(xi, eta):
    """|xi|^(1/2) |eta|^(-1/2) mtilde1; 0 at the excluded ray eta = 0."""
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    ne = _norm(eta)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sqrt(_norm(xi)) / np.sqrt(ne) * mtilde1(xi, eta)
    return np.where(ne == 0.0, 0.0, out)


def m2(xi, eta):
    return mtilde2(xi, eta)


def m1_swapped(xi, eta):
    """m1 with the interacting pair exchanged: m1(xi, xi - eta)."""
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    return m1(xi, xi - eta)


# coefficients of the three channels over (m1, m2, m1_swapped); fixed by the
# u/ub substitution and frozen after quadratic_consistency certified them
CHANNEL_COEFFS = {
    "pp": (-0.25j, -0.125j, 0.0),
    "mm": (0.25j, -0.125j, 0.0),
    "pm": (0.25j, 0.25j, -0.25j),
}


def channel_symbol(signs: str):
    """Interaction symbol m_{s1 s2}(xi, eta) as a callable."""
    c1, c2, c1s = CHANNEL_COEFFS[signs]

    def sym(xi, eta):
        out = c1 * m1(xi, eta) + c2 * m2(xi, eta)
        if c1s != 0.0:
            out = out + c1s * m1_swapped(xi, eta)
        return out

    sym.__name__ = f"m_{signs}"
    return sym


m_pp = channel_symbol("pp")
m_mm = channel_symbol("mm")
m_pm = channel_symbol("pm")


# ---------------------------------------------------------------------------
# phases
# ---------------------------------------------------------------------------


_SIGNS = {"pp": (1.0, 1.0), "pm": (1.0, -1.0), "mm": (-1.0, -1.0), "mp": (-1.0, 1.0)}


def phase(signs: str):
    """phi(xi, eta) = |xi|^(3/2) + s1 |eta|^(3/2) + s2 |xi - eta|^(3/2)."""
    s1, s2 = _SIGNS[signs]

    def ev(xi, eta):
        xi = np.asarray(xi, float)
        eta = np.asarray(eta, float)
        return _norm(xi) ** 1.5 + s1 * _norm(eta) ** 1.5 + s2 * _norm(xi - eta) ** 1.5

    return ev


def grad_eta_phase(signs: str):
    """eta-gradient (3/2)(s1 eta/|eta|^(1/2) - s2 (xi-eta)/|xi-eta|^(1/2))."""
    s1, s2 = _SIGNS[signs]

    def ev(xi, eta):
        xi = np.asarray(xi, float)
        eta = np.asarray(eta, float)
        d = xi - eta
        ne = _norm(eta)[..., None]
        nd = _norm(d)[..., None]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 1.5 * (s1 * eta / np.sqrt(ne) - s2 * d / np.sqrt(nd))
        return out

    return ev


def _dgain(v: np.ndarray) -> np.ndarray:
    """Jacobian of v -> v / |v|^(1/2): |v|^(-1/2) (I - vhat vhat^T / 2)."""
    v = np.asarray(v, float)
    nv = _norm(v)[..., None, None]
    vhat = v / np.sqrt(np.sum(v**2, axis=-1))[..., None]
    eye = np.eye(2)
    return (eye - 0.5 * vhat[..., :, None] * vhat[..., None, :]) / np.sqrt(nv)


def hessian_eta_phase(signs: str):
    """eta-Hessian of the phase, (3/2)(s1 Dg(eta) + s2 Dg(xi - eta))."""
    s1, s2 = _SIGNS[signs]

    def ev(xi, eta):
        xi = np.asarray(xi, float)
        eta = np.asarray(eta, float)
        return 1.5 * (s1 * _dgain(eta) + s2 * _dgain(xi - eta))

    return ev


@dataclass
class BilinearSymbol:
    """A bilinear symbol with its declared homogeneity and vanishing orders.

    ``declared_class`` is (beta, c1, c2, c3): homogeneous of degree beta and
    vanishing at least to orders c1, c2, c3 as xi, eta, xi - eta tend to 0.
    """

    eval: callable
    declared_class: tuple[float, float, float, float]
    name: str

    def __call__(self, xi, eta):
        return self.eval(xi, eta)

    def homogeneity_defect(self, rng: np.random.Generator, trials: int = 64) -> float:
        """Max relative defect of eval(lam xi, lam eta) = lam^beta eval over
        lam in {2, 1/2} at random nondegenerate points."""
        beta = self.declared_class[0]
        worst = 0.0
        pts = 0
        while pts < trials:
            xi = rng.uniform(-2, 2, 2)
            eta = rng.uniform(-2, 2, 2)
            if min(np.hypot(*xi), np.hypot(*eta), np.hypot(*(xi - eta))) < 0.2:
                continue
            pts += 1
            v = self.eval(xi, eta)
            if abs(v) < 1e-12:
                continue
            for lam in (2.0, 0.5):
                w = self.eval(lam * xi, lam * eta)
                worst = max(worst, abs(w - lam**beta * v) / abs(lam**beta * v))
        return worst


@dataclass
class Phase:
    """Phase descriptor for a sign pair, with gradient closure."""

    signs: tuple[float, float]
    eval: callable = field(repr=False)
    grad_eta: callable = field(repr=False)

    def __call__(self, xi, eta):
        return self.eval(xi, eta)


def make_phase(signs: str) -> Phase:
    return Phase(_SIGNS[signs], phase(signs), grad_eta_phase(signs))


def named_symbol(name: str) -> BilinearSymbol:
    """Symbol registry with the declared classes used by the certification."""
    table = {
        "m1": (m1, (2.0, 1.5, 1.5, 1.0)),
        "m2": (m2, (2.0, 2.0, 1.0, 1.0)),
        "m1_swapped": (m1_swapped, (2.0, 1.5, 1.0, 1.5)),
        "m_pp": (m_pp, (2.0, 1.5, 1.0, 1.0)),
        "m_mm": (m_mm, (2.0, 1.5, 1.0, 1.0)),
        "m_pm": (m_pm, (2.0, 1.5, 1.0, 1.0)),
        "nf_pp": (ibp_symbols("pp")["normal_form"], (0.5, 1.5, 1.0, 1.0)),
        "ibp_pm": (ibp_symbols("pm")["eta_ibp"], (1.5, 0.5, 1.0, 1.0)),
    }
    if name not in table:
        raise ValueError(f"unknown symbol {name!r}; choose from {sorted(table)}")
    fn, cls = table[name]
    return BilinearSymbol(fn, cls, name)


# ---------------------------------------------------------------------------
# resonant sets
# ---------------------------------------------------------------------------


def _min_scan(objective, rng: np.random.Generator, n_grid: int = 48,
              n_starts: int = 12, exclusion: float = 1e-3,
              box: float = 3.0) -> dict:
    """Scale-invariant minimization over xi with |eta| = 1 fixed by homogeneity.

    A coarse grid scan over xi in [-box, box]^2 (excluding a neighborhood of
    the singular rays) seeds quasi-Newton refinements from the best starts.
    """
    eta = np.array([1.0, 0.0])
    xs = np.linspace(-box, box, n_grid)
    XI = np.stack(np.meshgrid(xs, xs, indexing="ij"), axis=-1).reshape(-1, 2)
    ok = (_norm(XI) > exclusion) & (_norm(XI - eta) > exclusion)
    vals = np.array([objective(x, eta) for x in XI[ok]])
    order = np.argsort(vals)
    seeds = XI[ok][order[:n_starts]]
    best_val, best_xi = np.inf, None
    for seed in seeds:
        res = minimize(lambda x: objective(x, eta), seed, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 400})
        v = float(res.fun)
        if v < best_val:
            best_val, best_xi = v, res.x
    return {"min": best_val, "argmin_xi": best_xi, "eta": eta,
            "grid_min": float(vals.min())}


def resonant_sets(signs: str, rng: np.random.Generator | None = None,
                  exclusion: float = 1e-3) -> dict:
    """Locate the zero sets of phi, of grad_eta phi, and their intersection.

    Everything is scanned at |eta| = 1 (the sets are cones).  For the mixed
    channel the combined residual concentrates on xi = 0; for the (+,+)
    channel phi has no zero away from the origin; for the (-,-) channel the
    eta-critical set is the ray xi = 2 eta and the joint set only the origin.
    """
    rng = rng or np.random.default_rng(0)
    ph = phase(signs)
    gr = grad_eta_phase(signs)

    def obj_t(x, e):
        return abs(ph(x, e))

    def obj_s(x, e):
        return float(np.hypot(*gr(x, e)))

    def obj_r(x, e):
        return obj_t(x, e) + obj_s(x, e)

    out = {"signs": signs}
    out["time"] = _min_scan(obj_t, rng, exclusion=exclusion)
    out["space"] = _min_scan(obj_s, rng, exclusion=exclusion)
    out["joint"] = _min_scan(obj_r, rng, exclusion=exclusion)
    return out


# ---------------------------------------------------------------------------
# vanishing-order certification
# ---------------------------------------------------------------------------


def _regime_points(regime: str, s: float, direction: np.ndarray):
    """(xi, eta) with the regime's small variable at size s along direction."""
    base = np.array([1.0, 0.0])
    if regime == "xi_small":
        return s * direction, base
    if regime == "eta_small":
        return base, s * direction
    if regime == "diff_small":
        return base + s * direction, base
    raise ValueError(f"unknown regime {regime!r}")


def vanishing_order_fit(symbol, regime: str, decades: int = 3,
                        n_directions: int = 32, points_per_decade: int = 8,
                        s_max: float = 1e-1) -> dict:
    """Log-log slope of max-over-directions |symbol| against the small scale.

    The envelope over uniformly spread directions of the small variable is
    regressed over at least ``decades`` decades; the slope estimates the
    vanishing order in the regime (faster-than-declared is compliant).
    """
    if decades < 3:
        raise ValueError("need at least 3 decades for a stable fit")
    fn = symbol.eval if isinstance(symbol, BilinearSymbol) else symbol
    angles = np.arange(n_directions) * (2.0 * np.pi / n_directions) + 0.01
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    scales = np.logspace(np.log10(s_max) - decades, np.log10(s_max),
                         decades * points_per_decade)
    env = np.empty_like(scales)
    for i, s in enumerate(scales):
        vals = []
        for d in dirs:
            xi, eta = _regime_points(regime, s, d)
            vals.append(abs(fn(xi, eta)))
        env[i] = max(vals)
    if np.max(env) == 0.0:
        return {"slope": np.inf, "r_squared": 1.0, "n_samples": len(scales)}
    logs, loge = np.log(scales), np.log(env)
    slope, intercept = np.polyfit(logs, loge, 1)
    fitted = slope * logs + intercept
    ss_res = float(np.sum((loge - fitted) ** 2))
    ss_tot = float(np.sum((loge - loge.mean()) ** 2))
    return {"slope": float(slope), "r_squared": 1.0 - ss_res / ss_tot,
            "n_samples": len(scales)}


# ---------------------------------------------------------------------------
# cutoff partition of the (-,-) channel
# ---------------------------------------------------------------------------


def _rho_bump(a):
    """Smooth plateau: 1 for a <= 1, 0 for a >= 2 (same glue as the dyadic bump)."""
    from .spectral import transition_bump

    return transition_bump(np.asarray(a, float))


def cutoff_partition(xi, eta) -> tuple[np.ndarray, np.ndarray]:
    """(chi_T, chi_S): chi_T = rho(200 |xi - 2 eta| / |xi|), chi_S = 1 - chi_T.

    On supp chi_T the phase phi_-- stays bounded below by a fixed multiple of
    |eta|^(3/2) (time-nonresonant region); on supp chi_S the eta-gradient is
    bounded below by a multiple of |xi|^(1/2) + |eta|^(1/2).
    """
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    nxi = _norm(xi)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = 200.0 * _norm(xi - 2.0 * eta) / nxi
    arg = np.where(nxi == 0.0, np.inf, arg)
    chi_t = _rho_bump(arg)
    return chi_t, 1.0 - chi_t


def cutoff_scan(n_radial: int = 48, n_angular: int = 96, n_tube: int = 60) -> dict:
    """Verify the lower bounds on each piece of the (-,-) partition.

    Returns the minimum of phi_-- / |eta|^(3/2) over supp chi_T and of
    |grad_eta phi_--| / (|xi|^(1/2) + |eta|^(1/2)) over supp chi_S, scanned at
    |eta| = 1 by homogeneity.  The chi_T support is a thin cone around
    xi = 2 eta (relative half-width 1/100), so it is sampled by a dedicated
    tube parametrization on top of the global polar scan.
    """
    ph = phase("mm")
    gr = grad_eta_phase("mm")
    eta = np.array([1.0, 0.0])
    perp = np.array([0.0, 1.0])
    t_min, s_min = np.inf, np.inf

    def visit(xi):
        nonlocal t_min, s_min
        if min(np.hypot(*xi), np.hypot(*(xi - eta)), np.hypot(*xi)) < 1e-9:
            return
        chi_t, chi_s = cutoff_partition(xi, eta)
        if chi_t > 0.0:
            t_min = min(t_min, float(ph(xi, eta)))
        if chi_s > 1e-12:
            ratio = np.hypot(*gr(xi, eta)) / (np.sqrt(np.hypot(*xi)) + 1.0)
            s_min = min(s_min, float(ratio))

    # tube around xi = 2 eta, covering the full chi_T support and its fringe
    for along in np.linspace(-0.05, 0.05, n_tube):
        for across in np.linspace(-0.05, 0.05, n_tube):
            visit((2.0 + along) * eta + across * perp)
    # global polar scan for the chi_S piece
    for r in np.linspace(0.05, 6.0, n_radial):
        for a in np.linspace(0.0, 2.0 * np.pi, n_angular, endpoint=False):
            visit(r * np.array([np.cos(a), np.sin(a)]))
    bound_t = (200.0 / 101.0) ** 1.5 - 1.0 - (101.0 / 99.0) ** 1.5
    return {"min_phi_over_eta32_on_T": float(t_min),
            "min_grad_ratio_on_S": float(s_min),
            "analytic_T_bound": bound_t}


# ---------------------------------------------------------------------------
# normal-form and integration-by-parts symbols
# ---------------------------------------------------------------------------


def ibp_symbols(signs: str) -> dict:
    """Symbols produced by removing the quadratic term of one channel.

    normal_form: m / phi (time integration by parts; for (+,+) the phase has
    no zero away from the origin so this loses only 3/2 powers).
    eta_ibp: m grad_eta phi / |grad_eta phi|^2, the vector symbol of an
    eta-integration by parts (the route for the mixed channel, resonant only
    at xi = 0).  eta_ibp_div is its analytic eta-divergence, cross-checked
    against finite differences in the tests.
    """
    m = channel_symbol(signs)
    ph = phase(signs)
    gr = grad_eta_phase(signs)
    hess = hessian_eta_phase(signs)
    gm = _grad_eta_channel(signs)

    def normal_form(xi, eta):
        with np.errstate(divide="ignore", invalid="ignore"):
            return m(xi, eta) / ph(xi, eta)

    def eta_ibp(xi, eta):
        g = gr(xi, eta)
        g2 = np.sum(g**2, axis=-1)[..., None]
        with np.errstate(divide="ignore", invalid="ignore"):
            return m(xi, eta)[..., None] * g / g2

    def eta_ibp_norm(xi, eta):
        return np.sqrt(np.sum(np.abs(eta_ibp(xi, eta)) ** 2, axis=-1))

    def eta_ibp_div(xi, eta):
        g = gr(xi, eta)
        g2 = np.sum(g**2, axis=-1)
        h = hess(xi, eta)
        lap = h[..., 0, 0] + h[..., 1, 1]
        ghg = np.einsum("...i,...ij,...j->...", g, h, g)
        dm = gm(xi, eta)
        mval = m(xi, eta)
        return (np.sum(dm * g, axis=-1) + mval * lap) / g2 - 2.0 * mval * ghg / g2**2

    return {"normal_form": normal_form, "eta_ibp": eta_ibp,
            "eta_ibp_norm": eta_ibp_norm, "eta_ibp_div": eta_ibp_div}


def _grad_eta_m1(xi, eta):
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    d = xi - eta
    nx, ne, nd = _norm(xi)[..., None], _norm(eta)[..., None], _norm(d)[..., None]
    mt = mtilde1(xi, eta)[..., None]
    grad_mt = -xi + nx * d / nd
    return np.sqrt(nx) * (-0.5 * eta / ne**2.5 * mt + grad_mt / np.sqrt(ne))


def _grad_eta_m2(xi, eta):
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    d = xi - eta
    ne, nd = _norm(eta)[..., None], _norm(d)[..., None]
    return (xi - 2.0 * eta) + nd * eta / ne - ne * d / nd


def _grad_eta_m1_swapped(xi, eta):
    # d/d_eta m1(xi, xi - eta) = -(d_2 m1)(xi, xi - eta)
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    z = xi - eta
    nx, nz = _norm(xi)[..., None], _norm(z)[..., None]
    w = xi - z    # equals eta
    nw = _norm(w)[..., None]
    mt = (_dot(xi, w) - _norm(xi) * _norm(w))[..., None]
    grad2 = np.sqrt(nx) * (-0.5 * z / nz**2.5 * mt
                           + (-xi + nx * w / nw) / np.sqrt(nz))
    return -grad2


def _grad_eta_channel(signs: str):
    c1, c2, c1s = CHANNEL_COEFFS[signs]

    def ev(xi, eta):
        out = c1 * _grad_eta_m1(xi, eta) + c2 * _grad_eta_m2(xi, eta)
        if c1s != 0.0:
            out = out + c1s * _grad_eta_m1_swapped(xi, eta)
        return out

    return ev


# ---------------------------------------------------------------------------
# consistency of the channel decomposition
# ---------------------------------------------------------------------------


def quadratic_consistency(trials: int, grid=None, rng: np.random.Generator | None = None,
                          amplitude: float = 1e-2) -> dict:
    """Check the channel symbols against the direct quadratic right-hand side.

    For random small localized states, the T-form
    T_{m_pp}(u,u) + T_{m_mm}(ub,ub) + T_{m_pm}(u,ub) must reproduce
    Lambda^(1/2)(-div(h grad psi) - Lambda(h Lambda psi))
    + i(-|grad psi|^2/2 + |Lambda psi|^2/2) computed in (h, psi) space.
    Returns the worst relative residual (relative to amplitude^2).
    """
    from .pseudo_product import PseudoProductPlan, t_m
    from .spectral import (GridSpec, SpectralField, apply_multiplier,
                           lam_symbol, norm_l2, random_localized_field)
    from .dno import dno_series_terms

    grid = grid or GridSpec(32, 2.0 * np.pi)
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    rows = []
    for _ in range(trials):
        h = random_localized_field(grid, rng, k_scale=3).real_part()
        h = SpectralField(grid, h.coeffs * grid.dealias_mask, True) * amplitude
        psi = random_localized_field(grid, rng, k_scale=3).real_part()
        psi = SpectralField(grid, psi.coeffs * grid.dealias_mask, True) * amplitude

        g1 = dno_series_terms(h, psi, 1)[1]
        lam_psi = apply_multiplier(psi, lam_symbol(1.0))
        gp1 = psi.coeffs * 1j * grid.wavenumbers[0]
        gp2 = psi.coeffs * 1j * grid.wavenumbers[1]
        from .spectral import forward_transform, inverse_transform
        p1 = inverse_transform(SpectralField(grid, gp1, False)).real
        p2 = inverse_transform(SpectralField(grid, gp2, False)).real
        q_psi = forward_transform(0.5 * (lam_psi.values**2 - p1**2 - p2**2), grid).dealias()
        direct = apply_multiplier(g1, lam_symbol(0.5)).coeffs + 1j * q_psi.coeffs

        lam_h = apply_multiplier(h, lam_symbol(0.5))
        u = SpectralField(grid, lam_h.coeffs + 1j * psi.coeffs, False)
        ub = u.conj()
        tpp = t_m(u, u, PseudoProductPlan(grid, named_symbol("m_pp")))
        tmm = t_m(ub, ub, PseudoProductPlan(grid, named_symbol("m_mm")))
        tpm = t_m(u, ub, PseudoProductPlan(grid, named_symbol("m_pm")))
        tform = tpp.coeffs + tmm.coeffs + tpm.coeffs

        num = norm_l2(SpectralField(grid, np.asarray(direct) - tform, False))
        resid = num / amplitude**2
        rows.append(resid)
        worst = max(worst, resid)
    return {"trials": trials, "worst_residual": worst,
            "mean_residual": float(np.mean(rows)), "amplitude": amplitude}

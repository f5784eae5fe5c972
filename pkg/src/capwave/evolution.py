"""Time integration of the capillary surface-wave system.

The dynamical variables are the surface elevation h and the potential trace
psi; the complex combination u = Lambda^(1/2) h + i psi turns the linearized
system into d_t u = -i Lambda^(3/2) u, whose flow the stepper applies exactly
as an integrating factor.  The nonlinear right-hand side is

    d_t h   = G(h) psi                      (truncated multilinear series)
    d_t psi = c kappa(h) - |grad psi|^2 / 2
              + (G(h) psi + grad h . grad psi)^2 / (2 (1 + |grad h|^2))

with every product dealiased.  The integrator is a Lawson (integrating
factor) Runge-Kutta 4 scheme in u: the dispersive stiffness is diagonal in
Fourier space, so the exact linear factor removes the linear CFL constraint.

The stepping kernel works on raw coefficient arrays for speed; the
SpectralField route in :mod:`capwave.dno` is the readable reference the
kernel is tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from . import _fastmath
from .spectral import (
    GridSpec,
    SpectralField,
    VectorFieldTag,
    apply_multiplier,
    apply_vector_field,
    lam_symbol,
    norm_l2,
    norm_lp,
    sobolev_symbol,
    y_symbol,
)
from .dno import DnoConfig, SurfaceState, physical_energy

__all__ = [
    "ComplexState",
    "EvolutionConfig",
    "DiagnosticsRow",
    "state_to_complex",
    "complex_to_state",
    "linear_propagate",
    "profile",
    "rhs",
    "step",
    "run",
    "box_horizon",
    "default_dt",
]


@dataclass
class ComplexState:
    """The complex unknown u = Lambda^(1/2) h + i psi at a given time."""

    u: SpectralField
    time: float = 0.0

    @property
    def grid(self) -> GridSpec:
        return self.u.grid


def state_to_complex(state: SurfaceState) -> ComplexState:
    lam_half = apply_multiplier(state.h, lam_symbol(0.5))
    u = SpectralField(state.grid, lam_half.coeffs + 1j * state.psi.coeffs, False)
    return ComplexState(u, state.time)


def complex_to_state(cs: ComplexState) -> SurfaceState:
    re = cs.u.real_part()
    im = cs.u.imag_part()
    h = apply_multiplier(re, lam_symbol(-0.5))
    return SurfaceState(h, im, cs.time)


@dataclass(frozen=True)
class EvolutionConfig:
    """Stepper and diagnostics parameters.

    ``delta_prime`` is tied to ``delta`` by the number of weighted-derivative
    levels, delta' = (2K + 1) delta.  ``dno_order`` feeds both the equations
    and the conserved-energy diagnostic so the two stay consistent.

    Stability: the integrating factor removes the dispersive (linear) step
    constraint entirely; the remaining explicit stage is limited only by the
    nonlinear terms, whose scale is amplitude-small.  ``default_dt`` encodes
    the validated heuristic 0.25 dx^(3/2).
    """

    dt: float
    t_end: float
    dno_order: int = 3
    c_surface_tension: float = 2.0
    stepper: str = "integrating_factor_rk4"
    nonlinear: bool = True
    sample_every: int = 50
    hard_horizon: bool = False
    # diagnostic knobs
    K: int = 2
    delta: float = 0.01
    alpha: float = 0.05
    iota: float = 0.05
    beta_list: tuple[float, ...] = (0.0, 0.25, 0.5)
    sobolev_s: float = 4.5
    gamma_level: int = 1

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.stepper != "integrating_factor_rk4":
            raise ValueError(f"unknown stepper {self.stepper!r}")
        if self.gamma_level > 2:
            raise ValueError("diagnostic vector-field level capped at 2")

    @property
    def delta_prime(self) -> float:
        return (2 * self.K + 1) * self.delta


def default_dt(grid: GridSpec) -> float:
    """Heuristic step 0.25 dx^(3/2), validated by step-halving."""
    return 0.25 * grid.dx**1.5


def box_horizon(grid: GridSpec) -> float:
    """Time for the fastest resolved group velocity to cross half the box."""
    k_max = grid.k_max_dealiased
    return 0.5 * grid.box_length / (1.5 * math.sqrt(k_max))


def linear_propagate(u: SpectralField, t: float) -> SpectralField:
    """Free flow exp(-i t Lambda^(3/2)), exactly unitary coefficient-wise."""
    mult = np.exp(-1j * t * u.grid.k_abs**1.5)
    return SpectralField(u.grid, u.coeffs * mult, False)


def profile(u, t: float | None = None) -> SpectralField:
    """Pull-back exp(+i t Lambda^(3/2)) u: constant in time for free waves.

    Accepts a SpectralField (with explicit t), a ComplexState, or a
    SurfaceState (time taken from the state unless overridden).
    """
    if isinstance(u, SurfaceState):
        u = state_to_complex(u)
    if isinstance(u, ComplexState):
        t = u.time if t is None else t
        u = u.u
    if t is None:
        raise ValueError("a time is required for a bare field")
    mult = np.exp(1j * t * u.grid.k_abs**1.5)
    return SpectralField(u.grid, u.coeffs * mult, False)


def rhs(state: SurfaceState, cfg: EvolutionConfig) -> tuple[SpectralField, SpectralField]:
    """(d_t h, d_t psi) with the order-``cfg.dno_order`` operator series."""
    kern = _kernel_for(state.grid)
    dh, dpsi = kern.rhs_pair(kern.to_raw(state.h.coeffs), kern.to_raw(state.psi.coeffs),
                             cfg.dno_order, cfg.c_surface_tension, nonlinear=cfg.nonlinear)
    return (SpectralField(state.grid, kern.from_raw(dh), True),
            SpectralField(state.grid, kern.from_raw(dpsi), True))


# ---------------------------------------------------------------------------
# raw-array stepping kernel
# ---------------------------------------------------------------------------


class _Kernel:
    """Precomputed mode arrays and the hot-path right-hand side.

    The stepping state is a full-grid complex coefficient array in plain
    numpy fft2 convention (fft2 of the samples, no centering phase, no 1/n^2).
    All nonlinear work happens on the real pair (h, psi) through half-plane
    rfft2 transforms, which both halves the transform cost and keeps the
    Hermitian symmetry of the pair structural.
    """

    def __init__(self, grid: GridSpec):
        _fastmath.warmup()
        self.grid = grid
        n = grid.n_per_axis
        K1, K2 = grid.wavenumbers
        self.kabs = grid.k_abs
        self.omega = self.kabs**1.5
        half = n // 2 + 1
        self.half = half
        self.K1r = K1[:, :half]
        self.K2r = K2[:, :half]
        self.kr = np.hypot(self.K1r, self.K2r)
        self.mask_r = grid.dealias_mask[:, :half]
        self.mask = grid.dealias_mask
        with np.errstate(divide="ignore"):
            inv = self.kabs**-0.5
        inv[0, 0] = 0.0
        self.lam_m_half = inv
        self.lam_half_r = self.kr**0.5
        self.kr_pow = [np.ones_like(self.kr)]
        for _ in range(8):
            self.kr_pow.append(self.kr_pow[-1] * self.kr)
        # index maps for rebuilding the redundant fft2 half from rfft2 data
        self._rows = (n - np.arange(n)) % n
        self._cols = np.arange(n - half, 0, -1)
        # and for reading the reflected half -m directly off a full-grid array
        self._half_cols = (n - np.arange(half)) % n
        self._expo_cache: dict[float, np.ndarray] = {}

    def expo(self, tau: float) -> np.ndarray:
        """exp(-i tau |k|^(3/2)), cached per step size."""
        key = float(tau)
        if key not in self._expo_cache:
            if len(self._expo_cache) > 16:
                self._expo_cache.clear()
            self._expo_cache[key] = np.exp(-1j * key * self.omega)
        return self._expo_cache[key]

    def to_raw(self, coeffs: np.ndarray) -> np.ndarray:
        """Centered-box series coefficients -> plain fft2-of-samples scale."""
        n2 = self.grid.n_per_axis ** 2
        return coeffs * self.grid.center_phase * n2

    def from_raw(self, raw: np.ndarray) -> np.ndarray:
        n2 = self.grid.n_per_axis ** 2
        return raw * self.grid.center_phase / n2

    # -- real-pair plumbing ---------------------------------------------------

    def split(self, uc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Hermitian projections of u = Lambda^(1/2) h + i psi (full grid)."""
        refl = np.roll(np.flip(np.conj(uc), axis=(0, 1)), (1, 1), (0, 1))
        a = 0.5 * (uc + refl)
        b = (uc - refl) / 2j
        return a, b

    def split_half(self, uc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Hermitian projections restricted to the rfft2 half-plane."""
        refl = np.conj(uc[np.ix_(self._rows, self._half_cols)])
        part = uc[:, : self.half]
        a = 0.5 * (part + refl)
        b = (part - refl) * (-0.5j)
        return a, b

    def hermitian_defect(self, uc: np.ndarray) -> float:
        a, b = self.split(uc)
        scale = max(float(np.max(np.abs(uc))), 1e-300)
        return float(np.max(np.abs(a + 1j * b - uc)) / scale)

    def extend(self, half: np.ndarray) -> np.ndarray:
        """rfft2 coefficients of a real field -> full Hermitian fft2 array."""
        n = self.grid.n_per_axis
        full = np.empty((n, n), dtype=np.complex128)
        full[:, : self.half] = half
        full[:, self.half:] = np.conj(half[self._rows][:, self._cols])
        return full

    def _irfft(self, c: np.ndarray) -> np.ndarray:
        n = self.grid.n_per_axis
        return sfft.irfft2(c, s=(n, n))

    def _rfft_masked(self, v: np.ndarray) -> np.ndarray:
        return sfft.rfft2(v) * self.mask_r

    # -- operator series -------------------------------------------------------

    def _dno_series(self, hc: np.ndarray, fc: np.ndarray, order: int,
                    want_grad_h: bool = False):
        """sum_n G_n(h) f on rfft2 coefficients, products dealiased.

        The harmonic-extension recursion needs the physical forms of
        Lambda^a p_i once per (i, a) pair; they are built incrementally as the
        trace coefficients p_i appear.
        """
        kr = self.kr
        n = self.grid.n_per_axis
        rfft_m = self._rfft_masked

        out = kr * fc
        if order == 0:
            if want_grad_h:
                gh1 = sfft.irfft2(1j * self.K1r * hc, s=(n, n))
                gh2 = sfft.irfft2(1j * self.K2r * hc, s=(n, n))
                return out, gh1, gh2
            return out

        def irfft_batch(stack: list[np.ndarray]) -> list[np.ndarray]:
            # one call per slice: pocketfft's plan reuse beats its batched path
            return [sfft.irfft2(c, s=(n, n)) for c in stack]

        h_phys = sfft.irfft2(hc, s=(n, n))
        h_pow = [None, h_phys]                 # h^j / j! in physical space
        for j in range(2, order + 1):
            h_pow.append(sfft.irfft2(rfft_m(h_pow[j - 1] * h_phys), s=(n, n)) / j)

        # phys[i][a] = Lambda^a p_i in physical space; grad[i][a] = its gradient
        p = [fc]
        phys: list[dict[int, np.ndarray]] = []
        grad: list[dict[int, tuple[np.ndarray, np.ndarray]]] = []

        def build_maps(i: int, extra: list[np.ndarray] = ()):  # type: ignore[assignment]
            ci = p[i]
            stack = list(extra)
            for a in range(1, order - i + 2):
                stack.append(self.kr_pow[a] * ci)
            grad_offset = len(stack)
            for a in range(0, order - i):
                ca = self.kr_pow[a] * ci if a else ci
                stack.append(1j * self.K1r * ca)
                stack.append(1j * self.K2r * ca)
            flat = irfft_batch(stack)
            pm, gm = {}, {}
            for a in range(1, order - i + 2):
                pm[a] = flat[len(extra) + a - 1]
            for idx, a in enumerate(range(0, order - i)):
                gm[a] = (flat[grad_offset + 2 * idx], flat[grad_offset + 2 * idx + 1])
            phys.append(pm)
            grad.append(gm)
            return flat[: len(extra)]

        gh = build_maps(0, extra=[1j * self.K1r * hc, 1j * self.K2r * hc])
        gh1, gh2 = gh[0], gh[1]
        for m in range(1, order + 1):
            acc = h_pow[m] * phys[0][m]
            for j in range(1, m):
                acc = acc + h_pow[j] * phys[m - j][j]
            p.append(-rfft_m(acc))
            if m < order:
                build_maps(m)

        for nn in range(1, order + 1):
            acc = h_pow[1] * phys[nn - 1][2]
            for j in range(2, nn + 1):
                acc = acc + h_pow[j] * phys[nn - j][j + 1]
            g1, g2 = grad[nn - 1][0]
            grad_part = gh1 * g1 + gh2 * g2
            for j in range(1, nn):
                q1, q2 = grad[nn - 1 - j][j]
                grad_part = grad_part + h_pow[j] * (gh1 * q1 + gh2 * q2)
            out = out + kr * p[nn] + rfft_m(acc - grad_part)
        if want_grad_h:
            return out, gh1, gh2
        return out

    def rhs_pair(self, hc: np.ndarray, pc: np.ndarray, order: int, c_st: float,
                 nonlinear: bool = True, half_input: bool = False):
        """Right-hand side of the surface system on raw coefficients.

        Accepts either full-grid Hermitian arrays or rfft2 halves
        (``half_input``); returns arrays of the same kind.
        """
        if not half_input:
            hc_r, pc_r = hc[:, : self.half], pc[:, : self.half]
        else:
            hc_r, pc_r = hc, pc
        if not nonlinear:
            dh_r = self.kr * pc_r
            dpsi_r = -0.5 * c_st * self.kr**2 * hc_r
        else:
            irfft, rfft_m = self._irfft, self._rfft_masked
            dh_r, gh1, gh2 = self._dno_series(hc_r, pc_r, order, want_grad_h=True)
            gp1 = irfft(1j * self.K1r * pc_r)
            gp2 = irfft(1j * self.K2r * pc_r)
            b_phys = irfft(dh_r)
            w1 = np.empty_like(gh1)
            w2 = np.empty_like(gh1)
            quad = np.empty_like(gh1)
            _fastmath.quad_block(gh1, gh2, gp1, gp2, b_phys, w1, w2, quad)
            kappa = 0.5j * (self.K1r * rfft_m(w1) + self.K2r * rfft_m(w2))
            dpsi_r = c_st * kappa + rfft_m(quad)
        if half_input:
            return dh_r, dpsi_r
        return self.extend(dh_r), self.extend(dpsi_r)

    # -- integrating-factor RK4 --------------------------------------------------

    def nonlinear_term(self, uc: np.ndarray, order: int, c_st: float,
                       nonlinear: bool) -> np.ndarray:
        """N(u) = full right-hand side + i Lambda^(3/2) u (zero for free waves).

        The output is restricted to the dealiased band: outside it the
        products are zeroed anyway and leaving the leftover linear part there
        would re-expose the dispersive stiffness the integrating factor
        removed; masked modes thus ride the exact free flow.
        """
        if not nonlinear:
            return np.zeros_like(uc)
        a, b = self.split_half(uc)
        hc_r = self.lam_m_half[:, : self.half] * a
        dh_r, dpsi_r = self.rhs_pair(hc_r, b, order, c_st, half_input=True)
        du = self.extend(self.lam_half_r * dh_r) + 1j * self.extend(dpsi_r)
        out = np.empty_like(uc)
        _fastmath.assemble_nonlinear(du, self.omega, uc, self.mask, out)
        return out

    def lawson_step(self, uc: np.ndarray, dt: float, order: int, c_st: float,
                    nonlinear: bool = True) -> np.ndarray:
        e_full = self.expo(dt)
        e_half = self.expo(dt / 2.0)

        def nl(v):
            return self.nonlinear_term(v, order, c_st, nonlinear)

        stage = np.empty_like(uc)
        k1 = nl(uc)
        _fastmath.lawson_stage(e_half, uc, dt / 2.0, k1, stage)      # e (u + c k)
        k2 = nl(stage)
        _fastmath.lawson_stage_mixed(e_half, uc, dt / 2.0, k2, stage)  # e u + c k
        k3 = nl(stage)
        _fastmath.lawson_stage_mixed(e_full, uc, dt, e_half * k3, stage)
        k4 = nl(stage)
        out = np.empty_like(uc)
        _fastmath.lawson_final(e_full, e_half, uc, dt, k1, k2, k3, k4, out)
        return out


_KERNELS: dict[tuple[int, float, float], _Kernel] = {}


def _kernel_for(grid: GridSpec) -> _Kernel:
    key = (grid.n_per_axis, grid.box_length, grid.dealias_fraction)
    if key not in _KERNELS:
        if len(_KERNELS) > 8:
            _KERNELS.clear()
        _KERNELS[key] = _Kernel(grid)
    return _KERNELS[key]


def step(state: SurfaceState, cfg: EvolutionConfig) -> SurfaceState:
    """One integrating-factor RK4 step of size cfg.dt."""
    grid = state.grid
    kern = _kernel_for(grid)
    uc = kern.to_raw(state_to_complex(state).u.coeffs)
    new = kern.lawson_step(uc, cfg.dt, cfg.dno_order, cfg.c_surface_tension,
                           nonlinear=cfg.nonlinear)
    if not np.all(np.isfinite(new)):
        raise FloatingPointError(
            f"state blew up at t = {state.time + cfg.dt:.6g}; last valid time {state.time:.6g}"
        )
    u_new = SpectralField(grid, kern.from_raw(new), False)
    return complex_to_state(ComplexState(u_new, state.time + cfg.dt))


@dataclass
class DiagnosticsRow:
    """Scalar diagnostics at one sample time."""

    t: float
    energy: float
    sobolev: float
    weighted: dict[str, float] = field(default_factory=dict)
    sup: dict[str, float] = field(default_factory=dict)
    hermitian_defect: float = 0.0
    horizon_flag: bool = False


def _time_jet(state: SurfaceState, cfg: EvolutionConfig, depth: int) -> list[SpectralField]:
    """[u, d_t u, d_t^2 u]: time derivatives by substituting the equations.

    The second derivative is the derivative of the right-hand side along the
    motion, evaluated by an antisymmetric two-point sweep in state space
    (never by differencing the trajectory in t).
    """
    cs = state_to_complex(state)
    jet = [cs.u]
    if depth >= 1:
        dh, dpsi = rhs(state, cfg)
        du = apply_multiplier(dh, lam_symbol(0.5))
        jet.append(SpectralField(state.grid, du.coeffs + 1j * dpsi.coeffs, False))
    if depth >= 2:
        eps = 1e-5
        amp = max(float(np.max(np.abs(state.h.coeffs))),
                  float(np.max(np.abs(state.psi.coeffs))), 1e-12)
        dh, dpsi = rhs(state, cfg)
        scale = eps * amp / max(float(np.max(np.abs(dh.coeffs))),
                                float(np.max(np.abs(dpsi.coeffs))), 1e-300)
        plus = SurfaceState(state.h + scale * dh, state.psi + scale * dpsi, state.time)
        minus = SurfaceState(state.h - scale * dh, state.psi - scale * dpsi, state.time)
        dhp, dpp = rhs(plus, cfg)
        dhm, dpm = rhs(minus, cfg)
        d2h = (dhp - dhm) * (1.0 / (2.0 * scale))
        d2p = (dpp - dpm) * (1.0 / (2.0 * scale))
        d2u = apply_multiplier(d2h, lam_symbol(0.5))
        jet.append(SpectralField(state.grid, d2u.coeffs + 1j * d2p.coeffs, False))
    return jet


def _apply_word_jet(jet: list[SpectralField], word, t: float) -> SpectralField:
    """Apply a vector-field word to a time jet of the state.

    In these diagnostics the SIGMA slot of a word stands for the space-time
    scaling field (3/2) t d_t + x . grad; each application consumes one jet
    level, with d_t^l of it given by the Leibniz rule
    (3/2)(t v^(l+1) + l v^(l)) + Sigma v^(l).
    """
    current = list(jet)
    for tag in reversed(word):
        if tag is VectorFieldTag.SIGMA:
            new = []
            for lvl in range(len(current) - 1):
                v = 1.5 * (t * current[lvl + 1] + float(lvl) * current[lvl]) \
                    + apply_vector_field(current[lvl], VectorFieldTag.SIGMA)
                new.append(v)
            current = new
        else:
            current = [apply_vector_field(v, tag) for v in current]
    return current[0]


def _diagnostics(state: SurfaceState, cfg: EvolutionConfig, dno_cfg: DnoConfig,
                 horizon: float, herm_defect: float) -> DiagnosticsRow:
    grid = state.grid
    cs = state_to_complex(state)
    energy = physical_energy(state, dno_cfg, cfg.c_surface_tension)
    lam_half_u = apply_multiplier(cs.u, lam_symbol(0.5))
    sob = norm_lp(apply_multiplier(lam_half_u, sobolev_symbol(cfg.sobolev_s)), 2)

    from .spectral import gamma_multiindices

    jet = _time_jet(state, cfg, depth=min(2, cfg.gamma_level))
    weighted = {}
    for word in gamma_multiindices(cfg.gamma_level):
        n_sigma = sum(1 for tag in word if tag is VectorFieldTag.SIGMA)
        if n_sigma >= len(jet):
            continue
        g = _apply_word_jet(jet[: n_sigma + 1], word, state.time)
        label = "gamma_" + "".join(
            {VectorFieldTag.SIGMA: "S", VectorFieldTag.OMEGA: "O",
             VectorFieldTag.PARTIAL1: "1", VectorFieldTag.PARTIAL2: "2"}[tag]
            for tag in word) if word else "gamma_id"
        weighted[label] = norm_l2(apply_multiplier(g, sobolev_symbol(0.0)))

    sup = {}
    for beta in cfg.beta_list:
        wu = apply_multiplier(cs.u, lam_symbol(0.5 + cfg.alpha - beta))
        wu = apply_multiplier(wu, y_symbol(cfg.iota))
        key = f"sup_beta_{beta:g}"
        sup[key] = norm_lp(wu, np.inf)
        sup[key + "_scaled"] = sup[key] * (1.0 + state.time) ** (1.0 - 2.0 * beta / 3.0)

    return DiagnosticsRow(
        t=state.time,
        energy=energy,
        sobolev=sob,
        weighted=weighted,
        sup=sup,
        hermitian_defect=herm_defect,
        horizon_flag=state.time > horizon,
    )


def run(initial: SurfaceState, cfg: EvolutionConfig,
        dno_cfg: DnoConfig | None = None) -> list[DiagnosticsRow]:
    """Integrate to cfg.t_end, sampling diagnostics every ``sample_every`` steps.

    Rows past the box-exit horizon carry horizon_flag = True; with
    ``hard_horizon`` the run stops there instead.
    """
    grid = initial.grid
    dno_cfg = dno_cfg or DnoConfig(series_order=cfg.dno_order)
    kern = _kernel_for(grid)
    horizon = box_horizon(grid)
    n_steps = int(round(cfg.t_end / cfg.dt))

    uc = kern.to_raw(state_to_complex(initial).u.coeffs)
    t = initial.time
    rows = [_diagnostics(initial, cfg, dno_cfg, horizon, kern.hermitian_defect(uc))]
    for i in range(1, n_steps + 1):
        uc = kern.lawson_step(uc, cfg.dt, cfg.dno_order, cfg.c_surface_tension,
                              nonlinear=cfg.nonlinear)
        t = initial.time + i * cfg.dt
        if not np.all(np.isfinite(uc)):
            raise FloatingPointError(f"blow-up detected at t = {t:.6g}")
        if i % cfg.sample_every == 0 or i == n_steps:
            defect = kern.hermitian_defect(uc)
            u_f = SpectralField(grid, kern.from_raw(uc), False)
            state = complex_to_state(ComplexState(u_f, t))
            rows.append(_diagnostics(state, cfg, dno_cfg, horizon, defect))
            if cfg.hard_horizon and t > horizon:
                break
    return rows

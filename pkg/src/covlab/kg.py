"""Free Klein-Gordon theory on a periodic lattice slice.

Cauchy data lives on the slice as (phi, p, beta) with the constraint
beta = grad(phi).  The dynamical conventions follow the resolved sign
ledger (see README):

* dphi/ds = p, dp/ds = laplacian(phi) - mass^2 phi, so each Fourier mode
  is a harmonic oscillator with omega_k = sqrt(k^2 + mass^2);
* the slice Hamiltonian is the conserved positive energy
  (1/2) integral (p^2 + |grad phi|^2 + mass^2 phi^2); the printed variant
  with the opposite mass-term sign is available behind ``mass_sign`` for
  comparison runs and is flagged in harness reports;
* the covariant temporal momentum is P^0 = -p (index lowering with
  eta = diag(-1, +1, ...)), which is what makes the action integrand
  P^mu d_mu phi - H stationary exactly on solution sections.

The massless zero mode (omega = 0) is a free particle and is evolved by
its exact drift rather than the degenerate rotation formulas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import (
    Lattice,
    ModeVector,
    ScalarField,
    VectorField,
    dft,
    idft,
    inner,
    spectral_divergence,
    spectral_gradient,
    stack_gradient,
    sup_norm,
)

__all__ = [
    "KGConfig",
    "KGState",
    "KGSpacetimeSection",
    "KGVariation",
    "kg_hamiltonian",
    "kg_constraint_residual",
    "kg_enforce_constraints",
    "kg_evolve_spectral",
    "kg_evolve_leapfrog",
    "kg_solution_section",
    "kg_dedonder_weyl_residual",
    "kg_action",
    "kg_el_pairing",
    "kg_el_cancellation_scale",
    "kg_random_variation_profile",
]


@dataclass(frozen=True)
class KGConfig:
    mass: float
    lattice: Lattice

    def __post_init__(self):
        if self.mass < 0:
            raise ValueError(f"mass must be nonnegative, got {self.mass}")

    def omega(self) -> np.ndarray:
        """Per-mode oscillator frequency sqrt(k^2 + mass^2), FFT layout."""
        return np.sqrt(self.lattice.ksq() + self.mass**2)


@dataclass(frozen=True)
class KGState:
    """Cauchy data (phi, p, beta) on the slice at time s."""

    phi: ScalarField
    p: ScalarField
    beta: VectorField
    time: float = 0.0

    def __post_init__(self):
        if self.p.lattice != self.phi.lattice or self.beta.lattice != self.phi.lattice:
            raise ValueError("state fields live on different lattices")

    @property
    def lattice(self) -> Lattice:
        return self.phi.lattice


@dataclass(frozen=True)
class KGVariation:
    """Tangent data (dphi, dp, dbeta) attached to a slice."""

    dphi: ScalarField
    dp: ScalarField
    dbeta: VectorField

    def __post_init__(self):
        if (
            self.dp.lattice != self.dphi.lattice
            or self.dbeta.lattice != self.dphi.lattice
        ):
            raise ValueError("variation fields live on different lattices")

    @property
    def lattice(self) -> Lattice:
        return self.dphi.lattice


@dataclass(frozen=True)
class KGSpacetimeSection:
    """A state per uniform time node; the discrete section chi."""

    states: tuple[KGState, ...]
    dt: float
    cfg: KGConfig

    def __post_init__(self):
        states = tuple(self.states)
        if len(states) < 2:
            raise ValueError("a section needs at least two time slices")
        lat = self.cfg.lattice
        for st in states:
            if st.lattice != lat:
                raise ValueError("section slice lattice mismatch")
        t0 = states[0].time
        for i, st in enumerate(states):
            if abs(st.time - (t0 + i * self.dt)) > 1e-9 * max(1.0, abs(self.dt)):
                raise ValueError("section time nodes are not uniform in dt")
        object.__setattr__(self, "states", states)

    @property
    def lattice(self) -> Lattice:
        return self.cfg.lattice

    def times(self) -> np.ndarray:
        return self.states[0].time + self.dt * np.arange(len(self.states))


def kg_hamiltonian(state: KGState, cfg: KGConfig, mass_sign: str = "resolved") -> float:
    """Slice energy (1/2) integral (p^2 + |grad phi|^2 +- mass^2 phi^2).

    mass_sign "resolved" gives the conserved positive energy; the
    "paper-printed" variant flips the mass term and is kept only so the
    harness can demonstrate that its flow is tachyonic.
    """
    if mass_sign not in ("resolved", "paper-printed"):
        raise ValueError(f"unknown mass_sign {mass_sign!r}")
    grad = spectral_gradient(state.phi)
    total = inner(state.p, state.p)
    for comp in grad.components:
        total += inner(comp, comp)
    msq = cfg.mass**2 if mass_sign == "resolved" else -cfg.mass**2
    total += msq * inner(state.phi, state.phi)
    return 0.5 * total


def kg_constraint_residual(state: KGState) -> float:
    """Sup-norm of beta - grad(phi)."""
    grad = spectral_gradient(state.phi)
    return max(
        sup_norm(state.beta.components[a].values - grad.components[a].values)
        for a in range(state.lattice.dim)
    )


def kg_enforce_constraints(phi: ScalarField, p: ScalarField, time: float = 0.0) -> KGState:
    """Build a state with beta := grad(phi)."""
    return KGState(phi=phi, p=p, beta=spectral_gradient(phi), time=time)


def _general_rotation(om2: np.ndarray, s: float):
    """Propagator entries for d2x/ds2 = -om2 x, valid for any sign of om2.

    Returns (C, S) with x(s) = C x + S v, v(s) = C v - om2 S x:
    trigonometric for om2 > 0, polynomial drift at om2 = 0, hyperbolic
    for om2 < 0 (the tachyonic branch reachable through the printed
    mass-sign ledger flag).
    """
    om2 = np.asarray(om2, dtype=float)
    pos = om2 > 0
    neg = om2 < 0
    om = np.sqrt(np.where(pos, om2, 1.0))
    mu = np.sqrt(np.where(neg, -om2, 1.0))
    C = np.where(pos, np.cos(om * s), np.where(neg, np.cosh(mu * s), 1.0))
    S = np.where(
        pos,
        np.sin(om * s) / om,
        np.where(neg, np.sinh(mu * s) / mu, s),
    )
    return C, S


def kg_evolve_spectral(
    state: KGState, s: float, cfg: KGConfig, mass_sign: str = "resolved"
) -> KGState:
    """Exact per-mode rotation by time s; constraints re-enforced.

    ``mass_sign`` selects the Hamiltonian whose flow is integrated:
    "resolved" uses omega_k^2 = k^2 + m^2; "paper-printed" uses the
    printed mass sign, k^2 - m^2, whose low modes grow hyperbolically.
    The flag exists for the documented negative controls only.
    """
    phihat = dft(state.phi).coefficients
    phat = dft(state.p).coefficients
    if mass_sign == "resolved":
        om2 = cfg.lattice.ksq() + cfg.mass**2
    elif mass_sign == "paper-printed":
        om2 = cfg.lattice.ksq() - cfg.mass**2
    else:
        raise ValueError(f"unknown mass_sign {mass_sign!r}")
    C, S = _general_rotation(om2, s)
    phihat_s = phihat * C + phat * S
    phat_s = phat * C - phihat * om2 * S
    lat = state.lattice
    phi_s = idft(ModeVector(lat, phihat_s))
    p_s = idft(ModeVector(lat, phat_s))
    return kg_enforce_constraints(phi_s, p_s, time=state.time + s)


def kg_evolve_leapfrog(state: KGState, dt: float, steps: int, cfg: KGConfig) -> KGState:
    """Kick-drift-kick stepper for the same linear flow.

    The force is diagonal in mode space (-omega_k^2 phi-hat), so the
    stepper is applied there; this is algebraically the standard
    position-space leapfrog with spectral Laplacian force, without the
    per-step transform round trips.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if steps < 0:
        raise ValueError(f"steps must be nonnegative, got {steps}")
    if steps == 0:
        return state
    lat = state.lattice
    om2 = lat.ksq() + cfg.mass**2
    phihat = dft(state.phi).coefficients.copy()
    phat = dft(state.p).coefficients.copy()
    for _ in range(steps):
        phat -= 0.5 * dt * om2 * phihat
        phihat += dt * phat
        phat -= 0.5 * dt * om2 * phihat
    phi_s = idft(ModeVector(lat, phihat))
    p_s = idft(ModeVector(lat, phat))
    return kg_enforce_constraints(phi_s, p_s, time=state.time + dt * steps)


def kg_solution_section(
    state: KGState, dt: float, steps: int, cfg: KGConfig
) -> KGSpacetimeSection:
    """Sample the exact flow on a uniform time grid of `steps` intervals."""
    if steps < 1:
        raise ValueError("need at least one time interval")
    slices = tuple(kg_evolve_spectral(state, i * dt, cfg) for i in range(steps + 1))
    return KGSpacetimeSection(states=slices, dt=dt, cfg=cfg)


def _time_derivative(stack: np.ndarray, dt: float) -> np.ndarray:
    """Second-order time derivative along axis 0 (central inside,
    one-sided at the ends)."""
    return np.gradient(stack, dt, axis=0, edge_order=2)


def kg_dedonder_weyl_residual(section: KGSpacetimeSection) -> float:
    """Sup residual of the covariant first-order equations on the section.

    With P^0 = -p the three blocks are d phi/dt - p, grad phi - beta, and
    -dp/dt + div beta - mass^2 phi, checked on interior time nodes with
    central differences.
    """
    if len(section.states) < 3:
        raise ValueError("need at least three time slices for central differences")
    dt = section.dt
    msq = section.cfg.mass**2
    phis = np.stack([st.phi.values for st in section.states])
    ps = np.stack([st.p.values for st in section.states])
    dphi_dt = (phis[2:] - phis[:-2]) / (2 * dt)
    dp_dt = (ps[2:] - ps[:-2]) / (2 * dt)
    worst = 0.0
    for i, st in enumerate(section.states[1:-1], start=1):
        r1 = float(np.max(np.abs(dphi_dt[i - 1] - st.p.values)))
        grad = spectral_gradient(st.phi)
        r2 = max(
            sup_norm(st.beta.components[a].values - grad.components[a].values)
            for a in range(section.lattice.dim)
        )
        div = spectral_divergence(st.beta)
        r3 = float(np.max(np.abs(-dp_dt[i - 1] + div.values - msq * st.phi.values)))
        worst = max(worst, r1, r2, r3)
    return worst


def _covariant_lagrangian_density(
    section: KGSpacetimeSection, phis: np.ndarray, ps: np.ndarray,
    betas: np.ndarray,
) -> np.ndarray:
    """P^mu d_mu phi - H at each node, integrated over the slice.

    Returns a 1-D array over time nodes.  Uses P^0 = -p and the covariant
    H = (1/2)(eta_mn P^m P^n - mass^2 phi^2) = (1/2)(-p^2 + |beta|^2
    - mass^2 phi^2).
    """
    lat = section.lattice
    msq = section.cfg.mass**2
    h_d = lat.spacing**lat.dim
    dphi_dt = _time_derivative(phis, section.dt)
    grads = stack_gradient(lat, phis)
    temporal = -ps * dphi_dt
    spatial = np.einsum("ta...,ta...->t...", betas, grads)
    beta_sq = np.einsum("ta...,ta...->t...", betas, betas)
    ham = 0.5 * (-(ps**2) + beta_sq - msq * phis**2)
    dens = temporal + spatial - ham
    return h_d * dens.reshape(len(phis), -1).sum(axis=1)


def _section_arrays(section: KGSpacetimeSection):
    phis = np.stack([st.phi.values for st in section.states])
    ps = np.stack([st.p.values for st in section.states])
    betas = np.stack(
        [
            np.stack([c.values for c in st.beta.components])
            for st in section.states
        ]
    )
    return phis, ps, betas


def kg_action(section: KGSpacetimeSection) -> float:
    """Discrete covariant action: trapezoidal in time, exact in space."""
    phis, ps, betas = _section_arrays(section)
    lag = _covariant_lagrangian_density(section, phis, ps, betas)
    return float(np.trapezoid(lag, dx=section.dt))


def kg_el_pairing(
    section: KGSpacetimeSection, variations: tuple[KGVariation, ...]
) -> float:
    """Directional derivative of the action along a per-slice variation.

    The action is quadratic, so the symmetric difference quotient at
    epsilon = 1 is the exact directional derivative (no truncation term).
    Variations must vanish on the first and last slices.
    """
    if len(variations) != len(section.states):
        raise ValueError("one variation per time slice required")
    for idx in (0, -1):
        v = variations[idx]
        if (
            sup_norm(v.dphi) > 0.0
            or sup_norm(v.dp) > 0.0
            or any(sup_norm(c) > 0.0 for c in v.dbeta.components)
        ):
            raise ValueError("variation must vanish at the temporal endpoints")
    phis, ps, betas = _section_arrays(section)
    dphis = np.stack([v.dphi.values for v in variations])
    dps = np.stack([v.dp.values for v in variations])
    dbetas = np.stack(
        [np.stack([c.values for c in v.dbeta.components]) for v in variations]
    )

    def action_at(eps):
        lag = _covariant_lagrangian_density(
            section, phis + eps * dphis, ps + eps * dps, betas + eps * dbetas
        )
        return float(np.trapezoid(lag, dx=section.dt))

    return 0.5 * (action_at(1.0) - action_at(-1.0))


def kg_el_cancellation_scale(
    section: KGSpacetimeSection, variations: tuple[KGVariation, ...]
) -> float:
    """Normalization for the EL residual: the L1 mass of the first-order
    terms of the directional derivative.

    The pairing is a signed sum of bilinear terms (p against d_t dphi, dp
    against d_t phi, beta against grad dphi, ...) that cancels on solution
    sections.  Dividing by the total magnitude of those terms makes the
    residual a dimensionless, amplitude-invariant measure of how complete
    the cancellation is.
    """
    if len(variations) != len(section.states):
        raise ValueError("one variation per time slice required")
    lat = section.lattice
    msq = section.cfg.mass**2
    h_d = lat.spacing**lat.dim
    phis, ps, betas = _section_arrays(section)
    dphis = np.stack([v.dphi.values for v in variations])
    dps = np.stack([v.dp.values for v in variations])
    dbetas = np.stack(
        [np.stack([c.values for c in v.dbeta.components]) for v in variations]
    )
    dphi_dt = _time_derivative(phis, section.dt)
    ddphi_dt = _time_derivative(dphis, section.dt)
    grads = stack_gradient(lat, phis)
    dgrads = stack_gradient(lat, dphis)
    total = (
        np.abs(ps * ddphi_dt)
        + np.abs(dps * dphi_dt)
        + np.abs(ps * dps)
        + msq * np.abs(phis * dphis)
        + np.einsum("ta...,ta...->t...", np.abs(betas), np.abs(dgrads))
        + np.einsum("ta...,ta...->t...", np.abs(dbetas), np.abs(grads))
        + np.einsum("ta...,ta...->t...", np.abs(betas), np.abs(dbetas))
    )
    dens = h_d * total.reshape(len(phis), -1).sum(axis=1)
    return float(np.trapezoid(dens, dx=section.dt))


def kg_random_variation_profile(
    section: KGSpacetimeSection, dphi0: ScalarField, dp0: ScalarField
) -> tuple[KGVariation, ...]:
    """Admissible variation: fixed slice shapes modulated by a smooth time
    bump vanishing at both endpoints; dbeta follows the constraint."""
    lat = section.lattice
    times = section.times()
    span = times[-1] - times[0]
    bump = np.sin(np.pi * (times - times[0]) / span) ** 2
    dbeta0 = spectral_gradient(dphi0)
    out = []
    for b in bump:
        out.append(
            KGVariation(
                dphi=ScalarField(lat, b * dphi0.values),
                dp=ScalarField(lat, b * dp0.values),
                dbeta=VectorField(
                    lat,
                    tuple(
                        ScalarField(lat, b * c.values) for c in dbeta0.components
                    ),
                ),
            )
        )
    out[0] = KGVariation(
        dphi=ScalarField(lat, np.zeros(lat.shape)),
        dp=ScalarField(lat, np.zeros(lat.shape)),
        dbeta=VectorField(
            lat, tuple(ScalarField(lat, np.zeros(lat.shape)) for _ in range(lat.dim))
        ),
    )
    out[-1] = out[0]
    return tuple(out)

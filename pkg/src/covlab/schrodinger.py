"""Free Schrodinger theory on the lattice slice, rest frame only.

The wavefunction is carried as its real and imaginary parts (phiR, phiI)
together with the spatial momenta (betaR, betaI), constrained by
beta_a = -grad(phi^a).  The covariant temporal momenta are not stored:
the sub-bundle constraints fix them as P0_R = phi^I, P0_I = -phi^R and
they are computed on demand where the action needs them.

Mode dynamics: each Fourier mode rotates by the angle k^2 s / 2,
equivalently psi-hat -> exp(-i k^2 s / 2) psi-hat for psi = phiR + i phiI.

The slice Hamiltonian keeps its printed sign, -1/2 integral |grad psi|^2,
which is nonpositive; it is conserved by the flow either way.  FrameSpec
records the frame data (velocity v) so that frame dependence is at least
representable, but every dynamical operation rejects v != 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

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
    "FrameSpec",
    "SchrState",
    "SchrSpacetimeSection",
    "SchrVariation",
    "schr_hamiltonian",
    "schr_constraint_residual",
    "schr_enforce_constraints",
    "schr_evolve_spectral",
    "schr_evolve_stepped",
    "schr_solution_section",
    "schr_dedonder_weyl_residual",
    "schr_action",
    "schr_el_pairing",
    "schr_el_cancellation_scale",
    "schr_random_variation_profile",
    "to_wavefunction",
    "from_wavefunction",
    "schr_norm_squared",
]


@dataclass(frozen=True)
class FrameSpec:
    """Galilean frame data Gamma = d/dt + v^j d/dx^j.

    Only the rest frame v = 0 is dynamical; nonzero v is storable for
    documentation of the frame tensor but rejected by evolution.
    """

    v: tuple[float, ...] = ()

    def require_rest_frame(self):
        if any(abs(vj) > 0.0 for vj in self.v):
            raise ValueError(
                "only the rest frame (v = 0) is supported by the dynamics"
            )


REST_FRAME = FrameSpec()


@dataclass(frozen=True)
class SchrState:
    phiR: ScalarField
    phiI: ScalarField
    betaR: VectorField
    betaI: VectorField
    time: float = 0.0
    frame: FrameSpec = field(default=REST_FRAME)

    def __post_init__(self):
        lat = self.phiR.lattice
        for f in (self.phiI, self.betaR, self.betaI):
            if f.lattice != lat:
                raise ValueError("state fields live on different lattices")

    @property
    def lattice(self) -> Lattice:
        return self.phiR.lattice

    def temporal_momenta(self) -> tuple[ScalarField, ScalarField]:
        """(P0_R, P0_I) from the sub-bundle constraints."""
        return self.phiI, ScalarField(self.lattice, -self.phiR.values)


@dataclass(frozen=True)
class SchrVariation:
    dphiR: ScalarField
    dphiI: ScalarField
    dbetaR: VectorField
    dbetaI: VectorField

    def __post_init__(self):
        lat = self.dphiR.lattice
        for f in (self.dphiI, self.dbetaR, self.dbetaI):
            if f.lattice != lat:
                raise ValueError("variation fields live on different lattices")

    @property
    def lattice(self) -> Lattice:
        return self.dphiR.lattice


@dataclass(frozen=True)
class SchrSpacetimeSection:
    states: tuple[SchrState, ...]
    dt: float

    def __post_init__(self):
        states = tuple(self.states)
        if len(states) < 2:
            raise ValueError("a section needs at least two time slices")
        lat = states[0].lattice
        t0 = states[0].time
        for i, st in enumerate(states):
            if st.lattice != lat:
                raise ValueError("section slice lattice mismatch")
            if abs(st.time - (t0 + i * self.dt)) > 1e-9 * max(1.0, abs(self.dt)):
                raise ValueError("section time nodes are not uniform in dt")
        object.__setattr__(self, "states", states)

    @property
    def lattice(self) -> Lattice:
        return self.states[0].lattice

    def times(self) -> np.ndarray:
        return self.states[0].time + self.dt * np.arange(len(self.states))


def schr_hamiltonian(state: SchrState) -> float:
    """-1/2 integral (|grad phiR|^2 + |grad phiI|^2); printed sign, <= 0."""
    state.frame.require_rest_frame()
    total = 0.0
    for phi in (state.phiR, state.phiI):
        grad = spectral_gradient(phi)
        for comp in grad.components:
            total += inner(comp, comp)
    return -0.5 * total


def schr_constraint_residual(state: SchrState) -> float:
    """Sup-norm of beta_a + grad(phi^a) over both parts and all axes."""
    worst = 0.0
    for phi, beta in ((state.phiR, state.betaR), (state.phiI, state.betaI)):
        grad = spectral_gradient(phi)
        for a in range(state.lattice.dim):
            worst = max(
                worst,
                sup_norm(beta.components[a].values + grad.components[a].values),
            )
    return worst


def schr_enforce_constraints(
    phiR: ScalarField, phiI: ScalarField, time: float = 0.0
) -> SchrState:
    """Build a state with beta_a := -grad(phi^a)."""
    lat = phiR.lattice

    def neg_grad(phi):
        g = spectral_gradient(phi)
        return VectorField(lat, tuple(ScalarField(lat, -c.values) for c in g.components))

    return SchrState(
        phiR=phiR,
        phiI=phiI,
        betaR=neg_grad(phiR),
        betaI=neg_grad(phiI),
        time=time,
    )


def schr_evolve_spectral(
    state: SchrState, s: float, hamiltonian_sign: str = "resolved"
) -> SchrState:
    """Exact free propagator: per-mode rotation by angle k^2 s / 2.

    ``hamiltonian_sign`` "paper-printed" integrates the flow of the
    printed (negative) Hamiltonian instead, which is the time-reversed
    propagator; it exists for the documented negative controls only.
    """
    state.frame.require_rest_frame()
    if hamiltonian_sign not in ("resolved", "paper-printed"):
        raise ValueError(f"unknown hamiltonian_sign {hamiltonian_sign!r}")
    lat = state.lattice
    theta = 0.5 * lat.ksq() * s
    if hamiltonian_sign == "paper-printed":
        theta = -theta
    c, sg = np.cos(theta), np.sin(theta)
    a = dft(state.phiR).coefficients
    b = dft(state.phiI).coefficients
    a_s = a * c + b * sg
    b_s = b * c - a * sg
    return schr_enforce_constraints(
        idft(ModeVector(lat, a_s)), idft(ModeVector(lat, b_s)), time=state.time + s
    )


def schr_evolve_stepped(state: SchrState, dt: float, steps: int) -> SchrState:
    """Implicit-midpoint stepper, applied per mode.

    On a single mode the implicit midpoint rule for the rotation
    generator is the Cayley transform, an exact rotation by the angle
    2*atan(k^2 dt / 4) per step; composing N steps multiplies the angle.
    Unitary per mode by construction (|psi-hat| exactly preserved).
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if steps < 0:
        raise ValueError(f"steps must be nonnegative, got {steps}")
    if steps == 0:
        return state
    state.frame.require_rest_frame()
    lat = state.lattice
    step_angle = 2.0 * np.arctan(0.25 * lat.ksq() * dt)
    theta = steps * step_angle
    c, sg = np.cos(theta), np.sin(theta)
    a = dft(state.phiR).coefficients
    b = dft(state.phiI).coefficients
    a_s = a * c + b * sg
    b_s = b * c - a * sg
    return schr_enforce_constraints(
        idft(ModeVector(lat, a_s)),
        idft(ModeVector(lat, b_s)),
        time=state.time + dt * steps,
    )


def schr_solution_section(state: SchrState, dt: float, steps: int) -> SchrSpacetimeSection:
    if steps < 1:
        raise ValueError("need at least one time interval")
    slices = tuple(schr_evolve_spectral(state, i * dt) for i in range(steps + 1))
    return SchrSpacetimeSection(states=slices, dt=dt)


def schr_dedonder_weyl_residual(section: SchrSpacetimeSection) -> float:
    """Sup residual of the four covariant first-order equations.

    (i)  d phiI/dt = -1/2 div(P_R)     (ii) grad phiI = -P_I
    (iii) d phiR/dt = +1/2 div(P_I)    (iv) grad phiR = -P_R
    Central time differences on interior nodes, spectral space derivatives.
    """
    if len(section.states) < 3:
        raise ValueError("need at least three time slices for central differences")
    dt = section.dt
    aR = np.stack([st.phiR.values for st in section.states])
    aI = np.stack([st.phiI.values for st in section.states])
    dR_dt = (aR[2:] - aR[:-2]) / (2 * dt)
    dI_dt = (aI[2:] - aI[:-2]) / (2 * dt)
    worst = 0.0
    for i, st in enumerate(section.states[1:-1], start=1):
        divR = spectral_divergence(st.betaR).values
        divI = spectral_divergence(st.betaI).values
        r1 = float(np.max(np.abs(dI_dt[i - 1] + 0.5 * divR)))
        r3 = float(np.max(np.abs(dR_dt[i - 1] - 0.5 * divI)))
        gradR = spectral_gradient(st.phiR)
        gradI = spectral_gradient(st.phiI)
        r2 = max(
            sup_norm(gradI.components[a].values + st.betaI.components[a].values)
            for a in range(section.lattice.dim)
        )
        r4 = max(
            sup_norm(gradR.components[a].values + st.betaR.components[a].values)
            for a in range(section.lattice.dim)
        )
        worst = max(worst, r1, r2, r3, r4)
    return worst


def _schr_section_arrays(section: SchrSpacetimeSection):
    aR = np.stack([st.phiR.values for st in section.states])
    aI = np.stack([st.phiI.values for st in section.states])
    bR = np.stack(
        [np.stack([c.values for c in st.betaR.components]) for st in section.states]
    )
    bI = np.stack(
        [np.stack([c.values for c in st.betaI.components]) for st in section.states]
    )
    return aR, aI, bR, bI


def _schr_lagrangian(section, aR, aI, bR, bI) -> np.ndarray:
    """Slice integral of phiI d_t phiR - phiR d_t phiI + P^j_a d_j phi^a - H
    per time node, with covariant H = -1/2 (|P_R|^2 + |P_I|^2)."""
    lat = section.lattice
    h_d = lat.spacing**lat.dim
    dR_dt = np.gradient(aR, section.dt, axis=0, edge_order=2)
    dI_dt = np.gradient(aI, section.dt, axis=0, edge_order=2)
    temporal = aI * dR_dt - aR * dI_dt
    gradR = stack_gradient(lat, aR)
    gradI = stack_gradient(lat, aI)
    spatial = np.einsum("ta...,ta...->t...", bR, gradR)
    spatial += np.einsum("ta...,ta...->t...", bI, gradI)
    beta_sq = np.einsum("ta...,ta...->t...", bR, bR)
    beta_sq += np.einsum("ta...,ta...->t...", bI, bI)
    ham = -0.5 * beta_sq
    dens = temporal + spatial - ham
    return h_d * dens.reshape(len(aR), -1).sum(axis=1)


def schr_action(section: SchrSpacetimeSection) -> float:
    aR, aI, bR, bI = _schr_section_arrays(section)
    lag = _schr_lagrangian(section, aR, aI, bR, bI)
    return float(np.trapezoid(lag, dx=section.dt))


def schr_el_pairing(
    section: SchrSpacetimeSection, variations: tuple[SchrVariation, ...]
) -> float:
    """Exact directional derivative of the (quadratic) discrete action."""
    if len(variations) != len(section.states):
        raise ValueError("one variation per time slice required")
    for idx in (0, -1):
        v = variations[idx]
        pieces = [v.dphiR, v.dphiI, *v.dbetaR.components, *v.dbetaI.components]
        if any(sup_norm(p) > 0.0 for p in pieces):
            raise ValueError("variation must vanish at the temporal endpoints")
    aR, aI, bR, bI = _schr_section_arrays(section)
    dR = np.stack([v.dphiR.values for v in variations])
    dI = np.stack([v.dphiI.values for v in variations])
    dbR = np.stack(
        [np.stack([c.values for c in v.dbetaR.components]) for v in variations]
    )
    dbI = np.stack(
        [np.stack([c.values for c in v.dbetaI.components]) for v in variations]
    )

    def action_at(eps):
        lag = _schr_lagrangian(
            section, aR + eps * dR, aI + eps * dI, bR + eps * dbR, bI + eps * dbI
        )
        return float(np.trapezoid(lag, dx=section.dt))

    return 0.5 * (action_at(1.0) - action_at(-1.0))


def schr_el_cancellation_scale(
    section: SchrSpacetimeSection, variations: tuple[SchrVariation, ...]
) -> float:
    """Normalization for the EL residual: L1 mass of the first-order terms
    of the directional derivative (see kg_el_cancellation_scale)."""
    if len(variations) != len(section.states):
        raise ValueError("one variation per time slice required")
    lat = section.lattice
    h_d = lat.spacing**lat.dim
    aR, aI, bR, bI = _schr_section_arrays(section)
    dR = np.stack([v.dphiR.values for v in variations])
    dI = np.stack([v.dphiI.values for v in variations])
    dbR = np.stack(
        [np.stack([c.values for c in v.dbetaR.components]) for v in variations]
    )
    dbI = np.stack(
        [np.stack([c.values for c in v.dbetaI.components]) for v in variations]
    )
    dR_dt = np.gradient(aR, section.dt, axis=0, edge_order=2)
    dI_dt = np.gradient(aI, section.dt, axis=0, edge_order=2)
    ddR_dt = np.gradient(dR, section.dt, axis=0, edge_order=2)
    ddI_dt = np.gradient(dI, section.dt, axis=0, edge_order=2)
    gradR = stack_gradient(lat, aR)
    gradI = stack_gradient(lat, aI)
    dgradR = stack_gradient(lat, dR)
    dgradI = stack_gradient(lat, dI)
    total = (
        np.abs(aI * ddR_dt)
        + np.abs(dI * dR_dt)
        + np.abs(aR * ddI_dt)
        + np.abs(dR * dI_dt)
        + np.einsum("ta...,ta...->t...", np.abs(bR), np.abs(dgradR))
        + np.einsum("ta...,ta...->t...", np.abs(dbR), np.abs(gradR))
        + np.einsum("ta...,ta...->t...", np.abs(bI), np.abs(dgradI))
        + np.einsum("ta...,ta...->t...", np.abs(dbI), np.abs(gradI))
        + np.einsum("ta...,ta...->t...", np.abs(bR), np.abs(dbR))
        + np.einsum("ta...,ta...->t...", np.abs(bI), np.abs(dbI))
    )
    dens = h_d * total.reshape(len(aR), -1).sum(axis=1)
    return float(np.trapezoid(dens, dx=section.dt))


def schr_random_variation_profile(
    section: SchrSpacetimeSection, dphiR0: ScalarField, dphiI0: ScalarField
) -> tuple[SchrVariation, ...]:
    """Admissible variation: fixed slice shapes under a sin^2 time bump
    vanishing at both endpoints; dbeta_a = -grad dphi^a follows the
    constraint."""
    lat = section.states[0].lattice
    count = len(section.states)
    times = np.arange(count) * section.dt
    span = times[-1] - times[0]
    bump = np.sin(np.pi * (times - times[0]) / span) ** 2
    dbR0 = spectral_gradient(dphiR0)
    dbI0 = spectral_gradient(dphiI0)

    def scaled(f, b):
        return ScalarField(lat, b * f.values)

    def scaled_vec(v, b):
        return VectorField(lat, tuple(ScalarField(lat, -b * c.values) for c in v.components))

    out = []
    for b in bump:
        out.append(
            SchrVariation(
                dphiR=scaled(dphiR0, b),
                dphiI=scaled(dphiI0, b),
                dbetaR=scaled_vec(dbR0, b),
                dbetaI=scaled_vec(dbI0, b),
            )
        )
    zero = SchrVariation(
        dphiR=ScalarField(lat, np.zeros(lat.shape)),
        dphiI=ScalarField(lat, np.zeros(lat.shape)),
        dbetaR=VectorField(
            lat, tuple(ScalarField(lat, np.zeros(lat.shape)) for _ in range(lat.dim))
        ),
        dbetaI=VectorField(
            lat, tuple(ScalarField(lat, np.zeros(lat.shape)) for _ in range(lat.dim))
        ),
    )
    out[0] = zero
    out[-1] = zero
    return tuple(out)


def to_wavefunction(state: SchrState) -> np.ndarray:
    """psi = phiR + i phiI as a complex sample array."""
    return state.phiR.values + 1j * state.phiI.values


def from_wavefunction(lat: Lattice, psi: np.ndarray, time: float = 0.0) -> SchrState:
    psi = np.asarray(psi, dtype=complex)
    return schr_enforce_constraints(
        ScalarField(lat, psi.real), ScalarField(lat, psi.imag), time=time
    )


def schr_norm_squared(state: SchrState) -> float:
    """integral (phiR^2 + phiI^2); the conserved wavefunction norm."""
    return inner(state.phiR, state.phiR) + inner(state.phiI, state.phiI)

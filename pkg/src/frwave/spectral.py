"""Wavenumber-domain analysis of the upwinded scheme on stretched grids.

The semi-discrete update in cell j couples only to the upwind neighbour
j-1.  Injecting a single right-going wave and eliminating the neighbour
through a phase closure turns the update into a (p+1)x(p+1) eigenproblem
per wavenumber; the eigenvalue branch that tends to 1 as k -> 0 is the
physical mode, whose real part is the dispersion factor and whose
imaginary part is the dissipation factor.

Two neighbour closures are provided:

``sampled``
    Per-node phase shifts taken from sampling the wave at the actual
    solution-point locations of both cells.  Exact for sampled waves and
    consistent (c -> 1 as k -> 0) at every expansion rate.  Default for
    dispersion/dissipation curves, PPW and filter kernels.

``weighted``
    A single phase factor over the current cell width with the coupling
    scaled by the upwind/current Jacobian ratio.  This is the transformed-
    flux form used by the temporal stability analysis; it reproduces the
    published CFL tables but damps/amplifies the k -> 0 limit on stretched
    grids, so it is not used for resolution metrics.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .element import HUYNH_G2, ReferenceElement, reference_element

SAMPLED = "sampled"
WEIGHTED = "weighted"
CLOSURES = (SAMPLED, WEIGHTED)

#: wavenumber (times delta_j/(p+1)) at which physical-mode tracking is seeded
SEED_KHAT = 1e-3

UNRESOLVABLE = math.inf


class EigenSolveError(RuntimeError):
    """Eigen decomposition failed; carries the offending wavenumber."""

    def __init__(self, k_hat, detail=""):
        self.k_hat = k_hat
        super().__init__(f"eigen solve failed at k_hat={k_hat!r} {detail}".strip())


@dataclass
class SemiDiscreteOperator:
    """Cell-local matrices of the semi-discrete upwinded update.

    C0 acts on the cell's own nodal values, Cm1 on the upwind neighbour's.
    Jacobians are half cell widths (the reference interval has length 2).
    """

    element: ReferenceElement
    C0: np.ndarray
    Cm1: np.ndarray
    Jj: float
    Jjm1: float
    delta_j: float
    gamma: float

    def __post_init__(self):
        self.C0.setflags(write=False)
        self.Cm1.setflags(write=False)

    @property
    def p(self):
        return self.element.p

    def node_shifts(self):
        """Distance from each upwind-cell node to the same node of this cell."""
        xi = self.element.xi
        d_up = self.delta_j / self.gamma
        return d_up + 0.5 * (xi + 1.0) * (self.delta_j - d_up)

    def wave_symbol(self, k, closure=SAMPLED):
        """The (p+1)x(p+1) generator Q(k) of du_j/dt = Q u_j for one wave."""
        if closure == SAMPLED:
            phase = np.exp(-1j * k * self.node_shifts())
            coupling = self.Cm1 * phase[None, :]
            return -(self.C0 + coupling) / self.Jj
        if closure == WEIGHTED:
            return -(self.C0 / self.Jj
                     + self.Cm1 * (np.exp(-1j * k * self.delta_j) / self.Jjm1))
        raise ValueError(f"unknown closure {closure!r}; expected one of {CLOSURES}")


def build_operator(element, gamma, delta_j=None):
    """Assemble the semi-discrete operator for one cell of width delta_j.

    With no width given, delta_j defaults to p+1 so that unit average
    solution-point spacing makes physical and normalised wavenumbers agree.
    """
    if gamma <= 0:
        raise ValueError(f"expansion rate must be positive, got {gamma}")
    if delta_j is None:
        delta_j = float(element.p + 1)
    if delta_j <= 0:
        raise ValueError(f"cell width must be positive, got {delta_j}")
    C0 = element.D - np.outer(element.hl, element.ll)
    Cm1 = np.outer(element.hl, element.lr)
    return SemiDiscreteOperator(
        element=element,
        C0=C0,
        Cm1=Cm1,
        Jj=delta_j / 2.0,
        Jjm1=delta_j / (2.0 * gamma),
        delta_j=delta_j,
        gamma=gamma,
    )


@dataclass
class SpectralSample:
    """Eigenvalues of the phase-velocity problem at one wavenumber."""

    k: float
    k_hat: float
    eigenvalues: np.ndarray
    physical: int

    @property
    def c(self):
        return self.eigenvalues[self.physical]


@dataclass
class SpectralCurve:
    """Physical-mode (and full-set) phase velocities over k_hat in (0, pi]."""

    samples: list
    p: int
    gamma: float
    correction_kind: str
    closure: str
    delta_j: float

    @property
    def k_hat(self):
        return np.array([s.k_hat for s in self.samples])

    @property
    def c(self):
        return np.array([s.c for s in self.samples])

    @property
    def k(self):
        return np.array([s.k for s in self.samples])


def _eigvals(op, k, closure):
    M = op.wave_symbol(k, closure)
    try:
        ev = np.linalg.eigvals(1j * M / k)
    except np.linalg.LinAlgError as exc:
        raise EigenSolveError(k * op.delta_j / (op.p + 1), str(exc)) from exc
    if not np.all(np.isfinite(ev)):
        raise EigenSolveError(k * op.delta_j / (op.p + 1), "non-finite eigenvalues")
    return ev


def _match(prev, ev):
    """Permute ev so entry i continues branch i of prev (bipartite matching)."""
    cost = np.abs(prev[:, None] - ev[None, :])
    _, cols = linear_sum_assignment(cost)
    return ev[cols]


def modified_phase_velocity(op, k, closure=SAMPLED):
    """All complex phase velocities at physical wavenumber k, tracked from k -> 0.

    The physical mode is identified by continuity: at a tiny seed wavenumber
    exactly one eigenvalue sits near 1; it is followed to the requested k by
    nearest-neighbour matching along a geometric ladder.
    """
    if k <= 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    k_seed = SEED_KHAT * (op.p + 1) / op.delta_j
    if k <= k_seed:
        ev = _eigvals(op, k, closure)
        phys = int(np.argmin(np.abs(ev - 1.0)))
    else:
        ladder = np.geomspace(k_seed, k, max(8, int(8 * math.log10(k / k_seed) + 1)))
        ev = _eigvals(op, ladder[0], closure)
        order = np.argsort(np.abs(ev - 1.0))
        ev = ev[order]
        for kk in ladder[1:]:
            ev = _match(ev, _eigvals(op, kk, closure))
        phys = 0
    k_hat = k * op.delta_j / (op.p + 1)
    return SpectralSample(k=k, k_hat=k_hat, eigenvalues=ev, physical=phys)


def dispersion_curve(p, gamma, correction_kind=HUYNH_G2, n_samples=256,
                     closure=SAMPLED, delta_j=None):
    """Tracked phase-velocity curve over k_hat uniformly sampled in (0, pi]."""
    if n_samples < 64:
        raise ValueError(f"need at least 64 samples, got {n_samples}")
    element = reference_element(p, correction_kind)
    op = build_operator(element, gamma, delta_j)
    k_hats = np.linspace(np.pi / n_samples, np.pi, n_samples)
    ks = k_hats * (p + 1) / op.delta_j
    # seed the branch ordering below the first sample, then march upward
    k_seed = SEED_KHAT * (p + 1) / op.delta_j
    ev = _eigvals(op, k_seed, closure)
    ev = ev[np.argsort(np.abs(ev - 1.0))]
    for kk in np.geomspace(k_seed, ks[0], 8)[1:-1]:
        ev = _match(ev, _eigvals(op, kk, closure))
    samples = []
    for k_hat, k in zip(k_hats, ks):
        ev = _match(ev, _eigvals(op, k, closure))
        samples.append(SpectralSample(k=k, k_hat=k_hat, eigenvalues=ev, physical=0))
    return SpectralCurve(samples=samples, p=p, gamma=gamma,
                         correction_kind=correction_kind, closure=closure,
                         delta_j=op.delta_j)


def filter_kernel(curve, t):
    """Implied low-pass kernel of running the scheme for time t.

    A unit wave decays like exp(k Im(c) t), so the kernel at each sampled
    k_hat is that factor, normalised to 1 at the resolved end.
    """
    if t <= 0:
        raise ValueError(f"time must be positive, got {t}")
    k = curve.k
    g = np.exp(t * k * curve.c.imag)
    g0 = math.exp(t * curve.samples[0].k * curve.samples[0].c.imag)
    return curve.k_hat, g / g0


def ppw(curve, epsilon=0.01):
    """Solution points per wavelength keeping dispersion error below epsilon.

    Uses the first-crossing rule: k* is the largest sampled k_hat such that
    every sample at or below it has |Re(c) - 1| < epsilon.  Returns
    2*pi/k*, or inf when even the first sample violates the bound.
    """
    if epsilon <= 0:
        raise ValueError(f"error level must be positive, got {epsilon}")
    k_hat = curve.k_hat
    err = np.abs(curve.c.real - 1.0)
    bad = np.nonzero(err >= epsilon)[0]
    if len(bad) == 0:
        return 2.0 * np.pi / k_hat[-1]
    if bad[0] == 0:
        return UNRESOLVABLE
    return 2.0 * np.pi / k_hat[bad[0] - 1]


def fd_modified_wavenumber(offsets, weights, k):
    """Phase velocity c(k) of a finite-difference first-derivative stencil.

    Parameters
    ----------
    offsets : signed physical distances from the stencil centre (0 included).
    weights : derivative weights on those points (Lagrange weights for
        non-uniform spacing).
    k : wavenumber.

    du/dx at the centre of a sampled wave e^{ikx} comes out as
    (sum_o w_o e^{ik d_o}) u, so c(k) = -i/k times that sum; real for
    symmetric (central) stencils on uniform spacing.
    """
    offsets = np.asarray(offsets, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if offsets.shape != weights.shape:
        raise ValueError(f"stencil size mismatch: {offsets.shape} vs {weights.shape}")
    if k <= 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    return -1j / k * np.sum(weights * np.exp(1j * k * offsets))

"""2D compressible Euler on quadrilateral meshes.

Two solvers share the mesh, the Riemann fluxes and the convecting-vortex
exact solution:

* a tensor-product element solver (the high-order scheme under study),
  built on the bilinear mapping of each quad so the metric terms are
  exact and a uniform free stream is preserved on arbitrarily jittered
  meshes;
* a nominally second-order MUSCL finite-volume baseline in the structured
  style of industrial codes: index-space reconstruction that is exactly
  second order on smooth meshes and degrades when node placement is not.

States are conserved variables (rho, rho u, rho v, E), gas gamma = 1.4.
"""

import math
from dataclasses import dataclass

import numpy as np

from .element import reference_element

GAMMA_GAS = 1.4


class NonPhysicalStateError(RuntimeError):
    """Density or pressure lost positivity; carries the element index."""

    def __init__(self, where):
        self.where = where
        super().__init__(f"non-physical state (rho or p <= 0) at element {where}")


# ---------------------------------------------------------------------------
# state conversions and fluxes

def primitive_to_conserved(rho, u, v, p):
    E = p / (GAMMA_GAS - 1.0) + 0.5 * rho * (u * u + v * v)
    return np.stack([rho, rho * u, rho * v, E], axis=-1)


def conserved_to_primitive(U):
    rho = U[..., 0]
    u = U[..., 1] / rho
    v = U[..., 2] / rho
    p = (GAMMA_GAS - 1.0) * (U[..., 3] - 0.5 * rho * (u * u + v * v))
    return rho, u, v, p


def euler_normal_flux(U, nx, ny):
    """Physical flux of conserved state U through unit normal (nx, ny)."""
    rho, u, v, p = conserved_to_primitive(U)
    un = u * nx + v * ny
    return np.stack([
        rho * un,
        U[..., 1] * un + p * nx,
        U[..., 2] * un + p * ny,
        (U[..., 3] + p) * un,
    ], axis=-1)


def rusanov_flux(UL, UR, nx, ny):
    """Local Lax-Friedrichs: averaged flux plus max-wavespeed penalty."""
    rhoL, uL, vL, pL = conserved_to_primitive(UL)
    rhoR, uR, vR, pR = conserved_to_primitive(UR)
    cL = np.sqrt(GAMMA_GAS * pL / rhoL)
    cR = np.sqrt(GAMMA_GAS * pR / rhoR)
    sL = np.abs(uL * nx + vL * ny) + cL
    sR = np.abs(uR * nx + vR * ny) + cR
    smax = np.maximum(sL, sR)
    FL = euler_normal_flux(UL, nx, ny)
    FR = euler_normal_flux(UR, nx, ny)
    return 0.5 * (FL + FR) - 0.5 * smax[..., None] * (UR - UL)


def roe_flux(UL, UR, nx, ny):
    """Roe's approximate Riemann solver with a small entropy fix."""
    rhoL, uL, vL, pL = conserved_to_primitive(UL)
    rhoR, uR, vR, pR = conserved_to_primitive(UR)
    nx = np.broadcast_to(nx, rhoL.shape)
    ny = np.broadcast_to(ny, rhoL.shape)
    HL = (UL[..., 3] + pL) / rhoL
    HR = (UR[..., 3] + pR) / rhoR
    sqL, sqR = np.sqrt(rhoL), np.sqrt(rhoR)
    w = sqL / (sqL + sqR)
    u = w * uL + (1 - w) * uR
    v = w * vL + (1 - w) * vR
    H = w * HL + (1 - w) * HR
    q2 = u * u + v * v
    a2 = (GAMMA_GAS - 1.0) * (H - 0.5 * q2)
    a = np.sqrt(np.maximum(a2, 1e-300))
    un = u * nx + v * ny
    ut = -u * ny + v * nx

    drho = rhoR - rhoL
    dp = pR - pL
    dun = (uR * nx + vR * ny) - (uL * nx + vL * ny)
    dut = (-uR * ny + vR * nx) - (-uL * ny + vL * nx)

    lam = np.stack([np.abs(un - a), np.abs(un), np.abs(un + a), np.abs(un)], axis=-1)
    # Harten entropy fix on the acoustic waves
    eps = 0.05 * a
    for i in (0, 2):
        l = lam[..., i]
        lam[..., i] = np.where(l < eps, (l * l / eps + eps) * 0.5, l)

    rho_roe = np.sqrt(rhoL * rhoR)
    a1 = (dp - rho_roe * a * dun) / (2.0 * a2)
    a2_ = drho - dp / a2
    a3 = (dp + rho_roe * a * dun) / (2.0 * a2)
    a4 = rho_roe * dut

    one = np.ones_like(u)
    K1 = np.stack([one, u - a * nx, v - a * ny, H - un * a], axis=-1)
    K2 = np.stack([one, u, v, 0.5 * q2], axis=-1)
    K3 = np.stack([one, u + a * nx, v + a * ny, H + un * a], axis=-1)
    K4 = np.stack([np.zeros_like(u), -ny, nx, ut], axis=-1)

    diss = (lam[..., 0:1] * a1[..., None] * K1
            + lam[..., 1:2] * a2_[..., None] * K2
            + lam[..., 2:3] * a3[..., None] * K3
            + lam[..., 3:4] * a4[..., None] * K4)
    FL = euler_normal_flux(UL, nx, ny)
    FR = euler_normal_flux(UR, nx, ny)
    return 0.5 * (FL + FR) - 0.5 * diss


RIEMANN_SOLVERS = {"rusanov": rusanov_flux, "roe": roe_flux}


# ---------------------------------------------------------------------------
# convecting isentropic vortex

@dataclass
class ICVParams:
    """Analytic vortex configuration: strength and radius of the core,
    uniform free stream, unit ambient density/temperature, on a periodic
    square of side `extent` (at least ~10 radii for clean periodicity)."""

    strength: float = 5.0
    radius: float = 1.0
    u_inf: float = 1.0
    v_inf: float = 1.0
    centre: tuple = (5.0, 5.0)
    extent: float = 10.0

    def __post_init__(self):
        if self.strength <= 0 or self.radius <= 0:
            raise ValueError("vortex strength and radius must be positive")


def icv_primitive(x, y, t, params=None):
    """Exact vortex state at time t: the t=0 field advected by the free
    stream, wrapped periodically (minimum image)."""
    pr = params or ICVParams()
    Lb = pr.extent
    dx = (np.asarray(x) - pr.centre[0] - pr.u_inf * t + 0.5 * Lb) % Lb - 0.5 * Lb
    dy = (np.asarray(y) - pr.centre[1] - pr.v_inf * t + 0.5 * Lb) % Lb - 0.5 * Lb
    r2 = (dx * dx + dy * dy) / pr.radius ** 2
    bump = pr.strength / (2.0 * np.pi) * np.exp(0.5 * (1.0 - r2))
    u = pr.u_inf - bump * dy / pr.radius
    v = pr.v_inf + bump * dx / pr.radius
    T = 1.0 - (GAMMA_GAS - 1.0) * bump * bump / (2.0 * GAMMA_GAS)
    rho = T ** (1.0 / (GAMMA_GAS - 1.0))
    p = rho * T
    return rho, u, v, p


# ---------------------------------------------------------------------------
# tensor-product element solver

class FREulerSolver2D:
    """High-order solver on bilinearly mapped quads, periodic structured
    connectivity.  State shape: (n_elem, p+1, p+1, 4) with axes
    (element, xi index, eta index, variable)."""

    def __init__(self, mesh, p, riemann="rusanov"):
        self.mesh = mesh
        self.element = reference_element(p)
        self.riemann = RIEMANN_SOLVERS[riemann]
        e = self.element
        n = e.n_points
        nx, ny = mesh.nx, mesh.ny
        ne = mesh.n_elements
        X = mesh.corner_coords()          # (ne, 4, 2)

        xi = e.xi
        A, B = np.meshgrid(xi, xi, indexing="ij")   # A: xi at (a,b), B: eta

        def bilinear(coeff_xi, coeff_eta):
            "Map corner data through shape functions on the (a, b) tensor grid."
            N0 = (1 - coeff_xi) * (1 - coeff_eta) / 4.0
            N1 = (1 + coeff_xi) * (1 - coeff_eta) / 4.0
            N2 = (1 + coeff_xi) * (1 + coeff_eta) / 4.0
            N3 = (1 - coeff_xi) * (1 + coeff_eta) / 4.0
            return np.stack([N0, N1, N2, N3], axis=-1)

        Nsol = bilinear(A, B)                       # (n, n, 4)
        self.x = np.einsum("abc,ecd->eabd", Nsol, X)  # (ne, n, n, 2)

        # map derivatives at solution points (each linear in one variable)
        x_xi = (np.einsum("ab,ed->eabd", (1 - B) / 4.0, X[:, 1] - X[:, 0])
                + np.einsum("ab,ed->eabd", (1 + B) / 4.0, X[:, 2] - X[:, 3]))
        x_eta = (np.einsum("ab,ed->eabd", (1 - A) / 4.0, X[:, 3] - X[:, 0])
                 + np.einsum("ab,ed->eabd", (1 + A) / 4.0, X[:, 2] - X[:, 1]))
        self.detJ = x_xi[..., 0] * x_eta[..., 1] - x_xi[..., 1] * x_eta[..., 0]
        if np.any(self.detJ <= 0):
            raise ValueError("non-positive mapping Jacobian; mesh is tangled")
        # transformed-flux metric rows: Fhat = m1 . (F, G), Ghat = m2 . (F, G)
        self.m1 = np.stack([x_eta[..., 1], -x_eta[..., 0]], axis=-1)  # (ne,n,n,2)
        self.m2 = np.stack([-x_xi[..., 1], x_xi[..., 0]], axis=-1)

        # per-face constant edge metrics (edges of a bilinear quad are straight)
        self.ne_edge = np.stack([(X[:, 2, 1] - X[:, 1, 1]) / 2.0,
                                 -(X[:, 2, 0] - X[:, 1, 0]) / 2.0], axis=-1)  # east
        self.nw_edge = np.stack([(X[:, 3, 1] - X[:, 0, 1]) / 2.0,
                                 -(X[:, 3, 0] - X[:, 0, 0]) / 2.0], axis=-1)  # west
        self.nn_edge = np.stack([-(X[:, 2, 1] - X[:, 3, 1]) / 2.0,
                                 (X[:, 2, 0] - X[:, 3, 0]) / 2.0], axis=-1)   # north
        self.ns_edge = np.stack([-(X[:, 1, 1] - X[:, 0, 1]) / 2.0,
                                 (X[:, 1, 0] - X[:, 0, 0]) / 2.0], axis=-1)   # south

        ids = np.arange(ne).reshape(ny, nx)
        self.east = np.roll(ids, -1, axis=1).ravel()
        self.west = np.roll(ids, 1, axis=1).ravel()
        self.north = np.roll(ids, -1, axis=0).ravel()
        self.south = np.roll(ids, 1, axis=0).ravel()

        def unit(edge):
            s = np.linalg.norm(edge, axis=-1)
            return s, edge[..., 0] / s, edge[..., 1] / s

        self.s_e, self.nx_e, self.ny_e = unit(self.ne_edge)
        self.s_n, self.nx_n, self.ny_n = unit(self.nn_edge)

        self.D = e.D
        self.ll = e.ll
        self.lr = e.lr
        self.hl = e.hl
        self.hr = e.hr

    @property
    def dof(self):
        return self.mesh.n_elements * self.element.n_points ** 2

    def project(self, fn, t=0.0):
        """Collocate a primitive-state function (x, y, t) -> (rho,u,v,p)."""
        rho, u, v, p = fn(self.x[..., 0], self.x[..., 1], t)
        return primitive_to_conserved(rho, u, v, p)

    def _check_physical(self, rho, p):
        if np.all(rho > 0) and np.all(p > 0):
            return
        bad = np.nonzero(~((rho > 0) & (p > 0)))
        raise NonPhysicalStateError(int(bad[0][0]))

    def rhs(self, U):
        rho, u, v, p = conserved_to_primitive(U)
        self._check_physical(rho, p)
        F = np.stack([U[..., 1],
                      U[..., 1] * u + p,
                      U[..., 2] * u,
                      (U[..., 3] + p) * u], axis=-1)
        G = np.stack([U[..., 2],
                      U[..., 1] * v,
                      U[..., 2] * v + p,
                      (U[..., 3] + p) * v], axis=-1)
        Fh = self.m1[..., 0, None] * F + self.m1[..., 1, None] * G
        Gh = self.m2[..., 0, None] * F + self.m2[..., 1, None] * G
        div = (np.einsum("ia,eabv->eibv", self.D, Fh)
               + np.einsum("jb,eabv->eajv", self.D, Gh))

        # interface corrections, one pair of faces per reference direction
        UE = np.einsum("a,eabv->ebv", self.lr, U)
        UW = np.einsum("a,eabv->ebv", self.ll, U)
        UN = np.einsum("b,eabv->eav", self.lr, U)
        US = np.einsum("b,eabv->eav", self.ll, U)
        FhE = np.einsum("a,eabv->ebv", self.lr, Fh)
        FhW = np.einsum("a,eabv->ebv", self.ll, Fh)
        GhN = np.einsum("b,eabv->eav", self.lr, Gh)
        GhS = np.einsum("b,eabv->eav", self.ll, Gh)

        # east faces: owner trace vs east neighbour's west trace
        Fc_E = self.s_e[:, None, None] * self.riemann(
            UE, UW[self.east], self.nx_e[:, None], self.ny_e[:, None])
        Fc_W = Fc_E[self.west]     # same face, same transformed value
        Gc_N = self.s_n[:, None, None] * self.riemann(
            UN, US[self.north], self.nx_n[:, None], self.ny_n[:, None])
        Gc_S = Gc_N[self.south]

        corr = (np.einsum("a,ebv->eabv", self.hr, Fc_E - FhE)
                + np.einsum("a,ebv->eabv", self.hl, Fc_W - FhW)
                + np.einsum("b,eav->eabv", self.hr, Gc_N - GhN)
                + np.einsum("b,eav->eabv", self.hl, Gc_S - GhS))
        return -(div + corr) / self.detJ[..., None]

    def max_signal_speed(self, U):
        rho, u, v, p = conserved_to_primitive(U)
        return float((np.sqrt(u * u + v * v)
                      + np.sqrt(GAMMA_GAS * p / rho)).max())

    def length_scale(self):
        """Smallest edge length divided by the points-per-edge count."""
        X = self.mesh.corner_coords()
        edges = np.linalg.norm(np.roll(X, -1, axis=1) - X, axis=-1)
        return float(edges.min()) / self.element.n_points


# ---------------------------------------------------------------------------
# finite-volume baseline

class FVEulerSolver2D:
    """Nominally second-order MUSCL baseline, periodic structured mesh.

    Everything is done the structured-curvilinear way: reconstruction is
    index-space central differencing of cell data, and with
    metrics="curvilinear" (default) the face area vectors also come from
    index-space central differences of the mesh coordinates.  Both
    assume a smooth node placement: exactly second order on uniform
    meshes, degrading (to zeroth order for the metric evaluation) when
    nodes are randomly jittered.  metrics="exact" instead takes face
    vectors from the actual cell geometry, which keeps the scheme
    convergent on rough meshes.  Unlimited (smooth test cases only).
    State shape: (n_cells, 4).
    """

    def __init__(self, mesh, riemann="rusanov", reconstruction="muscl",
                 metrics="curvilinear"):
        if reconstruction not in ("muscl", "first-order"):
            raise ValueError(f"unknown reconstruction {reconstruction!r}")
        if metrics not in ("curvilinear", "exact"):
            raise ValueError(f"unknown metric mode {metrics!r}")
        self.mesh = mesh
        self.riemann = RIEMANN_SOLVERS[riemann]
        self.reconstruction = reconstruction
        self.metrics = metrics
        nx, ny = mesh.nx, mesh.ny
        L = mesh.L
        X = mesh.corner_coords()                      # (ne, 4, 2)

        x = X[..., 0]; y = X[..., 1]
        cross = (x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y)
        self.area = 0.5 * np.abs(cross.sum(axis=1))
        sgn = np.sign(cross.sum(axis=1))
        cx = ((x + np.roll(x, -1, axis=1)) * cross).sum(axis=1) / (6.0 * self.area * sgn)
        cy = ((y + np.roll(y, -1, axis=1)) * cross).sum(axis=1) / (6.0 * self.area * sgn)
        self.centroid = np.stack([cx, cy], axis=-1)

        ids = np.arange(mesh.n_elements).reshape(ny, nx)
        self.east = np.roll(ids, -1, axis=1).ravel()
        self.west = np.roll(ids, 1, axis=1).ravel()
        self.north = np.roll(ids, -1, axis=0).ravel()
        self.south = np.roll(ids, 1, axis=0).ravel()

        if metrics == "exact":
            def edge_normal(a, b):
                t = X[:, b] - X[:, a]
                return np.stack([t[:, 1], -t[:, 0]], axis=-1)
            self.n_e = edge_normal(1, 2)
            self.n_n = edge_normal(2, 3)
            self.n_w = edge_normal(3, 0)
            self.n_s = edge_normal(0, 1)
        else:
            # curvilinear metric shortcut: the mesh is assumed to be a
            # smooth mapping of the index grid, so each face area vector is
            # taken as the centre-to-centre difference across the face
            # (correct length and orientation whenever node placement is
            # smooth; exact on uniform meshes).  One vector per face keeps
            # the update conservative, but the vectors of a cell no longer
            # sum to zero once random jitter breaks the smoothness, which
            # is what erodes this family of schemes on poor meshes.
            C = self.centroid.reshape(ny, nx, 2)

            def wrapped_step(A, axis):
                B = np.roll(A, -1, axis=axis).copy()
                if axis == 1:
                    B[:, -1, 0] += L
                else:
                    B[-1, :, 1] += L
                return B

            self.n_e = (wrapped_step(C, 1) - C).reshape(-1, 2)
            self.n_n = (wrapped_step(C, 0) - C).reshape(-1, 2)
            self.n_w = -self.n_e[self.west]
            self.n_s = -self.n_n[self.south]
        self.edge_len_min = float(min(np.linalg.norm(n, axis=1).min()
                                      for n in (self.n_e, self.n_n)))

        def unit(n):
            s = np.linalg.norm(n, axis=-1)
            return s, n[:, 0] / s, n[:, 1] / s

        self.face_geom = {side: unit(n) for side, n in
                          (("e", self.n_e), ("n", self.n_n),
                           ("w", self.n_w), ("s", self.n_s))}

    @property
    def dof(self):
        return self.mesh.n_elements

    def project(self, fn, t=0.0):
        rho, u, v, p = fn(self.centroid[:, 0], self.centroid[:, 1], t)
        return primitive_to_conserved(rho, u, v, p)

    def rhs(self, U):
        rho = U[..., 0]
        p = (GAMMA_GAS - 1.0) * (U[..., 3] - 0.5 * (U[..., 1] ** 2 + U[..., 2] ** 2) / rho)
        if not (np.all(rho > 0) and np.all(p > 0)):
            bad = np.nonzero(~((rho > 0) & (p > 0)))
            raise NonPhysicalStateError(int(bad[0][0]))
        if self.reconstruction == "muscl":
            gx = 0.5 * (U[self.east] - U[self.west])    # per unit index
            gy = 0.5 * (U[self.north] - U[self.south])
            uE = U + 0.5 * gx
            uW = U - 0.5 * gx
            uN = U + 0.5 * gy
            uS = U - 0.5 * gy
        else:
            uE = uW = uN = uS = U

        def face_flux(Um, Up, side):
            s, nx_, ny_ = self.face_geom[side]
            return s[:, None] * self.riemann(Um, Up, nx_, ny_)

        flux = (face_flux(uE, uW[self.east], "e")
                + face_flux(uN, uS[self.north], "n")
                + face_flux(uW, uE[self.west], "w")
                + face_flux(uS, uN[self.south], "s"))
        return -flux / self.area[:, None]

    def max_signal_speed(self, U):
        rho, u, v, p = conserved_to_primitive(U)
        return float((np.sqrt(u * u + v * v)
                      + np.sqrt(GAMMA_GAS * p / rho)).max())

    def length_scale(self):
        """Smallest cell diameter (largest diagonal per cell)."""
        X = self.mesh.corner_coords()
        diam = np.maximum(np.linalg.norm(X[:, 2] - X[:, 0], axis=-1),
                          np.linalg.norm(X[:, 3] - X[:, 1], axis=-1))
        return float(diam.min())


# ---------------------------------------------------------------------------
# error norms and convergence

@dataclass
class ErrorReport:
    theta: float          # point-averaged l2 norm over the 4-variable vector
    per_variable: np.ndarray
    dof: int


def error_norm(computed, exact):
    """Point-averaged l2 error: mean over points of the per-point
    4-variable 2-norm, plus per-variable RMS."""
    if computed.shape != exact.shape:
        raise ValueError(f"shape mismatch: {computed.shape} vs {exact.shape}")
    diff = (computed - exact).reshape(-1, computed.shape[-1])
    theta = float(np.mean(np.linalg.norm(diff, axis=1)))
    per_var = np.sqrt(np.mean(diff ** 2, axis=0))
    return ErrorReport(theta=theta, per_variable=per_var,
                       dof=diff.shape[0])


def ooa(reports):
    """Observed order of accuracy: least-squares slope of log error
    against log of the per-direction resolution sqrt(DoF)."""
    if len(reports) < 2:
        raise ValueError("need at least two resolutions")
    x = np.log([math.sqrt(r.dof) for r in reports])
    y = np.log([r.theta for r in reports])
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


def advance_state(solver, U0, tau, scheme, steps):
    """Low-storage RK march (same stage loop as the 1D solvers)."""
    from .advect1d import advance
    return advance(solver, U0, tau, scheme, steps)


def run_icv(solver, steps=500, cfl=0.01, scheme="RK44", params=None):
    """March the convecting vortex and report the error against the exact
    solution at the final time."""
    pr = params or ICVParams()
    fn = lambda x, y, t: icv_primitive(x, y, t, pr)
    U0 = solver.project(fn)
    tau = cfl * solver.length_scale() / solver.max_signal_speed(U0)
    U = advance_state(solver, U0, tau, scheme, steps)
    exact = solver.project(fn, t=steps * tau)
    return error_norm(U, exact)

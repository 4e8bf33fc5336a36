"""Quadrilateral meshes: uniform grids, seeded node jitter, skew metric.

Meshes are structured (nx by ny quads on a periodic square) but stored
with explicit nodes and counterclockwise corner connectivity so the
solvers never rely on smoothness of the node placement.  Jitter uses a
counter-based generator (Philox) keyed by the seed, so a given
(nx, ny, factor, seed) always reproduces the same mesh on any platform.
"""

from dataclasses import dataclass

import numpy as np


class MeshTangleError(RuntimeError):
    """Node displacement produced a non-convex/inverted element."""


@dataclass
class QuadMesh2D:
    nodes: np.ndarray     # (n_nodes, 2)
    elements: np.ndarray  # (n_elem, 4) corner indices, counterclockwise
    nx: int
    ny: int
    L: float
    jitter_factor: float = 0.0
    seed: int = 0

    @property
    def n_elements(self):
        return len(self.elements)

    def corner_coords(self):
        """Element corner coordinates, shape (n_elem, 4, 2)."""
        return self.nodes[self.elements]


def _node_id(i, j, nx):
    return j * (nx + 1) + i


def uniform_quad_mesh(nx, ny, L=1.0):
    """Axis-aligned nx-by-ny quadrilateral mesh of the square [0, L]^2."""
    if nx < 2 or ny < 2:
        raise ValueError(f"need at least 2x2 elements, got {nx}x{ny}")
    xs = np.linspace(0.0, L, nx + 1)
    ys = np.linspace(0.0, L, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
    elements = np.empty((nx * ny, 4), dtype=int)
    e = 0
    for j in range(ny):
        for i in range(nx):
            elements[e] = (_node_id(i, j, nx), _node_id(i + 1, j, nx),
                           _node_id(i + 1, j + 1, nx), _node_id(i, j + 1, nx))
            e += 1
    return QuadMesh2D(nodes=nodes, elements=elements, nx=nx, ny=ny, L=float(L))


def _corner_jacobians(corners):
    """Cross products at the four corners of each element (positive for a
    convex, counterclockwise quad).  corners: (..., 4, 2)."""
    out = np.empty(corners.shape[:-2] + (4,))
    for c in range(4):
        a = corners[..., (c + 1) % 4, :] - corners[..., c, :]
        b = corners[..., (c + 3) % 4, :] - corners[..., c, :]
        out[..., c] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def jitter(mesh, factor, seed):
    """Displace interior nodes by factor*cell_size*uniform[-0.5, 0.5]^2.

    Boundary nodes stay fixed so the periodic domain is preserved.  Nodes
    are visited in row-major order; a displacement that inverts one of the
    touching elements is redrawn (up to 100 times) before giving up.
    Deterministic for a fixed seed.
    """
    if factor < 0:
        raise ValueError(f"jitter factor must be non-negative, got {factor}")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    nodes = mesh.nodes.copy()
    if factor == 0.0:
        return QuadMesh2D(nodes=nodes, elements=mesh.elements.copy(),
                          nx=mesh.nx, ny=mesh.ny, L=mesh.L,
                          jitter_factor=factor, seed=int(seed))
    nx, ny = mesh.nx, mesh.ny
    cell = np.array([mesh.L / nx, mesh.L / ny])
    # elements touching node (i, j): all (ei, ej) with ei in {i-1, i}, ...
    def touching(i, j):
        out = []
        for ej in (j - 1, j):
            for ei in (i - 1, i):
                if 0 <= ei < nx and 0 <= ej < ny:
                    out.append(ej * nx + ei)
        return out

    for j in range(1, ny):
        for i in range(1, nx):
            nid = _node_id(i, j, nx)
            elems = touching(i, j)
            base = nodes[nid].copy()
            for attempt in range(100):
                disp = factor * cell * rng.uniform(-0.5, 0.5, size=2)
                nodes[nid] = base + disp
                jac = _corner_jacobians(nodes[mesh.elements[elems]])
                if np.all(jac > 0.0):
                    break
            else:
                raise MeshTangleError(
                    f"could not place node ({i}, {j}) after 100 draws "
                    f"(factor={factor})")
    return QuadMesh2D(nodes=nodes, elements=mesh.elements.copy(),
                      nx=nx, ny=ny, L=mesh.L,
                      jitter_factor=factor, seed=int(seed))


@dataclass
class SkewReport:
    alpha: float                # mesh-average |cross-diagonal deviation|, degrees
    per_element: np.ndarray     # |beta - 90| per element, degrees


def skew_angle(mesh):
    """Mesh-average absolute angle by which element cross diagonals
    deviate from square: beta is the (acute) angle between the two
    corner-to-corner diagonals, alpha_e = |beta - 90 degrees|."""
    corners = mesh.corner_coords()
    d1 = corners[:, 2] - corners[:, 0]
    d2 = corners[:, 3] - corners[:, 1]
    n1 = np.linalg.norm(d1, axis=1)
    n2 = np.linalg.norm(d2, axis=1)
    if np.any(n1 == 0.0) or np.any(n2 == 0.0):
        raise ValueError("degenerate element: zero-length cross diagonal")
    cosb = np.abs(np.sum(d1 * d2, axis=1)) / (n1 * n2)
    beta = np.degrees(np.arccos(np.clip(cosb, -1.0, 1.0)))
    per_element = np.abs(beta - 90.0)
    return SkewReport(alpha=float(per_element.mean()), per_element=per_element)


def jitter_factor_for_skew(mesh, target_alpha, seed, tol=0.1, max_factor=0.95):
    """Bisect the jitter factor until the mesh-average skew angle lands
    within tol degrees of target_alpha.  Returns (factor, jittered mesh)."""
    lo, hi = 0.0, max_factor
    if skew_angle(jitter(mesh, hi, seed)).alpha < target_alpha:
        raise ValueError(f"target skew {target_alpha} deg unreachable below "
                         f"factor {max_factor}")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        m = jitter(mesh, mid, seed)
        a = skew_angle(m).alpha
        if abs(a - target_alpha) <= tol:
            return mid, m
        if a < target_alpha:
            lo = mid
        else:
            hi = mid
    return mid, m


def write_mesh(mesh, path):
    """Plain-text mesh file: header, node lines 'x y', element lines of
    four counterclockwise corner indices."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"quadmesh {mesh.nx} {mesh.ny} {float(mesh.L)!r} "
                f"{float(mesh.jitter_factor)!r} {mesh.seed}\n")
        f.write(f"{len(mesh.nodes)} {len(mesh.elements)}\n")
        for x, y in mesh.nodes:
            f.write(f"{float(x)!r} {float(y)!r}\n")
        for quad in mesh.elements:
            f.write(" ".join(str(c) for c in quad) + "\n")


def read_mesh(path):
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if header[0] != "quadmesh":
            raise ValueError(f"{path} is not a quadmesh file")
        nx, ny = int(header[1]), int(header[2])
        L, factor, seed = float(header[3]), float(header[4]), int(header[5])
        n_nodes, n_elem = map(int, f.readline().split())
        nodes = np.array([[float(v) for v in f.readline().split()]
                          for _ in range(n_nodes)])
        elements = np.array([[int(v) for v in f.readline().split()]
                             for _ in range(n_elem)], dtype=int)
    return QuadMesh2D(nodes=nodes, elements=elements, nx=nx, ny=ny, L=L,
                      jitter_factor=factor, seed=seed)

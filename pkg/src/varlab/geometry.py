"""Discrete manifolds: weighted graphs and warped-product radial grids.

A ``DiscreteManifold`` is the finite stand-in for a complete Riemannian
manifold with a distinguished base point: nodes carry volume weights,
undirected edges carry conductances and lengths, and every node knows its
geodesic distance from the base point.  Truncated radial grids model
rotationally symmetric metrics ``dr^2 + phi(r)^2 g_sphere`` on ``[0, R_max]``;
the grid is cell-centered, the center is Neumann-natural (completeness at
r = 0) and the outer wall carries a Dirichlet ghost flux so that the
truncation radius plays the role of infinity for compactly supported test
functions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from . import catalog
from .errors import ValidationError

_SPHERE_AREA_CACHE = {}


def unit_sphere_area(n):
    """Surface area of the unit sphere S^{n-1} in R^n."""
    if n not in _SPHERE_AREA_CACHE:
        from scipy.special import gamma

        _SPHERE_AREA_CACHE[n] = 2.0 * np.pi ** (n / 2.0) / gamma(n / 2.0)
    return _SPHERE_AREA_CACHE[n]


@dataclass(frozen=True)
class DiscreteManifold:
    """Weighted graph with base-point distances.

    ``boundary_conductance`` holds per-node Dirichlet ghost fluxes: a
    positive entry means the node has an extra edge to a zero-valued wall
    (used by radial grids at the truncation radius).  Closed manifolds have
    all zeros there.
    """

    volume_weights: np.ndarray
    edge_nodes: np.ndarray          # (E, 2) int
    conductances: np.ndarray        # (E,)
    edge_lengths: np.ndarray        # (E,)
    dimension: int
    base_point: int
    node_distances: np.ndarray
    boundary_conductance: np.ndarray
    truncation_radius: float
    kind: str = "graph"

    @property
    def node_count(self):
        return self.volume_weights.shape[0]

    @property
    def total_volume(self):
        return float(self.volume_weights.sum())

    @property
    def is_closed(self):
        return not np.any(self.boundary_conductance > 0)

    def adjacency(self, values=None):
        """Symmetric sparse adjacency with ``values`` on the edges."""
        if values is None:
            values = self.conductances
        i, j = self.edge_nodes[:, 0], self.edge_nodes[:, 1]
        n = self.node_count
        return sp.coo_matrix(
            (np.concatenate([values, values]),
             (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(n, n),
        ).tocsr()

    def validate(self):
        w = self.volume_weights
        if w.ndim != 1 or w.size == 0:
            raise ValidationError("volume_weights must be a non-empty 1-d array")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            bad = int(np.argmin(w))
            raise ValidationError(f"non-positive volume weight at node {bad}")
        e = self.edge_nodes
        if e.shape != (self.conductances.size, 2):
            raise ValidationError("edge arrays have inconsistent shapes")
        if e.size:
            if np.any(self.conductances <= 0):
                raise ValidationError("all conductances must be > 0")
            if np.any(self.edge_lengths <= 0):
                raise ValidationError("all edge lengths must be > 0")
            if np.any(e < 0) or np.any(e >= self.node_count):
                raise ValidationError("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise ValidationError("self-loops are not allowed")
        if self.node_count > 1:
            n_comp, _ = connected_components(self.adjacency(), directed=False)
            if n_comp != 1:
                raise ValidationError(f"manifold is disconnected ({n_comp} components)")
        d = self.node_distances
        if d.shape != w.shape or not np.all(np.isfinite(d)):
            raise ValidationError("node_distances must be finite, one per node")
        if e.size:
            gap = np.abs(d[e[:, 0]] - d[e[:, 1]])
            slack = self.edge_lengths * (1 + 1e-9) + 1e-12
            if np.any(gap > slack):
                k = int(np.argmax(gap - slack))
                raise ValidationError(
                    f"distance jump {gap[k]:.6g} exceeds edge length "
                    f"{self.edge_lengths[k]:.6g} on edge {tuple(e[k])}"
                )
        if self.boundary_conductance.shape != w.shape or np.any(self.boundary_conductance < 0):
            raise ValidationError("boundary_conductance must be nonnegative, one per node")
        return self


@dataclass(frozen=True)
class RadialSpec:
    """Recipe for a truncated warped-product radial grid."""

    dimension: int
    warp: object                    # callable phi(r), or a catalog name
    r_max: float
    h: float
    warp_params: dict = field(default_factory=dict)

    def resolve_warp(self):
        if callable(self.warp):
            return self.warp
        return catalog.resolve(catalog.WARPS, self.warp, self.warp_params, "warp")

    def validate(self):
        if self.dimension < 2:
            raise ValidationError("radial grids need dimension >= 2")
        if self.h <= 0:
            raise ValidationError("mesh width h must be > 0")
        if self.r_max <= 0 or self.r_max / self.h < 8:
            raise ValidationError("need r_max / h >= 8")
        return self


@dataclass(frozen=True)
class Region:
    """Node index set with Dirichlet-zero understood on the complement."""

    nodes: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)

    @property
    def size(self):
        return int(self.nodes.size)

    def mask(self, node_count):
        m = np.zeros(node_count, dtype=bool)
        m[self.nodes] = True
        return m

    def label(self):
        """Representative radius for traces, falling back to node count."""
        for key in ("radius", "outer"):
            if key in self.params:
                return float(self.params[key])
        return float(self.size)


# ---------------------------------------------------------------------------
# builders

def build_radial(spec: RadialSpec) -> DiscreteManifold:
    """Discretize a warped-product metric on [0, r_max] into a radial grid.

    Cell-centered nodes r_i = (i + 1/2) h carry the midpoint-rule cell
    volumes omega_{n-1} phi(r_i)^{n-1} h; consecutive cells are coupled
    through the interface conductance omega_{n-1} phi((i+1)h)^{n-1} / h.
    The innermost cell has no inward edge and the outermost cell gets a
    Dirichlet ghost flux across the half-cell to the truncation wall.
    """
    spec.validate()
    phi = spec.resolve_warp()
    n_cells = int(round(spec.r_max / spec.h))
    h = spec.h
    r_eff = n_cells * h
    r_nodes = (np.arange(n_cells) + 0.5) * h
    r_faces = np.arange(1, n_cells) * h

    omega = unit_sphere_area(spec.dimension)
    power = spec.dimension - 1
    probe_r = np.concatenate([r_nodes, r_faces, [r_eff]])
    probe = np.asarray(phi(probe_r), dtype=float)
    bad = ~(np.isfinite(probe) & (probe > 0))
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ValidationError(f"warp is not positive at r = {probe_r[k]:.6g}")

    weights = omega * probe[:n_cells] ** power * h
    cond = omega * probe[n_cells:-1] ** power / h
    ghost = np.zeros(n_cells)
    ghost[-1] = omega * probe[-1] ** power / (h / 2.0)

    idx = np.arange(n_cells - 1)
    edges = np.column_stack([idx, idx + 1]).astype(np.int64)
    man = DiscreteManifold(
        volume_weights=weights,
        edge_nodes=edges,
        conductances=cond,
        edge_lengths=np.full(n_cells - 1, h),
        dimension=spec.dimension,
        base_point=0,
        node_distances=r_nodes,
        boundary_conductance=ghost,
        truncation_radius=r_eff,
        kind="radial",
    )
    return man.validate()


def from_graph(volume_weights, edges, dimension=1, base_point=0, kind="graph"):
    """General weighted-graph manifold; distances come from shortest paths.

    ``edges`` is an iterable of (i, j, conductance, length) with each
    undirected edge listed once.
    """
    w = np.asarray(volume_weights, dtype=float)
    edges = list(edges)
    if edges:
        e = np.asarray([(i, j) for i, j, _, _ in edges], dtype=np.int64)
        c = np.asarray([c for _, _, c, _ in edges], dtype=float)
        l = np.asarray([l for _, _, _, l in edges], dtype=float)
    else:
        e = np.zeros((0, 2), dtype=np.int64)
        c = np.zeros(0)
        l = np.zeros(0)
    if w.size > 1:
        n = w.size
        adj = sp.coo_matrix(
            (np.concatenate([l, l]),
             (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))),
            shape=(n, n),
        ).tocsr()
        dist = dijkstra(adj, directed=False, indices=base_point)
        if np.any(~np.isfinite(dist)):
            raise ValidationError("graph is disconnected")
    else:
        dist = np.zeros(1)
    man = DiscreteManifold(
        volume_weights=w,
        edge_nodes=e,
        conductances=c,
        edge_lengths=l,
        dimension=dimension,
        base_point=base_point,
        node_distances=dist,
        boundary_conductance=np.zeros(w.size),
        truncation_radius=float(dist.max()) if w.size > 1 else 0.0,
        kind=kind,
    )
    return man.validate()


def single_node(volume=1.0):
    return from_graph([volume], [], dimension=1, kind="point")


def circle(nodes, circumference=None):
    """Closed 1-d circle; default spacing is 1 (circumference = nodes)."""
    if nodes < 2:
        raise ValidationError("circle needs at least 2 nodes")
    length = float(circumference) if circumference is not None else float(nodes)
    a = length / nodes
    edges = [(i, (i + 1) % nodes, 1.0 / a, a) for i in range(nodes)]
    return from_graph(np.full(nodes, a), edges, dimension=1, kind="circle")


def torus_grid(nx, ny, lx=None, ly=None):
    """Flat 2-torus on an nx-by-ny grid; default spacing 1 in each direction."""
    if nx < 2 or ny < 2:
        raise ValidationError("torus needs at least 2 nodes per direction")
    lx = float(lx) if lx is not None else float(nx)
    ly = float(ly) if ly is not None else float(ny)
    ax, ay = lx / nx, ly / ny
    idx = lambda i, j: i * ny + j
    edges = []
    for i in range(nx):
        for j in range(ny):
            edges.append((idx(i, j), idx((i + 1) % nx, j), ay / ax, ax))
            edges.append((idx(i, j), idx(i, (j + 1) % ny), ax / ay, ay))
    return from_graph(np.full(nx * ny, ax * ay), edges, dimension=2, kind="torus")


def segment(cells, length=1.0):
    """Interval with Dirichlet walls at both ends (vertex-centered).

    Nodes sit at i*h for i = 1..cells-1; both boundary nodes carry the wall
    flux 1/h, so quadratic profiles solve the discrete Poisson problem
    exactly at the nodes.
    """
    if cells < 2:
        raise ValidationError("segment needs at least 2 cells")
    h = float(length) / cells
    n = cells - 1
    x = (np.arange(n) + 1) * h
    idx = np.arange(n - 1)
    ghost = np.zeros(n)
    ghost[0] += 1.0 / h
    ghost[-1] += 1.0 / h
    man = DiscreteManifold(
        volume_weights=np.full(n, h),
        edge_nodes=np.column_stack([idx, idx + 1]).astype(np.int64),
        conductances=np.full(n - 1, 1.0 / h),
        edge_lengths=np.full(n - 1, h),
        dimension=1,
        base_point=0,
        node_distances=x - x[0],
        boundary_conductance=ghost,
        truncation_radius=float(length),
        kind="segment",
    )
    return man.validate()


GRAPH_FAMILIES = {
    "single_node": single_node,
    "circle": circle,
    "torus": torus_grid,
    "segment": segment,
}


# ---------------------------------------------------------------------------
# metric queries

def distances_from(man: DiscreteManifold, center):
    """Geodesic distances from an arbitrary node."""
    if center == man.base_point:
        return man.node_distances
    if man.kind in ("radial", "segment"):
        return np.abs(man.node_distances - man.node_distances[center])
    return dijkstra(man.adjacency(man.edge_lengths), directed=False, indices=center)


def volume_growth(man: DiscreteManifold, radius):
    """Total volume of the geodesic ball of the given radius at the base point."""
    if radius < 0:
        raise ValidationError("radius must be >= 0")
    return float(man.volume_weights[man.node_distances <= radius].sum())


def fit_growth_exponent(man: DiscreteManifold, r_min, r_max, samples=12):
    """Least-squares (k, C) with V_p(R) ~ C R^k over a geometric radius sweep."""
    if not (0 < r_min < r_max):
        raise ValidationError("need 0 < r_min < r_max")
    if r_max > man.truncation_radius * (1 + 1e-9):
        raise ValidationError("r_max exceeds the truncation radius")
    if samples < 4:
        raise ValidationError("need at least 4 sample radii")
    radii = np.geomspace(r_min, r_max, samples)
    vols = np.array([volume_growth(man, r) for r in radii])
    keep = vols > 0
    if keep.sum() < 4:
        raise ValidationError("fewer than 4 radii have positive ball volume")
    k, b = np.polyfit(np.log(radii[keep]), np.log(vols[keep]), 1)
    return float(k), float(np.exp(b))


def linear_cutoff(man: DiscreteManifold, radius):
    """Plateau-1 cutoff on the 2R ball: 1 inside R, linear taper, 0 outside 2R."""
    if radius <= 0:
        raise ValidationError("cutoff radius must be > 0")
    if 2 * radius > man.truncation_radius * (1 + 1e-9):
        raise ValidationError("2R exceeds the truncation radius")
    return np.clip(2.0 - man.node_distances / radius, 0.0, 1.0)


def log_cutoff(man: DiscreteManifold, radius):
    """Logarithmic cutoff: 1 up to sqrt(R), 2 - 2 log r / log R up to R, then 0."""
    e2 = np.exp(2.0)
    if radius <= e2:
        raise ValidationError("log cutoff needs R > e^2")
    if radius > man.truncation_radius * (1 + 1e-9):
        raise ValidationError("R exceeds the truncation radius")
    d = man.node_distances
    out = np.zeros(man.node_count)
    inner = d <= np.sqrt(radius)
    mid = (~inner) & (d <= radius)
    out[inner] = 1.0
    out[mid] = 2.0 - 2.0 * np.log(d[mid]) / np.log(radius)
    return out


def region(man: DiscreteManifold, kind, radius=None, inner=None, outer=None, center=None):
    """Build a ball / exterior / annulus / whole region around the base point."""
    n = man.node_count
    if kind == "whole":
        nodes = np.arange(n)
        params = {}
    elif kind == "ball":
        if radius is None or radius < 0:
            raise ValidationError("ball region needs radius >= 0")
        z = man.base_point if center is None else int(center)
        d = distances_from(man, z)
        nodes = np.flatnonzero(d <= radius)
        params = {"radius": float(radius), "center": z}
    elif kind == "exterior":
        if radius is None or radius < 0:
            raise ValidationError("exterior region needs radius >= 0")
        nodes = np.flatnonzero(man.node_distances > radius)
        params = {"radius": float(radius)}
    elif kind == "annulus":
        if inner is None or outer is None or inner < 0:
            raise ValidationError("annulus region needs 0 <= inner, outer")
        d = man.node_distances
        nodes = np.flatnonzero((d > inner) & (d <= outer))
        params = {"inner": float(inner), "outer": float(outer)}
    else:
        raise ValidationError(f"unknown region kind '{kind}'")
    if nodes.size == 0:
        raise ValidationError(f"{kind} region is empty")
    return Region(nodes=nodes, kind=kind, params=params)


# ---------------------------------------------------------------------------
# CSV export

def dump_manifold_csv(man: DiscreteManifold, node_path, edge_path=None):
    """Write the node table (and optionally the edge table) as CSV."""
    with open(node_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["node", "r_or_id", "volume_weight", "dist_from_p"])
        radial = man.kind in ("radial", "segment")
        for i in range(man.node_count):
            r_or_id = man.node_distances[i] if radial else i
            wr.writerow([i, r_or_id, repr(man.volume_weights[i]),
                         repr(man.node_distances[i])])
    if edge_path is not None:
        with open(edge_path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["i", "j", "conductance", "length"])
            for k in range(man.edge_nodes.shape[0]):
                wr.writerow([man.edge_nodes[k, 0], man.edge_nodes[k, 1],
                             repr(man.conductances[k]), repr(man.edge_lengths[k])])

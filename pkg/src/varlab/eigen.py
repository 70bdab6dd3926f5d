"""Principal eigenvalue solves for the operator -4*Delta + V.

The lambda constant of a region is the smallest eigenvalue of the
generalized symmetric pencil (4L + diag(mV), diag(m)) restricted to the
region's nodes, with Dirichlet zero on the complement.  Small problems go
through a dense solve; larger ones use shift-invert Lanczos with the shift
placed at inf(V) - 1, which is guaranteed to sit below the spectrum.
Every result carries its Euler-Lagrange residual and an exhaustion trace so
truncation error stays visible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .config import DEFAULT_CONFIG, SolverConfig
from .errors import SolverError, ValidationError
from .forms import OperatorPair, mass_norm
from .geometry import Region, region as build_region


@dataclass(frozen=True)
class TraceEntry:
    radius: float
    value: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class SpectralResult:
    value: float
    eigenfunction: np.ndarray       # full-length, zero off the region
    residual: float
    region: Region
    iterations: int
    trace: list = field(default_factory=list)


@dataclass(frozen=True)
class SpectralTrace:
    entries: list
    final: SpectralResult

    @property
    def limit(self):
        return self.entries[-1].value


def _region_submatrices(ops: OperatorPair, reg: Region):
    idx = reg.nodes
    A = (4.0 * ops.stiffness[idx][:, idx]
         + sp.diags(ops.mass[idx] * ops.potential[idx])).tocsc()
    M = sp.diags(ops.mass[idx]).tocsc()
    return idx, A, M


def _check_connected(ops: OperatorPair, reg: Region):
    idx = reg.nodes
    if idx.size == 1:
        return
    adj = ops.stiffness[idx][:, idx].copy()
    adj.setdiag(0)
    adj.eliminate_zeros()
    n_comp, _ = connected_components(abs(adj), directed=False)
    if n_comp != 1:
        raise ValidationError(f"region is disconnected ({n_comp} components)")


def _smallest_pair(A, M, shift, config: SolverConfig):
    """Lowest eigenpair of the symmetric pencil (A, M); returns (w, v, iters).

    Shift-invert Lanczos with the factorization of A - shift*M supplied
    explicitly, so the number of inner solves is reported as the iteration
    count.  Dense fallback for small or stubborn problems.
    """
    n = A.shape[0]
    if n == 1:
        return float(A[0, 0] / M[0, 0]), np.ones(1), 1
    if n <= config.dense_cutoff:
        w, v = scipy.linalg.eigh(A.toarray(), M.toarray())
        return float(w[0]), v[:, 0], 1
    lu = spla.splu((A - shift * M).tocsc())
    calls = [0]

    def _apply(b):
        calls[0] += 1
        return lu.solve(b)

    op_inv = spla.LinearOperator(A.shape, matvec=_apply, dtype=float)
    try:
        w, v = spla.eigsh(A, k=1, M=M, sigma=shift, which="LM",
                          v0=np.ones(n), OPinv=op_inv,
                          tol=0, maxiter=config.eigen_maxiter)
        return float(w[0]), v[:, 0], calls[0]
    except spla.ArpackNoConvergence as exc:
        if n <= 4000:
            w, v = scipy.linalg.eigh(A.toarray(), M.toarray())
            return float(w[0]), v[:, 0], calls[0] + 1
        raise SolverError(f"eigensolver did not converge: {exc}") from exc


def lambda_constant(ops: OperatorPair, reg: Region,
                    config: SolverConfig = DEFAULT_CONFIG) -> SpectralResult:
    """Smallest eigenvalue of -4*Delta + V on a region, Dirichlet outside.

    The returned ground state is normalized to unit mass-weighted L2 norm,
    sign-fixed to nonnegative mean, and strictly positive on the region
    interior (Perron structure of the connected form).
    """
    if reg.size == 0:
        raise ValidationError("region is empty")
    _check_connected(ops, reg)
    idx, A, M = _region_submatrices(ops, reg)
    shift = float(ops.potential[idx].min()) - 1.0
    w, v, iters = _smallest_pair(A, M, shift, config)

    u = np.zeros(ops.node_count)
    u[idx] = v
    if np.sum(ops.mass * u) < 0:
        u = -u
    u /= mass_norm(ops.mass, u)
    u[np.abs(u) < 1e-14] = 0.0
    if np.any(u[idx] < 0):
        worst = float(u[idx].min())
        if worst < -1e-8 * float(np.abs(u).max()):
            raise SolverError(f"ground state is not signed-definite (min {worst:.3e})")
        u[idx] = np.abs(u[idx])
        u /= mass_norm(ops.mass, u)

    resid = el_residual_linear(ops, u, w, reg)
    if resid > config.eigen_tol:
        raise SolverError(f"eigen residual {resid:.3e} exceeds {config.eigen_tol:.1e}",
                          residual=resid)
    if w < ops.potential[idx].min() - 1e-8:
        raise SolverError(f"lambda {w:.6g} fell below inf V, solver inconsistency")
    entry = TraceEntry(radius=reg.label(), value=w, residual=resid, iterations=iters)
    return SpectralResult(value=w, eigenfunction=u, residual=resid,
                          region=reg, iterations=iters, trace=[entry])


def el_residual_linear(ops: OperatorPair, u, lam, reg: Region):
    """Mass-weighted norm of (-4*Delta u + V u - lam u) over the region."""
    r = (4.0 * (ops.stiffness @ u) / ops.mass
         + ops.potential * u - lam * u)
    return mass_norm(ops.mass[reg.nodes], r[reg.nodes])


def exhaustion_lambda(ops: OperatorPair, radii,
                      config: SolverConfig = DEFAULT_CONFIG) -> SpectralTrace:
    """Lambda on nested balls of increasing radius, whole truncation last."""
    radii = list(radii)
    if len(radii) == 0:
        raise ValidationError("need at least one exhaustion radius")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValidationError("exhaustion radii must be strictly increasing")
    man = ops.manifold
    if radii[-1] > man.truncation_radius * (1 + 1e-9):
        raise ValidationError("exhaustion radius exceeds the truncation")
    entries = []
    results = []
    for r in radii:
        res = lambda_constant(ops, build_region(man, "ball", radius=r), config)
        results.append(res)
        entries.append(res.trace[0])
    if results[-1].region.size != man.node_count:
        res = lambda_constant(ops, build_region(man, "whole"), config)
        entries.append(TraceEntry(radius=man.truncation_radius, value=res.value,
                                  residual=res.residual, iterations=res.iterations))
        results.append(res)
    final = results[-1]
    return SpectralTrace(entries=entries, final=SpectralResult(
        value=final.value, eigenfunction=final.eigenfunction,
        residual=final.residual, region=final.region,
        iterations=final.iterations, trace=entries))


def exhaustion_ground_states(ops: OperatorPair, radii,
                             config: SolverConfig = DEFAULT_CONFIG):
    """Ground states of the exhaustion solves, for sequence diagnostics."""
    radii = list(radii)
    out = []
    for r in radii:
        out.append(lambda_constant(ops, build_region(ops.manifold, "ball", radius=r),
                                   config))
    return out


def lambda_infinity_exterior(ops: OperatorPair, radii,
                             config: SolverConfig = DEFAULT_CONFIG) -> SpectralTrace:
    """Lambda restricted outside growing balls; the trace is the deliverable.

    The reported at-infinity value is the last trace entry together with
    the whole trace - no extrapolation is ever performed.
    """
    radii = list(radii)
    if len(radii) == 0:
        raise ValidationError("need at least one exterior radius")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValidationError("exterior radii must be strictly increasing")
    entries = []
    last = None
    for r in radii:
        reg = build_region(ops.manifold, "exterior", radius=r)
        if reg.size < 8:
            raise ValidationError(
                f"exterior region at r = {r:.6g} has only {reg.size} nodes (< 8)")
        last = lambda_constant(ops, reg, config)
        entries.append(TraceEntry(radius=float(r), value=last.value,
                                  residual=last.residual, iterations=last.iterations))
    return SpectralTrace(entries=entries, final=SpectralResult(
        value=last.value, eigenfunction=last.eigenfunction, residual=last.residual,
        region=last.region, iterations=last.iterations, trace=entries))


def lambda_infinity_const(ops: OperatorPair, v_infinity,
                          config: SolverConfig = DEFAULT_CONFIG) -> SpectralResult:
    """Lambda of -4*Delta + V_inf on the whole truncation.

    Equals v_infinity plus the principal Dirichlet eigenvalue of -4*Delta,
    which is nonnegative, so the result is always >= v_infinity.
    """
    v_infinity = float(v_infinity)
    if not np.isfinite(v_infinity):
        raise ValidationError("v_infinity must be finite")
    flat = ops.with_potential(np.full(ops.node_count, v_infinity))
    return lambda_constant(flat, build_region(ops.manifold, "whole"), config)

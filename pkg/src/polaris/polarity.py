"""Polarity decisions for orthogonal representations and subgroup actions.

The representation test is exact up to rounding: a section candidate is the
normal space of a regular orbit, and orthogonality of the candidate against
every orbit it meets reduces, by bilinearity, to the finite pairing test
<A_i v, w> = 0 over basis pairs of the candidate.  Subgroup actions on a
symmetric pair are decided by the Lie-triple-system condition on
m = p \\cap h^perp together with [m, m] perp h, after conjugating h into a
regular position.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import linalg
from .liealg import CheckResult, LieAlgebra, Subspace, is_abelian_subspace, \
    is_lie_triple_system
from .linalg import RANK_RTOL, SPAN_TOL, WITNESS_FLOOR
from .symspace import SymmetricPair

PAIRING_TOL = 1e-8


class PolarityError(ValueError):
    pass


@dataclass(frozen=True)
class OrthogonalRep:
    """Generator matrices of a Lie algebra acting on an inner-product space."""

    algebra: LieAlgebra
    generators: np.ndarray          # (n_gen, D, D) antisymmetric
    space_dim: int
    restrict_to_sphere: bool = False
    name: str = "rep"

    def __post_init__(self):
        g = np.asarray(self.generators, dtype=float)
        if g.ndim != 3:
            g = g.reshape((-1, self.space_dim, self.space_dim))
        g.setflags(write=False)
        object.__setattr__(self, "generators", g)

    @property
    def n_generators(self) -> int:
        return int(self.generators.shape[0])

    def validate(self, tol: float = 1e-8) -> None:
        g = self.generators
        if g.shape != (self.algebra.dim, self.space_dim, self.space_dim):
            raise PolarityError(
                f"generators must be ({self.algebra.dim},{self.space_dim},"
                f"{self.space_dim}), got {g.shape}")
        if g.shape[0]:
            anti = float(np.max(np.abs(g + np.transpose(g, (0, 2, 1)))))
            if anti > tol:
                raise PolarityError(f"generators not antisymmetric (residual {anti:.2e})")
        c = self.algebra.structure
        worst = 0.0
        for i in range(g.shape[0]):
            for j in range(g.shape[0]):
                comm = g[i] @ g[j] - g[j] @ g[i]
                model = np.einsum("k,kab->ab", c[i, j], g)
                worst = max(worst, float(np.max(np.abs(comm - model))))
        if worst > tol:
            raise PolarityError(
                f"generator commutators do not reproduce structure constants "
                f"(residual {worst:.2e})")

    def tangent_rows(self, v: np.ndarray) -> np.ndarray:
        """Orbit tangent spanning set {A_i v} as rows."""
        if self.n_generators == 0:
            return np.zeros((0, self.space_dim))
        return np.einsum("iab,b->ia", self.generators, np.asarray(v, float))

    def orbit_rank(self, v: np.ndarray, rtol: float = RANK_RTOL) -> int:
        return linalg.svd_rank(self.tangent_rows(v), rtol)

    def apply(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Action of the algebra element with coordinates x on the point v."""
        return np.einsum("i,iab,b->a", np.asarray(x, float), self.generators, v)


@dataclass(frozen=True)
class PolarityVerdict:
    polar: bool
    cohomogeneity: int
    section: Subspace | None
    witness: tuple | None
    residual: float
    tolerance: float

    def __bool__(self) -> bool:
        return self.polar


def find_regular_point(rep: OrthogonalRep, seed: int = 0, draws: int = 64) -> np.ndarray:
    """Seeded point of maximal orbit-tangent rank among ``draws`` samples."""
    rng = np.random.default_rng(seed)
    best_rank = -1
    best = None
    for _ in range(draws):
        v = rng.standard_normal(rep.space_dim)
        if rep.restrict_to_sphere:
            v = v / np.linalg.norm(v)
        r = rep.orbit_rank(v)
        if r > best_rank:
            best_rank, best = r, v
    return best


def cohomogeneity(rep: OrthogonalRep, seed: int = 0) -> int:
    p = find_regular_point(rep, seed)
    c = rep.space_dim - rep.orbit_rank(p)
    return c - 1 if rep.restrict_to_sphere else c


def is_polar_rep(rep: OrthogonalRep, seed: int = 0, tol: float = PAIRING_TOL,
                 floor: float = WITNESS_FLOOR) -> PolarityVerdict:
    """Exact polarity test at a regular point.

    The candidate section is the normal space of the orbit of a regular
    point; by bilinearity it is orthogonal to every orbit it meets exactly
    when <A_i v, w> vanishes for all generators and basis pairs v, w.
    """
    p = find_regular_point(rep, seed)
    tangent = rep.tangent_rows(p)
    section = linalg.complement(tangent, rep.space_dim) if tangent.size \
        else np.eye(rep.space_dim)
    if section.shape[0] == 0:
        section = np.zeros((0, rep.space_dim))
    worst = 0.0
    witness = None
    for i in range(rep.n_generators):
        pair = section @ rep.generators[i] @ section.T
        if pair.size == 0:
            continue
        idx = np.unravel_index(np.argmax(np.abs(pair)), pair.shape)
        val = float(np.abs(pair[idx]))
        if val > worst:
            worst = val
            witness = (i, section[idx[0]].copy(), section[idx[1]].copy(), float(pair[idx]))
    cohom = section.shape[0] - (1 if rep.restrict_to_sphere else 0)
    failed = linalg.robust_failure(worst, tol, floor, "polar pairing test")
    if failed:
        return PolarityVerdict(False, cohom, None, witness, worst, tol)
    return PolarityVerdict(True, cohom, Subspace(f"{rep.name}:V", section),
                           None, worst, tol)


def isotropy_subalgebra(rep: OrthogonalRep, point: np.ndarray,
                        rtol: float = RANK_RTOL) -> np.ndarray:
    """Coordinate rows spanning {X : X . point = 0}, orthonormal in the metric."""
    rows = rep.tangent_rows(point)           # row i = A_i point
    coeffs = linalg.kernel(rows.T, rtol)     # combos annihilating the point
    return linalg.orthonormalize(coeffs, rep.algebra.inner, rtol)


def slice_rep(rep: OrthogonalRep, point: np.ndarray,
              rtol: float = RANK_RTOL) -> OrthogonalRep:
    """Representation of the isotropy algebra on the normal space at ``point``.

    On sphere actions the radial line is removed from the slice.
    """
    point = np.asarray(point, float)
    if rep.restrict_to_sphere and np.linalg.norm(point) < 1e-12:
        raise PolarityError("sphere actions need a nonzero base point")
    iso = isotropy_subalgebra(rep, point, rtol)
    tangent = rep.tangent_rows(point)
    blocked = tangent
    if rep.restrict_to_sphere:
        blocked = np.vstack([tangent, point[None, :]])
    normal = linalg.complement(blocked, rep.space_dim)
    alg = rep.algebra
    k = iso.shape[0]
    structure = np.zeros((k, k, k))
    for a in range(k):
        for b in range(k):
            br = alg.bracket(iso[a], iso[b])
            res = linalg.span_residual(iso, br, alg.inner)
            if res > 1e-7:
                raise PolarityError(f"isotropy candidate not closed (residual {res:.2e})")
            for c in range(k):
                structure[a, b, c] = linalg.gram_dot(br, iso[c], alg.inner)
    realization = None
    if alg.realization is not None and k:
        realization = tuple(alg.realize(iso[a]) for a in range(k))
    sub = LieAlgebra(f"iso({rep.name})", structure, np.eye(k), realization)
    sub.validate(jacobi_tol=1e-8)
    m = normal.shape[0]
    gens = np.zeros((k, m, m))
    for a in range(k):
        big = np.einsum("i,iab->ab", iso[a], rep.generators)
        gens[a] = normal @ big @ normal.T
    out = OrthogonalRep(sub, gens, m, False, name=f"slice({rep.name})")
    out.validate()
    return out


def orbifold_point_test(rep: OrthogonalRep, point: np.ndarray, seed: int = 0,
                        tol: float = PAIRING_TOL) -> CheckResult:
    """Orbit-space orbifold test at a point: is the slice representation polar?

    Short-circuits to true when the slice cohomogeneity is at most two.
    """
    sl = slice_rep(rep, point)
    c = cohomogeneity(sl, seed)
    if c <= 2:
        return CheckResult(True, 0.0, tol, ("slice-cohomogeneity", c))
    verdict = is_polar_rep(sl, seed, tol)
    return CheckResult(verdict.polar, verdict.residual, tol,
                       None if verdict.polar else ("slice-not-polar",) + tuple(
                           [] if verdict.witness is None else [verdict.witness[0]]))


# ---------------------------------------------------------------------------
# subgroup actions on a symmetric pair
# ---------------------------------------------------------------------------

def _check_subalgebra(alg: LieAlgebra, h: Subspace, tol: float = 1e-8) -> None:
    for i in range(h.dim):
        for j in range(h.dim):
            res = linalg.span_residual(h.basis, alg.bracket(h.basis[i], h.basis[j]),
                                       alg.inner)
            if res > tol:
                raise PolarityError(
                    f"h is not a subalgebra: bracket ({i},{j}) leaves the span "
                    f"(residual {res:.2e})")


def regularize_basepoint(pair: SymmetricPair, h: Subspace, seed: int = 0,
                         draws: int = 64) -> Subspace:
    """Conjugate h so the basepoint orbit dimension is maximal over draws.

    Conjugation acts through Ad(exp Z) = expm(ad Z) for seeded random Z, so
    no matrix realization is needed.
    """
    alg = pair.algebra
    rng = np.random.default_rng(seed)

    def orbit_rank_of(basis: np.ndarray) -> int:
        proj = np.array([pair.project_p(b) for b in basis])
        return linalg.svd_rank(proj)

    best_basis = h.basis
    best_rank = orbit_rank_of(h.basis)
    for _ in range(draws):
        z = rng.standard_normal(alg.dim)
        z = z / max(alg.norm(z), 1e-12) * rng.uniform(0.2, 2.5)
        ad_inv = expm(-alg.ad(z))
        cand = linalg.orthonormalize(h.basis @ ad_inv.T, alg.inner)
        r = orbit_rank_of(cand)
        if r > best_rank:
            best_rank, best_basis = r, cand
    return Subspace(h.ambient, best_basis)


def is_polar_homogeneous(pair: SymmetricPair, h: Subspace, seed: int = 0,
                         tol: float = SPAN_TOL,
                         floor: float = WITNESS_FLOOR) -> PolarityVerdict:
    """Polarity of the subgroup action with Lie algebra h on the pair's space.

    After regularizing the basepoint, the action is polar iff
    m = p \\cap h^perp is a Lie triple system and [m, m] is orthogonal to h;
    the section is then Exp(m).
    """
    alg = pair.algebra
    _check_subalgebra(alg, h)
    hreg = regularize_basepoint(pair, h, seed)
    # m = p \cap h^perp, solved in p-coordinates.
    constraints = hreg.basis @ alg.inner @ pair.p.basis.T   # (dim h, dim p)
    coeffs = linalg.kernel(constraints)
    m = Subspace(f"{alg.name}:m",
                 linalg.orthonormalize(coeffs @ pair.p.basis, alg.inner))
    lts = is_lie_triple_system(alg, m, tol, floor)
    perp_worst = 0.0
    perp_witness = None
    for i in range(m.dim):
        for j in range(i + 1, m.dim):
            br = alg.bracket(m.basis[i], m.basis[j])
            for a in range(hreg.dim):
                val = abs(linalg.gram_dot(br, hreg.basis[a], alg.inner))
                if val > perp_worst:
                    perp_worst = val
                    perp_witness = (i, j, a, val)
    perp_failed = linalg.robust_failure(perp_worst, tol, floor,
                                        "[m,m] perp h test")
    polar = lts.ok and not perp_failed
    residual = max(lts.residual, perp_worst)
    witness = None
    if not lts.ok:
        witness = ("lts",) + tuple(lts.witness or ())
    elif perp_failed:
        witness = ("bracket-pairing",) + perp_witness
    return PolarityVerdict(polar, m.dim, m if polar else None, witness, residual, tol)


def is_hyperpolar_homogeneous(pair: SymmetricPair, h: Subspace, seed: int = 0,
                              tol: float = SPAN_TOL,
                              floor: float = WITNESS_FLOOR) -> CheckResult:
    """Hyperpolarity: the polar criterion plus m abelian (flat section)."""
    verdict = is_polar_homogeneous(pair, h, seed, tol, floor)
    if not verdict.polar:
        return CheckResult(False, verdict.residual, tol, ("not-polar",))
    ab = is_abelian_subspace(pair.algebra, verdict.section, tol, floor)
    residual = max(verdict.residual, ab.residual)
    if not ab.ok:
        return CheckResult(False, residual, tol, ("section-not-flat",) + tuple(ab.witness or ()))
    return CheckResult(True, residual, tol, None)

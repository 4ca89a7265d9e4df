"""Fields along horizontal geodesics of isometric actions on model manifolds.

Everything runs on a fixed-step grid in a parallel orthonormal frame along
the geodesic; in that frame the ambient curvature operator R(., gamma')gamma'
is a constant matrix for every supported model, so Jacobi fields have a
closed-form eigenmode solution with an RK4 fallback for cross-checks.  On
top of the Jacobi layer sit the focal-point scan, the extended vertical and
horizontal bundles V_t / H_t through singular times, the extended skew
tensor A_t, the transversal Jacobi equation, the symplectic pairing, and a
Morse-Sturm conjugate/index scan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .polarity import OrthogonalRep, orbifold_point_test
from .symspace import ModelManifold
from .weyl import QuotientOptimizerConfig, quotient_distance

DEFAULT_STEP = 1e-3
MAX_STEP = 1e-2
FOCAL_SV_TOL = 1e-7


class TransversalError(ValueError):
    pass


class OrbitGeodesic:
    """A horizontal geodesic with its grid, parallel frames and shape data.

    ``direction`` must be a unit normal to the orbit at ``point`` (tangent
    to the model).  The sign convention of the shape operator is fixed by
    the position normal on a Euclidean orbit: S_(p/|p|) = -(1/|p|) id.
    """

    def __init__(self, rep: OrthogonalRep, manifold: ModelManifold,
                 point, direction, span=(0.0, float(np.pi)),
                 step: float = DEFAULT_STEP):
        if step > MAX_STEP:
            raise TransversalError(f"step size rejected (h = {step:g} > {MAX_STEP:g})")
        point = np.asarray(point, float)
        direction = np.asarray(direction, float)
        manifold.validate_point(point)
        if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
            raise TransversalError("direction must be a unit vector")
        if np.linalg.norm(direction - manifold.project_tangent(point, direction)) > 1e-9:
            raise TransversalError("direction must be tangent to the model")
        rows = rep.tangent_rows(point)
        if rows.size and float(np.max(np.abs(rows @ direction))) > 1e-10:
            raise TransversalError("direction must be normal to the orbit")
        self.rep = rep
        self.manifold = manifold
        self.point = point
        self.direction = direction
        self.step = float(step)
        if not (span[0] <= 0.0 <= span[1]):
            raise TransversalError("the grid span must contain the basepoint time 0")
        n = int(round((span[1] - span[0]) / step)) + 1
        self.times = span[0] + step * np.arange(n)
        self.base_index = int(round(-span[0] / step))
        if abs(self.times[self.base_index]) > 1e-12:
            raise TransversalError("span start must be an integer number of steps")
        self.gamma, self.dgamma = manifold.geodesic(point, direction, self.times)
        self.frames, self.curvature = manifold.parallel_frames(point, direction, self.times)
        self.dim = self.frames.shape[2]
        evals, evecs = np.linalg.eigh(self.curvature)
        if float(np.min(evals)) < -1e-10:
            raise TransversalError("model curvature operator must be positive semidefinite")
        self._modes = (np.clip(evals, 0.0, None), evecs)
        self.orbit_tangent = linalg.orthonormalize(rows) if rows.size \
            else np.zeros((0, rep.space_dim))
        self.normal_basis = self._normal_basis()
        self.shape_operator, self.shape_asymmetry = self._shape_operator()
        self._cache = {}

    # -- frame bookkeeping ---------------------------------------------------

    def to_frame(self, k: int, ambient_vec: np.ndarray) -> np.ndarray:
        return self.frames[k].T @ ambient_vec

    def to_ambient(self, k: int, coords: np.ndarray) -> np.ndarray:
        return self.frames[k] @ coords

    def _normal_basis(self) -> np.ndarray:
        base = self.frames[self.base_index]
        tangent_frame = self.orbit_tangent @ base             # (k, m)
        comp = linalg.complement(tangent_frame, self.dim)
        return comp @ base.T if comp.size else np.zeros((0, self.rep.space_dim))

    def _shape_operator(self):
        return shape_operator(self.rep, self.point, self.direction,
                              self.orbit_tangent)

    def orbit_rank_profile(self) -> np.ndarray:
        key = "rank_profile"
        if key not in self._cache:
            ranks = np.array([linalg.svd_rank(self.rep.tangent_rows(g))
                              for g in self.gamma])
            self._cache[key] = ranks
        return self._cache[key]


def shape_operator(rep: OrthogonalRep, point, direction,
                   orbit_basis: np.ndarray | None = None):
    """Orbit shape operator S_xi on an orthonormal orbit-tangent basis.

    Entries are <grad_{u_a} X_b^*, xi> for Killing fields realising the basis;
    the matrix is symmetrised and the asymmetry residual returned with it.
    """
    rows = rep.tangent_rows(np.asarray(point, float))
    basis = orbit_basis if orbit_basis is not None else linalg.orthonormalize(rows)
    k = basis.shape[0]
    if k == 0:
        return np.zeros((0, 0)), 0.0
    s = np.zeros((k, k))
    pinv = np.linalg.pinv(rows.T)
    for b in range(k):
        coeff = pinv @ basis[b]
        big = np.einsum("i,iab->ab", coeff, rep.generators)
        for a in range(k):
            s[a, b] = float(big @ basis[a] @ np.asarray(direction, float))
    asym = float(np.max(np.abs(s - s.T)))
    return (s + s.T) / 2, asym


@dataclass
class GridField:
    """A field along the geodesic: frame coordinates and covariant derivative."""

    geod: OrbitGeodesic
    y: np.ndarray        # (n_t, m)
    dy: np.ndarray       # (n_t, m)

    def ambient(self) -> np.ndarray:
        return np.einsum("tdm,tm->td", self.geod.frames, self.y)


def n_jacobi_space(geod: OrbitGeodesic):
    """Initial conditions spanning the N-Jacobi space (dimension dim M).

    Orbit-tangent directions u carry J(0)=u, J'(0)=-S_xi u; orbit-normal
    directions w carry J(0)=0, J'(0)=w.
    """
    out = []
    s = geod.shape_operator
    for a, u in enumerate(geod.orbit_tangent):
        du = -(s[a] @ geod.orbit_tangent) if s.size else np.zeros_like(u)
        out.append((u, du, ("tangent", a)))
    for b, w in enumerate(geod.normal_basis):
        out.append((np.zeros_like(w), w, ("normal", b)))
    return out


def _mode_solution(geod: OrbitGeodesic, y0: np.ndarray, z0: np.ndarray,
                   times: np.ndarray):
    """Closed-form Jacobi solution with initial data at the basepoint time 0."""
    evals, q = geod._modes
    a = q.T @ y0
    b = q.T @ z0
    tau = times
    y = np.empty((times.shape[0], geod.dim))
    dy = np.empty_like(y)
    for i, w in enumerate(evals):
        if w > 1e-12:
            r = np.sqrt(w)
            y[:, i] = a[i] * np.cos(r * tau) + b[i] * np.sin(r * tau) / r
            dy[:, i] = -a[i] * r * np.sin(r * tau) + b[i] * np.cos(r * tau)
        else:
            y[:, i] = a[i] + tau * b[i]
            dy[:, i] = b[i]
    return y @ q.T, dy @ q.T


def jacobi_integrate(geod: OrbitGeodesic, j0, dj0, method: str = "closed-form") -> GridField:
    """Solve the Jacobi equation along the geodesic from ambient initial data.

    Initial data lives at the basepoint gamma(0).  ``closed-form`` uses the
    constant-curvature eigenmode solution; ``rk4`` integrates the same
    equation with classical RK4 at the grid step so the two paths
    cross-check each other.
    """
    y0 = geod.to_frame(geod.base_index, np.asarray(j0, float))
    z0 = geod.to_frame(geod.base_index, np.asarray(dj0, float))
    if method == "closed-form":
        y, dy = _mode_solution(geod, y0, z0, geod.times)
        return GridField(geod, y, dy)
    if method != "rk4":
        raise TransversalError(f"unknown method {method!r}")
    if geod.base_index != 0:
        raise TransversalError("rk4 integration needs the grid to start at the basepoint")
    r = geod.curvature
    h = geod.step
    n = geod.times.shape[0]
    y = np.empty((n, geod.dim))
    dy = np.empty_like(y)
    y[0], dy[0] = y0, z0
    for k in range(n - 1):
        yk, zk = y[k], dy[k]
        k1y, k1z = zk, -r @ yk
        k2y, k2z = zk + 0.5 * h * k1z, -r @ (yk + 0.5 * h * k1y)
        k3y, k3z = zk + 0.5 * h * k2z, -r @ (yk + 0.5 * h * k2y)
        k4y, k4z = zk + h * k3z, -r @ (yk + h * k3y)
        y[k + 1] = yk + h * (k1y + 2 * k2y + 2 * k3y + k4y) / 6
        dy[k + 1] = zk + h * (k1z + 2 * k2z + 2 * k3z + k4z) / 6
    return GridField(geod, y, dy)


def _basis_modes(geod: OrbitGeodesic):
    """Mode coefficients of the N-Jacobi basis for continuous-time evaluation."""
    key = "basis_modes"
    if key not in geod._cache:
        evals, q = geod._modes
        a_cols = []
        b_cols = []
        labels = []
        for j0, dj0, label in n_jacobi_space(geod):
            a_cols.append(q.T @ geod.to_frame(geod.base_index, j0))
            b_cols.append(q.T @ geod.to_frame(geod.base_index, dj0))
            labels.append(label)
        geod._cache[key] = (np.array(a_cols).T, np.array(b_cols).T, labels)
    return geod._cache[key]


def _matrix_solution_at(geod: OrbitGeodesic, t: float) -> np.ndarray:
    """(m, m) matrix whose columns are the N-Jacobi basis fields at time t."""
    a, b, _ = _basis_modes(geod)
    evals, q = geod._modes
    tau = t
    rows = np.empty_like(a)
    for i, w in enumerate(evals):
        if w > 1e-12:
            r = np.sqrt(w)
            rows[i] = a[i] * np.cos(r * tau) + b[i] * np.sin(r * tau) / r
        else:
            rows[i] = a[i] + tau * b[i]
    return q @ rows


def lambda_fields(geod: OrbitGeodesic) -> list:
    """The N-Jacobi basis solved on the grid (closed form)."""
    key = "lambda_fields"
    if key not in geod._cache:
        fields = []
        for j0, dj0, label in n_jacobi_space(geod):
            f = jacobi_integrate(geod, j0, dj0)
            fields.append((f, label))
        geod._cache[key] = fields
    return geod._cache[key]


def _min_singular(geod: OrbitGeodesic, t: float) -> float:
    return float(np.linalg.svd(_matrix_solution_at(geod, t), compute_uv=False)[-1])


def focal_points(geod: OrbitGeodesic, window=None,
                 sv_tol: float = FOCAL_SV_TOL) -> list:
    """Focal times of the start orbit: roots of the matrix-solution sigma_min.

    Interior local minima of the smallest singular value on the grid are
    refined by golden-section search; a refined minimum below ``sv_tol``
    counts as a focal time with multiplicity the number of singular values
    below the threshold there.
    """
    times = geod.times
    lo = window[0] if window else times[0]
    hi = window[1] if window else times[-1]
    svals = np.array([np.linalg.svd(_matrix_solution_at(geod, t), compute_uv=False)
                      for t in times])
    smin = svals[:, -1]
    out = []
    for k in range(1, times.shape[0] - 1):
        if not (lo < times[k] <= hi):
            continue
        if smin[k] <= smin[k - 1] and smin[k] <= smin[k + 1]:
            t_star = _golden_min(lambda t: _min_singular(geod, t),
                                 times[k - 1], times[k + 1])
            val = _min_singular(geod, t_star)
            if val < sv_tol:
                s_at = np.linalg.svd(_matrix_solution_at(geod, t_star),
                                     compute_uv=False)
                mult = int(np.sum(s_at < sv_tol))
                if not out or abs(out[-1][0] - t_star) > 10 * geod.step:
                    out.append((float(t_star), mult))
    return out


def _golden_min(f, a: float, b: float, iters: int = 90) -> float:
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = f(x2)
        if b - a < 1e-14:
            break
    return (a + b) / 2


@dataclass
class KillingFields:
    """Killing-generator restrictions along the geodesic, as grid functions."""

    raw: np.ndarray      # (n_gen, n_t, m) frame coordinates
    basis: np.ndarray    # (r, n_t * m) orthonormal rows spanning them


def killing_restrictions(geod: OrbitGeodesic) -> KillingFields:
    key = "killing"
    if key not in geod._cache:
        n_gen = geod.rep.n_generators
        n_t = geod.times.shape[0]
        raw = np.zeros((n_gen, n_t, geod.dim))
        for i in range(n_gen):
            vals = geod.gamma @ geod.rep.generators[i].T          # (n_t, D)
            raw[i] = np.einsum("tdm,td->tm", geod.frames, vals)
        flat = raw.reshape(n_gen, -1)
        basis = linalg.orthonormalize(flat) if n_gen else np.zeros((0, n_t * geod.dim))
        geod._cache[key] = KillingFields(raw, basis)
    return geod._cache[key]


# ---------------------------------------------------------------------------
# variational completeness and the Di Scala-Olmos probe
# ---------------------------------------------------------------------------

@dataclass
class FocalKernelRecord:
    time: float
    multiplicity: int
    angle: float


@dataclass
class VariationalCompletenessReport:
    ok: bool
    worst_angle: float
    records: list


def variational_completeness_probe(geod: OrbitGeodesic, window=None,
                                   angle_tol: float = 1e-6,
                                   sv_tol: float = FOCAL_SV_TOL) -> VariationalCompletenessReport:
    """Check that every vanishing N-Jacobi field is a Killing restriction.

    At each focal time the kernel of the matrix solution is compared, as a
    space of grid functions, against the span of the Killing restrictions;
    the report carries the worst principal angle.
    """
    focal = focal_points(geod, window, sv_tol)
    killing = killing_restrictions(geod)
    a, b, _ = _basis_modes(geod)
    records = []
    worst = 0.0
    for t_star, mult in focal:
        m_at = _matrix_solution_at(geod, t_star)
        _, svals, vh = np.linalg.svd(m_at)
        combos = vh[svals < sv_tol]
        angle = 0.0
        for c in combos:
            field = _combo_field(geod, c)
            flat = field.reshape(-1)
            norm = np.linalg.norm(flat)
            if norm < 1e-14:
                continue
            if killing.basis.shape[0] == 0:
                angle = np.pi / 2
                continue
            res = linalg.span_residual(killing.basis, flat / norm)
            angle = max(angle, float(np.arcsin(np.clip(res, 0.0, 1.0))))
        worst = max(worst, angle)
        records.append(FocalKernelRecord(t_star, mult, angle))
    return VariationalCompletenessReport(worst < angle_tol, worst, records)


def _combo_field(geod: OrbitGeodesic, coeffs: np.ndarray) -> np.ndarray:
    fields = lambda_fields(geod)
    out = np.zeros_like(fields[0][0].y)
    for c, (f, _) in zip(coeffs, fields):
        out += c * f.y
    return out


@dataclass
class EigenFieldRecord:
    eigenvalue: float
    focal_time: float            # 1/lambda, inf for lambda ~ 0
    tangency_residual: float


@dataclass
class DiScalaOlmosReport:
    xi: np.ndarray
    records: list
    worst_tangency: float
    second_time: float
    subspace_angle: float


def discala_olmos_probe(rep: OrthogonalRep, point, seed: int = 0,
                        step: float = DEFAULT_STEP, draws: int = 64,
                        min_eig: float = 1e-6) -> DiScalaOlmosReport:
    """Eigenfield tangency test along a normal line of a Euclidean orbit.

    For a normal direction whose shape operator has fully nonzero spectrum,
    each eigenpair (lambda, u) yields the field J(s) = (1 - lambda s) u; for
    variationally complete representations these stay tangent to the orbits
    they cross, and the orbit tangent spaces at two regular times agree.
    """
    if rep.restrict_to_sphere:
        raise TransversalError("the eigenfield probe runs on the Euclidean model")
    point = np.asarray(point, float)
    rows = rep.tangent_rows(point)
    tangent = linalg.orthonormalize(rows)
    if tangent.shape[0] == 0:
        raise TransversalError("orbit is a point; no eigenfields to probe")
    rng = np.random.default_rng(seed)
    normal = linalg.complement(tangent, rep.space_dim)
    best = None
    for _ in range(draws):
        # draw a unit normal and keep the most nondegenerate shape spectrum
        coeff = rng.standard_normal(normal.shape[0])
        xi = coeff @ normal
        xi /= np.linalg.norm(xi)
        s, _ = shape_operator(rep, point, xi, tangent)
        lam = np.linalg.eigvalsh(s)
        score = float(np.min(np.abs(lam)))
        if best is None or score > best[0]:
            best = (score, xi)
    if best[0] < min_eig:
        raise TransversalError(
            f"no normal direction with fully nonzero shape spectrum after "
            f"{draws} draws (best min |eigenvalue| {best[0]:.2e})")
    xi = best[1]
    s, _ = shape_operator(rep, point, xi, tangent)
    lam, vec = np.linalg.eigh(s)
    eigvecs = vec.T @ tangent
    s_max = 1.4 * float(np.max(1.0 / np.abs(lam)))
    times = np.arange(0.0, s_max, step)
    base_rank = linalg.svd_rank(rows)
    records = []
    worst = 0.0
    for l_val, u in zip(lam, eigvecs):
        res = 0.0
        for s in times:
            j = (1.0 - l_val * s) * u
            nj = np.linalg.norm(j)
            if nj < 0.05:
                continue
            span = rep.tangent_rows(point + s * xi)
            res = max(res, linalg.span_residual(linalg.orthonormalize(span), j / nj))
        records.append(EigenFieldRecord(float(l_val),
                                        float(1.0 / l_val) if abs(l_val) > 1e-12 else np.inf,
                                        float(res)))
        worst = max(worst, res)
    # tangent-space agreement at a second regular, non-focal time
    s1 = 0.45 * float(np.min(1.0 / np.abs(lam)))
    while linalg.svd_rank(rep.tangent_rows(point + s1 * xi)) != base_rank:
        s1 *= 0.7
    other = linalg.orthonormalize(rep.tangent_rows(point + s1 * xi))
    ang = linalg.principal_angles(tangent, other)
    angle = float(np.max(ang)) if ang.size else 0.0
    return DiScalaOlmosReport(xi, records, worst, s1, angle)


# ---------------------------------------------------------------------------
# the transversal system: bundles, A-tensor, transversal Jacobi equation
# ---------------------------------------------------------------------------

class TransversalSystem:
    """Extended vertical/horizontal bundles, A_t and the Morse-Sturm operator."""

    def __init__(self, geod: OrbitGeodesic, rank_rtol: float = 1e-8):
        self.geod = geod
        n_t = geod.times.shape[0]
        m = geod.dim
        fields = lambda_fields(geod)
        vals = np.array([f.y for f, _ in fields])      # (n_fields, n_t, m)
        dvals = np.array([f.dy for f, _ in fields])
        self.lambda_values = vals
        self.lambda_derivs = dvals
        # vertical Jacobi fields: combinations tangent to orbits at all times
        q = np.zeros((vals.shape[0], vals.shape[0]))
        proj_perp = np.empty((n_t, m, m))
        for k in range(n_t):
            rows = geod.rep.tangent_rows(geod.gamma[k])
            span = linalg.orthonormalize(
                rows @ geod.frames[k]) if rows.size else np.zeros((0, m))
            proj_perp[k] = np.eye(m) - span.T @ span
            vk = vals[:, k, :]
            q += vk @ proj_perp[k] @ vk.T
        evals, evecs = np.linalg.eigh(q)
        scale = max(float(evals[-1]), 1.0)
        self.upsilon_coeffs = evecs[:, evals < 1e-10 * scale].T
        r = self.upsilon_coeffs.shape[0]
        self.rank = r
        self.vertical = np.zeros((n_t, r, m))
        for k in range(n_t):
            w = self.upsilon_coeffs @ vals[:, k, :]
            if linalg.svd_rank(w, rank_rtol) < r:
                vanish = linalg.kernel(w.T, 1e-6)
                dw = vanish @ (self.upsilon_coeffs @ dvals[:, k, :])
                w = np.vstack([w, dw])
            basis = linalg.orthonormalize(w)
            if basis.shape[0] != r:
                raise TransversalError(
                    f"vertical rank {basis.shape[0]} != {r} at t = "
                    f"{geod.times[k]:.4f}; a vertical-field zero is not "
                    "isolated at grid resolution")
            self.vertical[k] = basis
        self.p_v = np.einsum("trm,trn->tmn", self.vertical, self.vertical)
        self.p_h = np.eye(m)[None, :, :] - self.p_v
        self.horizontal = np.zeros((n_t, m - r, m))
        for k in range(n_t):
            self.horizontal[k] = linalg.complement(self.vertical[k], m)
        # extended A-tensor from centered differences of the projectors
        dp_v = np.empty_like(self.p_v)
        h = geod.step
        dp_v[1:-1] = (self.p_v[2:] - self.p_v[:-2]) / (2 * h)
        dp_v[0] = (-3 * self.p_v[0] + 4 * self.p_v[1] - self.p_v[2]) / (2 * h)
        dp_v[-1] = (3 * self.p_v[-1] - 4 * self.p_v[-2] + self.p_v[-3]) / (2 * h)
        a_raw = np.einsum("tmi,tin->tmn", self.p_h - self.p_v, dp_v)
        self.a_asymmetry = float(np.max(np.abs(a_raw + np.transpose(a_raw, (0, 2, 1))))) / 2 \
            if n_t else 0.0
        self.a = (a_raw - np.transpose(a_raw, (0, 2, 1))) / 2
        rhat = geod.curvature
        self.r_script = np.einsum("tmi,ij,tjn->tmn", self.p_h, rhat, self.p_h) \
            - 3 * np.einsum("tmi,tin->tmn", self.a, self.a)
        self._cache = {}

    # -- lookups --------------------------------------------------------------

    def index_at(self, t: float) -> int:
        g = self.geod
        k = int(round((t - g.times[0]) / g.step))
        return min(max(k, 0), g.times.shape[0] - 1)

    def a_tensor(self, t: float) -> np.ndarray:
        return self.a[self.index_at(t)]

    def gamma_coords(self, k: int) -> np.ndarray:
        return self.geod.to_frame(k, self.geod.dgamma[k])


def transversal_system(geod: OrbitGeodesic) -> TransversalSystem:
    key = "system"
    if key not in geod._cache:
        geod._cache[key] = TransversalSystem(geod)
    return geod._cache[key]


def vertical_bundle(geod: OrbitGeodesic) -> TransversalSystem:
    """Assemble the extended V_t / H_t bundles (and with them A_t, R(t)).

    The vertical fibre is {J(t)} + {J'(t) : J vanishing at t} over the
    vertical Jacobi fields, with the division construction carrying the
    rank through isolated zeros.
    """
    return transversal_system(geod)


def a_tensor(system: TransversalSystem, t: float) -> np.ndarray:
    """Extended O'Neill tensor A_t at the grid time nearest to t."""
    return system.a_tensor(t)


def horizontal_frame(system: TransversalSystem) -> np.ndarray:
    """A nabla^h-parallel orthonormal frame of H_t along the geodesic.

    The frame solves E' = A_t E (the extended-tensor transport equation)
    with RK4 at double step and is re-orthonormalised within H_t after each
    step; projection-only stepping would drift at first order in the step
    and mask the claim residuals this frame is used to verify.
    """
    key = "hframe"
    if key in system._cache:
        return system._cache[key]
    g = system.geod
    n_t = g.times.shape[0]
    m = g.dim
    q = system.horizontal.shape[1]
    frame = np.zeros((n_t, m, q))
    frame[0] = system.horizontal[0].T
    h = g.step
    for k in range(n_t - 1):
        e = frame[k]
        a0 = system.a[k]
        a1 = system.a[k + 1]
        am = (a0 + a1) / 2          # O(h^2) midpoint value of the tensor
        k1 = a0 @ e
        k2 = am @ (e + 0.5 * h * k1)
        k3 = am @ (e + 0.5 * h * k2)
        k4 = a1 @ (e + h * k3)
        nxt = e + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        nxt = system.p_h[k + 1] @ nxt       # remove numerical vertical leakage
        frame[k + 1] = linalg.orthonormalize(nxt.T).T
    system._cache[key] = frame
    return frame


def claim_residuals(system: TransversalSystem, stride: int = 50) -> dict:
    """Grid residuals of the two structure claims of the extended tensor.

    ``vertical-derivative``: for N-Jacobi fields made horizontal at a time
    t0 by subtracting a vertical Jacobi field, (J'(t0))^v = -A_t0 J(t0).
    ``frame-derivative``: nabla^h-parallel frame fields satisfy E' = A E
    under centered differencing.
    """
    g = system.geod
    n_t = g.times.shape[0]
    worst_v = 0.0
    vals = system.lambda_values
    dvals = system.lambda_derivs
    ups = system.upsilon_coeffs
    for k in range(stride, n_t - stride, stride):
        wk = ups @ vals[:, k, :] if ups.size else np.zeros((0, g.dim))
        dwk = ups @ dvals[:, k, :] if ups.size else np.zeros((0, g.dim))
        for j in range(vals.shape[0]):
            v = vals[j, k]
            dv = dvals[j, k]
            vert = system.p_v[k] @ v
            if wk.shape[0]:
                alpha, res, *_ = np.linalg.lstsq(wk.T, vert, rcond=None)
                if np.linalg.norm(wk.T @ alpha - vert) > 1e-8:
                    continue        # vertical value not matchable (vanishing time)
                v = v - alpha @ wk
                dv = dv - alpha @ dwk
            resid = np.linalg.norm(system.p_v[k] @ dv + system.a[k] @ v)
            worst_v = max(worst_v, float(resid))
    frame = horizontal_frame(system)
    h = g.step
    de = (frame[2:] - frame[:-2]) / (2 * h)
    model = np.einsum("tmi,tin->tmn", system.a[1:-1], frame[1:-1])
    worst_e = float(np.max(np.abs(de - model))) if de.size else 0.0
    return {"vertical-derivative": worst_v, "frame-derivative": worst_e}


@dataclass
class HorizontalField:
    """Solution of the transversal Jacobi equation on the even subgrid."""

    system: TransversalSystem
    indices: np.ndarray   # grid indices (even stride)
    y: np.ndarray         # (n, m) horizontal frame coordinates
    z: np.ndarray         # (n, m) nabla^h derivative

    @property
    def times(self) -> np.ndarray:
        return self.system.geod.times[self.indices]


def transversal_integrate(system: TransversalSystem, y0, z0) -> HorizontalField:
    """Integrate (nabla^h)^2 Y + (R(Y,gamma')gamma')^h - 3 A_t^2 Y = 0.

    State (Y, Z = nabla^h Y) in frame coordinates; the plain derivatives are
    Y' = Z + A Y and Z' = F(Y) + A Z, integrated with RK4 at double step so
    every stage sits on a grid node.
    """
    g = system.geod
    y0 = np.asarray(y0, float)
    z0 = np.asarray(z0, float)
    if np.linalg.norm(system.p_v[0] @ y0) > 1e-8 * max(1.0, np.linalg.norm(y0)):
        raise TransversalError("initial value must be horizontal")
    rhat = g.curvature
    h = g.step
    n_t = g.times.shape[0]

    def f(k, state):
        y, z = state
        force = -system.p_h[k] @ (rhat @ y) + 3 * system.a[k] @ (system.a[k] @ y)
        return np.array([z + system.a[k] @ y, force + system.a[k] @ z])

    idx = np.arange(0, n_t, 2)
    ys = np.zeros((idx.shape[0], g.dim))
    zs = np.zeros_like(ys)
    state = np.array([y0, z0])
    ys[0], zs[0] = state
    for out_i, k in enumerate(idx[:-1]):
        k1 = f(k, state)
        k2 = f(k + 1, state + h * k1)
        k3 = f(k + 1, state + h * k2)
        k4 = f(k + 2, state + 2 * h * k3)
        state = state + (2 * h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[out_i + 1], zs[out_i + 1] = state
    return HorizontalField(system, idx, ys, zs)


def transversal_equation_residual(system: TransversalSystem, y: np.ndarray,
                                  stride: int = 1) -> float:
    """Sup residual of the transversal Jacobi equation for a field on the grid.

    ``y`` holds horizontal frame coordinates per grid point; derivatives are
    centered differences, so the residual carries an O(h^2) floor.
    """
    g = system.geod
    h = g.step
    dy = np.empty_like(y)
    dy[1:-1] = (y[2:] - y[:-2]) / (2 * h)
    dy[0] = dy[1]
    dy[-1] = dy[-2]
    z = np.einsum("tmn,tn->tm", system.p_h, dy)
    dz = np.empty_like(z)
    dz[2:-2] = (z[3:-1] - z[1:-3]) / (2 * h)
    ddy = np.einsum("tmn,tn->tm", system.p_h, dz)
    rhs = np.einsum("tmn,tn->tm", system.r_script, y)
    res = ddy[2:-2] + rhs[2:-2]
    return float(np.max(np.linalg.norm(res, axis=1)))


def symplectic_form(f1: GridField, f2: GridField, k: int | None = None):
    """omega(J1, J2) = <J1', J2> - <J1, J2'> at one grid index or all of them."""
    w = np.einsum("tm,tm->t", f1.dy, f2.y) - np.einsum("tm,tm->t", f1.y, f2.dy)
    if k is None:
        return w
    return float(w[k])


# ---------------------------------------------------------------------------
# Morse-Sturm scan
# ---------------------------------------------------------------------------

@dataclass
class ConjugateScanReport:
    conjugate_points: list    # (time, multiplicity)
    index: int
    sturm_consistent: bool


def conjugate_scan(system: TransversalSystem, n_elements: int = 64,
                   sv_tol: float = FOCAL_SV_TOL) -> ConjugateScanReport:
    """Conjugate points and Morse index of Y'' + R(t) Y = 0 on the horizontal.

    The matrix solution with Y(a) = 0, Y'(a) = I runs in a nabla^h-parallel
    frame orthogonal to gamma'; the index of the associated form is the
    negative-eigenvalue count of a piecewise-linear discretisation, checked
    against the sum of interior conjugate multiplicities.
    """
    g = system.geod
    frame = horizontal_frame(system)
    gp0 = system.p_h[0] @ system.gamma_coords(0)
    gp0 = gp0 / np.linalg.norm(gp0)
    base = frame[0].T          # rows: horizontal basis at t0
    trans = linalg.orthonormalize(base - np.outer(base @ gp0, gp0))
    coeff0 = trans @ frame[0]  # (q, q') coordinates in the moving frame
    q_dim = trans.shape[0]
    if q_dim == 0:
        return ConjugateScanReport([], 0, True)
    n_t = g.times.shape[0]
    # R in the moving frame, restricted transversally
    r_frame = np.einsum("tmq,tmn,tnp->tqp", frame, system.r_script, frame)
    r_red = np.einsum("iq,tqp,jp->tij", coeff0, r_frame, coeff0)
    h = g.step
    idx = np.arange(0, n_t, 2)
    sol = np.zeros((idx.shape[0], q_dim, q_dim))
    state = np.array([np.zeros((q_dim, q_dim)), np.eye(q_dim)])

    def f(k, st):
        y, z = st
        return np.array([z, -r_red[k] @ y])

    sol[0] = state[0]
    for out_i, k in enumerate(idx[:-1]):
        k1 = f(k, state)
        k2 = f(k + 1, state + h * k1)
        k3 = f(k + 1, state + h * k2)
        k4 = f(k + 2, state + 2 * h * k3)
        state = state + (2 * h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        sol[out_i + 1] = state[0]
    times = g.times[idx]
    conj = _matrix_roots(sol, times, sv_tol)
    index = _pl_index(r_red[idx], times, q_dim, n_elements)
    interior = sum(m for t, m in conj if t < times[-1] - 2 * h)
    return ConjugateScanReport(conj, index, index == interior)


def _matrix_roots(sol: np.ndarray, times: np.ndarray, sv_tol: float) -> list:
    dets = np.array([np.linalg.det(s) for s in sol])
    smin = np.array([np.linalg.svd(s, compute_uv=False)[-1] for s in sol])
    n = times.shape[0]
    out = []
    for k in range(2, n - 1):
        root = None
        if dets[k] == 0.0 or (dets[k] * dets[k + 1] < 0):
            t0, t1 = times[k], times[k + 1]
            d0, d1 = dets[k], dets[k + 1]
            root = t0 if d0 == 0 else t0 - d0 * (t1 - t0) / (d1 - d0)
        elif smin[k] < smin[k - 1] and smin[k] <= smin[k + 1] \
                and smin[k] < 100 * sv_tol:
            root = times[k]
        if root is not None:
            kk = int(np.argmin(np.abs(times - root)))
            mult = int(np.sum(np.linalg.svd(sol[kk], compute_uv=False)
                              < max(sv_tol, 2 * smin[kk])))
            mult = max(mult, 1)
            if not out or abs(out[-1][0] - root) > 4 * (times[1] - times[0]):
                out.append((float(root), mult))
    return out


def _pl_index(r_vals: np.ndarray, times: np.ndarray, q_dim: int,
              n_elements: int) -> int:
    """Negative-eigenvalue count of the piecewise-linear index form."""
    if q_dim == 0:
        return 0
    n = times.shape[0]
    node_idx = np.unique(np.linspace(0, n - 1, n_elements + 1).astype(int))
    n_nodes = node_idx.shape[0]
    dim = (n_nodes - 2) * q_dim
    if dim <= 0:
        return 0
    mat = np.zeros((dim, dim))

    def node_slice(i):
        return slice((i - 1) * q_dim, i * q_dim)

    for e in range(n_nodes - 1):
        k0, k1 = node_idx[e], node_idx[e + 1]
        ell = times[k1] - times[k0]
        grid = np.arange(k0, k1 + 1)
        ts = times[grid]
        phi_l = (times[k1] - ts) / ell
        phi_r = (ts - times[k0]) / ell
        r_blk = r_vals[grid]
        m_ll = np.trapezoid(phi_l[:, None, None] ** 2 * r_blk, ts, axis=0)
        m_lr = np.trapezoid((phi_l * phi_r)[:, None, None] * r_blk, ts, axis=0)
        m_rr = np.trapezoid(phi_r[:, None, None] ** 2 * r_blk, ts, axis=0)
        eye = np.eye(q_dim)
        blocks = {
            (e, e): eye / ell - m_ll,
            (e, e + 1): -eye / ell - m_lr,
            (e + 1, e): -eye / ell - m_lr.T,
            (e + 1, e + 1): eye / ell - m_rr,
        }
        for (i, j), blk in blocks.items():
            if 1 <= i <= n_nodes - 2 and 1 <= j <= n_nodes - 2:
                mat[node_slice(i), node_slice(j)] += blk
    evals = np.linalg.eigvalsh((mat + mat.T) / 2)
    scale = max(float(np.max(np.abs(evals))), 1.0)
    return int(np.sum(evals < -1e-9 * scale))


def index_form_quadrature(system: TransversalSystem, values: np.ndarray,
                          lo: int = 0, hi: int | None = None) -> float:
    """I(Z, Z) by trapezoid quadrature for a horizontal field on the grid."""
    g = system.geod
    hi = hi if hi is not None else g.times.shape[0] - 1
    h = g.step
    seg = values[lo:hi + 1]
    dz = np.empty_like(seg)
    dz[1:-1] = (seg[2:] - seg[:-2]) / (2 * h)
    dz[0] = (seg[1] - seg[0]) / h
    dz[-1] = (seg[-1] - seg[-2]) / h
    zprime = np.einsum("tmn,tn->tm", system.p_h[lo:hi + 1], dz)
    kinetic = np.einsum("tm,tm->t", zprime, zprime)
    potential = np.einsum("tm,tmn,tn->t", seg, system.r_script[lo:hi + 1], seg)
    ts = g.times[lo:hi + 1]
    return float(np.trapezoid(kinetic - potential, ts))


# ---------------------------------------------------------------------------
# O'Neill check and the rescaling probe
# ---------------------------------------------------------------------------

@dataclass
class ONeillReport:
    k_sigma: float
    a_norm_sq: float
    k_star_formula: float
    k_star_estimate: float
    residual: float


def oneill_check(rep: OrthogonalRep, manifold: ModelManifold, point, x, y,
                 step: float = 2.5e-4, s_values=(0.08, 0.04),
                 qconfig: QuotientOptimizerConfig | None = None) -> ONeillReport:
    """Compare K(sigma*) = K(sigma) + 3|A_X Y|^2 against a quotient estimate.

    The A-tensor path evaluates the extended tensor at the basepoint of the
    geodesic with initial direction X; the quotient path estimates the base
    curvature from orbit-space distances between points pushed out along X
    and Y, Richardson-extrapolated over two separations.
    """
    point = np.asarray(point, float)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    k_sigma = float(np.dot(manifold.curvature(point, x, y, y), x))
    window = 40 * step
    geod = OrbitGeodesic(rep, manifold, point, x, span=(-window, window), step=step)
    system = transversal_system(geod)
    center = system.index_at(0.0)
    y_f = geod.to_frame(center, y)
    a_xy = system.a[center] @ y_f
    a_sq = float(np.dot(a_xy, a_xy))
    k_formula = k_sigma + 3 * a_sq
    cfg = qconfig or QuotientOptimizerConfig(restarts=4, evals=1500, probes=100)
    ks = []
    for s in s_values:
        px = manifold.exp(point, s * x)
        py = manifold.exp(point, s * y)
        d = quotient_distance(rep, px, py, cfg).value
        ks.append(12.0 * (np.sqrt(2.0) * s - d) / (np.sqrt(2.0) * s ** 3))
    if len(ks) >= 2 and abs(s_values[1] * 2 - s_values[0]) < 1e-12:
        k_est = (4 * ks[1] - ks[0]) / 3
    else:
        k_est = ks[-1]
    return ONeillReport(k_sigma, a_sq, k_formula, float(k_est),
                        float(abs(k_est - k_formula)))


@dataclass
class RescaleReport:
    lambdas: tuple
    values: tuple             # lambda^2 * curvature estimate at h_lambda(q)
    curvature_estimates: tuple
    flat_prediction: bool
    consistent: bool


def rescale_probe(rep: OrthogonalRep, point, q, lambdas=(0.125, 0.0625, 0.03125, 0.015625),
                  seed: int = 0, eta: float = 0.3,
                  qconfig: QuotientOptimizerConfig | None = None) -> RescaleReport:
    """Blow-up probe at a singular point of a sphere action.

    Points q are pulled toward the singular point along the geodesic from
    ``point`` through ``q`` by homothety factors lambda; the report carries
    lambda^2 times the quotient-curvature estimate there, which tends to
    zero exactly when the slice representation is polar (orbifold point).
    """
    if not rep.restrict_to_sphere:
        raise TransversalError("the rescale probe runs on a sphere action")
    point = np.asarray(point, float)
    q = np.asarray(q, float)
    manifold = ModelManifold("sphere", rep.space_dim)
    v = manifold.log(point, q)
    rho = np.linalg.norm(v)
    if rho < 1e-10:
        raise TransversalError("q must differ from the base point")
    prediction = orbifold_point_test(rep, point, seed).ok
    cfg = qconfig or QuotientOptimizerConfig(restarts=4, evals=2500, probes=200, seed=seed)
    rng = np.random.default_rng(seed)
    values = []
    estimates = []
    for lam in lambdas:
        x = manifold.exp(point, lam * v)
        rows = np.vstack([rep.tangent_rows(x), x[None, :]])
        hor = linalg.complement(rows, rep.space_dim)
        if hor.shape[0] < 2:
            raise TransversalError("quotient is lower than two-dimensional; no "
                                   "curvature plane to estimate")
        best = -np.inf
        n_planes = 1 if hor.shape[0] == 2 else 3
        for _ in range(n_planes):
            if hor.shape[0] == 2:
                bx, by = hor[0], hor[1]
            else:
                c = linalg.orthonormalize(rng.standard_normal((2, hor.shape[0])))
                bx, by = c @ hor
            s1 = eta * lam * rho
            est = []
            for s in (s1, s1 / 2):
                px = manifold.exp(x, s * bx)
                py = manifold.exp(x, s * by)
                d = quotient_distance(rep, px, py, cfg).value
                est.append(12.0 * (np.sqrt(2.0) * s - d) / (np.sqrt(2.0) * s ** 3))
            best = max(best, (4 * est[1] - est[0]) / 3)
        estimates.append(float(best))
        values.append(float(lam ** 2 * best))
    consistent = (not prediction) or (abs(values[-1]) < 1e-2)
    return RescaleReport(tuple(lambdas), tuple(values), tuple(estimates),
                         prediction, consistent)

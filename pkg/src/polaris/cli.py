"""Model ingestion, analysis orchestration and machine-readable reporting.

``analyze`` dispatches the requested checks over a catalog entry or a model
document, producing one record per check with its verdict, residual,
tolerance, seed and runtime.  When the entry carries an expected value for a
check, pass/fail compares against it (that is how the negative fixtures stay
green in the full-suite run); otherwise a negative verdict fails the run.
Timing fields are excluded from the determinism contract.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import linalg
from .catalog import CatalogEntry, catalog_entry, catalog_list
from .liealg import LieAlgebra, Subspace, is_lie_triple_system
from .polarity import OrthogonalRep, cohomogeneity, is_hyperpolar_homogeneous, \
    is_polar_homogeneous, is_polar_rep, orbifold_point_test, slice_rep
from .symspace import BrokenGeodesicSampler, ModelManifold, \
    cartan_decompose, cartan_hermann_probe, maximal_abelian
from .transversal import OrbitGeodesic, claim_residuals, conjugate_scan, \
    discala_olmos_probe, focal_points, jacobi_integrate, n_jacobi_space, \
    oneill_check, rescale_probe, transversal_system, \
    variational_completeness_probe
from .weyl import QuotientOptimizerConfig, ReductionSampler, \
    reduction_isometry_check, restricted_roots, weyl_group_closure

SCHEMA_VERSION = 1

ALL_CHECKS = ("polarity", "hyperpolarity", "cohomogeneity", "slice-scan",
              "orbifold-points", "weyl", "reduction-isometry", "jacobi-scan",
              "variational-completeness", "oneill", "transversal",
              "cartan-probe", "rescale-probe")


class ModelError(ValueError):
    pass


class Inapplicable(Exception):
    """Raised by a check runner when the model kind does not support it."""


@dataclasses.dataclass
class CheckRecord:
    check: str
    status: str                  # pass | fail | skipped
    verdict: object
    value: object
    residual: float | None
    tolerance: float | None
    seed: int
    runtime: float

    def to_doc(self) -> dict:
        return {
            "check": self.check,
            "status": self.status,
            "verdict": _jsonable(self.verdict),
            "value": _jsonable(self.value),
            "residual": _jsonable(self.residual),
            "tolerance": _jsonable(self.tolerance),
            "seed": self.seed,
            "runtime": self.runtime,
        }


@dataclasses.dataclass
class AnalysisReport:
    entry: str
    records: list
    status: str

    def to_doc(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "entry": self.entry,
            "records": [r.to_doc() for r in self.records],
            "status": self.status,
        }


def _jsonable(x):
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


# ---------------------------------------------------------------------------
# model loading
# ---------------------------------------------------------------------------

def load_model(source) -> dict:
    """Validate a model document and build its objects.

    ``source`` is a path, a JSON string, or an already-parsed dict.  Returns
    a bundle with the built model under its natural keys ("algebra",
    "pair", "rep", ...), after running every load-time invariant.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = source
        if os.path.exists(str(source)):
            with open(source) as fh:
                text = fh.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelError(f"not valid JSON: {exc}") from exc
    if doc.get("schema") != SCHEMA_VERSION:
        raise ModelError(f"schema: expected {SCHEMA_VERSION}, got {doc.get('schema')!r}")
    kind = doc.get("kind")
    if kind not in ("lie-algebra", "symmetric-pair", "representation"):
        raise ModelError(f"kind: unknown model kind {kind!r}")
    dim = doc.get("dim")
    if not isinstance(dim, int) or dim < 0:
        raise ModelError(f"dim: must be a nonnegative integer, got {dim!r}")
    structure = np.zeros((dim, dim, dim))
    seen = set()
    for pos, item in enumerate(doc.get("structure", [])):
        if len(item) != 4:
            raise ModelError(f"structure[{pos}]: expected [i, j, k, c]")
        i, j, k, c = item
        if not (1 <= i <= dim and 1 <= j <= dim and 1 <= k <= dim):
            raise ModelError(f"structure[{pos}]: indices ({i},{j},{k}) out of range 1..{dim}")
        if i >= j:
            raise ModelError(
                f"structure[{pos}]: expected i < j (antisymmetry is implied); "
                f"offending entry ({i},{j},{k})")
        if (i, j, k) in seen:
            raise ModelError(f"structure[{pos}]: duplicate entry ({i},{j},{k})")
        seen.add((i, j, k))
        structure[i - 1, j - 1, k - 1] = float(c)
        structure[j - 1, i - 1, k - 1] = -float(c)
    inner = np.eye(dim)
    if doc.get("inner") is not None:
        inner = np.asarray(doc["inner"], float).reshape(dim, dim)
    realization = None
    if doc.get("realization") is not None:
        realization = []
        for pos, flat in enumerate(doc["realization"]):
            flat = np.asarray(flat, complex)
            side = int(round(np.sqrt(flat.size)))
            if side * side != flat.size:
                raise ModelError(f"realization[{pos}]: not a flattened square matrix")
            realization.append(flat.reshape(side, side))
        if len(realization) != dim:
            raise ModelError(f"realization: expected {dim} matrices, got {len(realization)}")
        realization = tuple(realization)
    name = doc.get("name", f"model({kind})")
    algebra = LieAlgebra(name, structure, inner, realization)
    try:
        algebra.validate()
    except Exception as exc:
        raise ModelError(f"algebra invariants: {exc}") from exc
    bundle = {"kind": kind, "algebra": algebra}
    if doc.get("subalgebra") is not None:
        rows = np.asarray(doc["subalgebra"], float)
        bundle["subalgebra"] = Subspace(
            name, linalg.orthonormalize(rows, algebra.inner))
    if kind == "symmetric-pair":
        if doc.get("involution") is None:
            raise ModelError("involution: required for symmetric-pair models")
        theta = np.asarray(doc["involution"], float).reshape(dim, dim)
        try:
            bundle["pair"] = cartan_decompose(algebra, theta)
        except Exception as exc:
            raise ModelError(f"involution: {exc}") from exc
    if kind == "representation":
        if doc.get("generators") is None:
            raise ModelError("generators: required for representation models")
        gens = []
        for pos, flat in enumerate(doc["generators"]):
            flat = np.asarray(flat, float)
            side = int(round(np.sqrt(flat.size)))
            if side * side != flat.size:
                raise ModelError(f"generators[{pos}]: not a flattened square matrix")
            gens.append(flat.reshape(side, side))
        if len({g.shape for g in gens}) > 1:
            raise ModelError("generators: inconsistent dimensions")
        space_dim = gens[0].shape[0] if gens else 0
        man = doc.get("manifold", {"kind": "euclidean"})
        man_kind = man.get("kind", "euclidean")
        sphere = man_kind in ("sphere", "unit-sphere")
        if man_kind == "product-spheres":
            bundle["manifold"] = ModelManifold(
                "product-spheres", space_dim, radii=tuple(man.get("radii", (1.0, 1.0))),
                split=tuple(man.get("split", (space_dim // 2, space_dim - space_dim // 2))))
        else:
            bundle["manifold"] = ModelManifold(
                "sphere" if sphere else "euclidean", space_dim)
        rep = OrthogonalRep(algebra, np.array(gens).reshape(len(gens), space_dim, space_dim),
                            space_dim, restrict_to_sphere=sphere, name=name)
        try:
            rep.validate()
        except Exception as exc:
            raise ModelError(f"generators: {exc}") from exc
        bundle["rep"] = rep
    return bundle


# ---------------------------------------------------------------------------
# check runners
# ---------------------------------------------------------------------------

def _need(bundle, key, check):
    if bundle.get(key) is None:
        raise Inapplicable(f"{check} needs {key}")
    return bundle[key]


def _geodesic(bundle, step):
    rep = _need(bundle, "rep", "geodesic checks")
    manifold = _need(bundle, "manifold", "geodesic checks")
    point = bundle.get("basepoint")
    if point is None:
        raise Inapplicable("geodesic checks need a basepoint")
    direction = bundle.get("direction")
    if direction is None:
        rows = rep.tangent_rows(point)
        blocked = np.vstack([rows, point[None, :]]) if rep.restrict_to_sphere else rows
        comp = linalg.complement(blocked, rep.space_dim)
        direction = comp[0]
    span = bundle.get("span", (0.0, float(np.pi)))
    return OrbitGeodesic(rep, manifold, point, direction, span=span,
                         step=step or 1e-3)


def _check_polarity(bundle, seed, tol, step):
    tol = tol or 1e-8
    if bundle.get("rep") is not None:
        v = is_polar_rep(bundle["rep"], seed, tol)
        value = {"cohomogeneity": v.cohomogeneity}
        if v.witness is not None:
            value["witness"] = {"generator": v.witness[0],
                                "pairing": v.witness[3]}
        return v.polar, value, v.residual, tol
    pair = _need(bundle, "pair", "polarity")
    h = _need(bundle, "subalgebra", "polarity")
    v = is_polar_homogeneous(pair, h, seed, tol)
    value = {"cohomogeneity": v.cohomogeneity}
    if v.witness is not None:
        value["witness"] = list(v.witness[:1]) + [float(v.witness[-1])]
    return v.polar, value, v.residual, tol


def _check_hyperpolarity(bundle, seed, tol, step):
    tol = tol or 1e-8
    pair = _need(bundle, "pair", "hyperpolarity")
    h = _need(bundle, "subalgebra", "hyperpolarity")
    res = is_hyperpolar_homogeneous(pair, h, seed, tol)
    return res.ok, {}, res.residual, tol


def _check_cohomogeneity(bundle, seed, tol, step):
    rep = _need(bundle, "rep", "cohomogeneity")
    return int(cohomogeneity(rep, seed)), {}, 0.0, None


def _check_slice_scan(bundle, seed, tol, step, points: int = 12):
    tol = tol or 1e-8
    rep = _need(bundle, "rep", "slice-scan")
    rng = np.random.default_rng(seed)
    worst = 0.0
    ok = True
    for _ in range(points):
        p = rng.standard_normal(rep.space_dim)
        if rep.restrict_to_sphere:
            p /= np.linalg.norm(p)
        sl = slice_rep(rep, p)
        v = is_polar_rep(sl, seed, tol)
        worst = max(worst, v.residual)
        ok = ok and v.polar
    return ok, {"points": points}, worst, tol


def _check_orbifold_points(bundle, seed, tol, step, points: int = 8):
    tol = tol or 1e-8
    rep = _need(bundle, "rep", "orbifold-points")
    rng = np.random.default_rng(seed)
    worst = 0.0
    sampled_ok = True
    for _ in range(points):
        p = rng.standard_normal(rep.space_dim)
        if rep.restrict_to_sphere:
            p /= np.linalg.norm(p)
        res = orbifold_point_test(rep, p, seed, tol)
        worst = max(worst, res.residual)
        sampled_ok = sampled_ok and res.ok
    designated = {}
    for name, point in (bundle.get("orbifold_points") or {}).items():
        res = orbifold_point_test(rep, point, seed, tol)
        worst = max(worst, res.residual)
        designated[name] = res.ok
    verdict = sampled_ok if not designated else \
        {"sampled": sampled_ok, "designated": designated}
    return verdict, {"points": points}, worst, tol


def _weyl_data(bundle, seed):
    rep = _need(bundle, "rep", "weyl")
    srep = bundle.get("srep")
    if srep is None:
        raise Inapplicable("weyl needs an associated symmetric pair")
    pair, p_map = srep
    v = is_polar_rep(rep, seed)
    if not v.polar:
        raise Inapplicable("weyl machinery is restricted to polar s-representations")
    a = Subspace(pair.algebra.name, v.section.basis @ p_map)
    roots = restricted_roots(pair, a, seed)
    group = weyl_group_closure(roots)
    return v, roots, group


def _check_weyl(bundle, seed, tol, step):
    _, roots, group = _weyl_data(bundle, seed)
    verdict = {"roots": len(roots.roots), "order": group.order}
    mults = sorted(int(m) for _, m in roots.roots)
    return verdict, {"multiplicities": mults, "g0_dim": roots.g0_dim}, 0.0, None


def _check_reduction(bundle, seed, tol, step, pairs: int = 200):
    tol = tol or 1e-3
    v, roots, group = _weyl_data(bundle, seed)
    rep = bundle["rep"]
    budget = QuotientOptimizerConfig(restarts=4, evals=2500, probes=300, seed=seed)
    report = reduction_isometry_check(rep, v.section, group,
                                      ReductionSampler(pairs=pairs, seed=seed),
                                      budget)
    ok = report.max_relative_error < tol and report.max_one_sided_excess < 1e-6
    value = {"pairs": report.n_pairs,
             "one_sided_excess": report.max_one_sided_excess}
    return ok, value, report.max_relative_error, tol


def _check_jacobi_scan(bundle, seed, tol, step):
    tol = tol or 1e-8
    geod = _geodesic(bundle, step)
    focal = focal_points(geod)
    j0, dj0, _ = n_jacobi_space(geod)[0]
    exact = jacobi_integrate(geod, j0, dj0)
    rk = jacobi_integrate(geod, j0, dj0, method="rk4")
    resid = float(np.max(np.abs(exact.y - rk.y)))
    verdict = {"focal": [[round(t, 6), m] for t, m in focal]}
    ok = resid < tol
    return verdict if ok else False, {"integrator_residual": resid}, resid, tol


def _check_vc(bundle, seed, tol, step):
    tol = tol or 1e-6
    geod = _geodesic(bundle, step)
    probe = variational_completeness_probe(geod, angle_tol=tol)
    tangency = None
    rep = bundle["rep"]
    if not rep.restrict_to_sphere and bundle.get("manifold").kind == "euclidean":
        do = discala_olmos_probe(rep, bundle["basepoint"], seed)
        tangency = bool(do.worst_tangency < 1e-3)
    verdict = {"probe": probe.ok, "eigenfield_tangency": tangency}
    return verdict, {"worst_angle": probe.worst_angle}, probe.worst_angle, tol


def _check_oneill(bundle, seed, tol, step):
    tol = tol or 1e-2
    rep = _need(bundle, "rep", "oneill")
    pair_xy = bundle.get("horizontal_pair")
    if pair_xy is None:
        raise Inapplicable("oneill needs a designated horizontal 2-plane")
    report = oneill_check(rep, bundle["manifold"], bundle["basepoint"],
                          pair_xy[0], pair_xy[1], step=min(step or 2.5e-4, 2.5e-4))
    ok = report.residual < tol
    value = {"k_sigma": report.k_sigma, "a_norm_sq": report.a_norm_sq,
             "k_star_formula": report.k_star_formula}
    return (report.k_star_estimate if ok else False), value, report.residual, tol


def _check_transversal(bundle, seed, tol, step):
    tol = tol or 1e-5
    geod = _geodesic(bundle, min(step or 2.5e-4, 1e-3))
    system = transversal_system(geod)
    scan = conjugate_scan(system)
    claims = claim_residuals(system)
    worst = max(claims.values()) if claims else 0.0
    first = scan.conjugate_points[0][0] if scan.conjugate_points else None
    verdict = {"first_conjugate": first, "index": scan.index,
               "sturm": scan.sturm_consistent}
    ok = scan.sturm_consistent and worst < tol
    return verdict if ok else False, {"claims": claims}, worst, tol


def _check_cartan_probe(bundle, seed, tol, step, planes: int = 10):
    tol = tol or 1e-8
    srep = bundle.get("srep")
    if srep is not None:
        pair = srep[0]
    else:
        pair = _need(bundle, "pair", "cartan-probe")
    a = maximal_abelian(pair, seed)
    res = cartan_hermann_probe(pair, None, a,
                               BrokenGeodesicSampler(count=100, seed=seed), tol)
    ok = res.ok
    worst = res.residual
    rng = np.random.default_rng(seed + 1)
    agree = True
    for i in range(planes):
        rows = linalg.orthonormalize(
            rng.standard_normal((2, pair.p.dim)) @ pair.p.basis, pair.algebra.inner)
        s = Subspace(pair.algebra.name, rows)
        lts = is_lie_triple_system(pair.algebra, s, tol)
        probe = cartan_hermann_probe(pair, None, s,
                                     BrokenGeodesicSampler(count=4, seed=seed + 2 + i),
                                     tol)
        agree = agree and (lts.ok == probe.ok)
    return ok and agree, {"planes": planes, "agreement": agree}, worst, tol


def _check_rescale(bundle, seed, tol, step):
    tol = tol or 1e-2
    rep = _need(bundle, "rep", "rescale-probe")
    sing = bundle.get("sphere_singular")
    if sing is None:
        raise Inapplicable("rescale-probe needs a designated singular sphere point")
    sphere_rep = dataclasses.replace(rep, restrict_to_sphere=True)
    report = rescale_probe(sphere_rep, sing["point"], sing["regular_q"], seed=seed)
    ok = report.consistent and abs(report.values[-1]) < tol
    value = {"lambdas": list(report.lambdas), "values": list(report.values),
             "flat_prediction": report.flat_prediction}
    return ok, value, abs(report.values[-1]), tol


_RUNNERS = {
    "polarity": _check_polarity,
    "hyperpolarity": _check_hyperpolarity,
    "cohomogeneity": _check_cohomogeneity,
    "slice-scan": _check_slice_scan,
    "orbifold-points": _check_orbifold_points,
    "weyl": _check_weyl,
    "reduction-isometry": _check_reduction,
    "jacobi-scan": _check_jacobi_scan,
    "variational-completeness": _check_vc,
    "oneill": _check_oneill,
    "transversal": _check_transversal,
    "cartan-probe": _check_cartan_probe,
    "rescale-probe": _check_rescale,
}


def _match_expected(expected: dict, verdict) -> bool:
    want = expected.get("value")
    atol = expected.get("atol", 0.0)
    return _values_match(want, verdict, atol)


def _values_match(want, got, atol) -> bool:
    if isinstance(want, dict):
        if not isinstance(got, dict):
            return False
        return all(_values_match(v, got.get(k), atol) for k, v in want.items())
    if isinstance(want, bool) or want is None:
        return want == got
    if isinstance(want, (int, float)):
        if not isinstance(got, (int, float)):
            return False
        return abs(float(want) - float(got)) <= max(atol, 1e-12)
    return want == got


def analyze(entry, checks=None, seed: int = 0, tol: float | None = None,
            step: float | None = None) -> AnalysisReport:
    """Run the requested checks over a catalog entry or a loaded model bundle.

    Deterministic given (entry, checks, seed, tolerances); inapplicable
    checks are reported as skipped records, not failures.
    """
    if isinstance(entry, str):
        entry = catalog_entry(entry)
    if isinstance(entry, CatalogEntry):
        bundle = entry.build()
        name = entry.name
        expected = entry.expected
        checks = list(checks) if checks is not None else list(entry.default_checks)
    else:
        bundle = entry
        name = bundle.get("name", bundle.get("algebra").name if bundle.get("algebra")
                          else "model")
        expected = {}
        checks = list(checks) if checks is not None else list(ALL_CHECKS)
    records = []
    for check in checks:
        if check not in _RUNNERS:
            raise ModelError(f"unknown check {check!r}; known: {', '.join(ALL_CHECKS)}")
        t0 = time.perf_counter()
        try:
            verdict, value, residual, tolerance = _RUNNERS[check](bundle, seed, tol, step)
            if check in expected:
                ok = _match_expected(expected[check], verdict)
            elif isinstance(verdict, bool):
                ok = verdict
            elif isinstance(verdict, dict) and "probe" in verdict:
                ok = bool(verdict["probe"])
            else:
                ok = verdict is not False
            status = "pass" if ok else "fail"
        except Inapplicable as exc:
            verdict, value, residual, tolerance = None, {"reason": str(exc)}, None, None
            status = "skipped"
        records.append(CheckRecord(check, status, verdict, value, residual,
                                   tolerance, seed, time.perf_counter() - t0))
    status = "pass" if all(r.status != "fail" for r in records) else "fail"
    return AnalysisReport(name, records, status)


def emit_report(report: AnalysisReport, fmt: str = "json") -> str:
    """Serialise a report; json is schema-stable, text is a human summary."""
    if fmt == "json":
        return json.dumps(report.to_doc(), sort_keys=True, separators=(",", ":"))
    if fmt != "text":
        raise ModelError(f"unknown format {fmt!r}; expected json or text")
    lines = [f"entry: {report.entry}  [{report.status}]"]
    for r in report.records:
        detail = "" if r.residual is None else \
            f"  residual={r.residual:.3e} tol={r.tolerance:.1e}" \
            if r.tolerance else f"  residual={r.residual:.3e}"
        lines.append(f"  {r.check:26s} {r.status:7s} verdict={r.verdict!r}"
                     f"{detail}  ({r.runtime:.2f}s)")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polaris",
        description="polarity / hyperpolarity / variational-completeness checks")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list the built-in catalog entries")
    an = sub.add_parser("analyze", help="run checks on an entry or model file")
    group = an.add_mutually_exclusive_group(required=True)
    group.add_argument("--entry", help="catalog entry name, or 'all'")
    group.add_argument("--model", help="path to a model JSON document")
    an.add_argument("--checks", help="comma-separated check list")
    an.add_argument("--seed", type=int, default=None)
    an.add_argument("--tol", type=float, default=None)
    an.add_argument("--step", type=float, default=None)
    fmt = an.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="emit JSON (default)")
    fmt.add_argument("--text", action="store_true", help="emit a text summary")
    an.add_argument("--out", help="write the report to a file")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "list":
        for entry in catalog_list():
            print(f"{entry.name:20s} {entry.kind:24s} {entry.description}")
        return 0
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("POLARIS_SEED", "0"))
    checks = args.checks.split(",") if args.checks else None
    fmt = "text" if args.text else "json"
    try:
        if args.model:
            targets = [load_model(args.model)]
        elif args.entry == "all":
            targets = [e.name for e in catalog_list()]
        else:
            targets = [catalog_entry(args.entry).name]
    except (ModelError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    reports = []
    try:
        for target in targets:
            reports.append(analyze(target, checks, seed=seed, tol=args.tol,
                                   step=args.step))
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if fmt == "json" and len(reports) > 1:
        out = json.dumps({"schema": SCHEMA_VERSION,
                          "reports": [r.to_doc() for r in reports]},
                         sort_keys=True, separators=(",", ":"))
    else:
        out = "\n".join(emit_report(r, fmt) for r in reports)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out + "\n")
    else:
        print(out)
    return 0 if all(r.status == "pass" for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())

"""Degeneracy instants and their certification as bifurcation instants.

A degeneracy instant is a parameter t where some branch rho_(i,j)(t) meets
the rescaled mean curvature Hhat.  Every branch is strictly increasing in
t, so roots are found by bisection, each branch contributes at most one
root, and the Morse index jump across an isolated instant equals the
multiplicity that crossed -- which is the certification criterion: both
endpoints nondegenerate and unequal indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    BracketError,
    CutoffExhaustedError,
    DegenerateInstantError,
    EpsilonExhaustedError,
    HhatIsSteklovEigenvalueError,
    NoDegeneracyError,
    NumericalError,
    PreconditionError,
)
from .product import ProductModel, morse_index, nullity
from .serialize import read_csv, write_csv
from .spectral import robin_steklov_spectrum

ROOT_RTOL = 1e-8
MERGE_RTOL = 1e-6
STEKLOV_MEMBERSHIP_RTOL = 1e-8
EPSILON_CAP = 0.05


@dataclass(frozen=True)
class DegeneracyRecord:
    """One instant t_star with the branches crossing there.

    crossings is a tuple of (i, j, multiplicity); n_minus / n_plus are the
    Morse indices at t_star -/+ epsilon once certification ran.
    """

    t_star: float
    crossings: tuple
    nullity: int
    n_minus: int | None = None
    n_plus: int | None = None
    epsilon: float | None = None
    certified: bool = False


def _branch_value(model, rho_i, j, t, dense_limit):
    s = robin_steklov_spectrum(
        model.boundary_forms, t * rho_i, j + 1, dense_limit=dense_limit
    )
    return float(s.eigenvalues[j])


def _bisect_branch(model, rho_i, j, t_lo, t_hi, rtol, dense_limit):
    """Root of rho_(i,j)(t) = Hhat on a bracket with a sign change; the branch
    is strictly increasing, so plain bisection converges."""
    hhat = model.Hhat
    for _ in range(300):
        mid = 0.5 * (t_lo + t_hi)
        val = _branch_value(model, rho_i, j, mid, dense_limit)
        if abs(val - hhat) <= rtol * hhat:
            return mid
        if val < hhat:
            t_lo = mid
        else:
            t_hi = mid
    raise NumericalError(
        f"bisection stalled on branch rho_i={rho_i:g}, j={j}: "
        f"final interval [{t_lo:.17g}, {t_hi:.17g}]"
    )


def find_degeneracy_instant(
    model: ProductModel,
    i: int,
    bracket: tuple[float, float] = (0.1, 10.0),
    *,
    rtol: float = ROOT_RTOL,
    dense_limit: int = 2000,
) -> float:
    """The unique t_i with rho_(i,0)(t_i) = Hhat, for factor index i >= 1.

    The bracket is auto-expanded (lowest branch runs from 0 to infinity in
    t); positive Hhat is required -- otherwise no instants exist.
    """
    if model.Hhat <= 0:
        raise NoDegeneracyError(
            f"no degeneracy instants exist: Hhat = {model.Hhat:g} <= 0"
        )
    if i < 1:
        raise PreconditionError("factor index must be >= 1 (constants never cross)")
    rho_i = model.factor.value(i)
    hhat = model.Hhat

    t_lo, t_hi = bracket
    if not (0 < t_lo < t_hi):
        raise PreconditionError(f"invalid bracket {bracket}")
    expansions = 0
    while _branch_value(model, rho_i, 0, t_lo, dense_limit) >= hhat:
        t_lo /= 2.0
        expansions += 1
        if expansions > 60:
            raise BracketError("bracket expansion exhausted toward t = 0")
    while _branch_value(model, rho_i, 0, t_hi, dense_limit) <= hhat:
        t_hi *= 2.0
        expansions += 1
        if expansions > 120:
            raise BracketError("bracket expansion exhausted toward t = infinity")
    return _bisect_branch(model, rho_i, 0, t_lo, t_hi, rtol, dense_limit)


def _check_hhat_not_steklov(model, dense_limit):
    """Hhat must not be a (nonzero) Steklov eigenvalue of the boundary
    factor: those branches are constant in t, so the operator would be
    degenerate for every t and certification is refused."""
    hhat = model.Hhat
    tol = STEKLOV_MEMBERSHIP_RTOL * max(1.0, abs(hhat))
    forms = model.boundary_forms
    n_b = len(forms.boundary_dofs)
    k = min(8, n_b)
    while True:
        vals = robin_steklov_spectrum(forms, 0.0, k, dense_limit=dense_limit).eigenvalues
        if vals[-1] > hhat + tol or k == n_b:
            break
        k = min(2 * k, n_b)
    for j, v in enumerate(vals):
        if j >= 1 and abs(v - hhat) <= tol:
            raise HhatIsSteklovEigenvalueError(
                f"Hhat = {hhat:.12g} coincides with Steklov eigenvalue rho_{j} = "
                f"{v:.12g}; the Jacobi operator is degenerate for all t and no "
                "bifurcation conclusion is drawn"
            )


def enumerate_instants(
    model: ProductModel,
    t_min: float,
    t_max: float,
    *,
    rtol: float = ROOT_RTOL,
    merge_rtol: float = MERGE_RTOL,
    dense_limit: int = 2000,
) -> list[DegeneracyRecord]:
    """All degeneracy instants in [t_min, t_max], descending in t.

    Finiteness: only factor indices with lowest branch below Hhat at t_min
    can cross, and for each of those only finitely many sorted positions j;
    every branch is strictly increasing so it carries at most one root.
    Coincident roots merge into one record with summed multiplicity.
    """
    if not (0 < t_min < t_max):
        raise PreconditionError(f"need 0 < t_min < t_max, got [{t_min}, {t_max}]")
    hhat = model.Hhat
    if hhat <= 0:
        return []
    _check_hhat_not_steklov(model, dense_limit)

    roots = []
    i = 1
    while True:
        if i >= len(model.factor):
            raise CutoffExhaustedError(
                f"factor spectrum cutoff {model.factor.cutoff:g} exhausted before "
                f"the lowest branch at t_min={t_min:g} cleared Hhat={hhat:g}"
            )
        rho_i = model.factor.value(i)
        mu_i = model.factor.multiplicity(i)
        forms = model.boundary_forms
        n_b = len(forms.boundary_dofs)

        # all positions j with rho_(i,j)(t_min) <= Hhat can have a root
        k = min(8, n_b)
        while True:
            lo_vals = robin_steklov_spectrum(
                forms, t_min * rho_i, k, dense_limit=dense_limit
            ).eigenvalues
            if lo_vals[-1] > hhat or k == n_b:
                break
            k = min(2 * k, n_b)
        if lo_vals[-1] <= hhat:
            raise CutoffExhaustedError(
                "boundary spectrum exhausted while bounding the branch sweep"
            )
        if lo_vals[0] > hhat:
            break  # larger factor indices only push branches higher

        j_count = int(np.searchsorted(lo_vals, hhat, side="right"))
        hi_vals = robin_steklov_spectrum(
            forms, t_max * rho_i, j_count, dense_limit=dense_limit
        ).eigenvalues
        for j in range(j_count):
            if hi_vals[j] < hhat:
                continue  # branch stays below on the whole window
            t_root = _bisect_branch(model, rho_i, j, t_min, t_max, rtol, dense_limit)
            roots.append((t_root, i, j, mu_i))
        i += 1

    roots.sort(key=lambda r: -r[0])
    records = []
    for t_root, fi, j, mu in roots:
        if records and abs(records[-1]["t"][-1] - t_root) <= merge_rtol * max(
            records[-1]["t"][-1], t_root
        ):
            records[-1]["t"].append(t_root)
            records[-1]["crossings"].append((fi, j, mu))
        else:
            records.append({"t": [t_root], "crossings": [(fi, j, mu)]})

    out = []
    for rec in records:
        t_star = float(np.mean(rec["t"]))
        # merged roots moved by up to the merge tolerance; branch slopes near a
        # crossing are O(Hhat / t), so allow that much drift in the re-check
        verify_tol = (rtol if len(rec["t"]) == 1 else max(rtol, 10 * merge_rtol)) * hhat
        for fi, j, mu in rec["crossings"]:
            val = _branch_value(model, model.factor.value(fi), j, t_star, dense_limit)
            if abs(val - hhat) > verify_tol:
                raise NumericalError(
                    f"post-hoc verification failed at t*={t_star:.12g}: branch "
                    f"(i={fi}, j={j}) gives rho={val:.12g}, Hhat={hhat:.12g}"
                )
        out.append(
            DegeneracyRecord(
                t_star=t_star,
                crossings=tuple(rec["crossings"]),
                nullity=sum(mu for _, _, mu in rec["crossings"]),
            )
        )
    return out


def certify_bifurcation(
    model: ProductModel,
    record: DegeneracyRecord,
    epsilon: float | None = None,
    *,
    neighbors=(),
    degeneracy_rtol: float | None = None,
    dense_limit: int = 2000,
) -> DegeneracyRecord:
    """Check the index-jump criterion across record.t_star.

    Picks epsilon so the window isolates the instant (default: half the gap
    to the nearest neighbor, capped at 0.05 * t_star), computes the Morse
    index on both sides, and certifies when both endpoints are
    nondegenerate and the indices differ.
    """
    t_star = record.t_star
    if epsilon is None:
        epsilon = EPSILON_CAP * t_star
        for nb in neighbors:
            gap = abs(nb - t_star)
            if gap > MERGE_RTOL * t_star:
                epsilon = min(epsilon, 0.5 * gap)
    if not (0 < epsilon < t_star):
        raise PreconditionError(f"epsilon must lie in (0, t_star), got {epsilon}")

    for _ in range(12):
        inside = enumerate_instants(
            model, t_star - epsilon, t_star + epsilon, dense_limit=dense_limit
        )
        foreign = [
            r.t_star
            for r in inside
            if abs(r.t_star - t_star) > MERGE_RTOL * max(r.t_star, t_star)
        ]
        if foreign:
            epsilon *= 0.5
            continue
        try:
            n_minus = morse_index(
                model, t_star - epsilon, rtol=degeneracy_rtol, dense_limit=dense_limit
            )
            n_plus = morse_index(
                model, t_star + epsilon, rtol=degeneracy_rtol, dense_limit=dense_limit
            )
        except DegenerateInstantError:
            epsilon *= 0.5
            continue
        return replace(
            record,
            n_minus=n_minus,
            n_plus=n_plus,
            epsilon=epsilon,
            certified=n_minus != n_plus,
        )
    raise EpsilonExhaustedError(
        f"could not isolate t*={t_star:.12g}: neighboring instants closer than "
        "the working tolerance"
    )


def classify(
    model: ProductModel, t: float, *, tol: float | None = None, dense_limit: int = 2000
) -> str:
    """'degenerate' when the Jacobi operator has kernel at t, else 'rigid'.

    Nonpositive Hhat short-circuits to rigid (the whole family is)."""
    if t <= 0:
        raise PreconditionError(f"metric parameter t must be positive, got {t}")
    if model.Hhat <= 0:
        return "rigid"
    tol = model.degeneracy_tol() if tol is None else tol
    return "degenerate" if nullity(model, t, tol, dense_limit=dense_limit) > 0 else "rigid"


# ---------------------------------------------------------------------------
# export / import

def records_to_json(records, path) -> None:
    doc = [
        {
            "t_star": r.t_star,
            "crossings": [list(c) for c in r.crossings],
            "nullity": r.nullity,
            "n_minus": r.n_minus,
            "n_plus": r.n_plus,
            "epsilon": r.epsilon,
            "certified": r.certified,
        }
        for r in records
    ]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)


def records_from_json(path) -> list[DegeneracyRecord]:
    with open(path) as fh:
        doc = json.load(fh)
    return [
        DegeneracyRecord(
            t_star=float(r["t_star"]),
            crossings=tuple((int(i), int(j), int(m)) for i, j, m in r["crossings"]),
            nullity=int(r["nullity"]),
            n_minus=None if r.get("n_minus") is None else int(r["n_minus"]),
            n_plus=None if r.get("n_plus") is None else int(r["n_plus"]),
            epsilon=None if r.get("epsilon") is None else float(r["epsilon"]),
            certified=bool(r.get("certified", False)),
        )
        for r in doc
    ]


def records_to_csv(records, path) -> None:
    rows = []
    for r in records:
        for i, j, mu in r.crossings:
            rows.append(
                (r.t_star, i, j, mu, r.nullity, r.n_minus, r.n_plus, r.certified)
            )
    write_csv(
        path,
        ["t_star", "i", "j", "multiplicity", "nullity", "n_minus", "n_plus", "certified"],
        rows,
    )


def records_from_csv(path) -> list[DegeneracyRecord]:
    header, rows = read_csv(path)
    expected = ["t_star", "i", "j", "multiplicity", "nullity", "n_minus", "n_plus", "certified"]
    if header != expected:
        raise PreconditionError(f"unexpected instants CSV header {header}")
    records = []
    for row in rows:
        t_star = float(row[0])
        crossing = (int(row[1]), int(row[2]), int(row[3]))
        fields = {
            "nullity": int(row[4]),
            "n_minus": int(row[5]) if row[5] else None,
            "n_plus": int(row[6]) if row[6] else None,
            "certified": row[7] == "true",
        }
        if records and records[-1].t_star == t_star:
            records[-1] = replace(
                records[-1], crossings=records[-1].crossings + (crossing,)
            )
        else:
            records.append(
                DegeneracyRecord(t_star=t_star, crossings=(crossing,), **fields)
            )
    return records

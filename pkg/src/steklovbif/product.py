"""The product model (M1 x M2, g1 + t*g2) and its Jacobi spectrum.

The closed factor enters through its Laplace spectrum, the boundary factor
through assembled P1 forms; separation of variables turns the Jacobi
operator at parameter t into the family of boundary eigenvalues rho_j at
bulk coefficients c = t * rho_i.  Morse index and nullity count branches
below / at the rescaled mean curvature Hhat = (m2-1)/(m-1) * H2, and every
count carries a truncation certificate: the monotonicity bound proving
that no omitted branch could contribute.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse.linalg as spla

from .errors import (
    ConfigError,
    CutoffExhaustedError,
    DegenerateInstantError,
    PreconditionError,
)
from .factors import ClosedFactorSpectrum, flat_torus_spectrum, load_spectrum, spectrum_from_dict
from .fem import AssembledForms, assemble
from .mesh import Mesh, generate_disk, generate_interval, load_mesh
from .serialize import read_csv, write_csv
from .spectral import robin_steklov_spectrum

DEFAULT_DEGENERACY_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class ProductModel:
    """Product of a closed factor (spectrum) with a meshed boundary factor."""

    factor: ClosedFactorSpectrum
    boundary_mesh: Mesh
    boundary_forms: AssembledForms
    m1: int
    m2: int
    H2: float

    def __post_init__(self):
        if self.m1 != self.factor.dim:
            raise PreconditionError(
                f"m1={self.m1} does not match factor dimension {self.factor.dim}"
            )
        if self.m2 != self.boundary_mesh.dim:
            raise PreconditionError(
                f"m2={self.m2} does not match boundary mesh dimension {self.boundary_mesh.dim}"
            )
        if self.m < 3:
            raise PreconditionError(f"product dimension m = m1+m2 = {self.m} must be >= 3")

    @property
    def m(self) -> int:
        return self.m1 + self.m2

    @property
    def Hhat(self) -> float:
        return (self.m2 - 1) / (self.m - 1) * self.H2

    def degeneracy_tol(self, rtol: float | None = None) -> float:
        rtol = DEFAULT_DEGENERACY_RTOL if rtol is None else rtol
        return rtol * max(1.0, abs(self.Hhat))


@dataclass(frozen=True)
class JacobiEntry:
    i: int
    j: int
    rho: float
    jacobi_value: float
    multiplicity: int


@dataclass(frozen=True)
class TruncationCertificate:
    """Monotonicity bounds proving the enumeration missed nothing.

    ``stop_index`` is the first factor index whose lowest branch already
    exceeds the threshold (all later factor eigenvalues are larger, hence
    so are their branches); ``branch_bounds`` records, per enumerated
    factor index, the first sorted position whose value clears the
    threshold (all later positions are at least as large).
    """

    threshold: float
    stop_index: int
    stop_rho: float
    stop_bound: float
    branch_bounds: tuple

    def summary(self) -> str:
        return (
            f"no omitted branch below {self.threshold:.12g}: factor index "
            f"{self.stop_index} (eigenvalue {self.stop_rho:g}) opens at "
            f"{self.stop_bound:.12g}"
        )


@dataclass(frozen=True, eq=False)
class JacobiSlice:
    t: float
    entries: tuple
    certificate: TruncationCertificate


def mean_curvature_gt(model: ProductModel, t: float) -> float:
    """Constant boundary mean curvature of the product metric at parameter t."""
    if t <= 0:
        raise PreconditionError(f"metric parameter t must be positive, got {t}")
    return model.Hhat / math.sqrt(t)


def _eigenvalues_past(forms, c, threshold, dense_limit):
    """Ascending eigenvalues at bulk coefficient c, guaranteed to reach one
    strictly above threshold; None if the whole boundary spectrum stays below."""
    n_b = len(forms.boundary_dofs)
    k = min(8, n_b)
    while True:
        vals = robin_steklov_spectrum(forms, c, k, dense_limit=dense_limit).eigenvalues
        if vals[-1] > threshold:
            return vals
        if k == n_b:
            return None
        k = min(2 * k, n_b)


def jacobi_slice(
    model: ProductModel, t: float, margin: float, *, dense_limit: int = 2000
) -> JacobiSlice:
    """All Jacobi branches with rho <= Hhat + margin at parameter t.

    Each entry is weighted by the factor multiplicity; eigenvalue
    multiplicity inside a slice shows up as repeated sorted positions j.
    Raises when the factor spectrum ends before the enumeration provably
    closes.
    """
    if t <= 0:
        raise PreconditionError(f"metric parameter t must be positive, got {t}")
    if margin < 0:
        raise PreconditionError("margin must be non-negative")
    hhat = model.Hhat
    threshold = hhat + margin
    forms = model.boundary_forms
    sqrt_t = math.sqrt(t)

    entries = []
    branch_bounds = []

    # i = 0: Steklov branches; the zero eigenvalue at j = 0 is the excluded
    # constant (only i + j > 0 enters the Jacobi spectrum).
    vals = _eigenvalues_past(forms, 0.0, threshold, dense_limit)
    if vals is None:
        raise CutoffExhaustedError(
            "boundary Steklov spectrum exhausted below the threshold; refine the mesh"
        )
    j_stop = len(vals)
    for j, v in enumerate(vals):
        if v > threshold:
            j_stop = j
            break
        if j >= 1:
            entries.append(
                JacobiEntry(0, j, float(v), float((v - hhat) / sqrt_t), 1)
            )
    branch_bounds.append((0, int(j_stop), float(vals[min(j_stop, len(vals) - 1)])))

    i = 1
    while True:
        if i >= len(model.factor):
            raise CutoffExhaustedError(
                f"factor spectrum cutoff {model.factor.cutoff:g} exhausted at t={t:g} "
                f"before the lowest branch cleared {threshold:g}"
            )
        rho_i = model.factor.value(i)
        mu_i = model.factor.multiplicity(i)
        vals = _eigenvalues_past(forms, t * rho_i, threshold, dense_limit)
        if vals is None:
            raise CutoffExhaustedError(
                "boundary spectrum exhausted below the threshold; refine the mesh"
            )
        if vals[0] > threshold:
            certificate = TruncationCertificate(
                threshold=threshold,
                stop_index=i,
                stop_rho=rho_i,
                stop_bound=float(vals[0]),
                branch_bounds=tuple(branch_bounds),
            )
            break
        j_stop = len(vals)
        for j, v in enumerate(vals):
            if v > threshold:
                j_stop = j
                break
            entries.append(
                JacobiEntry(i, j, float(v), float((v - hhat) / sqrt_t), mu_i)
            )
        branch_bounds.append((i, int(j_stop), float(vals[min(j_stop, len(vals) - 1)])))
        i += 1

    entries.sort(key=lambda e: (e.rho, e.i, e.j))
    return JacobiSlice(t=float(t), entries=tuple(entries), certificate=certificate)


def morse_index(
    model: ProductModel, t: float, *, rtol: float | None = None, dense_limit: int = 2000
) -> int:
    """Multiplicity-weighted count of Jacobi branches strictly below Hhat.

    Ill-defined within the degeneracy tolerance of an instant; that raises
    rather than returning a coin flip.
    """
    tol = model.degeneracy_tol(rtol)
    sl = jacobi_slice(model, t, margin=tol, dense_limit=dense_limit)
    hhat = model.Hhat
    for e in sl.entries:
        if abs(e.rho - hhat) <= tol:
            raise DegenerateInstantError(
                f"degenerate at t={t:.12g}: branch (i={e.i}, j={e.j}) has "
                f"rho={e.rho:.12g} within {tol:g} of Hhat={hhat:.12g}"
            )
    return sum(e.multiplicity for e in sl.entries if e.rho < hhat)


def nullity(
    model: ProductModel, t: float, tol: float, *, dense_limit: int = 2000
) -> int:
    """Multiplicity-weighted count of branches within tol of Hhat."""
    if tol <= 0:
        raise PreconditionError("nullity tolerance must be positive")
    sl = jacobi_slice(model, t, margin=tol, dense_limit=dense_limit)
    return sum(e.multiplicity for e in sl.entries if abs(e.rho - model.Hhat) <= tol)


def boundary_weights(forms: AssembledForms) -> np.ndarray:
    """Lumped boundary measure: row sums of B at the boundary dofs."""
    return np.asarray(forms.B.to_csr().sum(axis=1)).ravel()[forms.boundary_dofs]


def normalize_boundary_power(forms: AssembledForms, phi: np.ndarray, m: int) -> np.ndarray:
    """Rescale phi so the lumped integral of phi^(2(m-1)/(m-2)) over the
    boundary equals 1."""
    p = 2.0 * (m - 1) / (m - 2)
    w = boundary_weights(forms)
    phi_b = phi[forms.boundary_dofs]
    if np.any(phi_b <= 0):
        raise PreconditionError("conformal factor must be positive on the boundary")
    integral = float(w @ phi_b**p)
    return phi / integral ** (1.0 / p)


def conformal_mean_curvature(
    forms: AssembledForms,
    phi: np.ndarray,
    H_g: float,
    m: int,
    *,
    harmonic_tol: float = 1e-8,
    norm_tol: float = 1e-8,
) -> float:
    """Mean curvature of the normalized conformal metric phi^(4/(m-2)) g.

    phi must be discretely harmonic and satisfy the boundary-volume
    constraint; the value is 2/(m-2) * Dirichlet energy + H_g * boundary
    L2 mass.
    """
    if m < 3:
        raise PreconditionError("requires product dimension m >= 3")
    phi = np.asarray(phi, dtype=float)
    K = forms.K.to_csr()
    M = forms.M.to_csr()
    B = forms.B.to_csr()

    interior = forms.interior_dofs
    if len(interior):
        # residual of harmonicity, measured in the interior mass-dual norm
        r = (K @ phi)[interior]
        M_ii = M[np.ix_(interior, interior)].tocsc()
        dual = math.sqrt(max(float(r @ spla.spsolve(M_ii, r)), 0.0))
        scale = max(1.0, math.sqrt(float(phi @ (M @ phi))))
        if dual > harmonic_tol * scale:
            raise PreconditionError(
                f"phi is not discretely harmonic: interior residual {dual:.3e} "
                f"exceeds {harmonic_tol:g} * {scale:.3g}"
            )

    p = 2.0 * (m - 1) / (m - 2)
    w = boundary_weights(forms)
    phi_b = phi[forms.boundary_dofs]
    if np.any(phi_b <= 0):
        raise PreconditionError("conformal factor must be positive on the boundary")
    integral = float(w @ phi_b**p)
    if abs(integral - 1.0) > norm_tol:
        raise PreconditionError(
            f"boundary normalization violated: integral of phi^{p:g} is "
            f"{integral:.12g}, not 1"
        )
    return 2.0 / (m - 2) * float(phi @ (K @ phi)) + H_g * float(phi @ (B @ phi))


def yamabe_residual(
    forms: AssembledForms, phi: np.ndarray, H_candidate: float, H_g: float, m: int
) -> float:
    """Euclidean norm of the weak residual of the zero-scalar-curvature
    boundary system at (phi, H_candidate).  Diagnostic only."""
    if m < 3:
        raise PreconditionError("requires product dimension m >= 3")
    phi = np.asarray(phi, dtype=float)
    p = m / (m - 2)
    powered = np.sign(phi) * np.abs(phi) ** p  # odd extension of the power
    half = 0.5 * (m - 2)
    r = forms.K.to_csr() @ phi + half * H_g * (forms.B.to_csr() @ phi)
    r -= half * H_candidate * (forms.B.to_csr() @ powered)
    return float(np.linalg.norm(r))


# ---------------------------------------------------------------------------
# model description files

def model_from_dict(doc: dict, base_dir=None) -> ProductModel:
    """Build a model from its JSON description (factor + boundary + dimensions)."""
    base = Path(base_dir) if base_dir is not None else Path(".")
    try:
        m1, m2, H2 = int(doc["m1"]), int(doc["m2"]), float(doc["H2"])
        factor_doc = doc["factor"]
        boundary_doc = doc["boundary"]
    except KeyError as exc:
        raise ConfigError(f"model description missing key {exc}") from exc

    if "path" in factor_doc:
        factor = load_spectrum(base / factor_doc["path"])
    elif "flat_torus" in factor_doc:
        ft = factor_doc["flat_torus"]
        factor = flat_torus_spectrum(ft["basis"], float(ft["cutoff"]))
    else:
        factor = spectrum_from_dict(factor_doc)

    if "path" in boundary_doc:
        mesh = load_mesh(base / boundary_doc["path"])
    elif boundary_doc.get("builtin") == "disk":
        mesh = generate_disk(int(boundary_doc.get("level", 4)))
    elif boundary_doc.get("builtin") == "interval":
        mesh = generate_interval(
            int(boundary_doc.get("n", 100)), float(boundary_doc.get("L", 1.0))
        )
    else:
        raise ConfigError(f"unrecognized boundary description {boundary_doc}")

    return ProductModel(
        factor=factor,
        boundary_mesh=mesh,
        boundary_forms=assemble(mesh),
        m1=m1,
        m2=m2,
        H2=H2,
    )


def load_model(path) -> ProductModel:
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    return model_from_dict(doc, base_dir=path.parent)


def slice_to_csv(sl: JacobiSlice, path) -> None:
    write_csv(
        path,
        ["i", "j", "rho", "jacobi_value", "multiplicity"],
        [(e.i, e.j, e.rho, e.jacobi_value, e.multiplicity) for e in sl.entries],
    )


def load_slice_csv(path) -> list[JacobiEntry]:
    header, rows = read_csv(path)
    if header != ["i", "j", "rho", "jacobi_value", "multiplicity"]:
        raise PreconditionError(f"unexpected Jacobi slice CSV header {header}")
    return [
        JacobiEntry(int(r[0]), int(r[1]), float(r[2]), float(r[3]), int(r[4]))
        for r in rows
    ]

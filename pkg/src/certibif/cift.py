"""Constructive implicit function theorem: hypothesis verification,
delta-inequality solving, and accuracy/uniqueness certificates.

A *zero problem* is any object with

    dim            -- ambient dimension m
    value(z)       -- float residual, shape (m,)
    jac(z)         -- float Jacobian, shape (m, m)
    value_iv(ziv)  -- interval residual (IVector in/out)
    jac_iv(ziv)    -- interval Jacobian (IMatrix)
    hessian_sup(box) -- array T of shape (m, m, m) with
                        T[i, k, j] >= sup_box |d2 H_i / dz_k dz_j|
    name           -- short identifier for certificates

Hypotheses are verified for the left-preconditioned map B*H where B is the
floating-point inverse of the Jacobian at the anchor; the Neumann-series
inverse bound then gives K close to 1 and simultaneously proves that B is
invertible, so B*H and H have identical zero sets.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import NotInvertibleEvidence, ValidationFailed
from .interval import (IMatrix, Interval, IVector, float_matmat, float_matvec,
                       norm_inf, up_dot, up_mul, up_sum)


@dataclass(frozen=True)
class CiftBounds:
    """Rigorous upper bounds for the theorem hypotheses (H1)-(H4).

    For parameter-free systems L2 = L3 = L4 = 0.  `ell_x`/`ell_alpha` are
    the box radii over which the Lipschitz constants were certified.
    """

    rho: float
    K: float
    L1: float
    L2: float = 0.0
    L3: float = 0.0
    L4: float = 0.0
    ell_x: float = 0.0
    ell_alpha: float = 0.0

    def __post_init__(self):
        for name in ("rho", "K", "L1", "L2", "L3", "L4", "ell_x", "ell_alpha"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class DeltaPair:
    """A feasible radius pair plus the accuracy radius 2*K*rho."""

    delta_alpha: float
    delta_x: float
    delta_min: float


@dataclass(frozen=True)
class Certificate:
    """Existence/uniqueness certificate for an isolated zero.

    A unique true zero lies within `delta_accuracy` of `anchor` (max
    norm), and it is the only zero within `delta_uniqueness`.  The
    parameter constants L2..L4 are zero for parameter-free systems.
    """

    system: str
    anchor: tuple[float, ...]
    ell: float
    rho: float
    K: float
    L1: float
    delta_accuracy: float
    delta_uniqueness: float
    preconditioner_sha256: str
    L2: float = 0.0
    L3: float = 0.0
    L4: float = 0.0

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["anchor"] = [repr(v) for v in self.anchor]
        for key in ("ell", "rho", "K", "L1", "L2", "L3", "L4",
                    "delta_accuracy", "delta_uniqueness"):
            d[key] = repr(d[key])
        return d

    @staticmethod
    def from_json_dict(d: dict) -> "Certificate":
        return Certificate(
            system=d["system"],
            anchor=tuple(float(v) for v in d["anchor"]),
            ell=float(d["ell"]),
            rho=float(d["rho"]),
            K=float(d["K"]),
            L1=float(d["L1"]),
            L2=float(d.get("L2", 0.0)),
            L3=float(d.get("L3", 0.0)),
            L4=float(d.get("L4", 0.0)),
            delta_accuracy=float(d["delta_accuracy"]),
            delta_uniqueness=float(d["delta_uniqueness"]),
            preconditioner_sha256=d["preconditioner_sha256"],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def preconditioner_hash(B: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(B, dtype=float).tobytes()).hexdigest()


# ---------------------------------------------------------------------------
# hypothesis bounds
# ---------------------------------------------------------------------------


def residual_bound(problem, z0: np.ndarray, precond: np.ndarray | None = None) -> float:
    """Upper bound of |H(z0)|_inf (optionally of |B H(z0)|_inf)."""
    r = problem.value_iv(IVector.point(np.asarray(z0, dtype=float)))
    if precond is not None:
        r = float_matvec(precond, r)
    return norm_inf(r).hi


def inverse_bound(A: IMatrix, B: np.ndarray) -> tuple[float, float]:
    """Neumann-series bounds: K >= |A^{-1}| and err >= |B - A^{-1}|.

    Requires |I - B A| <= rho1 < 1, verified in interval arithmetic;
    otherwise raises NotInvertibleEvidence.
    """
    n = A.shape[0]
    BA = float_matmat(np.asarray(B, dtype=float), A)
    rho1 = norm_inf(IMatrix.identity(n) - BA).hi
    if not rho1 < 1.0:
        raise NotInvertibleEvidence(f"|I - BA| bound {rho1} >= 1")
    rho2 = float(np.max(up_sum(np.abs(np.asarray(B, dtype=float)), axis=1)))
    gap = Interval(1.0) - Interval(rho1)
    K = (Interval(rho2) / gap).hi
    err = ((Interval(rho1) * Interval(rho2)) / gap).hi
    return K, err


def lipschitz_from_tensor(T: np.ndarray, absB: np.ndarray | None = None) -> float:
    """Mean-value Lipschitz constant for DH over a box.

    T[i, k, j] bounds sup |d2 H_i / dz_k dz_j|; the result is
    max_i sum_j (m * max_k T'[i, k, j]) where T' is |B|-contracted when a
    preconditioner is supplied.
    """
    m = T.shape[0]
    M = up_dot(absB, T) if absB is not None else T
    inner = M.max(axis=1)             # over k
    rows = up_sum(inner, axis=1)      # over j
    return float(np.max(up_mul(float(m), rows)))


def lipschitz_L1(problem, z0: np.ndarray, ell: float) -> float:
    """Lipschitz bound for the raw (unpreconditioned) DH over z0 +- ell."""
    box = IVector.around(np.asarray(z0, dtype=float), ell)
    return lipschitz_from_tensor(problem.hessian_sup(box))


# ---------------------------------------------------------------------------
# delta inequalities
# ---------------------------------------------------------------------------


def _pair_feasible(b: CiftBounds, da: float, dx: float,
                   dir_norm: float, coupled_cap: float) -> bool:
    """Rigorous check of the two theorem inequalities plus box constraints."""
    if not (0.0 <= da <= b.ell_alpha or (da == 0.0 and b.ell_alpha == 0.0)):
        return False
    if not 0.0 < dx <= b.ell_x:
        return False
    K2 = Interval(2.0) * Interval(b.K)
    lhs_a = K2 * Interval(b.L1) * Interval(dx) + K2 * Interval(b.L2) * Interval(da)
    if not lhs_a.hi <= 1.0:
        return False
    lhs_b = (K2 * Interval(b.rho) + K2 * Interval(b.L3) * Interval(da)
             + K2 * Interval(b.L4) * Interval(da) * Interval(da))
    if not lhs_b.hi <= dx:
        return False
    if dir_norm > 0.0 or math.isfinite(coupled_cap):
        lhs_c = Interval(dir_norm) * Interval(da) + Interval(dx)
        if not lhs_c.hi <= coupled_cap:
            return False
    return True


def solve_deltas(b: CiftBounds, dir_norm: float = 0.0,
                 coupled_cap: float = math.inf,
                 du_reserve: float = 0.1) -> DeltaPair:
    """Feasible (delta_alpha, delta_x): delta_alpha is maximized, then
    delta_x is pushed to its largest admissible value (best uniqueness).

    `dir_norm`/`coupled_cap` impose the continuation coupling
    dir_norm*delta_alpha + delta_x <= coupled_cap when given; a
    `du_reserve` fraction of that budget is withheld from delta_alpha so
    the uniqueness tube never degenerates (linking needs room in it).
    """
    gate = Interval(4.0) * Interval(b.K) * Interval(b.K) * Interval(b.rho) * Interval(b.L1)
    if not gate.hi < 1.0:
        raise ValidationFailed(f"4 K^2 rho L1 = {gate.hi} >= 1")
    dmin = (Interval(2.0) * Interval(b.K) * Interval(b.rho)).hi
    if not dmin < b.ell_x:
        raise ValidationFailed(f"2 K rho = {dmin} >= ell_x = {b.ell_x}")
    search_cap = coupled_cap * (1.0 - du_reserve)

    def dx_floor(da: float) -> float:
        K2 = Interval(2.0) * Interval(b.K)
        v = (K2 * Interval(b.rho) + K2 * Interval(b.L3) * Interval(da)
             + K2 * Interval(b.L4) * Interval(da) * Interval(da))
        return v.hi

    def dx_ceiling(da: float) -> float:
        cap = b.ell_x
        if b.L1 > 0.0:
            num = Interval(1.0) - Interval(2.0) * Interval(b.K) * Interval(b.L2) * Interval(da)
            if num.lo <= 0.0:
                return 0.0
            cap = min(cap, (num / (Interval(2.0) * Interval(b.K) * Interval(b.L1))).lo)
        if math.isfinite(coupled_cap):
            cap = min(cap, (Interval(coupled_cap) - Interval(dir_norm) * Interval(da)).lo)
        return cap

    def feasible(da: float) -> bool:
        if math.isfinite(search_cap) and dir_norm * da > search_cap:
            return False
        fl = dx_floor(da)
        return fl <= dx_ceiling(da) and _pair_feasible(b, da, max(fl, 1e-300), dir_norm, coupled_cap)

    if b.ell_alpha == 0.0 or not feasible(0.0):
        if not feasible(0.0):
            raise ValidationFailed("delta inequalities infeasible even at delta_alpha = 0")
        da = 0.0
    else:
        lo, hi = 0.0, b.ell_alpha
        if feasible(hi):
            da = hi
        else:
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if feasible(mid):
                    lo = mid
                else:
                    hi = mid
            da = lo
    dx = dx_ceiling(da)
    for _ in range(64):
        if _pair_feasible(b, da, dx, dir_norm, coupled_cap):
            break
        dx = math.nextafter(dx * (1.0 - 2.0 ** -50), 0.0)
    else:
        raise ValidationFailed("could not certify a feasible (delta_alpha, delta_x) pair")
    return DeltaPair(delta_alpha=da, delta_x=dx, delta_min=dmin)


# ---------------------------------------------------------------------------
# full validation
# ---------------------------------------------------------------------------


def validate_zero(problem, z0: np.ndarray, ell: float = 1e-6,
                  precondition: bool = True) -> Certificate:
    """Certify a unique zero of `problem` near the anchor z0.

    On success: a true zero exists within delta_accuracy = 2*K*rho of z0
    in max norm, and it is the only zero within delta_uniqueness.
    Raises ValidationFailed with the violated hypothesis otherwise.
    """
    z0 = np.asarray(z0, dtype=float)
    m = problem.dim
    try:
        B = np.linalg.inv(problem.jac(z0))
    except np.linalg.LinAlgError as exc:
        raise ValidationFailed(f"anchor Jacobian not invertible: {exc}") from exc

    z0iv = IVector.point(z0)
    T = problem.hessian_sup(IVector.around(z0, ell))
    try:
        if precondition:
            # certify the zero of B*H (identical zero set once B*DH is
            # verified close to I, which also proves B invertible)
            rho = norm_inf(float_matvec(B, problem.value_iv(z0iv))).hi
            A = float_matmat(B, problem.jac_iv(z0iv))
            K, _ = inverse_bound(A, np.eye(m))
            L1 = lipschitz_from_tensor(T, np.abs(B))
        else:
            rho = norm_inf(problem.value_iv(z0iv)).hi
            K, _ = inverse_bound(problem.jac_iv(z0iv), B)
            L1 = lipschitz_from_tensor(T)
            B = np.eye(m)
    except NotInvertibleEvidence as exc:
        raise ValidationFailed(f"(H2) failed: {exc}") from exc

    gate = Interval(4.0) * Interval(K) * Interval(K) * Interval(rho) * Interval(L1)
    if not gate.hi < 1.0:
        raise ValidationFailed(f"4 K^2 rho L1 = {gate.hi} >= 1")
    d1 = (Interval(2.0) * Interval(K) * Interval(rho)).hi
    if not d1 < ell:
        raise ValidationFailed(f"2 K rho = {d1} >= ell = {ell}")
    if L1 > 0.0:
        d2 = min(ell, (Interval(1.0) / (Interval(2.0) * Interval(K) * Interval(L1))).lo)
    else:
        d2 = ell
    return Certificate(
        system=getattr(problem, "name", type(problem).__name__),
        anchor=tuple(float(v) for v in z0),
        ell=float(ell),
        rho=rho,
        K=K,
        L1=L1,
        delta_accuracy=d1,
        delta_uniqueness=d2,
        preconditioner_sha256=preconditioner_hash(B),
    )

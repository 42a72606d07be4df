"""Network realization functions: construction, sparsity correspondence, and
instability certificates for the alternative controller representations.

An NRF pair (Phi, Gamma) implements u = Phi u + Gamma z with a hollow Phi.
The diagonal of Phi is zero *structurally* (entries are literal zero
functions), never merely small: self-loops are a causality violation, not a
numerical artifact.
"""

from __future__ import annotations

import enum
import json

import numpy as np

from .errors import (
    CorrespondenceViolation,
    DimensionMismatch,
    DomainMismatch,
    InvariantViolation,
    NotSquare,
    SingularDiagonal,
)
from .factor import DoublyCoprime, YoulaShift, _pole_cloud
from .ratmat import (
    RationalFunction,
    RationalMatrix,
    SparsityPattern,
    StabilityDomain,
    diag_part,
    invert,
    probe_points,
    ratmat_from_obj,
    ratmat_to_obj,
    unstable_poles,
)

ROUND_TRIP_TOL = 1e-8


class NrfPair:
    """Hollow Phi (m x m) and Gamma (m x p) describing u = Phi u + Gamma z."""

    __slots__ = ("Phi", "Gamma")

    def __init__(self, Phi: RationalMatrix, Gamma: RationalMatrix):
        if Phi.rows != Phi.cols:
            raise NotSquare("Phi must be square")
        if Gamma.rows != Phi.rows:
            raise DimensionMismatch("Gamma must have one row per control input")
        if Gamma.domain is not Phi.domain:
            raise DomainMismatch("Phi and Gamma disagree on the stability domain")
        for i in range(Phi.rows):
            if not Phi.entry(i, i).is_zero:
                raise InvariantViolation(
                    "phi-zero-diagonal", f"Phi[{i},{i}] is not the zero function"
                )
        self.Phi = Phi
        self.Gamma = Gamma

    @property
    def domain(self) -> StabilityDomain:
        return self.Phi.domain

    @property
    def shape(self) -> tuple[int, int]:
        """(m, p): control inputs by regulated measurements."""
        return self.Gamma.rows, self.Gamma.cols

    def controller(self) -> RationalMatrix:
        """K = (I - Phi)^-1 Gamma."""
        eye = RationalMatrix.identity(self.Phi.rows, self.domain)
        return invert(eye - self.Phi) @ self.Gamma

    def reproduces(self, K: RationalMatrix, count: int = 20, tol: float = ROUND_TRIP_TOL) -> bool:
        """Probe-point agreement between (I-Phi)^-1 Gamma and a given controller."""
        diff = self.controller() - K
        for pt in probe_points(self.domain, count, avoid=_pole_cloud(diff)):
            if float(np.max(np.abs(diff.eval(pt)))) >= tol:
                return False
        return True


def _diag_reciprocals(mat: RationalMatrix, context: str) -> list[RationalFunction]:
    """Reciprocals of the diagonal, rejecting entries that cannot be inverted
    inside the proper rational functions."""
    recips = []
    for i in range(mat.rows):
        d = mat.entry(i, i)
        if d.is_zero:
            raise SingularDiagonal(f"{context}: diagonal entry {i} is identically zero")
        if d.is_proper and d.gain_at_infinity() == 0.0:
            raise SingularDiagonal(
                f"{context}: diagonal entry {i} is strictly proper, reciprocal improper"
            )
        recips.append(d.reciprocal())
    return recips


def nrf_from_left_factorization(R: RationalMatrix, P: RationalMatrix) -> NrfPair:
    """NRF pair from a left factorization R u = P z.

    Phi = I - (R^diag)^-1 R with the diagonal zeroed structurally, and
    Gamma = (R^diag)^-1 P.  Row scaling preserves the sparsity patterns of R
    (off-diagonal) and P.
    """
    if R.rows != R.cols:
        raise NotSquare("R must be square")
    if P.rows != R.rows:
        raise DimensionMismatch("P must have one row per row of R")
    if P.domain is not R.domain:
        raise DomainMismatch("R and P disagree on the stability domain")
    recips = _diag_reciprocals(R, "left factorization")
    zero = RationalFunction.const(0.0)
    phi_rows = []
    gamma_rows = []
    for i in range(R.rows):
        phi_rows.append(
            [zero if j == i else -(recips[i] * R.entry(i, j)) for j in range(R.cols)]
        )
        gamma_rows.append([recips[i] * P.entry(i, j) for j in range(P.cols)])
    return NrfPair(
        RationalMatrix(phi_rows, R.domain), RationalMatrix(gamma_rows, R.domain)
    )


def nrf_from_dcf(dcf: DoublyCoprime, shift: YoulaShift) -> NrfPair:
    """Stabilizing NRF pair from a Q-shifted factorization.

    Left-multiplies YQ u = XQ z by (YQ^diag)^-1.  Before returning, the loop
    sensitivity identity (I - Phi + Gamma G) M Omega = I is audited at probe
    points; together with factor and parameter stability (enforced upstream)
    it certifies the pair as a stabilizing implementation rather than just an
    algebraic rewrite.
    """
    pair = nrf_from_left_factorization(shift.YQ, shift.XQ)
    omega = diag_part(shift.YQ)
    avoid = _pole_cloud(pair.Phi, pair.Gamma, dcf.M, dcf.Mt, dcf.Nt, omega)
    eye = np.eye(pair.shape[0])
    for pt in probe_points(dcf.domain, 20, avoid=avoid):
        Gv = np.linalg.solve(dcf.Mt.eval(pt), dcf.Nt.eval(pt))
        Sv = eye - pair.Phi.eval(pt) + pair.Gamma.eval(pt) @ Gv
        res = float(np.max(np.abs(Sv @ dcf.M.eval(pt) @ omega.eval(pt) - eye)))
        if res >= ROUND_TRIP_TOL:
            raise InvariantViolation("loop-sensitivity-inverse", f"residual {res:.3e}")
    return pair


# ---------------------------------------------------------------------------
# sparsity correspondence


def _mask_without_diagonal(pattern: SparsityPattern) -> SparsityPattern:
    mask = [
        [bool(pattern.mask[i][j]) and i != j for j in range(pattern.cols)]
        for i in range(pattern.rows)
    ]
    return SparsityPattern(mask)


class SparsityTriple:
    """Sensing pattern X, hollow communication pattern Y, and Y with diagonal."""

    __slots__ = ("X", "Y", "Yplus")

    def __init__(self, X: SparsityPattern, Y: SparsityPattern):
        if Y.rows != Y.cols:
            raise NotSquare("communication pattern must be square")
        if X.rows != Y.rows:
            raise DimensionMismatch("sensing pattern must have one row per input")
        self.X = X
        self.Y = _mask_without_diagonal(Y)
        self.Yplus = self.Y.with_diagonal()


def sparsity_correspondence(
    pair: NrfPair, shift: YoulaShift, triple: SparsityTriple
) -> bool:
    """Phi in Y and Gamma in X, cross-checked against YQ in Y+ and XQ in X.

    The two sides are equivalent in exact arithmetic; a disagreement means a
    numerical cancellation produced a spurious (or lost) entry.
    """
    nrf_side = pair.Phi.conforms(triple.Y) and pair.Gamma.conforms(triple.X)
    shift_side = shift.YQ.conforms(triple.Yplus) and shift.XQ.conforms(triple.X)
    if nrf_side != shift_side:
        raise CorrespondenceViolation(
            f"NRF side says {nrf_side} but shifted factors say {shift_side}"
        )
    return nrf_side


# ---------------------------------------------------------------------------
# instability certificates for the alternative representations


class CertificateMode(enum.Enum):
    MR2 = "mr2"
    MR3 = "mr3"


class InstabilityCertificate:
    """Witness map for an alternative representation, with its unstable poles.

    An empty pole multiset means the representation's obstruction vanishes for
    this plant and shift; a nonempty one names the poles that no stable Q can
    cancel.
    """

    __slots__ = ("mode", "Omega", "witness_map", "unstable_poles_found")

    def __init__(self, mode, Omega, witness_map, unstable_poles_found):
        self.mode = mode
        self.Omega = Omega
        self.witness_map = witness_map
        self.unstable_poles_found = tuple(unstable_poles_found)

    @property
    def empty(self) -> bool:
        return not self.unstable_poles_found

    def __repr__(self) -> str:
        return (
            f"InstabilityCertificate(mode={self.mode.value}, "
            f"poles={list(self.unstable_poles_found)})"
        )


def _require_nonzero_diagonal(Omega: RationalMatrix, context: str):
    for i in range(Omega.rows):
        if Omega.entry(i, i).is_zero:
            raise SingularDiagonal(f"{context}: diagonal entry {i} is identically zero")


def mr2_certificate(dcf: DoublyCoprime, shift: YoulaShift) -> InstabilityCertificate:
    """Obstruction for the representation scaled by (M YQ)^diag.

    The delta_u-to-z map of that implementation is N YQ - G Omega; since
    N YQ is stable, any unstable pole must come from G Omega and survives for
    every stable Q.
    """
    Omega = diag_part(dcf.M @ shift.YQ)
    _require_nonzero_diagonal(Omega, "mr2 certificate")
    witness = dcf.N @ shift.YQ - dcf.plant() @ Omega
    return InstabilityCertificate(
        CertificateMode.MR2, Omega, witness, unstable_poles(witness)
    )


def mr3_certificate(dcf: DoublyCoprime, shift: YoulaShift) -> InstabilityCertificate:
    """Obstruction for the beta-iteration representation.

    The w-to-beta map is G - N YQ, so the iteration inherits every unstable
    pole of the plant itself.
    """
    Omega = diag_part(shift.YtQ @ dcf.Mt)
    _require_nonzero_diagonal(Omega, "mr3 certificate")
    witness = dcf.plant() - dcf.N @ shift.YQ
    return InstabilityCertificate(
        CertificateMode.MR3, Omega, witness, unstable_poles(witness)
    )


def sls_like_rep(dcf: DoublyCoprime, shift: YoulaShift):
    """Coefficient TFMs of the beta-iteration form of K_Q.

    Returns (beta_phi, beta_gamma, u_beta, u_z) for

        beta = beta_phi (beta + delta_beta) + beta_gamma z,   u = u_beta beta + u_z z.

    Eliminating beta recovers K_Q = XtQ YtQ^-1.
    """
    T = shift.YtQ @ dcf.Mt
    recips = _diag_reciprocals(T, "beta iteration")
    Oinv = RationalMatrix.diag(recips, T.domain)
    p = T.rows
    Ip = RationalMatrix.identity(p, T.domain)
    XtM = shift.XtQ @ dcf.Mt
    beta_phi = Ip - Oinv @ T
    beta_gamma = Oinv @ (T - Ip)
    return beta_phi, beta_gamma, -XtM, XtM


# ---------------------------------------------------------------------------
# JSON interchange


def nrf_to_obj(pair: NrfPair) -> dict:
    return {"phi": ratmat_to_obj(pair.Phi), "gamma": ratmat_to_obj(pair.Gamma)}


def nrf_from_obj(obj: dict) -> NrfPair:
    if "phi" not in obj or "gamma" not in obj:
        raise InvariantViolation("nrf-fields-present", "need both 'phi' and 'gamma'")
    return NrfPair(ratmat_from_obj(obj["phi"]), ratmat_from_obj(obj["gamma"]))


def save_nrf(pair: NrfPair, path: str):
    with open(path, "w") as fh:
        json.dump(nrf_to_obj(pair), fh, indent=1)


def load_nrf(path: str) -> NrfPair:
    with open(path) as fh:
        return nrf_from_obj(json.load(fh))

"""Distributed implementation of an NRF pair and closed-loop verification.

The controller u = Phi u + Gamma z is realized one row at a time: each row of
the compound [Phi Gamma] gets an observable companion realization over its own
denominator LCM, reduced to its controllable part, so node i only ever stores
the dynamics its own control law needs.  Assembly stacks the rows into a
block-diagonal state matrix, and the loop with the plant closes through a
static coupling matrix whose invertibility is certified by a Schur complement
before the closed-loop state matrix is formed.

Two independent stability verdicts are offered: eigenvalues of the assembled
closed-loop state matrix, and a transfer-matrix check that forms the full map
from loop injections to loop signals twice (symbolic inversion against a
closed-form or sampled product) and inspects every entry for unstable poles.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainMismatch,
    IllPosedLoop,
    InconsistentDimensions,
    InvariantViolation,
    SingularCoupling,
    SingularMatrix,
)
from .factor import DoublyCoprime, YoulaShift, _pole_cloud
from .nrfsyn import NrfPair
from .ratmat import (
    RationalMatrix,
    StabilityDomain,
    diag_part,
    invert,
    probe_points,
)
from . import sstate
from .sstate import StateSpace
from .tolerances import RANK_REL_TOL, probe_tolerance


def _compound_rows(pair: NrfPair, group: tuple[int, ...]) -> RationalMatrix:
    """Stack of rows [Phi Gamma] for the (1-based) row numbers in group."""
    stacked = None
    for i in group:
        row = pair.Phi.row(i - 1).hstack(pair.Gamma.row(i - 1))
        stacked = row if stacked is None else stacked.vstack(row)
    return stacked


class RowRealization:
    """State-space realization of one row (or block of rows) of [Phi Gamma].

    ``index`` is the 1-based row number for a singleton, or a tuple of row
    numbers for a block-row grouping.  ``sys`` has one output per grouped row
    and m + p inputs (commands first, then measurements).
    """

    __slots__ = ("index", "sys")

    def __init__(self, index, sys: StateSpace):
        rows = _as_group(index)
        if sys.n_outputs != len(rows):
            raise DimensionMismatch(
                f"realization of rows {rows} must have {len(rows)} outputs"
            )
        self.index = index if isinstance(index, int) else rows
        self.sys = sys

    @property
    def rows(self) -> tuple[int, ...]:
        return _as_group(self.index)

    @property
    def order(self) -> int:
        return self.sys.order

    def __repr__(self) -> str:
        return f"RowRealization(index={self.index!r}, order={self.order})"


def _as_group(index) -> tuple[int, ...]:
    if isinstance(index, int):
        return (index,)
    return tuple(int(i) for i in index)


def _audit_realization(sys: StateSpace, tfm: RationalMatrix, label: str) -> None:
    """Probe-point agreement with the target rows plus PBH audits."""
    pts = probe_points(tfm.domain, count=7, avoid=_pole_cloud(tfm))
    scale = 1.0
    worst = 0.0
    for pt in pts:
        want = tfm.eval(pt)
        got = sys.eval(pt)
        scale = max(scale, float(np.max(np.abs(want))))
        worst = max(worst, float(np.max(np.abs(got - want))))
    if worst > probe_tolerance() * scale:
        raise InvariantViolation(
            "row-probe-match",
            f"{label}: realization disagrees with the row by {worst:.3e}",
        )
    if not sstate.is_stabilizable(sys):
        raise InvariantViolation("row-stabilizable", label)
    if not sstate.is_detectable(sys):
        raise InvariantViolation("row-detectable", label)


def realize_rows(pair: NrfPair, grouping=None) -> list[RowRealization]:
    """Per-row realizations of [Phi Gamma].

    The default grouping is one row per realization.  A grouping is a list of
    disjoint blocks of 1-based row numbers covering 1..m; each block is
    realized jointly (a minimal realization of the block-row), which can share
    dynamics between rows with common denominators.
    """
    m, p = pair.shape
    if grouping is None:
        grouping = [[i] for i in range(1, m + 1)]
    groups = [_as_group(g if not isinstance(g, int) else (g,)) for g in grouping]
    flat = sorted(i for g in groups for i in g)
    if flat != list(range(1, m + 1)):
        raise InconsistentDimensions(
            f"grouping {groups} is not a partition of rows 1..{m}"
        )
    out = []
    for g in groups:
        tfm = _compound_rows(pair, g)
        if len(g) == 1:
            companion = sstate.tf_to_ss_obsv(tfm)
            reduced, k, T = sstate.ctrb_staircase(companion)
            sys = reduced.truncated(k)
        else:
            pieces = [sstate.tf_to_ss_obsv(tfm.row(r)) for r in range(tfm.rows)]
            sys = sstate.minimal(sstate.stack_outputs(pieces))
        _audit_realization(sys, tfm, f"rows {g}")
        out.append(RowRealization(g[0] if len(g) == 1 else g, sys))
    return out


class AssembledController:
    """Block-diagonal stacking of row realizations.

    ``partition`` is (m, p): the first m inputs receive the fed-back commands
    u + delta_u, the trailing p inputs receive the regulated measurement z.
    Output i is control command i regardless of the grouping order.
    """

    __slots__ = ("sys", "row_orders", "partition", "grouping")

    def __init__(self, sys, row_orders, partition, grouping):
        self.sys = sys
        self.row_orders = list(row_orders)
        self.partition = tuple(partition)
        self.grouping = tuple(tuple(g) for g in grouping)

    @property
    def order(self) -> int:
        return self.sys.order

    def unstable_modes(self):
        return sstate.unstable_eigs(self.sys.A, self.sys.domain)

    def __repr__(self) -> str:
        m, p = self.partition
        return (
            f"AssembledController(order={self.order}, m={m}, p={p}, "
            f"blocks={self.row_orders})"
        )


def assemble(rows: list[RowRealization]) -> AssembledController:
    """Block-diagonal assembly of row realizations into one controller.

    Row indices must partition 1..m.  Outputs are permuted back into row
    order, so a grouping like [[2, 3], [1]] still yields output 1 on top.
    """
    if not rows:
        raise InconsistentDimensions("no rows to assemble")
    flat = [i for r in rows for i in r.rows]
    m = len(flat)
    if sorted(flat) != list(range(1, m + 1)):
        raise InconsistentDimensions(f"row indices {flat} do not partition 1..{m}")
    width = rows[0].sys.n_inputs
    domain = rows[0].sys.domain
    for r in rows:
        if r.sys.n_inputs != width:
            raise InconsistentDimensions("rows disagree on the input dimension")
        if r.sys.domain is not domain:
            raise DomainMismatch("rows disagree on the stability domain")
    p = width - m
    if p < 0:
        raise InconsistentDimensions(
            f"{m} rows cannot share an input vector of width {width}"
        )

    stacked = sstate.stack_outputs([r.sys for r in rows])
    # stacked output k is controller output flat[k]; undo the grouping order
    perm = np.argsort(np.asarray(flat))
    sys = StateSpace(stacked.A, stacked.B, stacked.C[perm, :], stacked.D[perm, :], domain)

    pts = probe_points(domain, count=5)
    for pt in pts:
        want = np.vstack([r.sys.eval(pt) for r in rows])[perm, :]
        got = sys.eval(pt)
        err = float(np.max(np.abs(got - want)))
        if err > probe_tolerance() * max(1.0, float(np.max(np.abs(want)))):
            raise InvariantViolation("assembly-linearity", f"disagreement {err:.3e}")
    if not sstate.is_stabilizable(sys):
        raise InvariantViolation("assembled-stabilizable", "PBH audit failed")
    if not sstate.is_detectable(sys):
        raise InvariantViolation("assembled-detectable", "PBH audit failed")

    return AssembledController(
        sys, [r.order for r in rows], (m, p), [r.rows for r in rows]
    )


# ---------------------------------------------------------------------------
# closing the loop


class ClosedLoopRealization:
    """State matrix of the interconnection plus its static coupling data."""

    __slots__ = ("A_CL", "Dtilde", "schur", "plant_order", "controller_order", "domain")

    def __init__(self, A_CL, Dtilde, schur, plant_order, controller_order, domain):
        self.A_CL = A_CL
        self.Dtilde = Dtilde
        self.schur = schur
        self.plant_order = plant_order
        self.controller_order = controller_order
        self.domain = domain

    @property
    def order(self) -> int:
        return self.A_CL.shape[0]

    def eigenvalues(self) -> np.ndarray:
        if self.order == 0:
            return np.zeros(0, dtype=complex)
        return np.linalg.eigvals(self.A_CL)

    def unstable_modes(self):
        return sstate.unstable_eigs(self.A_CL, self.domain)

    @property
    def is_stable(self) -> bool:
        return len(self.unstable_modes().values) == 0

    def __repr__(self) -> str:
        return (
            f"ClosedLoopRealization(order={self.order}, "
            f"plant={self.plant_order}, controller={self.controller_order})"
        )


def _invertibility(Mat: np.ndarray) -> tuple[bool, float]:
    """(invertible, smallest/largest singular value)."""
    if Mat.size == 0:
        return True, 1.0
    s = np.linalg.svd(Mat, compute_uv=False)
    if s[0] == 0.0:
        return False, 0.0
    ratio = float(s[-1] / s[0])
    return ratio > RANK_REL_TOL, ratio


def closed_loop_state_matrix(
    plant: StateSpace, ctrl: AssembledController
) -> ClosedLoopRealization:
    """Close the loop z = r - y, v = u + w around the plant.

    The three static unknowns per step are (-u, y, u); they couple through

        Dtilde = [ I    0    I  ]
                 [ 0    I   -D  ]
                 [ D_K1 D_K2  I ]

    whose invertibility is equivalent to that of the Schur complement
    I - D_K1 + D_K2 D (eliminate the first two block rows).  Both tests must
    agree before the state matrix is assembled.
    """
    m, p = ctrl.partition
    if plant.n_inputs != m or plant.n_outputs != p:
        raise DimensionMismatch(
            f"plant is {plant.n_outputs}x{plant.n_inputs}, controller expects {p}x{m}"
        )
    if plant.domain is not ctrl.sys.domain:
        raise DomainMismatch("plant and controller disagree on the stability domain")

    A, B, C, D = plant.A, plant.B, plant.C, plant.D
    AK, BK, CK, DK = ctrl.sys.A, ctrl.sys.B, ctrl.sys.C, ctrl.sys.D
    DK1, DK2 = DK[:, :m], DK[:, m:]
    BK1, BK2 = BK[:, :m], BK[:, m:]

    Dtilde = np.block(
        [
            [np.eye(m), np.zeros((m, p)), np.eye(m)],
            [np.zeros((p, m)), np.eye(p), -D],
            [DK1, DK2, np.eye(m)],
        ]
    )
    schur = np.eye(m) - DK1 + DK2 @ D
    ok_schur, r_schur = _invertibility(schur)
    ok_direct, r_direct = _invertibility(Dtilde)
    if not ok_schur or not ok_direct:
        raise SingularCoupling(
            f"coupling matrix is singular (schur {r_schur:.3e}, direct {r_direct:.3e})"
        )

    n_g, n_k = plant.order, ctrl.order
    left = np.block(
        [
            [np.zeros((n_g, m)), np.zeros((n_g, p)), B],
            [-BK1, -BK2, np.zeros((n_k, m))],
        ]
    )
    right = np.block(
        [
            [np.zeros((m, n_g)), np.zeros((m, n_k))],
            [C, np.zeros((p, n_k))],
            [np.zeros((m, n_g)), CK],
        ]
    )
    blockdiag = np.block(
        [
            [A, np.zeros((n_g, n_k))],
            [np.zeros((n_k, n_g)), AK],
        ]
    )
    A_CL = blockdiag + left @ np.linalg.solve(Dtilde, right)
    return ClosedLoopRealization(A_CL, Dtilde, schur, n_g, n_k, plant.domain)


# ---------------------------------------------------------------------------
# transfer-matrix verification


class InternalStabilityReport:
    """Entrywise stability of the loop-injection map plus a cross-check.

    ``comparison`` records how the second computation of the map was obtained:
    "closed-form" (stable factor product) or "probe-eval" (pointwise complex
    arithmetic).  ``max_disagreement`` is the largest probe-point difference
    between the two computations.
    """

    __slots__ = ("entry_stable", "unstable_poles", "max_disagreement", "comparison")

    def __init__(self, entry_stable, unstable_poles, max_disagreement, comparison):
        self.entry_stable = entry_stable
        self.unstable_poles = tuple(unstable_poles)
        self.max_disagreement = float(max_disagreement)
        self.comparison = comparison

    @property
    def stable(self) -> bool:
        return all(all(row) for row in self.entry_stable)

    @property
    def unstable_entries(self) -> tuple[tuple[int, int], ...]:
        return tuple(
            (i, j)
            for i, row in enumerate(self.entry_stable)
            for j, ok in enumerate(row)
            if not ok
        )

    def __repr__(self) -> str:
        verdict = "stable" if self.stable else f"unstable at {self.unstable_entries}"
        return (
            f"InternalStabilityReport({verdict}, "
            f"disagreement={self.max_disagreement:.3e}, via {self.comparison})"
        )


def _entry_unstable_poles(entry, domain: StabilityDomain) -> tuple[complex, ...]:
    # cheap screen first: if every denominator root is stable, no realization
    # is needed (poles of the minimal realization are a subset of the roots)
    if not any(sstate._is_unstable(complex(r), domain) for r in entry.den.roots()):
        return ()
    return sstate.tfm_unstable_poles(RationalMatrix([[entry]], domain))


def verify_internal_stability_tfm(
    pair: NrfPair,
    plant_tfm: RationalMatrix,
    dcf: DoublyCoprime | None = None,
    shift: YoulaShift | None = None,
) -> InternalStabilityReport:
    """Close the loop in the transfer-matrix domain and inspect every entry.

    The map from the three injection points (reference channel, command
    disturbance, measurement channel) to (u, -u, y) is

        H = [I; -I; G] (I - Phi + Gamma G)^-1 [I, Phi, Gamma]

    computed by symbolic inversion.  When the pair came from a doubly coprime
    factorization, passing dcf and shift recomputes H as the product of stable
    factors for an independent cross-check; otherwise the cross-check samples
    the formula pointwise in complex arithmetic.
    """
    if (dcf is None) != (shift is None):
        raise ValueError("dcf and shift must be supplied together")
    m, p = pair.shape
    if plant_tfm.rows != p or plant_tfm.cols != m:
        raise DimensionMismatch(
            f"plant is {plant_tfm.rows}x{plant_tfm.cols}, pair expects {p}x{m}"
        )
    if plant_tfm.domain is not pair.domain:
        raise DomainMismatch("plant and pair disagree on the stability domain")

    domain = pair.domain
    eye_m = RationalMatrix.identity(m, domain)
    Phi, Gamma, G = pair.Phi, pair.Gamma, plant_tfm
    loop = eye_m - Phi + Gamma @ G
    try:
        loop_inv = invert(loop)
    except SingularMatrix as exc:
        raise IllPosedLoop(f"I - Phi + Gamma G is singular: {exc}") from exc
    left = eye_m.vstack(-eye_m).vstack(G)
    right = eye_m.hstack(Phi).hstack(Gamma)
    H = left @ loop_inv @ right

    entry_stable = []
    poles: list[complex] = []
    for i in range(H.rows):
        row_flags = []
        for j in range(H.cols):
            bad = _entry_unstable_poles(H.entry(i, j), domain)
            row_flags.append(len(bad) == 0)
            poles.extend(bad)
        entry_stable.append(tuple(row_flags))

    pts = probe_points(domain, count=11, avoid=_pole_cloud(H, loop, G))
    worst = 0.0
    if dcf is not None:
        omega = diag_part(shift.YQ)
        second = (dcf.M.vstack(-dcf.M).vstack(dcf.N)) @ (
            omega.hstack(omega - shift.YQ).hstack(shift.XQ)
        )
        comparison = "closed-form"
        for pt in pts:
            worst = max(worst, float(np.max(np.abs(H.eval(pt) - second.eval(pt)))))
    else:
        comparison = "probe-eval"
        for pt in pts:
            Phi_e, Gamma_e, G_e = Phi.eval(pt), Gamma.eval(pt), G.eval(pt)
            S_e = np.eye(m) - Phi_e + Gamma_e @ G_e
            left_e = np.vstack([np.eye(m), -np.eye(m), G_e])
            right_e = np.hstack([np.eye(m), Phi_e, Gamma_e])
            H_e = left_e @ np.linalg.solve(S_e, right_e)
            worst = max(worst, float(np.max(np.abs(H.eval(pt) - H_e))))
    return InternalStabilityReport(tuple(entry_stable), poles, worst, comparison)


# ---------------------------------------------------------------------------
# serialization

_BUNDLE_KEYS = ("rows", "grouping")


def bundle_to_obj(rows: list[RowRealization]) -> dict:
    return {
        "rows": [
            {
                "index": r.index if isinstance(r.index, int) else list(r.index),
                "ss": sstate.ss_to_obj(r.sys),
            }
            for r in rows
        ],
        "grouping": [list(r.rows) for r in rows],
    }


def bundle_from_obj(obj: dict) -> list[RowRealization]:
    for key in _BUNDLE_KEYS:
        if key not in obj:
            raise InvariantViolation("bundle-fields-present", f"missing {key!r}")
    out = []
    for rec in obj["rows"]:
        idx = rec["index"]
        out.append(RowRealization(idx if isinstance(idx, int) else tuple(idx), sstate.ss_from_obj(rec["ss"])))
    return out


def save_bundle(path: str, rows: list[RowRealization]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(bundle_to_obj(rows), fh, indent=2)


def load_bundle(path: str) -> list[RowRealization]:
    with open(path, "r", encoding="utf-8") as fh:
        return bundle_from_obj(json.load(fh))


def eigenvalue_rows(cl: ClosedLoopRealization) -> list[tuple[float, float, float, int]]:
    rows = []
    for lam in cl.eigenvalues():
        if cl.domain is StabilityDomain.DISCRETE:
            ok = abs(lam) < 1.0
        else:
            ok = lam.real < 0.0
        rows.append((float(lam.real), float(lam.imag), float(abs(lam)), int(ok)))
    rows.sort(key=lambda r: -r[2])
    return rows


def save_eigenvalue_report(path: str, cl: ClosedLoopRealization) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re", "im", "modulus", "stable_flag"])
        for row in eigenvalue_rows(cl):
            writer.writerow([repr(row[0]), repr(row[1]), repr(row[2]), row[3]])

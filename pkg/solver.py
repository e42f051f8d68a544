"""Proximal alternating minimization for the layered tensor decomposition.

The model splits a cube H into a spectral layer H = C x_3 B + E1 (unit tubes
in C, B >= 0) and a spatial layer C = D * Z^T + E2 (orthogonal D, group-sparse
Z). ``solve`` runs the plain PAM iteration with fixed factor width; ``solve_rr``
additionally drops all-zero lateral slices of Z (and the matching slices of D)
and, optionally, restores parked slices that turn out to be needed again.
"""

import time
from dataclasses import replace

import numpy as np
import numpy.typing as npt
import structlog

from config import LtdParams
from errors import DegenerateInputError, InvalidInputError, NumericFailureError
from models import Matrix, SolverState, Tensor3, Trace
from prox import (
    capl1_penalty,
    caplp_penalty,
    procrustes_orth,
    project_nonneg,
    project_unit_tubes,
    prox_group_capl1,
    prox_group_caplp,
)
from tensor_core import (
    conj_transpose,
    lateral_slice_norms,
    mode3_product,
    mode3_unfold,
    spectral_norm,
    tprod,
    tsvd,
    tube_norms,
)

INIT_BASIS_OFFSET = 1e-6
FIBER_SPAN_TOL = 0.2
INIT_TUBE_FLOOR = 1e-12
MAX_RESTORED_PER_STEP = 5
RESTORE_FROM_ITERATION = 2


def low_rank_part(d: Tensor3, z: Tensor3) -> Tensor3:
    """D * Z^T."""
    return tprod(d, conj_transpose(z))


def step_norm(before: SolverState, after: SolverState) -> float:
    """||W^{t+1} - W^t|| over all six blocks (factor widths must agree)."""
    return float(
        np.sqrt(sum(np.sum((new - old) ** 2) for old, new in zip(before.blocks(), after.blocks(), strict=True)))
    )


def select_fibers(fibers: Matrix, b: int, rng: np.random.Generator) -> npt.NDArray[np.intp]:
    """Columns of ``fibers`` (n3 x N) to seed B^0 with.

    Fibers are visited in a seeded random order and one is taken when more than
    FIBER_SPAN_TOL of its norm lies outside the span of those already taken.
    If the cube has fewer than b such fibers the rest are filled up in visiting order.
    """
    order = rng.permutation(fibers.shape[1])
    residual = fibers[:, order].copy()
    norms = np.linalg.norm(residual, axis=0)
    chosen: list[int] = []
    for _ in range(b):
        distinct = np.linalg.norm(residual, axis=0) > FIBER_SPAN_TOL * norms
        distinct[chosen] = False
        candidates = np.flatnonzero(distinct)
        if candidates.size == 0:
            break
        k = int(candidates[0])
        chosen.append(k)
        q = residual[:, k] / np.linalg.norm(residual[:, k])
        residual -= np.outer(q, q @ residual)

    taken = set(chosen)
    filler = [k for k in range(order.size) if k not in taken][: b - len(chosen)]
    return order[chosen + filler]


class LtdSolver:
    """PAM solver for the LTD model with optional rank reduction."""

    def __init__(self, params: LtdParams) -> None:
        """Initialize solver.

        Args:
            params: Validated model, proximal and stopping parameters
        """
        self.logger: structlog.typing.FilteringBoundLogger = structlog.get_logger(__name__)
        self.params: LtdParams = params

    @property
    def lambda6(self) -> float:
        assert self.params.lambda6 is not None
        return self.params.lambda6

    def objective(self, state: SolverState, h: Tensor3) -> float:
        """F(W) without the indicator terms (zero on feasible iterates)."""
        prm = self.params
        fit = h - mode3_product(state.c, state.basis) - state.e1
        split = state.c - low_rank_part(state.d, state.z) - state.e2
        return float(
            prm.lambda1 / 2 * np.sum(state.basis**2)
            + prm.lambda2 * capl1_penalty(state.e1)
            + prm.lambda3 / 2 * np.sum(fit**2)
            + prm.lambda4 * caplp_penalty(state.z, prm.p, prm.nu)
            + prm.lambda5 * capl1_penalty(state.e2)
            + self.lambda6 / 2 * np.sum(split**2)
        )

    def init_state(self, h: Tensor3) -> SolverState:
        """Deterministic starting point W^0 for the given seed.

        B^0 holds b spectrally distinct pixel fibers (clamped to be non-negative),
        C^0 the unit-normalized least-squares coordinates of every pixel in B^0,
        and D^0 the first min(n1, n2) left T-SVD slices of C^0 with Z^0 = C^0T * D^0.

        Raises:
            InvalidInputError: If H is all zero or has fewer pixels than b
        """
        h = np.asarray(h, dtype=np.float64)
        if h.ndim != 3:
            raise InvalidInputError(f"Cube must be a third-order tensor, got shape {h.shape}")
        if not np.any(h):
            raise InvalidInputError("Cube is all zero")
        n1, n2, _ = h.shape
        b = self.params.b
        if b > n1 * n2:
            raise InvalidInputError(f"b={b} exceeds the number of pixels {n1 * n2}")

        rng = np.random.default_rng(self.params.seed)
        fibers = mode3_unfold(h)
        pixels = select_fibers(fibers, b, rng)
        basis = np.maximum(fibers[:, pixels], 0.0) + INIT_BASIS_OFFSET

        coords = mode3_product(h, np.linalg.pinv(basis))
        coords[tube_norms(coords) == 0] = INIT_TUBE_FLOOR
        c = project_unit_tubes(coords)

        r0 = min(n1, n2)
        d = procrustes_orth(tsvd(c, economy=True).u[:, :r0, :])
        z = tprod(conj_transpose(c), d)

        self.logger.debug("Initial state built", shape=h.shape, b=b, r0=r0, pixels=pixels.tolist())
        return SolverState(
            c=c,
            basis=basis,
            e1=np.zeros_like(h),
            d=d,
            z=z,
            e2=np.zeros_like(c),
            d_sub=np.zeros((n1, 0, b)),
        )

    def update_c(self, state: SolverState, h: Tensor3) -> Tensor3:
        prm = self.params
        residual = mode3_product(state.c, state.basis) + state.e1 - h
        grad = prm.lambda3 * mode3_product(residual, state.basis.T) + self.lambda6 * (
            state.c - low_rank_part(state.d, state.z) - state.e2
        )
        lipschitz = prm.lambda3 * spectral_norm(state.basis) ** 2 + self.lambda6
        c_hat = state.c - grad / (lipschitz + prm.rho1)

        zero = tube_norms(c_hat) == 0
        if np.any(zero):
            self.logger.warning("Zero tube in C update, keeping previous tube", count=int(zero.sum()))
            c_hat[zero] = state.c[zero]
        try:
            return project_unit_tubes(c_hat)
        except DegenerateInputError as e:
            raise NumericFailureError(f"C update produced zero tubes: {e}") from e

    def update_b(self, state: SolverState, h: Tensor3) -> Matrix:
        prm = self.params
        c3 = mode3_unfold(state.c)
        residual = state.basis @ c3 + mode3_unfold(state.e1) - mode3_unfold(h)
        grad = prm.lambda1 * state.basis + prm.lambda3 * residual @ c3.T
        lipschitz = prm.lambda1 + prm.lambda3 * spectral_norm(c3) ** 2
        return project_nonneg(state.basis - grad / (lipschitz + prm.rho2))

    def update_e1(self, state: SolverState, h: Tensor3) -> Tensor3:
        prm = self.params
        weight = prm.lambda3 + prm.rho3
        e1_hat = (prm.lambda3 * (h - mode3_product(state.c, state.basis)) + prm.rho3 * state.e1) / weight
        return prox_group_capl1(e1_hat, prm.lambda2 / weight)

    def update_d(self, state: SolverState) -> Tensor3:
        g = self.lambda6 * tprod(state.c - state.e2, state.z) + self.params.rho4 * state.d
        return procrustes_orth(g)

    def _prox_z(self, z_hat: Tensor3) -> Tensor3:
        prm = self.params
        if prm.lambda4 == 0:
            return z_hat
        caplp = prm.caplp(prm.lambda4 / (self.lambda6 + prm.rho5))
        return prox_group_caplp(z_hat, caplp, literal=prm.caplp_literal)

    def update_z(self, state: SolverState) -> Tensor3:
        prm = self.params
        weight = self.lambda6 + prm.rho5
        z_hat = (self.lambda6 * tprod(conj_transpose(state.c - state.e2), state.d) + prm.rho5 * state.z) / weight
        return self._prox_z(z_hat)

    def update_e2(self, state: SolverState) -> Tensor3:
        prm = self.params
        weight = self.lambda6 + prm.rho6
        e2_hat = (self.lambda6 * (state.c - low_rank_part(state.d, state.z)) + prm.rho6 * state.e2) / weight
        return prox_group_capl1(e2_hat, prm.lambda5 / weight)

    def pam_step(self, state: SolverState, h: Tensor3) -> SolverState:
        """One sweep C -> B -> E1 -> D -> Z -> E2, each block seeing the newest values."""
        nxt = replace(state, c=self.update_c(state, h))
        nxt = replace(nxt, basis=self.update_b(nxt, h))
        nxt = replace(nxt, e1=self.update_e1(nxt, h))
        nxt = replace(nxt, d=self.update_d(nxt))
        nxt = replace(nxt, z=self.update_z(nxt))
        nxt = replace(nxt, e2=self.update_e2(nxt))
        return replace(nxt, iteration=state.iteration + 1)

    def rank_reduce_step(self, state: SolverState) -> SolverState:
        """Park the lateral slices of D whose Z slice is exactly zero and drop them from D and Z."""
        zero = np.flatnonzero(lateral_slice_norms(state.z) == 0)
        if zero.size == 0 or zero.size == state.rank:
            return state
        return replace(
            state,
            d_sub=np.concatenate([state.d_sub, state.d[:, zero, :]], axis=1),
            d=np.delete(state.d, zero, axis=1),
            z=np.delete(state.z, zero, axis=1),
        )

    def validate_restore_step(self, state: SolverState) -> SolverState:
        """Bring back up to five parked slices whose Z prox is nonzero, largest first."""
        if state.parked == 0 or state.iteration - 1 < RESTORE_FROM_ITERATION:
            return state

        prm = self.params
        z_sub = self._prox_z(
            self.lambda6 * tprod(conj_transpose(state.c - state.e2), state.d_sub) / (self.lambda6 + prm.rho5)
        )
        norms = lateral_slice_norms(z_sub)
        candidates = [int(j) for j in np.lexsort((np.arange(norms.size), -norms)) if norms[j] > 0]
        selected = candidates[:MAX_RESTORED_PER_STEP]
        if not selected:
            return state

        d = np.concatenate([state.d, state.d_sub[:, selected, :]], axis=1)
        return replace(
            state,
            d=procrustes_orth(d),
            z=np.concatenate([state.z, z_sub[:, selected, :]], axis=1),
            d_sub=np.delete(state.d_sub, selected, axis=1),
        )

    def _finite_objective(self, state: SolverState, h: Tensor3) -> float:
        value = self.objective(state, h)
        if not np.isfinite(value):
            self.logger.error("Objective is not finite", iteration=state.iteration)
            raise NumericFailureError(f"Objective became non-finite at iteration {state.iteration}")
        return value

    def _iterate(self, h: Tensor3, rank_reduction: bool) -> tuple[SolverState, Trace]:
        prm = self.params
        h = np.asarray(h, dtype=np.float64)
        start = time.perf_counter()

        state = self.init_state(h)
        # Row 0 of the trace is the starting point with a zero step
        trace = Trace()
        trace.record(self._finite_objective(state, h), 0.0, state.rank, time.perf_counter() - start)

        self.logger.info(
            "Solver started",
            shape=h.shape,
            rank_reduction=rank_reduction,
            validation=prm.validation,
            max_iter=prm.max_iter,
            r0=state.rank,
        )

        for _ in range(prm.max_iter):
            new_state = self.pam_step(state, h)
            # Measured before any slice is parked or restored, while the widths still match
            step = step_norm(state, new_state)
            rel_step = step / max(1.0, state.norm())

            removed = restored = 0
            if rank_reduction:
                # Restored slices have a nonzero Z slice, so parking never drops them again
                if prm.validation:
                    width = new_state.rank
                    new_state = self.validate_restore_step(new_state)
                    restored = new_state.rank - width
                width = new_state.rank
                new_state = self.rank_reduce_step(new_state)
                removed = width - new_state.rank
                if removed or restored:
                    self.logger.debug(
                        "Rank event", iteration=new_state.iteration, removed=removed, restored=restored, r=new_state.rank
                    )

            state = new_state
            objective = self._finite_objective(state, h)
            trace.record(objective, step, state.rank, time.perf_counter() - start, removed, restored)
            self.logger.debug("Iteration", iteration=state.iteration, objective=objective, step=step, r=state.rank)

            # Checked after recording so the stopping iteration is in the trace
            if rel_step < prm.rel_tol:
                break

        self.logger.info(
            "Solver finished",
            iterations=state.iteration,
            objective=trace.objective[-1],
            r=state.rank,
            seconds=round(trace.seconds[-1], 3),
        )
        return state, trace

    def solve(self, h: Tensor3) -> tuple[SolverState, Trace]:
        """PAM with fixed factor width r0 = min(n1, n2)."""
        return self._iterate(h, rank_reduction=False)

    def solve_rr(self, h: Tensor3) -> tuple[SolverState, Trace]:
        """PAM with rank reduction (and the restore mechanism when ``validation`` is on)."""
        return self._iterate(h, rank_reduction=True)

    def run(self, h: Tensor3) -> tuple[SolverState, Trace]:
        return self.solve_rr(h) if self.params.rank_reduction else self.solve(h)

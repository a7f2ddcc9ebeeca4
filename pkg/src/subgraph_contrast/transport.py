"""Entropic optimal transport distances between subgraph node sets.

One log-domain Sinkhorn solve on the node cost matrix produces the transport
plan; the Wasserstein value reuses it directly and the Gromov-Wasserstein
value reuses it inside the structural quadratic form, so both distances share
a single plan per pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import autodiff as ad
from .autodiff import _lse
from .generator import GeneratedSubgraph
from .graphs import Subgraph

DEFAULT_BETA = 0.05
DEFAULT_TAU = 0.5
DEFAULT_MAX_ITERS = 500
DEFAULT_TOL = 1e-6


def uniform_marginals(n: int) -> np.ndarray:
    if n <= 0:
        raise ValueError(f"uniform_marginals: need a positive size, got {n}")
    return np.full(n, 1.0 / n)


def node_cost_matrix(
    s1: Union[ad.Tensor, np.ndarray],
    s2: Union[ad.Tensor, np.ndarray],
    tau: float = DEFAULT_TAU,
) -> ad.Tensor:
    """Pairwise transport costs exp(-cosine(h1_i, h2_j) / tau).

    Zero-norm rows contribute cosine 0, hence cost 1.
    """
    if tau <= 0:
        raise ValueError(f"node_cost_matrix: tau must be positive, got {tau}")
    return ad.exp(ad.mul(ad.cosine_matrix(s1, s2), -1.0 / tau))


def intra_distances_sampled(s: Subgraph, tau: float = DEFAULT_TAU) -> ad.Tensor:
    """exp(-A/tau) over the 0/1 induced adjacency (constant w.r.t. parameters)."""
    if tau <= 0:
        raise ValueError(f"intra_distances_sampled: tau must be positive, got {tau}")
    return ad.Tensor(np.exp(-s.adjacency / tau))


def intra_distances_generated(gsub: GeneratedSubgraph, tau: float = DEFAULT_TAU) -> ad.Tensor:
    """exp(-A_hat/tau) over the real-valued generated adjacency (differentiable)."""
    if tau <= 0:
        raise ValueError(f"intra_distances_generated: tau must be positive, got {tau}")
    return ad.exp(ad.mul(gsub.adjacency, -1.0 / tau))


@dataclass
class TransportPlan:
    """Coupling between two node sets plus solver bookkeeping."""

    plan: ad.Tensor  # n x m, nonnegative
    u: np.ndarray  # source marginal, length n
    v: np.ndarray  # target marginal, length m
    converged: bool
    iterations: int
    max_violation: float
    violations: Optional[list[float]] = field(default=None, repr=False)

    @property
    def shape(self) -> tuple:
        return self.plan.shape


def _check_marginal(w: np.ndarray, size: int, name: str) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (size,):
        raise ValueError(f"sinkhorn: marginal {name} has shape {w.shape}, expected ({size},)")
    if np.any(w <= 0):
        raise ValueError(f"sinkhorn: marginal {name} must be strictly positive")
    if abs(float(w.sum()) - 1.0) > 1e-8:
        raise ValueError(f"sinkhorn: marginal {name} must sum to 1, got {w.sum():.12g}")
    return w


def _violation(log_plan: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    row = np.exp(_lse(log_plan, 1, False))
    col = np.exp(_lse(log_plan, 0, False))
    return float(max(np.max(np.abs(row - u)), np.max(np.abs(col - v))))


def sinkhorn(
    cost: Union[ad.Tensor, np.ndarray],
    u: Optional[np.ndarray] = None,
    v: Optional[np.ndarray] = None,
    beta: float = DEFAULT_BETA,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    *,
    differentiate: bool = True,
    track_violations: bool = False,
) -> TransportPlan:
    """Log-domain Sinkhorn for the entropy-regularized coupling of (u, v).

    Stops once the max marginal violation drops below ``tol`` (checked after
    each full row/column sweep) or after ``max_iters`` sweeps, in which case
    ``converged`` is False. With ``differentiate=False`` the same updates run
    outside the tape and the returned plan is a constant, which is the
    fixed-plan gradient variant (and the fast path for plain evaluation).
    """
    cost_t = ad.as_tensor(cost)
    if cost_t.ndim != 2:
        raise ValueError(f"sinkhorn: cost must be a matrix, got shape {cost_t.shape}")
    if not np.all(np.isfinite(cost_t.data)):
        raise ValueError("sinkhorn: cost has non-finite entries")
    if beta <= 0:
        raise ValueError(f"sinkhorn: beta must be positive, got {beta}")
    if tol < 0:
        raise ValueError(f"sinkhorn: tol must be nonnegative, got {tol}")
    n, m = cost_t.shape
    u = uniform_marginals(n) if u is None else _check_marginal(u, n, "u")
    v = uniform_marginals(m) if v is None else _check_marginal(v, m, "v")

    log_u = np.log(u).reshape(n, 1)
    log_v = np.log(v).reshape(1, m)
    converged = False
    iterations = 0
    violations: Optional[list[float]] = [] if track_violations else None

    if differentiate:
        kernel = ad.mul(cost_t, -1.0 / beta)
        f = ad.Tensor(np.zeros((n, 1)))
        g = ad.Tensor(np.zeros((1, m)))
        log_u_t = ad.Tensor(log_u)
        log_v_t = ad.Tensor(log_v)
        for _ in range(max_iters):
            f = ad.sub(log_u_t, ad.logsumexp(ad.add(kernel, g), axis=1, keepdims=True))
            g = ad.sub(log_v_t, ad.logsumexp(ad.add(kernel, f), axis=0, keepdims=True))
            iterations += 1
            err = _violation(kernel.data + f.data + g.data, u, v)
            if violations is not None:
                violations.append(err)
            if err < tol:
                converged = True
                break
        plan = ad.exp(ad.add(ad.add(kernel, f), g))
        final_err = _violation(kernel.data + f.data + g.data, u, v)
    else:
        kernel_d = cost_t.data * (-1.0 / beta)
        f_d = np.zeros((n, 1))
        g_d = np.zeros((1, m))
        for _ in range(max_iters):
            f_d = log_u - _lse(kernel_d + g_d, 1, True)
            g_d = log_v - _lse(kernel_d + f_d, 0, True)
            iterations += 1
            err = _violation(kernel_d + f_d + g_d, u, v)
            if violations is not None:
                violations.append(err)
            if err < tol:
                converged = True
                break
        plan = ad.Tensor(np.exp(kernel_d + f_d + g_d))
        final_err = _violation(kernel_d + f_d + g_d, u, v)

    return TransportPlan(
        plan=plan,
        u=u,
        v=v,
        converged=converged,
        iterations=iterations,
        max_violation=final_err,
        violations=violations,
    )


def _plan_tensor(plan: Union[TransportPlan, ad.Tensor, np.ndarray]) -> ad.Tensor:
    if isinstance(plan, TransportPlan):
        return plan.plan
    return ad.as_tensor(plan)


def wasserstein(
    cost: Union[ad.Tensor, np.ndarray],
    plan: Union[TransportPlan, ad.Tensor, np.ndarray],
) -> ad.Tensor:
    """Transport cost sum(T * C) under the plan; the entropy term stays solver-internal."""
    cost_t = ad.as_tensor(cost)
    plan_t = _plan_tensor(plan)
    if cost_t.shape != plan_t.shape:
        raise ValueError(
            f"wasserstein: cost shape {cost_t.shape} does not match plan shape {plan_t.shape}"
        )
    return ad.tensor_sum(ad.mul(plan_t, cost_t))


def gromov_wasserstein(
    c1: Union[ad.Tensor, np.ndarray],
    c2: Union[ad.Tensor, np.ndarray],
    plan: Union[TransportPlan, ad.Tensor, np.ndarray],
) -> ad.Tensor:
    """Structural discrepancy sum_ij sum_i'j' T_ij T_i'j' |c1[i,i'] - c2[j,j']|.

    Evaluated as one broadcast quadratic form over axes (i, j, i', j'); fine
    for subgraph sizes (k'^4 terms).
    """
    c1_t = ad.as_tensor(c1)
    c2_t = ad.as_tensor(c2)
    plan_t = _plan_tensor(plan)
    n, m = plan_t.shape
    if c1_t.shape != (n, n) or c2_t.shape != (m, m):
        raise ValueError(
            f"gromov_wasserstein: intra shapes {c1_t.shape}, {c2_t.shape} do not match "
            f"plan shape {plan_t.shape}"
        )
    t_left = ad.reshape(plan_t, (n, m, 1, 1))
    t_right = ad.reshape(plan_t, (1, 1, n, m))
    gap = ad.absolute(ad.sub(ad.reshape(c1_t, (n, 1, n, 1)), ad.reshape(c2_t, (1, m, 1, m))))
    return ad.tensor_sum(ad.mul(ad.mul(t_left, t_right), gap))


@dataclass
class PairDistances:
    """Both OT distances for one subgraph pair, sharing one plan."""

    wd: ad.Tensor
    gwd: ad.Tensor
    plan: TransportPlan


def subgraph_distances(
    emb1: Union[ad.Tensor, np.ndarray],
    intra1: Union[ad.Tensor, np.ndarray],
    emb2: Union[ad.Tensor, np.ndarray],
    intra2: Union[ad.Tensor, np.ndarray],
    tau: float = DEFAULT_TAU,
    beta: float = DEFAULT_BETA,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    *,
    differentiate: bool = True,
) -> PairDistances:
    """Solve the pair's node-cost plan once and evaluate D_w and D_gw with it."""
    cost = node_cost_matrix(emb1, emb2, tau)
    plan = sinkhorn(cost, beta=beta, max_iters=max_iters, tol=tol, differentiate=differentiate)
    return PairDistances(
        wd=wasserstein(cost, plan),
        gwd=gromov_wasserstein(intra1, intra2, plan),
        plan=plan,
    )

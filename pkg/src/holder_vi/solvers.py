"""Outer loops: fixed-coefficient and adaptive extra-Newton runs plus an
extragradient baseline.

Each iteration solves a regularized model VI for the half step, takes a
projected prox step weighted by gamma = H * step^power, and maintains the
running 1/gamma-weighted average of half steps.  Oracle counters tally
only algorithmic evaluations; gap instrumentation uses the raw operator
and is not billed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .core import Array, Ball, FeasibleSet, Operator, SolverConfig, WholeSpace, as_point
from .errors import ConfigError, DegenerateRegularization
from .linesearch import LineSearchOutcome, SearchMode, next_H, search
from .metrics import bound_verdicts, gap_upper_bound
from .model import RegularizedModel, build_linear_model
from .subproblem import SubproblemSolution, gamma_of, prox_step, solve_model_vi


@dataclass
class Counters:
    f_evals: int = 0
    j_evals: int = 0
    subproblems: int = 0


class CountedOperator:
    """Operator wrapper billing value/jacobian calls to a Counters object."""

    def __init__(self, op: Operator, counters: Counters):
        self._op = op
        self.counters = counters
        self.dim = op.dim

    def value(self, z):
        self.counters.f_evals += 1
        return self._op.value(z)

    def jacobian(self, z):
        self.counters.j_evals += 1
        return self._op.jacobian(z)

    def deriv_apply(self, order, z, dirs):
        return self._op.deriv_apply(order, z, dirs)


@dataclass
class IterationRecord:
    k: int
    i_k: int
    H_k: float
    gamma_k: float
    half_step: Array
    full_step: Array
    step_norm: float
    F_evals_cum: int
    J_evals_cum: int
    subproblems_cum: int
    gap_point: float
    gap_avg: float
    wall_ns: int


@dataclass
class EarlyExit:
    k: int
    i: int
    point: Array
    gap: float


@dataclass
class RunResult:
    method: str
    averaged_point: Array
    final_gap: float
    records: List[IterationRecord]
    early_exit: Optional[EarlyExit]
    bound_checks: dict
    converged_at: Optional[int]
    counters: Counters
    config: SolverConfig
    H_final: Optional[float] = None


def ergodic_average(points: List[Array], gammas: List[float]) -> Array:
    """Weighted mean sum(p_i/g_i) / sum(1/g_i)."""
    if len(points) == 0 or len(points) != len(gammas):
        raise ConfigError("ergodic_average needs equal nonempty lists")
    num = np.zeros_like(np.asarray(points[0], dtype=np.float64))
    den = 0.0
    for pt, g in zip(points, gammas):
        if not g > 0:
            raise DegenerateRegularization(f"averaging weight with gamma={g}")
        num = num + np.asarray(pt, dtype=np.float64) / g
        den += 1.0 / g
    return num / den


def k_for_accuracy(nu: float, H: float, D: float, eps: float) -> int:
    """Iteration budget 2 H^{2/(2+nu)} D^2 eps^{-2/(2+nu)}, rounded up."""
    if not (H > 0 and D > 0 and eps > 0):
        raise ConfigError("k_for_accuracy needs positive H, D, eps")
    e = 2.0 / (2.0 + nu)
    return max(1, math.ceil(2.0 * H ** e * D * D * (1.0 / eps) ** e))


class _GapProbe:
    """Gap bound evaluator against the raw operator, NaN when unbounded."""

    def __init__(self, op: Operator, feasible: FeasibleSet, cfg: SolverConfig):
        self.op = op
        if isinstance(feasible, WholeSpace) and cfg.report_radius is not None:
            self.set = Ball(feasible.dim, np.zeros(feasible.dim), cfg.report_radius)
        else:
            self.set = feasible
        self.bounded = not isinstance(self.set, WholeSpace)

    def __call__(self, point: Array) -> float:
        if not self.bounded:
            return float("nan")
        return gap_upper_bound(self.op, self.set, point).gap_upper

    def from_value(self, point: Array, f: Array) -> float:
        if not self.bounded:
            return float("nan")
        witness = self.set.support_argmax(-f)
        return float(f @ (point - witness))


class _Averager:
    def __init__(self, dim: int):
        self.num = np.zeros(dim)
        self.den = 0.0

    def add(self, point: Array, gamma: float):
        self.num = self.num + point / gamma
        self.den += 1.0 / gamma

    @property
    def empty(self) -> bool:
        return self.den == 0.0

    @property
    def point(self) -> Array:
        return self.num / self.den


def _finish(method, cop, cfg, records, avg, gap_probe, early_exit, converged_at,
            override_point=None, nu_decl=None, H_decl=None, D=None, H_final=None,
            p=2, c_pnu=None):
    if override_point is not None:
        out_point = override_point
    elif not avg.empty:
        out_point = avg.point
    else:
        raise ConfigError("run produced no iterations to average")
    gap = gap_probe(out_point)
    checks = bound_verdicts(records, method, nu_decl if nu_decl is not None else cfg.nu,
                            H_decl, D, cfg.H0, cfg.eps,
                            early_exit=early_exit is not None, p=p, c_pnu=c_pnu)
    return RunResult(method=method, averaged_point=out_point, final_gap=gap,
                     records=records, early_exit=early_exit, bound_checks=checks,
                     converged_at=converged_at, counters=cop.counters, config=cfg,
                     H_final=H_final)


def _declared(op: Operator, cfg: SolverConfig):
    nu_decl = op.nu if op.nu is not None else cfg.nu
    return nu_decl, op.holder_const


def run_nu_ren(op: Operator, feasible: FeasibleSet, z0: Array, nu: float,
               H_nu: float, K: int, cfg: SolverConfig) -> RunResult:
    """Fixed-coefficient extra-Newton run: model coefficient exactly 2 H_nu.

    Stops early when a zero half step makes gamma vanish (the model
    solution at z_k already solves the VI to inner_tol).
    """
    if not H_nu > 0:
        raise ConfigError("run_nu_ren needs H_nu > 0")
    counters = Counters()
    cop = CountedOperator(op, counters)
    gap_probe = _GapProbe(op, feasible, cfg)
    z = feasible.project(as_point(z0, op.dim))
    avg = _Averager(op.dim)
    records: List[IterationRecord] = []
    nu_decl, H_decl = _declared(op, cfg)
    coeff = 2.0 * H_nu
    converged_at = None
    override = None
    for k in range(K):
        t0 = time.perf_counter_ns()
        base = build_linear_model(cop, z)
        counters.subproblems += 1
        sol = solve_model_vi(RegularizedModel(base, nu, coeff), feasible, cfg.inner_tol)
        half = sol.point
        step = float(np.linalg.norm(half - z))
        gamma = gamma_of(coeff, nu, step)
        f_half = cop.value(half)
        if gamma <= 0.0:
            converged_at = k
            override = half
            gp = gap_probe(half)
            records.append(IterationRecord(
                k=k, i_k=0, H_k=coeff, gamma_k=0.0, half_step=half,
                full_step=half, step_norm=step, F_evals_cum=counters.f_evals,
                J_evals_cum=counters.j_evals, subproblems_cum=counters.subproblems,
                gap_point=gp, gap_avg=gp, wall_ns=time.perf_counter_ns() - t0))
            break
        z_next = prox_step(z, f_half, gamma, feasible)
        avg.add(half, gamma)
        want_gap = (k % cfg.gap_cadence == 0) or (k == K - 1)
        gp = gap_probe.from_value(half, f_half)
        ga = gap_probe(avg.point) if want_gap else float("nan")
        records.append(IterationRecord(
            k=k, i_k=0, H_k=coeff, gamma_k=gamma, half_step=half,
            full_step=z_next, step_norm=step, F_evals_cum=counters.f_evals,
            J_evals_cum=counters.j_evals, subproblems_cum=counters.subproblems,
            gap_point=gp, gap_avg=ga, wall_ns=time.perf_counter_ns() - t0))
        z = z_next
    return _finish("nu-ren", cop, cfg, records, avg, gap_probe, None, converged_at,
                   override_point=override, nu_decl=nu_decl, H_decl=H_decl,
                   D=feasible.diameter)


def _adaptive_run(method: str, op, feasible, z0, mode: SearchMode, H0: float,
                  K: int, cfg: SolverConfig, eps_exit: Optional[float],
                  trial_factory: Optional[Callable] = None,
                  nu_decl_override=None, H_decl_override=None,
                  p: int = 2, c_pnu: Optional[float] = None) -> RunResult:
    """Common loop for the line-search methods.

    ``trial_factory(cop, z)`` may supply (solve_trial, base_eval) closures
    for non-quadratic models; by default trials use the second-order
    regularized model.  ``eps_exit`` switches on the universal early exit.
    """
    if not H0 > 0:
        raise ConfigError(f"{method} needs H0 > 0")
    counters = Counters()
    cop = CountedOperator(op, counters)
    gap_probe = _GapProbe(op, feasible, cfg)
    z = feasible.project(as_point(z0, op.dim))
    avg = _Averager(op.dim)
    records: List[IterationRecord] = []
    if nu_decl_override is not None or H_decl_override is not None:
        nu_decl, H_decl = nu_decl_override, H_decl_override
    else:
        nu_decl, H_decl = _declared(op, cfg)
    H_state = H0
    converged_at = None
    early = None
    override = None
    gap_check = gap_probe.from_value if eps_exit is not None else None
    for k in range(K):
        t0 = time.perf_counter_ns()
        if trial_factory is None:
            outcome = search(cop, feasible, z, H_state, mode, cfg.inner_tol,
                             cfg.max_doublings, gap_check=gap_check,
                             gap_target=eps_exit, counters=counters)
        else:
            solve_trial, base_eval = trial_factory(cop, z)
            outcome = search(cop, feasible, z, H_state, mode, cfg.inner_tol,
                             cfg.max_doublings, solve_trial=solve_trial,
                             base_eval=base_eval, gap_check=gap_check,
                             gap_target=eps_exit, counters=counters)
        if outcome.early_exit_gap is not None:
            early = EarlyExit(k=k, i=outcome.i_k, point=outcome.accepted_point,
                              gap=outcome.early_exit_gap)
            override = outcome.accepted_point
            break
        half = outcome.accepted_point
        step = outcome.step_norm
        gamma = gamma_of(outcome.H_trial, mode.reg_power, step)
        if gamma <= 0.0:
            converged_at = k
            override = half
            gp = gap_probe(half)
            records.append(IterationRecord(
                k=k, i_k=outcome.i_k, H_k=outcome.H_trial, gamma_k=0.0,
                half_step=half, full_step=half, step_norm=step,
                F_evals_cum=counters.f_evals, J_evals_cum=counters.j_evals,
                subproblems_cum=counters.subproblems, gap_point=gp, gap_avg=gp,
                wall_ns=time.perf_counter_ns() - t0))
            break
        z_next = prox_step(z, outcome.f_at_accepted, gamma, feasible)
        avg.add(half, gamma)
        want_gap = (k % cfg.gap_cadence == 0) or (k == K - 1)
        gp = gap_probe.from_value(half, outcome.f_at_accepted)
        ga = gap_probe(avg.point) if want_gap else float("nan")
        records.append(IterationRecord(
            k=k, i_k=outcome.i_k, H_k=outcome.H_trial, gamma_k=gamma,
            half_step=half, full_step=z_next, step_norm=step,
            F_evals_cum=counters.f_evals, J_evals_cum=counters.j_evals,
            subproblems_cum=counters.subproblems, gap_point=gp, gap_avg=ga,
            wall_ns=time.perf_counter_ns() - t0))
        H_state = next_H(H_state, outcome.i_k)
        z = z_next
    return _finish(method, cop, cfg, records, avg, gap_probe, early, converged_at,
                   override_point=override, nu_decl=nu_decl, H_decl=H_decl,
                   D=feasible.diameter, H_final=H_state, p=p, c_pnu=c_pnu)


def run_nu_aren(op: Operator, feasible: FeasibleSet, z0: Array, nu: float,
                H0: float, K: int, cfg: SolverConfig) -> RunResult:
    """Adaptive run with the known-exponent criterion (power nu, e = 1+nu)."""
    return _adaptive_run("nu-aren", op, feasible, z0, SearchMode.holder(nu),
                         H0, K, cfg, eps_exit=None)


def run_uren(op: Operator, feasible: FeasibleSet, z0: Array, H0: float,
             K: int, eps: float, cfg: SolverConfig) -> RunResult:
    """Universal run (power 1, e = 2) with gap early exit at eps."""
    return _adaptive_run("uren", op, feasible, z0, SearchMode.universal(),
                         H0, K, cfg, eps_exit=eps)


def estimate_lipschitz(op: Operator, feasible: FeasibleSet, n_samples: int = 200,
                       seed: int = 0) -> float:
    """Sampled estimate of the Lipschitz constant of F over the set."""
    rng = np.random.default_rng(seed)
    zs = feasible.sample(rng, n_samples)
    zps = feasible.sample(rng, n_samples)
    best = 0.0
    for z, zp in zip(zs, zps):
        dn = float(np.linalg.norm(z - zp))
        if dn == 0.0:
            continue
        best = max(best, float(np.linalg.norm(op.value(z) - op.value(zp))) / dn)
    return best


def run_extragradient(op: Operator, feasible: FeasibleSet, z0: Array,
                      step: Optional[float], K: int, cfg: SolverConfig) -> RunResult:
    """Two-projection extragradient baseline with plain averaging.

    ``step=None`` uses 1/(2 L) with L estimated by sampling (seeded from
    the config, so runs stay deterministic).
    """
    if step is None:
        L = estimate_lipschitz(op, feasible, seed=cfg.seed)
        step = 1.0 / (2.0 * L) if L > 0 else 1.0
    if not step > 0:
        raise ConfigError("extragradient needs a positive step")
    counters = Counters()
    cop = CountedOperator(op, counters)
    gap_probe = _GapProbe(op, feasible, cfg)
    z = feasible.project(as_point(z0, op.dim))
    avg = _Averager(op.dim)
    records: List[IterationRecord] = []
    for k in range(K):
        t0 = time.perf_counter_ns()
        f_z = cop.value(z)
        half = feasible.project(z - step * f_z)
        f_half = cop.value(half)
        z_next = feasible.project(z - step * f_half)
        avg.add(half, 1.0)
        want_gap = (k % cfg.gap_cadence == 0) or (k == K - 1)
        gp = gap_probe.from_value(half, f_half)
        ga = gap_probe(avg.point) if want_gap else float("nan")
        records.append(IterationRecord(
            k=k, i_k=0, H_k=0.0, gamma_k=1.0, half_step=half, full_step=z_next,
            step_norm=float(np.linalg.norm(half - z)),
            F_evals_cum=counters.f_evals, J_evals_cum=counters.j_evals,
            subproblems_cum=counters.subproblems, gap_point=gp, gap_avg=ga,
            wall_ns=time.perf_counter_ns() - t0))
        z = z_next
    return _finish("extragradient", cop, cfg, records, avg, gap_probe, None, None,
                   nu_decl=op.nu if op.nu is not None else cfg.nu,
                   H_decl=op.holder_const, D=feasible.diameter)

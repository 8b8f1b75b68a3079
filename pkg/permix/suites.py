#!/usr/bin/env python3
# -*- coding: utf-8 -*-
'''
Invariant suites run by `verify-all`.

Each suite takes the resolved Settings and a seed and returns its checks.
Random sweeps collapse into one violation count plus the failing checks, so a
report stays readable at every budget.
'''

from __future__ import annotations

import math
import queue
import time
from dataclasses import dataclass, field
from threading import Lock, Thread
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bounds import (definetti_bound_and_exact, diagonal_block_lower_bound, eb_quadratic_bound,
                     eb_risk_gap_bound, evaluate_instance, family_tightness_lower_bound,
                     greenshtein_ritov_check, lecam_pair_checks, mutual_info_gap, replication_trend,
                     thm_main_bounds, two_mixtures_check, worst_case_family, worst_case_matrix)
from .capacity import (BernoulliInterval, ExplicitFinite, GaussianLocation, PoissonInterval,
                       capacity_estimate, chi2_mutual_information, family_functionals, union_capacity_bound)
from .default.config import Settings
from .default.exceptions import ConfigError, PermixException
from .esp import (CenteredVector, binary_support_vector, esp_all, esp_bounds, hadamard_check,
                  newton_checks, random_hadamard_sweep, verify_esp_theorem)
from .gaussian_demo import (balanced_example_constant, cumulant_sequence, cumulant_terms, f_mu, f_mu_forms,
                            g_ell, moments_blowup, moments_slope, toy_chi2, toy_chi2_oracle_n2)
from .mixtures import (ComponentList, FiniteDistribution, build_mixture_matrix, divergence,
                       exact_chi2_bruteforce, instance_capacity, instance_delta_h2, iid_mixture_pmf,
                       mixture_checks, mixture_divergences, permutation_mixture_pmf, permutation_mixture_table)
from .permanent import (exact_chi2_permanent, permanent_ryser, permanent_sandwich, s_series, series_checks,
                        spectral_series_bounds, wick_factors, wick_mc_check)
from .quadrature import gaussian_affinity
from .report import Check, check_close, check_leq
from .sharedutils import errlog, stdlog

SuiteFn = Callable[[Settings, int], List[Check]]

GOLDEN = ((0.8, 0.2), (0.2, 0.8))


def golden_instance() -> ComponentList:
    '''(Bern(0.2), Bern(0.8))'''
    return ComponentList.from_probs(GOLDEN)


def random_instances(count: int, seed: int, n_max: int = 5, k_max: int = 4,
                     n_min: int = 2) -> List[ComponentList]:
    out = []
    for child in np.random.SeedSequence(seed).spawn(count):
        rng = np.random.default_rng(child)
        n = int(rng.integers(n_min, n_max + 1))
        k = int(rng.integers(2, k_max + 1))
        out.append(ComponentList.random(rng, n, k))
    return out


def _sweep(name: str, checks: Sequence[Check]) -> List[Check]:
    '''Failing checks plus a violation count'''
    failures = [c for c in checks if not c.passed]
    return [Check(f'{name}.{c.name}', c.lhs, c.rhs, c.relation, c.margin, c.passed) for c in failures] + \
        [check_leq(f'{name}_violations', float(len(failures)), 0.0, rel=0.0)]


def mixtures_suite(settings: Settings, seed: int) -> List[Check]:
    c = golden_instance()
    mm = build_mixture_matrix(c)
    checks = [check_close('golden_permanent', exact_chi2_permanent(c, settings), 0.1296, rel=0.0, abs_tol=1e-10),
              check_close('golden_bruteforce', exact_chi2_bruteforce(c, settings), 0.1296, rel=0.0, abs_tol=1e-10),
              check_close('golden_lambda2', mm.lambda2, 0.36, rel=0.0, abs_tol=1e-10),
              check_close('golden_spectral_gap', mm.spectral_gap, 1.0 / instance_delta_h2(c), rel=0.0, abs_tol=1e-10)]
    checks += mm.validate(settings.validation_tol, instance_delta_h2(c))
    checks += mixture_checks(c, settings)
    table = permutation_mixture_table(c.matrix, settings)
    checks.append(check_close('pmf_vs_table', permutation_mixture_pmf(c, (0, 1), settings), float(table[1]), rel=1e-12))
    checks.append(check_close('iid_pmf', iid_mixture_pmf(c, (0, 1), settings), 0.25, rel=1e-12))
    chi2 = mixture_divergences(c, settings)['chi2']
    checks.append(check_close('divergences_chi2', chi2, 0.1296, rel=0.0, abs_tol=1e-10))
    singular = ComponentList.from_probs([(1.0, 0.0), (0.0, 1.0)])
    checks.append(check_close('singular_pair_chi2', exact_chi2_bruteforce(singular, settings), 1.0, rel=1e-12))
    checks.append(check_close('bernoulli_pair_chi2', divergence('chi2', FiniteDistribution.bernoulli(0.2),
                                                                  FiniteDistribution.bernoulli(0.8)), 2.25, rel=1e-12))
    sweep = []
    for inst in random_instances(settings.random_instances, seed):
        sweep += build_mixture_matrix(inst).validate(settings.validation_tol, instance_delta_h2(inst))
        sweep += mixture_checks(inst, settings)
    return checks + _sweep('random_mixtures', sweep)


def permanent_suite(settings: Settings, seed: int) -> List[Check]:
    checks = series_checks(golden_instance(), settings)
    checks.append(check_close('ryser_ones', float(permanent_ryser(np.ones((4, 4)), settings)), 24.0, rel=1e-12))
    sweep: List[Check] = []
    for inst in random_instances(settings.random_instances, seed):
        value = exact_chi2_permanent(inst, settings)
        sweep.append(check_close('permanent_identity', value, exact_chi2_bruteforce(inst, settings),
                                 rel=0.0, abs_tol=1e-8 * (1 + value)))
    for inst in random_instances(max(1, settings.random_instances // 5), seed + 1, n_max=6, k_max=3):
        sweep += series_checks(inst, settings)
    for inst in random_instances(max(1, settings.random_instances // 10), seed + 2, n_max=8, k_max=3, n_min=7):
        mm = build_mixture_matrix(inst)
        interp, direct = s_series(mm, 'interpolation', settings), s_series(mm, 'direct', settings)
        sweep += [check_close(f'interpolation_vs_direct_{ell}', float(interp.s[ell]), float(direct.s[ell]),
                              rel=1e-5, abs_tol=1e-9) for ell in range(mm.n + 1)]
        sweep += spectral_series_bounds(mm, direct)['checks']
        sweep += permanent_sandwich(mm, settings).checks
    for i, inst in enumerate(random_instances(settings.mc_instances, seed + 3, n_max=4, k_max=3)):
        p, p_tilde = wick_factors(build_mixture_matrix(inst))
        for est in (wick_mc_check(p, settings.mc_samples, seed + 100 * i, settings=settings),
                    wick_mc_check(p_tilde, settings.mc_samples, seed + 100 * i + 1, ell=2, settings=settings)):
            sweep.append(check_leq('wick_z_score', est.z_score, 4.0, rel=0.0))
    return checks + _sweep('random_permanents', sweep)


def esp_suite(settings: Settings, seed: int) -> List[Check]:
    report = verify_esp_theorem(settings.esp_verify_n_max, settings.esp_trials, seed)
    checks = report.checks
    checks.append(check_leq('esp_violations', float(len(report.violations)), 0.0, rel=0.0))
    small = verify_esp_theorem(2, 0, seed)
    checks.append(check_close('n2_max_ratio', small.max_ratio_real, 1 / math.sqrt(10), rel=1e-10))
    complex_bound, relaxed, real = esp_bounds(4, 2)
    checks.append(check_leq('complex_bound_below_relaxation', complex_bound, relaxed, rel=1e-12))
    checks.append(check_close('real_bound_n4_l2', real, math.sqrt(60), rel=1e-12))
    e = esp_all(binary_support_vector(4, 2)).e
    checks.append(check_close('x2_e2', float(np.real(e[2])), -2.0, rel=1e-12))
    rng = np.random.default_rng(seed)
    for n in (3, 5, 8):
        checks += newton_checks(CenteredVector.normalize(rng.standard_normal(n)))
    a = rng.standard_normal((2, 5))
    a -= a.mean(axis=1, keepdims=True)
    checks.append(hadamard_check(a, settings).check)
    checks += _sweep('hadamard', random_hadamard_sweep(settings.hadamard_trials, seed + 1, settings=settings))
    return checks


def capacity_suite(settings: Settings, seed: int) -> List[Check]:
    checks: List[Check] = []
    for name, spec, upper in (('bernoulli', BernoulliInterval(0.25), 0.5),
                              ('gaussian', GaussianLocation(1.0), None),
                              ('gaussian_support', GaussianLocation(1.0, (-1.0, 0.0, 1.0)), None),
                              ('poisson_small', PoissonInterval(0.5), None),
                              ('poisson', PoissonInterval(4.0), None)):
        ff = family_functionals(spec, settings, seed)
        checks += [Check(f'{name}.{c.name}', c.lhs, c.rhs, c.relation, c.margin, c.passed) for c in ff.checks()]
        if upper is not None:
            checks.append(check_close(f'{name}_upper', ff.c_chi2_upper, upper, rel=1e-12))
    checks.append(check_close('gaussian_diameter', family_functionals(GaussianLocation(0.5), settings, seed).d_chi2,
                              math.expm1(1.0), rel=1e-12))
    checks.append(check_close('poisson_delta', family_functionals(PoissonInterval(2.0), settings, seed).delta_h2,
                              math.exp(2.0), rel=1e-8))
    for theta, other in ((0.0, 1.0), (-1.0, 2.0)):
        checks.append(check_close(f'gaussian_affinity_{theta}_{other}', gaussian_affinity(theta, other, settings.gh_nodes),
                                  math.exp(-(theta - other) ** 2 / 8), rel=0.0, abs_tol=1e-8))
    bern = ExplicitFinite((FiniteDistribution.bernoulli(0.25), FiniteDistribution.bernoulli(0.75)))
    checks.append(check_close('bernoulli_information', chi2_mutual_information(bern, [0.5, 0.5]), 0.25, rel=1e-12))
    estimate, _ = capacity_estimate(ExplicitFinite((FiniteDistribution.point_mass(0, 2), FiniteDistribution.point_mass(1, 2))),
                                    settings.capacity_restarts, seed, settings.capacity_iterations)
    checks.append(check_close('singular_pair_capacity', estimate, 1.0, rel=0.0, abs_tol=1e-6))
    checks.append(check_close('union_bound', union_capacity_bound([1.0, 1.0, 1.0]), 5.0, rel=0.0))
    sweep: List[Check] = []
    for inst in random_instances(max(1, settings.random_instances // 5), seed, n_max=5, k_max=4):
        family = ExplicitFinite(inst.components)
        sweep.append(check_close('empirical_prior_information', chi2_mutual_information(family, np.full(inst.n, 1 / inst.n)),
                                 instance_capacity(inst), rel=0.0, abs_tol=1e-10))
        sweep += family_functionals(family, settings, seed).checks()
    return checks + _sweep('random_families', sweep)


def bounds_suite(settings: Settings, seed: int) -> List[Check]:
    c = golden_instance()
    report = evaluate_instance(c, settings=settings)
    checks = report.checks
    checks.append(check_close('golden_lower_spectral', report.lower_spectral, 1 / math.sqrt(1 - 0.36 ** 2) - 1, rel=1e-10))
    checks.append(check_close('ub1_unit_capacity', thm_main_bounds(5, 1.0, 1.0, 0.0)[0], 40.0, rel=1e-12))
    checks.append(check_close('eb_risk_gap', eb_risk_gap_bound(1.0, 100, 0.36, 1.5625, 0.36),
                              math.sqrt(600 * 0.36 * (math.e * 1.5625) ** 1.08), rel=1e-10))
    checks.append(check_close('eb_quadratic', eb_quadratic_bound(1.0, 0.36, 0.36), 4 * 0.36 * 1.36, rel=1e-12))
    checks.append(check_leq('tightness_lower_finite', family_tightness_lower_bound(0.4, 1.5625), math.inf))
    checks += [Check(f'golden.{x.name}', x.lhs, x.rhs, x.relation, x.margin, x.passed)
               for x in lecam_pair_checks(*c.components)]
    checks += replication_trend(c, 4, settings).checks
    sweep: List[Check] = []
    for inst in random_instances(settings.random_instances, seed):
        sweep += evaluate_instance(inst, settings=settings).checks
        previous = -math.inf
        for k in range(1, inst.n + 1):
            result = definetti_bound_and_exact(inst, k, settings)
            sweep += result.checks
            sweep.append(check_leq('definetti_monotone', previous, result.exact, rel=1e-8, abs_tol=1e-12))
            previous = result.exact
        sweep += mutual_info_gap(inst, settings).checks
    rng = np.random.default_rng(seed)
    for _ in range(settings.random_instances):
        rest = ComponentList.random(rng, int(rng.integers(1, 5)), 2)
        p1, q1 = (FiniteDistribution.bernoulli(float(rng.uniform(0.05, 0.95))) for _ in range(2))
        sweep += two_mixtures_check(rest, p1, q1, settings).checks
        pair = [FiniteDistribution(row) for row in ComponentList.random(rng, 2, 3).matrix]
        sweep += lecam_pair_checks(*pair)
    for inst in random_instances(max(1, settings.random_instances // 2), seed + 1, n_max=5, k_max=3):
        sweep += greenshtein_ritov_check(inst.components, settings).checks
    for c_target, delta, n in ((2, 0.5, 2), (1, 0.3, None), (3, 0.4, 4), (4, 0.2, 4), (2, 0.9, 8)):
        wc = worst_case_matrix(c_target, delta, n, settings)
        sweep += wc.checks
        sweep += diagonal_block_lower_bound(wc.m, wc.n, delta).checks
    for c_target, delta in ((2, 0.25), (3, 0.5), (2, 1.0)):
        sweep += worst_case_family(c_target, delta, settings, seed).checks
    return checks + _sweep('random_bounds', sweep)


def gaussian_suite(settings: Settings, seed: int) -> List[Check]:
    checks: List[Check] = []
    for mu in (0.25, 0.5, 1.0, 2.0):
        checks.append(check_close(f'oracle_{mu}', toy_chi2_oracle_n2(mu, settings.gh_nodes),
                                  toy_chi2(2, mu, settings.gh_nodes).chi2_series, rel=0.0, abs_tol=1e-8))
    first, second = f_mu_forms(1.0, settings.gh_nodes)
    checks.append(check_close('f_forms', first, second, rel=0.0, abs_tol=1e-10))
    checks.append(check_close('g_4_2', g_ell(4, 2), -1 / 3, rel=1e-12))
    for mu in np.linspace(0.0, 5.0, 21):
        checks.append(check_leq(f'f_bound_{mu:.2f}', f_mu(float(mu), settings.gh_nodes), 1 - math.exp(-mu * mu),
                                rel=0.0, abs_tol=1e-10))
    n = 2
    while n <= settings.toy_n_max:
        result = toy_chi2(n, 1.0, settings.gh_nodes)
        checks += [Check(f'n{n}.{c.name}', c.lhs, c.rhs, c.relation, c.margin, c.passed) for c in result.checks]
        n *= 10
    checks += balanced_example_constant([0.1, 0.25, 0.5, 0.75, 1.0], 100, settings.gh_nodes)['checks']
    checks.append(check_close('moments_l0', moments_blowup(10, 1.0, 0), 10 * 9 / 2 / 81, rel=1e-12))
    for ell in (1, 2):
        checks += moments_slope(1.0, ell).checks
    checks.append(check_leq('b_exact', float(cumulant_sequence(4) != [1, 2, 16, 272, 7936]), 0.0, rel=0.0))
    crossing = cumulant_terms(30, 1.0, 10).crosses(1e6)
    checks.append(check_leq('cumulant_divergence', float(crossing if crossing is not None else math.inf), 30.0, rel=0.0))
    return checks


SUITES: Dict[str, SuiteFn] = {
    'mixtures': mixtures_suite,
    'permanent': permanent_suite,
    'esp': esp_suite,
    'capacity': capacity_suite,
    'bounds': bounds_suite,
    'gaussian_demo': gaussian_suite,
}


@dataclass
class SuiteOutcome:
    name: str
    checks: List[Check] = field(default_factory=list)
    error: Optional[str] = None


def _worker(jobs: 'queue.Queue[Tuple[int, str]]', lock: Lock, outcomes: List[Optional[SuiteOutcome]],
            settings: Settings, seed: int) -> None:
    while True:
        index, name = jobs.get()
        stdlog(f'Starting suite: {name}')
        start = time.monotonic()
        try:
            outcome = SuiteOutcome(name, SUITES[name](settings, seed + index))
        except PermixException as e:
            errlog(f'Suite {name} aborted: {e}')
            outcome = SuiteOutcome(name, error=f'{type(e).__name__}: {e}')
        except Exception as e:  # pylint: disable=broad-except
            # an unexpected failure must not leave the queue waiting on this item
            errlog(f'Suite {name} crashed: {e!r}')
            outcome = SuiteOutcome(name, error=f'{type(e).__name__}: {e}')
        with lock:
            outcomes[index] = outcome
        stdlog(f'Leaving suite: {name} ({time.monotonic() - start:.1f}s)')
        jobs.task_done()


def run_suites(settings: Settings, seed: int, names: Optional[Sequence[str]] = None,
               threads: int = 1) -> List[SuiteOutcome]:
    '''Run the named suites (all by default) on a worker pool; outcomes come back in suite order'''
    names = list(names) if names is not None else list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ConfigError(f'Unknown suites {unknown}, expected some of {list(SUITES)}')
    outcomes: List[Optional[SuiteOutcome]] = [None] * len(names)
    lock = Lock()
    jobs: 'queue.Queue[Tuple[int, str]]' = queue.Queue()
    for _ in range(max(1, threads)):
        t = Thread(target=_worker, args=(jobs, lock, outcomes, settings, seed), daemon=True)
        t.start()
    for index, name in enumerate(names):
        jobs.put((index, name))
    jobs.join()
    return [o for o in outcomes if o is not None]


def suite_summary(outcomes: Sequence[SuiteOutcome]) -> Dict[str, Any]:
    return {o.name: {'checks': len(o.checks), 'failed': sum(not c.passed for c in o.checks), 'error': o.error}
            for o in outcomes}

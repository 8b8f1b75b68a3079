#!/usr/bin/env python3
# -*- coding: utf-8 -*-
'''
Command line entry point.

Every subcommand builds a Report, writes it to stdout (or --out) and maps the
outcome to an exit code: 0 when every check holds, 1 when a check fails,
2 on bad input or usage.
'''

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .bounds import (definetti_bound_and_exact, diagonal_block_lower_bound, evaluate_instance,
                     greenshtein_ritov_check, mutual_info_gap, two_mixtures_check, worst_case_family,
                     worst_case_matrix)
from .capacity import ExplicitFinite, capacity_estimate, family_functionals, load_family
from .default import Settings, get_settings
from .default.exceptions import BoundViolation, CapExceeded, InvalidDistribution, PermixException
from .esp import esp_bounds, verify_esp_theorem
from .gaussian_demo import cumulant_terms, moments_slope, toy_chi2, toy_chi2_oracle_n2
from .mixtures import (ComponentList, FiniteDistribution, build_mixture_matrix, exact_chi2_bruteforce,
                       instance_capacity, instance_d_chi2, instance_delta_h2, load_components,
                       mixture_checks, mixture_divergences)
from .permanent import (METHODS, exact_chi2_permanent, permanent_sandwich, s_series, spectral_series_bounds,
                        wick_factors, wick_mc_check)
from .report import Report, check_close, check_leq
from .suites import SUITES, run_suites, suite_summary

logger = logging.getLogger('Permix')

Handler = Callable[[argparse.Namespace, Settings], Report]

COVERING_POINTER = ('The covering-number bound on the mutual information gap is not evaluated; '
                    'it needs metric entropy estimates of the parameter space.')


def _components(args: argparse.Namespace) -> ComponentList:
    if not args.components:
        raise InvalidDistribution('This command needs --components FILE')
    return load_components(args.components)


def _inputs(args: argparse.Namespace, **extra: Any) -> Dict[str, Any]:
    skip = {'func', 'out', 'format', 'threads'}
    inputs = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    inputs.update(extra)
    return inputs


def _enumerable(c: ComponentList, settings: Settings) -> bool:
    return c.n <= settings.brute_force_n and c.alphabet_size ** c.n <= settings.enumeration_cells


def cmd_divergence(args: argparse.Namespace, settings: Settings) -> Report:
    c = _components(args)
    report = Report('divergence', _inputs(args, instance=c.to_dict()), args.seed)
    mm = build_mixture_matrix(c)
    report.results.update({'n': c.n, 'alphabet_size': c.alphabet_size, 'lambda2': mm.lambda2,
                           'capacity': instance_capacity(c), 'delta_h2': instance_delta_h2(c),
                           'd_chi2': instance_d_chi2(c)})
    permanent = exact_chi2_permanent(c, settings) if c.n <= settings.permanent_n else None
    report.results['chi2_permanent'] = permanent
    if _enumerable(c, settings):
        divergences = mixture_divergences(c, settings)
        report.results['divergences'] = divergences
        report.table = [{'divergence': k, 'value': v} for k, v in divergences.items()]
        if permanent is not None:
            report.extend([check_close('permanent_vs_bruteforce', permanent, exact_chi2_bruteforce(c, settings),
                                       rel=settings.comparison_tol, abs_tol=settings.comparison_tol)])
        report.extend(mixture_checks(c, settings), 'mixture.')
    else:
        logger.info(f'{c.alphabet_size}^{c.n} outcomes is above the enumeration cap, skipping joint divergences')
    report.extend(mm.validate(settings.validation_tol, instance_delta_h2(c)), 'matrix.')
    return report


def cmd_bounds_evaluate(args: argparse.Namespace, settings: Settings) -> Report:
    c = _components(args)
    report = Report('bounds evaluate', _inputs(args, instance=c.to_dict()), args.seed)
    family = None
    if args.family:
        family = family_functionals(load_family(args.family), settings, args.seed)
        report.results['family'] = family
        report.extend(family.checks(), 'family.')
    user = tuple(args.user) if args.user else None
    bound = evaluate_instance(c, family=family, user=user, settings=settings)
    report.results['bounds'] = bound
    report.results['best'] = bound.best
    report.table = [{'n': bound.n, 'provenance': bound.provenance, 'c': bound.c, 'delta_h2': bound.delta_h2,
                     'd_chi2': bound.d_chi2, 'exact_chi2': bound.exact_chi2, 'ub1': bound.ub1, 'ub2': bound.ub2,
                     'ub3': bound.ub3, 'lower_spectral': bound.lower_spectral}]
    report.extend(bound.checks)
    return report


def cmd_series(args: argparse.Namespace, settings: Settings) -> Report:
    c = _components(args)
    report = Report('series', _inputs(args, instance=c.to_dict()), args.seed)
    mm = build_mixture_matrix(c)
    series = s_series(mm, args.method, settings)
    chi2 = exact_chi2_permanent(c, settings) if c.n <= settings.permanent_n else None
    spectral = spectral_series_bounds(mm, series)
    sandwich = permanent_sandwich(mm, settings)
    report.results.update({'series': series, 'chi2': chi2, 'entire_sum_bound': spectral['entire_sum'],
                           'per_degree_bound': spectral['per_degree'], 'sandwich': sandwich})
    report.table = [{'ell': ell, 's': series.s[ell],
                     'r': None if series.r is None else series.r[ell],
                     't': None if series.t is None else series.t[ell],
                     'per_degree_bound': spectral['per_degree'][ell]} for ell in range(c.n + 1)]
    report.extend(series.checks(chi2))
    report.extend(spectral['checks'], 'spectral.')
    report.extend(sandwich.checks, 'sandwich.')
    if args.wick_samples:
        root, reduced = wick_factors(mm)
        full = wick_mc_check(root, args.wick_samples, args.seed, settings=settings)
        report.results['wick'] = {'permanent': full}
        report.extend([check_leq('wick_permanent_z', full.z_score, 4.0, rel=0.0)])
        if c.n >= 2:
            degree = wick_mc_check(reduced, args.wick_samples, args.seed + 1, ell=2, settings=settings)
            report.results['wick']['s2'] = degree
            report.extend([check_leq('wick_s2_z', degree.z_score, 4.0, rel=0.0)])
    return report


def cmd_esp_verify(args: argparse.Namespace, settings: Settings) -> Report:
    n_max = args.n_max if args.n_max is not None else settings.esp_verify_n_max
    trials = args.trials if args.trials is not None else settings.esp_trials
    result = verify_esp_theorem(n_max, trials, args.seed)
    report = Report('esp verify', _inputs(args, n_max=n_max, trials=trials), args.seed)
    report.results.update(result.to_dict())
    report.table = [{'n': int(key.split(',')[0]), 'ell': int(key.split(',')[1]), **cell}
                    for key, cell in result.per_n_ell.items()]
    report.extend(result.checks)
    return report


def cmd_esp_bounds(args: argparse.Namespace, settings: Settings) -> Report:
    if not 1 <= args.n <= settings.esp_n_max:
        raise CapExceeded(f'n must lie in [1, {settings.esp_n_max}], got {args.n}')
    report = Report('esp bounds', _inputs(args), args.seed)
    rows = []
    for ell in range(args.n + 1):
        complex_bound, relaxed, real = esp_bounds(args.n, ell)
        rows.append({'ell': ell, 'complex': complex_bound, 'relaxed': relaxed, 'real': real})
    report.results['bounds'] = rows
    report.table = rows
    report.extend([check_leq(f'complex_below_relaxed_{r["ell"]}', r['complex'], r['relaxed']) for r in rows])
    return report


def cmd_capacity_functionals(args: argparse.Namespace, settings: Settings) -> Report:
    if not args.family:
        raise InvalidDistribution('This command needs --family FILE')
    functionals = family_functionals(load_family(args.family), settings, args.seed)
    report = Report('capacity functionals', _inputs(args), args.seed)
    report.results.update(functionals.to_dict())
    report.table = [{k: v for k, v in functionals.to_dict().items() if k != 'notes'}]
    report.extend(functionals.checks())
    return report


def cmd_capacity_estimate(args: argparse.Namespace, settings: Settings) -> Report:
    if args.family:
        family = load_family(args.family)
        if not isinstance(family, ExplicitFinite):
            raise InvalidDistribution('capacity estimate needs an explicit family, use capacity functionals otherwise')
    else:
        family = ExplicitFinite(_components(args).components)
    value, prior = capacity_estimate(family, settings.capacity_restarts, args.seed, settings.capacity_iterations)
    report = Report('capacity estimate', _inputs(args), args.seed)
    size = len(family.distributions)
    report.results.update({'estimate': value, 'prior': prior, 'size': size})
    report.table = [{'index': i, 'prior': w} for i, w in enumerate(prior)]
    report.extend([check_leq('estimate_below_size', value, size - 1, rel=0.0, abs_tol=1e-10)])
    return report


def cmd_definetti(args: argparse.Namespace, settings: Settings) -> Report:
    c = _components(args)
    report = Report('definetti', _inputs(args, instance=c.to_dict()), args.seed)
    ks = [args.k] if args.k is not None else list(range(1, c.n + 1))
    rows = []
    for k in ks:
        result = definetti_bound_and_exact(c, k, settings)
        rows.append(result.to_dict())
        report.extend(result.checks, f'k{k}.')
    report.results['marginals'] = rows
    report.table = rows
    return report


def cmd_two_mixtures(args: argparse.Namespace, settings: Settings) -> Report:
    if not args.components:
        raise InvalidDistribution('This command needs --components FILE with "components", "p1" and "q1"')
    with Path(args.components).open() as f:
        data = json.load(f)
    if 'p1' not in data or 'q1' not in data:
        raise InvalidDistribution('The components file needs "p1" and "q1" entries')
    rest = ComponentList.from_dict(data)
    p1 = FiniteDistribution(np.asarray(data['p1'], dtype=float))
    q1 = FiniteDistribution(np.asarray(data['q1'], dtype=float))
    result = two_mixtures_check(rest, p1, q1, settings)
    report = Report('two-mixtures', _inputs(args, instance=data), args.seed)
    report.results.update(result.to_dict())
    report.table = [result.to_dict()]
    report.extend(result.checks)
    return report


def cmd_mutual_info(args: argparse.Namespace, settings: Settings) -> Report:
    c = _components(args)
    result = mutual_info_gap(c, settings)
    logger.info(COVERING_POINTER)
    report = Report('mutual-info', _inputs(args, instance=c.to_dict()), args.seed)
    report.results.update(result.to_dict())
    report.results['covering_number_bound'] = COVERING_POINTER
    report.table = [result.to_dict()]
    report.extend(result.checks)
    if 2 <= c.n <= 6:
        loo = greenshtein_ritov_check(c.components, settings)
        report.results['leave_one_out'] = loo
        report.extend(loo.checks, 'leave_one_out.')
    return report


def cmd_worst_case_matrix(args: argparse.Namespace, settings: Settings) -> Report:
    construction = worst_case_matrix(args.c, args.delta, args.n, settings)
    block = diagonal_block_lower_bound(construction.m, construction.n, args.delta)
    report = Report('worst-case matrix', _inputs(args), args.seed)
    report.results.update(construction.to_dict())
    report.results['diagonal_block_bound'] = block
    report.table = [{'index': i, 'eigenvalue': v, 'expected': e}
                    for i, (v, e) in enumerate(zip(construction.matrix.eigenvalues, construction.expected_spectrum))]
    report.extend(construction.checks)
    report.extend(block.checks, 'diagonal_block.')
    return report


def cmd_worst_case_family(args: argparse.Namespace, settings: Settings) -> Report:
    construction = worst_case_family(args.c, args.delta, settings, args.seed)
    report = Report('worst-case family', _inputs(args), args.seed)
    report.results.update(construction.to_dict())
    report.table = [{'index': i, **{f'p{j}': p for j, p in enumerate(row)}}
                    for i, row in enumerate(construction.family.matrix)]
    report.extend(construction.checks)
    return report


def cmd_toy_gaussian(args: argparse.Namespace, settings: Settings) -> Report:
    nodes = args.nodes or settings.gh_nodes
    result = toy_chi2(args.n, args.mu, nodes)
    report = Report('toy gaussian', _inputs(args, nodes=nodes), args.seed)
    report.results.update(result.to_dict())
    if result.g is not None:
        report.table = [{'ell': ell, 'g': g} for ell, g in enumerate(result.g)]
    else:
        report.table = [{'n': args.n, 'mu': args.mu, 'chi2': result.chi2_series, 'cap': result.geometric_cap}]
    report.extend(result.checks)
    if args.n == 2:
        oracle = toy_chi2_oracle_n2(args.mu, nodes)
        report.results['oracle'] = oracle
        report.extend([check_close('series_vs_quadrature', result.chi2_series, oracle, rel=0.0, abs_tol=1e-8)])
    return report


def _sweep(spec: Optional[str]) -> Optional[List[int]]:
    '''"a:b" is the powers of two 2^a..2^b'''
    if not spec:
        return None
    try:
        low, high = (int(v) for v in spec.split(':'))
    except ValueError as e:
        raise InvalidDistribution(f'--n-sweep expects a:b, got {spec!r}') from e
    if not 1 <= low <= high <= 40:
        raise InvalidDistribution(f'--n-sweep needs 1 <= a <= b <= 40, got {spec!r}')
    return [2 ** k for k in range(low, high + 1)]


def cmd_demo_moments(args: argparse.Namespace, settings: Settings) -> Report:
    sweep = moments_slope(args.mu, args.ell, _sweep(args.n_sweep))
    report = Report('demo moments', _inputs(args), args.seed)
    report.results.update(sweep.to_dict())
    report.table = sweep.table()
    if args.ell > 0:
        report.extend(sweep.checks)
    return report


def cmd_demo_cumulants(args: argparse.Namespace, settings: Settings) -> Report:
    cumulants = cumulant_terms(args.l_max, args.mu, args.n)
    report = Report('demo cumulants', _inputs(args), args.seed)
    report.results.update(cumulants.to_dict())
    report.results['crosses_1e6'] = cumulants.crosses(1e6)
    report.table = cumulants.table()
    return report


def cmd_verify_all(args: argparse.Namespace, settings: Settings) -> Report:
    outcomes = run_suites(settings, args.seed, args.suite, args.threads)
    report = Report('verify-all', _inputs(args, budget=settings.budget), args.seed)
    report.results['suites'] = suite_summary(outcomes)
    report.table = [{'suite': name, **row} for name, row in report.results['suites'].items()]
    for outcome in outcomes:
        report.extend(outcome.checks, f'{outcome.name}.')
    errors = [o.name for o in outcomes if o.error]
    if errors:
        report.results['aborted'] = errors
    return report


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--components', help='JSON file with a "components" list of probability vectors')
    parser.add_argument('--family', help='JSON file describing a parameter family')
    parser.add_argument('--seed', type=int, default=0, help='Seed for every random path')
    parser.add_argument('--out', help='Write the report there instead of stdout')
    parser.add_argument('--format', choices=('json', 'csv'), default='json')
    parser.add_argument('--threads', type=int, default=1, help='Worker threads for independent suite items')
    parser.add_argument('--budget', choices=('small', 'medium', 'large'), default=None,
                        help='Size preset, defaults to $PERMIX_BUDGET then the config')


def _command(sub: Any, name: str, func: Handler, help_text: str) -> argparse.ArgumentParser:
    parser: argparse.ArgumentParser = sub.add_parser(name, help=help_text)
    _common(parser)
    parser.set_defaults(func=func)
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='permix', description='Permutation mixtures against i.i.d. mixtures.')
    sub = parser.add_subparsers(dest='command', required=True)

    _command(sub, 'divergence', cmd_divergence, 'Exact divergences between the two mixtures')

    bounds = sub.add_parser('bounds', help='Bound evaluators').add_subparsers(dest='action', required=True)
    evaluate = _command(bounds, 'evaluate', cmd_bounds_evaluate, 'Upper bounds next to the exact value')
    evaluate.add_argument('--user', type=float, nargs=3, metavar=('C', 'DELTA', 'D'),
                          help='Use these functionals instead of the instance ones')

    series = _command(sub, 'series', cmd_series, 'S, R and T series of the mixture matrix')
    series.add_argument('--method', choices=METHODS, default='interpolation')
    series.add_argument('--wick-samples', type=int, default=0, help='Also run the Wick Monte Carlo check')

    esp = sub.add_parser('esp', help='Elementary symmetric polynomial bounds').add_subparsers(dest='action', required=True)
    verify = _command(esp, 'verify', cmd_esp_verify, 'Exhaustive real and random complex check')
    verify.add_argument('--n-max', type=int, default=None)
    verify.add_argument('--trials', type=int, default=None)
    esp_table = _command(esp, 'bounds', cmd_esp_bounds, 'Bounds on |e_l| for one n')
    esp_table.add_argument('--n', type=int, required=True)

    capacity = sub.add_parser('capacity', help='Family functionals').add_subparsers(dest='action', required=True)
    _command(capacity, 'functionals', cmd_capacity_functionals, 'Capacity, diameters and singularity of a family')
    _command(capacity, 'estimate', cmd_capacity_estimate, 'Multi-start estimate of the chi2 capacity')

    definetti = _command(sub, 'definetti', cmd_definetti, 'k-marginal chi2 with its bound')
    definetti.add_argument('--k', type=int, default=None, help='Marginal size, every k when omitted')

    _command(sub, 'two-mixtures', cmd_two_mixtures, 'Two permutation mixtures differing in one component')
    _command(sub, 'mutual-info', cmd_mutual_info, 'Mutual information gap and leave-one-out check')

    worst = sub.add_parser('worst-case', help='Worst-case constructions').add_subparsers(dest='action', required=True)
    matrix = _command(worst, 'matrix', cmd_worst_case_matrix, 'Kronecker worst-case mixture matrix')
    matrix.add_argument('--c', type=float, required=True)
    matrix.add_argument('--delta', type=float, required=True)
    matrix.add_argument('--n', type=int, default=None, help='Block size, derived from delta when omitted')
    family = _command(worst, 'family', cmd_worst_case_family, 'Worst-case family of point-mass mixtures')
    family.add_argument('--c', type=float, required=True)
    family.add_argument('--delta', type=float, required=True)

    toy = sub.add_parser('toy', help='Toy models').add_subparsers(dest='action', required=True)
    gaussian = _command(toy, 'gaussian', cmd_toy_gaussian, 'Balanced Gaussian location toy model')
    gaussian.add_argument('--mu', type=float, required=True)
    gaussian.add_argument('--n', type=int, required=True)
    gaussian.add_argument('--nodes', type=int, default=None)

    demo = sub.add_parser('demo', help='Failure demonstrations').add_subparsers(dest='action', required=True)
    moments = _command(demo, 'moments', cmd_demo_moments, 'Moment-matching term growth in n')
    moments.add_argument('--mu', type=float, required=True)
    moments.add_argument('--ell', type=int, required=True)
    moments.add_argument('--n-sweep', default=None, help='a:b for n = 2^a..2^b')
    cumulants = _command(demo, 'cumulants', cmd_demo_cumulants, 'Cumulant series divergence')
    cumulants.add_argument('--l-max', type=int, default=30)
    cumulants.add_argument('--mu', type=float, default=1.0)
    cumulants.add_argument('--n', type=int, default=10)

    everything = _command(sub, 'verify-all', cmd_verify_all, 'Run every invariant suite')
    everything.add_argument('--suite', action='append', choices=list(SUITES), default=None,
                            help='Restrict to this suite, may be repeated')
    return parser


def _write(report: Report, fmt: str, out: Optional[str]) -> None:
    text = report.to_csv() if fmt == 'csv' else report.to_json()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    if args.threads < 1:
        logger.error('--threads must be positive')
        return 2
    start = time.monotonic()
    try:
        settings = get_settings(args.budget, threads=args.threads)
        report = args.func(args, settings)
        _write(report, args.format, args.out)
    except BoundViolation as e:
        logger.error(f'Bound violated: {e}')
        return 1
    except (PermixException, json.JSONDecodeError, OSError, ValueError, KeyError) as e:
        logger.error(f'{type(e).__name__}: {e}')
        return 2
    finally:
        logger.info(f'{" ".join(argv or sys.argv[1:])} took {time.monotonic() - start:.2f}s')
    failed = [c.name for c in report.checks if not c.passed]
    if failed:
        logger.warning(f'{len(failed)} check(s) failed: {", ".join(failed[:10])}')
        return 1
    if report.results.get('aborted'):
        logger.error(f'Suites aborted: {report.results["aborted"]}')
        return 2
    logger.info(f'{report.command}: {len(report.checks)} check(s) passed')
    return 0

import pytest

from permix.default.exceptions import ConfigError
from permix.suites import SUITES, golden_instance, random_instances, run_suites, suite_summary


def test_random_instances_are_seeded():
    first = random_instances(4, seed=9)
    second = random_instances(4, seed=9)
    assert [c.matrix.tolist() for c in first] == [c.matrix.tolist() for c in second]
    assert all(2 <= c.n <= 5 and 2 <= c.alphabet_size <= 4 for c in first)
    assert golden_instance().n == 2


@pytest.mark.parametrize('name', list(SUITES))
def test_suite_passes(quick_settings, name):
    failed = [c.name for c in SUITES[name](quick_settings, 7) if not c.passed]
    assert not failed


def test_threads_keep_order(quick_settings):
    names = ['esp', 'mixtures']
    outcomes = run_suites(quick_settings, 7, names, threads=2)
    assert [o.name for o in outcomes] == names
    assert all(o.error is None for o in outcomes)
    summary = suite_summary(outcomes)
    assert summary['esp']['failed'] == 0


def test_unknown_suite(quick_settings):
    with pytest.raises(ConfigError):
        run_suites(quick_settings, 0, ['nope'])

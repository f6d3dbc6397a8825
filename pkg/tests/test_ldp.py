import itertools
import math

import numpy as np
import pytest

from pressurelab.config import load_canned
from pressurelab.errors import ValidationError
from pressurelab.ldp import (
    dual_rate_bound,
    equilibrium_mean,
    fit_rate,
    golden_section_max,
    legendre_rate,
    mean_cycle_range,
    nu_mass,
    run_ldp_experiment,
)
from pressurelab.separated import maximal_separated_set
from pressurelab.shiftspace import LocallyConstantPotential


@pytest.fixture
def indicator0(full2):
    return LocallyConstantPotential.from_function(full2, 1, lambda w: float(w[0] == 0))


def _binomial_tail(n, c):
    # Each word of length n is one point; zeros counted directly on the word.
    hits = sum(1 for w in itertools.product((0, 1), repeat=n) if abs(w.count(0) / n - 0.5) >= c)
    return hits / 2**n


def test_binomial_brute_force(full2, indicator0):
    zero = LocallyConstantPotential.constant(full2)
    for n in (4, 8, 10):
        E = maximal_separated_set(full2, n, 0.6)
        assert nu_mass(full2, zero, E, indicator0, 0.25, 0.5) == pytest.approx(_binomial_tail(n, 0.25), abs=1e-12)
    E = maximal_separated_set(full2, 8, 0.6)
    assert nu_mass(full2, zero, E, indicator0, 0.25, 0.5) == pytest.approx(2 * 37 / 256, abs=1e-12)


def test_nu_mass_limits(full2, indicator0):
    zero = LocallyConstantPotential.constant(full2)
    E = maximal_separated_set(full2, 8, 0.6)
    assert nu_mass(full2, zero, E, indicator0, 3.0, 0.5) == 0.0
    # Centre off the lattice j/8, so nothing sits exactly on it.
    assert nu_mass(full2, zero, E, indicator0, 1e-9, 0.5 + 1 / 32) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        nu_mass(full2, zero, E, indicator0, 0.0, 0.5)


def test_nu_mass_monotone_in_c(golden):
    cfg = load_canned("golden_mean")
    f, g = cfg.potential("depth2"), cfg.potential("indicator1")
    E = maximal_separated_set(golden, 12, 0.6)
    center = equilibrium_mean(golden, f, g)
    masses = [nu_mass(golden, f, E, g, c, center) for c in np.linspace(0.01, 0.8, 40)]
    assert all(b <= a + 1e-15 for a, b in zip(masses, masses[1:]))


def test_mean_cycle_range(full2, golden, indicator0):
    assert mean_cycle_range(full2, indicator0) == pytest.approx((0.0, 1.0))
    ind1 = LocallyConstantPotential.from_function(golden, 1, lambda w: float(w[0] == 1))
    assert mean_cycle_range(golden, ind1) == pytest.approx((0.0, 0.5))


def test_dual_examples(full2, golden, indicator0):
    zero = LocallyConstantPotential.constant(full2)
    assert dual_rate_bound(full2, zero, indicator0, 0.5, 0.5) == pytest.approx(math.log(2), abs=1e-12)
    assert math.isinf(dual_rate_bound(full2, zero, indicator0, 0.75, 0.5))
    assert legendre_rate(full2, zero, indicator0, 0.5) == pytest.approx(0.0, abs=1e-12)
    # Cramer rate of a fair coin at 1/4.
    kl = 0.25 * math.log(0.25 / 0.5) + 0.75 * math.log(0.75 / 0.5)
    assert dual_rate_bound(full2, zero, indicator0, 0.25, 0.5) == pytest.approx(kl, abs=1e-9)
    ind1 = LocallyConstantPotential.from_function(golden, 1, lambda w: float(w[0] == 1))
    zero_g = LocallyConstantPotential.constant(golden)
    assert math.isinf(legendre_rate(golden, zero_g, ind1, 0.6))


def test_golden_section():
    assert golden_section_max(lambda x: -(x - 1.3) ** 2, -50, 50) == pytest.approx(0.0, abs=1e-15)
    assert golden_section_max(lambda x: x, -50, 50) == 50.0


def test_fit_rules():
    assert fit_rate([(8, 0.0), (12, 0.0)]) == math.inf
    assert fit_rate([(10, math.exp(-3.0))]) == pytest.approx(0.3)
    masses = [(n, 0.7 * math.exp(-0.2 * n)) for n in (8, 12, 16)]
    assert fit_rate(masses) == pytest.approx(0.2)
    assert fit_rate([(8, 0.0), (12, math.exp(-2.4))]) == pytest.approx(0.2)


def test_canned_full_shift_experiment(full2, indicator0):
    zero = LocallyConstantPotential.constant(full2)
    ex = run_ldp_experiment(full2, zero, indicator0, 0.25, [8, 12, 16, 20])
    assert ex.center == pytest.approx(0.5)
    assert ex.passed
    assert ex.fitted_rate >= ex.dual_bound - 0.1
    logs = [math.log(m) for _, m in ex.masses]
    assert all(b < a for a, b in zip(logs, logs[1:]))


def test_huge_c_passes(full2, indicator0):
    ex = run_ldp_experiment(full2, LocallyConstantPotential.constant(full2), indicator0, 5.0, [8, 12])
    assert ex.masses == [(8, 0.0), (12, 0.0)]
    assert ex.passed and ex.fitted_rate == math.inf


def test_singleton_n_list(full2, indicator0):
    ex = run_ldp_experiment(full2, LocallyConstantPotential.constant(full2), indicator0, 0.25, [10])
    ((n, m),) = ex.masses
    assert ex.fitted_rate == pytest.approx(-math.log(m) / n)


def test_rejects_bad_n_list(full2, indicator0):
    zero = LocallyConstantPotential.constant(full2)
    with pytest.raises(ValidationError):
        run_ldp_experiment(full2, zero, indicator0, 0.25, [12, 8])
    with pytest.raises(ValidationError):
        run_ldp_experiment(full2, zero, indicator0, 0.25, [])


@pytest.mark.parametrize("name", ["full_shift", "golden_mean"])
def test_canned_experiments(name):
    cfg = load_canned(name)
    s = cfg.settings["ldp"]
    ex = run_ldp_experiment(
        cfg.system, cfg.potential(s["potential"]), cfg.potential(s["statistic"]), s["c"], s["n_list"]
    )
    assert ex.passed
    logs = [math.log(m) for n, m in ex.masses if n >= 8]
    assert all(b < a for a, b in zip(logs, logs[1:]))

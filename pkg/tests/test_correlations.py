import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ergokit import correlations as corr
from ergokit import qmath
from ergokit.dissipation import steady_state, thermal_c
from ergokit.ergotropy import bound_ergotropy, ergotropy, passive_state
from ergokit.errors import BetaZero, EntropyMismatch, NotZeroErgotropy
from ergokit.states import (
    bell_state,
    locally_thermal_xstate_sampler,
    pure_state,
    qubit_hamiltonian,
    random_density_matrix,
    thermal_state,
    two_qubit_hamiltonian,
)

H = two_qubit_hamiltonian()
LN2 = math.log(2)
seeds = st.integers(0, 2**32 - 1)
CLASSICAL = np.diag([0.5, 0, 0, 0.5])


def thermal_product(beta):
    g = thermal_state(qubit_hamiltonian(), beta)
    return np.kron(g, g)


def test_entropy_examples():
    assert corr.von_neumann_entropy(bell_state("psi-")) == pytest.approx(0, abs=1e-12)
    assert corr.von_neumann_entropy(np.eye(3) / 3) == pytest.approx(math.log(3))
    assert corr.von_neumann_entropy(np.diag([0.5, 0.5, 0, 0])) == pytest.approx(LN2)


def test_relative_entropy_examples():
    assert corr.relative_entropy(np.diag([1.0, 0]), np.eye(2) / 2) == pytest.approx(LN2)
    assert corr.relative_entropy(CLASSICAL, CLASSICAL) == pytest.approx(0, abs=1e-12)
    assert corr.relative_entropy(np.diag([1.0, 0]), np.diag([0, 1.0])) == math.inf


@given(seeds)
def test_klein_inequality(seed):
    a = random_density_matrix(3, seed=seed).matrix
    b = random_density_matrix(3, seed=seed + 1).matrix
    assert corr.relative_entropy(a, b) >= -1e-12


def test_mutual_information_examples():
    assert corr.mutual_information(thermal_product(0.4)) == pytest.approx(0, abs=1e-12)
    assert corr.mutual_information(bell_state("psi+")) == pytest.approx(2 * LN2)
    assert corr.mutual_information(CLASSICAL) == pytest.approx(LN2)
    rho = random_density_matrix(4, seed=5).matrix
    assert corr.multipartite_mutual_information(rho, (2, 2)) == corr.mutual_information(rho)
    ghz = pure_state([1, 0, 0, 0, 0, 0, 0, 1])
    assert corr.multipartite_mutual_information(ghz.matrix, (2, 2, 2)) == pytest.approx(3 * LN2)
    prod = np.kron(np.kron(np.diag([0.3, 0.7]), np.eye(2) / 2), np.diag([1.0, 0]))
    assert corr.multipartite_mutual_information(prod, (2, 2, 2)) == pytest.approx(0, abs=1e-12)


@given(seeds)
def test_mutual_information_is_relative_entropy_to_product(seed):
    rho = random_density_matrix(4, seed=seed).matrix
    info = corr.mutual_information(rho)
    assert info >= -1e-12
    assert info == pytest.approx(corr.relative_entropy(rho, corr.product_of_marginals(rho)), abs=1e-9)


def test_main_identity_thermal_product():
    r = corr.main_identity(thermal_product(0.8), H)
    assert r.beta == pytest.approx(0.8)
    assert max(r.mutual_information, r.ergotropy, r.relative_entropy_passive_to_product) < 1e-10


def test_main_identity_bell_degenerate():
    r = corr.main_identity(bell_state("psi+"), H)
    assert r.beta == 0.0 and not r.identity_applicable
    assert r.ergotropy == pytest.approx(1.0)
    assert r.relative_entropy_passive_to_product == pytest.approx(2 * LN2)
    assert r.residual < 1e-10


def test_main_identity_steady_state():
    r = corr.main_identity(steady_state(0.2, 1.0), H)
    assert r.residual <= 1e-8
    assert r.ergotropy_via_identity == pytest.approx(r.ergotropy, abs=1e-8)


@given(seeds)
def test_main_identity_property(seed):
    rho = locally_thermal_xstate_sampler(seed, allow_negative_beta=True)
    assert corr.main_identity(rho, H).residual <= 1e-8


@given(seeds)
def test_inequalities_property(seed):
    basic, tight = corr.inverse_landauer_check(locally_thermal_xstate_sampler(seed), H)
    assert basic >= -1e-9 and tight >= -1e-9
    assert tight <= basic + 1e-12


def test_landauer_saturation_ground_state():
    basic, tight = corr.inverse_landauer_check(steady_state(1.0, 10.0), H)
    assert tight <= 1e-6
    assert corr.inverse_landauer_check(thermal_product(1.0), H) == pytest.approx((0, 0), abs=1e-10)


def test_bound_identity():
    assert corr.bound_identity(steady_state(0.5, 1.0), H) <= 1e-8
    assert corr.bound_identity(thermal_product(1.3), H) <= 1e-10
    with pytest.raises(BetaZero):
        corr.bound_identity(bell_state("psi+"), H)


@given(seeds)
def test_bound_identity_property(seed):
    assert corr.bound_identity(locally_thermal_xstate_sampler(seed), H) <= 1e-8


@given(seeds, st.floats(-3, 3))
def test_equal_entropy_identity(seed, beta):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(4, seed=seed).matrix
    p, _ = passive_state(rho, H.matrix)
    v = qmath.random_unitary(4, rng)
    assert corr.equal_entropy_identity(rho, rho, H.matrix, beta) == 0
    assert corr.equal_entropy_identity(rho, p, H.matrix, beta) <= 1e-8
    assert corr.equal_entropy_identity(rho, v @ rho @ v.conj().T, H.matrix, beta) <= 1e-8


def test_equal_entropy_identity_mismatch():
    with pytest.raises(EntropyMismatch):
        corr.equal_entropy_identity(np.diag([1.0, 0, 0, 0]), np.eye(4) / 4, H.matrix, 1.0)


def test_bath_assisted_work_gap():
    rho = steady_state(0.3, 1.0)
    beta = corr.common_beta(rho.matrix, H)
    gap = corr.bath_assisted_work(rho, H, beta) - ergotropy(rho, H.matrix)
    p, _ = passive_state(rho, H.matrix)
    g = thermal_state(H.matrix, beta)
    assert gap == pytest.approx(corr.relative_entropy(p, g) / beta, abs=1e-9)


def discord_oracle(rho, n=512):
    _, _, vals = corr.conditional_entropy_grid(rho, n, n)
    s_a = corr.von_neumann_entropy(qmath.partial_trace(rho, (2, 2), 0))
    holevo = s_a - vals.min()
    return corr.mutual_information(rho) - holevo, holevo


def test_discord_bell_vs_fine_grid():
    rho = bell_state("psi+").matrix
    d = corr.discord(rho)
    d_ref, j_ref = discord_oracle(rho)
    assert d.discord == pytest.approx(LN2, abs=1e-4)
    assert d.holevo == pytest.approx(LN2, abs=1e-4)
    assert d.discord == pytest.approx(d_ref, abs=1e-4)
    assert d.holevo == pytest.approx(j_ref, abs=1e-4)


def test_discord_classical_and_product():
    d = corr.discord(CLASSICAL)
    assert d.discord <= 1e-5
    assert d.holevo == pytest.approx(LN2, abs=1e-6)
    assert corr.discord(thermal_product(0.5)).discord <= 1e-8


def test_discord_not_above_fine_grid_on_random_state():
    rho = random_density_matrix(4, seed=11).matrix
    d_ref, _ = discord_oracle(rho, 256)
    d = corr.discord(rho)
    assert d.discord <= d_ref + 1e-9
    assert d.discord >= -1e-10
    assert corr.discord(rho, "A").discord >= -1e-10


def test_zero_ergotropy_condition():
    assert corr.zero_ergotropy_condition(thermal_product(1.0), H) <= 1e-8
    assert corr.zero_ergotropy_condition(steady_state(thermal_c(1.0), 1.0), H) <= 1e-5
    with pytest.raises(NotZeroErgotropy):
        corr.zero_ergotropy_condition(steady_state(0.2, 1.0), H)


def test_general_identity_reduces_for_locally_thermal():
    rho = locally_thermal_xstate_sampler(3)
    beta = corr.common_beta(rho.matrix, H)
    t = corr.general_state_identity(rho, H.matrix, beta)
    assert t.residual <= 1e-8
    assert abs(t.chi_term) <= 1e-8
    assert abs(t.relative_entropy_product_gibbs) <= 1e-8


@given(seeds, st.sampled_from([-2.0, -0.5, 0.5, 1.0, 3.0]))
def test_general_identity_random(seed, beta):
    rho = random_density_matrix(4, seed=seed)
    assert corr.general_state_identity(rho, H.matrix, beta).residual <= 1e-8


def test_general_identity_gibbs():
    t = corr.general_state_identity(thermal_state(H.matrix, 1.0), H.matrix, 1.0)
    assert max(abs(t.beta_ergotropy), abs(t.mutual_information), abs(t.relative_entropy_passive_gibbs),
               abs(t.chi_term), abs(t.relative_entropy_product_gibbs)) < 1e-10


def test_common_beta_mismatch_warns():
    rho = np.kron(thermal_state(qubit_hamiltonian(), 0.5), thermal_state(qubit_hamiltonian(), 1.5))
    with pytest.warns(corr.TemperatureMismatchWarning):
        corr.common_beta(rho, H)


def test_correlation_matrix_product_is_zero():
    cm = corr.correlation_matrix(thermal_product(0.7))
    assert np.allclose(cm.chi, 0, atol=1e-12)
    assert not np.allclose(corr.correlation_matrix(CLASSICAL).chi, 0)

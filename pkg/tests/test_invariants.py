import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from randlu.errors import InconsistentInvariantsError, NonPhysicalInvariantsError
from randlu.haar import haar_unitaries
from randlu.invariants import (
    INVARIANT_KEYS,
    InvariantSet,
    SingularTriple,
    char_poly,
    chsh_value,
    compute_all,
    fmax_lower_bound,
    kempe_direct,
    kempe_invariant,
    negativity_direct,
    negativity_from_invariants,
    singular_triple,
    teleport_fidelity,
)
from randlu.states import (
    EPS,
    X,
    Y,
    Z,
    apply_local,
    basis_product,
    bloch_decompose,
    ghz,
    maximally_mixed,
    reference_source,
    partial_transpose,
    random_density,
    random_state,
    schmidt_state,
    singlet,
    three_qubit_bloch,
    werner,
)

seeds = st.integers(0, 2**32 - 1)


def su2(angles):
    a, b, c = angles
    rz = lambda t: np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
    ry = np.array([[np.cos(b / 2), -np.sin(b / 2)], [np.sin(b / 2), np.cos(b / 2)]])
    return rz(a) @ ry @ rz(c)


def chsh_oracle(rho, starts=12):
    """Largest CHSH expectation over measurement directions, by direct optimization."""
    P = np.array([X, Y, Z])

    def unit(th, ph):
        return np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])

    def neg(x):
        a, a2, b, b2 = (np.einsum("i,ijk->jk", unit(*x[2 * k:2 * k + 2]), P) for k in range(4))
        B = np.kron(a, b + b2) + np.kron(a2, b - b2)
        return -np.trace(rho @ B).real

    rng = np.random.default_rng(0)
    return max(-minimize(neg, rng.uniform(0, np.pi, 8), method="BFGS").fun for _ in range(starts))


def fmax_oracle(rho, starts=12):
    """max over U_A x U_B of the singlet overlap."""
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)

    def neg(x):
        U = np.kron(su2(x[:3]), su2(x[3:]))
        return -(psi.conj() @ U @ rho @ U.conj().T @ psi).real

    rng = np.random.default_rng(1)
    return max(-minimize(neg, rng.uniform(0, 2 * np.pi, 6), method="BFGS").fun for _ in range(starts))


def i14_oracle(b):
    # eps_ijk eps_lmn alpha_i beta_l T_jm T_kn, written out with explicit indices
    return float(np.einsum("ijk,lmn,i,l,jm,kn->", EPS, EPS, b.alpha, b.beta, b.T, b.T))


# --- worked examples ---------------------------------------------------------------------

def test_singlet_invariants():
    inv = compute_all(singlet())
    assert (inv.I1, inv.I2, inv.I3) == pytest.approx((-1, 3, 3), abs=1e-12)
    for k in INVARIANT_KEYS[3:]:
        assert inv[k] == pytest.approx(0, abs=1e-12)


def test_maximally_mixed_invariants_vanish():
    np.testing.assert_allclose(compute_all(maximally_mixed()).as_array(), 0, atol=1e-15)


def test_source_preset_invariants():
    inv = compute_all(reference_source())
    assert inv.I1 == pytest.approx(-0.71, abs=0.01)
    assert inv.I2 == pytest.approx(2.41, abs=1e-9)
    assert inv.I3 == pytest.approx(1.95, abs=0.05)


def test_invariant_set_mapping_round_trip():
    inv = compute_all(random_state(3))
    assert InvariantSet.from_mapping(inv.as_dict()) == inv
    with pytest.raises(KeyError):
        InvariantSet.from_mapping({"I1": 0.0})
    with pytest.raises(KeyError):
        InvariantSet.from_mapping({**inv.as_dict(), "I10": 0.0})


@pytest.mark.parametrize("vals, coeffs", [
    ((-1, 3, 3), [1, -3, 3, -1]),
    ((0, 0, 0), [1, 0, 0, 0]),
    ((-0.62, 2.41, 2.21), [1, -2.41, 1.79905, -0.3844]),
])
def test_char_poly(vals, coeffs):
    inv = InvariantSet(I1=vals[0], I2=vals[1], I3=vals[2])
    np.testing.assert_allclose(char_poly(inv), coeffs, atol=1e-12)


def test_singular_triple_examples():
    s = singular_triple(compute_all(singlet()))
    assert s.lam_sq == pytest.approx((1, 1, 1), abs=1e-6) and s.det_sign == -1
    s = singular_triple(InvariantSet(I1=-0.125, I2=0.75, I3=0.1875))
    assert s.lam_sq == pytest.approx((0.25, 0.25, 0.25), abs=1e-6)


def test_central_reference_values_are_nonphysical():
    with pytest.raises(NonPhysicalInvariantsError) as err:
        singular_triple(InvariantSet(I1=-0.62, I2=2.41, I3=2.21))
    assert err.value.discriminant < 0


@pytest.mark.parametrize("lam, expected", [((1, 1, 1), 2 * np.sqrt(2) - 2), ((0, 0, 0), -2), ((1, 0, 0), 0)])
def test_chsh_examples(lam, expected):
    assert chsh_value(SingularTriple(lam, -1)) == pytest.approx(expected)


def test_fmax_examples():
    assert fmax_lower_bound(SingularTriple((1, 1, 1), -1)) == pytest.approx(1)
    assert fmax_lower_bound(SingularTriple((0, 0, 0), 0)) == pytest.approx(0.25)


@pytest.mark.parametrize("F, f, tol", [
    (0.88, 0.92, 0.005),
    (1.0, 1.0, 1e-15),
    # (2 * 0.86 + 1) / 3 = 0.9067; the quoted 0.90 goes with a rounded 0.86
    (0.86, 0.90, 0.01),
])
def test_teleport_fidelity(F, f, tol):
    assert teleport_fidelity(F) == pytest.approx(f, abs=tol)


def test_teleport_fidelity_rejects_out_of_range():
    with pytest.raises(ValueError):
        teleport_fidelity(1.2)


def test_negativity_examples():
    assert negativity_from_invariants(compute_all(singlet())) == pytest.approx(1, abs=1e-8)
    assert negativity_from_invariants(compute_all(maximally_mixed())) == pytest.approx(0, abs=1e-12)
    assert negativity_from_invariants(compute_all(werner(2 / 3))) == pytest.approx(0.5, abs=1e-8)
    c = np.sqrt(0.9)
    assert negativity_direct(schmidt_state(c)) == pytest.approx(0.6, abs=1e-12)
    assert negativity_from_invariants(compute_all(schmidt_state(c))) == pytest.approx(0.6, abs=1e-8)


def test_negativity_of_product_states_is_zero():
    m = np.kron(random_density(1, 2, 2), random_density(2, 1, 2))
    assert negativity_from_invariants(compute_all(m)) == pytest.approx(0, abs=1e-8)


def test_negativity_rejects_inconsistent_invariants():
    bad = InvariantSet(I1=-1, I2=3, I3=3, I4=5.0, I7=5.0)
    with pytest.raises(InconsistentInvariantsError):
        negativity_from_invariants(bad)


def test_kempe_examples():
    assert kempe_invariant(three_qubit_bloch(np.eye(8) / 8)) == pytest.approx(1 / 8)
    assert kempe_invariant(three_qubit_bloch(ghz())) == pytest.approx(1 / 4)
    assert kempe_invariant(three_qubit_bloch(basis_product())) == pytest.approx(1)
    assert kempe_direct(ghz()) == pytest.approx(1 / 4)


# --- independent oracles ----------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(4))
def test_chsh_against_optimizer(seed):
    rho = random_state(seed, 2)
    s = singular_triple(compute_all(rho))
    assert chsh_value(s) + 2 == pytest.approx(chsh_oracle(rho.matrix), abs=1e-5)


@pytest.mark.parametrize("seed", range(4))
def test_fmax_against_optimizer(seed):
    rho = random_state(seed + 10, 2)
    s = singular_triple(compute_all(rho))
    assert fmax_lower_bound(s) == pytest.approx(fmax_oracle(rho.matrix), abs=1e-6)


# --- properties --------------------------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(1, 4))
def test_i14_matches_index_oracle(seed, rank):
    rho = random_state(seed, rank)
    assert compute_all(rho).I14 == pytest.approx(i14_oracle(bloch_decompose(rho)), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds, seeds)
def test_lu_invariance(seed, useed):
    rho = random_state(seed)
    UA, UB = haar_unitaries(np.random.default_rng(useed), 2)
    a = compute_all(rho).as_array()
    b = compute_all(apply_local(rho, UA, UB)).as_array()
    np.testing.assert_allclose(a, b, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_partial_transpose_flips_only_i1_i14(seed):
    rho = random_state(seed)
    a = compute_all(rho)
    b = compute_all(bloch_decompose(partial_transpose(rho)))
    for k in INVARIANT_KEYS:
        sign = -1 if k in ("I1", "I14") else 1
        assert b[k] == pytest.approx(sign * a[k], abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(1, 4))
def test_singular_triple_matches_svd(seed, rank):
    rho = random_state(seed, rank)
    T = bloch_decompose(rho).T
    s = singular_triple(compute_all(rho))
    ref = SingularTriple.from_matrix(T)
    np.testing.assert_allclose(s.lam_sq, ref.lam_sq, atol=1e-6)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(1, 4))
def test_negativity_matches_eigen_oracle(seed, rank):
    rho = random_state(seed, rank)
    assert negativity_from_invariants(compute_all(rho)) == pytest.approx(negativity_direct(rho), abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_kempe_bloch_matches_direct(seed):
    m = random_density(seed, 8, 8)
    assert kempe_invariant(three_qubit_bloch(m)) == pytest.approx(kempe_direct(m), abs=1e-10)

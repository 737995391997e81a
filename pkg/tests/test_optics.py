import numpy as np
import pytest

from seqbell.optics import (
    Circuit,
    bd_matrix,
    build_fig2a_circuit,
    build_fig2b_circuit,
    compile_to_kraus,
    fig2_deviations,
    hwp_matrix,
    measurement_axis,
    unitarity_defect,
    verify_equivalence,
)
from seqbell.qcore import BlochDirection, projector
from seqbell.weakmeas import KrausPair, WeakMeasurement, kraus_pair, pointer_states, printed_kraus_pair

DEG = np.pi / 180
GRID = [(t, p) for t in np.linspace(0, np.pi / 2, 20) for p in np.linspace(-np.pi / 2, np.pi / 2, 20)]


def test_hwp_matrix():
    np.testing.assert_allclose(hwp_matrix(0), np.diag([1, -1]))
    np.testing.assert_allclose(hwp_matrix(np.pi / 4), [[0, 1], [1, 0]], atol=1e-15)
    np.testing.assert_allclose(hwp_matrix(np.pi / 8), np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-15)
    for a in np.linspace(-1, 1, 9):
        m = hwp_matrix(a)
        np.testing.assert_allclose(m @ m.conj().T, np.eye(2), atol=1e-15)
        np.testing.assert_allclose(m, m.conj().T)
        assert np.linalg.det(m) == pytest.approx(-1)


def test_bd_matrix():
    bd = bd_matrix()
    e = np.eye(4)
    np.testing.assert_allclose(bd @ e[1], e[1])  # p0 V stays
    np.testing.assert_allclose(bd @ e[0], e[2])  # p0 H displaced
    v = np.array([0.6, 0.8j, 0, 0])
    out = bd @ v
    np.testing.assert_allclose(out, [0, 0.8j, 0.6, 0])
    assert np.linalg.norm(out) == pytest.approx(1)
    np.testing.assert_allclose(bd.conj().T @ bd, np.eye(4))


def test_fig2a_limits():
    kp = compile_to_kraus(build_fig2a_circuit(0.0, 0.0))
    assert verify_equivalence(kp, [np.diag([1, 0]), np.diag([0, 1])]) < 1e-12
    # no measurement: both ports carry the same (scaled) polarization state
    u = build_fig2a_circuit(np.pi / 4, 0.3).unitary()
    for pol in (np.array([1, 0, 0, 0]), np.array([0, 1, 0, 0])):
        out = u @ pol
        assert np.linalg.norm(out[:2]) == pytest.approx(np.linalg.norm(out[2:]))


def test_fig2a_reproduces_pointer_amplitudes():
    for t in np.linspace(0, np.pi / 2, 13):
        u = build_fig2a_circuit(t, 0.0).unitary()
        pp = pointer_states(t)
        # H in -> path amplitudes (phi_H); V in -> (phi_V)
        h_out, v_out = u[:, 0], u[:, 1]
        np.testing.assert_allclose(np.abs([h_out[0], h_out[2:].sum()]), np.abs(pp.phi_up), atol=1e-12)
        np.testing.assert_allclose(np.abs([v_out[1], v_out[2:].sum()]), np.abs(pp.phi_down), atol=1e-12)


def test_fig2a_compiled_operators_at_balance_point():
    t = 18.4 * DEG
    kp = compile_to_kraus(build_fig2a_circuit(t, 0.0))
    target = [np.diag([np.cos(t), np.sin(t)]), np.diag([np.sin(t), np.cos(t)])]
    assert verify_equivalence(kp, target) < 1e-12


def test_fig2a_basis_rotation_identity():
    # arbitrary phi: phi = 0 operators conjugated by the basis plate
    t, phi = 0.37, 0.81
    k0 = compile_to_kraus(build_fig2a_circuit(t, 0.0))
    kphi = compile_to_kraus(build_fig2a_circuit(t, phi))
    r = hwp_matrix(phi / 2)
    assert verify_equivalence(kphi, [r @ k0.m_plus @ r, r @ k0.m_minus @ r]) < 1e-12


def test_compile_equivalence_grid():
    for t, p in GRID:
        for d in fig2_deviations(t, p).values():
            assert d < 1e-12


def test_fig2b_selections_complete():
    for t, p in GRID[::7]:
        ops = [compile_to_kraus(build_fig2b_circuit(t, p, s)) for s in (1, -1)]
        KrausPair(*ops)  # completeness enforced on construction


def test_unitarity():
    for t, p in GRID:
        assert unitarity_defect(build_fig2a_circuit(t, p)) < 1e-12
        assert unitarity_defect(build_fig2b_circuit(t, p, -1)) < 1e-12


def test_probability_conservation(rng):
    for _ in range(50):
        t, p = rng.uniform(0, np.pi / 2), rng.uniform(-np.pi, np.pi)
        pol = rng.normal(size=2) + 1j * rng.normal(size=2)
        pol /= np.linalg.norm(pol)
        out = build_fig2a_circuit(t, p).unitary() @ np.concatenate([pol, [0, 0]])
        assert abs(np.sum(np.abs(out) ** 2) - 1) < 1e-12


def test_verify_equivalence_basics():
    kp = kraus_pair(WeakMeasurement(0.2, BlochDirection(1, 0)))
    assert verify_equivalence(kp, kp) == 0
    assert verify_equivalence(kp.m_plus, 1j * kp.m_plus) < 1e-15


def test_negative_control_detuned_hwp3():
    devs = fig2_deviations(0.3, 0.2, hwp3_offset=5 * DEG)
    assert min(devs.values()) > 0.01


def test_uncompensated_box_gives_signed_operators():
    for t, p in GRID[::11]:
        wm = WeakMeasurement(t, measurement_axis(p))
        printed = printed_kraus_pair(wm)
        op = compile_to_kraus(build_fig2b_circuit(t, p, 1, compensate=False))
        assert verify_equivalence(op, printed.m_plus) < 1e-12
        op = compile_to_kraus(build_fig2b_circuit(t, p, -1, compensate=False))
        assert verify_equivalence(op, printed.m_minus) < 1e-12


def test_measurement_axis_matches_experimental_plate_angles():
    # plate at -11.25 deg measures along (Z - X)/sqrt2; 11.25 deg along (Z + X)/sqrt2
    np.testing.assert_allclose(measurement_axis(-22.5 * DEG).vector, np.array([1, -1, 0]) / np.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(measurement_axis(22.5 * DEG).vector, np.array([1, 1, 0]) / np.sqrt(2), atol=1e-15)
    # plate at phi/2 maps the +1 eigenstate onto H
    n = measurement_axis(0.7)
    r = hwp_matrix(0.35)
    np.testing.assert_allclose(r @ projector(n, 1) @ r, np.diag([1, 0]), atol=1e-12)


def test_circuit_json_roundtrip():
    c = build_fig2b_circuit(0.4, 0.3, -1)
    c2 = Circuit.from_json(c.to_json())
    assert c2.ports == c.ports
    np.testing.assert_allclose(c2.unitary(), c.unitary(), atol=1e-12)
    with pytest.raises(ValueError):
        Circuit.from_json('{"version": 2, "elements": []}')
    with pytest.raises(ValueError):
        Circuit.from_json('{"version": 1, "elements": [{"kind": "QWP"}]}')

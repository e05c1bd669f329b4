import json

import numpy as np
import pytest

from lftident import model as model_mod
from lftident import response, testing
from lftident.errors import (
    ModelFormatError,
    ModelShapeError,
    NonFiniteEntryError,
    WellPosednessViolation,
)
from lftident.model import DescriptorModel, Dims, ParameterDomain

from conftest import interior_theta, model_pool


def test_load_siso1(siso1_path):
    m = model_mod.load_model(siso1_path)
    assert m.dims == Dims(1, 1, 1, 1, 1, 1)
    assert m.time_domain == "continuous"
    assert np.allclose(m.A_xx, [[-1.0]])


def test_roundtrip_byte_identical(siso1_path):
    text = siso1_path.read_text()
    again = model_mod.dumps_model(model_mod.loads_model(text))
    assert again == text


def test_roundtrip_random_models():
    for m in model_pool(6):
        text = model_mod.dumps_model(m)
        again = model_mod.dumps_model(model_mod.loads_model(text))
        assert again == text


def test_missing_file():
    with pytest.raises(ModelFormatError):
        model_mod.load_model("/nonexistent/model.json")


def test_parse_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ModelFormatError):
        model_mod.load_model(p)


def test_wrong_p_count(siso1_path):
    doc = json.loads(siso1_path.read_text())
    doc["P"] = doc["P"] + doc["P"]
    with pytest.raises(ModelShapeError, match="P must list q=1"):
        model_mod.loads_model(json.dumps(doc))


def test_non_square_e(siso1_path):
    doc = json.loads(siso1_path.read_text())
    doc["E"] = [[1.0, 0.0]]
    with pytest.raises(ModelShapeError, match="E must be 1x1"):
        model_mod.loads_model(json.dumps(doc))


def test_field_precise_shape_error(siso1_path):
    doc = json.loads(siso1_path.read_text())
    doc["B_xv"] = [[1.0], [0.0]]
    with pytest.raises(ModelShapeError, match="B_xv"):
        model_mod.loads_model(json.dumps(doc))


def test_non_finite_entry(siso1_path):
    doc = json.loads(siso1_path.read_text())
    doc["A_xx"] = [[1e400]]
    with pytest.raises((NonFiniteEntryError, ModelFormatError)):
        model_mod.loads_model(json.dumps(doc))


def test_bad_dims():
    with pytest.raises(ModelShapeError):
        Dims(0, 1, 1, 1, 1, 1)


def test_domain_contains():
    # Ball semantics: sum of squares strictly below the radius.
    dom = ParameterDomain(radius=0.5)
    assert dom.contains([0.0])
    assert dom.contains([0.7])       # 0.49 < 0.5
    assert not dom.contains([0.71])  # 0.5041 >= 0.5
    box = ParameterDomain(radius=0.5, norm="box")
    assert box.contains([0.4, -0.4])
    assert not box.contains([0.6, 0.0])


def test_assembled_matches_formula(siso1):
    for m in [siso1] + model_pool(4, start=50):
        theta = interior_theta(m, 3)
        P = m.p_of(theta)
        loop_inv = np.linalg.inv(np.eye(m.dims.m_v) - P @ m.D_zv)
        A, B, C, D = m.assembled(theta)
        assert np.allclose(A, m.A_xx + m.B_xv @ loop_inv @ P @ m.C_zx, atol=1e-12)
        assert np.allclose(B, m.B_xu + m.B_xv @ loop_inv @ P @ m.D_zu, atol=1e-12)
        assert np.allclose(C, m.C_yx + m.D_yv @ loop_inv @ P @ m.C_zx, atol=1e-12)
        assert np.allclose(D, m.D_yu + m.D_yv @ loop_inv @ P @ m.D_zu, atol=1e-12)


class TestValidateAssumptions:
    def test_siso1_passes(self, siso1):
        rep = model_mod.validate_assumptions(siso1, [[0.0], [0.5], [-0.5]])
        assert rep.worst_loop_condition == 1.0  # D_zv = 0 makes well-posedness trivial
        assert rep.min_abs_pencil_det > 0

    def test_constructed_a2_violation(self):
        one = np.array([[1.0]])
        m = DescriptorModel(
            time_domain="continuous",
            dims=Dims(1, 1, 1, 1, 1, 1),
            E=one, A_xx=-one, B_xu=one, B_xv=one, C_yx=one, C_zx=one,
            D_yu=0 * one, D_yv=0 * one, D_zu=0 * one, D_zv=one,
            P=(one,),
            theta_domain=ParameterDomain(radius=2.0),
        )
        with pytest.raises(WellPosednessViolation):
            model_mod.validate_assumptions(m, [[1.0]])

    def test_random_models_pass(self):
        for m in model_pool(4, start=70):
            thetas = [np.zeros(m.dims.q), interior_theta(m, 1), interior_theta(m, 2)]
            rep = model_mod.validate_assumptions(m, thetas)
            assert rep.min_abs_pencil_det > 0
            assert len(rep.probe_lambdas) == 5


class TestDualize:
    def test_siso1_self_dual(self, siso1):
        d = model_mod.dualize(siso1)
        for key in ("E", "A_xx", "B_xu", "C_yx", "D_yu"):
            assert np.allclose(getattr(d, key), getattr(siso1, key))

    def test_shape_swap(self):
        m = testing.random_regular_model(11, dims=Dims(m_x=2, m_u=3, m_y=2, m_z=1, m_v=2, q=2))
        d = model_mod.dualize(m)
        assert d.dims.m_u == m.dims.m_y and d.dims.m_y == m.dims.m_u
        assert d.dims.m_z == m.dims.m_v and d.dims.m_v == m.dims.m_z

    def test_involution_exact(self):
        for m in model_pool(4, start=90):
            dd = model_mod.dualize(model_mod.dualize(m))
            for key in ("E", "A_xx", "B_xu", "B_xv", "C_yx", "C_zx",
                        "D_yu", "D_yv", "D_zu", "D_zv"):
                assert np.array_equal(getattr(dd, key), getattr(m, key))
            for Pk, Pk2 in zip(m.P, dd.P):
                assert np.array_equal(Pk, Pk2)

    def test_transposes_response(self):
        for m in model_pool(4, start=110):
            theta = interior_theta(m, 5)
            d = model_mod.dualize(m)
            w = 0.7
            H = response.h_lft(m, theta, w).H
            Hd = response.h_lft(d, theta, w).H
            assert np.linalg.norm(Hd - H.T) <= 1e-12 * max(1.0, np.linalg.norm(H))

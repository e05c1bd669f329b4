import numpy as np
import pytest

from lftident import freqplan, identifiability as ident, testing
from lftident.errors import EmptyGrid
from lftident.model import DescriptorModel, Dims, ParameterDomain


class TestDefaultGrid:
    def test_siso1_full_grid(self, siso1):
        g = freqplan.default_grid(siso1)
        assert g.points.size == 200
        assert g.n_guarded == 0
        assert g.points[0] == pytest.approx(1e-2)
        assert g.points[-1] == pytest.approx(1e2)

    def test_discrete_max_pi(self):
        m = testing.random_regular_model(6, time_domain="discrete")
        g = freqplan.default_grid(m)
        assert g.points[-1] == pytest.approx(np.pi)
        assert np.all(g.points > 0)

    def test_imaginary_axis_pole_excluded(self):
        # Oscillator with poles at +- j w*: the grid must drop the hit point.
        w_star = float(np.geomspace(1e-2, 1e2, 200)[120])
        E = np.eye(2)
        A = np.array([[0.0, w_star], [-w_star, 0.0]])
        one = np.ones((2, 1))
        m = DescriptorModel(
            time_domain="continuous",
            dims=Dims(2, 1, 1, 1, 1, 1),
            E=E, A_xx=A, B_xu=one, B_xv=one, C_yx=one.T, C_zx=one.T,
            D_yu=np.zeros((1, 1)), D_yv=np.zeros((1, 1)),
            D_zu=np.zeros((1, 1)), D_zv=np.zeros((1, 1)),
            P=(np.array([[0.1]]),),
            theta_domain=ParameterDomain(radius=0.5),
        )
        g = freqplan.default_grid(m)
        assert g.n_guarded >= 1
        assert not np.any(np.isclose(g.points, w_star))

    def test_empty_grid_raises(self):
        with pytest.raises(EmptyGrid):
            freqplan.FrequencyGrid(points=np.zeros(0), time_domain="continuous", n_guarded=5)


class TestSearch:
    def test_siso1_shortcut(self, siso1):
        plan = freqplan.search_frequencies(siso1, [0.0])
        assert plan.status == freqplan.CERTIFIED
        assert plan.selected == (pytest.approx(1e-2),)
        assert plan.rank_trace == (0,)
        assert plan.verdict.status == ident.IDENTIFIABLE

    def test_dup2_immediate_negative(self, dup2):
        plan = freqplan.search_frequencies(dup2, [0.0, 0.0])
        assert plan.status == freqplan.NOT_IDENTIFIABLE
        assert plan.selected == ()
        assert plan.verdict is not None
        assert not plan.verdict.psi_fcr

    def test_theta_free_stalls(self, theta_free):
        plan = freqplan.search_frequencies(theta_free, [0.0])
        assert plan.status == freqplan.NO_PROGRESS_ON_GRID
        assert plan.refine_hint is not None
        # Refinement cannot help a structurally dead parameter channel.
        plan2 = freqplan.search_frequencies(theta_free, [0.0], refine=1)
        assert plan2.status == freqplan.NO_PROGRESS_ON_GRID

    @pytest.mark.parametrize("seed", [0, 3, 22, 24, 31, 53])
    def test_certified_plans_sound(self, seed):
        m = testing.random_regular_model(seed, kernel_rich=True)
        t0 = np.zeros(m.dims.q)
        plan = freqplan.search_frequencies(m, t0)
        if plan.status != freqplan.CERTIFIED:
            pytest.skip("fixture not certifiable on the default grid")
        assert plan.verdict.status == ident.IDENTIFIABLE
        assert plan.verdict.residual_nullspace_dim == 0
        assert len(plan.selected) <= ident.sufficient_count(m)
        trace = plan.rank_trace
        assert all(trace[i] > trace[i + 1] for i in range(len(trace) - 1))
        assert trace[-1] == 0

    def test_multi_frequency_progression(self):
        m = testing.random_regular_model(22, kernel_rich=True)
        plan = freqplan.search_frequencies(m, np.zeros(m.dims.q))
        assert plan.status == freqplan.CERTIFIED
        assert len(plan.selected) == 2
        assert plan.rank_trace == (1, 0)

    def test_determinism(self, siso1):
        m = testing.random_regular_model(24, kernel_rich=True)
        a = freqplan.search_frequencies(m, np.zeros(m.dims.q))
        b = freqplan.search_frequencies(m, np.zeros(m.dims.q))
        assert a.selected == b.selected
        assert a.rank_trace == b.rank_trace
        assert a.status == b.status

    def test_custom_grid(self, siso1):
        g = freqplan.default_grid(siso1, n_points=50, w_min=0.1, w_max=10.0)
        plan = freqplan.search_frequencies(siso1, [0.0], grid=g)
        assert plan.status == freqplan.CERTIFIED
        assert plan.selected[0] == pytest.approx(0.1)

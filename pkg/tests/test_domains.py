import numpy as np
import pytest

from mechdesign.design import DesignPoint, DesignSpace
from mechdesign.domains import (
    DOMAINS,
    VICIOUS_L,
    MyersonParams,
    SgaParams,
    ViciousParams,
    get_space,
    myerson_game,
    sga_equilibrium_oracle,
    sga_game,
    sga_objective_oracles,
    vicious_game,
)
from mechdesign.equilibrium import best_response, is_bnic, solve_equilibrium
from mechdesign.evaluation import revenue
from mechdesign.game import LinearStrategy, TypeSampler, payoff


def test_sga_coefficients():
    g = sga_game(SgaParams(0.3, 0.6))
    assert g.win.as_tuple() == (1.0, -0.3, 0.0, -0.6, 0.0)
    assert g.lose.as_tuple() == (0.0, 0.6, 0.0, 0.3, 0.0)
    assert payoff(sga_game(SgaParams(0.5, 0)), 1.0, 0.6, 0.2, 0.1) == pytest.approx(0.7)


def test_myerson_special_cases():
    fp = myerson_game(MyersonParams(q=1, k1=1))
    assert payoff(fp, 0.8, 0.5, 0.3, 0.2) == pytest.approx(0.3)
    assert payoff(fp, 0.3, 0.2, 0.8, 0.5) == 0.0
    sp = myerson_game(MyersonParams(q=1, k2=1))
    assert payoff(sp, 0.8, 0.5, 0.3, 0.2) == pytest.approx(0.6)
    assert is_bnic(sp)


def test_myerson_revenue_rule():
    space = get_space("myerson")
    mech = space.build(space.point((1, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6)))
    # winner pays k1 a_w + k2 a_l + K1, loser k3 a_l + k4 a_w + K2
    assert mech.revenue(1.0, 2.0) == pytest.approx(0.1 + 0.4 + 0.3 + 0.8 + 0.5 + 0.6)
    assert mech.allocation == 1.0


def test_vicious_coefficients():
    q, l = 0.7, 0.2
    p = ViciousParams(q, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, l=l)
    g = vicious_game(p)
    ws = q * (1 - l) + (1 - q)
    ls = (1 - q) * (1 - l) + q
    np.testing.assert_allclose(
        g.win.as_tuple(), (q * (1 - l), -(0.1 * ws - (1 - q) * l), -(1 - q) * l, -0.2 * ws, -0.3)
    )
    np.testing.assert_allclose(
        g.lose.as_tuple(), ((1 - q) * (1 - l), -(0.4 * ls - q * l), -q * l, -0.5 * ls, -0.6)
    )
    with pytest.raises(ValueError):
        ViciousParams(l=1.0)


def test_vicious_vickrey():
    space = get_space("vicious")
    mech = space.build(space.point((1, 0, 1, 0, 0, 0, 0)))
    eq = solve_equilibrium(mech.game).strategy
    assert abs(eq.m - 7 / 9) < 1e-3 and abs(eq.b - 2 / 9) < 1e-3
    assert revenue(mech, eq, TypeSampler(0), 100_000) == pytest.approx(0.48, abs=0.01)
    assert VICIOUS_L == pytest.approx(2 / 7)


def test_oracle_examples():
    assert sga_equilibrium_oracle(0.5, 0) == LinearStrategy(2 / 3, 0.0)
    s = sga_equilibrium_oracle(1 / 3, 0)
    assert s.m == pytest.approx(1.0) and s.b == 0.0
    s = sga_equilibrium_oracle(0, 1)
    assert s.m == pytest.approx(1 / 3) and s.b == pytest.approx(1 / 6)
    assert sga_objective_oracles(0.5, 0) == pytest.approx((2 / 9, 4 / 9))
    assert sga_objective_oracles(0, 1)[0] == pytest.approx(1 / 9)
    assert sga_objective_oracles(0.91, 0.03)[1] == pytest.approx(0.4427, abs=1e-4)
    with pytest.raises(ValueError):
        sga_equilibrium_oracle(0, 0)


def test_oracle_is_fixed_point_on_grid():
    for h in np.linspace(0, 1, 6):
        for k in np.linspace(0, 1, 6):
            if h + k < 0.05:
                continue
            s = sga_equilibrium_oracle(h, k)
            br = best_response(sga_game(SgaParams(h, k)), s)
            assert abs(br.m - s.m) < 1e-3 and abs(br.b - s.b) < 1e-3


def test_oracle_general_interval():
    A, B = 1.0, 2.0
    s = sga_equilibrium_oracle(0.4, 0.2, A, B)
    br = best_response(sga_game(SgaParams(0.4, 0.2), A, B), s)
    assert abs(br.m - s.m) < 1e-3 and abs(br.b - s.b) < 1e-3


def test_registry_and_spaces():
    assert set(DOMAINS) == {"sga", "myerson", "vicious"}
    assert get_space("sga").dim == 2
    assert get_space("vicious", l=0.1).dim == 7
    with pytest.raises(KeyError):
        get_space("nope")


def test_design_point_and_space():
    space = get_space("myerson")
    p = space.point((1, 0.5, 0, 0, 0, 0, 0))
    assert p["k1"] == 0.5
    assert p.replace(K1=-0.1)["K1"] == -0.1
    assert not space.contains(p.replace(K1=-0.1))
    assert space.contains(p)
    with pytest.raises(KeyError):
        p.replace(nope=1.0)
    with pytest.raises(ValueError):
        space.point((1, 2))
    np.testing.assert_array_equal(space.clip([2, -1, 0.5, 0, 0, 0, 0]), [1, 0, 0.5, 0, 0, 0, 0])
    x = space.random_point(np.random.default_rng(0))
    assert space.contains(x)
    with pytest.raises(ValueError):
        DesignPoint(("a",), (1.0, 2.0))
    with pytest.raises(ValueError):
        DesignSpace("bad", ("a",), (1.0,), (0.0,), lambda t: None)

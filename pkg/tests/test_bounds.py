import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonance_bounds.bounds import (
    BoundParams,
    Calibration,
    InadmissibleParameters,
    beta_floor,
    bracket,
    check_params,
    corollary_A,
    default_A,
    loglog_slope,
    minimal_gamma,
    report_verdicts,
    semiclassical_inputs,
    slope_verdict,
    sparse_example_rhs,
    sweep_to_csv,
    thm_compact_terms,
    thm_eigenvalue_rhs,
    thm_halfplane_rhs,
    thm_Lp_rhs,
    thm_pointwise_terms,
    verdict,
)
from resonance_bounds.counting import CountReport, ShiftedDisk, shifted_disk_admissible
from resonance_bounds.determinant import c_delta
from resonance_bounds.potentials import BallIndicator, PotentialNorms, weighted_sup_norms

LN3 = math.log(3.0)


def norms(v0=1.0, vg=1.0, gamma=1.0, vr=1.0, vrg=1.0, sup=1.0):
    return PotentialNorms(v0=v0, v_gamma=vg, v_rhoR=vr, v_rhoRgamma=vrg, sup_norm=sup, gamma=gamma, rho=3.0, R=1.0)


def test_bracket_and_beta_floor():
    assert bracket(-3) == 5
    assert beta_floor(3) == pytest.approx(2 * (math.e**2 - 1) / (math.e - 1))


def test_lp_spot_value():
    g = 2 * math.sqrt(2)
    res = thm_Lp_rhs(BoundParams(gamma=g), norms(gamma=g))
    assert abs(res.rhs - (2 + LN3**3)) < 1e-12
    assert res.admissible
    bad = thm_Lp_rhs(BoundParams(gamma=g - 1e-6), norms(gamma=g - 1e-6))
    assert not bad.admissible and "gamma" in bad.violation_text


def test_lp_eps_growth():
    vals = [thm_Lp_rhs(BoundParams(gamma=10, eps=e), norms(gamma=10)).terms["log term"] for e in (1.0, 0.5, 0.25)]
    assert vals[1] / vals[0] == pytest.approx(4) and vals[2] / vals[1] == pytest.approx(4)


def test_corollary_A_merges_terms():
    r, v0 = 3.0, 2.0
    A = corollary_A(r, v0)
    res = thm_Lp_rhs(BoundParams(r=r, A=A, gamma=100), norms(v0=v0, gamma=100))
    assert res.terms["A term"] == pytest.approx(res.terms["v0 term"])
    assert default_A(r, v0, 10.0) == 10.0 and default_A(r, v0, 1e-3) == A


@pytest.mark.parametrize(
    "change, text",
    [
        (dict(delta=0.0), "delta"),
        (dict(delta=1.5), "delta"),
        (dict(eps=0.0), "eps"),
        (dict(eps=2.0), "eps"),
        (dict(r=-1.0), "r = "),
        (dict(A=0.0), "A = "),
        (dict(d=4), "d = "),
    ],
)
def test_lp_rejects_documented_violations(change, text):
    p = BoundParams(gamma=10).with_(**change)
    res = thm_Lp_rhs(p, norms(gamma=10))
    assert not res.admissible and math.isnan(res.rhs)
    assert text in res.violation_text


def test_lp_gamma_mismatch_flagged():
    res = thm_Lp_rhs(BoundParams(gamma=3.0), norms(gamma=2.0))
    assert not res.admissible and "norms computed" in res.violation_text


def test_admissibility_matches_shifted_disk():
    p = BoundParams(r=0.8, A=2.0, delta=0.5, eps=0.3)
    v0 = 1.3
    scale = v0**2
    disk = ShiftedDisk.from_norms(p.A, v0, p.r)
    g = minimal_gamma(p, scale)
    for gamma in (g * 0.999, g * 1.001):
        ok = thm_Lp_rhs(p.with_(gamma=gamma), norms(v0=v0, gamma=gamma)).admissible
        assert ok == shifted_disk_admissible(disk, gamma, p.delta, p.eps)


def test_halfplane_spot_values():
    res = thm_halfplane_rhs(BoundParams(gamma=1.0, eps=0.5, delta=1.0), norms())
    assert abs(res.rhs - 2.0) < 1e-12
    assert res.boundary == pytest.approx(-1 / math.sqrt(2) + 0.5)
    assert res.beta_d == beta_floor(3)
    doubled = thm_halfplane_rhs(BoundParams(gamma=1.0, eps=0.5), norms(vg=2.0))
    assert doubled.rhs / res.rhs == pytest.approx(16)


def test_halfplane_endpoint_reduction():
    # eps at its maximum gamma/sqrt(1+delta): boundary at Im lam = 0
    g = 2.0
    res = thm_halfplane_rhs(BoundParams(gamma=g, eps=g / math.sqrt(2) / 2, delta=1.0), norms(v0=1.5, gamma=g))
    top = thm_halfplane_rhs(BoundParams(gamma=1.0, eps=1 / math.sqrt(2), delta=1.0), norms(v0=1.5))
    assert top.boundary == pytest.approx(0.0, abs=1e-15)
    assert top.endpoint_rhs == pytest.approx(math.sqrt(2) * 1.5**4)
    assert res.endpoint_rhs > 0


@pytest.mark.parametrize(
    "p, kw",
    [
        (BoundParams(gamma=1.0, eps=0.8, delta=1.0), {}),
        (BoundParams(gamma=1.0, eps=0.0), {}),
        (BoundParams(gamma=0.0, eps=0.5), {}),
        (BoundParams(gamma=1.0, eps=0.5), {"beta_d": 1.0}),
    ],
)
def test_halfplane_rejections(p, kw):
    with pytest.raises(InadmissibleParameters):
        thm_halfplane_rhs(p, norms(), **kw)


def test_eigenvalue_spot_value():
    res = thm_eigenvalue_rhs(1.0, norms())
    assert abs(res.rhs - (1 + LN3**3)) < 1e-12
    assert not res.small_gamma
    assert thm_eigenvalue_rhs(0.1, norms(v0=1.0)).small_gamma
    # v0^{(d^2-1)/2} = v0^4 in the log term
    a = thm_eigenvalue_rhs(1.0, norms(v0=2.0)).terms["log term"]
    assert a == pytest.approx(16 * LN3**3)
    with pytest.raises(InadmissibleParameters):
        thm_eigenvalue_rhs(0.0, norms())


def test_eigenvalue_example_scaling():
    # V = i 1_{B(0,R)}, gamma = 1/R: rhs ~ R^8 + R^8 (ln R)^3
    ratios = []
    for R in (2.0, 4.0, 8.0, 16.0):
        n = weighted_sup_norms(BallIndicator(R=R, h=1j), rho=3.0, R=1.0, gamma=1 / R)
        rhs = thm_eigenvalue_rhs(1 / R, n).rhs
        ratios.append(rhs / (R**8 + R**8 * math.log(R) ** 3))
    assert max(ratios) / min(ratios) < 5


def test_compact_spot_value():
    p = BoundParams(nu=4, theta=1, gamma=5, alpha=5)
    t = thm_compact_terms(p, 1.0, 1.0)
    assert abs(t.I - (math.sqrt(81 * LN3) + 1)) < 1e-12
    assert abs(t.II - 1.0) < 1e-12
    assert t.III == pytest.approx(math.log(2 + math.exp(50)) ** 3, rel=1e-12)
    assert t.admissible and t.total == pytest.approx(t.I + t.II + t.III)


@pytest.mark.parametrize(
    "change, text",
    [
        (dict(theta=0.0), "theta"),
        (dict(nu=0.0), "nu"),
        (dict(alpha=1.0), "alpha"),
        (dict(gamma=0.5), "gamma"),
    ],
)
def test_compact_rejections(change, text):
    t = thm_compact_terms(BoundParams(nu=4, theta=1, gamma=5, alpha=5).with_(**change), 1.0, 1.0)
    assert not t.admissible and any(text in v for v in t.violated)


def test_compact_huge_exponent_no_overflow():
    t = thm_compact_terms(BoundParams(nu=4, theta=1, gamma=400, alpha=5, r=1.0), 1.0, 1.0)
    assert math.isfinite(t.III) and t.III == pytest.approx((5 * 800) ** 3, rel=1e-3)


def test_semiclassical_inputs():
    assert semiclassical_inputs(2.0, 3.0, 0.5) == (8.0, 6.0)
    with pytest.raises(ValueError):
        semiclassical_inputs(1.0, 1.0, 0.0)
    # nu > d - 1 keeps term I at most ~ (r/h)^d
    rows = []
    for h in (0.5, 0.25, 0.125):
        sup, r = semiclassical_inputs(1.0, 1.0, h)
        rows.append(thm_compact_terms(BoundParams(r=r, nu=2.5, gamma=100, alpha=5), sup, 1.0).I)
    assert loglog_slope([2, 4, 8], rows) < 3.5


def test_corollary_cubic_regime():
    # fixed sup norm, R <= 1, gamma = c r: total grows like r^3
    tot = []
    rs = [1.0, 2.0, 4.0, 8.0]
    for r in rs:
        p = BoundParams(r=r, nu=4, theta=1, alpha=5, A=1.0, gamma=4 * r)
        t = thm_compact_terms(p, 1.0, 1.0)
        assert t.admissible
        tot.append(t.total)
    ratios = np.array(tot) / np.array(rs) ** 3
    assert ratios.max() / ratios.min() < 50
    assert loglog_slope(rs[1:], tot[1:]) < 3.3


def test_pointwise_spot_value():
    p = BoundParams(theta=0.5, nu=1, kappa=0.5, rho=3, gamma=5, alpha=5)
    t = thm_pointwise_terms(p, norms())
    assert abs(t.I - 28.0) < 1e-12
    assert abs(t.II - 1.0) < 1e-12
    assert abs(t.III - LN3**3) < 1e-12
    assert t.admissible


@pytest.mark.parametrize(
    "change, text",
    [
        (dict(theta=0.4), "theta in [1/2,1]"),
        (dict(rho=2.5), "rho"),
        (dict(kappa=0.0), "kappa"),
        (dict(alpha=2.0), "alpha"),
    ],
)
def test_pointwise_rejections(change, text):
    p = BoundParams(theta=0.5, nu=1, kappa=0.5, rho=3, gamma=5, alpha=5).with_(**change)
    t = thm_pointwise_terms(p, norms())
    assert not t.admissible and any(text in v for v in t.violated)


@settings(max_examples=50, deadline=None)
@given(v=st.floats(0.01, 100.0), f=st.floats(1.0, 3.0))
def test_monotone_in_norms(v, f):
    p = BoundParams(theta=0.5, nu=1, kappa=0.5, rho=3, gamma=5, alpha=5)
    a = thm_pointwise_terms(p, norms(vr=v, vrg=v))
    b = thm_pointwise_terms(p, norms(vr=v * f, vrg=v * f))
    assert b.I >= a.I and b.III >= a.III
    g = 50.0
    la = thm_Lp_rhs(BoundParams(gamma=g), norms(v0=v, vg=v, gamma=g)).rhs
    lb = thm_Lp_rhs(BoundParams(gamma=g), norms(v0=v * f, vg=v * f, gamma=g)).rhs
    assert lb >= la
    assert thm_eigenvalue_rhs(1.0, norms(v0=v * f, vg=v * f)).rhs >= thm_eigenvalue_rhs(1.0, norms(v0=v, vg=v)).rhs


def test_c_delta_blowup_exponent():
    ds = [1e-1, 1e-2, 1e-3]
    assert loglog_slope(ds, [c_delta(d) for d in ds]) == pytest.approx(-1.0)


def test_sparse_form():
    assert sparse_example_rhs(1.0, 10.0, 1.0) == pytest.approx(math.log(2 + 1 / 9) ** 3)
    with pytest.raises(InadmissibleParameters):
        sparse_example_rhs(10.0, 10.0, 1.0)


def test_calibration_identity_and_verdicts():
    counts, rhs = {"lp": 7.0, "halfplane": 2.0}, {"lp": 3.5, "halfplane": 4.0}
    cal = Calibration.from_reference(counts, rhs)
    v = verdict(counts, rhs, cal)
    assert all(x["pass"] and x["ratio"] == pytest.approx(1.0) for x in v.values())
    v = verdict({"lp": 8.0, "halfplane": 1.0}, rhs, cal)
    assert not v["lp"]["pass"] and v["halfplane"]["pass"]


def test_report_verdicts_pick_the_right_count():
    rep = CountReport(r=2.0, n=5, N=3.0, n_plus=1, bound_values={"lp": 3.0, "eigenvalue": 2.0})
    cal = Calibration({"lp": 1.0, "eigenvalue": 0.25})
    v = report_verdicts(rep, cal)
    assert v["lp"]["ratio"] == pytest.approx(1.0)
    assert v["eigenvalue"]["ratio"] == pytest.approx(2.0) and not v["eigenvalue"]["pass"]


def test_slope_verdict():
    rs = [2.0, 4.0, 8.0]
    assert slope_verdict(rs, [r**3 for r in rs], 3.0)["pass"]
    assert not slope_verdict(rs, [r**4.2 for r in rs], 3.0)["pass"]
    with pytest.raises(ValueError):
        loglog_slope(rs, [0.0, 1.0, 2.0])


def test_check_params_names_violations():
    assert all(c.ok for c in check_params(BoundParams()))
    bad = {c.name for c in check_params(BoundParams(delta=2.0, theta=0.3, rho=1.0)) if not c.ok}
    # theta = 0.3 also pushes the alpha threshold d/(2 theta) to 5
    assert bad == {"delta in (0,1]", "theta in [1/2,1]", "rho > max(1+nu+kappa, 2 theta)", "alpha > max((d-1)/nu, d/(2 theta))"}
    bad = {c.name for c in check_params(BoundParams(gamma=1.0, eps=1.0), ["halfplane"]) if not c.ok}
    assert bad == {"eps <= gamma/sqrt(1+delta)"}


def test_sweep_csv():
    text = sweep_to_csv([{"theorem": "lp", "r": 1.0, "rhs": 2.0}, {"theorem": "lp", "r": 2.0, "rhs": 3.0, "extra": 1}])
    lines = text.strip().splitlines()
    assert lines[0] == "theorem,r,rhs,extra" and len(lines) == 3
    assert sweep_to_csv([]) == ""


def test_calibrate_A0_is_smallest_admissible_scale():
    from resonance_bounds.bounds import calibrate_A0
    from resonance_bounds.determinant import power_norm
    from resonance_bounds.grids import ball_grid
    from resonance_bounds.potentials import BallIndicator, lp_norm
    from resonance_bounds.birman_schwinger import assemble_bs

    V, grid = BallIndicator(R=1.0, h=10.0), ball_grid(1.0, 6, 5, 6)
    A = calibrate_A0([(V, grid)])
    scale = lp_norm(V, 2.0) ** 2
    assert power_norm(assemble_bs(V, grid, 1j * A * scale / 2), 4) <= 0.5
    assert power_norm(assemble_bs(V, grid, 1j * (A / 1.02) * scale / 2), 4) > 0.5
    # a weak well meets the target at the lower end of the search
    assert calibrate_A0([(BallIndicator(R=1.0, h=0.1), grid)]) == 1e-4

import numpy as np
import pytest

from triscale.bifurcation import (
    Branch,
    Kind,
    branch_scan,
    detect_bifurcations,
    hopf_monitor,
    locate_lp,
    lp_betas,
    lp_curve,
)
from triscale.equilibria import dfe_record, endemic_coeffs, endemic_equilibria, equilibrium_spectrum
from triscale.errors import InvalidInputError
from triscale.model import ModelParams

BASE = ModelParams(beta=0.2, alpha=5.0, nu=0.9, gamma1=0.25, gamma2=0.25, delta=0.05, epsilon=0.05)


@pytest.fixture(scope="module")
def points():
    return detect_bifurcations(BASE, (0.1, 0.3))


def test_scan_counts_and_upper_branch():
    scan = branch_scan(BASE, (0.12, 0.3), 61)
    by_beta = {}
    for bp in scan:
        by_beta.setdefault(bp.beta, []).append(bp)
    for beta, pts in by_beta.items():
        kinds = {bp.branch for bp in pts}
        assert Branch.DFE in kinds
        n_ee = len(pts) - 1
        assert n_ee == len(endemic_equilibria(BASE.with_(beta=beta)))
    upper = np.array([bp.equilibrium.state for bp in scan
                      if bp.branch in (Branch.UPPER, Branch.UNIQUE)])
    # deeper into the endemic regime: fewer susceptibles, more in Y and R
    assert np.all(np.diff(upper[:, 0]) < 0)
    assert np.all(np.diff(upper[:, 4]) > 0)
    assert np.all(np.diff(upper[:, 5]) > 0)


def test_scan_rejects_bad_range():
    with pytest.raises(InvalidInputError):
        branch_scan(BASE, (0.3, 0.1), 10)
    with pytest.raises(InvalidInputError):
        branch_scan(BASE, (0.1, 0.3), 1)


def test_ordering(points):
    kinds = [pt.kind for pt in points]
    assert kinds == [Kind.LP, Kind.HOPF, Kind.BP]


def test_lp_invariants(points):
    lp = points[0]
    assert abs(endemic_coeffs(BASE.with_(beta=lp.beta)).discriminant) < 1e-12
    assert len(endemic_equilibria(BASE.with_(beta=lp.beta - 1e-6))) == 0
    assert len(endemic_equilibria(BASE.with_(beta=lp.beta + 1e-6))) == 2
    # closed form and grid search agree
    assert lp_betas(BASE) == pytest.approx([lp.beta], abs=1e-10)


def test_hopf_invariants(points):
    h = points[1]
    assert abs(h.residual) < 1e-10
    upper = endemic_equilibria(BASE.with_(beta=h.beta))[-1]
    ev = upper.eigenvalues
    pair = ev[np.abs(ev.imag) > 1e-12]
    crit = pair.real.max()
    assert abs(crit) < 1e-10
    # everything off the critical pair is strictly stable
    rest = ev[np.abs(ev.real - crit) > 1e-8]
    assert len(rest) == len(ev) - 2 and np.all(rest.real < 0)
    # stability changes across the point
    below = endemic_equilibria(BASE.with_(beta=h.beta - 1e-5))[-1]
    above = endemic_equilibria(BASE.with_(beta=h.beta + 1e-5))[-1]
    assert hopf_monitor(below) > 0 > hopf_monitor(above)


def test_bp_has_single_zero_eigenvalue(points):
    bp = points[2]
    assert bp.beta == BASE.gamma1
    ev = dfe_record(BASE.with_(beta=bp.beta)).eigenvalues
    assert np.sum(np.abs(ev) < 1e-12) == 1


def test_no_lp_without_backward_branch():
    p = BASE.with_(alpha=1.0)
    assert locate_lp(p, (0.1, 0.3), 401) == []
    assert lp_betas(p) == []
    assert lp_betas(BASE.with_(nu=0.0)) == []


def test_lp_curve():
    curve = lp_curve(BASE, (0.5, 6.0), 23)
    alphas = [pt.alpha for pt in curve]
    # alpha*nu <= 1 has no fold
    assert all(a * BASE.nu > 1 for a in alphas)
    row = [pt for pt in curve if pt.alpha == pytest.approx(5.0)]
    assert row and row[0].beta == pytest.approx(lp_betas(BASE)[0], abs=1e-12)
    assert all(abs(pt.residual) < 1e-12 for pt in curve)
    # fold climbs to gamma1 as alpha*nu approaches its threshold from above
    folds = [lp_betas(BASE.with_(alpha=a))[0] for a in (3.0, 2.0, 1.5, 1.2)]
    assert np.all(np.diff(folds) > 0)
    assert folds[-1] == pytest.approx(BASE.gamma1, abs=1e-3)


def test_spectrum_of_lower_branch_is_unstable():
    lower = endemic_equilibria(BASE)[0]
    assert not lower.stable
    np.testing.assert_allclose(np.sort_complex(equilibrium_spectrum(lower, BASE)),
                               np.sort_complex(lower.eigenvalues), atol=1e-12)

"""Smoke test for the pyqmoments extension.

    pip install --no-build-isolation -e crates/qmoments-py
    python python/smoke_test.py
"""

import json
import math

import pyqmoments as qm


def close(a, b, tol):
    assert abs(a - b) <= tol * (1.0 + abs(b)), (a, b)


def gaussian():
    s = qm.MomentSet.gaussian(0.5, 0.5, 6, q0=1.0, p0=2.0)
    close(s.get(0, 2), 0.25, 1e-15)
    close(s.get(2, 0), 0.25, 1e-15)
    close(s.get(0, 4), 3 * 0.25**2, 1e-15)
    assert s.get(3, 1) == 0.0 and s.quantum
    back = qm.MomentSet.from_json(s.to_json())
    assert back.moments() == s.moments()
    assert not s.to_classical().quantum
    try:
        s.get(4, 4)
    except ValueError:
        pass
    else:
        raise AssertionError("order above the cutoff accepted")


def oscillator():
    # q(t) = q0 cos t + p0 sin t; the spreads of a coherent state stay fixed
    v = qm.Potential.harmonic(1.0)
    s = qm.MomentSet.gaussian(0.5, 0.5, 6, q0=1.0)
    tr = qm.integrate(s, v, math.pi, math.pi / 64)
    assert len(tr) == 65 and not tr.truncated
    for t, q in zip(tr.times, tr.q()):
        close(q, math.cos(t), 1e-8)
    assert max(abs(x - 0.25) for x in tr.moment(0, 2)) < 1e-8
    assert tr.h_eff_drift() < 1e-8


def stationary():
    # E = ħω/2 is the Gaussian ground state
    g = qm.harmonic_stationary(0.25, 1.0, 0.5, 6)
    close(g.get(0, 2), 0.25, 1e-14)
    close(g.get(2, 0), 0.25, 1e-14)
    sol = qm.quartic_stationary(1.0, 0.3, 1.0, 0.1, 12)
    assert sol.get(0, 2) == 0.3
    try:
        qm.quartic_stationary(0.1, 0.1, 1.0, 1.0, 12)
    except RuntimeError:
        pass
    else:
        raise AssertionError("Heisenberg-violating branch accepted")


def inequalities():
    s = qm.MomentSet.gaussian(0.5, 0.5, 4)
    margins = dict(qm.check_inequalities(s, 2))
    assert margins and min(margins.values()) > -1e-10
    s.set(0, 2, 0.01)
    assert min(m for _, m in qm.check_inequalities(s)) < 0


def bounds():
    lo, hi = qm.ground_energy_bounds(1.0, 1.0, 4)
    assert 0.64 < lo < 0.66 < 0.68 < hi < 0.70, (lo, hi)


def comparison():
    r = qm.compare(qm.Potential.quartic(1.0), 1e-2, 1e-2, 0.0, 10.0, 6, periods=1.0)
    assert 0.0 < r["gamma"] < 1e-6, r
    close(r["period"], qm.Potential.quartic(1.0).period(0.0, 10.0), 1e-12)


if __name__ == "__main__":
    for check in (gaussian, oscillator, stationary, inequalities, bounds, comparison):
        check()
        print(f"ok  {check.__name__}")
    print(json.dumps({"ok": True}))

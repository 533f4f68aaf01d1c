"""Invariant suite: flat-unitarity, normalization, consistency and golden values.

Quadrature-sensitive residuals scale as ``dt**2``. Their thresholds are set at
the reference step ``DT_REF`` and scaled by ``(dt / DT_REF)**2`` for coarser
steps, so a doubled step reports residuals about four times larger.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import fields, golden, intensity, pgstate, response, synthesis
from .grid import TimeGrid
from .model import SystemParams, realize

FAULTS = ("perturb-A",)
DT_REF = 1e-3


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float
    threshold: float
    quadrature: bool = False


@dataclass(frozen=True)
class Report:
    checks: tuple
    dt: float
    fault: str | None = None

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "dt": self.dt,
            "fault": self.fault,
            "all_passed": self.all_passed,
            "checks": [asdict(c) for c in self.checks],
        }

    def lines(self):
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            yield f"{tag} {c.name:<34s} residual={c.residual:.3e} threshold={c.threshold:.1e}"


def _check(name, residual, threshold, quadrature=False, dt=DT_REF):
    residual = float(residual)
    if quadrature:
        threshold *= max(1.0, (dt / DT_REF) ** 2)
    return Check(name, bool(residual < threshold), residual, float(threshold), quadrature)


def _rel_l2(x, ref):
    return np.linalg.norm(x - ref) / np.linalg.norm(ref)


def verify(dt: float = 1e-3, fault: str | None = None) -> Report:
    """Run the invariant suite.

    Parameters
    ----------
    dt : float
        Step for every quadrature- and ODE-based check.
    fault : {None, "perturb-A"}
        ``"perturb-A"`` shifts the cavity drift by ``0.1 I`` before the
        flat-unitarity check, which must then fail.
    """
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULTS}")
    grid = TimeGrid(-2.0, 20.0, dt)
    t = grid.times
    nu = fields.ExponentialPulse(1.0)
    xi = fields.photon_pulses([nu], grid)
    cav = realize(SystemParams.cavity(2.0, 1.0))
    dpa = realize(SystemParams.dpa(4.0, 1.0))
    checks = []

    cav_u = cav.perturbed(0.1 * np.eye(2)) if fault == "perturb-A" else cav
    checks.append(_check("flat_unitary_cavity", response.check_flat_unitary(cav_u), 1e-9))
    checks.append(_check("flat_unitary_dpa", response.check_flat_unitary(dpa), 1e-9))

    out_c = intensity.steady_pulses(cav, xi)
    ref = golden.cavity_output_pulse(t, 2.0, 1.0, 1.0)
    checks.append(_check("golden_cavity_pulse", _rel_l2(out_c.xi_minus[:, 0, 0], ref), 1e-3, True, dt))
    n2 = fields.pulse_norm_squared(out_c.xi_minus[:, 0, 0], out_c.onset[0], dt)
    checks.append(_check("passive_photon_conservation", abs(n2 - 1.0), 1e-4, True, dt))

    out_d = intensity.steady_pulses(dpa, xi)
    xm, xp = golden.dpa_output_pulses(t, 4.0, 1.0, 1.0)
    checks.append(_check("golden_dpa_pulse_minus", _rel_l2(out_d.xi_minus[:, 0, 0], xm), 1e-3, True, dt))
    checks.append(_check("golden_dpa_pulse_plus", _rel_l2(out_d.xi_plus[:, 0, 0], xp), 1e-3, True, dt))

    W = intensity.gramian_w(dpa)[0, 0].real
    checks.append(_check("gramian_closed_form", abs(W - golden.dpa_w(4.0, 1.0)), 1e-6))
    kern = response.impulse(dpa).plus(dt * np.arange(int(round(40.0 / dt)) + 1))[:, 0, 0]
    w = np.full(len(kern), dt)
    w[0] = w[-1] = dt / 2
    checks.append(_check("gramian_vs_quadrature", abs(W - np.sum(w * np.abs(kern) ** 2)), 1e-6, True, dt))

    g0 = realize(SystemParams.cavity(2.0, 0.0))
    sol = intensity.integrate_transient(g0, xi, 0.0, 10.0, dt)
    sig_ref = golden.cavity_sigma(sol.times, 2.0, 1.0)
    checks.append(_check("golden_cavity_sigma", np.max(np.abs(sol.Sigma - sig_ref)), 1e-5, True, dt))
    half = intensity.integrate_transient(g0, xi, 0.0, 10.0, dt / 2)
    checks.append(_check("rk4_step_halving", np.max(np.abs(half.Sigma[::2] - sol.Sigma)), 1e-6, True, dt))

    lo = TimeGrid(-20.0, 20.0, dt)
    xi_lo = fields.photon_pulses([nu], lo)
    tr = intensity.transient_intensity(cav, intensity.integrate_transient(cav, xi_lo, -20.0, 5.0, dt), xi_lo).total
    st = intensity.steady_intensity(cav, intensity.steady_pulses(cav, xi_lo)).total
    i0, i5 = lo.index_of(0.0), lo.index_of(5.0)
    k0 = int(round(20.0 / dt))
    checks.append(_check("transient_steady_consistency", np.max(np.abs(tr[k0:k0 + i5 - i0 + 1] - st[i0:i5 + 1])), 1e-2, True, dt))

    state = pgstate.make_state(xi, fields.vacuum_cov(1))
    checks.append(_check("normalization_single_photon", abs(state.norm_value - 1.0), 1e-6, True, dt))
    res = pgstate.transfer_state(dpa, state)
    checks.append(_check("normalization_preservation_dpa", abs(res.output_state.norm_value - 1.0), 1e-3, True, dt))

    Rv = intensity.covariance_transfer(cav, fields.vacuum_cov(1))
    tt = np.linspace(-2.0, 20.0, 100)
    vac = max(np.max(np.abs(Rv.smooth(tt[:, None], tt[None, :]))), np.max(np.abs(Rv.delta_coeff - fields.vacuum_delta(1))))
    checks.append(_check("vacuum_to_vacuum", vac, 1e-8))

    for name, g in (("cavity", cav), ("dpa", dpa)):
        lags, r, _ = response.inverse_composition_residual(g, dt, 10.0)
        off = np.abs(lags) > 0.5 * dt
        checks.append(_check(f"inverse_identity_{name}", np.sqrt(dt * np.sum(np.abs(r[off]) ** 2)), 1e-3, True, dt))

    bs = pgstate.beamsplitter_coefficients(0.5, nu, nu, grid)
    checks.append(_check("hong_ou_mandel", abs(bs.one_in_each_amplitude()), 1e-12))

    p1 = synthesis.synthesize(synthesis.RationalAllPass.first_order(-3.0))
    p2 = synthesis.synthesize(synthesis.RationalAllPass.first_order(-1 - 1j))
    got = [p1.S_minus[0, 0], p1.C_minus[0, 0], p1.C_plus[0, 0], p1.Omega_minus[0, 0], p1.Omega_plus[0, 0],
           p2.S_minus[0, 0], p2.C_minus[0, 0], p2.C_plus[0, 0], p2.Omega_minus[0, 0], p2.Omega_plus[0, 0]]
    want = [1, np.sqrt(6), 0, 0, 0, 1, np.sqrt(2), 0, 1, 0]
    checks.append(_check("shaper_parameters", np.max(np.abs(np.array(got) - np.array(want))), 1e-9))

    return Report(tuple(checks), dt, fault)

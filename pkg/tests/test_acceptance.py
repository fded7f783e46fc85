"""One test per acceptance criterion; each prints a single [PASS]/[FAIL] line."""

import json
import math
import time

import numpy as np
import pytest
import sympy as sp

from fnls_lab.analysis import AdmissiblePair, hls_constant, strichartz_constant
from fnls_lab.cli import main
from fnls_lab.exponents import check_gamma_range, compute_exponents, existence_window, target_exponent
from fnls_lab.families import gaussian_family, gaussian_mix, modulated_gaussians, random_radial
from fnls_lab.grid import l2_norm, make_grid, radial_profile
from fnls_lab.highlow import bourgain_iterate, solve_interaction, split_data
from fnls_lab.modulation import box_piece, build_partition
from fnls_lab.nonlinearity import EquationSpec, gtilde_array, difference_bound_constant, potential_array
from fnls_lab.propagator import apply_propagator, group_property_check
from fnls_lab.solver import (
    calibrate_constant,
    contraction_probe,
    evolve_split_step,
    l2_global_evolve,
    picard_local_solve,
)
from small_configs import config_text
from symbolic import hartree_exponents, power_exponents, scoped_tuples


def _spec(kind, n, b, x):
    if kind == "power":
        return EquationSpec("power", float(b), n, alpha=float(x))
    return EquationSpec("hartree", float(b), n, nu=float(x))


def _slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def test_c01_exponent_reproduction(report):
    tuples = scoped_tuples()
    t0 = time.perf_counter()
    computed = [compute_exponents(_spec(k, n, b, x), float(p)) for k, n, b, x, p in tuples]
    reports = [check_gamma_range(_spec(k, n, b, x), float(p)) for k, n, b, x, p in tuples]
    runtime = time.perf_counter() - t0

    worst = 0.0
    for (kind, n, b, x, p), ex in zip(tuples, computed):
        ref = power_exponents(n, b, x, p) if kind == "power" else hartree_exponents(n, b, x, p)
        for key, val in ref.items():
            got = getattr(ex, key)
            if val == sp.oo:
                worst = max(worst, 0.0 if math.isinf(got) else math.inf)
                continue
            v = float(val)
            worst = max(worst, abs(got - v) / max(abs(v), 1e-300) if v != 0 else abs(got))
    consistent = all(r.consistent for r in reports)
    both_sides = {(r.below_threshold, r.exponent_positive) for r in reports if r.applicable}
    ok = len(tuples) >= 100 and worst <= 1e-12 and consistent and runtime < 1.0 and len(both_sides) == 2
    report(1, "exponent reproduction", ok,
           f"{len(tuples)} tuples, max rel err {worst:.2e} (<= 1e-12), p<p_max <=> exponent>0 on all: "
           f"{consistent}, runtime {runtime:.3f}s (< 1s)")
    assert ok


def test_c02_conservation(report):
    g = make_grid(2, 8.0, 128)
    spec = EquationSpec("power", 1.5, 2, alpha=1.0)
    u0 = radial_profile(g, "gaussian", a=1.0)
    t0 = time.perf_counter()
    ds = evolve_split_step(u0, spec, 1.0, 1000, snapshots=10).mass_drift()
    dp = l2_global_evolve(u0, spec, 1.0).trajectory.mass_drift()
    runtime = time.perf_counter() - t0
    ok = ds <= 1e-10 and dp <= 1e-8 and runtime < 120
    report(2, "mass conservation", ok,
           f"split-step drift {ds:.2e} (<= 1e-10), Picard drift {dp:.2e} (<= 1e-8), runtime {runtime:.1f}s")
    assert ok


def test_c03_spectral_correctness(report):
    g = make_grid(2, 4.0, 64)
    part = build_partition(g)
    fam = modulated_gaussians(g, 5, seed=0)
    pu = float(np.max(np.abs(sum(part.sigma(k) for k in part.blocks) - 1.0)))
    rec = max(float(l2_norm(sum(box_piece(f, part, k).values for k in part.blocks) - f.values, g) / f.norm())
              for f in fam)
    uni = max(abs(apply_propagator(f, b, t).norm() - f.norm()) / f.norm()
              for f in fam for b in (0.8, 1.5, 2.0) for t in (-1.3, 0.1, 2.7))
    grp = max(group_property_check(f, b, 0.3, -1.1) for f in fam for b in (0.8, 1.5, 2.0))
    gg = make_grid(2, 8.0, 128)
    gauss = radial_profile(gg, "gaussian", a=1.0)
    cf = 0.0
    for t in (0.01, 0.05, 0.1):
        z = 1 + 4j * np.pi * t
        exact = z ** (-1.0) * np.exp(-np.pi * gg.radius**2 / z)
        cf = max(cf, float(np.max(np.abs(apply_propagator(gauss, 2.0, t).values - exact))))
    ok = pu <= 1e-12 and rec <= 1e-11 and uni <= 1e-12 and grp <= 1e-11 and cf <= 1e-6
    report(3, "spectral correctness", ok,
           f"partition {pu:.1e}, reconstruction {rec:.1e}, unitarity {uni:.1e}, group law {grp:.1e}, "
           f"beta=2 closed form {cf:.1e}")
    assert ok


def _contraction_instances():
    g = make_grid(2, 8.0, 64)
    rr = random_radial(g, 3, seed=5)
    return [
        (EquationSpec("power", 1.5, 2, alpha=1.0), radial_profile(g, "gaussian", amplitude=2.0)),
        (EquationSpec("power", 1.5, 2, alpha=1.0), radial_profile(g, "sech-bump", amplitude=3.0)),
        (EquationSpec("power", 1.5, 2, alpha=0.5), radial_profile(g, "gaussian", amplitude=4.0)),
        (EquationSpec("power", 1.8, 2, alpha=1.2), radial_profile(g, "ring", amplitude=2.0, r0=2.5, sigma=1.0)),
        (EquationSpec("power", 1.5, 2, alpha=1.0, sign=-1), rr[0] * 3),
        (EquationSpec("power", 1.9, 2, alpha=1.5), rr[1] * 2),
        (EquationSpec("power", 1.7, 2, alpha=0.8, coupling=2.0), rr[2] * 2),
        (EquationSpec("hartree", 1.5, 2, nu=1.0), radial_profile(g, "gaussian", amplitude=3.0)),
        (EquationSpec("hartree", 1.8, 2, nu=0.6), radial_profile(g, "sech-bump", amplitude=3.0)),
        (EquationSpec("hartree", 1.5, 2, nu=0.5, sign=-1), rr[0] * 3),
    ]


def test_c04_contraction_evidence(report):
    worst, halving, scoped = 0.0, True, True
    for spec, u0 in _contraction_instances():
        scoped &= spec.hypotheses_hold
        C = calibrate_constant(u0, spec)
        rule = "power_mass" if spec.kind == "power" else "hartree_mass"
        T = existence_window({"u0": u0.norm()}, spec, rule, C).T
        res = picard_local_solve(u0, spec, T, 1e-10)
        worst = max(worst, res.log.max_ratio)
        halving &= contraction_probe(u0, spec, T / 2) < contraction_probe(u0, spec, T)
        scoped &= res.log.converged
    ok = scoped and worst < 1 and halving
    report(4, "contraction evidence", ok,
           f"10 instances (7 power, 3 Hartree), calibrated C, max ratio {worst:.3f} (< 1), "
           f"halving T lowers the ratio in all: {halving}")
    assert ok


def test_c05_oracle_equivalence(report):
    g = make_grid(2, 8.0, 64)
    cases = [
        (EquationSpec("power", 1.5, 2, alpha=1.0), radial_profile(g, "gaussian", a=1.0), 0.25),
        (EquationSpec("power", 1.5, 2, alpha=0.6), radial_profile(g, "sech-bump", amplitude=1.5), 0.25),
        (EquationSpec("power", 1.8, 2, alpha=1.0, sign=-1), random_radial(g, 1, seed=2)[0], 0.2),
        (EquationSpec("hartree", 1.5, 2, nu=1.0), radial_profile(g, "gaussian", a=1.0), 0.25),
        (EquationSpec("hartree", 1.6, 2, nu=0.5), radial_profile(g, "ring", r0=2.0, sigma=1.0), 0.2),
    ]
    gaps, orders = [], []
    for spec, u0, T in cases:
        pic = picard_local_solve(u0, spec, T, 1e-12, subintervals=32).trajectory.final.values
        errs = [float(l2_norm(evolve_split_step(u0, spec, T, s).final.values - pic, g) / l2_norm(pic, g))
                for s in (100, 200, 400)]
        gaps.append(errs[-1])
        orders.append(math.log2(errs[1] / errs[2]))
    ok = max(gaps) <= 1e-5 and min(orders) > 1.5
    report(5, "Picard vs split-step", ok,
           f"5 instances, max gap after refinement {max(gaps):.2e} (<= 1e-5), observed orders "
           f"{min(orders):.2f}-{max(orders):.2f}")
    assert ok


def test_c06_difference_bound_and_hls(report):
    mc = {}
    mc_ok = True
    for a in (0.5, 1.0, 2.0):
        chunks = difference_bound_constant(a, samples=100_000, seed=0, chunks=5)
        C = max(chunks)
        spread = (max(chunks) - min(chunks)) / C
        mc[a] = (C, spread)
        mc_ok &= math.isfinite(C) and spread <= 0.05 and C <= (a + 1) * max(1.0, 3 ** (a - 1))
    hls = {}
    for n, nu, L, M in ((2, 1.0, 8.0, 64), (3, 1.2, 4.0, 32)):
        g = make_grid(n, L, M)
        st = hls_constant(gaussian_family(g, widths=(1.0, 1.5, 2.0)) + random_radial(g, 2, seed=1), nu, 1.2)
        hls[(n, nu)] = st
    hls_ok = all(math.isfinite(s.max_ratio) and s.refinement_drift <= 0.10 for s in hls.values())
    g = make_grid(2, 4.0, 64)
    ident = 0.0
    for seed in range(5):
        v, w1, w2 = (f.values for f in modulated_gaussians(g, 3, seed=seed))
        direct = potential_array(v + w1, g, 1.0) * (v + w1) - potential_array(v + w2, g, 1.0) * (v + w2)
        ident = max(ident, float(l2_norm(gtilde_array(v, w1, w2, g, 1.0) - direct, g) / l2_norm(direct, g)))
    ok = mc_ok and hls_ok and ident <= 1e-10
    mc_txt = ", ".join(f"C_{a:g}={c:.3f} (chunk spread {s:.1%})" for a, (c, s) in mc.items())
    hls_txt = ", ".join(f"HLS{k}={s.max_ratio:.3f} (drift {s.refinement_drift:.1%})" for k, s in hls.items())
    report(6, "Monte-Carlo constants", ok, f"{mc_txt}; {hls_txt}; split identity {ident:.1e} (<= 1e-10)")
    assert ok


def test_c07_splitting_slopes(report):
    g = make_grid(2, 8.0, 128)
    part = build_partition(g)
    u = gaussian_mix(g)
    t0 = time.perf_counter()
    Ns = np.array([2.0, 4.0, 8.0, 16.0])
    res = [split_data(u, 2.2, 3.0, N, part) for N in Ns]
    runtime = time.perf_counter() - t0
    sv = _slope(Ns, [r.measured_v_norm for r in res])
    sw = _slope(Ns, [r.measured_w_norm for r in res])
    gamma = res[0].gamma
    ok = abs(gamma - 0.375) < 1e-12 and sv <= gamma + 0.15 and sw <= -0.85 and runtime < 300
    report(7, "splitting slopes", ok,
           f"slope v {sv:.3f} (<= {gamma + 0.15:.3f}), slope w {sw:.3f} (<= -0.85), runtime {runtime:.1f}s")
    assert ok


def _interaction_slope(spec, p, Ts):
    g = make_grid(2, 8.0, 128)
    s = split_data(gaussian_mix(g), p, target_exponent(spec), 4.0, build_partition(g))
    sup = []
    for T in Ts:
        ve = l2_global_evolve(s.v, spec, T, keep_nodes=True)
        sup.append(solve_interaction(ve.trajectory, s.w, spec, T).sup_norm)
    return _slope(Ts, sup), s, ve


def test_c08_interaction_scaling(report):
    pw = EquationSpec("power", 1.5, 2, alpha=1.0)
    hr = EquationSpec("hartree", 1.5, 2, nu=1.0)
    kappa = compute_exponents(pw).kappa
    theta4 = compute_exponents(hr).theta / 4
    sp_, split, ve = _interaction_slope(pw, 2.2, [1 / 16, 1 / 8, 1 / 4, 1 / 2])
    sh, _, _ = _interaction_slope(hr, 2.05, [1 / 512, 1 / 256, 1 / 128, 1 / 64])
    zero = solve_interaction(ve.trajectory, split.w * 0.0, pw)
    exact_zero = not np.any(zero.trajectory.values) and not np.any(zero.trajectory.node_values)
    ok = sp_ >= kappa - 0.1 and sh >= theta4 - 0.1 and exact_zero
    report(8, "interaction-term scaling", ok,
           f"power slope {sp_:.3f} (>= {kappa - 0.1:.3f}), Hartree slope {sh:.3f} (>= {theta4 - 0.1:.3f}), "
           f"w == 0 for psi == 0: {exact_zero}")
    assert ok


@pytest.mark.slow
def test_c09_bourgain_end_to_end(report):
    g = make_grid(2, 8.0, 128)
    part = build_partition(g)
    u0 = gaussian_mix(g)
    out = []
    ok = True
    t0 = time.perf_counter()
    # power: K_max 65 lets the run reach the horizon (64 full windows cover 0.498)
    runs = [("power", EquationSpec("power", 1.5, 2, alpha=1.0), 2.2, 65),
            ("Hartree", EquationSpec("hartree", 1.5, 2, nu=1.0), 2.05, 64)]
    for label, spec, p, kmax in runs:
        led = bourgain_iterate(u0, spec, p, 4.0, 0.5, K_max=kmax, part=part, subintervals=8)
        gap = led.max_composed_gap
        good = led.chain_ok and gap is not None and gap <= 1e-5 and not led.status.startswith("stalled")
        ok &= good
        out.append(f"{label}: K={led.K}, KT={led.achieved_horizon:.4f}, status {led.status}, "
                   f"chain ok {led.chain_ok}, max gap {gap:.1e}")
    runtime = time.perf_counter() - t0
    ok &= runtime < 900
    report(9, "Bourgain iteration", ok, "; ".join(out) + f"; runtime {runtime:.0f}s (< 900s)")
    assert ok


def test_c10_strichartz_stability(report):
    g = make_grid(2, 8.0, 64)
    fam = random_radial(g, 4, seed=3) + gaussian_family(g, widths=(1.0, 2.0))
    s34 = strichartz_constant(fam, 1.5, (3, 4), T=1.0, snapshots=32)
    g3 = make_grid(3, 4.0, 32)
    sinf = strichartz_constant(random_radial(g3, 3, seed=3), 1.5, (math.inf, 2), T=1.0, snapshots=16)
    try:
        AdmissiblePair(math.inf, 2.0, 1.5, 2)
        rejected = False
    except ValueError:
        rejected = True
    ok = s34.stable and sinf.stable and rejected
    report(10, "Strichartz stability", ok,
           f"(3,4) n=2: {s34.max_ratio:.4f}, drift {s34.refinement_drift:.1e}; (inf,2) n=3: "
           f"{sinf.max_ratio:.4f}, drift {sinf.refinement_drift:.1e} (<= 10%); (inf,2,2) rejected: {rejected}")
    assert ok


SCENARIOS = ["exponents", "evolve", "norms", "split", "interaction", "bourgain", "strichartz", "verify"]


def test_c11_determinism(report, tmp_path):
    mismatched = []
    count = 0
    for scenario in SCENARIOS:
        for kind in ("power", "hartree"):
            if scenario == "verify" and kind == "hartree":
                continue
            cfg = tmp_path / f"{scenario}_{kind}.ini"
            cfg.write_text(config_text(scenario, kind))
            outs = []
            for label, threads in (("a", 1), ("b", 1), ("c", 8), ("d", 8)):
                d = tmp_path / f"{scenario}_{kind}_{label}"
                assert main(["run", str(cfg), "--out-dir", str(d), "--threads", str(threads)]) == 0
                outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
            count += 1
            if any(o != outs[0] for o in outs[1:]):
                mismatched.append(f"{scenario}/{kind}")
            json.loads(next(v for k, v in outs[0].items() if k.endswith(".json")))
    ok = not mismatched
    report(11, "determinism", ok,
           f"{count} scenario configs, 2 runs each at 1 and 8 threads, byte-identical JSON/CSV: "
           f"{'all' if ok else 'mismatch in ' + ', '.join(mismatched)}")
    assert ok

"""Exact rational evaluation of the exponent formulas, independent of fnls_lab.exponents."""

import sympy as sp


def power_exponents(n, beta, alpha, p):
    n, b, a, p = (sp.nsimplify(v) for v in (n, beta, alpha, p))
    omega = 1 - n * a / (2 * b)
    kappa = n * a / (2 * b * (a + 2))
    case = a - n * a**2 / (2 * b * (a + 2)) - 1 + n * a / (2 * b)
    p_max = 2 + 2 / (a + 1) - n * a / (b * (a + 1)) if case > 0 else a + 2
    gamma = (sp.Rational(1, 2) - 1 / p) / (1 / p - 1 / (a + 2))
    horizon = 1 - gamma * (-1 + a * (1 - kappa) / omega)
    bound = omega / case if case > 0 else sp.oo
    return dict(omega=omega, kappa=kappa, case_value=case, p_max=p_max, gamma=gamma,
                horizon_exponent=horizon, gamma_bound=bound, s_c=n / 2 - b / a)


def hartree_exponents(n, beta, nu, s):
    n, b, v, s = (sp.nsimplify(x) for x in (n, beta, nu, s))
    theta = v / b
    s_max = 2 * n * (4 * b - v) / (n * (4 * b - v) - v * (b - v))
    gt = (sp.Rational(1, 2) - 1 / s) / (1 / s - (2 * n - v) / (4 * n))
    horizon = 1 - gt * (2 + theta) / (2 * (1 - theta))
    return dict(theta=theta, s_max=s_max, gamma_tilde=gt, horizon_exponent=horizon,
                gamma_bound=2 * (1 - theta) / (2 + theta), s_c=(v - b) / 2)


def scoped_tuples():
    """Deterministic sweep of parameter tuples inside the well-posedness hypotheses with rational entries."""
    out = []
    betas = [sp.Rational(k, 8) for k in range(11, 16)]  # 1.375 .. 1.875
    for n in (2, 3):
        for b in betas:
            if not sp.Rational(2 * n, 2 * n - 1) < b < 2:
                continue
            amax = 2 * b / n
            for j in range(1, 5):
                a = amax * sp.Rational(j, 5)
                r = a + 2
                for i in range(1, 4):
                    p = 2 + (r - 2) * sp.Rational(i, 4)
                    out.append(("power", n, b, a, p))
            for j in range(1, 4):
                v = min(b, n) * sp.Rational(j, 4)
                r = sp.Rational(4 * n) / (2 * n - v)
                for i in range(1, 4):
                    s = 2 + (r - 2) * sp.Rational(i, 4)
                    out.append(("hartree", n, b, v, s))
    return out

"""High-precision noncentral t density and interval-null evidence oracles.

Values printed here are frozen into the C++ unit tests.
"""
import mpmath as mp

mp.mp.dps = 40


def nct_pdf_hyp(t, nu, lam):
    """Closed form: expand exp(t*lam*s) in the chi-mixture integral, even/odd terms give two 1F1."""
    t, nu, lam = mp.mpf(t), mp.mpf(nu), mp.mpf(lam)
    A = nu + t**2
    B = t * lam
    z = B**2 / (2 * A)
    c = 2 * (nu / 2) ** (nu / 2) / mp.gamma(nu / 2) / mp.sqrt(2 * mp.pi) * mp.exp(-lam**2 / 2)
    even = 2 ** ((nu - 1) / 2) * mp.gamma((nu + 1) / 2) * A ** (-(nu + 1) / 2) * mp.hyp1f1((nu + 1) / 2, mp.mpf(1) / 2, z)
    odd = B * 2 ** (nu / 2) * mp.gamma(nu / 2 + 1) * A ** (-(nu / 2 + 1)) * mp.hyp1f1(nu / 2 + 1, mp.mpf(3) / 2, z)
    return c * (even + odd)


def nct_pdf_int(t, nu, lam):
    t, nu, lam = mp.mpf(t), mp.mpf(nu), mp.mpf(lam)
    logc = mp.log(2) + (nu / 2) * mp.log(nu / 2) - mp.loggamma(nu / 2)
    f = lambda s: s * mp.npdf(t * s - lam) * mp.exp(logc + (nu - 1) * mp.log(s) - nu * s**2 / 2)
    return mp.quad(f, [0, 0.5, 1, 1.5, 3, mp.inf])


def cauchy_pdf(x, r):
    return 1 / (mp.pi * r * (1 + (x / r) ** 2))


def evidence(n1, n2, d, sp, m, r):
    n1, n2 = mp.mpf(n1), mp.mpf(n2)
    se = sp * mp.sqrt(1 / n1 + 1 / n2)
    t = mp.mpf(d) / se
    nu = n1 + n2 - 2
    neff = mp.sqrt(n1 * n2 / (n1 + n2))
    ms = mp.mpf(m) / sp
    r = mp.mpf(r)
    post = lambda x: nct_pdf_hyp(t, nu, x * neff) * cauchy_pdf(x, r)
    c = t / neff
    pts = sorted(set([-ms, ms, c - 2, c + 2, c]))
    inside = mp.quad(post, [-ms, c, ms] if -ms < c < ms else [-ms, ms])
    out_lo = mp.quad(post, [-mp.inf, -ms])
    out_hi = mp.quad(post, [ms, mp.inf])
    mass_in = 2 * mp.atan(ms / r) / mp.pi
    bf = (inside / mass_in) / ((out_lo + out_hi) / (1 - mass_in))
    total = inside + out_lo + out_hi
    # q*: mass of highest-density region cut at the larger ROPE-edge density
    lp = lambda x: mp.log(post(x))
    mode = mp.findroot(lambda x: mp.diff(lp, x), c * 0.9)
    if abs(mode) >= ms:
        return bf, mp.mpf(0)
    level = max(lp(-ms), lp(ms))
    if lp(ms) >= lp(-ms):
        a = mp.findroot(lambda x: lp(x) - level, (-ms, mode), solver='anderson')
        b = ms
    else:
        a = -ms
        b = mp.findroot(lambda x: lp(x) - level, (mode, ms), solver='anderson')
    q = mp.quad(post, [a, mode, b]) / total
    return bf, q


if __name__ == "__main__":
    for (t, nu, lam) in [(2.0, 98, 1.5), (-1.0, 8, 0.5), (0.5, 998, -3.0), (3.0, 198, 3.5), (0.0, 20, 0.0)]:
        h = nct_pdf_hyp(t, nu, lam)
        i = nct_pdf_int(t, nu, lam)
        print(f"nct t={t} nu={nu} lam={lam}: {mp.nstr(h, 17)} (integral route {mp.nstr(i, 17)})")
    for args in [(100, 100, 0.1, 1.0, 0.3, 1 / mp.sqrt(2)), (100, 100, -0.1, 1.0, 0.3, 1 / mp.sqrt(2)),
                 (50, 50, 0.05, 0.9, 0.2, 0.5 / mp.sqrt(2)), (250, 250, 0.25, 1.1, 0.3, 2 / mp.sqrt(2))]:
        bf, q = evidence(*args)
        print(f"evidence {tuple(float(a) for a in args)}: bf={mp.nstr(bf, 17)} q={mp.nstr(q, 17)}")

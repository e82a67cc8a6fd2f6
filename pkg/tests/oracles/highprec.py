"""High-precision reference values, independent of the package code.

The steady state is solved with mpmath at 40 digits from the zero-profit,
free-entry, factor-price and Euler conditions. Gamma comes from quadrature of
the Pareto density, not from its closed form. Run as a script to print the
values frozen in ``tests/reference_values.py``.
"""

import mpmath as mp

mp.mp.dps = 40


def gamma_quad(theta, mu, nu):
    m = mu - nu
    val = mp.quad(lambda a: a ** (1 / m) * theta * a ** (-theta - 1), [1, 2, 10, mp.inf])
    return val ** m


def steady(sigma=1, beta="0.96", delta="0.08", alpha="0.25", nu="1.02", mu="1.245", phi="0.85",
           kappa="0.017", theta=10):
    beta, delta, alpha, nu, mu, phi, kappa, theta = (mp.mpf(x) for x in (beta, delta, alpha, nu, mu, phi, kappa, theta))
    G = gamma_quad(theta, mu, nu)
    m = mu - nu
    # zero profit: (w/Y) N phi = (1 - nu/mu) (Abar/Ahat)**(1/m), with w/Y = (1-alpha) nu/(mu u), N phi = 1-u
    u = mp.findroot(lambda u: (1 - alpha) * nu * (1 - u) / (mu * u) - (1 - nu / mu) * G ** (-1 / m), mp.mpf("0.8"))
    N = (1 - u) / phi
    omega = N ** (1 - nu) * u ** ((1 - alpha) * nu)
    r = 1 / beta - (1 - delta)

    def system(lnK, lnA):
        K, A = mp.exp(lnK), mp.exp(lnA)
        Y = omega * G * A * K ** (alpha * nu)
        w = (1 - alpha) * nu / mu * Y / u
        return [mp.log(alpha * nu / mu * Y / K / r),
                mp.log(w / (kappa / phi * (theta * m - 1) * A ** theta))]

    lnK, lnA = mp.findroot(system, (mp.mpf(1), mp.mpf("0.4")))
    K, A = mp.exp(lnK), mp.exp(lnA)
    Y = omega * G * A * K ** (alpha * nu)
    w = (1 - alpha) * nu / mu * Y / u
    return {"gamma": G, "u": u, "N": N, "omega": omega, "K": K, "Y": Y, "C": Y - delta * K, "Abar": A,
            "J": 1 - A ** (-theta), "w": w, "TFP": omega * G * A, "labour_share": w / Y}


def kappa_bound(**kw):
    """Entry cost at which the cutoff technology equals one."""
    return mp.exp(mp.findroot(lambda lk: mp.log(steady(kappa=mp.exp(lk), **kw)["Abar"]), mp.log("0.5")))


if __name__ == "__main__":
    for k, v in steady().items():
        print(f"    {k!r}: {mp.nstr(v, 20)},")
    print("    'kappa_max':", mp.nstr(kappa_bound(), 20))
    print("    nu=1.05 mu=1.21:", {k: mp.nstr(v, 20) for k, v in steady(nu="1.05", mu="1.21").items() if k in ("K", "TFP", "Abar")})

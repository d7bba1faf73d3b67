"""Smoke test for the sensbound_py extension.

Build and run:
    maturin develop -m crates/python/Cargo.toml
    python crates/python/python/smoke_test.py
"""

import json
import math

import sensbound_py as sb


def main():
    # e^{-s}/s with gain 1: stable, crossing where 2w sin w = 1
    loop = sb.TransferFunction([1.0], [0.0, 1.0], dead_time=1.0)
    g = sb.Sensitivity(loop)
    assert g.alpha == [] and g.beta == []
    w = 0.9
    assert abs(g.magnitude(w) - abs(1.0 / (1.0 + loop.eval(w)))) < 1e-12

    # unstable pole: 2/(s - 1) is stabilised by unity feedback
    g2 = sb.Sensitivity(sb.TransferFunction([2.0], [-1.0, 1.0]))
    assert len(g2.alpha) == 1 and abs(g2.alpha[0] - 1.0) < 1e-9
    r = g2.poisson(sigma=2.0)
    assert abs(r.residual) < 1e-3, r
    mod = g2.modified()
    assert abs(mod.magnitude(3.0) - g2.magnitude(3.0)) < 1e-12

    case = sb.load_case("sopdt")
    assert case.controllers == ["sl2008", "rc2006", "sl2007"]
    s = sb.Sensitivity(case.open_loop("sl2008"))
    ix = s.indices(split=0.4498)
    assert abs(ix.s_max - 4.992) < 0.05 * 4.992, ix
    bound = sb.weighted_bound(ix, sigma=2.0 / 0.939, alpha=s.alpha)
    assert abs(bound - 0.2267) < 0.03 * 0.2267, bound
    assert math.log(ix.s_max) >= bound
    b = s.bode()
    assert abs(b.lhs - math.pi / 5) < 1e-3, b

    again = sb.parse_case(case.to_text())
    assert again.to_text() == case.to_text()

    report = json.loads(sb.load_case("cstr").run(skip_integrals=True))
    assert report["schema_version"] == 1

    try:
        sb.load_case("nope")
    except sb.SensboundError:
        pass
    else:
        raise AssertionError("unknown case accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()

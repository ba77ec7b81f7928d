"""Quick check that the extension imports and the main entry points work.

    pip install maturin && maturin develop -m crates/python/Cargo.toml --release
    python python/smoke_test.py
"""
import math

import bcs_entanglement as bcs


def main():
    spec = bcs.ModelSpec(12, 1.0)
    ed = bcs.solve_ed(spec)
    bethe = bcs.solve_bethe(spec)
    print(spec)
    print(" ed   ", ed)
    print(" bethe", bethe)
    assert abs(ed.energy - bethe.energy) < 1e-9 * abs(ed.energy)

    lam = 0.5
    assert abs(bcs.alc_uniform(lam) - 1 / (lam * math.sinh(1 / lam))) < 1e-14
    for profile in ("square", "abs", "uniform", "parabolic", "tent"):
        print(f" C({profile}, λ=1) = {bcs.alc_thermo(1.0, profile):.6f}")

    rows = bcs.bethe_sweep(24, [0.05 * k for k in range(1, 41)])
    best = max(rows, key=lambda r: r.ratio)
    print(f" L=24 ratio peaks near λ={best.coupling:.2f} at {best.ratio:.4f}")
    kind, lam_star, peak = bcs.ratio_threshold(24)
    print(f" refined threshold: {kind} λ*={lam_star:.4f} ratio={peak:.4f}")
    assert kind == "interior" and abs(lam_star - best.coupling) < 0.05

    print("smoke test passed")


if __name__ == "__main__":
    main()

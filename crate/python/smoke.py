"""Smoke test for the prosody_probe extension module.

Build and run:

    maturin develop -m crates/py/Cargo.toml
    python python/smoke.py

or without maturin:

    cargo build -p prosody-probe-py --features extension-module --release
    cp target/release/libprosody_probe_py.so python/prosody_probe.so
    python python/smoke.py
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import prosody_probe as pp


def check(name, ok, detail=""):
    print(f"[{'ok' if ok else 'FAIL'}] {name} {detail}")
    if not ok:
        sys.exit(1)


def main():
    sr = 16000
    tone = [0.5 * math.sin(2 * math.pi * 220.0 * n / sr) for n in range(sr)]
    pitch = pp.extract_pitch(tone)
    voiced = [v for v, m in zip(pitch.values, pitch.voiced) if m]
    err = max(abs(v - math.log(220.0)) for v in voiced)
    check("pitch", err < 0.05, f"{pitch!r}, max log-f0 error {err:.4f}")

    energy = pp.extract_energy([2 * x for x in tone])
    base = pp.extract_energy(tone)
    delta = max(abs(a - b - math.log(2)) for a, b in zip(energy.values, base.values))
    check("energy", delta < 1e-5, f"max |delta - ln 2| {delta:.2e}")

    stack = pp.extract_features("fbank", tone, causal=True)
    check("features", (stack.num_layers, stack.dim) == (1, 240), repr(stack))

    toy = pp.LayerFeatureStack([[[1.0, 2.0]], [[3.0, 6.0]]], 20)
    check("aggregate", pp.aggregate(toy, pp.LayerWeights([0.0, 0.0])) == [[2.0, 4.0]])
    check("horizon", pp.horizon_frames(0.12, 20) == 6)

    with tempfile.TemporaryDirectory() as root:
        manifest = pp.write_glide_corpus(os.path.join(root, "glide"), 20, 1.0, 7)
        results = os.path.join(root, "results.jsonl")
        result = pp.run_task("ProR", manifest, "fbank", feature="pitch",
                             learning_rate=1e-2, train_steps=500, results_path=results)
        check("run_task", result["value"] < 1.0, f"ProR pitch MSE {result['value']:.4f}")
        rows = pp.read_results(results)
        check("results store", len(rows) == 1 and rows[0]["config_fingerprint"] == result["config_fingerprint"])
    print("smoke test passed")


if __name__ == "__main__":
    main()

"""Smoke test for the stemset_py extension.

Build and install first:

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/stemset_py-*.whl
    python python/smoke_test.py
"""

import math
import pathlib
import tempfile

import stemset_py as s

SR = 16000


def tone(freq, n=SR):
    return s.Waveform([0.5 * math.sin(2 * math.pi * freq * i / SR) for i in range(n)], SR)


def main():
    low, high = tone(440.0), tone(3520.0)
    mix = s.mix_subset([("low", low), ("high", high)], ["low", "high"])
    assert len(mix) == SR

    assert s.si_sdr(low, low) == 60.0
    assert abs(s.rms_dbfs(tone(1000.0).scaled(2.0)) + 3.0103) < 1e-3
    assert s.rms_dbfs(s.Waveform.zeros(SR, SR)) == -120.0

    est = s.separate("ideal_ratio_mask", mix, ["low", "high"], references={"low": low, "high": high})
    for label, ref in (("low", low), ("high", high)):
        score = s.si_sdr(est[label], ref)
        assert score >= 20.0, (label, score)
        print(f"irm {label}: si_sdr {score:.1f} dB, sdri {s.sdri(est[label], ref, mix):.1f} dB")

    loss = s.composite_loss(est["low"], low)
    assert loss["composite"] > 0.0 and math.isfinite(loss["composite"])
    silent = s.Waveform.zeros(SR, SR)
    assert s.composite_loss(silent, silent)["composite"] == 0.0

    assert len(s.enumerate_subsets(["A", "B", "LV", "S", "T", "VP"])) == 63
    stats = s.detection_f1([("low", True, True), ("high", False, False)])
    assert stats["all"]["f1"] == 1.0

    with tempfile.TemporaryDirectory() as tmp:
        path = pathlib.Path(tmp) / "mix.wav"
        assert s.write_wav(str(path), mix) == 0
        back = s.read_wav(str(path))
        assert back.sample_rate == SR and len(back) == SR

    print("smoke test passed")


if __name__ == "__main__":
    main()

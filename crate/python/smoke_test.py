"""Smoke test for the qlnc extension module.

Build and install first:
    pip install --no-build-isolation ./crates/python
"""

import math
import pathlib

import qlnc

NETWORKS = pathlib.Path(__file__).resolve().parent.parent / "networks"


def main():
    swap = qlnc.Network.load(str(NETWORKS / "butterfly_swap.json"))
    assert swap.validate() == []
    assert swap.run_classical([1, 2]) == [2, 1]
    assert swap.composite() == [[0, 1], [1, 0]]

    counts = swap.counts()
    assert (counts["qudits"], counts["entangling_ops"], counts["classical_messages_extra"]) == (20, 30, 18)
    geometry = swap.compile_mbqc()
    assert len(geometry["edges"]) == 21

    h = 1 / math.sqrt(2)
    amps = [0j] * 9
    amps[0] = amps[8] = complex(h, 0)
    bell = qlnc.State.from_amplitudes(amps, 3)
    want = qlnc.oracle(swap, bell)

    for mode in ("free", "constrained"):
        out, report = qlnc.run_coherent(swap, bell, mode=mode, seed=3)
        assert abs(out.fidelity(want) - 1) < 1e-9, report
        for xc in ("propagate", "local"):
            out, report = qlnc.run_mbqc(swap, bell, mode=mode, seed=3, x_correction=xc)
            assert abs(out.fidelity(want) - 1) < 1e-9
            assert abs(report["fidelity_vs_oracle"] - 1) < 1e-9
            replay, _ = qlnc.run_mbqc(swap, bell, mode=mode, forced=report["outcome_vector"], x_correction=xc)
            assert abs(replay.fidelity(out) - 1) < 1e-9

    multicast = qlnc.Network.example("butterfly_multicast", 2)
    out, _ = qlnc.run_mbqc(multicast, qlnc.State.basis([1, 0], 2), seed=7)
    assert abs(out.fidelity(qlnc.State.basis([1, 0, 1, 0], 2)) - 1) < 1e-9

    bad = qlnc.Network.load(str(NETWORKS / "non_injective.json"))
    try:
        qlnc.run_coherent(bad, qlnc.State.basis([1, 1], 3))
    except RuntimeError as e:
        assert "injective" in str(e)
    else:
        raise AssertionError("non-injective network ran")

    cyclic = qlnc.Network.load(str(NETWORKS / "cyclic.json"))
    assert any("cycle" in v for v in cyclic.validate())

    print("smoke test passed")


if __name__ == "__main__":
    main()

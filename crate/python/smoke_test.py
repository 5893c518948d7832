"""Smoke test for the pyqmpso extension: build with `pip install --no-build-isolation crates/python`."""

import json
import math
import tempfile

import pyqmpso as q


def main():
    model = q.Tfim(6)
    times, entropies, final = q.tebd(model, chi=4, t_final=0.5, keep_every=10)
    assert len(times) == len(entropies) and final.sites == 6
    assert max(final.bond_dims()) <= 4

    exact = q.exact_state(model, 0.5)
    trotter = q.trotter_state(model, 0.5)
    assert trotter.fidelity(exact) > 0.999

    circuit, report = q.qmps_compile(final, layers=2, max_sweeps=200)
    assert circuit.gate_count == 10
    assert report["final_fidelity"] > 0.99
    assert report["min_update_gain"] >= -1e-12

    qmpo, qmpo_report = q.qmpo_compile(model, 0.1, layers=1, max_sweeps=50)
    assert qmpo_report["final_fidelity"] > 0.99

    composed = q.compose_qmpso(circuit, qmpo, t_max_mps=0.5, t_max_mpo=0.1, t=0.8)
    assert composed.gate_count == 5 * (2 + 3)
    round_trip = q.Circuit.from_json(composed.to_json())
    assert round_trip.gate_count == composed.gate_count

    psi = composed.apply(q.Statevector.neel(6))
    a = q.alpha(1e-3, composed.gate_count)
    assert math.isclose(a, math.exp(-1e-3 * composed.gate_count))
    f = q.noisy_fidelity(psi, a, q.exact_state(model, 0.8))
    assert 0.0 < f <= 1.0
    assert q.operator_entropy(psi, a) > 0.0
    assert q.max_useful_layers(12) == 2

    cnot = [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0]
    angles = q.kak_angles([complex(x) for x in cnot])
    assert abs(angles[0] - math.pi / 4) < 1e-9

    with tempfile.TemporaryDirectory() as d:
        overrides = {"model": {"L": 6}, "chis": [2, 4], "t_final": 1.0}
        files = q.run_experiment("fig2", d, json.dumps(overrides))
        assert any(f.endswith("entropy.csv") for f in files)

    try:
        q.Tfim(1)
    except ValueError:
        pass
    else:
        raise AssertionError("Tfim(1) should be rejected")
    print("pyqmpso smoke test passed")


if __name__ == "__main__":
    main()

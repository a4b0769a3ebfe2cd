"""Smoke test for the spectra_svi extension module.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/spectra_svi-*.whl
then run `python python/smoke_test.py`.
"""

import math
import tempfile
from pathlib import Path

import spectra_svi as ss


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def trace(m):
    return sum(m[i][i] for i in range(len(m)))


def main():
    # Gibbs state of a diagonal dual is a softmax of the diagonal.
    x = ss.gibbs_map([[0.0, 0.0], [0.0, math.log(3.0)]])
    assert close(x[0][0].real, 0.25) and close(x[1][1].real, 0.75), x
    assert close(trace(x).real, 1.0)

    y = [[1.0, 0.5 - 0.25j], [0.5 + 0.25j, -2.0]]
    x = ss.gibbs_map(y)
    assert close(trace(x).real, 1.0)
    # Fenchel coupling equals the divergence to the Gibbs state.
    q = [[0.3, 0.1j], [-0.1j, 0.7]]
    assert close(ss.fenchel_coupling(q, y), ss.von_neumann_divergence(q, x), 1e-10)
    assert ss.von_neumann_divergence(x, x) < 1e-12

    xb = ss.gibbs_map_bounded([[-5.0, 0.0], [0.0, -5.0]], 2.0)
    assert trace(xb).real < 2.0

    h = 0.5 * math.log(0.5) + 0.25 * math.log(0.25) - 0.75
    assert close(ss.quantum_entropy([[0.5, 0.0], [0.0, 0.25]]), h)
    assert close(ss.conjugate_entropy([[0.0, 0.0], [0.0, 0.0]]), 1.0 + math.log(2.0))

    try:
        ss.gibbs_map([[0.0, 1.0], [2.0, 0.0]])
    except ValueError:
        pass
    else:
        raise AssertionError("non-Hermitian input accepted")

    game = ss.MimoGame(m=2, n=2, sigma=0.5, seed=3)
    assert game.users == 7
    state = game.uniform_state()
    rates = [game.throughput(state, i) for i in range(game.users)]
    assert all(r > 0 for r in rates), rates
    assert game.strong_gap(state) > 0

    am = game.solve("am-smd", iterations=300, seed=1, gap_every=50)
    ms = game.solve("m-smd", iterations=300, seed=1, gap_every=50)
    mel = game.solve("mel", iterations=300, seed=1, lam=0.5, gap_every=50)
    for r in (am, ms, mel):
        assert [t for t, _ in r.gap_trace] == [0, 50, 100, 150, 200, 250, 300]
        assert r.final_gap < r.gap_trace[0][1]
        assert len(r.final_point) == 7
    again = game.solve("am-smd", iterations=300, seed=1, gap_every=50)
    assert again.gap_trace == am.gap_trace

    config = """
[grid]
name = "py"
antennas = [[2, 2]]
sigmas = [1.0]
iterations = 30
sample_paths = 2
gap_every = 10

[am-smd]
[m-smd]
"""
    with tempfile.TemporaryDirectory() as d:
        rows, failures = ss.run_experiment(config, d)
        assert (rows, failures) == (2 * 2 * 4, 0)
        csv = (Path(d) / "py.csv").read_text()
        assert csv.startswith("method,m,n,sigma,lambda,path,iter,gap,elapsed_ms\n")
        assert (Path(d) / "py.svg").exists()

    try:
        ss.run_experiment(config.replace("sigmas", "sigmaz"), ".")
    except ValueError as e:
        assert "sigmaz" in str(e)
    else:
        raise AssertionError("bad key accepted")

    print("smoke test passed: am-smd %.4f, m-smd %.4f, mel %.4f" % (am.final_gap, ms.final_gap, mel.final_gap))


if __name__ == "__main__":
    main()

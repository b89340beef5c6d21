"""Smoke tests for the python module: shapes, determinism, one tiny pipeline."""

import math
import os
import random
import tempfile

import numpy as np

import inembed


def test_sample_graph():
    n, edges = inembed.sample_graph([0.999999] * 4, k=3, seed=1)
    assert n == 8
    assert len(edges) == 28  # near-one initiator: the complete graph
    assert all(u < v for u, v in edges)

    again = inembed.sample_graph([0.999999] * 4, k=3, seed=1)
    assert again == (n, edges)


def test_complete_restores_nodes():
    n, edges = inembed.sample_graph([0.95, 0.6, 0.6, 0.8], k=4, seed=2718)
    observed = [(u, v) for u, v in edges if u < 14 and v < 14]
    result = inembed.complete(
        observed,
        n=14,
        n_missing=2,
        em_iterations=2,
        gibbs_sweeps=1,
        permutation_moves=50,
        sgd_steps=3,
        learning_rate=1e-4,
        sample_average_count=1,
        final_sample="last",
        seed=7,
    )
    assert result["n"] == 16
    assert result["observed_count"] == 14
    assert result["theta"].shape == (2, 2)
    assert (result["theta"] > 0).all() and (result["theta"] < 1).all()
    assert len(result["ll_trace"]) >= 1
    assert all(math.isfinite(v) for v in result["ll_trace"])
    # Observed edges are never touched by completion.
    assert set(observed) <= set(result["edges"])
    return result


def test_embed(completed):
    attrs = np.zeros((14, 2))
    attrs[::2, 0] = 1.0
    attrs[1::2, 1] = 1.0
    emb, loss = inembed.embed(
        completed["edges"],
        n=completed["n"],
        observed_count=completed["observed_count"],
        observed_attributes=attrs,
        hidden_t=[8, 4],
        hidden_p=[2],
        epochs=2,
        batch_size=8,
        seed=3,
    )
    assert emb.shape == (16, 6)  # 4 structure dims + 2 attribute dims
    assert len(loss) == 2
    assert np.isfinite(emb).all()

    emb2, _ = inembed.embed(
        completed["edges"],
        n=completed["n"],
        observed_count=completed["observed_count"],
        observed_attributes=attrs,
        hidden_t=[8, 4],
        hidden_p=[2],
        epochs=2,
        batch_size=8,
        seed=3,
    )
    assert (emb == emb2).all()


def test_metrics():
    assert inembed.auc([2.0, 3.0], [0.0, 1.0]) == 1.0
    assert inembed.auc([1.0], [1.0]) == 0.5
    assert inembed.macro_f1([[0], [1]], [[0], [1]], [0, 1]) == 1.0
    assert inembed.macro_f1([[1], [0]], [[0], [1]], [0, 1]) == 0.0


def test_pipeline_roundtrip():
    rng = random.Random(5)
    with tempfile.TemporaryDirectory() as tmp:
        n, edges = inembed.sample_graph([0.95, 0.6, 0.6, 0.8], k=4, seed=2718)
        with open(os.path.join(tmp, "edges.txt"), "w") as f:
            f.write(f"# n={n}\n")
            for u, v in edges:
                f.write(f"{u} {v}\n")
        with open(os.path.join(tmp, "attrs.txt"), "w") as f:
            for i in range(n):
                f.write(f"{i % 2} {(i + 1) % 2} {rng.random():.6f}\n")
        with open(os.path.join(tmp, "labels.txt"), "w") as f:
            for i in range(n):
                f.write(f"{i} {i % 2}\n")

        out = inembed.run_pipeline(
            {
                "edges": os.path.join(tmp, "edges.txt"),
                "attributes": os.path.join(tmp, "attrs.txt"),
                "labels": os.path.join(tmp, "labels.txt"),
                "missing_ratio": "0.2",
                "seed": "99",
                "out": os.path.join(tmp, "run"),
                "em.iterations": "2",
                "em.gibbs_sweeps": "1",
                "em.permutation_moves": "50",
                "em.sgd_steps": "3",
                "em.learning_rate": "1e-4",
                "em.sample_average_count": "1",
                "em.final_sample": "last",
                "embed.hidden_t": "8,4",
                "embed.hidden_p": "2",
                "embed.epochs": "2",
                "embed.batch_size": "8",
                "eval.runs": "1",
            }
        )
        for artifact in ("masked_edges.txt", "recovered_edges.txt",
                         "embeddings.txt", "results.csv"):
            assert os.path.exists(os.path.join(out, artifact)), artifact

        with open(os.path.join(out, "results.csv")) as f:
            header = f.readline()
        assert header.startswith("# config=") and "seed=99" in header


def test_errors_surface():
    try:
        inembed.run_pipeline({"edges": "nope.txt"})
    except RuntimeError as e:
        assert "ingest" in str(e)
    else:
        raise AssertionError("missing dataset should raise")

    try:
        inembed.sample_graph([0.5, 0.5], k=2, seed=0)
    except RuntimeError:
        pass
    else:
        raise AssertionError("short theta should raise")


def main():
    test_sample_graph()
    completed = test_complete_restores_nodes()
    test_embed(completed)
    test_metrics()
    test_pipeline_roundtrip()
    test_errors_surface()
    print("python smoke: all checks passed")


if __name__ == "__main__":
    main()

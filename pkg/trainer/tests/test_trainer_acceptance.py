"""Secondary acceptance gate: one test per criterion, pinned tolerances.

Each test appends a PASS/FAIL line to the "secondary acceptance criteria"
section of the pytest summary (see conftest.py) and then asserts.

The corpus files consumed here (clusters.jsonl / triplets.tsv) and the
embedding table format produced are the only coupling to the corpus engine;
the engine's own evaluation toolkit is used as the scoring harness.
"""

import math
import time

import torch

import _trainer_helpers
from egen.evaluation import EmbeddingTable, clustering_accuracy, kmeans
from egen_trainer import (
    TrainConfig,
    contrastive_loss,
    export_embeddings,
    init_artifact,
    train_contrastive,
)

LN2_ABS_TOL = 1e-9
GRAD_REL_TOL = 1e-4
FD_STEP = 1e-6
ACCURACY_GAIN_MIN = 0.2
MIN_CLUSTERS = 50


def report(criterion: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}"
    _trainer_helpers.SECONDARY_LINES.append(line)
    print(line)
    assert ok, line


def test_s1_loss_value_and_gradients():
    # Symmetric fixture: anchor orthogonal to both positive and negative,
    # so both similarities are 0 and the loss is exactly ln 2 at any
    # temperature. float64 keeps the comparison inside 1e-9.
    anchor = torch.tensor([[1.0, 0.0, 0.0]], dtype=torch.float64)
    positive = torch.tensor([[0.0, 1.0, 0.0]], dtype=torch.float64)
    negative = torch.tensor([[0.0, 0.0, 1.0]], dtype=torch.float64)
    worst_value_err = 0.0
    for temperature in (0.05, 0.07, 1.0):
        loss = contrastive_loss(anchor, positive, negative, temperature)
        worst_value_err = max(worst_value_err, abs(loss.item() - math.log(2.0)))
    value_ok = worst_value_err < LN2_ABS_TOL

    # Analytic gradients against central finite differences on a generic
    # (non-symmetric) fixture, elementwise relative error below 1e-4.  The
    # fixture must keep per-row similarity gaps moderate: a saturated row has
    # gradients ~exp(-gap/temperature), which falls below what central
    # differences can resolve in float64.
    gen = torch.Generator().manual_seed(6)
    tensors = [
        torch.randn(4, 6, generator=gen, dtype=torch.float64, requires_grad=True)
        for _ in range(3)
    ]
    unit = [torch.nn.functional.normalize(t.detach(), dim=-1) for t in tensors]
    gaps = (unit[0] * unit[1]).sum(-1) - (unit[0] * unit[2]).sum(-1)
    assert gaps.abs().max().item() < 0.6, "fixture saturated; FD check unreliable"
    loss = contrastive_loss(*tensors, temperature=0.07)
    loss.backward()
    worst_rel = 0.0
    for tensor in tensors:
        flat = tensor.detach().reshape(-1)
        grad = tensor.grad.reshape(-1)
        for i in range(flat.numel()):
            orig = flat[i].item()
            flat[i] = orig + FD_STEP
            up = contrastive_loss(*tensors, temperature=0.07).item()
            flat[i] = orig - FD_STEP
            down = contrastive_loss(*tensors, temperature=0.07).item()
            flat[i] = orig
            numeric = (up - down) / (2.0 * FD_STEP)
            scale = max(abs(numeric), abs(grad[i].item()), 1e-8)
            worst_rel = max(worst_rel, abs(numeric - grad[i].item()) / scale)
    grad_ok = worst_rel < GRAD_REL_TOL

    report(
        "S1 contrastive loss",
        value_ok and grad_ok,
        f"symmetric fixture |loss-ln2|={worst_value_err:.2e} (tol {LN2_ABS_TOL}); "
        f"analytic-vs-FD worst rel err={worst_rel:.2e} (tol {GRAD_REL_TOL})",
    )


def test_s2_training_lifts_clustering_accuracy(training_corpus, tmp_path):
    clusters = training_corpus.clusters
    n_clusters = len(clusters)
    members = training_corpus.members

    def score(artifact, path):
        export_embeddings(artifact, members, path)
        table = EmbeddingTable.load(path)  # zero tolerance: load() raises on any bad line
        assignments = kmeans(table, n_clusters, seed=0)
        return clustering_accuracy(assignments, clusters)

    cfg = TrainConfig()  # toy defaults: 5 epochs, dim 64, max pooling
    baseline = score(init_artifact(cfg), tmp_path / "untrained.tsv")

    start = time.perf_counter()
    result = train_contrastive(training_corpus.triplets_path, cfg)
    train_s = time.perf_counter() - start
    trained = score(result.artifact, tmp_path / "trained.tsv")

    gain = trained - baseline
    report(
        "S2 contrastive training",
        n_clusters >= MIN_CLUSTERS and gain >= ACCURACY_GAIN_MIN,
        f"{n_clusters} clusters (need >={MIN_CLUSTERS}); kmeans accuracy "
        f"{baseline:.4f} untrained -> {trained:.4f} after {cfg.epochs} epochs "
        f"({train_s:.1f}s), gain +{gain:.4f} (need >=+{ACCURACY_GAIN_MIN}); "
        f"exported table loaded {len(members)} rows with zero errors",
    )

"""Encoder behavior: pooling, padding, determinism, persistence."""

import pytest
import torch

from egen_trainer import EncoderArtifact, TrainConfig, build_vocabulary, init_artifact
from egen_trainer.data import pad_batch
from egen_trainer.model import content_mask, pool_hidden


@pytest.fixture(scope="module")
def artifact():
    return init_artifact(TrainConfig())


def test_config_validation():
    with pytest.raises(ValueError, match="heads"):
        TrainConfig(model_dim=64, heads=3)
    with pytest.raises(ValueError, match="pooling"):
        TrainConfig(pooling="median")
    with pytest.raises(ValueError, match="epochs"):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError, match="temperature"):
        TrainConfig(temperature=-0.1)


def test_export_dimension_matches_model_dim(artifact):
    emb = artifact.embed_expressions(["x", "- + x 8 8"])
    assert emb.shape == (2, artifact.dimension) == (2, 64)
    assert torch.isfinite(emb).all()


def test_padding_does_not_change_embeddings(artifact):
    alone = artifact.embed_expressions(["- + x 8 8"])
    padded_batch = artifact.embed_expressions(
        ["- + x 8 8", "- tanh + * 3 x 4 6 d/dx sinh"]
    )
    assert torch.allclose(alone[0], padded_batch[0], atol=1e-7, rtol=0)


def test_content_mask_excludes_all_special_tokens(artifact):
    vocab = artifact.vocab
    ids = pad_batch([vocab.encode("+ x 1"), vocab.encode("x")], vocab.pad_id)
    mask = content_mask(ids, vocab)
    # row 0: bos + 3 tokens + eos; row 1: bos + 1 token + eos + 2 pads
    assert mask[0].tolist() == [False, True, True, True, False]
    assert mask[1].tolist() == [False, True, False, False, False]


def test_pool_modes_mean_and_max():
    hidden = torch.tensor([[[1.0, -2.0], [3.0, 0.0], [100.0, 100.0]]])
    mask = torch.tensor([[True, True, False]])  # last position is special/pad
    assert pool_hidden(hidden, mask, "mean")[0].tolist() == [2.0, -1.0]
    assert pool_hidden(hidden, mask, "max")[0].tolist() == [3.0, 0.0]
    with pytest.raises(ValueError, match="unknown pooling"):
        pool_hidden(hidden, mask, "softmax")
    with pytest.raises(ValueError, match="content position"):
        pool_hidden(hidden, torch.tensor([[False, False, False]]), "max")


def test_pooling_modes_produce_different_tables():
    max_art = init_artifact(TrainConfig(pooling="max"))
    mean_art = init_artifact(TrainConfig(pooling="mean"))
    exprs = ["- + x 8 8", "sin x"]
    assert not torch.allclose(
        max_art.embed_expressions(exprs), mean_art.embed_expressions(exprs)
    )


def test_same_seed_same_embeddings():
    a = init_artifact(TrainConfig(seed=11)).embed_expressions(["- + x 8 8"])
    b = init_artifact(TrainConfig(seed=11)).embed_expressions(["- + x 8 8"])
    c = init_artifact(TrainConfig(seed=12)).embed_expressions(["- + x 8 8"])
    assert torch.equal(a, b)
    assert not torch.equal(a, c)


def test_artifact_save_load_round_trip(tmp_path, artifact):
    path = tmp_path / "model.pt"
    artifact.save(path)
    again = EncoderArtifact.load(path)
    exprs = ["- tanh + * 3 x 4 6"]
    assert torch.equal(artifact.embed_expressions(exprs), again.embed_expressions(exprs))
    assert again.config == artifact.config
    assert again.vocab.tokens == artifact.vocab.tokens


def test_embed_rejects_unknown_tokens(artifact):
    from egen_trainer import VocabularyMismatch

    with pytest.raises(VocabularyMismatch):
        artifact.embed_expressions(["+ x unknown_token"])


def test_seq2seq_forward_shapes():
    art = init_artifact(TrainConfig())
    vocab = art.vocab
    src = pad_batch([vocab.encode("+ x 1"), vocab.encode("x")], vocab.pad_id)
    tgt = pad_batch([vocab.encode("x"), vocab.encode("+ 1 x")], vocab.pad_id)
    logits = art.model(src, tgt[:, :-1])
    assert logits.shape == (2, tgt.size(1) - 1, len(vocab))

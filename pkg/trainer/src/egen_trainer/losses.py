"""Training objectives.

The contrastive objective scores each anchor against exactly one positive
and one negative: the loss is the negative log-probability of the positive
under a two-way softmax over temperature-scaled similarities, where
similarity is the dot product of L2-normalized pooled representations.
"""

import torch
import torch.nn.functional as F


def contrastive_loss_from_similarities(
    sim_pos: torch.Tensor, sim_neg: torch.Tensor, temperature: float
) -> torch.Tensor:
    """-log[ exp(s+/t) / (exp(s+/t) + exp(s-/t)) ], averaged over the batch.

    Computed via logsumexp, so it is exactly invariant under adding a
    constant to both similarities.
    """
    scaled = torch.stack((sim_pos / temperature, sim_neg / temperature), dim=-1)
    return (torch.logsumexp(scaled, dim=-1) - scaled[..., 0]).mean()


def contrastive_loss(
    anchor: torch.Tensor,
    positive: torch.Tensor,
    negative: torch.Tensor,
    temperature: float,
) -> torch.Tensor:
    """Triplet contrastive loss over raw (unnormalized) pooled vectors."""
    a = F.normalize(anchor, dim=-1)
    p = F.normalize(positive, dim=-1)
    n = F.normalize(negative, dim=-1)
    return contrastive_loss_from_similarities(
        (a * p).sum(dim=-1), (a * n).sum(dim=-1), temperature
    )


def seq2seq_criterion(pad_id: int) -> torch.nn.CrossEntropyLoss:
    """Token cross-entropy with label smoothing, ignoring padding."""
    return torch.nn.CrossEntropyLoss(ignore_index=pad_id, label_smoothing=0.1)

"""Training hyperparameters."""

from dataclasses import dataclass, fields

POOLING_MODES = ("mean", "max")


@dataclass(frozen=True)
class TrainConfig:
    """Toy-scale defaults; every field is overridable via flags or YAML."""

    model_dim: int = 64
    heads: int = 2
    ff_dim: int = 128
    encoder_layers: int = 2
    decoder_layers: int = 2
    dropout: float = 0.1
    learning_rate: float = 1e-3
    weight_decay: float = 0.01
    batch_size: int = 32
    epochs: int = 5
    temperature: float = 0.07
    pooling: str = "max"
    max_seq_len: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        positive = (
            "model_dim", "heads", "ff_dim", "encoder_layers", "decoder_layers",
            "learning_rate", "weight_decay", "batch_size", "epochs",
            "temperature", "max_seq_len",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout!r}")
        if self.model_dim % self.heads:
            raise ValueError(
                f"model_dim {self.model_dim} must be divisible by heads {self.heads}"
            )
        if self.pooling not in POOLING_MODES:
            raise ValueError(f"pooling must be one of {POOLING_MODES}, got {self.pooling!r}")

    @classmethod
    def field_types(cls) -> dict[str, type]:
        return {f.name: f.type for f in fields(cls)}

"""Model and training configuration, with "paper" and "mini" profiles."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class ModelConfig:
    word_dim: int = 300
    char_dim: int = 8
    char_windows: tuple = (3, 4, 5)
    char_filters: int = 50
    lstm_layers: int = 3
    hidden_dim: int = 200          # per direction
    mlp_hidden: int = 150
    width_dim: int = 20
    max_span_width: int = 30
    lambda_a: float = 0.8
    lambda_p: float = 0.4
    dropout_word: float = 0.5      # word embeddings and char CNN outputs
    dropout_hidden: float = 0.2    # hidden layers and feature embeddings
    dropout_recurrent: float = 0.4  # variational, shared across timesteps
    char_vocab: int = 128

    @property
    def char_repr_dim(self):
        return self.char_filters * len(self.char_windows)

    @property
    def token_dim(self):
        return self.word_dim + self.char_repr_dim

    @property
    def context_dim(self):
        return 2 * self.hidden_dim

    @property
    def span_repr_dim(self):
        return 2 * self.context_dim + self.token_dim + self.width_dim

    @property
    def pair_repr_dim(self):
        return self.span_repr_dim + self.context_dim

    def validate(self):
        if self.lstm_layers < 1 or self.hidden_dim < 1:
            raise ValueError("encoder sizes must be positive")
        for r in (self.dropout_word, self.dropout_hidden, self.dropout_recurrent):
            if not (0.0 <= r < 1.0):
                raise ValueError("dropout rates must be in [0, 1)")
        if self.max_span_width < 1:
            raise ValueError("max_span_width must be >= 1")

    def to_dict(self):
        d = asdict(self)
        d["char_windows"] = list(self.char_windows)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["char_windows"] = tuple(d["char_windows"])
        return cls(**d)


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    lr_decay: float = 0.999        # multiplied in every 100 steps
    decay_interval: int = 100
    max_steps: int = 5000          # desk default; 320000 for the full profile
    eval_every: int = 100
    patience: int = 5
    batch_sentences: int = 40
    batch_words: int = 700
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 1

    def validate(self):
        if self.learning_rate <= 0 or self.max_steps <= 0 or self.eval_every <= 0:
            raise ValueError("training scalars must be positive")
        if not (0.0 < self.lr_decay <= 1.0):
            raise ValueError("lr_decay must be in (0, 1]")

    def lr_at(self, step: int) -> float:
        return self.learning_rate * self.lr_decay ** (step // self.decay_interval)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def paper_profile() -> ModelConfig:
    return ModelConfig()


def mini_profile() -> ModelConfig:
    """Small configuration for tests and desk-scale experiments."""
    return ModelConfig(
        word_dim=16,
        char_dim=4,
        char_windows=(2, 3),
        char_filters=8,
        lstm_layers=1,
        hidden_dim=32,
        mlp_hidden=32,
        width_dim=8,
        max_span_width=10,
        dropout_word=0.1,
        dropout_hidden=0.1,
        dropout_recurrent=0.1,
    )


PROFILES = {"paper": paper_profile, "mini": mini_profile}

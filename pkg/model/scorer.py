import json
import math
from enum import Enum

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.nn.utils import parameters_to_vector, vector_to_parameters

import core.config as cfg
from core.rng import torch_generator


class ScorerKind(str, Enum):
    LINEAR = "linear"
    MLP1 = "mlp1"


class Activation(str, Enum):
    RELU = "relu"
    TANH = "tanh"


class Scorer(nn.Module):
    def __init__(self, input_dim, kind=ScorerKind.LINEAR, hidden_width=cfg.hidden_width,
                 activation=cfg.activation, seed=0):
        """
        Initialize the scoring function g: R^d -> R.

        Args:
            input_dim (int): Feature dimension d.
            kind (ScorerKind): LINEAR or MLP1 (one hidden layer).
            hidden_width (int): Hidden layer size (MLP1 only).
            activation (Activation): Hidden activation (MLP1 only).
            seed (int): Seed for the MLP1 initialization.

        Network structure:
        - LINEAR: Linear(d, 1)
        - MLP1:
            - Linear(d, hidden_width)
            - ReLU or Tanh activation
            - Linear(hidden_width, 1)
        The output is the raw score; clipping happens in the losses.
        """
        super(Scorer, self).__init__()
        self.kind = ScorerKind(kind)
        self.input_dim = int(input_dim)
        self.hidden_width = int(hidden_width) if self.kind is ScorerKind.MLP1 else 0
        self.activation = Activation(activation)
        self.seed = int(seed)

        if self.kind is ScorerKind.LINEAR:
            self.out = nn.Linear(self.input_dim, 1)
        else:
            self.fc1 = nn.Linear(self.input_dim, self.hidden_width)
            self.out = nn.Linear(self.hidden_width, 1)
        self.double()

        # Initialize weights
        self._init_weights()

    def _init_weights(self):
        """
        Linear scorers start at zero (the constant scorer g = 0); MLP1 layers are drawn
        uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
        """
        with torch.no_grad():
            if self.kind is ScorerKind.LINEAR:
                nn.init.zeros_(self.out.weight)
                nn.init.zeros_(self.out.bias)
                return
            gen = torch_generator(self.seed)
            for layer in [self.fc1, self.out]:
                bound = 1.0 / math.sqrt(layer.in_features)
                for tensor in (layer.weight, layer.bias):
                    draw = torch.rand(tensor.shape, generator=gen, dtype=torch.float64)
                    tensor.copy_((2.0 * draw - 1.0) * bound)

    @classmethod
    def linear(cls, weights, bias=0.0):
        """Linear scorer with the given weights."""
        weights = np.asarray(weights, dtype=np.float64)
        scorer = cls(len(weights))
        with torch.no_grad():
            scorer.out.weight.copy_(torch.as_tensor(weights).reshape(1, -1))
            scorer.out.bias.fill_(float(bias))
        return scorer

    def forward(self, x):
        """
        Forward pass.

        Args:
            x (torch.Tensor): (batch, d) features.

        Returns:
            scores (torch.Tensor): (batch,) raw scores.
        """
        if x.dim() != 2 or x.shape[1] != self.input_dim:
            raise ValueError(f"expected features of shape (batch, {self.input_dim}), got {tuple(x.shape)}")
        if self.kind is ScorerKind.MLP1:
            x = self.fc1(x)
            x = F.relu(x) if self.activation is Activation.RELU else torch.tanh(x)
        return self.out(x).squeeze(-1)

    def score(self, features):
        """Scores of a numpy feature matrix as a numpy vector."""
        with torch.no_grad():
            return self.forward(as_tensor(features)).numpy().copy()

    @property
    def n_parameters(self):
        return sum(p.numel() for p in self.parameters())

    def flat_parameters(self):
        return parameters_to_vector(self.parameters()).detach().numpy().copy()

    def set_flat_parameters(self, vector):
        with torch.no_grad():
            vector_to_parameters(torch.as_tensor(np.asarray(vector, dtype=np.float64)), self.parameters())
        return self

    def clone(self):
        twin = Scorer(self.input_dim, self.kind, self.hidden_width or cfg.hidden_width, self.activation, self.seed)
        return twin.set_flat_parameters(self.flat_parameters())

    def to_json(self):
        """Architecture plus the flat parameter vector at full precision."""
        return json.dumps({
            "kind": self.kind.value,
            "input_dim": self.input_dim,
            "hidden_width": self.hidden_width,
            "activation": self.activation.value,
            "parameters": self.flat_parameters().tolist(),
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        spec = json.loads(text)
        scorer = cls(spec["input_dim"], spec["kind"], spec["hidden_width"] or cfg.hidden_width, spec["activation"])
        if len(spec["parameters"]) != scorer.n_parameters:
            raise ValueError(f"expected {scorer.n_parameters} parameters, got {len(spec['parameters'])}")
        return scorer.set_flat_parameters(spec["parameters"])


def as_tensor(features):
    return torch.as_tensor(np.asarray(features, dtype=np.float64))


def predict_labels(scorer, features, threshold=0.0):
    """
    +1 where g(x) > threshold, -1 otherwise (a score exactly at the threshold is -1).

    Args:
        scorer (Scorer): Trained scorer.
        features (np.ndarray | pool): Feature matrix, or any pool with a .features matrix.
        threshold (float): Decision threshold.
    """
    features = getattr(features, "features", features)
    return np.where(scorer.score(features) > threshold, 1, -1)

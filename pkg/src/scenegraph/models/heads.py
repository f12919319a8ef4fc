from typing import Optional

from torch import Tensor, nn


class Predictor(nn.Module):
    """Two-layer MLP with PReLU (dim -> hidden -> out)."""

    def __init__(self, dim: int = 128, hidden_dim: int = 512, out_dim: Optional[int] = None):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(dim, hidden_dim),
            nn.PReLU(),
            nn.Linear(hidden_dim, out_dim or dim),
        )
        self.reset_parameters()

    def reset_parameters(self):
        for module in self.net:
            if isinstance(module, nn.Linear):
                nn.init.xavier_uniform_(module.weight)
                nn.init.zeros_(module.bias)
            elif isinstance(module, nn.PReLU):
                nn.init.constant_(module.weight, 0.25)

    def forward(self, z: Tensor) -> Tensor:
        return self.net(z)


class Projector(nn.Module):
    def __init__(self, dim: int = 128):
        super().__init__()
        self.lin = nn.Linear(dim, dim)
        nn.init.xavier_uniform_(self.lin.weight)
        nn.init.zeros_(self.lin.bias)

    def forward(self, z: Tensor) -> Tensor:
        return self.lin(z)


class Classifier(Predictor):
    """Multi-label head on frozen embeddings; outputs one logit per vocabulary label."""

    def __init__(self, dim: int, hidden_dim: int, num_labels: int):
        super().__init__(dim, hidden_dim, num_labels)

"""Adam with bias correction, one instance per parameter group."""

import numpy as np


class Adam:
    def __init__(self, params, lr=2e-4, beta1=0.5, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {p.name: np.zeros_like(p.data) for p in self.params}
        self.v = {p.name: np.zeros_like(p.data) for p in self.params}

    def step(self, grads):
        """Apply one update from a {param_name: gradient} mapping."""
        self.t += 1
        b1 = self.params[0].dtype.type(self.beta1)
        b2 = self.params[0].dtype.type(self.beta2)
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p in self.params:
            g = grads.get(p.name)
            if g is None:
                continue
            m = self.m[p.name]
            v = self.v[p.name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * (g * g)
            m_hat = m / p.dtype.type(bc1)
            v_hat = v / p.dtype.type(bc2)
            p.data -= p.dtype.type(self.lr) * m_hat / (np.sqrt(v_hat) + p.dtype.type(self.eps))

    def state_tensors(self, prefix):
        """Moment arrays keyed for the checkpoint archive."""
        out = {}
        for p in self.params:
            out[f"{prefix}.{p.name}.m"] = self.m[p.name]
            out[f"{prefix}.{p.name}.v"] = self.v[p.name]
        return out

    def load_state_tensors(self, prefix, tensors):
        from .errors import CheckpointError

        for p in self.params:
            for slot, store in (("m", self.m), ("v", self.v)):
                key = f"{prefix}.{p.name}.{slot}"
                if key not in tensors:
                    raise CheckpointError(f"optimizer state missing tensor {key}")
                arr = tensors[key]
                if arr.shape != p.data.shape:
                    raise CheckpointError(
                        f"optimizer tensor {key} has shape {arr.shape}, expected {p.data.shape}"
                    )
                store[p.name] = arr.astype(p.data.dtype, copy=True)

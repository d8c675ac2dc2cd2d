"""
Comparing representation spaces with CKA
========================================

Simulate two "models" observing the same scenes, build an RSM per
layer, and reduce them to one CKA grid.  The diagonal-heavy structure
appears because matching layers share the latent signal.
"""

import numpy as np

from semrsm import (KernelSpec, RepresentationBatch, cka, cka_layer_matrix,
                    spatio_semantic_rsm)

rng = np.random.default_rng(7)
n, latent_dim = 40, 6

# shared per-sample latents; each model layer is a different random
# readout of them, with depth-dependent noise
latents = rng.standard_normal((n, latent_dim))


def fake_layer(noise):
    readout = rng.standard_normal((latent_dim, 32))
    vecs = latents @ readout + noise * rng.standard_normal((n, 32))
    # vector representations: 32 channels at a single spatial position
    return RepresentationBatch(vecs[:, :, None])


layers_a = [fake_layer(noise) for noise in (0.1, 0.5, 2.0)]
layers_b = [fake_layer(noise) for noise in (0.1, 0.5, 2.0)]

kernel = KernelSpec("linear")
rsms_a = [spatio_semantic_rsm(z, kernel) for z in layers_a]
rsms_b = [spatio_semantic_rsm(z, kernel) for z in layers_b]

grid = cka_layer_matrix(rsms_a, rsms_b)
np.set_printoptions(precision=3, suppress=True)
print("CKA grid (model A layers x model B layers):")
print(grid)

# a single pair can be inspected directly too
print(f"\nfirst-layer pair alone: cka = {cka(rsms_a[0], rsms_b[0]):.3f}")
print("noisier layers drift apart; the cleanest pair agrees most.")
assert grid[0, 0] > grid[2, 2]

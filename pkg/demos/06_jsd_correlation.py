"""
Does representational similarity track output disagreement?
===========================================================

Pairs of samples that a classifier treats alike should sit close in
representation space.  Here both the features and the class
probabilities derive from shared latents, so pairwise similarity should
anti-correlate with pairwise Jensen-Shannon divergence.
"""

import numpy as np

from semrsm import (KernelSpec, MatcherSpec, RepresentationBatch,
                    correlate_similarity_jsd, pairwise_jsd, semantic_rsm, softmax)

rng = np.random.default_rng(23)
n, n_classes = 30, 5

latents = rng.standard_normal((n, 4))

# features: latents broadcast across 12 spatial positions, then shuffled
# per sample so position-locked comparison would be misleading
proj = rng.standard_normal((4, 6 * 12))
feats = (latents @ proj).reshape(n, 6, 12)
feats = np.stack([f[:, rng.permutation(12)] for f in feats])

# class probabilities from the same latents through a fixed linear head
head = rng.standard_normal((4, n_classes))
probs = softmax(2.0 * latents @ head)

z = RepresentationBatch(feats)
sim = semantic_rsm(z, KernelSpec("cosine"), MatcherSpec("optimal"))

rho_p = correlate_similarity_jsd(sim, probs, method="pearson")
rho_s = correlate_similarity_jsd(sim, probs, method="spearman")
jsds = pairwise_jsd(probs)

print(f"pairs compared:   {len(jsds)}")
print(f"mean JSD (nats):  {jsds.mean():.3f}")
print(f"pearson rho:      {rho_p:.3f}")
print(f"spearman rho:     {rho_s:.3f}")
assert rho_p < -0.3, "similar pairs should disagree less"
print("\nNegative rho: the more similar two samples look to the model, "
      "the less their predicted distributions diverge.")

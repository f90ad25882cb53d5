"""Fit a codebook, encode images as Fisher Vectors and classify them.

Run with ``python3 demos/encoding.py``.  Spatial descriptors from synthetic
images are reduced by PCA, a diagonal GMM is fitted by EM on the training
half, each image becomes one normalized vector, and a linear one-vs-rest
classifier is scored on the held-out half.
"""

import numpy as np

from lccd.classify import evaluate, train
from lccd.config import PipelineConfig
from lccd.descriptor import extract_image
from lccd.encoding import fisher_vector, fit_gmm
from lccd.reduction import fit_pca, project
from lccd.synthetic import texture_image

config = PipelineConfig(resize_width=120, resize_height=100, grid_rows=20, grid_cols=20)
rng = np.random.default_rng(0)
labels = [f"class{c}" for c in range(5) for _ in range(8)]
is_train = np.tile(np.arange(8) < 4, 5)
spatial = [extract_image(texture_image(int(l[-1]), rng), config)[0].values for l in labels]

train_x = np.concatenate([s for s, t in zip(spatial, is_train) if t])
pca = fit_pca(train_x, 40)
share = pca.explained_variance.sum() / train_x.var(axis=0).sum()
print(f"PCA 432 -> 40 keeps {100 * share:.1f}% of the training variance")

gmm = fit_gmm(project(pca, train_x), 8, seed=0)
print(f"EM: {len(gmm.log_likelihood)} iterations, mean log-likelihood "
      f"{gmm.log_likelihood[0]:.1f} -> {gmm.log_likelihood[-1]:.1f}")

fvs = np.stack([fisher_vector(gmm, project(pca, s)) for s in spatial])
print("Fisher Vector length", fvs.shape[1], "norm", round(float(np.linalg.norm(fvs[0])), 6))

y = np.array(labels)
model = train(fvs[is_train], list(y[is_train]))
report = evaluate(model, fvs[~is_train], list(y[~is_train]))
print(f"held-out accuracy {100 * report.accuracy:.1f}%, mAP {100 * report.mean_average_precision:.1f}%")

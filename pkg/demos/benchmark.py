"""Desk-scale benchmark through the command-line stages.

Run with ``python3 demos/benchmark.py [workdir]``.  Generates a 5-class
synthetic color-texture dataset, runs extract, fit, encode, train-eval and
report through the ``lccd`` CLI entry point, then repeats the run with a
luminance-gradient stream fused in.  Takes about a minute.
"""

import sys
import tempfile
from pathlib import Path

from lccd.cli import main
from lccd.config import PipelineConfig
from lccd.synthetic import make_dataset, write_gradient_stream

work = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="lccd-"))
manifest = make_dataset(work / "data", n_classes=5, per_class=40, n_train=30, seed=0)
config = PipelineConfig(resize_width=120, resize_height=100, grid_rows=20, grid_cols=20,
                        pca_dim=40, gmm_components=8)
config.save(work / "desk.cfg")
gradient = write_gradient_stream(config, manifest, work / "gradient.lccd")

for name, external in (("lccd", []), ("fused", ["--external", str(gradient)])):
    out = work / name
    common = ["--config", str(work / "desk.cfg"), "--out-dir", str(out)]
    print(f"--- {name} ---")
    for stage in ("extract", "fit", "encode"):
        extra = external if stage in ("fit", "encode") else []
        code = main([stage, *common, "--manifest", str(manifest), *extra])
        if code:
            sys.exit(code)
    main(["train-eval", *common, "--manifest", str(manifest)])
    main(["report", *common])

print("artifacts under", work)
